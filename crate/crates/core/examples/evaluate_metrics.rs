//! Trajectory and field metrics on hand-made inputs.
use flownav::grid::{BinaryMask, Raster};
use flownav::metrics::{evaluate_episode, field_metrics};
use flownav::Trajectory;

fn main() -> flownav::Result<()> {
    let reference = Trajectory::from_arrays(&[[0.1, 0.1], [0.9, 0.1], [0.9, 0.9]]);
    let mut obstacles = BinaryMask::filled(20, 20, false);
    for y in 8..12 {
        obstacles.set(10, y, true);
    }
    let candidates = [
        ("reference", reference.clone()),
        ("diagonal", Trajectory::from_arrays(&[[0.1, 0.1], [0.9, 0.9]])),
        ("short", Trajectory::from_arrays(&[[0.1, 0.1], [0.9, 0.1], [0.9, 0.6]])),
        ("zigzag", Trajectory::from_arrays(&[[0.1, 0.1], [0.5, 0.3], [0.3, 0.5], [0.9, 0.9]])),
    ];
    println!("{:<10} {:>7} {:>4} {:>7} {:>6}", "path", "FGE", "CR", "Curv", "PLR");
    for (name, t) in &candidates {
        let m = evaluate_episode(t, &reference, &obstacles)?;
        println!("{name:<10} {:>7.4} {:>4} {:>7.4} {:>6.3}", m.fge, m.cr, m.curv, m.plr);
    }

    let annotated = Raster::from_fn(16, 16, |_, _| [1.0, 0.0]);
    let rotated = Raster::from_fn(16, 16, |_, _| [0.0, 2.0]);
    let fm = field_metrics(&rotated, &annotated)?;
    println!("field rotated 90 deg and doubled: AE {:.2} deg, ME {:.2}", fm.ae, fm.me);
    Ok(())
}
