//! Rolls the annotated field out under each velocity rescaling.
use flownav::grid::extract_free;
use flownav::metrics::evaluate_episode;
use flownav::scene::{gen_instruction, gen_scene, SceneSpec};
use flownav::{annotate, euler_rollout, query_grid, AnnotationConfig, RolloutConfig, RolloutMode};

fn main() -> flownav::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let (map, mapping) = gen_scene(&SceneSpec::with_seed(seed))?;
    let ins = gen_instruction(&map, &mapping, seed)?;
    let ann = annotate(&map, &mapping, &ins.spec, &AnnotationConfig::default(), seed)?;
    let obstacles = extract_free(&map, &mapping)?.negated();
    let x0 = ann.trajectory.first().expect("non-empty reference");

    println!("{}", ins.text);
    println!("{:<12} {:>4} {:>8} {:>6} {:>8} {:>7}", "mode", "g", "FGE", "CR", "Curv", "PLR");
    for mode in RolloutMode::ALL {
        for g in [50, 100, 200] {
            let cfg = RolloutConfig { mode, grid_size: g, ..Default::default() };
            let traj = euler_rollout(&query_grid(&ann.field, g)?, x0, &cfg)?;
            let m = evaluate_episode(&traj, &ann.trajectory, &obstacles)?;
            println!("{:<12} {g:>4} {:>8.4} {:>6} {:>8.4} {:>7.3}", mode.as_str(), m.fge, m.cr, m.curv, m.plr);
        }
    }
    Ok(())
}
