//! Generates a scene, draws an instruction and annotates its flow field.
//!
//! `cargo run --example annotate_scene -- [seed]`
use flownav::scene::{gen_instruction, gen_scene, SceneSpec};
use flownav::{annotate_with_stages, AnnotationConfig, StartChoice};

fn main() -> flownav::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let (map, mapping) = gen_scene(&SceneSpec::with_seed(seed))?;
    let ins = gen_instruction(&map, &mapping, seed)?;
    println!("scene {seed}: {} objects", map.instances.len());
    println!("instruction: {}", ins.text);

    let cfg = AnnotationConfig::default();
    let (ann, stages) = annotate_with_stages(&map, &mapping, &ins.spec, &cfg, StartChoice::Sampled { seed })?;
    let start = ann.start;
    println!("goal band: {} pixels", ann.goal_pixels.len());
    println!(
        "start {start:?}: geodesic cost {:.1}, pixel length {:.1}",
        stages.geodesic.d_weighted.at(start),
        stages.geodesic.d_pixel.at(start)
    );
    let v = ann.field.at(start);
    println!("field at start: ({:.4}, {:.4})", v[0], v[1]);
    println!("reference path: {} points, length {:.3}", ann.trajectory.len(), ann.trajectory.length());
    Ok(())
}
