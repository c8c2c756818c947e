//! Box-driven A* baseline on a generated scene.
use flownav::planner::{plan_episode, scene_occupancy, PlanOutcome, PlannerConfig};
use flownav::scene::{gen_instruction, gen_scene, SceneSpec};
use flownav::{annotate, AnnotationConfig};

fn main() -> flownav::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let (map, mapping) = gen_scene(&SceneSpec::with_seed(seed))?;
    let ins = gen_instruction(&map, &mapping, seed)?;
    let ann = annotate(&map, &mapping, &ins.spec, &AnnotationConfig::default(), seed)?;
    let start = ann.trajectory.first().expect("non-empty reference");
    println!("{}", ins.text);
    for radius in [0.0, 5.0, 10.0, 20.0] {
        let cfg = PlannerConfig { inflate_radius: radius, ..Default::default() };
        let blocked = scene_occupancy(&map, &mapping, &cfg)?.as_slice().iter().filter(|&&b| b).count();
        match plan_episode(&map, &mapping, &ins.spec, start, &cfg)? {
            PlanOutcome::Path { trajectory, cost, .. } => println!(
                "inflate {radius:>4}px: {blocked:>5} blocked cells, path cost {cost:.1} cells, length {:.3}",
                trajectory.length()
            ),
            PlanOutcome::Failure { reason } => println!("inflate {radius:>4}px: failure ({reason})"),
        }
    }
    Ok(())
}
