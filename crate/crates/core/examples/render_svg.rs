//! Renders a scene with its annotated field, reference path and a
//! stabilized rollout as SVG.
//!
//! `cargo run --example render_svg -- [seed] [out.svg]`
use flownav::render::{render_svg, Overlay, RenderOptions};
use flownav::rollout::rollout_from_provider;
use flownav::scene::{gen_instruction, gen_scene, SceneSpec};
use flownav::{annotate, AnnotationConfig, RolloutConfig};

fn main() -> flownav::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let out = args.next().unwrap_or_else(|| format!("scene_{seed}.svg"));
    let (map, mapping) = gen_scene(&SceneSpec::with_seed(seed))?;
    let ins = gen_instruction(&map, &mapping, seed)?;
    let ann = annotate(&map, &mapping, &ins.spec, &AnnotationConfig::default(), seed)?;
    let x0 = ann.trajectory.first().expect("non-empty reference");
    let predicted = rollout_from_provider(&ann.field, x0, &RolloutConfig::default())?;
    let overlay = Overlay {
        field: Some(&ann.field),
        annotated: Some(&ann.trajectory),
        predicted: Some(&predicted),
        goal_pixels: &ann.goal_pixels,
    };
    let svg = render_svg(&map, &mapping, &overlay, &RenderOptions::default())?;
    std::fs::write(&out, svg)?;
    println!("{} -> {out}", ins.text);
    Ok(())
}
