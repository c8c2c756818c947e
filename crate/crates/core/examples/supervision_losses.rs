//! Stratified supervision samples and the direction/magnitude losses of a
//! perturbed field against the annotation.
use flownav::scene::{gen_instruction, gen_scene, SceneSpec};
use flownav::supervision::{evaluate_losses, stratified_sample, DEFAULT_LAMBDA};
use flownav::{annotate, AnnotationConfig};

fn main() -> flownav::Result<()> {
    let batch = stratified_sample(10, 1000, 0)?;
    println!("{} samples, {} per cell", batch.points.len(), batch.per_bin);

    let (map, mapping) = gen_scene(&SceneSpec::with_seed(7))?;
    let ins = gen_instruction(&map, &mapping, 7)?;
    let target = annotate(&map, &mapping, &ins.spec, &AnnotationConfig::default(), 7)?.field;
    for angle in [0.0f64, 15.0, 45.0, 90.0, 180.0] {
        let (s, c) = angle.to_radians().sin_cos();
        let pred = target.map(|v| [1.5 * (c * v[0] - s * v[1]), 1.5 * (s * v[0] + c * v[1])]);
        let r = evaluate_losses(&pred, &target, 10, 1000, DEFAULT_LAMBDA, 0)?;
        println!(
            "rotate {angle:>5} deg, scale 1.5: direction {:.4}  magnitude {:.6}  total {:.4}",
            r.direction, r.magnitude, r.total
        );
    }
    Ok(())
}
