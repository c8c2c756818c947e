//! Writes a small annotated dataset to a directory: scene PNGs with JSON
//! sidecars, a manifest and one annotation bundle per episode.
//!
//! `cargo run --example generate_dataset -- <out_dir> [count]`
use std::path::PathBuf;

use flownav::io::{manifest_text, save_scene, write_atomic, AnnotationBundle, AnnotationMeta, ManifestEntry};
use flownav::scene::{gen_instruction, gen_scene, SceneSpec};
use flownav::{annotate, AnnotationConfig};

fn main() -> flownav::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "dataset".into()));
    let count: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let cfg = AnnotationConfig::default();
    let mut entries = Vec::new();
    for seed in 0..count {
        let (map, mapping) = gen_scene(&SceneSpec::with_seed(seed))?;
        let scene = PathBuf::from(format!("scene_{seed:05}.png"));
        save_scene(&out.join(&scene), &map, &mapping)?;
        let ins = gen_instruction(&map, &mapping, seed)?;
        let ann = annotate(&map, &mapping, &ins.spec, &cfg, seed)?;
        let dir = PathBuf::from(format!("annotations/ep_{seed:05}"));
        AnnotationBundle {
            field: ann.field,
            trajectory: ann.trajectory,
            meta: AnnotationMeta {
                scene: PathBuf::from("../..").join(&scene),
                width: map.width(),
                height: map.height(),
                seed,
                instruction: Some(ins.text.clone()),
                goal: ins.spec.clone(),
                goal_pixels: ann.goal_pixels,
                start: ann.start,
                config: cfg.clone(),
            },
        }
        .write(&out.join(&dir))?;
        println!("{}: {}", scene.display(), ins.text);
        entries.push(ManifestEntry { scene, instruction: ins.text, goal: ins.spec, seed, annotation: dir });
    }
    write_atomic(&out.join("manifest.jsonl"), manifest_text(&entries)?.as_bytes())?;
    println!("wrote {} episodes to {}", entries.len(), out.display());
    Ok(())
}
