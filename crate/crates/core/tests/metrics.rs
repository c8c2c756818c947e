mod common;

use std::f64::consts::PI;

use common::{random_mask, rng};
use flownav::grid::{BinaryMask, FlowFieldGrid, Raster, Vec2, EPSILON};
use flownav::metrics::{
    collision, curvature, evaluate_episode, field_metrics, fge, mean_heading_change, plr, METRIC_WAYPOINTS,
};
use flownav::Trajectory;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn traj(points: &[Vec2]) -> Trajectory {
    Trajectory::from_arrays(points)
}

fn length(points: &[Vec2]) -> f64 {
    points.windows(2).map(|s| (s[1][0] - s[0][0]).hypot(s[1][1] - s[0][1])).sum()
}

fn random_polyline(r: &mut ChaCha8Rng, n: usize) -> Vec<Vec2> {
    (0..n).map(|_| [r.gen_range(0.05..0.95), r.gen_range(0.05..0.95)]).collect()
}

/// Same curve with `extra` points inserted inside every segment at random
/// positions, so only the timing along the path changes.
fn reparameterize(r: &mut ChaCha8Rng, points: &[Vec2], extra: usize) -> Vec<Vec2> {
    let mut out = vec![points[0]];
    for s in points.windows(2) {
        let mut ts: Vec<f64> = (0..extra).map(|_| r.gen_range(0.0..1.0)).collect();
        ts.sort_by(f64::total_cmp);
        for t in ts {
            out.push([s[0][0] + (s[1][0] - s[0][0]) * t, s[0][1] + (s[1][1] - s[0][1]) * t]);
        }
        out.push(s[1]);
    }
    out
}

fn oversample(points: &[Vec2], factor: usize) -> Vec<Vec2> {
    let mut out = vec![points[0]];
    for s in points.windows(2) {
        for k in 1..=factor {
            let t = k as f64 / factor as f64;
            out.push([s[0][0] + (s[1][0] - s[0][0]) * t, s[0][1] + (s[1][1] - s[0][1]) * t]);
        }
    }
    out
}

#[test]
fn fge_goldens() {
    let a = traj(&[[0.2, 0.2], [0.5, 0.7], [0.3, 0.4]]);
    assert_eq!(fge(&a, &a).unwrap(), 0.0);
    let p = traj(&[[0.5, 0.5], [0.0, 0.0]]);
    let q = traj(&[[0.1, 0.9], [0.3, 0.4]]);
    assert!((fge(&p, &q).unwrap() - 0.5).abs() < 1e-12);
    assert!(fge(&Trajectory::default(), &q).is_err());

    let mut r = rng(1);
    for _ in 0..100 {
        let (x, y) = (random_polyline(&mut r, 7), random_polyline(&mut r, 4));
        let (ex, ey) = (x[6], y[3]);
        let want = (ex[0] - ey[0]).hypot(ex[1] - ey[1]);
        assert!((fge(&traj(&x), &traj(&y)).unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn collision_goldens() {
    let free = BinaryMask::filled(10, 10, false);
    let t = traj(&[[0.0, 0.0], [1.0, 1.0]]);
    assert!(!collision(&t, &free).unwrap());
    let mut obs = free.clone();
    for y in 4..6 {
        for x in 6..8 {
            obs.set(x, y, true);
        }
    }
    assert!(collision(&traj(&[[0.1, 0.1], [0.65, 0.45], [0.1, 0.9]]), &obs).unwrap());
    // u = 1.0 maps to the last column
    let mut corner = free.clone();
    corner.set(9, 0, true);
    assert!(collision(&traj(&[[1.0, 0.0], [1.0, 0.0]]), &corner).unwrap());
    assert!(!collision(&traj(&[[0.89, 0.0], [0.89, 0.05]]), &corner).unwrap());
    assert!(collision(&t, &BinaryMask::filled(0, 0, true)).is_err());
}

#[test]
fn collision_matches_per_point_scan() {
    let mut r = rng(2);
    for _ in 0..200 {
        let w = r.gen_range(3..40);
        let h = r.gen_range(3..40);
        let obs = random_mask(&mut r, w, h, 0.05);
        let n = r.gen_range(2..6);
        let pts = random_polyline(&mut r, n);
        let t = traj(&pts);
        let resampled = t.resample(METRIC_WAYPOINTS);
        let hit = resampled.points().iter().any(|p| {
            let x = ((p.u() * w as f64).floor() as usize).min(w - 1);
            let y = ((p.v() * h as f64).floor() as usize).min(h - 1);
            *obs.get(x, y)
        });
        assert_eq!(collision(&t, &obs).unwrap(), hit);
    }
}

#[test]
fn curvature_goldens() {
    assert!(curvature(&traj(&[[0.1, 0.1], [0.5, 0.3], [0.9, 0.5]])).unwrap() < 1e-12);
    assert!((mean_heading_change(&[[0.1, 0.1], [0.5, 0.1], [0.5, 0.6]]) - PI / 2.0).abs() < 1e-12);
    // fewer than two usable segments
    assert_eq!(mean_heading_change(&[[0.3, 0.3], [0.3, 0.3], [0.6, 0.3]]), 0.0);

    for k in [6usize, 8, 12] {
        let ring: Vec<Vec2> = (0..=k)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / k as f64;
                [0.5 + 0.3 * a.cos(), 0.5 + 0.3 * a.sin()]
            })
            .collect();
        assert!((mean_heading_change(&ring) - 2.0 * PI / k as f64).abs() < 1e-12, "k {k}");
    }
    // 99 equal edges survive resampling to 100 points unchanged
    let ring: Vec<Vec2> = (0..METRIC_WAYPOINTS)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / 99.0;
            [0.5 + 0.3 * a.cos(), 0.5 + 0.3 * a.sin()]
        })
        .collect();
    assert!((curvature(&traj(&ring)).unwrap() - 2.0 * PI / 99.0).abs() < 1e-9);
}

#[test]
fn plr_goldens() {
    let a = traj(&[[0.2, 0.5], [0.7, 0.5]]);
    assert!((plr(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    let back = traj(&[[0.2, 0.5], [0.7, 0.5], [0.2, 0.5], [0.7, 0.5]]);
    assert!((plr(&back, &a).unwrap() - 3.0).abs() < 1e-9);
    assert!(plr(&a, &traj(&[[0.4, 0.4], [0.4, 0.4]])).is_err());

    let mut r = rng(3);
    for _ in 0..100 {
        let (x, y) = (traj(&random_polyline(&mut r, 6)), traj(&random_polyline(&mut r, 5)));
        let lx = length(&x.resample(METRIC_WAYPOINTS).to_arrays());
        let ly = length(&y.resample(METRIC_WAYPOINTS).to_arrays());
        assert!((plr(&x, &y).unwrap() - lx / ly).abs() < 1e-12);
    }
}

#[test]
fn metrics_ignore_waypoint_count_and_timing() {
    let mut r = rng(4);
    let obs = random_mask(&mut r, 50, 50, 0.02);
    for _ in 0..100 {
        let (np, nr) = (r.gen_range(2..8), r.gen_range(2..8));
        let pred = random_polyline(&mut r, np);
        let reference = random_polyline(&mut r, nr);
        let base = evaluate_episode(&traj(&pred), &traj(&reference), &obs).unwrap();
        let dense = evaluate_episode(&traj(&oversample(&pred, 7)), &traj(&oversample(&reference, 7)), &obs).unwrap();
        let timed = evaluate_episode(
            &traj(&reparameterize(&mut r, &pred, 5)),
            &traj(&reparameterize(&mut r, &reference, 3)),
            &obs,
        )
        .unwrap();
        for other in [dense, timed] {
            assert!((base.fge - other.fge).abs() < 1e-9);
            assert!((base.plr - other.plr).abs() < 1e-9);
            assert!((base.curv - other.curv).abs() < 1e-9);
        }
        assert_eq!(base.cr, dense.cr);
    }
}

#[test]
fn curvature_ignores_rotation() {
    let mut r = rng(5);
    for _ in 0..100 {
        let pts: Vec<Vec2> = (0..6)
            .map(|_| {
                let (a, d) = (r.gen_range(0.0..2.0 * PI), r.gen_range(0.0..0.4));
                [0.5 + d * a.cos(), 0.5 + d * a.sin()]
            })
            .collect();
        let th = r.gen_range(0.0..2.0 * PI);
        let rotated: Vec<Vec2> = pts
            .iter()
            .map(|p| {
                let (x, y) = (p[0] - 0.5, p[1] - 0.5);
                [0.5 + x * th.cos() - y * th.sin(), 0.5 + x * th.sin() + y * th.cos()]
            })
            .collect();
        let (a, b) = (curvature(&traj(&pts)).unwrap(), curvature(&traj(&rotated)).unwrap());
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn field_metric_goldens() {
    let mut r = rng(6);
    let field: FlowFieldGrid = Raster::from_fn(30, 20, |_, _| {
        let (a, m) = (r.gen_range(0.0..2.0 * PI), r.gen_range(0.05..1.0));
        [m * a.cos(), m * a.sin()]
    });
    // ε in the cosine keeps the self-comparison a hair above zero
    let same = field_metrics(&field, &field).unwrap();
    assert!(same.ae < 0.05 && same.me == 0.0, "{same:?}");

    let rotated = field.map(|v| [-v[1], v[0]]);
    let rot = field_metrics(&rotated, &field).unwrap();
    assert!((rot.ae - 90.0).abs() < 1e-9 && rot.me < 1e-12);

    let doubled = field.map(|v| [2.0 * v[0], 2.0 * v[1]]);
    let d = field_metrics(&doubled, &field).unwrap();
    let mean_norm = field.as_slice().iter().map(|v| v[0].hypot(v[1])).sum::<f64>() / field.len() as f64;
    assert!((d.me - mean_norm).abs() < 1e-12);
    assert!(d.ae < 0.05);

    // independent recomputation of the guarded cosine
    let mut ae = 0.0;
    for (p, a) in doubled.as_slice().iter().zip(field.as_slice()) {
        let (np, na) = (p[0].hypot(p[1]), a[0].hypot(a[1]));
        let c = (p[0] * a[0] + p[1] * a[1]) / ((np + EPSILON) * (na + EPSILON));
        ae += c.clamp(-1.0, 1.0).acos().to_degrees();
    }
    assert!((d.ae - ae / field.len() as f64).abs() < 1e-9);

    assert!(field_metrics(&FlowFieldGrid::filled(3, 3, [0.0, 0.0]), &field).is_err());
}
