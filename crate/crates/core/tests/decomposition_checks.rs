mod common;

use std::collections::BTreeMap;

use common::{init, params};
use elephant_duo::decomposition::{lambda_one_path, max_reconstruction_error, xy_decompose};
use elephant_duo::model::simulate_pair;
use elephant_duo::montecarlo::{par_replicas, SampleStats};
use elephant_duo::rng::SeedRecord;
use elephant_duo::spectral::spectral_params;

/// z-score of a bin mean; `None` when the bin is too thin.
fn bin_z(v: &[f64]) -> Option<f64> {
    if v.len() < 30 {
        return None;
    }
    let s = SampleStats::from_values(v).ok()?;
    (s.mean_se > 0.0).then(|| s.mean / s.mean_se)
}

#[test]
fn martingale_differences_have_zero_conditional_mean() {
    let n = 200usize;
    for (a1, a2, seed) in [(0.3, 0.3, 1u64), (0.6, -0.6, 2), (0.8, 0.8, 3), (0.9, 0.2, 4)] {
        let p = params(a1, a2);
        let spec = spectral_params(&p);
        let rows = par_replicas(4000, None, |i| {
            let t = simulate_pair(&p, init(1, 1), n + 1, SeedRecord::new(seed, i))?;
            let path = xy_decompose(&t, &spec)?;
            let cell = |s: i64| (s as f64 / (n as f64).sqrt()).floor().clamp(-3.0, 3.0) as i64;
            let key = (cell(t.positions1[n - 1]), cell(t.positions2[n - 1]));
            Ok((key, path.eps_x[n - 1], path.eps_y[n - 1]))
        })
        .unwrap();
        let mut bins: BTreeMap<(i64, i64), [Vec<f64>; 4]> = BTreeMap::new();
        for (key, ex, ey) in rows {
            let b = bins.entry(key).or_default();
            b[0].push(ex.re);
            b[1].push(ex.im);
            b[2].push(ey.re);
            b[3].push(ey.im);
        }
        let mut used = 0;
        for (key, b) in &bins {
            for v in b {
                if let Some(z) = bin_z(v) {
                    used += 1;
                    assert!(z.abs() < 4.0, "({a1},{a2}) cell {key:?}: z = {z}");
                }
            }
        }
        assert!(used >= 4);
    }
}

#[test]
fn cross_moment_limit() {
    let n = 10_000usize;
    let (a1, a2) = (0.3, 0.6);
    let p = params(a1, a2);
    let spec = spectral_params(&p);
    let vals = par_replicas(2000, None, |i| {
        let t = simulate_pair(&p, init(1, -1), n + 1, SeedRecord::new(77, i))?;
        let path = xy_decompose(&t, &spec)?;
        Ok((1.0 - a1 * a2) * (path.eps_x[n - 1] * path.eps_y[n - 1]).re)
    })
    .unwrap();
    let s = SampleStats::from_values(&vals).unwrap();
    let target = 1.0 - a1 / a2;
    assert!((s.mean - target).abs() < 3.0 * s.mean_se, "{} vs {target} (se {})", s.mean, s.mean_se);
}

#[test]
fn eigen_coordinates_vanish() {
    let p = params(0.3, 0.3);
    let worst = par_replicas(100, None, |i| {
        let t = simulate_pair(&p, init(1, 1), 100_000, SeedRecord::new(8, i))?;
        let s = t.final_state();
        Ok(((s.s1 - s.s2) as f64 / 1e5).abs())
    })
    .unwrap()
    .into_iter()
    .fold(0.0, f64::max);
    assert!(worst < 0.05, "{worst}");
}

#[test]
fn unit_lambda_martingale_coordinate() {
    let p = params(1.0, 1.0);
    for n in [100usize, 1000] {
        let vals = par_replicas(2000, None, |i| {
            let t = simulate_pair(&p, init(1, -1), n, SeedRecord::new(31, i))?;
            let u = lambda_one_path(&t)?;
            Ok(u.ys[n - 1] - u.ys[1])
        })
        .unwrap();
        let s = SampleStats::from_values(&vals).unwrap();
        assert!(s.mean.abs() < 3.0 * s.mean_se.max(1e-12), "n={n}: {s:?}");
    }
}

#[test]
fn real_lambda_has_real_coordinates() {
    for (a1, a2) in [(0.3, 0.7), (-0.4, -0.9), (0.8, 0.8)] {
        let p = params(a1, a2);
        let t = simulate_pair(&p, init(1, 1), 2000, SeedRecord::new(4, 0)).unwrap();
        let path = xy_decompose(&t, &spectral_params(&p)).unwrap();
        let im = path.closed_x.iter().chain(&path.closed_y).chain(&path.eps_x).map(|z| z.im.abs()).fold(0.0, f64::max);
        assert!(im < 1e-9);
        assert!(max_reconstruction_error(&path, &t) < 1e-9);
        assert!(path.max_recursion_error() < 1e-9);
    }
}
