mod common;

use common::{history_law, init, params, GRID};
use elephant_duo::theory::{exact_distribution_dp, exact_moments_dp, moment_recursion, moments_at, MomentState};
use proptest::prelude::*;

#[test]
fn dp_matches_history_enumeration() {
    for (a1, a2) in GRID {
        let p = params(a1, a2);
        for x in [init(1, 1), init(-1, 1)] {
            for n in 1..=6 {
                let dp = exact_distribution_dp(&p, x, n).unwrap();
                let brute = history_law(&p, x, n);
                let mut worst: f64 = 0.0;
                for (&(s1, s2), &w) in &brute {
                    worst = worst.max((dp.prob(s1, s2) - w).abs());
                }
                for (s1, s2, q) in dp.support() {
                    worst = worst.max((brute.get(&(s1, s2)).copied().unwrap_or(0.0) - q).abs());
                }
                assert!(worst < 1e-12, "({a1},{a2}) n={n}: {worst}");
            }
        }
    }
}

#[test]
fn dp_example_n4_critical() {
    let p = params(0.5, 0.5);
    let dp = exact_distribution_dp(&p, init(1, 1), 4).unwrap();
    let brute = history_law(&p, init(1, 1), 4);
    assert_eq!(dp.support().count(), brute.values().filter(|&&w| w > 0.0).count());
    assert!((dp.total() - 1.0).abs() < 1e-14);
}

/// Moments compared on the natural scales `m / n` and `q / n^2`.
fn moment_gap(a: &MomentState, b: &MomentState) -> f64 {
    let n = a.n as f64;
    [
        (a.m1 - b.m1) / n,
        (a.m2 - b.m2) / n,
        (a.q1 - b.q1) / (n * n),
        (a.q2 - b.q2) / (n * n),
        (a.c - b.c) / (n * n),
    ]
    .iter()
    .fold(0.0, |m, d| m.max(d.abs()))
}

#[test]
fn dp_moments_match_recursion_up_to_500() {
    for (a1, a2) in GRID {
        let p = params(a1, a2);
        let dp = exact_moments_dp(&p, init(1, 1), 500).unwrap();
        let rec = moment_recursion(&p, init(1, 1), 500).unwrap();
        let worst = dp.iter().zip(&rec).map(|(a, b)| moment_gap(a, b)).fold(0.0, f64::max);
        assert!(worst < 1e-10, "({a1},{a2}): {worst}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn moment_invariants(a1 in -1.0f64..=1.0, a2 in -1.0f64..=1.0, n in 1usize..3000, s in 0u8..4) {
        let x = init(if s & 1 == 0 { 1 } else { -1 }, if s & 2 == 0 { 1 } else { -1 });
        let m = moments_at(&params(a1, a2), x, n).unwrap();
        let nn = (n * n) as f64;
        let tol = 1e-9 * nn;
        prop_assert!(m.q1 + tol >= m.m1 * m.m1);
        prop_assert!(m.q2 + tol >= m.m2 * m.m2);
        prop_assert!(m.c.abs() <= (m.q1 * m.q2).sqrt() + tol);
        prop_assert!(m.q1 <= nn + tol && m.q2 <= nn + tol);
    }

    #[test]
    fn dp_is_a_probability_law(a1 in -1.0f64..=1.0, a2 in -1.0f64..=1.0, n in 1usize..40) {
        let d = exact_distribution_dp(&params(a1, a2), init(1, -1), n).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-12);
        prop_assert!(d.support().all(|(_, _, p)| p >= 0.0));
    }
}
