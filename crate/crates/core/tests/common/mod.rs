//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use elephant_duo::model::{InitialCondition, ReinforcementParams};

/// Parameter grid touching every regime.
pub const GRID: [(f64, f64); 5] = [(0.0, 0.0), (0.3, 0.3), (0.5, 0.5), (0.8, 0.0), (0.6, -0.6)];

pub fn params(a1: f64, a2: f64) -> ReinforcementParams {
    ReinforcementParams::from_alphas(a1, a2).unwrap()
}

pub fn init(a: i64, b: i64) -> InitialCondition {
    InitialCondition::new(a, b).unwrap()
}

/// `P(X1_{n+1} = +1)` and `P(X2_{n+1} = +1)` given the full histories, summing
/// over the copied index `u` and the copy-or-flip coin explicitly.
pub fn history_transition(h1: &[i8], h2: &[i8], p1: f64, p2: f64) -> (f64, f64) {
    let n = h1.len();
    let up = |partner: &[i8], p: f64| {
        let mut total = 0.0;
        for &x in partner {
            for (copy, w) in [(true, p), (false, 1.0 - p)] {
                let step = if copy { x } else { -x };
                if step == 1 {
                    total += w / n as f64;
                }
            }
        }
        total
    };
    (up(h2, p1), up(h1, p2))
}

/// Every history pair of length `n` with its probability.
pub fn histories(p: &ReinforcementParams, x: InitialCondition, n: usize) -> Vec<(Vec<i8>, Vec<i8>, f64)> {
    let mut cur = vec![(vec![x.first()], vec![x.second()], 1.0)];
    for _ in 1..n {
        let mut next = Vec::with_capacity(cur.len() * 4);
        for (h1, h2, w) in cur {
            let (a, b) = history_transition(&h1, &h2, p.p1(), p.p2());
            for (s1, pa) in [(1i8, a), (-1, 1.0 - a)] {
                for (s2, pb) in [(1i8, b), (-1, 1.0 - b)] {
                    let wt = w * pa * pb;
                    if wt == 0.0 {
                        continue;
                    }
                    let mut g1 = h1.clone();
                    let mut g2 = h2.clone();
                    g1.push(s1);
                    g2.push(s2);
                    next.push((g1, g2, wt));
                }
            }
        }
        cur = next;
    }
    cur
}

/// Law of `(S1_n, S2_n)` from full history enumeration.
pub fn history_law(p: &ReinforcementParams, x: InitialCondition, n: usize) -> BTreeMap<(i64, i64), f64> {
    let mut law = BTreeMap::new();
    for (h1, h2, w) in histories(p, x, n) {
        let s1: i64 = h1.iter().map(|&v| i64::from(v)).sum();
        let s2: i64 = h2.iter().map(|&v| i64::from(v)).sum();
        *law.entry((s1, s2)).or_insert(0.0) += w;
    }
    law
}

/// All attachment sequences `u_j in 1..=j` on `n` vertices, as out-degree
/// vectors, each with probability `1 / (n - 1)!`.
pub fn all_trees(n: usize) -> Vec<Vec<u32>> {
    let mut seqs: Vec<Vec<u32>> = vec![vec![]];
    for j in 1..n as u32 {
        seqs = seqs
            .into_iter()
            .flat_map(|s| {
                (1..=j).map(move |u| {
                    let mut t = s.clone();
                    t.push(u);
                    t
                })
            })
            .collect();
    }
    seqs.into_iter()
        .map(|s| {
            let mut d = vec![0u32; n];
            for u in s {
                d[u as usize - 1] += 1;
            }
            d
        })
        .collect()
}
