//! Tree-weighted formulation of the first walker when `p2 = 1/2`.
//!
//! With `alpha2 = 0` the second walker is a simple random walk with steps
//! `X_1, X_2, ...`. Step `k` of the partner is copied `d_n(k)` times by time
//! `n`, where `d_n` is the out-degree profile of a random recursive tree, and
//! the signs of those copies form a biased walk `S~^(k)` with parameter `p1`.
//! Hence
//!
//! ```text
//! S1_n = X1_1 + sum_k S~^(k)_{d_n(k)} X_k
//! ```
//!
//! has the law of the direct model with `p2 = 1/2`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{InitialCondition, ReinforcementParams};
use crate::tree::{self, DegreeProfile};

/// `E[S~_m^2]` and `Var[S~_m^2]` for a biased walk with `P(step = +1) = p1`.
pub fn biased_square_moments(m: u64, p1: f64) -> (f64, f64) {
    let a2 = (2.0 * p1 - 1.0).powi(2);
    let m = m as f64;
    let mean_sq = 4.0 * m * p1 * (1.0 - p1) + m * m * a2;
    let var_sq = 2.0 * m * (m - 1.0) * (1.0 + 2.0 * (m - 2.0) * a2 - (2.0 * m - 3.0) * a2 * a2);
    (mean_sq, var_sq)
}

/// Running values `S~^(k)_0..=S~^(k)_{len_k}` of one biased walk per vertex,
/// stored back to back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasedWalkBank {
    p1: f64,
    offsets: Vec<usize>,
    values: Vec<i64>,
}

impl BiasedWalkBank {
    /// Draws each walk to exactly the depth `d_n(k)` the profile requires.
    pub fn sample<R: Rng + ?Sized>(p1: f64, profile: &DegreeProfile, rng: &mut R) -> Self {
        let n = profile.n();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut values = Vec::with_capacity(2 * n);
        offsets.push(0);
        for &d in profile.degrees() {
            let mut s = 0i64;
            values.push(s);
            for _ in 0..d {
                s += if rng.random::<f64>() < p1 { 1 } else { -1 };
                values.push(s);
            }
            offsets.push(values.len());
        }
        Self { p1, offsets, values }
    }

    /// Builds a bank from explicit `±1` increments, one sequence per vertex.
    pub fn from_increments(p1: f64, increments: &[Vec<i8>]) -> Result<Self> {
        let mut offsets = vec![0];
        let mut values = Vec::new();
        for inc in increments {
            let mut s = 0i64;
            values.push(s);
            for &x in inc {
                if x != 1 && x != -1 {
                    return Err(Error::InvalidStep { name: "bank increment", value: x.into() });
                }
                s += i64::from(x);
                values.push(s);
            }
            offsets.push(values.len());
        }
        Ok(Self { p1, offsets, values })
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of steps stored for vertex `k` (1-based).
    pub fn depth(&self, k: usize) -> usize {
        self.offsets[k] - self.offsets[k - 1] - 1
    }

    /// `S~^(k)_m`, or an error if the walk is shorter than `m`.
    pub fn value(&self, k: usize, m: usize) -> Result<i64> {
        if k == 0 || k > self.vertices() || self.depth(k) < m {
            let available = if k == 0 || k > self.vertices() { 0 } else { self.depth(k) };
            return Err(Error::BankTooShort { vertex: k, available, needed: m });
        }
        Ok(self.values[self.offsets[k - 1] + m])
    }
}

/// `S1_n = x1 + sum_k S~^(k)_{d_n(k)} X_k`.
pub fn assemble_walk(
    profile: &DegreeProfile,
    bank: &BiasedWalkBank,
    rademacher_steps: &[i8],
    x1: i8,
) -> Result<i64> {
    let n = profile.n();
    if rademacher_steps.len() != n {
        return Err(Error::LengthMismatch { name: "rademacher_steps", expected: n, actual: rademacher_steps.len() });
    }
    let mut s = i64::from(x1);
    for (k, (&d, &x)) in profile.degrees().iter().zip(rademacher_steps).enumerate() {
        s += bank.value(k + 1, d as usize)? * i64::from(x);
    }
    Ok(s)
}

/// `sum_k (S~^(k)_{d_n(k)})^2 / (n (1 + 2 alpha1^2))`.
pub fn normalized_square_sum(profile: &DegreeProfile, bank: &BiasedWalkBank) -> Result<f64> {
    let a1 = 2.0 * bank.p1() - 1.0;
    let mut total = 0.0;
    for (k, &d) in profile.degrees().iter().enumerate() {
        let v = bank.value(k + 1, d as usize)? as f64;
        total += v * v;
    }
    Ok(total / (profile.n() as f64 * (1.0 + 2.0 * a1 * a1)))
}

/// Mean of `normalized_square_sum` over banks with the tree held fixed.
pub fn conditional_expectation_given_tree(profile: &DegreeProfile, p1: f64) -> f64 {
    let a1 = 2.0 * p1 - 1.0;
    let n = profile.n() as f64;
    (4.0 * (n - 1.0) * p1 * (1.0 - p1) + a1 * a1 * profile.sum_sq() as f64) / (n * (1.0 + 2.0 * a1 * a1))
}

fn require_half_partner(params: &ReinforcementParams) -> Result<()> {
    if params.p2() != 0.5 {
        return Err(Error::NotHalfPartner(params.p2()));
    }
    Ok(())
}

/// One draw of `S1_n` through the tree construction.
pub fn sample_construction<R: Rng + ?Sized>(
    params: &ReinforcementParams,
    init: InitialCondition,
    n: usize,
    rng: &mut R,
) -> Result<i64> {
    require_half_partner(params)?;
    let profile = tree::grow(n, rng)?;
    let bank = BiasedWalkBank::sample(params.p1(), &profile, rng);
    let mut steps = Vec::with_capacity(n);
    steps.push(init.second());
    steps.extend((1..n).map(|_| if rng.random::<bool>() { 1i8 } else { -1 }));
    assemble_walk(&profile, &bank, &steps, init.first())
}

pub const EXACT_LAW_MAX_N: usize = 8;

/// Law of `S1_n` under the construction by enumerating every tree, partner
/// step sequence and sign pattern. Keys are positions.
pub fn construction_exact_law(
    params: &ReinforcementParams,
    init: InitialCondition,
    n: usize,
) -> Result<BTreeMap<i64, f64>> {
    require_half_partner(params)?;
    if n == 0 {
        return Err(Error::TooSmall { name: "n", min: 1, value: 0 });
    }
    if n > EXACT_LAW_MAX_N {
        return Err(Error::TooLarge { name: "n", value: n as u64, cap: EXACT_LAW_MAX_N as u64 });
    }
    let p1 = params.p1();
    let mut law = BTreeMap::new();
    let mut choices = vec![1u32; n - 1];
    let n_trees: usize = (1..n).product();
    let tree_weight = 1.0 / n_trees as f64;
    for _ in 0..n_trees {
        let profile = DegreeProfile::from_attachments(choices.clone())?;
        let degrees = profile.degrees();
        let total: usize = degrees.iter().map(|&d| d as usize).sum();
        // partner steps X_2..X_n are fair; X_1 is fixed by the initial condition
        for xbits in 0u32..(1 << (n - 1)) {
            let mut xs = Vec::with_capacity(n);
            xs.push(init.second());
            xs.extend((0..n - 1).map(|i| if xbits >> i & 1 == 1 { 1i8 } else { -1 }));
            let x_weight = 0.5f64.powi(n as i32 - 1);
            for sbits in 0u32..(1 << total) {
                let mut incs = Vec::with_capacity(n);
                let mut bit = 0;
                let mut weight = tree_weight * x_weight;
                for &d in degrees {
                    let mut v = Vec::with_capacity(d as usize);
                    for _ in 0..d {
                        let up = sbits >> bit & 1 == 1;
                        bit += 1;
                        weight *= if up { p1 } else { 1.0 - p1 };
                        v.push(if up { 1i8 } else { -1 });
                    }
                    incs.push(v);
                }
                if weight == 0.0 {
                    continue;
                }
                let bank = BiasedWalkBank::from_increments(p1, &incs)?;
                let s = assemble_walk(&profile, &bank, &xs, init.first())?;
                *law.entry(s).or_insert(0.0) += weight;
            }
        }
        // next attachment vector in mixed radix, u_j in 1..=j
        for (j, u) in (1u32..).zip(choices.iter_mut()) {
            if *u < j {
                *u += 1;
                break;
            }
            *u = 1;
        }
    }
    Ok(law)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn binomial_square_moments(m: u64, p: f64) -> (f64, f64) {
        // S~_m = 2K - m with K ~ Binomial(m, p)
        let mut e = 0.0;
        let mut e2 = 0.0;
        let mut coef = 1.0f64;
        for k in 0..=m {
            if k > 0 {
                coef = coef * (m - k + 1) as f64 / k as f64;
            }
            let w = coef * p.powi(k as i32) * (1.0 - p).powi((m - k) as i32);
            let v = ((2 * k) as f64 - m as f64).powi(2);
            e += w * v;
            e2 += w * v * v;
        }
        (e, e2 - e * e)
    }

    #[test]
    fn square_moment_examples() {
        assert_eq!(biased_square_moments(0, 0.3), (0.0, 0.0));
        assert_eq!(biased_square_moments(2, 0.5), (2.0, 4.0));
        assert_eq!(biased_square_moments(3, 1.0), (9.0, 0.0));
    }

    #[test]
    fn square_moments_match_binomial_law() {
        for &p in &[0.0, 0.2, 0.5, 0.75, 0.9, 1.0] {
            for m in 0..40 {
                let (mean, var) = biased_square_moments(m, p);
                let (e, v) = binomial_square_moments(m, p);
                assert!((mean - e).abs() < 1e-9 * (1.0 + e), "p = {p}, m = {m}");
                assert!((var - v).abs() < 1e-7 * (1.0 + v), "p = {p}, m = {m}: {var} vs {v}");
            }
        }
    }

    #[test]
    fn assemble_examples() {
        let profile = DegreeProfile::from_attachments(vec![]).unwrap();
        let bank = BiasedWalkBank::from_increments(0.7, &[vec![]]).unwrap();
        assert_eq!(assemble_walk(&profile, &bank, &[1], -1).unwrap(), -1);

        // star tree: every vertex attaches to 1
        let n = 6;
        let profile = DegreeProfile::from_attachments(vec![1; n - 1]).unwrap();
        let mut rng = stream_rng(1, 0);
        let bank = BiasedWalkBank::sample(1.0, &profile, &mut rng);
        let steps = vec![1, -1, 1, -1, -1, 1];
        assert_eq!(assemble_walk(&profile, &bank, &steps, -1).unwrap(), -1 + (n as i64 - 1));
    }

    #[test]
    fn assemble_errors() {
        let profile = DegreeProfile::from_attachments(vec![1, 1]).unwrap();
        let short = BiasedWalkBank::from_increments(0.5, &[vec![1], vec![], vec![]]).unwrap();
        assert!(matches!(
            assemble_walk(&profile, &short, &[1, 1, 1], 1),
            Err(Error::BankTooShort { vertex: 1, available: 1, needed: 2 })
        ));
        let bank = BiasedWalkBank::from_increments(0.5, &[vec![1, 1], vec![], vec![]]).unwrap();
        assert!(matches!(assemble_walk(&profile, &bank, &[1, 1], 1), Err(Error::LengthMismatch { .. })));
        assert!(BiasedWalkBank::from_increments(0.5, &[vec![2]]).is_err());
    }

    #[test]
    fn sampled_bank_has_exact_depths_and_unit_steps() {
        let mut rng = stream_rng(3, 9);
        let profile = tree::grow(500, &mut rng).unwrap();
        let bank = BiasedWalkBank::sample(0.3, &profile, &mut rng);
        for (k, &d) in profile.degrees().iter().enumerate() {
            assert_eq!(bank.depth(k + 1), d as usize);
            assert_eq!(bank.value(k + 1, 0).unwrap(), 0);
            for m in 1..=d as usize {
                let step = bank.value(k + 1, m).unwrap() - bank.value(k + 1, m - 1).unwrap();
                assert!(step == 1 || step == -1);
            }
        }
        let s = assemble_walk(&profile, &bank, &vec![1; 500], 1).unwrap();
        assert!(s.abs() <= 500);
    }

    #[test]
    fn conditional_expectation_examples() {
        let mut rng = stream_rng(5, 0);
        let profile = tree::grow(300, &mut rng).unwrap();
        assert!((conditional_expectation_given_tree(&profile, 0.5) - 299.0 / 300.0).abs() < 1e-15);
        let star = DegreeProfile::from_attachments(vec![1; 9]).unwrap();
        // alpha1 = 1: sum of squares is 81, normaliser 10 * 3
        assert!((conditional_expectation_given_tree(&star, 1.0) - 81.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn conditional_expectation_matches_bank_average() {
        let p1 = 0.8;
        let mut rng = stream_rng(11, 0);
        let profile = tree::grow(2000, &mut rng).unwrap();
        let target = conditional_expectation_given_tree(&profile, p1);
        let reps = 4000;
        let draws: Vec<f64> = (0..reps)
            .map(|r| {
                let mut rng = stream_rng(12, r);
                normalized_square_sum(&profile, &BiasedWalkBank::sample(p1, &profile, &mut rng)).unwrap()
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / reps as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
        let se = (var / reps as f64).sqrt();
        assert!((mean - target).abs() < 4.0 * se, "{mean} vs {target} (se {se})");
    }

    #[test]
    fn exact_law_small_cases() {
        let params = ReinforcementParams::from_probabilities(0.7, 0.5).unwrap();
        let init = InitialCondition::new(1, -1).unwrap();
        let law = construction_exact_law(&params, init, 1).unwrap();
        assert_eq!(law.len(), 1);
        assert_eq!(law[&1], 1.0);
        // n = 2: S = 1 + S~^(1)_1 X_1 with X_1 = -1
        let law = construction_exact_law(&params, init, 2).unwrap();
        assert!((law[&0] - 0.7).abs() < 1e-15);
        assert!((law[&2] - 0.3).abs() < 1e-15);
        for n in 1..=5 {
            let total: f64 = construction_exact_law(&params, init, n).unwrap().values().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        let bad = ReinforcementParams::from_probabilities(0.7, 0.6).unwrap();
        assert!(matches!(construction_exact_law(&bad, init, 3), Err(Error::NotHalfPartner(_))));
    }
}
