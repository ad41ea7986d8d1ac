//! Limit-law predictions and exact finite-n oracles.
//!
//! Two independent exact computations are provided. The moment recursion
//! follows from `E[X1_{n+1} | F_n] = alpha1 S2_n / n`,
//! `E[X2_{n+1} | F_n] = alpha2 S1_n / n` and conditional independence of
//! the two steps:
//!
//! ```text
//! m1' = m1 + alpha1 m2 / n          q1' = q1 + 2 alpha1 c / n + 1
//! m2' = m2 + alpha2 m1 / n          q2' = q2 + 2 alpha2 c / n + 1
//! c'  = c + alpha2 q1 / n + alpha1 q2 / n + alpha1 alpha2 c / n^2
//! ```
//!
//! The dynamic program propagates the full law of `(S1_n, S2_n)` on the
//! parity lattice.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{InitialCondition, ReinforcementParams};
use crate::spectral::{spectral_params, Regime};

/// Which walker a prediction refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Walker {
    First,
    Second,
}

impl Walker {
    /// Parameters seen from this walker: the second walker's laws are the
    /// first walker's with the alphas interchanged.
    pub fn orient(self, params: &ReinforcementParams) -> ReinforcementParams {
        match self {
            Walker::First => *params,
            Walker::Second => params.swapped(),
        }
    }
}

/// Normalisation under which `S_n` has a non-trivial limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "exponent")]
pub enum Scaling {
    /// `sqrt(n)`
    Sqrt,
    /// `sqrt(n log n)`
    SqrtLog,
    /// `n^{|lambda|}`
    Power(f64),
}

impl Scaling {
    pub fn at(self, n: f64) -> f64 {
        match self {
            Scaling::Sqrt => n.sqrt(),
            Scaling::SqrtLog => (n * n.ln()).sqrt(),
            Scaling::Power(e) => n.powf(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLawPrediction {
    pub regime: Regime,
    pub walker: Walker,
    pub scaling: Scaling,
    /// Variance of the Gaussian limit of `S_n / scaling`.
    pub variance: f64,
    /// The same quantity for the other walker.
    pub variance_second_walker: f64,
    /// Explicit limsup coefficient of the LIL envelope, where one is known.
    pub lil_upper: Option<f64>,
}

/// Limit variance of `S1_n / scaling` in every regime with a Gaussian limit.
fn first_walker_variance(a1: f64, a2: f64, regime: Regime) -> f64 {
    match regime {
        Regime::Critical => (a1 + a2) / (4.0 * a2),
        _ => (1.0 + 2.0 * a1 * a1 - 2.0 * a1 * a2) / (1.0 - 4.0 * a1 * a2),
    }
}

pub fn predicted_variance(params: &ReinforcementParams, walker: Walker) -> Result<LimitLawPrediction> {
    let spec = spectral_params(params);
    let scaling = match spec.regime {
        Regime::Superdiffusive => {
            return Err(Error::WrongRegime {
                required: "a Gaussian limit (|lambda| <= 1/2 or mixed signs)",
                actual: spec.regime.to_string(),
            })
        }
        Regime::Critical => Scaling::SqrtLog,
        _ => Scaling::Sqrt,
    };
    let own = walker.orient(params);
    let other = own.swapped();
    Ok(LimitLawPrediction {
        regime: spec.regime,
        walker,
        scaling,
        variance: first_walker_variance(own.alpha1(), own.alpha2(), spec.regime),
        variance_second_walker: first_walker_variance(other.alpha1(), other.alpha2(), spec.regime),
        lil_upper: lil_envelope(&own).ok().and_then(|e| e.upper),
    })
}

/// Fluctuation of `S1_n / n^{|lambda|}` around its almost-sure limit `W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FluctuationLaw {
    /// `n^{|lambda| - 1/2} (S1_n / n^{|lambda|} - W) -> N(0, variance)`.
    Gaussian { abs_lambda: f64, variance: f64 },
    /// `sqrt(n) (S1_n / n - W) -> L` with `E e^{itL} = E exp(-(1 - W^2) t^2 / 3)`.
    Mixture,
}

impl FluctuationLaw {
    /// Exponent `|lambda| - 1/2` of the fluctuation scaling.
    pub fn rate_exponent(&self) -> f64 {
        match self {
            FluctuationLaw::Gaussian { abs_lambda, .. } => abs_lambda - 0.5,
            FluctuationLaw::Mixture => 0.5,
        }
    }

    /// Characteristic function at `t` given one value of `W`.
    pub fn conditional_cf(&self, t: f64, w: f64) -> f64 {
        match self {
            FluctuationLaw::Gaussian { variance, .. } => (-variance * t * t / 2.0).exp(),
            FluctuationLaw::Mixture => (-(1.0 - w * w) * t * t / 3.0).exp(),
        }
    }
}

pub fn fluctuation_law(params: &ReinforcementParams) -> Result<FluctuationLaw> {
    let spec = spectral_params(params);
    if spec.regime != Regime::Superdiffusive {
        return Err(Error::WrongRegime { required: "Superdiffusive (1/2 < |lambda| <= 1)", actual: spec.regime.to_string() });
    }
    if spec.is_unit() {
        return Ok(FluctuationLaw::Mixture);
    }
    let (a1, a2) = (params.alpha1(), params.alpha2());
    let prod = a1 * a2;
    Ok(FluctuationLaw::Gaussian { abs_lambda: spec.abs_lambda(), variance: (1.0 + a1 / a2) * prod.sqrt() / (4.0 * prod - 1.0) })
}

/// Normalising sequence of an LIL-type bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LilNorm {
    /// `sqrt(2 n log log n)`
    TwoNLogLog,
    /// `sqrt(n log log n)`
    NLogLog,
    /// `sqrt(n log n log log log n)`
    NLogNLogLogLog,
}

impl LilNorm {
    pub fn at(self, n: f64) -> f64 {
        match self {
            LilNorm::TwoNLogLog => (2.0 * n * n.ln().ln()).sqrt(),
            LilNorm::NLogLog => (n * n.ln().ln()).sqrt(),
            LilNorm::NLogNLogLogLog => (n * n.ln() * n.ln().ln().ln()).sqrt(),
        }
    }
}

/// `limsup |S1_n| / norm(n)`: an explicit coefficient where one is known,
/// otherwise only the existence of a finite bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LilEnvelope {
    pub norm: LilNorm,
    pub upper: Option<f64>,
    pub lower_exists: bool,
}

impl LilEnvelope {
    /// `upper * norm(n)`, when the coefficient is explicit.
    pub fn bound_at(&self, n: f64) -> Option<f64> {
        self.upper.map(|u| u * self.norm.at(n))
    }
}

pub fn lil_envelope(params: &ReinforcementParams) -> Result<LilEnvelope> {
    let spec = spectral_params(params);
    let (a1, a2) = (params.alpha1(), params.alpha2());
    Ok(match spec.regime {
        Regime::SrwCoupled if a1 == 0.0 => LilEnvelope { norm: LilNorm::TwoNLogLog, upper: Some(1.0), lower_exists: true },
        Regime::SrwCoupled => {
            debug_assert_eq!(a2, 0.0);
            LilEnvelope { norm: LilNorm::TwoNLogLog, upper: Some(1.0 + 2f64.sqrt() * a1.abs()), lower_exists: true }
        }
        Regime::Diffusive | Regime::MixedSign => LilEnvelope { norm: LilNorm::NLogLog, upper: None, lower_exists: false },
        Regime::Critical => LilEnvelope { norm: LilNorm::NLogNLogLogLog, upper: None, lower_exists: false },
        Regime::Superdiffusive => {
            return Err(Error::WrongRegime { required: "a diffusive or critical regime", actual: spec.regime.to_string() })
        }
    })
}

/// Exact first and second moments of `(S1_n, S2_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentState {
    pub n: u64,
    pub m1: f64,
    pub m2: f64,
    pub q1: f64,
    pub q2: f64,
    pub c: f64,
}

impl MomentState {
    pub fn initial(init: InitialCondition) -> Self {
        let (x1, x2) = (f64::from(init.first()), f64::from(init.second()));
        Self { n: 1, m1: x1, m2: x2, q1: 1.0, q2: 1.0, c: x1 * x2 }
    }

    pub fn advance(&self, params: &ReinforcementParams) -> Self {
        let (a1, a2) = (params.alpha1(), params.alpha2());
        let n = self.n as f64;
        Self {
            n: self.n + 1,
            m1: self.m1 + a1 * self.m2 / n,
            m2: self.m2 + a2 * self.m1 / n,
            q1: self.q1 + 2.0 * a1 * self.c / n + 1.0,
            q2: self.q2 + 2.0 * a2 * self.c / n + 1.0,
            c: self.c + a2 * self.q1 / n + a1 * self.q2 / n + a1 * a2 * self.c / (n * n),
        }
    }

    pub fn var1(&self) -> f64 {
        self.q1 - self.m1 * self.m1
    }

    pub fn var2(&self) -> f64 {
        self.q2 - self.m2 * self.m2
    }

    pub fn cov(&self) -> f64 {
        self.c - self.m1 * self.m2
    }
}

/// Iterator over `MomentState` for `n = 1, 2, ...`.
#[derive(Debug, Clone)]
pub struct MomentRecursion {
    params: ReinforcementParams,
    next: MomentState,
}

impl Iterator for MomentRecursion {
    type Item = MomentState;

    fn next(&mut self) -> Option<MomentState> {
        let cur = self.next;
        self.next = cur.advance(&self.params);
        Some(cur)
    }
}

pub fn moment_iter(params: &ReinforcementParams, init: InitialCondition) -> MomentRecursion {
    MomentRecursion { params: *params, next: MomentState::initial(init) }
}

/// Moments for `n = 1..=n_max`.
pub fn moment_recursion(params: &ReinforcementParams, init: InitialCondition, n_max: usize) -> Result<Vec<MomentState>> {
    if n_max == 0 {
        return Err(Error::TooSmall { name: "n_max", min: 1, value: 0 });
    }
    Ok(moment_iter(params, init).take(n_max).collect())
}

/// Moments at a single `n`, without storing the sequence.
pub fn moments_at(params: &ReinforcementParams, init: InitialCondition, n: usize) -> Result<MomentState> {
    if n == 0 {
        return Err(Error::TooSmall { name: "n", min: 1, value: 0 });
    }
    Ok(moment_iter(params, init).nth(n - 1).expect("unbounded iterator"))
}

pub const DP_DEFAULT_CAP: usize = 1000;

/// Law of `(S1_n, S2_n)`. Entry `(i, j)` is the probability of
/// `S1_n = 2i - n`, `S2_n = 2j - n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDistribution {
    pub n: usize,
    table: Vec<f64>,
}

impl ExactDistribution {
    fn side(&self) -> usize {
        self.n + 1
    }

    /// `P(S1_n = s1, S2_n = s2)`; zero off the lattice.
    pub fn prob(&self, s1: i64, s2: i64) -> f64 {
        let n = self.n as i64;
        if s1.abs() > n || s2.abs() > n || (s1 + n) % 2 != 0 || (s2 + n) % 2 != 0 {
            return 0.0;
        }
        self.table[((s1 + n) / 2) as usize * self.side() + ((s2 + n) / 2) as usize]
    }

    /// `(s1, s2, probability)` for every lattice point with positive mass.
    pub fn support(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        let n = self.n as i64;
        let side = self.side();
        self.table.iter().enumerate().filter(|(_, &p)| p > 0.0).map(move |(k, &p)| {
            ((2 * (k / side) as i64) - n, (2 * (k % side) as i64) - n, p)
        })
    }

    pub fn total(&self) -> f64 {
        self.table.iter().sum()
    }

    /// Moments of the law in `MomentState` form.
    pub fn moments(&self) -> MomentState {
        let mut m = MomentState { n: self.n as u64, m1: 0.0, m2: 0.0, q1: 0.0, q2: 0.0, c: 0.0 };
        for (s1, s2, p) in self.support() {
            let (a, b) = (s1 as f64, s2 as f64);
            m.m1 += p * a;
            m.m2 += p * b;
            m.q1 += p * a * a;
            m.q2 += p * b * b;
            m.c += p * a * b;
        }
        m
    }

    /// Law of `S1_n` alone, keyed by position.
    pub fn marginal_first(&self) -> Vec<(i64, f64)> {
        let n = self.n as i64;
        let side = self.side();
        self.table.chunks(side).enumerate().map(|(i, row)| (2 * i as i64 - n, row.iter().sum())).collect()
    }
}

pub fn exact_distribution_dp(params: &ReinforcementParams, init: InitialCondition, n: usize) -> Result<ExactDistribution> {
    exact_distribution_dp_with_cap(params, init, n, DP_DEFAULT_CAP)
}

/// Pull-style propagation: each cell of the time-`k + 1` table gathers the
/// four predecessor states, so rows can be filled in parallel.
pub fn exact_distribution_dp_with_cap(
    params: &ReinforcementParams,
    init: InitialCondition,
    n: usize,
    cap: usize,
) -> Result<ExactDistribution> {
    let table = propagate(params, init, n, cap, |_, _, _| {})?;
    Ok(ExactDistribution { n, table })
}

/// Moments of the exact law at every `k = 1..=n`, from one DP pass.
pub fn exact_moments_dp(params: &ReinforcementParams, init: InitialCondition, n: usize) -> Result<Vec<MomentState>> {
    let mut out = Vec::with_capacity(n);
    propagate(params, init, n, DP_DEFAULT_CAP, |k, table, side| {
        let kk = k as i64;
        let mut m = MomentState { n: k as u64, m1: 0.0, m2: 0.0, q1: 0.0, q2: 0.0, c: 0.0 };
        for i in 0..=k {
            let a = (2 * i as i64 - kk) as f64;
            for j in 0..=k {
                let p = table[i * side + j];
                let b = (2 * j as i64 - kk) as f64;
                m.m1 += p * a;
                m.m2 += p * b;
                m.q1 += p * a * a;
                m.q2 += p * b * b;
                m.c += p * a * b;
            }
        }
        out.push(m);
    })?;
    Ok(out)
}

/// Runs the DP to time `n` on a `(n + 1)^2` grid, calling `visit(k, table, side)`
/// after each time `k`.
fn propagate(
    params: &ReinforcementParams,
    init: InitialCondition,
    n: usize,
    cap: usize,
    mut visit: impl FnMut(usize, &[f64], usize),
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::TooSmall { name: "n", min: 1, value: 0 });
    }
    if n > cap {
        return Err(Error::TooLarge { name: "n", value: n as u64, cap: cap as u64 });
    }
    let (h1, h2) = (0.5 * params.alpha1(), 0.5 * params.alpha2());
    let side = n + 1;
    let mut cur = vec![0.0; side * side];
    let mut next = vec![0.0; side * side];
    // at time 1 the index of s is (s + 1) / 2
    let i0 = usize::from(init.first() > 0);
    let j0 = usize::from(init.second() > 0);
    cur[i0 * side + j0] = 1.0;
    visit(1, &cur, side);
    for k in 1..n {
        let kf = k as f64;
        let kk = k as i64;
        let up1 = |j: usize| 0.5 + h1 * ((2 * j as i64 - kk) as f64 / kf);
        let up2 = |i: usize| 0.5 + h2 * ((2 * i as i64 - kk) as f64 / kf);
        let cur_ref = &cur;
        next[..(k + 2) * side].par_chunks_mut(side).enumerate().for_each(|(i, row)| {
            for (j, cell) in row.iter_mut().enumerate().take(k + 2) {
                let mut p = 0.0;
                // predecessor (pi, pj) at time k, with step up iff index advanced
                for (pi, up_a) in [(i.wrapping_sub(1), true), (i, false)] {
                    if pi > k {
                        continue;
                    }
                    for (pj, up_b) in [(j.wrapping_sub(1), true), (j, false)] {
                        if pj > k {
                            continue;
                        }
                        let mass = cur_ref[pi * side + pj];
                        if mass == 0.0 {
                            continue;
                        }
                        let a = up1(pj);
                        let b = up2(pi);
                        p += mass * if up_a { a } else { 1.0 - a } * if up_b { b } else { 1.0 - b };
                    }
                }
                *cell = p;
            }
        });
        std::mem::swap(&mut cur, &mut next);
        visit(k + 1, &cur, side);
    }
    Ok(cur)
}

/// CSV rows `n,m1,m2,q1,q2,c,var1_over_n` for `n = 1..=n_max`.
pub fn write_moments_csv<W: std::io::Write>(states: &[MomentState], mut w: W) -> std::io::Result<()> {
    writeln!(w, "n,m1,m2,q1,q2,c,var1_over_n")?;
    for s in states {
        writeln!(w, "{},{},{},{},{},{},{}", s.n, s.m1, s.m2, s.q1, s.q2, s.c, s.var1() / s.n as f64)?;
    }
    Ok(())
}
