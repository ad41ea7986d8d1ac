//! Parallel ensembles, estimators and goodness-of-fit statistics.
//!
//! Replica `i` always draws from stream `i` of the master seed, results are
//! collected in replica order and every reduction is a compensated sum over
//! that order. Summaries are therefore bit-identical for any worker count.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::construction::{
    conditional_expectation_given_tree, normalized_square_sum, sample_construction, BiasedWalkBank,
};
use crate::error::{Error, Result};
use crate::model::{InitialCondition, PairWalk, ReinforcementParams};
use crate::rng::stream_rng;
use crate::spectral::{spectral_params, Regime};
use crate::theory::{fluctuation_law, lil_envelope, moments_at, predicted_variance, FluctuationLaw, Walker};
use crate::tree;

/// Asymptotic 1% critical value of `sqrt(R) D` for the Kolmogorov–Smirnov
/// statistic.
pub const KS_CRITICAL_1PCT: f64 = 1.628;

/// Minimum ratio of the W-proxy horizon to the fluctuation time.
pub const HORIZON_FACTOR: u64 = 100;

/// The lil scan starts at this time.
pub const LIL_SCAN_START: usize = 100;

/// Returns to zero are counted strictly after this time.
pub const RECURRENCE_AFTER: usize = 10;

/// Stream offset separating construction draws from direct-model draws.
const CONSTRUCTION_STREAM_OFFSET: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Clt,
    Critical,
    Superdiffusive,
    Fluctuation,
    Equivalence,
    LilScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub params: ReinforcementParams,
    pub init: InitialCondition,
    pub n_steps: usize,
    pub replicas: usize,
    pub master_seed: u64,
    pub kind: ExperimentKind,
    /// W-proxy horizon; fluctuation runs default to `HORIZON_FACTOR * n_steps`.
    pub horizon: Option<usize>,
}

impl EnsembleConfig {
    pub fn new(
        params: ReinforcementParams,
        init: InitialCondition,
        n_steps: usize,
        replicas: usize,
        master_seed: u64,
        kind: ExperimentKind,
    ) -> Self {
        Self { params, init, n_steps, replicas, master_seed, kind, horizon: None }
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas < 2 {
            return Err(Error::TooSmall { name: "replicas", min: 2, value: self.replicas as u64 });
        }
        if self.n_steps < 1 {
            return Err(Error::TooSmall { name: "n_steps", min: 1, value: 0 });
        }
        self.init.validate_for(&self.params)?;
        if let Some(h) = self.horizon {
            if h <= self.n_steps {
                return Err(Error::InsufficientHorizon {
                    horizon: h as u64,
                    required: HORIZON_FACTOR * self.n_steps as u64,
                });
            }
        }
        Ok(())
    }

    fn resolved_horizon(&self) -> usize {
        self.horizon.unwrap_or(HORIZON_FACTOR as usize * self.n_steps)
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

fn csum<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    values.into_iter().copied().collect::<CompensatedSum>().value()
}

/// Sample mean and variance with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub count: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    /// `sqrt((m4 - (R - 3) / (R - 1) s^4) / R)` with `m4` the fourth central
    /// sample moment.
    pub variance_se: f64,
}

impl SampleStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let r = values.len();
        if r < 2 {
            return Err(Error::TooSmall { name: "samples", min: 2, value: r as u64 });
        }
        let rf = r as f64;
        let mean = csum(values) / rf;
        let dev2: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
        let variance = csum(&dev2) / (rf - 1.0);
        let m4 = dev2.iter().map(|d| d * d).collect::<CompensatedSum>().value() / rf;
        let var_of_var = (m4 - (rf - 3.0) / (rf - 1.0) * variance * variance).max(0.0) / rf;
        Ok(Self { count: r, mean, mean_se: (variance / rf).sqrt(), variance, variance_se: var_of_var.sqrt() })
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// One-sample Kolmogorov–Smirnov statistic against `N(mean, variance)`.
pub fn ks_against_gaussian(samples: &[f64], mean: f64, variance: f64) -> Result<f64> {
    if samples.len() < 50 {
        return Err(Error::TooSmall { name: "samples", min: 50, value: samples.len() as u64 });
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::DegenerateVariance(variance));
    }
    let normal = Normal::new(mean, variance.sqrt()).map_err(|_| Error::DegenerateVariance(variance))?;
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let r = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = normal.cdf(x);
        d.max((i + 1) as f64 / r - f).max(f - i as f64 / r)
    }))
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    for (name, s) in [("first sample", a), ("second sample", b)] {
        if s.is_empty() {
            return Err(Error::TooSmall { name, min: 1, value: 0 });
        }
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// 1% critical value of the two-sample statistic for sizes `na`, `nb`.
pub fn ks_two_sample_critical(na: usize, nb: usize) -> f64 {
    let (a, b) = (na as f64, nb as f64);
    KS_CRITICAL_1PCT * ((a + b) / (a * b)).sqrt()
}

/// Runs `f` over replica indices on a pool of `threads` workers (the global
/// pool when `None`), returning results in replica order.
pub fn par_replicas<T, F>(replicas: usize, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let run = || (0..replicas as u64).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config { field: "threads".into(), reason: e.to_string() })?
            .install(run),
        None => run(),
    }
}

/// Almost-sure limit estimates in the superdiffusive regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WReport {
    pub abs_lambda: f64,
    /// `S1_n / n^{|lambda|}` per replica.
    pub estimates: Vec<f64>,
    /// `|S1_n - sgn(alpha2) sqrt(alpha1 / alpha2) S2_n| / n^{|lambda|}`.
    pub coupled_gaps: Vec<f64>,
    pub variance: f64,
    pub median_gap: f64,
}

/// Empirical characteristic function of the fluctuations at `t` against the
/// plug-in mixture `mean_i exp(-(1 - W_i^2) t^2 / 3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfPoint {
    pub t: f64,
    pub empirical_re: f64,
    pub empirical_im: f64,
    pub mixture: f64,
}

impl CfPoint {
    pub fn error(&self) -> f64 {
        (Complex64::new(self.empirical_re, self.empirical_im) - self.mixture).norm()
    }
}

pub const CF_GRID: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationReport {
    pub horizon: usize,
    pub law: FluctuationLaw,
    /// `n^{|lambda| - 1/2} (S1_n / n^{|lambda|} - S1_N / N^{|lambda|})`.
    pub fluctuations: Vec<f64>,
    /// `S1_N / N^{|lambda|}` per replica.
    pub w_proxy: Vec<f64>,
    pub stats: SampleStats,
    pub predicted_variance: Option<f64>,
    pub cf: Vec<CfPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilReport {
    pub start: usize,
    /// `max_{start <= k <= n} |S1_k| / sqrt(2 k log log k)` per replica.
    pub path_max: Vec<f64>,
    pub ensemble_max: f64,
    pub upper: Option<f64>,
    /// Fraction of paths whose statistic exceeds `upper`.
    pub fraction_exceeding: Option<f64>,
    /// Paths with `S1_k = 0` for some `k > RECURRENCE_AFTER`.
    pub returned_to_zero: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub n: usize,
    pub direct: Vec<i64>,
    pub construction: Vec<i64>,
    pub ks_statistic: f64,
    pub critical_value: f64,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.ks_statistic < self.critical_value
    }
}

/// Exact finite-n mean and variance of the scaled endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactTarget {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub config: EnsembleConfig,
    pub regime: Regime,
    /// Scaled endpoint per replica; its meaning depends on the kind.
    pub values: Vec<f64>,
    pub stats: SampleStats,
    pub exact: Option<ExactTarget>,
    pub limit_variance: Option<f64>,
    pub ks_statistic: Option<f64>,
    pub w: Option<WReport>,
    pub fluctuation: Option<FluctuationReport>,
    pub lil: Option<LilReport>,
    pub equivalence: Option<EquivalenceReport>,
}

impl EnsembleSummary {
    fn base(config: &EnsembleConfig, values: Vec<f64>) -> Result<Self> {
        Ok(Self {
            config: *config,
            regime: spectral_params(&config.params).regime,
            stats: SampleStats::from_values(&values)?,
            values,
            exact: None,
            limit_variance: None,
            ks_statistic: None,
            w: None,
            fluctuation: None,
            lil: None,
            equivalence: None,
        })
    }

    /// CSV `replica,value` of the scaled endpoints.
    pub fn write_values_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "replica,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{i},{v}")?;
        }
        Ok(())
    }
}

fn walk(config: &EnsembleConfig, replica: u64) -> Result<PairWalk> {
    PairWalk::new(&config.params, config.init, stream_rng(config.master_seed, replica))
}

fn endpoints(config: &EnsembleConfig, threads: Option<usize>) -> Result<Vec<(i64, i64)>> {
    par_replicas(config.replicas, threads, |i| {
        let s = walk(config, i)?.advance_to(config.n_steps as u64);
        Ok((s.s1, s.s2))
    })
}

pub fn run_ensemble(config: &EnsembleConfig, threads: Option<usize>) -> Result<EnsembleSummary> {
    config.validate()?;
    let n = config.n_steps as f64;
    let params = &config.params;
    let exact = moments_at(params, config.init, config.n_steps)?;
    match config.kind {
        ExperimentKind::Clt => {
            let ends = endpoints(config, threads)?;
            let values: Vec<f64> = ends.iter().map(|&(s1, _)| s1 as f64 / n.sqrt()).collect();
            let mut s = EnsembleSummary::base(config, values)?;
            let target = ExactTarget { mean: exact.m1 / n.sqrt(), variance: exact.var1() / n };
            s.exact = Some(target);
            s.limit_variance = predicted_variance(params, Walker::First).ok().map(|p| p.variance);
            s.ks_statistic = ks_against_gaussian(&s.values, target.mean, target.variance).ok();
            Ok(s)
        }
        ExperimentKind::Critical => {
            let spec = spectral_params(params);
            if spec.regime != Regime::Critical {
                return Err(Error::WrongRegime { required: "Critical", actual: spec.regime.to_string() });
            }
            let scale = (n * n.ln()).sqrt();
            let ends = endpoints(config, threads)?;
            let values: Vec<f64> = ends.iter().map(|&(s1, _)| (s1 as f64 - exact.m1) / scale).collect();
            let mut s = EnsembleSummary::base(config, values)?;
            let target = ExactTarget { mean: 0.0, variance: exact.var1() / (scale * scale) };
            s.exact = Some(target);
            s.limit_variance = predicted_variance(params, Walker::First).ok().map(|p| p.variance);
            s.ks_statistic = ks_against_gaussian(&s.values, 0.0, target.variance).ok();
            Ok(s)
        }
        ExperimentKind::Superdiffusive => {
            let w = estimate_w(config, threads)?;
            let scale = n.powf(w.abs_lambda);
            let mut s = EnsembleSummary::base(config, w.estimates.clone())?;
            s.exact = Some(ExactTarget { mean: exact.m1 / scale, variance: exact.var1() / (scale * scale) });
            s.w = Some(w);
            Ok(s)
        }
        ExperimentKind::Fluctuation => {
            let f = fluctuation_experiment(config, threads)?;
            let mut s = EnsembleSummary::base(config, f.fluctuations.clone())?;
            s.limit_variance = f.predicted_variance;
            s.fluctuation = Some(f);
            Ok(s)
        }
        ExperimentKind::Equivalence => {
            let e = construction_equivalence(
                params,
                config.init,
                config.n_steps,
                config.replicas,
                config.master_seed,
                threads,
            )?;
            let values: Vec<f64> = e.direct.iter().map(|&s1| s1 as f64 / n.sqrt()).collect();
            let mut s = EnsembleSummary::base(config, values)?;
            s.exact = Some(ExactTarget { mean: exact.m1 / n.sqrt(), variance: exact.var1() / n });
            s.limit_variance = predicted_variance(params, Walker::First).ok().map(|p| p.variance);
            s.equivalence = Some(e);
            Ok(s)
        }
        ExperimentKind::LilScan => {
            let l = lil_scan(config, threads)?;
            let mut s = EnsembleSummary::base(config, l.path_max.clone())?;
            s.lil = Some(l);
            Ok(s)
        }
    }
}

/// `S1_n / n^{|lambda|}` and the coupled gaps over the ensemble.
pub fn estimate_w(config: &EnsembleConfig, threads: Option<usize>) -> Result<WReport> {
    config.validate()?;
    let spec = spectral_params(&config.params);
    if spec.regime != Regime::Superdiffusive {
        return Err(Error::WrongRegime { required: "Superdiffusive", actual: spec.regime.to_string() });
    }
    let (a1, a2) = (config.params.alpha1(), config.params.alpha2());
    let ratio = a2.signum() * (a1 / a2).sqrt();
    let abs_lambda = spec.abs_lambda();
    let scale = (config.n_steps as f64).powf(abs_lambda);
    let ends = endpoints(config, threads)?;
    let estimates: Vec<f64> = ends.iter().map(|&(s1, _)| s1 as f64 / scale).collect();
    let coupled_gaps: Vec<f64> =
        ends.iter().map(|&(s1, s2)| (s1 as f64 - ratio * s2 as f64).abs() / scale).collect();
    let variance = SampleStats::from_values(&estimates)?.variance;
    let median_gap = median(&coupled_gaps);
    Ok(WReport { abs_lambda, estimates, coupled_gaps, variance, median_gap })
}

/// Fluctuations of `S1_n / n^{|lambda|}` around the proxy `S1_N / N^{|lambda|}`
/// obtained by continuing each path to the horizon `N`.
pub fn fluctuation_experiment(config: &EnsembleConfig, threads: Option<usize>) -> Result<FluctuationReport> {
    config.validate()?;
    let law = fluctuation_law(&config.params)?;
    let horizon = config.resolved_horizon();
    let required = HORIZON_FACTOR as usize * config.n_steps;
    if horizon < required {
        return Err(Error::InsufficientHorizon { horizon: horizon as u64, required: required as u64 });
    }
    let abs_lambda = spectral_params(&config.params).abs_lambda();
    let n = config.n_steps as f64;
    let big_n = horizon as f64;
    let pairs = par_replicas(config.replicas, threads, |i| {
        let mut w = walk(config, i)?;
        let at_n = w.advance_to(config.n_steps as u64).s1 as f64 / n.powf(abs_lambda);
        let proxy = w.advance_to(horizon as u64).s1 as f64 / big_n.powf(abs_lambda);
        Ok((n.powf(law.rate_exponent()) * (at_n - proxy), proxy))
    })?;
    let (fluctuations, w_proxy): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let stats = SampleStats::from_values(&fluctuations)?;
    let (predicted_variance, cf) = match law {
        FluctuationLaw::Gaussian { variance, .. } => (Some(variance), Vec::new()),
        FluctuationLaw::Mixture => {
            let r = fluctuations.len() as f64;
            let cf = CF_GRID
                .iter()
                .map(|&t| CfPoint {
                    t,
                    empirical_re: csum(&fluctuations.iter().map(|l| (t * l).cos()).collect::<Vec<_>>()) / r,
                    empirical_im: csum(&fluctuations.iter().map(|l| (t * l).sin()).collect::<Vec<_>>()) / r,
                    mixture: csum(&w_proxy.iter().map(|&w| law.conditional_cf(t, w)).collect::<Vec<_>>()) / r,
                })
                .collect();
            (None, cf)
        }
    };
    Ok(FluctuationReport { horizon, law, fluctuations, w_proxy, stats, predicted_variance, cf })
}

/// Path maxima of `|S1_k| / sqrt(2 k log log k)` over `k` in `[100, n]`.
pub fn lil_scan(config: &EnsembleConfig, threads: Option<usize>) -> Result<LilReport> {
    config.validate()?;
    if config.n_steps < 1000 {
        return Err(Error::TooSmall { name: "n_steps", min: 1000, value: config.n_steps as u64 });
    }
    let n = config.n_steps;
    let inv_norm: Vec<f64> = (LIL_SCAN_START..=n)
        .map(|k| {
            let k = k as f64;
            1.0 / (2.0 * k * k.ln().ln()).sqrt()
        })
        .collect();
    let rows = par_replicas(config.replicas, threads, |i| {
        let mut w = walk(config, i)?;
        let mut returned = false;
        let mut best: f64 = 0.0;
        for k in 2..=n {
            w.step();
            let s1 = w.state().s1;
            if k > RECURRENCE_AFTER && s1 == 0 {
                returned = true;
            }
            if k >= LIL_SCAN_START {
                best = best.max(s1.unsigned_abs() as f64 * inv_norm[k - LIL_SCAN_START]);
            }
        }
        Ok((best, returned))
    })?;
    let path_max: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let upper = lil_envelope(&config.params).ok().and_then(|e| e.upper);
    let fraction_exceeding =
        upper.map(|u| path_max.iter().filter(|&&m| m > u).count() as f64 / path_max.len() as f64);
    Ok(LilReport {
        start: LIL_SCAN_START,
        ensemble_max: path_max.iter().copied().fold(0.0, f64::max),
        path_max,
        upper,
        fraction_exceeding,
        returned_to_zero: rows.iter().filter(|r| r.1).count(),
    })
}

/// Direct-model endpoints against tree-construction endpoints.
pub fn construction_equivalence(
    params: &ReinforcementParams,
    init: InitialCondition,
    n: usize,
    replicas: usize,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<EquivalenceReport> {
    if params.p2() != 0.5 {
        return Err(Error::NotHalfPartner(params.p2()));
    }
    let config = EnsembleConfig::new(*params, init, n, replicas, master_seed, ExperimentKind::Equivalence);
    config.validate()?;
    let direct: Vec<i64> = endpoints(&config, threads)?.into_iter().map(|e| e.0).collect();
    let construction = par_replicas(replicas, threads, |i| {
        let mut rng = stream_rng(master_seed, CONSTRUCTION_STREAM_OFFSET + i);
        sample_construction(params, init, n, &mut rng)
    })?;
    let a: Vec<f64> = direct.iter().map(|&v| v as f64).collect();
    let b: Vec<f64> = construction.iter().map(|&v| v as f64).collect();
    Ok(EquivalenceReport {
        n,
        ks_statistic: ks_two_sample(&a, &b)?,
        critical_value: ks_two_sample_critical(replicas, replicas),
        direct,
        construction,
    })
}

/// Ensemble of the normalised square sum of the construction, together with
/// the per-tree conditional expectations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareSumReport {
    pub values: Vec<f64>,
    pub conditional_means: Vec<f64>,
    pub stats: SampleStats,
}

pub fn square_sum_statistic(
    p1: f64,
    n: usize,
    replicas: usize,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<SquareSumReport> {
    let rows = par_replicas(replicas, threads, |i| {
        let mut rng = stream_rng(master_seed, i);
        let profile = tree::grow(n, &mut rng)?;
        let bank = BiasedWalkBank::sample(p1, &profile, &mut rng);
        Ok((normalized_square_sum(&profile, &bank)?, conditional_expectation_given_tree(&profile, p1)))
    })?;
    let (values, conditional_means): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let stats = SampleStats::from_values(&values)?;
    Ok(SquareSumReport { values, conditional_means, stats })
}

/// `d_n^* / log2 n` for independent random recursive trees.
pub fn max_degree_ratios(n: usize, replicas: usize, master_seed: u64, threads: Option<usize>) -> Result<Vec<f64>> {
    let log2n = (n as f64).log2();
    par_replicas(replicas, threads, |i| {
        let mut rng = stream_rng(master_seed, i);
        Ok(f64::from(tree::grow(n, &mut rng)?.max_degree()) / log2n)
    })
}
