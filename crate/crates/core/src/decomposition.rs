//! Eigen-coordinates of a path and their martingale structure.
//!
//! `x_n = (S1_n - r S2_n) / n` and `y_n = (S1_n + r S2_n) / n` satisfy
//!
//! ```text
//! x_{n+1} = (1 - gamma_n(lambda)) x_n + gamma_n(lambda) eps^x_{n+1}
//! y_{n+1} = (1 - gamma_n(-lambda)) y_n + gamma_n(-lambda) eps^y_{n+1}
//! ```
//!
//! with martingale differences `eps^x`, `eps^y`, so
//! `x_n = beta_n(lambda) (x_1 + M^x_n)` where `M^x_n = sum_j gamma_j / beta_{j+1} eps^x_{j+1}`.
//! When `alpha1 = alpha2 = ±1` one coordinate is itself a bounded martingale
//! and the other is carried by `hat_beta_n`.
//!
//! Everything is computed in complex arithmetic so real and imaginary
//! `lambda` share one code path.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PairState, ReinforcementParams, Trajectory};
use crate::spectral::{hat_beta, spectral_params, Branch, SpectralParams, WeightSchedule};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Eigen-coordinates along one path. Vectors of positions are indexed by
/// `n - 1`; `eps_*[j - 1]` holds `eps_{j+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XYPath {
    pub lambda: Complex64,
    pub r: Complex64,
    pub xs: Vec<Complex64>,
    pub ys: Vec<Complex64>,
    pub eps_x: Vec<Complex64>,
    pub eps_y: Vec<Complex64>,
    /// `M^x_n`, with `M^x_1 = 0`.
    pub mart_x: Vec<Complex64>,
    pub mart_y: Vec<Complex64>,
    /// `beta_n(lambda) (x_1 + M^x_n)` with explicit weights.
    pub closed_x: Vec<Complex64>,
    pub closed_y: Vec<Complex64>,
}

fn coordinates(traj: &Trajectory, r: Complex64) -> (Vec<Complex64>, Vec<Complex64>) {
    traj.positions1
        .iter()
        .zip(&traj.positions2)
        .enumerate()
        .map(|(i, (&s1, &s2))| {
            let n = (i + 1) as f64;
            ((s1 as f64 - r * s2 as f64) / n, (s1 as f64 + r * s2 as f64) / n)
        })
        .unzip()
}

/// `sum_j gamma_j / beta_{j+1} eps_{j+1}` as a running sequence starting at 0.
fn weighted_martingale(schedule: &WeightSchedule, eps: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(eps.len() + 1);
    let mut m = c(0.0);
    out.push(m);
    for (j, &e) in (1..).zip(eps) {
        m += schedule.gamma(j) / schedule.beta(j + 1) * e;
        out.push(m);
    }
    out
}

pub fn xy_decompose(traj: &Trajectory, spec: &SpectralParams) -> Result<XYPath> {
    let (lambda, r) = (spec.lambda_value()?, spec.r_value()?);
    if spec.is_unit() {
        return Err(Error::WrongRegime { required: "lambda != ±1", actual: spec.regime.to_string() });
    }
    let n = traj.len();
    let (xs, ys) = coordinates(traj, r);
    let mut eps_x = Vec::with_capacity(n.saturating_sub(1));
    let mut eps_y = Vec::with_capacity(n.saturating_sub(1));
    for j in 1..n {
        let (a, b) = (f64::from(traj.steps1[j]), f64::from(traj.steps2[j]));
        eps_x.push((a - r * b + lambda * xs[j - 1]) / (1.0 + lambda));
        eps_y.push((a + r * b - lambda * ys[j - 1]) / (1.0 - lambda));
    }
    let plus = WeightSchedule::new(lambda, Branch::Plus, n);
    let minus = WeightSchedule::new(lambda, Branch::Minus, n);
    let mart_x = weighted_martingale(&plus, &eps_x);
    let mart_y = weighted_martingale(&minus, &eps_y);
    let closed_x = (1..=n).map(|k| plus.beta(k) * (xs[0] + mart_x[k - 1])).collect();
    let closed_y = (1..=n).map(|k| minus.beta(k) * (ys[0] + mart_y[k - 1])).collect();
    Ok(XYPath { lambda, r, xs, ys, eps_x, eps_y, mart_x, mart_y, closed_x, closed_y })
}

impl XYPath {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// `(S1_n, S2_n)` recovered from `x_n` and `y_n`.
    pub fn reconstruct(&self, n: usize) -> (Complex64, Complex64) {
        let (x, y) = (self.xs[n - 1], self.ys[n - 1]);
        let nf = n as f64;
        (nf / 2.0 * (x + y), nf / (2.0 * self.r) * (y - x))
    }

    /// Largest `|closed - direct| / max(|direct|, 1/n)` over both coordinates.
    pub fn max_closed_form_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.len() {
            let floor = 1.0 / (k + 1) as f64;
            for (closed, direct) in [(self.closed_x[k], self.xs[k]), (self.closed_y[k], self.ys[k])] {
                worst = worst.max((closed - direct).norm() / direct.norm().max(floor));
            }
        }
        worst
    }

    /// Largest deviation of the one-step recursion
    /// `x_{n+1} - x_n = gamma_n(lambda) (eps^x_{n+1} - x_n)` and its `y`
    /// counterpart, relative to `1/n`.
    pub fn max_recursion_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 1..self.len() {
            let nf = n as f64;
            let gx = (1.0 + self.lambda) / (nf + 1.0);
            let gy = (1.0 - self.lambda) / (nf + 1.0);
            let dx = self.xs[n] - self.xs[n - 1] - gx * (self.eps_x[n - 1] - self.xs[n - 1]);
            let dy = self.ys[n] - self.ys[n - 1] - gy * (self.eps_y[n - 1] - self.ys[n - 1]);
            worst = worst.max(dx.norm().max(dy.norm()) * nf);
        }
        worst
    }
}

/// Largest `|reconstructed - actual|` over the path.
pub fn max_reconstruction_error(path: &XYPath, traj: &Trajectory) -> f64 {
    let mut worst: f64 = 0.0;
    for n in 1..=path.len() {
        let (s1, s2) = path.reconstruct(n);
        worst = worst
            .max((s1 - traj.positions1[n - 1] as f64).norm())
            .max((s2 - traj.positions2[n - 1] as f64).norm());
    }
    worst
}

/// `E[(eps^x)^2 | F_j]`, `E[(eps^y)^2 | F_j]` and `E[eps^x eps^y | F_j]` at a
/// state `(j, S1_j, S2_j)`.
pub fn conditional_second_moments(
    state: PairState,
    spec: &SpectralParams,
    params: &ReinforcementParams,
) -> Result<(Complex64, Complex64, Complex64)> {
    if state.n == 0 {
        return Err(Error::ZeroTime);
    }
    let (lambda, r) = (spec.lambda_value()?, spec.r_value()?);
    let (a1, a2) = (params.alpha1(), params.alpha2());
    let j = state.n as f64;
    let (s1, s2) = (state.s1 as f64, state.s2 as f64);
    let x = (s1 - r * s2) / j;
    let y = (s1 + r * s2) / j;
    let ratio = a1 / a2;
    let prod = a1 * a2;
    let cross_pos = 2.0 * r * prod * s1 * s2 / (j * j);
    let var_x = (1.0 + ratio - prod * x * x - cross_pos) / ((1.0 + lambda) * (1.0 + lambda));
    let var_y = (1.0 + ratio - prod * y * y + cross_pos) / ((1.0 - lambda) * (1.0 - lambda));
    let cross = (1.0 - ratio + prod * x * y) / (1.0 - prod);
    Ok((var_x, var_y, cross))
}

/// Path data for `alpha1 = alpha2 = ±1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitLambdaPath {
    pub alpha: f64,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// The coordinate that is a bounded martingale: `y` for `alpha = 1`,
    /// `x` for `alpha = -1`.
    pub martingale: Vec<f64>,
    /// The other coordinate, read directly from the path.
    pub driven: Vec<f64>,
    /// `eps_{j+1}` of the driven coordinate, indexed by `j - 1`.
    pub eps: Vec<f64>,
    /// `hat_beta_n (driven_2 + sum_{j=2}^{n-1} j eps_{j+1})` for `n >= 2`,
    /// indexed by `n - 2`.
    pub closed: Vec<f64>,
}

pub fn lambda_one_path(traj: &Trajectory) -> Result<UnitLambdaPath> {
    let spec = spectral_params(&traj.params);
    if !spec.is_unit() {
        return Err(Error::WrongRegime { required: "alpha1 = alpha2 = ±1", actual: spec.regime.to_string() });
    }
    traj.init.validate_for(&traj.params)?;
    let alpha = traj.params.alpha1();
    let n = traj.len();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let k = (i + 1) as f64;
        let (s1, s2) = (traj.positions1[i] as f64, traj.positions2[i] as f64);
        xs.push((s1 - s2) / k);
        ys.push((s1 + s2) / k);
    }
    // alpha = 1: lambda = 1, r = 1 and x is driven by (X1 - X2 + x) / 2.
    // alpha = -1: lambda = -1, r = 1 and y is driven by (X1 + X2 + y) / 2.
    let (martingale, driven, sign) = if alpha > 0.0 { (&ys, &xs, -1.0) } else { (&xs, &ys, 1.0) };
    let eps: Vec<f64> = (1..n)
        .map(|j| (f64::from(traj.steps1[j]) + sign * f64::from(traj.steps2[j]) + driven[j - 1]) / 2.0)
        .collect();
    let start = driven.get(1).copied().unwrap_or(0.0);
    let mut closed = Vec::with_capacity(n.saturating_sub(1));
    let mut sum = 0.0;
    for k in 2..=n {
        if k > 2 {
            sum += (k - 1) as f64 * eps[k - 2];
        }
        closed.push(hat_beta(k) * (start + sum));
    }
    let (martingale, driven) = (martingale.clone(), driven.clone());
    Ok(UnitLambdaPath { alpha, xs, ys, martingale, driven, eps, closed })
}

impl UnitLambdaPath {
    /// Largest `|closed - direct| / max(|direct|, 1/n)` for `n >= 2`.
    pub fn max_closed_form_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, &cl) in self.closed.iter().enumerate() {
            let n = i + 2;
            let direct = self.driven[n - 1];
            worst = worst.max((cl - direct).abs() / direct.abs().max(1.0 / n as f64));
        }
        worst
    }
}

/// z-scores of the path-wise sums `sum_j eps_{j+1}` across an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingaleZScores {
    pub eps_x_re: f64,
    pub eps_x_im: f64,
    pub eps_y_re: f64,
    pub eps_y_im: f64,
}

impl MartingaleZScores {
    pub fn max_abs(&self) -> f64 {
        [self.eps_x_re, self.eps_x_im, self.eps_y_re, self.eps_y_im].iter().fold(0.0, |m, z| m.max(z.abs()))
    }
}

/// Residual report over a set of paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub paths: usize,
    pub max_reconstruction_err: f64,
    pub max_closed_form_err: f64,
    pub martingale_z_scores: MartingaleZScores,
}

/// Mean over paths divided by its standard error; zero when the sample has
/// no spread.
fn z_score(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return 0.0;
    }
    mean / (var / n).sqrt()
}

pub fn decomposition_report(trajs: &[Trajectory]) -> Result<DecompositionReport> {
    let mut recon: f64 = 0.0;
    let mut closed: f64 = 0.0;
    let mut sums: [Vec<f64>; 4] = Default::default();
    for t in trajs {
        let spec = spectral_params(&t.params);
        if spec.is_unit() {
            let p = lambda_one_path(t)?;
            closed = closed.max(p.max_closed_form_error());
            let total: f64 = p.eps.iter().sum();
            sums[0].push(total);
            sums[2].push(p.martingale.last().unwrap() - p.martingale[0]);
            for n in 1..=t.len() {
                let k = n as f64;
                let s1 = k / 2.0 * (p.xs[n - 1] + p.ys[n - 1]);
                let s2 = k / 2.0 * (p.ys[n - 1] - p.xs[n - 1]);
                recon = recon
                    .max((s1 - t.positions1[n - 1] as f64).abs())
                    .max((s2 - t.positions2[n - 1] as f64).abs());
            }
        } else {
            let p = xy_decompose(t, &spec)?;
            recon = recon.max(max_reconstruction_error(&p, t));
            closed = closed.max(p.max_closed_form_error());
            let ex: Complex64 = p.eps_x.iter().sum();
            let ey: Complex64 = p.eps_y.iter().sum();
            sums[0].push(ex.re);
            sums[1].push(ex.im);
            sums[2].push(ey.re);
            sums[3].push(ey.im);
        }
    }
    Ok(DecompositionReport {
        paths: trajs.len(),
        max_reconstruction_err: recon,
        max_closed_form_err: closed,
        martingale_z_scores: MartingaleZScores {
            eps_x_re: z_score(&sums[0]),
            eps_x_im: z_score(&sums[1]),
            eps_y_re: z_score(&sums[2]),
            eps_y_im: z_score(&sums[3]),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate_pair, InitialCondition};
    use crate::rng::SeedRecord;

    fn params(a1: f64, a2: f64) -> ReinforcementParams {
        ReinforcementParams::from_alphas(a1, a2).unwrap()
    }

    fn path(a1: f64, a2: f64, n: usize, seed: u64) -> (Trajectory, SpectralParams) {
        let p = params(a1, a2);
        let t = simulate_pair(&p, InitialCondition::default(), n, SeedRecord::new(seed, 0)).unwrap();
        (t, spectral_params(&p))
    }

    #[test]
    fn first_coordinates() {
        let (t, s) = path(0.4, 0.4, 10, 1);
        let p = xy_decompose(&t, &s).unwrap();
        assert_eq!(p.xs[0], c(0.0));
        assert_eq!(p.ys[0], c(2.0));
        for k in 0..t.len() {
            let expected = (t.positions1[k] - t.positions2[k]) as f64 / (k + 1) as f64;
            assert!((p.xs[k] - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn identities_in_each_regime() {
        for &(a1, a2) in &[(0.3, 0.3), (0.5, 0.5), (0.9, 0.9), (-0.7, -0.4), (0.6, -0.6), (-0.3, 0.8)] {
            let (t, s) = path(a1, a2, 5000, 7);
            let p = xy_decompose(&t, &s).unwrap();
            assert!(max_reconstruction_error(&p, &t) < 1e-9);
            assert!(p.max_closed_form_error() < 1e-9, "({a1}, {a2}): {}", p.max_closed_form_error());
            assert!(p.max_recursion_error() < 1e-9);
            if !s.is_real() {
                for k in 0..p.len() {
                    assert!((p.ys[k] - p.xs[k].conj()).norm() < 1e-12);
                }
            } else {
                assert!(p.xs.iter().chain(&p.closed_x).all(|z| z.im.abs() < 1e-9));
            }
        }
    }

    #[test]
    fn unit_lambda_is_rejected_by_the_general_path() {
        let p = params(1.0, 1.0);
        let t = simulate_pair(&p, InitialCondition::new(1, -1).unwrap(), 10, SeedRecord::new(0, 0)).unwrap();
        assert!(xy_decompose(&t, &spectral_params(&p)).is_err());
        let (t, s) = path(0.0, 0.5, 10, 0);
        assert!(xy_decompose(&t, &s).is_err());
    }

    #[test]
    fn conditional_moment_examples() {
        let p = params(0.5, 0.5);
        let s = spectral_params(&p);
        let (vx, _, _) = conditional_second_moments(PairState::new(4, 4, 4).unwrap(), &s, &p).unwrap();
        assert!((vx - c(2.0 / 3.0)).norm() < 1e-15);
        for &(a1, a2) in &[(0.3, 0.6), (0.6, -0.6)] {
            let p = params(a1, a2);
            let s = spectral_params(&p);
            let (vx, vy, _) = conditional_second_moments(PairState::new(6, 0, 0).unwrap(), &s, &p).unwrap();
            let l = s.lambda.unwrap();
            assert!((vx * (1.0 + l) * (1.0 + l) - c(1.0 + a1 / a2)).norm() < 1e-14);
            assert!((vy * (1.0 - l) * (1.0 - l) - c(1.0 + a1 / a2)).norm() < 1e-14);
        }
    }

    #[test]
    fn conditional_moments_match_four_outcome_law() {
        for &(a1, a2) in &[(0.5, 0.5), (0.3, 0.8), (-0.6, 0.4), (0.9, 0.7), (-0.2, -0.9)] {
            let p = params(a1, a2);
            let s = spectral_params(&p);
            let (l, r) = (s.lambda.unwrap(), s.r.unwrap());
            for &(n, s1, s2) in &[(1, 1, 1), (5, 3, -1), (8, -4, 6), (7, 7, -7)] {
                let state = PairState::new(n, s1, s2).unwrap();
                let (up1, up2) = crate::model::step_probabilities(state, &p).unwrap();
                let j = n as f64;
                let x = (s1 as f64 - r * s2 as f64) / j;
                let y = (s1 as f64 + r * s2 as f64) / j;
                let (mut exx, mut eyy, mut exy, mut ex) = (c(0.0), c(0.0), c(0.0), c(0.0));
                for (a, pa) in [(1.0, up1), (-1.0, 1.0 - up1)] {
                    for (b, pb) in [(1.0, up2), (-1.0, 1.0 - up2)] {
                        let w = pa * pb;
                        let e1 = (a - r * b + l * x) / (1.0 + l);
                        let e2 = (a + r * b - l * y) / (1.0 - l);
                        exx += w * e1 * e1;
                        eyy += w * e2 * e2;
                        exy += w * e1 * e2;
                        ex += w * e1;
                    }
                }
                let (vx, vy, cr) = conditional_second_moments(state, &s, &p).unwrap();
                assert!(ex.norm() < 1e-14);
                assert!((vx - exx).norm() < 1e-12, "{a1} {a2} {n} {s1} {s2}");
                assert!((vy - eyy).norm() < 1e-12);
                assert!((cr - exy).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_lambda_paths() {
        for &(alpha, init) in &[(1.0, (1, -1)), (-1.0, (1, 1)), (-1.0, (-1, -1))] {
            let p = params(alpha, alpha);
            let t = simulate_pair(&p, InitialCondition::new(init.0, init.1).unwrap(), 5000, SeedRecord::new(3, 1))
                .unwrap();
            let u = lambda_one_path(&t).unwrap();
            assert!(u.max_closed_form_error() < 1e-9);
            assert!(u.martingale.iter().all(|v| v.abs() <= 2.0));
        }
        let (t, _) = path(0.3, 0.3, 10, 0);
        assert!(lambda_one_path(&t).is_err());
    }

    #[test]
    fn report_over_paths() {
        let p = params(0.3, 0.6);
        let trajs: Vec<Trajectory> = (0..50)
            .map(|i| simulate_pair(&p, InitialCondition::default(), 500, SeedRecord::new(9, i)).unwrap())
            .collect();
        let rep = decomposition_report(&trajs).unwrap();
        assert_eq!(rep.paths, 50);
        assert!(rep.max_reconstruction_err < 1e-9);
        assert!(rep.max_closed_form_err < 1e-9);
        assert!(rep.martingale_z_scores.max_abs() < 5.0);
    }
}
