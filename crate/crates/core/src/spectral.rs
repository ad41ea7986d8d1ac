//! Spectral data of the drift and the deterministic weight schedules.
//!
//! The rescaled pair `z_n = (S1_n / n, S2_n / n)` follows a Robbins–Monro
//! recursion `z_{n+1} - z_n = (A z_n + noise) / (n + 1)` with
//!
//! ```text
//! A = | -1      alpha2 |
//!     |  alpha1 -1     |
//! ```
//!
//! whose eigenvalues are `-1 - lambda` and `-1 + lambda`, eigenvectors
//! `(1, -r)` and `(1, r)`. Here `lambda = sgn(alpha2) sqrt(alpha1 alpha2)` and
//! `r = sqrt(alpha1 / alpha2)` when the product is positive; both are purely
//! imaginary when it is negative. Projecting onto the eigenvectors turns the
//! walk into two scalar recursions driven by the schedules
//!
//! ```text
//! gamma_n(±lambda) = (1 ± lambda) / (n + 1)
//! beta_n(±lambda)  = prod_{k<n} (1 - gamma_k(±lambda))
//!                  = Γ(n ∓ lambda) / (Γ(1 ∓ lambda) Γ(n + 1))
//! ```
//!
//! and, when `lambda = ±1`, by `hat_beta_n = 2 / (n (n - 1))`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ReinforcementParams;
use crate::special::{gamma, gamma_complex, ln_gamma_ratio};

/// Tolerance on `alpha1 * alpha2 - 1/4` for the critical boundary when the
/// product is not exactly a quarter.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// One of the alphas is zero: that walker is a simple random walk.
    SrwCoupled,
    Diffusive,
    Critical,
    Superdiffusive,
    MixedSign,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::SrwCoupled => "SrwCoupled",
            Regime::Diffusive => "Diffusive",
            Regime::Critical => "Critical",
            Regime::Superdiffusive => "Superdiffusive",
            Regime::MixedSign => "MixedSign",
        };
        f.write_str(s)
    }
}

/// `lambda`, `r` and the regime. `lambda` and `r` are absent in the
/// `SrwCoupled` case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub lambda: Option<Complex64>,
    pub r: Option<Complex64>,
    pub regime: Regime,
    pub alpha1: f64,
    pub alpha2: f64,
}

/// `a * b == 1/4` in exact arithmetic (error-free product via FMA).
fn product_is_exactly_quarter(a: f64, b: f64) -> bool {
    let p = a * b;
    p == 0.25 && a.mul_add(b, -p) == 0.0
}

pub fn spectral_params(params: &ReinforcementParams) -> SpectralParams {
    let (a1, a2) = (params.alpha1(), params.alpha2());
    let product = a1 * a2;
    if a1 == 0.0 || a2 == 0.0 {
        return SpectralParams { lambda: None, r: None, regime: Regime::SrwCoupled, alpha1: a1, alpha2: a2 };
    }
    let sign = a2.signum();
    let (lambda, r, regime) = if product > 0.0 {
        let critical =
            product_is_exactly_quarter(a1, a2) || (product - 0.25).abs() <= CRITICAL_TOLERANCE;
        let regime = if critical {
            Regime::Critical
        } else if product < 0.25 {
            Regime::Diffusive
        } else {
            Regime::Superdiffusive
        };
        (Complex64::new(sign * product.sqrt(), 0.0), Complex64::new((a1 / a2).sqrt(), 0.0), regime)
    } else {
        (
            Complex64::new(0.0, sign * (-product).sqrt()),
            Complex64::new(0.0, (-a1 / a2).sqrt()),
            Regime::MixedSign,
        )
    };
    SpectralParams { lambda: Some(lambda), r: Some(r), regime, alpha1: a1, alpha2: a2 }
}

impl SpectralParams {
    fn require(&self) -> Result<(Complex64, Complex64)> {
        match (self.lambda, self.r) {
            (Some(l), Some(r)) => Ok((l, r)),
            _ => Err(Error::WrongRegime { required: "alpha1 * alpha2 != 0", actual: self.regime.to_string() }),
        }
    }

    pub fn lambda_value(&self) -> Result<Complex64> {
        self.require().map(|(l, _)| l)
    }

    pub fn r_value(&self) -> Result<Complex64> {
        self.require().map(|(_, r)| r)
    }

    /// `|lambda|`, zero in the `SrwCoupled` case.
    pub fn abs_lambda(&self) -> f64 {
        self.lambda.map_or(0.0, |l| l.norm())
    }

    pub fn is_real(&self) -> bool {
        self.lambda.is_some_and(|l| l.im == 0.0)
    }

    /// `alpha1 = alpha2 = ±1`, where the hat-beta schedule replaces beta.
    pub fn is_unit(&self) -> bool {
        self.alpha1 == self.alpha2 && self.alpha1.abs() == 1.0
    }
}

/// Which of the two exponents `+lambda` / `-lambda` a schedule uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn apply(self, lambda: Complex64) -> Complex64 {
        match self {
            Branch::Plus => lambda,
            Branch::Minus => -lambda,
        }
    }
}

/// Tabulated `gamma_n(mu)` and `beta_n(mu)` for `n = 1..=n_max`, built by
/// the running product.
#[derive(Debug, Clone)]
pub struct WeightSchedule {
    pub exponent: Complex64,
    gammas: Vec<Complex64>,
    betas: Vec<Complex64>,
}

impl WeightSchedule {
    pub fn new(lambda: Complex64, branch: Branch, n_max: usize) -> Self {
        Self::for_exponent(branch.apply(lambda), n_max)
    }

    pub fn for_exponent(exponent: Complex64, n_max: usize) -> Self {
        let one_plus = 1.0 + exponent;
        let gammas: Vec<Complex64> = (1..=n_max).map(|n| one_plus / (n as f64 + 1.0)).collect();
        let mut betas = Vec::with_capacity(n_max);
        let mut b = Complex64::new(1.0, 0.0);
        for n in 1..=n_max {
            betas.push(b);
            b *= 1.0 - gammas[n - 1];
        }
        Self { exponent, gammas, betas }
    }

    pub fn n_max(&self) -> usize {
        self.betas.len()
    }

    /// `gamma_n`, 1-based.
    pub fn gamma(&self, n: usize) -> Complex64 {
        self.gammas[n - 1]
    }

    /// `beta_n`, 1-based, with `beta_1 = 1`.
    pub fn beta(&self, n: usize) -> Complex64 {
        self.betas[n - 1]
    }
}

/// `hat_beta_n = 2 / (n (n - 1))` for `n >= 2`.
pub fn hat_beta(n: usize) -> f64 {
    debug_assert!(n >= 2);
    2.0 / (n as f64 * (n as f64 - 1.0))
}

/// `prod_{k=1}^{n-1} (1 - (1 + mu) / (k + 1))`.
pub fn beta_weight_product(n: usize, exponent: Complex64) -> Complex64 {
    let one_plus = 1.0 + exponent;
    (1..n).fold(Complex64::new(1.0, 0.0), |b, k| b * (1.0 - one_plus / (k as f64 + 1.0)))
}

/// `Γ(n - mu) / (Γ(1 - mu) Γ(n + 1))` for real `mu < 1`, through log-Gamma
/// differences so that large `n` neither overflows nor loses precision.
pub fn beta_weight_gamma(n: usize, exponent: f64) -> f64 {
    debug_assert!(exponent < 1.0);
    let n = n as f64;
    ln_gamma_ratio(n - exponent, n + 1.0).exp() / gamma(1.0 - exponent)
}

/// `beta_n(mu)`: log-Gamma for real `mu < 1`, running product otherwise.
pub fn beta_weight(n: usize, exponent: Complex64) -> Complex64 {
    if n == 1 {
        return Complex64::new(1.0, 0.0);
    }
    if exponent.im == 0.0 && exponent.re < 1.0 {
        Complex64::new(beta_weight_gamma(n, exponent.re), 0.0)
    } else {
        beta_weight_product(n, exponent)
    }
}

/// Limit of `beta_n(mu) n^{1 + mu}`, namely `1 / Γ(1 - mu)`.
pub fn beta_asymptote(exponent: Complex64) -> Complex64 {
    1.0 / gamma_complex(1.0 - exponent)
}

/// Both sides of the Gamma-ratio summation identity for imaginary `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaRatioSum {
    pub n: usize,
    /// `Γ^2(n + 1) / ((1 - 2 mu) n Γ^2(n + mu))`
    pub closed_form: Complex64,
    /// `sum_{j=2}^n Γ^2(j) / Γ^2(j + mu)`
    pub direct_sum: Complex64,
    /// `|direct_sum - closed_form|`
    pub remainder: f64,
    /// Rigorous bound `(|R_1|^2 + |lambda|^2 max_j |R_j|^2 H_{n-1}) / |1 - 2 mu|`
    /// with `R_j = Γ(j) / Γ(j + mu)`; it grows like `log n`.
    pub envelope: f64,
    /// Coefficient of `H_{n-1}` in `envelope`, which bounds the growth rate
    /// of the remainder per unit of `log n`.
    pub log_slope_bound: f64,
}

/// Evaluates `sum_{j=2}^n Γ^2(j)/Γ^2(j ± lambda)` and its leading term.
///
/// `R_j = Γ(j)/Γ(j + mu)` is advanced by `R_{j+1} = R_j j / (j + mu)` from
/// `R_1 = 1 / Γ(1 + mu)`. Telescoping `j R_j^2 - (j-1) R_{j-1}^2` gives the
/// exact remainder `(-R_1^2 + lambda^2 sum_j R_j^2 / (j - 1)) / (1 - 2 mu)`,
/// from which the envelope follows.
pub fn gamma_ratio_sum(spec: &SpectralParams, n: usize, branch: Branch) -> Result<GammaRatioSum> {
    if spec.regime != Regime::MixedSign {
        return Err(Error::WrongRegime { required: "MixedSign (imaginary lambda)", actual: spec.regime.to_string() });
    }
    if n < 2 {
        return Err(Error::TooSmall { name: "n", min: 2, value: n as u64 });
    }
    let lambda = spec.lambda_value()?;
    let mu = branch.apply(lambda);
    let r1 = 1.0 / gamma_complex(1.0 + mu);
    let mut r = r1;
    let mut direct = Complex64::new(0.0, 0.0);
    let mut max_sq = r1.norm_sqr();
    let mut harmonic = 0.0;
    for j in 1..n {
        r *= j as f64 / (j as f64 + mu);
        // r is now R_{j+1}
        direct += r * r;
        max_sq = max_sq.max(r.norm_sqr());
        harmonic += 1.0 / j as f64;
    }
    let denom = 1.0 - 2.0 * mu;
    let closed = n as f64 * r * r / denom;
    let slope = lambda.norm_sqr() * max_sq / denom.norm();
    Ok(GammaRatioSum {
        n,
        closed_form: closed,
        direct_sum: direct,
        remainder: (direct - closed).norm(),
        envelope: r1.norm_sqr() / denom.norm() + slope * harmonic,
        log_slope_bound: slope,
    })
}
