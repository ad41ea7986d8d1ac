//! Gamma-function helpers.
//!
//! `ln_gamma_ratio` evaluates `ln Γ(a) - ln Γ(b)` without forming the two
//! large logarithms separately, which keeps full relative accuracy for
//! `a, b ~ 10^6`. The complex Lanczos evaluation is only used at moderate
//! arguments, where a single Gamma value of a complex point is required.

use std::f64::consts::PI;

use num_complex::Complex64;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Arguments below this are shifted up by the recurrence before the
/// Stirling expansion is applied.
const STIRLING_MIN: f64 = 12.0;

/// Stirling correction `ln Γ(z) - [(z - 1/2) ln z - z + ln(2π)/2]`.
fn stirling_tail(z: f64) -> f64 {
    let w = 1.0 / (z * z);
    (1.0 / 12.0 - w * (1.0 / 360.0 - w * (1.0 / 1260.0 - w * (1.0 / 1680.0 - w / 1188.0)))) / z
}

/// `ln Γ(a) - ln Γ(b)` for `a, b > 0`.
pub fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    let mut a = a;
    let mut b = b;
    let mut shift = 0.0;
    // ln Γ(x) = ln Γ(x + 1) - ln x
    while a.min(b) < STIRLING_MIN {
        shift -= (a / b).ln();
        a += 1.0;
        b += 1.0;
    }
    let delta = a - b;
    let main = (b - 0.5) * (delta / b).ln_1p() + delta * a.ln() - delta;
    main + stirling_tail(a) - stirling_tail(b) + shift
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(z)` for complex `z` (Lanczos, g = 7). The imaginary part is not
/// reduced to the principal branch, so only `exp` of the result is
/// meaningful.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection
        let pi = Complex64::new(PI, 0.0);
        return pi.ln() - (pi * z).sin().ln() - ln_gamma_complex(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

pub fn gamma_complex(z: Complex64) -> Complex64 {
    ln_gamma_complex(z).exp()
}
