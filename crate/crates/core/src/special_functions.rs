//! Spherical Bessel functions of the first kind for complex arguments.
//!
//! The modal solution operators of the conductor need j_n(κ) and j'_n(κ) at
//! the complex wavenumber κ (κ² = iωμσ), for orders up to the modal truncation
//! of a run. Upward recurrence is unstable as soon as n exceeds |z|, so the
//! table is built by downward (Miller-type) recurrence from a padded start
//! order and normalised against the closed forms of j_0 and j_1. For very
//! small arguments the recurrence normalisation degrades and the ascending
//! power series is used instead.
//!
//! For large orders the values themselves underflow (j_n(z) ~ z^n/(2n+1)!!);
//! [`sph_bessel_log_derivatives`] provides the ratios ρ_n = z j'_n(z)/j_n(z)
//! through a downward ratio recurrence that never leaves the representable
//! range. All eigenvalue formulas that must stay meaningful for n in the
//! thousands are expressed in terms of ρ_n.

use num_complex::Complex64;

use crate::error::CoreError;
use crate::num_util::stable_div;

/// Arguments below this magnitude are evaluated by the ascending series.
const SMALL_ARG_CUTOFF: f64 = 1e-2;

/// Relative truncation threshold of the ascending series.
const SERIES_EPS: f64 = 1e-18;

/// Rescaling guard for the downward recurrence (values grow toward n = 0).
const RESCALE_THRESHOLD: f64 = 1e250;
const RESCALE_FACTOR: f64 = 9.332636185032189e-302; // 2^(-1000), exact in binary64

/// Values j_0..j_N and derivatives j'_0..j'_N at a fixed complex argument.
///
/// Immutable once built; cheap to share between workers.
#[derive(Debug, Clone)]
pub struct BesselTable {
    z: Complex64,
    j: Vec<Complex64>,
    jp: Vec<Complex64>,
}

impl BesselTable {
    /// Argument the table was built at.
    pub fn argument(&self) -> Complex64 {
        self.z
    }

    /// Largest tabulated order.
    pub fn max_order(&self) -> usize {
        self.j.len() - 1
    }

    /// j_n(z).
    pub fn j(&self, n: usize) -> Complex64 {
        self.j[n]
    }

    /// j'_n(z).
    pub fn jp(&self, n: usize) -> Complex64 {
        self.jp[n]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.j
    }

    pub fn derivatives(&self) -> &[Complex64] {
        &self.jp
    }
}

/// Start-order padding for the downward passes.
fn miller_pad(z: Complex64) -> usize {
    20usize.max(z.norm().ceil() as usize + 20)
}

/// Ascending series of j_n(z) = z^n/(2n+1)!! Σ_k (-z²/2)^k / (k! (2n+3)(2n+5)…(2n+2k+1)).
///
/// All series coefficients beyond the prefactor have the same sign pattern in
/// (-z²/2)^k, and for |z| ≤ 1 the terms decay immediately; truncation at
/// relative size `SERIES_EPS` keeps the tail below double rounding.
fn series_j(z: Complex64, n: usize) -> Complex64 {
    let mut prefactor = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        prefactor *= z / (2 * k + 1) as f64;
    }
    let w = -0.5 * z * z;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 0..500usize {
        term *= w / ((k + 1) as f64 * (2 * n + 2 * k + 3) as f64);
        sum += term;
        if term.norm() <= SERIES_EPS * sum.norm() {
            break;
        }
    }
    prefactor * sum
}

fn closed_j0(z: Complex64) -> Complex64 {
    z.sin() / z
}

fn closed_j1(z: Complex64) -> Complex64 {
    z.sin() / (z * z) - z.cos() / z
}

/// Tabulates j_0..j_N and j'_0..j'_N at a complex argument.
///
/// The table at z = 0 is defined by the series limits (j_0 = 1, higher orders
/// zero, j'_1 = 1/3). Derivatives come from the recurrence identity
/// j'_n = j_{n-1} - (n+1)/z · j_n, reusing the validated values.
///
/// Entries whose true magnitude lies below the double-precision range
/// underflow to zero; see [`sph_bessel_log_derivatives`] for the
/// representation that survives arbitrarily large orders.
pub fn sph_bessel_table(z: Complex64, n_max: usize) -> Result<BesselTable, CoreError> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(CoreError::NonFiniteArgument("spherical Bessel argument"));
    }

    if z == Complex64::new(0.0, 0.0) {
        let mut j = vec![Complex64::new(0.0, 0.0); n_max + 1];
        let mut jp = vec![Complex64::new(0.0, 0.0); n_max + 1];
        j[0] = Complex64::new(1.0, 0.0);
        if n_max >= 1 {
            jp[1] = Complex64::new(1.0 / 3.0, 0.0);
        }
        return Ok(BesselTable { z, j, jp });
    }

    let j = if z.norm() < SMALL_ARG_CUTOFF {
        (0..=n_max).map(|n| series_j(z, n)).collect::<Vec<_>>()
    } else if n_max == 0 {
        vec![closed_j0(z)]
    } else {
        miller_downward(z, n_max)
    };

    let mut jp = vec![Complex64::new(0.0, 0.0); n_max + 1];
    jp[0] = if n_max >= 1 {
        -j[1]
    } else {
        -closed_j1(z)
    };
    for n in 1..=n_max {
        jp[n] = j[n - 1] - ((n + 1) as f64 / z) * j[n];
    }

    Ok(BesselTable { z, j, jp })
}

/// Downward recurrence j_{k-1} = (2k+1)/z · j_k - j_{k+1} from a padded start
/// order, with in-flight rescaling (the raw sequence grows by ~(2k+1)/|z| per
/// step and would overflow long before reaching k = 0 for large tables).
fn miller_downward(z: Complex64, n_max: usize) -> Vec<Complex64> {
    let start = n_max + miller_pad(z);
    let inv_z = Complex64::new(1.0, 0.0) / z;

    let mut raw = vec![Complex64::new(0.0, 0.0); n_max + 1];
    let mut above = Complex64::new(0.0, 0.0); // order k+1
    let mut current = Complex64::new(1.0, 0.0); // order k
    for k in (1..=start).rev() {
        if k <= n_max {
            raw[k] = current;
        }
        let below = (2 * k + 1) as f64 * inv_z * current - above;
        above = current;
        current = below;
        if current.re.abs() > RESCALE_THRESHOLD || current.im.abs() > RESCALE_THRESHOLD {
            above *= RESCALE_FACTOR;
            current *= RESCALE_FACTOR;
            for entry in raw.iter_mut() {
                *entry *= RESCALE_FACTOR;
            }
        }
    }
    raw[0] = current;
    let raw_j1 = above;

    // Normalise against whichever closed-form anchor is larger; j_0 alone is
    // ill-conditioned near the real zeros of sin z.
    let j0 = closed_j0(z);
    let j1 = closed_j1(z);
    let factor = if j0.norm() >= j1.norm() {
        stable_div(j0, raw[0])
    } else {
        stable_div(j1, raw_j1)
    };
    for entry in raw.iter_mut() {
        *entry *= factor;
    }
    raw
}

/// Ratios r_n = j_n(z)/j_{n-1}(z) for n = 1..=n_max (index 0 is unused and
/// set to zero).
///
/// Downward recurrence on the ratios, r_n = z / ((2n+1) - z r_{n+1}), seeded
/// with the leading continued-fraction term at a padded start order. Unlike
/// the values themselves the ratios stay O(|z|/n) for all orders, so this
/// path has no underflow ceiling.
pub fn sph_bessel_ratios(z: Complex64, n_max: usize) -> Result<Vec<Complex64>, CoreError> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(CoreError::NonFiniteArgument("spherical Bessel argument"));
    }
    if z == Complex64::new(0.0, 0.0) {
        return Err(CoreError::InvalidParameter(
            "Bessel ratios are undefined at z = 0".into(),
        ));
    }
    let start = n_max + miller_pad(z);
    let mut ratios = vec![Complex64::new(0.0, 0.0); n_max + 1];
    let mut r = z / (2 * start + 1) as f64;
    for k in (1..start).rev() {
        let mut denom = Complex64::new((2 * k + 1) as f64, 0.0) - z * r;
        if denom == Complex64::new(0.0, 0.0) {
            denom = Complex64::new(1e-290, 0.0);
        }
        r = z / denom;
        if k <= n_max {
            ratios[k] = r;
        }
    }
    Ok(ratios)
}

/// Logarithmic derivatives ρ_n = z j'_n(z)/j_n(z) for n = 0..=n_max.
///
/// ρ_n = z/r_n - (n+1) for n ≥ 1 and ρ_0 = -z r_1, where r_n is the ratio
/// sequence of [`sph_bessel_ratios`]. ρ_n ~ n for n ≫ |z|.
pub fn sph_bessel_log_derivatives(
    z: Complex64,
    n_max: usize,
) -> Result<Vec<Complex64>, CoreError> {
    let ratios = sph_bessel_ratios(z, n_max.max(1))?;
    let mut rho = Vec::with_capacity(n_max + 1);
    rho.push(-z * ratios[1]);
    for n in 1..=n_max {
        rho.push(z / ratios[n] - (n + 1) as f64);
    }
    Ok(rho)
}

/// Leading-order large-n approximation (2πn)^{-1/2} (e z / 2n)^n.
///
/// Diagnostic only; it captures the exponential-order decay of j_n for fixed
/// argument (the true ratio j_n / approximation behaves like √π/(2√n), see
/// the order-asymptotics tests). Never used inside the solver formulas.
pub fn sph_bessel_asymptotic(z: Complex64, n: usize) -> Result<Complex64, CoreError> {
    if n == 0 {
        return Err(CoreError::ModeOutOfRange(0));
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(CoreError::NonFiniteArgument("spherical Bessel argument"));
    }
    if z == Complex64::new(0.0, 0.0) {
        return Err(CoreError::InvalidParameter(
            "asymptotic form is undefined at z = 0".into(),
        ));
    }
    let base = std::f64::consts::E * z / (2 * n) as f64;
    let scale = 1.0 / (2.0 * std::f64::consts::PI * n as f64).sqrt();
    Ok(scale * base.powu(n as u32))
}
