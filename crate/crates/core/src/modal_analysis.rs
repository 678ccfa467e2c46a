//! Per-mode analysis of the interface iteration operator.
//!
//! On concentric spheres the interface data of the two subproblems expand in
//! spherical harmonics (scalar Y_n^m on the insulator side, tangential V_n^m
//! on the conductor side) and one Jacobi sweep acts diagonally on each order
//! n. This module computes, per order:
//!
//! - the solution-operator coefficients A_I, B_I (insulator) and A_C, B_C
//!   (conductor),
//! - the eigenvalue factors t_C and t_I of the two half-sweep trace maps,
//! - the amplification coefficient t = t_I · t_C of the double sweep and its
//!   large-n law |t_n| → |(1 - n β_C)/(1 + n β_C)|,
//! - the admissibility conditions (well-posedness of the subproblems) and the
//!   consistency condition under which the impedance coupling is equivalent
//!   to the classical transmission conditions.
//!
//! All quantities depend on the harmonic degree n only; the azimuthal index
//! appears nowhere because the operators are degenerate across it (the
//! 2n+1-fold multiplicity enters only norm weights in the solver module).
//!
//! Large orders are handled through the logarithmic derivative
//! ρ_n = κ j'_n(κ)/j_n(κ): both t_I and the conductor denominator scale by
//! j_n(κ), which underflows near n ≈ 130 for desk-scale κ, so the factor is
//! cancelled analytically before evaluation.

use num_complex::Complex64;

use crate::error::{CoreError, Subdomain};
use crate::special_functions::{sph_bessel_log_derivatives, sph_bessel_table};

/// Relative cancellation level at which a solve denominator is reported as a
/// resonant impedance choice rather than divided by.
pub(crate) const RESONANCE_REL_TOL: f64 = 1e-13;

/// Scaling of the β_C coupling term inside t_C.
///
/// The two variants disagree by a factor √(n(n+1)) on the β_C A_I term.
/// `Original` keeps the full Laplace–Beltrami eigenvalue n(n+1);
/// `AsymptoticConsistent` uses √(n(n+1)), which is what the surface-trace
/// derivation produces and the only scaling compatible with the large-n law
/// t_C ~ iωμ (1 - nβ_C)/(1 - nβ_I). The discrepancy is kept selectable
/// rather than silently resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TcVariant {
    Original,
    #[default]
    AsymptoticConsistent,
}

/// Geometry and material constants of a run, plus the derived complex
/// wavenumber κ (principal square root of iωμσ).
#[derive(Debug, Clone, Copy)]
pub struct PhysicalParams {
    omega: f64,
    mu: f64,
    sigma: f64,
    r_outer: f64,
    kappa: Complex64,
}

impl PhysicalParams {
    /// Builds the parameter set; κ is taken as the principal root of iωμσ.
    pub fn new(omega: f64, mu: f64, sigma: f64, r_outer: f64) -> Result<Self, CoreError> {
        let kappa = Complex64::new(0.0, omega * mu * sigma).sqrt();
        Self::with_kappa(omega, mu, sigma, r_outer, kappa)
    }

    /// Builds the parameter set with an explicit κ, which must square to
    /// iωμσ (either root is admissible; all observables are branch
    /// invariant).
    pub fn with_kappa(
        omega: f64,
        mu: f64,
        sigma: f64,
        r_outer: f64,
        kappa: Complex64,
    ) -> Result<Self, CoreError> {
        for (name, v) in [("omega", omega), ("mu", mu), ("sigma", sigma)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(CoreError::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if !r_outer.is_finite() || r_outer <= 1.0 {
            return Err(CoreError::InvalidParameter(format!(
                "outer radius must exceed the unit interface radius, got {r_outer}"
            )));
        }
        let target = Complex64::new(0.0, omega * mu * sigma);
        if (kappa * kappa - target).norm() > 1e-14 * target.norm() {
            return Err(CoreError::InvalidParameter(
                "kappa^2 does not equal i*omega*mu*sigma".into(),
            ));
        }
        Ok(Self {
            omega,
            mu,
            sigma,
            r_outer,
            kappa,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Outer sphere radius R (the interface sits on the unit sphere).
    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }

    pub fn kappa(&self) -> Complex64 {
        self.kappa
    }

    /// iωμ, the coupling constant of the trace maps.
    pub fn i_omega_mu(&self) -> Complex64 {
        Complex64::new(0.0, self.omega * self.mu)
    }

    /// Same physics on the other square-root branch of κ².
    pub fn flipped_kappa(&self) -> Self {
        Self {
            kappa: -self.kappa,
            ..*self
        }
    }
}

/// The two complex impedance coefficients plus the t_C formula variant.
///
/// Admissibility is deliberately not enforced at construction: the analysis
/// tools must be able to study inadmissible and even resonant values.
#[derive(Debug, Clone, Copy)]
pub struct ImpedanceParams {
    pub beta_i: Complex64,
    pub beta_c: Complex64,
    pub tc_variant: TcVariant,
}

impl ImpedanceParams {
    pub fn new(beta_i: Complex64, beta_c: Complex64, tc_variant: TcVariant) -> Self {
        Self {
            beta_i,
            beta_c,
            tc_variant,
        }
    }

    /// The classical transmission conditions β_I = β_C = 0.
    pub fn classical() -> Self {
        Self::new(
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            TcVariant::default(),
        )
    }

    pub fn with_betas(beta_i: Complex64, beta_c: Complex64) -> Self {
        Self::new(beta_i, beta_c, TcVariant::default())
    }
}

/// Solution-operator coefficients of order n.
///
/// A_I, B_I are real and come from the harmonic expansion r^n, r^{-n} in the
/// shell; A_C, B_C carry the conductor Bessel factors at κ.
#[derive(Debug, Clone, Copy)]
pub struct ModalCoefficients {
    pub n: usize,
    pub a_i: f64,
    pub b_i: f64,
    pub a_c: Complex64,
    pub b_c: Complex64,
}

/// One row of the iteration-operator spectrum.
#[derive(Debug, Clone, Copy)]
pub struct AmplificationRecord {
    pub n: usize,
    pub t_c: Complex64,
    pub t_i: Complex64,
    /// Eigenvalue of the double sweep on order n: t = t_I · t_C.
    pub t: Complex64,
    pub abs_t: f64,
    /// Large-n reference law |(1 - n β_C)/(1 + n β_C)| (infinite at its pole).
    pub asymptote: f64,
}

pub(crate) fn check_mode(n: usize) -> Result<(), CoreError> {
    if n == 0 {
        Err(CoreError::ModeOutOfRange(0))
    } else {
        Ok(())
    }
}

/// A_I = -n (1 + R^{-2n}) and B_I = n(n+1) (1 - R^{-2n}).
///
/// R^{-2n} underflows to zero for large n, which is the exact limit of both
/// coefficients.
pub(crate) fn insulator_coefficients(n: usize, phys: &PhysicalParams) -> (f64, f64) {
    let q2 = (-2.0 * n as f64 * phys.r_outer.ln()).exp();
    let nn = (n * (n + 1)) as f64;
    (-(n as f64) * (1.0 + q2), nn * (1.0 - q2))
}

/// Coefficients of order n; Bessel values taken at κ.
pub fn modal_coefficients(n: usize, phys: &PhysicalParams) -> Result<ModalCoefficients, CoreError> {
    check_mode(n)?;
    let (a_i, b_i) = insulator_coefficients(n, phys);
    let table = sph_bessel_table(phys.kappa(), n)?;
    let (a_c, b_c) = conductor_coefficients_from(n, phys.kappa(), table.j(n), table.jp(n));
    Ok(ModalCoefficients {
        n,
        a_i,
        b_i,
        a_c,
        b_c,
    })
}

/// A_C = -√(n(n+1)) (j_n(κ) + κ j'_n(κ)), B_C = -(n(n+1))^{3/2} j_n(κ).
pub(crate) fn conductor_coefficients_from(
    n: usize,
    kappa: Complex64,
    j_n: Complex64,
    jp_n: Complex64,
) -> (Complex64, Complex64) {
    let nn = (n * (n + 1)) as f64;
    let sqrt_nn = nn.sqrt();
    let a_c = -sqrt_nn * (j_n + kappa * jp_n);
    let b_c = -nn * sqrt_nn * j_n;
    (a_c, b_c)
}

/// Insulator half-sweep eigenvalue
/// t_C = -iωμ (B_I/√(n(n+1)) + β_C w A_I) / (A_I + β_I B_I),
/// with w = n(n+1) for [`TcVariant::Original`] and w = √(n(n+1)) for
/// [`TcVariant::AsymptoticConsistent`]. Both variants coincide at β_C = 0.
pub fn t_c(n: usize, phys: &PhysicalParams, imp: &ImpedanceParams) -> Result<Complex64, CoreError> {
    check_mode(n)?;
    let (a_i, b_i) = insulator_coefficients(n, phys);
    let denom = a_i + imp.beta_i * b_i;
    let scale = a_i.abs() + (imp.beta_i * b_i).norm();
    if denom.norm() <= RESONANCE_REL_TOL * scale {
        return Err(CoreError::ResonantImpedance {
            mode: n,
            subdomain: Subdomain::Insulator,
        });
    }
    let nn = (n * (n + 1)) as f64;
    let sqrt_nn = nn.sqrt();
    let w = match imp.tc_variant {
        TcVariant::Original => nn,
        TcVariant::AsymptoticConsistent => sqrt_nn,
    };
    Ok(-phys.i_omega_mu() * (b_i / sqrt_nn + imp.beta_c * w * a_i) / denom)
}

/// Conductor half-sweep eigenvalue, evaluated through ρ_n = κ j'_n/j_n:
///
/// t_I = (1/iωμ) (-B_C/√(n(n+1)) - β_I √(n(n+1)) A_C) / (A_C + β_C B_C)
///     = -√(n(n+1)) (1 + β_I (1 + ρ_n)) / (iωμ (1 + ρ_n + β_C n(n+1))).
///
/// The j_n(κ) factor common to numerator and denominator is cancelled
/// analytically so the eigenvalue stays finite at orders where j_n itself
/// underflows.
pub fn t_i(n: usize, phys: &PhysicalParams, imp: &ImpedanceParams) -> Result<Complex64, CoreError> {
    check_mode(n)?;
    let rho = sph_bessel_log_derivatives(phys.kappa(), n)?;
    t_i_from_rho(n, phys, imp, rho[n])
}

pub(crate) fn t_i_from_rho(
    n: usize,
    phys: &PhysicalParams,
    imp: &ImpedanceParams,
    rho_n: Complex64,
) -> Result<Complex64, CoreError> {
    let nn = (n * (n + 1)) as f64;
    let one_rho = Complex64::new(1.0, 0.0) + rho_n;
    let denom = one_rho + imp.beta_c * nn;
    let scale = one_rho.norm() + (imp.beta_c * nn).norm();
    if denom.norm() <= RESONANCE_REL_TOL * scale {
        return Err(CoreError::ResonantImpedance {
            mode: n,
            subdomain: Subdomain::Conductor,
        });
    }
    let numer = Complex64::new(1.0, 0.0) + imp.beta_i * one_rho;
    Ok(-nn.sqrt() * numer / (phys.i_omega_mu() * denom))
}

/// |(1 - n β_C)/(1 + n β_C)|, the leading large-n behaviour of |t_n|.
pub fn asymptotic_amplification(n: usize, beta_c: Complex64) -> Result<f64, CoreError> {
    check_mode(n)?;
    let one = Complex64::new(1.0, 0.0);
    let denom = one + n as f64 * beta_c;
    if denom.norm() == 0.0 {
        return Err(CoreError::AsymptotePole(n));
    }
    Ok(((one - n as f64 * beta_c) / denom).norm())
}

fn asymptote_or_inf(n: usize, beta_c: Complex64) -> f64 {
    asymptotic_amplification(n, beta_c).unwrap_or(f64::INFINITY)
}

/// Double-sweep eigenvalue record of order n.
pub fn amplification(
    n: usize,
    phys: &PhysicalParams,
    imp: &ImpedanceParams,
) -> Result<AmplificationRecord, CoreError> {
    check_mode(n)?;
    let rho = sph_bessel_log_derivatives(phys.kappa(), n)?;
    amplification_from_rho(n, phys, imp, rho[n])
}

pub(crate) fn amplification_from_rho(
    n: usize,
    phys: &PhysicalParams,
    imp: &ImpedanceParams,
    rho_n: Complex64,
) -> Result<AmplificationRecord, CoreError> {
    let t_c = t_c(n, phys, imp)?;
    let t_i = t_i_from_rho(n, phys, imp, rho_n)?;
    let t = t_i * t_c;
    Ok(AmplificationRecord {
        n,
        t_c,
        t_i,
        t,
        abs_t: t.norm(),
        asymptote: asymptote_or_inf(n, imp.beta_c),
    })
}

/// Spectrum of the double-sweep operator for n = 1..=n_max.
///
/// One shared logarithmic-derivative table serves every order; per-mode
/// resonances are reported in-place without aborting the sweep.
pub fn spectrum(
    n_max: usize,
    phys: &PhysicalParams,
    imp: &ImpedanceParams,
) -> Result<Vec<Result<AmplificationRecord, CoreError>>, CoreError> {
    check_mode(n_max)?;
    let rho = sph_bessel_log_derivatives(phys.kappa(), n_max)?;
    Ok((1..=n_max)
        .map(|n| amplification_from_rho(n, phys, imp, rho[n]))
        .collect())
}

/// One violated well-posedness inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmissibilityViolation {
    /// Re β_I must be ≤ 0 for the insulator problem.
    ReBetaIPositive,
    /// Re β_C must be ≥ 0 for the conductor problem.
    ReBetaCNegative,
    /// Im β_C must be ≤ 0 for the conductor problem.
    ImBetaCPositive,
}

impl std::fmt::Display for AdmissibilityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AdmissibilityViolation::ReBetaIPositive => write!(f, "Re beta_I > 0"),
            AdmissibilityViolation::ReBetaCNegative => write!(f, "Re beta_C < 0"),
            AdmissibilityViolation::ImBetaCPositive => write!(f, "Im beta_C > 0"),
        }
    }
}

/// Outcome of the sufficient well-posedness check
/// Re β_I ≤ 0, Re β_C ≥ 0, Im β_C ≤ 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdmissibilityReport {
    pub violations: Vec<AdmissibilityViolation>,
}

impl AdmissibilityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the sufficient conditions for both subproblems to be well posed.
pub fn admissible(imp: &ImpedanceParams) -> AdmissibilityReport {
    let mut violations = Vec::new();
    if imp.beta_i.re > 0.0 {
        violations.push(AdmissibilityViolation::ReBetaIPositive);
    }
    if imp.beta_c.re < 0.0 {
        violations.push(AdmissibilityViolation::ReBetaCNegative);
    }
    if imp.beta_c.im > 0.0 {
        violations.push(AdmissibilityViolation::ImBetaCPositive);
    }
    AdmissibilityReport { violations }
}

/// Whether the impedance coupling is guaranteed equivalent to the classical
/// transmission conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsistencyVerdict {
    /// Re(-β_C β_I) ≥ 0 or Im(β_C β_I) ≠ 0: every mode factor is nonzero.
    Consistent,
    /// Neither sufficient condition holds; equivalence is not guaranteed.
    NotGuaranteed,
}

/// Checks Re(-β_C β_I) ≥ 0 or Im(β_C β_I) ≠ 0.
pub fn consistency_check(imp: &ImpedanceParams) -> ConsistencyVerdict {
    let p = imp.beta_c * imp.beta_i;
    if (-p).re >= 0.0 || p.im != 0.0 {
        ConsistencyVerdict::Consistent
    } else {
        ConsistencyVerdict::NotGuaranteed
    }
}

/// Eigenvalue of Curl_Γ curl_Γ on the tangential harmonic V_n^m.
///
/// curl_Γ V_n^m = -√(n(n+1)) Y_n^m and Curl_Γ Y_n^m = -√(n(n+1)) V_n^m, so
/// the composition scales by +n(n+1). Cross-checked against a
/// finite-difference surface-calculus oracle in the test suite.
pub fn tangential_curl_curl_eigenvalue(n: usize) -> f64 {
    (n * (n + 1)) as f64
}

/// Per-mode factor 1 - β_C β_I λ_n of the consistency operator, λ_n being the
/// Curl_Γ curl_Γ eigenvalue on V_n^m. A nonzero factor on every mode makes
/// the impedance conditions equivalent to the classical ones.
pub fn consistency_factor(n: usize, imp: &ImpedanceParams) -> Result<Complex64, CoreError> {
    check_mode(n)?;
    Ok(Complex64::new(1.0, 0.0)
        - imp.beta_c * imp.beta_i * tangential_curl_curl_eigenvalue(n))
}
