//! Shared test support: a double-double (~32 significant digits) ascending
//! power-series oracle for spherical Bessel functions, independent of every
//! code path it is used to check, plus the standard parameter fixtures.
//!
//! The oracle exists only in test code. Worst-case series cancellation over
//! the tested argument range (|z| ≤ 20) costs ~12 digits, leaving ~20 — an
//! order of magnitude below the 1e-12 comparison tolerances.

#![allow(dead_code)]

use eddy_ddm_core::modal_analysis::{ImpedanceParams, PhysicalParams};
use num_complex::Complex64;

// ---------------------------------------------------------------------------
// double-double scalar kernels (Dekker/Bailey style)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul(Dd::from_f64(q1)));
        let q2 = r.hi / other.hi;
        let r = r.sub(other.mul(Dd::from_f64(q2)));
        let q3 = r.hi / other.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        let (hi, lo2) = quick_two_sum(hi, lo + q3);
        Dd { hi, lo: lo2 }
    }

    pub fn sqrt(self) -> Dd {
        // one dd Newton step from the double estimate
        let s = Dd::from_f64(self.hi.sqrt());
        let half = Dd { hi: 0.5, lo: 0.0 };
        s.add(self.div(s)).mul(half)
    }

    pub fn abs_f64(self) -> f64 {
        self.to_f64().abs()
    }
}

pub const DD_PI: Dd = Dd {
    hi: std::f64::consts::PI,
    lo: 1.2246467991473532e-16,
};

pub const DD_E: Dd = Dd {
    hi: std::f64::consts::E,
    lo: 1.4456468917292502e-16,
};

// ---------------------------------------------------------------------------
// complex double-double
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct CDd {
    pub re: Dd,
    pub im: Dd,
}

impl CDd {
    pub const ZERO: CDd = CDd {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };
    pub const ONE: CDd = CDd {
        re: Dd::ONE,
        im: Dd::ZERO,
    };

    pub fn new(re: f64, im: f64) -> CDd {
        CDd {
            re: Dd::from_f64(re),
            im: Dd::from_f64(im),
        }
    }

    pub fn from_c64(z: Complex64) -> CDd {
        CDd::new(z.re, z.im)
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn add(self, o: CDd) -> CDd {
        CDd {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    pub fn sub(self, o: CDd) -> CDd {
        CDd {
            re: self.re.sub(o.re),
            im: self.im.sub(o.im),
        }
    }

    pub fn mul(self, o: CDd) -> CDd {
        CDd {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    pub fn div_f64(self, f: f64) -> CDd {
        let d = Dd::from_f64(f);
        CDd {
            re: self.re.div(d),
            im: self.im.div(d),
        }
    }

    pub fn div(self, o: CDd) -> CDd {
        let denom = o.re.mul(o.re).add(o.im.mul(o.im));
        let num = self.mul(CDd {
            re: o.re,
            im: o.im.neg(),
        });
        CDd {
            re: num.re.div(denom),
            im: num.im.div(denom),
        }
    }

    pub fn scale(self, f: f64) -> CDd {
        CDd {
            re: self.re.mul(Dd::from_f64(f)),
            im: self.im.mul(Dd::from_f64(f)),
        }
    }

    /// Magnitude estimate from the leading components, good enough for
    /// truncation control and relative comparisons.
    pub fn norm_f64(self) -> f64 {
        self.to_c64().norm()
    }
}

// ---------------------------------------------------------------------------
// series oracle
// ---------------------------------------------------------------------------

/// j_n(z) for n = 0..=n_max by the ascending power series, summed entirely in
/// double-double arithmetic. Truncation at relative term size 1e-38.
pub fn oracle_j_cdd(z: Complex64, n_max: usize) -> Vec<CDd> {
    let zc = CDd::from_c64(z);
    let w = zc.mul(zc).scale(-0.5);
    let mut prefactor = CDd::ONE;
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            prefactor = prefactor.mul(zc).div_f64((2 * n + 1) as f64);
        }
        let mut term = CDd::ONE;
        let mut sum = CDd::ONE;
        for k in 0..800usize {
            term = term
                .mul(w)
                .div_f64(((k + 1) * (2 * n + 2 * k + 3)) as f64);
            sum = sum.add(term);
            if term.norm_f64() <= 1e-38 * sum.norm_f64() {
                break;
            }
        }
        out.push(prefactor.mul(sum));
    }
    out
}

/// Oracle values rounded to doubles: (j_0..j_N, j'_0..j'_N).
pub fn oracle_j_table(z: Complex64, n_max: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let j = oracle_j_cdd(z, n_max.max(1));
    let zc = CDd::from_c64(z);
    let mut jp = Vec::with_capacity(n_max + 1);
    jp.push(j[1].to_c64() * -1.0);
    for n in 1..=n_max {
        let ratio = CDd::new((n + 1) as f64, 0.0).div(zc);
        jp.push(j[n - 1].sub(ratio.mul(j[n])).to_c64());
    }
    (
        j.iter().take(n_max + 1).map(|v| v.to_c64()).collect(),
        jp,
    )
}

/// (2πn)^{-1/2} (e z / 2n)^n evaluated in double-double.
pub fn oracle_asymptotic(z: Complex64, n: usize) -> Complex64 {
    let base = CDd::from_c64(z)
        .mul(CDd {
            re: DD_E,
            im: Dd::ZERO,
        })
        .div_f64(2.0 * n as f64);
    let mut pow = CDd::ONE;
    for _ in 0..n {
        pow = pow.mul(base);
    }
    let scale = Dd::ONE.div(DD_PI.mul(Dd::from_f64(2.0 * n as f64)).sqrt());
    CDd {
        re: pow.re.mul(scale),
        im: pow.im.mul(scale),
    }
    .to_c64()
}

// ---------------------------------------------------------------------------
// fixtures and comparison helpers
// ---------------------------------------------------------------------------

/// ω = π/4, μ = σ = 1, R = 2.
pub fn bench_phys() -> PhysicalParams {
    PhysicalParams::new(std::f64::consts::FRAC_PI_4, 1.0, 1.0, 2.0).unwrap()
}

/// The two nonzero benchmark impedance pairs plus the classical choice.
pub fn bench_pairs() -> [(f64, f64); 3] {
    [(0.0, 0.0), (-1e-2, 1e-2), (-1e-2, 1e-1)]
}

pub fn imp_real(beta_i: f64, beta_c: f64) -> ImpedanceParams {
    ImpedanceParams::with_betas(Complex64::new(beta_i, 0.0), Complex64::new(beta_c, 0.0))
}

/// Relative deviation with a graceful zero-reference fallback.
pub fn rel_dev(got: Complex64, want: Complex64) -> f64 {
    let scale = want.norm();
    if scale == 0.0 {
        got.norm()
    } else {
        (got - want).norm() / scale
    }
}

/// Cancellation-aware scale for comparing two routes to t_I: the conductor
/// eigenvalue is affine in β_I, t_I = u + β_I v, and near the root of that
/// affine form no evaluation route retains full relative accuracy in the
/// cancelled value. |u| + |β_I||v| is the natural comparison scale.
pub fn t_i_scale(
    n: usize,
    phys: &PhysicalParams,
    imp: &ImpedanceParams,
) -> f64 {
    use eddy_ddm_core::modal_analysis::t_i;
    let at = |beta_i: Complex64| {
        t_i(n, phys, &ImpedanceParams::new(beta_i, imp.beta_c, imp.tc_variant)).unwrap()
    };
    let u = at(Complex64::new(0.0, 0.0));
    let v = at(Complex64::new(1.0, 0.0)) - u;
    u.norm() + (imp.beta_i * v).norm()
}

/// Same affine-root situation for t_C in β_C: compare on |u| + |β_C||v|.
pub fn t_c_scale(
    n: usize,
    phys: &PhysicalParams,
    imp: &ImpedanceParams,
) -> f64 {
    use eddy_ddm_core::modal_analysis::t_c;
    let at = |beta_c: Complex64| {
        t_c(n, phys, &ImpedanceParams::new(imp.beta_i, beta_c, imp.tc_variant)).unwrap()
    };
    let u = at(Complex64::new(0.0, 0.0));
    let v = at(Complex64::new(1.0, 0.0)) - u;
    u.norm() + (imp.beta_c * v).norm()
}

/// Multiplicity-weighted norm of the difference of two interface states.
pub fn state_diff_norm(
    a: &eddy_ddm_core::spectral_ddm::InterfaceState,
    b: &eddy_ddm_core::spectral_ddm::InterfaceState,
) -> f64 {
    let mut acc = 0.0;
    for n in 1..=a.n_max() {
        let w = (2 * n + 1) as f64;
        acc += w * ((a.g_c(n) - b.g_c(n)).norm_sqr() + (a.g_i(n) - b.g_i(n)).norm_sqr());
    }
    acc.sqrt()
}

pub fn rel_dev_f64(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        (got - want).abs() / want.abs()
    }
}
