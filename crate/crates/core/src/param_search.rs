//! Grid search over the impedance coefficients.
//!
//! The objective is the modal contraction profile |t_n| over a range of
//! orders, reduced either by its maximum (worst mode governs the asymptotic
//! iteration count) or its mean. The objective is non-smooth — a max of
//! moduli with resonance poles — so the search is a Cartesian grid over the
//! four real degrees of freedom of (β_I, β_C) followed by box refinement
//! around the incumbent, rather than anything gradient-based.
//!
//! Points violating the well-posedness or consistency predicates are still
//! evaluated (the table is part of the output) but never become the
//! incumbent.

use num_complex::Complex64;

use crate::error::CoreError;
use crate::modal_analysis::{
    admissible, amplification_from_rho, consistency_check, ConsistencyVerdict, ImpedanceParams,
    PhysicalParams, TcVariant,
};
use crate::special_functions::sph_bessel_log_derivatives;

/// Reduction of the contraction profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObjectiveKind {
    /// max_n |t_n| over the mode range.
    #[default]
    MaxAbsT,
    /// Arithmetic mean of |t_n| over the mode range.
    MeanAbsT,
}

/// Search box, grid resolution, mode range and refinement depth.
#[derive(Debug, Clone)]
pub struct SearchSpec {
    pub re_beta_i: (f64, f64),
    pub im_beta_i: (f64, f64),
    pub re_beta_c: (f64, f64),
    pub im_beta_c: (f64, f64),
    /// Grid points per non-degenerate axis.
    pub resolution: usize,
    /// Inclusive mode range (n_min, n_max).
    pub n_range: (usize, usize),
    pub objective: ObjectiveKind,
    pub refine_rounds: usize,
    pub tc_variant: TcVariant,
}

impl SearchSpec {
    pub fn validate(&self) -> Result<(), CoreError> {
        for (name, (lo, hi)) in [
            ("re_beta_I", self.re_beta_i),
            ("im_beta_I", self.im_beta_i),
            ("re_beta_C", self.re_beta_c),
            ("im_beta_C", self.im_beta_c),
        ] {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(CoreError::InvalidParameter(format!(
                    "{name} bounds must be finite"
                )));
            }
            if lo > hi {
                return Err(CoreError::InvalidParameter(format!(
                    "{name} bounds are reversed: [{lo}, {hi}]"
                )));
            }
        }
        if self.resolution < 2 {
            return Err(CoreError::InvalidParameter(
                "grid resolution must be at least 2".into(),
            ));
        }
        if self.n_range.0 < 1 || self.n_range.0 > self.n_range.1 {
            return Err(CoreError::InvalidParameter(format!(
                "invalid mode range [{}, {}]",
                self.n_range.0, self.n_range.1
            )));
        }
        Ok(())
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy)]
pub struct GridPoint {
    pub round: usize,
    pub beta_i: Complex64,
    pub beta_c: Complex64,
    pub objective: f64,
    pub admissible: bool,
    pub consistent: bool,
}

/// The incumbent of a completed scan.
#[derive(Debug, Clone, Copy)]
pub struct SearchResult {
    pub beta_i: Complex64,
    pub beta_c: Complex64,
    pub objective: f64,
    pub admissible: bool,
    pub consistent: bool,
    pub evaluated_points: usize,
}

/// Scan outcome: either an admissible-and-consistent incumbent or an explicit
/// report that the box contains no such point.
#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Found(SearchResult),
    NoAdmissiblePoint { evaluated_points: usize },
}

/// Contraction objective for one impedance choice. Resonant modes push the
/// value to +∞ (failure encoding, never an error).
pub fn objective(
    imp: &ImpedanceParams,
    phys: &PhysicalParams,
    n_range: (usize, usize),
    kind: ObjectiveKind,
) -> Result<f64, CoreError> {
    if n_range.0 < 1 || n_range.0 > n_range.1 {
        return Err(CoreError::InvalidParameter(format!(
            "invalid mode range [{}, {}]",
            n_range.0, n_range.1
        )));
    }
    let rho = sph_bessel_log_derivatives(phys.kappa(), n_range.1)?;
    Ok(objective_with_rho(imp, phys, n_range, kind, &rho))
}

fn objective_with_rho(
    imp: &ImpedanceParams,
    phys: &PhysicalParams,
    n_range: (usize, usize),
    kind: ObjectiveKind,
    rho: &[Complex64],
) -> f64 {
    let mut max = 0.0_f64;
    let mut sum = 0.0_f64;
    for n in n_range.0..=n_range.1 {
        match amplification_from_rho(n, phys, imp, rho[n]) {
            Ok(record) => {
                max = max.max(record.abs_t);
                sum += record.abs_t;
            }
            Err(_) => return f64::INFINITY,
        }
    }
    match kind {
        ObjectiveKind::MaxAbsT => max,
        ObjectiveKind::MeanAbsT => sum / (n_range.1 - n_range.0 + 1) as f64,
    }
}

/// Grid values of one axis; a degenerate interval contributes its single
/// point regardless of resolution.
fn axis(lo: f64, hi: f64, resolution: usize) -> Vec<f64> {
    if lo == hi {
        return vec![lo];
    }
    (0..resolution)
        .map(|i| lo + (hi - lo) * i as f64 / (resolution - 1) as f64)
        .collect()
}

/// Candidate ordering: objective, then |β_C|, then |β_I|, then lexicographic
/// components. Total and deterministic, so the argmin is reduction-order
/// independent.
fn better(a: &GridPoint, b: &GridPoint) -> bool {
    let key = |p: &GridPoint| {
        (
            p.objective,
            p.beta_c.norm(),
            p.beta_i.norm(),
            p.beta_c.re,
            p.beta_c.im,
            p.beta_i.re,
            p.beta_i.im,
        )
    };
    let (ka, kb) = (key(a), key(b));
    let ord = ka
        .0
        .total_cmp(&kb.0)
        .then(ka.1.total_cmp(&kb.1))
        .then(ka.2.total_cmp(&kb.2))
        .then(ka.3.total_cmp(&kb.3))
        .then(ka.4.total_cmp(&kb.4))
        .then(ka.5.total_cmp(&kb.5))
        .then(ka.6.total_cmp(&kb.6));
    ord == std::cmp::Ordering::Less
}

/// Evaluates the objective on the Cartesian grid, keeps the best admissible
/// and consistent point, and re-grids a box shrunk by a factor 4 per side
/// around the incumbent (clamped to the original bounds) for each
/// refinement round.
///
/// Returns the outcome together with the full evaluation table (all rounds).
pub fn scan(
    spec: &SearchSpec,
    phys: &PhysicalParams,
) -> Result<(SearchOutcome, Vec<GridPoint>), CoreError> {
    spec.validate()?;
    let rho = sph_bessel_log_derivatives(phys.kappa(), spec.n_range.1)?;

    let mut table = Vec::new();
    let mut incumbent: Option<GridPoint> = None;
    let original = [
        spec.re_beta_i,
        spec.im_beta_i,
        spec.re_beta_c,
        spec.im_beta_c,
    ];
    let mut box_bounds = original;

    for round in 0..=spec.refine_rounds {
        let grids: Vec<Vec<f64>> = box_bounds
            .iter()
            .map(|&(lo, hi)| axis(lo, hi, spec.resolution))
            .collect();
        for &re_i in &grids[0] {
            for &im_i in &grids[1] {
                for &re_c in &grids[2] {
                    for &im_c in &grids[3] {
                        let imp = ImpedanceParams::new(
                            Complex64::new(re_i, im_i),
                            Complex64::new(re_c, im_c),
                            spec.tc_variant,
                        );
                        let point = GridPoint {
                            round,
                            beta_i: imp.beta_i,
                            beta_c: imp.beta_c,
                            objective: objective_with_rho(
                                &imp,
                                phys,
                                spec.n_range,
                                spec.objective,
                                &rho,
                            ),
                            admissible: admissible(&imp).is_ok(),
                            consistent: consistency_check(&imp)
                                == ConsistencyVerdict::Consistent,
                        };
                        if point.admissible
                            && point.consistent
                            && incumbent.as_ref().is_none_or(|inc| better(&point, inc))
                        {
                            incumbent = Some(point);
                        }
                        table.push(point);
                    }
                }
            }
        }
        // shrink the box around the incumbent for the next round, clamped to
        // the caller's original bounds
        if let Some(inc) = &incumbent {
            let centre = [inc.beta_i.re, inc.beta_i.im, inc.beta_c.re, inc.beta_c.im];
            for ((bounds, c), orig) in box_bounds.iter_mut().zip(centre).zip(original) {
                let half = (bounds.1 - bounds.0) / 8.0;
                *bounds = ((c - half).max(orig.0), (c + half).min(orig.1));
            }
        } else {
            break; // nothing admissible anywhere: refining is pointless
        }
    }

    let evaluated_points = table.len();
    let outcome = match incumbent {
        Some(inc) => SearchOutcome::Found(SearchResult {
            beta_i: inc.beta_i,
            beta_c: inc.beta_c,
            objective: inc.objective,
            admissible: inc.admissible,
            consistent: inc.consistent,
            evaluated_points,
        }),
        None => SearchOutcome::NoAdmissiblePoint { evaluated_points },
    };
    Ok((outcome, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phys() -> PhysicalParams {
        PhysicalParams::new(std::f64::consts::FRAC_PI_4, 1.0, 1.0, 2.0).unwrap()
    }

    fn degenerate_spec(beta_i: f64, beta_c: f64) -> SearchSpec {
        SearchSpec {
            re_beta_i: (beta_i, beta_i),
            im_beta_i: (0.0, 0.0),
            re_beta_c: (beta_c, beta_c),
            im_beta_c: (0.0, 0.0),
            resolution: 2,
            n_range: (1, 40),
            objective: ObjectiveKind::MaxAbsT,
            refine_rounds: 0,
            tc_variant: TcVariant::default(),
        }
    }

    #[test]
    fn degenerate_grid_returns_its_single_point() {
        let (outcome, table) = scan(&degenerate_spec(-0.01, 0.01), &phys()).unwrap();
        assert_eq!(table.len(), 1);
        match outcome {
            SearchOutcome::Found(result) => {
                assert_eq!(result.beta_i, Complex64::new(-0.01, 0.0));
                assert_eq!(result.beta_c, Complex64::new(0.01, 0.0));
                assert!(result.objective.is_finite());
                assert!(result.admissible && result.consistent);
            }
            SearchOutcome::NoAdmissiblePoint { .. } => panic!("expected a hit"),
        }
    }

    #[test]
    fn box_in_forbidden_half_plane_has_no_admissible_point() {
        let spec = SearchSpec {
            re_beta_i: (0.05, 0.1), // Re β_I > 0 everywhere
            im_beta_i: (0.0, 0.0),
            re_beta_c: (0.0, 0.1),
            im_beta_c: (0.0, 0.0),
            resolution: 3,
            n_range: (1, 10),
            objective: ObjectiveKind::MaxAbsT,
            refine_rounds: 2,
            tc_variant: TcVariant::default(),
        };
        let (outcome, table) = scan(&spec, &phys()).unwrap();
        match outcome {
            SearchOutcome::NoAdmissiblePoint { evaluated_points } => {
                assert_eq!(evaluated_points, table.len());
                assert_eq!(evaluated_points, 9); // one round only, nothing to refine
            }
            SearchOutcome::Found(_) => panic!("no point in the box is admissible"),
        }
    }

    #[test]
    fn resonant_point_maps_to_infinity() {
        // β_I = 1.25/1.5 makes mode 1 resonant on the insulator side.
        let spec = degenerate_spec(1.25 / 1.5, 0.0);
        let (_, table) = scan(&spec, &phys()).unwrap();
        assert!(table[0].objective.is_infinite());
        assert!(!table[0].admissible);
    }

    #[test]
    fn determinism() {
        let spec = SearchSpec {
            re_beta_i: (-0.05, 0.0),
            im_beta_i: (0.0, 0.0),
            re_beta_c: (0.0, 0.1),
            im_beta_c: (0.0, 0.0),
            resolution: 5,
            n_range: (1, 30),
            objective: ObjectiveKind::MaxAbsT,
            refine_rounds: 1,
            tc_variant: TcVariant::default(),
        };
        let phys = phys();
        let (a, ta) = scan(&spec, &phys).unwrap();
        let (b, tb) = scan(&spec, &phys).unwrap();
        match (a, b) {
            (SearchOutcome::Found(x), SearchOutcome::Found(y)) => {
                assert_eq!(x.beta_i, y.beta_i);
                assert_eq!(x.beta_c, y.beta_c);
                assert_eq!(x.objective, y.objective);
            }
            _ => panic!("expected hits"),
        }
        assert_eq!(ta.len(), tb.len());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = degenerate_spec(0.0, 0.0);
        s.resolution = 1;
        assert!(scan(&s, &phys()).is_err());
        let mut s = degenerate_spec(0.0, 0.0);
        s.n_range = (0, 5);
        assert!(scan(&s, &phys()).is_err());
        let mut s = degenerate_spec(0.0, 0.0);
        s.re_beta_c = (0.2, 0.1);
        assert!(scan(&s, &phys()).is_err());
    }

    #[test]
    fn mean_objective_is_below_max() {
        let phys = phys();
        let imp = ImpedanceParams::with_betas(
            Complex64::new(-0.01, 0.0),
            Complex64::new(0.01, 0.0),
        );
        let max = objective(&imp, &phys, (1, 60), ObjectiveKind::MaxAbsT).unwrap();
        let mean = objective(&imp, &phys, (1, 60), ObjectiveKind::MeanAbsT).unwrap();
        assert!(mean <= max);
        assert!(max < 1.0);
    }
}
