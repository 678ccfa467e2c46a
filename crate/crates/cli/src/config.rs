//! Run-configuration file: JSON with exact key names, unknown keys rejected.

use eddy_ddm_core::modal_analysis::{ImpedanceParams, PhysicalParams, TcVariant};
use eddy_ddm_core::param_search::{ObjectiveKind, SearchSpec};
use eddy_ddm_core::spectral_ddm::SourceSpec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

fn default_tc_variant() -> String {
    "asymptotic".into()
}

fn default_n_max() -> usize {
    50
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iter() -> usize {
    400
}

fn default_exponent() -> f64 {
    2.0
}

fn default_ray_theta() -> f64 {
    std::f64::consts::FRAC_PI_3
}

fn default_resolution() -> usize {
    21
}

fn default_n_range() -> [usize; 2] {
    [1, 200]
}

fn default_objective() -> String {
    "max_abs_t".into()
}

fn default_refine_rounds() -> usize {
    2
}

fn default_interval() -> [f64; 2] {
    [0.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    /// "zero" or "decay"; decay takes f_n = (1 + n)^(-exponent).
    pub kind: String,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
}

impl Default for SourceSection {
    fn default() -> Self {
        Self {
            kind: "decay".into(),
            exponent: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(rename = "re_beta_I")]
    pub re_beta_i: [f64; 2],
    #[serde(rename = "im_beta_I", default = "default_interval")]
    pub im_beta_i: [f64; 2],
    #[serde(rename = "re_beta_C")]
    pub re_beta_c: [f64; 2],
    #[serde(rename = "im_beta_C", default = "default_interval")]
    pub im_beta_c: [f64; 2],
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_n_range")]
    pub n_range: [usize; 2],
    /// "max_abs_t" or "mean_abs_t".
    #[serde(default = "default_objective")]
    pub objective: String,
    #[serde(default = "default_refine_rounds")]
    pub refine_rounds: usize,
}

/// One run configuration; consumed by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub omega: f64,
    pub mu: f64,
    pub sigma: f64,
    #[serde(rename = "R")]
    pub r_outer: f64,
    /// [re, im]
    #[serde(rename = "beta_I")]
    pub beta_i: [f64; 2],
    #[serde(rename = "beta_C")]
    pub beta_c: [f64; 2],
    /// "asymptotic" (default) or "paper" — scaling of the β_C coupling term.
    #[serde(default = "default_tc_variant")]
    pub tc_variant: String,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub source: SourceSection,
    /// Present → the iteration starts from seeded random interface data;
    /// absent → deterministic unit data on every mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    /// Polar angle of the radial evaluation ray of `solve`.
    #[serde(default = "default_ray_theta")]
    pub ray_theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSection>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig =
            serde_json::from_str(&text).map_err(|e| ConfigError(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("omega", self.omega),
            ("mu", self.mu),
            ("sigma", self.sigma),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(ConfigError(format!("{name} must be finite and positive")));
            }
        }
        if !self.r_outer.is_finite() || self.r_outer <= 1.0 {
            return Err(ConfigError("R must exceed 1".into()));
        }
        if self.beta_i.iter().chain(&self.beta_c).any(|v| !v.is_finite()) {
            return Err(ConfigError("impedance coefficients must be finite".into()));
        }
        match self.tc_variant.as_str() {
            "asymptotic" | "paper" => {}
            other => {
                return Err(ConfigError(format!(
                    "tc_variant must be \"asymptotic\" or \"paper\", got \"{other}\""
                )))
            }
        }
        if self.n_max == 0 {
            return Err(ConfigError("n_max must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(ConfigError("tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(ConfigError("max_iter must be at least 1".into()));
        }
        match self.source.kind.as_str() {
            "zero" | "decay" => {}
            other => {
                return Err(ConfigError(format!(
                    "source.kind must be \"zero\" or \"decay\", got \"{other}\""
                )))
            }
        }
        if !self.source.exponent.is_finite() {
            return Err(ConfigError("source.exponent must be finite".into()));
        }
        if !self.ray_theta.is_finite() {
            return Err(ConfigError("ray_theta must be finite".into()));
        }
        if let Some(s) = &self.search {
            for (name, [lo, hi]) in [
                ("re_beta_I", s.re_beta_i),
                ("im_beta_I", s.im_beta_i),
                ("re_beta_C", s.re_beta_c),
                ("im_beta_C", s.im_beta_c),
            ] {
                if !lo.is_finite() || !hi.is_finite() || lo > hi {
                    return Err(ConfigError(format!("search.{name} must be a finite interval")));
                }
            }
            if s.resolution < 2 {
                return Err(ConfigError("search.resolution must be at least 2".into()));
            }
            if s.n_range[0] < 1 || s.n_range[0] > s.n_range[1] {
                return Err(ConfigError("search.n_range must satisfy 1 <= lo <= hi".into()));
            }
            match s.objective.as_str() {
                "max_abs_t" | "mean_abs_t" => {}
                other => {
                    return Err(ConfigError(format!(
                        "search.objective must be \"max_abs_t\" or \"mean_abs_t\", got \"{other}\""
                    )))
                }
            }
        }
        Ok(())
    }

    /// Applies the `--variant` command-line override.
    pub fn override_variant(&mut self, variant: Option<&str>) -> Result<(), ConfigError> {
        if let Some(v) = variant {
            match v {
                "paper" | "asymptotic" => self.tc_variant = v.to_string(),
                other => {
                    return Err(ConfigError(format!(
                        "--variant must be paper or asymptotic, got {other}"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn physical_params(&self) -> Result<PhysicalParams, ConfigError> {
        PhysicalParams::new(self.omega, self.mu, self.sigma, self.r_outer)
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn tc_variant(&self) -> TcVariant {
        match self.tc_variant.as_str() {
            "paper" => TcVariant::Original,
            _ => TcVariant::AsymptoticConsistent,
        }
    }

    pub fn impedance_params(&self) -> ImpedanceParams {
        ImpedanceParams::new(
            Complex64::new(self.beta_i[0], self.beta_i[1]),
            Complex64::new(self.beta_c[0], self.beta_c[1]),
            self.tc_variant(),
        )
    }

    pub fn source(&self) -> Result<SourceSpec, ConfigError> {
        let spec = match self.source.kind.as_str() {
            "zero" => SourceSpec::zero(self.n_max),
            _ => SourceSpec::decay(self.n_max, self.source.exponent),
        };
        spec.map_err(|e| ConfigError(e.to_string()))
    }

    pub fn initial_state(&self) -> eddy_ddm_core::spectral_ddm::InterfaceState {
        use eddy_ddm_core::spectral_ddm::InterfaceState;
        match self.seed {
            Some(seed) => InterfaceState::random(self.n_max, seed),
            None => InterfaceState::ones(self.n_max),
        }
    }

    pub fn search_spec(&self) -> Result<SearchSpec, ConfigError> {
        let section = self
            .search
            .as_ref()
            .ok_or_else(|| ConfigError("optimize needs a \"search\" section".into()))?;
        Ok(SearchSpec {
            re_beta_i: (section.re_beta_i[0], section.re_beta_i[1]),
            im_beta_i: (section.im_beta_i[0], section.im_beta_i[1]),
            re_beta_c: (section.re_beta_c[0], section.re_beta_c[1]),
            im_beta_c: (section.im_beta_c[0], section.im_beta_c[1]),
            resolution: section.resolution,
            n_range: (section.n_range[0], section.n_range[1]),
            objective: match section.objective.as_str() {
                "mean_abs_t" => ObjectiveKind::MeanAbsT,
                _ => ObjectiveKind::MaxAbsT,
            },
            refine_rounds: section.refine_rounds,
            tc_variant: self.tc_variant(),
        })
    }
}
