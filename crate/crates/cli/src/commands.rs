//! The five subcommands: computation, file emission, exit-code mapping.
//!
//! Data goes to files (or stdout for `verify`); diagnostics go to stderr.

use std::path::{Path, PathBuf};

use eddy_ddm_core::modal_analysis::{
    admissible, amplification, asymptotic_amplification, consistency_check, consistency_factor,
    spectrum, ConsistencyVerdict,
};
use eddy_ddm_core::param_search::{scan, SearchOutcome};
use eddy_ddm_core::spectral_ddm::{
    conductor_solve, electric_field_at, insulator_solve, interface_residuals, monolithic_solve,
    potential_at, run,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{fmt17, write_file};

/// Exit codes: 0 success, 2 invalid configuration, 3 iteration did not
/// converge, 4 verification failed, 1 any other runtime failure.
pub enum Outcome {
    Success,
    NotConverged,
    VerificationFailed,
}

impl Outcome {
    pub fn code(&self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::NotConverged => 3,
            Outcome::VerificationFailed => 4,
        }
    }
}

pub enum CommandError {
    /// exit 2
    Config(String),
    /// exit 1
    Runtime(String),
}

impl CommandError {
    pub fn code(&self) -> i32 {
        match self {
            CommandError::Config(_) => 2,
            CommandError::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CommandError::Config(m) | CommandError::Runtime(m) => m,
        }
    }
}

impl From<crate::config::ConfigError> for CommandError {
    fn from(e: crate::config::ConfigError) -> Self {
        CommandError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        CommandError::Runtime(format!("i/o failure: {e}"))
    }
}

fn runtime(e: impl std::fmt::Display) -> CommandError {
    CommandError::Runtime(e.to_string())
}

fn out_path(config: &RunConfig, out_override: Option<&Path>, file: &str) -> PathBuf {
    let dir = out_override
        .map(Path::to_path_buf)
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    dir.join(file)
}

/// `spectrum`: one row per mode with the half-sweep eigenvalues, the
/// double-sweep eigenvalue and the large-n reference.
pub fn cmd_spectrum(config: &RunConfig, out: Option<&Path>) -> Result<Outcome, CommandError> {
    let phys = config.physical_params()?;
    let imp = config.impedance_params();
    let records = spectrum(config.n_max, &phys, &imp).map_err(runtime)?;

    let mut csv = String::from("n,re_tc,im_tc,re_ti,im_ti,re_t,im_t,abs_t,asymptote\n");
    for (k, record) in records.iter().enumerate() {
        let n = k + 1;
        match record {
            Ok(r) => {
                csv.push_str(&format!(
                    "{n},{},{},{},{},{},{},{},{}\n",
                    fmt17(r.t_c.re),
                    fmt17(r.t_c.im),
                    fmt17(r.t_i.re),
                    fmt17(r.t_i.im),
                    fmt17(r.t.re),
                    fmt17(r.t.im),
                    fmt17(r.abs_t),
                    fmt17(r.asymptote),
                ));
            }
            Err(e) => {
                eprintln!("warning: mode {n} is resonant ({e}); emitting nan");
                let asym = asymptotic_amplification(n, imp.beta_c).unwrap_or(f64::INFINITY);
                csv.push_str(&format!(
                    "{n},nan,nan,nan,nan,nan,nan,nan,{}\n",
                    fmt17(asym)
                ));
            }
        }
    }
    write_file(&out_path(config, out, "spectrum.csv"), &csv)?;
    Ok(Outcome::Success)
}

/// `iterate`: residual history plus observed-vs-predicted contraction factors.
pub fn cmd_iterate(config: &RunConfig, out: Option<&Path>) -> Result<Outcome, CommandError> {
    let phys = config.physical_params()?;
    let imp = config.impedance_params();
    let f = config.source()?;
    let init = config.initial_state();
    let (_, log) = run(&f, &phys, &imp, config.tol, config.max_iter, init).map_err(runtime)?;

    let mut residuals = String::from("iter,residual\n");
    for (k, r) in log.residuals.iter().enumerate() {
        residuals.push_str(&format!("{},{}\n", k + 1, fmt17(*r)));
    }
    write_file(&out_path(config, out, "residuals.csv"), &residuals)?;

    let mut factors = String::from("n,observed_factor,predicted_abs_t,rel_dev\n");
    for n in 1..=config.n_max {
        let observed = log
            .per_mode_factor
            .get(n - 1)
            .copied()
            .unwrap_or(f64::NAN);
        let predicted = amplification(n, &phys, &imp)
            .map(|r| r.abs_t)
            .unwrap_or(f64::NAN);
        let rel = if predicted > 0.0 {
            (observed - predicted).abs() / predicted
        } else {
            f64::NAN
        };
        factors.push_str(&format!(
            "{n},{},{},{}\n",
            fmt17(observed),
            fmt17(predicted),
            fmt17(rel)
        ));
    }
    write_file(&out_path(config, out, "factors.csv"), &factors)?;

    if let Some(mode) = log.divergent_mode {
        eprintln!("warning: growing residual, worst mode n = {mode}");
    }
    if log.converged {
        Ok(Outcome::Success)
    } else {
        eprintln!(
            "not converged after {} sweeps (last residual {:.3e})",
            log.iterations,
            log.residuals.last().copied().unwrap_or(f64::NAN)
        );
        Ok(Outcome::NotConverged)
    }
}

/// `solve`: per-mode coefficients of the coupled direct solve with
/// self-certifying interface residuals, plus a radial field slice.
pub fn cmd_solve(
    config: &RunConfig,
    out: Option<&Path>,
    compare_ddm: bool,
) -> Result<Outcome, CommandError> {
    let phys = config.physical_params()?;
    let f = config.source()?;
    let (ins, con) = monolithic_solve(&f, &phys).map_err(runtime)?;
    let residuals = interface_residuals(&ins, &con, &f, &phys).map_err(runtime)?;

    let ddm_dev: Option<Vec<f64>> = if compare_ddm {
        let imp = config.impedance_params();
        let init = config.initial_state();
        let (state, log) =
            run(&f, &phys, &imp, config.tol, config.max_iter, init).map_err(runtime)?;
        if !log.converged {
            eprintln!(
                "warning: comparison run hit the sweep cap ({}); deviations reflect the reached state",
                config.max_iter
            );
        }
        // polish to the numerical limit: the comparison target is the fixed point
        let (state, _) = run(&f, &phys, &imp, 1e-30, 1500, state).map_err(runtime)?;
        let ddm_ins = insulator_solve(state.g_i_slice(), &f, &phys, &imp).map_err(runtime)?;
        let ddm_con = conductor_solve(state.g_c_slice(), &phys, &imp).map_err(runtime)?;
        let rel = |got: num_complex::Complex64, want: num_complex::Complex64| {
            let scale = want.norm();
            if scale == 0.0 {
                got.norm()
            } else {
                (got - want).norm() / scale
            }
        };
        Some(
            (0..config.n_max)
                .map(|k| {
                    rel(ddm_ins.d[k], ins.d[k])
                        .max(rel(ddm_ins.c_scaled[k], ins.c_scaled[k]))
                        .max(rel(ddm_con.a[k], con.a[k]))
                })
                .collect(),
        )
    } else {
        None
    };

    let mut modes = String::from("n,re_c,im_c,re_d,im_d,re_a,im_a,res_dirichlet,res_tangential,res_normal");
    if ddm_dev.is_some() {
        modes.push_str(",ddm_rel_dev");
    }
    modes.push('\n');
    for k in 0..config.n_max {
        modes.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}",
            k + 1,
            fmt17(ins.c[k].re),
            fmt17(ins.c[k].im),
            fmt17(ins.d[k].re),
            fmt17(ins.d[k].im),
            fmt17(con.a[k].re),
            fmt17(con.a[k].im),
            fmt17(residuals[k].dirichlet),
            fmt17(residuals[k].tangential),
            fmt17(residuals[k].normal),
        ));
        if let Some(dev) = &ddm_dev {
            modes.push_str(&format!(",{}", fmt17(dev[k])));
        }
        modes.push('\n');
    }
    write_file(&out_path(config, out, "modes.csv"), &modes)?;

    // 64 samples along the radial ray at polar angle ray_theta: |E| inside
    // the conductor, the potential in the shell.
    let mut slice = String::from("r,re_p,im_p,abs_e\n");
    let samples = 64;
    for j in 0..samples {
        let r = phys.r_outer() * j as f64 / (samples - 1) as f64;
        if r <= 1.0 {
            let e = electric_field_at(&con, &phys, r, config.ray_theta, 0.0).map_err(runtime)?;
            let abs_e = (e[0].norm_sqr() + e[1].norm_sqr() + e[2].norm_sqr()).sqrt();
            slice.push_str(&format!("{},nan,nan,{}\n", fmt17(r), fmt17(abs_e)));
        } else {
            let p = potential_at(&ins, &phys, r, config.ray_theta).map_err(runtime)?;
            slice.push_str(&format!(
                "{},{},{},nan\n",
                fmt17(r),
                fmt17(p.re),
                fmt17(p.im)
            ));
        }
    }
    write_file(&out_path(config, out, "slice.csv"), &slice)?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct OptimizeResult {
    found: bool,
    #[serde(rename = "beta_I", skip_serializing_if = "Option::is_none")]
    beta_i: Option<[f64; 2]>,
    #[serde(rename = "beta_C", skip_serializing_if = "Option::is_none")]
    beta_c: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    admissible: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    consistent: Option<bool>,
    evaluated_points: usize,
}

/// `optimize`: grid table of every evaluated point plus the incumbent record.
pub fn cmd_optimize(config: &RunConfig, out: Option<&Path>) -> Result<Outcome, CommandError> {
    let phys = config.physical_params()?;
    let spec = config.search_spec()?;
    let (outcome, table) = scan(&spec, &phys).map_err(runtime)?;

    let mut grid = String::from(
        "round,re_beta_I,im_beta_I,re_beta_C,im_beta_C,objective,admissible,consistent\n",
    );
    for p in &table {
        grid.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.round,
            fmt17(p.beta_i.re),
            fmt17(p.beta_i.im),
            fmt17(p.beta_c.re),
            fmt17(p.beta_c.im),
            fmt17(p.objective),
            p.admissible,
            p.consistent
        ));
    }
    write_file(&out_path(config, out, "grid.csv"), &grid)?;

    let record = match outcome {
        SearchOutcome::Found(r) => {
            eprintln!(
                "incumbent: beta_I = {}+{}i, beta_C = {}+{}i, objective = {}",
                r.beta_i.re, r.beta_i.im, r.beta_c.re, r.beta_c.im, r.objective
            );
            OptimizeResult {
                found: true,
                beta_i: Some([r.beta_i.re, r.beta_i.im]),
                beta_c: Some([r.beta_c.re, r.beta_c.im]),
                objective: Some(r.objective),
                admissible: Some(r.admissible),
                consistent: Some(r.consistent),
                evaluated_points: r.evaluated_points,
            }
        }
        SearchOutcome::NoAdmissiblePoint { evaluated_points } => {
            eprintln!("no admissible point in the search box");
            OptimizeResult {
                found: false,
                beta_i: None,
                beta_c: None,
                objective: None,
                admissible: None,
                consistent: None,
                evaluated_points,
            }
        }
    };
    let json = serde_json::to_string_pretty(&record)
        .map_err(|e| CommandError::Runtime(e.to_string()))?;
    write_file(&out_path(config, out, "result.json"), &(json + "\n"))?;
    Ok(Outcome::Success)
}

/// `verify`: human-readable admissibility and consistency report on stdout.
pub fn cmd_verify(config: &RunConfig) -> Result<Outcome, CommandError> {
    let imp = config.impedance_params();
    let report = admissible(&imp);
    let verdict = consistency_check(&imp);

    println!(
        "impedance parameters: beta_I = {} + {}i, beta_C = {} + {}i",
        imp.beta_i.re, imp.beta_i.im, imp.beta_c.re, imp.beta_c.im
    );
    println!("well-posedness (sufficient conditions):");
    println!(
        "  Re beta_I <= 0 : {}",
        if imp.beta_i.re <= 0.0 { "ok" } else { "VIOLATED" }
    );
    println!(
        "  Re beta_C >= 0 : {}",
        if imp.beta_c.re >= 0.0 { "ok" } else { "VIOLATED" }
    );
    println!(
        "  Im beta_C <= 0 : {}",
        if imp.beta_c.im <= 0.0 { "ok" } else { "VIOLATED" }
    );
    println!(
        "  admissible: {}",
        if report.is_ok() { "yes" } else { "no" }
    );
    let product = imp.beta_c * imp.beta_i;
    println!("equivalence with the classical transmission conditions:");
    println!(
        "  Re(-beta_C beta_I) >= 0 : {}",
        if (-product).re >= 0.0 { "ok" } else { "not satisfied" }
    );
    println!(
        "  Im(beta_C beta_I) != 0  : {}",
        if product.im != 0.0 { "ok" } else { "not satisfied" }
    );
    let consistent = verdict == ConsistencyVerdict::Consistent;
    println!(
        "  consistent: {}",
        if consistent { "yes (at least one condition holds)" } else { "not guaranteed" }
    );
    println!("per-mode factors 1 - beta_C beta_I n(n+1):");
    for n in 1..=10 {
        let factor = consistency_factor(n, &imp).map_err(runtime)?;
        println!(
            "  n = {n:2}: {} + {}i (|.| = {:.6e})",
            factor.re,
            factor.im,
            factor.norm()
        );
    }
    if report.is_ok() && consistent {
        println!("overall: PASS");
        Ok(Outcome::Success)
    } else {
        for v in &report.violations {
            println!("violated: {v}");
        }
        println!("overall: FAIL");
        Ok(Outcome::VerificationFailed)
    }
}
