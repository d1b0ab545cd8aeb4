use std::fmt::Write as _;
use std::path::Path;

use kappa_core::estimator::estimate;
use kappa_core::inference::{
    heuristic_wald_variance, moment_offset, observed_information, standard_error,
    test_or_boundary, Denominator, TestFamily, TestResult, VarianceModel,
};
use kappa_core::multivariate::{kappa_matrix, matrix_tests};
use kappa_core::regression::{build_design, fit, estimating_equation_residual, FitOptions, RegressionFit};
use kappa_core::simulate::{
    calibrate_c, concentration_check, size_power_study, CalibrationReport, Generator, SimConfig,
};
use kappa_core::KappaEstimate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrReport {
    pub x: String,
    pub y: String,
    pub n: usize,
    pub c: f64,
    pub denominator: Denominator,
    pub estimate: KappaEstimate,
    /// Standard error under the configured denominator.
    pub se: f64,
    /// Standard errors under both denominators, side by side.
    pub se_n: f64,
    pub se_n_minus_2: f64,
    pub wald: TestResult,
    pub lrt: TestResult,
    pub scaled_lrt: TestResult,
    /// `None` on the boundary `|τ̂| = 1`.
    pub observed_information: Option<f64>,
    pub moment_offset: f64,
    /// Heuristic `1.5c/(log I)²`; diagnostic only.
    pub heuristic_wald_variance: Option<f64>,
}

pub fn cmd_corr(data: &Dataset, col_x: &str, col_y: &str, vm: &VarianceModel) -> Result<CorrReport, CliError> {
    let x = data.observations(col_x)?;
    let y = data.observations(col_y)?;
    let e = estimate(&x, &y).map_err(|err| match err {
        kappa_core::KappaError::DegenerateMargin { margin } => CliError::Numerical(format!(
            "degenerate margin: column `{}` has no variation",
            if margin == "x" { col_x } else { col_y }
        )),
        other => other.into(),
    })?;
    let n = e.n;
    let tau = e.tau_corr;
    let with_denominator = |d| VarianceModel { c: vm.c, denominator: d };
    let info = observed_information(tau, n).ok();
    Ok(CorrReport {
        x: col_x.into(),
        y: col_y.into(),
        n,
        c: vm.c,
        denominator: vm.denominator,
        estimate: e,
        se: standard_error(tau, n, vm)?,
        se_n: standard_error(tau, n, &with_denominator(Denominator::N))?,
        se_n_minus_2: standard_error(tau, n, &with_denominator(Denominator::NMinus2))?,
        wald: test_or_boundary(TestFamily::Wald, tau, n, vm)?,
        lrt: test_or_boundary(TestFamily::Lrt, tau, n, vm)?,
        scaled_lrt: test_or_boundary(TestFamily::ScaledLrt, tau, n, vm)?,
        observed_information: info,
        moment_offset: moment_offset(n, e.gamma3, e.gamma4),
        heuristic_wald_variance: info.map(|i| heuristic_wald_variance(i, vm)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub a: String,
    pub b: String,
    pub tau_corr: f64,
    pub tau_cov: f64,
    pub wald: TestResult,
    pub lrt: TestResult,
    pub scaled_lrt: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub columns: Vec<String>,
    pub n: usize,
    pub c: f64,
    pub matrix: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    pub psd: bool,
    pub pairs: Vec<PairReport>,
}

pub fn cmd_matrix(data: &Dataset, vm: &VarianceModel) -> Result<MatrixReport, CliError> {
    let columns = data
        .names
        .iter()
        .map(|name| data.observations(name))
        .collect::<Result<Vec<_>, _>>()?;
    let m = kappa_matrix(&columns).map_err(|err| match err {
        kappa_core::KappaError::DegenerateMargin { margin } => {
            let idx: usize = margin.trim_start_matches("column ").parse().unwrap_or(0);
            CliError::Numerical(format!("degenerate margin: column `{}` has no variation", data.names[idx]))
        }
        other => other.into(),
    })?;
    let tests = matrix_tests(&m, m.n, vm)?;
    let pairs = m
        .pairs
        .iter()
        .zip(tests)
        .map(|(pe, t)| PairReport {
            a: data.names[pe.a].clone(),
            b: data.names[pe.b].clone(),
            tau_corr: pe.estimate.tau_corr,
            tau_cov: pe.estimate.tau_cov,
            wald: t.wald,
            lrt: t.lrt,
            scaled_lrt: t.scaled_lrt,
        })
        .collect();
    let min_eigenvalue = m.min_eigenvalue();
    Ok(MatrixReport {
        columns: data.names.clone(),
        n: m.n,
        c: vm.c,
        matrix: (0..m.dim).map(|a| (0..m.dim).map(|b| m.get(a, b)).collect()).collect(),
        min_eigenvalue,
        psd: min_eigenvalue >= -1e-12,
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub response: String,
    pub predictors: Vec<String>,
    pub n: usize,
    pub contrasts: usize,
    pub contrast_rank: usize,
    /// Response values were divided by this constant before fitting.
    pub variance_proxy: Option<f64>,
    pub fit: RegressionFit,
    pub estimating_equation_residual: Vec<f64>,
}

pub fn cmd_fit(
    data: &Dataset,
    response: &str,
    predictors: &[String],
    options: &FitOptions,
    variance_proxy: Option<f64>,
) -> Result<FitReport, CliError> {
    if predictors.is_empty() {
        return Err(CliError::Input("at least one predictor is required".into()));
    }
    let y = data.observations(response)?;
    let cols = predictors
        .iter()
        .map(|p| data.raw(p))
        .collect::<Result<Vec<_>, _>>()?;
    let x = DMatrix::from_fn(y.len(), cols.len(), |i, j| cols[j][i]);
    let mut design = build_design(&x, &y, None)?;
    if let Some(c) = variance_proxy {
        design = design.with_variance_proxy(c)?;
    }
    let result = fit(&design, options)?;
    let residual = estimating_equation_residual(&design, &result.theta)?;
    Ok(FitReport {
        response: response.into(),
        predictors: predictors.to_vec(),
        n: design.n,
        contrasts: design.len(),
        contrast_rank: design.rank,
        variance_proxy,
        fit: result,
        estimating_equation_residual: residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    Calibrate,
    SizePower,
    Concentration,
    #[default]
    All,
}

/// Flat key-value simulation config, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlatSimConfig {
    pub study: Study,
    /// `continuous-gaussian`, `discrete-uniform`, `mixed-tied` or `bivariate-gaussian`.
    pub generator: String,
    pub k: u32,
    pub rho: f64,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub alpha: f64,
    pub rho_grid: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub c: Option<f64>,
}

impl Default for FlatSimConfig {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            study: Study::All,
            generator: "continuous-gaussian".into(),
            k: 5,
            rho: 0.0,
            n_grid: d.n_grid,
            replicates: d.replicates,
            seed: d.seed,
            alpha: d.alpha,
            rho_grid: d.rho_grid,
            epsilons: d.epsilons,
            c: d.c,
        }
    }
}

impl FlatSimConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("invalid simulate config: {e}")))
    }

    pub fn to_sim_config(&self) -> Result<SimConfig, CliError> {
        let generator = match self.generator.as_str() {
            "continuous-gaussian" => Generator::ContinuousGaussian,
            "discrete-uniform" => Generator::DiscreteUniform { k: self.k },
            "mixed-tied" => Generator::MixedTied,
            "bivariate-gaussian" => Generator::BivariateGaussian { rho: self.rho },
            other => return Err(CliError::Input(format!("unknown generator `{other}`"))),
        };
        let cfg = SimConfig {
            generator,
            n_grid: self.n_grid.clone(),
            replicates: self.replicates,
            seed: self.seed,
            alpha: self.alpha,
            rho_grid: self.rho_grid.clone(),
            epsilons: self.epsilons.clone(),
            c: self.c,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn cmd_simulate(config_path: &Path, seed: Option<u64>) -> Result<CalibrationReport, CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Input(format!("{}: {e}", config_path.display())))?;
    let mut flat = FlatSimConfig::parse(&text)?;
    if let Some(s) = seed {
        flat.seed = s;
    }
    let cfg = flat.to_sim_config()?;
    run_study(flat.study, &cfg)
}

pub fn run_study(study: Study, cfg: &SimConfig) -> Result<CalibrationReport, CliError> {
    Ok(match study {
        Study::Calibrate => calibrate_c(cfg)?,
        Study::SizePower => size_power_study(cfg)?,
        Study::Concentration => CalibrationReport {
            generator: cfg.generator.name(),
            replicates: cfg.replicates,
            seed: cfg.seed,
            concentration: Some(concentration_check(cfg)?),
            ..CalibrationReport::default()
        },
        Study::All => {
            let mut report = calibrate_c(cfg)?;
            let sp = size_power_study(cfg)?;
            report.type_i_error = sp.type_i_error;
            report.power = sp.power;
            report.p_value_agreement = sp.p_value_agreement;
            report.concentration = Some(concentration_check(cfg)?);
            report
        }
    })
}

fn fmt_test(t: &TestResult) -> String {
    if t.boundary {
        "boundary (p = 0)".into()
    } else {
        format!("{:>12.6}  p = {:.6e}", t.statistic, t.p_value)
    }
}

pub fn render_corr(r: &CorrReport) -> String {
    let e = &r.estimate;
    let mut s = String::new();
    let _ = writeln!(s, "kappa correlation: {} vs {} (n = {})", r.x, r.y, r.n);
    let _ = writeln!(s, "  tau_corr            {:>12.6}", e.tau_corr);
    let _ = writeln!(s, "  tau_cov             {:>12.6}", e.tau_cov);
    let _ = writeln!(s, "  se (denominator N)  {:>12.6}", r.se_n);
    let _ = writeln!(s, "  se (denominator N-2){:>12.6}", r.se_n_minus_2);
    let _ = writeln!(s, "  gamma3              {:>12.6}", e.gamma3);
    let _ = writeln!(s, "  gamma4              {:>12.6}", e.gamma4);
    let _ = writeln!(s, "  max |centred score| {:>12.6}", e.max_abs_centred);
    let _ = writeln!(s, "  Wald (c = {})   {}", r.c, fmt_test(&r.wald));
    let _ = writeln!(s, "  LRT                 {}", fmt_test(&r.lrt));
    let _ = writeln!(s, "  LRT / 2c            {}", fmt_test(&r.scaled_lrt));
    s
}

pub fn render_matrix(r: &MatrixReport) -> String {
    let mut s = String::new();
    let width = r.columns.iter().map(String::len).max().unwrap_or(0).max(9);
    let _ = write!(s, "{:width$}", "");
    for c in &r.columns {
        let _ = write!(s, " {c:>width$}");
    }
    s.push('\n');
    for (name, row) in r.columns.iter().zip(&r.matrix) {
        let _ = write!(s, "{name:width$}");
        for v in row {
            let _ = write!(s, " {v:>width$.4}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "min eigenvalue {:.6} ({})", r.min_eigenvalue, if r.psd { "PSD" } else { "not PSD" });
    for p in &r.pairs {
        let _ = writeln!(s, "{} ~ {}: Wald {} | LRT/2c {}", p.a, p.b, fmt_test(&p.wald), fmt_test(&p.scaled_lrt));
    }
    s
}

pub fn render_fit(r: &FitReport) -> String {
    let f = &r.fit;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} ~ {} (n = {}, contrasts = {}, rank = {})",
        r.response,
        r.predictors.join(" + "),
        r.n,
        r.contrasts,
        r.contrast_rank
    );
    for (name, t) in r.predictors.iter().zip(&f.theta) {
        let _ = writeln!(s, "  {name:<16}{t:>14.8}");
    }
    let _ = writeln!(
        s,
        "converged = {}, iterations = {}, |gradient| = {:.3e}, feasibility margin = {:.6}{}",
        f.converged,
        f.iterations,
        f.gradient_norm,
        f.feasibility_margin,
        if f.rank_deficient { ", span-restricted" } else { "" }
    );
    for (i, it) in f.trace.iter().enumerate() {
        let _ = writeln!(s, "  iter {i:>3}  objective {:>16.10}  |g| {:.3e}  step {:.4}", it.objective, it.gradient_norm, it.step_size);
    }
    s
}

pub fn render_simulation(r: &CalibrationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "generator {} ({} replicates, seed {})", r.generator, r.replicates, r.seed);
    if !r.c_by_n.is_empty() {
        let _ = writeln!(s, "c_hat = {:.6} ± {:.6}", r.c_hat, r.c_hat_std_err);
        for c in &r.c_by_n {
            let _ = writeln!(s, "  n = {:>5}  n·Var/(1-τ²) = {:.6}  n²·Var/(1-τ²) = {:.6}", c.n, c.c_hat, c.c_hat_n2);
        }
        for (g, c) in &r.per_distribution {
            let _ = writeln!(s, "  {g:<24} {c:.6}");
        }
        let _ = writeln!(s, "stability spread {:.6}{}", r.stability_spread, if r.stability_flagged { " (FLAGGED)" } else { "" });
    }
    if let Some(ks) = r.normality_stat {
        let _ = writeln!(s, "KS distance to N(0,1): {ks:.5}");
    }
    for t in r.type_i_error.iter().chain(&r.power) {
        let name = match t.test {
            TestFamily::Wald => "Wald",
            TestFamily::Lrt => "LRT",
            TestFamily::ScaledLrt => "LRT/2c",
        };
        let setting = t.rho.map_or("null".to_string(), |rho| format!("rho {rho}"));
        let _ = writeln!(s, "  {name:<7}{setting:<9} n = {:>5}  rejection rate {:.4} (c = {:.6})", t.n, t.rate, t.c_used);
    }
    for a in &r.p_value_agreement {
        let _ = writeln!(s, "  n = {:>5} median |p_W - p_LRT/2c| = {:.3e} (raw LRT {:.3e})", a.n, a.median_abs_diff, a.median_abs_diff_raw);
    }
    if let Some(c) = &r.concentration {
        for e in &c.entries {
            let _ = writeln!(s, "  eps = {:<5} n = {:>5} exceed = {:.5} bound = {:.3e}", e.epsilon, e.n, e.proportion, e.bound);
        }
    }
    s
}
