//! Monte Carlo calibration of the variance constant, test size and power,
//! concentration, and exact enumeration of small discrete designs.
//!
//! Every replicate draws from its own ChaCha8 stream, selected from the
//! configured seed by `(study, n, replicate)`, so results do not depend on
//! scheduling or thread count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{KappaError, Result};
use crate::estimator::{kappa_cov, kappa_streaming};
use crate::inference::{
    standard_error, test_or_boundary, TestFamily, VarianceModel, DEFAULT_C,
};
use crate::normal;
use crate::scores::{centred_scores, kernel_product, ObservationVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    /// Independent standard normal margins.
    ContinuousGaussian,
    /// Independent uniform margins on `{1, ..., k}`.
    DiscreteUniform { k: u32 },
    /// Independent margins, each value a standard normal draw with
    /// probability 1/2 and otherwise one of `{-1, 0, 1}`.
    MixedTied,
    /// Standard bivariate normal with correlation `rho`.
    BivariateGaussian { rho: f64 },
}

impl Generator {
    pub fn name(&self) -> String {
        match self {
            Generator::ContinuousGaussian => "continuous-gaussian".into(),
            Generator::DiscreteUniform { k } => format!("discrete-uniform-{k}"),
            Generator::MixedTied => "mixed-tied".into(),
            Generator::BivariateGaussian { rho } => format!("bivariate-gaussian-{rho}"),
        }
    }

    pub fn is_independent(&self) -> bool {
        !matches!(self, Generator::BivariateGaussian { rho } if *rho != 0.0)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Generator::DiscreteUniform { k } if k < 2 => {
                Err(KappaError::Config(format!("discrete generator needs k >= 2, got {k}")))
            }
            Generator::BivariateGaussian { rho } if !(rho.abs() < 1.0) => {
                Err(KappaError::Config(format!("rho must satisfy |rho| < 1, got {rho}")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let (a, b) = match *self {
                Generator::ContinuousGaussian => (rng.sample(StandardNormal), rng.sample(StandardNormal)),
                Generator::DiscreteUniform { k } => {
                    (rng.gen_range(1..=k) as f64, rng.gen_range(1..=k) as f64)
                }
                Generator::MixedTied => (mixed_draw(rng), mixed_draw(rng)),
                Generator::BivariateGaussian { rho } => {
                    let u: f64 = rng.sample(StandardNormal);
                    let v: f64 = rng.sample(StandardNormal);
                    (u, rho * u + (1.0 - rho * rho).sqrt() * v)
                }
            };
            x.push(a);
            y.push(b);
        }
        (x, y)
    }
}

fn mixed_draw<R: Rng>(rng: &mut R) -> f64 {
    if rng.gen_bool(0.5) {
        rng.sample(StandardNormal)
    } else {
        rng.gen_range(-1i32..=1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub generator: Generator,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Alternatives for the power study.
    pub rho_grid: Vec<f64>,
    /// Deviation thresholds for the concentration table.
    pub epsilons: Vec<f64>,
    /// Fixed variance constant for the tests; when absent each sample size
    /// is calibrated on its own independent batch.
    pub c: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            generator: Generator::ContinuousGaussian,
            n_grid: vec![50, 100, 200],
            replicates: 1000,
            seed: 0x5eed,
            alpha: 0.05,
            rho_grid: vec![0.2, 0.5],
            epsilons: vec![0.05, 0.1, 0.2],
            c: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 100 {
            return Err(KappaError::Config(format!(
                "replicates must be >= 100, got {}",
                self.replicates
            )));
        }
        if self.n_grid.is_empty() {
            return Err(KappaError::Config("n_grid is empty".into()));
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < 5) {
            return Err(KappaError::Config(format!("every n must be >= 5, got {n}")));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(KappaError::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if let Some(c) = self.c {
            VarianceModel::with_c(c).map_err(|e| KappaError::Config(e.to_string()))?;
        }
        if let Some(r) = self.rho_grid.iter().find(|r| !(r.abs() < 1.0)) {
            return Err(KappaError::Config(format!("rho must satisfy |rho| < 1, got {r}")));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0)) {
            return Err(KappaError::Config(format!("epsilon must be > 0, got {e}")));
        }
        self.generator.validate()
    }
}

/// One Monte Carlo draw of the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replicate {
    pub tau_cov: f64,
    pub tau_corr: f64,
    /// Kendall τ_a, a baseline comparator.
    pub tau_a: f64,
}

/// Stream identifiers keep the batches of different studies disjoint.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Study {
    Main = 1,
    Calibration = 2,
    Alternative = 3,
    Population = 4,
}

fn stream_id(study: Study, n: usize, index: usize) -> u64 {
    ((study as u64) << 56) ^ ((n as u64) << 32) ^ index as u64
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Kendall's τ_a: (concordant - discordant) / (N(N-1)/2).
pub fn kendall_tau_a(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0i64;
    for k in 0..n {
        for l in (k + 1)..n {
            let p = (x[k] - x[l]) * (y[k] - y[l]);
            s += (p > 0.0) as i64 - (p < 0.0) as i64;
        }
    }
    s as f64 / (n * (n - 1) / 2) as f64
}

fn map_indices<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

fn run_batch(
    generator: Generator,
    n: usize,
    replicates: usize,
    seed: u64,
    study: Study,
    with_tau_a: bool,
) -> Vec<Replicate> {
    map_indices(replicates, |r| {
        let mut rng = rng_for(seed, stream_id(study, n, r));
        // degenerate draws (e.g. a constant discrete margin) are redrawn
        loop {
            let (x, y) = generator.sample(n, &mut rng);
            let s = kappa_streaming(&x, &y).expect("equal-length samples");
            if s.tau_corr.is_finite() {
                let tau_a = if with_tau_a { kendall_tau_a(&x, &y) } else { f64::NAN };
                return Replicate {
                    tau_cov: s.tau_cov,
                    tau_corr: s.tau_corr,
                    tau_a,
                };
            }
        }
    })
}

/// Monte Carlo replicates of the estimators for one generator and size.
pub fn replicates(generator: Generator, n: usize, count: usize, seed: u64) -> Vec<Replicate> {
    run_batch(generator, n, count, seed, Study::Main, true)
}

/// Neumaier-compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

fn mean(values: &[f64]) -> f64 {
    let mut s = CompensatedSum::default();
    values.iter().for_each(|&v| s.add(v));
    s.value() / values.len() as f64
}

/// Sample variance and the standard error of that variance.
fn variance_with_se(values: &[f64]) -> (f64, f64) {
    let m = mean(values);
    let r = values.len() as f64;
    let mut s2 = CompensatedSum::default();
    let mut s4 = CompensatedSum::default();
    for &v in values {
        let d2 = (v - m) * (v - m);
        s2.add(d2);
        s4.add(d2 * d2);
    }
    let var = s2.value() / (r - 1.0);
    let m4 = s4.value() / r;
    (var, ((m4 - var * var).max(0.0) / r).sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and the
/// standard normal CDF.
pub fn ks_normal(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let r = v.len() as f64;
    v.iter().enumerate().fold(0.0f64, |d, (i, &t)| {
        let f = normal::cdf(t);
        d.max((i as f64 + 1.0) / r - f).max(f - i as f64 / r)
    })
}

/// Least-squares slope of `y` on `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Sample size of the one-off plug-in estimate of a dependent generator's
/// population τ.
pub const POPULATION_PLUGIN_N: usize = 10_000;

/// Population κ-correlation: exactly 0 for independent generators, otherwise
/// a single large-sample plug-in estimate.
pub fn population_tau(generator: Generator, seed: u64) -> f64 {
    if generator.is_independent() {
        return 0.0;
    }
    let mut rng = rng_for(seed, stream_id(Study::Population, POPULATION_PLUGIN_N, 0));
    let (x, y) = generator.sample(POPULATION_PLUGIN_N, &mut rng);
    kappa_streaming(&x, &y).expect("equal lengths").tau_corr
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantBySize {
    pub n: usize,
    /// `n·Var(τ̂)/(1-τ²)`.
    pub c_hat: f64,
    pub std_err: f64,
    /// `n²·Var(τ̂)/(1-τ²)`, the constant under `1/n²` variance scaling.
    pub c_hat_n2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasEntry {
    pub n: usize,
    pub population: f64,
    pub mean_tau_corr: f64,
    pub mean_tau_cov: f64,
    pub bias_corr: f64,
    /// Monte Carlo standard error of the τ̂_cov mean.
    pub mc_se_cov: f64,
    /// Kendall τ_a mean, baseline only.
    pub mean_tau_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRate {
    pub test: TestFamily,
    pub n: usize,
    /// `None` under the null.
    pub rho: Option<f64>,
    pub rate: f64,
    pub c_used: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueAgreement {
    pub n: usize,
    /// Median |p_Wald - p_scaledLRT|.
    pub median_abs_diff: f64,
    /// Median |p_Wald - p_LRT| for the uncorrected LRT.
    pub median_abs_diff_raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationEntry {
    pub epsilon: f64,
    pub n: usize,
    pub exceedances: usize,
    pub proportion: f64,
    /// `2 exp(-c n ε²)`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub epsilon: f64,
    /// Slope of `ln((k + 1/2)/(R + 1))` against `n`.
    pub log_slope: f64,
    pub non_increasing: bool,
    pub exponential_decay: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationTable {
    pub c: f64,
    pub entries: Vec<ConcentrationEntry>,
    pub fits: Vec<DecayFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CalibrationReport {
    pub generator: String,
    pub replicates: usize,
    pub seed: u64,
    pub c_hat: f64,
    pub c_hat_std_err: f64,
    pub c_by_n: Vec<ConstantBySize>,
    pub per_distribution: BTreeMap<String, f64>,
    /// max over generators of |ĉ_g - median ĉ|.
    pub stability_spread: f64,
    pub stability_flagged: bool,
    pub bias_table: Vec<BiasEntry>,
    /// KS distance of the standardised estimates at the largest `n`.
    pub normality_stat: Option<f64>,
    pub type_i_error: Vec<RejectionRate>,
    pub power: Vec<RejectionRate>,
    pub p_value_agreement: Vec<PValueAgreement>,
    pub concentration: Option<ConcentrationTable>,
}

/// Spread above which the per-generator constants are flagged as unstable.
pub const STABILITY_TOLERANCE: f64 = 0.05;

fn constant_for(reps: &[Replicate], n: usize, tau: f64) -> ConstantBySize {
    let values: Vec<f64> = reps.iter().map(|r| r.tau_corr).collect();
    let (var, se) = variance_with_se(&values);
    let scale = 1.0 - tau * tau;
    ConstantBySize {
        n,
        c_hat: n as f64 * var / scale,
        std_err: n as f64 * se / scale,
        c_hat_n2: (n * n) as f64 * var / scale,
    }
}

fn average_constant(by_n: &[ConstantBySize]) -> (f64, f64) {
    let k = by_n.len() as f64;
    let c = by_n.iter().map(|b| b.c_hat).sum::<f64>() / k;
    let se = by_n.iter().map(|b| b.std_err * b.std_err).sum::<f64>().sqrt() / k;
    (c, se)
}

/// KS distance of `(τ̂ - τ)/se(τ̂)` with `se` from the variance model.
pub fn normality_stat(reps: &[Replicate], n: usize, tau: f64, vm: &VarianceModel) -> f64 {
    let z: Vec<f64> = reps
        .iter()
        .filter_map(|r| {
            let se = standard_error(r.tau_corr, n, vm).ok()?;
            (se > 0.0).then(|| (r.tau_corr - tau) / se)
        })
        .collect();
    ks_normal(&z)
}

/// Estimates `c = n·Var(τ̂)/(1-τ²)` for the configured generator, plus the
/// per-generator stability comparison, bias table and normality distance.
pub fn calibrate_c(cfg: &SimConfig) -> Result<CalibrationReport> {
    cfg.validate()?;
    let tau = population_tau(cfg.generator, cfg.seed);
    let mut by_n = Vec::new();
    let mut bias_table = Vec::new();
    let mut normality = None;
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let reps = run_batch(cfg.generator, n, cfg.replicates, cfg.seed, Study::Main, true);
        let constant = constant_for(&reps, n, tau);
        let covs: Vec<f64> = reps.iter().map(|r| r.tau_cov).collect();
        let corr_mean = mean(&reps.iter().map(|r| r.tau_corr).collect::<Vec<_>>());
        bias_table.push(BiasEntry {
            n,
            population: tau,
            mean_tau_corr: corr_mean,
            mean_tau_cov: mean(&covs),
            bias_corr: corr_mean - tau,
            mc_se_cov: (variance_with_se(&covs).0 / covs.len() as f64).sqrt(),
            mean_tau_a: mean(&reps.iter().map(|r| r.tau_a).collect::<Vec<_>>()),
        });
        if i + 1 == cfg.n_grid.len() {
            let vm = VarianceModel::with_c(constant.c_hat)?;
            normality = Some(normality_stat(&reps, n, tau, &vm));
        }
        by_n.push(constant);
    }
    let (c_hat, c_hat_std_err) = average_constant(&by_n);

    let mut per_distribution = BTreeMap::new();
    per_distribution.insert(cfg.generator.name(), c_hat);
    for g in [
        Generator::ContinuousGaussian,
        Generator::DiscreteUniform { k: 5 },
        Generator::MixedTied,
    ] {
        if per_distribution.contains_key(&g.name()) {
            continue;
        }
        let consts: Vec<ConstantBySize> = cfg
            .n_grid
            .iter()
            .map(|&n| constant_for(&run_batch(g, n, cfg.replicates, cfg.seed, Study::Main, false), n, 0.0))
            .collect();
        per_distribution.insert(g.name(), average_constant(&consts).0);
    }
    let values: Vec<f64> = per_distribution.values().copied().collect();
    let mid = median(&values);
    let stability_spread = values.iter().fold(0.0f64, |m, v| m.max((v - mid).abs()));

    Ok(CalibrationReport {
        generator: cfg.generator.name(),
        replicates: cfg.replicates,
        seed: cfg.seed,
        c_hat,
        c_hat_std_err,
        c_by_n: by_n,
        per_distribution,
        stability_spread,
        stability_flagged: stability_spread > STABILITY_TOLERANCE,
        bias_table,
        normality_stat: normality,
        ..CalibrationReport::default()
    })
}

/// Variance constant used for the tests at size `n`: the configured fixed
/// value, or a calibration on a batch disjoint from the evaluation batch.
pub fn test_constant(cfg: &SimConfig, generator: Generator, n: usize) -> Result<f64> {
    match cfg.c {
        Some(c) => Ok(c),
        None => {
            let reps = run_batch(generator, n, cfg.replicates, cfg.seed, Study::Calibration, false);
            Ok(constant_for(&reps, n, 0.0).c_hat)
        }
    }
}

struct TestOutcome {
    wald: f64,
    lrt: f64,
    scaled_lrt: f64,
}

fn run_tests(reps: &[Replicate], n: usize, vm: &VarianceModel) -> Result<Vec<TestOutcome>> {
    reps.iter()
        .map(|r| {
            Ok(TestOutcome {
                wald: test_or_boundary(TestFamily::Wald, r.tau_corr, n, vm)?.p_value,
                lrt: test_or_boundary(TestFamily::Lrt, r.tau_corr, n, vm)?.p_value,
                scaled_lrt: test_or_boundary(TestFamily::ScaledLrt, r.tau_corr, n, vm)?.p_value,
            })
        })
        .collect()
}

fn rates(
    outcomes: &[TestOutcome],
    n: usize,
    rho: Option<f64>,
    alpha: f64,
    c: f64,
) -> Vec<RejectionRate> {
    let r = outcomes.len() as f64;
    let rate = |pick: fn(&TestOutcome) -> f64| {
        outcomes.iter().filter(|o| pick(o) < alpha).count() as f64 / r
    };
    [
        (TestFamily::Wald, rate(|o| o.wald)),
        (TestFamily::Lrt, rate(|o| o.lrt)),
        (TestFamily::ScaledLrt, rate(|o| o.scaled_lrt)),
    ]
    .into_iter()
    .map(|(test, rate)| RejectionRate {
        test,
        n,
        rho,
        rate,
        c_used: c,
    })
    .collect()
}

/// Empirical size under independence and power under bivariate Gaussian
/// alternatives, with the Wald/LRT p-value agreement per `n`.
pub fn size_power_study(cfg: &SimConfig) -> Result<CalibrationReport> {
    cfg.validate()?;
    let null_gen = if cfg.generator.is_independent() {
        cfg.generator
    } else {
        Generator::ContinuousGaussian
    };
    let mut report = CalibrationReport {
        generator: null_gen.name(),
        replicates: cfg.replicates,
        seed: cfg.seed,
        ..CalibrationReport::default()
    };
    for &n in &cfg.n_grid {
        let c = test_constant(cfg, null_gen, n)?;
        let vm = VarianceModel::with_c(c)?;
        let reps = run_batch(null_gen, n, cfg.replicates, cfg.seed, Study::Main, false);
        let outcomes = run_tests(&reps, n, &vm)?;
        report.type_i_error.extend(rates(&outcomes, n, None, cfg.alpha, c));
        let diffs: Vec<f64> = outcomes.iter().map(|o| (o.wald - o.scaled_lrt).abs()).collect();
        let raw: Vec<f64> = outcomes.iter().map(|o| (o.wald - o.lrt).abs()).collect();
        report.p_value_agreement.push(PValueAgreement {
            n,
            median_abs_diff: median(&diffs),
            median_abs_diff_raw: median(&raw),
        });
        for &rho in &cfg.rho_grid {
            let alt = Generator::BivariateGaussian { rho };
            let reps = run_batch(alt, n, cfg.replicates, cfg.seed, Study::Alternative, false);
            let outcomes = run_tests(&reps, n, &vm)?;
            report.power.extend(rates(&outcomes, n, Some(rho), cfg.alpha, c));
        }
    }
    Ok(report)
}

/// Exceedance proportions `P(|τ̂ - τ| > ε)` over the size grid, the
/// sub-Gaussian bound `2exp(-c n ε²)`, and the fitted log-decay per ε.
pub fn concentration_check(cfg: &SimConfig) -> Result<ConcentrationTable> {
    cfg.validate()?;
    let c = cfg.c.unwrap_or(DEFAULT_C);
    let tau = population_tau(cfg.generator, cfg.seed);
    let batches: Vec<(usize, Vec<Replicate>)> = cfg
        .n_grid
        .iter()
        .map(|&n| (n, run_batch(cfg.generator, n, cfg.replicates, cfg.seed, Study::Main, false)))
        .collect();
    let r = cfg.replicates as f64;
    let mut entries = Vec::new();
    let mut fits = Vec::new();
    for &eps in &cfg.epsilons {
        let mut props = Vec::new();
        let mut logs = Vec::new();
        for (n, reps) in &batches {
            let k = reps.iter().filter(|rep| (rep.tau_corr - tau).abs() > eps).count();
            let proportion = k as f64 / r;
            props.push(proportion);
            logs.push(((k as f64 + 0.5) / (r + 1.0)).ln());
            entries.push(ConcentrationEntry {
                epsilon: eps,
                n: *n,
                exceedances: k,
                proportion,
                bound: 2.0 * (-c * *n as f64 * eps * eps).exp(),
            });
        }
        let ns: Vec<f64> = batches.iter().map(|(n, _)| *n as f64).collect();
        let log_slope = if ns.len() > 1 { slope(&ns, &logs) } else { 0.0 };
        let non_increasing = props.windows(2).all(|w| w[1] <= w[0]);
        fits.push(DecayFit {
            epsilon: eps,
            log_slope,
            non_increasing,
            exponential_decay: non_increasing && log_slope < 0.0,
        });
    }
    Ok(ConcentrationTable { c, entries, fits })
}

/// Finite joint distribution of `(X, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    /// `(x, y, probability)` atoms.
    pub atoms: Vec<(f64, f64, f64)>,
}

impl JointPmf {
    pub fn new(atoms: Vec<(f64, f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(KappaError::Config("empty pmf".into()));
        }
        let mut total = CompensatedSum::default();
        for &(x, y, p) in &atoms {
            if !(x.is_finite() && y.is_finite()) {
                return Err(KappaError::Config("non-finite support point".into()));
            }
            if !(p >= 0.0) {
                return Err(KappaError::Config(format!("negative probability {p}")));
            }
            total.add(p);
        }
        if (total.value() - 1.0).abs() > 1e-12 {
            return Err(KappaError::Config(format!(
                "probabilities sum to {}",
                total.value()
            )));
        }
        let distinct = |pick: fn(&(f64, f64, f64)) -> f64| {
            let mut v: Vec<f64> = atoms.iter().map(pick).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v.len()
        };
        let (sx, sy) = (distinct(|a| a.0), distinct(|a| a.1));
        if sx > 3 || sy > 3 {
            return Err(KappaError::TooLarge(format!(
                "support is {sx}×{sy}, at most 3×3 is enumerable"
            )));
        }
        Ok(Self { atoms })
    }

    /// Product of two independent marginal pmfs.
    pub fn independent(x: &[(f64, f64)], y: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            x.iter()
                .flat_map(|&(a, pa)| y.iter().map(move |&(b, pb)| (a, b, pa * pb)))
                .collect(),
        )
    }
}

/// Maximum sample size for exact enumeration.
pub const MAX_ENUMERATION_N: usize = 4;

/// Exact `E[τ̂_cov]` and `E[Z_12]` over all `|support|^n` samples.
pub fn exhaustive_unbiasedness(pmf: &JointPmf, n: usize) -> Result<(f64, f64)> {
    if n > MAX_ENUMERATION_N {
        return Err(KappaError::TooLarge(format!(
            "n = {n} exceeds the enumeration cap {MAX_ENUMERATION_N}"
        )));
    }
    if n < 2 {
        return Err(KappaError::TooFewObservations { min: 2, got: n });
    }
    let atoms: Vec<(f64, f64, f64)> = pmf.atoms.iter().copied().filter(|a| a.2 > 0.0).collect();
    let s = atoms.len();
    let mut index = vec![0usize; n];
    let mut exact = CompensatedSum::default();
    let mut population = CompensatedSum::default();
    loop {
        let prob: f64 = index.iter().map(|&i| atoms[i].2).product();
        let x = ObservationVector::new(index.iter().map(|&i| atoms[i].0).collect())?;
        let y = ObservationVector::new(index.iter().map(|&i| atoms[i].1).collect())?;
        let z = kernel_product(&centred_scores(&x), &centred_scores(&y))?;
        exact.add(prob * kappa_cov(&z));
        population.add(prob * z.get(0, 1));

        // odometer increment
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok((exact.value(), population.value()));
            }
            index[pos] += 1;
            if index[pos] < s {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.replicates = 99;
        assert!(matches!(calibrate_c(&cfg), Err(KappaError::Config(_))));
        cfg.replicates = 100;
        cfg.n_grid = vec![4];
        assert!(cfg.validate().is_err());
        cfg.n_grid = vec![10];
        cfg.generator = Generator::DiscreteUniform { k: 1 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn replicates_are_deterministic() {
        let a = replicates(Generator::MixedTied, 20, 50, 7);
        let b = replicates(Generator::MixedTied, 20, 50, 7);
        let c = replicates(Generator::MixedTied, 20, 50, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn ks_of_normal_quantiles_is_small() {
        // evenly spaced normal quantiles: KS distance is 1/(2R)
        let r = 1000;
        let q: Vec<f64> = (0..r)
            .map(|i| {
                let p = (i as f64 + 0.5) / r as f64;
                // bisection inverse of the normal CDF
                let (mut lo, mut hi) = (-10.0, 10.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if normal::cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        assert!((ks_normal(&q) - 0.5 / r as f64).abs() < 1e-9);
    }

    #[test]
    fn tau_a_basics() {
        assert_eq!(kendall_tau_a(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(kendall_tau_a(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
        assert_eq!(kendall_tau_a(&[1.0, 1.0, 1.0], &[3.0, 2.0, 1.0]), 0.0);
    }

    #[test]
    fn pmf_validation() {
        assert!(JointPmf::new(vec![(0.0, 0.0, 0.5), (1.0, 1.0, 0.4)]).is_err());
        let wide = (0..4).map(|i| (i as f64, 0.0, 0.25)).collect();
        assert!(matches!(JointPmf::new(wide), Err(KappaError::TooLarge(_))));
        let pmf = JointPmf::new(vec![(0.0, 0.0, 0.5), (1.0, 1.0, 0.5)]).unwrap();
        assert!(matches!(exhaustive_unbiasedness(&pmf, 5), Err(KappaError::TooLarge(_))));
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }
}
