use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kappa_cli::commands::{self, cmd_corr, cmd_fit, cmd_matrix, cmd_simulate};
use kappa_cli::dataset::{load_csv, Dataset, LoadOptions, NaPolicy};
use kappa_cli::CliError;
use kappa_core::inference::{Denominator, VarianceModel, DEFAULT_C};
use kappa_core::regression::FitOptions;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "kappa", version, about = "Kemeny-metric rank correlation and inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum DenominatorArg {
    #[value(name = "n")]
    N,
    #[value(name = "n-2")]
    NMinus2,
}

#[derive(Args)]
struct Input {
    /// CSV file with one numeric column per variable.
    file: PathBuf,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Treat the first row as data and name columns col1, col2, ...
    #[arg(long)]
    no_header: bool,
    #[arg(long, value_enum, default_value_t = NaPolicy::Reject)]
    na_policy: NaPolicy,
}

#[derive(Args)]
struct Variance {
    /// Asymptotic variance constant.
    #[arg(long, default_value_t = DEFAULT_C)]
    c: f64,
    #[arg(long, value_enum, default_value_t = DenominatorArg::N)]
    variance_denominator: DenominatorArg,
}

#[derive(Subcommand)]
enum Command {
    /// Correlation between two columns with Wald and likelihood-ratio tests.
    Corr {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        col_x: String,
        #[arg(long)]
        col_y: String,
        #[command(flatten)]
        variance: Variance,
    },
    /// Correlation matrix over every column.
    Matrix {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        variance: Variance,
    },
    /// Pairwise-contrast regression of a response on predictors.
    Fit {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        response: String,
        /// Comma-separated predictor columns.
        #[arg(long, value_delimiter = ',', required = true)]
        predictors: Vec<String>,
        /// Divide the response scores by this variance proxy.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
    },
    /// Monte Carlo studies driven by a TOML config.
    Simulate {
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
}

impl Input {
    fn load(&self) -> Result<Dataset, CliError> {
        if !self.delimiter.is_ascii() {
            return Err(CliError::Input(format!("delimiter `{}` is not ASCII", self.delimiter)));
        }
        load_csv(
            &self.file,
            &LoadOptions {
                delimiter: self.delimiter as u8,
                has_header: !self.no_header,
                na_policy: self.na_policy,
            },
        )
    }
}

impl Variance {
    fn model(&self) -> Result<VarianceModel, CliError> {
        let denominator = match self.variance_denominator {
            DenominatorArg::N => Denominator::N,
            DenominatorArg::NMinus2 => Denominator::NMinus2,
        };
        Ok(VarianceModel::new(self.c, denominator)?)
    }
}

fn emit<T: Serialize>(format: Format, value: &T, table: impl Fn(&T) -> String) -> Result<String, CliError> {
    match format {
        Format::Table => Ok(table(value)),
        Format::Json => serde_json::to_string_pretty(value)
            .map(|s| s + "\n")
            .map_err(|e| CliError::Input(e.to_string())),
    }
}

fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Corr { input, col_x, col_y, variance } => {
            let report = cmd_corr(&input.load()?, col_x, col_y, &variance.model()?)?;
            emit(cli.format, &report, commands::render_corr)
        }
        Command::Matrix { input, variance } => {
            let report = cmd_matrix(&input.load()?, &variance.model()?)?;
            emit(cli.format, &report, commands::render_matrix)
        }
        Command::Fit { input, response, predictors, c, tol, max_iter } => {
            let options = FitOptions {
                tol: *tol,
                max_iter: *max_iter,
                ..FitOptions::default()
            };
            let report = cmd_fit(&input.load()?, response, predictors, &options, *c)?;
            let out = emit(cli.format, &report, commands::render_fit)?;
            if !report.fit.converged {
                print!("{out}");
                return Err(CliError::Numerical(format!(
                    "solver did not converge in {} iterations (gradient norm {:.3e})",
                    report.fit.iterations, report.fit.gradient_norm
                )));
            }
            Ok(out)
        }
        Command::Simulate { config, seed } => {
            let report = cmd_simulate(config, *seed)?;
            emit(cli.format, &report, commands::render_simulation)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("kappa: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
