use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use snewton_cli::config::{parse_override, RunConfig};
use snewton_cli::{error_json, error_kind};

#[derive(Parser)]
#[command(name = "snewton", version, about = "Planar Schrödinger–Newton solver and verification suite")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Domain half width.
    #[arg(long = "L")]
    half_width: Option<String>,
    /// none | odd
    #[arg(long)]
    symmetry: Option<String>,
    #[arg(long)]
    tol_residual: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    #[arg(long)]
    step0: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// dipole_gaussian | gaussian | file:PATH
    #[arg(long)]
    initial_guess: Option<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut overrides = Vec::new();
        for s in &self.set {
            overrides.push(parse_override(s)?);
        }
        let flags = [
            ("p", &self.p),
            ("n", &self.n),
            ("L", &self.half_width),
            ("symmetry", &self.symmetry),
            ("tol_residual", &self.tol_residual),
            ("max_iters", &self.max_iters),
            ("step0", &self.step0),
            ("seed", &self.seed),
            ("initial_guess", &self.initial_guess),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                overrides.push((k.to_string(), v.clone()));
            }
        }
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute a least-action solution and write its artifacts.
    Solve {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Base name of the output files.
        #[arg(long, default_value = "solution")]
        name: String,
    },
    /// Run diagnostics on a stored field.
    Verify {
        field: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// `all` or a comma-separated subset of the check names.
        #[arg(long, default_value = "all")]
        checks: String,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the actions of two stored fields.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Discretization error bar for the gap assertion.
        #[arg(long)]
        error_bar: Option<f64>,
        /// Estimate the error bar by re-solving both fields at twice the resolution.
        #[arg(long)]
        cross_validate: bool,
        /// Fail unless I_a − I_b exceeds gap_factor error bars.
        #[arg(long)]
        assert_gap: bool,
    },
    /// Write CSV profiles of a stored field.
    Export {
        field: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value = "export")]
        name: String,
    },
    /// Check the fast convolution against the direct sum.
    ConvolveTest {
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long = "L", default_value_t = 4.0)]
        half_width: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { cfg, out, name } => snewton_cli::cmd_solve(&cfg.load()?, &out, &name),
        Command::Verify { field, cfg, checks, out } => {
            snewton_cli::cmd_verify(&cfg.load()?, &field, &checks, out.as_deref())
        }
        Command::Compare {
            a,
            b,
            cfg,
            error_bar,
            cross_validate,
            assert_gap,
        } => snewton_cli::cmd_compare(&cfg.load()?, &a, &b, error_bar, cross_validate, assert_gap),
        Command::Export { field, cfg, out, name } => {
            snewton_cli::cmd_export(&cfg.load()?, &field, &out, &name).map(|_| true)
        }
        Command::ConvolveTest { n, half_width, seed } => snewton_cli::cmd_convolve_test(n, half_width, seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("{}", error_json(error_kind(&err), &format!("{err:#}")));
            ExitCode::from(2)
        }
    }
}
