use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hypzero_cli::config::{parse_center, parse_range, ConfigPatch, CountMethod, ExperimentConfig, Format, RGrid};
use hypzero_cli::experiments::{
    constants, density_rows, eta_rows, mean_var_rows, run_l2_convergence, run_simulate, run_xl_sample, MeanVarCsvRow,
};
use hypzero_cli::record::{emit_rows, sink};
use hypzero_cli::verify::{run_suite, Suite, VerifyOptions};
use hypzero_cli::{HarnessError, EXIT_FAILURE};

#[derive(Parser)]
#[command(name = "hypzero", version, about = "Zeros of hyperbolic Gaussian analytic functions")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Model parameter L ≥ 0.
    #[arg(long = "L", global = true, allow_negative_numbers = true)]
    l: Option<f64>,
    /// Disc radius in (0, 1).
    #[arg(long, global = true)]
    r: Option<f64>,
    /// Radii: `a:b:n` (1 − r geometric from a to b) or `r1,r2,...`.
    #[arg(long, global = true)]
    r_grid: Option<String>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Master seed, decimal or 0x-hex [default: 0x5EED0000].
    #[arg(long, global = true, value_parser = parse_seed)]
    seed: Option<u64>,
    /// Relative truncation error of the GAF polynomial [default: 1e-6].
    #[arg(long, global = true)]
    eps_rel: Option<f64>,
    /// Truncation tolerance of the X_L series [default: 1e-3].
    #[arg(long, global = true)]
    eps_x: Option<f64>,
    /// Disc centre `re,im` (Euclidean) for off-centre counts.
    #[arg(long, global = true, allow_hyphen_values = true)]
    center: Option<String>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (falls back to HYPZERO_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Zero-counting method [default: winding].
    #[arg(long, global = true, value_enum)]
    method: Option<CountMethod>,
    /// Number of explicit chaos terms in `mean-var` [default: 32].
    #[arg(long, global = true)]
    alpha_max: Option<usize>,
    /// Pair the counts with an independent copy of X_L in `l2-convergence`.
    #[arg(long, global = true)]
    independent_x: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// c_L, κ_L, λ_L, ρ and ρ′ for --L (JSON).
    Constants,
    /// Mean, variance and chaos decomposition of the zero count for --L and
    /// --r or --r-grid. CSV columns: L, r, mean, variance_integral,
    /// variance_abs_error, chaos_total, chaos_tail, first_chaos_variance,
    /// asymptotic.
    MeanVar,
    /// Monte Carlo zero counts in a disc; one JSONL line per trial, then a summary.
    Simulate,
    /// E[(n̂ + c_L X_L)²] along --r-grid for L < 1/2.
    L2Convergence,
    /// Draws of X_L with moments and a KS test against the inverted law.
    XlSample,
    /// Law of X_L on a grid (0 < L < 1/2). CSV columns: x, pdf, cdf,
    /// right_tail_ref (κ_L e^{−x}, x > 0), left_tail_ref (−λ_L |x|^{1/L}, x < 0).
    Density {
        /// Grid `a:b:step`.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// EXPERIMENTAL. Φ_η(x) on a grid. CSV columns: eta, x, phi.
    ProbeEta {
        /// Comma-separated η values.
        #[arg(long)]
        eta: String,
        /// Grid `a:b:step`.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Run an acceptance suite and print a pass/fail table; exit 1 on any failure.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        /// Relative error injected into κ_L, with a seeded sign (mutation check).
        #[arg(long, default_value_t = 0.0)]
        perturb_kappa: f64,
    },
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.trim().replace('_', "");
    match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    }
    .map_err(|e| format!("bad seed '{s}': {e}"))
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Self::Constants => "constants",
            Self::MeanVar => "mean-var",
            Self::Simulate => "simulate",
            Self::L2Convergence => "l2-convergence",
            Self::XlSample => "xl-sample",
            Self::Density { .. } => "density",
            Self::ProbeEta { .. } => "probe-eta",
            Self::Verify { .. } => "verify",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Self::Simulate | Self::L2Convergence | Self::XlSample => Format::Jsonl,
            Self::Density { .. } | Self::ProbeEta { .. } => Format::Csv,
            _ => Format::Json,
        }
    }
}

fn patch_from_flags(c: &Common) -> Result<ConfigPatch, HarnessError> {
    Ok(ConfigPatch {
        l: c.l,
        r: c.r,
        r_grid: c.r_grid.clone().map(RGrid::Spec),
        trials: c.trials,
        seed: c.seed,
        eps_rel: c.eps_rel,
        eps_x: c.eps_x,
        center: c.center.as_deref().map(parse_center).transpose()?,
        out: c.out.clone(),
        threads: c.threads,
        format: c.format,
        method: c.method,
        alpha_max: c.alpha_max,
        independent_x: c.independent_x.then_some(true),
    })
}

/// Like [`emit_rows`], but a single JSON row is written as an object.
fn emit_record<R: serde::Serialize>(rows: &[R], format: Format, w: &mut dyn Write) -> Result<(), HarnessError> {
    match rows {
        [one] if format == Format::Json => {
            serde_json::to_writer_pretty(&mut *w, one).map_err(|e| HarnessError::Io(e.to_string()))?;
            writeln!(w)?;
            Ok(w.flush()?)
        }
        _ => emit_rows(rows, format, w),
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    let file = match &cli.common.config {
        Some(p) => ConfigPatch::from_file(p)?,
        None => ConfigPatch::default(),
    };
    let mut patch = file.overlay(patch_from_flags(&cli.common)?);
    patch.format.get_or_insert(cli.cmd.default_format());
    let cfg = ExperimentConfig::resolve(cli.cmd.name(), patch)?;
    let mut w = sink(cfg.out.as_deref())?;

    match &cli.cmd {
        Cmd::Constants => {
            emit_record(&[constants(cfg.require_l()?)?], cfg.format, &mut *w)?;
        }
        Cmd::MeanVar => {
            let rows = mean_var_rows(&cfg)?;
            if cfg.format == Format::Csv {
                let flat: Vec<MeanVarCsvRow> = rows.iter().map(Into::into).collect();
                emit_rows(&flat, cfg.format, &mut *w)?;
            } else {
                emit_record(&rows, cfg.format, &mut *w)?;
            }
        }
        Cmd::Simulate => run_simulate(&cfg)?.emit(&mut *w)?,
        Cmd::L2Convergence => run_l2_convergence(&cfg)?.emit(&mut *w)?,
        Cmd::XlSample => run_xl_sample(&cfg)?.emit(&mut *w)?,
        Cmd::Density { x } => {
            let rows = density_rows(cfg.require_l()?, &parse_range(x)?)?;
            emit_rows(&rows, cfg.format, &mut *w)?;
        }
        Cmd::ProbeEta { eta, x } => {
            let etas = eta
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| HarnessError::Usage(format!("bad --eta '{eta}'")))?;
            emit_rows(&eta_rows(&etas, &parse_range(x)?)?, cfg.format, &mut *w)?;
        }
        Cmd::Verify { suite, perturb_kappa } => {
            let opts = VerifyOptions {
                seed: cfg.seed,
                kappa_perturbation: *perturb_kappa,
                threads: cfg.threads,
            };
            let outcomes = run_suite(*suite, &opts, |o| {
                let _ = writeln!(w, "{}", o.line());
                let _ = w.flush();
            });
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            writeln!(w, "{} of {} criteria passed", outcomes.len() - failed, outcomes.len())?;
            w.flush()?;
            if failed > 0 {
                return Ok(ExitCode::from(EXIT_FAILURE as u8));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hypzero: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
