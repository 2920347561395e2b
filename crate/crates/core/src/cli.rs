//! `lecp` command line: classify, witness, verify and all.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::MeasureSpec;
use crate::plasticity::{classify, violating_subset, Verdict};
use crate::spectrum::{parse_descriptor, SpectralDescriptor};
use crate::verify::{
    check_cell_pushforward, check_extremal_invariance, check_finite_dim_plasticity,
    check_min_attained, check_rayleigh_bounds, check_transport_isometry,
    witness_checks, Budget, TruncatedQuadraticSpace, VerificationReport,
};
use crate::witness::Witness;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_NOT_PLASTIC: i32 = 3;

const WITNESS_SAMPLES: usize = 1000;
const FUNCTIONS_PER_CELL: usize = 20;
const PUSHFORWARD_INTERVALS: usize = 100;
const SPACE_SAMPLES: usize = 1000;
const FINITE_DIM_TRIALS: usize = 200;
const REFERENCE_DIM: usize = 8;

#[derive(Debug, Parser)]
#[command(name = "lecp", version, about = "Plasticity of ellipsoids from spectral descriptors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Classify,
    Witness,
    Verify,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide plasticity and print the verdict.
    Classify(RunConfig),
    /// Verdict plus the witness operator for non-plastic descriptors.
    Witness(RunConfig),
    /// Verdict, witness and numerical checks.
    Verify(RunConfig),
    /// Everything, including finite-dimensional and pushforward checks.
    All(RunConfig),
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Descriptor JSON file.
    #[arg(long)]
    pub input: PathBuf,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Window half-width K.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..=4096))]
    pub window: u64,
    /// Quadrature nodes per cell.
    #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u64).range(16..=1 << 20))]
    pub nodes: u64,
    /// Terms kept per eigenvalue sequence in truncations.
    #[arg(long = "per-sequence", default_value_t = 32)]
    pub per_sequence: u32,
    /// Include sampled multiplier tables.
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub descriptor: SpectralDescriptor,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<VerificationReport>>,
    pub seed: u64,
    pub version: &'static str,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        let failed = self
            .checks
            .as_ref()
            .is_some_and(|c| c.iter().any(|r| !r.pass));
        if failed {
            EXIT_CHECK_FAILED
        } else if self.verdict.plastic {
            EXIT_OK
        } else {
            EXIT_NOT_PLASTIC
        }
    }
}

/// Up to `REFERENCE_DIM` eigenvalues representative of the descriptor: an
/// even subsample of the truncated point spectrum, or quantiles of the
/// continuous part when there are no eigenvalues.
fn reference_space(
    d: &SpectralDescriptor,
    point_space: Option<&TruncatedQuadraticSpace>,
) -> Result<TruncatedQuadraticSpace> {
    let lambdas: Vec<f64> = match point_space {
        Some(space) => {
            let l = space.lambdas();
            if l.len() <= REFERENCE_DIM {
                l.to_vec()
            } else {
                let last = (l.len() - 1) as f64;
                (0..REFERENCE_DIM)
                    .map(|i| l[(i as f64 * last / (REFERENCE_DIM - 1) as f64).round() as usize])
                    .collect()
            }
        }
        None => {
            let m = MeasureSpec::new(d.continuous.clone())?;
            (0..REFERENCE_DIM)
                .map(|i| m.quantile(m.total_mass() * (i as f64 + 0.5) / REFERENCE_DIM as f64))
                .collect::<Result<_>>()?
        }
    };
    TruncatedQuadraticSpace::from_diagonal(lambdas)
}

fn space_checks(space: &TruncatedQuadraticSpace, seed: u64) -> Result<Vec<VerificationReport>> {
    let mut out = vec![check_rayleigh_bounds(space, SPACE_SAMPLES, seed)];
    if space.dimension() >= 2 {
        out.push(check_min_attained(space, SPACE_SAMPLES, seed)?);
    }
    Ok(out)
}

/// Builds the report for one command on a parsed descriptor.
pub fn build_report(kind: CommandKind, d: SpectralDescriptor, cfg: &RunConfig) -> Result<Report> {
    let verdict = classify(&d);
    let window = cfg.window as usize;
    let witness = match (kind, violating_subset(&d)) {
        (CommandKind::Classify, _) | (_, None) => None,
        (_, Some(cert)) => Some(Witness::build(&d, &cert, window)?),
    };

    let checks = if matches!(kind, CommandKind::Verify | CommandKind::All) {
        let budget = Budget {
            samples: WITNESS_SAMPLES,
            nodes: cfg.nodes as usize,
            seed: cfg.seed,
        };
        let mut checks = Vec::new();
        if let Some(w) = &witness {
            checks.extend(witness_checks(w, budget)?);
        }
        let point_space = if d.has_point_spectrum() {
            Some(TruncatedQuadraticSpace::from_descriptor(&d, cfg.per_sequence, None)?)
        } else {
            None
        };
        if let Some(space) = &point_space {
            checks.extend(space_checks(space, cfg.seed)?);
        }
        if kind == CommandKind::All {
            if let Some(Witness::Transport(t)) = &witness {
                checks.push(check_transport_isometry(t, FUNCTIONS_PER_CELL, budget)?);
                checks.push(check_cell_pushforward(t, PUSHFORWARD_INTERVALS, cfg.seed)?);
            }
            let reference = reference_space(&d, point_space.as_ref())?;
            if reference.dimension() >= 2 {
                checks.extend(check_finite_dim_plasticity(&reference, FINITE_DIM_TRIALS, cfg.seed)?);
                checks.extend(check_extremal_invariance(&reference, FINITE_DIM_TRIALS, cfg.seed)?);
            }
        }
        Some(checks)
    } else {
        None
    };

    Ok(Report {
        descriptor: d,
        verdict,
        witness: witness.map(|w| w.summary(cfg.full)),
        checks,
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION"),
    })
}

fn render(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn execute(kind: CommandKind, cfg: &RunConfig) -> std::result::Result<i32, String> {
    let text = std::fs::read_to_string(&cfg.input)
        .map_err(|e| format!("cannot read {}: {e}", cfg.input.display()))?;
    let fail = |e: Error| format!("{}: {e}", e.code());
    let descriptor = parse_descriptor(&text).map_err(fail)?;
    let report = build_report(kind, descriptor, cfg).map_err(fail)?;
    let doc = render(&report);
    match &cfg.output {
        Some(path) => std::fs::write(path, doc)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => std::io::stdout()
            .write_all(doc.as_bytes())
            .map_err(|e| format!("cannot write report: {e}"))?,
    }
    if let Some(checks) = &report.checks {
        for c in checks.iter().filter(|c| !c.pass) {
            eprintln!(
                "check {} failed: residual {:e} > threshold {:e}",
                c.name, c.worst_residual, c.threshold
            );
        }
    }
    Ok(report.exit_code())
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (kind, cfg) = match &cli.command {
        Command::Classify(c) => (CommandKind::Classify, c),
        Command::Witness(c) => (CommandKind::Witness, c),
        Command::Verify(c) => (CommandKind::Verify, c),
        Command::All(c) => (CommandKind::All, c),
    };
    execute(kind, cfg).unwrap_or_else(|msg| {
        eprintln!("lecp: {msg}");
        EXIT_USAGE
    })
}
