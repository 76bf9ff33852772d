//! Command-line front end: state generation, entropy evaluation and scans,
//! reconstruction reports, and sampled invariant checks.
//!
//! Exit codes: 0 success, 1 validation failure (bad flags, malformed files,
//! failed invariants), 2 algorithm error, 3 I/O error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use ctxent::gleason::{check_measure, measure_from_state};
use ctxent::io::{read_context, read_state, report_json, write_json, write_state};
use ctxent::quantum::born_weights;
use ctxent::{
    coarsen, contextual_entropy, derive_seed, eigencontext, haar_like_unitary, majorizes,
    oracle_from_state, random_maximal_context, random_partition, reconstruct, reconstruct_qubit,
    shannon_of, von_neumann, DensityMatrix, Error, Proposer, ReconstructionConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_ALGORITHM: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Tolerances used by `verify`.
const VERIFY_TOL: f64 = 1e-10;
const MINIMALITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    /// Files written by the command, in order.
    pub artifacts: Vec<PathBuf>,
}

#[derive(Parser, Debug)]
#[command(
    name = "ctxent",
    version,
    about = "Contextual entropy of quantum states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProposerArg {
    Spectral,
    Search,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a seeded random density matrix of the given rank.
    Gen {
        #[arg(long)]
        dim: usize,
        /// Defaults to full rank.
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the contextual entropy of a state in a context.
    Entropy {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        context: PathBuf,
    },
    /// Evaluate the entropy on random maximal contexts and write them as CSV.
    Scan {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Reconstruct a state from its entropy oracle and write a JSON report.
    Reconstruct {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_enum, default_value = "spectral")]
        proposer: ProposerArg,
        /// Random restarts for the search proposer.
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        /// Fixing-unitary rotation angle in radians.
        #[arg(long, default_value_t = 0.37)]
        theta: f64,
        /// Table matching and pure-state tolerance.
        #[arg(long, env = "CTXENT_TOL", default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Accept a two-dimensional state and report both candidates.
        #[arg(long)]
        qubit: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run sampled invariant checks and print pass/fail counts.
    Verify {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// A failed command: exit code plus diagnostic.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code_for(&e),
            message: e.to_string(),
        }
    }
}

/// Maps a library error to its exit code.
pub fn exit_code_for(e: &Error) -> i32 {
    match e.root() {
        Error::Io(_) => EXIT_IO,
        Error::Format(_)
        | Error::NotHermitian(_)
        | Error::NotUnitary(_)
        | Error::NotProjector(_)
        | Error::NotOrthogonal(..)
        | Error::IncompleteSum(_)
        | Error::DimensionMismatch(..)
        | Error::LengthMismatch(..)
        | Error::NotADensityMatrix(_)
        | Error::InvalidDistribution(_)
        | Error::InvalidPartition(_)
        | Error::InvalidConfig(_) => EXIT_VALIDATION,
        _ => EXIT_ALGORITHM,
    }
}

/// Runs with the process's standard streams.
pub fn run<I, S>(argv: I) -> CommandOutcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    run_with(
        argv,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}

/// Runs with explicit output and diagnostic streams. `argv[0]` is the
/// program name.
pub fn run_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> CommandOutcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return CommandOutcome {
                exit_code: code,
                artifacts: Vec::new(),
            };
        }
    };
    let mut artifacts = Vec::new();
    match dispatch(cli.command, out, &mut artifacts) {
        Ok(()) => CommandOutcome {
            exit_code: EXIT_OK,
            artifacts,
        },
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            CommandOutcome {
                exit_code: f.code,
                artifacts,
            }
        }
    }
}

fn dispatch(
    cmd: Command,
    out: &mut dyn Write,
    artifacts: &mut Vec<PathBuf>,
) -> Result<(), Failure> {
    match cmd {
        Command::Gen {
            dim,
            rank,
            seed,
            output,
        } => {
            let rho = DensityMatrix::random(dim, rank.unwrap_or(dim), seed)?;
            write_state(&output, &rho)?;
            artifacts.push(output);
        }
        Command::Entropy { state, context } => {
            let rho = read_state(&state)?;
            let c = read_context(&context)?;
            emit(
                out,
                &format!("{}\n", decimal(contextual_entropy(&rho, &c)?)),
            )?;
        }
        Command::Scan {
            state,
            samples,
            seed,
            output,
        } => scan(&state, samples, seed, &output, out, artifacts)?,
        Command::Reconstruct {
            state,
            proposer,
            restarts,
            theta,
            tol,
            seed,
            qubit,
            output,
        } => {
            let rho = read_state(&state)?;
            let cfg = ReconstructionConfig {
                value_tol: tol,
                entropy_tol: tol,
                theta,
                seed,
                proposer: match proposer {
                    ProposerArg::Spectral => Proposer::Spectral,
                    ProposerArg::Search => Proposer::Search { restarts },
                },
                ..ReconstructionConfig::default()
            };
            cfg.validate()?;
            if qubit && rho.dim() != 2 {
                return Err(Failure::validation(format!(
                    "--qubit needs a two-dimensional state, got dimension {}",
                    rho.dim()
                )));
            }
            let oracle = oracle_from_state(rho);
            let report = if qubit {
                reconstruct_qubit(&oracle, &cfg)?
            } else {
                reconstruct(&oracle, &cfg).map_err(|e| {
                    let hint = matches!(e.root(), Error::DimensionTooSmall(2));
                    let mut f = Failure::from(e);
                    if hint {
                        f.message
                            .push_str(" (pass --qubit for two-dimensional states)");
                    }
                    f
                })?
            };
            write_json(&output, &report_json(&report))?;
            artifacts.push(output);
            let mut line = format!(
                "branch {} queries {}",
                report.branch.as_str(),
                report.query_count
            );
            if let Some(r) = report.residual {
                line.push_str(&format!(" residual {}", decimal(r)));
            }
            emit(out, &format!("{line}\n"))?;
        }
        Command::Verify { dim, trials, seed } => {
            let tallies = verify(dim, trials, seed)?;
            let mut failed = 0;
            for t in &tallies {
                emit(
                    out,
                    &format!("{} pass {} fail {}\n", t.name, t.pass, t.fail),
                )?;
                failed += t.fail;
            }
            if failed > 0 {
                return Err(Failure::validation(format!(
                    "{failed} invariant checks failed"
                )));
            }
        }
    }
    Ok(())
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::from(Error::Io(e)))
}

/// 17 significant digits in positional notation.
pub fn decimal(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.16}");
    }
    let exponent = x.abs().log10().floor() as i32;
    let precision = (16 - exponent).max(0) as usize;
    format!("{x:.precision$}")
}

fn scan(
    state: &Path,
    samples: usize,
    seed: u64,
    output: &Path,
    out: &mut dyn Write,
    artifacts: &mut Vec<PathBuf>,
) -> Result<(), Failure> {
    if samples == 0 {
        return Err(Failure::validation("--samples must be positive"));
    }
    let rho = read_state(state)?;
    let n = rho.dim();
    let mut csv = String::from("seed_index,entropy\n");
    let mut min = f64::INFINITY;
    for k in 0..samples {
        let h = contextual_entropy(
            &rho,
            &random_maximal_context(n, derive_seed(seed, k as u64)),
        )?;
        min = min.min(h);
        csv.push_str(&format!("{k},{}\n", decimal(h)));
    }
    std::fs::write(output, csv).map_err(Error::Io)?;
    artifacts.push(output.to_path_buf());
    let vn = von_neumann(&rho)?;
    emit(
        out,
        &format!("min {} von_neumann {}\n", decimal(min), decimal(vn)),
    )?;
    if min < vn - MINIMALITY_TOL {
        return Err(Failure::validation(format!(
            "sampled minimum {min} is below the von Neumann entropy {vn}"
        )));
    }
    Ok(())
}

struct Tally {
    name: &'static str,
    pass: usize,
    fail: usize,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            pass: 0,
            fail: 0,
        }
    }

    fn record(&mut self, ok: bool) {
        if ok {
            self.pass += 1;
        } else {
            self.fail += 1;
        }
    }
}

/// Per-trial checks of monotonicity with the recursion identity, minimality,
/// Schur-Horn majorization and additivity of state-backed measures.
fn verify(dim: usize, trials: usize, seed: u64) -> Result<Vec<Tally>, Failure> {
    if dim == 0 {
        return Err(Failure::validation("--dim must be positive"));
    }
    let mut monotonicity = Tally::new("monotonicity");
    let mut minimality = Tally::new("minimality");
    let mut schur_horn = Tally::new("schur_horn");
    let mut additivity = Tally::new("additivity");
    for t in 0..trials {
        let s = derive_seed(seed, t as u64);
        let rank = 1 + t % dim;
        let rho = DensityMatrix::random(dim, rank, derive_seed(s, 0))?;
        let fine = random_maximal_context(dim, derive_seed(s, 1));

        let blocks = random_partition(dim, derive_seed(s, 2));
        let coarse = coarsen(&fine, &blocks)?;
        let hf = contextual_entropy(&rho, &fine)?;
        let hc = contextual_entropy(&rho, &coarse)?;
        let wf = born_weights(&rho, &fine)?;
        let within: f64 = blocks
            .iter()
            .map(|b| {
                let q: f64 = b.iter().map(|&i| wf[i]).sum();
                if q > 0.0 {
                    q * shannon_of(&b.iter().map(|&i| wf[i] / q).collect::<Vec<_>>())
                } else {
                    0.0
                }
            })
            .sum();
        monotonicity.record(hc <= hf + VERIFY_TOL && (hf - hc - within).abs() <= VERIFY_TOL);

        let vn = von_neumann(&rho)?;
        let at_eigen = contextual_entropy(&rho, &eigencontext(&rho)?)?;
        minimality.record(hf >= vn - MINIMALITY_TOL && (at_eigen - vn).abs() <= VERIFY_TOL);

        let rotated = rho
            .matrix()
            .conjugate_by(&haar_like_unitary(dim, derive_seed(s, 3)));
        let diag: Vec<f64> = rotated.diagonal().iter().map(|z| z.re).collect();
        schur_horn.record(majorizes(&rho.eigenvalues()?, &diag)?);

        let report = check_measure(&measure_from_state(rho), 10, derive_seed(s, 4));
        additivity.record(report.passes(VERIFY_TOL));
    }
    Ok(vec![monotonicity, minimality, schur_horn, additivity])
}
