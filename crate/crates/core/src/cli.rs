//! `entropics` command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input, 2 an optimizer diagnostic or a
//! checked property failed.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::additivity::{
    chi_strong_additivity_gap, constrained_chi_additivity_gap, nu_additivity_gap, product_state_check,
    subchannel_min_entropy_gap, superadditivity_gap, AdditivityReport, Statement, TOL_OPT,
};
use crate::channel::{KrausChannel, Subsystem};
use crate::duality::{duality_check, AscentOptions, DEFAULT_GAP_TOL};
use crate::eof::{eof_with, BipartiteState};
use crate::error::{Error, Result};
use crate::formats::{read_channel, read_hermitian, read_state, write_atomic};
use crate::optimize::{chi, constrained_capacity, hhat, min_output_entropy, nu_h, OptimizerOptions, OptimizerReport};
use crate::propsuite::run_suite;
use crate::states::HermitianMatrix;
use crate::sweeps::{optimal_ensemble_track, truncation_sweep};

#[derive(Parser, Debug)]
#[command(name = "entropics", version, about = "Entropic characteristics of finite-dimensional quantum channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LogBase {
    /// Natural logarithm (nats).
    E,
    /// Base 2 (bits).
    #[value(name = "2")]
    Two,
}

impl LogBase {
    fn scale(self, x: f64) -> f64 {
        match self {
            LogBase::E => x,
            LogBase::Two => x / std::f64::consts::LN_2,
        }
    }

    fn unit(self) -> &'static str {
        match self {
            LogBase::E => "nats",
            LogBase::Two => "bits",
        }
    }
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Random restarts per optimization.
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    /// Iteration cap of each local run.
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative value tolerance of the local runs.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, value_enum, default_value = "e")]
    log_base: LogBase,
    /// Atoms in decomposition searches (default rank²).
    #[arg(long)]
    max_atoms: Option<usize>,
    /// Also write the report (or CSV) to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> OptimizerOptions {
        OptimizerOptions {
            restarts: self.restarts,
            max_iters: self.max_iters,
            value_tol: self.tol,
            max_atoms: self.max_atoms,
            seed: self.seed,
            ..OptimizerOptions::default()
        }
    }
}

#[derive(Args, Debug)]
struct ChannelState {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    state: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// χ of a channel at a state.
    Chi {
        #[command(flatten)]
        io: ChannelState,
        #[command(flatten)]
        common: Common,
    },
    /// Convex closure of the output entropy at a state.
    Hhat {
        #[command(flatten)]
        io: ChannelState,
        #[command(flatten)]
        common: Common,
    },
    /// Output purity: min over pure inputs of output entropy plus ⟨ψ|A|ψ⟩.
    Nu {
        #[arg(long)]
        channel: PathBuf,
        /// Observable `A` on the input space (.herm).
        #[arg(long)]
        observable: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Minimal output entropy.
    Minent {
        #[arg(long)]
        channel: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// χ capacity under an output energy constraint `Tr Φ(ρ)H ≤ h`.
    Capacity {
        #[arg(long)]
        channel: PathBuf,
        /// Positive observable `H` on the output space (.herm).
        #[arg(long)]
        constraint: PathBuf,
        #[arg(long)]
        bound: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the convex closure with its double Fenchel transform.
    FenchelCheck {
        #[command(flatten)]
        io: ChannelState,
        /// Largest accepted gap.
        #[arg(long, default_value_t = DEFAULT_GAP_TOL)]
        gap_tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Tensor-product additivity checks.
    Additivity(Box<AdditivityArgs>),
    /// Entanglement of formation of a bipartite state.
    Eof {
        #[arg(long)]
        state: PathBuf,
        /// Factorization `dAxdB`, e.g. `2x2`.
        #[arg(long)]
        dims: String,
        /// Trace out the first factor instead of the second.
        #[arg(long)]
        keep_b: bool,
        #[command(flatten)]
        common: Common,
    },
    /// χ of every spectral truncation of a state, as CSV.
    TruncationSweep {
        #[command(flatten)]
        io: ChannelState,
        #[command(flatten)]
        common: Common,
    },
    /// Optimal ensembles of the truncations, transported to the full state, as CSV.
    EnsembleTrack {
        #[command(flatten)]
        io: ChannelState,
        #[command(flatten)]
        common: Common,
    },
    /// Run the randomized property suite.
    Selftest {
        /// Trials per property.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct AdditivityArgs {
    /// Which statement: i, ii, iii, iv or v.
    #[arg(long, value_parser = parse_statement)]
    statement: Statement,
    #[arg(long)]
    channel: PathBuf,
    /// Second factor; defaults to the first.
    #[arg(long)]
    channel2: Option<PathBuf>,
    /// Joint state on the product input (statement i).
    #[arg(long)]
    joint_state: Option<PathBuf>,
    /// Factor states (statements iii and iv).
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long)]
    state2: Option<PathBuf>,
    /// Factor observables (statement ii).
    #[arg(long)]
    observable: Option<PathBuf>,
    #[arg(long)]
    observable2: Option<PathBuf>,
    /// Output energy observables and bounds (statement iv, constrained form).
    #[arg(long, requires = "bound")]
    constraint: Option<PathBuf>,
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long, requires = "bound2")]
    constraint2: Option<PathBuf>,
    #[arg(long)]
    bound2: Option<f64>,
    /// Subspace embeddings (statement v), each a one-operator `.chan`
    /// file holding the isometry.
    #[arg(long)]
    embed: Option<PathBuf>,
    #[arg(long)]
    embed2: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn parse_statement(s: &str) -> std::result::Result<Statement, String> {
    Statement::parse(s).ok_or_else(|| format!("unknown statement {s:?} (expected i, ii, iii, iv or v)"))
}

struct Output {
    text: String,
    /// Written to `--out` instead of `text` when present (CSV commands).
    file: Option<String>,
    problems: Vec<String>,
}

impl Output {
    fn new() -> Self {
        Self {
            text: String::new(),
            file: None,
            problems: Vec::new(),
        }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }
}

fn value_line(out: &mut Output, name: &str, value: f64, base: LogBase) {
    out.line(format!("{name} = {:.6} ({})", base.scale(value), base.unit()));
}

fn diagnostics(out: &mut Output, rep: &OptimizerReport) {
    let origin = if rep.best_restart_seed == u64::MAX {
        "warm start".to_string()
    } else {
        format!("seed {}", rep.best_restart_seed)
    };
    out.line(format!(
        "# restarts {}, best {} ({origin}), iterations {}, gradient norm {:.3e}, converged {}",
        rep.restarts_used, rep.best_restart, rep.iterations, rep.gradient_norm_at_exit, rep.converged
    ));
    if !rep.converged {
        out.problems.push("best restart did not converge".into());
    }
}

fn require(p: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    p.clone()
        .ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required for this statement")))
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("--dims expects `AxB`, got {s:?}"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn isometry_from(path: &Path) -> Result<crate::linalg::CMat> {
    let ch = read_channel(path)?;
    if ch.num_kraus() != 1 {
        return Err(Error::InvalidArgument(format!(
            "{} must hold a single operator (the isometry)",
            path.display()
        )));
    }
    Ok(ch.kraus()[0].clone())
}

fn additivity(a: &AdditivityArgs, opts: &OptimizerOptions) -> Result<AdditivityReport> {
    let phi = read_channel(&a.channel)?;
    let psi: KrausChannel = match &a.channel2 {
        Some(p) => read_channel(p)?,
        None => phi.clone(),
    };
    match a.statement {
        Statement::I => superadditivity_gap(&phi, &psi, &read_state(&require(&a.joint_state, "joint-state")?)?, opts),
        Statement::II => {
            let obs = |p: &Option<PathBuf>, d: usize| -> Result<HermitianMatrix> {
                match p {
                    Some(p) => read_hermitian(p),
                    None => Ok(HermitianMatrix::zeros(d)),
                }
            };
            nu_additivity_gap(&phi, &psi, &obs(&a.observable, phi.dim_in())?, &obs(&a.observable2, psi.dim_in())?, opts)
        }
        Statement::III => product_state_check(
            &phi,
            &psi,
            &read_state(&require(&a.state, "state")?)?,
            &read_state(&require(&a.state2, "state2")?)?,
            opts,
        ),
        Statement::IV => match (&a.constraint, &a.constraint2) {
            (Some(ca), Some(cb)) => constrained_chi_additivity_gap(
                &phi,
                &psi,
                (&read_hermitian(ca)?, a.bound.expect("clap requires bound")),
                (&read_hermitian(cb)?, a.bound2.expect("clap requires bound2")),
                opts,
            ),
            (None, None) => chi_strong_additivity_gap(
                &phi,
                &psi,
                &read_state(&require(&a.state, "state")?)?,
                &read_state(&require(&a.state2, "state2")?)?,
                opts,
            ),
            _ => Err(Error::InvalidArgument("give both --constraint and --constraint2 or neither".into())),
        },
        Statement::V => subchannel_min_entropy_gap(
            &phi,
            &psi,
            &isometry_from(&require(&a.embed, "embed")?)?,
            &isometry_from(&require(&a.embed2, "embed2")?)?,
            opts,
        ),
    }
}

fn execute(cmd: &Command) -> Result<(Output, Option<PathBuf>)> {
    let mut out = Output::new();
    let common = match cmd {
        Command::Chi { common, .. }
        | Command::Hhat { common, .. }
        | Command::Nu { common, .. }
        | Command::Minent { common, .. }
        | Command::Capacity { common, .. }
        | Command::FenchelCheck { common, .. }
        | Command::Eof { common, .. }
        | Command::TruncationSweep { common, .. }
        | Command::EnsembleTrack { common, .. }
        | Command::Selftest { common, .. } => common,
        Command::Additivity(a) => &a.common,
    };
    let opts = common.options();
    opts.validate()?;
    let base = common.log_base;
    match cmd {
        Command::Chi { io, .. } => {
            let rep = chi(&read_channel(&io.channel)?, &read_state(&io.state)?, &opts)?;
            value_line(&mut out, "chi", rep.value, base);
            diagnostics(&mut out, &rep);
            let cross = rep.crosscheck.unwrap_or(0.0);
            out.line(format!("# holevo crosscheck {cross:.3e}"));
            if cross > 1e-8 {
                out.problems.push(format!("certificate crosscheck {cross:.3e} exceeds 1e-8"));
            }
        }
        Command::Hhat { io, .. } => {
            let rep = hhat(&read_channel(&io.channel)?, &read_state(&io.state)?, &opts)?;
            value_line(&mut out, "hhat", rep.value, base);
            diagnostics(&mut out, &rep);
        }
        Command::Nu { channel, observable, .. } => {
            let rep = nu_h(&read_channel(channel)?, &read_hermitian(observable)?, &opts)?;
            value_line(&mut out, "nu", rep.value, base);
            diagnostics(&mut out, &rep);
        }
        Command::Minent { channel, .. } => {
            let rep = min_output_entropy(&read_channel(channel)?, &opts)?;
            value_line(&mut out, "minent", rep.value, base);
            diagnostics(&mut out, &rep);
        }
        Command::Capacity { channel, constraint, bound, .. } => {
            let rep = constrained_capacity(&read_channel(channel)?, &read_hermitian(constraint)?, *bound, &opts)?;
            value_line(&mut out, "capacity", rep.value, base);
            diagnostics(&mut out, &rep);
        }
        Command::FenchelCheck { io, gap_tol, .. } => {
            let rep = duality_check(
                &read_channel(&io.channel)?,
                &read_state(&io.state)?,
                &opts,
                &AscentOptions::default(),
                *gap_tol,
            )?;
            value_line(&mut out, "hhat", rep.hhat_value, base);
            value_line(&mut out, "double_conjugate", rep.hstarstar_value, base);
            value_line(&mut out, "gap", rep.gap, base);
            out.line(format!(
                "# ascent iterations {}, radius {}, stagnated {}",
                rep.ascent.iterations, rep.ascent.radius, rep.ascent.stagnated
            ));
            if !rep.within_tolerance() {
                out.problems.push(format!("gap {:.3e} outside [-1e-8, {gap_tol}]", rep.gap));
            }
        }
        Command::Additivity(a) => {
            let rep = additivity(a, &opts)?;
            out.line(format!("# statement {}: {}", rep.statement, rep.description));
            value_line(&mut out, "lhs", rep.lhs, base);
            value_line(&mut out, "rhs", rep.rhs, base);
            value_line(&mut out, "gap", rep.gap, base);
            if rep.violates_guarantee(TOL_OPT) {
                out.problems.push(format!("gap {:.3e} violates the guaranteed direction", rep.gap));
            }
            if rep.witnesses_nonadditivity(TOL_OPT) {
                out.line("# gap exceeds the optimizer tolerance in the non-guaranteed direction");
            }
        }
        Command::Eof { state, dims, keep_b, .. } => {
            let (da, db) = parse_dims(dims)?;
            let omega = BipartiteState::new(read_state(state)?, da, db)?;
            let keep = if *keep_b { Subsystem::B } else { Subsystem::A };
            let rep = eof_with(&omega, keep, &opts)?;
            value_line(&mut out, "eof", rep.value, base);
            diagnostics(&mut out, &rep);
        }
        Command::TruncationSweep { io, .. } => {
            let sweep = truncation_sweep(&read_channel(&io.channel)?, &read_state(&io.state)?, &opts)?;
            out.text = sweep.to_csv();
            if !sweep.all_bounds_ok() {
                out.problems.push("truncation bound violated".into());
            }
        }
        Command::EnsembleTrack { io, .. } => {
            let track = optimal_ensemble_track(&read_channel(&io.channel)?, &read_state(&io.state)?, &opts)?;
            out.text = track.to_csv();
            if !track.trend_ok() {
                out.problems.push("transported Holevo quantity is not monotone within tolerance".into());
            }
        }
        Command::Selftest { trials, .. } => {
            if *trials == 0 {
                return Err(Error::InvalidArgument("--trials must be at least 1".into()));
            }
            let report = run_suite(common.seed, *trials);
            out.text = report.summary_table();
            out.file = Some(report.to_csv());
            if !report.passed() {
                out.problems.push("property suite has failures".into());
            }
        }
    }
    Ok((out, common.out.clone()))
}

/// Parse `args` (program name first) and run the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok((out, path)) => {
            print!("{}", out.text);
            if let Some(p) = path {
                let payload = out.file.as_deref().unwrap_or(&out.text);
                if let Err(e) = write_atomic(&p, payload) {
                    eprintln!("error: writing {}: {e}", p.display());
                    return 1;
                }
            }
            if out.problems.is_empty() {
                0
            } else {
                let mut msg = String::new();
                for p in &out.problems {
                    let _ = writeln!(msg, "diagnostic: {p}");
                }
                eprint!("{msg}");
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
