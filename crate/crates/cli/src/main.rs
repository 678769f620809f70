use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mcmc_matching::canonical::{canonical_path, congestion_census};
use mcmc_matching::exact::{build_exact_chain, diagnose_chain, tv_distance_curve, DiagnosticsReport};
use mcmc_matching::problems::{load_problem, ProblemKind};
use mcmc_matching::sampler::{run, write_trace_csv, BetaSchedule, ChainConfig, Initial};
use mcmc_matching::{Error, GibbsParams, Instance, Matching, Shape};
use serde::Serialize;

/// MCMC optimizer and exact diagnostics for utility-maximizing bipartite matchings.
#[derive(Parser)]
#[command(name = "mcmatch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Metropolis optimizer on a problem file.
    Run(RunArgs),
    /// Build the exact chain and check it against the closed-form bounds.
    Diagnose(DiagnoseArgs),
    /// Print the canonical path between two matchings.
    Paths(PathsArgs),
    /// Count canonical paths through every transition.
    Census(ShapeArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem file (JSON).
    #[arg(long)]
    problem: PathBuf,
    /// scheduling, colouring, knapsack, cnf or table.
    #[arg(long)]
    kind: ProblemKind,
    /// Inverse temperature.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Piecewise-constant schedule `step:beta,...`; overrides --beta.
    #[arg(long)]
    beta_schedule: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hold with probability 1/2 before each proposal.
    #[arg(long)]
    lazy: bool,
    /// Trace CSV output.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Keep every k-th trace row.
    #[arg(long, default_value_t = 1)]
    stride: u64,
    /// Also write the summary JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Diagnose the lazy chain (default).
    #[arg(long, conflicts_with = "no_lazy")]
    lazy: bool,
    /// Diagnose the chain without holding; mixing bounds are then not asserted.
    #[arg(long)]
    no_lazy: bool,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Report JSON output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Total variation curve CSV (`t,d`) up to the mixing time.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ShapeArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
}

#[derive(Args)]
struct PathsArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    /// Initial matching as a JSON array, e.g. `[1,0]`.
    #[arg(long)]
    from: String,
    /// Final matching as a JSON array.
    #[arg(long)]
    to: String,
    /// Also emit the congestion census of the shape.
    #[arg(long)]
    census: bool,
}

/// An error with its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn io(path: &Path, err: io::Error) -> Self {
        Failure { code: 1, message: format!("{}: {err}", path.display()) }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::CapExceeded { .. } => 3,
            Error::BoundViolated { .. } => 4,
            Error::NoConvergence { .. } => 1,
            Error::InvalidInstance(_)
            | Error::InvalidMatching(_)
            | Error::InvalidSpec(_)
            | Error::InvalidParameter(_) => 2,
        };
        Failure { code, message: err.to_string() }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Paths(args) => cmd_paths(args),
        Command::Census(args) => cmd_census(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mcmatch: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(args: &ProblemArgs) -> CliResult<(Instance, GibbsParams)> {
    let text = fs::read_to_string(&args.problem)
        .map_err(|e| Failure::input(format!("{}: {e}", args.problem.display())))?;
    let inst = load_problem(args.kind, &text).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", args.problem.display(), f.message);
        f
    })?;
    Ok((inst, GibbsParams::new(args.beta)?))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::io(path, e))?;
    {
        let mut w = io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w).and_then(|()| w.flush()).map_err(|e| Failure::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Failure::io(path, e.error))?;
    Ok(())
}

fn json_string<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output types serialize")
}

fn print_json<T: Serialize>(value: &T) -> CliResult {
    match writeln!(io::stdout().lock(), "{}", json_string(value)) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Failure { code: 1, message: format!("stdout: {e}") }),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct RunSummary {
    m: usize,
    n: usize,
    steps: u64,
    seed: u64,
    lazy: bool,
    initial: Matching,
    initial_utility: f64,
    best: Matching,
    best_utility: f64,
    final_matching: Matching,
    final_utility: f64,
    proposals: u64,
    accepted: u64,
    acceptance_rate: f64,
}

fn cmd_run(args: RunArgs) -> CliResult {
    let (inst, params) = load(&args.problem)?;
    let mut cfg = ChainConfig::new(params, args.steps, args.seed).lazy(args.lazy);
    if let Some(text) = &args.beta_schedule {
        cfg = cfg.with_schedule(BetaSchedule::parse(text)?);
    }
    let stride = if args.trace.is_some() { args.stride } else { 0 };
    let out = run(&inst, &cfg, Initial::Random, stride)?;
    if let Some(path) = &args.trace {
        write_atomic(path, |w| write_trace_csv(w, &out.trace))?;
    }
    let summary = RunSummary {
        m: inst.m(),
        n: inst.n(),
        steps: args.steps,
        seed: args.seed,
        lazy: args.lazy,
        initial_utility: inst.utility(&out.initial),
        initial: out.initial.clone(),
        best: out.state.best.clone(),
        best_utility: out.state.best_utility,
        final_matching: out.state.current.clone(),
        final_utility: out.state.current_utility,
        proposals: out.proposals,
        accepted: out.accepted,
        acceptance_rate: out.acceptance_rate(),
    };
    if let Some(path) = &args.report {
        write_atomic(path, |w| writeln!(w, "{}", json_string(&summary)))?;
    }
    print_json(&summary)
}

fn write_tv_csv(w: &mut dyn Write, curve: &[f64]) -> io::Result<()> {
    writeln!(w, "t,d")?;
    for (t, d) in curve.iter().enumerate() {
        writeln!(w, "{t},{d}")?;
    }
    Ok(())
}

fn cmd_diagnose(args: DiagnoseArgs) -> CliResult {
    let (inst, params) = load(&args.problem)?;
    let lazy = !args.no_lazy;
    let chain = build_exact_chain(&inst, params, lazy)?;
    let report: DiagnosticsReport = diagnose_chain(&chain, args.eps)?;
    if let Some(path) = &args.report {
        write_atomic(path, |w| writeln!(w, "{}", json_string(&report)))?;
    }
    if let Some(path) = &args.trace {
        let curve = tv_distance_curve(&chain, report.tau_eps);
        write_atomic(path, |w| write_tv_csv(w, &curve))?;
    }
    print_json(&report)?;
    match report.violations().into_iter().next() {
        Some(v) => Err(Error::from(v).into()),
        None => Ok(()),
    }
}

fn shape_of(args: &ShapeArgs) -> CliResult<Shape> {
    Ok(Shape::new(args.m, args.n)?)
}

fn parse_matching(flag: &str, text: &str, shape: Shape) -> CliResult<Matching> {
    let assign: Vec<usize> = serde_json::from_str(text)
        .map_err(|e| Failure::input(format!("--{flag}: expected a JSON array of right vertices: {e}")))?;
    Matching::new(assign, shape).map_err(|e| Failure::input(format!("--{flag}: {e}")))
}

#[derive(Serialize)]
struct CensusEntry {
    from: Matching,
    to: Matching,
    pairs: u64,
}

#[derive(Serialize)]
struct CensusSummary {
    m: usize,
    n: usize,
    n_states: usize,
    max_pairs: u64,
    below_n_states: bool,
    transitions: Vec<CensusEntry>,
}

fn census_summary(shape: Shape) -> CliResult<CensusSummary> {
    let census = congestion_census(shape)?;
    let max_pairs = census.max_pairs();
    Ok(CensusSummary {
        m: shape.m(),
        n: shape.n(),
        n_states: census.n_states(),
        max_pairs,
        below_n_states: (max_pairs as usize) < census.n_states(),
        transitions: census
            .entries()
            .map(|(a, b, load)| CensusEntry { from: a.clone(), to: b.clone(), pairs: load.pairs })
            .collect(),
    })
}

#[derive(Serialize)]
struct PathWithCensus<'a> {
    path: &'a [Matching],
    census: CensusSummary,
}

fn cmd_paths(args: PathsArgs) -> CliResult {
    let shape = shape_of(&args.shape)?;
    let from = parse_matching("from", &args.from, shape)?;
    let to = parse_matching("to", &args.to, shape)?;
    let path = canonical_path(shape, &from, &to)?;
    if args.census {
        print_json(&PathWithCensus { path: path.states(), census: census_summary(shape)? })
    } else {
        print_json(&path.states())
    }
}

fn cmd_census(args: ShapeArgs) -> CliResult {
    print_json(&census_summary(shape_of(&args)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let cap = Error::CapExceeded { what: "x", count: 2, cap: 1 };
        let bound = Error::BoundViolated { check: "cheeger".into(), measured: 1.0, bound: 0.5 };
        assert_eq!(Failure::from(cap).code, 3);
        let f = Failure::from(bound);
        assert_eq!(f.code, 4);
        assert!(f.message.contains("cheeger"));
        assert_eq!(Failure::from(Error::InvalidSpec("y".into())).code, 2);
        assert_eq!(Failure::from(Error::InvalidMatching("y".into())).code, 2);
    }
}
