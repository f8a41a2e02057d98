//! `bellmark`: build Bell operators, evaluate multipartite entanglement
//! witnesses, simulate measurements, optimise settings and run the
//! randomized verification suites.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 invalid input, 3 a
//! verification suite found violations, 64 usage error.

mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use bellmark::bell::{self, CorrelatorCoefficients, Estimate, MeasurementSetup};
use bellmark::bounds::{self, Mode, Pow2, WitnessInput, WitnessVerdict};
use bellmark::linalg::{self, DensityOperator};
use bellmark::optimize::{self, OptimizeOptions};
use bellmark::states::{Partition, PartitionProfile};
use bellmark::verify::{self, TrialReport};
use bellmark::{io, measurement};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use run::{CliError, CliResult, Run};

const DIM_CAP_ENV: &str = "BELLMARK_DIM_CAP";
const EXIT_VIOLATIONS: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "bellmark", version, about = "Bell-type witnesses for multipartite entanglement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bell operator construction.
    #[command(subcommand)]
    Bell(BellCommand),
    /// Print the separability bounds for a partition profile.
    Bound(BoundArgs),
    /// Judge a state or measured data against the bounds.
    #[command(subcommand)]
    Witness(WitnessCommand),
    /// Sample finite-shot correlators for every setting string.
    Simulate(SimulateArgs),
    /// Maximise <B>^2 + <B'>^2 over qubit settings.
    Optimize(OptimizeArgs),
    /// Optimise GHZ-noise states over a grid of visibilities.
    Scan(ScanArgs),
    /// Randomized verification suites.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Subcommand)]
enum BellCommand {
    /// Build B and B' for a setup.
    Build(BellBuildArgs),
}

#[derive(Args, Serialize)]
struct BellBuildArgs {
    /// Setup JSON file or inline JSON.
    #[arg(long)]
    setup: String,
    /// 1-based sites, comma separated; all sites when omitted.
    #[arg(long)]
    subset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct BoundArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: usize,
    /// Quadratic bound for anticommuting local observables.
    #[arg(long)]
    anticommute: bool,
    /// Print only the linear bound.
    #[arg(long)]
    linear: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum WitnessCommand {
    /// Exact expectation values for a state and setup.
    Eval(WitnessEvalArgs),
    /// Estimates from a correlation record.
    FromData(WitnessDataArgs),
}

#[derive(Args, Serialize, Clone)]
struct Hypothesis {
    /// Block count of a separability hypothesis to test.
    #[arg(long, requires = "hyp_m")]
    hyp_k: Option<usize>,
    /// Singleton count of the hypothesis.
    #[arg(long, requires = "hyp_k")]
    hyp_m: Option<usize>,
}

impl Hypothesis {
    fn profile(&self) -> Option<PartitionProfile> {
        Some(PartitionProfile {
            k: self.hyp_k?,
            m: self.hyp_m?,
        })
    }
}

#[derive(Args, Serialize)]
struct WitnessEvalArgs {
    /// State JSON file or inline JSON.
    #[arg(long)]
    state: String,
    /// Setup JSON file, inline JSON, or `optimal`.
    #[arg(long)]
    setup: String,
    /// Require anticommuting settings and judge against their bounds.
    #[arg(long)]
    anticommute: bool,
    #[arg(long, default_value_t = bounds::DEFAULT_Z)]
    z: f64,
    /// Seed for `--setup optimal`.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    hypothesis: Hypothesis,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct WitnessDataArgs {
    /// Correlation JSON file or inline JSON.
    #[arg(long)]
    correlations: String,
    /// The data were taken with anticommuting settings.
    #[arg(long)]
    anticommute: bool,
    #[arg(long, default_value_t = bounds::DEFAULT_Z)]
    z: f64,
    #[command(flatten)]
    hypothesis: Hypothesis,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    state: String,
    /// Setup JSON file, inline JSON, or `optimal`.
    #[arg(long)]
    setup: String,
    /// Shots per setting string.
    #[arg(long)]
    shots: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct OptimizeArgs {
    #[arg(long)]
    state: String,
    /// Keep a_j orthogonal to a'_j.
    #[arg(long)]
    anticommute: bool,
    #[arg(long, default_value_t = optimize::DEFAULT_RESTARTS)]
    restarts: usize,
    #[arg(long, default_value_t = optimize::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = optimize::DEFAULT_MAX_SWEEPS)]
    max_sweeps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ScanArgs {
    #[arg(long)]
    n: usize,
    /// Grid `start:end:step`.
    #[arg(long, default_value = "0:1:0.01")]
    x: String,
    #[arg(long)]
    anticommute: bool,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = optimize::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// <Y>^2 + <Y'>^2 <= 2 for random observables and states.
    Lemma(LemmaArgs),
    /// Operator identities and norm bounds inside the lemma.
    LemmaInternals(TrialArgs),
    /// Quadratic and linear bounds on random k-separable states.
    SeparableBound(SeparableArgs),
    /// <A>^2 + <A'>^2 <= 1 for orthogonal Bloch pairs.
    SingleSite(TrialArgs),
    /// States saturating the bounds for every partition.
    Tightness(TightnessArgs),
}

#[derive(Args, Serialize)]
struct TrialArgs {
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct LemmaArgs {
    /// Local dimensions `d1,d2`; repeat for several pairs. Defaults to
    /// 2,2 2,3 3,3 3,4.
    #[arg(long)]
    dims: Vec<String>,
    #[command(flatten)]
    common: TrialArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeChoice {
    General,
    Anticommute,
    Both,
}

#[derive(Args, Serialize)]
struct SeparableArgs {
    #[arg(long)]
    n: usize,
    /// Partition JSON file or inline JSON; every partition of n when omitted.
    #[arg(long)]
    partition: Option<String>,
    /// Product terms in mixed trials.
    #[arg(long, default_value_t = 3)]
    terms: usize,
    #[arg(long, value_enum, default_value_t = ModeChoice::Both)]
    mode: ModeChoice,
    /// Local dimensions, comma separated; qubits when omitted.
    #[arg(long)]
    dims: Option<String>,
    #[command(flatten)]
    common: TrialArgs,
}

#[derive(Args, Serialize)]
struct TightnessArgs {
    #[arg(long)]
    n: usize,
    /// A single partition instead of all partitions of n.
    #[arg(long)]
    partition: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// What a finished subcommand hands back.
struct Outcome {
    summary: String,
    violations: bool,
}

impl Outcome {
    fn ok(summary: String) -> Self {
        Outcome {
            summary,
            violations: false,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.exit_code() == 0 { 0 } else { EXIT_USAGE });
        }
    };
    match apply_dim_cap().and_then(|()| dispatch(cli.command)) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.violations {
                ExitCode::from(EXIT_VIOLATIONS)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn apply_dim_cap() -> CliResult<()> {
    if let Ok(text) = std::env::var(DIM_CAP_ENV) {
        let cap: usize = text
            .trim()
            .parse()
            .ok()
            .filter(|&c| c >= 2)
            .ok_or_else(|| CliError::input(DIM_CAP_ENV, format!("{text:?} is not an integer ≥ 2")))?;
        linalg::set_dim_cap(cap);
    }
    Ok(())
}

fn dispatch(command: Command) -> CliResult<Outcome> {
    match command {
        Command::Bell(BellCommand::Build(args)) => bell_build(args),
        Command::Bound(args) => bound(args),
        Command::Witness(WitnessCommand::Eval(args)) => witness_eval(args),
        Command::Witness(WitnessCommand::FromData(args)) => witness_from_data(args),
        Command::Simulate(args) => simulate(args),
        Command::Optimize(args) => optimize_cmd(args),
        Command::Scan(args) => scan(args),
        Command::Verify(cmd) => verify_cmd(cmd),
    }
}

fn fmt_value(x: f64) -> String {
    let s = format!("{x:.8}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn fmt_pow2(p: Pow2) -> String {
    let h = p.half_exponent();
    let exp = if h % 2 == 0 {
        format!("{}", h / 2)
    } else {
        format!("{h}/2")
    };
    format!("{} (2^{exp})", fmt_value(p.value()))
}

fn load_state(run: &mut Run, arg: &str) -> CliResult<DensityOperator> {
    let text = run.read_input("state", arg)?;
    Ok(io::parse_state(&text)?)
}

/// Setup from JSON, or the optimizer's best settings for `rho` when `arg`
/// is `optimal`.
fn load_setup(
    run: &mut Run,
    arg: &str,
    rho: &DensityOperator,
    anticommute: bool,
    seed: u64,
) -> CliResult<MeasurementSetup> {
    if arg.trim() == "optimal" {
        let opts = OptimizeOptions {
            constrain_anticommute: anticommute,
            seed,
            ..OptimizeOptions::default()
        };
        run.seed("optimizer", seed);
        let result = optimize::maximize_qubit_witness(rho, &opts)?;
        run.note("optimal_settings", json!(result.settings));
        run.note("optimal_value", json!(result.best_value));
        return Ok(result.settings.to_setup()?);
    }
    let text = run.read_input("setup", arg)?;
    Ok(io::parse_setup(&text)?)
}

fn bell_build(args: BellBuildArgs) -> CliResult<Outcome> {
    let mut run = Run::new("bell build", &args);
    let text = run.read_input("setup", &args.setup)?;
    let setup = io::parse_setup(&text)?;
    let subset = match &args.subset {
        Some(s) => io::parse_subset(s)?,
        None => (0..setup.n()).collect(),
    };
    let pair = bell::build_direct(&setup, &subset)?;
    let output = io::bell_pair_to_value(&pair)?;
    let norm_b = linalg::operator_norm(pair.b())?;
    let summary = format!(
        "built B, B' on sites {:?} (dimension {}), ||B|| = {}",
        pair.subset().iter().map(|j| j + 1).collect::<Vec<_>>(),
        pair.b().dim(),
        fmt_value(norm_b)
    );
    run.finish(args.out.as_deref(), &output)?;
    Ok(Outcome::ok(summary))
}

fn bound(args: BoundArgs) -> CliResult<Outcome> {
    let run = Run::new("bound", &args);
    let mode = Mode::from_flag(args.anticommute);
    let linear = bounds::linear_bound(args.n, args.k, args.m)?;
    let quadratic = bounds::quadratic_bound(args.n, args.k, args.m, mode)?;
    let output = json!({
        "n": args.n,
        "k": args.k,
        "m": args.m,
        "mode": mode,
        "quadratic": quadratic.value(),
        "quadratic_exponent": quadratic.exponent(),
        "linear": linear.value(),
        "linear_exponent": linear.exponent(),
    });
    let summary = if args.linear {
        format!("linear {}", fmt_pow2(linear))
    } else {
        format!("quadratic {}\nlinear {}", fmt_pow2(quadratic), fmt_pow2(linear))
    };
    run.finish(args.out.as_deref(), &output)?;
    Ok(Outcome::ok(summary))
}

fn verdict_summary(v: &WitnessVerdict) -> String {
    let mut lines = vec![
        format!(
            "<B> = {} ± {}, <B'> = {} ± {}",
            fmt_value(v.b.value),
            fmt_value(v.b.se),
            fmt_value(v.b_prime.value),
            fmt_value(v.b_prime.se)
        ),
        format!("lhs = {} ± {} (z = {})", fmt_value(v.lhs_quadratic), fmt_value(v.lhs_se), v.z),
    ];
    for (name, t) in &v.thresholds {
        lines.push(format!("threshold {name} = {}", fmt_value(*t)));
    }
    lines.push(format!("detected={}", v.full_entanglement_detected));
    if let Some(r) = v.hypothesis_rejected {
        lines.push(format!("hypothesis rejected={r}"));
    }
    let excluded: Vec<String> = v.excluded.iter().map(|p| format!("(k={}, m={})", p.k, p.m)).collect();
    lines.push(format!("excluded profiles: {}", if excluded.is_empty() { "none".into() } else { excluded.join(" ") }));
    lines.join("\n")
}

fn witness_eval(args: WitnessEvalArgs) -> CliResult<Outcome> {
    let mut run = Run::new("witness eval", &args);
    let rho = load_state(&mut run, &args.state)?;
    let setup = load_setup(&mut run, &args.setup, &rho, args.anticommute, args.seed)?;
    if args.anticommute {
        setup.require_anticommuting()?;
    }
    if rho.dim() != setup.total_dim() {
        return Err(CliError::input(
            "setup",
            format!("acts on dimension {}, the state on {}", setup.total_dim(), rho.dim()),
        ));
    }
    let pair = bell::build_full(&setup)?;
    let b = linalg::expectation(&rho, pair.b())?;
    let bp = linalg::expectation(&rho, pair.b_prime())?;
    let verdict = bounds::evaluate_witness(
        &WitnessInput {
            n: setup.n(),
            b: Estimate::exact(b),
            b_prime: Estimate::exact(bp),
            anticommute_assumed: args.anticommute,
            hypothesis: args.hypothesis.profile(),
        },
        args.z,
    )?;
    let summary = verdict_summary(&verdict);
    run.finish(args.out.as_deref(), &json!(verdict))?;
    Ok(Outcome::ok(summary))
}

fn witness_from_data(args: WitnessDataArgs) -> CliResult<Outcome> {
    let mut run = Run::new("witness from-data", &args);
    let text = run.read_input("correlations", &args.correlations)?;
    let record = io::parse_correlations(&text)?;
    let coeffs = CorrelatorCoefficients::new(record.n())?;
    let (b, bp) = bell::evaluate_from_correlations(&coeffs, &record)?;
    let verdict = bounds::evaluate_witness(
        &WitnessInput {
            n: record.n(),
            b,
            b_prime: bp,
            anticommute_assumed: args.anticommute,
            hypothesis: args.hypothesis.profile(),
        },
        args.z,
    )?;
    let summary = verdict_summary(&verdict);
    run.finish(args.out.as_deref(), &json!(verdict))?;
    Ok(Outcome::ok(summary))
}

fn simulate(args: SimulateArgs) -> CliResult<Outcome> {
    let mut run = Run::new("simulate", &args);
    run.seed("sampling", args.seed);
    let rho = load_state(&mut run, &args.state)?;
    let setup = load_setup(&mut run, &args.setup, &rho, false, args.seed)?;
    let record = measurement::sample_experiment(&rho, &setup, args.shots, args.seed)?;
    let output = io::correlations_to_value(&record);
    let summary = format!(
        "sampled {} setting strings × {} shots on {} sites",
        record.entries().len(),
        args.shots,
        record.n()
    );
    run.finish(args.out.as_deref(), &output)?;
    Ok(Outcome::ok(summary))
}

fn optimize_cmd(args: OptimizeArgs) -> CliResult<Outcome> {
    let mut run = Run::new("optimize", &args);
    run.seed("optimizer", args.seed);
    let rho = load_state(&mut run, &args.state)?;
    let opts = OptimizeOptions {
        constrain_anticommute: args.anticommute,
        restarts: args.restarts,
        tol: args.tol,
        max_sweeps: args.max_sweeps,
        seed: args.seed,
    };
    let result = optimize::maximize_qubit_witness(&rho, &opts)?;
    let summary = format!(
        "max <B>^2 + <B'>^2 = {} (<B> = {}, <B'> = {}), {} restarts, converged={}",
        fmt_value(result.best_value),
        fmt_value(result.b),
        fmt_value(result.b_prime),
        result.restarts_used,
        result.converged
    );
    run.finish(args.out.as_deref(), &json!(result))?;
    Ok(Outcome::ok(summary))
}

fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::input("x", format!("{text:?} is not start:end:step")))?;
    match parts.as_slice() {
        [start, end, step] => Ok(optimize::linear_grid(*start, *end, *step)?),
        [x] => Ok(vec![*x]),
        _ => Err(CliError::input("x", format!("{text:?} is not start:end:step"))),
    }
}

fn scan(args: ScanArgs) -> CliResult<Outcome> {
    let mut run = Run::new("scan", &args);
    run.seed("optimizer", args.seed);
    let grid = parse_grid(&args.x)?;
    let opts = OptimizeOptions {
        restarts: args.restarts,
        tol: args.tol,
        seed: args.seed,
        ..OptimizeOptions::default()
    };
    let rows = optimize::scan_threshold_window(args.n, args.anticommute, &grid, &opts)?;
    let general = bounds::full_entanglement_threshold(args.n, Mode::General)?.value();
    let anti = bounds::full_entanglement_threshold(args.n, Mode::Anticommute)?.value();
    let mut lines = vec![format!(
        "thresholds: general {}, anticommute {}",
        fmt_value(general),
        fmt_value(anti)
    )];
    lines.push("x\tmax_lhs\tgeneral\tanticommute".to_string());
    for r in &rows {
        let anti = r.detected_anticommute.map_or("-".to_string(), |d| d.to_string());
        lines.push(format!("{}\t{}\t{}\t{}", r.x, fmt_value(r.max_lhs), r.detected_general, anti));
    }
    let output = json!({
        "n": args.n,
        "mode": Mode::from_flag(args.anticommute),
        "thresholds": {"general": general, "anticommute": anti},
        "rows": rows,
    });
    run.finish(args.out.as_deref(), &output)?;
    Ok(Outcome::ok(lines.join("\n")))
}

fn parse_dims(text: &str, field: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(|d| {
            d.trim()
                .parse::<usize>()
                .ok()
                .filter(|&d| d >= 2)
                .ok_or_else(|| CliError::input(field, format!("{d:?} is not a dimension ≥ 2")))
        })
        .collect()
}

fn report_line(r: &TrialReport) -> String {
    let mut line = format!(
        "{}: {} trials, max lhs {} vs bound {}, margin {:.3e}, violations {}",
        r.check,
        r.trials,
        fmt_value(r.max_lhs),
        fmt_value(r.bound),
        r.margin,
        r.violations.len()
    );
    if let Some(s) = &r.secondary {
        line.push_str(&format!("; {} max {} vs {}", s.label, fmt_value(s.max_value), fmt_value(s.bound)));
    }
    line.push_str(&format!(" [{:.2}s]", r.wall_time_secs));
    line
}

fn trial_outcome(run: Run, out: Option<&std::path::Path>, reports: Vec<TrialReport>) -> CliResult<Outcome> {
    let total: usize = reports.iter().map(|r| r.violations.len()).sum();
    let mut lines: Vec<String> = reports.iter().map(report_line).collect();
    lines.push(if total == 0 {
        "PASS: no violations".to_string()
    } else {
        format!("FAIL: {total} violations")
    });
    run.finish(out, &json!({"reports": reports, "violations": total}))?;
    Ok(Outcome {
        summary: lines.join("\n"),
        violations: total > 0,
    })
}

fn load_partition(run: &mut Run, arg: &str, n: usize) -> CliResult<Partition> {
    let text = run.read_input("partition", arg)?;
    let p = io::parse_partition(&text)?;
    if p.n() != n {
        return Err(CliError::input("n", format!("{n} disagrees with the partition's {}", p.n())));
    }
    Ok(p)
}

fn verify_cmd(cmd: VerifyCommand) -> CliResult<Outcome> {
    match cmd {
        VerifyCommand::Lemma(args) => {
            let mut run = Run::new("verify lemma", &args);
            run.seed("trials", args.common.seed);
            let pairs = if args.dims.is_empty() {
                vec![(2, 2), (2, 3), (3, 3), (3, 4)]
            } else {
                args.dims
                    .iter()
                    .map(|d| match parse_dims(d, "dims")?.as_slice() {
                        [a, b] => Ok((*a, *b)),
                        _ => Err(CliError::input("dims", format!("{d:?} is not d1,d2"))),
                    })
                    .collect::<CliResult<Vec<_>>>()?
            };
            let reports = pairs
                .into_iter()
                .map(|dims| verify::verify_lemma(args.common.trials, dims, args.common.seed))
                .collect::<bellmark::Result<Vec<_>>>()?;
            trial_outcome(run, args.common.out.as_deref(), reports)
        }
        VerifyCommand::LemmaInternals(args) => {
            let mut run = Run::new("verify lemma-internals", &args);
            run.seed("trials", args.seed);
            let report = verify::verify_lemma_internals(args.trials, args.seed)?;
            trial_outcome(run, args.out.as_deref(), vec![report])
        }
        VerifyCommand::SingleSite(args) => {
            let mut run = Run::new("verify single-site", &args);
            run.seed("trials", args.seed);
            let report = verify::verify_single_site_anticommuting(args.trials, args.seed)?;
            trial_outcome(run, args.out.as_deref(), vec![report])
        }
        VerifyCommand::SeparableBound(args) => {
            let mut run = Run::new("verify separable-bound", &args);
            run.seed("trials", args.common.seed);
            let partitions = match &args.partition {
                Some(p) => vec![load_partition(&mut run, p, args.n)?],
                None => {
                    if args.n == 0 || args.n > 8 {
                        return Err(CliError::input("n", "must be between 1 and 8"));
                    }
                    Partition::enumerate(args.n)
                }
            };
            let dims = match &args.dims {
                Some(d) => parse_dims(d, "dims")?,
                None => vec![2; args.n],
            };
            let modes: &[Mode] = match args.mode {
                ModeChoice::General => &[Mode::General],
                ModeChoice::Anticommute => &[Mode::Anticommute],
                ModeChoice::Both => &[Mode::General, Mode::Anticommute],
            };
            let mut reports = Vec::new();
            for p in &partitions {
                for &mode in modes {
                    reports.push(verify::verify_separability_bound(
                        p,
                        &dims,
                        args.common.trials,
                        args.terms,
                        mode,
                        args.common.seed,
                    )?);
                }
            }
            trial_outcome(run, args.common.out.as_deref(), reports)
        }
        VerifyCommand::Tightness(args) => {
            let mut run = Run::new("verify tightness", &args);
            let report = match &args.partition {
                Some(p) => {
                    let p = load_partition(&mut run, p, args.n)?;
                    verify::TightnessReport {
                        n: args.n,
                        tolerance: verify::TIGHTNESS_TOL,
                        rows: vec![verify::tightness_row(&p)?],
                    }
                }
                None => verify::verify_tightness(args.n)?,
            };
            let mut lines: Vec<String> = report
                .rows
                .iter()
                .map(|r| {
                    format!(
                        "{:?}: lhs {} vs {}, <B> {} vs {}, saturated={}",
                        r.partition,
                        fmt_value(r.lhs),
                        fmt_value(r.quadratic_bound),
                        fmt_value(r.b),
                        fmt_value(r.linear_bound),
                        r.saturated
                    )
                })
                .collect();
            let passed = report.passed();
            lines.push(if passed { "PASS: every bound saturated" } else { "FAIL: some bounds not saturated" }.into());
            run.finish(args.out.as_deref(), &json!(report))?;
            Ok(Outcome {
                summary: lines.join("\n"),
                violations: !passed,
            })
        }
    }
}

