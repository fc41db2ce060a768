mod config;
mod svg;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use bhlab_core::algorithms::choice::SampledChoices;
use bhlab_core::algorithms::{run_online, AdviceOracle, AlgorithmKind, FixedAdvice};
use bhlab_core::analysis::{
    algorithm_closed_form, det_advice_bound, exact_expected_cost, monte_carlo_cost, rand_advice_bound,
    trial_seed, write_csv, CsvRow, ExpectationResult, DEFAULT_BRANCH_LIMIT,
};
use bhlab_core::bruteforce::{best_advice_ratio, SearchConfig};
use bhlab_core::problem::{generate_word, opt_cost};
use bhlab_core::{Error, InputWord, ProblemSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use config::{Config, Experiment};

const DEFAULT_TRIALS: u64 = 10_000;

#[derive(Parser)]
#[command(name = "bhlab", version, about = "Black Hats online problem experiments")]
struct Cli {
    /// Worker threads for Monte Carlo and brute-force search.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Problem spec JSON, optionally with an "experiment" stanza.
    #[arg(long)]
    spec: PathBuf,
    /// Defaults to the config file, then $BHLAB_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Upper bound on v when generating PartialMOD segments.
    #[arg(long)]
    v_max: Option<usize>,
}

#[derive(Args)]
struct AlgArgs {
    /// qalg-a, qalg-b, ralg-a, ibh or table.
    #[arg(long)]
    alg: Option<String>,
    /// Subroutine error probability for ralg-a.
    #[arg(long)]
    eps: Option<f64>,
    /// Table JSON for `--alg table`.
    #[arg(long)]
    table: Option<String>,
    /// Input word over {0,1,2}; generated from the seed when absent.
    #[arg(long)]
    input: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Closed,
    Exact,
    Mc,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    Eps,
    B,
    T,
    U,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::Eps => "eps",
            Axis::B => "b",
            Axis::T => "t",
            Axis::U => "u",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Play one run and print its trace as JSON.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        alg: AlgArgs,
        /// Advice bits to send instead of the algorithm's own adviser.
        #[arg(long)]
        advice: Option<String>,
    },
    /// Expected cost as CSV rows.
    Expect {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        alg: AlgArgs,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        branch_limit: Option<u64>,
    },
    /// Expected ratio and advice bounds over a parameter grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        alg: AlgArgs,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        branch_limit: Option<u64>,
        /// Directory for sweep.csv (and sweep.svg); CSV goes to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, requires = "out")]
        svg: bool,
    },
    /// Exhaustive search over small deterministic table algorithms.
    Brute {
        #[command(flatten)]
        common: Common,
        /// Number of memory states.
        #[arg(long = "states", short = 'S')]
        states: Option<usize>,
        /// Advice bits.
        #[arg(long)]
        b: Option<usize>,
        /// Include elapsed milliseconds in the JSON report.
        #[arg(long)]
        timing: bool,
    },
    /// Print promise-respecting random input words.
    GenInput {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::PromiseViolation(_)) => 3,
        Some(Error::BranchLimitExceeded(_)) => 4,
        Some(Error::SpaceTooLarge(_)) => 5,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!(Error::InvalidArgument("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Run { common, alg, advice } => cmd_run(&common, &alg, advice.as_deref(), &mut out),
        Command::Expect { common, alg, method, trials, branch_limit } => {
            cmd_expect(&common, &alg, method, trials, branch_limit, &mut out)
        }
        Command::Sweep { common, alg, axis, from, to, step, method, trials, branch_limit, out: dir, svg } => {
            let grid = SweepGrid { axis, from, to, step };
            cmd_sweep(&common, &alg, &grid, method, trials, branch_limit, dir.as_deref(), svg, &mut out)
        }
        Command::Brute { common, states, b, timing } => cmd_brute(&common, states, b, timing, &mut out),
        Command::GenInput { common, count } => cmd_gen_input(&common, count, &mut out),
    }
}

struct Setup {
    spec: ProblemSpec,
    exp: Experiment,
    seed: u64,
    v_max: Option<usize>,
}

fn setup(common: &Common) -> Result<Setup> {
    let Config { spec, experiment } = config::load(&common.spec)?;
    let seed = config::resolve_seed(common.seed, experiment.seed)?;
    let v_max = common.v_max.or(experiment.v_max);
    Ok(Setup { spec, exp: experiment, seed, v_max })
}

impl Setup {
    fn algorithm(&self, args: &AlgArgs) -> Result<AlgorithmKind> {
        let id = args
            .alg
            .as_deref()
            .or(self.exp.alg.as_deref())
            .ok_or_else(|| Error::InvalidArgument("no algorithm given (--alg)".into()))?;
        config::algorithm(id, args.eps.or(self.exp.eps), args.table.as_deref().or(self.exp.table.as_deref()))
    }

    fn word(&self, args: &AlgArgs, spec: &ProblemSpec) -> Result<InputWord> {
        match args.input.as_deref().or(self.exp.input.as_deref()) {
            Some(text) => Ok(text.parse()?),
            None => Ok(generate_word(spec, self.v_max, &mut ChaCha8Rng::seed_from_u64(self.seed))?),
        }
    }

    fn method(&self, flag: Option<MethodArg>) -> Result<Option<MethodArg>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.exp
            .method
            .as_deref()
            .map(|m| {
                MethodArg::from_str(m, true)
                    .map_err(|_| Error::InvalidArgument(format!("unknown method {m:?}")).into())
            })
            .transpose()
    }
}

fn bits(b: &[bool]) -> String {
    b.iter().map(|&x| if x { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::InvalidArgument(format!("advice {s:?} is not a bit string")).into()),
        })
        .collect()
}

#[derive(Serialize)]
struct RunReport<'a> {
    spec_id: String,
    alg: &'a str,
    seed: u64,
    input: String,
    advice: String,
    outputs: String,
    cost: f64,
    opt: f64,
    ratio: f64,
    measurements: &'a [bhlab_core::algorithms::MeasurementRecord],
    choices: &'a [bhlab_core::algorithms::choice::ChoiceRecord],
}

fn cmd_run(common: &Common, args: &AlgArgs, advice: Option<&str>, out: &mut dyn Write) -> Result<()> {
    let s = setup(common)?;
    let kind = s.algorithm(args)?;
    let word = s.word(args, &s.spec)?;
    let mut alg = kind.build(&s.spec)?;
    let oracle: Box<dyn AdviceOracle> = match advice {
        Some(text) => Box::new(FixedAdvice(parse_bits(text)?)),
        None => kind.advice(),
    };
    let mut choices = SampledChoices::new(ChaCha8Rng::seed_from_u64(trial_seed(s.seed, 0)));
    let trace = run_online(alg.as_mut(), &s.spec, &word, oracle.as_ref(), &mut choices)?;
    let opt = opt_cost(&s.spec);
    let report = RunReport {
        spec_id: s.spec.id(),
        alg: kind.id(),
        seed: s.seed,
        input: word.to_string(),
        advice: bits(&trace.advice),
        outputs: trace.outputs.to_string(),
        cost: trace.cost,
        opt,
        ratio: trace.cost / opt,
        measurements: &trace.measurements,
        choices: &trace.choices,
    };
    serde_json::to_writer_pretty(&mut *out, &report)?;
    writeln!(out)?;
    Ok(())
}

struct Evaluator<'a> {
    spec: &'a ProblemSpec,
    kind: &'a AlgorithmKind,
    trials: u64,
    seed: u64,
    branch_limit: u64,
}

impl Evaluator<'_> {
    fn evaluate(&self, method: MethodArg, word: &InputWord) -> Result<ExpectationResult> {
        let factory = || self.kind.build(self.spec);
        let advice = self.kind.advice();
        Ok(match method {
            MethodArg::Closed => ExpectationResult::closed(algorithm_closed_form(self.kind, self.spec)?),
            MethodArg::Exact => exact_expected_cost(&factory, self.spec, word, advice.as_ref(), self.branch_limit)?,
            MethodArg::Mc => monte_carlo_cost(&factory, self.spec, word, advice.as_ref(), self.trials, self.seed)?,
            MethodArg::All => unreachable!("expanded by the caller"),
        })
    }

    fn eps(&self) -> Option<f64> {
        match self.kind {
            AlgorithmKind::RalgA { epsilon } => Some(*epsilon),
            _ => None,
        }
    }

    fn advice_bits(&self) -> Result<usize> {
        Ok(self.kind.build(self.spec)?.advice_len())
    }
}

fn methods(method: MethodArg, kind: &AlgorithmKind) -> Vec<MethodArg> {
    match method {
        MethodArg::All if matches!(kind, AlgorithmKind::Table(_)) => vec![MethodArg::Exact, MethodArg::Mc],
        MethodArg::All => vec![MethodArg::Closed, MethodArg::Exact, MethodArg::Mc],
        m => vec![m],
    }
}

fn cmd_expect(
    common: &Common,
    args: &AlgArgs,
    method: Option<MethodArg>,
    trials: Option<u64>,
    branch_limit: Option<u64>,
    out: &mut dyn Write,
) -> Result<()> {
    let s = setup(common)?;
    let kind = s.algorithm(args)?;
    let method = s.method(method)?.unwrap_or(MethodArg::Exact);
    let word = s.word(args, &s.spec)?;
    let eval = Evaluator {
        spec: &s.spec,
        kind: &kind,
        trials: trials.or(s.exp.trials).unwrap_or(DEFAULT_TRIALS),
        seed: s.seed,
        branch_limit: branch_limit.or(s.exp.branch_limit).unwrap_or(DEFAULT_BRANCH_LIMIT),
    };
    let b = eval.advice_bits()?;
    let rows = methods(method, &kind)
        .into_iter()
        .map(|m| Ok(CsvRow::new(&s.spec, &eval.evaluate(m, &word)?, eval.eps(), Some(b))))
        .collect::<Result<Vec<_>>>()?;
    write_csv(out, &rows)?;
    Ok(())
}

struct SweepGrid {
    axis: Axis,
    from: f64,
    to: f64,
    step: f64,
}

impl SweepGrid {
    fn points(&self) -> Result<Vec<f64>> {
        let valid = self.step > 0.0 && self.from <= self.to && self.from.is_finite() && self.to.is_finite();
        if !valid {
            bail!(Error::InvalidArgument(format!(
                "empty sweep range {}..{} step {}",
                self.from, self.to, self.step
            )));
        }
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize;
        let pts: Vec<f64> = (0..=n).map(|i| ((self.from + i as f64 * self.step) * 1e9).round() / 1e9).collect();
        if self.axis != Axis::Eps && pts.iter().any(|x| x.fract() != 0.0 || *x < 0.0) {
            bail!(Error::InvalidArgument(format!("axis {} takes non-negative integers", self.axis.name())));
        }
        Ok(pts)
    }
}

#[derive(Serialize)]
struct SweepRow {
    spec_id: String,
    axis: &'static str,
    x: f64,
    method: Option<&'static str>,
    value: Option<f64>,
    ratio: Option<f64>,
    stderr: Option<f64>,
    det_bound: Option<f64>,
    rand_bound: Option<f64>,
    reason: Option<String>,
}

/// Rejections that belong in the reason column rather than aborting the sweep.
fn row_level(err: &anyhow::Error) -> bool {
    matches!(
        err.chain().find_map(|e| e.downcast_ref::<Error>()),
        Some(Error::InvalidSpec(_) | Error::DomainError(_) | Error::Unsupported(_) | Error::Infeasible(_))
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    common: &Common,
    args: &AlgArgs,
    grid: &SweepGrid,
    method: Option<MethodArg>,
    trials: Option<u64>,
    branch_limit: Option<u64>,
    dir: Option<&Path>,
    svg: bool,
    out: &mut dyn Write,
) -> Result<()> {
    let s = setup(common)?;
    let base_kind = s.algorithm(args)?;
    let points = grid.points()?;
    let method = s.method(method)?.unwrap_or(MethodArg::Exact);
    if method == MethodArg::All {
        bail!(Error::InvalidArgument("sweep takes a single method".into()));
    }
    let trials = trials.or(s.exp.trials).unwrap_or(DEFAULT_TRIALS);
    let branch_limit = branch_limit.or(s.exp.branch_limit).unwrap_or(DEFAULT_BRANCH_LIMIT);

    let mut rows = Vec::with_capacity(points.len());
    for &x in &points {
        let point = || -> Result<(ExpectationResult, f64, f64, f64)> {
            let mut kind = base_kind.clone();
            let spec = match grid.axis {
                Axis::Eps => {
                    if let AlgorithmKind::RalgA { epsilon } = &mut kind {
                        *epsilon = x;
                    }
                    s.spec.clone()
                }
                Axis::B => s.spec.clone(),
                Axis::T => s.spec.with_t(x as usize)?,
                Axis::U => {
                    let u = x as usize;
                    let slots = s.spec.lambda() * s.spec.k();
                    if u == 0 || slots % u != 0 {
                        bail!(Error::InvalidSpec(format!("u = {u} does not divide lambda k = {slots}")));
                    }
                    s.spec.with_t(slots / u)?
                }
            };
            let eval = Evaluator { spec: &spec, kind: &kind, trials, seed: s.seed, branch_limit };
            let word = s.word(args, &spec)?;
            let result = eval.evaluate(method, &word)?;
            let b = if grid.axis == Axis::B { x as usize } else { eval.advice_bits()? };
            Ok((result, opt_cost(&spec), det_advice_bound(&spec, b), rand_advice_bound(&spec, b)))
        };
        let row = match point() {
            Ok((res, opt, det, rand)) => SweepRow {
                spec_id: s.spec.id(),
                axis: grid.axis.name(),
                x,
                method: Some(res.method.as_str()),
                value: Some(res.value),
                ratio: Some(res.value / opt),
                stderr: res.stderr,
                det_bound: Some(det),
                rand_bound: Some(rand),
                reason: None,
            },
            Err(e) if row_level(&e) => SweepRow {
                spec_id: s.spec.id(),
                axis: grid.axis.name(),
                x,
                method: None,
                value: None,
                ratio: None,
                stderr: None,
                det_bound: None,
                rand_bound: None,
                reason: Some(format!("{e:#}")),
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }

    let mut csv_bytes = Vec::new();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut csv_bytes);
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            fs::write(dir.join("sweep.csv"), &csv_bytes)?;
            if svg {
                let series = |label: String, pick: fn(&SweepRow) -> Option<f64>| svg::Series {
                    label,
                    points: rows.iter().filter_map(|r| pick(r).map(|y| (r.x, y))).collect(),
                };
                let chart = svg::line_chart(
                    &format!("{} on {}", base_kind.id(), s.spec.id()),
                    grid.axis.name(),
                    "competitive ratio",
                    &[
                        series(format!("{} ratio", base_kind.id()), |r| r.ratio),
                        series("det advice bound".into(), |r| r.det_bound),
                        series("rand advice bound".into(), |r| r.rand_bound),
                    ],
                );
                fs::write(dir.join("sweep.svg"), chart)?;
            }
        }
        None => out.write_all(&csv_bytes)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct BruteReport {
    spec_id: String,
    states: usize,
    b: usize,
    lower_bound: f64,
    #[serde(flatten)]
    search: bhlab_core::bruteforce::SearchResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_ms: Option<u128>,
}

fn cmd_brute(common: &Common, states: Option<usize>, b: Option<usize>, timing: bool, out: &mut dyn Write) -> Result<()> {
    let s = setup(common)?;
    let states = states.or(s.exp.states).unwrap_or(2);
    let b = b.or(s.exp.b).unwrap_or(0);
    let config = SearchConfig { v_max: s.v_max, ..SearchConfig::default() };
    let start = Instant::now();
    let search = best_advice_ratio(&s.spec, states, b, &config)?;
    let elapsed = start.elapsed();
    eprintln!("searched {} tables in {:.3}s", search.tables_examined, elapsed.as_secs_f64());
    let report = BruteReport {
        spec_id: s.spec.id(),
        states,
        b,
        lower_bound: det_advice_bound(&s.spec, b),
        search,
        elapsed_ms: timing.then_some(elapsed.as_millis()),
    };
    serde_json::to_writer_pretty(&mut *out, &report)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_gen_input(common: &Common, count: usize, out: &mut dyn Write) -> Result<()> {
    let s = setup(common)?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    for _ in 0..count {
        writeln!(out, "{}", generate_word(&s.spec, s.v_max, &mut rng)?)?;
    }
    Ok(())
}
