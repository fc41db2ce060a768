//! Expected cost by closed form, exhaustive branch enumeration, and seeded
//! Monte Carlo; competitive ratios; and the advice lower-bound curves.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algorithms::choice::{SampledChoices, ScriptedChoices};
use crate::algorithms::{run_online, AdviceOracle, AlgorithmFactory, AlgorithmKind};
use crate::error::{Error, Result};
use crate::problem::{encode_input, opt_cost, InputWord, ParsedInput, ProblemSpec};

pub const DEFAULT_BRANCH_LIMIT: u64 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Closed,
    Exact,
    Mc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Closed => "closed",
            Method::Exact => "exact",
            Method::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationResult {
    pub value: f64,
    pub method: Method,
    pub stderr: Option<f64>,
    pub branches: Option<u64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

impl ExpectationResult {
    pub fn closed(value: f64) -> Self {
        Self { value, method: Method::Closed, stderr: None, branches: None, trials: None, seed: None }
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if (0.0..0.5).contains(&eps) {
        Ok(())
    } else {
        Err(Error::DomainError(format!("epsilon {eps} is outside [0, 0.5)")))
    }
}

/// Expected cost of the single-advice-bit algorithm when every prisoner is
/// evaluated wrongly with probability `eps`, independently:
///
/// `0.5 (1-eps)^(u-1) (t + 1 + (v^t - v)/(v - 1)) (r - w) + t w`, `v = (1-2 eps)^u`.
///
/// At `v = 1` the geometric term is its limit `t - 1`.
pub fn closed_form_expected_cost(t: usize, u: usize, eps: f64, r: f64, w: f64) -> Result<f64> {
    check_epsilon(eps)?;
    if t == 0 || u == 0 {
        return Err(Error::DomainError("t and u must be positive".into()));
    }
    let v = (1.0 - 2.0 * eps).powi(u as i32);
    let geometric = if v == 1.0 {
        (t - 1) as f64
    } else {
        (v.powi(t as i32) - v) / (v - 1.0)
    };
    let right_blocks = 0.5 * (1.0 - eps).powi(u as i32 - 1) * (t as f64 + 1.0 + geometric);
    Ok(right_blocks * (r - w) + t as f64 * w)
}

/// Probability that the number of subroutine errors before guardian `j`
/// (1-based) is even: `0.5 ((1 - 2 eps)^(j-1) + 1)`.
pub fn parity_confidence(j: usize, eps: f64) -> Result<f64> {
    check_epsilon(eps)?;
    if j == 0 {
        return Err(Error::DomainError("guardian index is 1-based".into()));
    }
    Ok(0.5 * ((1.0 - 2.0 * eps).powi(j as i32 - 1) + 1.0))
}

/// Enumerates every branch of every choice point depth-first and returns
/// the probability-weighted mean cost.
///
/// Each branch is a fresh replay from the start with a scripted prefix, so
/// no algorithm state needs to be cloned.
pub fn exact_expected_cost(
    factory: &dyn AlgorithmFactory,
    spec: &ProblemSpec,
    word: &InputWord,
    advice: &dyn AdviceOracle,
    branch_limit: u64,
) -> Result<ExpectationResult> {
    let mut prefix: Vec<usize> = Vec::new();
    let mut value = 0.0;
    let mut mass = 0.0;
    let mut branches = 0u64;
    loop {
        if branches == branch_limit {
            return Err(Error::BranchLimitExceeded(branch_limit));
        }
        let mut script = ScriptedChoices { prefix: &prefix, pos: 0 };
        let mut alg = factory.create()?;
        let trace = run_online(alg.as_mut(), spec, word, advice, &mut script)?;
        let p = trace.path_probability();
        value += p * trace.cost;
        mass += p;
        branches += 1;

        let Some(depth) = trace
            .choices
            .iter()
            .rposition(|c| c.chosen + 1 < c.probabilities.len())
        else {
            break;
        };
        prefix = trace.choices[..depth].iter().map(|c| c.chosen).collect();
        prefix.push(trace.choices[depth].chosen + 1);
    }
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::DomainError(format!("branch probabilities sum to {mass}")));
    }
    Ok(ExpectationResult {
        value,
        method: Method::Exact,
        stderr: None,
        branches: Some(branches),
        trials: None,
        seed: None,
    })
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`: `splitmix64(master ^ splitmix64(index))`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// Sum with a fixed pairwise tree, independent of how terms were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Mean cost over `trials` seeded runs. Trials run in parallel; the result
/// is bit-identical for a given `seed` regardless of thread count.
pub fn monte_carlo_cost(
    factory: &dyn AlgorithmFactory,
    spec: &ProblemSpec,
    word: &InputWord,
    advice: &dyn AdviceOracle,
    trials: u64,
    seed: u64,
) -> Result<ExpectationResult> {
    if trials == 0 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least one trial".into()));
    }
    let costs = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut src = SampledChoices::new(ChaCha8Rng::seed_from_u64(trial_seed(seed, i)));
            let mut alg = factory.create()?;
            Ok(run_online(alg.as_mut(), spec, word, advice, &mut src)?.cost)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = trials as f64;
    let mean = pairwise_sum(&costs) / n;
    let stderr = if trials > 1 {
        let sq: Vec<f64> = costs.iter().map(|c| (c - mean) * (c - mean)).collect();
        (pairwise_sum(&sq) / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    Ok(ExpectationResult {
        value: mean,
        method: Method::Mc,
        stderr: Some(stderr),
        branches: None,
        trials: Some(trials),
        seed: Some(seed),
    })
}

/// Strict ratio (no additive slack) against the offline optimum `t r`.
pub fn competitive_ratio(expected_cost: f64, spec: &ProblemSpec) -> f64 {
    expected_cost / opt_cost(spec)
}

/// Closed-form expected cost of a named algorithm, where one is known.
pub fn algorithm_closed_form(kind: &AlgorithmKind, spec: &ProblemSpec) -> Result<f64> {
    let t = spec.t() as f64;
    match kind {
        AlgorithmKind::QalgA => Ok(t * spec.r()),
        AlgorithmKind::QalgB | AlgorithmKind::Ibh => Ok(t * (spec.r() + spec.w()) / 2.0),
        AlgorithmKind::RalgA { epsilon } => {
            closed_form_expected_cost(spec.t(), spec.block_len(), *epsilon, spec.r(), spec.w())
        }
        AlgorithmKind::Table(_) => Err(Error::Unsupported("table algorithms have no closed form".into())),
    }
}

/// Worst expected cost over a set of inputs, by exact enumeration.
pub fn worst_case_expected_cost(
    factory: &dyn AlgorithmFactory,
    spec: &ProblemSpec,
    advice: &dyn AdviceOracle,
    inputs: &[ParsedInput],
    branch_limit: u64,
) -> Result<f64> {
    inputs.iter().try_fold(0.0f64, |worst, parsed| {
        let word = encode_input(spec, &parsed.segments)?;
        Ok(worst.max(exact_expected_cost(factory, spec, &word, advice, branch_limit)?.value))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AdviceBoundParams {
    pub b: usize,
    pub u: usize,
    /// Blocks fully covered by advice, capped at `t`.
    pub h: usize,
    pub z: usize,
    pub delta_z: usize,
}

impl AdviceBoundParams {
    pub fn new(spec: &ProblemSpec, b: usize) -> Self {
        let u = spec.block_len();
        let h = (b / u).min(spec.t());
        let z = if h == spec.t() { 0 } else { b - h * u };
        Self { b, u, h, z, delta_z: usize::from(z != 0) }
    }
}

/// `(h r + (t - h) w) / (t r)`.
pub fn det_advice_bound(spec: &ProblemSpec, b: usize) -> f64 {
    let p = AdviceBoundParams::new(spec, b);
    let (r, w, t) = (spec.r(), spec.w(), spec.t());
    (p.h as f64 * r + (t - p.h) as f64 * w) / (t as f64 * r)
}

/// Randomized counterpart: a block with `z` advised guardians is right with
/// probability `2^(z-u)`, an unadvised block with probability `2^-u`.
pub fn rand_advice_bound(spec: &ProblemSpec, b: usize) -> f64 {
    let p = AdviceBoundParams::new(spec, b);
    let (r, w, t) = (spec.r(), spec.w(), spec.t());
    let block = |right: f64| right * r + (1.0 - right) * w;
    let partial = p.delta_z as f64 * block(2f64.powi(p.z as i32 - p.u as i32));
    let blind = (t - p.h - p.delta_z) as f64 * block(2f64.powi(-(p.u as i32)));
    (p.h as f64 * r + partial + blind) / (t as f64 * r)
}

/// Deterministic algorithms with `lambda - 1` advice bits on IBH cannot beat
/// `w / (t r) + (t - 1) / t`.
pub fn ibh_det_advice_bound(spec: &ProblemSpec) -> f64 {
    let t = spec.t() as f64;
    spec.w() / (t * spec.r()) + (t - 1.0) / t
}

pub const CSV_HEADER: [&str; 9] = ["spec_id", "method", "eps", "b", "value", "stderr", "trials", "seed", "branches"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub spec_id: String,
    pub method: Method,
    pub eps: Option<f64>,
    pub b: Option<usize>,
    pub value: f64,
    pub stderr: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub branches: Option<u64>,
}

impl CsvRow {
    pub fn new(spec: &ProblemSpec, result: &ExpectationResult, eps: Option<f64>, b: Option<usize>) -> Self {
        Self {
            spec_id: spec.id(),
            method: result.method,
            eps,
            b,
            value: result.value,
            stderr: result.stderr,
            trials: result.trials,
            seed: result.seed,
            branches: result.branches,
        }
    }
}

/// Writes the header and rows with `\n` line endings.
pub fn write_csv<W: Write>(out: W, rows: &[CsvRow]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv output failed: {e}"));
    for row in rows {
        writer.serialize(row).map_err(io)?;
    }
    if rows.is_empty() {
        writer.write_record(CSV_HEADER).map_err(io)?;
    }
    writer.flush().map_err(|e| Error::InvalidArgument(format!("csv output failed: {e}")))?;
    Ok(())
}
