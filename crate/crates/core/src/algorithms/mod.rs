//! Online streaming algorithms, advice oracles, and the runner that plays
//! the request-answer game.
//!
//! An [`OnlineAlgorithm`] sees the input one symbol at a time and must emit
//! exactly one bit at every guardian marker, never anywhere else. All of its
//! randomness goes through the [`StepContext`] so that a run can be sampled,
//! replayed from its choice log, or enumerated exhaustively.

pub mod choice;
mod noisy;
mod pmod;
mod table;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::NoisyOracle;
use crate::problem::{
    cost_against_targets, parse_input, stream_targets, suffix_parities, GuardianOutputs, InputWord,
    ParsedInput, ProblemSpec, Symbol,
};
use crate::quantum::QRegister;

use choice::{ChoiceKind, ChoiceRecord, ChoiceSource, Recorder};

pub use noisy::ralg_a;
pub use pmod::{ibh_alg, qalg_a, qalg_b};
pub use table::{table_algorithm, AdvisedTables, TableAlgorithm, TableFile};

/// Declared memory. Checked by assertions in tests, not instrumented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct MemoryBudget {
    pub bits: usize,
    pub qubits: usize,
    pub states: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub qubit: usize,
    pub outcome: bool,
    pub probability: f64,
}

/// What an algorithm can touch during a step besides its own state.
pub struct StepContext<'a> {
    choices: &'a mut dyn ChoiceSource,
    measurements: &'a mut Vec<MeasurementRecord>,
}

impl<'a> StepContext<'a> {
    pub fn new(choices: &'a mut dyn ChoiceSource, measurements: &'a mut Vec<MeasurementRecord>) -> Self {
        Self { choices, measurements }
    }

    pub fn choices(&mut self) -> &mut dyn ChoiceSource {
        &mut *self.choices
    }

    /// Measures `qubit`, letting the choice source pick the branch.
    pub fn measure(&mut self, reg: &mut QRegister, qubit: usize) -> Result<MeasurementRecord> {
        let mut branches = reg.measure_branches(qubit)?;
        let probs: Vec<f64> = branches.iter().map(|b| b.probability).collect();
        let idx = self.choices.choose(ChoiceKind::Measurement, &probs)?;
        let branch = branches.swap_remove(idx);
        *reg = branch.collapsed;
        let record = MeasurementRecord { qubit, outcome: branch.outcome, probability: branch.probability };
        self.measurements.push(record.clone());
        Ok(record)
    }

    /// Like [`measure`](Self::measure), but the outcome must be certain.
    pub fn measure_certain(&mut self, reg: &mut QRegister, qubit: usize) -> Result<bool> {
        let record = self.measure(reg, qubit)?;
        if record.probability < 1.0 - crate::quantum::NORM_TOLERANCE {
            return Err(Error::PromiseViolation(format!(
                "measurement of qubit {qubit} is not deterministic (p = {})",
                record.probability
            )));
        }
        Ok(record.outcome)
    }

    pub fn noisy_eval(&mut self, oracle: &NoisyOracle, x: &[bool]) -> Result<bool> {
        oracle.noisy_eval(x, &mut *self.choices)
    }
}

pub trait OnlineAlgorithm: Send {
    fn name(&self) -> &str;

    fn memory(&self) -> MemoryBudget;

    /// Number of advice bits expected by [`begin`](Self::begin).
    fn advice_len(&self) -> usize;

    fn begin(&mut self, advice: &[bool]) -> Result<()>;

    /// Consumes one symbol; returns `Some(bit)` exactly at guardian markers.
    fn step(&mut self, symbol: Symbol, ctx: &mut StepContext<'_>) -> Result<Option<bool>>;
}

/// Something that can build fresh algorithm instances, one per run.
pub trait AlgorithmFactory: Sync {
    fn create(&self) -> Result<Box<dyn OnlineAlgorithm>>;
}

impl<F> AlgorithmFactory for F
where
    F: Fn() -> Result<Box<dyn OnlineAlgorithm>> + Sync,
{
    fn create(&self) -> Result<Box<dyn OnlineAlgorithm>> {
        self()
    }
}

/// The all-knowing adviser: sees the whole input before the run starts.
pub trait AdviceOracle: Sync {
    fn compute(&self, spec: &ProblemSpec, parsed: &ParsedInput) -> Result<Vec<bool>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoAdvice;

impl AdviceOracle for NoAdvice {
    fn compute(&self, _spec: &ProblemSpec, _parsed: &ParsedInput) -> Result<Vec<bool>> {
        Ok(Vec::new())
    }
}

/// Sends `g_1` (BH) or `g^2_1 .. g^lambda_1` (IBH).
#[derive(Debug, Clone, Copy, Default)]
pub struct SuffixParityAdvice;

impl AdviceOracle for SuffixParityAdvice {
    fn compute(&self, spec: &ProblemSpec, parsed: &ParsedInput) -> Result<Vec<bool>> {
        advice_g1(spec, parsed)
    }
}

/// Sends fixed bits regardless of the input, for adversarial tests.
#[derive(Debug, Clone, Default)]
pub struct FixedAdvice(pub Vec<bool>);

impl AdviceOracle for FixedAdvice {
    fn compute(&self, _spec: &ProblemSpec, _parsed: &ParsedInput) -> Result<Vec<bool>> {
        Ok(self.0.clone())
    }
}

/// Complements whatever the wrapped oracle would send.
#[derive(Debug, Clone, Default)]
pub struct InvertedAdvice<A>(pub A);

impl<A: AdviceOracle> AdviceOracle for InvertedAdvice<A> {
    fn compute(&self, spec: &ProblemSpec, parsed: &ParsedInput) -> Result<Vec<bool>> {
        Ok(self.0.compute(spec, parsed)?.into_iter().map(|b| !b).collect())
    }
}

pub fn advice_g1(spec: &ProblemSpec, parsed: &ParsedInput) -> Result<Vec<bool>> {
    let g = suffix_parities(spec, parsed)?;
    Ok(if spec.lambda() == 1 {
        vec![g[0][0]]
    } else {
        g[1..].iter().map(|inst| inst[0]).collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    pub advice: Vec<bool>,
    pub outputs: GuardianOutputs,
    pub measurements: Vec<MeasurementRecord>,
    pub choices: Vec<ChoiceRecord>,
    pub cost: f64,
}

impl RunTrace {
    /// Probability of this run's path through its choice points.
    pub fn path_probability(&self) -> f64 {
        self.choices.iter().map(ChoiceRecord::probability).product()
    }
}

/// Feeds `symbols` to `alg` without any validation against a spec.
/// Returns the emitted bits; outputs off guardian markers are an error.
pub fn drive(
    alg: &mut dyn OnlineAlgorithm,
    advice: &[bool],
    symbols: &[Symbol],
    ctx: &mut StepContext<'_>,
) -> Result<Vec<bool>> {
    if advice.len() != alg.advice_len() {
        return Err(Error::ProtocolViolation(format!(
            "{} expects {} advice bits, got {}",
            alg.name(),
            alg.advice_len(),
            advice.len()
        )));
    }
    alg.begin(advice)?;
    let mut outputs = Vec::new();
    for (pos, &symbol) in symbols.iter().enumerate() {
        match (alg.step(symbol, ctx)?, symbol) {
            (Some(bit), Symbol::Guard) => outputs.push(bit),
            (None, Symbol::Guard) => {
                return Err(Error::ProtocolViolation(format!("no output at guardian position {}", pos + 1)))
            }
            (Some(_), _) => {
                return Err(Error::ProtocolViolation(format!("output at non-guardian position {}", pos + 1)))
            }
            (None, _) => {}
        }
    }
    Ok(outputs)
}

/// Plays one full run and scores it.
pub fn run_online(
    alg: &mut dyn OnlineAlgorithm,
    spec: &ProblemSpec,
    word: &InputWord,
    advice: &dyn AdviceOracle,
    choices: &mut dyn ChoiceSource,
) -> Result<RunTrace> {
    let parsed = parse_input(spec, word)?;
    // Targets first: a promise violation anywhere aborts before the run.
    let targets = stream_targets(&suffix_parities(spec, &parsed)?);
    let advice = advice.compute(spec, &parsed)?;
    let mut recorder = Recorder::new(choices);
    let mut measurements = Vec::new();
    let outputs = {
        let mut ctx = StepContext::new(&mut recorder, &mut measurements);
        drive(alg, &advice, word.symbols(), &mut ctx)?
    };
    if outputs.len() != spec.guardian_count() {
        return Err(Error::OutputCountMismatch { emitted: outputs.len(), expected: spec.guardian_count() });
    }
    let cost = cost_against_targets(spec, &targets, &outputs)?;
    Ok(RunTrace { advice, outputs: GuardianOutputs(outputs), measurements, choices: recorder.log, cost })
}

/// Algorithm identifiers understood by the CLI.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmKind {
    QalgB,
    QalgA,
    RalgA { epsilon: f64 },
    Ibh,
    Table(AdvisedTables),
}

impl AlgorithmKind {
    pub fn id(&self) -> &'static str {
        match self {
            AlgorithmKind::QalgB => "qalg-b",
            AlgorithmKind::QalgA => "qalg-a",
            AlgorithmKind::RalgA { .. } => "ralg-a",
            AlgorithmKind::Ibh => "ibh",
            AlgorithmKind::Table(_) => "table",
        }
    }

    pub fn build(&self, spec: &ProblemSpec) -> Result<Box<dyn OnlineAlgorithm>> {
        Ok(match self {
            AlgorithmKind::QalgB => Box::new(qalg_b(spec)?),
            AlgorithmKind::QalgA => Box::new(qalg_a(spec)?),
            AlgorithmKind::RalgA { epsilon } => {
                Box::new(ralg_a(spec, NoisyOracle::new(spec.function().clone(), *epsilon)?)?)
            }
            AlgorithmKind::Ibh => Box::new(ibh_alg(spec)?),
            AlgorithmKind::Table(t) => Box::new(t.machine()),
        })
    }

    /// The adviser each algorithm is designed for.
    pub fn advice(&self) -> Box<dyn AdviceOracle> {
        match self {
            AlgorithmKind::QalgB => Box::new(NoAdvice),
            AlgorithmKind::QalgA | AlgorithmKind::RalgA { .. } | AlgorithmKind::Ibh => Box::new(SuffixParityAdvice),
            AlgorithmKind::Table(t) if t.advice_bits() == 0 => Box::new(NoAdvice),
            AlgorithmKind::Table(t) => Box::new(FixedAdvice(vec![false; t.advice_bits()])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::choice::{ReplayChoices, SampledChoices};
    use super::*;
    use crate::functions::Function;
    use crate::problem::{generate_word, opt_cost};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pmod_spec(k: usize, t: usize, s: u32) -> ProblemSpec {
        ProblemSpec::bh(k, t, 1.0, 3.0, vec![4 << s; k], Function::partial_mod(s)).unwrap()
    }

    fn word(spec: &ProblemSpec, seed: u64) -> InputWord {
        generate_word(spec, None, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn advice_examples() {
        let spec = ProblemSpec::bh(3, 1, 1.0, 3.0, vec![1; 3], Function::Xor).unwrap();
        let parsed = parse_input(&spec, &"212021".parse().unwrap()).unwrap();
        assert_eq!(advice_g1(&spec, &parsed).unwrap(), vec![false]);
        let parsed = parse_input(&spec, &"202020".parse().unwrap()).unwrap();
        assert_eq!(advice_g1(&spec, &parsed).unwrap(), vec![false]);
        let spec = ProblemSpec::new(3, 1, crate::problem::CostParams { r: 1.0, w: 3.0, t: 1 }, vec![1], Function::Xor)
            .unwrap();
        let parsed = parse_input(&spec, &"212021".parse().unwrap()).unwrap();
        assert_eq!(advice_g1(&spec, &parsed).unwrap(), vec![false, true]);
    }

    /// Truncating after guardian j and replaying the log reproduces y_1..y_j.
    fn check_causality(kind: &AlgorithmKind, spec: &ProblemSpec, seed: u64) {
        let w = word(spec, seed);
        let mut src = SampledChoices::new(ChaCha8Rng::seed_from_u64(seed));
        let mut alg = kind.build(spec).unwrap();
        let trace = run_online(alg.as_mut(), spec, &w, kind.advice().as_ref(), &mut src).unwrap();
        let parsed = parse_input(spec, &w).unwrap();
        for (j, &pos) in parsed.guardian_positions.iter().enumerate() {
            let mut replay = ReplayChoices::from_log(&trace.choices);
            let mut measurements = Vec::new();
            let mut ctx = StepContext::new(&mut replay, &mut measurements);
            let mut fresh = kind.build(spec).unwrap();
            let prefix = drive(fresh.as_mut(), &trace.advice, &w.symbols()[..pos], &mut ctx).unwrap();
            assert_eq!(prefix, trace.outputs.bits()[..=j], "{} guardian {}", kind.id(), j + 1);
        }
    }

    #[test]
    fn online_causality_for_every_algorithm() {
        let spec = pmod_spec(6, 3, 1);
        for seed in 0..5 {
            check_causality(&AlgorithmKind::QalgB, &spec, seed);
            check_causality(&AlgorithmKind::QalgA, &spec, seed);
            check_causality(&AlgorithmKind::RalgA { epsilon: 0.2 }, &spec, seed);
            check_causality(&AlgorithmKind::Table(AdvisedTables::single(TableAlgorithm::parity())), &spec, seed);
        }
        let ibh = ProblemSpec::new(3, 2, crate::problem::CostParams { r: 1.0, w: 3.0, t: 2 }, vec![8, 8], Function::partial_mod(1))
            .unwrap();
        for seed in 0..5 {
            check_causality(&AlgorithmKind::Ibh, &ibh, seed);
        }
    }

    #[test]
    fn replaying_the_log_reproduces_the_trace() {
        let spec = pmod_spec(4, 2, 2);
        let w = word(&spec, 9);
        for kind in [AlgorithmKind::QalgB, AlgorithmKind::RalgA { epsilon: 0.3 }] {
            let mut src = SampledChoices::new(ChaCha8Rng::seed_from_u64(7));
            let trace = run_online(kind.build(&spec).unwrap().as_mut(), &spec, &w, kind.advice().as_ref(), &mut src).unwrap();
            let mut replay = ReplayChoices::from_log(&trace.choices);
            let again = run_online(kind.build(&spec).unwrap().as_mut(), &spec, &w, kind.advice().as_ref(), &mut replay).unwrap();
            assert_eq!(trace, again);
        }
    }

    #[test]
    fn constant_zero_table_pays_w_everywhere_when_all_targets_are_one() {
        // f-values 0,0,0,1 make every suffix parity 1.
        let spec = ProblemSpec::bh(4, 2, 1.0, 3.0, vec![1; 4], Function::Xor).unwrap();
        let w: InputWord = "20202021".parse().unwrap();
        let alg = table_algorithm(1, vec![[0, 0, 0]], vec![[false; 3]]).unwrap();
        let mut alg = AdvisedTables::single(alg).machine();
        let trace = run_online(&mut alg, &spec, &w, &NoAdvice, &mut ReplayChoices::new(vec![])).unwrap();
        assert_eq!(trace.cost, 2.0 * 3.0);
        assert!(trace.cost > opt_cost(&spec));
    }

    #[test]
    fn wrong_advice_length_is_rejected() {
        let spec = pmod_spec(2, 1, 0);
        let w = word(&spec, 1);
        let mut alg = qalg_a(&spec).unwrap();
        let err = run_online(&mut alg, &spec, &w, &NoAdvice, &mut ReplayChoices::new(vec![])).unwrap_err();
        assert!(matches!(err, Error::ProtocolViolation(_)));
    }

    struct Silent;

    impl OnlineAlgorithm for Silent {
        fn name(&self) -> &str {
            "silent"
        }
        fn memory(&self) -> MemoryBudget {
            MemoryBudget::default()
        }
        fn advice_len(&self) -> usize {
            0
        }
        fn begin(&mut self, _advice: &[bool]) -> Result<()> {
            Ok(())
        }
        fn step(&mut self, _symbol: Symbol, _ctx: &mut StepContext<'_>) -> Result<Option<bool>> {
            Ok(None)
        }
    }

    #[test]
    fn missing_outputs_are_rejected() {
        let spec = pmod_spec(2, 1, 0);
        let w = word(&spec, 1);
        let err = run_online(&mut Silent, &spec, &w, &NoAdvice, &mut ReplayChoices::new(vec![])).unwrap_err();
        assert!(matches!(err, Error::ProtocolViolation(_)));
    }
}
