//! One-qubit algorithms for BH over `PartialMOD^s` and the interleaved
//! variant with one qubit per instance.
//!
//! Rotating by `pi / 2^(s+1)` on every 1 turns a segment with `v * 2^s`
//! ones into a total rotation of `v * pi / 2`, which maps a basis state to
//! itself (v even) or to the other basis state (v odd), up to sign. The
//! qubit therefore carries the running parity exactly, and measuring it at
//! a guardian never disturbs it.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::functions::{Function, PartialModSpec};
use crate::problem::{ProblemSpec, Symbol};
use crate::quantum::QRegister;

use super::{MemoryBudget, OnlineAlgorithm, StepContext};

fn partial_mod_of(spec: &ProblemSpec) -> Result<PartialModSpec> {
    match spec.function() {
        Function::PartialMod(p) => Ok(*p),
        other => Err(Error::Unsupported(format!(
            "rotation algorithms need f = PartialMOD, got {}",
            other.name()
        ))),
    }
}

fn rotation_angle(p: PartialModSpec) -> f64 {
    PI / f64::from(1u32 << (p.s_mod + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Seed {
    /// Fair quantum guess of `g_1`.
    Guess,
    /// `g_1` supplied as the single advice bit.
    Advised,
}

/// Algorithm B (no advice, guesses `g_1`) or A (one advice bit).
#[derive(Debug, Clone)]
pub struct ParityQubit {
    seed: Seed,
    angle: f64,
    k: usize,
    advice: bool,
    qubit: QRegister,
    guardians_seen: usize,
}

fn parity_qubit(spec: &ProblemSpec, seed: Seed) -> Result<ParityQubit> {
    if spec.lambda() != 1 {
        return Err(Error::Unsupported("qalg-a/qalg-b solve plain BH (lambda = 1)".into()));
    }
    let p = partial_mod_of(spec)?;
    Ok(ParityQubit {
        seed,
        angle: rotation_angle(p),
        k: spec.k(),
        advice: false,
        qubit: QRegister::init_basis(1)?,
        guardians_seen: 0,
    })
}

pub fn qalg_b(spec: &ProblemSpec) -> Result<ParityQubit> {
    parity_qubit(spec, Seed::Guess)
}

pub fn qalg_a(spec: &ProblemSpec) -> Result<ParityQubit> {
    parity_qubit(spec, Seed::Advised)
}

impl OnlineAlgorithm for ParityQubit {
    fn name(&self) -> &str {
        match self.seed {
            Seed::Guess => "qalg-b",
            Seed::Advised => "qalg-a",
        }
    }

    fn memory(&self) -> MemoryBudget {
        MemoryBudget { bits: 0, qubits: self.qubit.qubits(), states: None }
    }

    fn advice_len(&self) -> usize {
        match self.seed {
            Seed::Guess => 0,
            Seed::Advised => 1,
        }
    }

    fn begin(&mut self, advice: &[bool]) -> Result<()> {
        self.advice = advice.first().copied().unwrap_or(false);
        self.qubit = QRegister::init_basis(1)?;
        self.guardians_seen = 0;
        Ok(())
    }

    fn step(&mut self, symbol: Symbol, ctx: &mut StepContext<'_>) -> Result<Option<bool>> {
        match symbol {
            Symbol::Guard => {
                self.guardians_seen += 1;
                let y = if self.guardians_seen == 1 {
                    match self.seed {
                        Seed::Guess => self.qubit.init_plus(0)?,
                        Seed::Advised => self.qubit.xor_flip(0, self.advice)?,
                    }
                    ctx.measure(&mut self.qubit, 0)?.outcome
                } else {
                    ctx.measure_certain(&mut self.qubit, 0)?
                };
                Ok(Some(y))
            }
            // X_k feeds no guardian and is skipped.
            Symbol::One if self.guardians_seen < self.k => {
                self.qubit.rotate(0, self.angle)?;
                Ok(None)
            }
            _ => Ok(None),
        }
    }
}

/// Interleaved algorithm: qubit `j` tracks instance `j`'s parity chain, one
/// extra work qubit evaluates the current segment and is reset after use.
#[derive(Debug, Clone)]
pub struct InterleavedQubits {
    lambda: usize,
    k: usize,
    angle: f64,
    advice: Vec<bool>,
    register: QRegister,
    guardians_seen: usize,
    /// Instance whose segment is being read into the work qubit.
    pending: Option<usize>,
}

pub fn ibh_alg(spec: &ProblemSpec) -> Result<InterleavedQubits> {
    if spec.lambda() < 2 {
        return Err(Error::Unsupported("ibh needs lambda > 1".into()));
    }
    let p = partial_mod_of(spec)?;
    Ok(InterleavedQubits {
        lambda: spec.lambda(),
        k: spec.k(),
        angle: rotation_angle(p),
        advice: Vec::new(),
        register: QRegister::init_basis(spec.lambda() + 1)?,
        guardians_seen: 0,
        pending: None,
    })
}

impl InterleavedQubits {
    fn work(&self) -> usize {
        self.lambda
    }
}

impl OnlineAlgorithm for InterleavedQubits {
    fn name(&self) -> &str {
        "ibh"
    }

    fn memory(&self) -> MemoryBudget {
        MemoryBudget { bits: 0, qubits: self.register.qubits(), states: None }
    }

    fn advice_len(&self) -> usize {
        self.lambda - 1
    }

    fn begin(&mut self, advice: &[bool]) -> Result<()> {
        self.advice = advice.to_vec();
        self.register = QRegister::init_basis(self.lambda + 1)?;
        self.guardians_seen = 0;
        self.pending = None;
        Ok(())
    }

    fn step(&mut self, symbol: Symbol, ctx: &mut StepContext<'_>) -> Result<Option<bool>> {
        match symbol {
            Symbol::Guard => {
                let work = self.work();
                if let Some(owner) = self.pending.take() {
                    let value = ctx.measure_certain(&mut self.register, work)?;
                    self.register.xor_flip(owner, value)?;
                    self.register.reset_all(&[work])?;
                }
                let round = self.guardians_seen / self.lambda;
                let instance = self.guardians_seen % self.lambda;
                self.guardians_seen += 1;
                let y = match (round, instance) {
                    (0, 0) => {
                        self.register.init_plus(0)?;
                        ctx.measure(&mut self.register, 0)?.outcome
                    }
                    (0, j) => {
                        self.register.xor_flip(j, self.advice[j - 1])?;
                        ctx.measure_certain(&mut self.register, j)?
                    }
                    (_, j) => ctx.measure_certain(&mut self.register, j)?,
                };
                // Segments of the last round feed no guardian.
                if round + 1 < self.k {
                    self.pending = Some(instance);
                }
                Ok(Some(y))
            }
            Symbol::One if self.pending.is_some() => {
                self.register.rotate(self.work(), self.angle)?;
                Ok(None)
            }
            _ => Ok(None),
        }
    }
}
