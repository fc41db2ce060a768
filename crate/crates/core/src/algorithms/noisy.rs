use crate::error::{Error, Result};
use crate::functions::NoisyOracle;
use crate::problem::{ProblemSpec, Symbol};

use super::{MemoryBudget, OnlineAlgorithm, StepContext};

/// Single-advice-bit algorithm over a bounded-error subroutine: a classical
/// parity bit `p` starts at the advised `g_1` and absorbs one noisy
/// evaluation per prisoner.
#[derive(Debug, Clone)]
pub struct NoisyParity {
    oracle: NoisyOracle,
    k: usize,
    segment_bits: usize,
    p: bool,
    guardians_seen: usize,
    segment: Vec<bool>,
}

pub fn ralg_a(spec: &ProblemSpec, oracle: NoisyOracle) -> Result<NoisyParity> {
    if spec.lambda() != 1 {
        return Err(Error::Unsupported("ralg-a solves plain BH (lambda = 1)".into()));
    }
    let longest = spec.m().iter().copied().max().unwrap_or(1);
    Ok(NoisyParity {
        oracle,
        k: spec.k(),
        // the subroutine is modelled as a one-count register
        segment_bits: usize::BITS as usize - longest.leading_zeros() as usize,
        p: false,
        guardians_seen: 0,
        segment: Vec::with_capacity(longest),
    })
}

impl OnlineAlgorithm for NoisyParity {
    fn name(&self) -> &str {
        "ralg-a"
    }

    fn memory(&self) -> MemoryBudget {
        MemoryBudget { bits: 1 + self.segment_bits, qubits: 0, states: None }
    }

    fn advice_len(&self) -> usize {
        1
    }

    fn begin(&mut self, advice: &[bool]) -> Result<()> {
        self.p = advice[0];
        self.guardians_seen = 0;
        self.segment.clear();
        Ok(())
    }

    fn step(&mut self, symbol: Symbol, ctx: &mut StepContext<'_>) -> Result<Option<bool>> {
        match symbol {
            Symbol::Guard => {
                if self.guardians_seen > 0 {
                    self.p ^= ctx.noisy_eval(&self.oracle, &self.segment)?;
                    self.segment.clear();
                }
                self.guardians_seen += 1;
                Ok(Some(self.p))
            }
            bit if self.guardians_seen < self.k => {
                self.segment.push(bit == Symbol::One);
                Ok(None)
            }
            _ => Ok(None),
        }
    }
}
