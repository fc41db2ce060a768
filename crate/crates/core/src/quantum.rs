//! Small real-amplitude state-vector simulator.
//!
//! Qubit `i` is bit `i` of the basis index. Every circuit the algorithms
//! need uses real rotations and bit flips, so amplitudes are `f64`; moving to
//! complex amplitudes only touches this module.

use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 20;
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Branch probabilities below this are treated as zero.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QRegister {
    qubits: usize,
    amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBranch {
    pub outcome: bool,
    pub probability: f64,
    pub collapsed: QRegister,
}

impl QRegister {
    /// `|0...0>` on `qubits` qubits.
    pub fn init_basis(qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "register size {qubits} outside 1..={MAX_QUBITS}"
            )));
        }
        let mut amplitudes = vec![0.0; 1 << qubits];
        amplitudes[0] = 1.0;
        Ok(Self { qubits, amplitudes })
    }

    pub fn from_amplitudes(amplitudes: Vec<f64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() || len > 1 << MAX_QUBITS {
            return Err(Error::InvalidArgument(format!("{len} amplitudes is not 2^q")));
        }
        let reg = Self { qubits: len.trailing_zeros() as usize, amplitudes };
        if (reg.norm_sqr() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!("state has squared norm {}", reg.norm_sqr())));
        }
        Ok(reg)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }

    fn check(&self, qubit: usize) -> Result<usize> {
        if qubit < self.qubits {
            Ok(1 << qubit)
        } else {
            Err(Error::IndexOutOfRange { index: qubit, qubits: self.qubits })
        }
    }

    /// Applies `op(a0, a1)` to every amplitude pair differing only in `qubit`.
    fn pairwise(&mut self, mask: usize, op: impl Fn(f64, f64) -> (f64, f64)) {
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = op(self.amplitudes[i], self.amplitudes[j]);
                self.amplitudes[i] = a0;
                self.amplitudes[j] = a1;
            }
        }
    }

    /// Hadamard on `qubit`; takes `|0>` to `(|0> + |1>)/sqrt 2`.
    pub fn init_plus(&mut self, qubit: usize) -> Result<()> {
        let mask = self.check(qubit)?;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        self.pairwise(mask, |a0, a1| (h * (a0 + a1), h * (a0 - a1)));
        Ok(())
    }

    /// Real rotation `[[cos, -sin], [sin, cos]]` on `qubit`.
    pub fn rotate(&mut self, qubit: usize, angle: f64) -> Result<()> {
        let mask = self.check(qubit)?;
        let (sin, cos) = angle.sin_cos();
        self.pairwise(mask, |a0, a1| (cos * a0 - sin * a1, sin * a0 + cos * a1));
        Ok(())
    }

    /// X gate on `qubit` when `bit` is set.
    pub fn xor_flip(&mut self, qubit: usize, bit: bool) -> Result<()> {
        let mask = self.check(qubit)?;
        if bit {
            self.pairwise(mask, |a0, a1| (a1, a0));
        }
        Ok(())
    }

    pub fn prob_one(&self, qubit: usize) -> Result<f64> {
        let mask = self.check(qubit)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a * a)
            .sum())
    }

    fn collapse(&self, mask: usize, outcome: bool, probability: f64) -> QRegister {
        let scale = probability.sqrt().recip();
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if (i & mask != 0) == outcome { a * scale } else { 0.0 })
            .collect();
        QRegister { qubits: self.qubits, amplitudes }
    }

    /// All outcomes of measuring `qubit` with nonzero probability.
    pub fn measure_branches(&self, qubit: usize) -> Result<Vec<MeasurementBranch>> {
        let mask = self.check(qubit)?;
        let p1 = self.prob_one(qubit)?.clamp(0.0, 1.0);
        let p0 = 1.0 - p1;
        let mut branches = Vec::with_capacity(2);
        if p0 <= NEGLIGIBLE_PROBABILITY {
            branches.push(MeasurementBranch { outcome: true, probability: 1.0, collapsed: self.collapse(mask, true, p1) });
        } else if p1 <= NEGLIGIBLE_PROBABILITY {
            branches.push(MeasurementBranch { outcome: false, probability: 1.0, collapsed: self.collapse(mask, false, p0) });
        } else {
            branches.push(MeasurementBranch { outcome: false, probability: p0, collapsed: self.collapse(mask, false, p0) });
            branches.push(MeasurementBranch { outcome: true, probability: p1, collapsed: self.collapse(mask, true, p1) });
        }
        Ok(branches)
    }

    /// Samples a measurement of `qubit` and collapses the register.
    pub fn measure<R: Rng + ?Sized>(&mut self, qubit: usize, rng: &mut R) -> Result<bool> {
        let mut branches = self.measure_branches(qubit)?;
        let draw: f64 = rng.gen();
        let idx = if branches.len() == 2 && draw >= branches[0].probability { 1 } else { 0 };
        let branch = branches.swap_remove(idx);
        *self = branch.collapsed;
        Ok(branch.outcome)
    }

    /// Returns the named qubits to `|0>`. Each must already be in a basis
    /// state (as after a measurement), otherwise the reset is not unitary.
    pub fn reset_all(&mut self, qubits: &[usize]) -> Result<()> {
        let mut flips = Vec::with_capacity(qubits.len());
        for &q in qubits {
            let p1 = self.prob_one(q)?;
            if p1 > NORM_TOLERANCE && p1 < 1.0 - NORM_TOLERANCE {
                return Err(Error::NotBasisState(q));
            }
            flips.push((q, p1 > 0.5));
        }
        for (q, one) in flips {
            self.xor_flip(q, one)?;
        }
        Ok(())
    }
}
