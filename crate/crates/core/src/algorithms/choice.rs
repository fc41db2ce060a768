//! Choice points: the single channel through which algorithms consume
//! randomness (measurement outcomes, noise flips).
//!
//! A [`ChoiceSource`] picks one index from a probability vector. Sampling,
//! replay of a recorded log, and the exact engine's scripted enumeration are
//! all just different sources.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceKind {
    Measurement,
    NoiseFlip,
}

pub trait ChoiceSource {
    /// Picks an index into `probabilities`, which are positive and sum to 1.
    fn choose(&mut self, kind: ChoiceKind, probabilities: &[f64]) -> Result<usize>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChoiceRecord {
    pub kind: ChoiceKind,
    pub probabilities: Vec<f64>,
    pub chosen: usize,
}

impl ChoiceRecord {
    pub fn probability(&self) -> f64 {
        self.probabilities[self.chosen]
    }
}

/// Draws from an RNG.
#[derive(Debug, Clone)]
pub struct SampledChoices<R> {
    rng: R,
}

impl<R: Rng> SampledChoices<R> {
    pub fn new(rng: R) -> Self {
        Self { rng }
    }
}

impl<R: Rng> ChoiceSource for SampledChoices<R> {
    fn choose(&mut self, _kind: ChoiceKind, probabilities: &[f64]) -> Result<usize> {
        if probabilities.len() == 1 {
            return Ok(0);
        }
        let draw: f64 = self.rng.gen();
        let mut acc = 0.0;
        for (i, p) in probabilities.iter().enumerate() {
            acc += p;
            if draw < acc {
                return Ok(i);
            }
        }
        Ok(probabilities.len() - 1)
    }
}

/// Replays a fixed sequence of choice indices.
#[derive(Debug, Clone)]
pub struct ReplayChoices {
    script: Vec<usize>,
    pos: usize,
}

impl ReplayChoices {
    pub fn new(script: Vec<usize>) -> Self {
        Self { script, pos: 0 }
    }

    pub fn from_log(log: &[ChoiceRecord]) -> Self {
        Self::new(log.iter().map(|c| c.chosen).collect())
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl ChoiceSource for ReplayChoices {
    fn choose(&mut self, _kind: ChoiceKind, probabilities: &[f64]) -> Result<usize> {
        let idx = *self
            .script
            .get(self.pos)
            .ok_or_else(|| Error::Replay(format!("log exhausted after {} choices", self.pos)))?;
        if idx >= probabilities.len() {
            return Err(Error::Replay(format!(
                "choice {} picks option {idx} of {}",
                self.pos,
                probabilities.len()
            )));
        }
        self.pos += 1;
        Ok(idx)
    }
}

/// Follows `prefix`, then always takes option 0. Drives depth-first
/// enumeration in the exact engine.
#[derive(Debug)]
pub(crate) struct ScriptedChoices<'a> {
    pub prefix: &'a [usize],
    pub pos: usize,
}

impl ChoiceSource for ScriptedChoices<'_> {
    fn choose(&mut self, _kind: ChoiceKind, probabilities: &[f64]) -> Result<usize> {
        let idx = self.prefix.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        if idx >= probabilities.len() {
            return Err(Error::Replay("enumeration prefix diverged from the run".into()));
        }
        Ok(idx)
    }
}

/// Wraps a source and logs every choice made through it.
pub struct Recorder<'a> {
    inner: &'a mut dyn ChoiceSource,
    pub log: Vec<ChoiceRecord>,
}

impl<'a> Recorder<'a> {
    pub fn new(inner: &'a mut dyn ChoiceSource) -> Self {
        Self { inner, log: Vec::new() }
    }
}

impl ChoiceSource for Recorder<'_> {
    fn choose(&mut self, kind: ChoiceKind, probabilities: &[f64]) -> Result<usize> {
        let chosen = self.inner.choose(kind, probabilities)?;
        self.log.push(ChoiceRecord { kind, probabilities: probabilities.to_vec(), chosen });
        Ok(chosen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn replay_reproduces_and_detects_exhaustion() {
        let mut src = SampledChoices::new(ChaCha8Rng::seed_from_u64(5));
        let mut rec = Recorder::new(&mut src);
        let picks: Vec<usize> = (0..20).map(|_| rec.choose(ChoiceKind::NoiseFlip, &[0.5, 0.5]).unwrap()).collect();
        let mut replay = ReplayChoices::from_log(&rec.log);
        let again: Vec<usize> = (0..20).map(|_| replay.choose(ChoiceKind::NoiseFlip, &[0.5, 0.5]).unwrap()).collect();
        assert_eq!(picks, again);
        assert!(matches!(replay.choose(ChoiceKind::NoiseFlip, &[1.0]), Err(Error::Replay(_))));
        let mut bad = ReplayChoices::new(vec![1]);
        assert!(bad.choose(ChoiceKind::Measurement, &[1.0]).is_err());
    }

    #[test]
    fn sampled_single_option_is_free() {
        let mut src = SampledChoices::new(ChaCha8Rng::seed_from_u64(0));
        assert_eq!(src.choose(ChoiceKind::Measurement, &[1.0]).unwrap(), 0);
    }
}
