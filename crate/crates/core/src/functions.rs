//! Boolean functions used as the prisoner function `f`.
//!
//! [`Function`] covers the promise function `PartialMOD^s` and a few total
//! functions used by the brute-force searches. [`NoisyOracle`] wraps any of
//! them into a bounded-error evaluator whose error event is drawn through a
//! [`ChoiceSource`], so exact enumeration and sampling share one code path.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algorithms::choice::{ChoiceKind, ChoiceSource};
use crate::error::{Error, Result};

/// Parameter of `PartialMOD^s`: inputs must hold `v * 2^s` ones with `v >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialModSpec {
    #[serde(rename = "s")]
    pub s_mod: u32,
}

impl PartialModSpec {
    pub fn new(s_mod: u32) -> Self {
        Self { s_mod }
    }

    /// `2^s`, the granularity of the one-count.
    pub fn period(&self) -> usize {
        1usize << self.s_mod
    }

    /// Largest `v` that fits in a segment of length `m`.
    pub fn v_max(&self, m: usize) -> usize {
        m / self.period()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TotalKind {
    Xor,
    And,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Function {
    #[serde(rename = "partialmod")]
    PartialMod(PartialModSpec),
    Xor,
    And,
    #[serde(rename = "const")]
    Constant { value: u8 },
}

impl Function {
    pub fn partial_mod(s_mod: u32) -> Self {
        Function::PartialMod(PartialModSpec::new(s_mod))
    }

    pub fn name(&self) -> String {
        match self {
            Function::PartialMod(p) => format!("partialmod{}", p.s_mod),
            Function::Xor => "xor".into(),
            Function::And => "and".into(),
            Function::Constant { value } => format!("const{value}"),
        }
    }

    pub fn is_total(&self) -> bool {
        !matches!(self, Function::PartialMod(_))
    }

    pub fn eval(&self, x: &[bool]) -> Result<bool> {
        match self {
            Function::PartialMod(spec) => partial_mod_eval(*spec, x),
            Function::Xor => Ok(x.iter().fold(false, |acc, &b| acc ^ b)),
            Function::And => Ok(x.iter().all(|&b| b)),
            Function::Constant { value } => Ok(*value != 0),
        }
    }
}

/// `PartialMOD^s(X) = v mod 2` where `#ones(X) = v * 2^s`, `v >= 2`.
pub fn partial_mod_eval(spec: PartialModSpec, x: &[bool]) -> Result<bool> {
    let ones = x.iter().filter(|&&b| b).count();
    let period = spec.period();
    if ones % period != 0 {
        return Err(Error::PromiseViolation(format!(
            "{ones} ones is not a multiple of 2^{}",
            spec.s_mod
        )));
    }
    let v = ones / period;
    if v < 2 {
        return Err(Error::PromiseViolation(format!(
            "{ones} ones gives v = {v}, need v >= 2"
        )));
    }
    Ok(v % 2 == 1)
}

/// A length-`m` string with exactly `v * 2^s` ones at random positions.
pub fn gen_partial_mod_input<R: Rng + ?Sized>(
    spec: PartialModSpec,
    m: usize,
    v: usize,
    rng: &mut R,
) -> Result<Vec<bool>> {
    if v < 2 {
        return Err(Error::Infeasible(format!("v = {v} is below the promise minimum 2")));
    }
    let ones = v
        .checked_mul(spec.period())
        .filter(|&n| n <= m)
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "v = {v} needs {v}*2^{} ones in a segment of length {m}",
                spec.s_mod
            ))
        })?;
    let mut x = vec![false; m];
    for pos in sample(rng, m, ones) {
        x[pos] = true;
    }
    Ok(x)
}

/// Draws a segment for `f`: PartialMOD picks `v` uniformly from `2..=v_max`
/// (default `floor(m / 2^s)`), total functions get uniform random bits.
pub fn gen_segment<R: Rng + ?Sized>(
    f: &Function,
    m: usize,
    v_max: Option<usize>,
    rng: &mut R,
) -> Result<Vec<bool>> {
    match f {
        Function::PartialMod(spec) => {
            let cap = spec.v_max(m);
            let hi = v_max.map_or(cap, |v| v.min(cap));
            if hi < 2 {
                return Err(Error::Infeasible(format!(
                    "segment length {m} cannot hold 2*2^{} ones",
                    spec.s_mod
                )));
            }
            let v = rng.gen_range(2..=hi);
            gen_partial_mod_input(*spec, m, v, rng)
        }
        _ => Ok((0..m).map(|_| rng.gen::<bool>()).collect()),
    }
}

pub fn total_oracle(kind: TotalKind, m: usize) -> Result<Function> {
    if m == 0 {
        return Err(Error::InvalidArgument("total oracle needs m >= 1".into()));
    }
    Ok(match kind {
        TotalKind::Xor => Function::Xor,
        TotalKind::And => Function::And,
    })
}

/// Bounded-error evaluator: returns `base(X)` with probability `1 - epsilon`
/// and its complement otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyOracle {
    base: Function,
    epsilon: f64,
}

impl NoisyOracle {
    pub fn new(base: Function, epsilon: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&epsilon) {
            return Err(Error::DomainError(format!(
                "error probability {epsilon} is outside [0, 0.5)"
            )));
        }
        Ok(Self { base, epsilon })
    }

    pub fn base(&self) -> &Function {
        &self.base
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// With `epsilon == 0` no choice point is declared.
    pub fn noisy_eval(&self, x: &[bool], choices: &mut dyn ChoiceSource) -> Result<bool> {
        let value = self.base.eval(x)?;
        if self.epsilon == 0.0 {
            return Ok(value);
        }
        let flip = choices.choose(ChoiceKind::NoiseFlip, &[1.0 - self.epsilon, self.epsilon])?;
        Ok(value ^ (flip == 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::choice::{ReplayChoices, SampledChoices};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn partial_mod_examples() {
        let s1 = PartialModSpec::new(1);
        assert_eq!(partial_mod_eval(s1, &bits("110110")), Ok(false));
        assert_eq!(partial_mod_eval(PartialModSpec::new(0), &bits("10110")), Ok(true));
        assert!(matches!(
            partial_mod_eval(s1, &bits("10100")),
            Err(Error::PromiseViolation(_))
        ));
        assert!(matches!(
            partial_mod_eval(s1, &bits("11100")),
            Err(Error::PromiseViolation(_))
        ));
    }

    #[test]
    fn generator_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = gen_partial_mod_input(PartialModSpec::new(1), 4, 2, &mut rng).unwrap();
        assert_eq!(x, vec![true; 4]);
        let x = gen_partial_mod_input(PartialModSpec::new(0), 5, 2, &mut rng).unwrap();
        assert_eq!(x.iter().filter(|&&b| b).count(), 2);
        assert!(matches!(
            gen_partial_mod_input(PartialModSpec::new(2), 4, 2, &mut rng),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn total_examples() {
        let xor = total_oracle(TotalKind::Xor, 3).unwrap();
        let and = total_oracle(TotalKind::And, 3).unwrap();
        assert_eq!(xor.eval(&bits("101")), Ok(false));
        assert_eq!(and.eval(&bits("111")), Ok(true));
        assert_eq!(xor.eval(&bits("1")), Ok(true));
        assert!(total_oracle(TotalKind::And, 0).is_err());
    }

    #[test]
    fn noisy_rejects_bad_epsilon() {
        assert!(NoisyOracle::new(Function::Xor, 0.5).is_err());
        assert!(NoisyOracle::new(Function::Xor, -0.1).is_err());
    }

    #[test]
    fn noisy_zero_epsilon_matches_base_exhaustively() {
        let oracle = NoisyOracle::new(Function::Xor, 0.0).unwrap();
        let and = NoisyOracle::new(Function::And, 0.0).unwrap();
        let mut none = ReplayChoices::new(Vec::new());
        for m in 1..=10usize {
            for word in 0u32..(1 << m) {
                let x: Vec<bool> = (0..m).map(|i| word >> i & 1 == 1).collect();
                assert_eq!(oracle.noisy_eval(&x, &mut none), Function::Xor.eval(&x));
                assert_eq!(and.noisy_eval(&x, &mut none), Function::And.eval(&x));
            }
        }
    }

    #[test]
    fn noisy_outcome_distribution() {
        let oracle = NoisyOracle::new(Function::Xor, 0.25).unwrap();
        // both branches, replayed explicitly
        let mut keep = ReplayChoices::new(vec![0]);
        let mut flip = ReplayChoices::new(vec![1]);
        assert_eq!(oracle.noisy_eval(&[true], &mut keep), Ok(true));
        assert_eq!(oracle.noisy_eval(&[true], &mut flip), Ok(false));
    }

    #[test]
    fn noisy_flip_rate_within_three_sigma() {
        let eps = 0.1;
        let trials = 100_000;
        let oracle = NoisyOracle::new(Function::Xor, eps).unwrap();
        let mut src = SampledChoices::new(ChaCha8Rng::seed_from_u64(11));
        let flips = (0..trials)
            .filter(|_| !oracle.noisy_eval(&[true], &mut src).unwrap())
            .count();
        let rate = flips as f64 / trials as f64;
        let sigma = (eps * (1.0 - eps) / trials as f64).sqrt();
        assert!((rate - eps).abs() <= 3.0 * sigma, "rate {rate}");
    }

    #[test]
    fn function_json_shapes() {
        let f: Function = serde_json::from_str(r#"{"name":"partialmod","s":2}"#).unwrap();
        assert_eq!(f, Function::partial_mod(2));
        let f: Function = serde_json::from_str(r#"{"name":"xor"}"#).unwrap();
        assert_eq!(f, Function::Xor);
        assert_eq!(serde_json::to_string(&Function::And).unwrap(), r#"{"name":"and"}"#);
    }

    proptest! {
        #[test]
        fn partial_mod_is_permutation_invariant(s in 0u32..3, v in 2usize..5, extra in 0usize..6, seed: u64) {
            let spec = PartialModSpec::new(s);
            let m = v * spec.period() + extra;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = gen_partial_mod_input(spec, m, v, &mut rng).unwrap();
            let b = gen_partial_mod_input(spec, m, v, &mut rng).unwrap();
            prop_assert_eq!(partial_mod_eval(spec, &a).unwrap(), partial_mod_eval(spec, &b).unwrap());
            prop_assert_eq!(partial_mod_eval(spec, &a).unwrap(), v % 2 == 1);
        }

        #[test]
        fn generated_segments_respect_promise(s in 0u32..4, m in 1usize..40, seed: u64) {
            let f = Function::partial_mod(s);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match gen_segment(&f, m, None, &mut rng) {
                Ok(x) => { prop_assert_eq!(x.len(), m); prop_assert!(f.eval(&x).is_ok()); }
                Err(e) => prop_assert!(matches!(e, Error::Infeasible(_)) && m < 2 << s),
            }
        }
    }
}
