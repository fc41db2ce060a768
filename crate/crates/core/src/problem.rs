//! Black Hats (BH) and interleaved Black Hats (IBH) problem instances.
//!
//! An input is a stream over `{0, 1, 2}`. Every `2` is a guardian that must
//! announce the parity of `f` over the prisoner segments that follow it in
//! its own instance. Guardians are grouped, in stream order, into `t` blocks
//! of `u = lambda * k / t`; a block costs `r` when every guardian in it is
//! right and `w` otherwise.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::functions::{gen_segment, Function};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Symbol {
    Zero = 0,
    One = 1,
    Guard = 2,
}

impl Symbol {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
            Symbol::Guard => '2',
        }
    }
}

impl TryFrom<char> for Symbol {
    type Error = Error;

    fn try_from(c: char) -> Result<Self> {
        match c {
            '0' => Ok(Symbol::Zero),
            '1' => Ok(Symbol::One),
            '2' => Ok(Symbol::Guard),
            other => Err(Error::MalformedInput(format!("symbol {other:?} is not in {{0,1,2}}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub r: f64,
    pub w: f64,
    pub t: usize,
}

impl CostParams {
    pub fn new(r: f64, w: f64, t: usize) -> Result<Self> {
        if !(r > 0.0 && r.is_finite() && w.is_finite() && w >= r) {
            return Err(Error::InvalidSpec(format!("need w >= r > 0, got r={r}, w={w}")));
        }
        if t == 0 {
            return Err(Error::InvalidSpec("t must be positive".into()));
        }
        Ok(Self { r, w, t })
    }
}

/// Parameters of one BH (`lambda == 1`) or IBH problem family.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    lambda: usize,
    k: usize,
    costs: CostParams,
    m: Vec<usize>,
    function: Function,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    #[serde(default = "one")]
    lambda: usize,
    k: usize,
    t: usize,
    r: f64,
    w: f64,
    m: Vec<usize>,
    f: Function,
}

fn one() -> usize {
    1
}

impl ProblemSpec {
    pub fn new(lambda: usize, k: usize, costs: CostParams, m: Vec<usize>, function: Function) -> Result<Self> {
        if lambda == 0 {
            return Err(Error::InvalidSpec("lambda must be positive".into()));
        }
        if k == 0 {
            return Err(Error::InvalidSpec("k must be positive".into()));
        }
        let costs = CostParams::new(costs.r, costs.w, costs.t)?;
        if k % costs.t != 0 {
            return Err(Error::InvalidSpec(format!("k = {k} is not a multiple of t = {}", costs.t)));
        }
        if m.len() != k {
            return Err(Error::InvalidSpec(format!("expected {k} segment lengths, got {}", m.len())));
        }
        if m.contains(&0) {
            return Err(Error::InvalidSpec("segment lengths must be positive".into()));
        }
        let u = lambda * k / costs.t;
        // Blocks must cover whole rounds of the interleaving.
        if u % lambda != 0 {
            return Err(Error::InvalidSpec(format!("block length {u} is not a multiple of lambda = {lambda}")));
        }
        Ok(Self { lambda, k, costs, m, function })
    }

    /// Plain BH instance with `lambda = 1`.
    pub fn bh(k: usize, t: usize, r: f64, w: f64, m: Vec<usize>, function: Function) -> Result<Self> {
        Self::new(1, k, CostParams { r, w, t }, m, function)
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.costs.t
    }

    pub fn r(&self) -> f64 {
        self.costs.r
    }

    pub fn w(&self) -> f64 {
        self.costs.w
    }

    pub fn costs(&self) -> CostParams {
        self.costs
    }

    pub fn m(&self) -> &[usize] {
        &self.m
    }

    pub fn function(&self) -> &Function {
        &self.function
    }

    /// Guardians per block.
    pub fn block_len(&self) -> usize {
        self.lambda * self.k / self.costs.t
    }

    pub fn guardian_count(&self) -> usize {
        self.lambda * self.k
    }

    pub fn word_len(&self) -> usize {
        self.lambda * self.m.iter().map(|m| m + 1).sum::<usize>()
    }

    pub fn with_function(&self, function: Function) -> Self {
        Self { function, ..self.clone() }
    }

    /// Same instance with a different number of blocks.
    pub fn with_t(&self, t: usize) -> Result<Self> {
        Self::new(self.lambda, self.k, CostParams { t, ..self.costs }, self.m.clone(), self.function.clone())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawSpec = serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        raw.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    /// Short identifier used in CSV rows.
    pub fn id(&self) -> String {
        format!(
            "l{}-k{}-t{}-r{}-w{}-{}",
            self.lambda,
            self.k,
            self.costs.t,
            self.costs.r,
            self.costs.w,
            self.function.name()
        )
    }
}

impl TryFrom<RawSpec> for ProblemSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        ProblemSpec::new(raw.lambda, raw.k, CostParams { r: raw.r, w: raw.w, t: raw.t }, raw.m, raw.f)
    }
}

impl Serialize for ProblemSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RawSpec {
            lambda: self.lambda,
            k: self.k,
            t: self.costs.t,
            r: self.costs.r,
            w: self.costs.w,
            m: self.m.clone(),
            f: self.function.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProblemSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpec::deserialize(deserializer)?;
        raw.try_into().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InputWord {
    symbols: Vec<Symbol>,
}

impl InputWord {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Self { symbols }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl fmt::Display for InputWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.symbols.iter().try_for_each(|s| write!(f, "{}", s.as_char()))
    }
}

/// Accepts `"201211"` as well as whitespace-separated `"2 0 1 2 1 1"`.
impl FromStr for InputWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(Symbol::try_from)
            .collect::<Result<Vec<_>>>()
            .map(InputWord::new)
    }
}

impl Serialize for InputWord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InputWord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// `segments[j][i]` is `X^{j+1}_{i+1}`: instance-major, round-minor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedInput {
    pub segments: Vec<Vec<Vec<bool>>>,
    /// 1-based stream positions of the `2` markers.
    pub guardian_positions: Vec<usize>,
}

impl ParsedInput {
    pub fn segment(&self, instance: usize, round: usize) -> &[bool] {
        &self.segments[instance][round]
    }
}

/// Guardian answers in stream order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct GuardianOutputs(pub Vec<bool>);

impl GuardianOutputs {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }
}

impl fmt::Display for GuardianOutputs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|&b| write!(f, "{}", u8::from(b)))
    }
}

impl Serialize for GuardianOutputs {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

pub fn encode_input(spec: &ProblemSpec, segments: &[Vec<Vec<bool>>]) -> Result<InputWord> {
    check_segments(spec, segments)?;
    let mut symbols = Vec::with_capacity(spec.word_len());
    for round in 0..spec.k {
        for instance in segments {
            symbols.push(Symbol::Guard);
            symbols.extend(instance[round].iter().map(|&b| Symbol::from_bit(b)));
        }
    }
    Ok(InputWord::new(symbols))
}

fn check_segments(spec: &ProblemSpec, segments: &[Vec<Vec<bool>>]) -> Result<()> {
    if segments.len() != spec.lambda {
        return Err(Error::DimensionMismatch(format!(
            "expected {} instances, got {}",
            spec.lambda,
            segments.len()
        )));
    }
    for (j, instance) in segments.iter().enumerate() {
        if instance.len() != spec.k {
            return Err(Error::DimensionMismatch(format!(
                "instance {} has {} segments, expected {}",
                j + 1,
                instance.len(),
                spec.k
            )));
        }
        for (i, (seg, &m)) in instance.iter().zip(&spec.m).enumerate() {
            if seg.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "segment X^{}_{} has length {}, expected {m}",
                    j + 1,
                    i + 1,
                    seg.len()
                )));
            }
        }
    }
    Ok(())
}

pub fn parse_input(spec: &ProblemSpec, word: &InputWord) -> Result<ParsedInput> {
    let symbols = word.symbols();
    if symbols.len() != spec.word_len() {
        return Err(Error::MalformedInput(format!(
            "word has length {}, spec expects {}",
            symbols.len(),
            spec.word_len()
        )));
    }
    let mut segments = vec![Vec::with_capacity(spec.k); spec.lambda];
    let mut guardian_positions = Vec::with_capacity(spec.guardian_count());
    let mut pos = 0;
    for round in 0..spec.k {
        for instance in segments.iter_mut() {
            if symbols[pos] != Symbol::Guard {
                return Err(Error::MalformedInput(format!(
                    "expected guardian marker at position {}",
                    pos + 1
                )));
            }
            pos += 1;
            guardian_positions.push(pos);
            let seg = symbols[pos..pos + spec.m[round]]
                .iter()
                .enumerate()
                .map(|(off, s)| match s {
                    Symbol::Zero => Ok(false),
                    Symbol::One => Ok(true),
                    Symbol::Guard => Err(Error::MalformedInput(format!(
                        "unexpected guardian marker at position {}",
                        pos + off + 1
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            pos += seg.len();
            instance.push(seg);
        }
    }
    Ok(ParsedInput { segments, guardian_positions })
}

/// `f` of every segment, `values[j][i] = f(X^j_i)`.
pub fn segment_values(spec: &ProblemSpec, parsed: &ParsedInput) -> Result<Vec<Vec<bool>>> {
    parsed
        .segments
        .iter()
        .map(|inst| inst.iter().map(|x| spec.function.eval(x)).collect())
        .collect()
}

/// `g[j][i]`: XOR of `f` over segments `i..k` of instance `j`.
pub fn suffix_parities(spec: &ProblemSpec, parsed: &ParsedInput) -> Result<Vec<Vec<bool>>> {
    Ok(suffix_xor(&segment_values(spec, parsed)?))
}

pub fn suffix_xor(values: &[Vec<bool>]) -> Vec<Vec<bool>> {
    values
        .iter()
        .map(|inst| {
            let mut g = inst.clone();
            for i in (0..g.len().saturating_sub(1)).rev() {
                g[i] ^= g[i + 1];
            }
            g
        })
        .collect()
}

/// The g-targets flattened into guardian stream order.
pub fn stream_targets(g: &[Vec<bool>]) -> Vec<bool> {
    let rounds = g.first().map_or(0, Vec::len);
    (0..rounds).flat_map(|i| g.iter().map(move |inst| inst[i])).collect()
}

pub fn cost(spec: &ProblemSpec, parsed: &ParsedInput, outputs: &GuardianOutputs) -> Result<f64> {
    let targets = stream_targets(&suffix_parities(spec, parsed)?);
    cost_against_targets(spec, &targets, outputs.bits())
}

/// Block cost of `outputs` against stream-order targets.
pub fn cost_against_targets(spec: &ProblemSpec, targets: &[bool], outputs: &[bool]) -> Result<f64> {
    if outputs.len() != spec.guardian_count() || targets.len() != spec.guardian_count() {
        return Err(Error::OutputCountMismatch {
            emitted: outputs.len(),
            expected: spec.guardian_count(),
        });
    }
    Ok(block_cost(spec, targets, outputs))
}

pub(crate) fn block_cost(spec: &ProblemSpec, targets: &[bool], outputs: &[bool]) -> f64 {
    let u = spec.block_len();
    targets
        .chunks(u)
        .zip(outputs.chunks(u))
        .map(|(want, got)| if want == got { spec.costs.r } else { spec.costs.w })
        .sum()
}

pub fn opt_cost(spec: &ProblemSpec) -> f64 {
    spec.costs.t as f64 * spec.costs.r
}

/// A promise-respecting random word for `spec`.
pub fn generate_word<R: Rng + ?Sized>(spec: &ProblemSpec, v_max: Option<usize>, rng: &mut R) -> Result<InputWord> {
    let segments = (0..spec.lambda)
        .map(|_| {
            spec.m
                .iter()
                .map(|&m| gen_segment(&spec.function, m, v_max, rng))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    encode_input(spec, &segments)
}
