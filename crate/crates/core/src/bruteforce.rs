//! Exhaustive searches over tiny deterministic table algorithms, advice
//! partitions, and promise inputs, plus a subfunction counter.
//!
//! Tables are enumerated up to state relabeling: only tables whose states
//! appear in breadth-first discovery order are visited. Outputs matter only
//! at guardian markers, so each table carries `2^S` output choices rather
//! than `2^(3S)`.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::algorithms::{table_algorithm, AdvisedTables, TableAlgorithm};
use crate::error::{Error, Result};
use crate::functions::Function;
use crate::problem::{
    block_cost, encode_input, opt_cost, stream_targets, suffix_xor, ParsedInput, ProblemSpec, Symbol,
};

pub const DEFAULT_INPUT_CAP: u64 = 1 << 20;
pub const DEFAULT_TABLE_CAP: u64 = 1 << 24;
/// Largest input set the bipartition search accepts.
pub const MAX_ADVICE_INPUTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub v_max: Option<usize>,
    pub input_cap: u64,
    pub table_cap: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { v_max: None, input_cap: DEFAULT_INPUT_CAP, table_cap: DEFAULT_TABLE_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub ratio: f64,
    pub worst_cost: f64,
    /// One table per advice string, indexed little-endian by the advice bits.
    #[serde(serialize_with = "serialize_tables")]
    pub witness: AdvisedTables,
    /// Advice string (as table index) the adviser sends for each input.
    pub partition: Vec<usize>,
    pub tables_examined: u64,
    pub inputs: usize,
}

fn serialize_tables<S: serde::Serializer>(t: &AdvisedTables, s: S) -> std::result::Result<S::Ok, S::Error> {
    let files: Vec<_> = t.tables().iter().map(TableAlgorithm::to_file).collect();
    files.serialize(s)
}

/// Segment representatives for every value `f` can take on a length-`m`
/// segment. PartialMOD yields `1^(v 2^s) 0^rest` for each admissible `v`.
fn segment_representatives(f: &Function, m: usize, v_max: Option<usize>) -> Result<Vec<Vec<bool>>> {
    match f {
        Function::PartialMod(p) => {
            let hi = v_max.map_or(p.v_max(m), |v| v.min(p.v_max(m)));
            if hi < 2 {
                return Err(Error::Infeasible(format!("segment length {m} admits no promise input")));
            }
            Ok((2..=hi)
                .map(|v| (0..m).map(|pos| pos < v * p.period()).collect())
                .collect())
        }
        total => {
            let mut reps: Vec<Vec<bool>> = Vec::new();
            let mut seen = [false; 2];
            let limit = if m >= 20 { 1u64 << 20 } else { 1u64 << m };
            for code in 0..limit {
                let x: Vec<bool> = (0..m).map(|b| b < 64 && (code >> b) & 1 == 1).collect();
                let value = total.eval(&x)?;
                if !seen[usize::from(value)] {
                    seen[usize::from(value)] = true;
                    reps.push(x);
                }
                if seen == [true, true] {
                    break;
                }
            }
            Ok(reps)
        }
    }
}

/// Canonical adversary inputs: the cartesian product of per-segment
/// representatives, instance-major, last segment varying fastest.
pub fn enumerate_inputs(spec: &ProblemSpec, v_max: Option<usize>, cap: u64) -> Result<Vec<ParsedInput>> {
    let per_round = spec
        .m()
        .iter()
        .map(|&m| segment_representatives(spec.function(), m, v_max))
        .collect::<Result<Vec<_>>>()?;
    let slots: Vec<&Vec<Vec<bool>>> = (0..spec.lambda()).flat_map(|_| per_round.iter()).collect();
    let total = slots
        .iter()
        .try_fold(1u64, |acc, reps| acc.checked_mul(reps.len() as u64).filter(|&n| n <= cap))
        .ok_or_else(|| Error::SpaceTooLarge(format!("more than {cap} canonical inputs")))?;

    let mut inputs = Vec::with_capacity(total as usize);
    let mut digits = vec![0usize; slots.len()];
    for _ in 0..total {
        let segments: Vec<Vec<Vec<bool>>> = (0..spec.lambda())
            .map(|j| (0..spec.k()).map(|i| slots[j * spec.k() + i][digits[j * spec.k() + i]].clone()).collect())
            .collect();
        let word = encode_input(spec, &segments)?;
        let guardian_positions = word
            .symbols()
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == Symbol::Guard)
            .map(|(p, _)| p + 1)
            .collect();
        inputs.push(ParsedInput { segments, guardian_positions });
        for d in (0..digits.len()).rev() {
            digits[d] += 1;
            if digits[d] < slots[d].len() {
                break;
            }
            digits[d] = 0;
        }
    }
    Ok(inputs)
}

/// An input reduced to what a table search needs.
struct Case {
    symbols: Vec<Symbol>,
    targets: Vec<bool>,
}

fn cases(spec: &ProblemSpec, inputs: &[ParsedInput]) -> Result<Vec<Case>> {
    inputs
        .iter()
        .map(|p| {
            let values = p
                .segments
                .iter()
                .map(|inst| inst.iter().map(|x| spec.function().eval(x)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            Ok(Case {
                symbols: encode_input(spec, &p.segments)?.symbols().to_vec(),
                targets: stream_targets(&suffix_xor(&values)),
            })
        })
        .collect()
}

fn table_space(states: usize, cap: u64) -> Result<u64> {
    if states == 0 {
        return Err(Error::InvalidArgument("need at least one state".into()));
    }
    let transitions = (states as u128).checked_pow(3 * states as u32);
    let size = transitions.and_then(|t| t.checked_mul(1u128 << states.min(127)));
    match size {
        Some(n) if n <= cap as u128 => Ok(transitions.unwrap() as u64),
        _ => Err(Error::SpaceTooLarge(format!(
            "{states}-state tables exceed the cap of {cap}"
        ))),
    }
}

/// Canonical transition table number `idx`, if it is one.
fn canonical_transitions(states: usize, mut idx: u64) -> Option<Vec<[usize; 3]>> {
    let mut rows = vec![[0usize; 3]; states];
    for row in rows.iter_mut() {
        for cell in row.iter_mut() {
            *cell = (idx % states as u64) as usize;
            idx /= states as u64;
        }
    }
    let probe = table_algorithm(states, rows.clone(), vec![[false; 3]; states]).ok()?;
    probe.is_canonical().then_some(rows)
}

/// State in which each guardian of `case` is reached.
fn guardian_states(rows: &[[usize; 3]], case: &Case) -> Vec<usize> {
    let mut state = 0;
    let mut out = Vec::with_capacity(case.targets.len());
    for &s in &case.symbols {
        if s == Symbol::Guard {
            out.push(state);
        }
        state = rows[state][s.index()];
    }
    out
}

fn with_guard_outputs(rows: Vec<[usize; 3]>, mask: u64) -> TableAlgorithm {
    let outputs = (0..rows.len()).map(|d| [false, false, (mask >> d) & 1 == 1]).collect();
    table_algorithm(rows.len(), rows, outputs).expect("enumerated tables are well formed")
}

/// Cost of every (canonical table, output mask) on every case, in a fixed order.
fn for_each_table<T: Send>(
    spec: &ProblemSpec,
    states: usize,
    cap: u64,
    cases: &[Case],
    per_table: impl Fn(u64, u64, Vec<f64>) -> T + Sync,
) -> Result<Vec<T>> {
    let transitions = table_space(states, cap)?;
    Ok((0..transitions)
        .into_par_iter()
        .filter_map(|idx| canonical_transitions(states, idx).map(|rows| (idx, rows)))
        .flat_map_iter(|(idx, rows)| {
            let reached: Vec<Vec<usize>> = cases.iter().map(|c| guardian_states(&rows, c)).collect();
            let per_table = &per_table;
            (0..1u64 << states).map(move |mask| {
                let costs = cases
                    .iter()
                    .zip(&reached)
                    .map(|(c, states)| {
                        let outputs: Vec<bool> = states.iter().map(|&d| (mask >> d) & 1 == 1).collect();
                        block_cost(spec, &c.targets, &outputs)
                    })
                    .collect();
                per_table(idx, mask, costs)
            })
        })
        .collect())
}

/// Best worst-case ratio achievable by any `S`-state deterministic table
/// over the canonical inputs.
pub fn best_deterministic_ratio(spec: &ProblemSpec, states: usize, config: &SearchConfig) -> Result<SearchResult> {
    let inputs = enumerate_inputs(spec, config.v_max, config.input_cap)?;
    let cases = cases(spec, &inputs)?;
    let scored = for_each_table(spec, states, config.table_cap, &cases, |idx, mask, costs| {
        (costs.into_iter().fold(0.0, f64::max), idx, mask)
    })?;
    let examined = scored.len() as u64;
    let (worst, idx, mask) = scored
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)))
        .expect("state 0 alone is always canonical");
    let rows = canonical_transitions(states, idx).expect("index came from the enumeration");
    Ok(SearchResult {
        ratio: worst / opt_cost(spec),
        worst_cost: worst,
        witness: AdvisedTables::single(with_guard_outputs(rows, mask)),
        partition: vec![0; inputs.len()],
        tables_examined: examined,
        inputs: inputs.len(),
    })
}

/// Best worst-case ratio when an adviser that sees the input may pick one of
/// `2^b` tables. Exact for `b = 0`, `b = 1`, and whenever `2^b` reaches the
/// number of inputs.
pub fn best_advice_ratio(spec: &ProblemSpec, states: usize, b: usize, config: &SearchConfig) -> Result<SearchResult> {
    if b == 0 {
        return best_deterministic_ratio(spec, states, config);
    }
    let inputs = enumerate_inputs(spec, config.v_max, config.input_cap)?;
    let n = inputs.len();
    let full_information = b < usize::BITS as usize && (1usize << b) >= n;
    if !full_information && b >= 2 {
        return Err(Error::Unsupported("advice search handles b = 1 or full information".into()));
    }
    if !full_information && n > MAX_ADVICE_INPUTS {
        return Err(Error::SpaceTooLarge(format!(
            "{n} inputs exceed the bipartition limit of {MAX_ADVICE_INPUTS}"
        )));
    }
    let cases = cases(spec, &inputs)?;
    let scored = for_each_table(spec, states, config.table_cap, &cases, |idx, mask, costs| (costs, idx, mask))?;
    let examined = scored.len() as u64;

    // Tables with identical cost vectors are interchangeable; keep the first.
    let mut distinct: Vec<(Vec<f64>, u64, u64)> = Vec::new();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for (costs, idx, mask) in scored {
        let key: Vec<u64> = costs.iter().map(|c| c.to_bits()).collect();
        if seen.insert(key) {
            distinct.push((costs, idx, mask));
        }
    }
    let table_of = |i: usize| {
        let (_, idx, mask) = &distinct[i];
        with_guard_outputs(canonical_transitions(states, *idx).expect("enumerated"), *mask)
    };

    let (worst, tables, partition) = if full_information {
        let mut worst = 0.0f64;
        let mut chosen = Vec::with_capacity(n);
        for input in 0..n {
            let (best, _) = distinct
                .iter()
                .enumerate()
                .map(|(i, d)| (i, d.0[input]))
                .fold((0, f64::INFINITY), |acc, (i, c)| if c < acc.1 { (i, c) } else { acc });
            worst = worst.max(distinct[best].0[input]);
            chosen.push(table_of(best));
        }
        let mut tables = chosen;
        tables.resize(1 << b, tables[0].clone());
        (worst, tables, (0..n).collect())
    } else {
        let full = 1usize << n;
        let mut best = vec![(f64::INFINITY, usize::MAX); full];
        let mut worst_in = vec![0.0f64; full];
        for (i, (costs, _, _)) in distinct.iter().enumerate() {
            for set in 1..full {
                let low = set.trailing_zeros() as usize;
                worst_in[set] = worst_in[set & (set - 1)].max(costs[low]);
                if worst_in[set] < best[set].0 {
                    best[set] = (worst_in[set], i);
                }
            }
        }
        best[0] = (0.0, 0);
        let (set, value) = (0..full)
            .map(|set| (set, best[set].0.max(best[(full - 1) ^ set].0)))
            .fold((0, f64::INFINITY), |acc, (s, v)| if v < acc.1 { (s, v) } else { acc });
        let tables = vec![table_of(best[(full - 1) ^ set].1), table_of(best[set].1)];
        let partition = (0..n).map(|i| (set >> i) & 1).collect();
        (value, tables, partition)
    };
    Ok(SearchResult {
        ratio: worst / opt_cost(spec),
        worst_cost: worst,
        witness: AdvisedTables::new(tables)?,
        partition,
        tables_examined: examined,
        inputs: n,
    })
}

/// Number of distinct functions on the last `m - u` bits obtained by fixing
/// the first `u` bits of `f`.
pub fn count_subfunctions(f: &Function, m: usize, u: usize) -> Result<usize> {
    if !f.is_total() {
        return Err(Error::InvalidArgument(format!("{} is not a total function", f.name())));
    }
    if m > 16 {
        return Err(Error::SpaceTooLarge(format!("m = {m} exceeds 16")));
    }
    if u == 0 || u >= m {
        return Err(Error::InvalidArgument(format!("need 1 <= u < m, got u = {u}, m = {m}")));
    }
    let rest = m - u;
    let mut tables = HashSet::new();
    let mut x = vec![false; m];
    for prefix in 0u32..1 << u {
        let mut truth = Vec::with_capacity(1 << rest);
        for suffix in 0u32..1 << rest {
            for (b, bit) in x.iter_mut().enumerate() {
                *bit = if b < u { (prefix >> b) & 1 == 1 } else { (suffix >> (b - u)) & 1 == 1 };
            }
            truth.push(f.eval(&x)?);
        }
        tables.insert(truth);
    }
    Ok(tables.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{segment_values, CostParams};

    fn pmod_spec(k: usize, t: usize, m: usize) -> ProblemSpec {
        ProblemSpec::bh(k, t, 1.0, 3.0, vec![m; k], Function::partial_mod(1)).unwrap()
    }

    #[test]
    fn enumerate_inputs_examples() {
        let spec = pmod_spec(2, 1, 8);
        let inputs = enumerate_inputs(&spec, Some(3), DEFAULT_INPUT_CAP).unwrap();
        assert_eq!(inputs.len(), 4);
        let patterns: HashSet<Vec<bool>> =
            inputs.iter().map(|p| segment_values(&spec, p).unwrap()[0].clone()).collect();
        assert_eq!(patterns.len(), 4);

        let one = pmod_spec(1, 1, 4);
        let inputs = enumerate_inputs(&one, Some(2), DEFAULT_INPUT_CAP).unwrap();
        assert_eq!(inputs.len(), 1);
        assert_eq!(segment_values(&one, &inputs[0]).unwrap(), vec![vec![false]]);

        let ten = pmod_spec(10, 1, 8);
        assert!(matches!(enumerate_inputs(&ten, Some(3), 1 << 5), Err(Error::SpaceTooLarge(_))));
    }

    #[test]
    fn enumerated_inputs_parse_back() {
        let spec = ProblemSpec::new(2, 2, CostParams { r: 1.0, w: 3.0, t: 2 }, vec![3, 2], Function::Xor).unwrap();
        for p in enumerate_inputs(&spec, None, DEFAULT_INPUT_CAP).unwrap() {
            let word = encode_input(&spec, &p.segments).unwrap();
            assert_eq!(crate::problem::parse_input(&spec, &word).unwrap(), p);
        }
    }

    #[test]
    fn canonical_table_counts() {
        // Reachable, BFS-ordered tables over a 3-letter alphabet.
        let count = |s: usize| (0..(s as u64).pow(3 * s as u32)).filter(|&i| canonical_transitions(s, i).is_some()).count();
        assert_eq!(count(1), 1);
        // state 0 must reach state 1 on some symbol: 7 rows, times 8 free rows
        assert_eq!(count(2), 7 * 8);
    }

    #[test]
    fn oversized_table_space() {
        let spec = pmod_spec(2, 1, 8);
        assert!(matches!(
            best_deterministic_ratio(&spec, 5, &SearchConfig::default()),
            Err(Error::SpaceTooLarge(_))
        ));
    }

    #[test]
    fn search_results_are_at_least_one_and_monotone_in_states() {
        let spec = pmod_spec(2, 2, 8);
        let one = best_deterministic_ratio(&spec, 1, &SearchConfig::default()).unwrap();
        let two = best_deterministic_ratio(&spec, 2, &SearchConfig::default()).unwrap();
        assert!(one.ratio >= two.ratio && two.ratio >= 1.0);
        let advised = best_advice_ratio(&spec, 2, 1, &SearchConfig::default()).unwrap();
        assert!(advised.ratio <= two.ratio && advised.ratio >= 1.0);
    }

    #[test]
    fn witness_reproduces_reported_cost() {
        let spec = pmod_spec(2, 2, 8);
        let config = SearchConfig::default();
        let res = best_advice_ratio(&spec, 2, 1, &config).unwrap();
        let inputs = enumerate_inputs(&spec, None, config.input_cap).unwrap();
        let mut worst = 0.0f64;
        for (p, &group) in inputs.iter().zip(&res.partition) {
            let word = encode_input(&spec, &p.segments).unwrap();
            let out = res.witness.tables()[group].answer(word.symbols());
            worst = worst.max(crate::problem::cost(&spec, p, &crate::problem::GuardianOutputs(out)).unwrap());
        }
        assert_eq!(worst, res.worst_cost);
    }

    #[test]
    fn full_information_advice_is_optimal() {
        let spec = pmod_spec(2, 1, 8);
        let res = best_advice_ratio(&spec, 2, 4, &SearchConfig::default()).unwrap();
        assert_eq!(res.ratio, 1.0);
        assert_eq!(res.witness.advice_bits(), 4);
    }

    #[test]
    fn advice_input_limit() {
        let spec = pmod_spec(3, 1, 8);
        // 27 inputs
        assert!(matches!(
            best_advice_ratio(&spec, 1, 1, &SearchConfig::default()),
            Err(Error::SpaceTooLarge(_))
        ));
        assert!(matches!(
            best_advice_ratio(&spec, 1, 2, &SearchConfig::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn subfunction_examples() {
        for u in 1..6 {
            assert_eq!(count_subfunctions(&Function::Xor, 6, u).unwrap(), 2);
        }
        assert_eq!(count_subfunctions(&Function::And, 4, 2).unwrap(), 2);
        assert_eq!(count_subfunctions(&Function::Constant { value: 0 }, 5, 2).unwrap(), 1);
        assert!(count_subfunctions(&Function::partial_mod(1), 8, 2).is_err());
        assert!(matches!(count_subfunctions(&Function::Xor, 17, 2), Err(Error::SpaceTooLarge(_))));
        assert!(count_subfunctions(&Function::Xor, 4, 4).is_err());
    }

    #[test]
    fn subfunction_count_bound() {
        for f in [Function::Xor, Function::And, Function::Constant { value: 1 }] {
            for m in 2..=10 {
                for u in 1..m {
                    let n = count_subfunctions(&f, m, u).unwrap() as f64;
                    let bound = 2f64.powf(2f64.powi((m - u) as i32)).min(2f64.powi(u as i32));
                    assert!(n <= bound);
                }
            }
        }
    }
}
