use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Symbol;

use super::{MemoryBudget, OnlineAlgorithm, StepContext};

/// Deterministic online streaming algorithm with `S` memory states.
///
/// Reading symbol `x` in state `d`, the machine answers `outputs[d][x]` (only
/// consulted at guardians) and moves to `transitions[d][x]`. State 0 is the
/// start state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TableAlgorithm {
    transitions: Vec<[usize; 3]>,
    outputs: Vec<[bool; 3]>,
}

pub fn table_algorithm(states: usize, transitions: Vec<[usize; 3]>, outputs: Vec<[bool; 3]>) -> Result<TableAlgorithm> {
    if states == 0 {
        return Err(Error::MalformedTable("need at least one state".into()));
    }
    if transitions.len() != states || outputs.len() != states {
        return Err(Error::MalformedTable(format!(
            "{states} states but {} transition rows and {} output rows",
            transitions.len(),
            outputs.len()
        )));
    }
    if let Some(bad) = transitions.iter().flatten().find(|&&s| s >= states) {
        return Err(Error::MalformedTable(format!("transition to undefined state {bad}")));
    }
    Ok(TableAlgorithm { transitions, outputs })
}

impl TableAlgorithm {
    pub fn states(&self) -> usize {
        self.transitions.len()
    }

    pub fn transitions(&self) -> &[[usize; 3]] {
        &self.transitions
    }

    pub fn outputs(&self) -> &[[bool; 3]] {
        &self.outputs
    }

    /// Two states tracking the parity of ones read so far.
    pub fn parity() -> Self {
        TableAlgorithm {
            transitions: vec![[0, 1, 0], [1, 0, 1]],
            outputs: vec![[false; 3], [true; 3]],
        }
    }

    /// Guardian answers on `symbols`.
    pub fn answer(&self, symbols: &[Symbol]) -> Vec<bool> {
        let mut state = 0;
        let mut out = Vec::new();
        for &s in symbols {
            if s == Symbol::Guard {
                out.push(self.outputs[state][2]);
            }
            state = self.transitions[state][s.index()];
        }
        out
    }

    /// True when states are numbered in breadth-first discovery order from
    /// state 0 (symbols tried in order 0, 1, 2) and every state is reachable.
    pub fn is_canonical(&self) -> bool {
        let n = self.states();
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        seen[0] = true;
        order.push(0);
        let mut head = 0;
        while head < order.len() {
            let s = order[head];
            head += 1;
            for &next in &self.transitions[s] {
                if !seen[next] {
                    if next != order.len() {
                        return false;
                    }
                    seen[next] = true;
                    order.push(next);
                }
            }
        }
        order.len() == n
    }

    pub fn to_file(&self) -> TableFile {
        TableFile {
            states: self.states(),
            transitions: self.transitions.iter().map(|r| r.to_vec()).collect(),
            outputs: self.outputs.iter().map(|r| r.iter().map(|&b| u8::from(b)).collect()).collect(),
        }
    }
}

/// JSON form: `{"S": 2, "transitions": [[0,1,0],[1,0,1]], "outputs": [[0,0,0],[1,1,1]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableFile {
    #[serde(rename = "S")]
    pub states: usize,
    pub transitions: Vec<Vec<usize>>,
    pub outputs: Vec<Vec<u8>>,
}

impl TryFrom<TableFile> for TableAlgorithm {
    type Error = Error;

    fn try_from(file: TableFile) -> Result<Self> {
        let row3 = |row: &[usize], what: &str, i: usize| -> Result<[usize; 3]> {
            row.try_into()
                .map_err(|_| Error::MalformedTable(format!("{what} row {i} has {} entries, expected 3", row.len())))
        };
        let transitions = file
            .transitions
            .iter()
            .enumerate()
            .map(|(i, row)| row3(row, "transition", i))
            .collect::<Result<Vec<_>>>()?;
        let outputs = file
            .outputs
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let wide: Vec<usize> = row.iter().map(|&b| b as usize).collect();
                let r = row3(&wide, "output", i)?;
                if r.iter().any(|&b| b > 1) {
                    return Err(Error::MalformedTable(format!("output row {i} holds a non-bit")));
                }
                Ok(r.map(|b| b == 1))
            })
            .collect::<Result<Vec<_>>>()?;
        table_algorithm(file.states, transitions, outputs)
    }
}

/// `2^b` tables; the advice string picks which one runs.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvisedTables {
    tables: Vec<TableAlgorithm>,
}

impl AdvisedTables {
    pub fn single(table: TableAlgorithm) -> Self {
        Self { tables: vec![table] }
    }

    pub fn new(tables: Vec<TableAlgorithm>) -> Result<Self> {
        if tables.is_empty() || !tables.len().is_power_of_two() {
            return Err(Error::MalformedTable(format!("{} tables is not a power of two", tables.len())));
        }
        Ok(Self { tables })
    }

    pub fn advice_bits(&self) -> usize {
        self.tables.len().trailing_zeros() as usize
    }

    pub fn tables(&self) -> &[TableAlgorithm] {
        &self.tables
    }

    pub fn machine(&self) -> TableMachine {
        TableMachine { tables: self.tables.clone(), active: 0, state: 0 }
    }

    /// Accepts either one table object or `{"tables": [...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Many {
            tables: Vec<TableFile>,
        }
        if let Ok(one) = serde_json::from_str::<TableFile>(text) {
            return Ok(Self::single(one.try_into()?));
        }
        let many: Many = serde_json::from_str(text).map_err(|e| Error::MalformedTable(e.to_string()))?;
        Self::new(many.tables.into_iter().map(TryInto::try_into).collect::<Result<_>>()?)
    }
}

#[derive(Debug, Clone)]
pub struct TableMachine {
    tables: Vec<TableAlgorithm>,
    active: usize,
    state: usize,
}

impl OnlineAlgorithm for TableMachine {
    fn name(&self) -> &str {
        "table"
    }

    fn memory(&self) -> MemoryBudget {
        let states = self.tables.iter().map(TableAlgorithm::states).max().unwrap_or(1);
        MemoryBudget {
            bits: usize::BITS as usize - (states - 1).leading_zeros() as usize,
            qubits: 0,
            states: Some(states),
        }
    }

    fn advice_len(&self) -> usize {
        self.tables.len().trailing_zeros() as usize
    }

    fn begin(&mut self, advice: &[bool]) -> Result<()> {
        self.active = advice.iter().enumerate().map(|(i, &b)| usize::from(b) << i).sum();
        self.state = 0;
        Ok(())
    }

    fn step(&mut self, symbol: Symbol, _ctx: &mut StepContext<'_>) -> Result<Option<bool>> {
        let table = &self.tables[self.active];
        let out = (symbol == Symbol::Guard).then(|| table.outputs[self.state][2]);
        self.state = table.transitions[self.state][symbol.index()];
        Ok(out)
    }
}
