use alloc::vec::Vec;

use super::{Alphabet, EvalError, Formula, Observation, Program};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MonitorError {
    #[error("monitor state has {found} entries, formula has {expected} subformulas")]
    LengthMismatch { expected: usize, found: usize },
}

/// Truth value of every subformula (bottom-up order) after the observations
/// consumed so far.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonitorState {
    values: Vec<bool>,
    step: usize,
}

impl MonitorState {
    pub fn values(&self) -> &[bool] {
        &self.values
    }

    /// Index of the last consumed observation.
    pub fn step(&self) -> usize {
        self.step
    }

    /// Value of the whole formula.
    pub fn verdict(&self) -> bool {
        self.values.last().copied().unwrap_or(false)
    }
}

/// Incremental single-pass evaluator with constant-size state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monitor {
    program: Program,
    temporal: Vec<usize>,
}

impl Monitor {
    pub fn new(phi: &Formula, alphabet: &Alphabet) -> Result<Self, EvalError> {
        Ok(Self::from_program(Program::compile(phi, alphabet)?))
    }

    pub fn from_program(program: Program) -> Self {
        let temporal = program.nodes().iter().enumerate().filter(|(_, n)| n.is_temporal()).map(|(i, _)| i).collect();
        Monitor { program, temporal }
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn init(&self, first: Observation) -> MonitorState {
        let mut values = alloc::vec![false; self.program.len()];
        self.program.step_into(None, first, &mut values);
        MonitorState { values, step: 0 }
    }

    pub fn step(&self, state: &MonitorState, obs: Observation) -> Result<MonitorState, MonitorError> {
        if state.values.len() != self.program.len() {
            return Err(MonitorError::LengthMismatch { expected: self.program.len(), found: state.values.len() });
        }
        let mut values = alloc::vec![false; self.program.len()];
        self.program.step_into(Some(&state.values), obs, &mut values);
        Ok(MonitorState { values, step: state.step + 1 })
    }

    /// The part of a state that influences future verdicts: the values of
    /// temporal nodes and the children read by `Y`. Two states with the same
    /// key at the same observation behave identically from then on.
    pub fn memory_key(&self, state: &MonitorState) -> Vec<u64> {
        let mut key = alloc::vec![0u64; self.program.len().div_ceil(64)];
        for &i in &self.temporal {
            let idx = match self.program.nodes()[i] {
                super::Node::Yesterday(c) => c as usize,
                _ => i,
            };
            if state.values[idx] {
                key[idx / 64] |= 1 << (idx % 64);
            }
        }
        key
    }
}

/// Builds a monitor for `phi` and seeds it with the first observation.
pub fn monitor_init(
    phi: &Formula,
    alphabet: &Alphabet,
    first: Observation,
) -> Result<(Monitor, MonitorState), EvalError> {
    let m = Monitor::new(phi, alphabet)?;
    let s = m.init(first);
    Ok((m, s))
}
