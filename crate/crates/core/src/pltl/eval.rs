use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::Formula;

/// Largest alphabet an [`Observation`] can index.
pub const MAX_ATOMS: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("empty trace")]
    EmptyTrace,
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("invalid atom name `{0}`")]
    InvalidAtomName(String),
    #[error("duplicate atom `{0}` in alphabet")]
    DuplicateAtom(String),
    #[error("alphabet has {0} atoms, at most {MAX_ATOMS} are supported")]
    AlphabetTooLarge(usize),
}

/// Ordered set of proposition names; positions index [`Observation`] bits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    names: Vec<String>,
}

fn valid_atom_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        && name != "true"
        && name != "false"
}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Self, EvalError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out: Vec<String> = Vec::new();
        for name in names {
            let name = name.as_ref();
            if !valid_atom_name(name) {
                return Err(EvalError::InvalidAtomName(name.to_string()));
            }
            if out.iter().any(|n| n == name) {
                return Err(EvalError::DuplicateAtom(name.to_string()));
            }
            out.push(name.to_string());
        }
        if out.len() > MAX_ATOMS {
            return Err(EvalError::AlphabetTooLarge(out.len()));
        }
        Ok(Alphabet { names: out })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Observation in which exactly the named propositions hold.
    pub fn observation<S: AsRef<str>>(&self, props: &[S]) -> Result<Observation, EvalError> {
        let mut obs = Observation::EMPTY;
        for p in props {
            let p = p.as_ref();
            let idx = self.index_of(p).ok_or_else(|| EvalError::UnknownAtom(p.to_string()))?;
            obs = obs.with(idx);
        }
        Ok(obs)
    }

    /// Names of the propositions holding in `obs`, in alphabet order.
    pub fn props_of(&self, obs: Observation) -> Vec<&str> {
        self.names.iter().enumerate().filter(|(i, _)| obs.contains(*i)).map(|(_, n)| n.as_str()).collect()
    }
}

/// Set of propositions true at one time step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Observation(u32);

impl Observation {
    pub const EMPTY: Observation = Observation(0);

    pub const fn from_bits(bits: u32) -> Self {
        Observation(bits)
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub const fn contains(self, idx: usize) -> bool {
        idx < MAX_ATOMS && self.0 & (1 << idx) != 0
    }

    pub const fn with(self, idx: usize) -> Self {
        Observation(self.0 | (1 << idx))
    }

    pub const fn single(idx: usize) -> Self {
        Observation(1 << idx)
    }
}

/// One subformula of a compiled [`Program`]; children are indices of
/// earlier nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    True,
    False,
    Atom(u8),
    Not(u32),
    And(u32, u32),
    Or(u32, u32),
    Implies(u32, u32),
    Historically(u32),
    Once(u32),
    Since(u32, u32),
    Yesterday(u32),
}

impl Node {
    /// Whether the node's value depends on the previous step.
    pub fn is_temporal(self) -> bool {
        matches!(self, Node::Historically(_) | Node::Once(_) | Node::Since(..) | Node::Yesterday(_))
    }
}

/// A formula flattened bottom-up (post-order) against an alphabet. The
/// root is the last node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    nodes: Vec<Node>,
}

#[inline]
fn low_mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl Program {
    pub fn compile(phi: &Formula, alphabet: &Alphabet) -> Result<Program, EvalError> {
        let mut nodes = Vec::with_capacity(phi.size());
        Self::push(phi, alphabet, &mut nodes)?;
        Ok(Program { nodes })
    }

    fn push(phi: &Formula, alphabet: &Alphabet, nodes: &mut Vec<Node>) -> Result<u32, EvalError> {
        let node = match phi {
            Formula::True => Node::True,
            Formula::False => Node::False,
            Formula::Atom(name) => {
                let idx = alphabet.index_of(name).ok_or_else(|| EvalError::UnknownAtom(name.clone()))?;
                Node::Atom(idx as u8)
            }
            Formula::Not(a) => Node::Not(Self::push(a, alphabet, nodes)?),
            Formula::Historically(a) => Node::Historically(Self::push(a, alphabet, nodes)?),
            Formula::Once(a) => Node::Once(Self::push(a, alphabet, nodes)?),
            Formula::Yesterday(a) => Node::Yesterday(Self::push(a, alphabet, nodes)?),
            Formula::And(a, b) => {
                let (a, b) = (Self::push(a, alphabet, nodes)?, Self::push(b, alphabet, nodes)?);
                Node::And(a, b)
            }
            Formula::Or(a, b) => {
                let (a, b) = (Self::push(a, alphabet, nodes)?, Self::push(b, alphabet, nodes)?);
                Node::Or(a, b)
            }
            Formula::Implies(a, b) => {
                let (a, b) = (Self::push(a, alphabet, nodes)?, Self::push(b, alphabet, nodes)?);
                Node::Implies(a, b)
            }
            Formula::Since(a, b) => {
                let (a, b) = (Self::push(a, alphabet, nodes)?, Self::push(b, alphabet, nodes)?);
                Node::Since(a, b)
            }
        };
        nodes.push(node);
        Ok((nodes.len() - 1) as u32)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Truth value of the formula at the last position of `word`.
    pub fn holds(&self, word: &[Observation]) -> Result<bool, EvalError> {
        if word.is_empty() {
            return Err(EvalError::EmptyTrace);
        }
        if word.len() <= 64 {
            let mut masks = [0u64; MAX_ATOMS];
            for (i, obs) in word.iter().enumerate() {
                let mut bits = obs.bits();
                while bits != 0 {
                    let a = bits.trailing_zeros() as usize;
                    masks[a] |= 1 << i;
                    bits &= bits - 1;
                }
            }
            let mut scratch = Vec::with_capacity(self.nodes.len());
            return Ok(self.holds_masks(&masks, word.len(), &mut scratch));
        }
        let mut prev = alloc::vec![false; self.nodes.len()];
        let mut cur = alloc::vec![false; self.nodes.len()];
        for (i, obs) in word.iter().enumerate() {
            self.step_into((i > 0).then_some(prev.as_slice()), *obs, &mut cur);
            core::mem::swap(&mut prev, &mut cur);
        }
        Ok(prev[self.nodes.len() - 1])
    }

    /// Bit-parallel evaluation over a word of `len` ≤ 64 positions, given
    /// per-atom position masks (bit i set iff the atom holds at step i).
    pub fn holds_masks(&self, atom_masks: &[u64], len: usize, scratch: &mut Vec<u64>) -> bool {
        debug_assert!((1..=64).contains(&len));
        let valid = low_mask(len);
        scratch.clear();
        for node in &self.nodes {
            let v = match *node {
                Node::True => valid,
                Node::False => 0,
                Node::Atom(a) => atom_masks[a as usize] & valid,
                Node::Not(a) => !scratch[a as usize] & valid,
                Node::And(a, b) => scratch[a as usize] & scratch[b as usize],
                Node::Or(a, b) => scratch[a as usize] | scratch[b as usize],
                Node::Implies(a, b) => (!scratch[a as usize] | scratch[b as usize]) & valid,
                Node::Yesterday(a) => (scratch[a as usize] << 1) & valid,
                Node::Once(a) => {
                    let f = scratch[a as usize];
                    if f == 0 {
                        0
                    } else {
                        valid & (u64::MAX << f.trailing_zeros())
                    }
                }
                Node::Historically(a) => low_mask((!scratch[a as usize]).trailing_zeros() as usize) & valid,
                Node::Since(a, b) => {
                    // s_i = g_i | (f_i & s_{i-1}), as a parallel prefix.
                    let mut s = scratch[b as usize];
                    let mut p = scratch[a as usize];
                    let mut k = 1;
                    while k < len {
                        s |= p & (s << k);
                        p &= p << k;
                        k <<= 1;
                    }
                    s & valid
                }
            };
            scratch.push(v);
        }
        (scratch[self.nodes.len() - 1] >> (len - 1)) & 1 == 1
    }

    /// Computes every node's value at one step from the previous step's
    /// values (`None` at step 0).
    pub fn step_into(&self, prev: Option<&[bool]>, obs: Observation, out: &mut [bool]) {
        for (i, node) in self.nodes.iter().enumerate() {
            let v = match *node {
                Node::True => true,
                Node::False => false,
                Node::Atom(a) => obs.contains(a as usize),
                Node::Not(a) => !out[a as usize],
                Node::And(a, b) => out[a as usize] && out[b as usize],
                Node::Or(a, b) => out[a as usize] || out[b as usize],
                Node::Implies(a, b) => !out[a as usize] || out[b as usize],
                Node::Historically(a) => out[a as usize] && prev.is_none_or(|p| p[i]),
                Node::Once(a) => out[a as usize] || prev.is_some_and(|p| p[i]),
                Node::Yesterday(a) => prev.is_some_and(|p| p[a as usize]),
                Node::Since(a, b) => out[b as usize] || (out[a as usize] && prev.is_some_and(|p| p[i])),
            };
            out[i] = v;
        }
    }
}

/// Whether `trace` satisfies `phi`, judged at its last position.
pub fn evaluate(phi: &Formula, alphabet: &Alphabet, trace: &[Observation]) -> Result<bool, EvalError> {
    if trace.is_empty() {
        return Err(EvalError::EmptyTrace);
    }
    Program::compile(phi, alphabet)?.holds(trace)
}
