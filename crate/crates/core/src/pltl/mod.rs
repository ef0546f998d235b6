//! Past-time linear temporal logic over finite traces.
//!
//! A [`Formula`] is judged at the last position of a finite word of
//! [`Observation`]s. Three evaluators live here: a bit-parallel batch
//! evaluator ([`evaluate`], [`Program`]), an incremental [`Monitor`] with
//! constant-size state, and (in tests) a direct recursive oracle.

mod eval;
mod monitor;
mod parse;

use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub use eval::{evaluate, Alphabet, EvalError, Node, Observation, Program, MAX_ATOMS};
pub use monitor::{monitor_init, Monitor, MonitorError, MonitorState};
pub use parse::{parse_formula, parse_pattern, ParseError, ParseErrorKind};

/// Operators a formula may use. Atoms, `true` and `false` are always allowed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operator {
    Not,
    And,
    Or,
    Implies,
    Historically,
    Once,
    Since,
    Yesterday,
}

impl Operator {
    pub const ALL: [Operator; 8] = [
        Operator::Not,
        Operator::And,
        Operator::Or,
        Operator::Implies,
        Operator::Historically,
        Operator::Once,
        Operator::Since,
        Operator::Yesterday,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Operator::Not => "!",
            Operator::And => "&",
            Operator::Or => "|",
            Operator::Implies => "->",
            Operator::Historically => "H",
            Operator::Once => "O",
            Operator::Since => "S",
            Operator::Yesterday => "Y",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Operator> {
        Operator::ALL.into_iter().find(|op| op.symbol() == s)
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

/// A small set of [`Operator`]s.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct OperatorSet(u8);

impl OperatorSet {
    pub const fn empty() -> Self {
        OperatorSet(0)
    }

    pub fn all() -> Self {
        Operator::ALL.into_iter().collect()
    }

    pub fn insert(&mut self, op: Operator) {
        self.0 |= op.bit();
    }

    pub fn contains(self, op: Operator) -> bool {
        self.0 & op.bit() != 0
    }

    pub fn is_superset(self, other: OperatorSet) -> bool {
        other.0 & !self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Operator> {
        Operator::ALL.into_iter().filter(move |op| self.contains(*op))
    }
}

impl FromIterator<Operator> for OperatorSet {
    fn from_iter<I: IntoIterator<Item = Operator>>(iter: I) -> Self {
        let mut set = OperatorSet::empty();
        for op in iter {
            set.insert(op);
        }
        set
    }
}

/// Past-time LTL formula.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// `H f`: f held at every position so far.
    Historically(Box<Formula>),
    /// `O f`: f held at some position so far.
    Once(Box<Formula>),
    /// `f S g`: g held at some position, and f at every position after it.
    Since(Box<Formula>, Box<Formula>),
    /// `Y f`: there is a previous position and f held there.
    Yesterday(Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Formula {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(f: Formula, g: Formula) -> Formula {
        Formula::And(Box::new(f), Box::new(g))
    }

    pub fn or(f: Formula, g: Formula) -> Formula {
        Formula::Or(Box::new(f), Box::new(g))
    }

    pub fn implies(f: Formula, g: Formula) -> Formula {
        Formula::Implies(Box::new(f), Box::new(g))
    }

    pub fn historically(f: Formula) -> Formula {
        Formula::Historically(Box::new(f))
    }

    pub fn once(f: Formula) -> Formula {
        Formula::Once(Box::new(f))
    }

    pub fn since(f: Formula, g: Formula) -> Formula {
        Formula::Since(Box::new(f), Box::new(g))
    }

    pub fn yesterday(f: Formula) -> Formula {
        Formula::Yesterday(Box::new(f))
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 1,
            Formula::Not(f) | Formula::Historically(f) | Formula::Once(f) | Formula::Yesterday(f) => 1 + f.size(),
            Formula::And(f, g) | Formula::Or(f, g) | Formula::Implies(f, g) | Formula::Since(f, g) => {
                1 + f.size() + g.size()
            }
        }
    }

    /// The operator at the root, if any.
    pub fn operator(&self) -> Option<Operator> {
        Some(match self {
            Formula::True | Formula::False | Formula::Atom(_) => return None,
            Formula::Not(_) => Operator::Not,
            Formula::And(..) => Operator::And,
            Formula::Or(..) => Operator::Or,
            Formula::Implies(..) => Operator::Implies,
            Formula::Historically(_) => Operator::Historically,
            Formula::Once(_) => Operator::Once,
            Formula::Since(..) => Operator::Since,
            Formula::Yesterday(_) => Operator::Yesterday,
        })
    }

    /// Every operator occurring anywhere in the formula.
    pub fn operators(&self) -> OperatorSet {
        let mut set = OperatorSet::empty();
        self.visit(&mut |f| {
            if let Some(op) = f.operator() {
                set.insert(op);
            }
        });
        set
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => {}
            Formula::Not(a) | Formula::Historically(a) | Formula::Once(a) | Formula::Yesterday(a) => a.visit(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Since(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Atom names in order of first occurrence.
    pub fn atoms(&self) -> alloc::vec::Vec<&str> {
        let mut out: alloc::vec::Vec<&str> = alloc::vec::Vec::new();
        self.visit(&mut |f| {
            if let Formula::Atom(name) = f {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
        });
        out
    }

    /// Rebuilds the formula with every atom passed through `f`.
    pub fn map_atoms(&self, f: &mut impl FnMut(&str) -> Formula) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(name) => f(name),
            Formula::Not(a) => Formula::not(a.map_atoms(f)),
            Formula::Historically(a) => Formula::historically(a.map_atoms(f)),
            Formula::Once(a) => Formula::once(a.map_atoms(f)),
            Formula::Yesterday(a) => Formula::yesterday(a.map_atoms(f)),
            Formula::And(a, b) => Formula::and(a.map_atoms(f), b.map_atoms(f)),
            Formula::Or(a, b) => Formula::or(a.map_atoms(f), b.map_atoms(f)),
            Formula::Implies(a, b) => Formula::implies(a.map_atoms(f), b.map_atoms(f)),
            Formula::Since(a, b) => Formula::since(a.map_atoms(f), b.map_atoms(f)),
        }
    }

    // Binding strength used by the printer; mirrors the parser's grammar.
    fn level(&self) -> u8 {
        match self {
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Since(..) => 4,
            Formula::Not(_) | Formula::Historically(_) | Formula::Once(_) | Formula::Yesterday(_) => 5,
            Formula::True | Formula::False | Formula::Atom(_) => 6,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Formula, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(name) => f.write_str(name),
            Formula::Not(a) | Formula::Historically(a) | Formula::Once(a) | Formula::Yesterday(a) => {
                let sym = self.operator().map(Operator::symbol).unwrap_or_default();
                if matches!(self, Formula::Not(_)) {
                    f.write_str(sym)?;
                } else {
                    write!(f, "{sym} ")?;
                }
                write_child(f, a, a.level() < 5)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Since(a, b) => {
                let level = self.level();
                let sym = self.operator().map(Operator::symbol).unwrap_or_default();
                write_child(f, a, a.level() < level)?;
                write!(f, " {sym} ")?;
                write_child(f, b, b.level() <= level)
            }
            Formula::Implies(a, b) => {
                write_child(f, a, a.level() <= 1)?;
                f.write_str(" -> ")?;
                write_child(f, b, b.level() < 1)
            }
        }
    }
}

impl core::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}
