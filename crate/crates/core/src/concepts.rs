//! Candidate specification classes.
//!
//! A class is either every formula over an operator set up to a size bound,
//! or the instances of a template family. Templates are formula patterns
//! with `$x` placeholders (bound to an atom) and `?x` placeholders (bound to
//! an atom or its negation).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::gridworld::{GridWorld, WorldError};
use crate::inference::RolloutPool;
use crate::pltl::{parse_pattern, Alphabet, EvalError, Formula, Operator, OperatorSet, ParseError, Program};

/// Default bound on the number of generated formulas.
pub const DEFAULT_HARD_CAP: usize = 100_000;

/// Response with a drying condition: whenever `$a` holds after `$b`, there
/// has been a `$c` since the last `$b`.
pub const GUARDED_RESPONSE: &str = "H(($a & O $b) -> (!$b S $c))";

/// The guarded response conjoined with reach-avoid.
pub const GUARDED_REACH_AVOID: &str = "(H !$r & O $y) & H(($y & O $b) -> (!$b S $d))";

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConceptError {
    #[error("concept class needs at least one atom")]
    NoAtoms,
    #[error("maximum formula size must be at least 1")]
    ZeroSize,
    #[error("class would hold {count} formulas, over the cap of {cap}; lower the size bound or trim the templates")]
    TooLarge { count: usize, cap: usize },
    #[error("bad template `{pattern}`: {source}")]
    Template { pattern: String, source: ParseError },
    #[error("semantic deduplication needs at least one probe trace")]
    NoProbes,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Template-based generation.
#[derive(Clone, Debug, PartialEq)]
pub struct TemplateFamily {
    /// Conjunct patterns; their instances are combined into conjunctions.
    pub base: Vec<String>,
    /// Largest number of distinct base instances in one conjunction.
    pub max_conjuncts: usize,
    /// Standalone patterns.
    pub patterns: Vec<String>,
    /// Adds [`GUARDED_RESPONSE`] and [`GUARDED_REACH_AVOID`].
    pub guarded_response: bool,
    /// Atoms the guarded patterns may bind; all atoms when `None`.
    pub guard_atoms: Option<Vec<String>>,
    /// Different placeholders of one pattern must bind different atoms.
    pub distinct_bindings: bool,
}

impl TemplateFamily {
    /// Only the given standalone patterns, with free bindings.
    pub fn patterns<S: AsRef<str>>(patterns: &[S]) -> Self {
        TemplateFamily {
            base: Vec::new(),
            max_conjuncts: 0,
            patterns: patterns.iter().map(|p| p.as_ref().to_string()).collect(),
            guarded_response: false,
            guard_atoms: None,
            distinct_bindings: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConceptConfig {
    pub atoms: Vec<String>,
    pub operators: OperatorSet,
    pub max_size: usize,
    /// `None` enumerates every formula over `operators`.
    pub templates: Option<TemplateFamily>,
    pub hard_cap: usize,
    /// Probe traces for semantic deduplication; 0 turns it off.
    pub dedup_probes: usize,
}

impl ConceptConfig {
    /// Unrestricted grammar over `atoms` and `operators`.
    pub fn grammar<S: AsRef<str>>(atoms: &[S], operators: OperatorSet, max_size: usize) -> Self {
        ConceptConfig {
            atoms: atoms.iter().map(|a| a.as_ref().to_string()).collect(),
            operators,
            max_size,
            templates: None,
            hard_cap: DEFAULT_HARD_CAP,
            dedup_probes: 0,
        }
    }

    /// The stock class for the color worlds: `H ℓ` and `O ℓ` over all five
    /// colors, conjunctions of up to three of them, and the guarded
    /// templates over the four non-background colors.
    pub fn color_default() -> Self {
        use Operator::*;
        ConceptConfig {
            atoms: ["red", "yellow", "blue", "brown", "white"].map(String::from).to_vec(),
            operators: [Not, And, Implies, Historically, Once, Since].into_iter().collect(),
            max_size: 17,
            templates: Some(TemplateFamily {
                base: ["H ?a", "O ?a"].map(String::from).to_vec(),
                max_conjuncts: 3,
                patterns: Vec::new(),
                guarded_response: true,
                guard_atoms: Some(["red", "yellow", "blue", "brown"].map(String::from).to_vec()),
                distinct_bindings: true,
            }),
            hard_cap: DEFAULT_HARD_CAP,
            dedup_probes: 0,
        }
    }
}

/// An ordered, duplicate-free list of candidate formulas.
#[derive(Clone, Debug, PartialEq)]
pub struct ConceptClass {
    formulas: Vec<Formula>,
}

impl ConceptClass {
    /// Wraps an explicit list, dropping structural duplicates but keeping
    /// the given order.
    pub fn from_formulas(formulas: impl IntoIterator<Item = Formula>) -> Self {
        let mut seen = BTreeSet::new();
        let formulas = formulas.into_iter().filter(|f| seen.insert(f.clone())).collect();
        ConceptClass { formulas }
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn position(&self, phi: &Formula) -> Option<usize> {
        self.formulas.iter().position(|f| f == phi)
    }

    pub fn contains(&self, phi: &Formula) -> bool {
        self.position(phi).is_some()
    }
}

// Canonical order: size, then printed text.
fn sort_canonical(formulas: &mut Vec<Formula>) {
    let mut keyed: Vec<(usize, String, Formula)> = formulas.drain(..).map(|f| (f.size(), f.to_string(), f)).collect();
    keyed.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    keyed.dedup_by(|a, b| a.2 == b.2);
    formulas.extend(keyed.into_iter().map(|(_, _, f)| f));
}

/// Generates the class described by `cfg` in canonical order.
pub fn enumerate_candidates(cfg: &ConceptConfig) -> Result<ConceptClass, ConceptError> {
    if cfg.atoms.is_empty() {
        return Err(ConceptError::NoAtoms);
    }
    if cfg.max_size == 0 {
        return Err(ConceptError::ZeroSize);
    }
    Alphabet::new(&cfg.atoms)?;
    let mut formulas = match &cfg.templates {
        None => enumerate_grammar(cfg)?,
        Some(t) => enumerate_templates(cfg, t)?,
    };
    sort_canonical(&mut formulas);
    Ok(ConceptClass { formulas })
}

fn enumerate_grammar(cfg: &ConceptConfig) -> Result<Vec<Formula>, ConceptError> {
    let unary: Vec<Operator> = cfg
        .operators
        .iter()
        .filter(|op| matches!(op, Operator::Not | Operator::Historically | Operator::Once | Operator::Yesterday))
        .collect();
    let binary: Vec<Operator> = cfg.operators.iter().filter(|op| !unary.contains(op)).collect();

    // Count first so an oversized request fails before allocating.
    let mut counts = alloc::vec![0usize; cfg.max_size + 1];
    counts[1] = cfg.atoms.len();
    let mut total = counts[1];
    for n in 2..=cfg.max_size {
        let mut c = unary.len().saturating_mul(counts[n - 1]);
        for left in 1..n - 1 {
            let pairs = counts[left].saturating_mul(counts[n - 1 - left]);
            c = c.saturating_add(binary.len().saturating_mul(pairs));
        }
        counts[n] = c;
        total = total.saturating_add(c);
        if total > cfg.hard_cap {
            return Err(ConceptError::TooLarge { count: total, cap: cfg.hard_cap });
        }
    }

    let mut by_size: Vec<Vec<Formula>> = alloc::vec![Vec::new(); cfg.max_size + 1];
    by_size[1] = cfg.atoms.iter().map(Formula::atom).collect();
    for n in 2..=cfg.max_size {
        let mut level = Vec::with_capacity(counts[n]);
        for &op in &unary {
            for f in &by_size[n - 1] {
                level.push(apply_unary(op, f.clone()));
            }
        }
        for &op in &binary {
            for left in 1..n - 1 {
                for a in &by_size[left] {
                    for b in &by_size[n - 1 - left] {
                        level.push(apply_binary(op, a.clone(), b.clone()));
                    }
                }
            }
        }
        by_size[n] = level;
    }
    Ok(by_size.into_iter().flatten().collect())
}

fn apply_unary(op: Operator, f: Formula) -> Formula {
    match op {
        Operator::Not => Formula::not(f),
        Operator::Historically => Formula::historically(f),
        Operator::Once => Formula::once(f),
        _ => Formula::yesterday(f),
    }
}

fn apply_binary(op: Operator, a: Formula, b: Formula) -> Formula {
    match op {
        Operator::And => Formula::and(a, b),
        Operator::Or => Formula::or(a, b),
        Operator::Implies => Formula::implies(a, b),
        _ => Formula::since(a, b),
    }
}

fn parse_template(text: &str) -> Result<Formula, ConceptError> {
    parse_pattern(text).map_err(|source| ConceptError::Template { pattern: text.to_string(), source })
}

/// Every instantiation of `pattern`, in binding order (placeholders in
/// first-occurrence order, atoms in the given order, positive literal
/// before negative).
pub fn instantiate(pattern: &Formula, atoms: &[String], distinct: bool) -> Vec<Formula> {
    let holes: Vec<String> =
        pattern.atoms().into_iter().filter(|a| a.starts_with('$') || a.starts_with('?')).map(String::from).collect();
    let mut out = Vec::new();
    let mut binding: Vec<(usize, bool)> = Vec::with_capacity(holes.len());
    bind(pattern, &holes, atoms, distinct, &mut binding, &mut out);
    out
}

fn bind(
    pattern: &Formula,
    holes: &[String],
    atoms: &[String],
    distinct: bool,
    binding: &mut Vec<(usize, bool)>,
    out: &mut Vec<Formula>,
) {
    let k = binding.len();
    if k == holes.len() {
        let mut lookup = BTreeMap::new();
        for (hole, &(atom, negated)) in holes.iter().zip(binding.iter()) {
            let lit = Formula::atom(atoms[atom].as_str());
            lookup.insert(hole.as_str(), if negated { Formula::not(lit) } else { lit });
        }
        out.push(pattern.map_atoms(&mut |name| lookup.get(name).cloned().unwrap_or_else(|| Formula::atom(name))));
        return;
    }
    let polarities: &[bool] = if holes[k].starts_with('?') { &[false, true] } else { &[false] };
    for atom in 0..atoms.len() {
        if distinct && binding.iter().any(|&(a, _)| a == atom) {
            continue;
        }
        for &negated in polarities {
            binding.push((atom, negated));
            bind(pattern, holes, atoms, distinct, binding, out);
            binding.pop();
        }
    }
}

fn enumerate_templates(cfg: &ConceptConfig, t: &TemplateFamily) -> Result<Vec<Formula>, ConceptError> {
    let fits = |f: &Formula| f.size() <= cfg.max_size && cfg.operators.is_superset(f.operators());
    let mut out: Vec<Formula> = Vec::new();
    let push = |out: &mut Vec<Formula>, f: Formula| -> Result<(), ConceptError> {
        out.push(f);
        if out.len() > cfg.hard_cap {
            return Err(ConceptError::TooLarge { count: out.len(), cap: cfg.hard_cap });
        }
        Ok(())
    };

    let mut base = Vec::new();
    for text in &t.base {
        let p = parse_template(text)?;
        base.extend(instantiate(&p, &cfg.atoms, t.distinct_bindings));
    }
    let mut seen = BTreeSet::new();
    base.retain(|f| seen.insert(f.clone()));
    // Conjunctions of strictly increasing base indices, nested to the left.
    let mut stack: Vec<(usize, Formula)> = base.iter().cloned().enumerate().collect();
    let mut depth_start = 0;
    let mut depth = 1;
    while depth <= t.max_conjuncts && depth_start < stack.len() {
        let level_end = stack.len();
        for i in depth_start..level_end {
            let (last, f) = stack[i].clone();
            if fits(&f) {
                push(&mut out, f.clone())?;
            }
            if depth < t.max_conjuncts {
                for (j, b) in base.iter().enumerate().skip(last + 1) {
                    stack.push((j, Formula::and(f.clone(), b.clone())));
                }
            }
        }
        depth_start = level_end;
        depth += 1;
    }

    let mut standalone: Vec<(String, bool)> = t.patterns.iter().map(|p| (p.clone(), false)).collect();
    if t.guarded_response {
        standalone.push((GUARDED_RESPONSE.to_string(), true));
        standalone.push((GUARDED_REACH_AVOID.to_string(), true));
    }
    for (text, guarded) in standalone {
        let p = parse_template(&text)?;
        let atoms = match (&t.guard_atoms, guarded) {
            (Some(g), true) => g.as_slice(),
            _ => cfg.atoms.as_slice(),
        };
        for f in instantiate(&p, atoms, t.distinct_bindings) {
            if fits(&f) {
                push(&mut out, f)?;
            }
        }
    }
    Ok(out)
}

/// Random probe words from `world` with lengths uniform in
/// `1..=world.max_len()`.
pub fn probe_pool<R: Rng + ?Sized>(world: &GridWorld, n: usize, rng: &mut R) -> Result<RolloutPool, ConceptError> {
    if n == 0 {
        return Err(ConceptError::NoProbes);
    }
    let mut words = Vec::with_capacity(n);
    for _ in 0..n {
        let len = rng.gen_range(1..=world.max_len());
        words.push(world.rollout_random(len, rng)?.observations());
    }
    Ok(RolloutPool::from_words(world.alphabet(), words))
}

/// Keeps one representative per group of members that agree on every one
/// of `n_probe` random traces: the first in class order, which is the
/// smallest for canonically ordered classes.
pub fn dedupe_semantic<R: Rng + ?Sized>(
    class: &ConceptClass,
    world: &GridWorld,
    n_probe: usize,
    rng: &mut R,
) -> Result<ConceptClass, ConceptError> {
    let pool = probe_pool(world, n_probe, rng)?;
    let mut seen = BTreeSet::new();
    let mut kept = Vec::new();
    for f in class.formulas() {
        let sig = pool.signature(&Program::compile(f, pool.alphabet())?);
        if seen.insert(sig) {
            kept.push(f.clone());
        }
    }
    Ok(ConceptClass { formulas: kept })
}
