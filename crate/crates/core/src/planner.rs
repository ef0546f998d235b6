//! Shortest demonstrations for a formula, by breadth-first search over the
//! product of grid cells and monitor states.
//!
//! Planning uses the deterministic kernel: slip is ignored.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec::Vec;

use core::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::gridworld::{Action, Cell, GridWorld, Trace};
use crate::pltl::{EvalError, Formula, Monitor, MonitorState};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("plan length bound must be at least 1")]
    ZeroLength,
    #[error("plan length bound {max_len} exceeds the episode bound {limit}")]
    TooLong { max_len: usize, limit: usize },
    #[error("found {found} of {wanted} demonstrations in {attempts} attempts")]
    Exhausted { found: usize, wanted: usize, attempts: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// How equally short plans are chosen between.
pub enum TieBreak<'a> {
    /// Actions tried in N, S, E, W order.
    Canonical,
    /// Action order shuffled at every expansion.
    Shuffled(&'a mut dyn RngCore),
}

impl TieBreak<'_> {
    fn order(&mut self) -> [Action; 4] {
        let mut acts = Action::ALL;
        if let TieBreak::Shuffled(rng) = self {
            acts.shuffle(rng);
        }
        acts
    }
}

struct Node {
    pos: Cell,
    state: MonitorState,
    parent: usize,
    action: Option<Action>,
}

/// A minimum-length trace of at most `max_len` positions that starts with
/// the actions in `prefix` and satisfies `phi`, or `None`.
pub fn plan_with_prefix(
    world: &GridWorld,
    phi: &Formula,
    prefix: &[Action],
    max_len: usize,
    mut tie: TieBreak<'_>,
) -> Result<Option<Trace>, PlanError> {
    if max_len == 0 {
        return Err(PlanError::ZeroLength);
    }
    if max_len > world.max_len() {
        return Err(PlanError::TooLong { max_len, limit: world.max_len() });
    }
    let monitor = Monitor::new(phi, &world.alphabet())?;
    let label = |pos: Cell| world.label(pos).expect("planner stays in bounds");

    let mut pos = world.start();
    let mut state = monitor.init(label(pos));
    for &a in prefix {
        pos = world.step_deterministic(pos, a);
        state = monitor.step(&state, label(pos)).expect("state built by this monitor");
    }
    let base_len = prefix.len() + 1;
    if base_len > max_len {
        return Ok(None);
    }

    let finish = |nodes: &[Node], mut i: usize| {
        let mut tail = Vec::new();
        while let Some(a) = nodes[i].action {
            tail.push(a);
            i = nodes[i].parent;
        }
        let mut actions = prefix.to_vec();
        actions.extend(tail.into_iter().rev());
        world.replay(&actions)
    };

    let mut nodes = alloc::vec![Node { pos, state, parent: 0, action: None }];
    if nodes[0].state.verdict() {
        return Ok(Some(finish(&nodes, 0)));
    }
    let mut visited = BTreeSet::new();
    visited.insert((pos, monitor.memory_key(&nodes[0].state)));
    let mut queue = VecDeque::from([(0usize, base_len)]);
    while let Some((i, len)) = queue.pop_front() {
        if len == max_len {
            continue;
        }
        for a in tie.order() {
            let next = world.step_deterministic(nodes[i].pos, a);
            let state = monitor.step(&nodes[i].state, label(next)).expect("state built by this monitor");
            let done = state.verdict();
            let key = (next, monitor.memory_key(&state));
            if !done && !visited.insert(key) {
                continue;
            }
            nodes.push(Node { pos: next, state, parent: i, action: Some(a) });
            let j = nodes.len() - 1;
            if done {
                return Ok(Some(finish(&nodes, j)));
            }
            queue.push_back((j, len + 1));
        }
    }
    Ok(None)
}

/// A minimum-length trace from the start cell satisfying `phi` within
/// `max_len` positions.
pub fn plan_satisfying_trace(
    world: &GridWorld,
    phi: &Formula,
    max_len: usize,
    tie: TieBreak<'_>,
) -> Result<Option<Trace>, PlanError> {
    plan_with_prefix(world, phi, &[], max_len, tie)
}

/// A minimum-length trace satisfying exactly one of `a` and `b`.
pub fn plan_distinguishing_trace(
    world: &GridWorld,
    a: &Formula,
    b: &Formula,
    max_len: usize,
    tie: TieBreak<'_>,
) -> Result<Option<Trace>, PlanError> {
    let xor =
        Formula::or(Formula::and(a.clone(), Formula::not(b.clone())), Formula::and(Formula::not(a.clone()), b.clone()));
    plan_satisfying_trace(world, &xor, max_len, tie)
}

/// A minimum-length trace satisfying `keep` and violating `reject`.
pub fn plan_separating_trace(
    world: &GridWorld,
    keep: &Formula,
    reject: &Formula,
    max_len: usize,
    tie: TieBreak<'_>,
) -> Result<Option<Trace>, PlanError> {
    let goal = Formula::and(keep.clone(), Formula::not(reject.clone()));
    plan_satisfying_trace(world, &goal, max_len, tie)
}

/// How [`sample_demonstrations`] draws each demonstration: a random walk
/// of `prefix` steps on the deterministic kernel, finished by a shortest
/// plan for the goal.
#[derive(Clone, Debug, PartialEq)]
pub struct DemoRecipe {
    pub count: usize,
    pub prefix: RangeInclusive<usize>,
    /// Keep only demonstrations of exactly this many positions.
    pub exact_len: Option<usize>,
    pub max_attempts: usize,
}

impl DemoRecipe {
    pub fn new(count: usize, prefix: RangeInclusive<usize>) -> Self {
        DemoRecipe { count, prefix, exact_len: None, max_attempts: 100 * count.max(1) }
    }
}

/// Demonstrations of `phi`, each a random prefix completed by a shortest
/// plan. Prefixes that cannot be completed within the episode bound are
/// redrawn.
pub fn sample_demonstrations<R: Rng>(
    world: &GridWorld,
    phi: &Formula,
    recipe: &DemoRecipe,
    rng: &mut R,
) -> Result<Vec<Trace>, PlanError> {
    let mut out = Vec::with_capacity(recipe.count);
    let mut attempts = 0;
    while out.len() < recipe.count {
        if attempts == recipe.max_attempts {
            return Err(PlanError::Exhausted { found: out.len(), wanted: recipe.count, attempts });
        }
        attempts += 1;
        let steps = rng.gen_range(recipe.prefix.clone());
        let prefix: Vec<Action> = (0..steps).map(|_| Action::ALL[rng.gen_range(0..4)]).collect();
        let Some(t) = plan_with_prefix(world, phi, &prefix, world.max_len(), TieBreak::Shuffled(rng))? else {
            continue;
        };
        if recipe.exact_len.is_some_and(|n| n != t.len()) {
            continue;
        }
        out.push(t);
    }
    Ok(out)
}
