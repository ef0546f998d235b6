//! Independent oracles shared by the integration and acceptance tests.
//! Nothing here calls the evaluator, monitor or planner under test.

#![allow(dead_code)]

use intent_core::gridworld::Color;
use intent_core::{Action, Alphabet, Cell, Formula, GridWorld, Observation};
use rand::Rng;

/// Truth of `f` at position `i`, straight from the semantics.
pub fn holds_at(f: &Formula, alphabet: &Alphabet, word: &[Observation], i: usize) -> bool {
    let at = |g: &Formula, j: usize| holds_at(g, alphabet, word, j);
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => word[i].contains(alphabet.index_of(a).expect("atom in alphabet")),
        Formula::Not(g) => !at(g, i),
        Formula::And(g, h) => at(g, i) && at(h, i),
        Formula::Or(g, h) => at(g, i) || at(h, i),
        Formula::Implies(g, h) => !at(g, i) || at(h, i),
        Formula::Historically(g) => (0..=i).all(|j| at(g, j)),
        Formula::Once(g) => (0..=i).any(|j| at(g, j)),
        Formula::Since(g, h) => (0..=i).any(|j| at(h, j) && (j + 1..=i).all(|k| at(g, k))),
        Formula::Yesterday(g) => i > 0 && at(g, i - 1),
    }
}

/// Judgment at the final position.
pub fn holds(f: &Formula, alphabet: &Alphabet, word: &[Observation]) -> bool {
    !word.is_empty() && holds_at(f, alphabet, word, word.len() - 1)
}

pub fn node_count(f: &Formula) -> usize {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => 1,
        Formula::Not(g) | Formula::Historically(g) | Formula::Once(g) | Formula::Yesterday(g) => 1 + node_count(g),
        Formula::And(g, h) | Formula::Or(g, h) | Formula::Implies(g, h) | Formula::Since(g, h) => {
            1 + node_count(g) + node_count(h)
        }
    }
}

/// A random formula of at most `budget` nodes over `atoms`, using every
/// operator.
pub fn random_formula<R: Rng>(rng: &mut R, atoms: &[&str], budget: usize) -> Formula {
    if budget < 2 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::atom(atoms[rng.gen_range(0..atoms.len())]),
        };
    }
    if budget < 3 || rng.gen_bool(0.4) {
        let g = random_formula(rng, atoms, budget - 1);
        return match rng.gen_range(0..4) {
            0 => Formula::not(g),
            1 => Formula::historically(g),
            2 => Formula::once(g),
            _ => Formula::yesterday(g),
        };
    }
    let left = rng.gen_range(1..=budget - 2);
    let g = random_formula(rng, atoms, left);
    let h = random_formula(rng, atoms, budget - 1 - node_count(&g));
    match rng.gen_range(0..4) {
        0 => Formula::and(g, h),
        1 => Formula::or(g, h),
        2 => Formula::implies(g, h),
        _ => Formula::since(g, h),
    }
}

/// A random word whose positions carry any subset of the alphabet.
pub fn random_word<R: Rng>(rng: &mut R, n_atoms: usize, len: usize) -> Vec<Observation> {
    (0..len).map(|_| Observation::from_bits(rng.gen_range(0..1u32 << n_atoms))).collect()
}

/// Distribution over next cells under the perpendicular slip law.
fn successors(world: &GridWorld, pos: Cell, act: Action) -> Vec<(Cell, f64)> {
    let p = world.slip();
    let mut out = vec![(world.step_deterministic(pos, act), 1.0 - p)];
    if p > 0.0 {
        for side in act.perpendicular() {
            out.push((world.step_deterministic(pos, side), p / 2.0));
        }
    }
    out
}

/// Exact probability that a uniformly random rollout of `len` positions
/// visits `color`: the average over all `4^len` action sequences, each
/// weighted by every slip outcome.
pub fn exact_visit_probability(world: &GridWorld, color: Color, len: usize) -> f64 {
    fn walk(world: &GridWorld, color: Color, pos: Cell, seen: bool, left: usize) -> f64 {
        let seen = seen || world.color(pos).unwrap() == color;
        if left == 0 {
            // The last action moves nothing, so all four agree.
            return if seen { 1.0 } else { 0.0 };
        }
        let mut total = 0.0;
        for act in Action::ALL {
            for (next, p) in successors(world, pos, act) {
                total += p * walk(world, color, next, seen, left - 1);
            }
        }
        total / 4.0
    }
    walk(world, color, world.start(), false, len - 1)
}

/// Every action sequence of exactly `n` actions.
pub fn action_sequences(n: usize) -> impl Iterator<Item = Vec<Action>> {
    (0..4usize.pow(n as u32)).map(move |mut code| {
        (0..n)
            .map(|_| {
                let a = Action::ALL[code % 4];
                code /= 4;
                a
            })
            .collect()
    })
}

/// Length of the shortest deterministic trace satisfying `f`, by trying
/// every action sequence in order of length.
pub fn shortest_by_enumeration(world: &GridWorld, f: &Formula, max_len: usize) -> Option<usize> {
    let alphabet = world.alphabet();
    for n in 0..max_len {
        for acts in action_sequences(n) {
            let word = world.replay(&acts).observations();
            if holds(f, &alphabet, &word) {
                return Some(n + 1);
            }
        }
    }
    None
}
