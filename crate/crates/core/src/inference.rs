//! Maximum-entropy posterior scoring of candidate specifications.

use alloc::vec::Vec;

use rand::Rng;

use crate::concepts::ConceptClass;
use crate::gridworld::{GridWorld, Trace, WorldError};
use crate::pltl::{Alphabet, EvalError, Formula, Observation, Program};
use crate::rng::fnv1a;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum InferenceError {
    #[error("no demonstrations")]
    NoDemos,
    #[error("no demonstration lengths to sample rollouts from")]
    NoLengths,
    #[error("rollout budget must be at least 1")]
    NoRollouts,
    #[error("concept class is empty")]
    EmptyClass,
    #[error("scores were computed from different demonstration sets")]
    FingerprintMismatch,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Satisfaction rates of one formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SatStats {
    /// Fraction of demonstrations satisfying the formula.
    pub phi_bar: f64,
    /// Fraction of random rollouts satisfying the formula.
    pub phi_hat: f64,
    pub n_demos: usize,
    pub n_rollouts: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpecScore {
    pub formula: Formula,
    pub stats: SatStats,
    pub kl_term: f64,
    /// Unnormalized log posterior; `-inf` when the demonstrations do worse
    /// than chance.
    pub log_posterior: f64,
    /// Position of the formula in its concept class.
    pub index: usize,
    /// Fingerprint of the demonstrations the score was computed from.
    pub fingerprint: u64,
}

impl SpecScore {
    pub fn is_finite(&self) -> bool {
        self.log_posterior.is_finite()
    }
}

/// Scores sorted best first: by log posterior, then smaller formulas, then
/// class order.
#[derive(Clone, Debug, PartialEq)]
pub struct Ranking {
    scores: Vec<SpecScore>,
    fingerprint: u64,
}

impl Ranking {
    pub fn from_scores(mut scores: Vec<SpecScore>, fingerprint: u64) -> Self {
        scores.sort_by(|a, b| {
            b.log_posterior
                .total_cmp(&a.log_posterior)
                .then(a.formula.size().cmp(&b.formula.size()))
                .then(a.index.cmp(&b.index))
        });
        Ranking { scores, fingerprint }
    }

    pub fn scores(&self) -> &[SpecScore] {
        &self.scores
    }

    pub fn top(&self) -> Option<&SpecScore> {
        self.scores.first()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Score of a structurally equal formula, if ranked.
    pub fn find(&self, phi: &Formula) -> Option<&SpecScore> {
        self.scores.iter().find(|s| &s.formula == phi)
    }
}

/// `KL(B(p) ‖ B(q))` in nats, with `0 · ln 0 = 0`.
pub fn kl_bernoulli(p: f64, q: f64) -> f64 {
    fn term(a: f64, b: f64) -> f64 {
        if a <= 0.0 {
            0.0
        } else {
            a * libm::log(a / b)
        }
    }
    let kl = term(p, q) + term(1.0 - p, 1.0 - q);
    // Rounding can leave a tiny negative residue when p == q.
    kl.max(0.0)
}

/// Clamps a Monte Carlo rate into `[1/(2n), 1 - 1/(2n)]`.
pub fn clamp_rate(q: f64, n: usize) -> f64 {
    let eps = 0.5 / n.max(1) as f64;
    q.clamp(eps, 1.0 - eps)
}

/// `(kl_term, log_posterior)` for the given rates.
pub fn posterior_score(stats: &SatStats) -> (f64, f64) {
    let kl = kl_bernoulli(stats.phi_bar, clamp_rate(stats.phi_hat, stats.n_rollouts));
    let log_post = if stats.phi_bar >= stats.phi_hat { stats.n_demos as f64 * kl } else { f64::NEG_INFINITY };
    (kl, log_post)
}

/// Fraction of `demos` satisfying `phi`.
pub fn empirical_satisfaction(phi: &Formula, alphabet: &Alphabet, demos: &[Trace]) -> Result<f64, InferenceError> {
    if demos.is_empty() {
        return Err(InferenceError::NoDemos);
    }
    let program = Program::compile(phi, alphabet)?;
    let mut hits = 0usize;
    for d in demos {
        if program.holds(&d.observations())? {
            hits += 1;
        }
    }
    Ok(hits as f64 / demos.len() as f64)
}

/// Monte Carlo estimate of how often random behaviour satisfies `phi`.
pub fn random_satisfaction<R: Rng + ?Sized>(
    phi: &Formula,
    world: &GridWorld,
    demo_lengths: &[usize],
    n_rollouts: usize,
    rng: &mut R,
) -> Result<f64, InferenceError> {
    let pool = RolloutPool::sample(world, demo_lengths, n_rollouts, rng)?;
    let program = Program::compile(phi, &pool.alphabet)?;
    Ok(pool.satisfaction(&program))
}

/// Random rollouts kept as per-atom position masks so every candidate can
/// be scored against the same sample cheaply.
#[derive(Clone, Debug)]
pub struct RolloutPool {
    alphabet: Alphabet,
    /// `alphabet.len()` masks per short rollout.
    masks: Vec<u64>,
    lens: Vec<u8>,
    /// Rollouts longer than 64 steps.
    long: Vec<Vec<Observation>>,
}

impl RolloutPool {
    /// Draws `n` rollouts, each with a length picked uniformly from
    /// `lengths`.
    pub fn sample<R: Rng + ?Sized>(
        world: &GridWorld,
        lengths: &[usize],
        n: usize,
        rng: &mut R,
    ) -> Result<Self, InferenceError> {
        if lengths.is_empty() {
            return Err(InferenceError::NoLengths);
        }
        if n == 0 {
            return Err(InferenceError::NoRollouts);
        }
        let mut words = Vec::with_capacity(n);
        for _ in 0..n {
            let len = lengths[rng.gen_range(0..lengths.len())];
            words.push(world.rollout_random(len, rng)?.observations());
        }
        Ok(Self::from_words(world.alphabet(), words))
    }

    /// Builds a pool from explicit observation words.
    pub fn from_words(alphabet: Alphabet, words: Vec<Vec<Observation>>) -> Self {
        let stride = alphabet.len();
        let mut pool = RolloutPool { alphabet, masks: Vec::new(), lens: Vec::new(), long: Vec::new() };
        for w in words {
            debug_assert!(!w.is_empty());
            if w.len() > 64 {
                pool.long.push(w);
                continue;
            }
            let base = pool.masks.len();
            pool.masks.resize(base + stride, 0);
            for (i, obs) in w.iter().enumerate() {
                for a in 0..stride {
                    if obs.contains(a) {
                        pool.masks[base + a] |= 1 << i;
                    }
                }
            }
            pool.lens.push(w.len() as u8);
        }
        pool
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.lens.len() + self.long.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn for_each_verdict(&self, program: &Program, mut f: impl FnMut(usize, bool)) {
        let stride = self.alphabet.len();
        let mut scratch = Vec::with_capacity(program.len());
        for (i, &len) in self.lens.iter().enumerate() {
            let masks = &self.masks[i * stride..(i + 1) * stride];
            f(i, program.holds_masks(masks, len as usize, &mut scratch));
        }
        for (j, w) in self.long.iter().enumerate() {
            f(self.lens.len() + j, program.holds(w).unwrap_or(false));
        }
    }

    /// Fraction of rollouts satisfying the compiled formula.
    pub fn satisfaction(&self, program: &Program) -> f64 {
        let mut hits = 0usize;
        self.for_each_verdict(program, |_, v| hits += usize::from(v));
        hits as f64 / self.len() as f64
    }

    /// Verdict bitset over the pool. Formulas with equal signatures are
    /// indistinguishable on this sample.
    pub fn signature(&self, program: &Program) -> Vec<u64> {
        let mut sig = alloc::vec![0u64; self.len().div_ceil(64)];
        self.for_each_verdict(program, |i, v| {
            if v {
                sig[i / 64] |= 1 << (i % 64);
            }
        });
        sig
    }
}

/// Order-sensitive hash of a demonstration set.
pub fn demo_fingerprint(demos: &[Trace]) -> u64 {
    let mut h = fnv1a(demos.len().to_le_bytes(), 0);
    for d in demos {
        h = fnv1a(d.len().to_le_bytes(), h);
        for s in d.steps() {
            let action = s.action.map_or(0u8, |a| a.letter() as u8);
            let bytes = s
                .pos
                .x
                .to_le_bytes()
                .into_iter()
                .chain(s.pos.y.to_le_bytes())
                .chain(s.obs.bits().to_le_bytes())
                .chain([action]);
            h = fnv1a(bytes, h);
        }
    }
    h
}

fn score_one(
    index: usize,
    phi: &Formula,
    demos: &[Vec<Observation>],
    pool: &RolloutPool,
    fingerprint: u64,
) -> Result<SpecScore, InferenceError> {
    let program = Program::compile(phi, pool.alphabet())?;
    let mut hits = 0usize;
    for d in demos {
        hits += usize::from(program.holds(d)?);
    }
    let stats = SatStats {
        phi_bar: hits as f64 / demos.len() as f64,
        phi_hat: pool.satisfaction(&program),
        n_demos: demos.len(),
        n_rollouts: pool.len(),
    };
    let (kl_term, log_posterior) = posterior_score(&stats);
    Ok(SpecScore { formula: phi.clone(), stats, kl_term, log_posterior, index, fingerprint })
}

/// Scores `formulas` against `demos` using a prepared rollout pool.
pub fn rank_with_pool(formulas: &[Formula], demos: &[Trace], pool: &RolloutPool) -> Result<Ranking, InferenceError> {
    if formulas.is_empty() {
        return Err(InferenceError::EmptyClass);
    }
    if demos.is_empty() {
        return Err(InferenceError::NoDemos);
    }
    let fingerprint = demo_fingerprint(demos);
    let words: Vec<Vec<Observation>> = demos.iter().map(Trace::observations).collect();
    #[cfg(feature = "parallel")]
    let scores: Result<Vec<SpecScore>, InferenceError> = {
        use rayon::prelude::*;
        formulas.par_iter().enumerate().map(|(i, phi)| score_one(i, phi, &words, pool, fingerprint)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let scores: Result<Vec<SpecScore>, InferenceError> =
        formulas.iter().enumerate().map(|(i, phi)| score_one(i, phi, &words, pool, fingerprint)).collect();
    Ok(Ranking::from_scores(scores?, fingerprint))
}

/// Scores every member of `class` and ranks them. Rollout lengths are drawn
/// from the demonstration lengths; one pool is shared by all candidates.
pub fn rank_specs<R: Rng + ?Sized>(
    class: &ConceptClass,
    demos: &[Trace],
    world: &GridWorld,
    n_rollouts: usize,
    rng: &mut R,
) -> Result<Ranking, InferenceError> {
    if class.is_empty() {
        return Err(InferenceError::EmptyClass);
    }
    if demos.is_empty() {
        return Err(InferenceError::NoDemos);
    }
    let lengths: Vec<usize> = demos.iter().map(Trace::len).collect();
    let pool = RolloutPool::sample(world, &lengths, n_rollouts, rng)?;
    rank_with_pool(class.formulas(), demos, &pool)
}

/// Difference of the two information-gain terms.
pub fn divergence(a: &SpecScore, b: &SpecScore) -> Result<f64, InferenceError> {
    if a.fingerprint != b.fingerprint {
        return Err(InferenceError::FingerprintMismatch);
    }
    Ok(a.kl_term - b.kl_term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pltl::parse_formula;
    use crate::rng::stream;

    const LN2: f64 = core::f64::consts::LN_2;

    fn stats(phi_bar: f64, phi_hat: f64, n_demos: usize) -> SatStats {
        SatStats { phi_bar, phi_hat, n_demos, n_rollouts: 10_000 }
    }

    #[test]
    fn kl_closed_forms() {
        assert_eq!(kl_bernoulli(0.3, 0.3), 0.0);
        assert!((kl_bernoulli(1.0, 0.5) - LN2).abs() < 1e-12);
        let ln9 = 9f64.ln();
        assert!((kl_bernoulli(0.9, 0.1) - 0.8 * ln9).abs() < 1e-12);
        assert!((kl_bernoulli(0.0, 0.5) - LN2).abs() < 1e-12);
    }

    #[test]
    fn posterior_examples() {
        assert_eq!(posterior_score(&stats(0.4, 0.4, 10)), (0.0, 0.0));
        let (_, lp) = posterior_score(&stats(1.0, 0.5, 10));
        assert!((lp - 10.0 * LN2).abs() < 1e-9);
        assert_eq!(posterior_score(&stats(0.2, 0.5, 10)).1, f64::NEG_INFINITY);
    }

    #[test]
    fn zero_rate_is_clamped() {
        let (kl, lp) = posterior_score(&stats(1.0, 0.0, 3));
        let expected = (2.0 * 10_000.0f64).ln();
        assert!((kl - expected).abs() < 1e-9);
        assert!((lp - 3.0 * expected).abs() < 1e-9);
    }

    fn corridor() -> GridWorld {
        GridWorld::parse("A.y\n...\nr..").unwrap()
    }

    #[test]
    fn tautology_and_contradiction_rates() {
        let w = corridor();
        let mut rng = stream(1, "t");
        let t = random_satisfaction(&Formula::True, &w, &[3, 5], 500, &mut rng).unwrap();
        assert_eq!(t, 1.0);
        let f = parse_formula("yellow & red").unwrap();
        assert_eq!(random_satisfaction(&f, &w, &[3, 5], 500, &mut rng).unwrap(), 0.0);
        assert_eq!(random_satisfaction(&f, &w, &[], 5, &mut rng), Err(InferenceError::NoLengths));
    }

    #[test]
    fn empirical_counts() {
        let w = corridor();
        use crate::gridworld::Action::*;
        let yes = w.replay(&[East, East]);
        let no = w.replay(&[South]);
        let phi = parse_formula("O yellow").unwrap();
        let a = w.alphabet();
        assert_eq!(empirical_satisfaction(&phi, &a, &[yes.clone(), no.clone(), yes.clone(), no]).unwrap(), 0.5);
        assert_eq!(empirical_satisfaction(&phi, &a, &[yes]).unwrap(), 1.0);
        assert_eq!(empirical_satisfaction(&phi, &a, &[]), Err(InferenceError::NoDemos));
    }

    #[test]
    fn divergence_requires_same_demos() {
        let mk = |kl: f64, fp: u64| SpecScore {
            formula: Formula::True,
            stats: stats(1.0, 0.5, 1),
            kl_term: kl,
            log_posterior: kl,
            index: 0,
            fingerprint: fp,
        };
        let a = mk(0.8 * 9f64.ln(), 1);
        let b = mk(LN2, 1);
        assert!((divergence(&a, &b).unwrap() - 1.06463).abs() < 1e-5);
        assert_eq!(divergence(&a, &a).unwrap(), 0.0);
        assert_eq!(divergence(&a, &b).unwrap(), -divergence(&b, &a).unwrap());
        assert_eq!(divergence(&a, &mk(LN2, 2)), Err(InferenceError::FingerprintMismatch));
    }

    #[test]
    fn ranking_order_breaks_ties_by_size_then_index() {
        let mk = |text: &str, lp: f64, index: usize| SpecScore {
            formula: parse_formula(text).unwrap(),
            stats: stats(1.0, 0.5, 1),
            kl_term: lp,
            log_posterior: lp,
            index,
            fingerprint: 0,
        };
        let r = Ranking::from_scores(
            alloc::vec![
                mk("O red", f64::NEG_INFINITY, 0),
                mk("H !red & O yellow", 2.0, 1),
                mk("O yellow", 2.0, 2),
                mk("O blue", 2.0, 3),
                mk("red", 3.0, 4),
            ],
            0,
        );
        let order: Vec<usize> = r.scores().iter().map(|s| s.index).collect();
        assert_eq!(order, [4, 2, 3, 1, 0]);
    }

    #[test]
    fn pool_handles_long_words() {
        let a = crate::gridworld::color_alphabet();
        let white = a.observation(&["white"]).unwrap();
        let red = a.observation(&["red"]).unwrap();
        let mut long = alloc::vec![white; 80];
        long[10] = red;
        let pool = RolloutPool::from_words(a.clone(), alloc::vec![long, alloc::vec![white, white]]);
        let p = Program::compile(&parse_formula("O red").unwrap(), &a).unwrap();
        assert_eq!(pool.satisfaction(&p), 0.5);
        assert_eq!(pool.signature(&p), [0b10]);
    }
}
