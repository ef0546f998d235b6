//! Two-agent intent transfer.
//!
//! Alice infers an intent from the demonstrations she holds. While other
//! candidates score close to her best guess she demonstrates her strongest
//! rival; Bob, who knows the true intent and runs the same inference, reads
//! her hypothesis off those probes and answers with clarifying
//! demonstrations, which Alice adds to her set.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::concepts::{probe_pool, ConceptClass, ConceptError};
use crate::gridworld::{GridWorld, Trace};
use crate::inference::{divergence, rank_specs, InferenceError, Ranking, RolloutPool, SpecScore};
use crate::planner::{plan_satisfying_trace, plan_separating_trace, PlanError, TieBreak};
use crate::pltl::{EvalError, Formula, Program};
use crate::rng::{stream, StreamRng};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TransferError {
    #[error("divergence threshold must be positive")]
    BadThreshold,
    #[error("at least one round is required")]
    NoRounds,
    #[error("at least one demonstration per round is required")]
    NoProbes,
    #[error("no candidate rivals to probe")]
    NoRivals,
    #[error("rivals unrealizable")]
    RivalsUnrealizable,
    #[error("true specification cannot be demonstrated within {0} steps")]
    Unrealizable(usize),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Concepts(#[from] ConceptError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Where Bob's clarifying demonstrations come from.
#[derive(Clone, Debug, PartialEq)]
pub enum BobMode {
    /// Planned to satisfy the true intent and violate Alice's hypothesis.
    Planned,
    /// Replayed from a demonstration corpus, preferring traces that violate
    /// Alice's hypothesis. Planning takes over once the corpus runs out.
    Corpus(Vec<Trace>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferConfig {
    /// Rivals closer than this (in nats) to the top candidate are ambiguous.
    pub tau: f64,
    pub max_rounds: usize,
    /// Demonstrations per probe and per answer.
    pub k: usize,
    pub n_rollouts: usize,
    pub seed: u64,
    /// Length bound for planned demonstrations.
    pub plan_len: usize,
    pub bob_mode: BobMode,
    /// Probe traces deciding whether two formulas express the same intent.
    pub equivalence_probes: usize,
}

impl TransferConfig {
    pub fn new(seed: u64, plan_len: usize) -> Self {
        TransferConfig {
            tau: 0.5,
            max_rounds: 5,
            k: 3,
            n_rollouts: 10_000,
            seed,
            plan_len,
            bob_mode: BobMode::Planned,
            equivalence_probes: 10_000,
        }
    }

    fn validate(&self) -> Result<(), TransferError> {
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(TransferError::BadThreshold);
        }
        if self.max_rounds == 0 {
            return Err(TransferError::NoRounds);
        }
        if self.k == 0 {
            return Err(TransferError::NoProbes);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Alice,
    Bob,
}

/// What one agent knows. Both agents share world, class and scoring setup.
#[derive(Clone, Debug)]
pub struct AgentState {
    pub role: Role,
    pub world: GridWorld,
    pub class: ConceptClass,
    pub demos: Vec<Trace>,
    /// Known to Bob only.
    pub true_spec: Option<Formula>,
    pub ranking: Option<Ranking>,
}

impl AgentState {
    pub fn alice(world: GridWorld, class: ConceptClass, demos: Vec<Trace>) -> Self {
        AgentState { role: Role::Alice, world, class, demos, true_spec: None, ranking: None }
    }

    pub fn bob(world: GridWorld, class: ConceptClass, true_spec: Formula) -> Self {
        AgentState { role: Role::Bob, world, class, demos: Vec::new(), true_spec: Some(true_spec), ranking: None }
    }

    /// Ranks `demos` with the shared scoring setup. The rollout stream is
    /// reseeded on every call so both agents get identical rankings from
    /// identical inputs.
    pub fn infer(&self, demos: &[Trace], cfg: &TransferConfig) -> Result<Ranking, TransferError> {
        let mut rng = stream(cfg.seed, "rollouts");
        Ok(rank_specs(&self.class, demos, &self.world, cfg.n_rollouts, &mut rng)?)
    }
}

/// A candidate together with its gap to the top of the ranking.
#[derive(Clone, Debug, PartialEq)]
pub struct Rival {
    pub score: SpecScore,
    pub divergence: f64,
}

/// Finite-score candidates other than the top whose divergence from it is
/// below `tau`, best first.
pub fn find_ambiguous_rivals(ranking: &Ranking, tau: f64) -> Vec<Rival> {
    let Some(top) = ranking.top() else {
        return Vec::new();
    };
    ranking.scores()[1..]
        .iter()
        .filter(|s| s.is_finite())
        .filter_map(|s| {
            let d = divergence(top, s).ok()?;
            (d < tau).then(|| Rival { score: s.clone(), divergence: d })
        })
        .collect()
}

/// `k` demonstrations of the best realizable rival, with the rival used.
pub fn probe_round(
    alice: &AgentState,
    rivals: &[Rival],
    cfg: &TransferConfig,
    rng: &mut StreamRng,
) -> Result<(Formula, Vec<Trace>), TransferError> {
    if rivals.is_empty() {
        return Err(TransferError::NoRivals);
    }
    for rival in rivals {
        let phi = &rival.score.formula;
        let mut probes = Vec::with_capacity(cfg.k);
        for _ in 0..cfg.k {
            match plan_satisfying_trace(&alice.world, phi, cfg.plan_len, TieBreak::Shuffled(rng))? {
                Some(t) => probes.push(t),
                None => break,
            }
        }
        if !probes.is_empty() {
            return Ok((phi.clone(), probes));
        }
    }
    Err(TransferError::RivalsUnrealizable)
}

/// Bob's answer to a set of probes: his reading of Alice's hypothesis and
/// `k` demonstrations of the true intent.
pub fn bob_respond(
    bob: &mut AgentState,
    probes: &[Trace],
    cfg: &TransferConfig,
    rng: &mut StreamRng,
) -> Result<(Formula, Vec<Trace>), TransferError> {
    if probes.is_empty() {
        return Err(TransferError::NoProbes);
    }
    let truth = bob.true_spec.clone().expect("Bob knows the true intent");
    let ranking = bob.infer(probes, cfg)?;
    let hypothesis = ranking.top().expect("class is nonempty").formula.clone();
    bob.ranking = Some(ranking);

    let alphabet = bob.world.alphabet();
    let true_prog = Program::compile(&truth, &alphabet)?;
    let hyp_prog = Program::compile(&hypothesis, &alphabet)?;
    let mut out = Vec::with_capacity(cfg.k);

    if let BobMode::Corpus(corpus) = &cfg.bob_mode {
        let mut separating = Vec::new();
        let mut agreeing = Vec::new();
        for t in corpus {
            if bob.demos.contains(t) || !true_prog.holds(&t.observations())? {
                continue;
            }
            if hyp_prog.holds(&t.observations())? {
                agreeing.push(t);
            } else {
                separating.push(t);
            }
        }
        out.extend(separating.into_iter().chain(agreeing).take(cfg.k).cloned());
    }
    while out.len() < cfg.k {
        let planned =
            match plan_separating_trace(&bob.world, &truth, &hypothesis, cfg.plan_len, TieBreak::Shuffled(rng))? {
                Some(t) => Some(t),
                None => plan_satisfying_trace(&bob.world, &truth, cfg.plan_len, TieBreak::Shuffled(rng))?,
            };
        match planned {
            Some(t) => out.push(t),
            None => return Err(TransferError::Unrealizable(cfg.plan_len)),
        }
    }
    bob.demos.extend(out.iter().cloned());
    Ok((hypothesis, out))
}

/// Summary of a scored formula for the transcript.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredFormula {
    pub formula: String,
    pub kl_term: f64,
    pub log_posterior: f64,
}

impl From<&SpecScore> for ScoredFormula {
    fn from(s: &SpecScore) -> Self {
        ScoredFormula { formula: s.formula.to_string(), kl_term: s.kl_term, log_posterior: s.log_posterior }
    }
}

/// Alice's view at one inference step.
#[derive(Clone, Debug, PartialEq)]
pub struct Assessment {
    pub n_demos: usize,
    pub top: ScoredFormula,
    /// Whether the top candidate expresses the true intent on the probes.
    pub top_matches_truth: bool,
    pub rivals: Vec<(ScoredFormula, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub assessment: Assessment,
    pub probed_rival: Option<String>,
    pub probes: Vec<Trace>,
    pub bob_hypothesis: Option<String>,
    pub clarifications: Vec<Trace>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransferStatus {
    Converged,
    Exhausted,
}

impl TransferStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TransferStatus::Converged => "converged",
            TransferStatus::Exhausted => "exhausted",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferTranscript {
    pub true_spec: String,
    pub tau: f64,
    pub rounds: Vec<RoundRecord>,
    /// Assessment after the last round.
    pub last: Assessment,
    pub status: TransferStatus,
}

struct Judge {
    pool: RolloutPool,
    truth: Vec<u64>,
}

impl Judge {
    fn signature(&self, phi: &Formula) -> Result<Vec<u64>, TransferError> {
        Ok(self.pool.signature(&Program::compile(phi, self.pool.alphabet())?))
    }
}

fn assess(ranking: &Ranking, tau: f64, judge: &Judge) -> Result<(Assessment, Vec<Rival>), TransferError> {
    let top = ranking.top().expect("class is nonempty");
    let top_sig = judge.signature(&top.formula)?;
    // Candidates that agree with the top on every probe state the same
    // intent and do not count as rivals.
    let mut rivals = Vec::new();
    for r in find_ambiguous_rivals(ranking, tau) {
        if judge.signature(&r.score.formula)? != top_sig {
            rivals.push(r);
        }
    }
    let assessment = Assessment {
        n_demos: top.stats.n_demos,
        top: top.into(),
        top_matches_truth: top_sig == judge.truth,
        rivals: rivals.iter().map(|r| ((&r.score).into(), r.divergence)).collect(),
    };
    Ok((assessment, rivals))
}

/// Runs the protocol until Alice's top candidate matches the true intent
/// with no ambiguous rivals left, or `cfg.max_rounds` rounds pass.
pub fn run_transfer_protocol(
    world: &GridWorld,
    true_spec: &Formula,
    initial_demos: Vec<Trace>,
    class: &ConceptClass,
    cfg: &TransferConfig,
) -> Result<TransferTranscript, TransferError> {
    cfg.validate()?;
    if plan_satisfying_trace(world, true_spec, cfg.plan_len, TieBreak::Canonical)?.is_none() {
        return Err(TransferError::Unrealizable(cfg.plan_len));
    }
    let pool = probe_pool(world, cfg.equivalence_probes, &mut stream(cfg.seed, "equivalence"))?;
    let truth = pool.signature(&Program::compile(true_spec, pool.alphabet())?);
    let judge = Judge { pool, truth };

    let mut alice = AgentState::alice(world.clone(), class.clone(), initial_demos);
    let mut bob = AgentState::bob(world.clone(), class.clone(), true_spec.clone());
    bob.demos = alice.demos.clone();
    let mut alice_rng = stream(cfg.seed, "alice");
    let mut bob_rng = stream(cfg.seed, "bob");
    let mut rounds = Vec::new();

    loop {
        let ranking = alice.infer(&alice.demos, cfg)?;
        let (assessment, rivals) = assess(&ranking, cfg.tau, &judge)?;
        alice.ranking = Some(ranking);
        let converged = assessment.top_matches_truth && rivals.is_empty();
        if converged || rounds.len() == cfg.max_rounds {
            let status = if converged { TransferStatus::Converged } else { TransferStatus::Exhausted };
            return Ok(TransferTranscript {
                true_spec: true_spec.to_string(),
                tau: cfg.tau,
                rounds,
                last: assessment,
                status,
            });
        }

        let mut record = RoundRecord {
            round: rounds.len() + 1,
            assessment,
            probed_rival: None,
            probes: Vec::new(),
            bob_hypothesis: None,
            clarifications: Vec::new(),
            error: None,
        };
        // With no rival left but the wrong top, Alice shows her top guess.
        let targets = if rivals.is_empty() {
            let top = alice.ranking.as_ref().and_then(Ranking::top).expect("class is nonempty");
            alloc::vec![Rival { score: top.clone(), divergence: 0.0 }]
        } else {
            rivals
        };
        match probe_round(&alice, &targets, cfg, &mut alice_rng) {
            Ok((rival, probes)) => {
                record.probed_rival = Some(rival.to_string());
                let (hypothesis, clarifications) = bob_respond(&mut bob, &probes, cfg, &mut bob_rng)?;
                record.probes = probes;
                record.bob_hypothesis = Some(hypothesis.to_string());
                alice.demos.extend(clarifications.iter().cloned());
                record.clarifications = clarifications;
                rounds.push(record);
            }
            Err(e @ (TransferError::RivalsUnrealizable | TransferError::NoRivals)) => {
                record.error = Some(e.to_string());
                rounds.push(record);
                let last = rounds.last().expect("just pushed").assessment.clone();
                return Ok(TransferTranscript {
                    true_spec: true_spec.to_string(),
                    tau: cfg.tau,
                    rounds,
                    last,
                    status: TransferStatus::Exhausted,
                });
            }
            Err(e) => return Err(e),
        }
    }
}
