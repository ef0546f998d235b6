//! Ranking tables and transfer transcripts.

use intent_core::transfer::{Assessment, RoundRecord, ScoredFormula, TransferTranscript};
use intent_core::{Alphabet, Ranking, Trace};
use serde::Serialize;

/// Shortest text that parses back to the same `f64`; `-inf` for a ruled-out
/// candidate.
fn num(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x}")
    }
}

pub const RANKING_HEADER: &str = "formula\tphi_bar\tphi_hat\tkl_term\tlog_posterior";

/// Tab-separated ranking, best first.
pub fn ranking_tsv(ranking: &Ranking) -> String {
    let mut out = String::from(RANKING_HEADER);
    out.push('\n');
    for s in ranking.scores() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            s.formula,
            num(s.stats.phi_bar),
            num(s.stats.phi_hat),
            num(s.kl_term),
            num(s.log_posterior)
        ));
    }
    out
}

#[derive(Serialize)]
struct JsonStep {
    pos: [u32; 2],
    props: Vec<String>,
    action: Option<char>,
}

#[derive(Serialize)]
struct JsonScored {
    formula: String,
    kl_term: f64,
    /// `null` when ruled out.
    log_posterior: Option<f64>,
}

#[derive(Serialize)]
struct JsonRival {
    #[serde(flatten)]
    score: JsonScored,
    divergence: f64,
}

#[derive(Serialize)]
struct JsonAssessment {
    n_demos: usize,
    top: JsonScored,
    top_matches_truth: bool,
    rivals: Vec<JsonRival>,
}

#[derive(Serialize)]
struct JsonRound {
    round: usize,
    assessment: JsonAssessment,
    probed_rival: Option<String>,
    probes: Vec<Vec<JsonStep>>,
    bob_hypothesis: Option<String>,
    clarifications: Vec<Vec<JsonStep>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct JsonTranscript {
    true_spec: String,
    tau: f64,
    status: &'static str,
    rounds: Vec<JsonRound>,
    last: JsonAssessment,
}

fn scored(s: &ScoredFormula) -> JsonScored {
    JsonScored {
        formula: s.formula.clone(),
        kl_term: s.kl_term,
        log_posterior: s.log_posterior.is_finite().then_some(s.log_posterior),
    }
}

fn assessment(a: &Assessment) -> JsonAssessment {
    JsonAssessment {
        n_demos: a.n_demos,
        top: scored(&a.top),
        top_matches_truth: a.top_matches_truth,
        rivals: a.rivals.iter().map(|(s, d)| JsonRival { score: scored(s), divergence: *d }).collect(),
    }
}

fn trace(t: &Trace, alphabet: &Alphabet) -> Vec<JsonStep> {
    t.steps()
        .iter()
        .map(|s| JsonStep {
            pos: [s.pos.x, s.pos.y],
            props: alphabet.props_of(s.obs).into_iter().map(String::from).collect(),
            action: s.action.map(|a| a.letter()),
        })
        .collect()
}

fn round(r: &RoundRecord, alphabet: &Alphabet) -> JsonRound {
    JsonRound {
        round: r.round,
        assessment: assessment(&r.assessment),
        probed_rival: r.probed_rival.clone(),
        probes: r.probes.iter().map(|t| trace(t, alphabet)).collect(),
        bob_hypothesis: r.bob_hypothesis.clone(),
        clarifications: r.clarifications.iter().map(|t| trace(t, alphabet)).collect(),
        error: r.error.clone(),
    }
}

pub fn transcript_json(t: &TransferTranscript, alphabet: &Alphabet) -> String {
    let doc = JsonTranscript {
        true_spec: t.true_spec.clone(),
        tau: t.tau,
        status: t.status.as_str(),
        rounds: t.rounds.iter().map(|r| round(r, alphabet)).collect(),
        last: assessment(&t.last),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("transcript serializes");
    s.push('\n');
    s
}

/// Human-readable lines summarizing a transcript.
pub fn transcript_summary(t: &TransferTranscript) -> String {
    let mut out = String::new();
    for r in &t.rounds {
        out.push_str(&format!(
            "round {}: top `{}` ({} rivals), probed `{}`, Bob read `{}`, {} clarifications\n",
            r.round,
            r.assessment.top.formula,
            r.assessment.rivals.len(),
            r.probed_rival.as_deref().unwrap_or("-"),
            r.bob_hypothesis.as_deref().unwrap_or("-"),
            r.clarifications.len(),
        ));
        if let Some(e) = &r.error {
            out.push_str(&format!("round {}: {e}\n", r.round));
        }
    }
    out.push_str(&format!(
        "final: top `{}` matches truth: {}, {} rivals within {} nats, {} demonstrations\n",
        t.last.top.formula,
        t.last.top_matches_truth,
        t.last.rivals.len(),
        t.tau,
        t.last.n_demos
    ));
    out.push_str(&format!("status: {}\n", t.status.as_str()));
    out
}
