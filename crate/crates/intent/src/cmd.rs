//! Subcommand implementations. Each returns the text to print on success.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use intent_core::inference::rank_specs;
use intent_core::planner::{plan_satisfying_trace, TieBreak};
use intent_core::pltl::evaluate;
use intent_core::rng::stream;
use intent_core::transfer::run_transfer_protocol;
use intent_core::{parse_formula, Formula, GridWorld};

use crate::config::ScenarioConfig;
use crate::{io, report};

/// A failed command: usage and parse problems exit with 2, everything else
/// with 3.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0:#}")]
    Usage(anyhow::Error),
    #[error("{0:#}")]
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<io::FormatError> for CliError {
    fn from(e: io::FormatError) -> Self {
        CliError::Runtime(e.into())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(anyhow!(msg.into()))
}

pub type CmdResult = Result<String, CliError>;

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Common {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub config: Option<PathBuf>,
}

impl Common {
    fn scenario(&self) -> Result<Option<ScenarioConfig>, CliError> {
        let Some(path) = &self.config else { return Ok(None) };
        let mut cfg = ScenarioConfig::load(path).map_err(CliError::Usage)?;
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        Ok(Some(cfg))
    }

    fn require_scenario(&self, cmd: &str) -> Result<ScenarioConfig, CliError> {
        self.scenario()?.ok_or_else(|| usage(format!("`{cmd}` needs --config")))
    }

    fn out_dir(&self, cfg: Option<&ScenarioConfig>) -> PathBuf {
        match (&self.out, cfg) {
            (Some(p), _) => p.clone(),
            (None, Some(c)) => c.out_dir(),
            (None, None) => PathBuf::from("out"),
        }
    }
}

fn parse_phi(text: &str) -> Result<Formula, CliError> {
    parse_formula(text).map_err(|e| CliError::Usage(anyhow!("cannot parse `{text}`: {e}")))
}

fn seed_of(cfg: &ScenarioConfig) -> Result<u64, CliError> {
    cfg.seed().map_err(CliError::Usage)
}

/// One `true`/`false` line per trace in `traces`.
pub fn eval(common: &Common, formula: &str, traces: &Path) -> CmdResult {
    let phi = parse_phi(formula)?;
    let cfg = common.scenario()?;
    let world = cfg.as_ref().map(ScenarioConfig::load_world).transpose()?;
    let alphabet = intent_core::gridworld::color_alphabet();
    let traces = io::read_traces(traces, &alphabet)?;
    let mut out = String::new();
    for (i, t) in traces.iter().enumerate() {
        if let Some(w) = &world {
            w.validate_trace(t).with_context(|| format!("trace {}", i + 1))?;
        }
        let v = evaluate(&phi, &alphabet, &t.observations()).map_err(|e| CliError::Usage(e.into()))?;
        out.push_str(if v { "true\n" } else { "false\n" });
    }
    if let Some(dir) = &common.out {
        io::write_atomic(&dir.join("verdicts.txt"), out.as_bytes())?;
    }
    Ok(out)
}

/// Ranks the scenario's class against its demonstrations. Writes
/// `ranking.tsv` and `class.txt`.
pub fn mine(common: &Common) -> CmdResult {
    let started = Instant::now();
    let cfg = common.require_scenario("mine")?;
    let seed = seed_of(&cfg)?;
    let world = cfg.load_world()?;
    let demos = cfg.load_demos(&world)?;
    let class = cfg.concept_class(&world)?;
    let ranking =
        rank_specs(&class, &demos, &world, cfg.rollouts, &mut stream(seed, "rollouts")).map_err(anyhow::Error::from)?;
    let dir = common.out_dir(Some(&cfg));
    io::write_atomic(&dir.join("ranking.tsv"), report::ranking_tsv(&ranking).as_bytes())?;
    io::write_atomic(&dir.join("class.txt"), io::formulas_to_text(class.formulas()).as_bytes())?;

    let top = ranking.top().expect("class is nonempty");
    Ok(format!(
        "top: {}\nlog_posterior: {}\ncandidates explored: {}\ndemonstrations: {}\nrollouts: {}\nwall time: {:.2} s\nwrote {}\n",
        top.formula,
        top.log_posterior,
        class.len(),
        demos.len(),
        cfg.rollouts,
        started.elapsed().as_secs_f64(),
        dir.join("ranking.tsv").display(),
    ))
}

/// A shortest trace satisfying `formula`, written to `plan.jsonl`, or
/// `UNSAT`.
pub fn plan(common: &Common, formula: &str, world_path: Option<&Path>, max_len: Option<usize>) -> CmdResult {
    let phi = parse_phi(formula)?;
    let cfg = common.scenario()?;
    let world: GridWorld = match (world_path, &cfg) {
        (Some(p), c) => {
            let (slip, bound) =
                c.as_ref().map_or((0.0, intent_core::gridworld::DEFAULT_MAX_LEN), |c| (c.slip, c.max_len));
            io::read_world(p, slip, bound.max(max_len.unwrap_or(0)))?
        }
        (None, Some(c)) => c.load_world()?,
        (None, None) => return Err(usage("`plan` needs --world or --config")),
    };
    let max_len = max_len.unwrap_or(world.max_len());
    if max_len == 0 {
        return Err(usage("--max-len must be at least 1"));
    }
    let seed = common.seed.or(cfg.as_ref().and_then(|c| c.seed));
    let mut rng = seed.map(|s| stream(s, "plan"));
    let tie = match rng.as_mut() {
        Some(r) => TieBreak::Shuffled(r),
        None => TieBreak::Canonical,
    };
    let found = plan_satisfying_trace(&world, &phi, max_len, tie).map_err(anyhow::Error::from)?;
    let Some(trace) = found else { return Ok("UNSAT\n".to_string()) };
    let holds = evaluate(&phi, &world.alphabet(), &trace.observations()).map_err(anyhow::Error::from)?;
    if !holds {
        return Err(CliError::Runtime(anyhow!("planned trace fails re-evaluation")));
    }
    let path = common.out_dir(cfg.as_ref()).join("plan.jsonl");
    io::write_atomic(&path, io::traces_to_jsonl(std::slice::from_ref(&trace), &world.alphabet()).as_bytes())?;
    let actions: String = trace.steps().iter().filter_map(|s| s.action).map(|a| a.letter()).collect();
    Ok(format!("SAT {} steps: {}\nwrote {}\n", trace.len(), actions, path.display()))
}

/// Runs the two-agent protocol. Writes `transcript.json`.
pub fn transfer(common: &Common) -> CmdResult {
    let cfg = common.require_scenario("transfer")?;
    seed_of(&cfg)?;
    let world = cfg.load_world()?;
    let truth = cfg.true_spec().map_err(CliError::Usage)?;
    let demos = cfg.load_demos(&world)?;
    let class = cfg.concept_class(&world)?;
    let tcfg = cfg.transfer_config(&world)?;
    let transcript = run_transfer_protocol(&world, &truth, demos, &class, &tcfg).map_err(anyhow::Error::from)?;
    let path = common.out_dir(Some(&cfg)).join("transcript.json");
    io::write_atomic(&path, report::transcript_json(&transcript, &world.alphabet()).as_bytes())?;
    let mut out = report::transcript_summary(&transcript);
    out.push_str(&format!("wrote {}\n", path.display()));
    Ok(out)
}

/// Samples the scenario's demonstration recipe into `demos.jsonl`.
pub fn demos(common: &Common) -> CmdResult {
    let cfg = common.require_scenario("demos")?;
    seed_of(&cfg)?;
    let world = cfg.load_world()?;
    let demos = cfg.generate_demos(&world)?;
    let path = common.out_dir(Some(&cfg)).join("demos.jsonl");
    io::write_atomic(&path, io::traces_to_jsonl(&demos, &world.alphabet()).as_bytes())?;
    Ok(format!("{} demonstrations\nwrote {}\n", demos.len(), path.display()))
}
