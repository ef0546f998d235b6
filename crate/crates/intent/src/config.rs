//! Scenario configuration: one flat TOML document.
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use intent_core::concepts::{dedupe_semantic, enumerate_candidates, DEFAULT_HARD_CAP};
use intent_core::gridworld::DEFAULT_MAX_LEN;
use intent_core::planner::{sample_demonstrations, DemoRecipe};
use intent_core::pltl::{Operator, OperatorSet};
use intent_core::rng::stream;
use intent_core::transfer::{BobMode, TransferConfig};
use intent_core::{parse_formula, ConceptClass, ConceptConfig, Formula, GridWorld, TemplateFamily, Trace};
use serde::Deserialize;

use crate::io;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassKind {
    /// The stock template class for color worlds.
    #[default]
    Default,
    /// Every formula over `atoms` and `operators` up to `max_size`.
    Grammar,
    /// Formulas listed in `class_file`.
    File,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BobKind {
    #[default]
    Planned,
    Corpus,
}

fn default_max_len() -> usize {
    DEFAULT_MAX_LEN
}
fn default_rollouts() -> usize {
    10_000
}
fn default_tau() -> f64 {
    0.5
}
fn default_rounds() -> usize {
    5
}
fn default_k() -> usize {
    3
}
fn default_probes() -> usize {
    10_000
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,

    pub world: PathBuf,
    #[serde(default)]
    pub slip: f64,
    #[serde(default = "default_max_len")]
    pub max_len: usize,

    /// Demonstration file; alternatively a generation recipe below.
    pub demos: Option<PathBuf>,
    pub demo_formula: Option<String>,
    pub demo_count: Option<usize>,
    #[serde(default)]
    pub demo_prefix_min: usize,
    #[serde(default)]
    pub demo_prefix_max: usize,
    pub demo_len: Option<usize>,

    #[serde(default = "default_rollouts")]
    pub rollouts: usize,

    #[serde(default)]
    pub class: ClassKind,
    pub class_file: Option<PathBuf>,
    pub atoms: Option<Vec<String>>,
    pub operators: Option<Vec<String>>,
    pub max_size: Option<usize>,
    pub max_conjuncts: Option<usize>,
    pub guarded: Option<bool>,
    pub guard_atoms: Option<Vec<String>>,
    pub hard_cap: Option<usize>,
    #[serde(default)]
    pub dedup_probes: usize,

    pub true_spec: Option<String>,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_rounds")]
    pub max_rounds: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    pub plan_len: Option<usize>,
    #[serde(default)]
    pub bob_mode: BobKind,
    pub corpus: Option<PathBuf>,
    #[serde(default = "default_probes")]
    pub equivalence_probes: usize,

    #[serde(skip)]
    base: PathBuf,
}

impl ScenarioConfig {
    pub fn parse(text: &str, base: &Path) -> anyhow::Result<Self> {
        let mut cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.base = base.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = io::read_text(path)?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        Self::parse(&text, &base).with_context(|| format!("{}", path.display()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn seed(&self) -> anyhow::Result<u64> {
        self.seed.ok_or_else(|| anyhow!("no seed: set `seed` in the config or pass --seed"))
    }

    pub fn out_dir(&self) -> PathBuf {
        match &self.out {
            Some(p) => self.resolve(p),
            None => PathBuf::from("out"),
        }
    }

    pub fn load_world(&self) -> anyhow::Result<GridWorld> {
        Ok(io::read_world(&self.resolve(&self.world), self.slip, self.max_len)?)
    }

    /// Demonstrations from `demos`, or generated from the recipe under the
    /// "demos" stream.
    pub fn load_demos(&self, world: &GridWorld) -> anyhow::Result<Vec<Trace>> {
        match (&self.demos, &self.demo_formula) {
            (Some(_), Some(_)) => bail!("set either `demos` or `demo_formula`, not both"),
            (Some(p), None) => {
                let demos = io::read_traces(&self.resolve(p), &world.alphabet())?;
                for (i, t) in demos.iter().enumerate() {
                    world.validate_trace(t).with_context(|| format!("demonstration {}", i + 1))?;
                }
                Ok(demos)
            }
            (None, Some(_)) => self.generate_demos(world),
            (None, None) => bail!("no demonstrations: set `demos` or `demo_formula`"),
        }
    }

    pub fn generate_demos(&self, world: &GridWorld) -> anyhow::Result<Vec<Trace>> {
        let text = self.demo_formula.as_deref().ok_or_else(|| anyhow!("`demo_formula` is not set"))?;
        let phi = parse_formula(text).with_context(|| format!("demo_formula `{text}`"))?;
        if self.demo_prefix_min > self.demo_prefix_max {
            bail!("demo_prefix_min exceeds demo_prefix_max");
        }
        let mut recipe = DemoRecipe::new(self.demo_count.unwrap_or(20), self.demo_prefix_min..=self.demo_prefix_max);
        recipe.exact_len = self.demo_len;
        let mut rng = stream(self.seed()?, "demos");
        Ok(sample_demonstrations(world, &phi, &recipe, &mut rng)?)
    }

    pub fn concept_config(&self) -> anyhow::Result<ConceptConfig> {
        let mut cfg = ConceptConfig::color_default();
        if let Some(atoms) = &self.atoms {
            cfg.atoms = atoms.clone();
        }
        if let Some(ops) = &self.operators {
            cfg.operators = ops
                .iter()
                .map(|s| Operator::from_symbol(s).ok_or_else(|| anyhow!("unknown operator `{s}`")))
                .collect::<anyhow::Result<OperatorSet>>()?;
        }
        if let Some(n) = self.max_size {
            cfg.max_size = n;
        }
        cfg.hard_cap = self.hard_cap.unwrap_or(DEFAULT_HARD_CAP);
        cfg.dedup_probes = self.dedup_probes;
        match self.class {
            ClassKind::Grammar => cfg.templates = None,
            ClassKind::Default | ClassKind::File => {
                let t: &mut TemplateFamily = cfg.templates.as_mut().expect("stock class uses templates");
                if let Some(n) = self.max_conjuncts {
                    t.max_conjuncts = n;
                }
                if let Some(g) = self.guarded {
                    t.guarded_response = g;
                }
                if let Some(atoms) = &self.guard_atoms {
                    t.guard_atoms = Some(atoms.clone());
                }
            }
        }
        Ok(cfg)
    }

    pub fn concept_class(&self, world: &GridWorld) -> anyhow::Result<ConceptClass> {
        let class = match self.class {
            ClassKind::File => {
                let p = self.class_file.as_ref().ok_or_else(|| anyhow!("class = \"file\" needs `class_file`"))?;
                ConceptClass::from_formulas(io::read_formulas(&self.resolve(p))?)
            }
            _ => enumerate_candidates(&self.concept_config()?)?,
        };
        if self.dedup_probes == 0 {
            return Ok(class);
        }
        let mut rng = stream(self.seed()?, "probes");
        Ok(dedupe_semantic(&class, world, self.dedup_probes, &mut rng)?)
    }

    pub fn true_spec(&self) -> anyhow::Result<Formula> {
        let text = self.true_spec.as_deref().ok_or_else(|| anyhow!("`true_spec` is not set"))?;
        parse_formula(text).with_context(|| format!("true_spec `{text}`"))
    }

    pub fn transfer_config(&self, world: &GridWorld) -> anyhow::Result<TransferConfig> {
        let mut cfg = TransferConfig::new(self.seed()?, self.plan_len.unwrap_or(self.max_len));
        cfg.tau = self.tau;
        cfg.max_rounds = self.max_rounds;
        cfg.k = self.k;
        cfg.n_rollouts = self.rollouts;
        cfg.equivalence_probes = self.equivalence_probes;
        cfg.bob_mode = match self.bob_mode {
            BobKind::Planned => BobMode::Planned,
            BobKind::Corpus => {
                let p = self.corpus.as_ref().ok_or_else(|| anyhow!("bob_mode = \"corpus\" needs `corpus`"))?;
                BobMode::Corpus(io::read_traces(&self.resolve(p), &world.alphabet())?)
            }
        };
        Ok(cfg)
    }
}
