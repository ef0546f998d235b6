//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use intent::config::ScenarioConfig;
use intent::io::read_formulas;
use intent_core::concepts::probe_pool;
use intent_core::gridworld::{color_alphabet, Color};
use intent_core::inference::{clamp_rate, kl_bernoulli, posterior_score, random_satisfaction};
use intent_core::planner::{plan_satisfying_trace, TieBreak};
use intent_core::pltl::{evaluate, Monitor, Program};
use intent_core::rng::stream;
use intent_core::{parse_formula, Alphabet, Formula, GridWorld, Observation, SatStats};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
/// Ranking rows keyed by formula text: (kl_term, log_posterior).
type Rows = BTreeMap<String, (f64, f64)>;

const PHI_F: &str = "(H !red & O yellow) & H((yellow & O blue) -> (!blue S brown))";
const PHI_YR: &str = "H !red & O yellow";
const RIVAL: &str = "H !red & O yellow & O blue";

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Result<(String, Duration), String> {
    let t0 = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_intent"))
        .args(args)
        .current_dir(root())
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("`intent {}` failed: {}", args.join(" "), String::from_utf8_lossy(&o.stderr)));
    }
    Ok((String::from_utf8_lossy(&o.stdout).into_owned(), t0.elapsed()))
}

fn scenario(name: &str, command: &str, out: &Path) -> Result<(String, Duration), String> {
    let cfg = format!("scenarios/{name}.cfg");
    run(&["--config", &cfg, "--out", out.to_str().unwrap(), command])
}

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Formulas in rank order, plus their rows.
fn read_ranking(path: &Path) -> Result<(Vec<String>, Rows), String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut order = Vec::new();
    let mut rows = BTreeMap::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split('\t').collect();
        let num = |s: &str| if s == "-inf" { f64::NEG_INFINITY } else { s.parse().unwrap() };
        order.push(cols[0].to_string());
        rows.insert(cols[0].to_string(), (num(cols[3]), num(cols[4])));
    }
    Ok((order, rows))
}

fn canonical(text: &str) -> String {
    parse_formula(text).unwrap().to_string()
}

fn same_signature(a: &Formula, b: &Formula, world: &GridWorld, probes: usize, seed: u64) -> bool {
    let pool = probe_pool(world, probes, &mut stream(seed, "acceptance")).unwrap();
    let sig = |f: &Formula| pool.signature(&Program::compile(f, pool.alphabet()).unwrap());
    sig(a) == sig(b)
}

fn load(name: &str) -> (ScenarioConfig, GridWorld) {
    let cfg = ScenarioConfig::load(&root().join(format!("scenarios/{name}.cfg"))).unwrap();
    let world = cfg.load_world().unwrap();
    (cfg, world)
}

fn phi_f_recovery() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (stdout, elapsed) = scenario("paper-full", "mine", dir.path())?;
    let (cfg, world) = load("paper-full");
    let phi_f = parse_formula(PHI_F).unwrap();

    let demos = cfg.load_demos(&world).map_err(|e| e.to_string())?;
    check(demos.len() == 20, format!("{} demonstrations", demos.len()))?;
    let alphabet = world.alphabet();
    check(
        demos.iter().all(|d| support::holds(&phi_f, &alphabet, &d.observations())),
        "a demonstration violates the intent",
    )?;

    let class = read_formulas(&dir.path().join("class.txt")).map_err(|e| e.to_string())?;
    check((500..=2000).contains(&class.len()), format!("class has {} formulas", class.len()))?;
    check(class.contains(&phi_f), "class lacks the intent")?;
    check(stdout.contains("candidates explored: "), "no candidate count in the log")?;

    let (order, _) = read_ranking(&dir.path().join("ranking.tsv"))?;
    let top = parse_formula(&order[0]).unwrap();
    check(
        same_signature(&top, &phi_f, &world, 10_000, cfg.seed().unwrap()),
        format!("top `{top}` differs from the intent on the probes"),
    )?;
    check(elapsed < Duration::from_secs(300), format!("took {elapsed:?}"))?;
    Ok(format!("top `{top}`, {} candidates, {:.2} s", class.len(), elapsed.as_secs_f64()))
}

fn restricted_demos() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    scenario("paper-xprime", "mine", dir.path())?;
    let (cfg, world) = load("paper-xprime");
    let demos = cfg.load_demos(&world).map_err(|e| e.to_string())?;
    check(
        demos.iter().all(|d| !d.visits(Color::Blue) && !d.visits(Color::Brown)),
        "a restricted demonstration touches blue or brown",
    )?;
    let (order, rows) = read_ranking(&dir.path().join("ranking.tsv"))?;
    check(order[0] == canonical(PHI_YR), format!("top is `{}`", order[0]))?;
    let (top_kl, _) = rows[&order[0]];
    let &(rival_kl, rival_lp) = rows.get(&canonical(RIVAL)).ok_or("rival not ranked")?;
    check(rival_lp.is_finite(), "rival ruled out")?;
    let d = top_kl - rival_kl;
    check(d < 0.5, format!("rival divergence {d}"))?;
    let rank = order.iter().position(|f| *f == canonical(RIVAL)).unwrap() + 1;
    Ok(format!("rival at rank {rank}, divergence {d:.4}"))
}

fn word_of(steps: &serde_json::Value, alphabet: &Alphabet) -> Vec<Observation> {
    steps
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            let bits = s["props"]
                .as_array()
                .unwrap()
                .iter()
                .map(|p| 1u32 << alphabet.index_of(p.as_str().unwrap()).unwrap())
                .sum();
            Observation::from_bits(bits)
        })
        .collect()
}

fn transfer_convergence() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    scenario("paper-xprime", "transfer", dir.path())?;
    let text = std::fs::read_to_string(dir.path().join("transcript.json")).map_err(|e| e.to_string())?;
    let t: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    check(t["status"] == "converged", format!("status {}", t["status"]))?;
    let rounds = t["rounds"].as_array().unwrap();
    check(rounds.len() <= 5, format!("{} rounds", rounds.len()))?;
    let phi_f = parse_formula(PHI_F).unwrap();
    let alphabet = color_alphabet();
    let mut n = 0;
    for r in rounds {
        for c in r["clarifications"].as_array().unwrap() {
            let word = word_of(c, &alphabet);
            check(evaluate(&phi_f, &alphabet, &word).unwrap(), "clarification violates the intent")?;
            n += 1;
        }
    }
    let tau = t["tau"].as_f64().unwrap();
    check(
        t["last"]["rivals"].as_array().unwrap().iter().all(|r| r["divergence"].as_f64().unwrap() >= tau),
        "a final rival is within tau",
    )?;
    check(t["last"]["top_matches_truth"] == true, "final top differs from the intent")?;
    Ok(format!("converged in {} rounds, {n} clarifications", rounds.len()))
}

fn evaluator_oracle() -> Outcome {
    let atoms = ["red", "yellow", "blue", "brown", "white"];
    let alphabet = color_alphabet();
    let mut rng = stream(4, "acceptance");
    let mut mismatches = 0;
    for _ in 0..1000 {
        let phi = support::random_formula(&mut rng, &atoms, 9);
        let len = rng.gen_range(1..=12);
        let word = support::random_word(&mut rng, atoms.len(), len);
        let monitor = Monitor::new(&phi, &alphabet).unwrap();
        let mut state = monitor.init(word[0]);
        for i in 0..len {
            if i > 0 {
                state = monitor.step(&state, word[i]).unwrap();
            }
            let want = support::holds_at(&phi, &alphabet, &word, i);
            let batch = evaluate(&phi, &alphabet, &word[..=i]).unwrap();
            if state.verdict() != want || batch != want {
                mismatches += 1;
            }
        }
    }
    check(mismatches == 0, format!("{mismatches} mismatches"))?;
    Ok("1000 pairs, 0 mismatches".into())
}

// The six-digit constants are the published reference values.
#[allow(clippy::approx_constant)]
fn posterior_math() -> Outcome {
    let ln2 = kl_bernoulli(1.0, 0.5);
    let ln9 = kl_bernoulli(0.9, 0.1);
    check((ln2 - 0.693147).abs() < 1e-6 && (ln2 - 2f64.ln()).abs() < 1e-9, format!("KL(1||0.5) = {ln2}"))?;
    check((ln9 - 1.757780).abs() < 1e-6 && (ln9 - 0.8 * 9f64.ln()).abs() < 1e-9, format!("KL(0.9||0.1) = {ln9}"))?;
    let stats = |bar: f64, hat: f64, n: usize| SatStats { phi_bar: bar, phi_hat: hat, n_demos: n, n_rollouts: 10_000 };
    for i in 0..=20 {
        for j in 0..=20 {
            let (bar, hat) = (i as f64 / 20.0, j as f64 / 20.0);
            let (kl, lp) = posterior_score(&stats(bar, hat, 5));
            let want = kl_bernoulli(bar, clamp_rate(hat, 10_000));
            check((kl - want).abs() < 1e-12, "kl term")?;
            check((bar < hat) == (lp == f64::NEG_INFINITY), format!("indicator at ({bar}, {hat})"))?;
            if bar > hat {
                let mut prev = lp;
                for n in 6..40 {
                    let (_, next) = posterior_score(&stats(bar, hat, n));
                    check(next > prev, format!("not increasing at ({bar}, {hat}, {n})"))?;
                    prev = next;
                }
            }
        }
    }
    Ok(format!("ln 2 = {ln2:.6}, 0.8 ln 9 = {ln9:.6}"))
}

fn calibration() -> Outcome {
    let text = std::fs::read_to_string(root().join("worlds/tiny-3x3.txt")).unwrap();
    let w = GridWorld::parse(&text).unwrap().with_slip(0.1).unwrap();
    let exact = support::exact_visit_probability(&w, Color::Yellow, 6);
    let phi = parse_formula("O yellow").unwrap();
    let est = random_satisfaction(&phi, &w, &[6], 50_000, &mut stream(6, "acceptance")).unwrap();
    check((est - exact).abs() <= 0.01, format!("estimate {est} exact {exact}"))?;
    Ok(format!("estimate {est:.4}, exact {exact:.4}"))
}

fn planner_small_worlds() -> Outcome {
    let atoms = ["red", "yellow", "blue", "brown", "white"];
    let mut goals: Vec<Formula> =
        [PHI_F, PHI_YR, RIVAL, "O (brown & O blue)", "yellow & red", "!white S blue", "Y Y O yellow"]
            .map(|t| parse_formula(t).unwrap())
            .to_vec();
    let mut rng = stream(7, "acceptance");
    goals.extend((0..15).map(|_| support::random_formula(&mut rng, &atoms, 7)));

    let mut checked = 0;
    let mut worlds = 0;
    let mut entries: Vec<_> = std::fs::read_dir(root().join("worlds")).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries {
        let w = GridWorld::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
        if w.width() > 4 || w.height() > 4 {
            continue;
        }
        worlds += 1;
        for phi in &goals {
            let want = support::shortest_by_enumeration(&w, phi, 8);
            let got = plan_satisfying_trace(&w, phi, 8, TieBreak::Canonical).map_err(|e| e.to_string())?;
            let name = path.file_name().unwrap().to_string_lossy();
            match (want, got) {
                (None, None) => {}
                (Some(n), Some(t)) => {
                    check(t.len() == n, format!("{name}: `{phi}` plan of {} vs {n}", t.len()))?;
                    check(w.validate_trace(&t).is_ok(), format!("{name}: invalid trace"))?;
                    check(
                        evaluate(phi, &w.alphabet(), &t.observations()).unwrap(),
                        format!("{name}: `{phi}` unverified"),
                    )?;
                }
                (a, b) => return Err(format!("{name}: `{phi}` enumeration {a:?}, planner {:?}", b.map(|t| t.len()))),
            }
            checked += 1;
        }
    }
    check(worlds > 0, "no small worlds shipped")?;
    Ok(format!("{checked} goals over {worlds} worlds"))
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let mut compared = 0;
    for (name, command) in [("paper-full", "mine"), ("paper-xprime", "mine"), ("paper-xprime", "transfer")] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        scenario(name, command, a.path())?;
        scenario(name, command, b.path())?;
        let (fa, fb) = (artifacts(a.path()), artifacts(b.path()));
        check(!fa.is_empty(), format!("{name} {command} wrote nothing"))?;
        check(fa == fb, format!("{name} {command} outputs differ"))?;
        compared += fa.len();
    }
    Ok(format!("{compared} artifacts byte-identical"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("intent recovery from the full demonstrations", phi_f_recovery),
        ("inference from restricted demonstrations", restricted_demos),
        ("transfer convergence", transfer_convergence),
        ("evaluator agrees with the oracle", evaluator_oracle),
        ("posterior math", posterior_math),
        ("Monte Carlo calibration", calibration),
        ("planner matches enumeration", planner_small_worlds),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
