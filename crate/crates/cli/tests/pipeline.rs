use std::fs;
use std::path::Path;
use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xqlab::analysis::{elo_logistic_records, uniform_bins, write_jsonl};
use xqlab::mcts::SearchConfig;
use xqlab::populationer::PopulationManifest;
use xqlab_cli::commands::{analyze, evaluate_exploitability, evaluate_rp_elo, evaluate_rpp, MatchSettings};
use xqlab_cli::config::RunConfig;
use xqlab_cli::train::{train, Budget};

fn quick_config() -> RunConfig {
    let mut cfg = RunConfig::tiny();
    cfg.seed = 11;
    cfg.search.simulations = 8;
    cfg.search.rules.max_game_plies = 60;
    cfg.train.batch_size = 16;
    cfg.training.min_replay = 32;
    cfg.training.steps_per_game = 10;
    cfg.training.checkpoint_every_steps = 50;
    cfg
}

fn quick_match(seed: u64) -> MatchSettings {
    let mut search = SearchConfig::with_simulations(4);
    search.rules.max_game_plies = 40;
    MatchSettings {
        search,
        games_per_pair: 2,
        stochastic: false,
        seed,
    }
}

#[test]
fn training_is_reproducible_at_step_100() {
    let cfg = quick_config();
    let budget = Budget {
        max_steps: Some(100),
        ..Budget::default()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = train(&cfg, a.path(), budget).unwrap();
    let rb = train(&cfg, b.path(), budget).unwrap();
    assert_eq!(ra.steps, 100);
    assert_eq!((ra.games, ra.samples), (rb.games, rb.samples));
    let name = "checkpoints/step-00000100.xqn";
    let (ca, cb) = (fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    assert!(!ca.is_empty());
    assert_eq!(ca, cb);
    assert_eq!(
        fs::read_to_string(a.path().join("games.jsonl")).unwrap(),
        fs::read_to_string(b.path().join("games.jsonl")).unwrap()
    );
    let saved = RunConfig::load(&a.path().join("config.toml")).unwrap();
    assert_eq!(saved, cfg);
}

fn rotated_run(dir: &Path) -> PopulationManifest {
    let mut cfg = quick_config();
    cfg.training.rotation_every_games = 2;
    cfg.training.eval_simulations = 4;
    cfg.populationer.capacity = 3;
    cfg.populationer.games_per_pair = 2;
    let r = train(
        &cfg,
        dir,
        Budget {
            max_games: Some(10),
            ..Budget::default()
        },
    )
    .unwrap();
    assert_eq!(r.games, 10);
    assert_eq!(r.rotations, 5);
    PopulationManifest::load(&r.manifest).unwrap()
}

#[test]
fn rotations_keep_the_population_at_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let m = rotated_run(dir.path());
    assert_eq!(m.agents.len(), 3);
    assert_eq!(m.history.len(), 5);
    for a in &m.agents {
        let ckpt = a.checkpoint.as_ref().unwrap();
        assert!(ckpt.is_relative());
        assert!(dir.path().join(ckpt).exists(), "{}", ckpt.display());
    }
    let total: f64 = m.nash.iter().map(|(_, q)| q).sum();
    assert!((total - 1.0).abs() < 1e-9);

    let pop = dir.path().join("population.json");
    let settings = quick_match(1);
    let solver = RunConfig::tiny().nash;
    let self_rpp = evaluate_rpp(&pop, &pop, &settings, &solver).unwrap();
    assert!(self_rpp.value.abs() <= 1e-6, "{}", self_rpp.value);
    assert_eq!(self_rpp.payoff.shape(), (3, 3));

    let challenger = dir.path().join("checkpoints/latest.xqn");
    let elo = evaluate_rp_elo(&pop, &challenger, &settings, 16.0).unwrap();
    assert_eq!(elo.ratings.len(), 4);
    assert_eq!(elo.ratings.last().unwrap().0, "challenger");
    let sum: f64 = elo.ratings.iter().map(|(_, r)| r).sum();
    assert!((sum - 4.0 * 1500.0).abs() < 1e-6);

    let ex = evaluate_exploitability(&pop, &pop, &settings).unwrap();
    assert_eq!(ex.responses.len(), 3);
    assert!(ex.lower_bound >= ex.responses.iter().map(|r| r.1).fold(f64::MIN, f64::max) - 1e-12);
}

#[test]
fn analyze_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let bins = uniform_bins(1000.0, 1500.0, 100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let records = elo_logistic_records(&bins, 300, 0.1, &mut rng);
    let path = dir.path().join("records.jsonl");
    write_jsonl(fs::File::create(&path).unwrap(), &records).unwrap();
    let cfg = RunConfig::tiny();
    let out = dir.path().join("out");
    let files = analyze(&path, &out, &cfg.analysis, &cfg.nash).unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|f| f.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for n in ["payoff.csv", "clustering.csv", "cycles.csv", "profile.csv", "embedding.csv"] {
        assert!(names.contains(&n.to_string()), "{names:?}");
    }
    let clustering = fs::read_to_string(out.join("clustering.csv")).unwrap();
    assert_eq!(clustering.lines().count(), 1 + 5);
    let cycles = fs::read_to_string(out.join("cycles.csv")).unwrap();
    assert!(cycles.lines().last().unwrap().starts_with("total,"));
}

fn xqlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_xqlab"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

#[test]
fn binary_reports_perft_and_exit_codes() {
    let out = xqlab(&["perft", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "79666");

    let out = xqlab(&["perft", "1", "--divide"]);
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    assert_eq!(text.lines().count(), 45);
    assert_eq!(text.lines().last().unwrap(), "total: 44");

    assert_eq!(xqlab(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(xqlab(&["perft"]).status.code(), Some(2));
    assert_eq!(xqlab(&["perft", "1", "--fen", "garbage"]).status.code(), Some(1));
    assert_eq!(xqlab(&["train", "--preset", "huge", "--max-steps", "1"]).status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[populationer]\ntop_n = 0\n").unwrap();
    let out = xqlab(&["train", "--config", cfg.to_str().unwrap(), "--max-steps", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("populationer.top_n"));
}

#[test]
fn binary_analyzes_records() {
    let dir = tempfile::tempdir().unwrap();
    let bins = uniform_bins(1000.0, 1300.0, 100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let path = dir.path().join("r.jsonl");
    write_jsonl(
        fs::File::create(&path).unwrap(),
        &elo_logistic_records(&bins, 200, 0.0, &mut rng),
    )
    .unwrap();
    let out_dir = dir.path().join("a");
    let out = xqlab(&["analyze", path.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--bin-mode", "literal"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let payoff = fs::read_to_string(out_dir.join("payoff.csv")).unwrap();
    assert_eq!(payoff.lines().count(), 1 + 3);
}
