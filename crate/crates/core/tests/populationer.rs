use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xqlab::nash::NashSolver;
use xqlab::populationer::*;

fn pop(labels: &[&str], capacity: usize) -> Population {
    Population::from_agents(capacity, labels.iter().map(|l| Agent::new(*l)).collect()).unwrap()
}

#[test]
fn two_games_give_one_game_per_colour() {
    let p = pop(&["a", "b", "c"], 3);
    let mut log = Vec::new();
    let mut engine = |r: &str, b: &str| {
        log.push((r.to_string(), b.to_string()));
        Ok(0)
    };
    let buf = evaluate_challenger("j", &p, 2, &mut engine).unwrap();
    assert_eq!(buf.len(), 6);
    for m in ["a", "b", "c"] {
        assert!(log.contains(&("j".into(), m.into())));
        assert!(log.contains(&(m.into(), "j".into())));
    }
    // Even-numbered games put the challenger on Red.
    assert_eq!(buf.entries[0].n1, "j");
    assert_eq!(buf.entries[1].n2, "j");
}

#[test]
fn buffer_size_and_red_always_wins() {
    let p = pop(&["a", "b", "c", "d"], 4);
    let mut red_wins = |_: &str, _: &str| Ok(1);
    let buf = evaluate_challenger("j", &p, 7, &mut red_wins).unwrap();
    assert_eq!(buf.len(), 28);
    assert!(buf.entries.iter().all(|e| e.n0 == 1));
    let mut one = |_: &str, _: &str| Ok(1);
    assert!(evaluate_challenger("j", &p, 1, &mut one).is_err());
}

#[test]
fn engine_failures_flag_the_pairing() {
    let p = pop(&["a", "b"], 2);
    let mut engine = |r: &str, b: &str| if r == "b" || b == "b" { Err("lost connection".to_string()) } else { Ok(-1) };
    let buf = evaluate_challenger("j", &p, 4, &mut engine).unwrap();
    assert_eq!(buf.len(), 4);
    assert_eq!(buf.incomplete, vec![("b".to_string(), "lost connection".to_string())]);
}

#[test]
fn parallel_evaluation_matches_sequential() {
    let labels: Vec<String> = (0..9).map(|i| format!("m{i}")).collect();
    let p = Population::from_agents(9, labels.iter().map(Agent::new).collect()).unwrap();
    // Deterministic in the pairing, so thread scheduling cannot matter.
    let engine = |r: &str, b: &str| Ok(((r.len() * 7 + b.bytes().map(|x| x as usize).sum::<usize>()) % 3) as i8 - 1);
    let mut seq_engine = engine;
    let seq = evaluate_challenger("j", &p, 6, &mut seq_engine).unwrap();
    for threads in [1, 2, 4, 16] {
        assert_eq!(evaluate_challenger_parallel("j", &p, 6, threads, &engine).unwrap(), seq);
    }
}

#[test]
fn buffer_keeps_only_current_members() {
    let config = PopulationerConfig {
        capacity: 3,
        top_n: 2,
        games_per_pair: 2,
        normalize: true,
    };
    let mut p = Populationer::new(config, NashSolver::default());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut engine = |r: &str, b: &str| Ok(if r > b { 1 } else { -1 });
    for i in 0..8 {
        p.step(Agent::new(format!("a{i}")), &mut engine, &mut rng).unwrap();
        assert!(p.population.len() <= 3);
        let labels = p.population.labels();
        assert!(p.buffer.entries.iter().all(|e| labels.contains(&e.n1) && labels.contains(&e.n2)));
        let m = p.payoff().unwrap();
        assert_eq!(m.antisymmetry_error(), 0.0);
    }
    assert_eq!(p.history.len(), 8);
    assert_eq!(p.history.iter().filter(|r| r.removed.is_some()).count(), 5);
    assert!(p.step(Agent::new("a7"), &mut engine, &mut rng).is_err());
}

#[test]
fn manifest_round_trip_and_versioning() {
    let mut p = Populationer::new(
        PopulationerConfig {
            capacity: 4,
            ..Default::default()
        },
        NashSolver::default(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut engine = |_: &str, _: &str| Ok(0);
    for i in 0..6 {
        p.step(Agent::new(format!("a{i}")).with_checkpoint(format!("ckpt/a{i}.xqn")), &mut engine, &mut rng)
            .unwrap();
    }
    let man = PopulationManifest::from_populationer(&p);
    assert!((man.nash.iter().map(|(_, q)| q).sum::<f64>() - 1.0).abs() < 1e-9);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pop.json");
    man.save(&path).unwrap();
    let back = PopulationManifest::load(&path).unwrap();
    assert_eq!(back, man);
    let restored = back.into_populationer(NashSolver::default()).unwrap();
    assert_eq!(restored.population, p.population);
    assert_eq!(restored.buffer, p.buffer);

    let future = man.to_json().unwrap().replacen("\"version\": 1", "\"version\": 99", 1);
    assert!(matches!(
        PopulationManifest::from_json(&future),
        Err(PopulationError::Version { found: 99, .. })
    ));
}

#[test]
fn population_loop_beats_latest_opponent_on_a_spinning_top() {
    let start = Instant::now();
    let m = spinning_top(30);
    let iterations = 60;
    let base = latest_opponent_run(&m, iterations);
    let tail = &base.exploitability[iterations - 10..];
    println!("latest-opponent strategies {:?}", &base.strategies[iterations - 10..]);
    assert!(tail.iter().all(|&e| e > 0.2), "{tail:?}");
    for seed in 0..5 {
        let run = populationer_run(&m, iterations, PopulationerConfig::default(), NashSolver::default(), seed).unwrap();
        println!(
            "seed {seed}: final exploitability {:.3e}, first strategies {:?}",
            run.final_exploitability(),
            &run.strategies[..8]
        );
        assert!(run.final_exploitability() <= 0.05);
    }
    assert!(start.elapsed() < Duration::from_secs(300));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn size_is_invariant_and_challengers_survive(
        capacity in 1usize..8, top_n in 1usize..6, rounds in 1usize..40, seed in any::<u64>()
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut game_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let config = PopulationerConfig { capacity, top_n, games_per_pair: 2, normalize: true };
        let mut p = Populationer::new(config, NashSolver::default());
        let mut engine = |_: &str, _: &str| Ok(game_rng.random_range(-1..=1));
        for i in 0..rounds {
            let label = format!("c{i}");
            let choice = p.step(Agent::new(label.clone()), &mut engine, &mut rng).unwrap();
            prop_assert_eq!(p.population.len(), (i + 1).min(capacity));
            prop_assert!(p.population.contains(&label));
            prop_assert!(p.population.contains(&choice.label));
            prop_assert!(choice.distribution.iter().any(|(l, _)| *l == choice.label));
            prop_assert!(choice.distribution.len() <= top_n);
            let r = p.history.last().unwrap();
            prop_assert!(r.removed.as_deref() != Some(label.as_str()));
            let mut labels = p.population.labels();
            labels.sort();
            labels.dedup();
            prop_assert_eq!(labels.len(), p.population.len());
        }
    }

    #[test]
    fn filled_payoffs_are_exactly_antisymmetric(games in prop::collection::vec((-1i8..=1, 0usize..5, 0usize..5), 0..100)) {
        let labels: Vec<String> = (0..5).map(|i| format!("a{i}")).collect();
        let mut b = NashBuffer::new();
        for (s, r, k) in games {
            if r != k {
                b.push(s, &labels[r], &labels[k]);
            }
        }
        for normalize in [false, true] {
            let m = fill_payoff(&b, &labels, normalize).unwrap();
            let v: &DMatrix<f64> = m.values();
            prop_assert_eq!((v + v.transpose()).amax(), 0.0);
        }
    }
}
