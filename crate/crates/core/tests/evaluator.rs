use proptest::prelude::*;
use rand::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use xqlab::evaluator::*;
use xqlab::xiangqi::{Square, SQUARES};
use xqlab::{Color, GameResult, GameRules, Move, PieceKind, Position};

fn random_position(rng: &mut ChaCha8Rng, plies: usize) -> Position {
    let mut p = Position::initial();
    for _ in 0..plies {
        let moves = p.legal_moves();
        if moves.is_empty() {
            break;
        }
        p = p.apply_move(*moves.choose(rng).unwrap()).unwrap();
    }
    p
}

fn synthetic_batch(rng: &mut ChaCha8Rng, size: usize) -> Vec<Sample> {
    let table = MoveTable::global();
    (0..size)
        .map(|_| {
            let plies = rng.random_range(0..40);
            let p = random_position(rng, plies);
            let legal = p.legal_moves();
            let idx = oriented_indices(table, p.side_to_move(), &legal).unwrap();
            // One-hot targets, like a search run at zero temperature; the
            // cross-entropy floor is then 0 rather than the target entropy.
            let hot = rng.random_range(0..idx.len());
            Sample {
                state: encode_state(&p),
                pi: (0..idx.len()).map(|i| (i == hot) as u8 as f32).collect(),
                legal: idx,
                z: [-1.0, 0.0, 1.0][rng.random_range(0..3)],
            }
        })
        .collect()
}

/// Independent count of the action table: every ordered pair of distinct
/// points that a rook line, a knight jump, a palace diagonal step or an
/// elephant jump connects.
fn brute_force_action_count() -> usize {
    let advisor_points = ["d0", "f0", "e1", "d2", "f2", "d9", "f9", "e8", "d7", "f7"];
    let bishop_points = [
        "c0", "g0", "a2", "e2", "i2", "c4", "g4", "c9", "g9", "a7", "e7", "i7", "c5", "g5",
    ];
    let mut count = 0;
    for a in 0..SQUARES {
        for b in 0..SQUARES {
            if a == b {
                continue;
            }
            let sa = Square::from_index(a).unwrap();
            let sb = Square::from_index(b).unwrap();
            let df = (sa.file() as i32 - sb.file() as i32).abs();
            let dr = (sa.rank() as i32 - sb.rank() as i32).abs();
            let same_half = (sa.rank() <= 4) == (sb.rank() <= 4);
            let named = |set: &[&str]| {
                set.contains(&sa.to_string().as_str()) && set.contains(&sb.to_string().as_str())
            };
            let line = df == 0 || dr == 0;
            let knight = (df == 1 && dr == 2) || (df == 2 && dr == 1);
            let advisor = df == 1 && dr == 1 && named(&advisor_points) && same_half;
            let bishop = df == 2 && dr == 2 && named(&bishop_points) && same_half;
            if line || knight || advisor || bishop {
                count += 1;
            }
        }
    }
    count
}

#[test]
fn action_table_matches_a_brute_force_count() {
    let table = MoveTable::global();
    assert_eq!(table.len(), brute_force_action_count());
    assert_eq!(table.len(), 2086);
    assert_eq!(MoveTable::new().checksum(), table.checksum());
}

#[test]
fn every_legal_move_on_random_playouts_has_an_index() {
    let table = MoveTable::global();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let mut p = Position::initial();
        for _ in 0..200 {
            let moves = p.legal_moves();
            if moves.is_empty() {
                break;
            }
            for &m in &moves {
                assert!(table.index_of(m).is_some(), "{m}");
                assert!(table.oriented_index(m, p.side_to_move()).is_some());
            }
            p = p.apply_move(*moves.choose(&mut rng).unwrap()).unwrap();
        }
    }
}

#[test]
fn state_planes_respect_piece_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let plies = rng.random_range(0..150);
        let p = random_position(&mut rng, plies);
        let t = encode_state(&p);
        assert_eq!(t.popcount(), p.piece_count());
        assert!(t.as_slice().iter().all(|&b| b <= 1));
        for own in [true, false] {
            for kind in PieceKind::ALL {
                let n = t.plane(plane_index(own, kind)).iter().filter(|&&b| b == 1).count();
                assert!(n <= kind.initial_count());
                if kind == PieceKind::King {
                    assert_eq!(n, 1);
                }
            }
        }
    }
}

#[test]
fn colour_flip_swaps_the_absolute_planes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let plies = rng.random_range(0..80);
        let p = random_position(&mut rng, plies);
        let f = p.color_flipped();
        assert_eq!(encode_absolute(&f), encode_absolute(&p).plane_swapped().rotated());
        // The side-to-move frame cannot tell the two apart.
        assert_eq!(encode_state(&f), encode_state(&p));
    }
}

#[test]
fn fresh_network_gives_uniform_priors_and_zero_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let net = Network::new(Arch::tiny(), MoveTable::global().len(), &mut rng);
    let eval = NetEvaluator::new(net);
    let p = Position::initial();
    let legal = p.legal_moves();
    let e = eval.evaluate(&p, &legal).unwrap();
    assert_eq!(e.value, 0.0);
    assert_eq!(e.priors.len(), 44);
    for x in &e.priors {
        assert!((x - 1.0 / 44.0).abs() < 1e-7);
    }
}

#[test]
fn masking_puts_all_mass_on_legal_moves() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut net: Network<f32> = Network::new(Arch::tiny(), MoveTable::global().len(), &mut rng);
    let normal = Normal::new(0.0, 0.1).unwrap();
    for w in net.params_mut() {
        *w = normal.sample(&mut rng);
    }
    let eval = NetEvaluator::new(net);
    let p = random_position(&mut rng, 30);
    let legal = p.legal_moves();
    let e = eval.evaluate(&p, &legal).unwrap();
    assert_eq!(e.priors.len(), legal.len());
    let sum: f32 = e.priors.iter().sum();
    assert!((sum - 1.0).abs() < 1e-5);
    assert!(e.value.abs() <= 1.0);
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let arch = Arch {
        filters: 3,
        layers: 2,
        policy_channels: 2,
        value_hidden: 4,
    };
    let actions = 40;
    let mut net: Network<f64> = Network::new(arch, actions, &mut rng);
    let normal = Normal::new(0.0, 0.3).unwrap();
    for w in net.params_mut() {
        *w = normal.sample(&mut rng);
    }
    let batch: Vec<Sample> = (0..3)
        .map(|i| {
            let p = random_position(&mut rng, 10 + i);
            let mut legal: Vec<u16> = (0..actions as u16).collect();
            legal.shuffle(&mut rng);
            legal.truncate(6);
            let raw: Vec<f32> = (0..6).map(|_| rng.random::<f32>() + 0.05).collect();
            let s: f32 = raw.iter().sum();
            Sample {
                state: encode_state(&p),
                legal,
                pi: raw.iter().map(|x| x / s).collect(),
                z: [1.0, -1.0, 0.0][i],
            }
        })
        .collect();
    let (alpha, beta) = (0.7, 1e-3);
    let (_, grad) = net.loss_and_gradient(&batch, alpha, beta);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let (mut diff_sq, mut norm_sq) = (0.0, 0.0);
    for i in 0..grad.len() {
        let orig = net.params()[i];
        net.params_mut()[i] = orig + h;
        let up = net.loss(&batch, alpha, beta).total;
        net.params_mut()[i] = orig - h;
        let down = net.loss(&batch, alpha, beta).total;
        net.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        diff_sq += (grad[i] - numeric).powi(2);
        norm_sq += grad[i].powi(2) + numeric.powi(2);
        // Below 1e-4 the difference quotient itself is only good to ~1e-10.
        let scale = grad[i].abs().max(numeric.abs());
        if scale > 1e-4 {
            worst = worst.max((grad[i] - numeric).abs() / scale);
        } else {
            assert!((grad[i] - numeric).abs() < 1e-8, "param {i}: {} vs {numeric}", grad[i]);
        }
    }
    assert!((diff_sq / norm_sq).sqrt() < 1e-4);
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn two_hundred_steps_halve_the_loss_on_a_fixed_batch() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let batch = synthetic_batch(&mut rng, 32);
    let net = Network::new(Arch::tiny(), MoveTable::global().len(), &mut rng);
    let config = TrainConfig {
        total_steps: 200,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(net, config);
    let first = trainer.train_step(&batch).unwrap().total;
    for _ in 1..200 {
        trainer.train_step(&batch).unwrap();
    }
    let last = trainer.net.loss(&batch, 1.0, 1e-4).total;
    assert!(last <= 0.5 * first, "loss {first} -> {last}");

    // Priors stay normalised after training.
    let eval = NetEvaluator::new(trainer.net);
    let p = random_position(&mut rng, 12);
    let e = eval.evaluate(&p, &p.legal_moves()).unwrap();
    assert!((e.priors.iter().sum::<f32>() - 1.0).abs() < 1e-5);
}

#[test]
fn empty_batches_are_refused() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net = Network::new(Arch::tiny(), MoveTable::global().len(), &mut rng);
    let mut trainer = Trainer::new(net, TrainConfig::default());
    assert_eq!(trainer.train_step(&[]), Err(EvalError::EmptyBatch));
}

#[test]
fn non_finite_losses_abort() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let batch = synthetic_batch(&mut rng, 2);
    let mut net = Network::new(Arch::tiny(), MoveTable::global().len(), &mut rng);
    net.params_mut()[0] = f32::NAN;
    let mut trainer = Trainer::new(net, TrainConfig::default());
    assert!(matches!(
        trainer.train_step(&batch),
        Err(EvalError::NonFinite { step: 0, .. })
    ));
}

fn turn(mover: Color) -> Turn {
    Turn {
        state: encode_state(&Position::initial()),
        mover,
        legal: vec![0, 1],
        pi: vec![0.5, 0.5],
        v: 0.0,
        p: vec![0.5, 0.5],
    }
}

#[test]
fn replay_buffer_contract() {
    let mut traj = Trajectory::default();
    for i in 0..10 {
        traj.push(turn(if i % 2 == 0 { Color::Red } else { Color::Black }));
    }
    let mut buf = ReplayBuffer::new(100);
    buf.push_all(traj.clone().into_samples(GameResult::RED_WIN));
    assert_eq!(buf.len(), 10);

    let mut small = ReplayBuffer::new(5);
    let samples = traj.into_samples(GameResult::RED_WIN);
    for (i, mut s) in samples.into_iter().enumerate() {
        s.pi = vec![i as f32, 0.0];
        small.push(s);
    }
    assert_eq!(small.len(), 5);
    let kept: Vec<f32> = small.iter().map(|s| s.pi[0]).collect();
    assert_eq!(kept, vec![5.0, 6.0, 7.0, 8.0, 9.0]);

    let a = small.sample(8, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let b = small.sample(8, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        ReplayBuffer::new(3).sample(1, &mut ChaCha8Rng::seed_from_u64(0)),
        Err(EvalError::EmptyReplay)
    );
}

#[test]
fn outcome_signs_alternate_along_a_finished_game() {
    let rules = GameRules::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut p = Position::initial();
    let mut traj = Trajectory::default();
    let result = loop {
        if let Some(r) = p.terminal_result(&rules) {
            break r;
        }
        traj.push(turn(p.side_to_move()));
        let moves = p.legal_moves();
        p = p.apply_move(*moves.choose(&mut rng).unwrap()).unwrap();
    };
    let samples = traj.into_samples(result);
    for pair in samples.windows(2) {
        assert_eq!(pair[0].z + pair[1].z, 0.0);
        assert_eq!(pair[0].z.abs(), result.score_red.abs() as f32);
    }
}

#[test]
fn checkpoints_round_trip_and_refuse_damage() {
    let dir = tempfile::tempdir().unwrap();
    let table = MoveTable::global();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut net: Network<f32> = Network::new(Arch::tiny(), table.len(), &mut rng);
    net.params_mut()[7] = 0.125;
    let ck = Checkpoint::from_network(&net, 400);
    let path = dir.path().join("net.ckpt");
    ck.save(&path, table).unwrap();
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1, "no temporary file left behind");
    let back = Checkpoint::load(&path, table).unwrap();
    assert_eq!(back, ck);
    assert_eq!(back.clone().into_network(table).unwrap().params(), net.params());

    let bytes = ck.to_bytes(table);
    let mut flipped = bytes.clone();
    flipped[200] ^= 0x40;
    assert!(matches!(
        Checkpoint::from_bytes(&flipped, table),
        Err(CheckpointError::ChecksumMismatch)
    ));
    let mut future = bytes.clone();
    future[8..12].copy_from_slice(&2u32.to_le_bytes());
    assert!(matches!(
        Checkpoint::from_bytes(&future, table),
        Err(CheckpointError::UnsupportedVersion(2))
    ));
    assert!(matches!(
        Checkpoint::from_bytes(&bytes[..bytes.len() - 10], table),
        Err(CheckpointError::Truncated { .. })
    ));
    assert!(matches!(
        Checkpoint::from_bytes(&bytes[..30], table),
        Err(CheckpointError::Truncated { .. })
    ));
    let mut other_table = bytes.clone();
    other_table[40] ^= 1;
    assert!(matches!(
        Checkpoint::from_bytes(&other_table, table),
        Err(CheckpointError::MoveTableMismatch)
    ));
    assert!(matches!(
        Checkpoint::from_bytes(b"not a checkpoint", table),
        Err(CheckpointError::BadMagic)
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn action_indices_round_trip(i in 0usize..2086) {
        let t = MoveTable::global();
        let m: Move = t.move_of(i).unwrap();
        prop_assert_eq!(t.index_of(m), Some(i));
        prop_assert_eq!(t.oriented_index(m.rotated(), Color::Black), Some(i));
    }

    #[test]
    fn softmax_is_a_distribution(logits in proptest::collection::vec(-50.0f64..50.0, 1..40)) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn train_steps_keep_priors_normalised(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch = synthetic_batch(&mut rng, 4);
        let net = Network::new(Arch { filters: 8, layers: 1, policy_channels: 2, value_hidden: 8 }, MoveTable::global().len(), &mut rng);
        let mut trainer = Trainer::new(net, TrainConfig::default());
        for _ in 0..3 {
            trainer.train_step(&batch).unwrap();
        }
        let eval = NetEvaluator::new(trainer.net);
        let p = random_position(&mut rng, 7);
        let e = eval.evaluate(&p, &p.legal_moves()).unwrap();
        prop_assert!((e.priors.iter().sum::<f32>() - 1.0).abs() < 1e-5);
        prop_assert!(e.value.abs() <= 1.0);
    }
}
