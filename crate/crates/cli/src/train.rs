//! Self-play training with periodic population rotations.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::Context;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xqlab::analysis::GameRecord;
use xqlab::evaluator::{Checkpoint, LossParts, MoveTable, NetEvaluator, Network, ReplayBuffer, Trainer};
use xqlab::mcts::self_play_game;
use xqlab::populationer::{Agent, OpponentChoice, PopulationManifest, Populationer};
use xqlab::Color;

use crate::agents::NetworkEngine;
use crate::config::{OpponentResample, RunConfig};

/// Environment variable with a wall-clock training budget in seconds.
pub const TRAIN_SECS_ENV: &str = "XQLAB_TRAIN_SECS";

/// Training stops as soon as any limit is reached. Limits are checked
/// between games.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Budget {
    pub max_steps: Option<u64>,
    pub max_games: Option<u64>,
    pub max_time: Option<Duration>,
}

impl Budget {
    /// Reads the time limit from [`TRAIN_SECS_ENV`] when it is set.
    pub fn from_env() -> Budget {
        let secs = std::env::var(TRAIN_SECS_ENV).ok().and_then(|s| s.parse::<f64>().ok());
        Budget {
            max_time: secs.map(Duration::from_secs_f64),
            ..Budget::default()
        }
    }

    fn exhausted(&self, steps: u64, games: u64, elapsed: Duration) -> bool {
        self.max_steps.is_some_and(|m| steps >= m)
            || self.max_games.is_some_and(|m| games >= m)
            || self.max_time.is_some_and(|m| elapsed >= m)
    }
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub games: u64,
    pub steps: u64,
    pub rotations: usize,
    pub samples: usize,
    /// Mean loss over the last 100 steps.
    pub recent_loss: Option<LossParts>,
    pub latest_checkpoint: PathBuf,
    pub manifest: PathBuf,
    pub elapsed: Duration,
    /// Game results from the learner's side: wins, draws, losses.
    pub results: [u64; 3],
}

/// Per-game random source, independent of how games are scheduled.
fn game_rng(seed: u64, game: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ game)
}

fn mean_loss(window: &[LossParts]) -> Option<LossParts> {
    if window.is_empty() {
        return None;
    }
    let n = window.len() as f64;
    let mut out = LossParts::default();
    for l in window {
        out.value += l.value / n;
        out.policy += l.policy / n;
        out.l2 += l.l2 / n;
        out.total += l.total / n;
    }
    Some(out)
}

struct Opponents {
    labels: Vec<String>,
    nets: Vec<Arc<Network<f32>>>,
    weights: Vec<f64>,
}

impl Opponents {
    fn pick(&self, rng: &mut ChaCha8Rng) -> Option<(String, Arc<Network<f32>>)> {
        let d = WeightedIndex::new(&self.weights).ok()?;
        let i = d.sample(rng);
        Some((self.labels[i].clone(), self.nets[i].clone()))
    }
}

struct Finished {
    game: u64,
    learner: Color,
    opponent: Option<String>,
    outcome: xqlab::mcts::SelfPlayGame,
}

fn play_one(
    cfg: &RunConfig,
    learner: &Arc<Network<f32>>,
    opponent: Option<(String, Arc<Network<f32>>)>,
    game: u64,
    mut rng: ChaCha8Rng,
) -> anyhow::Result<Finished> {
    let me = NetEvaluator::from_shared(learner.clone());
    let learner_color = if game % 2 == 0 { Color::Red } else { Color::Black };
    let (label, outcome) = match opponent {
        None => (None, self_play_game(&me, &me, &cfg.search, &mut rng)?),
        Some((label, net)) => {
            let them = NetEvaluator::from_shared(net);
            let g = match learner_color {
                Color::Red => self_play_game(&me, &them, &cfg.search, &mut rng)?,
                Color::Black => self_play_game(&them, &me, &cfg.search, &mut rng)?,
            };
            (Some(label), g)
        }
    };
    Ok(Finished {
        game,
        learner: learner_color,
        opponent: label,
        outcome,
    })
}

/// Runs self-play training into `out_dir` until `budget` runs out.
///
/// The learner plays self-play games, against itself until the first
/// rotation and afterwards against opponents drawn from the population's
/// Nash distribution. Only the learner's turns are kept as training data
/// when the opponent is another agent. Every
/// `training.rotation_every_games` games the learner is snapshotted and
/// handed to the populationer. A rolling checkpoint is written every
/// `training.checkpoint_every_steps` optimizer steps and at the end.
pub fn train(cfg: &RunConfig, out_dir: &Path, budget: Budget) -> anyhow::Result<TrainReport> {
    cfg.validate()?;
    let start = Instant::now();
    let table = MoveTable::global();
    for d in ["checkpoints", "agents"] {
        fs::create_dir_all(out_dir.join(d)).with_context(|| format!("creating {}", out_dir.display()))?;
    }
    xqlab::evaluator::write_atomic(&out_dir.join("config.toml"), cfg.to_toml().as_bytes())?;
    let mut games_log = OpenOptions::new()
        .create(true)
        .truncate(true)
        .write(true)
        .open(out_dir.join("games.jsonl"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let net = Network::<f32>::new(cfg.arch, table.len(), &mut rng);
    let mut trainer = Trainer::new(net, cfg.train.clone());
    let mut replay = ReplayBuffer::new(cfg.training.replay_capacity);
    let mut pop = Populationer::new(cfg.populationer.clone(), cfg.nash);
    let mut eval_search = cfg.search.clone();
    eval_search.simulations = cfg.training.eval_simulations;
    let mut engine = NetworkEngine::new(eval_search, true, cfg.seed ^ 0xe7a1);
    let mut opponents: Option<Opponents> = None;
    let mut fixed_opponent: Option<(String, Arc<Network<f32>>)> = None;
    let mut pool: HashMap<String, Arc<Network<f32>>> = HashMap::new();

    let latest = out_dir.join("checkpoints").join("latest.xqn");
    let manifest_path = out_dir.join("population.json");
    let mut games = 0u64;
    let mut losses: Vec<LossParts> = Vec::new();
    let mut results = [0u64; 3];
    let mut samples = 0usize;

    while !budget.exhausted(trainer.steps_taken(), games, start.elapsed()) {
        let learner = Arc::new(trainer.net.clone());
        let batch: Vec<(u64, Option<(String, Arc<Network<f32>>)>, ChaCha8Rng)> = (0..cfg.workers as u64)
            .map(|i| {
                let g = games + i;
                let mut r = game_rng(cfg.seed, g);
                let opp = match cfg.training.opponent_resample {
                    OpponentResample::PerGame => opponents.as_ref().and_then(|o| o.pick(&mut r)),
                    OpponentResample::PerRotation => fixed_opponent.clone(),
                };
                (g, opp, r)
            })
            .collect();
        let finished: Vec<anyhow::Result<Finished>> = std::thread::scope(|s| {
            let handles: Vec<_> = batch
                .into_iter()
                .map(|(g, opp, r)| {
                    let learner = &learner;
                    s.spawn(move || play_one(cfg, learner, opp, g, r))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("self-play thread panicked")).collect()
        });

        for f in finished {
            let f = f?;
            let result = f.outcome.result;
            let score = result.score_for(f.learner);
            results[(1 - score) as usize] += 1;
            let (red, black) = match (f.learner, &f.opponent) {
                (_, None) => ("learner".to_string(), "learner".to_string()),
                (Color::Red, Some(o)) => ("learner".to_string(), o.clone()),
                (Color::Black, Some(o)) => (o.clone(), "learner".to_string()),
            };
            let mut rec = GameRecord::new(&red, &black, result.score_red);
            rec.moves = Some(f.outcome.moves.iter().map(|m| m.to_string()).collect());
            writeln!(games_log, "{}", serde_json::to_string(&rec)?)?;

            let keep_all = f.opponent.is_none();
            let new: Vec<_> = f
                .outcome
                .trajectory
                .into_samples(result)
                .into_iter()
                .enumerate()
                .filter(|(ply, _)| keep_all || (*ply % 2 == 0) == (f.learner == Color::Red))
                .map(|(_, s)| s)
                .collect();
            samples += new.len();
            replay.push_all(new);
            games = f.game + 1;

            if replay.len() >= cfg.training.min_replay.max(cfg.train.batch_size) {
                for _ in 0..cfg.training.steps_per_game {
                    let batch = replay.sample(cfg.train.batch_size, &mut rng)?;
                    losses.push(trainer.train_step(&batch)?);
                    let step = trainer.steps_taken();
                    if step % cfg.training.checkpoint_every_steps == 0 {
                        let ckpt = Checkpoint::from_network(&trainer.net, step);
                        ckpt.save(&out_dir.join("checkpoints").join(format!("step-{step:08}.xqn")), table)?;
                        ckpt.save(&latest, table)?;
                    }
                }
            }

            if games % cfg.training.rotation_every_games == 0 {
                let label = format!("a{:04}-s{}", pop.history.len(), trainer.steps_taken());
                let rel = PathBuf::from("agents").join(format!("{label}.xqn"));
                Checkpoint::from_network(&trainer.net, trainer.steps_taken()).save(&out_dir.join(&rel), table)?;
                let snapshot = Arc::new(trainer.net.clone());
                engine.insert(label.clone(), snapshot.clone());
                pool.insert(label.clone(), snapshot);
                let choice = pop.step(Agent::new(label).with_checkpoint(rel), &mut engine, &mut rng)?;
                log::info!(
                    "rotation {}: population {:?}, opponent {}",
                    pop.history.len(),
                    pop.population.labels(),
                    choice.label
                );
                pool.retain(|l, _| pop.population.contains(l));
                fixed_opponent = Some((choice.label.clone(), network_for(&pool, &choice.label)?));
                opponents = Some(opponents_from(&choice, &pool)?);
                PopulationManifest::from_populationer(&pop).save(&manifest_path)?;
            }
        }
        log::info!(
            "games {games}, steps {}, replay {}, loss {:?}",
            trainer.steps_taken(),
            replay.len(),
            losses.last().map(|l| l.total)
        );
    }

    Checkpoint::from_network(&trainer.net, trainer.steps_taken()).save(&latest, table)?;
    PopulationManifest::from_populationer(&pop).save(&manifest_path)?;
    let tail = losses.len().saturating_sub(100);
    Ok(TrainReport {
        games,
        steps: trainer.steps_taken(),
        rotations: pop.history.len(),
        samples,
        recent_loss: mean_loss(&losses[tail..]),
        latest_checkpoint: latest,
        manifest: manifest_path,
        elapsed: start.elapsed(),
        results,
    })
}

fn network_for(pool: &HashMap<String, Arc<Network<f32>>>, label: &str) -> anyhow::Result<Arc<Network<f32>>> {
    pool.get(label)
        .cloned()
        .with_context(|| format!("opponent {label} is not in the population"))
}

fn opponents_from(choice: &OpponentChoice, pool: &HashMap<String, Arc<Network<f32>>>) -> anyhow::Result<Opponents> {
    let mut o = Opponents {
        labels: Vec::new(),
        nets: Vec::new(),
        weights: Vec::new(),
    };
    for (label, q) in &choice.distribution {
        o.labels.push(label.clone());
        o.nets.push(network_for(pool, label)?);
        o.weights.push(*q);
    }
    Ok(o)
}
