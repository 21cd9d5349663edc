//! Games between checkpointed agents.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xqlab::analysis::MatchEngine;
use xqlab::evaluator::{Checkpoint, MoveTable, NetEvaluator, Network};
use xqlab::mcts::{play_game, MctsPlayer, SearchConfig, SelectMode};
use xqlab::populationer::PopulationManifest;
use xqlab::Position;

pub fn load_network(path: &Path) -> anyhow::Result<Network<f32>> {
    let table = MoveTable::global();
    let ckpt = Checkpoint::load(path, table).with_context(|| format!("loading checkpoint {}", path.display()))?;
    Ok(ckpt.into_network(table)?)
}

/// Plays games between named networks with tree search on both sides.
pub struct NetworkEngine {
    agents: HashMap<String, Arc<Network<f32>>>,
    pub search: SearchConfig,
    /// Sample moves with root noise and the temperature schedule instead of
    /// playing the most visited move.
    pub stochastic: bool,
    rng: ChaCha8Rng,
}

impl NetworkEngine {
    pub fn new(search: SearchConfig, stochastic: bool, seed: u64) -> NetworkEngine {
        NetworkEngine {
            agents: HashMap::new(),
            search,
            stochastic,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn insert(&mut self, label: impl Into<String>, net: Arc<Network<f32>>) {
        self.agents.insert(label.into(), net);
    }

    pub fn contains(&self, label: &str) -> bool {
        self.agents.contains_key(label)
    }

    /// Registers every agent of `manifest` under `prefix + label`.
    pub fn insert_manifest(&mut self, manifest: &PopulationManifest, prefix: &str, base: &Path) -> anyhow::Result<Vec<String>> {
        let mut labels = Vec::new();
        for a in &manifest.agents {
            let path = a
                .checkpoint
                .as_ref()
                .ok_or_else(|| anyhow!("agent {} has no checkpoint", a.label))?;
            let path = if path.is_relative() { base.join(path) } else { path.clone() };
            let label = format!("{prefix}{}", a.label);
            self.insert(label.clone(), Arc::new(load_network(&path)?));
            labels.push(label);
        }
        Ok(labels)
    }

    fn player(&self, label: &str) -> Result<MctsPlayer<NetEvaluator>, String> {
        let net = self.agents.get(label).ok_or_else(|| format!("unknown agent {label:?}"))?;
        let mut p = MctsPlayer::evaluation(NetEvaluator::from_shared(net.clone()), self.search.clone());
        if self.stochastic {
            p.mode = SelectMode::Training;
            p.noise = true;
        }
        Ok(p)
    }
}

impl MatchEngine for NetworkEngine {
    fn play(&mut self, red: &str, black: &str) -> Result<i8, String> {
        let (r, b) = (self.player(red)?, self.player(black)?);
        let (result, _) = play_game(&r, &b, &Position::initial(), &self.search.rules, &mut self.rng)
            .map_err(|e| e.to_string())?;
        Ok(result.score_red)
    }
}
