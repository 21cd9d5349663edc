//! The analysis and evaluation subcommands as library functions.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use nalgebra::DMatrix;
use xqlab::analysis::{
    bins_for_records, build_payoff_from_records, cross_payoff, gamescape_embedding, inliers, nash_clustering,
    read_jsonl, rp_elo, rpp_detailed, rps_cycles, spinning_top_profile, write_profile_csv, AnalysisError,
    NashClustering, RpElo,
};
use xqlab::evaluator::NetEvaluator;
use xqlab::mcts::{play_game, MctsPlayer, RandomPlayer, SearchConfig};
use xqlab::nash::{NashSolver, PayoffMatrix};
use xqlab::populationer::PopulationManifest;
use xqlab::{Color, Position};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{load_network, NetworkEngine};
use crate::config::AnalysisConfig;

fn csv_writer(path: &Path) -> anyhow::Result<csv::Writer<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::Writer::from_writer(file))
}

/// Reads rated game records and writes `payoff.csv`, `clustering.csv`,
/// `cycles.csv`, `profile.csv` and, with at least three bins,
/// `embedding.csv` and `embedding_fit.csv` into `out_dir`. Returns the
/// files written.
pub fn analyze(records: &Path, out_dir: &Path, cfg: &AnalysisConfig, solver: &NashSolver) -> anyhow::Result<Vec<PathBuf>> {
    let file = File::open(records).with_context(|| format!("opening {}", records.display()))?;
    let recs = read_jsonl(BufReader::new(file))?;
    if recs.is_empty() {
        bail!("{} holds no records", records.display());
    }
    let bins = bins_for_records(&recs, cfg.bin_width);
    let payoff = build_payoff_from_records(&recs, &bins, cfg.bin_mode)?;
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let path = out_dir.join("payoff.csv");
    payoff.save(&path)?;
    written.push(path);

    let m = payoff.values();
    let clustering = match nash_clustering(m, solver) {
        Ok(c) => c,
        Err(AnalysisError::Clustering { partial, source }) => {
            log::warn!("Nash clustering stopped early ({source}); writing the clusters found so far");
            partial
        }
        Err(e) => return Err(e.into()),
    };
    let path = out_dir.join("clustering.csv");
    write_clustering(&path, &clustering, payoff.labels())?;
    written.push(path);

    let cycles = rps_cycles(m);
    let path = out_dir.join("cycles.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["label", "rps_cycles"])?;
    for (l, c) in payoff.labels().iter().zip(&cycles.diag) {
        w.write_record([l.clone(), c.to_string()])?;
    }
    w.write_record(["total".to_string(), cycles.total.to_string()])?;
    w.flush()?;
    written.push(path);

    let ratings: Vec<f64> = bins.iter().map(|b| b.midpoint()).collect();
    if clustering.is_partition_of(ratings.len()) {
        let rows = spinning_top_profile(&ratings, &bins, &clustering, &cycles)?;
        let path = out_dir.join("profile.csv");
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_profile_csv(file, &rows)?;
        written.push(path);
    } else {
        log::warn!("clustering is incomplete; profile.csv not written");
    }

    if payoff.len() >= 3 {
        let g = gamescape_embedding(m, cfg.z_cutoff)?;
        let kept = inliers(&g.points, cfg.z_cutoff);
        let path = out_dir.join("embedding.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["label", "x", "y", "inlier"])?;
        for (i, (l, p)) in payoff.labels().iter().zip(&g.points).enumerate() {
            w.write_record([l.clone(), p[0].to_string(), p[1].to_string(), kept.contains(&i).to_string()])?;
        }
        w.flush()?;
        written.push(path);
        if let Some(fit) = g.fit {
            let path = out_dir.join("embedding_fit.csv");
            let mut w = csv_writer(&path)?;
            w.write_record(["c0", "c1", "c2", "rotation"])?;
            let c = fit.coefficients;
            w.write_record([c[0], c[1], c[2], g.rotation].map(|x| x.to_string()))?;
            w.flush()?;
            written.push(path);
        }
    }
    Ok(written)
}

fn write_clustering(path: &Path, c: &NashClustering, labels: &[String]) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["cluster", "index", "label"])?;
    for (ci, members) in c.clusters.iter().enumerate() {
        for &i in members {
            w.write_record([ci.to_string(), i.to_string(), labels[i].clone()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// How evaluation games are played.
#[derive(Clone, Debug)]
pub struct MatchSettings {
    pub search: SearchConfig,
    pub games_per_pair: usize,
    /// Root noise and sampled opening moves instead of greedy play.
    pub stochastic: bool,
    pub seed: u64,
}

fn manifest_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn load_manifest(path: &Path) -> anyhow::Result<PopulationManifest> {
    PopulationManifest::load(path).with_context(|| format!("loading population {}", path.display()))
}

#[derive(Clone, Debug)]
pub struct RppReport {
    pub value: f64,
    pub payoff: DMatrix<f64>,
    pub labels_a: Vec<String>,
    pub labels_b: Vec<String>,
    pub mix_a: Vec<f64>,
    pub mix_b: Vec<f64>,
}

/// Relative population performance of population A against B from a
/// cross-play payoff matrix.
pub fn evaluate_rpp(pop_a: &Path, pop_b: &Path, m: &MatchSettings, solver: &NashSolver) -> anyhow::Result<RppReport> {
    let (a, b) = (load_manifest(pop_a)?, load_manifest(pop_b)?);
    let mut engine = NetworkEngine::new(m.search.clone(), m.stochastic, m.seed);
    let la = engine.insert_manifest(&a, "A:", &manifest_dir(pop_a))?;
    let lb = engine.insert_manifest(&b, "B:", &manifest_dir(pop_b))?;
    if la.is_empty() || lb.is_empty() {
        bail!("both populations need at least one agent");
    }
    let payoff = cross_payoff(&la, &lb, m.games_per_pair, &mut engine)?;
    let sol = rpp_detailed(&payoff, solver)?;
    Ok(RppReport {
        value: sol.value,
        payoff,
        labels_a: a.labels(),
        labels_b: b.labels(),
        mix_a: sol.x,
        mix_b: sol.y,
    })
}

/// Relative population Elo of a challenger checkpoint against a
/// population.
pub fn evaluate_rp_elo(pop: &Path, challenger: &Path, m: &MatchSettings, k: f64) -> anyhow::Result<RpElo> {
    let manifest = load_manifest(pop)?;
    let mut engine = NetworkEngine::new(m.search.clone(), m.stochastic, m.seed);
    let labels = engine.insert_manifest(&manifest, "", &manifest_dir(pop))?;
    let name = "challenger";
    if engine.contains(name) {
        bail!("the population already has an agent called {name:?}");
    }
    engine.insert(name, std::sync::Arc::new(load_network(challenger)?));
    Ok(rp_elo(&labels, name, m.games_per_pair, k, &mut engine)?)
}

#[derive(Clone, Debug)]
pub struct ExploitabilityReport {
    /// Best payoff any responder achieves against the population's Nash
    /// mixture. A lower bound on the mixture's exploitability.
    pub lower_bound: f64,
    pub best_responder: String,
    /// Per-responder payoff against the mixture.
    pub responses: Vec<(String, f64)>,
    pub mixture: Vec<(String, f64)>,
}

/// Plays every responder against every population member and scores it
/// against the population's last Nash distribution (uniform when the
/// manifest has none).
pub fn evaluate_exploitability(pop: &Path, responders: &Path, m: &MatchSettings) -> anyhow::Result<ExploitabilityReport> {
    let (p, r) = (load_manifest(pop)?, load_manifest(responders)?);
    let mut engine = NetworkEngine::new(m.search.clone(), m.stochastic, m.seed);
    let lp = engine.insert_manifest(&p, "P:", &manifest_dir(pop))?;
    let lr = engine.insert_manifest(&r, "R:", &manifest_dir(responders))?;
    if lp.is_empty() || lr.is_empty() {
        bail!("both populations need at least one agent");
    }
    let labels = p.labels();
    let mut mix: Vec<f64> = labels
        .iter()
        .map(|l| p.nash.iter().find(|(n, _)| n == l).map_or(0.0, |&(_, q)| q))
        .collect();
    let total: f64 = mix.iter().sum();
    if total > 0.0 {
        mix.iter_mut().for_each(|q| *q /= total);
    } else {
        log::warn!("population has no Nash distribution; using the uniform mixture");
        mix = vec![1.0 / labels.len() as f64; labels.len()];
    }
    let payoff = cross_payoff(&lr, &lp, m.games_per_pair, &mut engine)?;
    let responses: Vec<(String, f64)> = r
        .labels()
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, (0..lp.len()).map(|j| payoff[(i, j)] * mix[j]).sum()))
        .collect();
    let (best_responder, lower_bound) = responses
        .iter()
        .cloned()
        .reduce(|a, b| if b.1 > a.1 { b } else { a })
        .expect("responders are non-empty");
    Ok(ExploitabilityReport {
        lower_bound,
        best_responder,
        responses,
        mixture: labels.into_iter().zip(mix).collect(),
    })
}

/// Writes a labelled rectangular matrix as CSV: a header of column labels,
/// then one row per row label.
pub fn write_cross_csv(path: &Path, rows: &[String], cols: &[String], m: &DMatrix<f64>) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(std::iter::once("row").chain(cols.iter().map(String::as_str)))?;
    for (i, r) in rows.iter().enumerate() {
        w.write_record(std::iter::once(r.clone()).chain((0..m.ncols()).map(|j| m[(i, j)].to_string())))?;
    }
    w.flush()?;
    Ok(())
}

/// Payoff matrix of a population's buffered games.
pub fn population_payoff(pop: &Path, solver: NashSolver) -> anyhow::Result<PayoffMatrix> {
    let p = load_manifest(pop)?.into_populationer(solver)?;
    Ok(p.payoff()?)
}

/// Results of an agent against a uniformly random mover, from the agent's
/// side: wins, draws, losses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VersusRandom {
    pub wins: u32,
    pub draws: u32,
    pub losses: u32,
}

impl VersusRandom {
    pub fn games(&self) -> u32 {
        self.wins + self.draws + self.losses
    }

    pub fn win_rate(&self) -> f64 {
        self.wins as f64 / self.games().max(1) as f64
    }
}

/// Plays `games` greedy games of a checkpoint against [`RandomPlayer`],
/// the agent taking Red in even-numbered games.
pub fn versus_random(checkpoint: &Path, search: &SearchConfig, games: u32, seed: u64) -> anyhow::Result<VersusRandom> {
    let agent = MctsPlayer::evaluation(NetEvaluator::new(load_network(checkpoint)?), search.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = VersusRandom::default();
    for g in 0..games {
        let (color, (result, _)) = if g % 2 == 0 {
            (Color::Red, play_game(&agent, &RandomPlayer, &Position::initial(), &search.rules, &mut rng)?)
        } else {
            (Color::Black, play_game(&RandomPlayer, &agent, &Position::initial(), &search.rules, &mut rng)?)
        };
        match result.score_for(color) {
            1 => r.wins += 1,
            0 => r.draws += 1,
            _ => r.losses += 1,
        }
    }
    Ok(r)
}
