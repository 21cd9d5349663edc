//! `xqlab` command-line entry point.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 bad
//! configuration.

use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xqlab::analysis::BinMode;
use xqlab::evaluator::{Evaluator, NetEvaluator, UniformEvaluator};
use xqlab::mcts::{search_deterministic, select_move, SelectMode};
use xqlab::xiangqi::{chinese_name, perft};
use xqlab::{Color, Position};
use xqlab_cli::agents::load_network;
use xqlab_cli::commands::{self, MatchSettings};
use xqlab_cli::config::{ConfigError, RunConfig};
use xqlab_cli::exit;
use xqlab_cli::service::{serve, AppState, ServiceConfig};
use xqlab_cli::train::{train, Budget};

#[derive(Parser)]
#[command(name = "xqlab", version, about = "Xiangqi population training and meta-game analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML run configuration. Missing keys take the preset's values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base preset when no file is given.
    #[arg(long, default_value = "tiny")]
    preset: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulations per move.
    #[arg(long)]
    simulations: Option<u32>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::preset(&self.preset)?,
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.simulations {
            cfg.search.simulations = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Self-play training with population rotations.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory (default: the configured data directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        max_steps: Option<u64>,
        #[arg(long)]
        max_games: Option<u64>,
        /// Wall-clock budget in seconds. Overrides XQLAB_TRAIN_SECS.
        #[arg(long)]
        max_secs: Option<f64>,
    },
    /// Meta-game analysis of rated game records (JSON lines).
    Analyze {
        #[command(flatten)]
        config: ConfigArgs,
        records: PathBuf,
        #[arg(long, default_value = "analysis")]
        out: PathBuf,
        #[arg(long)]
        bin_width: Option<f64>,
        #[arg(long, value_enum)]
        bin_mode: Option<BinModeArg>,
    },
    /// Evaluate populations and agents by playing games.
    Evaluate {
        #[command(subcommand)]
        what: Evaluate,
    },
    /// Play against an agent in the terminal.
    Play {
        #[command(flatten)]
        config: ConfigArgs,
        /// Agent checkpoint. Without one the engine searches with uniform
        /// priors and zero values.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "red")]
        color: ColorArg,
    },
    /// Serve the HTTP play API.
    Serve {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Idle session lifetime in seconds.
        #[arg(long, default_value_t = 3600)]
        ttl: u64,
    },
    /// Count leaf nodes of the legal move tree.
    Perft {
        depth: u32,
        #[arg(long)]
        fen: Option<String>,
        /// Print the count below each root move.
        #[arg(long)]
        divide: bool,
    },
}

#[derive(Args, Clone)]
struct MatchArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Games per pairing, split evenly between colours.
    #[arg(long, default_value_t = 10)]
    games: usize,
    /// Sample moves with root noise instead of playing greedily.
    #[arg(long)]
    stochastic: bool,
}

impl MatchArgs {
    fn settings(&self) -> Result<(RunConfig, MatchSettings), ConfigError> {
        let cfg = self.config.load()?;
        let m = MatchSettings {
            search: cfg.search.clone(),
            games_per_pair: self.games,
            stochastic: self.stochastic,
            seed: cfg.seed,
        };
        Ok((cfg, m))
    }
}

#[derive(Subcommand)]
enum Evaluate {
    /// Relative population performance of population A against B.
    Rpp {
        #[command(flatten)]
        m: MatchArgs,
        pop_a: PathBuf,
        pop_b: PathBuf,
        /// Write the cross payoff matrix here as CSV.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Relative population Elo of a challenger checkpoint.
    RpElo {
        #[command(flatten)]
        m: MatchArgs,
        population: PathBuf,
        challenger: PathBuf,
    },
    /// Lower bound on the exploitability of a population's Nash mixture,
    /// found with a set of responder agents.
    Exploitability {
        #[command(flatten)]
        m: MatchArgs,
        population: PathBuf,
        responders: PathBuf,
    },
    /// Win rate of a checkpoint against a uniformly random mover.
    Random {
        #[command(flatten)]
        config: ConfigArgs,
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        games: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BinModeArg {
    Literal,
    Midpoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum ColorArg {
    Red,
    Black,
}

enum Failure {
    Config(ConfigError),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(cli.command) {
        Ok(()) => exit::OK,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            exit::CONFIG
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            exit::FAILURE
        }
    };
    std::process::exit(code);
}

fn evaluator_for(checkpoint: Option<&Path>) -> anyhow::Result<Arc<dyn Evaluator>> {
    Ok(match checkpoint {
        Some(p) => Arc::new(NetEvaluator::new(load_network(p)?)),
        None => Arc::new(UniformEvaluator),
    })
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Train {
            config,
            out,
            workers,
            max_steps,
            max_games,
            max_secs,
        } => {
            let mut cfg = config.load()?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            cfg.validate()?;
            let mut budget = Budget::from_env();
            budget.max_steps = max_steps;
            budget.max_games = max_games;
            if let Some(s) = max_secs {
                budget.max_time = Some(Duration::from_secs_f64(s));
            }
            if budget == Budget::default() {
                return Err(anyhow::anyhow!("no training budget: pass --max-steps, --max-games or --max-secs").into());
            }
            let out = out.unwrap_or_else(|| cfg.data_dir.clone());
            let r = train(&cfg, &out, budget)?;
            println!(
                "games {} steps {} rotations {} samples {} in {:.1}s",
                r.games,
                r.steps,
                r.rotations,
                r.samples,
                r.elapsed.as_secs_f64()
            );
            println!("learner results w/d/l {}/{}/{}", r.results[0], r.results[1], r.results[2]);
            if let Some(l) = r.recent_loss {
                println!("recent loss {:.4} (value {:.4}, policy {:.4})", l.total, l.value, l.policy);
            }
            println!("checkpoint {}", r.latest_checkpoint.display());
            println!("population {}", r.manifest.display());
        }
        Command::Analyze {
            config,
            records,
            out,
            bin_width,
            bin_mode,
        } => {
            let mut cfg = config.load()?;
            if let Some(w) = bin_width {
                cfg.analysis.bin_width = w;
            }
            if let Some(m) = bin_mode {
                cfg.analysis.bin_mode = match m {
                    BinModeArg::Literal => BinMode::Literal,
                    BinModeArg::Midpoint => BinMode::Midpoint,
                };
            }
            cfg.validate()?;
            for f in commands::analyze(&records, &out, &cfg.analysis, &cfg.nash)? {
                println!("{}", f.display());
            }
        }
        Command::Evaluate { what } => evaluate(what)?,
        Command::Play {
            config,
            checkpoint,
            color,
        } => {
            let cfg = config.load()?;
            let eval = evaluator_for(checkpoint.as_deref())?;
            let human = match color {
                ColorArg::Red => Color::Red,
                ColorArg::Black => Color::Black,
            };
            play(&cfg, eval.as_ref(), human)?;
        }
        Command::Serve {
            config,
            checkpoint,
            addr,
            ttl,
        } => {
            let cfg = config.load()?;
            let mut sc = ServiceConfig::default();
            sc.search.simulations = cfg.search.simulations;
            sc.search.c_puct = cfg.search.c_puct;
            sc.search.rules = cfg.search.rules.clone();
            sc.ttl = Duration::from_secs(ttl);
            let state = AppState::new(evaluator_for(checkpoint.as_deref())?, sc);
            let rt = tokio::runtime::Runtime::new().context("starting the async runtime")?;
            rt.block_on(serve(state, addr))?;
        }
        Command::Perft { depth, fen, divide } => {
            let pos = match fen {
                Some(f) => Position::parse_fen(&f).context("parsing --fen")?,
                None => Position::initial(),
            };
            if divide && depth > 0 {
                let mut total = 0;
                for mv in pos.legal_moves() {
                    let n = perft(&pos.apply_unchecked(mv), depth - 1);
                    println!("{mv}: {n}");
                    total += n;
                }
                println!("total: {total}");
            } else {
                println!("{}", perft(&pos, depth));
            }
        }
    }
    Ok(())
}

fn evaluate(what: Evaluate) -> Result<(), Failure> {
    match what {
        Evaluate::Rpp { m, pop_a, pop_b, matrix } => {
            let (cfg, s) = m.settings()?;
            let r = commands::evaluate_rpp(&pop_a, &pop_b, &s, &cfg.nash)?;
            if let Some(path) = matrix {
                commands::write_cross_csv(&path, &r.labels_a, &r.labels_b, &r.payoff)?;
            }
            println!("rpp {:.6}", r.value);
            for (l, q) in r.labels_a.iter().zip(&r.mix_a) {
                println!("  A {l} {q:.4}");
            }
            for (l, q) in r.labels_b.iter().zip(&r.mix_b) {
                println!("  B {l} {q:.4}");
            }
        }
        Evaluate::RpElo { m, population, challenger } => {
            let (cfg, s) = m.settings()?;
            let r = commands::evaluate_rp_elo(&population, &challenger, &s, cfg.analysis.elo_k)?;
            for (name, rating) in &r.ratings {
                println!("{name} {rating:.2}");
            }
            for (pair, msg) in &r.incomplete {
                eprintln!("warning: pairing {pair} incomplete: {msg}");
            }
        }
        Evaluate::Exploitability { m, population, responders } => {
            let (_, s) = m.settings()?;
            let r = commands::evaluate_exploitability(&population, &responders, &s)?;
            println!("exploitability >= {:.6} (best responder {})", r.lower_bound, r.best_responder);
            for (l, v) in &r.responses {
                println!("  {l} {v:.4}");
            }
        }
        Evaluate::Random { config, checkpoint, games } => {
            let cfg = config.load()?;
            let r = commands::versus_random(&checkpoint, &cfg.search, games, cfg.seed)?;
            println!(
                "wins {} draws {} losses {} win rate {:.3}",
                r.wins,
                r.draws,
                r.losses,
                r.win_rate()
            );
        }
    }
    Ok(())
}

fn print_board(pos: &Position) {
    println!();
    for rank in (0..10).rev() {
        let row: String = (0..9)
            .map(|file| {
                let sq = xqlab::Square::new(file, rank).expect("on board");
                pos.piece_at(sq).map_or('.', |p| p.fen_char())
            })
            .collect();
        println!("{rank} {}", row.chars().map(String::from).collect::<Vec<_>>().join(" "));
    }
    println!("  a b c d e f g h i");
}

fn play(cfg: &RunConfig, eval: &dyn Evaluator, human: Color) -> anyhow::Result<()> {
    let mut search = cfg.search.clone();
    search.temperature_plies = 0;
    let rules = search.rules.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pos = Position::initial();
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    loop {
        print_board(&pos);
        if let Some(r) = pos.terminal_result(&rules) {
            println!("game over: {r:?}");
            return Ok(());
        }
        if pos.side_to_move() == human {
            print!("your move> ");
            std::io::stdout().flush()?;
            let Some(line) = lines.next() else {
                return Ok(());
            };
            let line = line?;
            let text = line.trim();
            if text == "quit" {
                return Ok(());
            }
            match pos.apply_text(text) {
                Ok(p) => pos = p,
                Err(e) => println!("{e}"),
            }
        } else {
            let out = search_deterministic(&pos, eval, &search)?;
            let mv = select_move(&out, SelectMode::Evaluation, &mut rng);
            let name = chinese_name(&pos, mv).unwrap_or_default();
            println!("engine plays {mv} {name} (value {:+.3})", out.value);
            pos = pos.apply_move(mv)?;
        }
        if pos.legal_moves().is_empty() && pos.terminal_result(&rules).is_none() {
            bail!("position has no legal moves but is not terminal");
        }
    }
}
