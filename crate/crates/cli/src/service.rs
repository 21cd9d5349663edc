//! HTTP/JSON play and analysis service.
//!
//! | route | effect |
//! |---|---|
//! | `POST /games` | new session; body `{"human_color": "red"\|"black", "simulations": n}`, both optional |
//! | `GET /games/{id}` | FEN, move history, status |
//! | `POST /games/{id}/moves` | body `{"move": "b0c2"}`; replies with the engine's answer and its search |
//! | `GET /games/{id}/analysis` | search of the current position: `v` and the top three candidates |
//! | `POST /games/{id}/restart` | back to the initial position |
//!
//! Errors are `{"error": ...}` with 404 for an unknown session, 422 for an
//! illegal or malformed move (plus `legal_moves`), 409 once the game is
//! over and 400 for a malformed body. Every response carries the current
//! FEN and the engine's last move in 4-character notation.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use xqlab::evaluator::Evaluator;
use xqlab::mcts::{search_deterministic, select_move, SearchConfig, SearchOutput, SelectMode};
use xqlab::xiangqi::chinese_name;
use xqlab::{Color, GameResult, Move, Position};

/// Candidates shown per analysis.
pub const CANDIDATES: usize = 3;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    /// Search used for engine replies and analysis. The simulation count
    /// can be overridden per session.
    pub search: SearchConfig,
    /// Idle sessions older than this are dropped.
    pub ttl: Duration,
    pub max_simulations: u32,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let mut search = SearchConfig::with_simulations(160);
        search.temperature_plies = 0;
        ServiceConfig {
            search,
            ttl: Duration::from_secs(3600),
            max_simulations: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    #[serde(rename = "move")]
    pub mv: String,
    pub name: String,
    /// Visits of this move's edge.
    pub n: u32,
    pub q: f32,
    pub p: f32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisView {
    pub fen: String,
    pub engine_move: Option<String>,
    /// Search value of the position for the side to move, in [-1, 1].
    pub v: f32,
    pub candidates: Vec<CandidateView>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameView {
    pub id: String,
    pub fen: String,
    pub history: Vec<String>,
    /// `ongoing`, `red_win`, `black_win` or `draw`.
    pub status: String,
    pub human_color: String,
    pub side_to_move: String,
    pub engine_move: Option<String>,
    pub legal_moves: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveReply {
    #[serde(flatten)]
    pub game: GameView,
    /// The engine's search behind its reply, if it replied.
    pub analysis: Option<AnalysisView>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct NewGame {
    human_color: Option<String>,
    simulations: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MoveRequest {
    #[serde(rename = "move")]
    mv: String,
}

struct Session {
    id: String,
    position: Position,
    history: Vec<Move>,
    human: Color,
    search: SearchConfig,
    engine_move: Option<Move>,
    /// Analyses keyed by ply.
    analysis: HashMap<u32, AnalysisView>,
}

type SessionRef = Arc<tokio::sync::Mutex<Session>>;

struct Inner {
    eval: Arc<dyn Evaluator>,
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, (SessionRef, Instant)>>,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(eval: Arc<dyn Evaluator>, config: ServiceConfig) -> AppState {
        AppState(Arc::new(Inner {
            eval,
            config,
            sessions: Mutex::new(HashMap::new()),
        }))
    }

    /// Drops sessions idle for longer than the TTL; returns how many.
    pub fn evict_expired(&self) -> usize {
        let ttl = self.0.config.ttl;
        let mut map = self.0.sessions.lock().unwrap();
        let before = map.len();
        map.retain(|_, (_, seen)| seen.elapsed() <= ttl);
        before - map.len()
    }

    pub fn session_count(&self) -> usize {
        self.0.sessions.lock().unwrap().len()
    }

    fn get(&self, id: &str) -> Result<SessionRef, ApiError> {
        self.evict_expired();
        let mut map = self.0.sessions.lock().unwrap();
        let (s, seen) = map.get_mut(id).ok_or_else(|| ApiError::not_found(id))?;
        *seen = Instant::now();
        Ok(s.clone())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/games", post(new_game))
        .route("/games/{id}", get(get_game))
        .route("/games/{id}/moves", post(play_move))
        .route("/games/{id}/analysis", get(analysis))
        .route("/games/{id}/restart", post(restart))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    legal_moves: Option<Vec<String>>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            message: message.into(),
            legal_moves: None,
        }
    }

    fn not_found(id: &str) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, format!("no game {id:?}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = serde_json::json!({ "error": self.message });
        if let Some(l) = self.legal_moves {
            body["legal_moves"] = serde_json::json!(l);
        }
        (self.status, Json(body)).into_response()
    }
}

fn color_name(c: Color) -> &'static str {
    match c {
        Color::Red => "red",
        Color::Black => "black",
    }
}

fn status(position: &Position, search: &SearchConfig) -> (Option<GameResult>, &'static str) {
    match position.terminal_result(&search.rules) {
        None => (None, "ongoing"),
        Some(r) if r.score_red > 0 => (Some(r), "red_win"),
        Some(r) if r.score_red < 0 => (Some(r), "black_win"),
        Some(r) => (Some(r), "draw"),
    }
}

fn view(s: &Session) -> GameView {
    let (result, st) = status(&s.position, &s.search);
    GameView {
        id: s.id.clone(),
        fen: s.position.to_fen(),
        history: s.history.iter().map(|m| m.to_string()).collect(),
        status: st.to_string(),
        human_color: color_name(s.human).to_string(),
        side_to_move: color_name(s.position.side_to_move()).to_string(),
        engine_move: s.engine_move.map(|m| m.to_string()),
        legal_moves: if result.is_none() {
            s.position.legal_moves().iter().map(|m| m.to_string()).collect()
        } else {
            Vec::new()
        },
    }
}

fn analysis_view(position: &Position, out: &SearchOutput, engine_move: Option<Move>) -> AnalysisView {
    AnalysisView {
        fen: position.to_fen(),
        engine_move: engine_move.map(|m| m.to_string()),
        v: out.value,
        candidates: out
            .top_k(CANDIDATES)
            .into_iter()
            .map(|c| CandidateView {
                mv: c.mv.to_string(),
                name: chinese_name(position, c.mv).unwrap_or_else(|| c.mv.to_string()),
                n: c.visits,
                q: c.q,
                p: c.prior,
            })
            .collect(),
    }
}

async fn run_search(state: &AppState, position: Position, search: SearchConfig) -> Result<SearchOutput, ApiError> {
    let eval = state.0.eval.clone();
    tokio::task::spawn_blocking(move || search_deterministic(&position, eval.as_ref(), &search))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
}

/// Lets the engine move if it is its turn; returns the search behind it.
async fn engine_turn(state: &AppState, s: &mut Session) -> Result<Option<AnalysisView>, ApiError> {
    if s.position.side_to_move() == s.human || status(&s.position, &s.search).0.is_some() {
        return Ok(None);
    }
    let out = run_search(state, s.position.clone(), s.search.clone()).await?;
    let mv = select_move(&out, SelectMode::Evaluation, &mut rand::rng());
    let before = s.position.clone();
    s.position = s
        .position
        .apply_move(mv)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    s.history.push(mv);
    s.engine_move = Some(mv);
    let a = analysis_view(&before, &out, Some(mv));
    s.analysis.insert(before.ply(), a.clone());
    Ok(Some(a))
}

fn parse_body<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(|b| b.is_ascii_whitespace()) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed body: {e}")))
}

async fn new_game(State(state): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<MoveReply>), ApiError> {
    let req: NewGame = parse_body(&body)?;
    let human = match req.human_color.as_deref().unwrap_or("red") {
        "red" => Color::Red,
        "black" => Color::Black,
        other => return Err(ApiError::new(StatusCode::BAD_REQUEST, format!("human_color {other:?} is not red or black"))),
    };
    let mut search = state.0.config.search.clone();
    if let Some(n) = req.simulations {
        if n == 0 || n > state.0.config.max_simulations {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                format!("simulations must be in 1..={}", state.0.config.max_simulations),
            ));
        }
        search.simulations = n;
    }
    let id = uuid::Uuid::new_v4().simple().to_string();
    let mut session = Session {
        id: id.clone(),
        position: Position::initial(),
        history: Vec::new(),
        human,
        search,
        engine_move: None,
        analysis: HashMap::new(),
    };
    let analysis = engine_turn(&state, &mut session).await?;
    let reply = MoveReply {
        game: view(&session),
        analysis,
    };
    state.evict_expired();
    state
        .0
        .sessions
        .lock()
        .unwrap()
        .insert(id, (Arc::new(tokio::sync::Mutex::new(session)), Instant::now()));
    Ok((StatusCode::CREATED, Json(reply)))
}

async fn get_game(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<GameView>, ApiError> {
    let s = state.get(&id)?;
    let s = s.lock().await;
    Ok(Json(view(&s)))
}

async fn play_move(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<MoveReply>, ApiError> {
    let s = state.get(&id)?;
    let mut s = s.lock().await;
    if status(&s.position, &s.search).0.is_some() {
        return Err(ApiError::new(StatusCode::CONFLICT, "the game is over"));
    }
    let legal: Vec<String> = s.position.legal_moves().iter().map(|m| m.to_string()).collect();
    let unprocessable = |message: String| ApiError {
        status: StatusCode::UNPROCESSABLE_ENTITY,
        message,
        legal_moves: Some(legal.clone()),
    };
    let req: MoveRequest = serde_json::from_slice(&body).map_err(|e| unprocessable(format!("malformed move request: {e}")))?;
    let mv: Move = req
        .mv
        .parse()
        .map_err(|e: xqlab::xiangqi::MoveParseError| unprocessable(e.to_string()))?;
    let mv = s
        .position
        .find_legal(mv)
        .ok_or_else(|| unprocessable(format!("illegal move {mv}")))?;
    s.position = s.position.apply_unchecked(mv);
    s.history.push(mv);
    let analysis = engine_turn(&state, &mut s).await?;
    Ok(Json(MoveReply {
        game: view(&s),
        analysis,
    }))
}

async fn analysis(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<AnalysisView>, ApiError> {
    let s = state.get(&id)?;
    let mut s = s.lock().await;
    if status(&s.position, &s.search).0.is_some() {
        return Err(ApiError::new(StatusCode::CONFLICT, "the game is over"));
    }
    let ply = s.position.ply();
    if let Some(a) = s.analysis.get(&ply) {
        if a.fen == s.position.to_fen() {
            return Ok(Json(a.clone()));
        }
    }
    let out = run_search(&state, s.position.clone(), s.search.clone()).await?;
    let a = analysis_view(&s.position, &out, s.engine_move);
    s.analysis.insert(ply, a.clone());
    Ok(Json(a))
}

async fn restart(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<MoveReply>, ApiError> {
    let s = state.get(&id)?;
    let mut s = s.lock().await;
    s.position = Position::initial();
    s.history.clear();
    s.engine_move = None;
    s.analysis.clear();
    let analysis = engine_turn(&state, &mut s).await?;
    Ok(Json(MoveReply {
        game: view(&s),
        analysis,
    }))
}

/// Serves until ctrl-c, sweeping expired sessions once a minute.
pub async fn serve(state: AppState, addr: std::net::SocketAddr) -> anyhow::Result<()> {
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            let n = sweeper.evict_expired();
            if n > 0 {
                log::info!("evicted {n} idle sessions");
            }
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
