//! HTTP facade for the writing assistant.
//!
//! Endpoints:
//! - `POST /api/analyze` with `{"text": ...}`: score, band and topic spans for one draft.
//! - `GET /api/explore?n=&seed=`: sampled topics with up to three reference examples each.
//! - `GET /api/health`: liveness, snapshot version and lexicon size.
//!
//! Everything else is served from the UI bundle directory, when one is configured.
//! Submitted text is never stored or logged.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, QueryRejection};
use axum::extract::{Query, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use greeta_core::lexicon::message_topics;
use greeta_core::scorer::SCORE_METHOD;
use greeta_core::{
    score_message, Corpus, GenderAssoc, GenderStatsSnapshot, KeywordHit, MessageAnalysis,
    TopicLexicon,
};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

/// Longest accepted draft, in characters.
pub const MAX_TEXT_CHARS: usize = 10_000;
pub const MAX_EXAMPLES: usize = 3;
const DEFAULT_EXPLORE_N: usize = 6;

/// Topic → reference messages that contain one of its keywords.
#[derive(Debug, Default)]
pub struct ExplorationIndex {
    texts: Vec<String>,
    by_topic: BTreeMap<String, Vec<usize>>,
}

impl ExplorationIndex {
    pub fn build(corpus: &Corpus, lexicon: &TopicLexicon) -> Self {
        let mut index = ExplorationIndex::default();
        for msg in corpus.messages() {
            let id = index.texts.len();
            for m in message_topics(&msg.text, lexicon) {
                index.by_topic.entry(m.topic).or_default().push(id);
            }
            index.texts.push(msg.text.clone());
        }
        index
    }

    pub fn topic_count(&self) -> usize {
        self.by_topic.len()
    }
}

/// Shared, read-only request state. Only the snapshot can be replaced, and
/// each request clones the current `Arc` once.
pub struct AppState {
    lexicon: Arc<TopicLexicon>,
    snapshot: RwLock<Option<Arc<GenderStatsSnapshot>>>,
    exploration: Option<ExplorationIndex>,
}

impl AppState {
    pub fn new(
        lexicon: TopicLexicon,
        snapshot: Option<GenderStatsSnapshot>,
        reference: Option<&Corpus>,
    ) -> Self {
        let exploration = reference.map(|c| ExplorationIndex::build(c, &lexicon));
        AppState {
            lexicon: Arc::new(lexicon),
            snapshot: RwLock::new(snapshot.map(Arc::new)),
            exploration,
        }
    }

    pub fn snapshot(&self) -> Option<Arc<GenderStatsSnapshot>> {
        self.snapshot
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    /// Atomically swaps in a new snapshot; in-flight requests keep the old one.
    pub fn replace_snapshot(&self, snapshot: GenderStatsSnapshot) {
        *self.snapshot.write().unwrap_or_else(|e| e.into_inner()) = Some(Arc::new(snapshot));
    }

    pub fn lexicon(&self) -> &TopicLexicon {
        &self.lexicon
    }
}

#[derive(Debug, Deserialize)]
struct AnalyzeRequest {
    text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnalyzeResponse {
    #[serde(flatten)]
    pub analysis: MessageAnalysis,
    pub snapshot_version: Option<String>,
    pub score_method: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

fn error(status: StatusCode, message: &str) -> Response {
    (
        status,
        Json(ErrorBody {
            error: message.to_string(),
        }),
    )
        .into_response()
}

async fn analyze(
    State(state): State<Arc<AppState>>,
    body: Result<Bytes, BytesRejection>,
) -> Response {
    let Ok(body) = body else {
        return error(StatusCode::BAD_REQUEST, "unreadable request body");
    };
    let Ok(req) = serde_json::from_slice::<AnalyzeRequest>(&body) else {
        return error(
            StatusCode::BAD_REQUEST,
            "expected a JSON object with a `text` string",
        );
    };
    if req.text.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "text is empty");
    }
    if req.text.chars().count() > MAX_TEXT_CHARS {
        return error(StatusCode::BAD_REQUEST, "text is too long");
    }
    let snapshot = state.snapshot();
    let neutral;
    let stats = match &snapshot {
        Some(s) => s.as_ref(),
        None => {
            neutral = GenderStatsSnapshot::neutral();
            &neutral
        }
    };
    let analysis = score_message(&req.text, &state.lexicon, stats);
    Json(AnalyzeResponse {
        analysis,
        snapshot_version: snapshot.map(|s| s.version.clone()),
        score_method: SCORE_METHOD.to_string(),
    })
    .into_response()
}

#[derive(Debug, Deserialize)]
struct ExploreQuery {
    n: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ExplorationExample {
    pub text: String,
    pub keywords: Vec<KeywordHit>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ExplorationTopic {
    pub topic: String,
    pub gender_assoc: GenderAssoc,
    pub examples: Vec<ExplorationExample>,
}

/// Samples `n` distinct topics uniformly and up to three examples for each.
pub fn sample_exploration(
    index_data: &ExplorationIndex,
    lexicon: &TopicLexicon,
    snapshot: Option<&GenderStatsSnapshot>,
    n: usize,
    seed: u64,
) -> Vec<ExplorationTopic> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topics: Vec<(&String, &Vec<usize>)> = index_data.by_topic.iter().collect();
    let n = n.min(topics.len());
    index::sample(&mut rng, topics.len(), n)
        .into_iter()
        .map(|ti| {
            let (topic, ids) = topics[ti];
            let chosen: Vec<usize> = if ids.len() <= MAX_EXAMPLES {
                ids.clone()
            } else {
                let mut picks: Vec<usize> = index::sample(&mut rng, ids.len(), MAX_EXAMPLES)
                    .into_iter()
                    .map(|i| ids[i])
                    .collect();
                picks.sort_unstable();
                picks
            };
            let examples = chosen
                .into_iter()
                .map(|id| {
                    let text = &index_data.texts[id];
                    let keywords = message_topics(text, lexicon)
                        .into_iter()
                        .find(|m| &m.topic == topic)
                        .map(|m| m.keywords)
                        .unwrap_or_default();
                    ExplorationExample {
                        text: text.clone(),
                        keywords,
                    }
                })
                .collect();
            ExplorationTopic {
                topic: topic.clone(),
                gender_assoc: snapshot.map_or(GenderAssoc::Neutral, |s| s.association(topic)),
                examples,
            }
        })
        .collect()
}

async fn explore(
    State(state): State<Arc<AppState>>,
    query: Result<Query<ExploreQuery>, QueryRejection>,
) -> Response {
    let Some(index_data) = &state.exploration else {
        return error(
            StatusCode::SERVICE_UNAVAILABLE,
            "no reference corpus configured",
        );
    };
    let (n, seed) = match query {
        Ok(Query(q)) => (
            q.n.unwrap_or(DEFAULT_EXPLORE_N),
            q.seed.unwrap_or_else(rand::random),
        ),
        Err(_) => return error(StatusCode::BAD_REQUEST, "invalid query parameters"),
    };
    let snapshot = state.snapshot();
    Json(sample_exploration(
        index_data,
        &state.lexicon,
        snapshot.as_deref(),
        n,
        seed,
    ))
    .into_response()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub snapshot_version: Option<String>,
    pub lexicon_size: usize,
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    let snapshot = state.snapshot();
    Json(Health {
        status: if snapshot.is_some() { "ok" } else { "degraded" }.to_string(),
        snapshot_version: snapshot.map(|s| s.version.clone()),
        lexicon_size: state.lexicon.topic_count(),
    })
}

const LANDING_PAGE: &str =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>GreetA</title></head>\
<body><h1>GreetA API</h1><p>POST /api/analyze, GET /api/explore, GET /api/health. \
Start the server with a UI bundle directory to serve the web interface here.</p></body></html>";

async fn landing() -> Html<&'static str> {
    Html(LANDING_PAGE)
}

/// Logs method, path, status and latency. Bodies and query strings are not logged.
async fn log_requests(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let path = req.uri().path().to_string();
    let started = Instant::now();
    let response = next.run(req).await;
    tracing::info!(
        %method,
        %path,
        status = response.status().as_u16(),
        elapsed_ms = started.elapsed().as_millis() as u64,
        "request"
    );
    response
}

pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/analyze", post(analyze))
        .route("/api/explore", get(explore))
        .route("/api/health", get(health))
        .with_state(state);
    let app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(landing)),
    };
    app.layer(middleware::from_fn(log_requests))
        .layer(CorsLayer::permissive())
}

/// Serves until ctrl-c.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    static_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    axum::serve(listener, router(state, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
