use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use greeta_core::{
    tokenize, Band, Corpus, GenderAssoc, GenderStatsSnapshot, IndicatorSets, TopicLexicon,
};
use greeta_service::{
    router, sample_exploration, AnalyzeResponse, AppState, ExplorationIndex, ExplorationTopic,
    Health, MAX_EXAMPLES, MAX_TEXT_CHARS,
};
use http_body_util::BodyExt;
use tower::ServiceExt;

const CORPUS: &str = include_str!("../../core/data/synthetic_corpus.jsonl");

fn corpus() -> Corpus {
    Corpus::from_jsonl(CORPUS.as_bytes(), &IndicatorSets::default()).unwrap()
}

fn snapshot() -> GenderStatsSnapshot {
    let ors = [
        ("leader", 8.0),
        ("work", 5.0),
        ("sports", 4.0),
        ("royalty", 0.1),
        ("beauty", 0.1),
        ("appearance", 0.2),
        ("family", 1.0),
    ];
    GenderStatsSnapshot::new(ors.iter().map(|(t, v)| (t.to_string(), *v)).collect(), 2.0).unwrap()
}

fn state(with_snapshot: bool, with_corpus: bool) -> Arc<AppState> {
    let corpus = corpus();
    Arc::new(AppState::new(
        TopicLexicon::bundled(),
        with_snapshot.then(snapshot),
        with_corpus.then_some(&corpus),
    ))
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    (status, body)
}

fn post(body: impl Into<Body>) -> Request<Body> {
    Request::post("/api/analyze")
        .header("content-type", "application/json")
        .body(body.into())
        .unwrap()
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

async fn analyze(app: &Router, text: &str) -> AnalyzeResponse {
    let body = serde_json::json!({ "text": text }).to_string();
    let (status, bytes) = call(app, post(body)).await;
    assert_eq!(status, StatusCode::OK);
    serde_json::from_slice(&bytes).unwrap()
}

#[tokio::test]
async fn rejects_bad_requests() {
    let app = router(state(true, false), None);
    let too_long = "a".repeat(MAX_TEXT_CHARS + 1);
    for body in [
        "not json".to_string(),
        "{}".to_string(),
        r#"{"text": 3}"#.to_string(),
        r#"{"text": ""}"#.to_string(),
        r#"{"text": "   "}"#.to_string(),
        serde_json::json!({ "text": too_long }).to_string(),
    ] {
        let (status, bytes) = call(&app, post(body.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body:.40}");
        let err: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert!(err["error"].is_string());
    }
    let at_limit = serde_json::json!({ "text": "a".repeat(MAX_TEXT_CHARS) }).to_string();
    assert_eq!(call(&app, post(at_limit)).await.0, StatusCode::OK);
}

#[tokio::test]
async fn leadership_marks_leader_masculine() {
    let app = router(state(true, false), None);
    let resp = analyze(&app, "You show real leadership every day.").await;
    let leader = resp
        .analysis
        .topics
        .iter()
        .find(|t| t.topic == "leader")
        .expect("leader topic");
    assert_eq!(leader.gender_assoc, GenderAssoc::Masculine);
    assert_eq!(leader.keywords[0].keyword, "leadership");
    let span = leader.keywords[0].span;
    assert_eq!(
        &"You show real leadership every day."[span.start..span.end],
        "leadership"
    );
    assert_eq!(resp.analysis.band, Band::Masculine);
    assert!(resp.analysis.score < 49.0);
    assert_eq!(
        resp.snapshot_version.as_deref(),
        Some(snapshot().version.as_str())
    );
}

#[tokio::test]
async fn princess_scores_feminine() {
    let app = router(state(true, false), None);
    let resp = analyze(&app, "Happy birthday to our princess, beautiful as ever!").await;
    assert_eq!(resp.analysis.band, Band::Feminine);
    assert!(resp.analysis.score > 51.0);
    let f = resp.analysis.fragments;
    assert!((f.feminine + f.masculine - 1.0).abs() < 1e-12);
    assert!(resp
        .analysis
        .topics
        .iter()
        .any(|t| t.topic == "royalty" && t.gender_assoc == GenderAssoc::Feminine));
}

#[tokio::test]
async fn no_topics_is_neutral() {
    let app = router(state(true, false), None);
    let resp = analyze(&app, "zzz qqq").await;
    assert_eq!(resp.analysis.score, 50.0);
    assert_eq!(resp.analysis.band, Band::Neutral);
    assert!(resp.analysis.topics.is_empty());
}

#[tokio::test]
async fn missing_snapshot_is_degraded_but_analyze_works() {
    let app = router(state(false, false), None);
    let (status, bytes) = call(&app, get("/api/health")).await;
    assert_eq!(status, StatusCode::OK);
    let health: Health = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(health.status, "degraded");
    assert_eq!(health.snapshot_version, None);
    assert_eq!(health.lexicon_size, TopicLexicon::bundled().topic_count());

    let resp = analyze(&app, "a great leader").await;
    assert_eq!(resp.analysis.score, 50.0);
    assert_eq!(resp.snapshot_version, None);
}

#[tokio::test]
async fn health_reports_snapshot_version_changes() {
    let st = state(true, false);
    let app = router(st.clone(), None);
    let (_, bytes) = call(&app, get("/api/health")).await;
    let before: Health = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(before.status, "ok");
    assert_eq!(
        before.snapshot_version.as_deref(),
        Some(snapshot().version.as_str())
    );

    let mut ors = BTreeMap::new();
    ors.insert("leader".to_string(), 0.5);
    let replacement = GenderStatsSnapshot::new(ors, 2.0).unwrap();
    st.replace_snapshot(replacement.clone());
    let (_, bytes) = call(&app, get("/api/health")).await;
    let after: Health = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(after.snapshot_version, Some(replacement.version));
    assert_ne!(after.snapshot_version, before.snapshot_version);

    let resp = analyze(&app, "a great leader").await;
    assert_eq!(resp.analysis.band, Band::Feminine);
}

async fn explore(app: &Router, uri: &str) -> Vec<ExplorationTopic> {
    let (status, bytes) = call(app, get(uri)).await;
    assert_eq!(status, StatusCode::OK);
    serde_json::from_slice(&bytes).unwrap()
}

#[tokio::test]
async fn explore_is_seeded_and_examples_contain_keywords() {
    let app = router(state(true, true), None);
    let lexicon = TopicLexicon::bundled();
    let a = explore(&app, "/api/explore?n=5&seed=7").await;
    let b = explore(&app, "/api/explore?n=5&seed=7").await;
    assert_eq!(a, b);
    assert_eq!(a.len(), 5);
    let distinct: BTreeSet<_> = a.iter().map(|t| t.topic.as_str()).collect();
    assert_eq!(distinct.len(), 5);

    let snap = snapshot();
    for topic in &a {
        assert_eq!(topic.gender_assoc, snap.association(&topic.topic));
        assert!(!topic.examples.is_empty() && topic.examples.len() <= MAX_EXAMPLES);
        let keywords = &lexicon.entries()[&topic.topic];
        for ex in &topic.examples {
            assert!(!ex.keywords.is_empty());
            let tokens: BTreeSet<String> = tokenize(&ex.text).into_iter().map(|t| t.text).collect();
            for hit in &ex.keywords {
                assert!(keywords.contains(&hit.keyword));
                assert!(tokens.contains(&hit.keyword));
                assert_eq!(
                    ex.text[hit.span.start..hit.span.end].to_lowercase(),
                    hit.keyword
                );
            }
        }
    }

    let all = explore(&app, "/api/explore?n=1000&seed=1").await;
    let index = ExplorationIndex::build(&corpus(), &lexicon);
    assert_eq!(all.len(), index.topic_count());
}

#[test]
fn explore_returns_all_examples_for_sparse_topics() {
    let jsonl = concat!(
        r#"{"id":"1","text":"You are a true queen","scenario":"birthday","source":"template"}"#,
        "\n",
        r#"{"id":"2","text":"Long live the king","scenario":"birthday","source":"template"}"#,
        "\n",
        r#"{"id":"3","text":"Nothing to see here","scenario":"birthday","source":"template"}"#,
        "\n"
    );
    let corpus = Corpus::from_jsonl(jsonl.as_bytes(), &IndicatorSets::default()).unwrap();
    let lexicon = TopicLexicon::bundled();
    let index = ExplorationIndex::build(&corpus, &lexicon);
    let topics = sample_exploration(&index, &lexicon, None, 10, 3);
    let royalty = topics.iter().find(|t| t.topic == "royalty").unwrap();
    assert_eq!(royalty.examples.len(), 2);
    assert_eq!(royalty.gender_assoc, GenderAssoc::Neutral);
}

#[tokio::test]
async fn explore_without_corpus_is_unavailable() {
    let app = router(state(true, false), None);
    let (status, _) = call(&app, get("/api/explore?n=3")).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let app = router(state(true, true), None);
    let (status, _) = call(&app, get("/api/explore?n=abc")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn root_serves_landing_page_or_static_bundle() {
    let app = router(state(true, false), None);
    let (status, body) = call(&app, get("/")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("/api/analyze"));

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<p>bundle</p>").unwrap();
    let app = router(state(true, false), Some(dir.path().to_path_buf()));
    let (status, body) = call(&app, get("/")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<p>bundle</p>");
    let (status, _) = call(&app, get("/api/health")).await;
    assert_eq!(status, StatusCode::OK);
}

#[derive(Clone, Default)]
struct Capture(Arc<Mutex<Vec<u8>>>);

impl Write for Capture {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

#[tokio::test]
async fn submitted_text_is_not_logged() {
    let capture = Capture::default();
    let writer = capture.clone();
    let subscriber = tracing_subscriber::fmt()
        .with_writer(move || writer.clone())
        .with_ansi(false)
        .finish();
    let _guard = tracing::subscriber::set_default(subscriber);

    let app = router(state(true, true), None);
    let secret = "Dear Marguerite, our secret leadership plan";
    analyze(&app, secret).await;
    call(&app, get("/api/explore?n=2&seed=99")).await;

    let log = String::from_utf8(capture.0.lock().unwrap().clone()).unwrap();
    assert!(log.contains("/api/analyze"), "request was logged: {log}");
    assert!(!log.contains("Marguerite"));
    assert!(!log.contains("secret"));
    assert!(!log.contains("seed=99"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn snapshot_swaps_are_atomic_under_load() {
    let st = state(true, false);
    let app = router(st.clone(), None);
    let first = snapshot();
    let mut ors = BTreeMap::new();
    ors.insert("leader".to_string(), 0.25);
    let second = GenderStatsSnapshot::new(ors, 2.0).unwrap();

    let text = "a great leader";
    let expected = |version: &str| {
        let snap = if version == first.version {
            &first
        } else {
            &second
        };
        greeta_core::score_message(text, &TopicLexicon::bundled(), snap).score
    };

    let swapper = {
        let st = st.clone();
        let (a, b) = (first.clone(), second.clone());
        tokio::spawn(async move {
            for i in 0..200 {
                st.replace_snapshot(if i % 2 == 0 { b.clone() } else { a.clone() });
                tokio::task::yield_now().await;
            }
        })
    };
    let mut handles = Vec::new();
    for _ in 0..8 {
        let app = app.clone();
        handles.push(tokio::spawn(async move {
            let mut seen = Vec::new();
            for _ in 0..50 {
                let r = analyze(&app, text).await;
                seen.push((r.snapshot_version.unwrap(), r.analysis.score));
            }
            seen
        }));
    }
    swapper.await.unwrap();
    for h in handles {
        for (version, score) in h.await.unwrap() {
            assert!(version == first.version || version == second.version);
            assert_eq!(score, expected(&version));
        }
    }
}
