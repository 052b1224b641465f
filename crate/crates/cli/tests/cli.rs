use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use greeta_core::report::ReportDocument;
use greeta_core::GenderStatsSnapshot;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn synthetic_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/synthetic_corpus.jsonl")
}

fn greeta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_greeta"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fixture_report(dir: &Path) -> PathBuf {
    let report = dir.join("report.json");
    let lexicon = fixture("lexicon.tsv");
    let corpus = fixture("corpus.jsonl");
    stdout(&greeta(&[
        "analyze-corpus",
        "--corpus",
        path(&corpus),
        "--lexicon",
        path(&lexicon),
        "--scenario",
        "birthday",
        "--min-unique-keywords",
        "1",
        "--min-avg-frequency",
        "0.5",
        "--quantile",
        "0",
        "--output",
        path(&report),
    ]));
    report
}

#[test]
fn analyze_corpus_is_deterministic() {
    let corpus = synthetic_corpus();
    let args = [
        "analyze-corpus",
        "--corpus",
        path(&corpus),
        "--groups",
        "gendered-neutral",
        "--scenario",
        "birthday",
        "--min-unique-keywords",
        "2",
        "--min-avg-frequency",
        "1",
        "--seed",
        "11",
    ];
    let first = stdout(&greeta(&args));
    assert_eq!(first, stdout(&greeta(&args)));
    let doc: ReportDocument = serde_json::from_str(&first).unwrap();
    assert_eq!(doc.reports[0].group_a, "gendered");
    assert_eq!(doc.reports[0].group_b, "neutral");
}

#[test]
fn table_format_shows_tiers_and_gap() {
    let corpus = synthetic_corpus();
    let out = stdout(&greeta(&[
        "analyze-corpus",
        "--corpus",
        path(&corpus),
        "--scenario",
        "birthday",
        "--min-unique-keywords",
        "2",
        "--min-avg-frequency",
        "1",
        "--format",
        "table",
    ]));
    assert!(out.starts_with("birthday/all (female: 14 messages, male: 14 messages)"));
    assert!(out.contains("● appearance"));
    assert!(out.contains("leader"));
    assert!(out.contains("gap: "));
}

#[test]
fn weat_on_separated_embeddings_is_two() {
    let dir = tempfile::tempdir().unwrap();
    let report = fixture_report(dir.path());
    let embeddings = fixture("embeddings.txt");
    let lexicon = fixture("lexicon.tsv");
    let (a, b) = (fixture("attributes_a.txt"), fixture("attributes_b.txt"));
    let run = |a: &Path, b: &Path| -> Value {
        let out = stdout(&greeta(&[
            "weat",
            "--report",
            path(&report),
            "--embeddings",
            path(&embeddings),
            "--lexicon",
            path(&lexicon),
            "--attributes-a",
            path(a),
            "--attributes-b",
            path(b),
            "--permutations",
            "100",
            "--format",
            "json",
        ]));
        serde_json::from_str(&out).unwrap()
    };
    let forward = run(&a, &b);
    let row = &forward["results"][0];
    assert_eq!(row["effect_size"], 2.0);
    assert_eq!(row["targets_x"], 2);
    assert_eq!(row["targets_y"], 2);
    assert!(row["p_value"].as_f64().unwrap() < 0.5);
    let swapped = run(&b, &a);
    assert_eq!(swapped["results"][0]["effect_size"], -2.0);
}

#[test]
fn weat_table_and_oov_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let report = fixture_report(dir.path());
    let lexicon = fixture("lexicon.tsv");
    let (a, b) = (fixture("attributes_a.txt"), fixture("attributes_b.txt"));

    let embeddings = fixture("embeddings.txt");
    let table = stdout(&greeta(&[
        "weat",
        "--report",
        path(&report),
        "--embeddings",
        path(&embeddings),
        "--lexicon",
        path(&lexicon),
        "--attributes-a",
        path(&a),
        "--attributes-b",
        path(&b),
    ]));
    assert!(table.contains("birthday/all"));
    assert!(table.contains("2.000"));

    let sparse = dir.path().join("sparse.txt");
    std::fs::write(&sparse, "gamma 0 1\ndelta 0 3\nshe 1 0\nhe 0 1\n").unwrap();
    let out = greeta(&[
        "weat",
        "--report",
        path(&report),
        "--embeddings",
        path(&sparse),
        "--lexicon",
        path(&lexicon),
        "--attributes-a",
        path(&a),
        "--attributes-b",
        path(&b),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("set X is empty"));
}

#[test]
fn snapshot_carries_report_odds_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic_corpus();
    let common = [
        "--corpus",
        path(&corpus),
        "--min-unique-keywords",
        "2",
        "--min-avg-frequency",
        "1",
    ];
    let snap_path = dir.path().join("snap.json");
    let mut args = vec!["build-snapshot", "--tau", "3", "--output", path(&snap_path)];
    args.extend(common);
    stdout(&greeta(&args));
    let snapshot = GenderStatsSnapshot::load(&snap_path).unwrap();
    assert_eq!(snapshot.tau, 3.0);

    let mut args = vec!["analyze-corpus", "--scenario", "all"];
    args.extend(common);
    let doc: ReportDocument = serde_json::from_str(&stdout(&greeta(&args))).unwrap();
    let report = &doc.reports[0];
    assert_eq!(snapshot.topic_or.len(), report.topics.len());
    for r in &report.topics {
        assert_eq!(snapshot.topic_or[&r.topic], r.or_value, "{}", r.topic);
    }
    let again = GenderStatsSnapshot::new(snapshot.topic_or.clone(), 3.0).unwrap();
    assert_eq!(again.version, snapshot.version);
}

#[test]
fn build_prompts_lists_templates_and_generation_settings() {
    let dir = tempfile::tempdir().unwrap();
    let names = dir.path().join("names.tsv");
    std::fs::write(&names, "Emma\tfemale\nLiam\tmale\n").unwrap();
    let doc: Value = serde_json::from_str(&stdout(&greeta(&[
        "build-prompts",
        "--scenario",
        "birthday",
        "--scenario",
        "valentine",
        "--names",
        path(&names),
    ])))
    .unwrap();
    assert_eq!(doc["generation"]["top_p"], 0.1);
    assert_eq!(doc["generation"]["max_chars"], 200);

    let prompts = |i: usize| -> Vec<String> {
        doc["scenarios"][i]["prompts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p["prompt"].as_str().unwrap().to_string())
            .collect()
    };
    let birthday = prompts(0);
    let valentine = prompts(1);
    assert!(birthday.contains(&"Happy birthday niece!".to_string()));
    assert!(birthday.contains(&"Happy birthday Emma!".to_string()));
    assert!(birthday.contains(&"Happy birthday my little baby girl Emma!".to_string()));
    assert!(birthday.contains(&"Happy birthday my little baby boy Liam!".to_string()));
    assert!(valentine.contains(&"Happy Valentine's Day Liam!".to_string()));
    assert!(valentine.iter().all(|p| !p.contains("baby")));
    assert!(birthday.iter().chain(&valentine).all(|p| p.ends_with('!')));
    assert_eq!(birthday.len(), valentine.len() + 2);

    let plain: Value = serde_json::from_str(&stdout(&greeta(&[
        "build-prompts",
        "--scenario",
        "wedding",
    ])))
    .unwrap();
    let templates: Vec<&str> = plain["scenarios"][0]["prompts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["template"].as_str().unwrap())
        .collect();
    assert!(templates.contains(&"indicator") && templates.contains(&"endearment"));
    assert!(!templates.contains(&"baby"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    assert_eq!(
        greeta(&["analyze-corpus", "--corpus", path(&missing)])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(greeta(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(greeta(&["analyze-corpus"]).status.code(), Some(1));

    let corpus = synthetic_corpus();
    let bad_scenario = greeta(&[
        "analyze-corpus",
        "--corpus",
        path(&corpus),
        "--scenario",
        "funeral",
    ]);
    assert_eq!(bad_scenario.status.code(), Some(1));
    let bad_filter = greeta(&[
        "analyze-corpus",
        "--corpus",
        path(&corpus),
        "--min-unique-keywords",
        "0",
    ]);
    assert_eq!(bad_filter.status.code(), Some(1));

    let malformed = dir.path().join("bad.jsonl");
    std::fs::write(&malformed, "{\"id\": \"1\", \"text\": \"hi\"}\nnot json\n").unwrap();
    let out = greeta(&["analyze-corpus", "--corpus", path(&malformed)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    // Only female messages: the male group is empty.
    let one_sided = dir.path().join("female.jsonl");
    std::fs::write(
        &one_sided,
        "{\"id\": \"1\", \"text\": \"Happy birthday sister!\", \"scenario\": \"birthday\", \"source\": \"social\"}\n",
    )
    .unwrap();
    let out = greeta(&["analyze-corpus", "--corpus", path(&one_sided)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));

    assert_eq!(greeta(&["--help"]).status.code(), Some(0));
}
