use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use greeta_core::pipeline::{self, weat_input_for_report};
use greeta_core::report::{render_table, render_weat_table, ReportDocument, WeatRow};
use greeta_core::weat::weat_with_permutation_test;
use greeta_core::{
    build_prompts, AgeGroup, AnalysisConfig, Corpus, EmbeddingStore, FilterConfig,
    GenderStatsSnapshot, GroupPair, IndicatorSets, PipelineError, RankConfig, RecipientGender,
    Scenario, ScenarioPrefixes, ScenarioSelector, TopicLexicon, WeatError,
};
use greeta_service::AppState;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "greeta",
    version,
    about = "Gender-role analysis for greeting-card messages"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank gender-distinct topics per scenario and age group.
    AnalyzeCorpus(AnalyzeArgs),
    /// WEAT effect sizes for the topic lists of an analysis report.
    Weat(WeatArgs),
    /// Build the odds-ratio snapshot used for message scoring.
    BuildSnapshot(SnapshotArgs),
    /// Emit generation prompts for a scenario.
    BuildPrompts(PromptArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct CorpusArgs {
    /// Line-delimited JSON corpus; may be repeated.
    #[arg(long = "corpus", required = true)]
    corpora: Vec<PathBuf>,
    /// Tab-separated topic lexicon [default: bundled lexicon]
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// JSON indicator lists [default: bundled lists]
    #[arg(long)]
    indicators: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Scenario to analyse (birthday, valentine, wedding, other, or `all` for
    /// every scenario pooled); may be repeated. Default: each scenario present.
    #[arg(long = "scenario")]
    scenarios: Vec<ScenarioSelector>,
    /// Recipient age group (all, baby, parent, grandparent, unknown); may be repeated.
    #[arg(long = "age-group", default_value = "all")]
    age_groups: Vec<AgeGroup>,
    /// Groups to compare: female-male or gendered-neutral.
    #[arg(long, default_value = "female-male")]
    groups: GroupPair,
    /// Topics per list.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Drop topics whose combined message count falls below this quantile.
    #[arg(long, default_value_t = 0.30)]
    quantile: f64,
    /// Keep a topic only with more than this many distinct keywords.
    #[arg(long, default_value_t = 5)]
    min_unique_keywords: usize,
    /// Keep a topic only if its keywords occur more than this often on average.
    #[arg(long, default_value_t = 3.0)]
    min_avg_frequency: f64,
    /// Additive smoothing applied when a contingency cell is zero.
    #[arg(long, default_value_t = 0.5)]
    smoothing: f64,
    /// Do not subsample the larger group in gendered-neutral comparisons.
    #[arg(long)]
    no_balance: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl PipelineArgs {
    fn config(&self) -> AnalysisConfig {
        AnalysisConfig {
            scenarios: self.scenarios.clone(),
            age_groups: self.age_groups.clone(),
            group_pair: self.groups,
            filter: FilterConfig {
                min_unique_keywords: self.min_unique_keywords,
                min_avg_frequency: self.min_avg_frequency,
            },
            rank: RankConfig {
                quantile: self.quantile,
                k: self.k,
                smoothing: self.smoothing,
            },
            balance: !self.no_balance,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: CorpusArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct WeatArgs {
    /// Report produced by `analyze-corpus --format json`.
    #[arg(long)]
    report: PathBuf,
    /// Plain-text vectors, one `word v1 ... vD` per line.
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    indicators: Option<PathBuf>,
    /// Word list (one per line) replacing the female attribute set.
    #[arg(long)]
    attributes_a: Option<PathBuf>,
    /// Word list (one per line) replacing the male attribute set.
    #[arg(long)]
    attributes_b: Option<PathBuf>,
    /// Remove keywords shared by both target sets.
    #[arg(long)]
    disjoint_targets: bool,
    /// Permutations for the optional p-value (0 disables it).
    #[arg(long, default_value_t = 0)]
    permutations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SnapshotArgs {
    #[command(flatten)]
    input: CorpusArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Logistic temperature of the message score.
    #[arg(long, default_value_t = greeta_core::scorer::DEFAULT_TAU)]
    tau: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PromptArgs {
    /// May be repeated.
    #[arg(long = "scenario", required = true)]
    scenarios: Vec<Scenario>,
    #[arg(long)]
    indicators: Option<PathBuf>,
    /// Names file: one `name<TAB>female|male` per line.
    #[arg(long)]
    names: Option<PathBuf>,
    /// JSON object mapping scenario to its wish prefix.
    #[arg(long)]
    prefixes: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Snapshot built with `build-snapshot`.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Reference corpus for topic exploration; may be repeated.
    #[arg(long = "corpus")]
    corpora: Vec<PathBuf>,
    #[arg(long)]
    indicators: Option<PathBuf>,
    /// Directory with the built UI bundle.
    #[arg(long)]
    static_dir: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, env = "PORT", default_value_t = 8080)]
    port: u16,
}

enum Failure {
    Input(anyhow::Error),
    Degenerate(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_degenerate_data() {
            Failure::Degenerate(e.into())
        } else {
            Failure::Input(e.into())
        }
    }
}

type CmdResult = Result<(), Failure>;

fn load_lexicon(path: Option<&Path>) -> anyhow::Result<TopicLexicon> {
    match path {
        Some(p) => {
            TopicLexicon::load(p).with_context(|| format!("reading lexicon {}", p.display()))
        }
        None => Ok(TopicLexicon::bundled()),
    }
}

fn load_indicators(path: Option<&Path>) -> anyhow::Result<IndicatorSets> {
    match path {
        Some(p) => {
            IndicatorSets::load(p).with_context(|| format!("reading indicators {}", p.display()))
        }
        None => Ok(IndicatorSets::default()),
    }
}

fn load_corpora(paths: &[PathBuf], indicators: &IndicatorSets) -> anyhow::Result<Corpus> {
    let parts = paths
        .iter()
        .map(|p| {
            Corpus::load(p, indicators).with_context(|| format!("reading corpus {}", p.display()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(Corpus::concat(parts)?)
}

fn emit(output: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match output {
        Some(p) => fs::write(p, content).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn analyze_corpus(args: AnalyzeArgs) -> CmdResult {
    let indicators = load_indicators(args.input.indicators.as_deref())?;
    let lexicon = load_lexicon(args.input.lexicon.as_deref())?;
    let corpus = load_corpora(&args.input.corpora, &indicators)?;
    let reports = pipeline::analyze(&corpus, &lexicon, &args.pipeline.config())?;
    for r in reports.iter().filter(|r| r.short_lists) {
        eprintln!(
            "warning: {}: fewer than {} distinct topics on a side",
            r.group_label, r.config.k
        );
    }
    let content = match args.format {
        Format::Json => ReportDocument { reports }.to_json(),
        Format::Table => render_table(&reports),
    };
    emit(args.output.as_deref(), &content)?;
    Ok(())
}

fn read_word_list(path: &Path) -> anyhow::Result<BTreeSet<String>> {
    let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut words = BTreeSet::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let word = line.trim();
        if !word.is_empty() {
            words.insert(word.to_lowercase());
        }
    }
    Ok(words)
}

#[derive(Serialize)]
struct WeatDocument {
    results: Vec<WeatRow>,
}

fn weat(args: WeatArgs) -> CmdResult {
    let doc: ReportDocument = serde_json::from_str(
        &fs::read_to_string(&args.report)
            .with_context(|| format!("reading report {}", args.report.display()))?,
    )
    .context("parsing report")?;
    let lexicon = load_lexicon(args.lexicon.as_deref())?;
    let indicators = load_indicators(args.indicators.as_deref())?;
    let attr_a = args
        .attributes_a
        .as_deref()
        .map(read_word_list)
        .transpose()?;
    let attr_b = args
        .attributes_b
        .as_deref()
        .map(read_word_list)
        .transpose()?;

    let inputs: Vec<_> = doc
        .reports
        .iter()
        .map(|report| {
            let mut input = weat_input_for_report(report, &lexicon, &indicators);
            if let Some(a) = &attr_a {
                input.attributes_a = a.clone();
            }
            if let Some(b) = &attr_b {
                input.attributes_b = b.clone();
            }
            if args.disjoint_targets {
                input = input.disjoint_targets();
            }
            (report.group_label.as_str(), input)
        })
        .collect();
    let vocab: BTreeSet<String> = inputs
        .iter()
        .flat_map(|(_, i)| {
            i.targets_x
                .iter()
                .chain(&i.targets_y)
                .chain(&i.attributes_a)
                .chain(&i.attributes_b)
                .cloned()
        })
        .collect();
    let (store, skipped) =
        EmbeddingStore::load(&args.embeddings, Some(&vocab)).map_err(|e| match e {
            WeatError::EmptyStore => Failure::Degenerate(anyhow!(
                "no target or attribute word found in {}",
                args.embeddings.display()
            )),
            other => Failure::Input(anyhow!(other)),
        })?;
    if !skipped.is_empty() {
        eprintln!(
            "warning: skipped {} malformed embedding lines",
            skipped.len()
        );
    }

    let mut rows = Vec::new();
    for (label, input) in &inputs {
        let result = weat_with_permutation_test(input, &store, args.permutations, args.seed)
            .map_err(|e| Failure::Degenerate(anyhow!("{label}: {e}")))?;
        rows.push(WeatRow::new(label, &result));
    }
    let content = match args.format {
        Format::Json => to_json(&WeatDocument { results: rows }),
        Format::Table => render_weat_table(&rows),
    };
    emit(args.output.as_deref(), &content)?;
    Ok(())
}

fn build_snapshot(args: SnapshotArgs) -> CmdResult {
    let indicators = load_indicators(args.input.indicators.as_deref())?;
    let lexicon = load_lexicon(args.input.lexicon.as_deref())?;
    let corpus = load_corpora(&args.input.corpora, &indicators)?;
    let (snapshot, report) =
        pipeline::build_snapshot(&corpus, &lexicon, &args.pipeline.config(), args.tau)?;
    if report.feminine_topics.is_empty() || report.masculine_topics.is_empty() {
        eprintln!(
            "warning: no {} topics survived; the snapshot scores one side only",
            if report.feminine_topics.is_empty() {
                "feminine"
            } else {
                "masculine"
            }
        );
    }
    let mut content = snapshot.to_json_pretty();
    content.push('\n');
    emit(args.output.as_deref(), &content)?;
    Ok(())
}

fn read_names(path: &Path) -> anyhow::Result<Vec<(String, RecipientGender)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut names = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (name, gender) = line
            .split_once('\t')
            .ok_or_else(|| anyhow!("{}:{}: expected `name<TAB>gender`", path.display(), idx + 1))?;
        let gender = match gender.trim() {
            "female" => RecipientGender::Female,
            "male" => RecipientGender::Male,
            other => bail!("{}:{}: unknown gender `{other}`", path.display(), idx + 1),
        };
        names.push((name.trim().to_string(), gender));
    }
    Ok(names)
}

#[derive(Serialize)]
struct GenerationSettings {
    top_p: f64,
    max_chars: usize,
}

#[derive(Serialize)]
struct ScenarioPrompts {
    scenario: Scenario,
    prompts: Vec<greeta_core::Prompt>,
}

#[derive(Serialize)]
struct PromptDocument {
    generation: GenerationSettings,
    scenarios: Vec<ScenarioPrompts>,
}

fn build_prompts_cmd(args: PromptArgs) -> CmdResult {
    let indicators = load_indicators(args.indicators.as_deref())?;
    let names = args
        .names
        .as_deref()
        .map(read_names)
        .transpose()?
        .unwrap_or_default();
    let prefixes = match &args.prefixes {
        Some(p) => ScenarioPrefixes(
            serde_json::from_str(
                &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            )
            .with_context(|| format!("parsing prefixes {}", p.display()))?,
        ),
        None => ScenarioPrefixes::default(),
    };
    let scenarios = args
        .scenarios
        .iter()
        .map(|s| {
            Ok(ScenarioPrompts {
                scenario: *s,
                prompts: build_prompts(*s, &prefixes, &indicators, &names)?,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let doc = PromptDocument {
        generation: GenerationSettings {
            top_p: 0.1,
            max_chars: 200,
        },
        scenarios,
    };
    emit(args.output.as_deref(), &to_json(&doc))?;
    Ok(())
}

fn serve(args: ServeArgs) -> CmdResult {
    let lexicon = load_lexicon(args.lexicon.as_deref())?;
    let snapshot = args
        .snapshot
        .as_deref()
        .map(|p| {
            GenderStatsSnapshot::load(p)
                .with_context(|| format!("reading snapshot {}", p.display()))
        })
        .transpose()?;
    let reference = if args.corpora.is_empty() {
        None
    } else {
        let indicators = load_indicators(args.indicators.as_deref())?;
        Some(load_corpora(&args.corpora, &indicators)?)
    };
    let state = Arc::new(AppState::new(lexicon, snapshot, reference.as_ref()));
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .with_context(|| format!("invalid address {}:{}", args.host, args.port))?;

    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_ansi(false)
        .init();
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime
        .block_on(async move {
            let listener = tokio::net::TcpListener::bind(addr).await?;
            let bound = listener.local_addr()?;
            println!("listening on http://{bound}");
            io::stdout().flush()?;
            greeta_service::serve(listener, state, args.static_dir).await
        })
        .context("running server")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::AnalyzeCorpus(a) => analyze_corpus(a),
        Command::Weat(a) => weat(a),
        Command::BuildSnapshot(a) => build_snapshot(a),
        Command::BuildPrompts(a) => build_prompts_cmd(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Degenerate(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
