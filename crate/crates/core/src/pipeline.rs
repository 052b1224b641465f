//! End-to-end composition: corpus → topic profiles → odds-ratio report,
//! plus the helpers that turn a report into WEAT inputs or a scoring snapshot.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AgeGroup, Corpus, GreetingMessage, IndicatorSets, RecipientGender, Scenario};
use crate::genderstats::{rank_gendered_topics, GenderTopicReport, RankConfig, StatsError};
use crate::lexicon::{filter_topics, profile_messages, FilterConfig, LexiconError, TopicLexicon};
use crate::scorer::{GenderStatsSnapshot, ScoreError};
use crate::weat::WeatInput;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{label}: group `{group}` is empty after filtering")]
    EmptyGroup { label: String, group: String },
    #[error("{label}: {error}")]
    Stats { label: String, error: StatsError },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

impl PipelineError {
    /// Errors caused by the data itself (as opposed to bad configuration).
    pub fn is_degenerate_data(&self) -> bool {
        matches!(
            self,
            PipelineError::EmptyGroup { .. }
                | PipelineError::Stats {
                    error: StatsError::NoTopics | StatsError::EmptyGroup(_),
                    ..
                }
        )
    }
}

/// Which two message groups are compared. Group A is listed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupPair {
    /// Female (A) vs. male (B) recipients.
    #[default]
    FemaleMale,
    /// Recipients with a gender indicator (A) vs. without one (B).
    GenderedNeutral,
}

impl GroupPair {
    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            GroupPair::FemaleMale => ("female", "male"),
            GroupPair::GenderedNeutral => ("gendered", "neutral"),
        }
    }

    fn side(self, gender: RecipientGender) -> Option<bool> {
        use RecipientGender::*;
        match (self, gender) {
            (_, Mixed) => None,
            (GroupPair::FemaleMale, Female) => Some(true),
            (GroupPair::FemaleMale, Male) => Some(false),
            (GroupPair::FemaleMale, Neutral) => None,
            (GroupPair::GenderedNeutral, Female | Male) => Some(true),
            (GroupPair::GenderedNeutral, Neutral) => Some(false),
        }
    }
}

impl FromStr for GroupPair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "female-male" => Ok(GroupPair::FemaleMale),
            "gendered-neutral" => Ok(GroupPair::GenderedNeutral),
            _ => Err(format!("unknown group pair `{s}`")),
        }
    }
}

/// A single scenario, or every scenario pooled together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioSelector {
    One(Scenario),
    Pooled,
}

impl ScenarioSelector {
    fn matches(self, scenario: Scenario) -> bool {
        match self {
            ScenarioSelector::One(s) => s == scenario,
            ScenarioSelector::Pooled => true,
        }
    }
}

impl fmt::Display for ScenarioSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioSelector::One(s) => s.fmt(f),
            ScenarioSelector::Pooled => f.write_str("all"),
        }
    }
}

impl FromStr for ScenarioSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            Ok(ScenarioSelector::Pooled)
        } else {
            s.parse().map(ScenarioSelector::One)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// Empty means every scenario present in the corpus, in enum order.
    pub scenarios: Vec<ScenarioSelector>,
    /// `AgeGroup::All` keeps every message.
    pub age_groups: Vec<AgeGroup>,
    pub group_pair: GroupPair,
    pub filter: FilterConfig,
    pub rank: RankConfig,
    /// Subsample the larger group down to the size of the smaller one.
    /// Only applied to [`GroupPair::GenderedNeutral`].
    pub balance: bool,
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            scenarios: Vec::new(),
            age_groups: vec![AgeGroup::All],
            group_pair: GroupPair::default(),
            filter: FilterConfig::default(),
            rank: RankConfig::default(),
            balance: true,
            seed: 0,
        }
    }
}

fn split_groups(
    corpus: &Corpus,
    scenario: ScenarioSelector,
    age: AgeGroup,
    pair: GroupPair,
) -> (Vec<GreetingMessage>, Vec<GreetingMessage>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for msg in corpus.messages() {
        if !scenario.matches(msg.scenario) || (age != AgeGroup::All && msg.age_group != age) {
            continue;
        }
        match pair.side(msg.recipient_gender) {
            Some(true) => a.push(msg.clone()),
            Some(false) => b.push(msg.clone()),
            None => {}
        }
    }
    (a, b)
}

fn subsample(
    messages: Vec<GreetingMessage>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<GreetingMessage> {
    if messages.len() <= n {
        return messages;
    }
    let mut picked = index::sample(rng, messages.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| messages[i].clone()).collect()
}

/// Runs the pipeline for one (scenario, age group) combination.
pub fn analyze_group(
    corpus: &Corpus,
    lexicon: &TopicLexicon,
    cfg: &AnalysisConfig,
    scenario: ScenarioSelector,
    age: AgeGroup,
) -> Result<GenderTopicReport, PipelineError> {
    cfg.filter.validate()?;
    let label = format!("{scenario}/{age}");
    let (label_a, label_b) = cfg.group_pair.labels();
    let (mut a, mut b) = split_groups(corpus, scenario, age, cfg.group_pair);
    for (group, msgs) in [(label_a, &a), (label_b, &b)] {
        if msgs.is_empty() {
            return Err(PipelineError::EmptyGroup {
                label,
                group: group.to_string(),
            });
        }
    }
    if cfg.balance && cfg.group_pair == GroupPair::GenderedNeutral {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let n = a.len().min(b.len());
        a = subsample(a, n, &mut rng);
        b = subsample(b, n, &mut rng);
    }

    // A topic is eligible when it passes the filter in either group; its
    // counts then come from both unfiltered profiles.
    let raw_a = profile_messages(&a, lexicon);
    let raw_b = profile_messages(&b, lexicon);
    let kept_a = filter_topics(&raw_a, &cfg.filter);
    let kept_b = filter_topics(&raw_b, &cfg.filter);
    let eligible =
        |t: &str| kept_a.topic_counts.contains_key(t) || kept_b.topic_counts.contains_key(t);
    let profile_a = raw_a.restrict(eligible);
    let profile_b = raw_b.restrict(eligible);
    let mut report = rank_gendered_topics(&profile_a, &profile_b, &cfg.rank).map_err(|error| {
        PipelineError::Stats {
            label: label.clone(),
            error,
        }
    })?;
    report.scenario = scenario.to_string();
    report.group_label = label;
    report.group_a = label_a.to_string();
    report.group_b = label_b.to_string();
    report.config.filter = Some(cfg.filter);
    Ok(report)
}

/// One report per requested (scenario, age group), scenario-major order.
pub fn analyze(
    corpus: &Corpus,
    lexicon: &TopicLexicon,
    cfg: &AnalysisConfig,
) -> Result<Vec<GenderTopicReport>, PipelineError> {
    let scenarios = if cfg.scenarios.is_empty() {
        corpus
            .scenarios()
            .into_iter()
            .map(ScenarioSelector::One)
            .collect()
    } else {
        cfg.scenarios.clone()
    };
    let ages = if cfg.age_groups.is_empty() {
        vec![AgeGroup::All]
    } else {
        cfg.age_groups.clone()
    };
    let mut out = Vec::new();
    for scenario in &scenarios {
        for age in &ages {
            out.push(analyze_group(corpus, lexicon, cfg, *scenario, *age)?);
        }
    }
    Ok(out)
}

/// Scoring snapshot from all scenarios pooled, every age group.
pub fn build_snapshot(
    corpus: &Corpus,
    lexicon: &TopicLexicon,
    cfg: &AnalysisConfig,
    tau: f64,
) -> Result<(GenderStatsSnapshot, GenderTopicReport), PipelineError> {
    let report = analyze_group(
        corpus,
        lexicon,
        cfg,
        ScenarioSelector::Pooled,
        AgeGroup::All,
    )?;
    let snapshot = GenderStatsSnapshot::from_report(&report, tau)?;
    Ok((snapshot, report))
}

/// WEAT targets from a report: X is the union of the feminine topics'
/// keywords, Y the union of the masculine topics' keywords; attributes are
/// the general female and male indicator lists.
pub fn weat_input_for_report(
    report: &GenderTopicReport,
    lexicon: &TopicLexicon,
    indicators: &IndicatorSets,
) -> WeatInput {
    let union = |records: &[crate::genderstats::TopicOddsRecord]| -> BTreeSet<String> {
        records
            .iter()
            .filter_map(|r| lexicon.keywords(&r.topic))
            .flatten()
            .cloned()
            .collect()
    };
    WeatInput {
        targets_x: union(&report.feminine_topics),
        targets_y: union(&report.masculine_topics),
        attributes_a: indicators.general_female.clone(),
        attributes_b: indicators.general_male.clone(),
    }
}
