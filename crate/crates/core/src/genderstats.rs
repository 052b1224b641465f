//! Odds-ratio ranking of topics between two message groups.
//!
//! Group A is the "feminine" side and group B the "masculine" side: an odds
//! ratio above one means the topic is more likely in group B messages. The
//! same machinery compares any two groups (gendered vs. neutral recipients,
//! for instance); only the labels change.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{FilterConfig, TopicProfile};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("group {0} has no messages")]
    EmptyGroup(char),
    #[error("topic count {count} exceeds group size {size}")]
    CountExceedsGroup { count: u64, size: u64 },
    #[error("zero cell in contingency table and no smoothing")]
    ZeroCell,
    #[error("no topics survive in either group")]
    NoTopics,
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Odds of a topic in group B over its odds in group A, with additive
/// smoothing `s` on every cell:
///
/// `[(b + s) / (n_b - b + s)] / [(a + s) / (n_a - a + s)]`
pub fn odds_ratio(
    n_topic_a: u64,
    n_a: u64,
    n_topic_b: u64,
    n_b: u64,
    smoothing: f64,
) -> Result<f64, StatsError> {
    if n_a == 0 {
        return Err(StatsError::EmptyGroup('A'));
    }
    if n_b == 0 {
        return Err(StatsError::EmptyGroup('B'));
    }
    for (count, size) in [(n_topic_a, n_a), (n_topic_b, n_b)] {
        if count > size {
            return Err(StatsError::CountExceedsGroup { count, size });
        }
    }
    let cells = [n_topic_a, n_a - n_topic_a, n_topic_b, n_b - n_topic_b];
    if smoothing <= 0.0 && cells.contains(&0) {
        return Err(StatsError::ZeroCell);
    }
    let s = smoothing;
    let odds_a = (n_topic_a as f64 + s) / ((n_a - n_topic_a) as f64 + s);
    let odds_b = (n_topic_b as f64 + s) / ((n_b - n_topic_b) as f64 + s);
    Ok(odds_b / odds_a)
}

/// Odds ratio with Haldane-Anscombe correction applied only when one of the
/// four cells is zero. Returns the ratio and whether smoothing was used.
pub fn smoothed_odds_ratio(
    n_topic_a: u64,
    n_a: u64,
    n_topic_b: u64,
    n_b: u64,
    smoothing: f64,
) -> Result<(f64, bool), StatsError> {
    let has_zero = n_topic_a == 0 || n_topic_b == 0 || n_topic_a >= n_a || n_topic_b >= n_b;
    let s = if has_zero { smoothing } else { 0.0 };
    odds_ratio(n_topic_a, n_a, n_topic_b, n_b, s).map(|or| (or, has_zero))
}

/// Frequency bucket of a topic inside one group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    High,
    Mid,
    Low,
}

/// Ranks topics by count (descending) and splits the ranking into thirds,
/// boundaries at `ceil(n/3)` and `ceil(2n/3)`. Tied counts take the tier of
/// the first position they occupy.
pub fn assign_tiers(frequencies: &BTreeMap<String, u64>) -> BTreeMap<String, Tier> {
    let n = frequencies.len();
    let high_end = n.div_ceil(3);
    let mid_end = (2 * n).div_ceil(3);
    let mut ranked: Vec<(&String, u64)> = frequencies.iter().map(|(t, c)| (t, *c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut out = BTreeMap::new();
    let mut first_pos = 0;
    for (pos, (topic, count)) in ranked.iter().enumerate() {
        if pos > 0 && ranked[pos - 1].1 != *count {
            first_pos = pos;
        }
        let tier = if first_pos < high_end {
            Tier::High
        } else if first_pos < mid_end {
            Tier::Mid
        } else {
            Tier::Low
        };
        out.insert((*topic).clone(), tier);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicOddsRecord {
    pub topic: String,
    pub or_value: f64,
    /// Messages in group A containing the topic.
    pub count_a: u64,
    pub count_b: u64,
    pub tier_a: Tier,
    pub tier_b: Tier,
    pub smoothed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankConfig {
    /// Topics whose combined message count is below this quantile of all
    /// combined counts are dropped.
    pub quantile: f64,
    /// Length of each topic list.
    pub k: usize,
    /// Added to every cell when a zero cell exists.
    pub smoothing: f64,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            quantile: 0.30,
            k: 5,
            smoothing: 0.5,
        }
    }
}

impl RankConfig {
    pub fn validate(&self) -> Result<(), StatsError> {
        if !(0.0..=1.0).contains(&self.quantile) {
            return Err(StatsError::Config("quantile must lie in [0, 1]".into()));
        }
        if self.k == 0 {
            return Err(StatsError::Config("k must be at least 1".into()));
        }
        if !(self.smoothing > 0.0 && self.smoothing.is_finite()) {
            return Err(StatsError::Config("smoothing must be positive".into()));
        }
        Ok(())
    }
}

/// Configuration recorded alongside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub quantile: f64,
    pub k: usize,
    pub smoothing: f64,
    pub filter: Option<FilterConfig>,
}

/// Feminine and masculine topic lists for one group pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderTopicReport {
    pub scenario: String,
    pub group_label: String,
    pub group_a: String,
    pub group_b: String,
    pub messages_a: u64,
    pub messages_b: u64,
    /// Most group-A-leaning topics, OR ascending.
    pub feminine_topics: Vec<TopicOddsRecord>,
    /// Most group-B-leaning topics, OR descending.
    pub masculine_topics: Vec<TopicOddsRecord>,
    /// `ln(OR of top masculine) - ln(OR of top feminine)`; zero when a list is empty.
    pub gap: f64,
    /// Set when fewer than `k` topics were available on a side.
    pub short_lists: bool,
    /// Every topic that survived the quantile filter, OR ascending.
    pub topics: Vec<TopicOddsRecord>,
    pub config: ReportConfig,
}

/// Linear-interpolation quantile of unsorted values (the common "type 7"
/// definition).
pub fn quantile(values: &[u64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    Some(sorted[lo] as f64 + frac * (sorted[hi] as f64 - sorted[lo] as f64))
}

/// Builds the feminine/masculine topic lists from two already-filtered
/// profiles.
///
/// Counts are message-level presence taken from each profile; a topic that
/// is missing from one profile counts zero there. Group sizes come from
/// `TopicProfile::messages`. The pipeline passes both groups restricted to
/// the same eligible topic set, so a missing topic means a true zero.
pub fn rank_gendered_topics(
    profile_a: &TopicProfile,
    profile_b: &TopicProfile,
    cfg: &RankConfig,
) -> Result<GenderTopicReport, StatsError> {
    cfg.validate()?;
    let n_a = profile_a.messages;
    let n_b = profile_b.messages;
    if n_a == 0 {
        return Err(StatsError::EmptyGroup('A'));
    }
    if n_b == 0 {
        return Err(StatsError::EmptyGroup('B'));
    }
    let union: BTreeSet<&str> = profile_a.topics().chain(profile_b.topics()).collect();
    if union.is_empty() {
        return Err(StatsError::NoTopics);
    }

    let combined: Vec<u64> = union
        .iter()
        .map(|t| profile_a.messages_with(t) + profile_b.messages_with(t))
        .collect();
    let cutoff = quantile(&combined, cfg.quantile).unwrap_or(0.0);

    let tiers_a = assign_tiers(&profile_a.topic_counts);
    let tiers_b = assign_tiers(&profile_b.topic_counts);

    let mut topics = Vec::new();
    for (topic, total) in union.iter().zip(&combined) {
        if (*total as f64) < cutoff {
            continue;
        }
        let count_a = profile_a.messages_with(topic);
        let count_b = profile_b.messages_with(topic);
        let (or_value, smoothed) = smoothed_odds_ratio(count_a, n_a, count_b, n_b, cfg.smoothing)?;
        topics.push(TopicOddsRecord {
            topic: topic.to_string(),
            or_value,
            count_a,
            count_b,
            tier_a: tiers_a.get(*topic).copied().unwrap_or(Tier::Low),
            tier_b: tiers_b.get(*topic).copied().unwrap_or(Tier::Low),
            smoothed,
        });
    }
    topics.sort_by(|a, b| {
        a.or_value
            .total_cmp(&b.or_value)
            .then_with(|| a.topic.cmp(&b.topic))
    });

    let feminine: Vec<&TopicOddsRecord> = topics.iter().filter(|r| r.or_value < 1.0).collect();
    let mut masculine: Vec<&TopicOddsRecord> = topics.iter().filter(|r| r.or_value > 1.0).collect();
    masculine.sort_by(|a, b| {
        b.or_value
            .total_cmp(&a.or_value)
            .then_with(|| a.topic.cmp(&b.topic))
    });
    let len = cfg.k.min(feminine.len()).min(masculine.len());
    let feminine_topics: Vec<TopicOddsRecord> = feminine.into_iter().take(len).cloned().collect();
    let masculine_topics: Vec<TopicOddsRecord> = masculine.into_iter().take(len).cloned().collect();
    let gap = match (feminine_topics.first(), masculine_topics.first()) {
        (Some(f), Some(m)) => m.or_value.ln() - f.or_value.ln(),
        _ => 0.0,
    };

    Ok(GenderTopicReport {
        scenario: String::new(),
        group_label: String::new(),
        group_a: "female".into(),
        group_b: "male".into(),
        messages_a: n_a,
        messages_b: n_b,
        feminine_topics,
        masculine_topics,
        gap,
        short_lists: len < cfg.k,
        topics,
        config: ReportConfig {
            quantile: cfg.quantile,
            k: cfg.k,
            smoothing: cfg.smoothing,
            filter: None,
        },
    })
}
