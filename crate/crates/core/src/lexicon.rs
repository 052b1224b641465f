//! Topic lexicon, topic profiles and the keyword-diversity filter.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::token::{normalize_word, tokenize, Span};

/// Small lexicon shipped with the crate, in the same tab-separated layout as
/// the published Empath category file.
pub const BUNDLED_LEXICON: &str = include_str!("../data/lexicon.tsv");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("topic `{0}` has no keywords")]
    EmptyTopic(String),
    #[error("lexicon has no topics")]
    Empty,
    #[error("filter thresholds must be strictly positive")]
    BadFilter,
}

/// Topic name to keyword set, plus the keyword to topics transpose.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicLexicon {
    entries: BTreeMap<String, BTreeSet<String>>,
    inverted: BTreeMap<String, BTreeSet<String>>,
}

impl TopicLexicon {
    pub fn new(entries: BTreeMap<String, BTreeSet<String>>) -> Result<Self, LexiconError> {
        if entries.is_empty() {
            return Err(LexiconError::Empty);
        }
        let mut normalized = BTreeMap::new();
        for (topic, keywords) in entries {
            let keywords: BTreeSet<String> = keywords.iter().map(|k| k.to_lowercase()).collect();
            if keywords.is_empty() {
                return Err(LexiconError::EmptyTopic(topic));
            }
            normalized.insert(topic, keywords);
        }
        let inverted = transpose(&normalized);
        Ok(TopicLexicon {
            entries: normalized,
            inverted,
        })
    }

    /// Parses `topic<TAB>kw1<TAB>kw2...` lines. Keywords that are not a single
    /// token (multi-word phrases) are dropped, and a topic left with no
    /// keywords is dropped with them.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self, LexiconError> {
        let mut entries: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let topic = fields.next().unwrap_or_default().trim();
            if topic.is_empty() {
                return Err(LexiconError::Parse {
                    line: idx + 1,
                    message: "missing topic name".into(),
                });
            }
            let keywords: BTreeSet<String> = fields.filter_map(normalize_word).collect();
            if !keywords.is_empty() {
                entries
                    .entry(topic.to_string())
                    .or_default()
                    .extend(keywords);
            }
        }
        TopicLexicon::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::from_tsv(BufReader::new(File::open(path)?))
    }

    pub fn bundled() -> Self {
        Self::from_tsv(BUNDLED_LEXICON.as_bytes()).expect("bundled lexicon is valid")
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (topic, keywords) in &self.entries {
            write!(out, "{topic}")?;
            for kw in keywords {
                write!(out, "\t{kw}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn entries(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.entries
    }

    pub fn inverted(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.inverted
    }

    pub fn keywords(&self, topic: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(topic)
    }

    pub fn topics_for(&self, keyword: &str) -> Option<&BTreeSet<String>> {
        self.inverted.get(keyword)
    }

    pub fn topic_count(&self) -> usize {
        self.entries.len()
    }
}

fn transpose(entries: &BTreeMap<String, BTreeSet<String>>) -> BTreeMap<String, BTreeSet<String>> {
    let mut inverted: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (topic, keywords) in entries {
        for kw in keywords {
            inverted
                .entry(kw.clone())
                .or_default()
                .insert(topic.clone());
        }
    }
    inverted
}

/// Aggregated topic counts over a group of messages.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicProfile {
    /// Total keyword occurrences per topic.
    pub topic_counts: BTreeMap<String, u64>,
    pub keyword_counts: BTreeMap<String, BTreeMap<String, u64>>,
    /// Number of messages that contain at least one keyword of the topic.
    pub message_count: BTreeMap<String, u64>,
    /// Number of messages profiled.
    pub messages: u64,
}

impl TopicProfile {
    pub fn unique_keywords(&self, topic: &str) -> usize {
        self.keyword_counts.get(topic).map_or(0, BTreeMap::len)
    }

    pub fn messages_with(&self, topic: &str) -> u64 {
        self.message_count.get(topic).copied().unwrap_or(0)
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.topic_counts.keys().map(String::as_str)
    }

    /// Element-wise sum.
    pub fn merge(&mut self, other: &TopicProfile) {
        for (t, c) in &other.topic_counts {
            *self.topic_counts.entry(t.clone()).or_default() += c;
        }
        for (t, kws) in &other.keyword_counts {
            let mine = self.keyword_counts.entry(t.clone()).or_default();
            for (k, c) in kws {
                *mine.entry(k.clone()).or_default() += c;
            }
        }
        for (t, c) in &other.message_count {
            *self.message_count.entry(t.clone()).or_default() += c;
        }
        self.messages += other.messages;
    }

    /// Copy holding only the topics accepted by `keep`.
    pub fn restrict(&self, keep: impl Fn(&str) -> bool) -> TopicProfile {
        fn pick<V: Clone>(
            m: &BTreeMap<String, V>,
            keep: &impl Fn(&str) -> bool,
        ) -> BTreeMap<String, V> {
            m.iter()
                .filter(|(t, _)| keep(t))
                .map(|(t, v)| (t.clone(), v.clone()))
                .collect()
        }
        TopicProfile {
            topic_counts: pick(&self.topic_counts, &keep),
            keyword_counts: pick(&self.keyword_counts, &keep),
            message_count: pick(&self.message_count, &keep),
            messages: self.messages,
        }
    }

    fn add_text(&mut self, text: &str, lexicon: &TopicLexicon) {
        self.messages += 1;
        let mut seen = BTreeSet::new();
        for tok in tokenize(text) {
            let Some(topics) = lexicon.topics_for(&tok.text) else {
                continue;
            };
            for topic in topics {
                *self.topic_counts.entry(topic.clone()).or_default() += 1;
                *self
                    .keyword_counts
                    .entry(topic.clone())
                    .or_default()
                    .entry(tok.text.clone())
                    .or_default() += 1;
                if seen.insert(topic) {
                    *self.message_count.entry(topic.clone()).or_default() += 1;
                }
            }
        }
    }
}

pub fn profile_texts<'a, I>(texts: I, lexicon: &TopicLexicon) -> TopicProfile
where
    I: IntoIterator<Item = &'a str>,
{
    let mut profile = TopicProfile::default();
    for text in texts {
        profile.add_text(text, lexicon);
    }
    profile
}

/// Profiles the texts of `messages`. A keyword occurring n times contributes
/// n to every topic it belongs to.
pub fn profile_messages(
    messages: &[crate::corpus::GreetingMessage],
    lexicon: &TopicLexicon,
) -> TopicProfile {
    profile_texts(messages.iter().map(|m| m.text.as_str()), lexicon)
}

/// Thresholds of the keyword-diversity filter. Both comparisons are strict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_unique_keywords: usize,
    pub min_avg_frequency: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_unique_keywords: 5,
            min_avg_frequency: 3.0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), LexiconError> {
        if self.min_unique_keywords == 0
            || self.min_avg_frequency.is_nan()
            || self.min_avg_frequency <= 0.0
        {
            return Err(LexiconError::BadFilter);
        }
        Ok(())
    }

    pub fn keeps(&self, unique_keywords: usize, occurrences: u64) -> bool {
        unique_keywords > self.min_unique_keywords
            && occurrences as f64 / unique_keywords as f64 > self.min_avg_frequency
    }
}

/// Keeps a topic only if more than `min_unique_keywords` distinct keywords
/// matched and they occur more than `min_avg_frequency` times on average.
pub fn filter_topics(profile: &TopicProfile, cfg: &FilterConfig) -> TopicProfile {
    profile.restrict(|t| cfg.keeps(profile.unique_keywords(t), profile.topic_counts[t]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordHit {
    pub keyword: String,
    pub span: Span,
}

/// A topic found in one message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicMatch {
    pub topic: String,
    /// Keyword occurrences of the topic in the message.
    pub weight: u64,
    /// Every occurrence, in text order.
    pub keywords: Vec<KeywordHit>,
}

/// All topics matched in `text`, heaviest first, ties by topic name.
pub fn message_topics(text: &str, lexicon: &TopicLexicon) -> Vec<TopicMatch> {
    let mut by_topic: BTreeMap<&str, Vec<KeywordHit>> = BTreeMap::new();
    for tok in tokenize(text) {
        if let Some(topics) = lexicon.topics_for(&tok.text) {
            for topic in topics {
                by_topic.entry(topic).or_default().push(KeywordHit {
                    keyword: tok.text.clone(),
                    span: tok.span,
                });
            }
        }
    }
    let mut out: Vec<TopicMatch> = by_topic
        .into_iter()
        .map(|(topic, keywords)| TopicMatch {
            topic: topic.to_string(),
            weight: keywords.len() as u64,
            keywords,
        })
        .collect();
    out.sort_by(|a, b| b.weight.cmp(&a.weight).then_with(|| a.topic.cmp(&b.topic)));
    out
}

/// The `k` heaviest topics of a single message, unfiltered.
pub fn top_topics_for_message(text: &str, lexicon: &TopicLexicon, k: usize) -> Vec<TopicMatch> {
    let mut all = message_topics(text, lexicon);
    all.truncate(k);
    all
}
