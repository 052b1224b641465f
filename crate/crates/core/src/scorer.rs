//! Per-message gender-perception score.
//!
//! Every topic matched in the message pushes the score by its log odds
//! ratio, once per keyword occurrence:
//!
//! ```text
//! raw   = sum over matched topics t of  count_t * -ln(OR_t)
//! score = 100 * logistic(raw / tau)
//! ```
//!
//! Topics absent from the snapshot count as OR = 1. The score is a
//! femininity scale: 50 is neutral, above 51 leans feminine, below 49 leans
//! masculine.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::genderstats::GenderTopicReport;
use crate::lexicon::{message_topics, KeywordHit, TopicLexicon, TopicMatch};

/// Short description of how [`score_message`] derives its score, for display
/// next to the number. The score is a constructed measure, not a calibrated one.
pub const SCORE_METHOD: &str =
    "constructed: 100 * logistic(sum of -ln(odds ratio) per matched keyword / tau)";

pub const DEFAULT_TAU: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed snapshot: {0}")]
    Format(#[from] serde_json::Error),
    #[error("invalid snapshot: {0}")]
    Invalid(String),
    #[error("score {0} outside [0, 100]")]
    OutOfRange(f64),
}

/// Topic odds ratios published for scoring. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderStatsSnapshot {
    pub version: String,
    pub tau: f64,
    pub topic_or: BTreeMap<String, f64>,
}

impl GenderStatsSnapshot {
    /// The version tag is a content hash of `tau` and `topic_or`, so equal
    /// inputs always produce the same tag.
    pub fn new(topic_or: BTreeMap<String, f64>, tau: f64) -> Result<Self, ScoreError> {
        let mut snap = GenderStatsSnapshot {
            version: String::new(),
            tau,
            topic_or,
        };
        snap.validate()?;
        snap.version = snap.content_hash();
        Ok(snap)
    }

    /// Snapshot of every topic that survived ranking in `report`.
    pub fn from_report(report: &GenderTopicReport, tau: f64) -> Result<Self, ScoreError> {
        Self::new(
            report
                .topics
                .iter()
                .map(|r| (r.topic.clone(), r.or_value))
                .collect(),
            tau,
        )
    }

    /// Empty snapshot: every topic is neutral.
    pub fn neutral() -> Self {
        Self::new(BTreeMap::new(), DEFAULT_TAU).expect("empty snapshot is valid")
    }

    fn content_hash(&self) -> String {
        let canonical =
            serde_json::to_vec(&(&self.tau, &self.topic_or)).expect("snapshot content serializes");
        hex::encode(&Sha256::digest(&canonical)[..8])
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(ScoreError::Invalid("tau must be positive".into()));
        }
        if let Some((t, or)) = self
            .topic_or
            .iter()
            .find(|(_, or)| !(**or > 0.0 && or.is_finite()))
        {
            return Err(ScoreError::Invalid(format!(
                "odds ratio for `{t}` is {or}, expected a positive number"
            )));
        }
        Ok(())
    }

    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self, ScoreError> {
        let snap: GenderStatsSnapshot = serde_json::from_reader(reader)?;
        snap.validate()?;
        Ok(snap)
    }

    pub fn load(path: &Path) -> Result<Self, ScoreError> {
        Self::from_json_reader(BufReader::new(File::open(path)?))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }

    pub fn association(&self, topic: &str) -> GenderAssoc {
        match self.topic_or.get(topic) {
            Some(or) if *or < 1.0 => GenderAssoc::Feminine,
            Some(or) if *or > 1.0 => GenderAssoc::Masculine,
            _ => GenderAssoc::Neutral,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenderAssoc {
    Feminine,
    Masculine,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Feminine,
    Masculine,
    Neutral,
}

/// Three-way banding of a score: above 51 feminine, below 49 masculine,
/// neutral in between (both ends inclusive).
pub fn band_of(score: f64) -> Result<Band, ScoreError> {
    if !(0.0..=100.0).contains(&score) {
        return Err(ScoreError::OutOfRange(score));
    }
    Ok(if score > 51.0 {
        Band::Feminine
    } else if score < 49.0 {
        Band::Masculine
    } else {
        Band::Neutral
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fragments {
    pub feminine: f64,
    pub masculine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAnalysis {
    pub topic: String,
    pub weight: u64,
    pub gender_assoc: GenderAssoc,
    pub keywords: Vec<KeywordHit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageAnalysis {
    pub score: f64,
    pub band: Band,
    pub fragments: Fragments,
    pub topics: Vec<TopicAnalysis>,
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Raw log-odds evidence of a message (positive leans feminine).
pub fn raw_evidence(text: &str, lexicon: &TopicLexicon, stats: &GenderStatsSnapshot) -> f64 {
    evidence(&message_topics(text, lexicon), stats)
}

fn evidence(matches: &[TopicMatch], stats: &GenderStatsSnapshot) -> f64 {
    matches
        .iter()
        .map(|m| {
            let or = stats.topic_or.get(&m.topic).copied().unwrap_or(1.0);
            m.weight as f64 * -or.ln()
        })
        .sum()
}

pub fn score_message(
    text: &str,
    lexicon: &TopicLexicon,
    stats: &GenderStatsSnapshot,
) -> MessageAnalysis {
    let matches = message_topics(text, lexicon);
    let raw = evidence(&matches, stats);
    let fraction = logistic(raw / stats.tau);
    let score = 100.0 * fraction;
    MessageAnalysis {
        score,
        band: band_of(score).expect("logistic output lies in [0, 100]"),
        fragments: Fragments {
            feminine: fraction,
            masculine: 1.0 - fraction,
        },
        topics: matches
            .into_iter()
            .map(|m| TopicAnalysis {
                gender_assoc: stats.association(&m.topic),
                topic: m.topic,
                weight: m.weight,
                keywords: m.keywords,
            })
            .collect(),
    }
}
