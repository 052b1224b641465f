//! Greeting-message corpora: loading, gender labelling and prompt generation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::token::{normalize_word, tokenize};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("duplicate message id `{id}` (lines {first_line} and {line})")]
    DuplicateId {
        id: String,
        first_line: usize,
        line: usize,
    },
    #[error("invalid indicator sets: {0}")]
    Indicators(String),
    #[error("no prefix configured for scenario `{0}`")]
    UnknownScenario(Scenario),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Birthday,
    Valentine,
    Wedding,
    Other,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Birthday,
        Scenario::Valentine,
        Scenario::Wedding,
        Scenario::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Birthday => "birthday",
            Scenario::Valentine => "valentine",
            Scenario::Wedding => "wedding",
            Scenario::Other => "other",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecipientGender {
    Female,
    Male,
    Neutral,
    Mixed,
}

impl RecipientGender {
    pub fn as_str(self) -> &'static str {
        match self {
            RecipientGender::Female => "female",
            RecipientGender::Male => "male",
            RecipientGender::Neutral => "neutral",
            RecipientGender::Mixed => "mixed",
        }
    }
}

impl fmt::Display for RecipientGender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgeGroup {
    All,
    Baby,
    Parent,
    Grandparent,
    Unknown,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; 5] = [
        AgeGroup::All,
        AgeGroup::Baby,
        AgeGroup::Parent,
        AgeGroup::Grandparent,
        AgeGroup::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgeGroup::All => "all",
            AgeGroup::Baby => "baby",
            AgeGroup::Parent => "parent",
            AgeGroup::Grandparent => "grandparent",
            AgeGroup::Unknown => "unknown",
        }
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgeGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgeGroup::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| format!("unknown age group `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Template,
    Generated,
    Social,
}

/// One labelled greeting message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreetingMessage {
    pub id: String,
    pub text: String,
    pub scenario: Scenario,
    pub recipient_gender: RecipientGender,
    pub age_group: AgeGroup,
    pub source: Source,
}

/// Recipient-indicator word lists, keyed by group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorSets {
    pub general_female: BTreeSet<String>,
    pub general_male: BTreeSet<String>,
    pub mother_variants: BTreeSet<String>,
    pub father_variants: BTreeSet<String>,
    pub grandmother_variants: BTreeSet<String>,
    pub grandfather_variants: BTreeSet<String>,
}

const GENERAL_FEMALE: &[&str] = &[
    "daughter",
    "hers",
    "lady",
    "grandma",
    "grandmother",
    "female",
    "aunt",
    "wife",
    "sis",
    "niece",
    "mother",
    "she",
    "girl",
    "her",
    "granny",
    "granddaughter",
    "girlfriend",
    "woman",
    "mom",
    "sister",
];
const GENERAL_MALE: &[&str] = &[
    "dude",
    "godfather",
    "grandson",
    "stepbrother",
    "boy",
    "sir",
    "he",
    "uncle",
    "man",
    "male",
    "soninlaw",
    "boyfriend",
    "brother",
    "grandpa",
    "him",
    "nephew",
    "son",
    "papa",
    "exboyfriend",
    "granddad",
    "husband",
    "stepson",
    "dad",
    "fatherinlaw",
    "daddy",
    "stepdad",
    "father",
    "grandfather",
    "bro",
    "his",
];
const MOTHER_VARIANTS: &[&str] = &[
    "mother", "mom", "mama", "mommy", "mum", "mumsy", "mamacita", "ma", "mam", "mammy",
];
const FATHER_VARIANTS: &[&str] = &[
    "father", "dad", "dada", "daddy", "baba", "papa", "pappa", "papasita", "pa", "pap", "pop",
];
const GRANDMOTHER_VARIANTS: &[&str] = &[
    "grandmother",
    "grandma",
    "grandmom",
    "grandmama",
    "grama",
    "granny",
    "gran",
    "nanny",
    "nan",
    "mammaw",
    "meemaw",
    "grammy",
];
const GRANDFATHER_VARIANTS: &[&str] = &[
    "grandfather",
    "grandpa",
    "gramp",
    "gramps",
    "grampa",
    "grandpap",
    "granda",
    "grampy",
    "granddad",
    "grandad",
    "granddaddy",
    "grandpappy",
    "pop",
    "pap",
    "pappy",
    "pawpaw",
];

fn word_set(words: &[&str]) -> BTreeSet<String> {
    words.iter().map(|w| w.to_string()).collect()
}

impl Default for IndicatorSets {
    fn default() -> Self {
        IndicatorSets {
            general_female: word_set(GENERAL_FEMALE),
            general_male: word_set(GENERAL_MALE),
            mother_variants: word_set(MOTHER_VARIANTS),
            father_variants: word_set(FATHER_VARIANTS),
            grandmother_variants: word_set(GRANDMOTHER_VARIANTS),
            grandfather_variants: word_set(GRANDFATHER_VARIANTS),
        }
    }
}

/// Which indicator lists a text matched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IndicatorMatch {
    pub female: bool,
    pub male: bool,
    pub parent: bool,
    pub grandparent: bool,
}

impl IndicatorMatch {
    pub fn gender(&self) -> RecipientGender {
        match (self.female, self.male) {
            (true, true) => RecipientGender::Mixed,
            (true, false) => RecipientGender::Female,
            (false, true) => RecipientGender::Male,
            (false, false) => RecipientGender::Neutral,
        }
    }

    pub fn age_group(&self) -> AgeGroup {
        if self.grandparent {
            AgeGroup::Grandparent
        } else if self.parent {
            AgeGroup::Parent
        } else {
            AgeGroup::Unknown
        }
    }
}

impl IndicatorSets {
    /// Validates and normalizes raw lists: every entry must be a single token,
    /// entries are lowercased, and no word may sit on both gender sides.
    pub fn new(
        general_female: impl IntoIterator<Item = String>,
        general_male: impl IntoIterator<Item = String>,
        mother_variants: impl IntoIterator<Item = String>,
        father_variants: impl IntoIterator<Item = String>,
        grandmother_variants: impl IntoIterator<Item = String>,
        grandfather_variants: impl IntoIterator<Item = String>,
    ) -> Result<Self, CorpusError> {
        let sets = IndicatorSets {
            general_female: normalize_set("general_female", general_female)?,
            general_male: normalize_set("general_male", general_male)?,
            mother_variants: normalize_set("mother_variants", mother_variants)?,
            father_variants: normalize_set("father_variants", father_variants)?,
            grandmother_variants: normalize_set("grandmother_variants", grandmother_variants)?,
            grandfather_variants: normalize_set("grandfather_variants", grandfather_variants)?,
        };
        sets.validate()?;
        Ok(sets)
    }

    /// Reads a JSON object mapping each group name to a string array.
    /// Missing groups fall back to the bundled lists.
    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self, CorpusError> {
        let raw: BTreeMap<String, Vec<String>> =
            serde_json::from_reader(reader).map_err(|e| CorpusError::Indicators(e.to_string()))?;
        let defaults = IndicatorSets::default();
        let known = [
            "general_female",
            "general_male",
            "mother_variants",
            "father_variants",
            "grandmother_variants",
            "grandfather_variants",
        ];
        if let Some(unknown) = raw.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(CorpusError::Indicators(format!(
                "unknown group `{unknown}`"
            )));
        }
        let pick = |name: &str, fallback: &BTreeSet<String>| -> Vec<String> {
            raw.get(name)
                .cloned()
                .unwrap_or_else(|| fallback.iter().cloned().collect())
        };
        IndicatorSets::new(
            pick("general_female", &defaults.general_female),
            pick("general_male", &defaults.general_male),
            pick("mother_variants", &defaults.mother_variants),
            pick("father_variants", &defaults.father_variants),
            pick("grandmother_variants", &defaults.grandmother_variants),
            pick("grandfather_variants", &defaults.grandfather_variants),
        )
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        Self::from_json_reader(BufReader::new(File::open(path)?))
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let female = self.female_side();
        let male = self.male_side();
        if female.is_empty() || male.is_empty() {
            return Err(CorpusError::Indicators(
                "both gender sides need at least one indicator".into(),
            ));
        }
        if let Some(shared) = female.intersection(&male).next() {
            return Err(CorpusError::Indicators(format!(
                "`{shared}` appears on both the female and the male side"
            )));
        }
        Ok(())
    }

    /// General female list plus mother and grandmother variants.
    pub fn female_side(&self) -> BTreeSet<&str> {
        self.general_female
            .iter()
            .chain(&self.mother_variants)
            .chain(&self.grandmother_variants)
            .map(String::as_str)
            .collect()
    }

    pub fn male_side(&self) -> BTreeSet<&str> {
        self.general_male
            .iter()
            .chain(&self.father_variants)
            .chain(&self.grandfather_variants)
            .map(String::as_str)
            .collect()
    }

    pub fn match_text(&self, text: &str) -> IndicatorMatch {
        let mut m = IndicatorMatch::default();
        for tok in tokenize(text) {
            let w = tok.text.as_str();
            let mother = self.mother_variants.contains(w);
            let father = self.father_variants.contains(w);
            let grandmother = self.grandmother_variants.contains(w);
            let grandfather = self.grandfather_variants.contains(w);
            m.female |= mother || grandmother || self.general_female.contains(w);
            m.male |= father || grandfather || self.general_male.contains(w);
            m.parent |= mother || father;
            m.grandparent |= grandmother || grandfather;
        }
        m
    }
}

fn normalize_set(
    group: &str,
    words: impl IntoIterator<Item = String>,
) -> Result<BTreeSet<String>, CorpusError> {
    words
        .into_iter()
        .map(|w| {
            normalize_word(&w).ok_or_else(|| {
                CorpusError::Indicators(format!("{group}: `{w}` is not a single token"))
            })
        })
        .collect()
}

/// Gender label implied by the recipient indicators mentioned in `text`.
pub fn classify_gender(text: &str, indicators: &IndicatorSets) -> RecipientGender {
    indicators.match_text(text).gender()
}

/// Counts of messages per (scenario, recipient gender).
pub type CorpusSummary = BTreeMap<Scenario, BTreeMap<RecipientGender, usize>>;

/// A validated, immutable list of messages with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    messages: Vec<GreetingMessage>,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    id: Option<String>,
    text: Option<String>,
    scenario: Option<Scenario>,
    recipient_gender: Option<RecipientGender>,
    age_group: Option<AgeGroup>,
    source: Option<Source>,
}

impl Corpus {
    /// Builds a corpus from already-constructed messages, checking invariants.
    pub fn new(messages: Vec<GreetingMessage>) -> Result<Self, CorpusError> {
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for (idx, msg) in messages.iter().enumerate() {
            if msg.text.trim().is_empty() {
                return Err(CorpusError::Record {
                    line: idx + 1,
                    message: "text is empty".into(),
                });
            }
            if let Some(first) = seen.insert(&msg.id, idx + 1) {
                return Err(CorpusError::DuplicateId {
                    id: msg.id.clone(),
                    first_line: first,
                    line: idx + 1,
                });
            }
        }
        Ok(Corpus { messages })
    }

    /// Parses line-delimited JSON records. Blank lines are ignored but still
    /// counted for line numbers. A missing `recipient_gender` is recomputed
    /// from the text; a missing `age_group` is inferred from the matched
    /// indicator lists.
    pub fn from_jsonl<R: BufRead>(
        reader: R,
        indicators: &IndicatorSets,
    ) -> Result<Self, CorpusError> {
        let mut messages = Vec::new();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record_err = |message: String| CorpusError::Record {
                line: line_no,
                message,
            };
            let raw: RawRecord =
                serde_json::from_str(&line).map_err(|e| record_err(e.to_string()))?;
            let id = raw
                .id
                .ok_or_else(|| record_err("missing field `id`".into()))?;
            let text = raw
                .text
                .ok_or_else(|| record_err("missing field `text`".into()))?;
            let scenario = raw
                .scenario
                .ok_or_else(|| record_err("missing field `scenario`".into()))?;
            let source = raw
                .source
                .ok_or_else(|| record_err("missing field `source`".into()))?;
            if text.trim().is_empty() {
                return Err(record_err("text is empty".into()));
            }
            if let Some(first_line) = seen.get(&id) {
                return Err(CorpusError::DuplicateId {
                    id,
                    first_line: *first_line,
                    line: line_no,
                });
            }
            seen.insert(id.clone(), line_no);

            let matched = indicators.match_text(&text);
            messages.push(GreetingMessage {
                recipient_gender: raw.recipient_gender.unwrap_or_else(|| matched.gender()),
                age_group: raw.age_group.unwrap_or_else(|| matched.age_group()),
                id,
                text,
                scenario,
                source,
            });
        }
        Ok(Corpus { messages })
    }

    pub fn load(path: &Path, indicators: &IndicatorSets) -> Result<Self, CorpusError> {
        Self::from_jsonl(BufReader::new(File::open(path)?), indicators)
    }

    /// Writes one JSON record per message, all fields explicit.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for msg in &self.messages {
            serde_json::to_writer(&mut out, msg)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Concatenates corpora, rejecting ids that collide across them.
    pub fn concat(parts: Vec<Corpus>) -> Result<Self, CorpusError> {
        Corpus::new(parts.into_iter().flat_map(|c| c.messages).collect())
    }

    pub fn messages(&self) -> &[GreetingMessage] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn summary(&self) -> CorpusSummary {
        let mut out = CorpusSummary::new();
        for msg in &self.messages {
            *out.entry(msg.scenario)
                .or_default()
                .entry(msg.recipient_gender)
                .or_default() += 1;
        }
        out
    }

    /// Scenarios present, in enum order.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let present: HashSet<Scenario> = self.messages.iter().map(|m| m.scenario).collect();
        Scenario::ALL
            .into_iter()
            .filter(|s| present.contains(s))
            .collect()
    }
}

/// Shape of a generation prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptTemplate {
    Indicator,
    Name,
    Baby,
    Endearment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub scenario_prefix: String,
    pub indicator_or_name: String,
    pub template: PromptTemplate,
    /// Only used by the baby template.
    pub gender: RecipientGender,
}

impl PromptSpec {
    pub fn render(&self) -> String {
        match self.template {
            PromptTemplate::Baby => {
                let noun = if self.gender == RecipientGender::Female {
                    "girl"
                } else {
                    "boy"
                };
                format!(
                    "{} my little baby {noun} {}!",
                    self.scenario_prefix, self.indicator_or_name
                )
            }
            _ => format!("{} {}!", self.scenario_prefix, self.indicator_or_name),
        }
    }
}

/// A rendered prompt with the labels it was generated for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub prompt: String,
    pub gender: RecipientGender,
    pub age_group: AgeGroup,
    pub template: PromptTemplate,
}

/// Wish sentence used in front of every prompt, per scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioPrefixes(pub BTreeMap<Scenario, String>);

impl Default for ScenarioPrefixes {
    fn default() -> Self {
        ScenarioPrefixes(BTreeMap::from([
            (Scenario::Birthday, "Happy birthday".to_string()),
            (Scenario::Valentine, "Happy Valentine's Day".to_string()),
            (
                Scenario::Wedding,
                "Congratulations on getting married".to_string(),
            ),
        ]))
    }
}

impl ScenarioPrefixes {
    pub fn get(&self, scenario: Scenario) -> Option<&str> {
        self.0.get(&scenario).map(String::as_str)
    }
}

/// Generation prompts for one scenario, in a fixed order: general female and
/// male indicators, names, baby prompts (birthday only), then parent and
/// grandparent endearments.
pub fn build_prompts(
    scenario: Scenario,
    prefixes: &ScenarioPrefixes,
    indicators: &IndicatorSets,
    names: &[(String, RecipientGender)],
) -> Result<Vec<Prompt>, CorpusError> {
    let prefix = prefixes
        .get(scenario)
        .ok_or(CorpusError::UnknownScenario(scenario))?;
    let mut out = Vec::new();
    let mut push = |word: &str, template, gender, age_group| {
        let spec = PromptSpec {
            scenario_prefix: prefix.to_string(),
            indicator_or_name: word.to_string(),
            template,
            gender,
        };
        out.push(Prompt {
            prompt: spec.render(),
            gender,
            age_group,
            template,
        });
    };

    use PromptTemplate::*;
    use RecipientGender::{Female, Male};
    for w in &indicators.general_female {
        push(w, Indicator, Female, AgeGroup::All);
    }
    for w in &indicators.general_male {
        push(w, Indicator, Male, AgeGroup::All);
    }
    for (name, gender) in names {
        push(name, Name, *gender, AgeGroup::All);
    }
    if scenario == Scenario::Birthday {
        for (name, gender) in names {
            push(name, Baby, *gender, AgeGroup::Baby);
        }
    }
    for w in &indicators.mother_variants {
        push(w, Endearment, Female, AgeGroup::Parent);
    }
    for w in &indicators.father_variants {
        push(w, Endearment, Male, AgeGroup::Parent);
    }
    for w in &indicators.grandmother_variants {
        push(w, Endearment, Female, AgeGroup::Grandparent);
    }
    for w in &indicators.grandfather_variants {
        push(w, Endearment, Male, AgeGroup::Grandparent);
    }
    Ok(out)
}
