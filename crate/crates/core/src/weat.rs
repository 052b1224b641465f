//! Plain-text word vectors and the Word Embedding Association Test.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WeatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("no vectors loaded")]
    EmptyStore,
    #[error("`{0}` is not in the embedding vocabulary")]
    OutOfVocabulary(String),
    #[error("set {0} is empty after dropping out-of-vocabulary words")]
    EmptySet(&'static str),
    #[error("associations have zero spread; effect size undefined")]
    ZeroDeviation,
    #[error("vector for `{word}` has {got} components, expected {expected}")]
    Dimension {
        word: String,
        got: usize,
        expected: usize,
    },
}

/// A line of an embedding file that was not loaded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

/// Word to dense vector table with case-folded lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dimension: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl EmbeddingStore {
    /// Builds a store from (word, vector) pairs. Words are lowercased; the
    /// first vector seen for a folded word wins.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, WeatError>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: AsRef<str>,
    {
        let mut dimension = None;
        let mut vectors = HashMap::new();
        for (word, vec) in pairs {
            let expected = *dimension.get_or_insert(vec.len());
            if vec.len() != expected || expected == 0 {
                return Err(WeatError::Dimension {
                    word: word.as_ref().to_string(),
                    got: vec.len(),
                    expected,
                });
            }
            vectors.entry(word.as_ref().to_lowercase()).or_insert(vec);
        }
        match dimension {
            Some(dimension) if !vectors.is_empty() => Ok(EmbeddingStore { dimension, vectors }),
            _ => Err(WeatError::EmptyStore),
        }
    }

    /// Reads `word v1 ... vD` lines. The dimension is taken from the first
    /// vector line; a leading `count dim` header line is recognised and
    /// skipped. Lines with a different number of components or unparsable
    /// numbers are skipped and reported. With `vocab_filter`, only words in
    /// the filter (compared case-folded) are kept.
    pub fn from_reader<R: BufRead>(
        reader: R,
        vocab_filter: Option<&BTreeSet<String>>,
    ) -> Result<(Self, Vec<SkippedLine>), WeatError> {
        let filter: Option<BTreeSet<String>> =
            vocab_filter.map(|f| f.iter().map(|w| w.to_lowercase()).collect());
        let mut dimension: Option<usize> = None;
        let mut vectors: HashMap<String, Vec<f32>> = HashMap::new();
        let mut skipped = Vec::new();

        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else {
                continue;
            };
            let rest: Vec<&str> = fields.collect();
            if idx == 0 && rest.len() == 1 && word.parse::<usize>().is_ok() {
                if let Ok(dim) = rest[0].parse::<usize>() {
                    dimension = Some(dim);
                    continue;
                }
            }
            let dim = *dimension.get_or_insert(rest.len());
            if rest.len() != dim || dim == 0 {
                skipped.push(SkippedLine {
                    line: line_no,
                    reason: format!("expected {dim} components, found {}", rest.len()),
                });
                continue;
            }
            let folded = word.to_lowercase();
            if filter.as_ref().is_some_and(|f| !f.contains(&folded)) {
                continue;
            }
            if vectors.contains_key(&folded) {
                continue;
            }
            match rest
                .iter()
                .map(|v| v.parse::<f32>())
                .collect::<Result<Vec<_>, _>>()
            {
                Ok(vec) if vec.iter().all(|x| x.is_finite()) => {
                    vectors.insert(folded, vec);
                }
                _ => skipped.push(SkippedLine {
                    line: line_no,
                    reason: "unparsable component".into(),
                }),
            }
        }
        match dimension {
            Some(dimension) if !vectors.is_empty() => {
                Ok((EmbeddingStore { dimension, vectors }, skipped))
            }
            _ => Err(WeatError::EmptyStore),
        }
    }

    pub fn load(
        path: &Path,
        vocab_filter: Option<&BTreeSet<String>>,
    ) -> Result<(Self, Vec<SkippedLine>), WeatError> {
        Self::from_reader(BufReader::new(File::open(path)?), vocab_filter)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.vectors.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(u: &[f32], v: &[f32]) -> f64 {
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (f64::from(*a), f64::from(*b));
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot / (nu.sqrt() * nv.sqrt())
    }
}

fn mean_cosine(w: &[f32], set: &[&[f32]]) -> f64 {
    set.iter().map(|a| cosine(w, a)).sum::<f64>() / set.len() as f64
}

fn lookup_all<'a>(
    store: &'a EmbeddingStore,
    words: &BTreeSet<String>,
) -> (Vec<(&'a str, &'a [f32])>, Vec<String>) {
    let mut found = Vec::new();
    let mut missing = Vec::new();
    for w in words {
        match store.vectors.get_key_value(&w.to_lowercase()) {
            Some((k, v)) => found.push((k.as_str(), v.as_slice())),
            None => missing.push(w.clone()),
        }
    }
    (found, missing)
}

/// `s(w, A, B)`: mean cosine of `w` to the A words minus mean cosine to the
/// B words. Attribute words missing from the store are ignored.
pub fn association(
    word: &str,
    attributes_a: &BTreeSet<String>,
    attributes_b: &BTreeSet<String>,
    store: &EmbeddingStore,
) -> Result<f64, WeatError> {
    let w = store
        .get(word)
        .ok_or_else(|| WeatError::OutOfVocabulary(word.to_string()))?;
    let (a, _) = lookup_all(store, attributes_a);
    let (b, _) = lookup_all(store, attributes_b);
    if a.is_empty() {
        return Err(WeatError::EmptySet("A"));
    }
    if b.is_empty() {
        return Err(WeatError::EmptySet("B"));
    }
    let a: Vec<&[f32]> = a.into_iter().map(|(_, v)| v).collect();
    let b: Vec<&[f32]> = b.into_iter().map(|(_, v)| v).collect();
    Ok(mean_cosine(w, &a) - mean_cosine(w, &b))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeatInput {
    pub targets_x: BTreeSet<String>,
    pub targets_y: BTreeSet<String>,
    pub attributes_a: BTreeSet<String>,
    pub attributes_b: BTreeSet<String>,
}

impl WeatInput {
    /// Removes words shared by both target sets.
    pub fn disjoint_targets(mut self) -> Self {
        let shared: Vec<String> = self
            .targets_x
            .intersection(&self.targets_y)
            .cloned()
            .collect();
        for w in shared {
            self.targets_x.remove(&w);
            self.targets_y.remove(&w);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordAssociation {
    pub word: String,
    pub association: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatResult {
    pub effect_size: f64,
    pub targets_x: Vec<WordAssociation>,
    pub targets_y: Vec<WordAssociation>,
    /// Input words (any set) not found in the store.
    pub dropped_oov: Vec<String>,
    /// One-sided permutation p-value, when requested.
    pub p_value: Option<f64>,
}

/// Effect size of the association difference between the two target sets.
///
/// `d = (mean_X s - mean_Y s) / sigma`, where `sigma` is the population
/// standard deviation of the associations over X and Y with each target set
/// weighted one half. For equally sized sets this is the plain population
/// standard deviation over the pooled associations; the weighting keeps
/// `|d| <= 2` when out-of-vocabulary drops leave the sets unbalanced.
/// Positive `d` means X sits closer to A than Y does.
pub fn weat_effect_size(
    input: &WeatInput,
    store: &EmbeddingStore,
) -> Result<WeatResult, WeatError> {
    let (x, mut dropped) = lookup_all(store, &input.targets_x);
    let (y, missing_y) = lookup_all(store, &input.targets_y);
    let (a, missing_a) = lookup_all(store, &input.attributes_a);
    let (b, missing_b) = lookup_all(store, &input.attributes_b);
    dropped.extend(missing_y);
    dropped.extend(missing_a);
    dropped.extend(missing_b);
    dropped.sort();
    dropped.dedup();

    for (name, len) in [
        ("X", x.len()),
        ("Y", y.len()),
        ("A", a.len()),
        ("B", b.len()),
    ] {
        if len == 0 {
            return Err(WeatError::EmptySet(name));
        }
    }
    let a: Vec<&[f32]> = a.into_iter().map(|(_, v)| v).collect();
    let b: Vec<&[f32]> = b.into_iter().map(|(_, v)| v).collect();
    let assoc = |w: &[f32]| mean_cosine(w, &a) - mean_cosine(w, &b);

    let sx: Vec<f64> = x.iter().map(|(_, v)| assoc(v)).collect();
    let sy: Vec<f64> = y.iter().map(|(_, v)| assoc(v)).collect();
    let effect_size = standardized_difference(&sx, &sy)?;

    let pack = |words: &[(&str, &[f32])], s: &[f64]| {
        words
            .iter()
            .zip(s)
            .map(|((w, _), s)| WordAssociation {
                word: w.to_string(),
                association: *s,
            })
            .collect()
    };
    Ok(WeatResult {
        effect_size,
        targets_x: pack(&x, &sx),
        targets_y: pack(&y, &sy),
        dropped_oov: dropped,
        p_value: None,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn standardized_difference(sx: &[f64], sy: &[f64]) -> Result<f64, WeatError> {
    let mx = mean(sx);
    let my = mean(sy);
    let center = 0.5 * (mx + my);
    let spread = |v: &[f64]| v.iter().map(|s| (s - center).powi(2)).sum::<f64>() / v.len() as f64;
    let sigma = (0.5 * spread(sx) + 0.5 * spread(sy)).sqrt();
    if sigma.is_nan() || sigma <= f64::EPSILON * (mx.abs() + my.abs()).max(1.0) {
        return Err(WeatError::ZeroDeviation);
    }
    Ok(((mx - my) / sigma).clamp(-2.0, 2.0))
}

/// Runs [`weat_effect_size`] and adds a one-sided permutation p-value: the
/// share of random re-partitions of X ∪ Y (same set sizes) whose test
/// statistic `sum_X s - sum_Y s` is at least the observed one.
pub fn weat_with_permutation_test(
    input: &WeatInput,
    store: &EmbeddingStore,
    permutations: usize,
    seed: u64,
) -> Result<WeatResult, WeatError> {
    let mut result = weat_effect_size(input, store)?;
    if permutations == 0 {
        return Ok(result);
    }
    let nx = result.targets_x.len();
    let mut pooled: Vec<f64> = result
        .targets_x
        .iter()
        .chain(&result.targets_y)
        .map(|w| w.association)
        .collect();
    let statistic = |v: &[f64]| v[..nx].iter().sum::<f64>() - v[nx..].iter().sum::<f64>();
    let observed = statistic(&pooled);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut at_least = 0usize;
    for _ in 0..permutations {
        pooled.shuffle(&mut rng);
        if statistic(&pooled) >= observed - 1e-12 {
            at_least += 1;
        }
    }
    result.p_value = Some(at_least as f64 / permutations as f64);
    Ok(result)
}

/// Mean association of the in-vocabulary keywords of each topic.
pub fn topic_associations(
    topics: &BTreeMap<String, BTreeSet<String>>,
    attributes_a: &BTreeSet<String>,
    attributes_b: &BTreeSet<String>,
    store: &EmbeddingStore,
) -> Result<BTreeMap<String, Option<f64>>, WeatError> {
    let (a, _) = lookup_all(store, attributes_a);
    let (b, _) = lookup_all(store, attributes_b);
    if a.is_empty() {
        return Err(WeatError::EmptySet("A"));
    }
    if b.is_empty() {
        return Err(WeatError::EmptySet("B"));
    }
    let a: Vec<&[f32]> = a.into_iter().map(|(_, v)| v).collect();
    let b: Vec<&[f32]> = b.into_iter().map(|(_, v)| v).collect();
    Ok(topics
        .iter()
        .map(|(topic, words)| {
            let (found, _) = lookup_all(store, words);
            let value = (!found.is_empty()).then(|| {
                let s: Vec<f64> = found
                    .iter()
                    .map(|(_, v)| mean_cosine(v, &a) - mean_cosine(v, &b))
                    .collect();
                mean(&s)
            });
            (topic.clone(), value)
        })
        .collect())
}
