//! Brute-force reference implementations used to check the library.
//!
//! Written straight from the definitions with no shared code: every
//! message is rescanned for every topic and every keyword.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

pub type Lexicon = BTreeMap<String, BTreeSet<String>>;

pub fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[derive(Debug, Default, Clone)]
pub struct GroupTopic {
    pub occurrences: u64,
    pub distinct: BTreeSet<String>,
    pub messages: u64,
}

/// Per-topic statistics of one group.
pub fn group_topics(texts: &[String], lexicon: &Lexicon) -> BTreeMap<String, GroupTopic> {
    let mut out = BTreeMap::new();
    for (topic, keywords) in lexicon {
        let mut g = GroupTopic::default();
        for text in texts {
            let mut hit = false;
            for w in words(text) {
                for k in keywords {
                    if *k == w {
                        g.occurrences += 1;
                        g.distinct.insert(w.clone());
                        hit = true;
                    }
                }
            }
            if hit {
                g.messages += 1;
            }
        }
        out.insert(topic.clone(), g);
    }
    out
}

/// Keyword-diversity filter: more than `min_unique` distinct keywords, and
/// more than `min_avg` occurrences per distinct keyword.
pub fn passes(g: &GroupTopic, min_unique: usize, min_avg: f64) -> bool {
    let unique = g.distinct.len();
    unique > min_unique && g.occurrences as f64 / unique as f64 > min_avg
}

/// Sample quantile with linear interpolation between closest ranks
/// (1-based position 1 + (n - 1) q).
pub fn quantile(values: &[u64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = 1.0 + (v.len() as f64 - 1.0) * q;
    let below = pos.floor();
    let lower = v[below as usize - 1];
    let upper = if (below as usize) < v.len() {
        v[below as usize]
    } else {
        lower
    };
    lower + (pos - below) * (upper - lower)
}

/// Odds of group B over group A, smoothing every cell when any is zero.
pub fn odds(a: u64, n_a: u64, b: u64, n_b: u64, s: f64) -> f64 {
    let cells = [a, n_a - a, b, n_b - b];
    let s = if cells.contains(&0) { s } else { 0.0 };
    let odds_b = (b as f64 + s) / ((n_b - b) as f64 + s);
    let odds_a = (a as f64 + s) / ((n_a - a) as f64 + s);
    odds_b / odds_a
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    /// Every topic surviving filter and quantile cut, with its odds ratio.
    pub all: BTreeMap<String, f64>,
    pub feminine: Vec<(String, f64)>,
    pub masculine: Vec<(String, f64)>,
    pub gap: f64,
}

pub struct Params {
    pub min_unique: usize,
    pub min_avg: f64,
    pub quantile: f64,
    pub k: usize,
    pub smoothing: f64,
}

pub fn rank(texts_a: &[String], texts_b: &[String], lexicon: &Lexicon, p: &Params) -> OracleReport {
    let ga = group_topics(texts_a, lexicon);
    let gb = group_topics(texts_b, lexicon);
    // Eligible: passes the filter in at least one group.
    let names: BTreeSet<&String> = lexicon
        .keys()
        .filter(|t| {
            passes(&ga[*t], p.min_unique, p.min_avg) || passes(&gb[*t], p.min_unique, p.min_avg)
        })
        .collect();
    let count = |g: &BTreeMap<String, GroupTopic>, t: &String| g.get(t).map_or(0, |x| x.messages);
    let totals: Vec<u64> = names
        .iter()
        .map(|t| count(&ga, t) + count(&gb, t))
        .collect();
    let cut = if totals.is_empty() {
        0.0
    } else {
        quantile(&totals, p.quantile)
    };

    let (n_a, n_b) = (texts_a.len() as u64, texts_b.len() as u64);
    let mut all = BTreeMap::new();
    for (t, total) in names.iter().zip(&totals) {
        if *total as f64 >= cut {
            all.insert(
                (*t).clone(),
                odds(count(&ga, t), n_a, count(&gb, t), n_b, p.smoothing),
            );
        }
    }

    let mut feminine: Vec<(String, f64)> = all
        .iter()
        .filter(|(_, v)| **v < 1.0)
        .map(|(t, v)| (t.clone(), *v))
        .collect();
    feminine.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap().then(x.0.cmp(&y.0)));
    let mut masculine: Vec<(String, f64)> = all
        .iter()
        .filter(|(_, v)| **v > 1.0)
        .map(|(t, v)| (t.clone(), *v))
        .collect();
    masculine.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    let len = p.k.min(feminine.len()).min(masculine.len());
    feminine.truncate(len);
    masculine.truncate(len);
    let gap = if len == 0 {
        0.0
    } else {
        (masculine[0].1 / feminine[0].1).ln()
    };
    OracleReport {
        all,
        feminine,
        masculine,
        gap,
    }
}

fn cos(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    dot / (nu * nv)
}

fn s(w: &[f64], a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let ma = a.iter().map(|x| cos(w, x)).sum::<f64>() / a.len() as f64;
    let mb = b.iter().map(|x| cos(w, x)).sum::<f64>() / b.len() as f64;
    ma - mb
}

/// Effect size with a spread that gives both target sets equal weight:
/// sigma^2 = (var_X + var_Y) / 2 + ((mean_X - mean_Y) / 2)^2.
pub fn weat(x: &[Vec<f64>], y: &[Vec<f64>], a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let sx: Vec<f64> = x.iter().map(|w| s(w, a, b)).collect();
    let sy: Vec<f64> = y.iter().map(|w| s(w, a, b)).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|z| (z - m).powi(2)).sum::<f64>() / v.len() as f64
    };
    let (mx, my) = (mean(&sx), mean(&sy));
    let sigma = ((var(&sx) + var(&sy)) / 2.0 + ((mx - my) / 2.0).powi(2)).sqrt();
    (mx - my) / sigma
}

/// Textbook effect size: population deviation over the pooled X ∪ Y scores.
pub fn weat_pooled(x: &[Vec<f64>], y: &[Vec<f64>], a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let sx: Vec<f64> = x.iter().map(|w| s(w, a, b)).collect();
    let sy: Vec<f64> = y.iter().map(|w| s(w, a, b)).collect();
    let all: Vec<f64> = sx.iter().chain(&sy).copied().collect();
    let m = all.iter().sum::<f64>() / all.len() as f64;
    let sd = (all.iter().map(|z| (z - m).powi(2)).sum::<f64>() / all.len() as f64).sqrt();
    (sx.iter().sum::<f64>() / sx.len() as f64 - sy.iter().sum::<f64>() / sy.len() as f64) / sd
}
