//! Machine-readable and tabular renderings of pipeline output.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::genderstats::{GenderTopicReport, Tier, TopicOddsRecord};
use crate::weat::WeatResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub reports: Vec<GenderTopicReport>,
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn dot(tier: Tier) -> char {
    match tier {
        Tier::High => '●',
        Tier::Mid => '◐',
        Tier::Low => '○',
    }
}

fn cell(record: Option<&TopicOddsRecord>, tier: impl Fn(&TopicOddsRecord) -> Tier) -> String {
    record
        .map(|r| format!("{} {} ({:.3})", dot(tier(r)), r.topic, r.or_value))
        .unwrap_or_default()
}

/// Fixed-width table with one block per report.
pub fn render_table(reports: &[GenderTopicReport]) -> String {
    let mut out = String::new();
    for report in reports {
        let header_a = format!("{} topics", report.group_a);
        let header_b = format!("{} topics", report.group_b);
        let rows: Vec<(String, String)> = (0..report.feminine_topics.len())
            .map(|i| {
                (
                    cell(report.feminine_topics.get(i), |r| r.tier_a),
                    cell(report.masculine_topics.get(i), |r| r.tier_b),
                )
            })
            .collect();
        let width = rows
            .iter()
            .map(|(a, _)| a.chars().count())
            .chain([header_a.len()])
            .max()
            .unwrap_or(0)
            + 2;
        let _ = writeln!(
            out,
            "{} ({}: {} messages, {}: {} messages)",
            report.group_label,
            report.group_a,
            report.messages_a,
            report.group_b,
            report.messages_b
        );
        let _ = writeln!(out, "  {header_a:<width$}{header_b}");
        for (a, b) in &rows {
            let pad = width - a.chars().count();
            let _ = writeln!(out, "  {a}{}{b}", " ".repeat(pad));
        }
        if rows.is_empty() {
            let _ = writeln!(out, "  (no distinct topics)");
        }
        let _ = writeln!(out, "  gap: {:.2}", report.gap);
        if report.short_lists {
            let _ = writeln!(
                out,
                "  warning: fewer than {} topics on a side",
                report.config.k
            );
        }
        out.push('\n');
    }
    out.push_str(
        "● top third  ◐ middle third  ○ bottom third of topic frequency within the group\n",
    );
    out
}

/// One WEAT result per report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatRow {
    pub group_label: String,
    pub effect_size: f64,
    pub targets_x: usize,
    pub targets_y: usize,
    pub p_value: Option<f64>,
    pub dropped_oov: Vec<String>,
}

impl WeatRow {
    pub fn new(group_label: &str, result: &WeatResult) -> Self {
        WeatRow {
            group_label: group_label.to_string(),
            effect_size: result.effect_size,
            targets_x: result.targets_x.len(),
            targets_y: result.targets_y.len(),
            p_value: result.p_value,
            dropped_oov: result.dropped_oov.clone(),
        }
    }
}

pub fn render_weat_table(rows: &[WeatRow]) -> String {
    let width = rows
        .iter()
        .map(|r| r.group_label.len())
        .chain(["group".len()])
        .max()
        .unwrap_or(0)
        + 2;
    let mut out = format!(
        "{:<width$}{:>8}{:>6}{:>6}{:>9}  oov\n",
        "group", "weat", "|X|", "|Y|", "p"
    );
    for r in rows {
        let p = r
            .p_value
            .map(|p| format!("{p:.4}"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<width$}{:>8.3}{:>6}{:>6}{:>9}  {}",
            r.group_label,
            r.effect_size,
            r.targets_x,
            r.targets_y,
            p,
            r.dropped_oov.len()
        );
    }
    out
}
