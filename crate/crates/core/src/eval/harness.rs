use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{first_relevant_rank, hits_at, mean_average_precision, mean_precision_at, mrr};
use crate::ErrorCode;

pub const METRICS_FILE: &str = "metrics.json";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line} (query {query_id:?}): {reason}")]
    Invalid {
        line: usize,
        query_id: String,
        reason: String,
    },
    #[error("annotation file contains no records")]
    Empty,
    #[error("cannot access {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("invalid evaluation configuration: {0}")]
    Config(String),
}

impl EvalError {
    pub fn code(&self) -> ErrorCode {
        match self {
            EvalError::Io { .. } => ErrorCode::Internal,
            _ => ErrorCode::BadRequest,
        }
    }
}

/// One judged ranking. Items absent from `relevance` are irrelevant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub query_id: String,
    pub ranked_item_ids: Vec<String>,
    #[serde(default)]
    pub relevance: BTreeMap<String, u8>,
    /// 1-based rank of the single relevant item, for aspect-GUI studies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_rank: Option<usize>,
    /// Ranks before and after reranking, for rank-delta studies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub updated_rank: Option<usize>,
}

impl AnnotationRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.ranked_item_ids.is_empty() {
            return Err("ranked_item_ids is empty".into());
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.ranked_item_ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(format!("item {dup:?} is ranked twice"));
        }
        if let Some((id, v)) = self.relevance.iter().find(|(_, &v)| v > 1) {
            return Err(format!("relevance of {id:?} is {v}, expected 0 or 1"));
        }
        if let Some(r) = self.selected_rank {
            if r == 0 || r > self.ranked_item_ids.len() {
                return Err(format!(
                    "selected_rank {r} outside 1..={}",
                    self.ranked_item_ids.len()
                ));
            }
        }
        if self.initial_rank == Some(0) || self.updated_rank == Some(0) {
            return Err("ranks are 1-based".into());
        }
        Ok(())
    }

    /// Binary relevance per ranked position; the `selected_rank` position
    /// counts as relevant.
    pub fn relevance_vector(&self) -> Vec<bool> {
        self.ranked_item_ids
            .iter()
            .enumerate()
            .map(|(i, id)| self.relevance.get(id) == Some(&1) || self.selected_rank == Some(i + 1))
            .collect()
    }

    /// The rank HITS@k looks at: `selected_rank` if given, else the first
    /// relevant rank.
    pub fn target_rank(&self) -> Option<usize> {
        self.selected_rank.or_else(|| first_relevant_rank(&self.relevance_vector()))
    }

    pub fn rank_delta(&self) -> Option<i64> {
        Some(self.initial_rank? as i64 - self.updated_rank? as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Cut-offs for P@k and HITS@k.
    pub ks: Vec<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { ks: vec![1, 5, 10, 15] }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(EvalError::Config("cut-offs must be a non-empty list of positive integers".into()));
        }
        Ok(())
    }
}

/// Rank improvement `initial - updated` over records carrying both ranks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDeltaStats {
    pub n: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std_dev: f64,
    pub min: i64,
    pub max: i64,
    /// Share of records whose rank improved.
    pub improved_fraction: f64,
}

impl RankDeltaStats {
    fn from_deltas(deltas: &[i64]) -> Option<Self> {
        let n = deltas.len();
        if n == 0 {
            return None;
        }
        let mean = deltas.iter().map(|&d| d as f64).sum::<f64>() / n as f64;
        let var = deltas.iter().map(|&d| (d as f64 - mean).powi(2)).sum::<f64>() / n as f64;
        Some(Self {
            n,
            mean,
            std_dev: var.sqrt(),
            min: *deltas.iter().min().expect("non-empty"),
            max: *deltas.iter().max().expect("non-empty"),
            improved_fraction: deltas.iter().filter(|&&d| d > 0).count() as f64 / n as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_queries: usize,
    pub map: f64,
    pub mrr: f64,
    pub p_at_k: BTreeMap<usize, f64>,
    pub hits_at_k: BTreeMap<usize, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_delta: Option<RankDeltaStats>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<12} {:>10}", "metric", "value");
        let _ = writeln!(out, "{:<12} {:>10}", "queries", self.n_queries);
        let _ = writeln!(out, "{:<12} {:>10.4}", "MAP", self.map);
        let _ = writeln!(out, "{:<12} {:>10.4}", "MRR", self.mrr);
        for (k, v) in &self.p_at_k {
            let _ = writeln!(out, "{:<12} {:>10.4}", format!("P@{k}"), v);
        }
        for (k, v) in &self.hits_at_k {
            let _ = writeln!(out, "{:<12} {:>10.4}", format!("HITS@{k}"), v);
        }
        if let Some(d) = &self.rank_delta {
            let _ = writeln!(out, "{:<12} {:>10.4}", "delta mean", d.mean);
            let _ = writeln!(out, "{:<12} {:>10.4}", "delta sd", d.std_dev);
            let _ = writeln!(out, "{:<12} {:>10.4}", "improved", d.improved_fraction);
        }
        out
    }

    pub fn write_json(&self, path: &Path) -> Result<(), EvalError> {
        std::fs::write(path, self.to_json()).map_err(|e| EvalError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

/// Parses JSON-lines annotations. Blank lines are skipped; errors name the
/// 1-based line.
pub fn parse_annotations(text: &str) -> Result<Vec<AnnotationRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: AnnotationRecord = serde_json::from_str(line).map_err(|e| EvalError::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        rec.validate().map_err(|reason| EvalError::Invalid {
            line: line_no,
            query_id: rec.query_id.clone(),
            reason,
        })?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(out)
}

pub fn evaluate_records(records: &[AnnotationRecord], cfg: &EvalConfig) -> Result<MetricsReport, EvalError> {
    cfg.validate()?;
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let lists: Vec<Vec<bool>> = records.iter().map(AnnotationRecord::relevance_vector).collect();
    let targets: Vec<Option<usize>> = records.iter().map(AnnotationRecord::target_rank).collect();
    let deltas: Vec<i64> = records.iter().filter_map(AnnotationRecord::rank_delta).collect();
    Ok(MetricsReport {
        n_queries: records.len(),
        map: mean_average_precision(&lists),
        mrr: mrr(&lists),
        p_at_k: cfg.ks.iter().map(|&k| (k, mean_precision_at(&lists, k))).collect(),
        hits_at_k: cfg.ks.iter().map(|&k| (k, hits_at(&targets, k))).collect(),
        rank_delta: RankDeltaStats::from_deltas(&deltas),
    })
}

/// Reads an annotation file and computes every metric.
pub fn evaluate_run(path: &Path, cfg: &EvalConfig) -> Result<MetricsReport, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    evaluate_records(&parse_annotations(&text)?, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, items: &[&str], relevant: &[&str]) -> AnnotationRecord {
        AnnotationRecord {
            query_id: id.into(),
            ranked_item_ids: items.iter().map(|s| s.to_string()).collect(),
            relevance: relevant.iter().map(|s| (s.to_string(), 1)).collect(),
            selected_rank: None,
            initial_rank: None,
            updated_rank: None,
        }
    }

    #[test]
    fn parse_errors_name_the_line() {
        let good = serde_json::to_string(&record("q1", &["a"], &["a"])).unwrap();
        let text = format!("{good}\n\n{{not json\n");
        match parse_annotations(&text) {
            Err(EvalError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse_annotations(""), Err(EvalError::Empty)));
        assert!(matches!(parse_annotations("\n  \n"), Err(EvalError::Empty)));
    }

    #[test]
    fn invalid_selected_rank_is_rejected() {
        let mut r = record("q", &["a", "b"], &[]);
        r.selected_rank = Some(3);
        let line = serde_json::to_string(&r).unwrap();
        assert!(matches!(parse_annotations(&line), Err(EvalError::Invalid { line: 1, .. })));
    }

    #[test]
    fn unjudged_items_are_irrelevant() {
        let mut r = record("q", &["a", "b", "c"], &["c"]);
        r.relevance.insert("zzz".into(), 1);
        assert_eq!(r.relevance_vector(), [false, false, true]);
    }

    #[test]
    fn selected_rank_drives_hits() {
        let mut r = record("q", &["a", "b", "c"], &[]);
        r.selected_rank = Some(3);
        let report = evaluate_records(&[r], &EvalConfig { ks: vec![1, 15] }).unwrap();
        assert_eq!(report.hits_at_k[&1], 0.0);
        assert_eq!(report.hits_at_k[&15], 1.0);
        assert!((report.mrr - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rank_delta_statistics() {
        let mut a = record("a", &["x"], &[]);
        a.initial_rank = Some(20);
        a.updated_rank = Some(1);
        let mut b = record("b", &["x"], &[]);
        b.initial_rank = Some(3);
        b.updated_rank = Some(5);
        let report = evaluate_records(&[a, b], &EvalConfig::default()).unwrap();
        let d = report.rank_delta.unwrap();
        assert_eq!((d.n, d.min, d.max), (2, -2, 19));
        assert_eq!(d.mean, 8.5);
        assert_eq!(d.std_dev, 10.5);
        assert_eq!(d.improved_fraction, 0.5);
    }

    #[test]
    fn report_bytes_are_stable() {
        let recs = vec![record("q1", &["a", "b"], &["b"]), record("q2", &["c"], &["c"])];
        let a = evaluate_records(&recs, &EvalConfig::default()).unwrap().to_json();
        let b = evaluate_records(&recs, &EvalConfig::default()).unwrap().to_json();
        assert_eq!(a, b);
        let back: MetricsReport = serde_json::from_str(&a).unwrap();
        assert_eq!(back.to_json(), a);
    }
}
