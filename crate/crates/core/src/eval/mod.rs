//! Binary-relevance IR metrics and an offline evaluation harness.
//!
//! Unjudged items count as irrelevant. When a cut-off `k` exceeds the list
//! length, P@k is computed over the available positions, i.e. divided by the
//! list length instead of `k`.

mod harness;

pub use harness::{
    evaluate_records, evaluate_run, parse_annotations, AnnotationRecord, EvalConfig, EvalError, MetricsReport,
    RankDeltaStats, METRICS_FILE,
};

/// Mean over relevant positions `i` (1-based) of `relevant_up_to(i) / i`;
/// 0 without relevant items.
pub fn average_precision(rel: &[bool]) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &r) in rel.iter().enumerate() {
        if r {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

/// 1-based rank of the first relevant item.
pub fn first_relevant_rank(rel: &[bool]) -> Option<usize> {
    rel.iter().position(|&r| r).map(|i| i + 1)
}

/// `1 / first relevant rank`, 0 when nothing is relevant.
pub fn reciprocal_rank(rel: &[bool]) -> f64 {
    first_relevant_rank(rel).map_or(0.0, |r| 1.0 / r as f64)
}

/// Relevant items among the first `min(k, len)` positions, divided by that
/// count. Empty lists score 0.
pub fn precision_at(rel: &[bool], k: usize) -> f64 {
    assert!(k >= 1, "precision cut-off must be at least 1");
    let n = k.min(rel.len());
    if n == 0 {
        return 0.0;
    }
    rel[..n].iter().filter(|&&r| r).count() as f64 / n as f64
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean average precision over relevance lists.
pub fn mean_average_precision(lists: &[Vec<bool>]) -> f64 {
    mean(lists.iter().map(|l| average_precision(l)))
}

pub fn mrr(lists: &[Vec<bool>]) -> f64 {
    mean(lists.iter().map(|l| reciprocal_rank(l)))
}

pub fn mean_precision_at(lists: &[Vec<bool>], k: usize) -> f64 {
    mean(lists.iter().map(|l| precision_at(l, k)))
}

/// Fraction of targets whose rank is at most `k`; `None` counts as a miss.
pub fn hits_at(target_ranks: &[Option<usize>], k: usize) -> f64 {
    mean(target_ranks.iter().map(|r| if r.is_some_and(|r| r <= k) { 1.0 } else { 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(bits: &[u8]) -> Vec<bool> {
        bits.iter().map(|&b| b == 1).collect()
    }

    #[test]
    fn average_precision_examples() {
        assert!((average_precision(&rel(&[1, 0, 1])) - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert_eq!(average_precision(&rel(&[0, 0, 0])), 0.0);
        assert_eq!(average_precision(&rel(&[1, 1, 0])), 1.0);
    }

    #[test]
    fn mrr_of_ranks_one_and_two() {
        assert_eq!(mrr(&[rel(&[1, 0]), rel(&[0, 1])]), 0.75);
        assert_eq!(mrr(&[rel(&[0, 0])]), 0.0);
    }

    #[test]
    fn precision_uses_available_positions() {
        assert_eq!(precision_at(&rel(&[1, 0]), 10), 0.5);
        assert_eq!(precision_at(&rel(&[1, 0, 1, 1]), 2), 0.5);
        assert_eq!(precision_at(&[], 3), 0.0);
    }

    #[test]
    fn hits_at_cutoffs() {
        assert_eq!(hits_at(&[Some(3)], 1), 0.0);
        assert_eq!(hits_at(&[Some(3)], 15), 1.0);
        assert_eq!(hits_at(&[None, Some(1)], 1), 0.5);
    }

    #[test]
    fn appending_irrelevant_items_never_raises_precision() {
        let base = rel(&[1, 0, 1]);
        let mut longer = base.clone();
        longer.extend([false; 5]);
        for k in 1..=8 {
            assert!(precision_at(&longer, k) <= precision_at(&base, k));
        }
    }

    #[test]
    fn map_is_one_iff_relevant_items_form_a_prefix() {
        assert_eq!(mean_average_precision(&[rel(&[1, 1, 0]), rel(&[1, 0, 0])]), 1.0);
        assert!(mean_average_precision(&[rel(&[0, 1])]) < 1.0);
    }
}
