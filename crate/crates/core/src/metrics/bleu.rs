use super::{clipped_matches, MetricError};

pub const DEFAULT_BLEU_N: usize = 4;

/// Corpus BLEU over one document: clipped n-gram matches and candidate
/// n-gram totals are summed over all sentences before taking precisions;
/// the brevity penalty uses the closest reference length per sentence
/// (shorter wins ties). No smoothing.
pub fn bleu_document(
    candidates: &[Vec<String>],
    references: &[Vec<Vec<String>>],
    max_n: usize,
) -> Result<f64, MetricError> {
    assert!(max_n >= 1, "max_n must be positive");
    if candidates.is_empty() || references.len() != candidates.len() || references.iter().any(|r| r.is_empty()) {
        return Err(MetricError::EmptyReferences);
    }
    let mut matched = vec![0usize; max_n];
    let mut total = vec![0usize; max_n];
    let mut cand_len = 0usize;
    let mut ref_len = 0usize;
    for (cand, refs) in candidates.iter().zip(references) {
        let refs: Vec<&[String]> = refs.iter().map(Vec::as_slice).collect();
        for n in 1..=max_n {
            matched[n - 1] += clipped_matches(cand, &refs, n);
            total[n - 1] += cand.len().saturating_sub(n - 1);
        }
        cand_len += cand.len();
        ref_len += refs
            .iter()
            .map(|r| r.len())
            .min_by_key(|&l| (l.abs_diff(cand.len()), l))
            .unwrap_or(0);
    }
    if cand_len == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for n in 0..max_n {
        if matched[n] == 0 || total[n] == 0 {
            return Ok(0.0);
        }
        log_sum += (matched[n] as f64 / total[n] as f64).ln();
    }
    let bp = (1.0 - ref_len as f64 / cand_len as f64).min(0.0).exp();
    Ok(bp * (log_sum / max_n as f64).exp())
}
