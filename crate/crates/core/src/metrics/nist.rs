use super::clipped_matches;

pub const DEFAULT_NIST_N: usize = 5;

/// Brevity exponent: the factor is exactly 0.5 at a length ratio of 2/3.
pub const NIST_BETA: f64 = -4.216_173_616_831_698;

pub fn nist_brevity(candidate_len: usize, reference_len: usize) -> f64 {
    if reference_len == 0 {
        return 1.0;
    }
    let ratio = (candidate_len as f64 / reference_len as f64).min(1.0);
    if ratio <= 0.0 {
        return 0.0;
    }
    (NIST_BETA * ratio.ln().powi(2)).exp()
}

/// Sum over n of clipped n-gram precision, every n-gram weighted 1, times
/// the brevity factor. Orders with no candidate n-grams add nothing.
pub fn nist(candidate: &[String], reference: &[String], max_n: usize) -> f64 {
    let refs = [reference];
    let mut sum = 0.0;
    for n in 1..=max_n {
        let total = candidate.len().saturating_sub(n - 1);
        if total == 0 {
            continue;
        }
        sum += clipped_matches(candidate, &refs, n) as f64 / total as f64;
    }
    sum * nist_brevity(candidate.len(), reference.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(t: &str) -> Vec<String> {
        t.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn beta_definition() {
        assert!((NIST_BETA - 0.5f64.ln() / 1.5f64.ln().powi(2)).abs() < 1e-12);
        assert!((nist_brevity(2, 3) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identity_is_max_n() {
        let a = s("a b c d e");
        assert!((nist(&a, &a, 5) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn partial_match() {
        let v = nist(&s("a b c"), &s("a b d"), 5);
        assert!((v - (2.0 / 3.0 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn shorter_candidate_is_penalized() {
        let full = nist(&s("a b c"), &s("a b c"), 5);
        let short = nist(&s("a b c"), &s("a b c d"), 5);
        assert!(short < full);
        assert!(nist_brevity(3, 4) < 1.0);
    }

    proptest! {
        #[test]
        fn nonnegative_and_bounded(a in proptest::collection::vec(0u8..4, 1..8),
                                   b in proptest::collection::vec(0u8..4, 1..8)) {
            let a: Vec<String> = a.iter().map(|x| x.to_string()).collect();
            let b: Vec<String> = b.iter().map(|x| x.to_string()).collect();
            let v = nist(&a, &b, 5);
            prop_assert!(v >= 0.0);
            prop_assert!(v <= 5.0 + 1e-12);
        }
    }
}
