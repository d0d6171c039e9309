use std::collections::HashMap;

/// Past this many reference tokens the exact chunk search gives way to a
/// greedy left-to-right alignment.
const EXACT_SEARCH_LIMIT: usize = 64;

/// Exact-unigram alignment with the most matches and, among those, the
/// fewest chunks. Returns `(matches, chunks)`.
pub fn meteor_alignment(candidate: &[String], reference: &[String]) -> (usize, usize) {
    if reference.len() > EXACT_SEARCH_LIMIT || candidate.len() > EXACT_SEARCH_LIMIT {
        return greedy_alignment(candidate, reference);
    }
    let mut search = Search {
        cand: candidate,
        refr: reference,
        memo: HashMap::new(),
    };
    let mut ref_count: HashMap<&str, usize> = HashMap::new();
    for w in reference {
        *ref_count.entry(w.as_str()).or_default() += 1;
    }
    let mut cand_count: HashMap<&str, usize> = HashMap::new();
    for w in candidate {
        *cand_count.entry(w.as_str()).or_default() += 1;
    }
    let matches: usize = cand_count
        .iter()
        .map(|(w, &c)| c.min(ref_count.get(w).copied().unwrap_or(0)))
        .sum();
    if matches == 0 {
        return (0, 0);
    }
    let quota: HashMap<&str, usize> = cand_count
        .iter()
        .map(|(w, &c)| (*w, c.min(ref_count.get(w).copied().unwrap_or(0))))
        .collect();
    let chunks = search.best(0, 0, None, &quota, &cand_count);
    (matches, chunks)
}

struct Search<'a> {
    cand: &'a [String],
    refr: &'a [String],
    memo: HashMap<(usize, u64, Option<usize>), usize>,
}

impl<'a> Search<'a> {
    /// Fewest chunks for candidate positions `i..` given used reference
    /// positions `used` and the reference position aligned to `i - 1`.
    /// `quota` is the number of matches each word still needs and
    /// `remaining` its occurrences in the candidate from `i` on.
    fn best(
        &mut self,
        i: usize,
        used: u64,
        prev: Option<usize>,
        quota: &HashMap<&'a str, usize>,
        remaining: &HashMap<&'a str, usize>,
    ) -> usize {
        if i == self.cand.len() {
            return 0;
        }
        if let Some(&v) = self.memo.get(&(i, used, prev)) {
            return v;
        }
        let w = self.cand[i].as_str();
        let need = quota.get(w).copied().unwrap_or(0);
        let left = remaining.get(w).copied().unwrap_or(0);
        let mut rem = remaining.clone();
        *rem.get_mut(w).expect("counted") -= 1;

        let mut best = usize::MAX;
        // leave position i unaligned only if the quota is still reachable
        if left > need {
            best = self.best(i + 1, used, None, quota, &rem);
        }
        if need > 0 {
            let mut q = quota.clone();
            *q.get_mut(w).expect("counted") -= 1;
            for j in 0..self.refr.len() {
                if used & (1 << j) != 0 || self.refr[j] != w {
                    continue;
                }
                let opens = if prev.is_some_and(|p| p + 1 == j) { 0 } else { 1 };
                let v = opens + self.best(i + 1, used | (1 << j), Some(j), &q, &rem);
                best = best.min(v);
            }
        }
        self.memo.insert((i, used, prev), best);
        best
    }
}

fn greedy_alignment(candidate: &[String], reference: &[String]) -> (usize, usize) {
    let mut used = vec![false; reference.len()];
    let mut matches = 0;
    let mut chunks = 0;
    let mut prev: Option<usize> = None;
    for w in candidate {
        // prefer continuing the current chunk
        let next = prev
            .map(|p| p + 1)
            .filter(|&j| j < reference.len() && !used[j] && reference[j] == *w)
            .or_else(|| (0..reference.len()).find(|&j| !used[j] && reference[j] == *w));
        match next {
            Some(j) => {
                if prev.is_none_or(|p| p + 1 != j) {
                    chunks += 1;
                }
                used[j] = true;
                matches += 1;
                prev = Some(j);
            }
            None => prev = None,
        }
    }
    (matches, chunks)
}

/// `F_mean * (1 - 0.5 (chunks / matches)^3)` with
/// `F_mean = 10PR / (R + 9P)`; zero without matches.
pub fn meteor(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let (m, chunks) = meteor_alignment(candidate, reference);
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let f_mean = 10.0 * p * r / (r + 9.0 * p);
    let penalty = 0.5 * (chunks as f64 / m as f64).powi(3);
    f_mean * (1.0 - penalty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(t: &str) -> Vec<String> {
        t.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn identity() {
        let a = s("a b c d");
        assert_eq!(meteor_alignment(&a, &a), (4, 1));
        // F_mean = 1 and one chunk over four matches
        assert!((meteor(&a, &a) - (1.0 - 0.5 / 64.0)).abs() < 1e-12);
    }

    #[test]
    fn two_chunks() {
        assert_eq!(meteor_alignment(&s("c d a b"), &s("a b c d")), (4, 2));
        assert!((meteor(&s("c d a b"), &s("a b c d")) - 0.9375).abs() < 1e-12);
    }

    #[test]
    fn no_overlap() {
        assert_eq!(meteor(&s("a b"), &s("c d")), 0.0);
    }

    #[test]
    fn repeated_words_pick_fewest_chunks() {
        // aligning the second `a` to the first reference `a` would split the run
        assert_eq!(meteor_alignment(&s("a x a b"), &s("a b")), (2, 1));
        assert_eq!(meteor_alignment(&s("the ball the ball"), &s("the ball")), (2, 1));
    }

    #[test]
    fn greedy_fallback_on_long_input() {
        let long: Vec<String> = (0..80).map(|i| format!("w{i}")).collect();
        assert_eq!(meteor_alignment(&long, &long), (80, 1));
    }

    fn brute(c: &[String], r: &[String]) -> (usize, usize) {
        // every injective partial map from candidate to reference positions
        fn go(
            i: usize,
            c: &[String],
            r: &[String],
            used: &mut Vec<bool>,
            map: &mut Vec<Option<usize>>,
            best: &mut (usize, usize),
        ) {
            if i == c.len() {
                let m = map.iter().filter(|x| x.is_some()).count();
                let mut chunks = 0;
                for k in 0..map.len() {
                    if let Some(j) = map[k] {
                        if k == 0 || map[k - 1] != Some(j.wrapping_sub(1)) || j == 0 {
                            chunks += 1;
                        }
                    }
                }
                if m > best.0 || (m == best.0 && chunks < best.1) {
                    *best = (m, chunks);
                }
                return;
            }
            map.push(None);
            go(i + 1, c, r, used, map, best);
            map.pop();
            for j in 0..r.len() {
                if !used[j] && r[j] == c[i] {
                    used[j] = true;
                    map.push(Some(j));
                    go(i + 1, c, r, used, map, best);
                    map.pop();
                    used[j] = false;
                }
            }
        }
        let mut best = (0, usize::MAX);
        go(0, c, r, &mut vec![false; r.len()], &mut Vec::new(), &mut best);
        if best.0 == 0 {
            (0, 0)
        } else {
            best
        }
    }

    proptest! {
        #[test]
        fn matches_brute_force(a in proptest::collection::vec(0u8..3, 1..7),
                               b in proptest::collection::vec(0u8..3, 1..7)) {
            let a: Vec<String> = a.iter().map(|x| x.to_string()).collect();
            let b: Vec<String> = b.iter().map(|x| x.to_string()).collect();
            prop_assert_eq!(meteor_alignment(&a, &b), brute(&a, &b));
            let v = meteor(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
