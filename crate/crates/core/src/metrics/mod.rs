//! Evaluation: matching and parsing F1, document BLEU, an additive NIST
//! variant, and exact-match METEOR.

mod bleu;
mod meteor;
mod nist;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

pub use bleu::{bleu_document, DEFAULT_BLEU_N};
pub use meteor::{meteor, meteor_alignment};
pub use nist::{nist, nist_brevity, DEFAULT_NIST_N, NIST_BETA};

use crate::corpus::{Corpus, ExampleKey, GoldMap};
use crate::mrl::Mr;
use crate::translator::TranslationModel;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("no reference sentences")]
    EmptyReferences,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Matching,
    Parsing,
    Generation,
    Strategic,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Matching => "matching",
            Task::Parsing => "parsing",
            Task::Generation => "generation",
            Task::Strategic => "strategic",
        })
    }
}

/// One row of an evaluation report. `score` carries BLEU for generation and
/// a task-specific summary elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub task: Task,
    pub split: String,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub score: Option<f64>,
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_counts(task: Task, split: &str, correct: usize, predicted: usize, gold: usize) -> Self {
        let p = ratio(correct, predicted);
        let r = ratio(correct, gold);
        EvalReport {
            task,
            split: split.to_owned(),
            precision: Some(p),
            recall: Some(r),
            f1: Some(f1(p, r)),
            score: None,
        }
    }

    pub fn scored(task: Task, split: &str, score: f64) -> Self {
        EvalReport {
            task,
            split: split.to_owned(),
            precision: None,
            recall: None,
            f1: None,
            score: Some(score),
        }
    }
}

/// Precision over predicted pairs, recall over gold pairs that name an
/// event. A prediction is correct when it carries the gold MR.
pub fn matching_f1(predicted: &BTreeMap<ExampleKey, Mr>, gold: &GoldMap) -> EvalReport {
    let correct = predicted
        .iter()
        .filter(|(k, mr)| matches!(gold.get(k), Some(Some(g)) if g == *mr))
        .count();
    let gold_pairs = gold.values().filter(|g| g.is_some()).count();
    EvalReport::from_counts(Task::Matching, "all", correct, predicted.len(), gold_pairs)
}

/// Exact-match parsing scores over the comments that have a gold MR;
/// `None` parses are abstentions.
pub fn parsing_f1(parses: &BTreeMap<ExampleKey, Option<Mr>>, gold: &GoldMap) -> EvalReport {
    let mut emitted = 0;
    let mut correct = 0;
    let mut bearing = 0;
    for (key, g) in gold {
        let Some(g) = g else { continue };
        bearing += 1;
        if let Some(Some(p)) = parses.get(key) {
            emitted += 1;
            if p == g {
                correct += 1;
            }
        }
    }
    EvalReport::from_counts(Task::Parsing, "all", correct, emitted, bearing)
}

/// Every gold-matched sentence of the given games, grouped by its MR.
pub fn expand_references(corpus: &Corpus, games: &[usize]) -> BTreeMap<Mr, Vec<Vec<String>>> {
    let mut refs: BTreeMap<Mr, Vec<Vec<String>>> = BTreeMap::new();
    for &g in games {
        let game = &corpus.games[g];
        for c in &game.comments {
            if let Some(Some(mr)) = game.gold_mr(c.id) {
                refs.entry(mr.clone()).or_default().push(c.tokens.clone());
            }
        }
    }
    refs
}

/// Document BLEU of the model's top realization for every gold-matched
/// comment of `games`, against all sentences of those games sharing the MR.
/// An MR the model cannot verbalize contributes an empty sentence.
pub fn generation_bleu(model: &TranslationModel, corpus: &Corpus, games: &[usize]) -> Result<f64, MetricError> {
    let refs = expand_references(corpus, games);
    let mut candidates = Vec::new();
    let mut references = Vec::new();
    let mut cache: BTreeMap<&Mr, Vec<String>> = BTreeMap::new();
    for &g in games {
        let game = &corpus.games[g];
        for c in &game.comments {
            let Some(Some(mr)) = game.gold_mr(c.id) else { continue };
            let sentence = cache.entry(mr).or_insert_with(|| {
                model
                    .generate_topk(mr, 1)
                    .ok()
                    .and_then(|v| v.into_iter().next())
                    .map(|(t, _)| t)
                    .unwrap_or_default()
            });
            candidates.push(sentence.clone());
            references.push(refs[mr].clone());
        }
    }
    bleu_document(&candidates, &references, DEFAULT_BLEU_N)
}

pub(crate) fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 {
        for g in tokens.windows(n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

/// Matched n-grams of `candidate` with counts clipped by `reference`.
pub(crate) fn clipped_matches(candidate: &[String], references: &[&[String]], n: usize) -> usize {
    let cand = ngram_counts(candidate, n);
    let refs: Vec<_> = references.iter().map(|r| ngram_counts(r, n)).collect();
    cand.iter()
        .map(|(g, &c)| {
            let max_ref = refs.iter().map(|r| r.get(g).copied().unwrap_or(0)).max().unwrap_or(0);
            c.min(max_ref)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key(c: usize) -> ExampleKey {
        ExampleKey { game: 0, comment: c }
    }

    fn mr(s: &str) -> Mr {
        Mr::parse(s).unwrap()
    }

    #[test]
    fn matching_identity_and_empty() {
        let mut gold = GoldMap::new();
        let mut pred = BTreeMap::new();
        for i in 0..10 {
            let m = mr(&format!("kick ( pink{} )", i + 1));
            gold.insert(key(i), Some(m.clone()));
            pred.insert(key(i), m);
        }
        assert_eq!(matching_f1(&pred, &gold).f1, Some(1.0));
        assert_eq!(matching_f1(&BTreeMap::new(), &gold).f1, Some(0.0));
    }

    #[test]
    fn superfluous_ceiling() {
        // 100 comments, 18 superfluous, every comment matched and the 82 real ones correct
        let mut gold = GoldMap::new();
        let mut pred = BTreeMap::new();
        for i in 0..100 {
            let m = mr("pass ( pink1 , pink2 )");
            gold.insert(key(i), (i >= 18).then(|| m.clone()));
            pred.insert(key(i), m);
        }
        let r = matching_f1(&pred, &gold);
        let (p, rc) = (82.0 / 100.0, 1.0);
        assert!((r.precision.unwrap() - p).abs() < 1e-12);
        assert_eq!(r.recall, Some(rc));
        assert!((r.f1.unwrap() - 2.0 * p * rc / (p + rc)).abs() < 1e-12);
    }

    #[test]
    fn parsing_counts() {
        let mut gold = GoldMap::new();
        let mut parses = BTreeMap::new();
        for i in 0..12 {
            let g = mr(&format!("kick ( {} )", crate::mrl::PLAYERS[i]));
            gold.insert(key(i), Some(g.clone()));
            let parse = match i {
                0..=7 => Some(g),
                8 | 9 => Some(mr("ballstopped")),
                _ => None,
            };
            parses.insert(key(i), parse);
        }
        gold.insert(key(99), None);
        parses.insert(key(99), Some(mr("ballstopped")));
        let r = parsing_f1(&parses, &gold);
        assert!((r.precision.unwrap() - 0.8).abs() < 1e-12);
        assert!((r.recall.unwrap() - 8.0 / 12.0).abs() < 1e-12);
        assert!((r.f1.unwrap() - 0.727).abs() < 5e-4);
    }

    #[test]
    fn near_miss_is_wrong() {
        let mut gold = GoldMap::new();
        gold.insert(key(0), Some(mr("pass ( pink1 , pink2 )")));
        let mut parses = BTreeMap::new();
        parses.insert(key(0), Some(mr("pass ( pink1 , pink3 )")));
        assert_eq!(parsing_f1(&parses, &gold).f1, Some(0.0));
    }

    proptest! {
        #[test]
        fn f1_is_harmonic_mean(c in 0usize..50, extra_p in 0usize..50, extra_g in 0usize..50) {
            let r = EvalReport::from_counts(Task::Matching, "x", c, c + extra_p, c + extra_g);
            let (p, rc, f) = (r.precision.unwrap(), r.recall.unwrap(), r.f1.unwrap());
            prop_assert!((0.0..=1.0).contains(&f));
            if p + rc > 0.0 {
                prop_assert!((f - 2.0 * p * rc / (p + rc)).abs() < 1e-12);
            } else {
                prop_assert_eq!(f, 0.0);
            }
        }
    }
}
