use std::collections::{BTreeSet, HashMap};

use crate::mrl::{Mr, Production};

/// Column of the NULL production in the translation table.
pub const NULL_SLOT: usize = Production::COUNT;
/// Productions plus NULL.
pub const SLOT_COUNT: usize = Production::COUNT + 1;

/// Add-k mass given to every (word, production) cell when scoring.
pub const SMOOTHING_K: f64 = 1e-3;

/// Sorted word list with a reverse index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = words.into_iter().map(Into::into).collect();
        let words: Vec<String> = set.into_iter().collect();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocabulary { words, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Per-production word distributions `t(word | production)`, NULL included.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentModel {
    vocab: Vocabulary,
    /// Row-major: `table[slot * |V| + word]`.
    table: Vec<f64>,
    trained: [bool; SLOT_COUNT],
}

/// Table slots for the derivation of `mr` (with multiplicity) followed by NULL.
pub fn derivation_slots(mr: &Mr) -> Vec<usize> {
    let mut slots: Vec<usize> = mr.derivation().iter().map(|p| p.index()).collect();
    slots.push(NULL_SLOT);
    slots
}

impl AlignmentModel {
    /// Every production uniform over `vocab`.
    pub fn uniform(vocab: Vocabulary) -> Self {
        let v = vocab.len();
        let p = if v == 0 { 0.0 } else { 1.0 / v as f64 };
        AlignmentModel {
            table: vec![p; SLOT_COUNT * v],
            vocab,
            trained: [false; SLOT_COUNT],
        }
    }

    pub(crate) fn from_parts(vocab: Vocabulary, table: Vec<f64>, trained: [bool; SLOT_COUNT]) -> Self {
        debug_assert_eq!(table.len(), SLOT_COUNT * vocab.len());
        AlignmentModel { vocab, table, trained }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn is_trained(&self, slot: usize) -> bool {
        self.trained[slot]
    }

    /// Raw `t(word | slot)`; zero for unknown words.
    pub fn prob(&self, slot: usize, word: &str) -> f64 {
        self.vocab.id(word).map_or(0.0, |w| self.prob_id(slot, w))
    }

    #[inline]
    pub fn prob_id(&self, slot: usize, word: usize) -> f64 {
        self.table[slot * self.vocab.len() + word]
    }

    pub fn row(&self, slot: usize) -> &[f64] {
        let v = self.vocab.len();
        &self.table[slot * v..(slot + 1) * v]
    }

    /// Smoothing denominator shared by every cell.
    fn smoothing_norm(&self) -> f64 {
        1.0 + SMOOTHING_K * (self.vocab.len() as f64 + 1.0)
    }

    /// Score of a cell with zero raw probability; also the score of a
    /// sentence made only of unknown words.
    pub fn floor(&self) -> f64 {
        SMOOTHING_K / self.smoothing_norm()
    }

    /// Add-k smoothed `t`, treating unknown words as one extra vocabulary
    /// entry with zero raw mass.
    pub fn smoothed(&self, slot: usize, word: Option<usize>) -> f64 {
        let raw = word.map_or(0.0, |w| self.prob_id(slot, w));
        (raw + SMOOTHING_K) / self.smoothing_norm()
    }

    /// Smoothed probabilities of `word` under every slot.
    pub fn smoothed_column(&self, word: &str) -> [f64; SLOT_COUNT] {
        let id = self.vocab.id(word);
        std::array::from_fn(|slot| self.smoothed(slot, id))
    }

    /// `Σ_pairs Σ_words ln((1/(d+1)) Σ_j t(w | p_j))` with raw probabilities.
    pub fn log_likelihood(&self, pairs: &[(Vec<String>, Mr)]) -> f64 {
        let mut ll = 0.0;
        for (tokens, mr) in pairs {
            let slots = derivation_slots(mr);
            let norm = slots.len() as f64;
            for w in tokens {
                let Some(id) = self.vocab.id(w) else {
                    return f64::NEG_INFINITY;
                };
                let s: f64 = slots.iter().map(|&j| self.prob_id(j, id)).sum();
                ll += (s / norm).ln();
            }
        }
        ll
    }
}

/// Model-1 EM between sentence words and the productions of the paired MR
/// (plus NULL). Returns the model and the corpus log-likelihood before the
/// first update and after every iteration (`iterations + 1` values).
pub fn train_alignment(pairs: &[(Vec<String>, Mr)], iterations: usize) -> (AlignmentModel, Vec<f64>) {
    let vocab = Vocabulary::new(pairs.iter().flat_map(|(t, _)| t.iter().cloned()));
    let v = vocab.len();
    let mut model = AlignmentModel::uniform(vocab);
    let encoded: Vec<(Vec<usize>, Vec<usize>)> = pairs
        .iter()
        .map(|(tokens, mr)| {
            let ids = tokens
                .iter()
                .map(|w| model.vocab.id(w).expect("in vocabulary"))
                .collect();
            (ids, derivation_slots(mr))
        })
        .collect();

    let mut trace = Vec::with_capacity(iterations + 1);
    let mut counts = vec![0.0; SLOT_COUNT * v];
    for _ in 0..iterations {
        counts.iter_mut().for_each(|c| *c = 0.0);
        let mut ll = 0.0;
        for (words, slots) in &encoded {
            let norm = slots.len() as f64;
            for &w in words {
                let denom: f64 = slots.iter().map(|&j| model.table[j * v + w]).sum();
                ll += (denom / norm).ln();
                for &j in slots {
                    counts[j * v + w] += model.table[j * v + w] / denom;
                }
            }
        }
        trace.push(ll);
        for slot in 0..SLOT_COUNT {
            let row = &counts[slot * v..(slot + 1) * v];
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                for w in 0..v {
                    model.table[slot * v + w] = row[w] / total;
                }
                model.trained[slot] = true;
            }
        }
    }
    trace.push(model.log_likelihood(pairs));
    (model, trace)
}
