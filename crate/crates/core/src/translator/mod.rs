//! The tactical model: word/production alignment, a template lexicon read
//! off that alignment, and a trigram language model. Parsing scores an MR by
//! how well its derivation explains the words; generation picks the
//! template realization maximizing `P(sentence) * P(realization | MR)`.

mod alignment;
mod io;
mod lm;
mod templates;

use std::cmp::Ordering;
use std::sync::OnceLock;

use itertools::Itertools;
use thiserror::Error;

pub use alignment::{
    derivation_slots, train_alignment, AlignmentModel, Vocabulary, NULL_SLOT, SLOT_COUNT, SMOOTHING_K,
};
pub use io::{load_model, save_model, ModelFormatError};
pub use lm::{LanguageModel, BOS, DEFAULT_ADD_K, DEFAULT_ORDER, EOS, UNK};
pub use templates::{decompose, extract_templates, format_pattern, parse_pattern, Piece, Template, TemplateLexicon};

use crate::mrl::{enumerate_mrs, Mr, Predicate};

pub const DEFAULT_EM_ITERATIONS: usize = 25;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranslatorError {
    #[error("cannot train on an empty set of pairs")]
    EmptyTrainingSet,
    #[error("no template learned for `{0}`")]
    NoTemplate(Predicate),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TranslationModel {
    pub alignment: AlignmentModel,
    pub templates: TemplateLexicon,
    pub lm: LanguageModel,
}

/// All 2018 MRs, built once.
pub fn mr_space() -> &'static [Mr] {
    static SPACE: OnceLock<Vec<Mr>> = OnceLock::new();
    SPACE.get_or_init(enumerate_mrs)
}

pub fn train(pairs: &[(Vec<String>, Mr)]) -> Result<TranslationModel, TranslatorError> {
    train_with_iterations(pairs, DEFAULT_EM_ITERATIONS)
}

pub fn train_with_iterations(
    pairs: &[(Vec<String>, Mr)],
    iterations: usize,
) -> Result<TranslationModel, TranslatorError> {
    if pairs.is_empty() {
        return Err(TranslatorError::EmptyTrainingSet);
    }
    let (alignment, _) = train_alignment(pairs, iterations.max(1));
    let templates = extract_templates(pairs, &alignment);
    let sentences: Vec<&[String]> = pairs.iter().map(|(t, _)| t.as_slice()).collect();
    let lm = LanguageModel::train(&sentences, DEFAULT_ORDER, DEFAULT_ADD_K);
    Ok(TranslationModel {
        alignment,
        templates,
        lm,
    })
}

/// Log-scores closer than about 1e-12 rank as ties, so candidates that
/// differ only by rounding fall back to canonical order.
fn quantize(log_score: f64) -> i64 {
    (log_score * 1e12).round() as i64
}

/// Smoothed `t(word | slot)` for every token, computed once per sentence.
pub struct SentenceColumns {
    columns: Vec<[f64; SLOT_COUNT]>,
}

impl TranslationModel {
    /// A model whose every production is uniform over `words`, with no
    /// templates and an empty language model.
    pub fn uniform<I: IntoIterator<Item = String>>(words: I) -> Self {
        let words: Vec<String> = words.into_iter().collect();
        TranslationModel {
            alignment: AlignmentModel::uniform(Vocabulary::new(words)),
            templates: TemplateLexicon::default(),
            lm: LanguageModel::train(&[], DEFAULT_ORDER, DEFAULT_ADD_K),
        }
    }

    pub fn columns(&self, tokens: &[String]) -> SentenceColumns {
        SentenceColumns {
            columns: tokens.iter().map(|w| self.alignment.smoothed_column(w)).collect(),
        }
    }

    /// Score of a sentence none of whose words is known.
    pub fn floor(&self) -> f64 {
        self.alignment.floor()
    }

    /// Mean per-token log-likelihood; the log of the score.
    pub fn log_score_columns(&self, cols: &SentenceColumns, mr: &Mr) -> f64 {
        if cols.columns.is_empty() {
            return self.floor().ln();
        }
        let slots = derivation_slots(mr);
        let norm = slots.len() as f64;
        let log_sum: f64 = cols
            .columns
            .iter()
            .map(|col| (slots.iter().map(|&s| col[s]).sum::<f64>() / norm).ln())
            .sum();
        log_sum / cols.columns.len() as f64
    }

    pub fn score_columns(&self, cols: &SentenceColumns, mr: &Mr) -> f64 {
        self.log_score_columns(cols, mr).exp()
    }

    /// Per-token geometric mean of the Model-1 likelihood of `tokens` given
    /// the derivation of `mr`.
    pub fn score_pair(&self, tokens: &[String], mr: &Mr) -> f64 {
        self.score_columns(&self.columns(tokens), mr)
    }

    /// Candidates (all MRs when `None`) ranked by score, best first; empty
    /// when even the best candidate explains nothing beyond the floor.
    pub fn parse_sentence(&self, tokens: &[String], candidates: Option<&[Mr]>) -> Vec<(Mr, f64)> {
        let candidates = candidates.unwrap_or_else(|| mr_space());
        let cols = self.columns(tokens);
        let mut ranked: Vec<(i64, &Mr, f64)> = candidates
            .iter()
            .map(|mr| {
                let log = self.log_score_columns(&cols, mr);
                (quantize(log), mr, log.exp())
            })
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        ranked.dedup_by(|a, b| a.1 == b.1);
        match ranked.first() {
            Some((top, _, _)) if *top > quantize(self.floor().ln()) => {
                ranked.into_iter().map(|(_, mr, s)| (mr.clone(), s)).collect()
            }
            _ => Vec::new(),
        }
    }

    /// The `k` best verbalizations of `mr` with their scores
    /// `P_lm(sentence) * template weight * Π surface weights`.
    pub fn generate_topk(&self, mr: &Mr, k: usize) -> Result<Vec<(Vec<String>, f64)>, TranslatorError> {
        let no_template = || TranslatorError::NoTemplate(mr.predicate());
        let mut scored: Vec<(Vec<String>, f64)> = Vec::new();
        for (template, weight) in self.templates.templates_for(mr.predicate()) {
            if !template.applies_to(mr) {
                continue;
            }
            let options: Vec<Vec<(Vec<String>, f64)>> = template
                .pieces
                .iter()
                .filter_map(|p| match p {
                    Piece::Slot(a) => Some(*a),
                    Piece::Word(_) => None,
                })
                .map(|a| {
                    let c = mr.args()[a];
                    let learned = self.templates.surfaces_for(c);
                    if learned.is_empty() {
                        vec![(vec![c.token().to_owned()], 1.0)]
                    } else {
                        learned.to_vec()
                    }
                })
                .collect();
            let combos: Vec<Vec<&(Vec<String>, f64)>> = if options.is_empty() {
                vec![Vec::new()]
            } else {
                options.iter().map(|o| o.iter()).multi_cartesian_product().collect()
            };
            for choice in combos {
                let mut tokens = Vec::new();
                let mut log_score = weight.ln();
                let mut filled = choice.iter();
                for p in &template.pieces {
                    match p {
                        Piece::Word(w) => tokens.push(w.clone()),
                        Piece::Slot(_) => {
                            let (words, w) = filled.next().expect("one choice per slot");
                            tokens.extend(words.iter().cloned());
                            log_score += w.ln();
                        }
                    }
                }
                log_score += self.lm.log_prob(&tokens);
                scored.push((tokens, log_score));
            }
        }
        if scored.is_empty() {
            return Err(no_template());
        }
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        let mut out: Vec<(Vec<String>, f64)> = Vec::with_capacity(k);
        for (tokens, log_score) in scored {
            if out.len() == k.max(1) {
                break;
            }
            if out.iter().any(|(t, _)| *t == tokens) {
                continue;
            }
            out.push((tokens, log_score.exp()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn mr(s: &str) -> Mr {
        Mr::parse(s).unwrap()
    }

    fn sharp_pairs() -> Vec<(Vec<String>, Mr)> {
        let mut pairs = Vec::new();
        let players = ["pink1", "pink2", "pink3", "purple1", "purple2", "purple3"];
        for (i, a) in players.iter().enumerate() {
            let b = players[(i + 1) % players.len()];
            let c = players[(i + 2) % players.len()];
            pairs.push((toks(&format!("{a} kicks to {b}")), mr(&format!("pass ( {a} , {b} )"))));
            pairs.push((toks(&format!("{a} kicks to {c}")), mr(&format!("pass ( {a} , {c} )"))));
            pairs.push((toks(&format!("{a} shoots")), mr(&format!("kick ( {a} )"))));
            pairs.push((
                toks(&format!("{b} takes the ball from {a}")),
                mr(&format!("turnover ( {a} , {b} )")),
            ));
        }
        pairs.push((toks("the ball stops"), mr("ballstopped")));
        pairs
    }

    #[test]
    fn empty_training_set() {
        assert_eq!(train(&[]).unwrap_err(), TranslatorError::EmptyTrainingSet);
    }

    #[test]
    fn memorizes_a_single_pair() {
        let pairs = vec![(toks("pink1 passes to pink2"), mr("pass ( pink1 , pink2 )"))];
        let model = train(&pairs).unwrap();
        let out = model.generate_topk(&pairs[0].1, 3).unwrap();
        assert_eq!(out[0].0, pairs[0].0);
    }

    #[test]
    fn unseen_predicate_has_no_template() {
        let model = train(&sharp_pairs()).unwrap();
        assert_eq!(
            model.generate_topk(&mr("block ( pink1 )"), 1).unwrap_err(),
            TranslatorError::NoTemplate(Predicate::Block)
        );
    }

    #[test]
    fn sharp_parse_and_generate() {
        let model = train(&sharp_pairs()).unwrap();
        let sentence = toks("pink1 kicks to pink2");
        let ranked = model.parse_sentence(&sentence, None);
        assert_eq!(ranked[0].0, mr("pass ( pink1 , pink2 )"));
        // the word/production likelihood ignores argument order, so only the
        // swapped MR ties with the intended one
        let swapped = mr("pass ( pink2 , pink1 )");
        for (m, s) in &ranked[1..] {
            if *m == swapped {
                assert!((s - ranked[0].1).abs() < 1e-12);
            } else {
                assert!(*s < ranked[0].1, "{m}");
            }
        }

        let top = model.generate_topk(&mr("pass ( pink1 , pink2 )"), 1).unwrap();
        assert_eq!(top[0].0, sentence);
        let top = model.generate_topk(&mr("turnover ( purple1 , pink3 )"), 1).unwrap();
        assert_eq!(top[0].0, toks("pink3 takes the ball from purple1"));
    }

    #[test]
    fn floor_for_unknown_words() {
        let model = train(&sharp_pairs()).unwrap();
        let s = model.score_pair(&toks("zzz yyy"), &mr("pass ( pink1 , pink2 )"));
        assert!((s - model.floor()).abs() < 1e-15);
        assert!(model.parse_sentence(&toks("zzz yyy"), None).is_empty());
    }

    #[test]
    fn uniform_model_ties_break_canonically() {
        let model = TranslationModel::uniform(toks("a b"));
        let ranked = model.parse_sentence(&toks("a b"), None);
        assert_eq!(ranked.len(), 2018);
        let mut space = mr_space().to_vec();
        space.sort();
        assert_eq!(ranked[0].0, space[0]);
    }

    #[test]
    fn singleton_candidates() {
        let model = train(&sharp_pairs()).unwrap();
        let only = [mr("kick ( purple9 )")];
        let ranked = model.parse_sentence(&toks("pink1 shoots"), Some(&only));
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].0, only[0]);
    }

    #[test]
    fn k_larger_than_candidates() {
        let model = train(&sharp_pairs()).unwrap();
        let out = model.generate_topk(&mr("ballstopped"), 50).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn template_rescale_keeps_rankings() {
        let model = train(&sharp_pairs()).unwrap();
        let mut scaled = model.clone();
        for list in scaled.templates.templates.values_mut() {
            for (_, w) in list.iter_mut() {
                *w *= 3.5;
            }
        }
        for m in [
            "pass ( pink1 , pink2 )",
            "kick ( purple3 )",
            "turnover ( pink2 , purple1 )",
        ] {
            let a: Vec<_> = model
                .generate_topk(&mr(m), 5)
                .unwrap()
                .into_iter()
                .map(|x| x.0)
                .collect();
            let b: Vec<_> = scaled
                .generate_topk(&mr(m), 5)
                .unwrap()
                .into_iter()
                .map(|x| x.0)
                .collect();
            assert_eq!(a, b);
        }
        let s = toks("pink3 shoots");
        let a: Vec<_> = model.parse_sentence(&s, None).into_iter().map(|x| x.0).collect();
        let b: Vec<_> = scaled.parse_sentence(&s, None).into_iter().map(|x| x.0).collect();
        assert_eq!(a, b);
    }
}
