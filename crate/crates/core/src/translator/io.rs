//! Text model format, one record per line with tab-separated fields:
//!
//! ```text
//! [alignment]
//! vocab  <word>
//! t  <production|NULL>  <word>  <prob>        (trained rows, nonzero cells)
//! [templates]
//! S  <predicate>  <weight>  <pattern>  <bound args, `-` when slotted>
//! C  <constant>  <weight>  <words>
//! [lm]
//! order  <n>
//! add_k  <k>
//! vocab  <word>
//! ngram  <w1 ... wn>  <count>
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::alignment::{AlignmentModel, Vocabulary, NULL_SLOT, SLOT_COUNT};
use super::lm::LanguageModel;
use super::templates::{format_pattern, parse_pattern, Template, TemplateLexicon};
use super::TranslationModel;
use crate::mrl::{Constant, Predicate, Production};
use crate::report::fmt_real;

#[derive(Debug, Error, PartialEq)]
#[error("model line {line}: {reason}")]
pub struct ModelFormatError {
    pub line: usize,
    pub reason: String,
}

fn slot_name(slot: usize) -> String {
    if slot == NULL_SLOT {
        "NULL".to_owned()
    } else {
        Production::from_index(slot).expect("slot index").to_string()
    }
}

pub fn save_model(model: &TranslationModel) -> String {
    let mut out = String::from("[alignment]\n");
    let a = &model.alignment;
    for w in a.vocabulary().words() {
        let _ = writeln!(out, "vocab\t{w}");
    }
    for slot in 0..SLOT_COUNT {
        if !a.is_trained(slot) {
            continue;
        }
        let name = slot_name(slot);
        for (w, &p) in a.row(slot).iter().enumerate() {
            if p > 0.0 {
                let _ = writeln!(out, "t\t{}\t{}\t{}", name, a.vocabulary().word(w), fmt_real(p));
            }
        }
    }

    out.push_str("[templates]\n");
    for (pred, list) in &model.templates.templates {
        for (t, w) in list {
            let bound: Vec<&str> = t.bound.iter().map(|b| b.map_or("-", |c| c.token())).collect();
            let _ = writeln!(
                out,
                "S\t{}\t{}\t{}\t{}",
                pred,
                fmt_real(*w),
                format_pattern(&t.pieces),
                bound.join(",")
            );
        }
    }
    for (c, list) in &model.templates.surfaces {
        for (words, w) in list {
            let _ = writeln!(out, "C\t{}\t{}\t{}", c.token(), fmt_real(*w), words.join(" "));
        }
    }

    out.push_str("[lm]\n");
    let lm = &model.lm;
    let _ = writeln!(out, "order\t{}", lm.order());
    let _ = writeln!(out, "add_k\t{}", fmt_real(lm.add_k()));
    for w in lm.vocabulary() {
        let _ = writeln!(out, "vocab\t{w}");
    }
    for (gram, c) in lm.ngram_counts() {
        let _ = writeln!(out, "ngram\t{}\t{}", gram.join(" "), c);
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Alignment,
    Templates,
    Lm,
}

pub fn load_model(text: &str) -> Result<TranslationModel, ModelFormatError> {
    let mut section = Section::None;
    let mut align_vocab = Vec::new();
    let mut cells: Vec<(usize, usize, String, f64)> = Vec::new();
    let mut templates: BTreeMap<Predicate, Vec<(Template, f64)>> = BTreeMap::new();
    let mut surfaces: BTreeMap<Constant, Vec<(Vec<String>, f64)>> = BTreeMap::new();
    let mut order = None;
    let mut add_k = None;
    let mut lm_vocab = Vec::new();
    let mut ngrams = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let err = |reason: String| ModelFormatError { line: n, reason };
        if line.trim().is_empty() {
            continue;
        }
        match line.trim() {
            "[alignment]" => {
                section = Section::Alignment;
                continue;
            }
            "[templates]" => {
                section = Section::Templates;
                continue;
            }
            "[lm]" => {
                section = Section::Lm;
                continue;
            }
            _ => {}
        }
        let f: Vec<&str> = line.split('\t').collect();
        let real = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
        match (section, f.as_slice()) {
            (Section::Alignment, ["vocab", w]) => align_vocab.push((*w).to_owned()),
            (Section::Alignment, ["t", prod, w, p]) => {
                let slot = if *prod == "NULL" {
                    NULL_SLOT
                } else {
                    prod.parse::<Production>().map_err(|e| err(e.to_string()))?.index()
                };
                cells.push((n, slot, (*w).to_owned(), real(p)?));
            }
            (Section::Templates, ["S", pred, w, pattern, bound]) => {
                let pred = Predicate::from_name(pred).ok_or_else(|| err(format!("unknown predicate `{pred}`")))?;
                let pieces = parse_pattern(pattern).map_err(err)?;
                let bound = if bound.is_empty() {
                    Vec::new()
                } else {
                    bound
                        .split(',')
                        .map(|b| match b {
                            "-" => Ok(None),
                            tok => Constant::from_token(tok)
                                .map(Some)
                                .ok_or_else(|| err(format!("unknown constant `{tok}`"))),
                        })
                        .collect::<Result<Vec<_>, _>>()?
                };
                if bound.len() != pred.arity() {
                    return Err(err(format!("`{pred}` takes {} argument(s)", pred.arity())));
                }
                templates
                    .entry(pred)
                    .or_default()
                    .push((Template { pieces, bound }, real(w)?));
            }
            (Section::Templates, ["C", c, w, words]) => {
                let c = Constant::from_token(c).ok_or_else(|| err(format!("unknown constant `{c}`")))?;
                let words = words.split_whitespace().map(str::to_owned).collect();
                surfaces.entry(c).or_default().push((words, real(w)?));
            }
            (Section::Lm, ["order", v]) => {
                order = Some(v.parse::<usize>().map_err(|_| err(format!("bad order `{v}`")))?)
            }
            (Section::Lm, ["add_k", v]) => add_k = Some(real(v)?),
            (Section::Lm, ["vocab", w]) => lm_vocab.push((*w).to_owned()),
            (Section::Lm, ["ngram", gram, c]) => {
                let c = c.parse::<u64>().map_err(|_| err(format!("bad count `{c}`")))?;
                ngrams.push((gram.split(' ').map(str::to_owned).collect::<Vec<_>>(), c));
            }
            _ => return Err(err("unrecognized record".into())),
        }
    }

    let vocab = Vocabulary::new(align_vocab);
    let v = vocab.len();
    let mut table = vec![0.0; SLOT_COUNT * v];
    let mut trained = [false; SLOT_COUNT];
    for (n, slot, w, p) in cells {
        let id = vocab.id(&w).ok_or_else(|| ModelFormatError {
            line: n,
            reason: format!("word `{w}` missing from the vocabulary"),
        })?;
        table[slot * v + id] = p;
        trained[slot] = true;
    }
    for slot in 0..SLOT_COUNT {
        if !trained[slot] && v > 0 {
            table[slot * v..(slot + 1) * v].fill(1.0 / v as f64);
        }
    }

    let order = order.ok_or(ModelFormatError {
        line: 0,
        reason: "missing lm order".into(),
    })?;
    if order == 0 || ngrams.iter().any(|(g, _)| g.len() != order) {
        return Err(ModelFormatError {
            line: 0,
            reason: "n-gram length disagrees with order".into(),
        });
    }
    let add_k = add_k.ok_or(ModelFormatError {
        line: 0,
        reason: "missing lm add_k".into(),
    })?;
    Ok(TranslationModel {
        alignment: AlignmentModel::from_parts(vocab, table, trained),
        templates: TemplateLexicon { templates, surfaces },
        lm: LanguageModel::from_counts(lm_vocab, order, add_k, ngrams),
    })
}
