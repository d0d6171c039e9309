use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::alignment::{derivation_slots, AlignmentModel, NULL_SLOT};
use crate::mrl::{Constant, Mr, Predicate, Production};

/// One element of a realization pattern.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Piece {
    Word(String),
    /// Zero-based argument position, written `⟨k+1⟩`.
    Slot(usize),
}

/// Parses whitespace-separated words where `⟨k⟩` (k ≥ 1) marks argument `k`.
pub fn parse_pattern(text: &str) -> Result<Vec<Piece>, String> {
    let pieces: Vec<Piece> = text
        .split_whitespace()
        .map(|tok| match tok.strip_prefix('⟨').and_then(|r| r.strip_suffix('⟩')) {
            Some(n) => match n.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(Piece::Slot(k - 1)),
                _ => Err(format!("bad slot `{tok}`")),
            },
            None => Ok(Piece::Word(tok.to_owned())),
        })
        .collect::<Result<_, _>>()?;
    if pieces.is_empty() {
        return Err("empty pattern".into());
    }
    Ok(pieces)
}

pub fn format_pattern(pieces: &[Piece]) -> String {
    let mut out = String::new();
    for (i, p) in pieces.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        match p {
            Piece::Word(w) => out.push_str(w),
            Piece::Slot(k) => {
                let _ = write!(out, "⟨{}⟩", k + 1);
            }
        }
    }
    out
}

/// A sentence pattern for one predicate. Arguments without a slot are
/// lexicalized: the template only applies to MRs with that exact constant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Template {
    pub pieces: Vec<Piece>,
    /// Per argument position: `Some(c)` when the argument is bound to `c`.
    pub bound: Vec<Option<Constant>>,
}

impl Template {
    pub fn slot_count(&self) -> usize {
        self.pieces.iter().filter(|p| matches!(p, Piece::Slot(_))).count()
    }

    pub fn applies_to(&self, mr: &Mr) -> bool {
        self.bound.len() == mr.args().len() && self.bound.iter().zip(mr.args()).all(|(b, a)| b.is_none_or(|c| c == *a))
    }
}

/// Weighted templates per predicate and weighted surface word sequences per
/// constant; each list sums to 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TemplateLexicon {
    pub templates: BTreeMap<Predicate, Vec<(Template, f64)>>,
    pub surfaces: BTreeMap<Constant, Vec<(Vec<String>, f64)>>,
}

impl TemplateLexicon {
    pub fn templates_for(&self, pred: Predicate) -> &[(Template, f64)] {
        self.templates.get(&pred).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn surfaces_for(&self, c: Constant) -> &[(Vec<String>, f64)] {
        self.surfaces.get(&c).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Position in the derivation (NULL last) that best explains each token.
/// Earlier positions win ties, so the `*S` production beats constants.
fn assign_positions(tokens: &[String], slots: &[usize], alignment: &AlignmentModel) -> Vec<usize> {
    tokens
        .iter()
        .map(|w| {
            let mut best = (0, f64::NEG_INFINITY);
            for (pos, &slot) in slots.iter().enumerate() {
                let p = alignment.prob(slot, w);
                if p > best.1 {
                    best = (pos, p);
                }
            }
            best.0
        })
        .collect()
}

/// Splits one aligned pair into a template and the constant realizations it
/// exposes.
pub fn decompose(tokens: &[String], mr: &Mr, alignment: &AlignmentModel) -> (Template, Vec<(Constant, Vec<String>)>) {
    let slots = derivation_slots(mr);
    let positions = assign_positions(tokens, &slots, alignment);
    // production owning each token, `None` for *S and NULL
    let owner: Vec<Option<usize>> = positions
        .iter()
        .map(|&pos| {
            let slot = slots[pos];
            (pos > 0 && slot != NULL_SLOT).then_some(slot)
        })
        .collect();

    let mut pieces = Vec::new();
    let mut realizations = Vec::new();
    let mut filled = vec![false; mr.args().len()];
    let mut i = 0;
    while i < tokens.len() {
        let Some(slot) = owner[i] else {
            pieces.push(Piece::Word(tokens[i].clone()));
            i += 1;
            continue;
        };
        let mut j = i;
        while j < tokens.len() && owner[j] == Some(slot) {
            j += 1;
        }
        let constant = Production::from_index(slot)
            .and_then(Production::constant)
            .expect("constant production");
        // first unfilled argument carrying this constant
        let arg = mr
            .args()
            .iter()
            .enumerate()
            .position(|(k, &a)| a == constant && !filled[k]);
        match arg {
            Some(k) => {
                filled[k] = true;
                pieces.push(Piece::Slot(k));
                realizations.push((constant, tokens[i..j].to_vec()));
            }
            None => pieces.extend(tokens[i..j].iter().cloned().map(Piece::Word)),
        }
        i = j;
    }
    let bound = mr
        .args()
        .iter()
        .zip(&filled)
        .map(|(&a, &f)| (!f).then_some(a))
        .collect();
    (Template { pieces, bound }, realizations)
}

fn normalize<K: Ord>(counts: BTreeMap<K, f64>) -> Vec<(K, f64)> {
    let total: f64 = counts.values().sum();
    counts.into_iter().map(|(k, c)| (k, c / total)).collect()
}

/// Templates and constant surfaces read off the argmax alignment of every
/// pair; duplicates accumulate weight and each list is normalized.
pub fn extract_templates(pairs: &[(Vec<String>, Mr)], alignment: &AlignmentModel) -> TemplateLexicon {
    let mut templates: BTreeMap<Predicate, BTreeMap<Template, f64>> = BTreeMap::new();
    let mut surfaces: BTreeMap<Constant, BTreeMap<Vec<String>, f64>> = BTreeMap::new();
    for (tokens, mr) in pairs {
        let (template, realizations) = decompose(tokens, mr, alignment);
        *templates
            .entry(mr.predicate())
            .or_default()
            .entry(template)
            .or_default() += 1.0;
        for (c, words) in realizations {
            *surfaces.entry(c).or_default().entry(words).or_default() += 1.0;
        }
    }
    TemplateLexicon {
        templates: templates.into_iter().map(|(p, c)| (p, normalize(c))).collect(),
        surfaces: surfaces.into_iter().map(|(c, s)| (c, normalize(s))).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::translator::alignment::Vocabulary;
    use crate::translator::alignment::{train_alignment, SLOT_COUNT};

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    /// Alignment where each player token belongs to its own production and
    /// everything else to the `*S` productions.
    fn sharp_alignment(words: &[&str]) -> AlignmentModel {
        let vocab = Vocabulary::new(words.iter().copied());
        let v = vocab.len();
        let mut table = vec![0.0; SLOT_COUNT * v];
        let mut trained = [false; SLOT_COUNT];
        for (w, word) in vocab.words().iter().enumerate() {
            match Constant::from_token(word) {
                Some(c) => {
                    let s = Production::Constant(c).index();
                    table[s * v + w] = 1.0;
                    trained[s] = true;
                }
                None => {
                    for p in Predicate::ALL {
                        table[p.index() * v + w] = 1.0;
                        trained[p.index()] = true;
                    }
                }
            }
        }
        AlignmentModel::from_parts(vocab, table, trained)
    }

    #[test]
    fn sharp_pass_template() {
        let a = sharp_alignment(&["pink1", "kicks", "to", "pink2"]);
        let mr = Mr::parse("pass ( pink1 , pink2 )").unwrap();
        let (t, r) = decompose(&toks("pink1 kicks to pink2"), &mr, &a);
        assert_eq!(format_pattern(&t.pieces), "⟨1⟩ kicks to ⟨2⟩");
        assert_eq!(t.bound, vec![None, None]);
        assert_eq!(r.len(), 2);
        assert_eq!(r[1].1, toks("pink2"));
    }

    #[test]
    fn inverted_order() {
        let a = sharp_alignment(&["pink3", "takes", "the", "ball", "from", "purple4"]);
        let mr = Mr::parse("turnover ( purple4 , pink3 )").unwrap();
        let (t, _) = decompose(&toks("pink3 takes the ball from purple4"), &mr, &a);
        assert_eq!(format_pattern(&t.pieces), "⟨2⟩ takes the ball from ⟨1⟩");
    }

    #[test]
    fn zero_arity_has_no_slots() {
        let pairs = vec![(toks("the ball stops"), Mr::parse("ballstopped").unwrap())];
        let (a, _) = train_alignment(&pairs, 5);
        let lex = extract_templates(&pairs, &a);
        let ts = lex.templates_for(Predicate::Ballstopped);
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].0.slot_count(), 0);
        assert_eq!(ts[0].1, 1.0);
    }

    #[test]
    fn unaligned_argument_is_bound() {
        let a = sharp_alignment(&["pink1", "shoots"]);
        let mr = Mr::parse("pass ( pink1 , pink2 )").unwrap();
        let (t, _) = decompose(&toks("pink1 shoots"), &mr, &a);
        assert_eq!(format_pattern(&t.pieces), "⟨1⟩ shoots");
        assert_eq!(t.bound, vec![None, Some(Constant::from_token("pink2").unwrap())]);
        assert!(t.applies_to(&mr));
        assert!(!t.applies_to(&Mr::parse("pass ( pink1 , pink3 )").unwrap()));
    }

    #[test]
    fn weights_normalize() {
        let pairs: Vec<(Vec<String>, Mr)> = [
            ("pink1 passes to pink2", "pass ( pink1 , pink2 )"),
            ("pink2 passes to pink3", "pass ( pink2 , pink3 )"),
            ("pink3 kicks to pink1", "pass ( pink3 , pink1 )"),
            ("pink3 kicks", "kick ( pink3 )"),
        ]
        .iter()
        .map(|(s, m)| (toks(s), Mr::parse(m).unwrap()))
        .collect();
        let (a, _) = train_alignment(&pairs, 25);
        let lex = extract_templates(&pairs, &a);
        for list in lex.templates.values() {
            let s: f64 = list.iter().map(|x| x.1).sum();
            assert!((s - 1.0).abs() < 1e-9);
            for (t, w) in list {
                assert!(*w > 0.0);
                let bound = t.bound.iter().filter(|b| b.is_some()).count();
                assert_eq!(t.slot_count() + bound, t.bound.len());
            }
        }
        for list in lex.surfaces.values() {
            let s: f64 = list.iter().map(|x| x.1).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn pattern_round_trip() {
        let p = parse_pattern("⟨2⟩ takes the ball from ⟨1⟩").unwrap();
        assert_eq!(p[0], Piece::Slot(1));
        assert_eq!(format_pattern(&p), "⟨2⟩ takes the ball from ⟨1⟩");
        assert!(parse_pattern("⟨0⟩ x").is_err());
        assert!(parse_pattern("   ").is_err());
    }
}
