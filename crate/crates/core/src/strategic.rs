//! Which event types get talked about: a direct estimate from a matching,
//! the iterative estimate from ambiguous examples, and the sportscast
//! assembler that uses either to decide what to verbalize.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use log::debug;
use thiserror::Error;

use crate::corpus::{AmbiguousExample, GameEvent};
use crate::mrl::{Mr, Predicate};
use crate::report::fmt_real;
use crate::simgen::Prng;
use crate::translator::{TranslationModel, TranslatorError};

pub const DEFAULT_IGSL_MAX_ITER: usize = 50;
pub const IGSL_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_TICK_MS: u64 = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum StrategicError {
    #[error("example {0} has no candidate events")]
    EmptyCandidates(usize),
    #[error("strategic model line {line}: {reason}")]
    Format { line: usize, reason: String },
}

/// Per-predicate probability of being commented on, with the number of
/// occurrences in the trace it was estimated from.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategicModel {
    pub prob: [f64; 9],
    pub total_count: [usize; 9],
}

impl StrategicModel {
    pub fn prob_of(&self, p: Predicate) -> f64 {
        self.prob[p.index()]
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for p in Predicate::ALL {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                p,
                fmt_real(self.prob[p.index()]),
                self.total_count[p.index()]
            );
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, StrategicError> {
        let mut model = StrategicModel {
            prob: [0.0; 9],
            total_count: [0; 9],
        };
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |reason: String| StrategicError::Format { line: i + 1, reason };
            let f: Vec<&str> = line.split('\t').collect();
            let [pred, prob, count] = f.as_slice() else {
                return Err(err("expected `predicate\\tprob\\ttotal_count`".into()));
            };
            let p = Predicate::from_name(pred).ok_or_else(|| err(format!("unknown predicate `{pred}`")))?;
            let prob: f64 = prob.parse().map_err(|_| err(format!("bad probability `{prob}`")))?;
            if !(0.0..=1.0).contains(&prob) {
                return Err(err(format!("probability {prob} outside [0, 1]")));
            }
            model.prob[p.index()] = prob;
            model.total_count[p.index()] = count.parse().map_err(|_| err(format!("bad count `{count}`")))?;
        }
        Ok(model)
    }
}

fn ratio_or_zero(num: f64, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num / den as f64
    }
}

/// Fraction of each predicate's events that some sentence was matched to.
/// Takes each game's trace with the ids of its matched events.
pub fn estimate_from_matching(games: &[(&[GameEvent], &BTreeSet<usize>)]) -> StrategicModel {
    let mut total = [0usize; 9];
    let mut matched = [0usize; 9];
    for (events, ids) in games {
        for e in events.iter() {
            let i = e.mr.predicate().index();
            total[i] += 1;
            if ids.contains(&e.id) {
                matched[i] += 1;
            }
        }
    }
    StrategicModel {
        prob: std::array::from_fn(|i| ratio_or_zero(matched[i] as f64, total[i])),
        total_count: total,
    }
}

/// Share of one sentence's match attributed to each predicate: the summed
/// probability of its candidates of that type over the summed probability of
/// all its candidates.
pub fn prob_of_match(candidates: &[Predicate], prob: &[f64; 9]) -> [f64; 9] {
    let mut share = [0.0; 9];
    let denom: f64 = candidates.iter().map(|p| prob[p.index()]).sum();
    if denom > 0.0 {
        for p in candidates {
            share[p.index()] += prob[p.index()] / denom;
        }
    }
    share
}

/// One simultaneous update of every predicate's probability.
pub fn igsl_step(sentences: &[Vec<Predicate>], total_count: &[usize; 9], prob: &[f64; 9]) -> [f64; 9] {
    let mut match_count = [0.0; 9];
    for cands in sentences {
        for (m, s) in match_count.iter_mut().zip(prob_of_match(cands, prob)) {
            *m += s;
        }
    }
    std::array::from_fn(|i| ratio_or_zero(match_count[i], total_count[i]).min(1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IgslResult {
    pub model: StrategicModel,
    /// Probabilities after each iteration.
    pub history: Vec<[f64; 9]>,
}

impl IgslResult {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }
}

/// Iterates from all-ones until the largest change drops below 1e-9 or
/// `max_iter` updates have run.
pub fn igsl(
    examples: &[AmbiguousExample],
    total_count: [usize; 9],
    max_iter: usize,
) -> Result<IgslResult, StrategicError> {
    let mut sentences = Vec::with_capacity(examples.len());
    for (i, ex) in examples.iter().enumerate() {
        if ex.candidates.is_empty() {
            return Err(StrategicError::EmptyCandidates(i));
        }
        sentences.push(ex.candidates.iter().map(|e| e.mr.predicate()).collect::<Vec<_>>());
    }
    let mut prob = [1.0; 9];
    let mut history = Vec::new();
    for _ in 0..max_iter {
        let next = igsl_step(&sentences, &total_count, &prob);
        let change = next.iter().zip(&prob).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prob = next;
        history.push(prob);
        if change < IGSL_TOLERANCE {
            break;
        }
    }
    Ok(IgslResult {
        model: StrategicModel { prob, total_count },
        history,
    })
}

/// Stage-one selection probabilities: each event's type probability over
/// the sum for all co-occurring events.
pub fn selection_distribution(events: &[&GameEvent], model: &StrategicModel) -> Option<Vec<f64>> {
    let weights: Vec<f64> = events.iter().map(|e| model.prob_of(e.mr.predicate())).collect();
    let total: f64 = weights.iter().sum();
    (total > 0.0).then(|| weights.iter().map(|w| w / total).collect())
}

/// Stage one: the index of one co-occurring event, drawn proportionally to
/// its type's probability. `None` when every type has probability zero.
pub fn draw_candidate(events: &[&GameEvent], model: &StrategicModel, rng: &mut Prng) -> Option<usize> {
    let weights: Vec<f64> = events.iter().map(|e| model.prob_of(e.mr.predicate())).collect();
    rng.weighted_index(&weights)
}

/// Picks one of the co-occurring events proportionally to its type's
/// probability, then keeps it with that same probability.
pub fn select_event<'a>(events: &[&'a GameEvent], model: &StrategicModel, rng: &mut Prng) -> Option<&'a GameEvent> {
    let picked = events[draw_candidate(events, model, rng)?];
    rng.bernoulli(model.prob_of(picked.mr.predicate())).then_some(picked)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TranscriptLine {
    pub time_ms: u64,
    pub mr: Mr,
    pub tokens: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Sportscast {
    pub lines: Vec<TranscriptLine>,
    /// Selected events whose predicate has no learned template.
    pub skipped: usize,
}

impl Sportscast {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let _ = writeln!(out, "{}\t{}\t{}", l.time_ms, l.mr, l.tokens.join(" "));
        }
        out
    }
}

/// Walks the trace in ticks of `tick_ms`; in each tick selects at most one
/// event and verbalizes it with one of the top `k` realizations, drawn
/// proportionally to score.
pub fn assemble_sportscast(
    events: &[GameEvent],
    strategic: &StrategicModel,
    model: &TranslationModel,
    k: usize,
    tick_ms: u64,
    rng: &mut Prng,
) -> Sportscast {
    let tick_ms = tick_ms.max(1);
    let mut cast = Sportscast::default();
    let mut i = 0;
    while i < events.len() {
        let tick = events[i].time_ms / tick_ms;
        let mut j = i;
        while j < events.len() && events[j].time_ms / tick_ms == tick {
            j += 1;
        }
        let group: Vec<&GameEvent> = events[i..j].iter().collect();
        i = j;
        let Some(event) = select_event(&group, strategic, rng) else {
            continue;
        };
        match model.generate_topk(&event.mr, k.max(1)) {
            Ok(options) => {
                let weights: Vec<f64> = options.iter().map(|o| o.1).collect();
                let pick = rng.weighted_index(&weights).unwrap_or(0);
                cast.lines.push(TranscriptLine {
                    time_ms: tick * tick_ms,
                    mr: event.mr.clone(),
                    tokens: options[pick].0.clone(),
                });
            }
            Err(TranslatorError::NoTemplate(p)) => {
                debug!("no template for `{p}`; event {} left unspoken", event.id);
                cast.skipped += 1;
            }
            Err(e) => debug!("generation failed for event {}: {e}", event.id),
        }
    }
    cast
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Comment;
    use proptest::prelude::*;

    fn ev(id: usize, t: u64, mr: &str) -> GameEvent {
        GameEvent {
            id,
            time_ms: t,
            mr: Mr::parse(mr).unwrap(),
        }
    }

    fn example(id: usize, cands: &[GameEvent]) -> AmbiguousExample {
        AmbiguousExample {
            game: 0,
            comment: Comment::new(id, 0, "en", "x").unwrap(),
            candidates: cands.to_vec(),
        }
    }

    fn model(pairs: &[(Predicate, f64)]) -> StrategicModel {
        let mut prob = [0.0; 9];
        for &(p, v) in pairs {
            prob[p.index()] = v;
        }
        StrategicModel {
            prob,
            total_count: [1; 9],
        }
    }

    #[test]
    fn matching_estimate() {
        let events: Vec<GameEvent> = (0..6)
            .map(|i| ev(i, i as u64 * 100, "turnover ( pink1 , purple1 )"))
            .chain((6..8).map(|i| ev(i, i as u64 * 100, "pass ( pink1 , pink2 )")))
            .collect();
        let matched: BTreeSet<usize> = [0, 2, 4, 6, 7].into();
        let m = estimate_from_matching(&[(&events, &matched)]);
        assert_eq!(m.prob_of(Predicate::Turnover), 0.5);
        assert_eq!(m.prob_of(Predicate::Pass), 1.0);
        assert_eq!(m.prob_of(Predicate::Kick), 0.0);
        assert_eq!(m.total_count[Predicate::Turnover.index()], 6);
    }

    #[test]
    fn five_equal_candidates() {
        use Predicate::*;
        let share = prob_of_match(&[Pass, Pass, Kick, Ballstopped, Pass], &[1.0; 9]);
        assert!((share[Pass.index()] - 3.0 / 5.0).abs() < 1e-15);
        assert!((share[Kick.index()] - 1.0 / 5.0).abs() < 1e-15);
        assert!((share[Ballstopped.index()] - 1.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn unambiguous_fixed_point() {
        let e: Vec<GameEvent> = (0..7)
            .map(|i| {
                ev(
                    i,
                    i as u64 * 10_000,
                    if i < 4 { "kick ( pink1 )" } else { "ballstopped" },
                )
            })
            .collect();
        let examples = vec![example(0, &e[0..1]), example(1, &e[1..2]), example(2, &e[4..5])];
        let mut total = [0; 9];
        total[Predicate::Kick.index()] = 4;
        total[Predicate::Ballstopped.index()] = 3;
        let r = igsl(&examples, total, 50).unwrap();
        assert_eq!(r.history[0][Predicate::Kick.index()], 2.0 / 4.0);
        assert_eq!(r.history[0][Predicate::Ballstopped.index()], 1.0 / 3.0);
        assert_eq!(r.history.len(), 2);
        assert_eq!(r.history[0], r.history[1]);
    }

    #[test]
    fn clamped_at_one() {
        // one pass event is the only candidate of three sentences
        let e = ev(0, 1000, "pass ( pink1 , pink2 )");
        let examples: Vec<_> = (0..3).map(|i| example(i, std::slice::from_ref(&e))).collect();
        let mut total = [0; 9];
        total[Predicate::Pass.index()] = 1;
        let r = igsl(&examples, total, 50).unwrap();
        assert_eq!(r.model.prob_of(Predicate::Pass), 1.0);
        assert!(r.history.iter().all(|h| h.iter().all(|p| (0.0..=1.0).contains(p))));
    }

    #[test]
    fn empty_candidates_rejected() {
        let examples = vec![example(0, &[])];
        assert_eq!(
            igsl(&examples, [1; 9], 5).unwrap_err(),
            StrategicError::EmptyCandidates(0)
        );
    }

    #[test]
    fn absent_predicates_go_to_zero() {
        let e = ev(0, 1000, "kick ( pink1 )");
        let r = igsl(&[example(0, &[e])], [1; 9], 50).unwrap();
        assert_eq!(r.model.prob_of(Predicate::Kick), 1.0);
        assert_eq!(r.model.prob_of(Predicate::Pass), 0.0);
    }

    #[test]
    fn selection_normalization() {
        use Predicate::*;
        let m = model(&[(BadPass, 0.970), (Turnover, 0.909), (Ballstopped, 1.09e-5)]);
        let e = [
            ev(0, 0, "badPass ( pink1 , purple2 )"),
            ev(1, 0, "turnover ( pink1 , purple2 )"),
            ev(2, 0, "ballstopped"),
        ];
        let refs: Vec<&GameEvent> = e.iter().collect();
        let d = selection_distribution(&refs, &m).unwrap();
        let total = 0.970 + 0.909 + 1.09e-5;
        assert!((d[0] - 0.970 / total).abs() < 1e-15);
        assert!((d[0] - 0.516).abs() < 5e-4);
        assert!((d[1] - 0.484).abs() < 5e-4);
        assert!((d[2] - 5.80e-6).abs() < 5e-8);
    }

    #[test]
    fn certain_single_candidate() {
        let m = model(&[(Predicate::Kick, 1.0)]);
        let e = ev(0, 0, "kick ( pink1 )");
        let mut rng = Prng::new(3);
        for _ in 0..100 {
            assert_eq!(select_event(&[&e], &m, &mut rng).map(|x| x.id), Some(0));
        }
    }

    #[test]
    fn strategic_tsv_round_trip() {
        let m = model(&[(Predicate::Pass, 0.983), (Predicate::Kick, 0.018)]);
        assert_eq!(StrategicModel::from_tsv(&m.to_tsv()).unwrap(), m);
        assert!(StrategicModel::from_tsv("pass\t1.5\t3\n").is_err());
    }

    proptest! {
        #[test]
        fn match_shares_are_scale_invariant(
            probs in proptest::array::uniform9(0.01f64..1.0),
            picks in proptest::collection::vec(0usize..9, 1..8),
            scale in 0.1f64..10.0,
        ) {
            let cands: Vec<Predicate> = picks.iter().map(|&i| Predicate::ALL[i]).collect();
            let scaled: [f64; 9] = std::array::from_fn(|i| probs[i] * scale);
            let a = prob_of_match(&cands, &probs);
            let b = prob_of_match(&cands, &scaled);
            for i in 0..9 {
                prop_assert!((a[i] - b[i]).abs() < 1e-12);
            }
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn igsl_stays_in_unit_interval(
            groups in proptest::collection::vec(proptest::collection::vec(0usize..9, 1..5), 1..20),
        ) {
            let sentences: Vec<Vec<Predicate>> = groups
                .iter()
                .map(|g| g.iter().map(|&i| Predicate::ALL[i]).collect())
                .collect();
            let mut total = [0usize; 9];
            for s in &sentences {
                for p in s {
                    total[p.index()] += 1;
                }
            }
            let mut prob = [1.0; 9];
            for _ in 0..10 {
                prob = igsl_step(&sentences, &total, &prob);
                prop_assert!(prob.iter().all(|p| (0.0..=1.0).contains(p)));
            }
        }
    }
}
