//! Synthetic games and a template commentator with known gold matchings.
//!
//! The world emits events with geometric gaps and predicate frequencies
//! proportional to configured weights; the commentator verbalizes each
//! event with a per-predicate probability after a uniform lag and sprinkles
//! in superfluous comments that describe nothing in the trace.

mod config;
mod prng;

pub use config::{ConfigError, SimConfig};
pub use prng::{mix64, Prng};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::corpus::{self, Comment, Corpus, Game, GameEvent, GoldMatch};
use crate::mrl::{Constant, Mr, Predicate};
use crate::translator::{parse_pattern, Piece};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("no template for predicate `{0}`")]
    EmptyLexicon(Predicate),
    #[error("superfluous comments requested but the superfluous vocabulary is empty")]
    EmptySuperfluousVocabulary,
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Event counts of the five most frequent event types in the English
/// finals, used as default predicate weights.
pub const FINALS_EVENT_COUNTS: [(Predicate, f64); 5] = [
    (Predicate::Ballstopped, 5817.0),
    (Predicate::Kick, 2122.0),
    (Predicate::Pass, 1069.0),
    (Predicate::Turnover, 566.0),
    (Predicate::BadPass, 371.0),
];

/// Observed commentary rates for the same five event types.
pub const FINALS_COMMENT_RATES: [(Predicate, f64); 5] = [
    (Predicate::Ballstopped, 1.72e-4),
    (Predicate::Kick, 0.033),
    (Predicate::Pass, 0.999),
    (Predicate::Turnover, 0.214),
    (Predicate::BadPass, 0.429),
];

#[derive(Clone, Debug, PartialEq)]
pub struct WorldConfig {
    pub duration_ms: u64,
    pub mean_event_gap_ms: f64,
    /// Indexed by [`Predicate::index`].
    pub event_type_weights: [f64; 9],
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        let mut w = [0.0; 9];
        for (p, c) in FINALS_EVENT_COUNTS {
            w[p.index()] = c;
        }
        // not in the top five; smaller than the least frequent of them
        w[Predicate::Playmode.index()] = 250.0;
        w[Predicate::Steal.index()] = 120.0;
        w[Predicate::Defense.index()] = 80.0;
        w[Predicate::Block.index()] = 60.0;
        WorldConfig {
            duration_ms: 3_800_000,
            mean_event_gap_ms: 3800.0,
            event_type_weights: w,
            seed: 1,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.duration_ms == 0 {
            return Err(SimError::Invalid("duration_ms must be positive".into()));
        }
        if !(self.mean_event_gap_ms >= 1.0) {
            return Err(SimError::Invalid("mean_event_gap_ms must be at least 1".into()));
        }
        if self.event_type_weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(SimError::Invalid("event weights must be non-negative".into()));
        }
        if !self.event_type_weights.iter().any(|&w| w > 0.0) {
            return Err(SimError::Invalid("at least one event weight must be positive".into()));
        }
        Ok(())
    }
}

/// A verbalization pattern with its weight.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPattern {
    pub pieces: Vec<Piece>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommentatorProfile {
    /// Probability of commenting on an event, indexed by predicate.
    pub comment_prob: [f64; 9],
    /// Templates per predicate; slot `k` is argument `k`.
    pub templates: BTreeMap<Predicate, Vec<WeightedPattern>>,
    /// Surface words per constant; constants absent here use their token.
    pub surfaces: BTreeMap<Constant, Vec<(Vec<String>, f64)>>,
    pub superfluous_rate: f64,
    pub lag_ms_range: (u64, u64),
    pub superfluous_vocabulary: Vec<String>,
    /// Superfluous comment length range in words.
    pub superfluous_len: (usize, usize),
    pub language: String,
    /// Window used to resolve the gold event of each comment.
    pub window_ms: u64,
    pub seed: u64,
}

fn pattern(text: &str, weight: f64) -> WeightedPattern {
    WeightedPattern {
        pieces: parse_pattern(text).expect("built-in template"),
        weight,
    }
}

const DEFAULT_SUPERFLUOUS: &str = "what a game the purple team is very sloppy today pink looks \
    strong great play crowd goes wild defense needs work nice move keep it up here we go \
    exciting match they need to score soon";

impl CommentatorProfile {
    /// Several templates per predicate and synonyms for the goalies.
    pub fn english() -> Self {
        let mut prob = [0.0; 9];
        for (p, r) in FINALS_COMMENT_RATES {
            prob[p.index()] = r;
        }
        prob[Predicate::Playmode.index()] = 0.25;
        prob[Predicate::Steal.index()] = 0.4;
        prob[Predicate::Defense.index()] = 0.3;
        prob[Predicate::Block.index()] = 0.6;

        let t = |pairs: &[(&str, f64)]| pairs.iter().map(|&(s, w)| pattern(s, w)).collect();
        let mut templates = BTreeMap::new();
        templates.insert(
            Predicate::Playmode,
            t(&[("the referee calls ⟨1⟩", 0.6), ("⟨1⟩ is called", 0.4)]),
        );
        templates.insert(
            Predicate::Ballstopped,
            t(&[("the ball stops", 0.7), ("the ball is stopped", 0.3)]),
        );
        templates.insert(
            Predicate::Turnover,
            t(&[("⟨1⟩ loses the ball to ⟨2⟩", 0.6), ("⟨2⟩ takes the ball from ⟨1⟩", 0.4)]),
        );
        templates.insert(Predicate::Kick, t(&[("⟨1⟩ kicks the ball", 0.6), ("⟨1⟩ shoots", 0.4)]));
        templates.insert(
            Predicate::Pass,
            t(&[
                ("⟨1⟩ passes to ⟨2⟩", 0.6),
                ("⟨1⟩ kicks to ⟨2⟩", 0.25),
                ("⟨1⟩ makes a pass to ⟨2⟩", 0.15),
            ]),
        );
        templates.insert(
            Predicate::BadPass,
            t(&[
                ("⟨1⟩ makes a bad pass to ⟨2⟩", 0.6),
                ("⟨2⟩ intercepts the pass from ⟨1⟩", 0.4),
            ]),
        );
        templates.insert(
            Predicate::Defense,
            t(&[("⟨2⟩ defends against ⟨1⟩", 0.6), ("⟨2⟩ clears the ball from ⟨1⟩", 0.4)]),
        );
        templates.insert(
            Predicate::Steal,
            t(&[("⟨1⟩ steals the ball", 0.7), ("great steal by ⟨1⟩", 0.3)]),
        );
        templates.insert(
            Predicate::Block,
            t(&[("⟨1⟩ blocks the shot", 0.6), ("great save by ⟨1⟩", 0.4)]),
        );

        let words = |s: &str| s.split_whitespace().map(str::to_owned).collect::<Vec<_>>();
        let mut surfaces = BTreeMap::new();
        surfaces.insert(
            Constant::from_token("pink1").unwrap(),
            vec![
                (words("pink1"), 0.6),
                (words("pinkg"), 0.2),
                (words("pink goalie"), 0.2),
            ],
        );
        surfaces.insert(
            Constant::from_token("purple1").unwrap(),
            vec![(words("purple1"), 0.7), (words("purple goalie"), 0.3)],
        );

        CommentatorProfile {
            comment_prob: prob,
            templates,
            surfaces,
            superfluous_rate: 0.10,
            lag_ms_range: (200, 4800),
            superfluous_vocabulary: words(DEFAULT_SUPERFLUOUS),
            superfluous_len: (3, 7),
            language: "en".into(),
            window_ms: corpus::DEFAULT_WINDOW_MS,
            seed: 2,
        }
    }

    /// One template per predicate and no synonyms: every event type has a
    /// single hidden realization.
    pub fn sharp() -> Self {
        let mut p = CommentatorProfile::english();
        for pats in p.templates.values_mut() {
            pats.truncate(1);
            pats[0].weight = 1.0;
        }
        p.surfaces.clear();
        p
    }

    pub fn surfaces_of(&self, c: Constant) -> Vec<(Vec<String>, f64)> {
        match self.surfaces.get(&c) {
            Some(s) if !s.is_empty() => s.clone(),
            _ => vec![(vec![c.token().to_owned()], 1.0)],
        }
    }

    /// The most likely verbalization: the heaviest template filled with the
    /// heaviest surface of each argument (earliest wins ties).
    pub fn hidden_realization(&self, mr: &Mr) -> Option<Vec<String>> {
        let pats = self.templates.get(&mr.predicate())?;
        let best = heaviest(pats.iter().map(|p| p.weight))?;
        let mut out = Vec::new();
        for piece in &pats[best].pieces {
            match piece {
                Piece::Word(w) => out.push(w.clone()),
                Piece::Slot(k) => {
                    let s = self.surfaces_of(mr.args()[*k]);
                    let i = heaviest(s.iter().map(|x| x.1))?;
                    out.extend(s[i].0.iter().cloned());
                }
            }
        }
        Some(out)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (i, &p) in self.comment_prob.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::Invalid(format!(
                    "comment_prob.{} = {} is not a probability",
                    Predicate::ALL[i],
                    p
                )));
            }
        }
        if !(0.0..1.0).contains(&self.superfluous_rate) {
            return Err(SimError::Invalid("superfluous_rate must be in [0, 1)".into()));
        }
        if self.lag_ms_range.0 > self.lag_ms_range.1 {
            return Err(SimError::Invalid("lag range is reversed".into()));
        }
        if self.superfluous_len.0 == 0 || self.superfluous_len.0 > self.superfluous_len.1 {
            return Err(SimError::Invalid("bad superfluous length range".into()));
        }
        for pred in Predicate::ALL {
            let pats = self.templates.get(&pred).map(Vec::as_slice).unwrap_or(&[]);
            if pats.is_empty() || !pats.iter().any(|p| p.weight > 0.0) {
                return Err(SimError::EmptyLexicon(pred));
            }
            for pat in pats {
                let mut slots: Vec<usize> = pat
                    .pieces
                    .iter()
                    .filter_map(|p| match p {
                        Piece::Slot(k) => Some(*k),
                        Piece::Word(_) => None,
                    })
                    .collect();
                slots.sort_unstable();
                if slots != (0..pred.arity()).collect::<Vec<_>>() {
                    return Err(SimError::Invalid(format!(
                        "a `{}` template must use each of its {} slot(s) exactly once",
                        pred,
                        pred.arity()
                    )));
                }
                if !(pat.weight >= 0.0) {
                    return Err(SimError::Invalid("template weights must be non-negative".into()));
                }
            }
        }
        if self.superfluous_rate > 0.0 && self.superfluous_vocabulary.is_empty() {
            return Err(SimError::EmptySuperfluousVocabulary);
        }
        Ok(())
    }
}

fn heaviest(weights: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, w) in weights.enumerate() {
        if best.is_none_or(|(_, bw)| w > bw) {
            best = Some((i, w));
        }
    }
    best.map(|(i, _)| i)
}

/// Draws an event stream: geometric gaps around the mean, predicates
/// proportional to weight, arguments uniform over sort-valid constants.
pub fn simulate_events(config: &WorldConfig) -> Result<Vec<GameEvent>, SimError> {
    config.validate()?;
    let mut rng = Prng::new(config.seed);
    let p = 1.0 / config.mean_event_gap_ms;
    let log_q = (1.0 - p).ln();
    let players = Constant::of_sort(crate::mrl::Sort::Player);
    let modes = Constant::of_sort(crate::mrl::Sort::PlayMode);
    let mut events = Vec::new();
    let mut t: u64 = 0;
    loop {
        let gap = if log_q == f64::NEG_INFINITY || log_q == 0.0 {
            1
        } else {
            // geometric on {1, 2, ...} with mean 1/p
            let u = 1.0 - rng.uniform();
            1 + (u.ln() / log_q).floor() as u64
        };
        t += gap;
        if t > config.duration_ms {
            break;
        }
        let pred = Predicate::ALL[rng
            .weighted_index(&config.event_type_weights)
            .expect("validated weights")];
        let args = pred
            .argument_sorts()
            .iter()
            .map(|s| {
                let pool = match s {
                    crate::mrl::Sort::Player => &players,
                    crate::mrl::Sort::PlayMode => &modes,
                };
                pool[rng.range_inclusive(0, pool.len() as u64 - 1) as usize]
            })
            .collect();
        events.push(GameEvent {
            id: events.len(),
            time_ms: t,
            mr: Mr::new(pred, args).expect("sort-valid arguments"),
        });
    }
    Ok(events)
}

fn realize(profile: &CommentatorProfile, mr: &Mr, rng: &mut Prng) -> Result<Vec<String>, SimError> {
    let pats = profile
        .templates
        .get(&mr.predicate())
        .filter(|p| !p.is_empty())
        .ok_or(SimError::EmptyLexicon(mr.predicate()))?;
    let weights: Vec<f64> = pats.iter().map(|p| p.weight).collect();
    let chosen = rng
        .weighted_index(&weights)
        .ok_or(SimError::EmptyLexicon(mr.predicate()))?;
    let mut out = Vec::new();
    for piece in &pats[chosen].pieces {
        match piece {
            Piece::Word(w) => out.push(w.clone()),
            Piece::Slot(k) => {
                let options = profile.surfaces_of(mr.args()[*k]);
                let ws: Vec<f64> = options.iter().map(|o| o.1).collect();
                let i = rng.weighted_index(&ws).unwrap_or(0);
                out.extend(options[i].0.iter().cloned());
            }
        }
    }
    Ok(out)
}

/// Verbalizes an event stream. Returns the comments (ids in time order) and
/// the gold matching; superfluous comments are gold `None`.
pub fn commentate(events: &[GameEvent], profile: &CommentatorProfile) -> Result<(Vec<Comment>, GoldMatch), SimError> {
    profile.validate()?;
    let mut rng = Prng::new(profile.seed);
    // (time, generation order, words, generating event)
    let mut drafts: Vec<(u64, usize, Vec<String>, Option<usize>)> = Vec::new();
    for e in events {
        if !rng.bernoulli(profile.comment_prob[e.mr.predicate().index()]) {
            continue;
        }
        let lag = rng.range_inclusive(profile.lag_ms_range.0, profile.lag_ms_range.1);
        let words = realize(profile, &e.mr, &mut rng)?;
        drafts.push((e.time_ms + lag, drafts.len(), words, Some(e.id)));
    }

    // each emitted comment is superfluous with probability `superfluous_rate`
    let mut superfluous = 0usize;
    if profile.superfluous_rate > 0.0 {
        let mut remaining = drafts.len();
        while remaining > 0 {
            if rng.bernoulli(profile.superfluous_rate) {
                superfluous += 1;
            } else {
                remaining -= 1;
            }
        }
    }
    let end = events.last().map_or(0, |e| e.time_ms);
    let vocab = &profile.superfluous_vocabulary;
    for _ in 0..superfluous {
        let t = rng.range_inclusive(0, end);
        let len = rng.range_inclusive(profile.superfluous_len.0 as u64, profile.superfluous_len.1 as u64);
        let words = (0..len)
            .map(|_| vocab[rng.range_inclusive(0, vocab.len() as u64 - 1) as usize].clone())
            .collect();
        drafts.push((t, drafts.len(), words, None));
    }
    drafts.sort_by_key(|d| (d.0, d.1));

    let mut comments = Vec::with_capacity(drafts.len());
    let mut gold = GoldMatch::default();
    for (id, (t, _, words, source)) in drafts.into_iter().enumerate() {
        let raw = words.join(" ");
        let comment = Comment::new(id, t, &profile.language, &raw)
            .ok_or_else(|| SimError::Invalid("empty verbalization".into()))?;
        let resolved = source.and_then(|ev| corpus::resolve_gold_event(events, t, profile.window_ms, &events[ev].mr));
        gold.entries.insert(id, resolved);
        comments.push(comment);
    }
    Ok((comments, gold))
}

/// Generates `config.games` games named `game1`, `game2`, ...
pub fn simulate_corpus(config: &SimConfig) -> Result<Corpus, SimError> {
    let mut master = Prng::new(config.seed);
    let mut corpus = Corpus::default();
    for g in 0..config.games {
        let world = WorldConfig {
            seed: master.next_u64(),
            ..config.world.clone()
        };
        let profile = CommentatorProfile {
            seed: master.next_u64(),
            ..config.profile.clone()
        };
        let events = simulate_events(&world)?;
        let (comments, gold) = commentate(&events, &profile)?;
        corpus.games.push(Game {
            name: format!("game{}", g + 1),
            events,
            comments,
            gold: Some(gold),
        });
    }
    Ok(corpus)
}
