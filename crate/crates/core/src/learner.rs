//! Disambiguating ambiguous training data: every sentence is paired with
//! all events in its window, a model is trained on the pairs, and each
//! round keeps only the best-scoring candidate per sentence and retrains.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use log::{debug, info};
use thiserror::Error;

use crate::corpus::{AmbiguousExample, ExampleKey, GameEvent, GoldMap, TrainingSet};
use crate::metrics::{self, matching_f1, meteor, nist, DEFAULT_NIST_N};
use crate::mrl::Mr;
use crate::simgen::{mix64, Prng};
use crate::strategic::{estimate_from_matching, igsl, StrategicModel, DEFAULT_IGSL_MAX_ITER};
use crate::translator::{self, TranslationModel, TranslatorError, DEFAULT_EM_ITERATIONS};

pub const DEFAULT_MAX_ITER: usize = 10;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("no training examples")]
    EmptyExamples,
    #[error("strategy `{0}` needs a strategic model")]
    MissingStrategicModel(StrategyKind),
    #[error("the gold strategy needs a gold matching")]
    MissingGold,
    #[error("external alignment line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Translator(#[from] TranslatorError),
    #[error(transparent)]
    Strategic(#[from] crate::strategic::StrategicError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Random,
    ParseScore,
    NistGen,
    MeteorGen,
    NistIgsl,
    MeteorIgsl,
    Gold,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 7] = [
        StrategyKind::Random,
        StrategyKind::ParseScore,
        StrategyKind::NistGen,
        StrategyKind::MeteorGen,
        StrategyKind::NistIgsl,
        StrategyKind::MeteorIgsl,
        StrategyKind::Gold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::ParseScore => "parse_score",
            StrategyKind::NistGen => "nist_gen",
            StrategyKind::MeteorGen => "meteor_gen",
            StrategyKind::NistIgsl => "nist_igsl",
            StrategyKind::MeteorIgsl => "meteor_igsl",
            StrategyKind::Gold => "gold",
        }
    }

    pub fn uses_strategic(self) -> bool {
        matches!(self, StrategyKind::NistIgsl | StrategyKind::MeteorIgsl)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScoringStrategy {
    pub kind: StrategyKind,
    /// Drives the random baseline's picks.
    pub seed: u64,
}

impl ScoringStrategy {
    pub fn new(kind: StrategyKind) -> Self {
        ScoringStrategy { kind, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerConfig {
    pub strategy: ScoringStrategy,
    pub max_iter: usize,
    pub em_iterations: usize,
    /// Fraction of the lowest-scoring pairs dropped before each retraining.
    pub prune_fraction: f64,
}

impl LearnerConfig {
    pub fn new(kind: StrategyKind) -> Self {
        LearnerConfig {
            strategy: ScoringStrategy::new(kind),
            max_iter: DEFAULT_MAX_ITER,
            em_iterations: DEFAULT_EM_ITERATIONS,
            prune_fraction: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchEntry {
    pub event: usize,
    pub mr: Mr,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub matching_f1: Option<f64>,
    pub changed: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Matching {
    pub entries: BTreeMap<ExampleKey, MatchEntry>,
    /// Sentences dropped as likely superfluous.
    pub pruned: BTreeSet<ExampleKey>,
    pub history: Vec<IterationRecord>,
}

impl Matching {
    pub fn mrs(&self) -> BTreeMap<ExampleKey, Mr> {
        self.entries.iter().map(|(k, e)| (*k, e.mr.clone())).collect()
    }

    /// Matched event ids per game.
    pub fn matched_events(&self) -> BTreeMap<usize, BTreeSet<usize>> {
        let mut out: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for (k, e) in &self.entries {
            out.entry(k.game).or_default().insert(e.event);
        }
        out
    }

    fn assignment(&self) -> BTreeMap<ExampleKey, usize> {
        self.entries.iter().map(|(k, e)| (*k, e.event)).collect()
    }

    pub fn iteration_report(&self) -> String {
        let mut out = String::from("iter\tmatching_f1\tchanged_count\n");
        for r in &self.history {
            let f1 = r.matching_f1.map_or_else(|| "-".to_owned(), crate::report::fmt_real);
            out.push_str(&format!("{}\t{}\t{}\n", r.iter, f1, r.changed));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct DisambiguationResult {
    pub matching: Matching,
    pub model: TranslationModel,
    pub strategic: Option<StrategicModel>,
    pub iterations_run: usize,
}

impl DisambiguationResult {
    pub fn f1_history(&self) -> Vec<f64> {
        self.matching.history.iter().filter_map(|r| r.matching_f1).collect()
    }

    pub fn final_f1(&self) -> Option<f64> {
        self.matching.history.last().and_then(|r| r.matching_f1)
    }
}

/// Every sentence with every candidate, sentence-major, candidates in time order.
pub fn initial_training_set(examples: &[AmbiguousExample]) -> Vec<(Vec<String>, Mr)> {
    examples
        .iter()
        .flat_map(|ex| {
            ex.candidates
                .iter()
                .map(move |c| (ex.comment.tokens.clone(), c.mr.clone()))
        })
        .collect()
}

/// Scores candidates under one frozen model; generated sentences are
/// cached per MR.
pub struct Scorer<'a> {
    model: &'a TranslationModel,
    kind: StrategyKind,
    strategic: Option<&'a StrategicModel>,
    generated: HashMap<Mr, Option<Vec<String>>>,
}

impl<'a> Scorer<'a> {
    pub fn new(
        model: &'a TranslationModel,
        kind: StrategyKind,
        strategic: Option<&'a StrategicModel>,
    ) -> Result<Self, LearnerError> {
        if kind.uses_strategic() && strategic.is_none() {
            return Err(LearnerError::MissingStrategicModel(kind));
        }
        Ok(Scorer {
            model,
            kind,
            strategic,
            generated: HashMap::new(),
        })
    }

    fn generated(&mut self, mr: &Mr) -> Option<Vec<String>> {
        if let Some(g) = self.generated.get(mr) {
            return g.clone();
        }
        let g = self.model.generate_topk(mr, 1).ok().map(|mut v| v.remove(0).0);
        self.generated.insert(mr.clone(), g.clone());
        g
    }

    pub fn score(&mut self, tokens: &[String], mr: &Mr) -> f64 {
        let tactical = match self.kind {
            StrategyKind::ParseScore | StrategyKind::Random | StrategyKind::Gold => self.model.score_pair(tokens, mr),
            StrategyKind::NistGen | StrategyKind::NistIgsl => match self.generated(mr) {
                Some(g) => nist(&g, tokens, DEFAULT_NIST_N),
                None => 0.0,
            },
            StrategyKind::MeteorGen | StrategyKind::MeteorIgsl => match self.generated(mr) {
                Some(g) => meteor(&g, tokens),
                None => 0.0,
            },
        };
        match self.strategic {
            Some(s) if self.kind.uses_strategic() => tactical * s.prob_of(mr.predicate()),
            _ => tactical,
        }
    }
}

/// Score of `mr` as the meaning of `tokens` under `strategy`.
pub fn evaluate_candidate(
    tokens: &[String],
    mr: &Mr,
    model: &TranslationModel,
    strategy: StrategyKind,
    strategic: Option<&StrategicModel>,
) -> Result<f64, LearnerError> {
    Ok(Scorer::new(model, strategy, strategic)?.score(tokens, mr))
}

/// Best candidate: highest score, then earliest event, then canonical MR.
fn best_candidate(ex: &AmbiguousExample, scorer: &mut Scorer) -> (usize, MatchEntry) {
    let mut best: Option<(usize, MatchEntry, u64)> = None;
    for (i, c) in ex.candidates.iter().enumerate() {
        let s = scorer.score(&ex.comment.tokens, &c.mr);
        let better = match &best {
            None => true,
            Some((_, b, t)) => s > b.score || (s == b.score && (c.time_ms < *t || (c.time_ms == *t && c.mr < b.mr))),
        };
        if better {
            best = Some((
                i,
                MatchEntry {
                    event: c.id,
                    mr: c.mr.clone(),
                    score: s,
                },
                c.time_ms,
            ));
        }
    }
    let (i, e, _) = best.expect("examples have candidates");
    (i, e)
}

fn record(matching: &Matching, gold: Option<&GoldMap>, iter: usize, changed: usize) -> IterationRecord {
    IterationRecord {
        iter,
        matching_f1: gold.map(|g| matching_f1(&matching.mrs(), g).f1.unwrap_or(0.0)),
        changed,
    }
}

fn pairs_of(examples: &[AmbiguousExample], matching: &Matching) -> Vec<(Vec<String>, Mr)> {
    examples
        .iter()
        .filter_map(|ex| {
            matching
                .entries
                .get(&ex.key())
                .map(|e| (ex.comment.tokens.clone(), e.mr.clone()))
        })
        .collect()
}

/// The iterative retraining loop for every learned strategy; `random` and
/// `gold` are dispatched to their one-shot baselines.
pub fn retrain_loop(
    set: &TrainingSet,
    config: &LearnerConfig,
    init_pairs: Option<&[(Vec<String>, Mr)]>,
    gold: Option<&GoldMap>,
) -> Result<DisambiguationResult, LearnerError> {
    let examples = &set.examples;
    if examples.is_empty() {
        return Err(LearnerError::EmptyExamples);
    }
    match config.strategy.kind {
        StrategyKind::Random => return random_baseline(examples, config, gold),
        StrategyKind::Gold => return gold_baseline(examples, config, gold.ok_or(LearnerError::MissingGold)?),
        _ => {}
    }
    let kind = config.strategy.kind;
    // candidate sets never change, so the iterative estimate is the same
    // every round
    let strategic = if kind.uses_strategic() {
        Some(igsl(examples, set.event_counts, DEFAULT_IGSL_MAX_ITER)?.model)
    } else {
        None
    };

    let initial;
    let pairs0: &[(Vec<String>, Mr)] = match init_pairs {
        Some(p) => p,
        None => {
            initial = initial_training_set(examples);
            &initial
        }
    };
    let mut model = translator::train_with_iterations(pairs0, config.em_iterations)?;
    let mut matching = Matching::default();
    let mut iterations_run = 0;
    for iter in 1..=config.max_iter.max(1) {
        let mut scorer = Scorer::new(&model, kind, strategic.as_ref())?;
        let mut next = Matching::default();
        for ex in examples {
            let (_, entry) = best_candidate(ex, &mut scorer);
            next.entries.insert(ex.key(), entry);
        }
        let drop = (config.prune_fraction * examples.len() as f64).floor() as usize;
        if drop > 0 {
            let mut by_score: Vec<(f64, ExampleKey)> = next.entries.iter().map(|(k, e)| (e.score, *k)).collect();
            by_score.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (_, k) in by_score.into_iter().take(drop.min(examples.len() - 1)) {
                next.entries.remove(&k);
                next.pruned.insert(k);
            }
        }
        let prev = matching.assignment();
        let now = next.assignment();
        let changed = now.iter().filter(|(k, e)| prev.get(k) != Some(e)).count()
            + prev.keys().filter(|k| !now.contains_key(k)).count();
        let converged = iter > 1 && changed == 0 && next.pruned == matching.pruned;
        next.history = std::mem::take(&mut matching.history);
        let rec = record(&next, gold, iter, changed);
        debug!("{kind} iteration {iter}: changed {changed}, f1 {:?}", rec.matching_f1);
        next.history.push(rec);
        matching = next;
        iterations_run = iter;
        if converged {
            break;
        }
        model = translator::train_with_iterations(&pairs_of(examples, &matching), config.em_iterations)?;
    }
    info!("{kind}: {iterations_run} iteration(s)");
    Ok(DisambiguationResult {
        matching,
        model,
        strategic,
        iterations_run,
    })
}

fn random_baseline(
    examples: &[AmbiguousExample],
    config: &LearnerConfig,
    gold: Option<&GoldMap>,
) -> Result<DisambiguationResult, LearnerError> {
    let mut rng = Prng::new(config.strategy.seed);
    let mut matching = Matching::default();
    for ex in examples {
        let c = &ex.candidates[rng.range_inclusive(0, ex.candidates.len() as u64 - 1) as usize];
        matching.entries.insert(
            ex.key(),
            MatchEntry {
                event: c.id,
                mr: c.mr.clone(),
                score: 0.0,
            },
        );
    }
    let rec = record(&matching, gold, 1, matching.entries.len());
    matching.history.push(rec);
    let model = translator::train_with_iterations(&pairs_of(examples, &matching), config.em_iterations)?;
    Ok(DisambiguationResult {
        matching,
        model,
        strategic: None,
        iterations_run: 1,
    })
}

fn gold_baseline(
    examples: &[AmbiguousExample],
    config: &LearnerConfig,
    gold: &GoldMap,
) -> Result<DisambiguationResult, LearnerError> {
    let mut matching = Matching::default();
    for ex in examples {
        let Some(Some(mr)) = gold.get(&ex.key()) else { continue };
        if let Some(c) = ex.candidates.iter().rev().find(|c| &c.mr == mr) {
            matching.entries.insert(
                ex.key(),
                MatchEntry {
                    event: c.id,
                    mr: mr.clone(),
                    score: 1.0,
                },
            );
        }
    }
    if matching.entries.is_empty() {
        return Err(LearnerError::EmptyExamples);
    }
    let rec = record(&matching, Some(gold), 1, matching.entries.len());
    matching.history.push(rec);
    let model = translator::train_with_iterations(&pairs_of(examples, &matching), config.em_iterations)?;
    Ok(DisambiguationResult {
        matching,
        model,
        strategic: None,
        iterations_run: 1,
    })
}

/// Pairs from an external alignment (`game\tcomment\tmr` lines). Lines
/// naming a comment that is not a training example are skipped and counted.
pub fn init_from_external(
    text: &str,
    examples: &[AmbiguousExample],
    game_names: &[String],
) -> Result<(Vec<(Vec<String>, Mr)>, usize), LearnerError> {
    let by_key: BTreeMap<ExampleKey, &AmbiguousExample> = examples.iter().map(|e| (e.key(), e)).collect();
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| LearnerError::Format { line: i + 1, reason };
        let f: Vec<&str> = line.split('\t').collect();
        let [game, comment, mr] = f.as_slice() else {
            return Err(err("expected `game\\tcomment\\tmr`".into()));
        };
        let comment: usize = comment
            .trim()
            .parse()
            .map_err(|_| err(format!("bad comment id `{comment}`")))?;
        let mr = Mr::parse(mr).map_err(|e| err(e.to_string()))?;
        let key = game_names
            .iter()
            .position(|g| g == game)
            .map(|game| ExampleKey { game, comment });
        match key.and_then(|k| by_key.get(&k)) {
            Some(ex) => pairs.push((ex.comment.tokens.clone(), mr)),
            None => {
                debug!("external alignment line {}: no such example", i + 1);
                skipped += 1;
            }
        }
    }
    Ok((pairs, skipped))
}

/// Renders a matching in the external alignment format.
pub fn external_alignment_tsv(matching: &BTreeMap<ExampleKey, Mr>, game_names: &[String]) -> String {
    matching
        .iter()
        .map(|(k, mr)| format!("{}\t{}\t{}\n", game_names[k.game], k.comment, mr))
        .collect()
}

/// `game\tcomment\tevent\tmr\tscore` lines.
pub fn matching_tsv(matching: &Matching, game_names: &[String]) -> String {
    matching
        .entries
        .iter()
        .map(|(k, e)| {
            format!(
                "{}\t{}\t{}\t{}\t{}\n",
                game_names[k.game],
                k.comment,
                e.event,
                e.mr,
                crate::report::fmt_real(e.score)
            )
        })
        .collect()
}

/// Event-type commentary rates implied by a matching.
pub fn strategic_from_matching(matching: &Matching, traces: &[(usize, &[GameEvent])]) -> StrategicModel {
    let matched = matching.matched_events();
    let empty = BTreeSet::new();
    let games: Vec<(&[GameEvent], &BTreeSet<usize>)> = traces
        .iter()
        .map(|(g, events)| (*events, matched.get(g).unwrap_or(&empty)))
        .collect();
    estimate_from_matching(&games)
}

/// Deterministic one-in-five validation membership.
pub fn is_validation(key: ExampleKey) -> bool {
    mix64(mix64(key.game as u64 + 1) ^ key.comment as u64).is_multiple_of(5)
}

/// Whether a model parses a sentence, over the whole MR space, to one of
/// the sentence's candidates.
pub fn parses_to_candidate(model: &TranslationModel, ex: &AmbiguousExample) -> bool {
    let ranked = model.parse_sentence(&ex.comment.tokens, None);
    ranked
        .first()
        .is_some_and(|(mr, _)| ex.candidates.iter().any(|c| &c.mr == mr))
}

pub const DEFAULT_THRESHOLDS: [f64; 9] = [0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40];

#[derive(Clone, Debug)]
pub struct SuperfluousCvResult {
    pub threshold: f64,
    /// Validation fraction per threshold.
    pub validation: Vec<(f64, f64)>,
    pub result: DisambiguationResult,
}

/// Chooses the pruning fraction that lets a model trained on the internal
/// training split parse the most validation sentences into one of their
/// candidates, then reruns on everything with that fraction.
pub fn superfluous_cv(
    set: &TrainingSet,
    thresholds: &[f64],
    config: &LearnerConfig,
    gold: Option<&GoldMap>,
) -> Result<SuperfluousCvResult, LearnerError> {
    assert!(!thresholds.is_empty(), "at least one threshold");
    if set.examples.is_empty() {
        return Err(LearnerError::EmptyExamples);
    }
    let (valid, train): (Vec<AmbiguousExample>, Vec<AmbiguousExample>) =
        set.examples.iter().cloned().partition(|ex| is_validation(ex.key()));
    let inner = TrainingSet {
        examples: train,
        event_counts: set.event_counts,
        unpaired: 0,
    };
    let mut validation = Vec::new();
    let mut best = (thresholds[0], f64::NEG_INFINITY);
    for &theta in thresholds {
        let cfg = LearnerConfig {
            prune_fraction: theta,
            ..config.clone()
        };
        let r = retrain_loop(&inner, &cfg, None, None)?;
        let ok = valid.iter().filter(|ex| parses_to_candidate(&r.model, ex)).count();
        let frac = if valid.is_empty() {
            0.0
        } else {
            ok as f64 / valid.len() as f64
        };
        debug!("pruning {theta}: validation {frac}");
        validation.push((theta, frac));
        if frac > best.1 || (frac == best.1 && theta < best.0) {
            best = (theta, frac);
        }
    }
    let cfg = LearnerConfig {
        prune_fraction: best.0,
        ..config.clone()
    };
    let result = retrain_loop(set, &cfg, None, gold)?;
    Ok(SuperfluousCvResult {
        threshold: best.0,
        validation,
        result,
    })
}

/// Full-space parse of every sentence; `None` where the model abstains.
pub fn parse_all(model: &TranslationModel, examples: &[AmbiguousExample]) -> BTreeMap<ExampleKey, Option<Mr>> {
    examples
        .iter()
        .map(|ex| {
            (
                ex.key(),
                model
                    .parse_sentence(&ex.comment.tokens, None)
                    .first()
                    .map(|x| x.0.clone()),
            )
        })
        .collect()
}

/// Matching F1 of a result against gold, for callers holding both.
pub fn score_matching(result: &DisambiguationResult, gold: &GoldMap) -> metrics::EvalReport {
    matching_f1(&result.matching.mrs(), gold)
}
