//! Timestamped events and comments, the pairing window that turns them into
//! ambiguous examples, gold annotations, the on-disk TSV layout and
//! cross-validation splits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use itertools::Itertools;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::mrl::{self, Mr, Predicate};

pub const DEFAULT_WINDOW_MS: u64 = 5000;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{file}:{line}: {reason}")]
    Format { file: String, line: usize, reason: String },
    #[error("{file}:{line}: dangling gold reference: {reason}")]
    DanglingGoldReference { file: String, line: usize, reason: String },
    #[error("need more than {k_train} games for a split, corpus has {games}")]
    InsufficientGames { games: usize, k_train: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameEvent {
    pub id: usize,
    pub time_ms: u64,
    pub mr: Mr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Comment {
    pub id: usize,
    pub time_ms: u64,
    pub tokens: Vec<String>,
    pub raw: String,
    pub language: String,
}

/// Whitespace tokenization after NFC normalization; English is also
/// lowercased.
pub fn tokenize(raw: &str, language: &str) -> Vec<String> {
    let normalized: String = raw.nfc().collect();
    let text = if language == "en" {
        normalized.to_lowercase()
    } else {
        normalized
    };
    text.split_whitespace().map(str::to_owned).collect()
}

impl Comment {
    /// Returns `None` when the text has no tokens.
    pub fn new(id: usize, time_ms: u64, language: &str, raw: &str) -> Option<Comment> {
        let tokens = tokenize(raw, language);
        if tokens.is_empty() {
            return None;
        }
        Some(Comment {
            id,
            time_ms,
            tokens,
            raw: raw.to_owned(),
            language: language.to_owned(),
        })
    }
}

/// Identifies a comment across the games of a corpus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExampleKey {
    pub game: usize,
    pub comment: usize,
}

/// One comment and the events inside its pairing window.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbiguousExample {
    pub game: usize,
    pub comment: Comment,
    /// Ordered by event time, then event id.
    pub candidates: Vec<GameEvent>,
}

impl AmbiguousExample {
    pub fn key(&self) -> ExampleKey {
        ExampleKey {
            game: self.game,
            comment: self.comment.id,
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.comment.tokens
    }

    pub fn candidate(&self, event_id: usize) -> Option<&GameEvent> {
        self.candidates.iter().find(|e| e.id == event_id)
    }
}

/// Result of pairing one game's comments with its events.
#[derive(Clone, Debug, Default)]
pub struct Pairing {
    pub examples: Vec<AmbiguousExample>,
    /// Comments with no event in their window; kept out of `examples`.
    pub unpaired: Vec<usize>,
}

impl Pairing {
    pub fn candidate_counts(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.candidates.len()).collect()
    }
}

/// Events from `comment.time_ms - window_ms` up to and including the
/// comment time. `events` must be sorted by time.
pub fn window_candidates(events: &[GameEvent], comment_time: u64, window_ms: u64) -> &[GameEvent] {
    let lo = comment_time.saturating_sub(window_ms);
    let start = events.partition_point(|e| e.time_ms < lo);
    let end = events.partition_point(|e| e.time_ms <= comment_time);
    &events[start..end.max(start)]
}

/// Pairs each comment with every event at most `window_ms` before it.
pub fn pair_with_window(events: &[GameEvent], comments: &[Comment], window_ms: u64) -> Pairing {
    pair_game(0, events, comments, window_ms)
}

pub(crate) fn pair_game(game: usize, events: &[GameEvent], comments: &[Comment], window_ms: u64) -> Pairing {
    let mut pairing = Pairing::default();
    for c in comments {
        let cands = window_candidates(events, c.time_ms, window_ms);
        if cands.is_empty() {
            pairing.unpaired.push(c.id);
        } else {
            pairing.examples.push(AmbiguousExample {
                game,
                comment: c.clone(),
                candidates: cands.to_vec(),
            });
        }
    }
    pairing
}

/// Gold annotation for one game: comment id to the event it describes, or
/// `None` for a superfluous comment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GoldMatch {
    pub entries: BTreeMap<usize, Option<usize>>,
}

impl GoldMatch {
    pub fn get(&self, comment: usize) -> Option<Option<usize>> {
        self.entries.get(&comment).copied()
    }

    pub fn superfluous_count(&self) -> usize {
        self.entries.values().filter(|v| v.is_none()).count()
    }
}

/// The event a gold MR refers to: the latest in-window event carrying it.
pub fn resolve_gold_event(events: &[GameEvent], comment_time: u64, window_ms: u64, mr: &Mr) -> Option<usize> {
    window_candidates(events, comment_time, window_ms)
        .iter()
        .rev()
        .find(|e| &e.mr == mr)
        .map(|e| e.id)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    pub name: String,
    pub events: Vec<GameEvent>,
    pub comments: Vec<Comment>,
    pub gold: Option<GoldMatch>,
}

impl Game {
    pub fn event_counts(&self) -> [usize; 9] {
        let mut counts = [0usize; 9];
        for e in &self.events {
            counts[e.mr.predicate().index()] += 1;
        }
        counts
    }

    pub fn duration_ms(&self) -> u64 {
        let last_event = self.events.last().map_or(0, |e| e.time_ms);
        let last_comment = self.comments.iter().map(|c| c.time_ms).max().unwrap_or(0);
        last_event.max(last_comment)
    }

    /// Gold MR per comment, if the game is annotated.
    pub fn gold_mr(&self, comment: usize) -> Option<Option<&Mr>> {
        let gold = self.gold.as_ref()?;
        let entry = gold.get(comment)?;
        Some(entry.map(|ev| &self.events[ev].mr))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub games: Vec<Game>,
}

/// Ambiguous examples from a set of games plus the per-predicate event
/// totals of those games' traces.
#[derive(Clone, Debug, Default)]
pub struct TrainingSet {
    pub examples: Vec<AmbiguousExample>,
    pub event_counts: [usize; 9],
    pub unpaired: usize,
}

impl TrainingSet {
    pub fn total_count(&self, p: Predicate) -> usize {
        self.event_counts[p.index()]
    }

    pub fn mean_ambiguity(&self) -> f64 {
        if self.examples.is_empty() {
            return 0.0;
        }
        self.examples.iter().map(|e| e.candidates.len()).sum::<usize>() as f64 / self.examples.len() as f64
    }
}

/// Gold MR (or `None` for superfluous) for every annotated comment.
pub type GoldMap = BTreeMap<ExampleKey, Option<Mr>>;

impl Corpus {
    pub fn game_index(&self, name: &str) -> Option<usize> {
        self.games.iter().position(|g| g.name == name)
    }

    pub fn all_games(&self) -> Vec<usize> {
        (0..self.games.len()).collect()
    }

    pub fn training_set(&self, games: &[usize], window_ms: u64) -> TrainingSet {
        let mut set = TrainingSet::default();
        for &g in games {
            let game = &self.games[g];
            let pairing = pair_game(g, &game.events, &game.comments, window_ms);
            set.unpaired += pairing.unpaired.len();
            set.examples.extend(pairing.examples);
            for (total, c) in set.event_counts.iter_mut().zip(game.event_counts()) {
                *total += c;
            }
        }
        set
    }

    pub fn gold_map(&self, games: &[usize]) -> GoldMap {
        let mut out = BTreeMap::new();
        for &g in games {
            let game = &self.games[g];
            if let Some(gold) = &game.gold {
                for (&comment, &event) in &gold.entries {
                    out.insert(
                        ExampleKey { game: g, comment },
                        event.map(|e| game.events[e].mr.clone()),
                    );
                }
            }
        }
        out
    }

    pub fn has_gold(&self, games: &[usize]) -> bool {
        games.iter().all(|&g| self.games[g].gold.is_some())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Every `k_train`-subset of the games as a training set, the rest as the
/// test set, in lexicographic order.
pub fn cv_splits(n_games: usize, k_train: usize) -> Result<Vec<Split>, CorpusError> {
    if k_train == 0 || k_train >= n_games {
        return Err(CorpusError::InsufficientGames {
            games: n_games,
            k_train,
        });
    }
    Ok((0..n_games)
        .combinations(k_train)
        .map(|train| {
            let test = (0..n_games).filter(|g| !train.contains(g)).collect();
            Split { train, test }
        })
        .collect())
}

fn format_err(file: &Path, line: usize, reason: impl Into<String>) -> CorpusError {
    CorpusError::Format {
        file: file.display().to_string(),
        line,
        reason: reason.into(),
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.to_owned()))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect())
}

pub fn read_events(path: &Path) -> Result<Vec<GameEvent>, CorpusError> {
    let mut events: Vec<GameEvent> = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let (t, mr) = line
            .split_once('\t')
            .ok_or_else(|| format_err(path, line_no, "expected `<time_ms>\\t<mr>`"))?;
        let time_ms: u64 = t
            .trim()
            .parse()
            .map_err(|_| format_err(path, line_no, format!("bad time `{}`", t)))?;
        let mr = mrl::parse_mr(mr).map_err(|e| format_err(path, line_no, e.to_string()))?;
        if let Some(prev) = events.last() {
            if time_ms < prev.time_ms {
                return Err(format_err(path, line_no, "event times must be non-decreasing"));
            }
        }
        events.push(GameEvent {
            id: events.len(),
            time_ms,
            mr,
        });
    }
    Ok(events)
}

pub fn read_comments(path: &Path) -> Result<Vec<Comment>, CorpusError> {
    let mut comments = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let mut fields = line.splitn(3, '\t');
        let (t, lang, raw) = match (fields.next(), fields.next(), fields.next()) {
            (Some(t), Some(l), Some(r)) => (t, l, r),
            _ => return Err(format_err(path, line_no, "expected `<time_ms>\\t<language>\\t<text>`")),
        };
        let time_ms: u64 = t
            .trim()
            .parse()
            .map_err(|_| format_err(path, line_no, format!("bad time `{}`", t)))?;
        let c = Comment::new(comments.len(), time_ms, lang.trim(), raw)
            .ok_or_else(|| format_err(path, line_no, "comment has no tokens"))?;
        comments.push(c);
    }
    Ok(comments)
}

/// Reads a gold file and resolves each MR to the latest matching event in
/// the comment's window, or failing that, before the comment.
pub fn read_gold(
    path: &Path,
    events: &[GameEvent],
    comments: &[Comment],
    window_ms: u64,
) -> Result<GoldMatch, CorpusError> {
    let mut gold = GoldMatch::default();
    for (line_no, line) in read_lines(path)? {
        let (id, value) = line
            .split_once('\t')
            .ok_or_else(|| format_err(path, line_no, "expected `<comment-id>\\t<mr|NONE>`"))?;
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| format_err(path, line_no, format!("bad comment id `{}`", id)))?;
        let comment = comments.get(id).ok_or_else(|| CorpusError::DanglingGoldReference {
            file: path.display().to_string(),
            line: line_no,
            reason: format!("no comment {}", id),
        })?;
        let value = value.trim();
        let event = if value == "NONE" {
            None
        } else {
            let mr = mrl::parse_mr(value).map_err(|e| format_err(path, line_no, e.to_string()))?;
            // a narrower window than the annotator's can leave the gold
            // event outside; fall back to its latest earlier occurrence
            let ev = resolve_gold_event(events, comment.time_ms, window_ms, &mr)
                .or_else(|| {
                    events
                        .iter()
                        .rev()
                        .find(|e| e.time_ms <= comment.time_ms && e.mr == mr)
                        .map(|e| e.id)
                })
                .ok_or_else(|| CorpusError::DanglingGoldReference {
                    file: path.display().to_string(),
                    line: line_no,
                    reason: format!("no event `{}` at or before comment {}", mr, id),
                })?;
            Some(ev)
        };
        if gold.entries.insert(id, event).is_some() {
            return Err(format_err(
                path,
                line_no,
                format!("duplicate gold entry for comment {}", id),
            ));
        }
    }
    Ok(gold)
}

/// Loads a manifest (`<name>\t<events>\t<comments>\t<gold|->` per line,
/// paths relative to the manifest's directory).
pub fn load_corpus(manifest: &Path, window_ms: u64) -> Result<Corpus, CorpusError> {
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let mut corpus = Corpus::default();
    for (line_no, line) in read_lines(manifest)? {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(format_err(
                manifest,
                line_no,
                "expected `<name>\\t<events>\\t<comments>\\t<gold|->`",
            ));
        }
        let events = read_events(&base.join(fields[1]))?;
        let comments = read_comments(&base.join(fields[2]))?;
        let gold = match fields[3].trim() {
            "-" => None,
            p => Some(read_gold(&base.join(p), &events, &comments, window_ms)?),
        };
        corpus.games.push(Game {
            name: fields[0].to_owned(),
            events,
            comments,
            gold,
        });
    }
    Ok(corpus)
}

pub fn events_tsv(events: &[GameEvent]) -> String {
    let mut out = String::new();
    for e in events {
        let _ = writeln!(out, "{}\t{}", e.time_ms, e.mr);
    }
    out
}

pub fn comments_tsv(comments: &[Comment]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "{}\t{}\t{}", c.time_ms, c.language, c.raw);
    }
    out
}

pub fn gold_tsv(game: &Game, gold: &GoldMatch) -> String {
    let mut out = String::new();
    for (comment, event) in &gold.entries {
        match event {
            Some(e) => {
                let _ = writeln!(out, "{}\t{}", comment, game.events[*e].mr);
            }
            None => {
                let _ = writeln!(out, "{}\tNONE", comment);
            }
        }
    }
    out
}

/// Writes `manifest.tsv` and three files per game into `dir`; returns the
/// manifest path.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<PathBuf, CorpusError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut manifest = String::new();
    for game in &corpus.games {
        let events = format!("{}.events.tsv", game.name);
        let comments = format!("{}.comments.tsv", game.name);
        write_file(&dir.join(&events), &events_tsv(&game.events))?;
        write_file(&dir.join(&comments), &comments_tsv(&game.comments))?;
        let gold = match &game.gold {
            Some(g) => {
                let name = format!("{}.gold.tsv", game.name);
                write_file(&dir.join(&name), &gold_tsv(game, g))?;
                name
            }
            None => "-".to_owned(),
        };
        let _ = writeln!(manifest, "{}\t{}\t{}\t{}", game.name, events, comments, gold);
    }
    let path = dir.join("manifest.tsv");
    write_file(&path, &manifest)?;
    Ok(path)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CorpusError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Pairing statistics for one game: how many comments have candidates,
/// how many have the correct one, and the candidate-count spread.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingStats {
    pub game: String,
    pub events: usize,
    pub comments: usize,
    pub have_mrs: usize,
    pub have_correct_mr: Option<usize>,
    pub max_candidates: usize,
    pub mean_candidates: f64,
    pub std_candidates: f64,
}

pub fn pairing_stats(game: &Game, window_ms: u64) -> PairingStats {
    let pairing = pair_with_window(&game.events, &game.comments, window_ms);
    let counts = pairing.candidate_counts();
    let n = counts.len().max(1) as f64;
    let mean = counts.iter().sum::<usize>() as f64 / n;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n;
    let have_correct = game.gold.as_ref().map(|g| {
        pairing
            .examples
            .iter()
            .filter(|ex| matches!(g.get(ex.comment.id), Some(Some(e)) if ex.candidate(e).is_some()))
            .count()
    });
    PairingStats {
        game: game.name.clone(),
        events: game.events.len(),
        comments: game.comments.len(),
        have_mrs: pairing.examples.len(),
        have_correct_mr: have_correct,
        max_candidates: counts.iter().copied().max().unwrap_or(0),
        mean_candidates: if counts.is_empty() { 0.0 } else { mean },
        std_candidates: var.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(id: usize, t: u64, mr: &str) -> GameEvent {
        GameEvent {
            id,
            time_ms: t,
            mr: mrl::parse_mr(mr).unwrap(),
        }
    }

    fn cm(id: usize, t: u64, raw: &str) -> Comment {
        Comment::new(id, t, "en", raw).unwrap()
    }

    #[test]
    fn window_inside_and_boundary() {
        let events = vec![ev(0, 10_000, "kick ( pink1 )")];
        let p = pair_with_window(&events, &[cm(0, 14_000, "a")], 5000);
        assert_eq!(p.examples[0].candidates.len(), 1);
        let p = pair_with_window(&events, &[cm(0, 15_000, "a")], 5000);
        assert_eq!(p.examples[0].candidates.len(), 1);
        let p = pair_with_window(&events, &[cm(0, 15_001, "a")], 5000);
        assert!(p.examples.is_empty());
        assert_eq!(p.unpaired, vec![0]);
        // same timestamp is inside
        let p = pair_with_window(&events, &[cm(0, 10_000, "a")], 5000);
        assert_eq!(p.examples.len(), 1);
        // events after the comment are not candidates
        let p = pair_with_window(&events, &[cm(0, 9_999, "a")], 5000);
        assert!(p.examples.is_empty());
    }

    #[test]
    fn ten_event_fixture_matches_brute_force() {
        let times = [1000, 2500, 3000, 3100, 6000, 7000, 7500, 9000, 12000, 20000];
        let events: Vec<GameEvent> = times
            .iter()
            .enumerate()
            .map(|(i, &t)| ev(i, t, "ballstopped"))
            .collect();
        let comments: Vec<Comment> = [3000, 8000, 9500, 11000, 26000]
            .iter()
            .enumerate()
            .map(|(i, &t)| cm(i, t, "x"))
            .collect();
        let p = pair_with_window(&events, &comments, 5000);
        for c in &comments {
            let brute: Vec<usize> = events
                .iter()
                .filter(|e| e.time_ms <= c.time_ms && c.time_ms - e.time_ms <= 5000)
                .map(|e| e.id)
                .collect();
            let got: Vec<usize> = p
                .examples
                .iter()
                .find(|x| x.comment.id == c.id)
                .map(|x| x.candidates.iter().map(|e| e.id).collect())
                .unwrap_or_default();
            assert_eq!(got, brute, "comment at {}", c.time_ms);
        }
        // the comment at 8000 sees 3000, 3100, 6000, 7000, 7500
        assert_eq!(p.examples[1].candidates.len(), 5);
        // the comment at 11000 sees exactly 4: 6000, 7000, 7500, 9000
        let four = p.examples.iter().find(|x| x.comment.time_ms == 11_000).unwrap();
        assert_eq!(four.candidates.len(), 4);
        assert!(four.candidates.windows(2).all(|w| w[0].time_ms <= w[1].time_ms));
        assert_eq!(p.unpaired, vec![4]);
    }

    #[test]
    fn english_tokens_are_lowercased_korean_are_not() {
        assert_eq!(
            tokenize("Pink1 passes  to PINK2", "en"),
            vec!["pink1", "passes", "to", "pink2"]
        );
        assert_eq!(tokenize("Pink1 패스", "ko"), vec!["Pink1", "패스"]);
        assert!(Comment::new(0, 0, "en", "   ").is_none());
    }

    #[test]
    fn splits_cover_all_combinations() {
        let s3 = cv_splits(4, 3).unwrap();
        assert_eq!(s3.len(), 4);
        assert!(s3.iter().all(|s| s.test.len() == 1));
        let s1 = cv_splits(4, 1).unwrap();
        assert_eq!(s1.len(), 4);
        assert!(s1.iter().all(|s| s.test.len() == 3));
        let binom = |n: usize, k: usize| (1..=k).fold(1usize, |acc, i| acc * (n + 1 - i) / i);
        let total: usize = (1..=3).map(|k| cv_splits(4, k).unwrap().len()).sum();
        assert_eq!(total, binom(4, 1) + binom(4, 2) + binom(4, 3));
        assert_eq!(total, 14);
        assert_eq!(
            cv_splits(4, 2).unwrap()[0],
            Split {
                train: vec![0, 1],
                test: vec![2, 3]
            }
        );
        assert!(matches!(cv_splits(4, 4), Err(CorpusError::InsufficientGames { .. })));
        assert!(matches!(cv_splits(4, 0), Err(CorpusError::InsufficientGames { .. })));
    }

    #[test]
    fn file_round_trip_and_gold_errors() {
        let dir = tempfile::tempdir().unwrap();
        let game = Game {
            name: "g1".into(),
            events: vec![ev(0, 10_000, "pass ( pink1 , pink2 )"), ev(1, 11_000, "ballstopped")],
            comments: vec![cm(0, 12_000, "Pink1 passes to pink2"), cm(1, 13_000, "what a game")],
            gold: Some(GoldMatch {
                entries: [(0, Some(0)), (1, None)].into_iter().collect(),
            }),
        };
        let corpus = Corpus { games: vec![game] };
        let manifest = write_corpus(&corpus, dir.path()).unwrap();
        let gold_text = fs::read_to_string(dir.path().join("g1.gold.tsv")).unwrap();
        assert_eq!(gold_text, "0\tpass ( pink1 , pink2 )\n1\tNONE\n");
        let loaded = load_corpus(&manifest, DEFAULT_WINDOW_MS).unwrap();
        assert_eq!(loaded, corpus);

        // a window too narrow for the gold event still loads; the event just
        // stops being a candidate
        let narrow = load_corpus(&manifest, 1000).unwrap();
        assert_eq!(narrow.games[0].gold, corpus.games[0].gold);
        let stats = pairing_stats(&narrow.games[0], 1000);
        assert_eq!(stats.have_mrs, 1);
        assert_eq!(stats.have_correct_mr, Some(0));
        assert_eq!(
            pairing_stats(&loaded.games[0], DEFAULT_WINDOW_MS).have_correct_mr,
            Some(1)
        );

        fs::write(dir.path().join("g1.gold.tsv"), "0\tkick ( pink9 )\n").unwrap();
        assert!(matches!(
            load_corpus(&manifest, DEFAULT_WINDOW_MS),
            Err(CorpusError::DanglingGoldReference { line: 1, .. })
        ));
        fs::write(dir.path().join("g1.gold.tsv"), "7\tNONE\n").unwrap();
        assert!(matches!(
            load_corpus(&manifest, DEFAULT_WINDOW_MS),
            Err(CorpusError::DanglingGoldReference { .. })
        ));
        fs::write(dir.path().join("g1.events.tsv"), "10000\tpass ( pink1 )\n").unwrap();
        let err = load_corpus(&manifest, DEFAULT_WINDOW_MS).unwrap_err();
        assert!(matches!(err, CorpusError::Format { line: 1, .. }), "{err}");
    }

    #[test]
    fn event_line_format() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.tsv");
        fs::write(&p, "10000\tpass ( pink1 , pink2 )\n").unwrap();
        let events = read_events(&p).unwrap();
        assert_eq!(events, vec![ev(0, 10_000, "pass ( pink1 , pink2 )")]);
    }

    proptest! {
        #[test]
        fn window_property_and_monotonicity(
            mut ev_times in proptest::collection::vec(0u64..60_000, 1..40),
            c_times in proptest::collection::vec(0u64..60_000, 1..20),
            window in 1u64..10_000,
            extra in 0u64..5_000,
        ) {
            ev_times.sort();
            let events: Vec<GameEvent> = ev_times.iter().enumerate()
                .map(|(i, &t)| ev(i, t, "ballstopped")).collect();
            let comments: Vec<Comment> = c_times.iter().enumerate()
                .map(|(i, &t)| cm(i, t, "w")).collect();
            let small = pair_with_window(&events, &comments, window);
            let large = pair_with_window(&events, &comments, window + extra);
            for x in &small.examples {
                for e in &x.candidates {
                    prop_assert!(e.time_ms <= x.comment.time_ms);
                    prop_assert!(x.comment.time_ms - e.time_ms <= window);
                }
                let bigger = large.examples.iter().find(|y| y.comment.id == x.comment.id).unwrap();
                for e in &x.candidates {
                    prop_assert!(bigger.candidates.contains(e));
                }
            }
            prop_assert_eq!(small.examples.len() + small.unpaired.len(), comments.len());
        }
    }
}
