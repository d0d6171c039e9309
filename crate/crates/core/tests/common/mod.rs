#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sportscaster::corpus::{Corpus, ExampleKey, GoldMap, TrainingSet, DEFAULT_WINDOW_MS};
use sportscaster::mrl::Mr;
use sportscaster::simgen::{mix64, simulate_corpus, SimConfig};

/// The default synthetic corpus (four games, english profile) with the
/// given seed and superfluous rate.
pub fn english_corpus(seed: u64, superfluous_rate: f64) -> Corpus {
    let mut cfg = SimConfig::default();
    cfg.seed = seed;
    cfg.profile.superfluous_rate = superfluous_rate;
    simulate_corpus(&cfg).expect("default config simulates")
}

pub struct Fixture {
    pub corpus: Corpus,
    pub set: TrainingSet,
    pub gold: GoldMap,
}

pub fn fixture(corpus: Corpus) -> Fixture {
    let games = corpus.all_games();
    let set = corpus.training_set(&games, DEFAULT_WINDOW_MS);
    let gold = corpus.gold_map(&games);
    Fixture { corpus, set, gold }
}

/// An external alignment that is right for nine in ten gold-bearing
/// comments: a fixed hash picks the tenth, which gets another candidate
/// when one exists. Superfluous comments are aligned to their earliest
/// candidate.
pub fn noisy_external_alignment(f: &Fixture) -> Vec<(Vec<String>, Mr)> {
    f.set
        .examples
        .iter()
        .map(|ex| {
            let key = ex.key();
            let corrupt = mix64(key.comment as u64 * 31 + key.game as u64).is_multiple_of(10);
            let mr = match f.gold[&key].clone() {
                Some(g) if !corrupt => g,
                Some(g) => ex
                    .candidates
                    .iter()
                    .map(|c| c.mr.clone())
                    .find(|c| *c != g)
                    .unwrap_or(g),
                None => ex.candidates[0].mr.clone(),
            };
            (ex.comment.tokens.clone(), mr)
        })
        .collect()
}

/// Fraction of gold-bearing examples whose pair carries the gold MR.
pub fn alignment_accuracy(f: &Fixture, pairs: &[(Vec<String>, Mr)]) -> f64 {
    let mut bearing = 0;
    let mut right = 0;
    for (ex, (_, mr)) in f.set.examples.iter().zip(pairs) {
        if let Some(Some(g)) = f.gold.get(&ex.key()) {
            bearing += 1;
            right += usize::from(g == mr);
        }
    }
    right as f64 / bearing as f64
}

/// Odds of a pruned example being superfluous over the odds for a kept
/// one, with 0.5 added to every cell when one is empty. `None` when nothing
/// was pruned.
pub fn pruned_none_odds_ratio(
    keys: impl IntoIterator<Item = ExampleKey>,
    pruned: &std::collections::BTreeSet<ExampleKey>,
    gold: &GoldMap,
) -> Option<f64> {
    let mut table = [[0.0f64; 2]; 2];
    for k in keys {
        let is_pruned = usize::from(pruned.contains(&k));
        let is_none = usize::from(matches!(gold.get(&k), Some(None)));
        table[is_pruned][is_none] += 1.0;
    }
    if table[1][0] + table[1][1] == 0.0 {
        return None;
    }
    if table.iter().flatten().any(|&c| c == 0.0) {
        table.iter_mut().flatten().for_each(|c| *c += 0.5);
    }
    let [[kept_real, kept_none], [pruned_real, pruned_none]] = table;
    Some((pruned_none * kept_real) / (pruned_real * kept_none))
}

pub fn argv(words: &[&str]) -> Vec<String> {
    std::iter::once("sportscaster")
        .chain(words.iter().copied())
        .map(str::to_owned)
        .collect()
}

/// Every regular file below `dir`, keyed by its path relative to `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).expect("readable file"));
            }
        }
    }
    out
}

/// simulate, pair, train, sportscast and evaluate with every output below
/// `root`; two runs into the same root see identical paths. Returns the exit status of the first failing stage, or 0.
pub fn run_pipeline(root: &Path, seed: &str, strategy: &str) -> i32 {
    let p = |rel: &str| root.join(rel).display().to_string();
    let stages: Vec<Vec<String>> = vec![
        vec![
            "simulate".into(),
            "--seed".into(),
            seed.into(),
            "--out".into(),
            p("sim"),
        ],
        vec![
            "pair".into(),
            "--manifest".into(),
            p("sim/manifest.tsv"),
            "--out".into(),
            p("pair"),
        ],
        vec![
            "train".into(),
            "--manifest".into(),
            p("sim/manifest.tsv"),
            "--strategy".into(),
            strategy.into(),
            "--games".into(),
            "game1,game2,game3".into(),
            "--out".into(),
            p("train"),
        ],
        vec![
            "sportscast".into(),
            "--manifest".into(),
            p("sim/manifest.tsv"),
            "--model".into(),
            p("train/model.txt"),
            "--strategic".into(),
            p("train/strategic.tsv"),
            "--game".into(),
            "game4".into(),
            "--seed".into(),
            seed.into(),
            "--out".into(),
            p("cast"),
        ],
        vec![
            "evaluate".into(),
            "--manifest".into(),
            p("sim/manifest.tsv"),
            "--model".into(),
            p("train/model.txt"),
            "--matching".into(),
            p("train/matching.tsv"),
            "--out".into(),
            p("eval"),
        ],
    ];
    for stage in stages {
        let words: Vec<&str> = stage.iter().map(String::as_str).collect();
        let code = sportscaster::cli::run(argv(&words));
        if code != 0 {
            return code;
        }
    }
    0
}
