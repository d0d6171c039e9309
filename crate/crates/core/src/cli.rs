//! Command-line pipeline: simulate a corpus, pair it, train, estimate the
//! strategic model, parse, generate, sportscast and evaluate.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;

use crate::corpus::{load_corpus, pairing_stats, write_corpus, Corpus, ExampleKey, DEFAULT_WINDOW_MS};
use crate::learner::{
    external_alignment_tsv, init_from_external, matching_tsv, parse_all, retrain_loop, strategic_from_matching,
    superfluous_cv, LearnerConfig, StrategyKind, DEFAULT_MAX_ITER, DEFAULT_THRESHOLDS,
};
use crate::metrics::{generation_bleu, matching_f1, parsing_f1, EvalReport, Task};
use crate::mrl::Mr;
use crate::report::{fmt_real, render_reports, summary, ReportFormat};
use crate::simgen::{simulate_corpus, Prng, SimConfig};
use crate::strategic::{assemble_sportscast, igsl, StrategicModel, DEFAULT_IGSL_MAX_ITER, DEFAULT_TICK_MS};
use crate::translator::{load_model, save_model, TranslationModel};

pub const DEFAULT_TOPK: usize = 5;
pub const RUN_CONFIG_FILE: &str = "run.conf";

#[derive(Parser, Debug)]
#[command(
    name = "sportscaster",
    version,
    about = "Learn to sportscast from ambiguous commentary"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic corpus with gold annotations
    Simulate(Common),
    /// Report pairing statistics per game
    Pair(Common),
    /// Disambiguate the training pairs and fit a translation model
    Train(Common),
    /// Estimate event-type commentary rates from the ambiguous pairs
    Igsl(Common),
    /// Parse one sentence per line of --input into an MR
    Parse(Common),
    /// Verbalize one MR per line of --input
    Generate(Common),
    /// Commentate a game's event trace
    Sportscast(Common),
    /// Score a trained model and matching against gold
    Evaluate(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// `key = value` file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<StrategyKind>,
    #[arg(long)]
    window_ms: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    topk: Option<usize>,
    /// External `game\tcomment\tmr` alignment used for the first training round
    #[arg(long)]
    init_alignment: Option<PathBuf>,
    /// Choose a pruning fraction by internal cross-validation
    #[arg(long)]
    superfluous_cv: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit reports as JSON lines instead of TSV
    #[arg(long)]
    json: bool,
    /// Trained model file
    #[arg(long)]
    model: Option<PathBuf>,
    /// Strategic model file
    #[arg(long)]
    strategic: Option<PathBuf>,
    /// Sentences or MRs, one per line
    #[arg(long)]
    input: Option<PathBuf>,
    /// Matching file written by `train`
    #[arg(long)]
    matching: Option<PathBuf>,
    /// Comma-separated game names; defaults to every game
    #[arg(long)]
    games: Option<String>,
    /// Single game for `sportscast`
    #[arg(long)]
    game: Option<String>,
}

fn parse_strategy(s: &str) -> Result<StrategyKind, String> {
    s.parse()
}

/// Effective settings of one invocation, echoed into the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub manifest: Option<PathBuf>,
    pub strategy: StrategyKind,
    pub window_ms: u64,
    pub max_iter: usize,
    pub seed: u64,
    pub topk: usize,
    pub init_alignment: Option<PathBuf>,
    pub superfluous_cv: bool,
    pub json: bool,
    pub out: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub strategic: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub matching: Option<PathBuf>,
    pub games: Option<String>,
    pub game: Option<String>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        RunConfig {
            command: command.to_owned(),
            manifest: None,
            strategy: StrategyKind::NistIgsl,
            window_ms: DEFAULT_WINDOW_MS,
            max_iter: DEFAULT_MAX_ITER,
            seed: 1,
            topk: DEFAULT_TOPK,
            init_alignment: None,
            superfluous_cv: false,
            json: false,
            out: None,
            model: None,
            strategic: None,
            input: None,
            matching: None,
            games: None,
            game: None,
        }
    }

    /// Applies `key = value` lines; `#` starts a comment. Keys that only
    /// the simulator understands are left to it.
    pub fn apply_text(&mut self, text: &str, simulator_keys: bool) -> anyhow::Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
            self.apply(k.trim(), v.trim(), simulator_keys)
                .with_context(|| format!("line {}", i + 1))?;
        }
        Ok(())
    }

    fn apply(&mut self, key: &str, value: &str, simulator_keys: bool) -> anyhow::Result<()> {
        let path = || Some(PathBuf::from(value));
        let flag = || -> anyhow::Result<bool> { value.parse().map_err(|_| anyhow!("`{key}` expects true or false")) };
        match key {
            "manifest" => self.manifest = path(),
            "strategy" => self.strategy = value.parse().map_err(|e: String| anyhow!(e))?,
            "window_ms" => self.window_ms = value.parse().context("window_ms")?,
            "max_iter" => self.max_iter = value.parse().context("max_iter")?,
            "seed" => self.seed = value.parse().context("seed")?,
            "topk" => self.topk = value.parse().context("topk")?,
            "init_alignment" => self.init_alignment = path(),
            "superfluous_cv" => self.superfluous_cv = flag()?,
            "json" => self.json = flag()?,
            "out" => self.out = path(),
            "model" => self.model = path(),
            "strategic" => self.strategic = path(),
            "input" => self.input = path(),
            "matching" => self.matching = path(),
            "games" => self.games = Some(value.to_owned()),
            "game" => self.game = Some(value.to_owned()),
            _ if simulator_keys => {}
            _ => bail!("unknown key `{key}`"),
        }
        Ok(())
    }

    fn overlay(&mut self, c: &Common) {
        macro_rules! take {
            ($($f:ident),*) => {$(
                if let Some(v) = &c.$f {
                    self.$f = v.clone().into();
                }
            )*};
        }
        take!(
            manifest,
            init_alignment,
            out,
            model,
            strategic,
            input,
            matching,
            games,
            game
        );
        if let Some(v) = c.strategy {
            self.strategy = v;
        }
        if let Some(v) = c.window_ms {
            self.window_ms = v;
        }
        if let Some(v) = c.max_iter {
            self.max_iter = v;
        }
        if let Some(v) = c.seed {
            self.seed = v;
        }
        if let Some(v) = c.topk {
            self.topk = v;
        }
        self.superfluous_cv |= c.superfluous_cv;
        self.json |= c.json;
    }

    /// Every field, in the format `apply_text` reads back.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let opt = |p: &Option<PathBuf>| p.as_ref().map_or("-".to_owned(), |p| p.display().to_string());
        let _ = writeln!(out, "# command: {}", self.command);
        for (k, v) in [
            ("manifest", opt(&self.manifest)),
            ("strategy", self.strategy.to_string()),
            ("window_ms", self.window_ms.to_string()),
            ("max_iter", self.max_iter.to_string()),
            ("seed", self.seed.to_string()),
            ("topk", self.topk.to_string()),
            ("init_alignment", opt(&self.init_alignment)),
            ("superfluous_cv", self.superfluous_cv.to_string()),
            ("json", self.json.to_string()),
            ("model", opt(&self.model)),
            ("strategic", opt(&self.strategic)),
            ("input", opt(&self.input)),
            ("matching", opt(&self.matching)),
            ("games", self.games.clone().unwrap_or_else(|| "-".into())),
            ("game", self.game.clone().unwrap_or_else(|| "-".into())),
        ] {
            if v == "-" {
                let _ = writeln!(out, "# {k} unset");
            } else {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }

    fn format(&self) -> ReportFormat {
        if self.json {
            ReportFormat::Json
        } else {
            ReportFormat::Tsv
        }
    }
}

/// A failure in the data rather than in the invocation.
#[derive(Debug)]
struct DataError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for DataError {
    fn from(e: E) -> Self {
        DataError(e.into())
    }
}

type DataResult<T> = Result<T, DataError>;

/// Runs one subcommand. Returns 0 on success, 1 on a usage error and 2 on
/// a data error.
pub fn run<I: IntoIterator<Item = String>>(argv: I) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, common) = match &cli.command {
        Command::Simulate(c) => ("simulate", c),
        Command::Pair(c) => ("pair", c),
        Command::Train(c) => ("train", c),
        Command::Igsl(c) => ("igsl", c),
        Command::Parse(c) => ("parse", c),
        Command::Generate(c) => ("generate", c),
        Command::Sportscast(c) => ("sportscast", c),
        Command::Evaluate(c) => ("evaluate", c),
    };
    let mut config = RunConfig::new(name);
    let mut config_text = None;
    if let Some(path) = &common.config {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return 2;
            }
        };
        if let Err(e) = config.apply_text(&text, name == "simulate") {
            eprintln!("error: {}: {e:#}", path.display());
            return 1;
        }
        config_text = Some(text);
    }
    config.overlay(common);
    if let Err(msg) = check_required(&config) {
        eprintln!("error: {msg}");
        return 1;
    }
    let outcome = match name {
        "simulate" => cmd_simulate(&config, config_text.as_deref()),
        "pair" => cmd_pair(&config),
        "train" => cmd_train(&config),
        "igsl" => cmd_igsl(&config),
        "parse" => cmd_parse(&config),
        "generate" => cmd_generate(&config),
        "sportscast" => cmd_sportscast(&config),
        "evaluate" => cmd_evaluate(&config),
        _ => unreachable!("every subcommand is dispatched"),
    };
    match outcome {
        Ok(()) => 0,
        Err(DataError(e)) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn check_required(c: &RunConfig) -> Result<(), String> {
    let need: &[(&str, bool)] = match c.command.as_str() {
        "simulate" => &[("--out", c.out.is_some())],
        "pair" | "igsl" => &[("--manifest", c.manifest.is_some())],
        "train" => &[("--manifest", c.manifest.is_some()), ("--out", c.out.is_some())],
        "parse" | "generate" => &[("--model", c.model.is_some()), ("--input", c.input.is_some())],
        "sportscast" => &[
            ("--manifest", c.manifest.is_some()),
            ("--model", c.model.is_some()),
            ("--strategic", c.strategic.is_some()),
            ("--game", c.game.is_some()),
        ],
        "evaluate" => &[("--manifest", c.manifest.is_some())],
        _ => &[],
    };
    match need.iter().find(|(_, present)| !present) {
        Some((flag, _)) => Err(format!("`{}` requires {flag}", c.command)),
        None => Ok(()),
    }
}

fn read(path: &Path) -> DataResult<String> {
    Ok(fs::read_to_string(path).with_context(|| path.display().to_string())?)
}

fn write(path: &Path, contents: &str) -> DataResult<()> {
    Ok(fs::write(path, contents).with_context(|| path.display().to_string())?)
}

/// Writes `contents` under the output directory, or to stdout without one.
fn emit(config: &RunConfig, file: &str, contents: &str) -> DataResult<()> {
    match &config.out {
        Some(dir) => write(&dir.join(file), contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn prepare_out(config: &RunConfig) -> DataResult<()> {
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
        write(&dir.join(RUN_CONFIG_FILE), &config.render())?;
    }
    Ok(())
}

fn load(config: &RunConfig) -> DataResult<Corpus> {
    let manifest = config.manifest.as_ref().expect("checked");
    Ok(load_corpus(manifest, config.window_ms)?)
}

fn selected_games(corpus: &Corpus, names: Option<&str>) -> DataResult<Vec<usize>> {
    let Some(names) = names else {
        return Ok(corpus.all_games());
    };
    names
        .split(',')
        .map(str::trim)
        .filter(|n| !n.is_empty())
        .map(|n| {
            corpus
                .game_index(n)
                .ok_or_else(|| DataError(anyhow!("no game named `{n}`")))
        })
        .collect()
}

fn game_names(corpus: &Corpus) -> Vec<String> {
    corpus.games.iter().map(|g| g.name.clone()).collect()
}

fn load_translation_model(path: &Path) -> DataResult<TranslationModel> {
    Ok(load_model(&read(path)?).with_context(|| path.display().to_string())?)
}

fn cmd_simulate(config: &RunConfig, text: Option<&str>) -> DataResult<()> {
    let mut sim = match text {
        Some(t) => SimConfig::parse(t)?,
        None => SimConfig::default(),
    };
    sim.seed = config.seed;
    sim.validate()?;
    let corpus = simulate_corpus(&sim)?;
    let dir = config.out.as_ref().expect("checked");
    let manifest = write_corpus(&corpus, dir)?;
    write(&dir.join("simulate.conf"), &sim.render())?;
    prepare_out(config)?;
    info!("wrote {}", manifest.display());
    Ok(())
}

fn cmd_pair(config: &RunConfig) -> DataResult<()> {
    let corpus = load(config)?;
    prepare_out(config)?;
    let mut out = String::from("game\tevents\tcomments\thave_mrs\thave_correct_mr\tmax_mrs\tmean_mrs\tstd_mrs\n");
    for &g in &selected_games(&corpus, config.games.as_deref())? {
        let s = pairing_stats(&corpus.games[g], config.window_ms);
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.game,
            s.events,
            s.comments,
            s.have_mrs,
            s.have_correct_mr.map_or("-".into(), |n| n.to_string()),
            s.max_candidates,
            fmt_real(s.mean_candidates),
            fmt_real(s.std_candidates)
        );
    }
    emit(config, "pairing.tsv", &out)
}

fn cmd_train(config: &RunConfig) -> DataResult<()> {
    let corpus = load(config)?;
    let games = selected_games(&corpus, config.games.as_deref())?;
    let names = game_names(&corpus);
    let set = corpus.training_set(&games, config.window_ms);
    let gold = corpus.has_gold(&games).then(|| corpus.gold_map(&games));
    let mut learner = LearnerConfig::new(config.strategy);
    learner.max_iter = config.max_iter;
    learner.strategy.seed = config.seed;
    prepare_out(config)?;
    let dir = config.out.as_ref().expect("checked");

    let result = if config.superfluous_cv {
        let cv = superfluous_cv(&set, &DEFAULT_THRESHOLDS, &learner, gold.as_ref())?;
        let mut text = String::from("prune_fraction\tvalidation_fraction\n");
        for (theta, frac) in &cv.validation {
            let _ = writeln!(text, "{}\t{}", fmt_real(*theta), fmt_real(*frac));
        }
        let _ = writeln!(text, "# chosen {}", fmt_real(cv.threshold));
        write(&dir.join("superfluous_cv.tsv"), &text)?;
        cv.result
    } else {
        let init = match &config.init_alignment {
            Some(path) => {
                let (pairs, skipped) = init_from_external(&read(path)?, &set.examples, &names)
                    .with_context(|| path.display().to_string())?;
                if skipped > 0 {
                    info!("{skipped} external alignment line(s) name no training example");
                }
                Some(pairs)
            }
            None => None,
        };
        retrain_loop(&set, &learner, init.as_deref(), gold.as_ref())?
    };

    let strategic = match &result.strategic {
        Some(s) => s.clone(),
        None => {
            let traces: Vec<(usize, &[_])> = games.iter().map(|&g| (g, &corpus.games[g].events[..])).collect();
            strategic_from_matching(&result.matching, &traces)
        }
    };
    write(&dir.join("model.txt"), &save_model(&result.model))?;
    write(&dir.join("matching.tsv"), &matching_tsv(&result.matching, &names))?;
    write(
        &dir.join("alignment.tsv"),
        &external_alignment_tsv(&result.matching.mrs(), &names),
    )?;
    write(&dir.join("iterations.tsv"), &result.matching.iteration_report())?;
    write(&dir.join("strategic.tsv"), &strategic.to_tsv())?;
    if let Some(f1) = result.final_f1() {
        info!("{}: matching F1 {f1:.4}", config.strategy);
    }
    Ok(())
}

fn cmd_igsl(config: &RunConfig) -> DataResult<()> {
    let corpus = load(config)?;
    let games = selected_games(&corpus, config.games.as_deref())?;
    let set = corpus.training_set(&games, config.window_ms);
    let result = igsl(&set.examples, set.event_counts, DEFAULT_IGSL_MAX_ITER)?;
    prepare_out(config)?;
    info!("converged after {} iteration(s)", result.iterations());
    emit(config, "strategic.tsv", &result.model.to_tsv())
}

fn cmd_parse(config: &RunConfig) -> DataResult<()> {
    let model = load_translation_model(config.model.as_ref().expect("checked"))?;
    let input = read(config.input.as_ref().expect("checked"))?;
    prepare_out(config)?;
    let mut out = String::new();
    for line in input.lines() {
        let tokens = crate::corpus::tokenize(line, "en");
        let best = model.parse_sentence(&tokens, None).into_iter().next();
        match best {
            Some((mr, score)) => {
                let _ = writeln!(out, "{mr}\t{}", fmt_real(score));
            }
            None => out.push_str("NONE\t-\n"),
        }
    }
    emit(config, "parses.tsv", &out)
}

fn cmd_generate(config: &RunConfig) -> DataResult<()> {
    let model = load_translation_model(config.model.as_ref().expect("checked"))?;
    let input = read(config.input.as_ref().expect("checked"))?;
    prepare_out(config)?;
    let mut out = String::new();
    for (i, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mr = Mr::parse(line).map_err(|e| anyhow!("{}:{}: {e}", config.input.as_ref().unwrap().display(), i + 1))?;
        match model.generate_topk(&mr, config.topk.max(1)) {
            Ok(options) => {
                for (rank, (tokens, score)) in options.iter().enumerate() {
                    let _ = writeln!(out, "{mr}\t{}\t{}\t{}", rank + 1, fmt_real(*score), tokens.join(" "));
                }
            }
            Err(e) => {
                let _ = writeln!(out, "{mr}\t-\t-\t# {e}");
            }
        }
    }
    emit(config, "generated.tsv", &out)
}

fn cmd_sportscast(config: &RunConfig) -> DataResult<()> {
    let corpus = load(config)?;
    let name = config.game.as_deref().expect("checked");
    let game = corpus
        .game_index(name)
        .ok_or_else(|| anyhow!("no game named `{name}`"))?;
    let model = load_translation_model(config.model.as_ref().expect("checked"))?;
    let path = config.strategic.as_ref().expect("checked");
    let strategic = StrategicModel::from_tsv(&read(path)?).with_context(|| path.display().to_string())?;
    prepare_out(config)?;
    let mut rng = Prng::new(config.seed);
    let cast = assemble_sportscast(
        &corpus.games[game].events,
        &strategic,
        &model,
        config.topk,
        DEFAULT_TICK_MS,
        &mut rng,
    );
    if cast.skipped > 0 {
        info!("{} selected event(s) had no template", cast.skipped);
    }
    emit(config, "sportscast.tsv", &cast.to_tsv())
}

/// Reads the `game\tcomment\tevent\tmr\tscore` lines written by `train`.
fn read_matching(path: &Path, corpus: &Corpus) -> DataResult<BTreeMap<ExampleKey, Mr>> {
    let mut out = BTreeMap::new();
    for (i, line) in read(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = || format!("{}:{}", path.display(), i + 1);
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() < 4 {
            return Err(anyhow!("{}: expected `game\\tcomment\\tevent\\tmr\\tscore`", at()).into());
        }
        let game = corpus
            .game_index(f[0])
            .ok_or_else(|| anyhow!("{}: no game named `{}`", at(), f[0]))?;
        let comment = f[1]
            .parse()
            .map_err(|_| anyhow!("{}: bad comment id `{}`", at(), f[1]))?;
        let mr = Mr::parse(f[3]).map_err(|e| anyhow!("{}: {e}", at()))?;
        out.insert(ExampleKey { game, comment }, mr);
    }
    Ok(out)
}

fn cmd_evaluate(config: &RunConfig) -> DataResult<()> {
    let corpus = load(config)?;
    let games = selected_games(&corpus, config.games.as_deref())?;
    if !corpus.has_gold(&games) {
        return Err(anyhow!("evaluation needs gold annotations for every selected game").into());
    }
    let gold = corpus.gold_map(&games);
    prepare_out(config)?;
    let mut reports: Vec<EvalReport> = Vec::new();
    if let Some(path) = &config.matching {
        let mut predicted = read_matching(path, &corpus)?;
        predicted.retain(|k, _| games.contains(&k.game));
        if predicted.is_empty() {
            info!("{} matches no comment of the selected games", path.display());
        } else {
            reports.push(matching_f1(&predicted, &gold));
        }
    }
    if let Some(path) = &config.model {
        let model = load_translation_model(path)?;
        let set = corpus.training_set(&games, config.window_ms);
        reports.push(parsing_f1(&parse_all(&model, &set.examples), &gold));
        match generation_bleu(&model, &corpus, &games) {
            Ok(bleu) => reports.push(EvalReport::scored(Task::Generation, "all", bleu)),
            Err(e) => info!("generation not scored: {e}"),
        }
    }
    if reports.is_empty() {
        return Err(anyhow!("nothing to evaluate: pass --matching and/or --model").into());
    }
    if config.games.is_some() {
        let split = games
            .iter()
            .map(|&g| corpus.games[g].name.as_str())
            .collect::<Vec<_>>()
            .join("+");
        reports.iter_mut().for_each(|r| r.split = split.clone());
    }
    for line in summary(&reports).lines() {
        info!("{line}");
    }
    let file = if config.json { "report.json" } else { "report.tsv" };
    emit(config, file, &render_reports(&reports, config.format()))
}
