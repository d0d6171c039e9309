//! `key = value` simulation config.
//!
//! ```text
//! # comments and blank lines are ignored
//! profile = english            # or `sharp`; applied before every other key
//! seed = 7
//! games = 4
//! weight.pass = 1069
//! comment_prob.pass = 0.999
//! template.pass = 0.6 : ⟨1⟩ passes to ⟨2⟩
//! surface.pink1 = 0.3 : pink goalie
//! ```
//!
//! The first `template.<pred>` line replaces the profile's templates for
//! that predicate and later lines append; `surface.<constant>` likewise.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::{CommentatorProfile, SimError, WeightedPattern, WorldConfig};
use crate::mrl::{Constant, Predicate};
use crate::translator::{format_pattern, parse_pattern};

#[derive(Debug, Error, PartialEq)]
#[error("config line {line}: {reason}")]
pub struct ConfigError {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub games: usize,
    pub profile_name: String,
    pub world: WorldConfig,
    pub profile: CommentatorProfile,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 1,
            games: 4,
            profile_name: "english".into(),
            world: WorldConfig::default(),
            profile: CommentatorProfile::english(),
        }
    }
}

fn base_profile(name: &str) -> Option<CommentatorProfile> {
    match name {
        "english" => Some(CommentatorProfile::english()),
        "sharp" => Some(CommentatorProfile::sharp()),
        _ => None,
    }
}

fn weighted_value(value: &str) -> Result<(f64, &str), String> {
    let (w, rest) = value
        .split_once(':')
        .ok_or_else(|| "expected `<weight> : <text>`".to_owned())?;
    let w: f64 = w.trim().parse().map_err(|_| format!("bad weight `{}`", w.trim()))?;
    if !(w >= 0.0) || !w.is_finite() {
        return Err(format!("weight {w} must be a non-negative number"));
    }
    Ok((w, rest.trim()))
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{key}` expects a number, got `{value}`"))
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<SimConfig, ConfigError> {
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError {
                line: i + 1,
                reason: "expected `key = value`".into(),
            })?;
            lines.push((i + 1, k.trim().to_owned(), v.trim().to_owned()));
        }

        let mut config = SimConfig::default();
        if let Some((line, _, name)) = lines.iter().rev().find(|(_, k, _)| k == "profile") {
            config.profile = base_profile(name).ok_or_else(|| ConfigError {
                line: *line,
                reason: format!("unknown profile `{name}` (expected english or sharp)"),
            })?;
            config.profile_name = name.clone();
        }

        let mut replaced_templates = BTreeSet::new();
        let mut replaced_surfaces = BTreeSet::new();
        for (line, key, value) in &lines {
            config
                .apply(key, value, &mut replaced_templates, &mut replaced_surfaces)
                .map_err(|reason| ConfigError { line: *line, reason })?;
        }
        config.validate().map_err(|e| ConfigError {
            line: 0,
            reason: e.to_string(),
        })?;
        Ok(config)
    }

    fn apply(
        &mut self,
        key: &str,
        value: &str,
        replaced_templates: &mut BTreeSet<Predicate>,
        replaced_surfaces: &mut BTreeSet<Constant>,
    ) -> Result<(), String> {
        let pred_of = |name: &str| Predicate::from_name(name).ok_or_else(|| format!("unknown predicate `{name}`"));
        match key.split_once('.') {
            Some(("weight", p)) => {
                self.world.event_type_weights[pred_of(p)?.index()] = number(key, value)?;
            }
            Some(("comment_prob", p)) => {
                self.profile.comment_prob[pred_of(p)?.index()] = number(key, value)?;
            }
            Some(("template", p)) => {
                let pred = pred_of(p)?;
                let (weight, text) = weighted_value(value)?;
                let pieces = parse_pattern(text)?;
                let list = self.profile.templates.entry(pred).or_default();
                if replaced_templates.insert(pred) {
                    list.clear();
                }
                list.push(WeightedPattern { pieces, weight });
            }
            Some(("surface", c)) => {
                let constant = Constant::from_token(c).ok_or_else(|| format!("unknown constant `{c}`"))?;
                let (weight, text) = weighted_value(value)?;
                let words: Vec<String> = text.split_whitespace().map(str::to_owned).collect();
                if words.is_empty() {
                    return Err("a surface needs at least one word".into());
                }
                let list = self.profile.surfaces.entry(constant).or_default();
                if replaced_surfaces.insert(constant) {
                    list.clear();
                }
                list.push((words, weight));
            }
            _ => match key {
                "profile" => {}
                "seed" => self.seed = number(key, value)?,
                "games" => self.games = number(key, value)?,
                "duration_ms" => self.world.duration_ms = number(key, value)?,
                "mean_event_gap_ms" => self.world.mean_event_gap_ms = number(key, value)?,
                "window_ms" => self.profile.window_ms = number(key, value)?,
                "superfluous_rate" => self.profile.superfluous_rate = number(key, value)?,
                "lag_min_ms" => self.profile.lag_ms_range.0 = number(key, value)?,
                "lag_max_ms" => self.profile.lag_ms_range.1 = number(key, value)?,
                "superfluous_min_len" => self.profile.superfluous_len.0 = number(key, value)?,
                "superfluous_max_len" => self.profile.superfluous_len.1 = number(key, value)?,
                "language" => self.profile.language = value.to_owned(),
                "superfluous_vocabulary" => {
                    self.profile.superfluous_vocabulary = value.split_whitespace().map(str::to_owned).collect()
                }
                _ => return Err(format!("unknown key `{key}`")),
            },
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.games == 0 {
            return Err(SimError::Invalid("games must be at least 1".into()));
        }
        self.world.validate()?;
        self.profile.validate()
    }

    /// The effective configuration in the same format `parse` reads.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let p = &self.profile;
        let w = &self.world;
        let _ = writeln!(out, "profile = {}", self.profile_name);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "games = {}", self.games);
        let _ = writeln!(out, "duration_ms = {}", w.duration_ms);
        let _ = writeln!(out, "mean_event_gap_ms = {}", w.mean_event_gap_ms);
        let _ = writeln!(out, "window_ms = {}", p.window_ms);
        let _ = writeln!(out, "superfluous_rate = {}", p.superfluous_rate);
        let _ = writeln!(out, "lag_min_ms = {}", p.lag_ms_range.0);
        let _ = writeln!(out, "lag_max_ms = {}", p.lag_ms_range.1);
        let _ = writeln!(out, "superfluous_min_len = {}", p.superfluous_len.0);
        let _ = writeln!(out, "superfluous_max_len = {}", p.superfluous_len.1);
        let _ = writeln!(out, "language = {}", p.language);
        let _ = writeln!(out, "superfluous_vocabulary = {}", p.superfluous_vocabulary.join(" "));
        for pred in Predicate::ALL {
            let _ = writeln!(out, "weight.{} = {}", pred, w.event_type_weights[pred.index()]);
        }
        for pred in Predicate::ALL {
            let _ = writeln!(out, "comment_prob.{} = {}", pred, p.comment_prob[pred.index()]);
        }
        for (pred, pats) in &p.templates {
            for pat in pats {
                let _ = writeln!(
                    out,
                    "template.{} = {} : {}",
                    pred,
                    pat.weight,
                    format_pattern(&pat.pieces)
                );
            }
        }
        for (c, surfaces) in &p.surfaces {
            for (words, weight) in surfaces {
                let _ = writeln!(out, "surface.{} = {} : {}", c.token(), weight, words.join(" "));
            }
        }
        out
    }
}
