//! The meaning-representation language: nine predicates over player and
//! play-mode constants, the grammar productions that derive them, and the
//! canonical surface syntax `pred ( a1 , a2 )`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Argument sorts of the grammar's nonterminals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Player,
    PlayMode,
}

impl Sort {
    pub fn nonterminal(self) -> &'static str {
        match self {
            Sort::Player => "*PLAYER",
            Sort::PlayMode => "*PLAYMODE",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    Playmode,
    Ballstopped,
    Turnover,
    Kick,
    Pass,
    BadPass,
    Defense,
    Steal,
    Block,
}

impl Predicate {
    /// All predicates in grammar order.
    pub const ALL: [Predicate; 9] = [
        Predicate::Playmode,
        Predicate::Ballstopped,
        Predicate::Turnover,
        Predicate::Kick,
        Predicate::Pass,
        Predicate::BadPass,
        Predicate::Defense,
        Predicate::Steal,
        Predicate::Block,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predicate::Playmode => "playmode",
            Predicate::Ballstopped => "ballstopped",
            Predicate::Turnover => "turnover",
            Predicate::Kick => "kick",
            Predicate::Pass => "pass",
            Predicate::BadPass => "badPass",
            Predicate::Defense => "defense",
            Predicate::Steal => "steal",
            Predicate::Block => "block",
        }
    }

    pub fn from_name(name: &str) -> Option<Predicate> {
        Predicate::ALL.iter().copied().find(|p| p.name() == name)
    }

    pub fn argument_sorts(self) -> &'static [Sort] {
        match self {
            Predicate::Playmode => &[Sort::PlayMode],
            Predicate::Ballstopped => &[],
            Predicate::Kick | Predicate::Steal | Predicate::Block => &[Sort::Player],
            Predicate::Turnover | Predicate::Pass | Predicate::BadPass | Predicate::Defense => {
                &[Sort::Player, Sort::Player]
            }
        }
    }

    pub fn arity(self) -> usize {
        self.argument_sorts().len()
    }

    /// Position in [`Predicate::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Predicate {
    type Err = MrlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Predicate::from_name(s.trim()).ok_or_else(|| MrlError::Malformed {
            position: 0,
            reason: format!("unknown predicate `{}`", s.trim()),
        })
    }
}

pub const PLAYMODES: [&str; 15] = [
    "kick_off_l",
    "kick_off_r",
    "kick_in_l",
    "kick_in_r",
    "play_on",
    "offside_l",
    "offside_r",
    "free_kick_l",
    "free_kick_r",
    "corner_kick_l",
    "corner_kick_r",
    "goal_kick_l",
    "goal_kick_r",
    "goal_l",
    "goal_r",
];

pub const PLAYERS: [&str; 22] = [
    "pink1", "pink2", "pink3", "pink4", "pink5", "pink6", "pink7", "pink8", "pink9", "pink10", "pink11", "purple1",
    "purple2", "purple3", "purple4", "purple5", "purple6", "purple7", "purple8", "purple9", "purple10", "purple11",
];

/// A grammar constant. The payload indexes [`PLAYERS`] or [`PLAYMODES`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constant {
    Player(u8),
    PlayMode(u8),
}

impl Constant {
    pub fn token(self) -> &'static str {
        match self {
            Constant::Player(i) => PLAYERS[i as usize],
            Constant::PlayMode(i) => PLAYMODES[i as usize],
        }
    }

    pub fn sort(self) -> Sort {
        match self {
            Constant::Player(_) => Sort::Player,
            Constant::PlayMode(_) => Sort::PlayMode,
        }
    }

    pub fn from_token(token: &str) -> Option<Constant> {
        if let Some(i) = PLAYERS.iter().position(|&t| t == token) {
            return Some(Constant::Player(i as u8));
        }
        PLAYMODES
            .iter()
            .position(|&t| t == token)
            .map(|i| Constant::PlayMode(i as u8))
    }

    /// Every constant of the given sort, in grammar order.
    pub fn of_sort(sort: Sort) -> Vec<Constant> {
        match sort {
            Sort::Player => (0..PLAYERS.len() as u8).map(Constant::Player).collect(),
            Sort::PlayMode => (0..PLAYMODES.len() as u8).map(Constant::PlayMode).collect(),
        }
    }

    /// All 37 constants: play modes first, then players.
    pub fn all() -> Vec<Constant> {
        let mut out = Constant::of_sort(Sort::PlayMode);
        out.extend(Constant::of_sort(Sort::Player));
        out
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl PartialOrd for Constant {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Constant {
    fn cmp(&self, other: &Self) -> Ordering {
        self.token().cmp(other.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MrlError {
    #[error("malformed MR at offset {position}: {reason}")]
    Malformed { position: usize, reason: String },
}

fn malformed(position: usize, reason: impl Into<String>) -> MrlError {
    MrlError::Malformed {
        position,
        reason: reason.into(),
    }
}

/// One atomic formula of the MRL.
///
/// The ordering is the canonical one: byte order of the serialized form.
/// Because every separator in the serialization sorts below every token
/// character, comparing the predicate name and then the argument tokens
/// pairwise gives the same result without allocating.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MeaningRepresentation {
    predicate: Predicate,
    args: Vec<Constant>,
}

pub type Mr = MeaningRepresentation;

impl MeaningRepresentation {
    pub fn new(predicate: Predicate, args: Vec<Constant>) -> Result<Self, MrlError> {
        let sorts = predicate.argument_sorts();
        if sorts.len() != args.len() {
            return Err(malformed(
                0,
                format!("`{}` takes {} argument(s), got {}", predicate, sorts.len(), args.len()),
            ));
        }
        for (i, (arg, sort)) in args.iter().zip(sorts).enumerate() {
            if arg.sort() != *sort {
                return Err(malformed(
                    0,
                    format!(
                        "argument {} of `{}` must be {}, got `{}`",
                        i + 1,
                        predicate,
                        sort.nonterminal(),
                        arg
                    ),
                ));
            }
        }
        Ok(MeaningRepresentation { predicate, args })
    }

    pub fn predicate(&self) -> Predicate {
        self.predicate
    }

    pub fn args(&self) -> &[Constant] {
        &self.args
    }

    /// True for binary MRs whose two arguments coincide, e.g. `pass ( pink1 , pink1 )`.
    pub fn is_self_referential(&self) -> bool {
        self.args.len() == 2 && self.args[0] == self.args[1]
    }

    pub fn serialize(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Self, MrlError> {
        parse_mr(text)
    }

    /// Top-down left-most derivation: the `*S` production followed by one
    /// constant production per argument.
    pub fn derivation(&self) -> Vec<Production> {
        std::iter::once(Production::Start(self.predicate))
            .chain(self.args.iter().map(|&c| Production::Constant(c)))
            .collect()
    }
}

impl fmt::Display for MeaningRepresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.predicate.name())?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str(" (")?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(" ,")?;
            }
            write!(f, " {}", a)?;
        }
        f.write_str(" )")
    }
}

impl FromStr for MeaningRepresentation {
    type Err = MrlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_mr(s)
    }
}

impl PartialOrd for MeaningRepresentation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MeaningRepresentation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.predicate
            .name()
            .cmp(other.predicate.name())
            .then_with(|| self.args.cmp(&other.args))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok<'a> {
    Ident(&'a str),
    Open,
    Close,
    Comma,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok<'_>)>, MrlError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                out.push((i, Tok::Open));
                chars.next();
            }
            ')' => {
                out.push((i, Tok::Close));
                chars.next();
            }
            ',' => {
                out.push((i, Tok::Comma));
                chars.next();
            }
            c if c.is_alphanumeric() || c == '_' => {
                let start = i;
                let mut end = i;
                while let Some(&(j, d)) = chars.peek() {
                    if d.is_alphanumeric() || d == '_' {
                        end = j + d.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push((start, Tok::Ident(&text[start..end])));
            }
            other => return Err(malformed(i, format!("unexpected character `{}`", other))),
        }
    }
    Ok(out)
}

/// Parses an MR from its surface form. Whitespace is free; tokens are
/// matched exactly (case-sensitive) after NFC normalization.
pub fn parse_mr(text: &str) -> Result<MeaningRepresentation, MrlError> {
    let normalized: String = text.nfc().collect();
    let toks = lex(&normalized)?;
    let end = normalized.len();
    let mut it = toks.into_iter().peekable();

    let (pos, name) = match it.next() {
        Some((p, Tok::Ident(name))) => (p, name),
        Some((p, _)) => return Err(malformed(p, "expected a predicate name")),
        None => return Err(malformed(0, "empty input")),
    };
    let predicate =
        Predicate::from_name(name).ok_or_else(|| malformed(pos, format!("unknown predicate `{}`", name)))?;
    let sorts = predicate.argument_sorts();

    let mut args = Vec::new();
    match it.next() {
        None => {}
        Some((p, Tok::Open)) => {
            if sorts.is_empty() {
                return Err(malformed(p, format!("`{}` takes no arguments", predicate)));
            }
            loop {
                let (p, tok) = it.next().ok_or_else(|| malformed(end, "unbalanced parentheses"))?;
                let token = match tok {
                    Tok::Ident(t) => t,
                    _ => return Err(malformed(p, "expected a constant")),
                };
                let c =
                    Constant::from_token(token).ok_or_else(|| malformed(p, format!("unknown constant `{}`", token)))?;
                let idx = args.len();
                match sorts.get(idx) {
                    None => {
                        return Err(malformed(
                            p,
                            format!("`{}` takes {} argument(s)", predicate, sorts.len()),
                        ))
                    }
                    Some(&s) if s != c.sort() => {
                        return Err(malformed(
                            p,
                            format!(
                                "argument {} of `{}` must be {}, got `{}`",
                                idx + 1,
                                predicate,
                                s.nonterminal(),
                                token
                            ),
                        ))
                    }
                    Some(_) => args.push(c),
                }
                match it.next() {
                    Some((_, Tok::Comma)) => continue,
                    Some((_, Tok::Close)) => break,
                    Some((p, _)) => return Err(malformed(p, "expected `,` or `)`")),
                    None => return Err(malformed(end, "unbalanced parentheses")),
                }
            }
        }
        Some((p, _)) => return Err(malformed(p, "expected `(` or end of input")),
    }
    if let Some((p, _)) = it.next() {
        return Err(malformed(p, "trailing input"));
    }
    if args.len() != sorts.len() {
        return Err(malformed(
            end,
            format!("`{}` takes {} argument(s), got {}", predicate, sorts.len(), args.len()),
        ));
    }
    Ok(MeaningRepresentation { predicate, args })
}

pub fn serialize_mr(mr: &MeaningRepresentation) -> String {
    mr.to_string()
}

pub fn derivation(mr: &MeaningRepresentation) -> Vec<Production> {
    mr.derivation()
}

/// Every grammar-valid MR, in grammar order (predicates as listed, then
/// arguments in constant order). Includes self-referential binary MRs.
pub fn enumerate_mrs() -> Vec<MeaningRepresentation> {
    let mut out = Vec::with_capacity(2018);
    for pred in Predicate::ALL {
        let mut partial: Vec<Vec<Constant>> = vec![Vec::new()];
        for &sort in pred.argument_sorts() {
            let choices = Constant::of_sort(sort);
            partial = partial
                .into_iter()
                .flat_map(|prefix| {
                    choices.iter().map(move |&c| {
                        let mut v = prefix.clone();
                        v.push(c);
                        v
                    })
                })
                .collect();
        }
        out.extend(
            partial
                .into_iter()
                .map(|args| MeaningRepresentation { predicate: pred, args }),
        );
    }
    out
}

/// A right-hand-side symbol of a grammar production.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    Terminal(&'static str),
    Nonterminal(&'static str),
}

/// One production of the MRL grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Production {
    /// `*S -> pred ( ... )`
    Start(Predicate),
    /// `*PLAYER -> c` or `*PLAYMODE -> c`
    Constant(Constant),
}

impl Production {
    pub const COUNT: usize = 46;

    pub fn lhs(self) -> &'static str {
        match self {
            Production::Start(_) => "*S",
            Production::Constant(c) => c.sort().nonterminal(),
        }
    }

    pub fn rhs(self) -> Vec<Symbol> {
        match self {
            Production::Constant(c) => vec![Symbol::Terminal(c.token())],
            Production::Start(p) => {
                let mut out = vec![Symbol::Terminal(p.name())];
                let sorts = p.argument_sorts();
                if !sorts.is_empty() {
                    out.push(Symbol::Terminal("("));
                    for (i, s) in sorts.iter().enumerate() {
                        if i > 0 {
                            out.push(Symbol::Terminal(","));
                        }
                        out.push(Symbol::Nonterminal(s.nonterminal()));
                    }
                    out.push(Symbol::Terminal(")"));
                }
                out
            }
        }
    }

    /// Dense index in `0..COUNT`: start productions, then play modes, then players.
    pub fn index(self) -> usize {
        match self {
            Production::Start(p) => p.index(),
            Production::Constant(Constant::PlayMode(i)) => 9 + i as usize,
            Production::Constant(Constant::Player(i)) => 9 + PLAYMODES.len() + i as usize,
        }
    }

    pub fn from_index(index: usize) -> Option<Production> {
        match index {
            i if i < 9 => Some(Production::Start(Predicate::ALL[i])),
            i if i < 24 => Some(Production::Constant(Constant::PlayMode((i - 9) as u8))),
            i if i < Self::COUNT => Some(Production::Constant(Constant::Player((i - 24) as u8))),
            _ => None,
        }
    }

    pub fn constant(self) -> Option<Constant> {
        match self {
            Production::Constant(c) => Some(c),
            Production::Start(_) => None,
        }
    }
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.lhs())?;
        for s in self.rhs() {
            match s {
                Symbol::Terminal(t) | Symbol::Nonterminal(t) => write!(f, " {}", t)?,
            }
        }
        Ok(())
    }
}

impl FromStr for Production {
    type Err = MrlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted: Vec<&str> = s.split_whitespace().collect();
        all_productions()
            .into_iter()
            .find(|p| p.to_string().split_whitespace().eq(wanted.iter().copied()))
            .ok_or_else(|| malformed(0, format!("unknown production `{}`", s.trim())))
    }
}

/// The full grammar in index order.
pub fn all_productions() -> Vec<Production> {
    (0..Production::COUNT).filter_map(Production::from_index).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn player(t: &str) -> Constant {
        Constant::from_token(t).unwrap()
    }

    #[test]
    fn parses_binary_mr() {
        let mr = parse_mr("pass ( pink1 , pink2 )").unwrap();
        assert_eq!(mr.predicate(), Predicate::Pass);
        assert_eq!(mr.args(), &[player("pink1"), player("pink2")]);
    }

    #[test]
    fn parses_zero_arity_and_free_whitespace() {
        let mr = parse_mr("ballstopped").unwrap();
        assert_eq!(mr.predicate(), Predicate::Ballstopped);
        assert!(mr.args().is_empty());
        let mr = parse_mr("  turnover(purple7,pink5)\n").unwrap();
        assert_eq!(mr.to_string(), "turnover ( purple7 , pink5 )");
    }

    #[test]
    fn rejects_sort_violation() {
        let err = parse_mr("pass ( pink1 , kick_off_l )").unwrap_err();
        let MrlError::Malformed { position, reason } = err;
        assert_eq!(position, 15);
        assert!(reason.contains("*PLAYER"), "{reason}");
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "",
            "pass ( pink1 , pink2",
            "pass ( pink1 )",
            "pass ( pink1 , pink2 , pink3 )",
            "ballstopped ( )",
            "dribble ( pink1 )",
            "kick ( Pink1 )",
            "kick ( pink12 )",
            "kick pink1",
            "kick ( pink1 ) )",
            "kick ( pink1 ; )",
        ] {
            assert!(parse_mr(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn serializes_canonically() {
        let mr = MeaningRepresentation::new(Predicate::Turnover, vec![player("purple7"), player("pink5")]).unwrap();
        assert_eq!(serialize_mr(&mr), "turnover ( purple7 , pink5 )");
        let mr =
            MeaningRepresentation::new(Predicate::Playmode, vec![Constant::from_token("goal_l").unwrap()]).unwrap();
        assert_eq!(mr.to_string(), "playmode ( goal_l )");
    }

    #[test]
    fn derivation_order() {
        let mr = parse_mr("pass ( pink1 , pink2 )").unwrap();
        let d = derivation(&mr);
        let shown: Vec<String> = d.iter().map(|p| p.to_string()).collect();
        assert_eq!(
            shown,
            vec![
                "*S -> pass ( *PLAYER , *PLAYER )",
                "*PLAYER -> pink1",
                "*PLAYER -> pink2"
            ]
        );
        let d = derivation(&parse_mr("ballstopped").unwrap());
        assert_eq!(d, vec![Production::Start(Predicate::Ballstopped)]);
    }

    #[test]
    fn enumeration_count_and_membership() {
        let all = enumerate_mrs();
        // brute force over the productions: 15 play modes, 1 nullary,
        // 3 unary player predicates, 4 binary player predicates
        let oracle = 15 + 1 + 3 * 22 + 4 * 22 * 22;
        assert_eq!(all.len(), oracle);
        assert_eq!(oracle, 2018);
        assert!(all.contains(&parse_mr("steal ( purple10 )").unwrap()));
        assert!(all
            .iter()
            .filter(|m| m.predicate() == Predicate::Pass)
            .all(|m| m.args().iter().all(|a| a.sort() == Sort::Player)));
        let distinct: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), all.len());
    }

    #[test]
    fn every_mr_round_trips_and_derivation_is_injective() {
        let all = enumerate_mrs();
        let mut seen = std::collections::HashSet::new();
        for mr in &all {
            assert_eq!(&parse_mr(&serialize_mr(mr)).unwrap(), mr);
            let d = derivation(mr);
            assert_eq!(d.len(), 1 + mr.predicate().arity());
            assert!(seen.insert(d));
        }
    }

    #[test]
    fn grammar_has_46_productions() {
        let prods = all_productions();
        assert_eq!(prods.len(), 46);
        for (i, p) in prods.iter().enumerate() {
            assert_eq!(p.index(), i);
            assert_eq!(&p.to_string().parse::<Production>().unwrap(), p);
        }
        assert_eq!(prods.iter().filter(|p| p.lhs() == "*S").count(), 9);
        assert_eq!(prods.iter().filter(|p| p.lhs() == "*PLAYMODE").count(), 15);
        assert_eq!(prods.iter().filter(|p| p.lhs() == "*PLAYER").count(), 22);
    }

    #[test]
    fn canonical_order_matches_string_order() {
        let mut by_ord = enumerate_mrs();
        by_ord.sort();
        let mut by_str = enumerate_mrs();
        by_str.sort_by_key(|m| m.to_string());
        assert_eq!(by_ord, by_str);
    }
}
