//! Strategies, strategy sets and the one-shot payoff of the voluntary
//! prisoner's dilemma.
//!
//! Two participants either cooperate (`C`), defect (`D`) or stay out of the
//! game as a loner (`L`). Whenever a loner is involved nobody plays and both
//! receive the fixed payoff `delta`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{HypergameError, Result};

/// A pure action. The derived order `C < D < L` is the canonical index order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    C,
    D,
    L,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::C, Strategy::D, Strategy::L];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_char(self) -> char {
        match self {
            Strategy::C => 'C',
            Strategy::D => 'D',
            Strategy::L => 'L',
        }
    }

    pub fn from_char(ch: char) -> Option<Strategy> {
        match ch.to_ascii_uppercase() {
            'C' => Some(Strategy::C),
            'D' => Some(Strategy::D),
            'L' => Some(Strategy::L),
            _ => None,
        }
    }

    fn bit(self) -> u8 {
        1 << self.index()
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Payoff parameters `(b, c, delta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    b: f64,
    c: f64,
    delta: f64,
}

impl GameParams {
    /// Strict constructor: requires `c > 0`, `b > c` and `0 < delta < b - c`.
    pub fn new(b: f64, c: f64, delta: f64) -> Result<Self> {
        let params = Self::exploratory(b, c, delta)?;
        if c <= 0.0 {
            return Err(HypergameError::InvalidParams(format!(
                "c = {c} must be > 0"
            )));
        }
        if b <= c {
            return Err(HypergameError::InvalidParams(format!(
                "b = {b} must exceed c = {c}"
            )));
        }
        if delta <= 0.0 || delta >= b - c {
            return Err(HypergameError::InvalidParams(format!(
                "delta = {delta} must lie in (0, b - c) = (0, {})",
                b - c
            )));
        }
        Ok(params)
    }

    /// Override for exploratory sweeps outside the cyclic-dominance regime.
    /// Only finiteness is enforced.
    pub fn exploratory(b: f64, c: f64, delta: f64) -> Result<Self> {
        for (name, value) in [("b", b), ("c", c), ("delta", delta)] {
            if !value.is_finite() {
                return Err(HypergameError::InvalidParams(format!(
                    "{name} = {value} is not finite"
                )));
            }
        }
        Ok(Self { b, c, delta })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Gain of mutual cooperation over opting out, `b - c - delta`.
    pub fn cooperation_surplus(&self) -> f64 {
        self.b - self.c - self.delta
    }
}

impl Default for GameParams {
    fn default() -> Self {
        Self {
            b: 3.0,
            c: 1.0,
            delta: 0.25,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffPair {
    pub p1: f64,
    pub p2: f64,
}

/// One-shot payoffs for the row player playing `s1` against `s2`.
pub fn base_payoff(s1: Strategy, s2: Strategy, p: &GameParams) -> PayoffPair {
    use Strategy::*;
    let (p1, p2) = match (s1, s2) {
        (C, C) => (p.b - p.c, p.b - p.c),
        (C, D) => (-p.c, p.b),
        (D, C) => (p.b, -p.c),
        (D, D) => (0.0, 0.0),
        _ => (p.delta, p.delta),
    };
    PayoffPair { p1, p2 }
}

/// A nonempty subset of `{C, D, L}`.
///
/// Stored as a bit mask; iteration always yields members in `C < D < L`
/// order. Sets are ordered by size first, then lexicographically, which gives
/// `C < D < L < CD < CL < DL < CDL`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct StrategySet(u8);

impl StrategySet {
    pub fn new(members: &[Strategy]) -> Result<Self> {
        let mut mask = 0u8;
        for s in members {
            if mask & s.bit() != 0 {
                return Err(HypergameError::InvalidStrategySet(
                    members.iter().map(|s| s.as_char()).collect(),
                ));
            }
            mask |= s.bit();
        }
        if mask == 0 {
            return Err(HypergameError::InvalidStrategySet(String::new()));
        }
        Ok(Self(mask))
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    /// Always false; present for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, s: Strategy) -> bool {
        self.0 & s.bit() != 0
    }

    pub fn members(&self) -> impl Iterator<Item = Strategy> + '_ {
        Strategy::ALL.into_iter().filter(|s| self.contains(*s))
    }

    pub fn to_vec(&self) -> Vec<Strategy> {
        self.members().collect()
    }

    /// Position of this set in the seven-set canonical list.
    pub fn canonical_index(&self) -> usize {
        ALL_SETS
            .iter()
            .position(|s| s == self)
            .expect("every nonempty mask is in ALL_SETS")
    }

    pub fn label(&self) -> String {
        self.members().map(Strategy::as_char).collect()
    }
}

const fn mask(bits: u8) -> StrategySet {
    StrategySet(bits)
}

// C = 1, D = 2, L = 4
const ALL_SETS: [StrategySet; 7] = [
    mask(1),
    mask(2),
    mask(4),
    mask(1 | 2),
    mask(1 | 4),
    mask(2 | 4),
    mask(1 | 2 | 4),
];

impl Ord for StrategySet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.to_vec().cmp(&other.to_vec()))
    }
}

impl PartialOrd for StrategySet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for StrategySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl fmt::Debug for StrategySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.label())
    }
}

impl FromStr for StrategySet {
    type Err = HypergameError;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('{').trim_end_matches('}');
        let members = trimmed
            .chars()
            .filter(|ch| *ch != ',' && !ch.is_whitespace())
            .map(|ch| Strategy::from_char(ch).ok_or_else(|| invalid(s)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(&members).map_err(|_| invalid(s))
    }
}

fn invalid(s: &str) -> HypergameError {
    HypergameError::InvalidStrategySet(s.to_string())
}

impl Serialize for StrategySet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for StrategySet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which family of strategy sets takes part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetMode {
    /// The three two-element sets.
    Pairs,
    /// All seven nonempty subsets.
    All,
}

impl FromStr for SetMode {
    type Err = HypergameError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pairs" => Ok(SetMode::Pairs),
            "all" => Ok(SetMode::All),
            other => Err(HypergameError::InvalidConfig(format!(
                "mode {other:?} must be `pairs` or `all`"
            ))),
        }
    }
}

impl fmt::Display for SetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetMode::Pairs => "pairs",
            SetMode::All => "all",
        })
    }
}

pub fn enumerate_strategy_sets(mode: SetMode) -> Vec<StrategySet> {
    match mode {
        SetMode::Pairs => ALL_SETS[3..6].to_vec(),
        SetMode::All => ALL_SETS.to_vec(),
    }
}
