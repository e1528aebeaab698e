//! Round-robin evaluation of strategy sets: every ordered pair is scored by
//! its stationary introspection payoff, and each set's combined score is its
//! row sum (self-play included, each opponent once).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{HypergameError, Result};
use crate::game::{GameParams, StrategySet};
use crate::introspection::{expected_payoffs, IntrospectionConfig};
use crate::output::NumberFormat;

/// Differences below this declare a tie.
pub const TIE_TOL: f64 = 1e-9;

/// `entries[i][j]` is the expected payoff of `sets[i]` playing against `sets[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffTable {
    sets: Vec<StrategySet>,
    params: GameParams,
    w: f64,
    entries: Vec<Vec<f64>>,
}

impl PayoffTable {
    /// Wraps a precomputed matrix. Used for tests and for tables loaded from
    /// disk; no consistency with `params`/`w` is checked.
    pub fn from_entries(
        sets: Vec<StrategySet>,
        params: GameParams,
        w: f64,
        entries: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let k = sets.len();
        if k == 0 || entries.len() != k || entries.iter().any(|row| row.len() != k) {
            return Err(HypergameError::InvalidConfig(format!(
                "payoff table must be {k}x{k}"
            )));
        }
        Ok(Self {
            sets,
            params,
            w,
            entries,
        })
    }

    pub fn sets(&self) -> &[StrategySet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn params(&self) -> &GameParams {
        &self.params
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row][col]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn index_of(&self, set: StrategySet) -> Option<usize> {
        self.sets.iter().position(|s| *s == set)
    }

    /// Payoff of `row` against `col` looked up by set.
    pub fn payoff(&self, row: StrategySet, col: StrategySet) -> Option<f64> {
        Some(self.entries[self.index_of(row)?][self.index_of(col)?])
    }

    pub fn min_entry(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// One row per ordered pair: `w,b,c,delta,set_row,set_col,payoff`.
    pub fn write_csv<W: Write>(&self, out: &mut W, fmt: NumberFormat, header: bool) -> Result<()> {
        if header {
            writeln!(out, "w,b,c,delta,set_row,set_col,payoff")?;
        }
        let p = &self.params;
        for (i, row) in self.sets.iter().enumerate() {
            for (j, col) in self.sets.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    self.w,
                    p.b(),
                    p.c(),
                    p.delta(),
                    row,
                    col,
                    fmt.fmt(self.entries[i][j])
                )?;
            }
        }
        Ok(())
    }
}

/// Computes every ordered pair once per unordered pair; the diagonal takes
/// the row player's self-play payoff.
pub fn build_payoff_table(
    sets: &[StrategySet],
    p: &GameParams,
    cfg: &IntrospectionConfig,
) -> Result<PayoffTable> {
    if sets.is_empty() {
        return Err(HypergameError::InvalidConfig(
            "no strategy sets given".into(),
        ));
    }
    for (i, a) in sets.iter().enumerate() {
        if sets[..i].contains(a) {
            return Err(HypergameError::InvalidConfig(format!(
                "strategy set {a} listed twice"
            )));
        }
    }

    let k = sets.len();
    let mut entries = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let pair = expected_payoffs(sets[i], sets[j], p, cfg).map_err(|e| {
                HypergameError::PairSolve {
                    row: sets[i],
                    col: sets[j],
                    source: Box::new(e),
                }
            })?;
            entries[i][j] = pair.pi_12;
            if i != j {
                entries[j][i] = pair.pi_21;
            }
        }
    }
    PayoffTable::from_entries(sets.to_vec(), *p, cfg.w(), entries)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    Set(StrategySet),
    Tie,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub first: StrategySet,
    pub second: StrategySet,
    /// Payoff of `first` against `second`.
    pub first_payoff: f64,
    /// Payoff of `second` against `first`.
    pub second_payoff: f64,
    pub winner: Winner,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub set: StrategySet,
    pub score: f64,
    /// 1-based position after sorting by score.
    pub rank: usize,
    /// Score equal (within [`TIE_TOL`]) to the previous entry; order then
    /// follows the canonical set order.
    pub tied_with_previous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TournamentReport {
    pub sets: Vec<StrategySet>,
    pub pairwise_winners: Vec<PairOutcome>,
    pub combined_scores: Vec<f64>,
    pub ranking: Vec<RankEntry>,
}

impl TournamentReport {
    pub fn top(&self) -> &RankEntry {
        &self.ranking[0]
    }

    pub fn score_of(&self, set: StrategySet) -> Option<f64> {
        let i = self.sets.iter().position(|s| *s == set)?;
        Some(self.combined_scores[i])
    }

    /// `set,combined_score,rank`, in canonical set order.
    pub fn write_csv<W: Write>(&self, out: &mut W, fmt: NumberFormat) -> Result<()> {
        writeln!(out, "set,combined_score,rank")?;
        for (set, score) in self.sets.iter().zip(&self.combined_scores) {
            let rank = self
                .ranking
                .iter()
                .find(|r| r.set == *set)
                .map(|r| r.rank)
                .expect("every set is ranked");
            writeln!(out, "{},{},{}", set, fmt.fmt(*score), rank)?;
        }
        Ok(())
    }
}

pub fn tournament_report(table: &PayoffTable) -> TournamentReport {
    let k = table.len();
    let sets = table.sets().to_vec();

    let mut pairwise_winners = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            let (a, b) = (table.get(i, j), table.get(j, i));
            let winner = if (a - b).abs() < TIE_TOL {
                Winner::Tie
            } else if a > b {
                Winner::Set(sets[i])
            } else {
                Winner::Set(sets[j])
            };
            pairwise_winners.push(PairOutcome {
                first: sets[i],
                second: sets[j],
                first_payoff: a,
                second_payoff: b,
                winner,
            });
        }
    }

    let combined_scores: Vec<f64> = table.rows().iter().map(|row| row.iter().sum()).collect();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| {
        let (sx, sy) = (combined_scores[x], combined_scores[y]);
        if (sx - sy).abs() < TIE_TOL {
            sets[x].cmp(&sets[y])
        } else {
            sy.total_cmp(&sx)
        }
    });
    let ranking = order
        .iter()
        .enumerate()
        .map(|(pos, &i)| RankEntry {
            set: sets[i],
            score: combined_scores[i],
            rank: pos + 1,
            tied_with_previous: pos > 0
                && (combined_scores[order[pos - 1]] - combined_scores[i]).abs() < TIE_TOL,
        })
        .collect();

    TournamentReport {
        sets,
        pairwise_winners,
        combined_scores,
        ranking,
    }
}
