//! Introspection dynamics between two players with (possibly different)
//! strategy sets.
//!
//! At every step one of the two players is picked with probability 1/2,
//! draws one of its *other* strategies uniformly and switches to it with the
//! Fermi probability of the payoff gain, the opponent's strategy held fixed.
//! The resulting chain over joint states `(i, j)` (flat index `i * n + j`) has
//! a unique stationary distribution for finite `w`, and the expected payoffs
//! under it are the long-run time averages of the repeated interaction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HypergameError, Result};
use crate::game::{base_payoff, GameParams, StrategySet};

const ROW_SUM_TOL: f64 = 1e-12;
/// Largest residual `max |vM - v|` accepted for a stationary vector.
pub const STATIONARY_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-13;
const POWER_MAX_ITERS: usize = 1_000_000;

/// Logistic switching probability `1 / (1 + exp(-w * delta_pi))`.
///
/// Evaluated branch-wise so that large `|w * delta_pi|` saturates to 0 or 1
/// instead of overflowing.
pub fn fermi(delta_pi: f64, w: f64) -> f64 {
    let z = w * delta_pi;
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntrospectionConfig {
    w: f64,
}

impl IntrospectionConfig {
    pub fn new(w: f64) -> Result<Self> {
        if !w.is_finite() || w < 0.0 {
            return Err(HypergameError::InvalidIntrospection(w));
        }
        Ok(Self { w })
    }

    pub fn w(&self) -> f64 {
        self.w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct JointState {
    pub i: usize,
    pub j: usize,
}

impl JointState {
    pub fn flat(&self, n: usize) -> usize {
        self.i * n + self.j
    }
}

/// Dense row-major `mn x mn` transition matrix of the introspection chain.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    m: usize,
    n: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.m * self.n
    }

    /// Sizes of the two strategy sets.
    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.dim() + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        let d = self.dim();
        &self.entries[from * d..(from + 1) * d]
    }

    pub fn joint_state(&self, flat: usize) -> JointState {
        JointState {
            i: flat / self.n,
            j: flat % self.n,
        }
    }

    /// `v M` for a row vector `v`.
    pub fn left_multiply(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for (from, &weight) in v.iter().enumerate() {
            for (acc, &p) in out.iter_mut().zip(self.row(from)) {
                *acc += weight * p;
            }
        }
        out
    }

    /// `max_k |(vM)_k - v_k|`.
    pub fn residual(&self, v: &[f64]) -> f64 {
        self.left_multiply(v)
            .iter()
            .zip(v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_row_stochastic(&self) -> bool {
        (0..self.dim()).all(|r| {
            let row = self.row(r);
            row.iter().all(|&p| (0.0..=1.0).contains(&p))
                && (row.iter().sum::<f64>() - 1.0).abs() <= ROW_SUM_TOL
        })
    }
}

/// Builds the introspection chain for `s1` (player 1, rows) against `s2`.
///
/// A player whose set is a singleton has nothing to switch to; its update
/// attempt is a no-op and the corresponding probability mass of 1/2 stays on
/// the diagonal.
pub fn build_transition_matrix(
    s1: StrategySet,
    s2: StrategySet,
    p: &GameParams,
    cfg: &IntrospectionConfig,
) -> TransitionMatrix {
    let a = s1.to_vec();
    let b = s2.to_vec();
    let (m, n) = (a.len(), b.len());
    let d = m * n;
    let w = cfg.w();
    let mut entries = vec![0.0; d * d];

    for i in 0..m {
        for j in 0..n {
            let from = i * n + j;
            let row = &mut entries[from * d..(from + 1) * d];
            let current = base_payoff(a[i], b[j], p);

            if m > 1 {
                let scale = 1.0 / (2.0 * (m - 1) as f64);
                for k in (0..m).filter(|&k| k != i) {
                    let gain = base_payoff(a[k], b[j], p).p1 - current.p1;
                    row[k * n + j] = scale * fermi(gain, w);
                }
            }
            if n > 1 {
                let scale = 1.0 / (2.0 * (n - 1) as f64);
                for l in (0..n).filter(|&l| l != j) {
                    let gain = base_payoff(a[i], b[l], p).p2 - current.p2;
                    row[i * n + l] = scale * fermi(gain, w);
                }
            }
            let moved: f64 = row.iter().sum();
            row[from] = 1.0 - moved;
        }
    }

    TransitionMatrix { m, n, entries }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    probabilities: Vec<f64>,
}

impl StationaryDistribution {
    pub fn from_probabilities(probabilities: Vec<f64>) -> Self {
        Self { probabilities }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

/// Unique left fixed vector of `m`, normalised to sum one.
///
/// Solves `(M^T - I) v = 0` with the last equation replaced by `sum v = 1`.
/// If the direct solve misses the residual tolerance the result of power
/// iteration is used instead; failure of both is reported as an error.
pub fn stationary_distribution(m: &TransitionMatrix) -> Result<StationaryDistribution> {
    let d = m.dim();
    if d == 1 {
        return Ok(StationaryDistribution::from_probabilities(vec![1.0]));
    }

    if let Some(v) = direct_solve(m) {
        let residual = m.residual(&v);
        if residual < STATIONARY_TOL {
            return Ok(StationaryDistribution::from_probabilities(v));
        }
    }

    let v = power_iteration(m);
    let residual = m.residual(&v);
    if v.iter().all(|x| x.is_finite()) && residual < STATIONARY_TOL {
        Ok(StationaryDistribution::from_probabilities(v))
    } else {
        Err(HypergameError::StationarySolve {
            residual,
            tolerance: STATIONARY_TOL,
        })
    }
}

fn direct_solve(m: &TransitionMatrix) -> Option<Vec<f64>> {
    let d = m.dim();
    // Augmented system [A | rhs], A = M^T - I with the last row set to ones.
    let mut a = vec![0.0; d * (d + 1)];
    let at = |r: usize, c: usize| r * (d + 1) + c;
    for r in 0..d {
        for c in 0..d {
            a[at(r, c)] = m.get(c, r) - if r == c { 1.0 } else { 0.0 };
        }
    }
    for c in 0..d {
        a[at(d - 1, c)] = 1.0;
    }
    a[at(d - 1, d)] = 1.0;

    for col in 0..d {
        let pivot =
            (col..d).max_by(|&x, &y| a[at(x, col)].abs().total_cmp(&a[at(y, col)].abs()))?;
        if !(a[at(pivot, col)].abs() > 0.0) {
            return None;
        }
        if pivot != col {
            for c in 0..=d {
                a.swap(at(pivot, c), at(col, c));
            }
        }
        for r in (col + 1)..d {
            let factor = a[at(r, col)] / a[at(col, col)];
            if factor != 0.0 {
                for c in col..=d {
                    a[at(r, c)] -= factor * a[at(col, c)];
                }
            }
        }
    }

    let mut v = vec![0.0; d];
    for r in (0..d).rev() {
        let tail: f64 = ((r + 1)..d).map(|c| a[at(r, c)] * v[c]).sum();
        v[r] = (a[at(r, d)] - tail) / a[at(r, r)];
    }
    normalise(v)
}

fn power_iteration(m: &TransitionMatrix) -> Vec<f64> {
    let d = m.dim();
    let mut v = vec![1.0 / d as f64; d];
    for _ in 0..POWER_MAX_ITERS {
        let next = m.left_multiply(&v);
        let change = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if change < POWER_TOL {
            break;
        }
    }
    normalise(v).unwrap_or_else(|| vec![f64::NAN; d])
}

// Round-off can leave entries of order -1e-17; clamp and renormalise.
fn normalise(mut v: Vec<f64>) -> Option<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite() || *x < -1e-9) {
        return None;
    }
    v.iter_mut().for_each(|x| *x = x.max(0.0));
    let total: f64 = v.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= total);
    Some(v)
}

/// Long-run payoffs of the two players: `pi_12` for the holder of `s1`
/// against `s2`, and `pi_21` for the holder of `s2` against `s1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedPayoffPair {
    pub pi_12: f64,
    pub pi_21: f64,
}

/// Weights the one-shot payoffs of every joint state by `v`.
pub fn payoffs_under(
    s1: StrategySet,
    s2: StrategySet,
    p: &GameParams,
    v: &StationaryDistribution,
) -> ExpectedPayoffPair {
    let a = s1.to_vec();
    let b = s2.to_vec();
    let n = b.len();
    let mut pi_12 = 0.0;
    let mut pi_21 = 0.0;
    for (flat, &weight) in v.probabilities().iter().enumerate() {
        let pay = base_payoff(a[flat / n], b[flat % n], p);
        pi_12 += weight * pay.p1;
        pi_21 += weight * pay.p2;
    }
    ExpectedPayoffPair { pi_12, pi_21 }
}

pub fn expected_payoffs(
    s1: StrategySet,
    s2: StrategySet,
    p: &GameParams,
    cfg: &IntrospectionConfig,
) -> Result<ExpectedPayoffPair> {
    let m = build_transition_matrix(s1, s2, p, cfg);
    let v = stationary_distribution(&m)?;
    Ok(payoffs_under(s1, s2, p, &v))
}

/// Runs the introspection process literally and returns time-averaged
/// payoffs over `steps` steps.
///
/// The initial joint state is uniform; each step first applies one update
/// attempt and then records the payoffs of the resulting state. The stream
/// is `ChaCha8Rng::seed_from_u64(seed)`.
pub fn simulate_introspection(
    s1: StrategySet,
    s2: StrategySet,
    p: &GameParams,
    cfg: &IntrospectionConfig,
    steps: u64,
    seed: u64,
) -> ExpectedPayoffPair {
    let a = s1.to_vec();
    let b = s2.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = cfg.w();

    let mut i = rng.gen_range(0..a.len());
    let mut j = rng.gen_range(0..b.len());
    let mut sum_1 = 0.0;
    let mut sum_2 = 0.0;

    for _ in 0..steps.max(1) {
        if rng.gen_bool(0.5) {
            if let Some(k) = alternative(&mut rng, i, a.len()) {
                let gain = base_payoff(a[k], b[j], p).p1 - base_payoff(a[i], b[j], p).p1;
                if rng.gen::<f64>() < fermi(gain, w) {
                    i = k;
                }
            }
        } else if let Some(l) = alternative(&mut rng, j, b.len()) {
            let gain = base_payoff(a[i], b[l], p).p2 - base_payoff(a[i], b[j], p).p2;
            if rng.gen::<f64>() < fermi(gain, w) {
                j = l;
            }
        }
        let pay = base_payoff(a[i], b[j], p);
        sum_1 += pay.p1;
        sum_2 += pay.p2;
    }

    let t = steps.max(1) as f64;
    ExpectedPayoffPair {
        pi_12: sum_1 / t,
        pi_21: sum_2 / t,
    }
}

/// Uniform draw among the `len - 1` indices other than `current`.
fn alternative<R: Rng>(rng: &mut R, current: usize, len: usize) -> Option<usize> {
    if len < 2 {
        return None;
    }
    let k = rng.gen_range(0..len - 1);
    Some(if k >= current { k + 1 } else { k })
}
