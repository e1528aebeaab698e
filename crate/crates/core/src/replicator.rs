//! Well-mixed evolution of strategy-set frequencies.
//!
//! Fitness is linear in the population state, `P = A x`, with `A` the payoff
//! table of stationary introspection payoffs. Two update rules are provided:
//! the continuous replicator equation `x_S' = x_S (P_S - P_bar)` integrated
//! with fixed-step RK4, and the discrete multiplicative map
//! `x_S <- x_S (P_S + sigma) / (P_bar + sigma)`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HypergameError, Result};
use crate::game::StrategySet;
use crate::output::NumberFormat;
use crate::tournament::PayoffTable;

const SIMPLEX_TOL: f64 = 1e-9;
/// Frequencies below this are set to zero by the discrete map.
pub const EXTINCTION_FLOOR: f64 = 1e-12;
/// A set counts as fixated once its share exceeds this level ...
pub const FIXATION_LEVEL: f64 = 0.99;
/// ... for this many consecutive recorded samples.
pub const FIXATION_SAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    x: Vec<f64>,
}

impl PopulationState {
    /// Accepts any nonnegative vector summing to one within `1e-9` and
    /// renormalises it exactly.
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(HypergameError::InvalidPopulation("empty state".into()));
        }
        if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(HypergameError::InvalidPopulation(format!(
                "frequencies must be finite and nonnegative, got {x:?}"
            )));
        }
        let total: f64 = x.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(HypergameError::InvalidPopulation(format!(
                "frequencies sum to {total}, not 1"
            )));
        }
        Ok(Self::renormalised(x))
    }

    pub fn barycenter(k: usize) -> Self {
        Self {
            x: vec![1.0 / k as f64; k],
        }
    }

    pub fn vertex(k: usize, i: usize) -> Self {
        let mut x = vec![0.0; k];
        x[i] = 1.0;
        Self { x }
    }

    fn renormalised(mut x: Vec<f64>) -> Self {
        x.iter_mut().for_each(|v| *v = v.max(0.0));
        let total: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= total);
        Self { x }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Index and share of the most frequent set (first index on ties).
    pub fn dominant(&self) -> (usize, f64) {
        self.x
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fitness {
    /// `P[i] = sum_j x[j] A[i][j]`
    pub payoffs: Vec<f64>,
    /// `P_bar = sum_i x[i] P[i]`
    pub mean: f64,
}

pub fn fitness(x: &PopulationState, table: &PayoffTable) -> Fitness {
    fitness_of(x.as_slice(), table)
}

fn fitness_of(x: &[f64], table: &PayoffTable) -> Fitness {
    assert_eq!(
        x.len(),
        table.len(),
        "state and payoff table differ in size"
    );
    let payoffs: Vec<f64> = table
        .rows()
        .iter()
        .map(|row| row.iter().zip(x).map(|(a, xj)| a * xj).sum())
        .collect();
    let mean = payoffs.iter().zip(x).map(|(p, xi)| p * xi).sum();
    Fitness { payoffs, mean }
}

fn velocity(x: &[f64], table: &PayoffTable) -> Vec<f64> {
    let f = fitness_of(x, table);
    x.iter()
        .zip(&f.payoffs)
        .map(|(xi, pi)| xi * (pi - f.mean))
        .collect()
}

fn axpy(x: &[f64], k: &[f64], h: f64) -> Vec<f64> {
    x.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// One classical RK4 step followed by projection back onto the simplex.
pub fn replicator_step(x: &PopulationState, table: &PayoffTable, dt: f64) -> PopulationState {
    let x0 = x.as_slice();
    let k1 = velocity(x0, table);
    let k2 = velocity(&axpy(x0, &k1, dt / 2.0), table);
    let k3 = velocity(&axpy(x0, &k2, dt / 2.0), table);
    let k4 = velocity(&axpy(x0, &k3, dt), table);
    let next = (0..x0.len())
        .map(|i| x0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    PopulationState::renormalised(next)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub dt: f64,
    pub t_max: f64,
    /// Stop once `max_i |x_i'|` drops below this.
    pub convergence_eps: f64,
    /// Record every this many steps (the initial and final states are always
    /// recorded).
    pub sample_stride: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_max: 1e4,
            convergence_eps: 1e-12,
            sample_stride: 10,
        }
    }
}

impl IntegrationOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(HypergameError::InvalidConfig(format!(
                "dt = {} must be > 0",
                self.dt
            )));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(HypergameError::InvalidConfig(format!(
                "t_max = {} must be > 0",
                self.t_max
            )));
        }
        if !(self.convergence_eps >= 0.0) {
            return Err(HypergameError::InvalidConfig(format!(
                "convergence_eps = {} must be >= 0",
                self.convergence_eps
            )));
        }
        if self.sample_stride == 0 {
            return Err(HypergameError::InvalidConfig(
                "sample_stride must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<PopulationState>,
    pub mean_payoffs: Vec<f64>,
    /// The stopping criterion was met before the time limit.
    pub converged: bool,
}

impl TrajectoryRecord {
    fn push(&mut self, t: f64, x: &PopulationState, table: &PayoffTable) {
        self.times.push(t);
        self.mean_payoffs.push(fitness(x, table).mean);
        self.states.push(x.clone());
    }

    pub fn final_state(&self) -> &PopulationState {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    /// Index of the set that has fixated, if any: its share exceeds
    /// [`FIXATION_LEVEL`] for the last [`FIXATION_SAMPLES`] samples, or the
    /// run converged to a state where it does.
    pub fn fixated(&self) -> Option<usize> {
        let (winner, share) = self.final_state().dominant();
        if share <= FIXATION_LEVEL {
            return None;
        }
        if self.converged {
            return Some(winner);
        }
        let sustained = self
            .states
            .iter()
            .rev()
            .take_while(|s| s.as_slice()[winner] > FIXATION_LEVEL)
            .count();
        (sustained >= FIXATION_SAMPLES).then_some(winner)
    }

    /// `t,x_<set1>,...,x_<setk>,P_bar`
    pub fn write_csv<W: Write>(
        &self,
        out: &mut W,
        sets: &[StrategySet],
        fmt: NumberFormat,
    ) -> Result<()> {
        write!(out, "t")?;
        for s in sets {
            write!(out, ",x_{s}")?;
        }
        writeln!(out, ",P_bar")?;
        for ((t, x), pbar) in self.times.iter().zip(&self.states).zip(&self.mean_payoffs) {
            write!(out, "{}", fmt.fmt(*t))?;
            for v in x.as_slice() {
                write!(out, ",{}", fmt.fmt(*v))?;
            }
            writeln!(out, ",{}", fmt.fmt(*pbar))?;
        }
        Ok(())
    }
}

/// Integrates the replicator equation from `x0` until `t_max` or until the
/// vector field falls below `convergence_eps`.
pub fn integrate_replicator(
    x0: &PopulationState,
    table: &PayoffTable,
    opts: &IntegrationOptions,
) -> Result<TrajectoryRecord> {
    opts.validate()?;
    check_dims(x0, table)?;
    let mut record = TrajectoryRecord {
        times: Vec::new(),
        states: Vec::new(),
        mean_payoffs: Vec::new(),
        converged: false,
    };
    let mut x = x0.clone();
    record.push(0.0, &x, table);

    let total_steps = (opts.t_max / opts.dt).round() as u64;
    let mut step = 0u64;
    while step < total_steps {
        let speed = velocity(x.as_slice(), table)
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        if speed < opts.convergence_eps {
            record.converged = true;
            break;
        }
        x = replicator_step(&x, table, opts.dt);
        step += 1;
        if step.is_multiple_of(opts.sample_stride as u64) {
            record.push(step as f64 * opts.dt, &x, table);
        }
    }
    if *record.times.last().unwrap() != step as f64 * opts.dt {
        record.push(step as f64 * opts.dt, &x, table);
    }
    Ok(record)
}

/// Uniform shift making every table entry, and hence every fitness, at least 1.
pub fn default_offset(table: &PayoffTable) -> f64 {
    (-table.min_entry()).max(0.0) + 1.0
}

pub fn discrete_map_step(
    x: &PopulationState,
    table: &PayoffTable,
    sigma: f64,
) -> Result<PopulationState> {
    check_dims(x, table)?;
    let f = fitness(x, table);
    for (index, p) in f.payoffs.iter().enumerate() {
        if x.as_slice()[index] > 0.0 && !(p + sigma > 0.0) {
            return Err(HypergameError::NonPositiveFitness {
                index,
                value: p + sigma,
            });
        }
    }
    let denom = f.mean + sigma;
    let next = x
        .as_slice()
        .iter()
        .zip(&f.payoffs)
        .map(|(xi, pi)| {
            let v = xi * (pi + sigma) / denom;
            if v < EXTINCTION_FLOOR {
                0.0
            } else {
                v
            }
        })
        .collect();
    Ok(PopulationState::renormalised(next))
}

/// Applies the discrete map `iterations` times, recording every
/// `sample_stride` generations (plus the first and last).
pub fn iterate_discrete_map(
    x0: &PopulationState,
    table: &PayoffTable,
    sigma: f64,
    iterations: u64,
    sample_stride: u64,
) -> Result<TrajectoryRecord> {
    let stride = sample_stride.max(1);
    let mut record = TrajectoryRecord {
        times: Vec::new(),
        states: Vec::new(),
        mean_payoffs: Vec::new(),
        converged: false,
    };
    let mut x = x0.clone();
    record.push(0.0, &x, table);
    for gen in 1..=iterations {
        let next = discrete_map_step(&x, table, sigma)?;
        let unchanged = next == x;
        x = next;
        if gen % stride == 0 || gen == iterations || unchanged {
            record.push(gen as f64, &x, table);
        }
        if unchanged {
            record.converged = true;
            break;
        }
    }
    Ok(record)
}

fn check_dims(x: &PopulationState, table: &PayoffTable) -> Result<()> {
    if x.len() != table.len() {
        return Err(HypergameError::InvalidPopulation(format!(
            "state has {} entries but the payoff table has {} sets",
            x.len(),
            table.len()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinPoint {
    /// Share of the first set.
    pub u: f64,
    /// Share of the second set; the third holds `1 - u - v`.
    pub v: f64,
    /// Set the trajectory from this point fixates on, if any.
    pub winner: Option<StrategySet>,
    /// Mean payoff at the grid point itself.
    pub mean_payoff: f64,
    pub interior: bool,
}

/// Integrates from every point of the barycentric grid with `resolution`
/// subdivisions per edge, i.e. all `(i, j, k) / resolution` with
/// `i + j + k = resolution`.
pub fn basin_scan(
    table: &PayoffTable,
    resolution: usize,
    opts: &IntegrationOptions,
) -> Result<Vec<BasinPoint>> {
    if table.len() != 3 {
        return Err(HypergameError::InvalidConfig(format!(
            "basin scan needs exactly 3 strategy sets, got {}",
            table.len()
        )));
    }
    if resolution == 0 {
        return Err(HypergameError::InvalidConfig(
            "basin resolution must be >= 1".into(),
        ));
    }
    opts.validate()?;

    let n = resolution;
    let grid: Vec<(usize, usize)> = (0..=n)
        .flat_map(|i| (0..=n - i).map(move |j| (i, j)))
        .collect();

    grid.par_iter()
        .map(|&(i, j)| {
            let k = n - i - j;
            let x = vec![
                i as f64 / n as f64,
                j as f64 / n as f64,
                k as f64 / n as f64,
            ];
            let x0 = PopulationState::renormalised(x);
            let record = integrate_replicator(&x0, table, opts)?;
            Ok(BasinPoint {
                u: x0.as_slice()[0],
                v: x0.as_slice()[1],
                winner: record.fixated().map(|w| table.sets()[w]),
                mean_payoff: fitness(&x0, table).mean,
                interior: i > 0 && j > 0 && k > 0,
            })
        })
        .collect()
}

/// `u,v,winner_set,P_bar`; points without a fixated set print `none`.
pub fn write_basin_csv<W: Write>(
    out: &mut W,
    points: &[BasinPoint],
    fmt: NumberFormat,
) -> Result<()> {
    writeln!(out, "u,v,winner_set,P_bar")?;
    for p in points {
        let winner = p.winner.map_or_else(|| "none".to_string(), |s| s.label());
        writeln!(
            out,
            "{},{},{},{}",
            fmt.fmt(p.u),
            fmt.fmt(p.v),
            winner,
            fmt.fmt(p.mean_payoff)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{enumerate_strategy_sets, GameParams, SetMode};
    use crate::introspection::IntrospectionConfig;
    use crate::tournament::build_payoff_table;

    fn table(mode: SetMode, b: f64, w: f64) -> PayoffTable {
        let p = GameParams::new(b, 1.0, 0.25).unwrap();
        let cfg = IntrospectionConfig::new(w).unwrap();
        build_payoff_table(&enumerate_strategy_sets(mode), &p, &cfg).unwrap()
    }

    fn set(s: &str) -> StrategySet {
        s.parse().unwrap()
    }

    #[test]
    fn state_validation() {
        assert!(PopulationState::new(vec![]).is_err());
        assert!(PopulationState::new(vec![0.5, 0.6]).is_err());
        assert!(PopulationState::new(vec![-0.1, 1.1]).is_err());
        assert!(PopulationState::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn fitness_at_vertex_and_barycenter() {
        let t = table(SetMode::Pairs, 3.0, 10.0);
        for i in 0..3 {
            let f = fitness(&PopulationState::vertex(3, i), &t);
            assert_eq!(f.payoffs[i], t.get(i, i));
            assert_eq!(f.mean, t.get(i, i));
        }
        let x = PopulationState::barycenter(3);
        let f = fitness(&x, &t);
        let cl = t.index_of(set("CL")).unwrap();
        assert!((f.payoffs[cl] - (0.3334 + 2.0 + 0.1250) / 3.0).abs() < 1e-3);
        let centred: f64 = x
            .as_slice()
            .iter()
            .zip(&f.payoffs)
            .map(|(xi, pi)| xi * (pi - f.mean))
            .sum();
        assert!(centred.abs() < 1e-12);
    }

    #[test]
    fn vertices_are_fixed() {
        let t = table(SetMode::Pairs, 3.0, 1.0);
        for i in 0..3 {
            let v = PopulationState::vertex(3, i);
            assert_eq!(replicator_step(&v, &t, 0.01), v);
            assert_eq!(discrete_map_step(&v, &t, default_offset(&t)).unwrap(), v);
            let record = integrate_replicator(&v, &t, &IntegrationOptions::default()).unwrap();
            assert!(record.states.iter().all(|s| *s == v));
            assert_eq!(record.fixated(), Some(i));
        }
    }

    #[test]
    fn dl_grows_first_step_at_weak_introspection() {
        let t = table(SetMode::Pairs, 3.0, 0.1);
        let dl = t.index_of(set("DL")).unwrap();
        let x = PopulationState::barycenter(3);
        let next = replicator_step(&x, &t, 0.01);
        assert!(next.as_slice()[dl] > x.as_slice()[dl]);
        assert!((next.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn replicator_phases() {
        let opts = IntegrationOptions::default();
        let t = table(SetMode::Pairs, 3.0, 10.0);
        let r = integrate_replicator(&PopulationState::barycenter(3), &t, &opts).unwrap();
        assert!(r.final_state().as_slice()[t.index_of(set("CL")).unwrap()] > 0.99);

        let t = table(SetMode::Pairs, 3.0, 0.1);
        let r = integrate_replicator(&PopulationState::barycenter(3), &t, &opts).unwrap();
        assert!(r.final_state().as_slice()[t.index_of(set("DL")).unwrap()] > 0.99);
        assert!(r.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let t = table(SetMode::Pairs, 3.0, 1.0);
        let x0 = PopulationState::new(vec![0.5, 0.2, 0.3]).unwrap();
        let run = |dt: f64| {
            let mut x = x0.clone();
            for _ in 0..(10.0 / dt).round() as usize {
                x = replicator_step(&x, &t, dt);
            }
            x
        };
        let dist = |a: &PopulationState, b: &PopulationState| {
            a.as_slice()
                .iter()
                .zip(b.as_slice())
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max)
        };
        let (a, b, c) = (run(0.2), run(0.1), run(0.05));
        let ratio = dist(&a, &b) / dist(&b, &c);
        assert!(ratio >= 8.0, "observed ratio {ratio}");
    }

    #[test]
    fn discrete_map_rejects_insufficient_offset() {
        let sets = vec![set("C"), set("D")];
        let entries = vec![vec![1.0, -0.5], vec![1.5, 0.25]];
        let t = PayoffTable::from_entries(sets, GameParams::default(), 1.0, entries).unwrap();
        let x = PopulationState::new(vec![0.2, 0.8]).unwrap();
        // {C} earns 0.2 - 0.4 < 0
        assert!(matches!(
            discrete_map_step(&x, &t, 0.0),
            Err(HypergameError::NonPositiveFitness { .. })
        ));
        assert!(discrete_map_step(&x, &t, default_offset(&t)).is_ok());
    }

    #[test]
    fn discrete_map_phases() {
        for (w, expected) in [(0.1, "L"), (10.0, "CL")] {
            let t = table(SetMode::All, 3.0, w);
            let r = iterate_discrete_map(
                &PopulationState::barycenter(7),
                &t,
                default_offset(&t),
                10_000,
                100,
            )
            .unwrap();
            let (winner, _) = r.final_state().dominant();
            assert_eq!(t.sets()[winner], set(expected), "w = {w}");
        }
    }

    #[test]
    fn basin_scan_small_grid() {
        let t = table(SetMode::Pairs, 3.0, 10.0);
        let opts = IntegrationOptions {
            t_max: 1e3,
            ..IntegrationOptions::default()
        };
        let points = basin_scan(&t, 3, &opts).unwrap();
        assert_eq!(points.len(), 10);
        for p in &points {
            let third = 1.0 - p.u - p.v;
            for (i, share) in [p.u, p.v, third].iter().enumerate() {
                if (share - 1.0).abs() < 1e-12 {
                    assert_eq!(p.winner, Some(t.sets()[i]));
                }
            }
        }
        let cl = points.iter().find(|p| (p.v - 1.0).abs() < 1e-12).unwrap();
        assert!((cl.mean_payoff - 2.0).abs() < 1e-3);
        assert!(basin_scan(&table(SetMode::All, 3.0, 1.0), 3, &opts).is_err());
    }
}
