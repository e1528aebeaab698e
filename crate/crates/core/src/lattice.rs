//! Imitation of strategy sets on a periodic square lattice.
//!
//! Every site holds one strategy set and plays its four von Neumann
//! neighbours; the payoff on an edge is the stationary introspection payoff
//! from the [`PayoffTable`]. One update attempt picks a focal site `X` and a
//! random neighbour `Y`; `X` copies `Y`'s set with probability
//! `1 / (1 + exp(-(E_Y - E_X) / K))`, where `E` is the mean edge payoff.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HypergameError, Result};
use crate::game::StrategySet;
use crate::introspection::fermi;
use crate::output::NumberFormat;
use crate::tournament::PayoffTable;

/// Identifier of the generator behind every lattice stream. Replicate `r`
/// uses `ChaCha8Rng::seed_from_u64(seed + r)`.
pub const RNG_ALGORITHM: &str = "rand_chacha 0.3 ChaCha8Rng::seed_from_u64(seed + replicate)";

/// Unit in which `steps` and `snapshot_times` are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepUnit {
    /// One step is a single asynchronous update attempt.
    #[default]
    Attempt,
    /// One step is `width * height` attempts.
    Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub width: usize,
    pub height: usize,
    pub sets: Vec<StrategySet>,
    /// Selection temperature `K`.
    pub temperature: f64,
    pub steps: u64,
    pub seed: u64,
    pub snapshot_times: Vec<u64>,
    pub replicates: usize,
    #[serde(default)]
    pub step_unit: StepUnit,
}

impl LatticeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HypergameError::InvalidConfig(msg));
        if self.width < 2 || self.height < 2 {
            return bad(format!(
                "lattice must be at least 2x2, got {}x{}",
                self.width, self.height
            ));
        }
        if self
            .width
            .checked_mul(self.height)
            .is_none_or(|n| n > u32::MAX as usize)
        {
            return bad("lattice is too large".into());
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad(format!("K = {} must be > 0", self.temperature));
        }
        if self.steps == 0 {
            return bad("steps must be >= 1".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be >= 1".into());
        }
        if self.sets.is_empty() || self.sets.len() > 7 {
            return bad(format!("need 1..=7 strategy sets, got {}", self.sets.len()));
        }
        for (i, s) in self.sets.iter().enumerate() {
            if self.sets[..i].contains(s) {
                return bad(format!("strategy set {s} listed twice"));
            }
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        self.width * self.height
    }

    fn attempts_per_step(&self) -> u64 {
        match self.step_unit {
            StepUnit::Attempt => 1,
            StepUnit::Sweep => self.sites() as u64,
        }
    }

    /// Total number of single-site update attempts per replicate.
    pub fn total_attempts(&self) -> u64 {
        self.steps.saturating_mul(self.attempts_per_step())
    }
}

/// Row-major grid of indices into the active set list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeGrid {
    width: usize,
    height: usize,
    cells: Vec<u8>,
    /// Update attempts applied so far.
    pub generation: u64,
}

impl LatticeGrid {
    pub fn from_cells(width: usize, height: usize, cells: Vec<u8>) -> Result<Self> {
        if width < 2 || height < 2 || cells.len() != width * height {
            return Err(HypergameError::InvalidConfig(format!(
                "{} cells do not form a {width}x{height} lattice of at least 2x2",
                cells.len()
            )));
        }
        Ok(Self {
            width,
            height,
            cells,
            generation: 0,
        })
    }

    pub fn uniform(width: usize, height: usize, set_index: u8) -> Result<Self> {
        Self::from_cells(width, height, vec![set_index; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, node: usize) -> u8 {
        self.cells[node]
    }

    pub fn set(&mut self, node: usize, set_index: u8) {
        self.cells[node] = set_index;
    }

    pub fn node(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Up, down, left, right with periodic wraparound.
    pub fn neighbors(&self, node: usize) -> [usize; 4] {
        let (w, h) = (self.width, self.height);
        let (x, y) = (node % w, node / w);
        [
            ((y + h - 1) % h) * w + x,
            ((y + 1) % h) * w + x,
            y * w + (x + w - 1) % w,
            y * w + (x + 1) % w,
        ]
    }

    pub fn counts(&self, k: usize) -> Vec<usize> {
        let mut counts = vec![0; k];
        for &c in &self.cells {
            counts[c as usize] += 1;
        }
        counts
    }

    pub fn fractions(&self, k: usize) -> Vec<f64> {
        let n = self.cells.len() as f64;
        self.counts(k).into_iter().map(|c| c as f64 / n).collect()
    }

    pub fn is_monomorphic(&self) -> bool {
        self.cells.iter().all(|&c| c == self.cells[0])
    }

    /// Plain PGM (P2); every pixel is the canonical seven-set index of the
    /// site's strategy set, so the gray scale is comparable across runs.
    pub fn write_pgm<W: Write>(&self, out: &mut W, sets: &[StrategySet]) -> Result<()> {
        writeln!(out, "P2")?;
        writeln!(out, "{} {}", self.width, self.height)?;
        writeln!(out, "6")?;
        for row in self.cells.chunks(self.width) {
            let line: Vec<String> = row
                .iter()
                .map(|&c| sets[c as usize].canonical_index().to_string())
                .collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Every site drawn uniformly from the active sets with the stream seeded by
/// `cfg.seed`.
pub fn init_lattice(cfg: &LatticeConfig) -> Result<LatticeGrid> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(init_with(cfg, &mut rng))
}

fn init_with<R: Rng>(cfg: &LatticeConfig, rng: &mut R) -> LatticeGrid {
    let k = cfg.sets.len() as u8;
    let cells = (0..cfg.sites()).map(|_| rng.gen_range(0..k)).collect();
    LatticeGrid {
        width: cfg.width,
        height: cfg.height,
        cells,
        generation: 0,
    }
}

/// Flat `k x k` copy of the table for the inner loop.
#[derive(Clone, Debug)]
struct EdgePayoffs {
    k: usize,
    values: Vec<f64>,
}

impl EdgePayoffs {
    fn new(table: &PayoffTable) -> Self {
        Self {
            k: table.len(),
            values: table.rows().iter().flatten().copied().collect(),
        }
    }

    #[inline]
    fn get(&self, row: u8, col: u8) -> f64 {
        self.values[row as usize * self.k + col as usize]
    }
}

/// Mean edge payoff of `node` over its four neighbours.
pub fn cell_payoff(grid: &LatticeGrid, node: usize, table: &PayoffTable) -> f64 {
    payoff_of(grid, node, &EdgePayoffs::new(table))
}

#[inline]
fn payoff_of(grid: &LatticeGrid, node: usize, edges: &EdgePayoffs) -> f64 {
    let own = grid.cells[node];
    let total: f64 = grid
        .neighbors(node)
        .iter()
        .map(|&nb| edges.get(own, grid.cells[nb]))
        .sum();
    total * 0.25
}

/// Probability that the focal site copies the neighbour.
pub fn imitation_probability(focal_payoff: f64, neighbor_payoff: f64, temperature: f64) -> f64 {
    fermi(neighbor_payoff - focal_payoff, 1.0 / temperature)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub focal: usize,
    pub neighbor: usize,
    pub adopted: bool,
}

/// One asynchronous update attempt, in place.
pub fn mc_step<R: Rng>(
    grid: &mut LatticeGrid,
    table: &PayoffTable,
    temperature: f64,
    rng: &mut R,
) -> StepOutcome {
    let inner = step_with(grid, &EdgePayoffs::new(table), temperature, rng);
    StepOutcome {
        focal: inner.focal,
        neighbor: inner.neighbor,
        adopted: inner.change.is_some(),
    }
}

struct Attempt {
    focal: usize,
    neighbor: usize,
    /// `(old, new)` set index of the focal site when it adopted.
    change: Option<(u8, u8)>,
}

#[inline]
fn step_with<R: Rng>(
    grid: &mut LatticeGrid,
    edges: &EdgePayoffs,
    temperature: f64,
    rng: &mut R,
) -> Attempt {
    let focal = rng.gen_range(0..grid.cells.len());
    let neighbor = grid.neighbors(focal)[rng.gen_range(0..4)];
    grid.generation += 1;

    let (own, other) = (grid.cells[focal], grid.cells[neighbor]);
    // copying one's own set changes nothing
    if own == other {
        return Attempt {
            focal,
            neighbor,
            change: None,
        };
    }
    let e_x = payoff_of(grid, focal, edges);
    let e_y = payoff_of(grid, neighbor, edges);
    let adopted = rng.gen::<f64>() < imitation_probability(e_x, e_y, temperature);
    if adopted {
        grid.cells[focal] = other;
    }
    Attempt {
        focal,
        neighbor,
        change: adopted.then_some((own, other)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Requested time, in the configured step unit.
    pub step: u64,
    pub grid: LatticeGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub seed: u64,
    /// Attempts completed at each sample (one sample per sweep, plus the end).
    pub sample_attempts: Vec<u64>,
    pub fractions: Vec<Vec<f64>>,
    pub final_grid: LatticeGrid,
    pub snapshots: Vec<Snapshot>,
}

impl ReplicateResult {
    pub fn final_fractions(&self) -> &[f64] {
        self.fractions
            .last()
            .expect("initial sample is always present")
    }

    /// Index of the most frequent set at the end (lowest index on ties).
    pub fn dominant(&self) -> usize {
        let f = self.final_fractions();
        (0..f.len()).fold(0, |best, i| if f[i] > f[best] { i } else { best })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeResult {
    pub sets: Vec<StrategySet>,
    pub sites: usize,
    pub rng_algorithm: String,
    pub replicates: Vec<ReplicateResult>,
}

impl LatticeResult {
    /// Number of replicates in which `set` ends as the most frequent set.
    pub fn dominance_count(&self, set: StrategySet) -> usize {
        self.replicates
            .iter()
            .filter(|r| self.sets[r.dominant()] == set)
            .count()
    }

    /// Number of replicates in which `set` ends above `share`.
    pub fn share_count(&self, set: StrategySet, share: f64) -> usize {
        let Some(i) = self.sets.iter().position(|s| *s == set) else {
            return 0;
        };
        self.replicates
            .iter()
            .filter(|r| r.final_fractions()[i] > share)
            .count()
    }

    /// Set that is most often the final majority across replicates
    /// (canonical order breaks ties).
    pub fn modal_dominant(&self) -> StrategySet {
        let mut best = self.sets[0];
        let mut best_count = 0;
        let mut ordered = self.sets.clone();
        ordered.sort();
        for s in ordered {
            let c = self.dominance_count(s);
            if c > best_count {
                best = s;
                best_count = c;
            }
        }
        best
    }

    /// `replicate,sweep,x_<set1>,...,x_<setk>`
    pub fn write_fractions_csv<W: Write>(&self, out: &mut W, fmt: NumberFormat) -> Result<()> {
        write!(out, "replicate,sweep")?;
        for s in &self.sets {
            write!(out, ",x_{s}")?;
        }
        writeln!(out)?;
        for r in &self.replicates {
            for (attempts, fractions) in r.sample_attempts.iter().zip(&r.fractions) {
                write!(
                    out,
                    "{},{}",
                    r.replicate,
                    *attempts as f64 / self.sites as f64
                )?;
                for f in fractions {
                    write!(out, ",{}", fmt.fmt(*f))?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// Runs one replicate with seed `cfg.seed + replicate`.
pub fn run_replicate(
    cfg: &LatticeConfig,
    table: &PayoffTable,
    replicate: usize,
) -> Result<ReplicateResult> {
    cfg.validate()?;
    check_table(cfg, table)?;
    let seed = cfg.seed.wrapping_add(replicate as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = init_with(cfg, &mut rng);
    let edges = EdgePayoffs::new(table);
    let k = cfg.sets.len();
    let sites = cfg.sites() as u64;
    let total = cfg.total_attempts();
    let unit = cfg.attempts_per_step();

    let mut snapshot_at: Vec<(u64, u64)> = cfg
        .snapshot_times
        .iter()
        .filter_map(|&t| t.checked_mul(unit).filter(|a| *a <= total).map(|a| (a, t)))
        .collect();
    snapshot_at.sort_unstable();
    snapshot_at.dedup();
    let mut next_snapshot = 0;
    let mut snapshots = Vec::new();

    let mut counts = grid.counts(k);
    let fractions_of = |counts: &[usize]| -> Vec<f64> {
        counts.iter().map(|&c| c as f64 / sites as f64).collect()
    };
    let mut sample_attempts = vec![0];
    let mut fractions = vec![fractions_of(&counts)];

    let mut take_snapshots = |grid: &LatticeGrid, next: &mut usize| {
        while *next < snapshot_at.len() && snapshot_at[*next].0 == grid.generation {
            snapshots.push(Snapshot {
                step: snapshot_at[*next].1,
                grid: grid.clone(),
            });
            *next += 1;
        }
    };
    take_snapshots(&grid, &mut next_snapshot);

    for attempt in 1..=total {
        let outcome = step_with(&mut grid, &edges, cfg.temperature, &mut rng);
        if let Some((old, new)) = outcome.change {
            counts[old as usize] -= 1;
            counts[new as usize] += 1;
        }
        take_snapshots(&grid, &mut next_snapshot);
        if attempt % sites == 0 || attempt == total {
            sample_attempts.push(attempt);
            fractions.push(fractions_of(&counts));
        }
    }

    Ok(ReplicateResult {
        replicate,
        seed,
        sample_attempts,
        fractions,
        final_grid: grid,
        snapshots,
    })
}

/// Runs all replicates in parallel; results are ordered by replicate index.
pub fn run_lattice(cfg: &LatticeConfig, table: &PayoffTable) -> Result<LatticeResult> {
    cfg.validate()?;
    check_table(cfg, table)?;
    let replicates = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, table, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(LatticeResult {
        sets: cfg.sets.clone(),
        sites: cfg.sites(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        replicates,
    })
}

fn check_table(cfg: &LatticeConfig, table: &PayoffTable) -> Result<()> {
    if table.sets() != cfg.sets.as_slice() {
        return Err(HypergameError::InvalidConfig(format!(
            "payoff table sets {:?} differ from lattice sets {:?}",
            table.sets(),
            cfg.sets
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{enumerate_strategy_sets, GameParams, SetMode};
    use crate::introspection::IntrospectionConfig;
    use crate::tournament::build_payoff_table;

    fn table(sets: &[StrategySet], b: f64, w: f64) -> PayoffTable {
        let p = GameParams::new(b, 1.0, 0.25).unwrap();
        build_payoff_table(sets, &p, &IntrospectionConfig::new(w).unwrap()).unwrap()
    }

    fn set(s: &str) -> StrategySet {
        s.parse().unwrap()
    }

    fn config(sets: Vec<StrategySet>, side: usize, steps: u64, seed: u64) -> LatticeConfig {
        LatticeConfig {
            width: side,
            height: side,
            sets,
            temperature: 0.1,
            steps,
            seed,
            snapshot_times: vec![],
            replicates: 1,
            step_unit: StepUnit::Attempt,
        }
    }

    #[test]
    fn config_validation() {
        let pairs = enumerate_strategy_sets(SetMode::Pairs);
        assert!(config(pairs.clone(), 10, 10, 0).validate().is_ok());
        assert!(config(pairs.clone(), 1, 10, 0).validate().is_err());
        assert!(config(pairs.clone(), 10, 0, 0).validate().is_err());
        let mut cfg = config(pairs.clone(), 10, 10, 0);
        cfg.temperature = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = config(pairs, 10, 10, 0);
        cfg.replicates = 0;
        assert!(cfg.validate().is_err());
        assert!(config(vec![set("CL"), set("LC")], 10, 10, 0)
            .validate()
            .is_err());
    }

    #[test]
    fn init_is_uniform_and_deterministic() {
        let cfg = config(enumerate_strategy_sets(SetMode::Pairs), 100, 1, 42);
        let grid = init_lattice(&cfg).unwrap();
        for f in grid.fractions(3) {
            assert!((f - 1.0 / 3.0).abs() < 0.03);
        }
        assert_eq!(grid, init_lattice(&cfg).unwrap());

        let single = init_lattice(&config(vec![set("CL")], 2, 1, 9)).unwrap();
        assert!(single.is_monomorphic());
    }

    #[test]
    fn neighbours_wrap() {
        let grid = LatticeGrid::uniform(4, 3, 0).unwrap();
        let corner = grid.node(0, 0);
        assert_eq!(
            grid.neighbors(corner),
            [
                grid.node(0, 2),
                grid.node(0, 1),
                grid.node(3, 0),
                grid.node(1, 0)
            ]
        );
    }

    #[test]
    fn cell_payoff_examples() {
        let pairs = enumerate_strategy_sets(SetMode::Pairs);
        let t = table(&pairs, 3.0, 10.0);
        let cl = t.index_of(set("CL")).unwrap() as u8;
        let grid = LatticeGrid::uniform(5, 5, cl).unwrap();
        for node in 0..25 {
            assert_eq!(
                cell_payoff(&grid, node, &t),
                t.get(cl as usize, cl as usize)
            );
            assert!((cell_payoff(&grid, node, &t) - 2.0).abs() < 1e-3);
        }

        let duo = [set("C"), set("D")];
        let t = table(&duo, 3.0, 1.0);
        let mut grid = LatticeGrid::uniform(5, 5, 0).unwrap();
        let centre = grid.node(2, 2);
        grid.set(centre, 1);
        assert_eq!(cell_payoff(&grid, centre, &t), 3.0);
    }

    #[test]
    fn cell_payoff_translation_invariant() {
        let all = enumerate_strategy_sets(SetMode::All);
        let t = table(&all, 3.0, 1.0);
        let cfg = config(all, 6, 1, 3);
        let grid = init_lattice(&cfg).unwrap();
        let (w, h) = (6, 6);
        let shifted_cells: Vec<u8> = (0..w * h)
            .map(|node| {
                let (x, y) = (node % w, node / w);
                grid.get(grid.node((x + w - 2) % w, (y + h - 1) % h))
            })
            .collect();
        let shifted = LatticeGrid::from_cells(w, h, shifted_cells).unwrap();
        for y in 0..h {
            for x in 0..w {
                let a = cell_payoff(&grid, grid.node(x, y), &t);
                let b = cell_payoff(&shifted, shifted.node((x + 2) % w, (y + 1) % h), &t);
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn imitation_probability_values() {
        assert_eq!(imitation_probability(1.0, 1.0, 0.1), 0.5);
        let p = imitation_probability(0.0, 1.75, 0.1);
        assert!((p - 1.0 / (1.0 + (-17.5_f64).exp())).abs() < 1e-15);
        assert!((p - 1.0).abs() < 1e-7);
    }

    #[test]
    fn mc_step_changes_at_most_one_cell() {
        let all = enumerate_strategy_sets(SetMode::All);
        let t = table(&all, 3.0, 1.0);
        let cfg = config(all, 8, 1, 5);
        let mut grid = init_lattice(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let before = grid.clone();
            let out = mc_step(&mut grid, &t, 0.1, &mut rng);
            let changed: Vec<usize> = (0..64).filter(|&i| before.get(i) != grid.get(i)).collect();
            assert!(changed.len() <= 1);
            if let Some(&i) = changed.first() {
                assert!(out.adopted);
                assert_eq!(i, out.focal);
                assert_eq!(grid.get(i), before.get(out.neighbor));
            }
            assert!(before.neighbors(out.focal).contains(&out.neighbor));
        }
    }

    #[test]
    fn monomorphic_grid_is_absorbing() {
        let pairs = enumerate_strategy_sets(SetMode::Pairs);
        let t = table(&pairs, 3.0, 0.1);
        let mut grid = LatticeGrid::uniform(6, 6, 2).unwrap();
        let start = grid.cells().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..5000 {
            assert!(!mc_step(&mut grid, &t, 0.1, &mut rng).adopted);
        }
        assert_eq!(grid.cells(), start.as_slice());
        assert_eq!(grid.generation, 5000);
    }

    #[test]
    fn run_records_samples_and_snapshots() {
        let pairs = enumerate_strategy_sets(SetMode::Pairs);
        let t = table(&pairs, 3.0, 1.0);
        let mut cfg = config(pairs, 10, 1050, 11);
        cfg.snapshot_times = vec![0, 500, 1050, 5000];
        cfg.replicates = 3;
        let result = run_lattice(&cfg, &t).unwrap();
        assert_eq!(result.replicates.len(), 3);
        for (r, rep) in result.replicates.iter().enumerate() {
            assert_eq!(rep.seed, 11 + r as u64);
            assert_eq!(
                rep.sample_attempts,
                (0..=10)
                    .map(|s| s * 100)
                    .chain([1050])
                    .collect::<Vec<u64>>()
            );
            for f in &rep.fractions {
                assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            let steps: Vec<u64> = rep.snapshots.iter().map(|s| s.step).collect();
            assert_eq!(steps, [0, 500, 1050]);
            assert_eq!(rep.snapshots[2].grid, rep.final_grid);
            assert_eq!(
                rep.final_fractions(),
                rep.final_grid.fractions(3).as_slice()
            );
        }
        assert_eq!(result, run_lattice(&cfg, &t).unwrap());
        assert_eq!(result.replicates[0], run_replicate(&cfg, &t, 0).unwrap());
    }

    #[test]
    fn sweep_unit_scales_attempts() {
        let pairs = enumerate_strategy_sets(SetMode::Pairs);
        let mut cfg = config(pairs, 10, 3, 0);
        assert_eq!(cfg.total_attempts(), 3);
        cfg.step_unit = StepUnit::Sweep;
        assert_eq!(cfg.total_attempts(), 300);
    }

    #[test]
    fn outputs() {
        let pairs = enumerate_strategy_sets(SetMode::Pairs);
        let t = table(&pairs, 3.0, 1.0);
        let cfg = config(pairs.clone(), 2, 8, 0);
        let result = run_lattice(&cfg, &t).unwrap();
        let mut buf = Vec::new();
        result
            .write_fractions_csv(&mut buf, NumberFormat::Rounded(2))
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "replicate,sweep,x_CD,x_CL,x_DL");
        assert_eq!(lines.len(), 1 + 3);
        assert!(lines[3].starts_with("0,2,"));

        let grid = LatticeGrid::from_cells(2, 2, vec![0, 1, 2, 1]).unwrap();
        let mut buf = Vec::new();
        grid.write_pgm(&mut buf, &pairs).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "P2\n2 2\n6\n3 4\n5 4\n");
    }

    #[test]
    fn table_must_match_sets() {
        let t = table(&enumerate_strategy_sets(SetMode::Pairs), 3.0, 1.0);
        let cfg = config(enumerate_strategy_sets(SetMode::All), 4, 4, 0);
        assert!(run_lattice(&cfg, &t).is_err());
    }
}
