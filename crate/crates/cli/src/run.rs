//! Dispatch of a resolved [`RunConfig`] to the simulation pipelines.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use hypergame::analytic::{critical_w_vs_d, critical_w_vs_dl};
use hypergame::lattice::{run_lattice, LatticeConfig, LatticeResult, RNG_ALGORITHM};
use hypergame::replicator::{
    basin_scan, default_offset, integrate_replicator, iterate_discrete_map, write_basin_csv,
    IntegrationOptions, PopulationState,
};
use hypergame::{
    build_payoff_table, enumerate_strategy_sets, tournament_report, IntrospectionConfig,
    PayoffTable,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{CommandKind, Format, RunConfig, SweepTarget};

pub type RunResult<T> = Result<T, Box<dyn std::error::Error + Send + Sync>>;

/// Files written so far (relative to the run directory) and extra metadata
/// for the manifest. Shared between sweep points.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Mutex<Vec<PathBuf>>,
    pub notes: Mutex<Map<String, Value>>,
}

impl Outputs {
    fn note(&self, key: &str, value: Value) {
        self.notes.lock().unwrap().insert(key.to_string(), value);
    }
}

/// Where one pipeline writes: `dir` is absolute, `prefix` is `dir` relative
/// to the run root.
struct Sink<'a> {
    root: &'a Path,
    prefix: PathBuf,
    outputs: &'a Outputs,
}

impl Sink<'_> {
    fn create(&self, name: &str) -> RunResult<BufWriter<File>> {
        let rel = self.prefix.join(name);
        let path = self.root.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let file = File::create(&path)?;
        self.outputs.files.lock().unwrap().push(rel);
        Ok(BufWriter::new(file))
    }

    fn write_with(
        &self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> RunResult<()>,
    ) -> RunResult<()> {
        let mut out = self.create(name)?;
        f(&mut out)?;
        out.flush()?;
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> RunResult<()> {
        self.write_with(name, |out| {
            serde_json::to_writer_pretty(&mut *out, value)?;
            writeln!(out)?;
            Ok(())
        })
    }

    fn sub(&self, dir: &str) -> Sink<'_> {
        Sink {
            root: self.root,
            prefix: self.prefix.join(dir),
            outputs: self.outputs,
        }
    }
}

pub fn dispatch(cfg: &RunConfig, outputs: &Outputs) -> RunResult<()> {
    fs::create_dir_all(&cfg.out)?;
    let sink = Sink {
        root: &cfg.out,
        prefix: PathBuf::new(),
        outputs,
    };
    match cfg.command {
        CommandKind::Table => table(cfg, cfg.b, cfg.w, &sink).map(|_| ()),
        CommandKind::Tournament => tournament(cfg, cfg.b, cfg.w, &sink, true),
        CommandKind::Thresholds => thresholds(cfg, &sink),
        CommandKind::Replicator => replicator(cfg, &sink),
        CommandKind::Map7 => map7(cfg, &sink),
        CommandKind::Lattice => lattice(cfg, cfg.b, cfg.w, &sink, true),
        CommandKind::Sweep => sweep(cfg, &sink),
    }
}

fn payoff_table(cfg: &RunConfig, b: f64, w: f64) -> RunResult<PayoffTable> {
    let params = cfg.params(b)?;
    let sets = enumerate_strategy_sets(cfg.set_mode()?);
    Ok(build_payoff_table(
        &sets,
        &params,
        &IntrospectionConfig::new(w)?,
    )?)
}

fn table(cfg: &RunConfig, b: f64, w: f64, sink: &Sink) -> RunResult<PayoffTable> {
    let t = payoff_table(cfg, b, w)?;
    match cfg.format {
        Format::Csv => sink.write_with("payoffs.csv", |out| {
            Ok(t.write_csv(out, cfg.number_format(), true)?)
        })?,
        Format::Json => sink.json("payoffs.json", &t)?,
    }
    Ok(t)
}

fn tournament(cfg: &RunConfig, b: f64, w: f64, sink: &Sink, verbose: bool) -> RunResult<()> {
    let t = table(cfg, b, w, sink)?;
    let report = tournament_report(&t);
    match cfg.format {
        Format::Csv => {
            let fmt = cfg.number_format();
            sink.write_with("report.csv", |out| Ok(report.write_csv(out, fmt)?))?;
            sink.write_with("pairwise.csv", |out| {
                writeln!(out, "first,second,first_payoff,second_payoff,winner")?;
                for p in &report.pairwise_winners {
                    let winner = match p.winner {
                        hypergame::tournament::Winner::Set(s) => s.to_string(),
                        hypergame::tournament::Winner::Tie => "tie".into(),
                    };
                    writeln!(
                        out,
                        "{},{},{},{},{}",
                        p.first,
                        p.second,
                        fmt.fmt(p.first_payoff),
                        fmt.fmt(p.second_payoff),
                        winner
                    )?;
                }
                Ok(())
            })?;
        }
        Format::Json => sink.json("report.json", &report)?,
    }
    if verbose {
        let top = report.top();
        println!("top scorer: {} ({:.4})", top.set, top.score);
    }
    Ok(())
}

fn thresholds(cfg: &RunConfig, sink: &Sink) -> RunResult<()> {
    let p = cfg.params(cfg.b)?;
    let vs_d = critical_w_vs_d(&p)?;
    let vs_dl = critical_w_vs_dl(&p)?;
    let value = json!({
        "b": p.b(),
        "c": p.c(),
        "delta": p.delta(),
        "vs_d": vs_d,
        "vs_dl": vs_dl,
    });
    match cfg.format {
        Format::Json => sink.json("thresholds.json", &value)?,
        Format::Csv => {
            let fmt = cfg.number_format();
            sink.write_with("thresholds.csv", |out| {
                writeln!(
                    out,
                    "b,c,delta,vs_d_transcendental,vs_d_bisection,vs_d_uncorrected,vs_dl"
                )?;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    fmt.fmt(p.b()),
                    fmt.fmt(p.c()),
                    fmt.fmt(p.delta()),
                    fmt.fmt(vs_d.transcendental),
                    fmt.fmt(vs_d.bisection),
                    fmt.fmt(vs_d.uncorrected),
                    fmt.fmt(vs_dl)
                )?;
                Ok(())
            })?;
        }
    }
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

fn integration_options(cfg: &RunConfig) -> IntegrationOptions {
    IntegrationOptions {
        dt: cfg.dt,
        t_max: cfg.t_max,
        ..IntegrationOptions::default()
    }
}

fn replicator(cfg: &RunConfig, sink: &Sink) -> RunResult<()> {
    let t = payoff_table(cfg, cfg.b, cfg.w)?;
    let opts = integration_options(cfg);
    let rec = integrate_replicator(&PopulationState::barycenter(t.len()), &t, &opts)?;
    let fmt = cfg.number_format();
    match cfg.format {
        Format::Csv => sink.write_with("trajectory.csv", |out| {
            Ok(rec.write_csv(out, t.sets(), fmt)?)
        })?,
        Format::Json => sink.json(
            "trajectory.json",
            &json!({ "sets": t.sets(), "trajectory": rec }),
        )?,
    }
    let (i, share) = rec.final_state().dominant();
    println!(
        "t = {}: most frequent {} ({share:.6}){}",
        rec.times.last().copied().unwrap_or(0.0),
        t.sets()[i],
        if rec.fixated().is_some() {
            ", fixated"
        } else {
            ""
        }
    );
    if let Some(resolution) = cfg.basin_resolution {
        let points = basin_scan(&t, resolution, &opts)?;
        match cfg.format {
            Format::Csv => {
                sink.write_with("basin.csv", |out| Ok(write_basin_csv(out, &points, fmt)?))?
            }
            Format::Json => {
                sink.json("basin.json", &json!({ "sets": t.sets(), "points": points }))?
            }
        }
        for s in t.sets() {
            let n = points
                .iter()
                .filter(|p| p.interior && p.winner == Some(*s))
                .count();
            let total = points.iter().filter(|p| p.interior).count();
            println!("basin of {s}: {n}/{total} interior points");
        }
    }
    Ok(())
}

fn map7(cfg: &RunConfig, sink: &Sink) -> RunResult<()> {
    let t = payoff_table(cfg, cfg.b, cfg.w)?;
    let sigma = default_offset(&t);
    sink.outputs.note("offset", json!(sigma));
    let rec = iterate_discrete_map(
        &PopulationState::barycenter(t.len()),
        &t,
        sigma,
        cfg.iterations,
        1,
    )?;
    match cfg.format {
        Format::Csv => sink.write_with("map.csv", |out| {
            Ok(rec.write_csv(out, t.sets(), cfg.number_format())?)
        })?,
        Format::Json => sink.json(
            "map.json",
            &json!({ "sets": t.sets(), "offset": sigma, "trajectory": rec }),
        )?,
    }
    let (i, share) = rec.final_state().dominant();
    println!(
        "after {} generations: most frequent {} ({share:.4})",
        cfg.iterations,
        t.sets()[i]
    );
    Ok(())
}

fn lattice_config(cfg: &RunConfig) -> RunResult<LatticeConfig> {
    Ok(LatticeConfig {
        width: cfg.width,
        height: cfg.height,
        sets: enumerate_strategy_sets(cfg.set_mode()?),
        temperature: cfg.k,
        steps: cfg.steps,
        seed: cfg.seed,
        snapshot_times: cfg.snapshots.clone(),
        replicates: cfg.replicates,
        step_unit: cfg.step_unit,
    })
}

fn lattice(cfg: &RunConfig, b: f64, w: f64, sink: &Sink, verbose: bool) -> RunResult<()> {
    let t = payoff_table(cfg, b, w)?;
    let lc = lattice_config(cfg)?;
    let result = run_lattice(&lc, &t)?;
    let fmt = cfg.number_format();
    match cfg.format {
        Format::Csv => {
            sink.write_with("fractions.csv", |out| Ok(result.write_fractions_csv(out, fmt)?))?;
            sink.write_with("final.csv", |out| {
                write_final(out, &result, fmt)?;
                Ok(())
            })?;
        }
        Format::Json => sink.json(
            "fractions.json",
            &json!({
                "sets": result.sets,
                "replicates": result.replicates.iter().map(|r| json!({
                    "replicate": r.replicate,
                    "seed": r.seed,
                    "sweeps": r.sample_attempts.iter().map(|&a| a as f64 / result.sites as f64).collect::<Vec<_>>(),
                    "fractions": r.fractions,
                })).collect::<Vec<_>>(),
            }),
        )?,
    }
    let snaps = sink.sub("snapshots");
    let labels: Map<String, Value> = result
        .sets
        .iter()
        .map(|s| (s.canonical_index().to_string(), json!(s.to_string())))
        .collect();
    for r in &result.replicates {
        for snap in &r.snapshots {
            let stem = format!("rep{}_step{}", r.replicate, snap.step);
            snaps.write_with(&format!("{stem}.pgm"), |out| {
                Ok(snap.grid.write_pgm(out, &result.sets)?)
            })?;
            snaps.json(
                &format!("{stem}.json"),
                &json!({
                    "labels": labels,
                    "b": b,
                    "c": cfg.c,
                    "delta": cfg.delta,
                    "w": w,
                    "k": cfg.k,
                    "width": cfg.width,
                    "height": cfg.height,
                    "replicate": r.replicate,
                    "seed": r.seed,
                    "step": snap.step,
                    "step_unit": cfg.step_unit,
                    "rng": RNG_ALGORITHM,
                }),
            )?;
        }
    }
    if verbose {
        let modal = result.modal_dominant();
        println!(
            "most frequent at the end: {modal} in {}/{} replicates",
            result.dominance_count(modal),
            result.replicates.len()
        );
    }
    Ok(())
}

fn write_final<W: Write>(
    out: &mut W,
    result: &LatticeResult,
    fmt: hypergame::NumberFormat,
) -> RunResult<()> {
    write!(out, "replicate,seed,dominant_set")?;
    for s in &result.sets {
        write!(out, ",x_{s}")?;
    }
    writeln!(out)?;
    for r in &result.replicates {
        write!(
            out,
            "{},{},{}",
            r.replicate,
            r.seed,
            result.sets[r.dominant()]
        )?;
        for f in r.final_fractions() {
            write!(out, ",{}", fmt.fmt(*f))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Files of one sweep point that are concatenated at the root.
fn merged_files(cfg: &RunConfig) -> &'static [&'static str] {
    match (cfg.target, cfg.format) {
        (SweepTarget::Tournament, Format::Csv) => &["payoffs.csv", "report.csv"],
        (SweepTarget::Tournament, Format::Json) => &["payoffs.json", "report.json"],
        (SweepTarget::Lattice, Format::Csv) => &["final.csv", "fractions.csv"],
        (SweepTarget::Lattice, Format::Json) => &["fractions.json"],
    }
}

fn point_dir(b: f64, w: f64) -> String {
    format!("b{b}_w{w}")
}

fn sweep(cfg: &RunConfig, sink: &Sink) -> RunResult<()> {
    let points: Vec<(f64, f64)> = cfg
        .b_values
        .iter()
        .flat_map(|&b| cfg.w_values.iter().map(move |&w| (b, w)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()?;
    pool.install(|| {
        points.par_iter().try_for_each(|&(b, w)| {
            let sub = sink.sub(&point_dir(b, w));
            match cfg.target {
                SweepTarget::Tournament => tournament(cfg, b, w, &sub, false),
                SweepTarget::Lattice => lattice(cfg, b, w, &sub, false),
            }
        })
    })?;

    for name in merged_files(cfg) {
        let merged = format!("sweep_{name}");
        match cfg.format {
            Format::Csv => sink.write_with(&merged, |out| {
                let mut header_done = false;
                for &(b, w) in &points {
                    let text = fs::read_to_string(sink.root.join(point_dir(b, w)).join(name))?;
                    let mut lines = text.lines();
                    let header = lines.next().unwrap_or_default();
                    // the payoff table already carries its parameters
                    let prefix = if header.starts_with("w,b,") {
                        String::new()
                    } else {
                        format!("{b},{w},")
                    };
                    if !header_done {
                        let names = if prefix.is_empty() { "" } else { "b,w," };
                        writeln!(out, "{names}{header}")?;
                        header_done = true;
                    }
                    for line in lines {
                        writeln!(out, "{prefix}{line}")?;
                    }
                }
                Ok(())
            })?,
            Format::Json => {
                let mut all = Vec::new();
                for &(b, w) in &points {
                    let text = fs::read_to_string(sink.root.join(point_dir(b, w)).join(name))?;
                    let value: Value = serde_json::from_str(&text)?;
                    all.push(json!({ "b": b, "w": w, "result": value }));
                }
                sink.json(&merged, &all)?;
            }
        }
    }
    println!(
        "{} grid points written to {}",
        points.len(),
        cfg.out.display()
    );
    Ok(())
}
