//! Parameter sweeps: one run per (value, seed), executed in parallel, with an
//! aggregate table whose order does not depend on scheduling.
//!
//! A sweep file is a scenario file plus a `[sweep]` section:
//!
//! ```toml
//! [sweep]
//! axis = "epsilon"        # epsilon | L | delay | seed
//! values = [0.5, 1.0, 3.0]
//! repeats = 5             # seeds per value: base seed, base seed + 1, ...
//! trace_stride = 0        # write every n-th step to trace.csv; 0 = no trace
//! ```

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{parse_root, parse_table, Section};
use super::csv::{fmt_f64, write_atomic};
use super::run_to_dir;
use crate::error::{Error, Result};
use crate::metrics::RunSummary;
use crate::neighbors::GraphProvider;
use crate::scenario::ScenarioConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Epsilon,
    /// Neighbor limit `L` of a dynamic provider.
    Neighbors,
    Delay,
    Seed,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Epsilon => "epsilon",
            Axis::Neighbors => "L",
            Axis::Delay => "delay",
            Axis::Seed => "seed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub repeats: usize,
    pub trace_stride: usize,
}

fn field(key: &str, message: impl Into<String>) -> Error {
    Error::config(format!("[sweep].{key}"), message)
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(field("values", "must not be empty"));
        }
        if self.repeats == 0 {
            return Err(field("repeats", "must be >= 1"));
        }
        if self.axis == Axis::Seed && self.repeats != 1 {
            return Err(field("repeats", "must be 1 for the seed axis"));
        }
        for &v in &self.values {
            self.apply(v, self.base.seed)?;
        }
        Ok(())
    }

    /// Values in ascending order, duplicates removed.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Seeds run for `value`.
    pub fn seeds(&self, value: f64) -> Vec<u64> {
        match self.axis {
            Axis::Seed => vec![value as u64],
            _ => (0..self.repeats as u64).map(|r| self.base.seed.wrapping_add(r)).collect(),
        }
    }

    /// The base scenario with the axis set to `value` and the given seed.
    pub fn apply(&self, value: f64, seed: u64) -> Result<ScenarioConfig> {
        let mut c = self.base.clone();
        c.seed = seed;
        let whole = |v: f64| v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64;
        match self.axis {
            Axis::Epsilon => match &mut c.provider {
                GraphProvider::DynamicPriority { epsilon, .. } => *epsilon = value,
                _ => return Err(field("axis", "epsilon sweeps need the dynamic-priority provider")),
            },
            Axis::Neighbors => {
                if !(whole(value) && value >= 1.0) {
                    return Err(field("values", format!("L must be a positive integer, got {value}")));
                }
                match &mut c.provider {
                    GraphProvider::DynamicPriority { neighbors, .. }
                    | GraphProvider::DynamicPlain { neighbors } => *neighbors = value as usize,
                    GraphProvider::FixedDigraph { .. } => {
                        return Err(field("axis", "L sweeps need a dynamic provider"))
                    }
                }
            }
            Axis::Delay => c.delay = value,
            Axis::Seed => {
                if !whole(value) {
                    return Err(field("values", format!("seeds must be whole numbers, got {value}")));
                }
                c.seed = value as u64;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parses a sweep file.
pub fn parse_sweep(text: &str) -> Result<SweepSpec> {
    let (root, lines) = parse_table(text)?;
    let base = parse_root(&root, &lines, &["sweep"])?.config;
    let mut ignored = Vec::new();
    let mut s = Section::new(&root, "sweep", &lines, &mut ignored)?;
    s.only(&["axis", "values", "repeats", "trace_stride"])?;
    let name = s.req_str("axis")?;
    let axis = s.pick(
        "axis",
        name,
        &[
            ("epsilon", Axis::Epsilon),
            ("L", Axis::Neighbors),
            ("delay", Axis::Delay),
            ("seed", Axis::Seed),
        ],
    )?;
    let values = s
        .opt_f64_list("values")?
        .ok_or_else(|| field("values", "missing required key"))?;
    let repeats = s.usize_or("repeats", 1)?;
    let trace_stride = s.usize_or("trace_stride", 1)?;
    let spec = SweepSpec {
        base,
        axis,
        values,
        repeats,
        trace_stride,
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub dir: PathBuf,
    /// The run's summary, or why it could not run.
    pub outcome: std::result::Result<RunSummary, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub axis: Axis,
    pub rows: Vec<SweepRow>,
    pub aggregate: PathBuf,
}

/// Runs every (value, seed) pair on up to `jobs` threads (all cores when
/// `None`) and writes `sweep.csv` plus one run directory per pair under `out`.
/// A failing run is recorded in its row; the sweep continues.
pub fn run_sweep(spec: &SweepSpec, out: &Path, jobs: Option<usize>) -> Result<SweepReport> {
    spec.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut tasks = Vec::new();
    for (k, value) in spec.sorted_values().into_iter().enumerate() {
        for seed in spec.seeds(value) {
            let dir = out.join(format!("{}-{k:03}-seed-{seed}", spec.axis.name()));
            tasks.push((value, seed, dir));
        }
    }
    let exec = |tasks: Vec<(f64, u64, PathBuf)>| -> Vec<SweepRow> {
        tasks
            .into_par_iter()
            .map(|(value, seed, dir)| {
                let outcome = spec
                    .apply(value, seed)
                    .and_then(|c| run_to_dir(&c, &dir, spec.trace_stride))
                    .map(|a| a.summary)
                    .map_err(|e| e.to_string());
                SweepRow {
                    value,
                    seed,
                    dir,
                    outcome,
                }
            })
            .collect()
    };
    let rows = match jobs {
        None => exec(tasks),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(|| exec(tasks)),
    };
    let aggregate = write_atomic(out.join("sweep.csv"), aggregate_csv(spec.axis, &rows).as_bytes())?;
    Ok(SweepReport {
        axis: spec.axis,
        rows,
        aggregate,
    })
}

/// The aggregate table. `rows` must already be in (value, seed) order.
pub fn aggregate_csv(axis: Axis, rows: &[SweepRow]) -> String {
    let mut w = ::csv::Writer::from_writer(Vec::new());
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let mut put = |fields: [String; 8]| w.write_record(&fields).expect("writing to memory");
    put([axis.name(), "seed", "tc", "max_dxm", "dL", "delta_path", "converged", "error"].map(String::from));
    for r in rows {
        let value = match axis {
            Axis::Neighbors | Axis::Seed => format!("{}", r.value as u64),
            _ => fmt_f64(r.value),
        };
        put(match &r.outcome {
            Ok(s) => [
                value,
                r.seed.to_string(),
                opt(s.tc.map(|t| t.time)),
                opt(s.max_dxm),
                fmt_f64(s.mean_path),
                fmt_f64(s.path_spread),
                s.converged.to_string(),
                s.abort.clone().unwrap_or_default(),
            ],
            Err(e) => [
                value,
                r.seed.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "false".into(),
                e.clone(),
            ],
        });
    }
    let bytes = w.into_inner().expect("writing to memory");
    String::from_utf8(bytes).expect("fields are UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[scenario]
agents = 8
t_max = 3.0
init = "uniform-box"
width = 5.0
height = 5.0
seed = 3

[graph]
provider = "dynamic-priority"
neighbors = 1

[guidance]
epsilon = 1.0
"#;

    #[test]
    fn parses_and_orders_rows() {
        let text = format!("{BASE}\n[sweep]\naxis = \"epsilon\"\nvalues = [2.0, 0.5]\nrepeats = 2\ntrace_stride = 0\n");
        let spec = parse_sweep(&text).unwrap();
        assert_eq!(spec.axis, Axis::Epsilon);
        let dir = tempfile::tempdir().unwrap();
        let rep = run_sweep(&spec, dir.path(), Some(3)).unwrap();
        let keys: Vec<(f64, u64)> = rep.rows.iter().map(|r| (r.value, r.seed)).collect();
        assert_eq!(keys, vec![(0.5, 3), (0.5, 4), (2.0, 3), (2.0, 4)]);
        let text = std::fs::read_to_string(&rep.aggregate).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("epsilon,seed,tc,"));
    }

    #[test]
    fn axis_must_fit_provider() {
        let text = BASE
            .replace("provider = \"dynamic-priority\"\nneighbors = 1", "provider = \"fixed\"")
            .replace("epsilon = 1.0", "")
            + "\n[sweep]\naxis = \"L\"\nvalues = [1, 2]\n";
        let e = parse_sweep(&text).unwrap_err();
        assert!(e.to_string().contains("[sweep].axis"), "{e}");
        let text = format!("{BASE}\n[sweep]\naxis = \"L\"\nvalues = [1.5]\n");
        assert!(parse_sweep(&text).is_err());
        let text = format!("{BASE}\n[sweep]\naxis = \"delay\"\nvalues = []\n");
        assert!(parse_sweep(&text).unwrap_err().to_string().contains("[sweep].values"));
    }

    #[test]
    fn failed_runs_keep_their_row() {
        let spec = SweepSpec {
            base: parse_sweep(&format!("{BASE}\n[sweep]\naxis = \"seed\"\nvalues = [1]\n"))
                .unwrap()
                .base,
            axis: Axis::Seed,
            values: vec![1.0],
            repeats: 1,
            trace_stride: 0,
        };
        let dir = tempfile::tempdir().unwrap();
        // Make the output directory unwritable by putting a file in its place.
        std::fs::write(dir.path().join("seed-000-seed-1"), b"").unwrap();
        let rep = run_sweep(&spec, dir.path(), Some(1)).unwrap();
        assert!(rep.rows[0].outcome.is_err());
        let text = std::fs::read_to_string(&rep.aggregate).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("1,1,,,,,false,"));
    }
}
