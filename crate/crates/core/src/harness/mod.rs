//! Batch interface: scenario files, CSV output, parameter sweeps and plots.

pub mod config;
pub mod csv;
pub mod plot;
pub mod sweep;

use std::fs;
use std::path::{Path, PathBuf};

use crate::engine::{run_with, RunOptions};
use crate::error::{Error, Result};
use crate::metrics::RunSummary;
use crate::scenario::ScenarioConfig;
use crate::trace::{Decimate, NullSink};

pub use config::{parse_config, serialize_config, ParsedConfig};
pub use csv::{fmt_f64, write_atomic, AtomicFile, CsvTrace};
pub use plot::{emit_plot, render_plot, PlotKind};
pub use sweep::{parse_sweep, run_sweep, Axis, SweepReport, SweepRow, SweepSpec};

/// Files produced by one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunArtifacts {
    pub trace: Option<PathBuf>,
    pub metrics: PathBuf,
    pub summary: RunSummary,
}

/// Runs `config`, writing `trace.csv` (every `trace_stride`-th step, none when
/// zero) and `metrics.csv` into `dir`.
pub fn run_to_dir(config: &ScenarioConfig, dir: &Path, trace_stride: usize) -> Result<RunArtifacts> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (series, trace) = if trace_stride == 0 {
        (run_with(config, &mut NullSink, RunOptions::default())?, None)
    } else {
        let file = AtomicFile::create(dir.join("trace.csv"))?;
        let mut sink = CsvTrace::new(file);
        let series = run_with(config, &mut Decimate::new(&mut sink, trace_stride), RunOptions::default())?;
        (series, Some(sink.into_inner().commit()?))
    };
    let mut text = Vec::new();
    csv::write_metrics(&mut text, &series).map_err(|e| Error::io(dir.join("metrics.csv"), e))?;
    let metrics = write_atomic(dir.join("metrics.csv"), &text)?;
    Ok(RunArtifacts {
        trace,
        metrics,
        summary: series.summary,
    })
}

/// One-line human summary of a run.
pub fn summary_line(s: &RunSummary) -> String {
    let opt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v:.6}"));
    let mut line = format!(
        "converged={} tc={} tc_steps={} initial_dxm={} max_dxm={} dL={:.6} delta_path={:.6} final_diameter={:.6} steps={}",
        s.converged,
        opt(s.tc.map(|t| t.time)),
        s.tc.map_or("none".to_string(), |t| t.steps.to_string()),
        opt(s.initial_dxm),
        opt(s.max_dxm),
        s.mean_path,
        s.path_spread,
        s.final_diameter,
        s.steps,
    );
    if let Some(a) = &s.abort {
        line.push_str(&format!(" abort=\"{a}\""));
    }
    line
}

/// Convergence-time bound sampled at `points` values of epsilon between
/// `eps_min` and `eps_max` (log-spaced when `eps_min > 0`), as CSV with
/// columns `epsilon,tc_bound`. An unbounded value is written as `inf`.
pub fn bound_csv(
    k: u32,
    a: f64,
    eps_min: f64,
    eps_max: f64,
    dx0: f64,
    c1: f64,
    points: usize,
) -> Result<String> {
    use crate::metrics::{tc_bound, TcBound};
    if !(eps_min.is_finite() && eps_max.is_finite() && eps_min <= eps_max) || points < 2 {
        return Err(Error::invalid(
            "need finite eps_min <= eps_max and at least 2 points",
        ));
    }
    let mut out = String::from("epsilon,tc_bound\n");
    for i in 0..points {
        let f = i as f64 / (points - 1) as f64;
        let eps = if eps_min > 0.0 {
            (eps_min.ln() + f * (eps_max.ln() - eps_min.ln())).exp()
        } else {
            eps_min + f * (eps_max - eps_min)
        };
        let value = match tc_bound(k, a, eps, dx0, c1)? {
            TcBound::Unbounded => "inf".to_string(),
            TcBound::Finite(t) => fmt_f64(t),
        };
        out.push_str(&format!("{},{}\n", fmt_f64(eps), value));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::neighbors::GraphProvider;
    use crate::scenario::InitRule;

    #[test]
    fn bound_curve_shape() {
        let text = bound_csv(2, 1.0, 0.01, 10.0, 4.0, 3.0, 5).unwrap();
        let rows: Vec<(f64, f64)> = text
            .lines()
            .skip(1)
            .map(|l| {
                let (e, t) = l.split_once(',').unwrap();
                (e.parse().unwrap(), t.parse().unwrap())
            })
            .collect();
        assert_eq!(rows.len(), 5);
        assert!((rows[0].0 - 0.01).abs() < 1e-15 && (rows[4].0 - 10.0).abs() < 1e-12);
        assert!((rows[0].1 - (-2.0 * (0.01f64 / 4.0).ln() + 3.0)).abs() < 1e-12);
        assert_eq!(rows[4].1, 3.0);
        assert!(rows.windows(2).all(|w| w[1].1 <= w[0].1));
        let text = bound_csv(1, 1.0, 0.0, 1.0, 2.0, 0.0, 2).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",inf"));
        assert!(bound_csv(1, 1.0, 2.0, 1.0, 2.0, 0.0, 3).is_err());
    }

    #[test]
    fn run_writes_both_files() {
        let mut c = ScenarioConfig::single(
            2,
            GraphProvider::DynamicPriority {
                epsilon: 1.0,
                neighbors: 1,
            },
            InitRule::Explicit(vec![Point::xy(0.0, 0.0), Point::xy(2.0, 0.0)]),
        );
        c.t_max = 0.1;
        let dir = tempfile::tempdir().unwrap();
        let a = run_to_dir(&c, dir.path(), 1).unwrap();
        let trace = std::fs::read_to_string(a.trace.unwrap()).unwrap();
        assert_eq!(trace.lines().count(), 1 + 2 * 11);
        let metrics = std::fs::read_to_string(&a.metrics).unwrap();
        assert_eq!(metrics.lines().filter(|l| !l.starts_with('#')).count(), 12);
        assert!(summary_line(&a.summary).starts_with("converged=false"));

        let b = run_to_dir(&c, &dir.path().join("quiet"), 0).unwrap();
        assert!(b.trace.is_none());
    }

    #[test]
    fn single_point_sweep_matches_run() {
        let c = ScenarioConfig::single(
            6,
            GraphProvider::DynamicPriority {
                epsilon: 1.0,
                neighbors: 1,
            },
            InitRule::UniformBox {
                width: 4.0,
                height: 4.0,
            },
        );
        let dir = tempfile::tempdir().unwrap();
        let run = run_to_dir(&c, &dir.path().join("run"), 1).unwrap();
        let spec = SweepSpec {
            base: c.clone(),
            axis: Axis::Seed,
            values: vec![0.0],
            repeats: 1,
            trace_stride: 1,
        };
        let rep = run_sweep(&spec, &dir.path().join("sweep"), Some(1)).unwrap();
        let row = &rep.rows[0];
        assert_eq!(row.outcome.as_ref().unwrap(), &run.summary);
        for f in ["trace.csv", "metrics.csv"] {
            assert_eq!(
                std::fs::read(row.dir.join(f)).unwrap(),
                std::fs::read(dir.path().join("run").join(f)).unwrap()
            );
        }
    }
}
