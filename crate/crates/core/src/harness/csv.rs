//! CSV output and the readers the plotter uses.
//!
//! Reals are written with 17 significant digits so that a value read back is
//! bit-identical; output never depends on the locale.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::dynamics::ControlSignal;
use crate::error::{Error, Result};
use crate::metrics::MetricsSeries;
use crate::trace::{StepRecord, TraceSink};

/// Formats a real with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// A file written under a temporary name and renamed into place on commit.
/// Dropping it without committing removes the temporary file.
pub struct AtomicFile {
    tmp: PathBuf,
    path: PathBuf,
    writer: Option<BufWriter<File>>,
}

impl AtomicFile {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut name = path
            .file_name()
            .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?
            .to_os_string();
        name.push(".tmp");
        let tmp = path.with_file_name(name);
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        Ok(Self {
            tmp,
            path,
            writer: Some(BufWriter::new(file)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn commit(mut self) -> Result<PathBuf> {
        let w = self.writer.take().expect("writer present until commit");
        let file = w
            .into_inner()
            .map_err(|e| Error::io(&self.tmp, e.into_error()))?;
        file.sync_all().map_err(|e| Error::io(&self.tmp, e))?;
        fs::rename(&self.tmp, &self.path).map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path.clone())
    }
}

impl Write for AtomicFile {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.writer.as_mut().expect("not committed").write(buf)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.writer.as_mut().expect("not committed").flush()
    }
}

impl Drop for AtomicFile {
    fn drop(&mut self) {
        if self.writer.take().is_some() {
            let _ = fs::remove_file(&self.tmp);
        }
    }
}

/// Writes `contents` to `path` through a temporary file.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<PathBuf> {
    let mut f = AtomicFile::create(path)?;
    f.write_all(contents).map_err(|e| Error::io(f.path(), e))?;
    f.commit()
}

const AXES: [&str; 3] = ["x", "y", "z"];

/// Column names for a trace whose first record is `rec`.
pub fn trace_columns(rec: &StepRecord) -> Vec<String> {
    let mut cols: Vec<String> = ["step", "time", "agent_id"].map(String::from).to_vec();
    let Some(a) = rec.agents.first() else {
        return cols;
    };
    let dim = a.position.dim();
    let axes = &AXES[..dim];
    cols.extend(axes.iter().map(|s| s.to_string()));
    if a.velocity.is_some() {
        cols.extend(axes.iter().map(|s| format!("v{s}")));
    }
    if a.heading.is_some() {
        cols.push("theta".into());
    }
    if a.flight.is_some() {
        cols.extend(["speed", "gamma", "psi"].map(String::from));
    }
    if a.control.is_some() {
        cols.extend(["thrust", "normal", "bank"].map(String::from));
    }
    cols.extend(axes.iter().map(|s| format!("uc_{s}")));
    match rec.controls.first() {
        Some(ControlSignal::Velocity(_) | ControlSignal::Acceleration(_)) => {
            cols.extend(axes.iter().map(|s| format!("u_{s}")))
        }
        Some(ControlSignal::Ugv(_)) => cols.extend(["u_wheel_speed", "u_steering"].map(String::from)),
        Some(ControlSignal::Uav(_)) => {
            cols.extend(["u_thrust", "u_normal", "u_bank"].map(String::from))
        }
        None => {}
    }
    cols
}

/// Streams step records as trace CSV rows, one per agent per step.
pub struct CsvTrace<W: Write> {
    out: W,
    header: bool,
    line: String,
}

impl<W: Write> CsvTrace<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            header: false,
            line: String::new(),
        }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> TraceSink for CsvTrace<W> {
    fn record(&mut self, rec: &StepRecord) -> Result<()> {
        let io = |e| Error::io("trace", e);
        if !self.header {
            writeln!(self.out, "{}", trace_columns(rec).join(",")).map_err(io)?;
            self.header = true;
        }
        let time = fmt_f64(rec.time);
        for (k, a) in rec.agents.iter().enumerate() {
            self.line.clear();
            self.line.push_str(&format!("{},{},{}", rec.step, time, a.id));
            let values = a
                .components()
                .into_iter()
                .chain(rec.uc[k].coords().iter().copied())
                .chain(rec.controls[k].components());
            for v in values {
                self.line.push(',');
                self.line.push_str(&fmt_f64(v));
            }
            self.line.push('\n');
            self.out.write_all(self.line.as_bytes()).map_err(io)?;
        }
        Ok(())
    }
}

pub const METRICS_HEADER: &str = "step,time,diameter,dxm";

/// Per-step metrics rows followed by a `#` footer holding the run summary.
pub fn write_metrics<W: Write>(out: &mut W, series: &MetricsSeries) -> std::io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for s in &series.steps {
        writeln!(
            out,
            "{},{},{},{}",
            s.step,
            fmt_f64(s.time),
            fmt_f64(s.diameter),
            fmt_opt(s.dxm)
        )?;
    }
    let m = &series.summary;
    writeln!(out, "# converged={}", m.converged)?;
    writeln!(out, "# tc_steps={}", m.tc.map(|t| t.steps.to_string()).unwrap_or_default())?;
    writeln!(out, "# tc_time={}", fmt_opt(m.tc.map(|t| t.time)))?;
    writeln!(out, "# initial_dxm={}", fmt_opt(m.initial_dxm))?;
    writeln!(out, "# max_dxm={}", fmt_opt(m.max_dxm))?;
    writeln!(out, "# mean_path={}", fmt_f64(m.mean_path))?;
    writeln!(out, "# path_spread={}", fmt_f64(m.path_spread))?;
    writeln!(out, "# final_diameter={}", fmt_f64(m.final_diameter))?;
    writeln!(out, "# steps={}", m.steps)?;
    writeln!(out, "# abort={}", m.abort.as_deref().unwrap_or(""))?;
    Ok(())
}

/// A parsed CSV: header plus rows of raw fields. Lines starting with `#` are
/// skipped. Row numbers in errors count file lines from 1.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<(usize, Vec<String>)>,
}

fn schema(e: ::csv::Error) -> Error {
    Error::Schema {
        row: e.position().map_or(0, |p| p.line() as usize),
        message: e.to_string(),
    }
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut rdr = ::csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(::csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers().map_err(schema)?.iter().map(String::from).collect();
        if header.is_empty() {
            return Err(Error::Schema {
                row: 1,
                message: "missing header".into(),
            });
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(schema)?;
            let row = rec.position().map_or(0, |p| p.line() as usize);
            rows.push((row, rec.iter().map(String::from).collect()));
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or(Error::Schema {
            row: 1,
            message: format!("missing column {name:?}"),
        })
    }

    /// Numeric values of column `col`; empty fields give `None`.
    pub fn reals(&self, col: usize) -> Result<Vec<Option<f64>>> {
        self.rows
            .iter()
            .map(|(row, f)| {
                let s = &f[col];
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse::<f64>().map(Some).map_err(|_| Error::Schema {
                    row: *row,
                    message: format!("{:?} in column {:?} is not a number", s, self.header[col]),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run;
    use crate::geometry::Point;
    use crate::neighbors::GraphProvider;
    use crate::scenario::{InitRule, ScenarioConfig};

    #[test]
    fn reals_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    fn two() -> ScenarioConfig {
        let mut c = ScenarioConfig::single(
            2,
            GraphProvider::DynamicPriority {
                epsilon: 1.0,
                neighbors: 1,
            },
            InitRule::Explicit(vec![Point::xy(0.0, 0.0), Point::xy(2.0, 0.0)]),
        );
        c.t_max = 0.05;
        c
    }

    #[test]
    fn trace_has_two_rows_per_step() {
        let (trace, _) = run(&two()).unwrap();
        let mut w = CsvTrace::new(Vec::new());
        for r in &trace.records {
            w.record(r).unwrap();
        }
        let text = String::from_utf8(w.into_inner()).unwrap();
        let t = Table::parse(&text).unwrap();
        assert_eq!(
            t.header,
            ["step", "time", "agent_id", "x", "y", "uc_x", "uc_y", "u_x", "u_y"]
        );
        assert_eq!(t.rows.len(), 2 * trace.records.len());
        let x = t.reals(t.column("x").unwrap()).unwrap();
        assert_eq!(x[2], Some(0.02));
    }

    #[test]
    fn metrics_footer_and_rows() {
        let (_, m) = run(&two()).unwrap();
        let mut out = Vec::new();
        write_metrics(&mut out, &m).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with(METRICS_HEADER));
        assert!(text.contains("# converged=false"));
        let t = Table::parse(&text).unwrap();
        assert_eq!(t.rows.len(), m.steps.len());
    }

    #[test]
    fn malformed_rows_report_line() {
        let err = Table::parse("a,b\n1,2\n3\n").err().unwrap();
        assert!(matches!(err, Error::Schema { row: 3, .. }));
        let t = Table::parse("a,b\n1,x\n").unwrap();
        assert!(matches!(t.reals(1), Err(Error::Schema { row: 2, .. })));
    }

    #[test]
    fn atomic_file_appears_only_on_commit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mut f = AtomicFile::create(&path).unwrap();
        f.write_all(b"a\n").unwrap();
        assert!(!path.exists());
        f.commit().unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"a\n");
        {
            let mut f = AtomicFile::create(dir.path().join("gone.csv")).unwrap();
            f.write_all(b"x").unwrap();
        }
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from("out.csv")]);
    }
}
