//! Analysis quantities: nearest-outside distances, the communication-range
//! proxy `d_xm`, path statistics, convergence time and its bound curve, and the
//! per-run invariant checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pairwise_distances, DistanceMatrix};
use crate::trace::SimTrace;

/// Nearest agent outside an agent's priority zone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nearest {
    pub distance: f64,
    pub id: usize,
}

/// `dm_i` from a row of distances: the closest agent strictly farther than
/// `epsilon`, ties to the smaller id.
pub fn dm_row(row: &[f64], i: usize, epsilon: f64) -> Option<Nearest> {
    let mut best: Option<Nearest> = None;
    for (j, &d) in row.iter().enumerate() {
        if j == i || d <= epsilon {
            continue;
        }
        if best.map_or(true, |b| d < b.distance) {
            best = Some(Nearest { distance: d, id: j });
        }
    }
    best
}

pub fn dm(d: &DistanceMatrix, i: usize, epsilon: f64) -> Option<Nearest> {
    dm_row(d.row(i), i, epsilon)
}

/// Largest `dm_i` over agents that have one.
pub fn dxm(d: &DistanceMatrix, epsilon: f64) -> Option<f64> {
    (0..d.len())
        .filter_map(|i| dm(d, i, epsilon))
        .map(|n| n.distance)
        .reduce(f64::max)
}

/// Per-step record of the analysis quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct StepMetrics {
    pub step: usize,
    pub time: f64,
    pub diameter: f64,
    pub dxm: Option<f64>,
    /// `dm_i` per agent; empty unless per-agent metrics were requested.
    pub dm: Vec<Option<Nearest>>,
}

impl StepMetrics {
    pub fn from_distances(
        step: usize,
        time: f64,
        d: &DistanceMatrix,
        epsilon: f64,
        per_agent: bool,
    ) -> Self {
        let all: Vec<Option<Nearest>> = (0..d.len()).map(|i| dm(d, i, epsilon)).collect();
        let dxm = all.iter().flatten().map(|n| n.distance).reduce(f64::max);
        Self {
            step,
            time,
            diameter: d.max_entry(),
            dxm,
            dm: if per_agent { all } else { Vec::new() },
        }
    }
}

/// Convergence time of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTime {
    pub steps: usize,
    pub time: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub converged: bool,
    pub tc: Option<ConvergenceTime>,
    pub initial_dxm: Option<f64>,
    pub max_dxm: Option<f64>,
    /// Mean path length.
    pub mean_path: f64,
    /// Longest minus shortest path length.
    pub path_spread: f64,
    pub final_diameter: f64,
    pub steps: usize,
    /// Set when the run aborted; the summary covers the steps before it.
    pub abort: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsSeries {
    pub steps: Vec<StepMetrics>,
    pub summary: RunSummary,
}

impl MetricsSeries {
    pub fn diameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.diameter)
    }
}

/// First index from which every later diameter stays within `delta`, if the
/// final one does.
pub fn convergence_index(diameters: &[f64], delta: f64) -> Option<usize> {
    match diameters.iter().rposition(|&d| d > delta) {
        None if diameters.is_empty() => None,
        None => Some(0),
        Some(k) if k + 1 < diameters.len() => Some(k + 1),
        Some(_) => None,
    }
}

/// Accumulates per-agent path lengths from successive positions.
#[derive(Clone, Debug, Default)]
pub struct PathAccumulator {
    last: Vec<crate::geometry::Point>,
    lengths: Vec<f64>,
}

impl PathAccumulator {
    pub fn push(&mut self, positions: &[crate::geometry::Point]) {
        if self.last.is_empty() {
            self.lengths = vec![0.0; positions.len()];
        } else {
            for (l, (a, b)) in self.lengths.iter_mut().zip(self.last.iter().zip(positions)) {
                *l += a.distance(b);
            }
        }
        self.last = positions.to_vec();
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// `(mean, max - min)`.
    pub fn stats(&self) -> (f64, f64) {
        if self.lengths.is_empty() {
            return (0.0, 0.0);
        }
        let n = self.lengths.len() as f64;
        let mean = self.lengths.iter().sum::<f64>() / n;
        let max = self.lengths.iter().copied().fold(f64::MIN, f64::max);
        let min = self.lengths.iter().copied().fold(f64::MAX, f64::min);
        (mean, max - min)
    }
}

/// `(dL, Delta)` from a recorded trace: mean chord-sum path length and the
/// spread between the longest and shortest path.
pub fn path_stats(trace: &SimTrace) -> Result<(f64, f64)> {
    if trace.records.is_empty() {
        return Err(Error::invalid("empty trace"));
    }
    let mut acc = PathAccumulator::default();
    for r in &trace.records {
        acc.push(&r.positions());
    }
    Ok(acc.stats())
}

/// Upper-bound curve on the convergence time as a function of `epsilon`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TcBound {
    /// `epsilon <= 0`: the plain nearest-neighbor protocol, no finite bound.
    Unbounded,
    Finite(f64),
}

/// `-(K/a) ln(epsilon/dx0) + C1`, constant `C1` once `epsilon >= dx0`.
pub fn tc_bound(k: u32, a: f64, epsilon: f64, dx0: f64, c1: f64) -> Result<TcBound> {
    if k == 0 || !(a > 0.0) || !(dx0 > 0.0) || !c1.is_finite() {
        return Err(Error::invalid("tc_bound needs K >= 1, a > 0, dx0 > 0, finite C1"));
    }
    if !(epsilon > 0.0) {
        return Ok(TcBound::Unbounded);
    }
    if epsilon >= dx0 {
        return Ok(TcBound::Finite(c1));
    }
    Ok(TcBound::Finite(-(k as f64 / a) * (epsilon / dx0).ln() + c1))
}

/// Outcome of the shared-agent check on one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prop5Step {
    pub dxm: Option<f64>,
    /// Agent attaining `d_xm` and its nearest outside agent.
    pub pair: Option<(usize, usize)>,
    /// Some third agent lies inside both zones of `pair`.
    pub pair_shared: bool,
    /// Every pair of agents shares an agent inside both their zones.
    pub universal_shared: bool,
    pub pair_violation: bool,
    pub universal_violation: bool,
}

fn shares(d: &DistanceMatrix, i: usize, k: usize, epsilon: f64) -> bool {
    (0..d.len()).any(|j| j != i && j != k && d.get(i, j) < epsilon && d.get(k, j) < epsilon)
}

/// Checks whether a shared agent in `beta_i ∩ beta_k` implies `d_xm < 2 epsilon`,
/// both for the pair attaining `d_xm` and under the all-pairs reading.
pub fn prop5_step(d: &DistanceMatrix, epsilon: f64) -> Prop5Step {
    let mut pair = None;
    let mut best = f64::NEG_INFINITY;
    for i in 0..d.len() {
        if let Some(n) = dm(d, i, epsilon) {
            if n.distance > best {
                best = n.distance;
                pair = Some((i, n.id));
            }
        }
    }
    let dxm = pair.map(|_| best);
    let pair_shared = pair.is_some_and(|(i, k)| shares(d, i, k, epsilon));
    let n = d.len();
    let universal_shared =
        n >= 3 && (0..n).all(|i| ((i + 1)..n).all(|k| shares(d, i, k, epsilon)));
    let bound_broken = dxm.is_some_and(|x| x >= 2.0 * epsilon);
    Prop5Step {
        dxm,
        pair,
        pair_shared,
        universal_shared,
        pair_violation: pair_shared && bound_broken,
        universal_violation: universal_shared && bound_broken,
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Prop5Report {
    pub steps: Vec<Prop5Step>,
    /// Step indices flagged under the per-pair reading.
    pub pair_violations: Vec<usize>,
    /// Step indices flagged under the all-pairs reading.
    pub universal_violations: Vec<usize>,
}

pub fn prop5_monitor(trace: &SimTrace, epsilon: f64) -> Result<Prop5Report> {
    let mut report = Prop5Report::default();
    for (k, r) in trace.records.iter().enumerate() {
        let s = prop5_step(&pairwise_distances(&r.positions())?, epsilon);
        if s.pair_violation {
            report.pair_violations.push(k);
        }
        if s.universal_violation {
            report.universal_violations.push(k);
        }
        report.steps.push(s);
    }
    Ok(report)
}

/// A step where `dm_i` grew while the nearest outside agent stayed the same.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DmIncrease {
    pub step: usize,
    pub agent: usize,
    pub increase: f64,
}

/// `dm_i` must not grow by more than `tol` between identity switches.
/// Needs per-agent metrics.
pub fn dm_increases(series: &MetricsSeries, tol: f64) -> Vec<DmIncrease> {
    let mut out = Vec::new();
    for w in series.steps.windows(2) {
        for (agent, (a, b)) in w[0].dm.iter().zip(&w[1].dm).enumerate() {
            if let (Some(a), Some(b)) = (a, b) {
                if a.id == b.id && b.distance > a.distance + tol {
                    out.push(DmIncrease {
                        step: w[1].step,
                        agent,
                        increase: b.distance - a.distance,
                    });
                }
            }
        }
    }
    out
}

/// Number of nearest-outside identity switches per agent. Needs per-agent metrics.
pub fn dm_switches(series: &MetricsSeries) -> Vec<usize> {
    let n = series.steps.first().map_or(0, |s| s.dm.len());
    let mut counts = vec![0; n];
    for w in series.steps.windows(2) {
        for (agent, (a, b)) in w[0].dm.iter().zip(&w[1].dm).enumerate() {
            if a.map(|x| x.id) != b.map(|x| x.id) {
                counts[agent] += 1;
            }
        }
    }
    counts
}

/// Steps (before the diameter first reaches `delta`) where it failed to
/// strictly decrease.
pub fn diameter_non_decreases(series: &MetricsSeries, delta: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for w in series.steps.windows(2) {
        if w[0].diameter <= delta {
            break;
        }
        if w[1].diameter >= w[0].diameter {
            out.push(w[1].step);
        }
    }
    out
}

/// `diameter^2 + sum |v_i|^2` per recorded step, a Lyapunov-like proxy for
/// double-integrator runs. `None` if the trace carries no velocities.
pub fn energy_proxy(trace: &SimTrace) -> Result<Option<Vec<f64>>> {
    let mut out = Vec::with_capacity(trace.records.len());
    for r in &trace.records {
        let mut kinetic = 0.0;
        for a in &r.agents {
            match a.velocity {
                Some(v) => kinetic += v.dot(&v),
                None => return Ok(None),
            }
        }
        let diam = crate::geometry::group_diameter(&r.positions())?;
        out.push(diam * diam + kinetic);
    }
    Ok(Some(out))
}

/// Indices after the first `exempt_fraction` of `series` where it increased by
/// more than `tol`.
pub fn increases_after(series: &[f64], exempt_fraction: f64, tol: f64) -> Vec<usize> {
    let start = (series.len() as f64 * exempt_fraction).ceil() as usize;
    (start.max(1)..series.len())
        .filter(|&k| series[k] > series[k - 1] + tol)
        .collect()
}
