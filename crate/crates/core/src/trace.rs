//! Per-step simulation records and the sinks that consume them.

use crate::dynamics::{ControlSignal, Flight, UavControl};
use crate::error::Result;
use crate::geometry::Point;

/// State of one agent. Only the fields used by the scenario's dynamics are set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub position: Point,
    /// Double integrator.
    pub velocity: Option<Point>,
    /// UGV heading.
    pub heading: Option<f64>,
    /// UAV flight vector.
    pub flight: Option<Flight>,
    /// UAV integrated control.
    pub control: Option<UavControl>,
}

impl AgentState {
    pub fn at(id: usize, position: Point) -> Self {
        Self {
            id,
            position,
            velocity: None,
            heading: None,
            flight: None,
            control: None,
        }
    }

    /// Flat state components in trace-column order.
    pub fn components(&self) -> Vec<f64> {
        let mut out = self.position.coords().to_vec();
        if let Some(v) = self.velocity {
            out.extend_from_slice(v.coords());
        }
        if let Some(h) = self.heading {
            out.push(h);
        }
        if let Some(f) = self.flight {
            out.extend_from_slice(&f.to_array());
        }
        if let Some(c) = self.control {
            out.extend_from_slice(&c.to_array());
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    /// The nearest agent outside `agent`'s priority zone changed identity.
    NeighborSwitch {
        agent: usize,
        from: Option<usize>,
        to: Option<usize>,
    },
    /// At least one control component of `agent` was clipped.
    Saturation { agent: usize },
    /// `agent` had no neighbors this round and held position.
    EmptyView { agent: usize },
}

/// Everything recorded for one step: the state at `time` and the guidance
/// and control computed from it.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub agents: Vec<AgentState>,
    pub uc: Vec<Point>,
    pub controls: Vec<ControlSignal>,
    pub events: Vec<Event>,
}

impl StepRecord {
    pub fn positions(&self) -> Vec<Point> {
        self.agents.iter().map(|a| a.position).collect()
    }
}

/// Receives each step record as the simulation produces it.
pub trait TraceSink {
    fn record(&mut self, rec: &StepRecord) -> Result<()>;
}

/// Discards records.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _rec: &StepRecord) -> Result<()> {
        Ok(())
    }
}

/// In-memory trace.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimTrace {
    pub records: Vec<StepRecord>,
}

impl SimTrace {
    pub fn events(&self) -> impl Iterator<Item = (usize, &Event)> {
        self.records
            .iter()
            .flat_map(|r| r.events.iter().map(move |e| (r.step, e)))
    }

    pub fn final_positions(&self) -> Option<Vec<Point>> {
        self.records.last().map(|r| r.positions())
    }
}

impl TraceSink for SimTrace {
    fn record(&mut self, rec: &StepRecord) -> Result<()> {
        self.records.push(rec.clone());
        Ok(())
    }
}

/// Keeps every `stride`-th record (and always the first).
pub struct Decimate<'a, S: TraceSink + ?Sized> {
    inner: &'a mut S,
    stride: usize,
}

impl<'a, S: TraceSink + ?Sized> Decimate<'a, S> {
    pub fn new(inner: &'a mut S, stride: usize) -> Self {
        Self {
            inner,
            stride: stride.max(1),
        }
    }
}

impl<S: TraceSink + ?Sized> TraceSink for Decimate<'_, S> {
    fn record(&mut self, rec: &StepRecord) -> Result<()> {
        if rec.step % self.stride == 0 {
            self.inner.record(rec)
        } else {
            Ok(())
        }
    }
}
