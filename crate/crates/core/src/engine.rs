//! Synchronous simulation rounds.
//!
//! Each round freezes a snapshot, selects neighbors, computes guidance and the
//! dynamics-specific control from it, then advances every agent by `dt` at
//! once. Information about *other* agents may be delayed; an agent's own state
//! is always current.

use std::collections::VecDeque;

use crate::dynamics::{
    di_control, rk4_step, saturate, uav_control_rate, uav_dynamics, uav_kinematics, ugv_control,
    ugv_step, ControlSignal, Dynamics, Flight, Integrator, Pose, UavControl,
};
use crate::error::{Error, Result};
use crate::geometry::{distance_row, pairwise_distances, DistanceMatrix, Point};
use crate::guidance::{guidance_field, guidance_velocity};
use crate::metrics::{convergence_index, ConvergenceTime, MetricsSeries, PathAccumulator, StepMetrics};
use crate::neighbors::{build_view, select_neighbors_row, NeighborView};
use crate::scenario::{ScenarioConfig, Termination};
use crate::trace::{AgentState, Event, SimTrace, StepRecord, TraceSink};

/// Past position snapshots for delayed communication.
#[derive(Clone, Debug)]
pub struct DelayBuffer {
    lag: usize,
    history: VecDeque<Vec<Point>>,
}

impl DelayBuffer {
    /// `lag` is the delay in whole steps; `initial` the positions at t = 0.
    pub fn new(lag: usize, initial: &[Point]) -> Self {
        let mut history = VecDeque::with_capacity(lag + 1);
        history.push_back(initial.to_vec());
        Self { lag, history }
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn push(&mut self, positions: &[Point]) {
        self.history.push_back(positions.to_vec());
        while self.history.len() > self.lag + 1 {
            self.history.pop_front();
        }
    }

    /// Positions `lag` steps ago, or the oldest sample while warming up.
    pub fn delayed_positions(&self) -> &[Point] {
        self.history.front().expect("buffer is never empty")
    }
}

/// Outputs of one synchronous round, computed from a frozen snapshot.
#[derive(Clone, Debug)]
pub struct Round {
    pub view: NeighborView,
    pub uc: Vec<Point>,
    pub controls: Vec<ControlSignal>,
    pub events: Vec<Event>,
}

/// A running scenario.
#[derive(Clone, Debug)]
pub struct Simulation {
    config: ScenarioConfig,
    step: usize,
    agents: Vec<AgentState>,
    origin: Vec<Point>,
    delay: DelayBuffer,
}

impl Simulation {
    /// Places the agents according to the scenario and validates it.
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let positions = config.initial_positions();
        let agents = positions
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let mut a = AgentState::at(i, p);
                match &config.dynamics {
                    Dynamics::Single { .. } => {}
                    Dynamics::Double(_) => a.velocity = Some(Point::zero(config.dimension)),
                    Dynamics::Ugv(_) => a.heading = Some(config.initial_heading(i)),
                    Dynamics::Uav(p) => {
                        a.flight = Some(Flight {
                            speed: p.initial_speed,
                            gamma: 0.0,
                            psi: config.initial_heading(i),
                        });
                        a.control = Some(UavControl::trim(p));
                    }
                }
                a
            })
            .collect();
        let delay = DelayBuffer::new(config.delay_steps(), &positions);
        Ok(Self {
            config,
            step: 0,
            agents,
            origin: positions,
            delay,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.dt
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn positions(&self) -> Vec<Point> {
        self.agents.iter().map(|a| a.position).collect()
    }

    fn is_leader(&self, i: usize) -> bool {
        self.config.leader.as_ref().is_some_and(|l| l.agent == i)
    }

    /// Neighbor selection: from the true distance matrix without delay, from
    /// each agent's own view of the delayed positions otherwise.
    fn select(&self, d: &DistanceMatrix, own: &[Point]) -> NeighborView {
        let provider = &self.config.provider;
        if self.delay.lag() == 0 {
            return build_view(provider, d);
        }
        let seen = self.delay.delayed_positions();
        NeighborView {
            lists: own
                .iter()
                .enumerate()
                .map(|(i, p)| select_neighbors_row(provider, &distance_row(p, seen), i))
                .collect(),
        }
    }

    /// Guidance for stage positions `own` with a frozen neighbor view.
    fn stage_guidance(&self, own: &[Point], view: &NeighborView) -> Vec<Point> {
        let seen = if self.delay.lag() == 0 {
            own
        } else {
            self.delay.delayed_positions()
        };
        own.iter()
            .enumerate()
            .map(|(i, p)| guidance_velocity(p, seen, view.of(i), &self.config.guidance))
            .collect()
    }

    fn limit(&self, u: Point, agent: usize, events: &mut Vec<Event>) -> Point {
        match self.config.saturation {
            Some(s) => {
                let clipped = saturate(u, s);
                if clipped != u {
                    events.push(Event::Saturation { agent });
                }
                clipped
            }
            None => u,
        }
    }

    /// Computes guidance and control from the current state without moving.
    pub fn round(&self, d: &DistanceMatrix) -> Round {
        let own = self.positions();
        let view = self.select(d, &own);
        let seen = if self.delay.lag() == 0 {
            &own[..]
        } else {
            self.delay.delayed_positions()
        };
        let field = guidance_field(&own, seen, &view, &self.config.guidance);
        let mut events: Vec<Event> = view
            .empty_agents()
            .map(|agent| Event::EmptyView { agent })
            .collect();
        let controls = self
            .agents
            .iter()
            .zip(&field.uc)
            .map(|(a, &uc)| match &self.config.dynamics {
                Dynamics::Single { .. } => ControlSignal::Velocity(self.limit(uc, a.id, &mut events)),
                Dynamics::Double(p) => {
                    let acc = di_control(uc, a.velocity.unwrap(), p);
                    ControlSignal::Acceleration(self.limit(acc, a.id, &mut events))
                }
                Dynamics::Ugv(p) => ControlSignal::Ugv(ugv_control(uc, a.heading.unwrap(), p)),
                Dynamics::Uav(_) => ControlSignal::Uav(a.control.unwrap()),
            })
            .collect();
        Round {
            view,
            uc: field.uc,
            controls,
            events,
        }
    }

    /// Applies a round computed by [`Simulation::round`] and advances `dt`.
    pub fn advance(&mut self, round: &Round) -> Result<()> {
        let dt = self.config.dt;
        let dim = self.config.dimension;
        let t = self.time();
        match self.config.dynamics.clone() {
            Dynamics::Single {
                integrator: Integrator::Euler,
            } => {
                for (a, c) in self.agents.iter_mut().zip(&round.controls) {
                    if let ControlSignal::Velocity(v) = c {
                        a.position += *v * dt;
                    }
                }
            }
            Dynamics::Single {
                integrator: Integrator::Rk4,
            } => {
                let mut y = self.pack(dim);
                rk4_step(&mut y, dt, |s, out| {
                    let pos = unpack_points(s, dim, dim, 0);
                    let uc = self.stage_guidance(&pos, &round.view);
                    let mut scratch = Vec::new();
                    for (i, u) in uc.iter().enumerate() {
                        let v = self.limit(*u, i, &mut scratch);
                        out[i * dim..(i + 1) * dim].copy_from_slice(v.coords());
                    }
                    Ok(())
                })?;
                self.unpack(&y, dim);
            }
            Dynamics::Double(p) => {
                let stride = 2 * dim;
                let mut y = self.pack(stride);
                let drift = self.config.drift.clone();
                rk4_step(&mut y, dt, |s, out| {
                    let pos = unpack_points(s, stride, dim, 0);
                    let vel = unpack_points(s, stride, dim, dim);
                    let uc = self.stage_guidance(&pos, &round.view);
                    let mut scratch = Vec::new();
                    for i in 0..pos.len() {
                        let base = i * stride;
                        out[base..base + dim].copy_from_slice(vel[i].coords());
                        let acc = if self.is_leader(i) {
                            Point::zero(dim)
                        } else {
                            let mut acc = self.limit(di_control(uc[i], vel[i], &p), i, &mut scratch);
                            if let Some(f) = &drift {
                                acc += f[i];
                            }
                            acc
                        };
                        out[base + dim..base + stride].copy_from_slice(acc.coords());
                    }
                    Ok(())
                })?;
                self.unpack(&y, stride);
            }
            Dynamics::Ugv(p) => {
                for (a, c) in self.agents.iter_mut().zip(&round.controls) {
                    let ControlSignal::Ugv(c) = c else { unreachable!() };
                    let pose = Pose {
                        x: a.position[0],
                        y: a.position[1],
                        theta: a.heading.unwrap(),
                    };
                    let next = ugv_step(pose, c, dt, &p);
                    a.position = Point::xy(next.x, next.y);
                    a.heading = Some(next.theta);
                }
            }
            Dynamics::Uav(p) => {
                const STRIDE: usize = 9;
                let mut y = self.pack(STRIDE);
                rk4_step(&mut y, dt, |s, out| {
                    let pos = unpack_points(s, STRIDE, 3, 0);
                    let uc = self.stage_guidance(&pos, &round.view);
                    for (i, uc) in uc.into_iter().enumerate() {
                        let b = i * STRIDE;
                        let f = Flight::from_array([s[b + 3], s[b + 4], s[b + 5]]);
                        let u = UavControl::from_array([s[b + 6], s[b + 7], s[b + 8]]);
                        let abort = |e: Error| Error::Aborted {
                            agent: i,
                            time: t,
                            source: Box::new(e),
                        };
                        out[b..b + 3].copy_from_slice(uav_kinematics(&f).coords());
                        out[b + 3..b + 6].copy_from_slice(&uav_dynamics(&f, &u, &p).map_err(abort)?);
                        out[b + 6..b + 9]
                            .copy_from_slice(&uav_control_rate(uc, &f, &u, &p).map_err(abort)?);
                    }
                    Ok(())
                })?;
                self.unpack(&y, STRIDE);
            }
        }
        self.step += 1;
        if let Some(leader) = self.config.leader.clone() {
            let t = self.time();
            let a = &mut self.agents[leader.agent];
            a.position = leader.position(self.origin[leader.agent], t);
            if a.velocity.is_some() {
                a.velocity = Some(leader.velocity(dim, t));
            }
        }
        let positions = self.positions();
        self.delay.push(&positions);
        Ok(())
    }

    /// Flattens agent states into `stride` reals per agent.
    fn pack(&self, stride: usize) -> Vec<f64> {
        let mut y = Vec::with_capacity(stride * self.agents.len());
        for a in &self.agents {
            let start = y.len();
            y.extend_from_slice(a.position.coords());
            if let Some(v) = a.velocity {
                y.extend_from_slice(v.coords());
            }
            if let Some(f) = a.flight {
                y.extend_from_slice(&f.to_array());
            }
            if let Some(c) = a.control {
                y.extend_from_slice(&c.to_array());
            }
            debug_assert_eq!(y.len() - start, stride);
        }
        y
    }

    fn unpack(&mut self, y: &[f64], stride: usize) {
        let dim = self.config.dimension;
        for (i, a) in self.agents.iter_mut().enumerate() {
            let s = &y[i * stride..(i + 1) * stride];
            a.position = Point::new(&s[..dim]).unwrap_or(a.position);
            let mut k = dim;
            if a.velocity.is_some() {
                a.velocity = Some(Point::new(&s[k..k + dim]).unwrap_or(a.velocity.unwrap()));
                k += dim;
            }
            if a.flight.is_some() {
                a.flight = Some(Flight::from_array([s[k], s[k + 1], s[k + 2]]));
                k += 3;
            }
            if a.control.is_some() {
                a.control = Some(UavControl::from_array([s[k], s[k + 1], s[k + 2]]));
            }
        }
    }
}

fn unpack_points(s: &[f64], stride: usize, dim: usize, offset: usize) -> Vec<Point> {
    s.chunks_exact(stride)
        .map(|c| {
            let mut p = Point::zero(dim);
            for k in 0..dim {
                p[k] = c[offset + k];
            }
            p
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Keep `dm_i` for every agent and step in the metrics series.
    pub per_agent_metrics: bool,
}

/// Epsilon used by the metrics layer for this provider.
pub fn metrics_epsilon(config: &ScenarioConfig) -> f64 {
    config.provider.epsilon().unwrap_or(0.0)
}

/// Runs a scenario, streaming every step record into `sink`.
///
/// A dynamics failure ends the run early; it is reported in
/// `summary.abort` and the series covers the steps before it.
pub fn run_with<S: TraceSink + ?Sized>(
    config: &ScenarioConfig,
    sink: &mut S,
    opts: RunOptions,
) -> Result<MetricsSeries> {
    let mut sim = Simulation::new(config.clone())?;
    let epsilon = metrics_epsilon(config);
    let max_steps = config.max_steps();
    let mut series = MetricsSeries::default();
    let mut paths = PathAccumulator::default();
    let mut last_nearest: Option<Vec<Option<usize>>> = None;
    let mut inside_since: Option<usize> = None;
    let mut abort = None;

    loop {
        let positions = sim.positions();
        let d = pairwise_distances(&positions)?;
        let mut metrics = StepMetrics::from_distances(sim.step, sim.time(), &d, epsilon, true);
        let round = sim.round(&d);

        let nearest: Vec<Option<usize>> = metrics.dm.iter().map(|n| n.map(|x| x.id)).collect();
        let mut events = Vec::new();
        if let Some(prev) = &last_nearest {
            for (agent, (from, to)) in prev.iter().zip(&nearest).enumerate() {
                if from != to {
                    events.push(Event::NeighborSwitch {
                        agent,
                        from: *from,
                        to: *to,
                    });
                }
            }
        }
        events.extend(round.events.iter().cloned());
        last_nearest = Some(nearest);

        sink.record(&StepRecord {
            step: sim.step,
            time: sim.time(),
            agents: sim.agents.clone(),
            uc: round.uc.clone(),
            controls: round.controls.clone(),
            events,
        })?;
        paths.push(&positions);

        if metrics.diameter <= config.delta {
            inside_since.get_or_insert(sim.step);
        } else {
            inside_since = None;
        }
        if !opts.per_agent_metrics {
            metrics.dm = Vec::new();
        }
        series.steps.push(metrics);

        let held = match (config.termination, inside_since) {
            (Termination::Converged { hold }, Some(k)) => {
                (sim.step - k) as f64 * config.dt >= hold - 1e-12
            }
            _ => false,
        };
        if held || sim.step >= max_steps {
            break;
        }
        match sim.advance(&round) {
            Ok(()) => {}
            Err(e @ Error::Aborted { .. }) => {
                abort = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let diam: Vec<f64> = series.diameters().collect();
    // An aborted run never counts as converged.
    let tc = convergence_index(&diam, config.delta)
        .filter(|_| abort.is_none())
        .map(|k| ConvergenceTime {
            steps: k,
            time: series.steps[k].time,
        });
    let (mean_path, path_spread) = paths.stats();
    series.summary = crate::metrics::RunSummary {
        converged: tc.is_some(),
        tc,
        initial_dxm: series.steps[0].dxm,
        max_dxm: series.steps.iter().filter_map(|s| s.dxm).reduce(f64::max),
        mean_path,
        path_spread,
        final_diameter: *diam.last().unwrap(),
        steps: series.steps.len(),
        abort,
    };
    Ok(series)
}

/// Runs a scenario and keeps the full trace and per-agent metrics in memory.
pub fn run(config: &ScenarioConfig) -> Result<(SimTrace, MetricsSeries)> {
    let mut trace = SimTrace::default();
    let metrics = run_with(
        config,
        &mut trace,
        RunOptions {
            per_agent_metrics: true,
        },
    )?;
    Ok((trace, metrics))
}

/// Runs a scenario keeping only the scalar per-step metrics.
pub fn run_metrics(config: &ScenarioConfig) -> Result<MetricsSeries> {
    run_with(config, &mut crate::trace::NullSink, RunOptions::default())
}
