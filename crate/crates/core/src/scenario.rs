//! Scenario description and initial layouts.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::guidance::GuidanceParams;
use crate::neighbors::GraphProvider;

/// Initial placement of the agents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitRule {
    /// Uniform in `[0, width] x [0, height]` (extra coordinates zero).
    UniformBox { width: f64, height: f64 },
    /// Evenly spaced on a circle about the origin, agent k at angle `2 pi k / N`.
    Circle { radius: f64 },
    Explicit(Vec<Point>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LeaderMotion {
    /// Constant velocity from the leader's initial position.
    Linear { velocity: Point },
    /// `x` advances at `speed`, `y` oscillates as `amplitude * sin(omega t)`.
    Sinusoidal {
        speed: f64,
        amplitude: f64,
        omega: f64,
    },
}

/// One agent whose motion is scripted instead of driven by the protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderScript {
    pub agent: usize,
    pub motion: LeaderMotion,
}

impl LeaderScript {
    pub fn position(&self, origin: Point, t: f64) -> Point {
        match &self.motion {
            LeaderMotion::Linear { velocity } => origin + *velocity * t,
            LeaderMotion::Sinusoidal {
                speed,
                amplitude,
                omega,
            } => {
                let mut p = origin;
                p[0] += speed * t;
                if p.dim() > 1 {
                    p[1] += amplitude * (omega * t).sin();
                }
                p
            }
        }
    }

    pub fn velocity(&self, dim: usize, t: f64) -> Point {
        match &self.motion {
            LeaderMotion::Linear { velocity } => *velocity,
            LeaderMotion::Sinusoidal {
                speed,
                amplitude,
                omega,
            } => {
                let mut v = Point::zero(dim);
                v[0] = *speed;
                if dim > 1 {
                    v[1] = amplitude * omega * (omega * t).cos();
                }
                v
            }
        }
    }
}

/// When a run stops.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    /// Always run to `t_max`.
    #[default]
    Horizon,
    /// Stop once the group has stayed within `delta` for `hold` time units.
    Converged { hold: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub agents: usize,
    pub dimension: usize,
    pub dynamics: Dynamics,
    pub provider: GraphProvider,
    pub guidance: GuidanceParams,
    pub dt: f64,
    pub t_max: f64,
    /// Convergence radius.
    pub delta: f64,
    /// Communication delay on information about other agents.
    pub delay: f64,
    /// Per-component control limit.
    pub saturation: Option<f64>,
    /// Constant external force on each agent (double integrator only).
    pub drift: Option<Vec<Point>>,
    pub leader: Option<LeaderScript>,
    pub init: InitRule,
    /// Initial heading per agent (UGV `theta`, UAV `psi`); zero when absent.
    pub headings: Option<Vec<f64>>,
    pub termination: Termination,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Single-integrator scenario with the library defaults.
    pub fn single(agents: usize, provider: GraphProvider, init: InitRule) -> Self {
        Self {
            agents,
            dimension: 2,
            dynamics: Dynamics::Single {
                integrator: Default::default(),
            },
            provider,
            guidance: GuidanceParams::default(),
            dt: 0.01,
            t_max: 100.0,
            delta: 0.02,
            delay: 0.0,
            saturation: None,
            drift: None,
            leader: None,
            init,
            headings: None,
            termination: Termination::Horizon,
            seed: 0,
        }
    }

    /// Delay expressed in whole steps.
    pub fn delay_steps(&self) -> usize {
        (self.delay / self.dt).round() as usize
    }

    pub fn max_steps(&self) -> usize {
        // Tolerate t_max not being an exact multiple of dt.
        (self.t_max / self.dt + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.agents;
        if n == 0 {
            return Err(Error::config("[scenario].agents", "must be >= 1"));
        }
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::config("[scenario].dimension", "must be 1, 2 or 3"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("[scenario].dt", "must be > 0"));
        }
        if !(self.t_max.is_finite() && self.t_max > self.dt) {
            return Err(Error::config("[scenario].t_max", "must exceed dt"));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::config("[scenario].delta", "must be > 0"));
        }
        if !(self.delay.is_finite() && self.delay >= 0.0) {
            return Err(Error::config("[perturbations].delay", "must be >= 0"));
        }
        self.provider.validate(n)?;
        let max_neighbors = match &self.provider {
            GraphProvider::FixedDigraph { edges } => (0..n)
                .map(|i| edges.iter().filter(|e| e.0 == i).count())
                .max()
                .unwrap_or(0),
            p => p.neighbor_limit().unwrap_or(0).min(n.saturating_sub(1)),
        };
        self.guidance.validate(max_neighbors)?;
        if let Some(c) = &self.guidance.cruise {
            if c.dim() != self.dimension {
                return Err(Error::config("[guidance].cruise", "dimension mismatch"));
            }
        }

        match &self.dynamics {
            Dynamics::Single { .. } => {}
            Dynamics::Double(p) => p.validate()?,
            Dynamics::Ugv(p) => {
                p.validate()?;
                if self.dimension != 2 {
                    return Err(Error::config("[scenario].dimension", "UGV agents are planar (2)"));
                }
            }
            Dynamics::Uav(p) => {
                p.validate()?;
                if self.dimension != 3 {
                    return Err(Error::config("[scenario].dimension", "UAV agents need 3"));
                }
            }
        }
        let point_mass = matches!(self.dynamics, Dynamics::Single { .. } | Dynamics::Double(_));

        if let Some(s) = self.saturation {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::config("[perturbations].saturation", "must be > 0"));
            }
            if !point_mass {
                return Err(Error::config(
                    "[perturbations].saturation",
                    "only supported for single and double integrators",
                ));
            }
        }
        if let Some(drift) = &self.drift {
            if !matches!(self.dynamics, Dynamics::Double(_)) {
                return Err(Error::config(
                    "[perturbations].drift",
                    "drift forces apply to double integrators only",
                ));
            }
            if drift.len() != n {
                return Err(Error::config(
                    "[perturbations].drift",
                    format!("{} vectors given for {n} agents", drift.len()),
                ));
            }
            if drift.iter().any(|d| d.dim() != self.dimension || !d.is_finite()) {
                return Err(Error::config("[perturbations].drift", "bad vector dimension"));
            }
        }
        if let Some(l) = &self.leader {
            if l.agent >= n {
                return Err(Error::config("[perturbations].leader", "agent out of range"));
            }
            if !point_mass {
                return Err(Error::config(
                    "[perturbations].leader",
                    "scripted leaders are supported for single and double integrators",
                ));
            }
            if let LeaderMotion::Linear { velocity } = &l.motion {
                if velocity.dim() != self.dimension {
                    return Err(Error::config("[perturbations].leader", "dimension mismatch"));
                }
            }
        }
        if let Some(h) = &self.headings {
            if h.len() != n || h.iter().any(|a| !a.is_finite()) {
                return Err(Error::config(
                    "[scenario].headings",
                    "need one finite heading per agent",
                ));
            }
        }
        match &self.init {
            InitRule::UniformBox { width, height } => {
                if !(*width >= 0.0 && *height >= 0.0 && width.is_finite() && height.is_finite()) {
                    return Err(Error::config("[scenario].init", "box sides must be >= 0"));
                }
            }
            InitRule::Circle { radius } => {
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::config("[scenario].init", "radius must be >= 0"));
                }
            }
            InitRule::Explicit(pts) => {
                if pts.len() != n {
                    return Err(Error::config(
                        "[scenario].positions",
                        format!("{} positions given for {n} agents", pts.len()),
                    ));
                }
                if pts.iter().any(|p| p.dim() != self.dimension) {
                    return Err(Error::config("[scenario].positions", "dimension mismatch"));
                }
            }
        }
        if let Termination::Converged { hold } = self.termination {
            if !(hold.is_finite() && hold >= 0.0) {
                return Err(Error::config("[scenario].hold", "must be >= 0"));
            }
        }
        Ok(())
    }

    /// Initial positions; the same seed always gives the same layout.
    pub fn initial_positions(&self) -> Vec<Point> {
        let dim = self.dimension;
        let n = self.agents;
        match &self.init {
            InitRule::Explicit(pts) => pts.clone(),
            InitRule::Circle { radius } => (0..n)
                .map(|k| {
                    let a = TAU * k as f64 / n as f64;
                    let mut p = Point::zero(dim);
                    p[0] = radius * a.cos();
                    if dim > 1 {
                        p[1] = radius * a.sin();
                    }
                    p
                })
                .collect(),
            InitRule::UniformBox { width, height } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..n)
                    .map(|_| {
                        let mut p = Point::zero(dim);
                        p[0] = rng.gen::<f64>() * width;
                        if dim > 1 {
                            p[1] = rng.gen::<f64>() * height;
                        }
                        p
                    })
                    .collect()
            }
        }
    }

    pub fn initial_heading(&self, i: usize) -> f64 {
        self.headings.as_ref().map_or(0.0, |h| h[i])
    }
}
