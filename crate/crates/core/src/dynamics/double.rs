//! Double-integrator agents driven by guidance plus linear and nonlinear
//! anisotropic damping (NADF).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// When the guidance-aligned velocity component is damped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeavisideMode {
    /// Damp the aligned component while it points along the guidance.
    AsPrinted,
    /// Damp the aligned component only while it opposes the guidance.
    #[default]
    OpposeOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NadfParams {
    /// Linear damping `b`.
    pub damping: f64,
    /// NADF gain `K_d`.
    pub gain: f64,
    /// Guidance magnitudes at or below this are treated as zero.
    pub guidance_floor: f64,
    pub heaviside: HeavisideMode,
}

impl Default for NadfParams {
    fn default() -> Self {
        Self {
            damping: 2.0,
            gain: 150.0,
            guidance_floor: 1e-9,
            heaviside: HeavisideMode::OpposeOnly,
        }
    }
}

impl NadfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping.is_finite() && self.damping >= 0.0) {
            return Err(Error::config("[dynamics].b", "must be >= 0"));
        }
        if !(self.gain.is_finite() && self.gain >= 0.0) {
            return Err(Error::config("[dynamics].kd", "must be >= 0"));
        }
        if !(self.guidance_floor.is_finite() && self.guidance_floor > 0.0) {
            return Err(Error::config("[dynamics].guidance_floor", "must be > 0"));
        }
        Ok(())
    }
}

/// Anisotropic damping direction `Un` for guidance `uc` and velocity `v`.
///
/// The component of `v` orthogonal to `uc` is always returned; the component
/// along `uc` only when the heaviside gate fires. Below the guidance floor the
/// full velocity is returned.
pub fn nadf(uc: Point, v: Point, params: &NadfParams) -> Point {
    let mag = uc.norm();
    if mag <= params.guidance_floor {
        return v;
    }
    let u = uc * (1.0 / mag);
    let along = u.dot(&v);
    let orthogonal = v - u * along;
    let gate = match params.heaviside {
        HeavisideMode::AsPrinted => along > 0.0,
        HeavisideMode::OpposeOnly => along < 0.0,
    };
    if gate {
        orthogonal + u * along
    } else {
        orthogonal
    }
}

/// Acceleration command `uc - b v - K_d Un`.
pub fn di_control(uc: Point, v: Point, params: &NadfParams) -> Point {
    uc - v * params.damping - nadf(uc, v, params) * params.gain
}
