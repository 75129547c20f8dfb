//! Conversion of the single-integrator guidance signal into control for each
//! supported vehicle class, plus the fixed-step integrator they share.

pub mod double;
pub mod uav;
pub mod ugv;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Point;

pub use double::{di_control, nadf, HeavisideMode, NadfParams};
pub use uav::{
    uav_control_rate, uav_dynamics, uav_jacobians, uav_kinematics, Flight, Mat3, UavControl,
    UavParams,
};
pub use ugv::{ugv_control, ugv_rates, ugv_step, Pose, UgvControl, UgvParams};

/// Time stepping used for the single integrator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrator {
    #[default]
    Euler,
    Rk4,
}

/// Dynamics class of every agent in a scenario, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Dynamics {
    Single { integrator: Integrator },
    Double(NadfParams),
    Ugv(UgvParams),
    Uav(UavParams),
}

impl Dynamics {
    pub fn name(&self) -> &'static str {
        match self {
            Dynamics::Single { .. } => "single",
            Dynamics::Double(_) => "double",
            Dynamics::Ugv(_) => "ugv",
            Dynamics::Uav(_) => "uav",
        }
    }
}

/// Control applied by one agent during a step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ControlSignal {
    /// Single integrator: the velocity command itself.
    Velocity(Point),
    /// Double integrator acceleration.
    Acceleration(Point),
    Ugv(UgvControl),
    Uav(UavControl),
}

impl ControlSignal {
    /// Flat component list, in the order the trace CSV writes them.
    pub fn components(&self) -> Vec<f64> {
        match self {
            ControlSignal::Velocity(p) | ControlSignal::Acceleration(p) => p.coords().to_vec(),
            ControlSignal::Ugv(c) => vec![c.wheel_speed, c.steering],
            ControlSignal::Uav(c) => vec![c.thrust, c.normal, c.bank],
        }
    }
}

/// Clamps each component of `u` to `[-limit, limit]`.
pub fn saturate(u: Point, limit: f64) -> Point {
    u.map(|c| c.clamp(-limit, limit))
}

/// One classic fourth-order Runge-Kutta step of `y' = f(y)` in place.
///
/// `f` writes the derivative of its first argument into the second and may
/// fail; the first failure aborts the step and leaves `y` untouched.
pub fn rk4_step<F>(y: &mut [f64], dt: f64, mut f: F) -> Result<()>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    f(y, &mut k1)?;
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * dt * k1[i];
    }
    f(&tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * dt * k2[i];
    }
    f(&tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = y[i] + dt * k3[i];
    }
    f(&tmp, &mut k4)?;
    for i in 0..n {
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturation_examples() {
        assert_eq!(saturate(Point::xy(15.5, 12.5), 1.0), Point::xy(1.0, 1.0));
        assert_eq!(saturate(Point::xy(0.5, -0.3), 1.0), Point::xy(0.5, -0.3));
        assert_eq!(saturate(Point::xy(-2.0, 0.0), 1.0), Point::xy(-1.0, 0.0));
    }

    #[test]
    fn rk4_exponential() {
        let mut y = [1.0];
        for _ in 0..10 {
            rk4_step(&mut y, 0.1, |s, d| {
                d[0] = s[0];
                Ok(())
            })
            .unwrap();
        }
        assert!((y[0] - std::f64::consts::E).abs() < 1e-5);
    }

    #[test]
    fn rk4_harmonic_oscillator_order() {
        // x'' = -x from (1, 0); compare at t = 1 for two step sizes.
        let run = |dt: f64| {
            let mut y = [1.0, 0.0];
            let steps = (1.0 / dt).round() as usize;
            for _ in 0..steps {
                rk4_step(&mut y, dt, |s, d| {
                    d[0] = s[1];
                    d[1] = -s[0];
                    Ok(())
                })
                .unwrap();
            }
            (y[0] - 1f64.cos()).abs()
        };
        let ratio = run(0.1) / run(0.05);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }
}
