//! Car-like (front-wheel steered) ground vehicle.
//!
//! Kinematics: `x' = v cos(theta)`, `y' = v sin(theta)`, `theta' = omega`, with
//! `v = r * wheel_speed` and `omega = (v / L_n) * tan(steering)`. The controller
//! picks wheel speed and steering so that the vehicle realizes speed
//! `K1 |Uc|` and turn rate `K2 * wrap(arg(Uc) - theta)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::rk4_step;
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Point};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UgvParams {
    pub k1: f64,
    pub k2: f64,
    /// Rear wheel radius `r`.
    pub wheel_radius: f64,
    /// Distance from the front wheel to the rear axle, `L_n`.
    pub axle_distance: f64,
    /// Steering saturation, strictly inside `(0, pi/2)`.
    pub phi_limit: f64,
}

impl Default for UgvParams {
    fn default() -> Self {
        Self {
            k1: 0.5,
            k2: 4.0,
            wheel_radius: 0.1,
            axle_distance: 0.5,
            phi_limit: 0.49 * PI,
        }
    }
}

impl UgvParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.k1) {
            return Err(Error::config("[dynamics].k1", "must be > 0"));
        }
        if !pos(self.k2) {
            return Err(Error::config("[dynamics].k2", "must be > 0"));
        }
        if !pos(self.wheel_radius) {
            return Err(Error::config("[dynamics].wheel_radius", "must be > 0"));
        }
        if !pos(self.axle_distance) {
            return Err(Error::config("[dynamics].axle_distance", "must be > 0"));
        }
        if !(pos(self.phi_limit) && self.phi_limit < PI / 2.0) {
            return Err(Error::config("[dynamics].phi_limit", "must lie in (0, pi/2)"));
        }
        Ok(())
    }
}

/// Planar pose `(x, y, theta)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn position(&self) -> Point {
        Point::xy(self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct UgvControl {
    /// Rear wheel angular speed `omega_h`.
    pub wheel_speed: f64,
    /// Front wheel steering angle `phi`.
    pub steering: f64,
}

pub fn ugv_control(uc: Point, theta: f64, params: &UgvParams) -> UgvControl {
    let speed = params.k1 * uc.norm();
    if speed == 0.0 {
        return UgvControl::default();
    }
    let turn = params.k2 * wrap_angle(uc[1].atan2(uc[0]) - theta);
    let steering = (turn * params.axle_distance / speed)
        .atan()
        .clamp(-params.phi_limit, params.phi_limit);
    UgvControl {
        wheel_speed: speed / params.wheel_radius,
        steering,
    }
}

/// Body rates `(v, omega)` produced by a control.
pub fn ugv_rates(control: &UgvControl, params: &UgvParams) -> (f64, f64) {
    let v = params.wheel_radius * control.wheel_speed;
    (v, v / params.axle_distance * control.steering.tan())
}

/// Advances the pose by `dt` with the control held constant (one RK4 step).
pub fn ugv_step(pose: Pose, control: &UgvControl, dt: f64, params: &UgvParams) -> Pose {
    let (v, omega) = ugv_rates(control, params);
    let mut y = [pose.x, pose.y, pose.theta];
    rk4_step(&mut y, dt, |s, d| {
        d[0] = v * s[2].cos();
        d[1] = v * s[2].sin();
        d[2] = omega;
        Ok(())
    })
    .expect("kinematics cannot fail");
    Pose {
        x: y[0],
        y: y[1],
        theta: y[2],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn aligned_guidance_drives_straight() {
        let p = UgvParams::default();
        let c = ugv_control(Point::xy(1.0, 0.0), 0.0, &p);
        assert!((c.wheel_speed - 5.0).abs() < 1e-12);
        assert_eq!(c.steering, 0.0);
    }

    #[test]
    fn quarter_turn_example() {
        let p = UgvParams::default();
        let c = ugv_control(Point::xy(0.0, 1.0), 0.0, &p);
        assert!((c.wheel_speed - 5.0).abs() < 1e-12);
        let expect = (2.0 * PI * 0.5 / 0.5_f64).atan();
        assert!((c.steering - expect).abs() < 1e-12);
        assert!((c.steering - 1.4129).abs() < 1e-4);
        let (v, omega) = ugv_rates(&c, &p);
        assert!((v - 0.5).abs() < 1e-12);
        assert!((omega - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn zero_guidance_stops() {
        let c = ugv_control(Point::xy(0.0, 0.0), 1.0, &UgvParams::default());
        assert_eq!(c, UgvControl::default());
    }

    #[test]
    fn straight_line_step() {
        let p = UgvParams::default();
        let c = UgvControl {
            wheel_speed: 10.0,
            steering: 0.0,
        };
        let next = ugv_step(Pose { x: 1.0, y: 2.0, theta: 0.0 }, &c, 0.1, &p);
        assert!((next.x - 1.1).abs() < 1e-12);
        assert_eq!(next.y, 2.0);
        assert_eq!(next.theta, 0.0);
    }

    #[test]
    fn no_wheel_speed_no_motion() {
        let p = UgvParams::default();
        let pose = Pose { x: 0.3, y: -1.0, theta: 0.7 };
        let c = UgvControl {
            wheel_speed: 0.0,
            steering: 1.2,
        };
        assert_eq!(ugv_step(pose, &c, 0.5, &p), pose);
    }

    #[test]
    fn arc_matches_circle() {
        // v = 1, omega = pi: analytic arc of radius 1/pi.
        let p = UgvParams::default();
        let c = UgvControl {
            wheel_speed: 10.0,
            steering: (PI * p.axle_distance).atan(),
        };
        let dt = 0.01;
        let next = ugv_step(Pose::default(), &c, dt, &p);
        let w = PI;
        assert!((next.theta - w * dt).abs() < 1e-12);
        assert!((next.x - (w * dt).sin() / w).abs() < 1e-10);
        assert!((next.y - (1.0 - (w * dt).cos()) / w).abs() < 1e-10);
    }

    #[test]
    fn steering_clamped() {
        let p = UgvParams::default();
        // tiny speed, large heading error
        let c = ugv_control(Point::xy(-1e-6, 1e-9), 0.0, &p);
        assert_eq!(c.steering.abs(), p.phi_limit);
    }

    proptest! {
        // Closed loop: the held control realizes the commanded speed and turn
        // rate whenever steering is not saturated.
        #[test]
        fn realizes_commanded_rates(x in -5.0..5.0f64, y in -5.0..5.0f64, theta in -4.0..4.0f64) {
            let p = UgvParams::default();
            let uc = Point::xy(x, y);
            prop_assume!(uc.norm() > 0.05);
            let c = ugv_control(uc, theta, &p);
            prop_assume!(c.steering.abs() < p.phi_limit);
            let (v, omega) = ugv_rates(&c, &p);
            prop_assert!((v - p.k1 * uc.norm()).abs() < 1e-12);
            let want = p.k2 * wrap_angle(y.atan2(x) - theta);
            prop_assert!((omega - want).abs() < 1e-9 * (1.0 + want.abs()));

            let dt = 1e-3;
            let next = ugv_step(Pose { x: 0.0, y: 0.0, theta }, &c, dt, &p);
            prop_assert!(((next.theta - theta) / dt - want).abs() < 1e-9 * (1.0 + want.abs()));
            let travelled = (next.x.powi(2) + next.y.powi(2)).sqrt();
            prop_assert!((travelled / dt - v).abs() < 1e-3 * (1.0 + v));
        }
    }
}
