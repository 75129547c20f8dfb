//! Fixed-wing point-mass aircraft and the Jacobian-transpose controller that
//! makes its velocity track the guidance signal.
//!
//! State: position `X` and flight vector `lambda = (v, gamma, psi)` (speed,
//! flight-path angle, heading). Controls `U = (F_T, F_N, eta)` (tangential
//! force, normal force, bank angle) are themselves integrated from the rate
//! law
//!
//! ```text
//! U' = K_u J_u^T [ K_lambda J_lambda^T (Uc - F(lambda)) - Q(lambda, U) ]
//! ```
//!
//! where `F` maps the flight vector to a world-frame velocity and `Q` is the
//! flight-vector dynamics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Row-major 3×3 matrix.
pub type Mat3 = [[f64; 3]; 3];

/// Smallest `|cos(gamma)|` accepted before the heading rate is undefined.
pub const GIMBAL_COS_MIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UavParams {
    pub mass: f64,
    pub gravity: f64,
    /// `K_u`
    pub control_gain: f64,
    /// `K_lambda`
    pub flight_gain: f64,
    /// Speeds below this abort the simulation as a stall.
    pub v_floor: f64,
    /// Initial airspeed of every aircraft (level trim).
    pub initial_speed: f64,
}

impl Default for UavParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            gravity: 9.81,
            control_gain: 20.0,
            flight_gain: 1.0,
            v_floor: 0.1,
            initial_speed: 2.0,
        }
    }
}

impl UavParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.mass) {
            return Err(Error::config("[dynamics].mass", "must be > 0"));
        }
        if !(self.gravity.is_finite() && self.gravity >= 0.0) {
            return Err(Error::config("[dynamics].gravity", "must be >= 0"));
        }
        if !pos(self.control_gain) {
            return Err(Error::config("[dynamics].ku", "must be > 0"));
        }
        if !pos(self.flight_gain) {
            return Err(Error::config("[dynamics].klambda", "must be > 0"));
        }
        if !pos(self.v_floor) {
            return Err(Error::config("[dynamics].v_floor", "must be > 0"));
        }
        if !(pos(self.initial_speed) && self.initial_speed >= self.v_floor) {
            return Err(Error::config(
                "[dynamics].initial_speed",
                "must be > 0 and at least v_floor",
            ));
        }
        Ok(())
    }
}

/// Flight vector `(v, gamma, psi)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Flight {
    pub speed: f64,
    pub gamma: f64,
    pub psi: f64,
}

impl Flight {
    pub fn to_array(self) -> [f64; 3] {
        [self.speed, self.gamma, self.psi]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self {
            speed: a[0],
            gamma: a[1],
            psi: a[2],
        }
    }
}

/// Control vector `(F_T, F_N, eta)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct UavControl {
    pub thrust: f64,
    pub normal: f64,
    pub bank: f64,
}

impl UavControl {
    /// Level-flight trim: lift balances weight, no thrust, wings level.
    pub fn trim(params: &UavParams) -> Self {
        Self {
            thrust: 0.0,
            normal: params.mass * params.gravity,
            bank: 0.0,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.thrust, self.normal, self.bank]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self {
            thrust: a[0],
            normal: a[1],
            bank: a[2],
        }
    }
}

/// World-frame velocity `F(lambda)`.
pub fn uav_kinematics(f: &Flight) -> Point {
    let (sg, cg) = f.gamma.sin_cos();
    let (sp, cp) = f.psi.sin_cos();
    Point::xyz(f.speed * cg * cp, f.speed * cg * sp, f.speed * sg)
}

fn guard(f: &Flight, params: &UavParams) -> Result<f64> {
    if !(f.speed >= params.v_floor) {
        return Err(Error::Stall {
            speed: f.speed,
            floor: params.v_floor,
        });
    }
    let cg = f.gamma.cos();
    if cg.abs() < GIMBAL_COS_MIN {
        return Err(Error::Gimbal { cos_gamma: cg });
    }
    Ok(cg)
}

/// Flight-vector rates `Q(lambda, U)`.
pub fn uav_dynamics(f: &Flight, u: &UavControl, params: &UavParams) -> Result<[f64; 3]> {
    let cg = guard(f, params)?;
    let m = params.mass;
    let g = params.gravity;
    let mv = m * f.speed;
    let (se, ce) = u.bank.sin_cos();
    Ok([
        u.thrust / m - g * f.gamma.sin(),
        (u.normal * ce - m * g * cg) / mv,
        u.normal * se / (mv * cg),
    ])
}

/// Analytic Jacobians `(J_lambda, J_u)`: `J_lambda[r][c] = dF_r / dlambda_c`
/// and `J_u[r][c] = dQ_r / dU_c`.
pub fn uav_jacobians(f: &Flight, u: &UavControl, params: &UavParams) -> Result<(Mat3, Mat3)> {
    let cg = guard(f, params)?;
    let v = f.speed;
    let sg = f.gamma.sin();
    let (sp, cp) = f.psi.sin_cos();
    let j_lambda = [
        [cg * cp, -v * sg * cp, -v * cg * sp],
        [cg * sp, -v * sg * sp, v * cg * cp],
        [sg, v * cg, 0.0],
    ];
    let mv = params.mass * v;
    let (se, ce) = u.bank.sin_cos();
    let j_u = [
        [1.0 / params.mass, 0.0, 0.0],
        [0.0, ce / mv, -u.normal * se / mv],
        [0.0, se / (mv * cg), u.normal * ce / (mv * cg)],
    ];
    Ok((j_lambda, j_u))
}

fn mul_transpose(m: &Mat3, x: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        *o = (0..3).map(|r| m[r][c] * x[r]).sum();
    }
    out
}

/// Control rate `U'` driving the aircraft velocity toward the guidance `uc`.
pub fn uav_control_rate(
    uc: Point,
    f: &Flight,
    u: &UavControl,
    params: &UavParams,
) -> Result<[f64; 3]> {
    let (j_lambda, j_u) = uav_jacobians(f, u, params)?;
    let q = uav_dynamics(f, u, params)?;
    let err = uc - uav_kinematics(f);
    let wanted = mul_transpose(&j_lambda, [err[0], err[1], err[2]]);
    let inner = [
        params.flight_gain * wanted[0] - q[0],
        params.flight_gain * wanted[1] - q[1],
        params.flight_gain * wanted[2] - q[2],
    ];
    Ok(mul_transpose(&j_u, inner).map(|c| params.control_gain * c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rk4_step;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn close(a: &Point, b: &Point) -> bool {
        (*a - *b).norm() < 1e-12
    }

    #[test]
    fn kinematics_examples() {
        let k = |v, g, p| uav_kinematics(&Flight { speed: v, gamma: g, psi: p });
        assert!(close(&k(1.0, 0.0, 0.0), &Point::xyz(1.0, 0.0, 0.0)));
        assert!(close(&k(2.0, FRAC_PI_2, 0.0), &Point::xyz(0.0, 0.0, 2.0)));
        let h = 2f64.sqrt() / 2.0;
        assert!(close(&k(1.0, 0.0, FRAC_PI_4), &Point::xyz(h, h, 0.0)));
    }

    #[test]
    fn level_trim_is_equilibrium() {
        let p = UavParams::default();
        let f = Flight { speed: 3.0, gamma: 0.0, psi: 0.4 };
        assert_eq!(uav_dynamics(&f, &UavControl::trim(&p), &p).unwrap(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn banked_turn_rates() {
        let p = UavParams::default();
        let k = 1.7;
        let v = 4.0;
        let f = Flight { speed: v, gamma: 0.0, psi: 0.0 };
        let u = UavControl {
            thrust: 0.0,
            normal: p.mass * p.gravity * k,
            bank: FRAC_PI_2,
        };
        let q = uav_dynamics(&f, &u, &p).unwrap();
        assert!((q[2] - p.gravity * k / v).abs() < 1e-12);
        assert!((q[1] + p.gravity / v).abs() < 1e-12);
    }

    #[test]
    fn vertical_thrust_balances_gravity() {
        let p = UavParams::default();
        let f = Flight { speed: 2.0, gamma: FRAC_PI_2, psi: 0.0 };
        let u = UavControl {
            thrust: p.mass * p.gravity,
            normal: 0.0,
            bank: 0.0,
        };
        // exactly vertical is a gimbal singularity for the heading rate
        assert!(matches!(uav_dynamics(&f, &u, &p), Err(Error::Gimbal { .. })));
        let near = Flight { gamma: FRAC_PI_2 - 1e-6, ..f };
        assert!(uav_dynamics(&near, &u, &p).unwrap()[0].abs() < 1e-10);
    }

    #[test]
    fn stall_guard() {
        let p = UavParams::default();
        let f = Flight { speed: p.v_floor / 2.0, gamma: 0.0, psi: 0.0 };
        assert!(matches!(
            uav_dynamics(&f, &UavControl::trim(&p), &p),
            Err(Error::Stall { .. })
        ));
    }

    #[test]
    fn level_jacobian_by_hand() {
        let p = UavParams::default();
        let f = Flight { speed: 1.0, gamma: 0.0, psi: 0.0 };
        let (jl, ju) = uav_jacobians(&f, &UavControl::trim(&p), &p).unwrap();
        let want = [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        for r in 0..3 {
            for c in 0..3 {
                assert!((jl[r][c] - want[r][c]).abs() < 1e-15, "J_lambda[{r}][{c}]");
            }
        }
        assert_eq!(ju[0], [1.0 / p.mass, 0.0, 0.0]);
    }

    fn central_jacobian(f: impl Fn([f64; 3]) -> [f64; 3], x: [f64; 3], h: f64) -> Mat3 {
        let mut j = [[0.0; 3]; 3];
        for c in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let (fp, fm) = (f(xp), f(xm));
            for r in 0..3 {
                j[r][c] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        j
    }

    fn rel_err(a: &Mat3, b: &Mat3) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..3 {
            for c in 0..3 {
                let scale = a[r][c].abs().max(b[r][c].abs()).max(1.0);
                worst = worst.max((a[r][c] - b[r][c]).abs() / scale);
            }
        }
        worst
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let p = UavParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let f = Flight {
                speed: rng.gen_range(0.5..20.0),
                gamma: rng.gen_range(-1.2..1.2),
                psi: rng.gen_range(-3.1..3.1),
            };
            let u = UavControl {
                thrust: rng.gen_range(-20.0..20.0),
                normal: rng.gen_range(-30.0..30.0),
                bank: rng.gen_range(-1.5..1.5),
            };
            let (jl, ju) = uav_jacobians(&f, &u, &p).unwrap();
            let fd_l = central_jacobian(
                |x| {
                    let v = uav_kinematics(&Flight::from_array(x));
                    [v[0], v[1], v[2]]
                },
                f.to_array(),
                1e-6,
            );
            let fd_u = central_jacobian(
                |x| uav_dynamics(&f, &UavControl::from_array(x), &p).unwrap(),
                u.to_array(),
                1e-6,
            );
            assert!(rel_err(&jl, &fd_l) < 1e-5, "J_lambda at {f:?}");
            assert!(rel_err(&ju, &fd_u) < 1e-5, "J_u at {f:?} {u:?}");
        }
    }

    #[test]
    fn control_rate_fixed_point_and_gain_gate() {
        let p = UavParams::default();
        let f = Flight { speed: 3.0, gamma: 0.1, psi: -0.5 };
        let trim_climb = UavControl {
            thrust: p.mass * p.gravity * f.gamma.sin(),
            normal: p.mass * p.gravity * f.gamma.cos(),
            bank: 0.0,
        };
        let rate = uav_control_rate(uav_kinematics(&f), &f, &trim_climb, &p).unwrap();
        assert!(rate.iter().all(|r| r.abs() < 1e-12), "{rate:?}");

        let off = UavParams {
            control_gain: 0.0,
            ..p
        };
        let rate = uav_control_rate(Point::xyz(5.0, -3.0, 1.0), &f, &trim_climb, &off).unwrap();
        assert_eq!(rate, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn velocity_converges_to_constant_guidance() {
        // Single aircraft, constant guidance: |Uc - X'| must shrink.
        let p = UavParams::default();
        let uc = Point::xyz(1.5, 1.0, 0.2);
        let mut y = [2.0, 0.0, 0.0, 0.0, p.mass * p.gravity, 0.0];
        let err = |y: &[f64]| (uc - uav_kinematics(&Flight::from_array([y[0], y[1], y[2]]))).norm();
        let start = err(&y);
        for _ in 0..5000 {
            rk4_step(&mut y, 0.002, |s, d| {
                let f = Flight::from_array([s[0], s[1], s[2]]);
                let u = UavControl::from_array([s[3], s[4], s[5]]);
                d[..3].copy_from_slice(&uav_dynamics(&f, &u, &p)?);
                d[3..].copy_from_slice(&uav_control_rate(uc, &f, &u, &p)?);
                Ok(())
            })
            .unwrap();
        }
        assert!(err(&y) < 0.05 * start, "start {start} end {}", err(&y));
    }
}
