//! Continuous-time air-velocity / tilt model and the Pitot output map.
//!
//! The state is `x = [V_a; z]`: body-frame air velocity and the gravity
//! direction expressed in the body frame. With the gyro and accelerometer
//! readings as inputs the model is linear time-varying:
//!
//! ```text
//! ẋ = A(ω) x + B_u a,    A(ω) = [[-ω×, g I], [0, -ω×]],    B_u = [I; 0]
//! y = [Bᵀ 0] x
//! ```

use nalgebra::{DVector, Dyn, OMatrix, SMatrix, SVector, U6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::so3::{skew, Mat3, Vec3};

pub type Vector6 = SVector<f64, 6>;
pub type Matrix6 = SMatrix<f64, 6, 6>;
pub type Matrix63 = SMatrix<f64, 6, 3>;
/// Output matrix with one row per Pitot channel (including the pseudo channel).
pub type OutputMatrix = OMatrix<f64, Dyn, U6>;

pub const DEFAULT_GRAVITY: f64 = 9.81;

/// Minimum airspeed (m/s) for which angle of attack and sideslip are reported.
pub const MIN_AERO_SPEED: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct State6 {
    pub air_velocity: Vec3,
    pub tilt: Vec3,
}

impl State6 {
    pub fn new(air_velocity: Vec3, tilt: Vec3) -> Self {
        Self { air_velocity, tilt }
    }

    pub fn to_vector(&self) -> Vector6 {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.air_velocity);
        v.fixed_rows_mut::<3>(3).copy_from(&self.tilt);
        v
    }

    pub fn from_vector(v: &Vector6) -> Self {
        Self {
            air_velocity: v.fixed_rows::<3>(0).into_owned(),
            tilt: v.fixed_rows::<3>(3).into_owned(),
        }
    }
}

/// Pitot probe geometry: the probe axes (columns of `B`) and whether the
/// zero-sideslip pseudo-measurement `V_a,2 = 0` is appended as an extra output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PitotConfigRepr", into = "PitotConfigRepr")]
pub struct PitotConfig {
    axes: Vec<Vec3>,
    pseudo_sideslip: bool,
}

#[derive(Serialize, Deserialize)]
struct PitotConfigRepr {
    axes: Vec<[f64; 3]>,
    #[serde(default)]
    pseudo_sideslip: bool,
}

impl TryFrom<PitotConfigRepr> for PitotConfig {
    type Error = Error;

    fn try_from(r: PitotConfigRepr) -> Result<Self> {
        Self::new(r.axes.iter().map(|a| Vec3::from(*a)).collect(), r.pseudo_sideslip)
    }
}

impl From<PitotConfig> for PitotConfigRepr {
    fn from(c: PitotConfig) -> Self {
        Self {
            axes: c.axes.iter().map(|a| [a[0], a[1], a[2]]).collect(),
            pseudo_sideslip: c.pseudo_sideslip,
        }
    }
}

impl PitotConfig {
    pub fn new(axes: Vec<Vec3>, pseudo_sideslip: bool) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::Config(format!(
                "Pitot configuration needs 1 to 3 axes, got {}",
                axes.len()
            )));
        }
        for (i, b) in axes.iter().enumerate() {
            if !b.iter().all(|c| c.is_finite()) || (b.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("Pitot axis {i} is not a unit vector")));
            }
            if axes[..i].iter().any(|other| (other - b).norm() < 1e-9) {
                return Err(Error::Config(format!("Pitot axis {i} duplicates an earlier axis")));
            }
        }
        Ok(Self {
            axes,
            pseudo_sideslip,
        })
    }

    /// Forward-aligned probe only (`B = e1`).
    pub fn single_axis() -> Self {
        Self {
            axes: vec![Vec3::x()],
            pseudo_sideslip: false,
        }
    }

    /// Forward probe plus the zero-sideslip pseudo-measurement (`B = [e1 e2]`).
    pub fn with_pseudo_sideslip() -> Self {
        Self {
            axes: vec![Vec3::x()],
            pseudo_sideslip: true,
        }
    }

    pub fn axes(&self) -> &[Vec3] {
        &self.axes
    }

    pub fn pseudo_sideslip(&self) -> bool {
        self.pseudo_sideslip
    }

    /// Number of physical probes.
    pub fn probe_count(&self) -> usize {
        self.axes.len()
    }

    /// Rows of the output matrix.
    pub fn output_dim(&self) -> usize {
        self.axes.len() + usize::from(self.pseudo_sideslip)
    }

    /// Effective probe directions, with `e2` appended for the pseudo channel.
    pub fn effective_axes(&self) -> Vec<Vec3> {
        let mut axes = self.axes.clone();
        if self.pseudo_sideslip {
            axes.push(Vec3::y());
        }
        axes
    }

    /// `B Bᵀ` over the effective axes.
    pub fn axes_gram(&self) -> Mat3 {
        self.effective_axes().iter().map(|b| b * b.transpose()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AeroAngles {
    pub airspeed: f64,
    /// Angle of attack (rad).
    pub alpha: f64,
    /// Sideslip (rad).
    pub beta: f64,
}

impl AeroAngles {
    /// Body air velocity `|V|·(cα cβ, cα sβ, sα)`.
    pub fn to_air_velocity(&self) -> Vec3 {
        let (sa, ca) = self.alpha.sin_cos();
        let (sb, cb) = self.beta.sin_cos();
        self.airspeed * Vec3::new(ca * cb, ca * sb, sa)
    }
}

pub fn a_matrix(omega: &Vec3, gravity: f64) -> Matrix6 {
    let w = -skew(omega);
    let mut a = Matrix6::zeros();
    a.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    a.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    a.fixed_view_mut::<3, 3>(0, 3).copy_from(&(Mat3::identity() * gravity));
    a
}

/// Input matrix `B_u = [I; 0]` mapping specific acceleration into the state.
pub fn input_matrix() -> Matrix63 {
    let mut b = Matrix63::zeros();
    b.fixed_view_mut::<3, 3>(0, 0).copy_from(&Mat3::identity());
    b
}

pub fn c_matrix(cfg: &PitotConfig) -> OutputMatrix {
    let axes = cfg.effective_axes();
    let mut c = OutputMatrix::zeros(axes.len());
    for (i, b) in axes.iter().enumerate() {
        c.fixed_view_mut::<1, 3>(i, 0).copy_from(&b.transpose());
    }
    c
}

/// Time derivative of the state: `(-ω×V_a + g z + a, -ω×z)`.
pub fn continuous_dynamics(x: &State6, omega: &Vec3, accel: &Vec3, gravity: f64) -> State6 {
    State6 {
        air_velocity: -omega.cross(&x.air_velocity) + gravity * x.tilt + accel,
        tilt: -omega.cross(&x.tilt),
    }
}

/// Airspeed, angle of attack and sideslip of a body air-velocity vector.
///
/// Sideslip uses `atan(V2 / V1)`, so forward flight (`V1 > MIN_AERO_SPEED`)
/// is required; anything else is reported as [`Error::DegenerateAirspeed`].
pub fn aero_angles(air_velocity: &Vec3) -> Result<AeroAngles> {
    let airspeed = air_velocity.norm();
    if !(airspeed > MIN_AERO_SPEED) {
        return Err(Error::DegenerateAirspeed {
            speed: airspeed,
            threshold: MIN_AERO_SPEED,
        });
    }
    if !(air_velocity.x > MIN_AERO_SPEED) {
        return Err(Error::DegenerateAirspeed {
            speed: air_velocity.x,
            threshold: MIN_AERO_SPEED,
        });
    }
    Ok(AeroAngles {
        airspeed,
        alpha: (air_velocity.z / airspeed).clamp(-1.0, 1.0).asin(),
        beta: (air_velocity.y / air_velocity.x).atan(),
    })
}

/// Truth-side Pitot output: `Bᵀ V_a`, followed by the constant `0` of the
/// pseudo-sideslip channel when enabled.
pub fn pitot_output(x: &State6, cfg: &PitotConfig) -> DVector<f64> {
    let mut y = DVector::zeros(cfg.output_dim());
    for (i, b) in cfg.axes().iter().enumerate() {
        y[i] = b.dot(&x.air_velocity);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{exp_so3, random_rotation};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn a_matrix_examples() {
        let a = a_matrix(&Vec3::zeros(), 9.81);
        let mut expected = Matrix6::zeros();
        expected.fixed_view_mut::<3, 3>(0, 3).fill_with_identity();
        expected *= 9.81;
        assert_eq!(a, expected);

        let a = a_matrix(&Vec3::z(), 9.81);
        assert_eq!(a.fixed_view::<3, 3>(0, 0).into_owned(), -skew(&Vec3::z()));
    }

    #[test]
    fn a_matrix_splits_into_rotation_and_gravity_parts() {
        let omega = Vec3::new(0.3, -0.1, 0.7);
        let mut rotational = Matrix6::zeros();
        rotational.fixed_view_mut::<3, 3>(0, 0).copy_from(&-skew(&omega));
        rotational.fixed_view_mut::<3, 3>(3, 3).copy_from(&-skew(&omega));
        assert_eq!(a_matrix(&omega, 9.81), rotational + a_matrix(&Vec3::zeros(), 9.81));
    }

    #[test]
    fn c_matrix_examples() {
        let c = c_matrix(&PitotConfig::single_axis());
        assert_eq!(c.nrows(), 1);
        assert_eq!(c.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

        let c = c_matrix(&PitotConfig::with_pseudo_sideslip());
        assert_eq!(c.nrows(), 2);
        assert_eq!(c.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);

        let c = c_matrix(&PitotConfig::new(vec![Vec3::z()], false).unwrap());
        assert_eq!(c.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn c_matrix_rank_matches_axes() {
        let b = Vec3::new(1.0, 1.0, 0.0).normalize();
        let cfg = PitotConfig::new(vec![Vec3::x(), b, Vec3::y()], false).unwrap();
        assert_eq!(c_matrix(&cfg).rank(1e-10), 2);
        let cfg = PitotConfig::new(vec![Vec3::x(), Vec3::z()], true).unwrap();
        assert_eq!(c_matrix(&cfg).rank(1e-10), 3);
    }

    #[test]
    fn pitot_config_validation() {
        assert!(PitotConfig::new(vec![], false).is_err());
        assert!(PitotConfig::new(vec![Vec3::new(2.0, 0.0, 0.0)], false).is_err());
        assert!(PitotConfig::new(vec![Vec3::x(), Vec3::x()], false).is_err());
        assert!(PitotConfig::new(vec![Vec3::x(), Vec3::y(), Vec3::z(), Vec3::x()], false).is_err());
    }

    #[test]
    fn dynamics_examples() {
        let g = 9.81;
        let d = continuous_dynamics(&State6::new(Vec3::new(3.0, 0.0, 1.0), Vec3::z()), &Vec3::zeros(), &Vec3::zeros(), g);
        assert_eq!(d.air_velocity, Vec3::new(0.0, 0.0, g));
        assert_eq!(d.tilt, Vec3::zeros());

        let d = continuous_dynamics(&State6::new(Vec3::zeros(), Vec3::zeros()), &Vec3::zeros(), &Vec3::x(), g);
        assert_eq!(d.air_velocity, Vec3::x());
        assert_eq!(d.tilt, Vec3::zeros());
    }

    #[test]
    fn dynamics_match_matrix_form() {
        let x = State6::new(Vec3::new(20.0, -1.0, 3.0), Vec3::new(0.1, 0.2, 0.97));
        let omega = Vec3::new(0.2, -0.4, 0.1);
        let accel = Vec3::new(0.5, 0.1, -9.7);
        let lhs = continuous_dynamics(&x, &omega, &accel, 9.81).to_vector();
        let rhs = a_matrix(&omega, 9.81) * x.to_vector() + input_matrix() * accel;
        assert_relative_eq!(lhs, rhs, epsilon = 1e-13);
    }

    #[test]
    fn gravity_block_is_rotation_invariant() {
        let abar = a_matrix(&Vec3::zeros(), 9.81);
        for seed in 0..20 {
            let phi = random_rotation(seed);
            let mut t = Matrix6::zeros();
            t.fixed_view_mut::<3, 3>(0, 0).copy_from(phi.matrix());
            t.fixed_view_mut::<3, 3>(3, 3).copy_from(phi.matrix());
            assert!((t * abar * t.transpose() - abar).norm() < 1e-12);
        }
    }

    #[test]
    fn tilt_norm_is_conserved() {
        // integrate ż = -ω×z with RK4 under a time-varying rate
        let omega = |t: f64| Vec3::new(0.4 * t.sin(), -0.3, 0.8 * (0.5 * t).cos());
        let mut z = exp_so3(&Vec3::new(0.3, 0.2, -0.1)).transpose() * Vec3::z();
        let h = 1e-3;
        let f = |t: f64, z: &Vec3| -omega(t).cross(z);
        for k in 0..5000 {
            let t = k as f64 * h;
            let k1 = f(t, &z);
            let k2 = f(t + h / 2.0, &(z + k1 * h / 2.0));
            let k3 = f(t + h / 2.0, &(z + k2 * h / 2.0));
            let k4 = f(t + h, &(z + k3 * h));
            z += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * h / 6.0;
        }
        assert!((z.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn aero_angle_examples() {
        let a = aero_angles(&Vec3::new(20.0, 0.0, 0.0)).unwrap();
        assert_eq!((a.airspeed, a.alpha, a.beta), (20.0, 0.0, 0.0));
        let a = aero_angles(&Vec3::new(1.0, 1.0, 0.0)).unwrap();
        assert_relative_eq!(a.airspeed, 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(a.alpha, 0.0);
        assert_relative_eq!(a.beta, FRAC_PI_4, epsilon = 1e-15);
    }

    #[test]
    fn aero_angles_reject_degenerate_speed() {
        assert!(matches!(aero_angles(&Vec3::zeros()), Err(Error::DegenerateAirspeed { .. })));
        assert!(matches!(aero_angles(&Vec3::new(0.1, 5.0, 0.0)), Err(Error::DegenerateAirspeed { .. })));
        assert!(matches!(aero_angles(&Vec3::new(-10.0, 0.0, 0.0)), Err(Error::DegenerateAirspeed { .. })));
    }

    #[test]
    fn aero_angles_round_trip() {
        for &speed in &[5.0, 12.5, 30.0] {
            for &alpha in &[-0.4, 0.0, 0.25] {
                for &beta in &[-0.4, 0.1, 0.4] {
                    let v = AeroAngles { airspeed: speed, alpha, beta }.to_air_velocity();
                    let back = aero_angles(&v).unwrap();
                    assert_relative_eq!(back.airspeed, speed, epsilon = 1e-10);
                    assert_relative_eq!(back.alpha, alpha, epsilon = 1e-10);
                    assert_relative_eq!(back.beta, beta, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn pitot_output_examples() {
        let x = State6::new(Vec3::new(20.8, -0.48, 5.9), Vec3::z());
        assert_eq!(pitot_output(&x, &PitotConfig::single_axis())[0], 20.8);
        let y = pitot_output(&x, &PitotConfig::with_pseudo_sideslip());
        assert_eq!(y.as_slice(), &[20.8, 0.0]);
        let zero = State6::new(Vec3::zeros(), Vec3::z());
        assert_eq!(pitot_output(&zero, &PitotConfig::single_axis()).as_slice(), &[0.0]);
    }
}
