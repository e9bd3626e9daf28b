//! Continuous-discrete Riccati (Kalman) filter for the air-velocity / tilt state.
//!
//! Prediction runs once per IMU sample using the Rodrigues-based first-order
//! discretization; the measurement update runs whenever Pitot data arrives.

use nalgebra::{DMatrix, DVector, Dyn, OMatrix, U6};

use crate::error::{Error, Result};
use crate::model::{a_matrix, c_matrix, input_matrix, Matrix6, Matrix63, OutputMatrix, PitotConfig, State6, Vector6};
use crate::so3::{exp_so3, Mat3, RotationMatrix, Vec3};

/// Gain matrix, 6 × m.
pub type GainMatrix = OMatrix<f64, U6, Dyn>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiccatiState {
    pub estimate: State6,
    pub covariance: Matrix6,
}

/// Process covariance `S` (continuous time) and measurement covariance `Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseConfig {
    pub process: Matrix6,
    pub measurement: DMatrix<f64>,
}

impl NoiseConfig {
    pub fn new(process: Matrix6, measurement: DMatrix<f64>) -> Result<Self> {
        if !is_spd(&DMatrix::from_iterator(6, 6, process.iter().copied())) {
            return Err(Error::Config("process covariance S must be symmetric positive definite".into()));
        }
        if !measurement.is_square() || !is_spd(&measurement) {
            return Err(Error::Config("measurement covariance Q must be symmetric positive definite".into()));
        }
        Ok(Self {
            process,
            measurement,
        })
    }
}

fn is_spd(m: &DMatrix<f64>) -> bool {
    m.is_square()
        && m.iter().all(|v| v.is_finite())
        && (m - m.transpose()).norm() <= 1e-12 * m.norm().max(1.0)
        && m.clone().cholesky().is_some()
}

/// How the posterior covariance is formed after a measurement update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceUpdate {
    /// `(I − KC) P`, then symmetrized.
    #[default]
    Standard,
    /// `(I − KC) P (I − KC)ᵀ + K Q Kᵀ`, then symmetrized.
    Joseph,
}

/// Output map and measurement covariance for one Pitot configuration.
#[derive(Clone, Debug)]
pub struct MeasurementModel {
    pitot: PitotConfig,
    output: OutputMatrix,
    covariance: DMatrix<f64>,
}

impl MeasurementModel {
    pub fn new(pitot: PitotConfig, covariance: DMatrix<f64>) -> Result<Self> {
        let m = pitot.output_dim();
        if covariance.shape() != (m, m) {
            return Err(Error::Config(format!(
                "measurement covariance is {}x{}, expected {m}x{m}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if !is_spd(&covariance) {
            return Err(Error::Config("measurement covariance Q must be symmetric positive definite".into()));
        }
        Ok(Self {
            output: c_matrix(&pitot),
            pitot,
            covariance,
        })
    }

    /// Diagonal `Q`: every probe shares `probe_variance`, the pseudo channel gets `pseudo_variance`.
    pub fn diagonal(pitot: PitotConfig, probe_variance: f64, pseudo_variance: f64) -> Result<Self> {
        let mut q = vec![probe_variance; pitot.probe_count()];
        if pitot.pseudo_sideslip() {
            q.push(pseudo_variance);
        }
        Self::new(pitot, DMatrix::from_diagonal(&DVector::from_vec(q)))
    }

    pub fn pitot(&self) -> &PitotConfig {
        &self.pitot
    }

    pub fn output_matrix(&self) -> &OutputMatrix {
        &self.output
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Measurement vector fed to the filter: probe readings followed by the
    /// zero pseudo-measurement when enabled.
    pub fn measurement(&self, probes: &[f64]) -> Result<DVector<f64>> {
        if probes.len() != self.pitot.probe_count() {
            return Err(Error::Config(format!(
                "expected {} Pitot readings, got {}",
                self.pitot.probe_count(),
                probes.len()
            )));
        }
        let mut y = DVector::zeros(self.pitot.output_dim());
        y.rows_mut(0, probes.len()).copy_from_slice(probes);
        Ok(y)
    }
}

/// Discrete transition, input and process-noise matrices for one IMU step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Discretization {
    pub transition: Matrix6,
    pub input: Matrix63,
    pub process_noise: Matrix6,
}

/// Incremental body-frame rotation over one step, solving `φ̇ = -ω× φ`, `φ(0) = I`.
pub fn phi11(omega: &Vec3, ts: f64) -> RotationMatrix {
    exp_so3(&(-omega * ts))
}

pub fn discretize(omega: &Vec3, ts: f64, gravity: f64, process: &Matrix6) -> Discretization {
    let phi = phi11(omega, ts).into_inner();
    let mut transition = Matrix6::zeros();
    transition.fixed_view_mut::<3, 3>(0, 0).copy_from(&phi);
    transition.fixed_view_mut::<3, 3>(3, 3).copy_from(&phi);
    transition
        .fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(Mat3::identity() * (gravity * ts)));
    let mut input = Matrix63::zeros();
    input
        .fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(Mat3::identity() * ts));
    Discretization {
        transition,
        input,
        process_noise: process * ts,
    }
}

pub fn symmetrize(p: &Matrix6) -> Matrix6 {
    0.5 * (p + p.transpose())
}

/// Errors if `P` has a min eigenvalue below `-1e-8 · trace(P)`.
pub fn check_covariance(p: &Matrix6) -> Result<()> {
    let trace = p.trace();
    let min_eigenvalue = p.symmetric_eigenvalues().min();
    if !min_eigenvalue.is_finite() || min_eigenvalue < -1e-8 * trace.abs() {
        return Err(Error::NumericalFailure {
            min_eigenvalue,
            trace,
        });
    }
    Ok(())
}

/// Continuous-time gain `K = P Cᵀ Q⁻¹`.
pub fn gain_continuous(p: &Matrix6, cfg: &PitotConfig, q: &DMatrix<f64>) -> Result<GainMatrix> {
    let c = c_matrix(cfg);
    let q_inv = q
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Config("measurement covariance is singular".into()))?;
    Ok(p * c.transpose() * q_inv)
}

/// Right-hand side of the Riccati equation `AP + PAᵀ − PCᵀQ⁻¹CP + S`.
pub fn riccati_derivative(
    p: &Matrix6,
    omega: &Vec3,
    gravity: f64,
    model: &MeasurementModel,
    process: &Matrix6,
) -> Result<Matrix6> {
    let a = a_matrix(omega, gravity);
    let k = gain_continuous(p, model.pitot(), model.covariance())?;
    Ok(a * p + p * a.transpose() - k * model.output_matrix() * p + process)
}

impl RiccatiState {
    pub fn new(estimate: State6, covariance: Matrix6) -> Self {
        Self {
            estimate,
            covariance,
        }
    }

    /// Time update: `x̂⁺ = A_d x̂ + B_ud a`, `P⁺ = A_d P A_dᵀ + S Ts`.
    pub fn predict(&self, omega: &Vec3, accel: &Vec3, ts: f64, gravity: f64, process: &Matrix6) -> Self {
        let d = discretize(omega, ts, gravity, process);
        let x = d.transition * self.estimate.to_vector() + d.input * accel;
        let p = d.transition * self.covariance * d.transition.transpose() + d.process_noise;
        Self {
            estimate: State6::from_vector(&x),
            covariance: p,
        }
    }

    /// Measurement update with the full measurement vector `y` (pseudo channel included).
    pub fn update(&self, y: &DVector<f64>, model: &MeasurementModel, form: CovarianceUpdate) -> Result<Self> {
        let c = model.output_matrix();
        if y.len() != c.nrows() {
            return Err(Error::Config(format!(
                "measurement has {} entries, output matrix has {} rows",
                y.len(),
                c.nrows()
            )));
        }
        let p = &self.covariance;
        let innovation_cov = c * p * c.transpose() + model.covariance();
        let inv = innovation_cov.try_inverse().ok_or(Error::NumericalFailure {
            min_eigenvalue: 0.0,
            trace: p.trace(),
        })?;
        let k: GainMatrix = p * c.transpose() * inv;
        let x = self.estimate.to_vector();
        let x = x + &k * (y - c * x);
        let i_kc = Matrix6::identity() - &k * c;
        let p_new = match form {
            CovarianceUpdate::Standard => i_kc * p,
            CovarianceUpdate::Joseph => {
                i_kc * p * i_kc.transpose() + &k * model.covariance() * k.transpose()
            }
        };
        let p_new = symmetrize(&p_new);
        check_covariance(&p_new)?;
        Ok(Self {
            estimate: State6::from_vector(&Vector6::from(x)),
            covariance: p_new,
        })
    }

    /// One RK4 step of the continuous-time observer and Riccati equation with
    /// inputs held constant over `dt`.
    pub fn continuous_step(
        &self,
        omega: &Vec3,
        accel: &Vec3,
        y: &DVector<f64>,
        model: &MeasurementModel,
        process: &Matrix6,
        gravity: f64,
        dt: f64,
    ) -> Result<Self> {
        let a = a_matrix(omega, gravity);
        let c = model.output_matrix();
        let f = |x: &Vector6, p: &Matrix6| -> Result<(Vector6, Matrix6)> {
            let k = gain_continuous(p, model.pitot(), model.covariance())?;
            let dx = a * x + input_matrix() * accel + k.clone() * (y - c * x);
            let dp = a * p + p * a.transpose() - k * c * p + process;
            Ok((dx, dp))
        };
        let x0 = self.estimate.to_vector();
        let p0 = self.covariance;
        let (k1x, k1p) = f(&x0, &p0)?;
        let (k2x, k2p) = f(&(x0 + k1x * dt / 2.0), &(p0 + k1p * dt / 2.0))?;
        let (k3x, k3p) = f(&(x0 + k2x * dt / 2.0), &(p0 + k2p * dt / 2.0))?;
        let (k4x, k4p) = f(&(x0 + k3x * dt), &(p0 + k3p * dt))?;
        let x = x0 + (k1x + 2.0 * k2x + 2.0 * k3x + k4x) * dt / 6.0;
        let p = symmetrize(&(p0 + (k1p + 2.0 * k2p + 2.0 * k3p + k4p) * dt / 6.0));
        Ok(Self {
            estimate: State6::from_vector(&x),
            covariance: p,
        })
    }
}
