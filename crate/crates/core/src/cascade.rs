//! End-to-end cascade: Riccati air-velocity / tilt filter feeding the SO(3)
//! attitude observer, driven by a multi-rate sensor stream.
//!
//! Step `k` covers `[t_k, t_{k+1})` between consecutive IMU samples:
//!
//! 1. predict the Riccati state with `a_k`, `ω_k`;
//! 2. if a Pitot sample falls in `(t_k, t_{k+1}]`, update with the latest one;
//! 3. symmetrize `P`;
//! 4. if a magnetometer sample falls in `[t_k, t_{k+1})`, recompute and hold the
//!    magnetometer innovation using `R̂_k`, `ẑ_k`;
//! 5. step the attitude with the tilt innovation plus the held magnetometer term.
//!
//! One [`EstimatorOutput`] is emitted per IMU sample, holding the state at `t_k`.

use serde::{Deserialize, Serialize};

use crate::attitude::{self, AttitudeGains, AttitudeState};
use crate::error::{Error, Result};
use crate::model::{aero_angles, AeroAngles, Matrix6, PitotConfig, State6, Vector6, DEFAULT_GRAVITY};
use crate::riccati::{CovarianceUpdate, MeasurementModel, NoiseConfig, RiccatiState};
use crate::series::Series;
use crate::so3::{attitude_error, from_euler_zyx, orthonormality_error, orthonormalize, RotationMatrix, Vec3, ROTATION_TOL};

#[derive(Clone, Debug, PartialEq)]
pub enum SensorSample {
    /// Specific acceleration (m/s²) and angular rate (rad/s).
    Imu { t: f64, accel: Vec3, gyro: Vec3 },
    /// One reading per physical probe (m/s).
    Pitot { t: f64, values: Vec<f64> },
    /// Unit magnetic direction in the body frame, optionally paired with the
    /// inertial reference direction valid at that instant.
    Mag { t: f64, body: Vec3, inertial: Option<Vec3> },
}

impl SensorSample {
    pub fn time(&self) -> f64 {
        match self {
            SensorSample::Imu { t, .. } | SensorSample::Pitot { t, .. } | SensorSample::Mag { t, .. } => *t,
        }
    }
}

/// Reference attitude and body air velocity, e.g. simulator truth or an onboard estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceSample {
    pub rotation: RotationMatrix,
    pub air_velocity: Vec3,
}

impl ReferenceSample {
    pub fn tilt(&self) -> Vec3 {
        self.rotation.transpose() * Vec3::z()
    }
}

pub type ReferenceTrace = Series<ReferenceSample>;

#[derive(Clone, Debug, PartialEq)]
pub struct ObserverConfig {
    pub gravity: f64,
    /// IMU sampling period (s).
    pub imu_period: f64,
    pub pitot: PitotConfig,
    /// Variance of each physical Pitot channel ((m/s)²).
    pub pitot_variance: f64,
    /// Variance assigned to the zero-sideslip pseudo-measurement.
    pub pseudo_variance: f64,
    /// Continuous-time process covariance `S`.
    pub process_noise: Matrix6,
    pub initial_covariance: Matrix6,
    pub gains: AttitudeGains,
    pub covariance_update: CovarianceUpdate,
    /// Inertial magnetic direction used when a sample carries none.
    pub mag_inertial: Vec3,
    /// When false the attitude stage is frozen at its initial value.
    pub attitude_enabled: bool,
    /// Samples earlier than this are ignored.
    pub start_time: Option<f64>,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        let pitot_variance = 1e-3;
        Self {
            gravity: DEFAULT_GRAVITY,
            imu_period: 1.0 / 250.0,
            pitot: PitotConfig::with_pseudo_sideslip(),
            pitot_variance,
            pseudo_variance: 10.0 * pitot_variance,
            process_noise: Matrix6::from_diagonal(&Vector6::from_row_slice(&[0.02, 0.01, 0.01, 1e-4, 1e-4, 1e-4])),
            initial_covariance: Matrix6::from_diagonal(&Vector6::from_row_slice(&[116.6, 6.15, 3.3, 0.6, 0.6, 0.6])),
            gains: AttitudeGains::default(),
            covariance_update: CovarianceUpdate::Standard,
            mag_inertial: Vec3::new(1.0, 0.0, 1.0).normalize(),
            attitude_enabled: true,
            start_time: None,
        }
    }
}

impl ObserverConfig {
    /// Forward probe only, `Q = σ²`.
    pub fn single_axis() -> Self {
        Self {
            pitot: PitotConfig::single_axis(),
            ..Self::default()
        }
    }

    pub fn measurement_model(&self) -> Result<MeasurementModel> {
        MeasurementModel::diagonal(self.pitot.clone(), self.pitot_variance, self.pseudo_variance)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.imu_period > 0.0 && self.imu_period.is_finite()) {
            return Err(Error::Config("IMU period must be positive".into()));
        }
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            return Err(Error::Config("gravity must be positive".into()));
        }
        AttitudeGains::new(self.gains.k_z, self.gains.k_m)?;
        let model = self.measurement_model()?;
        NoiseConfig::new(self.process_noise, model.covariance().clone())?;
        NoiseConfig::new(self.initial_covariance, model.covariance().clone())
            .map_err(|_| Error::Config("initial covariance must be symmetric positive definite".into()))?;
        if !self.mag_inertial.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("inertial magnetic field must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialConditions {
    pub air_velocity: Vec3,
    /// Defaults to `R̂(0)ᵀ e3` when absent.
    pub tilt: Option<Vec3>,
    pub rotation: RotationMatrix,
}

impl Default for InitialConditions {
    /// `V̂_a = (10, 2, 0.3)` m/s and yaw π/6, pitch −π/18, roll π/9.
    fn default() -> Self {
        use std::f64::consts::PI;
        Self {
            air_velocity: Vec3::new(10.0, 2.0, 0.3),
            tilt: None,
            rotation: from_euler_zyx(PI / 6.0, -PI / 18.0, PI / 9.0),
        }
    }
}

impl InitialConditions {
    pub fn tilt(&self) -> Vec3 {
        self.tilt
            .unwrap_or_else(|| self.rotation.transpose() * Vec3::z())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorOutput {
    pub t: f64,
    pub air_velocity: Vec3,
    pub tilt: Vec3,
    pub rotation: RotationMatrix,
    pub aero: Option<AeroAngles>,
    pub covariance: Matrix6,
}

impl EstimatorOutput {
    pub fn covariance_diagonal(&self) -> [f64; 6] {
        std::array::from_fn(|i| self.covariance[(i, i)])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub outputs: Vec<EstimatorOutput>,
    /// False when no magnetometer sample was available in the first step,
    /// in which case the magnetometer innovation started at zero.
    pub mag_at_start: bool,
    pub pitot_updates: usize,
    pub mag_updates: usize,
}

struct Imu {
    t: f64,
    accel: Vec3,
    gyro: Vec3,
}

fn check_order(stream: &[SensorSample]) -> Result<()> {
    for w in stream.windows(2) {
        let (a, b) = (w[0].time(), w[1].time());
        if !(b >= a) {
            return Err(Error::StreamOrder { t: b, previous: a });
        }
    }
    Ok(())
}

/// Runs the cascade over a time-sorted sensor stream.
pub fn run(stream: &[SensorSample], config: &ObserverConfig, init: &InitialConditions) -> Result<RunOutput> {
    config.validate()?;
    check_order(stream)?;
    let model = config.measurement_model()?;
    let start = config.start_time.unwrap_or(f64::NEG_INFINITY);
    let ts = config.imu_period;

    let mut imu = Vec::new();
    let mut pitot: Vec<(f64, &[f64])> = Vec::new();
    let mut mag: Vec<(f64, Vec3, Vec3)> = Vec::new();
    for sample in stream.iter().filter(|s| s.time() >= start) {
        match sample {
            SensorSample::Imu { t, accel, gyro } => imu.push(Imu {
                t: *t,
                accel: *accel,
                gyro: *gyro,
            }),
            SensorSample::Pitot { t, values } => pitot.push((*t, values)),
            SensorSample::Mag { t, body, inertial } => mag.push((*t, *body, inertial.unwrap_or(config.mag_inertial))),
        }
    }
    if let Some(w) = imu.windows(2).find(|w| !(w[1].t > w[0].t)) {
        return Err(Error::StreamOrder {
            t: w[1].t,
            previous: w[0].t,
        });
    }

    let mut filter = RiccatiState::new(State6::new(init.air_velocity, init.tilt()), config.initial_covariance);
    let mut att = AttitudeState::new(init.rotation);
    let mut outputs = Vec::with_capacity(imu.len());
    let (mut next_pitot, mut next_mag) = (0, 0);
    let mut mag_at_start = false;
    let (mut pitot_updates, mut mag_updates) = (0, 0);

    for (k, sample) in imu.iter().enumerate() {
        let t_next = imu.get(k + 1).map_or(sample.t + ts, |s| s.t);
        outputs.push(EstimatorOutput {
            t: sample.t,
            air_velocity: filter.estimate.air_velocity,
            tilt: filter.estimate.tilt,
            rotation: att.rotation,
            aero: aero_angles(&filter.estimate.air_velocity).ok(),
            covariance: filter.covariance,
        });
        let tilt_k = filter.estimate.tilt;

        filter = filter.predict(&sample.gyro, &sample.accel, ts, config.gravity, &config.process_noise);

        let mut latest_pitot = None;
        while next_pitot < pitot.len() && pitot[next_pitot].0 <= t_next {
            if pitot[next_pitot].0 > sample.t {
                latest_pitot = Some(pitot[next_pitot].1);
            }
            next_pitot += 1;
        }
        if let Some(values) = latest_pitot {
            let y = model.measurement(values)?;
            filter = filter.update(&y, &model, config.covariance_update)?;
            pitot_updates += 1;
        }
        filter.covariance = crate::riccati::symmetrize(&filter.covariance);

        let mut latest_mag = None;
        while next_mag < mag.len() && mag[next_mag].0 < t_next {
            if mag[next_mag].0 >= sample.t {
                latest_mag = Some((mag[next_mag].1, mag[next_mag].2));
            }
            next_mag += 1;
        }
        if let Some((body, inertial)) = latest_mag {
            att.mag_correction = attitude::mag_correction(&att.rotation, &tilt_k, &body, &inertial, config.gains.k_m);
            mag_updates += 1;
            if k == 0 {
                mag_at_start = true;
            }
        }

        if config.attitude_enabled {
            let sigma = attitude::tilt_correction(&att.rotation, &tilt_k, config.gains.k_z) + att.mag_correction;
            att = attitude::step(&att, &sample.gyro, &sigma, ts);
            if orthonormality_error(att.rotation.matrix()) > ROTATION_TOL {
                att.rotation = orthonormalize(att.rotation.matrix());
            }
        }
    }

    Ok(RunOutput {
        outputs,
        mag_at_start,
        pitot_updates,
        mag_updates,
    })
}

/// Replaces each magnetometer sample's inertial direction with `R̄(t) m_B`
/// from the reference attitude.
pub fn reconstruct_inertial_field(stream: &mut [SensorSample], reference: &ReferenceTrace) {
    for sample in stream.iter_mut() {
        if let SensorSample::Mag { t, body, inertial } = sample {
            let r = reference.values()[reference.nearest(*t)].rotation;
            *inertial = Some(r * *body);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub t: f64,
    /// `|V̄_a − V̂_a|` (m/s).
    pub air_vel_err: f64,
    /// `|z̄ − ẑ|`.
    pub tilt_err: f64,
    /// `trace(I − R̂ R̄ᵀ)`.
    pub att_err: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub samples: usize,
    pub air_vel_rmse: f64,
    pub tilt_rmse: f64,
    pub att_rmse: f64,
    pub final_air_vel_err: f64,
    pub final_tilt_err: f64,
    pub final_att_err: f64,
}

impl ErrorSummary {
    pub fn from_metrics(metrics: &[ErrorMetrics]) -> Self {
        let n = metrics.len();
        if n == 0 {
            return Self::default();
        }
        let rms = |f: fn(&ErrorMetrics) -> f64| (metrics.iter().map(|m| f(m).powi(2)).sum::<f64>() / n as f64).sqrt();
        let last = metrics[n - 1];
        Self {
            samples: n,
            air_vel_rmse: rms(|m| m.air_vel_err),
            tilt_rmse: rms(|m| m.tilt_err),
            att_rmse: rms(|m| m.att_err),
            final_air_vel_err: last.air_vel_err,
            final_tilt_err: last.tilt_err,
            final_att_err: last.att_err,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub metrics: Vec<ErrorMetrics>,
    pub summary: ErrorSummary,
}

impl Evaluation {
    /// Summary restricted to samples at or after `t_from`.
    pub fn summary_after(&self, t_from: f64) -> ErrorSummary {
        let start = self.metrics.partition_point(|m| m.t < t_from);
        ErrorSummary::from_metrics(&self.metrics[start..])
    }

    /// Earliest time after which `metric` stays below `threshold` for good.
    pub fn convergence_time(&self, metric: fn(&ErrorMetrics) -> f64, threshold: f64) -> Option<f64> {
        let last_bad = self.metrics.iter().rposition(|m| !(metric(m) < threshold));
        match last_bad {
            None => self.metrics.first().map(|m| m.t),
            Some(i) => self.metrics.get(i + 1).map(|m| m.t),
        }
    }
}

/// Compares estimates against a reference, pairing each output with the
/// nearest reference sample within `max_offset` seconds.
pub fn evaluate(outputs: &[EstimatorOutput], reference: &ReferenceTrace, max_offset: f64) -> Result<Evaluation> {
    let mut metrics = Vec::with_capacity(outputs.len());
    for out in outputs {
        let i = reference.nearest(out.t);
        if (reference.times()[i] - out.t).abs() > max_offset {
            continue;
        }
        let r = &reference.values()[i];
        metrics.push(ErrorMetrics {
            t: out.t,
            air_vel_err: (r.air_velocity - out.air_velocity).norm(),
            tilt_err: (r.tilt() - out.tilt).norm(),
            att_err: attitude_error(&out.rotation, &r.rotation),
        });
    }
    let coverage = if outputs.is_empty() {
        0.0
    } else {
        100.0 * metrics.len() as f64 / outputs.len() as f64
    };
    if coverage < 99.0 {
        return Err(Error::Alignment { coverage });
    }
    let summary = ErrorSummary::from_metrics(&metrics);
    Ok(Evaluation { metrics, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::exp_so3;
    use nalgebra::Matrix3;

    fn level_stream(n: usize, ts: f64, with_pitot: bool) -> Vec<SensorSample> {
        let g = DEFAULT_GRAVITY;
        let mut out = Vec::new();
        for k in 0..n {
            let t = k as f64 * ts;
            out.push(SensorSample::Imu {
                t,
                accel: Vec3::new(0.0, 0.0, -g),
                gyro: Vec3::zeros(),
            });
            if with_pitot && k % 5 == 0 {
                out.push(SensorSample::Pitot { t, values: vec![20.0] });
            }
            if k % 25 == 0 {
                out.push(SensorSample::Mag {
                    t,
                    body: Vec3::new(1.0, 0.0, 1.0).normalize(),
                    inertial: None,
                });
            }
        }
        out
    }

    fn level_reference(n: usize, ts: f64) -> ReferenceTrace {
        Series::uniform(
            0.0,
            ts,
            vec![
                ReferenceSample {
                    rotation: RotationMatrix::identity(),
                    air_velocity: Vec3::new(20.0, 0.0, 0.0),
                };
                n
            ],
        )
        .unwrap()
    }

    #[test]
    fn one_output_per_imu_sample() {
        let ts = 0.004;
        let run = run(&level_stream(100, ts, true), &ObserverConfig::default(), &InitialConditions::default()).unwrap();
        assert_eq!(run.outputs.len(), 100);
        assert!(run.outputs.windows(2).all(|w| w[1].t > w[0].t));
        assert!(run.mag_at_start);
        assert_eq!(run.mag_updates, 4);
        // pitot at t = 0 precedes the first step
        assert_eq!(run.pitot_updates, 19);
    }

    #[test]
    fn empty_pitot_stream_is_pure_prediction() {
        let ts = 0.004;
        let config = ObserverConfig::default();
        let init = InitialConditions::default();
        let result = run(&level_stream(50, ts, false), &config, &init).unwrap();
        let mut st = RiccatiState::new(State6::new(init.air_velocity, init.tilt()), config.initial_covariance);
        for (k, out) in result.outputs.iter().enumerate() {
            assert_eq!(out.air_velocity, st.estimate.air_velocity, "step {k}");
            assert_eq!(out.covariance, st.covariance);
            st = st.predict(&Vec3::zeros(), &Vec3::new(0.0, 0.0, -DEFAULT_GRAVITY), ts, config.gravity, &config.process_noise);
            st.covariance = crate::riccati::symmetrize(&st.covariance);
        }
    }

    #[test]
    fn rejects_unordered_stream() {
        let mut stream = level_stream(10, 0.004, true);
        stream.swap(0, 3);
        assert!(matches!(
            run(&stream, &ObserverConfig::default(), &InitialConditions::default()),
            Err(Error::StreamOrder { .. })
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let mut config = ObserverConfig::default();
        config.pitot_variance = 0.0;
        assert!(matches!(
            run(&level_stream(10, 0.004, true), &config, &InitialConditions::default()),
            Err(Error::Config(_))
        ));
        let mut config = ObserverConfig::default();
        config.gains.k_z = -1.0;
        assert!(config.validate().is_err());
    }

    #[test]
    fn missing_initial_mag_is_flagged() {
        let stream: Vec<_> = level_stream(60, 0.004, true)
            .into_iter()
            .filter(|s| !matches!(s, SensorSample::Mag { t, .. } if *t == 0.0))
            .collect();
        let result = run(&stream, &ObserverConfig::default(), &InitialConditions::default()).unwrap();
        assert!(!result.mag_at_start);
    }

    #[test]
    fn start_time_skips_earlier_samples() {
        let config = ObserverConfig {
            start_time: Some(0.1),
            ..ObserverConfig::default()
        };
        let result = run(&level_stream(100, 0.004, true), &config, &InitialConditions::default()).unwrap();
        assert!(result.outputs[0].t >= 0.1 - 1e-12);
        assert_eq!(result.outputs.len(), 75);
    }

    #[test]
    fn disabling_attitude_stage_leaves_riccati_outputs() {
        let stream = level_stream(200, 0.004, true);
        let init = InitialConditions::default();
        let full = run(&stream, &ObserverConfig::default(), &init).unwrap();
        let frozen = run(
            &stream,
            &ObserverConfig {
                attitude_enabled: false,
                ..ObserverConfig::default()
            },
            &init,
        )
        .unwrap();
        for (a, b) in full.outputs.iter().zip(&frozen.outputs) {
            assert_eq!(a.air_velocity, b.air_velocity);
            assert_eq!(a.tilt, b.tilt);
            assert_eq!(a.covariance, b.covariance);
        }
        assert!(frozen.outputs.iter().all(|o| o.rotation == init.rotation));
    }

    #[test]
    fn arrival_order_within_a_step_is_irrelevant() {
        let stream = level_stream(200, 0.004, true);
        // move every aiding sample ahead of the IMU sample sharing its timestamp
        let mut reordered = stream.clone();
        reordered.sort_by(|a, b| {
            a.time()
                .total_cmp(&b.time())
                .then_with(|| matches!(a, SensorSample::Imu { .. }).cmp(&matches!(b, SensorSample::Imu { .. })))
        });
        assert_ne!(stream, reordered);
        let init = InitialConditions::default();
        let a = run(&stream, &ObserverConfig::default(), &init).unwrap();
        let b = run(&reordered, &ObserverConfig::default(), &init).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluate_examples() {
        let ts = 0.004;
        let reference = level_reference(100, ts);
        let truth_output = |t: f64, offset: Vec3, rotation: RotationMatrix| EstimatorOutput {
            t,
            air_velocity: Vec3::new(20.0, 0.0, 0.0) + offset,
            tilt: Vec3::z(),
            rotation,
            aero: None,
            covariance: Matrix6::identity(),
        };
        let exact: Vec<_> = (0..100).map(|k| truth_output(k as f64 * ts, Vec3::zeros(), RotationMatrix::identity())).collect();
        let eval = evaluate(&exact, &reference, ts / 2.0).unwrap();
        assert!(eval.metrics.iter().all(|m| m.air_vel_err == 0.0 && m.tilt_err == 0.0 && m.att_err == 0.0));

        let flipped = RotationMatrix::from_matrix_unchecked(Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0)));
        let outs: Vec<_> = (0..100).map(|k| truth_output(k as f64 * ts, Vec3::x(), flipped)).collect();
        let eval = evaluate(&outs, &reference, ts / 2.0).unwrap();
        assert!(eval.metrics.iter().all(|m| (m.air_vel_err - 1.0).abs() < 1e-15 && (m.att_err - 4.0).abs() < 1e-15));
        assert!((eval.summary.air_vel_rmse - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_requires_coverage() {
        let ts = 0.004;
        let reference = level_reference(50, ts);
        let outs: Vec<_> = (0..100)
            .map(|k| EstimatorOutput {
                t: k as f64 * ts,
                air_velocity: Vec3::zeros(),
                tilt: Vec3::z(),
                rotation: RotationMatrix::identity(),
                aero: None,
                covariance: Matrix6::identity(),
            })
            .collect();
        assert!(matches!(evaluate(&outs, &reference, ts / 2.0), Err(Error::Alignment { .. })));
    }

    #[test]
    fn convergence_time_is_last_crossing() {
        let eval = Evaluation {
            metrics: [1.0, 0.5, 0.01, 0.2, 0.01, 0.001]
                .iter()
                .enumerate()
                .map(|(i, &e)| ErrorMetrics {
                    t: i as f64,
                    air_vel_err: e,
                    tilt_err: 0.0,
                    att_err: 0.0,
                })
                .collect(),
            summary: ErrorSummary::default(),
        };
        assert_eq!(eval.convergence_time(|m| m.air_vel_err, 0.1), Some(4.0));
        assert_eq!(eval.convergence_time(|m| m.tilt_err, 0.1), Some(0.0));
        assert_eq!(eval.convergence_time(|m| m.air_vel_err, 1e-4), None);
    }

    #[test]
    fn inertial_field_reconstruction_uses_reference_attitude() {
        let r = exp_so3(&Vec3::new(0.0, 0.0, 0.5));
        let reference = Series::uniform(
            0.0,
            0.01,
            vec![
                ReferenceSample {
                    rotation: r,
                    air_velocity: Vec3::zeros()
                };
                10
            ],
        )
        .unwrap();
        let mut stream = vec![SensorSample::Mag {
            t: 0.03,
            body: Vec3::x(),
            inertial: None,
        }];
        reconstruct_inertial_field(&mut stream, &reference);
        match &stream[0] {
            SensorSample::Mag { inertial: Some(m), .. } => assert!((m - r * Vec3::x()).norm() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }
}
