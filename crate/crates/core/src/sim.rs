//! Synthetic truth and sensor generation, and the Monte-Carlo harness.
//!
//! Trajectories are closed-form ZYX Euler-angle profiles flown at constant body
//! air velocity, so body rate and specific acceleration are evaluated exactly
//! rather than integrated.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{self, ErrorMetrics, InitialConditions, ObserverConfig, ReferenceSample, ReferenceTrace, SensorSample};
use crate::error::{Error, Result};
use crate::model::{PitotConfig, DEFAULT_GRAVITY};
use crate::observability::{AttitudeTrace, RateTrace};
use crate::series::Series;
use crate::so3::{from_euler_zyx, random_rotation_with, RotationMatrix, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKind {
    /// Constant heading, pitch and zero roll: `ω ≡ 0`.
    LevelCruise,
    /// Constant bank and yaw rate.
    BankedTurn,
    /// Steady yaw with a sinusoidal pitch oscillation.
    YawPitchWeave,
    /// Yaw, pitch and roll all varying.
    Tumbling,
}

impl TrajectoryKind {
    pub const ALL: [TrajectoryKind; 4] = [Self::LevelCruise, Self::BankedTurn, Self::YawPitchWeave, Self::Tumbling];

    pub fn name(self) -> &'static str {
        match self {
            Self::LevelCruise => "level-cruise",
            Self::BankedTurn => "banked-turn",
            Self::YawPitchWeave => "yaw-pitch-weave",
            Self::Tumbling => "tumbling",
        }
    }
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrajectoryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Spec(format!("unknown trajectory kind `{s}` (expected one of level-cruise, banked-turn, yaw-pitch-weave, tumbling)")))
    }
}

/// Parametric flight profile. Angles in rad, rates in rad/s, periods and duration in s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    /// Air-relative speed `|V_a|` (m/s).
    pub airspeed: f64,
    pub alpha: f64,
    pub beta: f64,
    pub heading: f64,
    pub pitch_offset: f64,
    /// Roll angle of the turn (banked-turn) or mean roll (tumbling).
    pub bank: f64,
    pub yaw_rate: f64,
    pub pitch_amplitude: f64,
    pub pitch_period: f64,
    pub roll_amplitude: f64,
    pub roll_period: f64,
    pub duration: f64,
    /// Truth sampling rate (Hz).
    pub sample_rate: f64,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self::new(TrajectoryKind::BankedTurn)
    }
}

impl TrajectorySpec {
    pub fn new(kind: TrajectoryKind) -> Self {
        let base = Self {
            kind,
            airspeed: 20.0,
            alpha: 0.08,
            beta: 0.0,
            heading: 0.0,
            pitch_offset: 0.08,
            bank: 0.0,
            yaw_rate: 0.0,
            pitch_amplitude: 0.0,
            pitch_period: 10.0,
            roll_amplitude: 0.0,
            roll_period: 9.0,
            duration: 60.0,
            sample_rate: 2500.0,
        };
        match kind {
            TrajectoryKind::LevelCruise => base,
            TrajectoryKind::BankedTurn => Self {
                bank: PI / 6.0,
                yaw_rate: 0.2,
                ..base
            },
            TrajectoryKind::YawPitchWeave => Self {
                yaw_rate: 0.2,
                pitch_amplitude: 0.05,
                ..base
            },
            TrajectoryKind::Tumbling => Self {
                yaw_rate: 0.3,
                pitch_amplitude: 0.5,
                pitch_period: 7.0,
                roll_amplitude: 0.8,
                ..base
            },
        }
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.airspeed,
            self.alpha,
            self.beta,
            self.heading,
            self.pitch_offset,
            self.bank,
            self.yaw_rate,
            self.pitch_amplitude,
            self.pitch_period,
            self.roll_amplitude,
            self.roll_period,
            self.duration,
            self.sample_rate,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::Spec("trajectory parameters must be finite".into()));
        }
        if !(self.airspeed > 0.0) {
            return Err(Error::Spec(format!("airspeed must be positive (got {})", self.airspeed)));
        }
        if !(self.duration > 0.0) {
            return Err(Error::Spec(format!("duration must be positive (got {})", self.duration)));
        }
        if !(self.sample_rate > 0.0) {
            return Err(Error::Spec("sample rate must be positive".into()));
        }
        let (pitch_amp, roll_amp) = self.amplitudes();
        if (pitch_amp != 0.0 && !(self.pitch_period > 0.0)) || (roll_amp != 0.0 && !(self.roll_period > 0.0)) {
            return Err(Error::Spec("oscillation periods must be positive".into()));
        }
        if self.pitch_offset.abs() + pitch_amp.abs() >= FRAC_PI_2 - 1e-3 {
            return Err(Error::Spec("pitch profile reaches the ±90° singularity".into()));
        }
        Ok(())
    }

    fn amplitudes(&self) -> (f64, f64) {
        match self.kind {
            TrajectoryKind::LevelCruise | TrajectoryKind::BankedTurn => (0.0, 0.0),
            TrajectoryKind::YawPitchWeave => (self.pitch_amplitude, 0.0),
            TrajectoryKind::Tumbling => (self.pitch_amplitude, self.roll_amplitude),
        }
    }

    /// `(yaw, pitch, roll)` and their time derivatives at `t`.
    pub fn euler(&self, t: f64) -> ([f64; 3], [f64; 3]) {
        let (pitch_amp, roll_amp) = self.amplitudes();
        let (yaw_rate, bank) = match self.kind {
            TrajectoryKind::LevelCruise => (0.0, 0.0),
            _ => (self.yaw_rate, self.bank),
        };
        let oscillation = |amp: f64, period: f64| {
            if amp == 0.0 {
                (0.0, 0.0)
            } else {
                let w = 2.0 * PI / period;
                (amp * (w * t).sin(), amp * w * (w * t).cos())
            }
        };
        let (dp, dp_rate) = oscillation(pitch_amp, self.pitch_period);
        let (dr, dr_rate) = oscillation(roll_amp, self.roll_period);
        (
            [self.heading + yaw_rate * t, self.pitch_offset + dp, bank + dr],
            [yaw_rate, dp_rate, dr_rate],
        )
    }

    /// Body-to-inertial attitude and body angular rate at `t`.
    pub fn attitude(&self, t: f64) -> (RotationMatrix, Vec3) {
        let ([yaw, pitch, roll], [dyaw, dpitch, droll]) = self.euler(t);
        let (sp, cp) = pitch.sin_cos();
        let (sr, cr) = roll.sin_cos();
        let omega = Vec3::new(
            droll - dyaw * sp,
            dpitch * cr + dyaw * sr * cp,
            -dpitch * sr + dyaw * cr * cp,
        );
        (from_euler_zyx(yaw, pitch, roll), omega)
    }

    /// Constant body-frame air velocity.
    pub fn air_velocity(&self) -> Vec3 {
        let (sa, ca) = self.alpha.sin_cos();
        let (sb, cb) = self.beta.sin_cos();
        self.airspeed * Vec3::new(ca * cb, ca * sb, sa)
    }
}

/// Inertial wind model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "model")]
pub enum WindModel {
    Constant { velocity: [f64; 3] },
    /// First-order Gauss-Markov drift about `mean` with stationary standard deviation `std`.
    GaussMarkov { mean: [f64; 3], std: f64, time_constant: f64 },
}

impl Default for WindModel {
    fn default() -> Self {
        WindModel::Constant { velocity: [3.0, -2.0, 0.0] }
    }
}

impl WindModel {
    fn validate(&self) -> Result<()> {
        match self {
            WindModel::Constant { velocity } if velocity.iter().all(|v| v.is_finite()) => Ok(()),
            WindModel::GaussMarkov { mean, std, time_constant }
                if mean.iter().all(|v| v.is_finite()) && *std >= 0.0 && std.is_finite() && *time_constant > 0.0 =>
            {
                Ok(())
            }
            _ => Err(Error::Spec(format!("invalid wind model {self:?}"))),
        }
    }

    fn sample(&self, n: usize, dt: f64, seed: u64) -> Vec<Vec3> {
        match self {
            WindModel::Constant { velocity } => vec![Vec3::from(*velocity); n],
            WindModel::GaussMarkov { mean, std, time_constant } => {
                let mean = Vec3::from(*mean);
                let decay = (-dt / time_constant).exp();
                let drive = std * (1.0 - decay * decay).sqrt();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut w = mean;
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    out.push(w);
                    let n = Vec3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
                    w = mean + (w - mean) * decay + n * drive;
                }
                out
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruthSample {
    pub rotation: RotationMatrix,
    pub air_velocity: Vec3,
    /// `Rᵀ e3`.
    pub tilt: Vec3,
    pub omega: Vec3,
    /// Specific acceleration `Rᵀ(v̇ − g e3)`.
    pub accel: Vec3,
    /// Inertial wind.
    pub wind: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruthTrace {
    pub series: Series<TruthSample>,
    pub gravity: f64,
}

impl TruthTrace {
    pub fn times(&self) -> &[f64] {
        self.series.times()
    }

    pub fn samples(&self) -> &[TruthSample] {
        self.series.values()
    }

    pub fn sample_period(&self) -> f64 {
        self.times()[1] - self.times()[0]
    }

    pub fn rates(&self) -> RateTrace {
        self.map(|s| s.omega)
    }

    pub fn attitudes(&self) -> AttitudeTrace {
        self.map(|s| s.rotation)
    }

    pub fn reference(&self) -> ReferenceTrace {
        self.map(|s| ReferenceSample {
            rotation: s.rotation,
            air_velocity: s.air_velocity,
        })
    }

    /// Every `step`-th sample, starting with the first.
    pub fn decimate(&self, step: usize) -> Result<TruthTrace> {
        let step = step.max(1);
        let times = self.times().iter().copied().step_by(step).collect();
        let samples = self.samples().iter().copied().step_by(step).collect();
        Ok(TruthTrace {
            series: Series::new(times, samples)?,
            gravity: self.gravity,
        })
    }

    fn map<T>(&self, f: impl Fn(&TruthSample) -> T) -> Series<T> {
        Series::new(self.times().to_vec(), self.samples().iter().map(f).collect()).expect("truth times are increasing")
    }
}

/// Samples the trajectory on a uniform grid and back-solves the specific acceleration.
pub fn generate_truth(spec: &TrajectorySpec, wind: &WindModel, seed: u64) -> Result<TruthTrace> {
    generate_truth_with_gravity(spec, wind, seed, DEFAULT_GRAVITY)
}

pub fn generate_truth_with_gravity(spec: &TrajectorySpec, wind: &WindModel, seed: u64, gravity: f64) -> Result<TruthTrace> {
    spec.validate()?;
    wind.validate()?;
    let dt = 1.0 / spec.sample_rate;
    let n = (spec.duration * spec.sample_rate).round() as usize + 1;
    if n < 2 {
        return Err(Error::Spec("duration shorter than one sample".into()));
    }
    let winds = wind.sample(n, dt, seed);
    let v_a = spec.air_velocity();
    let mut times = Vec::with_capacity(n);
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        let (rotation, omega) = spec.attitude(t);
        let tilt = rotation.transpose() * Vec3::z();
        let wind_rate = if k + 1 < n {
            (winds[k + 1] - winds[k]) / dt
        } else {
            (winds[k] - winds[k - 1]) / dt
        };
        let accel = omega.cross(&v_a) - gravity * tilt + rotation.transpose() * wind_rate;
        times.push(t);
        samples.push(TruthSample {
            rotation,
            air_velocity: v_a,
            tilt,
            omega,
            accel,
            wind: winds[k],
        });
    }
    Ok(TruthTrace {
        series: Series::new(times, samples)?,
        gravity,
    })
}

/// Per-sample standard deviations, and the Pitot variance ((m/s)²).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorNoiseSpec {
    pub gyro_std: f64,
    pub accel_std: f64,
    pub pitot_variance: f64,
    pub mag_std: f64,
}

impl SensorNoiseSpec {
    pub fn noise_free() -> Self {
        Self::default()
    }

    /// Small-UAV grade IMU and magnetometer with a `1e-3 (m/s)²` Pitot.
    pub fn typical() -> Self {
        Self {
            gyro_std: 2e-3,
            accel_std: 2e-2,
            pitot_variance: 1e-3,
            mag_std: 1e-2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = [self.gyro_std, self.accel_std, self.pitot_variance, self.mag_std];
        if v.iter().all(|x| *x >= 0.0 && x.is_finite()) {
            Ok(())
        } else {
            Err(Error::Spec("noise levels must be finite and non-negative".into()))
        }
    }
}

/// Sensor output rates (Hz).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorRates {
    pub imu: f64,
    pub pitot: f64,
    pub mag: f64,
}

impl Default for SensorRates {
    fn default() -> Self {
        Self {
            imu: 250.0,
            pitot: 50.0,
            mag: 10.0,
        }
    }
}

/// Physical sensors carried by the simulated vehicle.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorSuite {
    pub rates: SensorRates,
    /// Probe axes; any pseudo-measurement flag is ignored here.
    pub pitot: PitotConfig,
    /// Unit inertial magnetic direction.
    pub mag_inertial: Vec3,
}

impl Default for SensorSuite {
    fn default() -> Self {
        Self {
            rates: SensorRates::default(),
            pitot: PitotConfig::single_axis(),
            mag_inertial: Vec3::new(1.0, 0.0, 1.0).normalize(),
        }
    }
}

fn decimation(trace_rate: f64, rate: f64, name: &str) -> Result<usize> {
    let ratio = trace_rate / rate;
    let factor = ratio.round();
    if !(rate > 0.0) || factor < 1.0 || (ratio - factor).abs() > 1e-9 * ratio {
        return Err(Error::Spec(format!(
            "{name} rate {rate} Hz does not divide the truth rate {trace_rate} Hz"
        )));
    }
    Ok(factor as usize)
}

fn gaussian3(rng: &mut ChaCha8Rng, std: f64) -> Vec3 {
    if std == 0.0 {
        return Vec3::zeros();
    }
    Vec3::from_fn(|_, _| std * rng.sample::<f64, _>(StandardNormal))
}

/// Decimates the truth into a merged, time-sorted stream. At a shared timestamp
/// the IMU sample comes first, then Pitot, then magnetometer.
pub fn synthesize_sensors(
    trace: &TruthTrace,
    noise: &SensorNoiseSpec,
    suite: &SensorSuite,
    seed: u64,
) -> Result<Vec<SensorSample>> {
    noise.validate()?;
    let trace_rate = 1.0 / trace.sample_period();
    let imu_every = decimation(trace_rate, suite.rates.imu, "IMU")?;
    let pitot_every = decimation(trace_rate, suite.rates.pitot, "Pitot")?;
    let mag_every = decimation(trace_rate, suite.rates.mag, "magnetometer")?;
    let stream_rng = |stream: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    };
    let (mut imu_rng, mut pitot_rng, mut mag_rng) = (stream_rng(1), stream_rng(2), stream_rng(3));
    let pitot_std = noise.pitot_variance.sqrt();
    let mag_inertial = suite.mag_inertial;

    let mut out = Vec::new();
    for (k, (t, s)) in trace.series.iter().enumerate() {
        if k % imu_every == 0 {
            let accel = s.accel + gaussian3(&mut imu_rng, noise.accel_std);
            let gyro = s.omega + gaussian3(&mut imu_rng, noise.gyro_std);
            out.push(SensorSample::Imu { t, accel, gyro });
        }
        if k % pitot_every == 0 {
            let values = suite
                .pitot
                .axes()
                .iter()
                .map(|b| {
                    let clean = b.dot(&s.air_velocity);
                    if pitot_std == 0.0 {
                        clean
                    } else {
                        clean + pitot_std * pitot_rng.sample::<f64, _>(StandardNormal)
                    }
                })
                .collect();
            out.push(SensorSample::Pitot { t, values });
        }
        if k % mag_every == 0 {
            let clean = s.rotation.transpose() * mag_inertial;
            let body = if noise.mag_std == 0.0 {
                clean
            } else {
                (clean + gaussian3(&mut mag_rng, noise.mag_std)).normalize()
            };
            out.push(SensorSample::Mag { t, body, inertial: None });
        }
    }
    Ok(out)
}

/// Everything needed to regenerate a sensor stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub trajectory: TrajectorySpec,
    pub wind: WindModel,
    pub noise: SensorNoiseSpec,
    pub suite: SensorSuite,
    pub seed: u64,
}

impl Scenario {
    pub fn noise_free(trajectory: TrajectorySpec) -> Self {
        Self {
            trajectory,
            wind: WindModel::default(),
            noise: SensorNoiseSpec::noise_free(),
            suite: SensorSuite::default(),
            seed: 0,
        }
    }

    pub fn build(&self) -> Result<(TruthTrace, Vec<SensorSample>)> {
        let truth = generate_truth(&self.trajectory, &self.wind, self.seed)?;
        let stream = synthesize_sensors(&truth, &self.noise, &self.suite, self.seed)?;
        Ok((truth, stream))
    }
}

/// Thresholds used to define convergence times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceThresholds {
    pub att_err: f64,
    pub tilt_err: f64,
    pub air_vel_err: f64,
}

impl Default for ConvergenceThresholds {
    fn default() -> Self {
        Self {
            att_err: 1e-3,
            tilt_err: 1e-3,
            air_vel_err: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub initial_att_err: f64,
    pub terminal: ErrorMetrics,
    /// Time after which each error stays below its threshold, if it does.
    pub att_convergence: Option<f64>,
    pub tilt_convergence: Option<f64>,
    pub air_vel_convergence: Option<f64>,
}

impl TrialResult {
    pub fn converged(&self) -> bool {
        self.att_convergence.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub thresholds: ConvergenceThresholds,
    pub trials: Vec<TrialResult>,
}

impl MonteCarloSummary {
    pub fn converged(&self) -> usize {
        self.trials.iter().filter(|t| t.converged()).count()
    }

    pub fn worst_att_convergence(&self) -> Option<f64> {
        self.trials
            .iter()
            .map(|t| t.att_convergence)
            .try_fold(0.0f64, |acc, t| t.map(|t| acc.max(t)))
    }
}

/// Runs the cascade on `stream` and scores it against `reference`.
pub fn run_trial(
    trial: usize,
    stream: &[SensorSample],
    reference: &ReferenceTrace,
    config: &ObserverConfig,
    init: &InitialConditions,
    thresholds: &ConvergenceThresholds,
) -> Result<TrialResult> {
    let run = cascade::run(stream, config, init)?;
    let eval = cascade::evaluate(&run.outputs, reference, 0.5 * config.imu_period)?;
    let terminal = *eval.metrics.last().ok_or_else(|| Error::Spec("empty sensor stream".into()))?;
    Ok(TrialResult {
        trial,
        initial_att_err: eval.metrics[0].att_err,
        terminal,
        att_convergence: eval.convergence_time(|m| m.att_err, thresholds.att_err),
        tilt_convergence: eval.convergence_time(|m| m.tilt_err, thresholds.tilt_err),
        air_vel_convergence: eval.convergence_time(|m| m.air_vel_err, thresholds.air_vel_err),
    })
}

/// Random initial estimate: uniform attitude on SO(3), uniform tilt direction on
/// the sphere and air velocity within ±10 m/s per axis of the true value.
pub fn random_initial_conditions(rng: &mut ChaCha8Rng, true_air_velocity: &Vec3) -> InitialConditions {
    let rotation = random_rotation_with(rng);
    let offset = Vec3::from_fn(|_, _| rng.random_range(-10.0..10.0));
    let tilt = loop {
        let v = Vec3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        if v.norm() > 1e-6 {
            break v.normalize();
        }
    };
    InitialConditions {
        air_velocity: true_air_velocity + offset,
        tilt: Some(tilt),
        rotation,
    }
}

/// Runs `n_trials` independent cascades from random initial estimates on one
/// shared scenario. Trial `i` draws from stream `i` of a generator keyed by `seed`.
pub fn monte_carlo_agas(
    n_trials: usize,
    scenario: &Scenario,
    config: &ObserverConfig,
    seed: u64,
) -> Result<MonteCarloSummary> {
    if n_trials == 0 {
        return Err(Error::Spec("at least one Monte-Carlo trial is required".into()));
    }
    let (truth, stream) = scenario.build()?;
    let reference = truth.reference();
    let config = ObserverConfig {
        mag_inertial: scenario.suite.mag_inertial,
        gravity: truth.gravity,
        ..config.clone()
    };
    let thresholds = ConvergenceThresholds::default();
    let v0 = truth.samples()[0].air_velocity;
    let trials = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let init = random_initial_conditions(&mut rng, &v0);
            run_trial(i, &stream, &reference, &config, &init, &thresholds)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonteCarloSummary { thresholds, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::continuous_dynamics;
    use crate::model::State6;
    use crate::observability::pe_metric;
    use crate::so3::skew;

    fn short(kind: TrajectoryKind) -> TrajectorySpec {
        TrajectorySpec::new(kind).with_duration(20.0)
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in TrajectoryKind::ALL {
            assert_eq!(kind.name().parse::<TrajectoryKind>().unwrap(), kind);
        }
        assert!("loop".parse::<TrajectoryKind>().is_err());
    }

    #[test]
    fn rejects_unreachable_profiles() {
        let mut spec = TrajectorySpec::default();
        spec.airspeed = -3.0;
        assert!(matches!(generate_truth(&spec, &WindModel::default(), 0), Err(Error::Spec(_))));
        let mut spec = TrajectorySpec::new(TrajectoryKind::Tumbling);
        spec.pitch_amplitude = 1.6;
        assert!(spec.validate().is_err());
        let mut spec = TrajectorySpec::default();
        spec.duration = 0.0;
        assert!(spec.validate().is_err());
        spec.duration = f64::NAN;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn level_cruise_has_static_tilt() {
        let truth = generate_truth(&short(TrajectoryKind::LevelCruise), &WindModel::default(), 0).unwrap();
        let first = truth.samples()[0];
        for s in truth.samples() {
            assert_eq!(s.omega, Vec3::zeros());
            assert_eq!(s.tilt, first.tilt);
            assert!((s.accel + DEFAULT_GRAVITY * s.tilt).norm() < 1e-15);
        }
    }

    #[test]
    fn body_rate_matches_attitude_derivative() {
        // Ṙ = R ω× by central differences
        for kind in TrajectoryKind::ALL {
            let spec = TrajectorySpec::new(kind);
            for &t in &[0.3, 4.1, 17.7] {
                let h = 1e-5;
                let (r, omega) = spec.attitude(t);
                let fd = (spec.attitude(t + h).0.into_inner() - spec.attitude(t - h).0.into_inner()) / (2.0 * h);
                let err = (fd - r.into_inner() * skew(&omega)).norm();
                assert!(err < 1e-8, "{kind} at {t}: {err}");
            }
        }
    }

    #[test]
    fn truth_satisfies_the_state_dynamics() {
        // finite-difference residual of V̇_a = −ω×V_a + g z + a and ż = −ω×z
        for kind in TrajectoryKind::ALL {
            let truth = generate_truth(&short(kind), &WindModel::default(), 0).unwrap();
            let s = truth.samples();
            let dt = truth.sample_period();
            for k in (1..s.len() - 1).step_by(97) {
                let x = State6::new(s[k].air_velocity, s[k].tilt);
                let f = continuous_dynamics(&x, &s[k].omega, &s[k].accel, truth.gravity);
                let dv = (s[k + 1].air_velocity - s[k - 1].air_velocity) / (2.0 * dt);
                let dz = (s[k + 1].tilt - s[k - 1].tilt) / (2.0 * dt);
                let dz_err = (dz - f.tilt).norm();
                assert!((dv - f.air_velocity).norm() < 1e-8, "{kind}");
                // central difference truncation: dt²/6 |z⃛|
                assert!(dz_err < 1e-7, "{kind}: {dz_err}");
            }
        }
    }

    #[test]
    fn truth_tilt_is_unit() {
        let truth = generate_truth(&TrajectorySpec::new(TrajectoryKind::Tumbling), &WindModel::default(), 0).unwrap();
        assert!(truth.samples().iter().all(|s| (s.tilt.norm() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn constant_wind_keeps_inertial_air_acceleration_equal_to_ground_acceleration() {
        let truth = generate_truth(&short(TrajectoryKind::BankedTurn), &WindModel::default(), 0).unwrap();
        let s = truth.samples();
        let dt = truth.sample_period();
        for k in (1..s.len() - 1).step_by(331) {
            let v = |i: usize| s[i].rotation * s[i].air_velocity + s[i].wind;
            let va = |i: usize| s[i].rotation * s[i].air_velocity;
            let dv = (v(k + 1) - v(k - 1)) / (2.0 * dt);
            let dva = (va(k + 1) - va(k - 1)) / (2.0 * dt);
            assert!((dv - dva).norm() < 1e-9);
            // v̇ = R a + g e3
            assert!((dv - (s[k].rotation * s[k].accel + truth.gravity * Vec3::z())).norm() < 1e-6);
        }
    }

    #[test]
    fn gauss_markov_wind_enters_the_specific_force() {
        let wind = WindModel::GaussMarkov {
            mean: [2.0, 0.0, 0.0],
            std: 1.0,
            time_constant: 60.0,
        };
        let truth = generate_truth(&short(TrajectoryKind::BankedTurn), &wind, 7).unwrap();
        let s = truth.samples();
        assert_ne!(s[0].wind, s[100].wind);
        let dt = truth.sample_period();
        for k in (0..s.len() - 1).step_by(501) {
            // forward difference over one interval: v̇ = R a + g e3 exactly with linear wind
            let v = |i: usize| s[i].rotation * s[i].air_velocity + s[i].wind;
            let dv = (v(k + 1) - v(k)) / dt;
            let model = s[k].rotation * s[k].accel + truth.gravity * Vec3::z();
            assert!((dv - model).norm() < 1e-2);
        }
        assert_eq!(generate_truth(&short(TrajectoryKind::BankedTurn), &wind, 7).unwrap(), truth);
    }

    #[test]
    fn banked_turn_excites_both_horizontal_axes() {
        let truth = generate_truth(&short(TrajectoryKind::BankedTurn), &WindModel::default(), 0).unwrap();
        let cfg = PitotConfig::new(vec![Vec3::x(), Vec3::y()], false).unwrap();
        let pe = pe_metric(&truth.attitudes(), &cfg, 0.0, 10.0).unwrap();
        assert!(pe.min_eig > 1e-3, "{}", pe.min_eig);
    }

    #[test]
    fn noise_free_sensors_are_exact() {
        let truth = generate_truth(&short(TrajectoryKind::Tumbling), &WindModel::default(), 0).unwrap();
        let suite = SensorSuite::default();
        let stream = synthesize_sensors(&truth, &SensorNoiseSpec::noise_free(), &suite, 3).unwrap();
        let reference = truth.series.clone();
        let mut counts = [0usize; 3];
        for sample in &stream {
            let s = reference.values()[reference.nearest(sample.time())];
            match sample {
                SensorSample::Imu { accel, gyro, .. } => {
                    counts[0] += 1;
                    assert_eq!((*accel, *gyro), (s.accel, s.omega));
                }
                SensorSample::Pitot { values, .. } => {
                    counts[1] += 1;
                    assert_eq!(values[0], Vec3::x().dot(&s.air_velocity));
                }
                SensorSample::Mag { body, .. } => {
                    counts[2] += 1;
                    assert_eq!(*body, s.rotation.transpose() * suite.mag_inertial);
                    assert!((body.norm() - 1.0).abs() < 1e-15);
                }
            }
        }
        assert_eq!(counts, [5001, 1001, 201]);
        assert!(stream.windows(2).all(|w| w[1].time() >= w[0].time()));
    }

    #[test]
    fn pitot_noise_has_configured_variance() {
        let spec = TrajectorySpec {
            sample_rate: 50.0,
            duration: 2000.0,
            ..TrajectorySpec::new(TrajectoryKind::LevelCruise)
        };
        let truth = generate_truth(&spec, &WindModel::default(), 0).unwrap();
        let clean = spec.air_velocity().x;
        let noise = SensorNoiseSpec {
            pitot_variance: 1e-3,
            ..SensorNoiseSpec::noise_free()
        };
        let suite = SensorSuite {
            rates: SensorRates {
                imu: 50.0,
                pitot: 50.0,
                mag: 10.0,
            },
            ..SensorSuite::default()
        };
        let stream = synthesize_sensors(&truth, &noise, &suite, 11).unwrap();
        let residuals: Vec<f64> = stream
            .iter()
            .filter_map(|s| match s {
                SensorSample::Pitot { values, .. } => Some(values[0] - clean),
                _ => None,
            })
            .collect();
        assert!(residuals.len() >= 100_000);
        let n = residuals.len() as f64;
        let mean = residuals.iter().sum::<f64>() / n;
        let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / 1e-3 - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn rates_must_divide_truth_rate() {
        let truth = generate_truth(&short(TrajectoryKind::LevelCruise), &WindModel::default(), 0).unwrap();
        let suite = SensorSuite {
            rates: SensorRates {
                imu: 300.0,
                ..SensorRates::default()
            },
            ..SensorSuite::default()
        };
        assert!(synthesize_sensors(&truth, &SensorNoiseSpec::default(), &suite, 0).is_err());
    }

    #[test]
    fn synthesis_is_seeded() {
        let scenario = Scenario {
            noise: SensorNoiseSpec::typical(),
            ..Scenario::noise_free(short(TrajectoryKind::BankedTurn))
        };
        let a = scenario.build().unwrap().1;
        let b = scenario.build().unwrap().1;
        assert_eq!(a, b);
        let c = Scenario { seed: 1, ..scenario }.build().unwrap().1;
        assert_ne!(a, c);
    }

    #[test]
    fn monte_carlo_requires_trials() {
        let scenario = Scenario::noise_free(short(TrajectoryKind::BankedTurn));
        assert!(matches!(
            monte_carlo_agas(0, &scenario, &ObserverConfig::default(), 0),
            Err(Error::Spec(_))
        ));
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let scenario = Scenario::noise_free(TrajectorySpec::new(TrajectoryKind::BankedTurn).with_duration(5.0));
        let a = monte_carlo_agas(3, &scenario, &ObserverConfig::default(), 9).unwrap();
        let b = monte_carlo_agas(3, &scenario, &ObserverConfig::default(), 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials.len(), 3);
        assert!(a.trials[0].initial_att_err != a.trials[1].initial_att_err);
    }
}
