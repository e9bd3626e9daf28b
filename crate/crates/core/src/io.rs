//! CSV logs and result files, TOML run configuration and JSON run summaries.
//!
//! The merged log has a `t_s,sensor,v1,...` header and one row per sample:
//!
//! | sensor      | values                                   |
//! |-------------|------------------------------------------|
//! | `imu`       | `a_x a_y a_z ω_x ω_y ω_z`                |
//! | `pitot`     | one value per probe                      |
//! | `mag`       | unit body-frame field direction          |
//! | `reference` | `R̄` row-major (9) then `V̄_a` (3)        |
//!
//! Numbers are written with 17 significant digits so files round-trip exactly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attitude::AttitudeGains;
use crate::cascade::{ErrorMetrics, ErrorSummary, EstimatorOutput, InitialConditions, ObserverConfig, ReferenceSample, ReferenceTrace, SensorSample};
use crate::error::{Error, Result};
use crate::model::{AeroAngles, Matrix6, PitotConfig, Vector6};
use crate::observability::WindowRow;
use crate::riccati::CovarianceUpdate;
use crate::series::Series;
use crate::sim::{SensorNoiseSpec, SensorRates, TrajectoryKind, TrajectorySpec, WindModel};
use crate::so3::{from_euler_zyx, orthonormality_error, orthonormalize, Mat3, RotationMatrix, Vec3};

/// Largest `|R Rᵀ − I|` accepted for a reference attitude; smaller deviations are re-projected.
pub const REFERENCE_ROTATION_TOL: f64 = 1e-6;

const MAX_LOG_VALUES: usize = 12;

/// Formats with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedLog {
    /// Time-sorted sensor samples; rows sharing a timestamp keep file order.
    pub samples: Vec<SensorSample>,
    pub reference: Option<ReferenceTrace>,
}

impl ParsedLog {
    /// Gyro samples as a rate trace.
    pub fn rates(&self) -> Result<Series<Vec3>> {
        let (t, w): (Vec<f64>, Vec<Vec3>) = self
            .samples
            .iter()
            .filter_map(|s| match s {
                SensorSample::Imu { t, gyro, .. } => Some((*t, *gyro)),
                _ => None,
            })
            .unzip();
        Series::new(t, w)
    }
}

pub fn parse_log(path: &Path) -> Result<ParsedLog> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
    parse_log_str(&text, path)
}

/// Parses log text; `path` only labels error messages.
pub fn parse_log_str(text: &str, path: &Path) -> Result<ParsedLog> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let schema_err = |line: u64, message: String| Error::Schema {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();

    let header = match rows.next() {
        Some(r) => r.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(schema_err(1, "empty log: expected a `t_s,sensor,...` header".into())),
    };
    if header.get(0) != Some("t_s") || header.get(1) != Some("sensor") {
        return Err(schema_err(1, "header must start with `t_s,sensor`".into()));
    }

    let mut samples: Vec<(f64, SensorSample)> = Vec::new();
    let mut reference: (Vec<f64>, Vec<ReferenceSample>) = (Vec::new(), Vec::new());
    let mut last_t: [Option<f64>; 4] = [None; 4];
    let mut pitot_width: Option<usize> = None;

    for row in rows {
        let record = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let sensor = record.get(1).unwrap_or("");
        let number = |i: usize| -> Result<f64> {
            let field = record.get(i).unwrap_or("");
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("field {} `{field}` is not a number", i + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("field {} is not finite", i + 1)));
            }
            Ok(v)
        };
        let t = number(0)?;
        let mut values: Vec<f64> = Vec::with_capacity(record.len().saturating_sub(2));
        for i in 2..record.len() {
            if record[i].is_empty() {
                if (i + 1..record.len()).any(|j| !record[j].is_empty()) {
                    return Err(schema_err(line, format!("empty field {} inside the value list", i + 1)));
                }
                break;
            }
            values.push(number(i)?);
        }
        let expect = |n: usize| -> Result<()> {
            if values.len() == n {
                Ok(())
            } else {
                Err(schema_err(line, format!("{sensor} row needs {n} values, found {}", values.len())))
            }
        };
        let slot = match sensor {
            "imu" => 0,
            "pitot" => 1,
            "mag" => 2,
            "reference" => 3,
            other => return Err(schema_err(line, format!("unknown sensor `{other}`"))),
        };
        if let Some(prev) = last_t[slot] {
            if !(t > prev) {
                return Err(Error::Order {
                    path: path.to_path_buf(),
                    line,
                    sensor: sensor.to_string(),
                    t,
                });
            }
        }
        last_t[slot] = Some(t);
        let v3 = |i: usize| Vec3::new(values[i], values[i + 1], values[i + 2]);
        match slot {
            0 => {
                expect(6)?;
                samples.push((
                    t,
                    SensorSample::Imu {
                        t,
                        accel: v3(0),
                        gyro: v3(3),
                    },
                ));
            }
            1 => {
                if !(1..=3).contains(&values.len()) {
                    return Err(schema_err(line, format!("pitot row needs 1 to 3 values, found {}", values.len())));
                }
                match pitot_width {
                    Some(w) if w != values.len() => {
                        return Err(schema_err(line, format!("pitot row has {} values, earlier rows have {w}", values.len())))
                    }
                    _ => pitot_width = Some(values.len()),
                }
                samples.push((t, SensorSample::Pitot { t, values }));
            }
            2 => {
                expect(3)?;
                samples.push((
                    t,
                    SensorSample::Mag {
                        t,
                        body: v3(0),
                        inertial: None,
                    },
                ));
            }
            _ => {
                expect(MAX_LOG_VALUES)?;
                let m = Mat3::from_row_slice(&values[..9]);
                let err = orthonormality_error(&m);
                if !(err <= REFERENCE_ROTATION_TOL) || m.determinant() < 0.0 {
                    return Err(parse_err(line, format!("reference attitude is not a rotation (|RRᵀ − I| = {err:e})")));
                }
                let rotation = if err <= 1e-12 {
                    RotationMatrix::from_matrix_unchecked(m)
                } else {
                    orthonormalize(&m)
                };
                reference.0.push(t);
                reference.1.push(ReferenceSample {
                    rotation,
                    air_velocity: v3(9),
                });
            }
        }
    }

    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let reference = match reference.0.len() {
        0 => None,
        1 => return Err(schema_err(0, "a reference trace needs at least two rows".into())),
        _ => Some(Series::new(reference.0, reference.1)?),
    };
    Ok(ParsedLog {
        samples: samples.into_iter().map(|(_, s)| s).collect(),
        reference,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn push3(row: &mut Vec<String>, v: &Vec3) {
    row.extend(v.iter().map(|x| fmt_f64(*x)));
}

/// Writes samples and reference rows merged by time. At equal timestamps sensor
/// rows precede reference rows.
pub fn write_log(path: &Path, samples: &[SensorSample], reference: Option<&ReferenceTrace>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(create(path)?);
    let mut header = vec!["t_s".to_string(), "sensor".to_string()];
    header.extend((1..=MAX_LOG_VALUES).map(|i| format!("v{i}")));
    w.write_record(&header)?;

    let empty = Vec::new();
    let refs: Vec<(f64, &ReferenceSample)> = reference.map_or(empty, |r| r.iter().collect());
    let mut ri = 0;
    let write_ref = |w: &mut csv::Writer<BufWriter<File>>, t: f64, r: &ReferenceSample| -> Result<()> {
        let mut row = vec![fmt_f64(t), "reference".to_string()];
        row.extend(r.rotation.matrix().transpose().iter().map(|x| fmt_f64(*x)));
        push3(&mut row, &r.air_velocity);
        w.write_record(&row)?;
        Ok(())
    };
    for s in samples {
        while ri < refs.len() && refs[ri].0 < s.time() {
            write_ref(&mut w, refs[ri].0, refs[ri].1)?;
            ri += 1;
        }
        let mut row = vec![fmt_f64(s.time())];
        match s {
            SensorSample::Imu { accel, gyro, .. } => {
                row.push("imu".into());
                push3(&mut row, accel);
                push3(&mut row, gyro);
            }
            SensorSample::Pitot { values, .. } => {
                row.push("pitot".into());
                row.extend(values.iter().map(|x| fmt_f64(*x)));
            }
            SensorSample::Mag { body, .. } => {
                row.push("mag".into());
                push3(&mut row, body);
            }
        }
        w.write_record(&row)?;
    }
    for (t, r) in &refs[ri..] {
        write_ref(&mut w, *t, r)?;
    }
    w.flush()?;
    Ok(())
}

const ESTIMATE_FIXED: [&str; 19] = [
    "t_s", "v_a1", "v_a2", "v_a3", "z1", "z2", "z3", "r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33", "airspeed",
    "alpha", "beta",
];

fn covariance_columns() -> Vec<String> {
    let mut out = Vec::with_capacity(21);
    for i in 0..6 {
        for j in i..6 {
            out.push(format!("p{}{}", i + 1, j + 1));
        }
    }
    out
}

/// Estimates with attitude row-major, aero angles (blank when undefined) and the
/// upper triangle of `P`.
pub fn write_estimates(path: &Path, outputs: &[EstimatorOutput]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header: Vec<String> = ESTIMATE_FIXED.iter().map(|s| s.to_string()).collect();
    header.extend(covariance_columns());
    w.write_record(&header)?;
    for o in outputs {
        let mut row = vec![fmt_f64(o.t)];
        push3(&mut row, &o.air_velocity);
        push3(&mut row, &o.tilt);
        row.extend(o.rotation.matrix().transpose().iter().map(|x| fmt_f64(*x)));
        match &o.aero {
            Some(a) => row.extend([a.airspeed, a.alpha, a.beta].map(fmt_f64)),
            None => row.extend(["", "", ""].map(String::from)),
        }
        for i in 0..6 {
            for j in i..6 {
                row.push(fmt_f64(o.covariance[(i, j)]));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_table(path: &Path, expected: &[String]) -> Result<Vec<(u64, Vec<Option<f64>>)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header != expected {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected columns {}", expected.join(",")),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let values = record
            .iter()
            .map(|f| {
                if f.is_empty() {
                    Ok(None)
                } else {
                    f.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("`{f}` is not a number"),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, values));
    }
    Ok(rows)
}

fn required(path: &Path, line: u64, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::Schema {
        path: path.to_path_buf(),
        line,
        message: "missing value".into(),
    })
}

pub fn read_estimates(path: &Path) -> Result<Vec<EstimatorOutput>> {
    let mut header: Vec<String> = ESTIMATE_FIXED.iter().map(|s| s.to_string()).collect();
    header.extend(covariance_columns());
    read_table(path, &header)?
        .into_iter()
        .map(|(line, v)| {
            let get = |i: usize| required(path, line, v[i]);
            let v3 = |i: usize| -> Result<Vec3> { Ok(Vec3::new(get(i)?, get(i + 1)?, get(i + 2)?)) };
            let r: Vec<f64> = (7..16).map(get).collect::<Result<_>>()?;
            let aero = match (v[16], v[17], v[18]) {
                (Some(airspeed), Some(alpha), Some(beta)) => Some(AeroAngles { airspeed, alpha, beta }),
                _ => None,
            };
            let mut covariance = Matrix6::zeros();
            let mut k = 19;
            for i in 0..6 {
                for j in i..6 {
                    covariance[(i, j)] = get(k)?;
                    covariance[(j, i)] = covariance[(i, j)];
                    k += 1;
                }
            }
            Ok(EstimatorOutput {
                t: get(0)?,
                air_velocity: v3(1)?,
                tilt: v3(4)?,
                rotation: RotationMatrix::from_matrix_unchecked(Mat3::from_row_slice(&r)),
                aero,
                covariance,
            })
        })
        .collect()
}

const METRIC_COLUMNS: [&str; 4] = ["t_s", "air_vel_err", "tilt_err", "att_err"];

pub fn write_metrics(path: &Path, metrics: &[ErrorMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(METRIC_COLUMNS)?;
    for m in metrics {
        w.write_record([m.t, m.air_vel_err, m.tilt_err, m.att_err].map(fmt_f64))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<ErrorMetrics>> {
    let header: Vec<String> = METRIC_COLUMNS.iter().map(|s| s.to_string()).collect();
    read_table(path, &header)?
        .into_iter()
        .map(|(line, v)| {
            let get = |i: usize| required(path, line, v[i]);
            Ok(ErrorMetrics {
                t: get(0)?,
                air_vel_err: get(1)?,
                tilt_err: get(2)?,
                att_err: get(3)?,
            })
        })
        .collect()
}

const WINDOW_COLUMNS: [&str; 6] = ["t_start", "t_end", "min_eig_gramian", "cond_gramian", "min_eig_sigma", "cond_m"];

/// Observability scan; infinite condition numbers are written as `inf`.
pub fn write_windows(path: &Path, rows: &[WindowRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(WINDOW_COLUMNS)?;
    for r in rows {
        w.write_record([r.t_start, r.t_end, r.min_eig_gramian, r.cond_gramian, r.min_eig_sigma, r.cond_m].map(fmt_f64))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_windows(path: &Path) -> Result<Vec<WindowRow>> {
    let header: Vec<String> = WINDOW_COLUMNS.iter().map(|s| s.to_string()).collect();
    read_table(path, &header)?
        .into_iter()
        .map(|(line, v)| {
            let get = |i: usize| required(path, line, v[i]);
            Ok(WindowRow {
                t_start: get(0)?,
                t_end: get(1)?,
                min_eig_gramian: get(2)?,
                cond_gramian: get(3)?,
                min_eig_sigma: get(4)?,
                cond_m: get(5)?,
            })
        })
        .collect()
}

/// Observer settings as they appear in the configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverSection {
    pub gravity: f64,
    /// IMU rate (Hz).
    pub imu_rate: f64,
    pub pitot_variance: f64,
    pub pseudo_variance: f64,
    /// Diagonal of `S`.
    pub process_noise: [f64; 6],
    /// Diagonal of `P(0)`.
    pub initial_covariance: [f64; 6],
    pub k_z: f64,
    pub k_m: f64,
    pub covariance_update: CovarianceUpdate,
    pub mag_inertial: [f64; 3],
    pub attitude_enabled: bool,
    pub start_time: Option<f64>,
}

impl Default for ObserverSection {
    fn default() -> Self {
        let d = ObserverConfig::default();
        Self {
            gravity: d.gravity,
            imu_rate: 1.0 / d.imu_period,
            pitot_variance: d.pitot_variance,
            pseudo_variance: d.pseudo_variance,
            process_noise: std::array::from_fn(|i| d.process_noise[(i, i)]),
            initial_covariance: std::array::from_fn(|i| d.initial_covariance[(i, i)]),
            k_z: d.gains.k_z,
            k_m: d.gains.k_m,
            covariance_update: d.covariance_update,
            mag_inertial: [d.mag_inertial.x, d.mag_inertial.y, d.mag_inertial.z],
            attitude_enabled: d.attitude_enabled,
            start_time: d.start_time,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitotSection {
    pub axes: Vec<[f64; 3]>,
    pub pseudo_sideslip: bool,
}

impl Default for PitotSection {
    fn default() -> Self {
        Self {
            axes: vec![[1.0, 0.0, 0.0]],
            pseudo_sideslip: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub air_velocity: [f64; 3],
    /// `[yaw, pitch, roll]` (rad).
    pub euler: [f64; 3],
    /// Defaults to the tilt implied by `euler`.
    pub tilt: Option<[f64; 3]>,
}

impl Default for InitialSection {
    fn default() -> Self {
        use std::f64::consts::PI;
        Self {
            air_velocity: [10.0, 2.0, 0.3],
            euler: [PI / 6.0, -PI / 18.0, PI / 9.0],
            tilt: None,
        }
    }
}

/// Optional overrides on top of the defaults of a trajectory kind.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySection {
    pub kind: Option<TrajectoryKind>,
    pub airspeed: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub heading: Option<f64>,
    pub pitch_offset: Option<f64>,
    pub bank: Option<f64>,
    pub yaw_rate: Option<f64>,
    pub pitch_amplitude: Option<f64>,
    pub pitch_period: Option<f64>,
    pub roll_amplitude: Option<f64>,
    pub roll_period: Option<f64>,
    pub duration: Option<f64>,
    pub sample_rate: Option<f64>,
}

impl TrajectorySection {
    /// Builds the trajectory for `kind` (or the configured kind, or a banked turn).
    pub fn spec(&self, kind: Option<TrajectoryKind>) -> TrajectorySpec {
        let mut s = TrajectorySpec::new(kind.or(self.kind).unwrap_or(TrajectoryKind::BankedTurn));
        let set = |field: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *field = v;
            }
        };
        set(&mut s.airspeed, self.airspeed);
        set(&mut s.alpha, self.alpha);
        set(&mut s.beta, self.beta);
        set(&mut s.heading, self.heading);
        set(&mut s.pitch_offset, self.pitch_offset);
        set(&mut s.bank, self.bank);
        set(&mut s.yaw_rate, self.yaw_rate);
        set(&mut s.pitch_amplitude, self.pitch_amplitude);
        set(&mut s.pitch_period, self.pitch_period);
        set(&mut s.roll_amplitude, self.roll_amplitude);
        set(&mut s.roll_period, self.roll_period);
        set(&mut s.duration, self.duration);
        set(&mut s.sample_rate, self.sample_rate);
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservabilitySection {
    /// Window length `δ` (s).
    pub window: f64,
}

impl Default for ObservabilitySection {
    fn default() -> Self {
        Self { window: 2.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplaySection {
    pub log: Option<PathBuf>,
    /// Rebuild each magnetometer sample's inertial direction from the reference attitude.
    pub reconstruct_mag_inertial: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Complete run configuration. Every field has a default, so an empty file is valid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub observer: ObserverSection,
    pub pitot: PitotSection,
    pub initial: InitialSection,
    pub trajectory: TrajectorySection,
    pub wind: WindModel,
    pub noise: SensorNoiseSpec,
    pub rates: SensorRates,
    pub observability: ObservabilitySection,
    pub replay: ReplaySection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            observer: ObserverSection::default(),
            pitot: PitotSection::default(),
            initial: InitialSection::default(),
            trajectory: TrajectorySection::default(),
            wind: WindModel::default(),
            noise: SensorNoiseSpec::noise_free(),
            rates: SensorRates::default(),
            observability: ObservabilitySection::default(),
            replay: ReplaySection::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let config = Self::from_toml_str(&text)?;
        config.observer_config()?;
        if let Some(log) = &config.replay.log {
            if !log.exists() {
                return Err(Error::Config(format!("replay log {} does not exist", log.display())));
            }
        }
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn pitot_config(&self) -> Result<PitotConfig> {
        PitotConfig::new(self.pitot.axes.iter().map(|a| Vec3::from(*a)).collect(), self.pitot.pseudo_sideslip)
    }

    /// Validated observer configuration.
    pub fn observer_config(&self) -> Result<ObserverConfig> {
        let o = &self.observer;
        if !(o.imu_rate > 0.0 && o.imu_rate.is_finite()) {
            return Err(Error::Config("observer.imu_rate must be positive".into()));
        }
        let mag = Vec3::from(o.mag_inertial);
        if !(mag.norm() > 0.0) {
            return Err(Error::Config("observer.mag_inertial must be non-zero".into()));
        }
        let config = ObserverConfig {
            gravity: o.gravity,
            imu_period: 1.0 / o.imu_rate,
            pitot: self.pitot_config()?,
            pitot_variance: o.pitot_variance,
            pseudo_variance: o.pseudo_variance,
            process_noise: Matrix6::from_diagonal(&Vector6::from(o.process_noise)),
            initial_covariance: Matrix6::from_diagonal(&Vector6::from(o.initial_covariance)),
            gains: AttitudeGains { k_z: o.k_z, k_m: o.k_m },
            covariance_update: o.covariance_update,
            mag_inertial: if (mag.norm() - 1.0).abs() < 1e-12 { mag } else { mag.normalize() },
            attitude_enabled: o.attitude_enabled,
            start_time: o.start_time,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn initial_conditions(&self) -> InitialConditions {
        let [yaw, pitch, roll] = self.initial.euler;
        InitialConditions {
            air_velocity: Vec3::from(self.initial.air_velocity),
            tilt: self.initial.tilt.map(Vec3::from),
            rotation: from_euler_zyx(yaw, pitch, roll),
        }
    }
}

/// Convergence times (s) against the thresholds used for the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTimes {
    pub att_err_threshold: f64,
    pub att_err: Option<f64>,
    pub tilt_err_threshold: f64,
    pub tilt_err: Option<f64>,
    pub air_vel_err_threshold: f64,
    pub air_vel_err: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub source: String,
    pub samples: usize,
    pub pitot_updates: usize,
    pub mag_updates: usize,
    pub mag_at_start: bool,
    pub errors: Option<ErrorSummary>,
    pub convergence: Option<ConvergenceTimes>,
    pub singular_windows: Option<usize>,
    pub windows: Option<usize>,
    pub files: Vec<String>,
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, summary)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}
