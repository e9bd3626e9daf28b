//! Writes a simulated flight to a CSV sensor log, reads it back and replays the
//! observer on the parsed samples.

use pitot_cascade::cascade::{self, InitialConditions, ObserverConfig};
use pitot_cascade::io;
use pitot_cascade::sim::{Scenario, SensorNoiseSpec, TrajectoryKind, TrajectorySpec};

fn main() -> pitot_cascade::Result<()> {
    let scenario = Scenario {
        noise: SensorNoiseSpec::typical(),
        seed: 11,
        ..Scenario::noise_free(TrajectorySpec::new(TrajectoryKind::YawPitchWeave).with_duration(30.0))
    };
    let (truth, stream) = scenario.build()?;
    let reference = truth.decimate(10)?.reference();

    let dir = std::env::temp_dir().join("pitot-cascade-log-replay");
    let path = dir.join("flight.csv");
    io::write_log(&path, &stream, Some(&reference))?;
    let log = io::parse_log(&path)?;
    println!("parsed {} sensor rows from {}", log.samples.len(), path.display());

    let config = ObserverConfig::default();
    let run = cascade::run(&log.samples, &config, &InitialConditions::default())?;
    let reference = log.reference.expect("log carries reference rows");
    let eval = cascade::evaluate(&run.outputs, &reference, 0.5 * config.imu_period)?;
    io::write_estimates(&dir.join("estimates.csv"), &run.outputs)?;
    println!(
        "{} Pitot updates, {} magnetometer updates; final errors: V {:.3e}, z {:.3e}, R {:.3e}",
        run.pitot_updates,
        run.mag_updates,
        eval.summary.final_air_vel_err,
        eval.summary.final_tilt_err,
        eval.summary.final_att_err
    );
    Ok(())
}
