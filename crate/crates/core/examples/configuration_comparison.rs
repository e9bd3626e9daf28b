//! Compares a single-axis Pitot probe with and without the zero-sideslip
//! pseudo-measurement on the same noisy flight.

use pitot_cascade::cascade::{self, InitialConditions, ObserverConfig};
use pitot_cascade::sim::{Scenario, SensorNoiseSpec, TrajectoryKind, TrajectorySpec};

fn main() -> pitot_cascade::Result<()> {
    let scenario = Scenario {
        noise: SensorNoiseSpec::typical(),
        seed: 5,
        ..Scenario::noise_free(TrajectorySpec::new(TrajectoryKind::YawPitchWeave))
    };
    let (truth, stream) = scenario.build()?;
    let reference = truth.reference();
    for (label, config) in [
        ("probe + pseudo-sideslip", ObserverConfig::default()),
        ("probe only", ObserverConfig::single_axis()),
    ] {
        let run = cascade::run(&stream, &config, &InitialConditions::default())?;
        let eval = cascade::evaluate(&run.outputs, &reference, 0.5 * config.imu_period)?;
        let tail = eval.summary_after(40.0);
        println!(
            "{label:<24} air velocity RMSE {:.4} m/s  tilt RMSE {:.3e}  attitude RMSE {:.3e}",
            tail.air_vel_rmse, tail.tilt_rmse, tail.att_rmse
        );
    }
    Ok(())
}
