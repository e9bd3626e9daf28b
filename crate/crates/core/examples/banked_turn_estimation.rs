//! Runs the cascade observer on a simulated banked turn with typical sensor noise
//! and prints the error history once per five seconds.

use pitot_cascade::cascade::{self, InitialConditions, ObserverConfig};
use pitot_cascade::sim::{Scenario, SensorNoiseSpec, TrajectoryKind, TrajectorySpec};

fn main() -> pitot_cascade::Result<()> {
    let scenario = Scenario {
        noise: SensorNoiseSpec::typical(),
        seed: 7,
        ..Scenario::noise_free(TrajectorySpec::new(TrajectoryKind::BankedTurn))
    };
    let (truth, stream) = scenario.build()?;
    let config = ObserverConfig::default();
    let run = cascade::run(&stream, &config, &InitialConditions::default())?;
    let eval = cascade::evaluate(&run.outputs, &truth.reference(), 0.5 * config.imu_period)?;

    println!("{:>6} {:>12} {:>12} {:>12}", "t [s]", "|V err|", "|z err|", "att err");
    for m in eval.metrics.iter().step_by(1250) {
        println!("{:>6.1} {:>12.3e} {:>12.3e} {:>12.3e}", m.t, m.air_vel_err, m.tilt_err, m.att_err);
    }
    let last = run.outputs.last().expect("non-empty run");
    if let Some(aero) = last.aero {
        println!(
            "final airspeed {:.3} m/s, alpha {:.4} rad, beta {:.4} rad",
            aero.airspeed, aero.alpha, aero.beta
        );
    }
    let tail = eval.summary_after(40.0);
    println!("RMSE after 40 s: air velocity {:.3e} m/s, tilt {:.3e}", tail.air_vel_rmse, tail.tilt_rmse);
    Ok(())
}
