//! Convergence from random initial estimates: uniformly random attitude, tilt
//! on the unit sphere and air velocity within 10 m/s per axis.

use pitot_cascade::cascade::ObserverConfig;
use pitot_cascade::sim::{monte_carlo_agas, Scenario, TrajectoryKind, TrajectorySpec};

fn main() -> pitot_cascade::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let scenario = Scenario::noise_free(TrajectorySpec::new(TrajectoryKind::BankedTurn).with_duration(40.0));
    let summary = monte_carlo_agas(trials, &scenario, &ObserverConfig::default(), 2024)?;
    for t in summary.trials.iter().take(10) {
        println!(
            "trial {:>3}: initial att err {:.3}  converged at {}",
            t.trial,
            t.initial_att_err,
            t.att_convergence.map_or("never".into(), |s| format!("{s:.2} s"))
        );
    }
    println!(
        "{}/{} trials converged; slowest attitude convergence {:?} s",
        summary.converged(),
        summary.trials.len(),
        summary.worst_att_convergence()
    );
    Ok(())
}
