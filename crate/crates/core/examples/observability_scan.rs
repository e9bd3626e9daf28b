//! Windowed observability diagnostics for every built-in trajectory: smallest
//! Gramian eigenvalue and the condition number of the excitation matrix.

use pitot_cascade::model::PitotConfig;
use pitot_cascade::observability::window_scan;
use pitot_cascade::sim::{generate_truth, TrajectoryKind, TrajectorySpec, WindModel};

fn main() -> pitot_cascade::Result<()> {
    let cfg = PitotConfig::with_pseudo_sideslip();
    for kind in TrajectoryKind::ALL {
        let spec = TrajectorySpec::new(kind).with_duration(20.0);
        let truth = generate_truth(&spec, &WindModel::default(), 0)?;
        let rows = window_scan(&truth.rates(), &truth.attitudes(), &cfg, 2.0, truth.gravity)?;
        let singular = rows.iter().filter(|r| r.cond_m.is_infinite()).count();
        let worst = rows.iter().map(|r| r.min_eig_gramian).fold(f64::INFINITY, f64::min);
        let worst_cond = rows.iter().map(|r| r.cond_m).fold(0.0, f64::max);
        println!(
            "{:<16} windows {:>2}  singular {:>2}  min eig W {:>10.3e}  max cond(M) {:>10.3e}",
            kind.name(),
            rows.len(),
            singular,
            worst,
            worst_cond
        );
    }
    Ok(())
}
