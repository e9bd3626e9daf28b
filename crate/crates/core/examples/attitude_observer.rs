//! Attitude observer driven by exact tilt and magnetometer directions, starting
//! from a large rotation error.

use pitot_cascade::attitude::{self, AttitudeGains, AttitudeState};
use pitot_cascade::so3::{attitude_error, exp_so3, from_euler_zyx, Vec3};

fn main() -> pitot_cascade::Result<()> {
    let gains = AttitudeGains::new(2.0, 1.0)?;
    let m_inertial = Vec3::new(1.0, 0.0, 1.0).normalize();
    let ts = 1.0 / 250.0;
    let omega = Vec3::new(0.1, -0.2, 0.3);

    let mut truth = from_euler_zyx(0.3, 0.1, -0.2);
    let mut est = AttitudeState::new(from_euler_zyx(2.5, -0.8, 1.2));
    for k in 0..=5000 {
        if k % 500 == 0 {
            println!("t = {:>5.1} s  attitude error {:.3e}", k as f64 * ts, attitude_error(&est.rotation, &truth));
        }
        let tilt = truth.transpose() * Vec3::z();
        let m_body = truth.transpose() * m_inertial;
        let sigma = attitude::correction(&est.rotation, &tilt, &m_body, &m_inertial, &gains);
        est = attitude::step(&est, &omega, &sigma, ts);
        truth *= exp_so3(&(omega * ts));
    }
    Ok(())
}
