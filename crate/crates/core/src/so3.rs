//! Rotation-group primitives shared by every estimator stage.
//!
//! Rotations are stored as [`Rotation3`] so the orthonormality invariant travels
//! with the type; the exponential map itself is evaluated here with the closed
//! Rodrigues form rather than delegated to nalgebra.

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type RotationMatrix = Rotation3<f64>;

/// Below this angle (rad) the exponential uses its second-order Taylor expansion.
pub const SMALL_ANGLE: f64 = 1e-6;

/// Tolerance used when checking `R Rᵀ = I` and `det R = 1`.
pub const ROTATION_TOL: f64 = 1e-9;

/// The skew-symmetric matrix with `skew(u) * v == u.cross(&v)`.
pub fn skew(u: &Vec3) -> Mat3 {
    Mat3::new(0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0)
}

/// Rodrigues exponential of `skew(theta)`.
pub fn exp_so3(theta: &Vec3) -> RotationMatrix {
    let angle = theta.norm();
    let k = skew(theta);
    let k2 = k * k;
    let m = if angle < SMALL_ANGLE {
        Mat3::identity() + k + 0.5 * k2
    } else {
        let half = 0.5 * angle;
        let s = angle.sin() / angle;
        // 1 - cos(a) = 2 sin²(a/2), without the cancellation
        let c = 2.0 * half.sin().powi(2) / (angle * angle);
        Mat3::identity() + s * k + c * k2
    };
    RotationMatrix::from_matrix_unchecked(m)
}

/// Rotation vector `θ` with `exp_so3(θ) == r`, angle in `[0, π]`.
pub fn log_so3(r: &RotationMatrix) -> Vec3 {
    let m = r.matrix();
    let cos = ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let vee = Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
    let angle = (0.5 * vee.norm()).atan2(cos);
    if angle < 1e-4 {
        // sin(a)/a ≈ 1 - a²/6
        return vee * 0.5 * (1.0 + angle * angle / 6.0);
    }
    if std::f64::consts::PI - angle > 1e-4 {
        return vee * (angle / (2.0 * angle.sin()));
    }
    // near a half turn: axis from the symmetric part, sign from the skew part
    let sym = (m + m.transpose()) * 0.5 - Mat3::identity() * cos;
    let col = (0..3)
        .max_by(|&i, &j| sym[(i, i)].total_cmp(&sym[(j, j)]))
        .unwrap_or(0);
    let mut axis = sym.column(col).into_owned().normalize();
    if axis.dot(&vee) < 0.0 {
        axis = -axis;
    }
    axis * angle
}

/// Geodesic interpolation `a exp(s log(aᵀ b))`, `s ∈ [0, 1]`.
pub fn slerp(a: &RotationMatrix, b: &RotationMatrix, s: f64) -> RotationMatrix {
    a * exp_so3(&(log_so3(&(a.transpose() * b)) * s))
}

/// Regularized projector `|u|² I − u uᵀ`. Well defined for `u = 0`.
pub fn reg_projector(u: &Vec3) -> Mat3 {
    u.norm_squared() * Mat3::identity() - u * u.transpose()
}

/// Uniformly distributed rotation, deterministic for a given seed.
pub fn random_rotation(seed: u64) -> RotationMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_rotation_with(&mut rng)
}

/// Uniform rotation drawn from a normalized quaternion of four standard normals.
pub fn random_rotation_with<R: Rng + ?Sized>(rng: &mut R) -> RotationMatrix {
    loop {
        let q = Quaternion::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        if q.norm() > 1e-12 {
            return UnitQuaternion::from_quaternion(q).to_rotation_matrix();
        }
    }
}

/// `trace(I − R̂ R_refᵀ)`, in `[0, 4]`.
pub fn attitude_error(estimate: &RotationMatrix, reference: &RotationMatrix) -> f64 {
    let rel = estimate.matrix() * reference.matrix().transpose();
    3.0 - rel.trace()
}

/// Frobenius distance of `R Rᵀ` from the identity.
pub fn orthonormality_error(m: &Mat3) -> f64 {
    (m * m.transpose() - Mat3::identity()).norm()
}

pub fn is_rotation(m: &Mat3, tol: f64) -> bool {
    orthonormality_error(m) <= tol && (m.determinant() - 1.0).abs() <= tol
}

/// Nearest rotation in the Frobenius sense (polar factor of `m`).
pub fn orthonormalize(m: &Mat3) -> RotationMatrix {
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    RotationMatrix::from_matrix_unchecked(r)
}

/// Body-to-inertial rotation from aerospace ZYX Euler angles: `Rz(yaw) Ry(pitch) Rx(roll)`.
pub fn from_euler_zyx(yaw: f64, pitch: f64, roll: f64) -> RotationMatrix {
    let rz = exp_so3(&(Vec3::z() * yaw));
    let ry = exp_so3(&(Vec3::y() * pitch));
    let rx = exp_so3(&(Vec3::x() * roll));
    rz * ry * rx
}

/// Inverse of [`from_euler_zyx`], returning `(yaw, pitch, roll)`.
pub fn to_euler_zyx(r: &RotationMatrix) -> (f64, f64, f64) {
    let m = r.matrix();
    let pitch = (-m[(2, 0)]).clamp(-1.0, 1.0).asin();
    let roll = m[(2, 1)].atan2(m[(2, 2)]);
    let yaw = m[(1, 0)].atan2(m[(0, 0)]);
    (yaw, pitch, roll)
}
