//! Observability diagnostics for the air-velocity / tilt system.
//!
//! Two independent routes are provided:
//!
//! * from the gyro trace, via the factored transition matrix
//!   `Φ(t, s) = [[Φ₁₁, g(t−s)Φ₁₁], [0, Φ₁₁]]` with `Φ₁₁` composed from
//!   per-sample Rodrigues increments, giving the observability Gramian;
//! * from an attitude trace, via `Σ(s) = R(s) B Bᵀ R(s)ᵀ`, giving the
//!   transformed Gramian, the excitation average and the windowed `M̄` matrix.
//!
//! Integrals use composite Simpson quadrature over the sample grid, with the
//! midpoint rotation obtained exactly (half-step exponential or geodesic midpoint).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Matrix6, PitotConfig};
use crate::riccati::phi11;
use crate::series::Series;
use crate::so3::{Mat3, RotationMatrix, Vec3};

/// Relative eigenvalue floor below which a matrix is reported as singular.
pub const SINGULAR_RATIO: f64 = 1e-12;

pub type RateTrace = Series<Vec3>;
pub type AttitudeTrace = Series<RotationMatrix>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GramianReport {
    pub window: (f64, f64),
    #[serde(skip)]
    pub gramian: Matrix6,
    pub min_eig: f64,
    pub max_eig: f64,
    pub cond: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeReport {
    pub window: (f64, f64),
    #[serde(skip)]
    pub sigma_avg: Mat3,
    pub min_eig: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CondMReport {
    pub index: usize,
    pub window: (f64, f64),
    #[serde(skip)]
    pub m_bar: Mat3,
    pub cond: f64,
}

/// One row of the windowed observability scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowRow {
    pub t_start: f64,
    pub t_end: f64,
    pub min_eig_gramian: f64,
    pub cond_gramian: f64,
    pub min_eig_sigma: f64,
    pub cond_m: f64,
}

/// `max/min` eigenvalue ratio, infinite when `min < SINGULAR_RATIO · max`.
pub fn condition_number(min_eig: f64, max_eig: f64) -> f64 {
    if max_eig <= 0.0 || min_eig < SINGULAR_RATIO * max_eig {
        f64::INFINITY
    } else {
        max_eig / min_eig
    }
}

fn extreme_eigs<const N: usize>(m: &nalgebra::SMatrix<f64, N, N>) -> (f64, f64) {
    let eig = nalgebra::DMatrix::from_column_slice(N, N, m.as_slice()).symmetric_eigenvalues();
    (eig.min(), eig.max())
}

fn uncovered(a: f64, b: f64) -> Error {
    Error::Spec(format!("trace does not cover the window [{a}, {b}]"))
}

/// Quadrature nodes for `[a, b]`: the endpoints plus every sample time in between.
fn nodes(times: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len() + 2);
    out.push(a);
    out.extend(times.iter().copied().filter(|&t| t > a && t < b));
    if b > a {
        out.push(b);
    }
    out
}

/// Assembles `[[G, τgG], [τgG, τ²g²G]]`.
fn gramian_integrand(g_block: &Mat3, tau_g: f64) -> Matrix6 {
    let mut f = Matrix6::zeros();
    f.fixed_view_mut::<3, 3>(0, 0).copy_from(g_block);
    f.fixed_view_mut::<3, 3>(0, 3).copy_from(&(g_block * tau_g));
    f.fixed_view_mut::<3, 3>(3, 0).copy_from(&(g_block * tau_g));
    f.fixed_view_mut::<3, 3>(3, 3).copy_from(&(g_block * (tau_g * tau_g)));
    f
}

/// State transition matrix `Φ(t, s)` (maps the state at `s` to `t`), `s ≤ t`.
pub fn transition_matrix(rates: &RateTrace, t: f64, s: f64, gravity: f64) -> Result<Matrix6> {
    if s > t || !rates.covers(s, t) {
        return Err(uncovered(s, t));
    }
    let knots = nodes(rates.times(), s, t);
    let mut block = Mat3::identity();
    for w in knots.windows(2) {
        block = phi11(&rates.held(w[0]), w[1] - w[0]).into_inner() * block;
    }
    let mut phi = Matrix6::zeros();
    phi.fixed_view_mut::<3, 3>(0, 0).copy_from(&block);
    phi.fixed_view_mut::<3, 3>(3, 3).copy_from(&block);
    phi.fixed_view_mut::<3, 3>(0, 3).copy_from(&(block * (gravity * (t - s))));
    Ok(phi)
}

fn gramian_report(window: (f64, f64), gramian: Matrix6) -> GramianReport {
    let (min_eig, max_eig) = extreme_eigs(&gramian);
    GramianReport {
        window,
        gramian,
        min_eig,
        max_eig,
        cond: condition_number(min_eig, max_eig),
    }
}

/// Observability Gramian `W(t, t+δ)` from the gyro trace.
pub fn gramian(rates: &RateTrace, cfg: &PitotConfig, t: f64, delta: f64, gravity: f64) -> Result<GramianReport> {
    gramian_refined(rates, cfg, t, delta, gravity, 1)
}

/// As [`gramian`], with each sample interval split into `substeps` Simpson panels.
pub fn gramian_refined(
    rates: &RateTrace,
    cfg: &PitotConfig,
    t: f64,
    delta: f64,
    gravity: f64,
    substeps: usize,
) -> Result<GramianReport> {
    gramian_for_output(rates, &cfg.axes_gram(), t, delta, gravity, substeps)
}

/// Gramian for an arbitrary output Gram matrix `B Bᵀ` (so that `CᵀC = C̄ᵀ B Bᵀ C̄`).
pub fn gramian_for_output(
    rates: &RateTrace,
    bbt: &Mat3,
    t: f64,
    delta: f64,
    gravity: f64,
    substeps: usize,
) -> Result<GramianReport> {
    if !(delta > 0.0) || substeps == 0 {
        return Err(Error::Spec("Gramian window and substeps must be positive".into()));
    }
    let end = t + delta;
    if !rates.covers(t, end) {
        return Err(uncovered(t, end));
    }
    let integrand = |block: &Mat3, s: f64| gramian_integrand(&(block.transpose() * bbt * block), gravity * (s - t));
    let mut block = Mat3::identity();
    let mut sum = Matrix6::zeros();
    for w in nodes(rates.times(), t, end).windows(2) {
        let omega = rates.held(w[0]);
        let h = (w[1] - w[0]) / substeps as f64;
        let half = phi11(&omega, 0.5 * h).into_inner();
        for j in 0..substeps {
            let s0 = w[0] + j as f64 * h;
            let mid = half * block;
            let next = half * mid;
            sum += (integrand(&block, s0) + 4.0 * integrand(&mid, s0 + 0.5 * h) + integrand(&next, s0 + h)) * (h / 6.0);
            block = next;
        }
    }
    let w = sum / delta;
    Ok(gramian_report((t, end), 0.5 * (w + w.transpose())))
}

/// Composite Simpson integral of `f(R(s), s)` over `[a, b]` with geodesic midpoints.
fn integrate_attitudes<F>(attitudes: &AttitudeTrace, a: f64, b: f64, substeps: usize, f: F) -> Result<Matrix6>
where
    F: Fn(&RotationMatrix, f64) -> Matrix6,
{
    if !attitudes.covers(a, b) {
        return Err(uncovered(a, b));
    }
    let mut sum = Matrix6::zeros();
    for w in nodes(attitudes.times(), a, b).windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        for j in 0..substeps {
            let s0 = w[0] + j as f64 * h;
            let r0 = attitudes.interpolate(s0);
            let r1 = attitudes.interpolate(s0 + h);
            let rm = crate::so3::slerp(&r0, &r1, 0.5);
            sum += (f(&r0, s0) + 4.0 * f(&rm, s0 + 0.5 * h) + f(&r1, s0 + h)) * (h / 6.0);
        }
    }
    Ok(sum)
}

fn sigma(r: &RotationMatrix, bbt: &Mat3) -> Mat3 {
    r.matrix() * bbt * r.matrix().transpose()
}

fn embed3(m: &Mat3) -> Matrix6 {
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(m);
    out
}

/// Gramian of the rotated system `x̄ = diag(R, R) x`, built from `Σ(s)`.
/// Its spectrum (and Frobenius norm) equals that of [`gramian`] on a consistent trace.
pub fn transformed_gramian(
    attitudes: &AttitudeTrace,
    cfg: &PitotConfig,
    t: f64,
    delta: f64,
    gravity: f64,
) -> Result<GramianReport> {
    if !(delta > 0.0) {
        return Err(Error::Spec("Gramian window must be positive".into()));
    }
    let bbt = cfg.axes_gram();
    let sum = integrate_attitudes(attitudes, t, t + delta, 1, |r, s| {
        gramian_integrand(&sigma(r, &bbt), gravity * (s - t))
    })?;
    let w = sum / delta;
    Ok(gramian_report((t, t + delta), 0.5 * (w + w.transpose())))
}

fn integrate_sigma(attitudes: &AttitudeTrace, cfg: &PitotConfig, a: f64, b: f64) -> Result<Mat3> {
    let bbt = cfg.axes_gram();
    let sum = integrate_attitudes(attitudes, a, b, 1, |r, _| embed3(&sigma(r, &bbt)))?;
    let m = sum.fixed_view::<3, 3>(0, 0).into_owned();
    Ok(0.5 * (m + m.transpose()))
}

/// Windowed excitation average `(1/δ̄) ∫ R B Bᵀ Rᵀ ds`.
pub fn pe_metric(attitudes: &AttitudeTrace, cfg: &PitotConfig, t: f64, delta_bar: f64) -> Result<PeReport> {
    if !(delta_bar > 0.0) {
        return Err(Error::Spec("excitation window must be positive".into()));
    }
    let avg = integrate_sigma(attitudes, cfg, t, t + delta_bar)? / delta_bar;
    Ok(PeReport {
        window: (t, t + delta_bar),
        min_eig: avg.symmetric_eigenvalues().min(),
        sigma_avg: avg,
    })
}

/// `M̄` and its condition number over contiguous `δ`-long windows starting at the trace start.
pub fn cond_m_monitor(attitudes: &AttitudeTrace, cfg: &PitotConfig, delta: f64) -> Result<Vec<CondMReport>> {
    window_starts(attitudes.start(), attitudes.end(), delta)?
        .into_iter()
        .enumerate()
        .map(|(index, a)| {
            let m_bar = integrate_sigma(attitudes, cfg, a, a + delta)?;
            let (min_eig, max_eig) = extreme_eigs(&m_bar);
            Ok(CondMReport {
                index,
                window: (a, a + delta),
                m_bar,
                cond: condition_number(min_eig, max_eig),
            })
        })
        .collect()
}

fn window_starts(start: f64, end: f64, delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(Error::Spec("window length must be positive".into()));
    }
    let count = ((end - start) / delta + 1e-9).floor().max(0.0) as usize;
    Ok((0..count).map(|k| start + k as f64 * delta).collect())
}

/// Per-window Gramian (gyro route), excitation average and `M̄` conditioning.
pub fn window_scan(
    rates: &RateTrace,
    attitudes: &AttitudeTrace,
    cfg: &PitotConfig,
    delta: f64,
    gravity: f64,
) -> Result<Vec<WindowRow>> {
    let start = rates.start().max(attitudes.start());
    let end = rates.end().min(attitudes.end());
    window_starts(start, end, delta)?
        .into_iter()
        .map(|a| {
            let w = gramian(rates, cfg, a, delta, gravity)?;
            let pe = pe_metric(attitudes, cfg, a, delta)?;
            let (min_m, max_m) = extreme_eigs(&(pe.sigma_avg * delta));
            Ok(WindowRow {
                t_start: a,
                t_end: a + delta,
                min_eig_gramian: w.min_eig,
                cond_gramian: w.cond,
                min_eig_sigma: pe.min_eig,
                cond_m: condition_number(min_m, max_m),
            })
        })
        .collect()
}
