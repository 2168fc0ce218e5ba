//! Fiberwise reaction ODEs of the curvature operator, preserved-cone margins
//! and the Hamilton-Ivey pinching set.
//!
//! In dimension three the reaction system reduces to the eigenvalue ODE
//!
//!   d lambda/dt = 2 lambda^2 + 2 mu nu - 4 rho lambda (lambda + mu + nu)
//!
//! and its two cyclic companions; in general dimension the operator evolves
//! by 2 Q^2 + 2 Q# - 4 rho tr(Q) Q. Cone membership is expressed through
//! signed margins (nonnegative exactly on the cone).

pub mod rk;

use crate::error::{RbError, Result};
use crate::tensor::CurvatureOperator;
pub use rk::{integrate, DenseStep, OdeOptions, TrajStatus, Trajectory};

/// Ordered eigenvalue triple of a 3D curvature operator with its time stamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenState {
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub t: f64,
}

impl EigenState {
    pub fn new(lambda: f64, mu: f64, nu: f64) -> Self {
        EigenState { lambda, mu, nu, t: 0.0 }
    }

    pub fn is_ordered(&self) -> bool {
        self.lambda >= self.mu && self.mu >= self.nu
    }

    pub fn trace(&self) -> f64 {
        self.lambda + self.mu + self.nu
    }

    pub fn from_slice(y: &[f64], t: f64) -> Self {
        EigenState { lambda: y[0], mu: y[1], nu: y[2], t }
    }
}

/// Right-hand side of the 3D eigenvalue system.
pub fn eigen_rhs(s: &EigenState, rho: f64) -> (f64, f64, f64) {
    let tr = s.trace();
    (
        2.0 * s.lambda * s.lambda + 2.0 * s.mu * s.nu - 4.0 * rho * s.lambda * tr,
        2.0 * s.mu * s.mu + 2.0 * s.lambda * s.nu - 4.0 * rho * s.mu * tr,
        2.0 * s.nu * s.nu + 2.0 * s.lambda * s.mu - 4.0 * rho * s.nu * tr,
    )
}

/// Integrate the eigenvalue system from an ordered start.
pub fn integrate_eigen(s0: &EigenState, rho: f64, t_end: f64, tol: f64) -> Result<Trajectory> {
    if !s0.is_ordered() {
        return Err(RbError::InvalidParameter(format!(
            "integrate_eigen: start ({}, {}, {}) is not ordered",
            s0.lambda, s0.mu, s0.nu
        )));
    }
    let opt = OdeOptions::from_tol(tol)?;
    integrate(
        |t, y, dy| {
            let s = EigenState::from_slice(y, t);
            let (dl, dm, dn) = eigen_rhs(&s, rho);
            dy[0] = dl;
            dy[1] = dm;
            dy[2] = dn;
        },
        s0.t,
        &[s0.lambda, s0.mu, s0.nu],
        s0.t + t_end,
        &opt,
    )
}

/// Reaction term of the operator evolution: 2 Q^2 + 2 Q# - 4 rho tr(Q) Q.
pub fn matrix_fiber_rhs(q: &CurvatureOperator, rho: f64) -> CurvatureOperator {
    let mut mat = q.square().mat + q.sharp().mat;
    mat *= 2.0;
    mat -= &q.mat * (4.0 * rho * q.trace());
    CurvatureOperator { n: q.n, mat }
}

/// Integrate the operator ODE with the state flattened row-major.
pub fn integrate_operator(q0: &CurvatureOperator, rho: f64, t_end: f64, tol: f64) -> Result<Trajectory> {
    let n = q0.n;
    let nn = CurvatureOperator::lambda2_dim(n);
    let opt = OdeOptions::from_tol(tol)?;
    let y0: Vec<f64> = q0.mat.iter().cloned().collect();
    integrate(
        |_, y, dy| {
            let q = CurvatureOperator { n, mat: nalgebra::DMatrix::from_column_slice(nn, nn, y) };
            let r = matrix_fiber_rhs(&q, rho);
            for (d, v) in dy.iter_mut().zip(r.mat.iter()) {
                *d = *v;
            }
        },
        0.0,
        &y0,
        t_end,
        &opt,
    )
}

pub fn operator_from_flat(n: usize, y: &[f64]) -> CurvatureOperator {
    let nn = CurvatureOperator::lambda2_dim(n);
    CurvatureOperator { n, mat: nalgebra::DMatrix::from_column_slice(nn, nn, y) }
}

/// Curvature cones whose preservation the reaction ODE is tested against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConeSpec {
    ScalarNonneg,
    RicciNonneg,
    SecNonneg,
    /// Ric >= eps R g, feasible for 0 < eps <= 1/3.
    Pinching { eps: f64 },
    /// The time-dependent Hamilton-Ivey set; requires rho in [0, 1/6).
    /// `use_scalar_r` switches the trace normalization from tr(Q) = R/2 to
    /// the scalar curvature R itself (a statement-level variant, off by
    /// default).
    HamiltonIvey { rho: f64, use_scalar_r: bool },
}

impl ConeSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ConeSpec::Pinching { eps } => {
                if !(eps > 0.0 && eps <= 1.0 / 3.0) {
                    return Err(RbError::InvalidParameter(format!(
                        "pinching cone needs 0 < eps <= 1/3, got {eps}"
                    )));
                }
            }
            ConeSpec::HamiltonIvey { rho, .. } => {
                if !(0.0..1.0 / 6.0).contains(&rho) {
                    return Err(RbError::InvalidParameter(format!(
                        "hamilton_ivey cone needs rho in [0, 1/6), got {rho}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        match self {
            ConeSpec::ScalarNonneg => "scalar_nonneg".into(),
            ConeSpec::RicciNonneg => "ricci_nonneg".into(),
            ConeSpec::SecNonneg => "sec_nonneg".into(),
            ConeSpec::Pinching { eps } => format!("pinching({eps})"),
            ConeSpec::HamiltonIvey { rho, .. } => format!("hamilton_ivey({rho})"),
        }
    }

    /// Signed margin at time t: nonnegative exactly when the state is in the
    /// cone, continuous in the state.
    pub fn margin(&self, s: &EigenState, t: f64) -> f64 {
        match *self {
            ConeSpec::ScalarNonneg => s.trace(),
            ConeSpec::RicciNonneg => s.mu + s.nu,
            ConeSpec::SecNonneg => s.nu,
            ConeSpec::Pinching { eps } => {
                let c = (1.0 - 2.0 * eps) / (2.0 * eps);
                c * (s.mu + s.nu) - s.lambda
            }
            ConeSpec::HamiltonIvey { rho, use_scalar_r } => {
                // proof normalization: tr(Q) with operator eigenvalues; the
                // statement-level variant replaces tr by R = 2 tr.
                let tr = if use_scalar_r { 2.0 * s.trace() } else { s.trace() };
                let shift = 1.0 + 2.0 * (1.0 - 6.0 * rho) * t;
                let first = tr + 3.0 / shift;
                let threshold = s.nu + 1.0 / shift;
                let second = if s.nu < 0.0 {
                    let pinch = tr - s.nu.abs() * (s.nu.abs().ln() + shift.ln() - 3.0);
                    threshold.max(pinch)
                } else {
                    threshold
                };
                first.min(second)
            }
        }
    }
}

/// The monotone quantity of the Hamilton-Ivey proof:
/// f = tr(Q)/(-nu) - log(-nu) - log(1 + 2(1 - 6 rho) t). Requires nu < 0.
pub fn hi_pinching_function(s: &EigenState, t: f64, rho: f64) -> Result<f64> {
    if s.nu >= 0.0 {
        return Err(RbError::InvalidParameter(format!(
            "hi_pinching_function needs nu < 0, got {}",
            s.nu
        )));
    }
    Ok(s.trace() / (-s.nu) - (-s.nu).ln() - (1.0 + 2.0 * (1.0 - 6.0 * rho) * t).ln())
}

/// Random ordered start on or inside a cone, components drawn from [lo, hi].
///
/// Pinching with eps = 1/3 forces equal triples (the cone degenerates to the
/// constant-curvature ray); Hamilton-Ivey starts are normalized to nu = -1,
/// which always lies in K(0).
pub fn random_start_in_cone(
    cone: &ConeSpec,
    lo: f64,
    hi: f64,
    rng: &mut impl rand::Rng,
) -> EigenState {
    fn ordered(rng: &mut impl rand::Rng, a: f64, b: f64) -> EigenState {
        let mut v = [0.0f64; 3];
        for x in &mut v {
            *x = rng.gen_range(a..b);
        }
        v.sort_by(|x, y| y.partial_cmp(x).unwrap());
        EigenState::new(v[0], v[1], v[2])
    }
    match *cone {
        ConeSpec::SecNonneg => ordered(rng, lo.max(0.0), hi),
        ConeSpec::Pinching { eps } if (eps - 1.0 / 3.0).abs() < 1e-12 => {
            let c = rng.gen_range(lo.max(0.0)..hi);
            EigenState::new(c, c, c)
        }
        ConeSpec::HamiltonIvey { .. } => loop {
            let s = ordered(rng, lo, hi);
            if s.nu < -1e-6 {
                let scale = 1.0 / (-s.nu);
                return EigenState::new(s.lambda * scale, s.mu * scale, -1.0);
            }
        },
        _ => loop {
            let s = ordered(rng, lo, hi);
            if cone.margin(&s, 0.0) >= 0.0 {
                return s;
            }
        },
    }
}

/// Minimum of the Hamilton-Ivey pinching quantity along the trajectory over
/// samples with nu < 0; `None` when nu never goes negative.
pub fn hi_f_min(traj: &Trajectory, rho: f64) -> Option<f64> {
    let mut buf = vec![0.0; traj.dim];
    let mut out: Option<f64> = None;
    for step in &traj.steps {
        for q in 0..=4 {
            let t = step.t0 + step.h * q as f64 / 4.0;
            traj.sample(t, &mut buf);
            let s = EigenState::from_slice(&buf, t);
            if s.nu < 0.0 {
                let f = hi_pinching_function(&s, t, rho).expect("nu < 0 checked");
                out = Some(out.map_or(f, |m: f64| m.min(f)));
            }
        }
    }
    out
}

/// Earliest time at which the trajectory's margin drops below -tol, located
/// by bisection on the dense output; `None` if the cone is never left.
pub fn first_exit_time(traj: &Trajectory, cone: &ConeSpec, tol: f64) -> Option<f64> {
    cone.validate().ok()?;
    let margin_at = |t: f64, buf: &mut [f64]| -> f64 {
        traj.sample(t, buf);
        cone.margin(&EigenState::from_slice(buf, t), t)
    };
    let mut buf = vec![0.0; traj.dim];
    if margin_at(traj.t0, &mut buf) < -tol {
        return Some(traj.t0);
    }
    let mut t_ok = traj.t0;
    let mut t_bad = None;
    'outer: for step in &traj.steps {
        for q in 1..=4 {
            let t = step.t0 + step.h * q as f64 / 4.0;
            if margin_at(t, &mut buf) < -tol {
                t_bad = Some(t);
                break 'outer;
            }
            t_ok = t;
        }
    }
    let mut hi = t_bad?;
    let mut lo = t_ok;
    // scale-aware bisection on the dense output
    let state_scale = {
        traj.sample(hi, &mut buf);
        buf.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };
    let width_tol = 1e-10 * (1.0 + state_scale);
    while hi - lo > width_tol {
        let mid = 0.5 * (lo + hi);
        if margin_at(mid, &mut buf) < -tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rhs_spot_values() {
        // (1,1,1), rho = 0 -> (4,4,4)
        let (a, b, c) = eigen_rhs(&EigenState::new(1.0, 1.0, 1.0), 0.0);
        assert_eq!((a, b, c), (4.0, 4.0, 4.0));
        // flat fixed point
        let (a, b, c) = eigen_rhs(&EigenState::new(0.0, 0.0, 0.0), 0.3);
        assert_eq!((a, b, c), (0.0, 0.0, 0.0));
        // rho = 1/3 freezes constant-curvature states
        let (a, b, c) = eigen_rhs(&EigenState::new(1.0, 1.0, 1.0), 1.0 / 3.0);
        assert!(a.abs() < 1e-15 && b.abs() < 1e-15 && c.abs() < 1e-15);
    }

    /// Constant-curvature closed form c(t) = k / (1 - 4 k t) at rho = 0.
    #[test]
    fn constant_curvature_closed_form() {
        let k = 0.7;
        let traj = integrate_eigen(&EigenState::new(k, k, k), 0.0, 0.9 / (4.0 * k), 1e-10).unwrap();
        assert_eq!(traj.status, TrajStatus::Completed);
        let mut buf = [0.0; 3];
        for s in 1..20 {
            let t = s as f64 * 0.045 / (4.0 * k) * 4.0 * 0.9f64.min(1.0);
            let t = t.min(0.9 / (4.0 * k));
            traj.sample(t, &mut buf);
            let expect = k / (1.0 - 4.0 * k * t);
            for v in buf {
                assert_relative_eq!(v, expect, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn unordered_start_rejected() {
        assert!(integrate_eigen(&EigenState::new(0.0, 1.0, 0.0), 0.0, 1.0, 1e-8).is_err());
        assert!(integrate_eigen(&EigenState::new(1.0, 0.5, 0.0), 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn sec_nonneg_preserved_from_boundary() {
        let traj = integrate_eigen(&EigenState::new(2.0, 1.0, 0.0), 0.0, 10.0, 1e-9).unwrap();
        assert_eq!(traj.status, TrajStatus::BlowUp);
        assert_eq!(first_exit_time(&traj, &ConeSpec::SecNonneg, 1e-8), None);
    }

    #[test]
    fn diagonal_equality_preserved() {
        // lambda = mu = nu stays exactly equal for any rho < 1/4
        for &rho in &[0.0, 0.1, 0.2] {
            let traj = integrate_eigen(&EigenState::new(1.0, 1.0, 1.0), rho, 5.0, 1e-9).unwrap();
            let y = traj.final_state();
            assert_eq!(y[0], y[1]);
            assert_eq!(y[1], y[2]);
        }
    }

    #[test]
    fn matrix_rhs_matches_eigen_system_on_diagonal() {
        let q = CurvatureOperator::from_diagonal(3, &[1.5, 0.25, -0.75]);
        for &rho in &[0.0, 0.15] {
            let r = matrix_fiber_rhs(&q, rho);
            // basis pairs (0,1), (0,2), (1,2): sharp pairs each entry with the
            // product of the other two
            let s = EigenState::new(1.5, 0.25, -0.75);
            let (dl, dm, dn) = eigen_rhs(&s, rho);
            assert_relative_eq!(r.mat[(0, 0)], dl, epsilon = 1e-12);
            assert_relative_eq!(r.mat[(1, 1)], dm, epsilon = 1e-12);
            assert_relative_eq!(r.mat[(2, 2)], dn, epsilon = 1e-12);
            // off-diagonal stays zero
            assert!(r.mat[(0, 1)].abs() < 1e-14);
        }
    }

    #[test]
    fn matrix_rhs_zero() {
        let q = CurvatureOperator::zeros(4);
        assert_eq!(matrix_fiber_rhs(&q, 0.2).mat.norm(), 0.0);
    }

    /// n = 4, Q = k Id6: square and sharp via the B route agree with direct
    /// matrix algebra.
    #[test]
    fn n4_dual_path_identity_state() {
        let k = 0.6;
        let mut q = CurvatureOperator::identity(4);
        q.mat *= k;
        let direct = q.square().mat.clone();
        let via_b = q.square_via_b().mat.clone();
        let mut err = 0.0f64;
        for (a, b) in direct.iter().zip(via_b.iter()) {
            err = err.max((a - b).abs());
        }
        assert!(err < 1e-12, "err={err}");
        let r = matrix_fiber_rhs(&q, 0.05);
        // reaction of k Id: 2k^2 (Id^2) + 2 (kId)# - 4 rho (6k) kId
        // (kId)# in n = 4: sharp of identity times k^2
        let sharp_id = CurvatureOperator::identity(4).sharp().mat * (k * k);
        let expect = CurvatureOperator::identity(4).mat * (2.0 * k * k) + sharp_id * 2.0
            - CurvatureOperator::identity(4).mat * (4.0 * 0.05 * 6.0 * k * k);
        assert_relative_eq!(r.mat, expect, epsilon = 1e-11);
    }

    #[test]
    fn cone_margins_spot_values() {
        // boundary of sec_nonneg
        assert_eq!(ConeSpec::SecNonneg.margin(&EigenState::new(1.0, 0.5, 0.0), 0.0), 0.0);
        // pinching eps = 1/3 at constant curvature: C = 1/2, margin 0
        let c = ConeSpec::Pinching { eps: 1.0 / 3.0 };
        let m = c.margin(&EigenState::new(2.0, 2.0, 2.0), 0.0);
        assert!(m.abs() < 1e-14);
        // Hamilton-Ivey at t = 0, state (2, 1, -1): both branches give 5
        let hi = ConeSpec::HamiltonIvey { rho: 0.0, use_scalar_r: false };
        let m = hi.margin(&EigenState::new(2.0, 1.0, -1.0), 0.0);
        assert!(m > 0.0);
        assert_relative_eq!(m, 5.0, epsilon = 1e-14);
    }

    #[test]
    fn cone_validation() {
        assert!(ConeSpec::Pinching { eps: 0.4 }.validate().is_err());
        assert!(ConeSpec::Pinching { eps: 0.0 }.validate().is_err());
        assert!(ConeSpec::HamiltonIvey { rho: 0.2, use_scalar_r: false }.validate().is_err());
        assert!(ConeSpec::HamiltonIvey { rho: 0.1, use_scalar_r: false }.validate().is_ok());
    }

    #[test]
    fn hi_function_values() {
        let f = hi_pinching_function(&EigenState::new(2.0, 1.0, -1.0), 0.0, 0.0).unwrap();
        assert_relative_eq!(f, 2.0, epsilon = 1e-14);
        // sign-convention regression: tr = -1 so f = -1, not +1
        let f = hi_pinching_function(&EigenState::new(0.0, 0.0, -1.0), 0.0, 0.07).unwrap();
        assert_relative_eq!(f, -1.0, epsilon = 1e-14);
        assert!(hi_pinching_function(&EigenState::new(1.0, 1.0, 0.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn exit_time_for_start_outside() {
        let traj = integrate_eigen(&EigenState::new(1.0, -0.4, -0.5), 0.0, 1.0, 1e-8).unwrap();
        let t = first_exit_time(&traj, &ConeSpec::RicciNonneg, 1e-8);
        assert_eq!(t, Some(0.0));
    }

    #[test]
    fn pinching_third_never_exits() {
        let traj = integrate_eigen(&EigenState::new(1.0, 1.0, 1.0), 0.1, 5.0, 1e-9).unwrap();
        assert_eq!(first_exit_time(&traj, &ConeSpec::Pinching { eps: 1.0 / 3.0 }, 1e-8), None);
    }

    #[test]
    fn ordering_preserved_along_trajectories() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(40);
        for &rho in &[0.0, 0.1, 0.2] {
            for _ in 0..200 {
                let mut v = [rng.gen_range(-1.0..1.5), rng.gen_range(-1.0..1.5), rng.gen_range(-1.0..1.5)];
                v.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let traj = integrate_eigen(&EigenState::new(v[0], v[1], v[2]), rho, 3.0, 1e-8).unwrap();
                let mut buf = [0.0; 3];
                for step in &traj.steps {
                    for q in 1..=2 {
                        let t = step.t0 + step.h * q as f64 / 2.0;
                        traj.sample(t, &mut buf);
                        assert!(buf[0] >= buf[1] - 1e-8 && buf[1] >= buf[2] - 1e-8, "state {buf:?}");
                    }
                }
            }
        }
    }
}
