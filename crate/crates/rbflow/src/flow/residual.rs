//! Residuals of the curvature evolution equations: the centered time
//! derivative of a quantity along three consecutive states is compared to
//! its evolution right-hand side assembled from the pointwise curvature.

use crate::error::{RbError, Result};
use crate::flow::FlowState;
use crate::grid::TensorField;
use crate::tensor::curvature::{covariant_derivative, rough_laplacian_with};
use crate::tensor::fiber::{b_reaction, b_tensor, kulkarni_nomizu, ric_action, FourTensor};
use crate::tensor::weyl::weyl_rhs_zeroth_order;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualTarget {
    Christoffel,
    Scalar,
    Ricci,
    Riemann,
    Weyl,
    Volume,
}

impl ResidualTarget {
    pub fn all() -> [ResidualTarget; 6] {
        [
            ResidualTarget::Christoffel,
            ResidualTarget::Scalar,
            ResidualTarget::Ricci,
            ResidualTarget::Riemann,
            ResidualTarget::Weyl,
            ResidualTarget::Volume,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            ResidualTarget::Christoffel => "christoffel",
            ResidualTarget::Scalar => "scalar",
            ResidualTarget::Ricci => "ricci",
            ResidualTarget::Riemann => "riemann",
            ResidualTarget::Weyl => "weyl",
            ResidualTarget::Volume => "volume",
        }
    }
}

impl std::str::FromStr for ResidualTarget {
    type Err = RbError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "christoffel" => Ok(ResidualTarget::Christoffel),
            "scalar" => Ok(ResidualTarget::Scalar),
            "ricci" => Ok(ResidualTarget::Ricci),
            "riemann" => Ok(ResidualTarget::Riemann),
            "weyl" => Ok(ResidualTarget::Weyl),
            "volume" => Ok(ResidualTarget::Volume),
            other => Err(RbError::UnknownVariant(other.to_string())),
        }
    }
}

/// || d_t(numeric) - RHS ||_inf / (|| RHS ||_inf + 1) for the middle of three
/// consecutive fixed-dt states.
pub fn evolution_residual(states: &[FlowState], target: ResidualTarget, rho: f64) -> Result<f64> {
    if states.len() < 3 {
        return Err(RbError::InvalidParameter("evolution_residual needs >= 3 consecutive states".into()));
    }
    let (s0, s1, s2) = (&states[0], &states[1], &states[2]);
    let dt01 = s1.t - s0.t;
    let dt12 = s2.t - s1.t;
    if (dt01 - dt12).abs() > 1e-13 * dt01.abs().max(1.0) || dt01 <= 0.0 {
        return Err(RbError::InvalidParameter(format!(
            "evolution_residual needs a fixed positive dt, got {dt01} and {dt12}"
        )));
    }
    if s0.metric.grid != s1.metric.grid || s1.metric.grid != s2.metric.grid {
        return Err(RbError::GridMismatch("evolution_residual: states on different grids".into()));
    }
    let dt = dt01;

    let (numeric, rhs): (TensorField, TensorField) = match target {
        ResidualTarget::Christoffel => (
            time_derivative(&s0.bundle.gamma, &s2.bundle.gamma, dt),
            christoffel_rhs(s1, rho),
        ),
        ResidualTarget::Scalar => (
            time_derivative(&s0.bundle.scal, &s2.bundle.scal, dt),
            scalar_rhs(s1, rho),
        ),
        ResidualTarget::Ricci => (
            time_derivative(&s0.bundle.ric, &s2.bundle.ric, dt),
            ricci_rhs(s1, rho),
        ),
        ResidualTarget::Riemann => (
            time_derivative(&s0.bundle.riem, &s2.bundle.riem, dt),
            riemann_rhs(s1, rho),
        ),
        ResidualTarget::Weyl => (
            time_derivative(&s0.bundle.weyl, &s2.bundle.weyl, dt),
            weyl_rhs(s1, rho),
        ),
        ResidualTarget::Volume => (
            time_derivative(&s0.bundle.sqrt_det, &s2.bundle.sqrt_det, dt),
            volume_rhs(s1, rho),
        ),
    };

    let mut diff = 0.0f64;
    for (a, b) in numeric.data.iter().zip(&rhs.data) {
        diff = diff.max((a - b).abs());
    }
    Ok(diff / (rhs.sup_norm() + 1.0))
}

fn time_derivative(a: &TensorField, b: &TensorField, dt: f64) -> TensorField {
    let mut out = b.clone();
    out.axpy(-1.0, a);
    out.scale(1.0 / (2.0 * dt));
    out
}

/// d_t Gamma^i_jk = -g^{il} (D_j S_kl + D_k S_jl - D_l S_jk), S = Ric - rho R g.
fn christoffel_rhs(state: &FlowState, rho: f64) -> TensorField {
    let n = state.metric.n;
    let grid = &state.metric.grid;
    let mut s_field = TensorField::zeros(grid, 2);
    for p in 0..grid.len() {
        let r = state.bundle.scal.get(p, &[]);
        for i in 0..n {
            for j in 0..n {
                let v = state.bundle.ric.get(p, &[i, j]) - rho * r * state.metric.g.get(p, &[i, j]);
                s_field.set(p, &[i, j], v);
            }
        }
    }
    let ds = covariant_derivative(&s_field, &state.bundle.gamma); // (a, i, j)
    let mut out = TensorField::zeros(grid, 3);
    for p in 0..grid.len() {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = 0.0;
                    for l in 0..n {
                        v += state.bundle.ginv.get(p, &[i, l])
                            * (ds.get(p, &[j, k, l]) + ds.get(p, &[k, j, l]) - ds.get(p, &[l, j, k]));
                    }
                    out.set(p, &[i, j, k], -v);
                }
            }
        }
    }
    out
}

/// d_t R = (1 - 2(n-1) rho) Lap R + 2 |Ric|^2 - 2 rho R^2.
fn scalar_rhs(state: &FlowState, rho: f64) -> TensorField {
    let n = state.metric.n;
    let grid = &state.metric.grid;
    let mut lap = rough_laplacian_with(&state.bundle.scal, &state.bundle.gamma, &state.bundle.ginv);
    lap.scale(1.0 - 2.0 * (n as f64 - 1.0) * rho);
    let mut out = lap;
    for p in 0..grid.len() {
        let ginv = state.bundle.ginv_at(p);
        let ric = state.bundle.ric_at(p);
        let ric2 = (&ric * &ginv * &ric * &ginv).trace();
        let r = state.bundle.scal.get(p, &[]);
        out.data[p] += 2.0 * ric2 - 2.0 * rho * r * r;
    }
    out
}

/// d_t R_ik = Lap R_ik + 2 g^{pq} g^{rs} R_pirk R_qs - 2 g^{pq} R_pi R_qk
///            - (n-2) rho Hess_ik R - rho Lap R g_ik.
fn ricci_rhs(state: &FlowState, rho: f64) -> TensorField {
    let n = state.metric.n;
    let grid = &state.metric.grid;
    let mut out = rough_laplacian_with(&state.bundle.ric, &state.bundle.gamma, &state.bundle.ginv);
    let lap_r = rough_laplacian_with(&state.bundle.scal, &state.bundle.gamma, &state.bundle.ginv);
    let grad_r = covariant_derivative(&state.bundle.scal, &state.bundle.gamma);
    let hess_r = covariant_derivative(&grad_r, &state.bundle.gamma); // (i, k)
    for p in 0..grid.len() {
        let ginv = state.bundle.ginv_at(p);
        let ric = state.bundle.ric_at(p);
        let ric_up = &ginv * &ric * &ginv; // Ric^{pr}
        let riem = state.bundle.riem_at(p);
        for i in 0..n {
            for k in 0..n {
                let mut quad = 0.0;
                for pp in 0..n {
                    for r in 0..n {
                        quad += riem.get(pp, i, r, k) * ric_up[(pp, r)];
                    }
                }
                let ric_sq = {
                    let mut v = 0.0;
                    for pp in 0..n {
                        for q in 0..n {
                            v += ginv[(pp, q)] * ric[(pp, i)] * ric[(q, k)];
                        }
                    }
                    v
                };
                let v = out.get(p, &[i, k]) + 2.0 * quad - 2.0 * ric_sq
                    - (n as f64 - 2.0) * rho * hess_r.get(p, &[i, k])
                    - rho * lap_r.get(p, &[]) * state.metric.g.get(p, &[i, k]);
                out.set(p, &[i, k], v);
            }
        }
    }
    out
}

/// d_t R_ijkl = Lap R_ijkl + 2 (B antisymmetrization) - Ric action
///              - rho (Hess R ^o g) + 2 rho R R_ijkl.
fn riemann_rhs(state: &FlowState, rho: f64) -> TensorField {
    let grid = &state.metric.grid;
    let mut out = rough_laplacian_with(&state.bundle.riem, &state.bundle.gamma, &state.bundle.ginv);
    let grad_r = covariant_derivative(&state.bundle.scal, &state.bundle.gamma);
    let hess_r = covariant_derivative(&grad_r, &state.bundle.gamma);
    let n = state.metric.n;
    for p in 0..grid.len() {
        let g = state.metric.metric_at(p);
        let ginv = state.bundle.ginv_at(p);
        let ric = state.bundle.ric_at(p);
        let riem = state.bundle.riem_at(p);
        let r = state.bundle.scal.get(p, &[]);

        let b = b_tensor(&riem, &riem, &ginv).expect("matched fibers");
        let mut fiber = b_reaction(&b);
        fiber.scale(2.0);
        fiber.axpy(-1.0, &ric_action(&riem, &ric, &ginv));
        let hess = nalgebra::DMatrix::from_fn(n, n, |i, k| hess_r.get(p, &[i, k]));
        fiber.axpy(-rho, &kulkarni_nomizu(&hess, &g).expect("same n"));
        let mut rr = riem.clone();
        rr.scale(2.0 * rho * r);
        fiber.axpy(1.0, &rr);

        let base = p * out.ncomp();
        for (c, v) in fiber.a.iter().enumerate() {
            out.data[base + c] += v;
        }
    }
    out
}

/// d_t W = Lap W + reaction (see [`weyl_rhs_zeroth_order`]).
fn weyl_rhs(state: &FlowState, rho: f64) -> TensorField {
    let grid = &state.metric.grid;
    let mut out = rough_laplacian_with(&state.bundle.weyl, &state.bundle.gamma, &state.bundle.ginv);
    for p in 0..grid.len() {
        let g = state.metric.metric_at(p);
        let ric = state.bundle.ric_at(p);
        let r = state.bundle.scal.get(p, &[]);
        let w = state.bundle.weyl_at(p);
        let fiber: FourTensor =
            weyl_rhs_zeroth_order(&w, &ric, r, &g, rho).expect("n >= 3 checked by caller");
        let base = p * out.ncomp();
        for (c, v) in fiber.a.iter().enumerate() {
            out.data[base + c] += v;
        }
    }
    out
}

/// d_t sqrt(det g) = (n rho - 1) R sqrt(det g).
fn volume_rhs(state: &FlowState, rho: f64) -> TensorField {
    let grid = &state.metric.grid;
    let n = state.metric.n as f64;
    let mut out = TensorField::zeros(grid, 0);
    for p in 0..grid.len() {
        out.data[p] = (n * rho - 1.0)
            * state.bundle.scal.get(p, &[])
            * state.bundle.sqrt_det.get(p, &[]);
    }
    out
}
