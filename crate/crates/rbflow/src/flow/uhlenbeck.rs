//! Uhlenbeck frame evolution d phi/dt = Ric# o phi - rho R phi, integrated
//! jointly with the metric so that phi stays an isometry (TM, g0) -> (TM, g):
//! phi^T g phi = g0 along the exact flow.

use crate::flow::FlowState;
use crate::tensor::metric::MetricField;

/// Right-hand side for the frame components phi^i_a (stored row-major per
/// point, same layout as a rank-2 field).
pub fn frame_rhs(state: &FlowState, phi: &[f64], rho: f64) -> Vec<f64> {
    let n = state.metric.n;
    let npts = state.metric.grid.len();
    let mut out = vec![0.0; phi.len()];
    for p in 0..npts {
        let ric_sharp = crate::flow::ric_sharp_at(state, p);
        let r = state.bundle.scal.get(p, &[]);
        let base = p * n * n;
        for i in 0..n {
            for a in 0..n {
                let mut v = 0.0;
                for k in 0..n {
                    v += ric_sharp[(i, k)] * phi[base + k * n + a];
                }
                v -= rho * r * phi[base + i * n + a];
                out[base + i * n + a] = v;
            }
        }
    }
    out
}

/// max over points of || phi^T g phi - g0 ||_inf, with g0 the identity-frame
/// pullback target (the initial metric components).
pub fn frame_drift_against(metric: &MetricField, phi: &[f64], g0: &[f64]) -> f64 {
    let n = metric.n;
    let mut drift = 0.0f64;
    for p in 0..metric.grid.len() {
        let base = p * n * n;
        for a in 0..n {
            for b in 0..n {
                let mut v = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        v += phi[base + i * n + a] * metric.g.get(p, &[i, j]) * phi[base + j * n + b];
                    }
                }
                drift = drift.max((v - g0[base + a * n + b]).abs());
            }
        }
    }
    drift
}

