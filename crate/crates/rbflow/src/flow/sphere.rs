//! The shrinking round sphere: closed-form solution and the homogeneous
//! fiber run through the same time integrator as the grid code.
//!
//! For g = c(t) g_unit the flow reduces to dc/dt = -2(n-1)(1 - n rho), so
//! c(t) = c0 - 2(n-1)(1 - n rho) t, R(t) = n(n-1)/c(t) and the extinction
//! time c0 / (2(n-1)(1 - n rho)) meets the scalar-curvature maximal-time
//! bound n / (2(1 - n rho) alpha) with alpha = R(0) exactly.

use crate::error::{RbError, Result};
use crate::flow::{rk4_step, DtPolicy, FlowConfig, FlowRun, FlowSample, RunStatus};

#[derive(Debug, Clone, Copy)]
pub struct SphereSolution {
    pub c: f64,
    pub scal: f64,
    pub ric_factor: f64,
    pub extinction_time: f64,
}

/// Scale factor and curvatures of the round-sphere solution at time t.
pub fn sphere_solution(c0: f64, n: usize, rho: f64, t: f64) -> Result<SphereSolution> {
    if c0 <= 0.0 {
        return Err(RbError::InvalidParameter(format!("sphere_solution: c0 must be positive, got {c0}")));
    }
    let rate = 2.0 * (n as f64 - 1.0) * (1.0 - n as f64 * rho);
    let extinction = if rate > 0.0 { c0 / rate } else { f64::INFINITY };
    if t >= extinction {
        return Err(RbError::InvalidParameter(format!(
            "sphere_solution: t = {t} is at or past the extinction time {extinction}"
        )));
    }
    let c = c0 - rate * t;
    Ok(SphereSolution {
        c,
        scal: (n * (n - 1)) as f64 / c,
        ric_factor: (n as f64 - 1.0) / c,
        extinction_time: extinction,
    })
}

/// sup |Riem| for the sphere fiber at scale c (orthonormal Frobenius norm of
/// the constant-curvature tensor with k = 1/c).
pub fn sphere_sup_riem(n: usize, c: f64) -> f64 {
    ((2 * n * (n - 1)) as f64).sqrt() / c
}

/// Evolve the homogeneous fiber g = c Id with the shared RK4 stepper and
/// closed-form curvature; monitors and exit statuses match the grid runs.
pub fn run_sphere_model(cfg: &FlowConfig, c0: f64) -> Result<FlowRun> {
    if c0 <= 0.0 {
        return Err(RbError::InvalidParameter("sphere model needs c0 > 0".into()));
    }
    let n = cfg.n;
    let nf = n as f64;
    let rho = cfg.rho;

    // state: the n x n metric fiber (flattened), optionally the frame scale
    let mut y = vec![0.0; n * n + if cfg.uhlenbeck { 1 } else { 0 }];
    for i in 0..n {
        y[i * n + i] = c0;
    }
    if cfg.uhlenbeck {
        y[n * n] = 1.0; // phi = s Id with s(0) = 1
    }

    let rhs = |y: &[f64]| -> Result<Vec<f64>> {
        let c = y[0];
        if c <= 0.0 {
            return Err(RbError::DegenerateMetric { context: "sphere model", index: vec![] });
        }
        let factor = -2.0 * (nf - 1.0) * (1.0 - nf * rho) / c;
        let mut out: Vec<f64> = y[..n * n].iter().map(|g| factor * g).collect();
        if cfg.uhlenbeck {
            // ds/dt = ((n-1)/c - rho n(n-1)/c) s
            let s = y[n * n];
            out.push(((nf - 1.0) / c) * (1.0 - nf * rho) * s);
        }
        Ok(out)
    };

    let mut t = 0.0;
    let mut steps = 0usize;
    let mut samples: Vec<FlowSample> = Vec::new();
    let mut status = RunStatus::Completed;

    loop {
        let c = y[0];
        if c <= 0.0 {
            status = RunStatus::PositivityLost {
                last_good_t: samples.last().map(|s| s.t).unwrap_or(0.0),
            };
            break;
        }
        let sup_riem = sphere_sup_riem(n, c);
        let scal = nf * (nf - 1.0) / c;
        if steps % cfg.sample_stride == 0 || t >= cfg.t_end || sup_riem > cfg.blowup_threshold {
            let drift = if cfg.uhlenbeck {
                // phi^T g phi = s^2 c Id against g0 = c0 Id
                let s = y[n * n];
                Some((s * s * c - c0).abs())
            } else {
                None
            };
            samples.push(FlowSample {
                t,
                r_min: scal,
                r_max: scal,
                volume: c.powf(nf / 2.0),
                sup_riem,
                uhlenbeck_drift: drift,
                snapshot: None,
            });
        }
        if sup_riem > cfg.blowup_threshold {
            status = RunStatus::BlowUp { t };
            break;
        }
        if t >= cfg.t_end {
            break;
        }
        let dt = match cfg.dt {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Cfl(cfl) => cfl / (1.0 + sup_riem),
        }
        .min(cfg.t_end - t);
        match rk4_step(&y, dt, rhs) {
            Ok(y1) => {
                y = y1;
                t += dt;
                steps += 1;
            }
            Err(RbError::DegenerateMetric { .. }) => {
                status = RunStatus::PositivityLost { last_good_t: t };
                break;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(FlowRun { samples, status, steps, final_metric: None })
}
