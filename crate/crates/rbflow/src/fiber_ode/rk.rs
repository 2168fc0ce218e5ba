//! Embedded Dormand-Prince 5(4) integrator with 4th-order dense output and
//! PI step-size control. States are flat `&[f64]` slices so the same driver
//! serves the 3-eigenvalue system and flattened N x N operator ODEs.

use crate::error::{RbError, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
// embedded 4th-order error weights (b5 - b4)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense-output weights
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajStatus {
    /// Reached t_end.
    Completed,
    /// State magnitude crossed the blow-up threshold.
    BlowUp,
    /// Left a monitored cone (set by sweep drivers, not the integrator).
    ConeExit,
}

/// One accepted step with its quartic interpolation coefficients.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    cont: [Vec<f64>; 5],
}

impl DenseStep {
    /// Evaluate the interpolant at t0 + theta h, theta in [0, 1].
    pub fn eval(&self, theta: f64, out: &mut [f64]) {
        let th1 = 1.0 - theta;
        for i in 0..out.len() {
            out[i] = self.cont[0][i]
                + theta
                    * (self.cont[1][i]
                        + th1 * (self.cont[2][i] + theta * (self.cont[3][i] + th1 * self.cont[4][i])));
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dim: usize,
    pub t0: f64,
    pub steps: Vec<DenseStep>,
    pub status: TrajStatus,
    pub n_accepted: usize,
    pub n_rejected: usize,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        self.steps.last().map(|s| s.t0 + s.h).unwrap_or(self.t0)
    }

    pub fn final_state(&self) -> Vec<f64> {
        match self.steps.last() {
            Some(s) => {
                let mut y = vec![0.0; self.dim];
                s.eval(1.0, &mut y);
                y
            }
            None => Vec::new(),
        }
    }

    /// Dense sample at time t (clamped to the covered interval).
    pub fn sample(&self, t: f64, out: &mut [f64]) {
        debug_assert!(!self.steps.is_empty());
        let idx = match self
            .steps
            .binary_search_by(|s| s.t0.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let s = &self.steps[idx];
        let theta = ((t - s.t0) / s.h).clamp(0.0, 1.0);
        s.eval(theta, out);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Terminate with BlowUp once the sup norm of the state exceeds this.
    pub blowup_threshold: f64,
    pub max_steps: usize,
    pub h0: Option<f64>,
}

impl OdeOptions {
    /// Scale-free options from a single tolerance: rtol = atol = tol and the
    /// blow-up threshold at 1/tol.
    pub fn from_tol(tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(RbError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
        }
        Ok(OdeOptions { rtol: tol, atol: tol, blowup_threshold: 1.0 / tol, max_steps: 1_000_000, h0: None })
    }
}

/// Integrate dy/dt = f(t, y) from t0 to t_end with dense output.
pub fn integrate<F>(mut f: F, t0: f64, y0: &[f64], t_end: f64, opt: &OdeOptions) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if t_end <= t0 {
        return Err(RbError::InvalidParameter(format!("t_end {t_end} must exceed t0 {t0}")));
    }
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut ytmp = vec![0.0; dim];
    let mut y1 = vec![0.0; dim];
    f(t, &y, &mut k1);

    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut h = opt.h0.unwrap_or_else(|| {
        let scale = (1.0 + sup(&y)) / (1.0 + sup(&k1));
        (0.01 * scale).min(t_end - t0)
    });

    let mut traj = Trajectory { dim, t0, steps: Vec::new(), status: TrajStatus::Completed, n_accepted: 0, n_rejected: 0 };
    let safe = 0.9;
    let beta = 0.04;
    let expo1 = 0.2 - beta * 0.75;
    let facc1 = 1.0 / 0.2;
    let facc2 = 1.0 / 10.0;
    let mut facold = 1e-4f64;

    for _ in 0..opt.max_steps {
        if t >= t_end {
            return Ok(traj);
        }
        h = h.min(t_end - t);
        if h < 1e-14 * (1.0 + t.abs()) {
            return Err(RbError::InvalidParameter(format!(
                "step size underflow at t = {t} (state magnitude {})",
                sup(&y)
            )));
        }

        for i in 0..dim {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &ytmp, &mut k2);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &ytmp, &mut k3);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &ytmp, &mut k4);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &ytmp, &mut k5);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &ytmp, &mut k6);
        for i in 0..dim {
            y1[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        f(t + h, &y1, &mut k7);

        let mut err = 0.0f64;
        for i in 0..dim {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = opt.atol + opt.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sk) * (e / sk);
        }
        err = (err / dim as f64).sqrt();

        if !err.is_finite() {
            traj.n_rejected += 1;
            h *= 0.25;
            continue;
        }

        if err <= 1.0 {
            // accept: record dense output
            let mut cont = [
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
            ];
            for i in 0..dim {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k7[i] - bspl;
                cont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            traj.steps.push(DenseStep { t0: t, h, cont });
            traj.n_accepted += 1;
            t += h;
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7); // FSAL

            if sup(&y) > opt.blowup_threshold {
                traj.status = TrajStatus::BlowUp;
                return Ok(traj);
            }

            facold = err.max(1e-4);
            let fac11 = err.powf(expo1);
            let fac = (fac11 / facold.powf(beta) / safe).clamp(facc2, facc1);
            h /= fac;
        } else {
            traj.n_rejected += 1;
            let fac11 = err.powf(expo1);
            h /= (fac11 / safe).min(facc1);
        }
    }
    Err(RbError::InvalidParameter("integrator exceeded max_steps".into()))
}
