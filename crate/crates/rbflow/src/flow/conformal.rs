//! 2D conformal reduction: for g = e^{2u} delta the flow collapses to the
//! scalar equation du/dt = (1 - 2 rho) e^{-2u} (Laplacian u), since in two
//! dimensions Ric = (R/2) g and R = -2 e^{-2u} Laplacian u.

use crate::error::{RbError, Result};
use crate::grid::TensorField;

/// Right-hand side of the conformal-factor equation with the flat Laplacian.
pub fn conformal2d_rhs(u: &TensorField, rho: f64) -> Result<TensorField> {
    if u.rank != 0 || u.grid.ndim() != 2 {
        return Err(RbError::DimensionMismatch(
            "conformal2d_rhs expects a scalar field on a 2D grid".into(),
        ));
    }
    let mut lap = u.partial2(0, 0);
    lap.axpy(1.0, &u.partial2(1, 1));
    let mut out = lap;
    for p in 0..u.grid.len() {
        out.data[p] *= (1.0 - 2.0 * rho) * (-2.0 * u.data[p]).exp();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{rb_rhs, FlowState};
    use crate::grid::GridSpec;
    use crate::tensor::metric::MetricField;

    #[test]
    fn constant_u_is_static() {
        let grid = GridSpec::new(&[16, 16]);
        let mut u = TensorField::zeros(&grid, 0);
        for v in &mut u.data {
            *v = 0.7;
        }
        let rhs = conformal2d_rhs(&u, 0.1).unwrap();
        // stencil weights cancel a constant only to round-off
        assert!(rhs.sup_norm() < 1e-12, "{}", rhs.sup_norm());
    }

    #[test]
    fn einstein_parameter_is_static_in_2d() {
        let grid = GridSpec::new(&[16, 16]);
        let mut u = TensorField::zeros(&grid, 0);
        for p in 0..grid.len() {
            let x = grid.point(p);
            u.data[p] = 0.4 * x[0].sin() + 0.2 * (x[1] * 2.0).cos();
        }
        let rhs = conformal2d_rhs(&u, 0.5).unwrap();
        assert_eq!(rhs.sup_norm(), 0.0);
    }

    /// Dual path: the full tensor right-hand side on g = e^{2u} delta equals
    /// 2 (du/dt) g to discretization accuracy.
    #[test]
    fn agrees_with_full_tensor_path() {
        let grid = GridSpec::new(&[32, 32]);
        let mut u = TensorField::zeros(&grid, 0);
        for p in 0..grid.len() {
            let x = grid.point(p);
            u.data[p] = 0.15 * x[0].sin() * x[1].sin();
        }
        let rho = 0.1;
        let du = conformal2d_rhs(&u, rho).unwrap();
        let u0 = u.clone();
        let m = MetricField::from_fn(&[32, 32], |x| {
            // rebuild from the same u formula to keep fields identical
            let v = 0.15 * x[0].sin() * x[1].sin();
            nalgebra::DMatrix::from_diagonal_element(2, 2, (2.0 * v).exp())
        });
        let state = FlowState::new(0.0, m).unwrap();
        let full = rb_rhs(&state, rho);
        let mut err = 0.0f64;
        for p in 0..grid.len() {
            let gxx = state.metric.g.get(p, &[0, 0]);
            let expect = 2.0 * du.data[p] * gxx;
            err = err.max((full.get(p, &[0, 0]) - expect).abs());
            err = err.max(full.get(p, &[0, 1]).abs());
        }
        let _ = u0;
        assert!(err < 2e-4, "err={err}");
    }
}
