//! Symmetric positive-definite metric fields on periodic charts.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{RbError, Result};
use crate::grid::{GridSpec, TensorField};

/// A periodic grid of SPD n x n matrices over [0, 2pi)^n.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    pub n: usize,
    pub grid: GridSpec,
    /// Rank-2 component field g_ij.
    pub g: TensorField,
}

impl MetricField {
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[f64]) -> DMatrix<f64>) -> Self {
        let grid = GridSpec::new(dims);
        let n = grid.ndim();
        let mut g = TensorField::zeros(&grid, 2);
        for p in 0..grid.len() {
            let x = grid.point(p);
            let m = f(&x);
            debug_assert_eq!(m.nrows(), n);
            for i in 0..n {
                for j in 0..n {
                    g.set(p, &[i, j], m[(i, j)]);
                }
            }
        }
        MetricField { n, grid, g }
    }

    pub fn from_field(grid: GridSpec, g: TensorField) -> Self {
        let n = grid.ndim();
        MetricField { n, grid, g }
    }

    pub fn flat(dims: &[usize]) -> Self {
        let n = dims.len();
        Self::from_fn(dims, |_| DMatrix::identity(n, n))
    }

    /// 2D conformal metric g = e^{2u} delta for a scalar field u(x).
    pub fn conformal2d(dims: &[usize; 2], u: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(dims, |x| {
            let s = (2.0 * u(x[0], x[1])).exp();
            DMatrix::from_diagonal_element(2, 2, s)
        })
    }

    /// Smooth random periodic perturbation of the flat metric: each
    /// independent component gets a band-limited trigonometric polynomial
    /// with amplitude scaled so the total perturbation stays below
    /// `amplitude` in the matrix sup norm.
    pub fn random_perturbation(
        dims: &[usize],
        amplitude: f64,
        max_mode: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let n = dims.len();
        let ncoef = n * (n + 1) / 2;
        // coefficients per sym component: (mode vector, cos coef, sin coef)
        let mut terms: Vec<Vec<(Vec<i32>, f64, f64)>> = Vec::with_capacity(ncoef);
        let mut count = 0usize;
        for _ in 0..ncoef {
            let mut t = Vec::new();
            for _ in 0..3 {
                let m: Vec<i32> =
                    (0..n).map(|_| rng.gen_range(-(max_mode as i32)..=max_mode as i32)).collect();
                if m.iter().all(|&v| v == 0) {
                    continue;
                }
                t.push((m, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                count += 1;
            }
            terms.push(t);
        }
        let scale = if count == 0 { 0.0 } else { amplitude / (2.0 * count as f64 / ncoef as f64).max(1.0) };
        Self::from_fn(dims, |x| {
            let mut m = DMatrix::identity(n, n);
            let mut c = 0usize;
            for i in 0..n {
                for j in i..n {
                    let mut v = 0.0;
                    for (mode, ac, asn) in &terms[c] {
                        let phase: f64 =
                            mode.iter().zip(x).map(|(&mi, &xi)| mi as f64 * xi).sum();
                        v += ac * phase.cos() + asn * phase.sin();
                    }
                    v *= scale;
                    m[(i, j)] += v;
                    if i != j {
                        m[(j, i)] += v;
                    }
                    c += 1;
                }
            }
            m
        })
    }

    pub fn metric_at(&self, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.g.get(p, &[i, j]))
    }

    /// Verify SPD at every point; the error names the first offending index.
    pub fn check_spd(&self, context: &'static str) -> Result<()> {
        for p in 0..self.grid.len() {
            if self.metric_at(p).cholesky().is_none() {
                return Err(RbError::DegenerateMetric { context, index: self.grid.coords(p) });
            }
        }
        Ok(())
    }

    pub fn require_min_points(&self, context: &'static str, min: usize) -> Result<()> {
        if self.grid.dims.iter().any(|&d| d < min) {
            return Err(RbError::InvalidParameter(format!(
                "{context}: every axis needs at least {min} grid points, got {:?}",
                self.grid.dims
            )));
        }
        Ok(())
    }
}
