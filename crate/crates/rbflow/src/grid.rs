//! Periodic grids over the cube [0, 2pi)^n and dense tensor-component fields.
//!
//! Every spatial derivative in the crate is a 4th-order central difference
//! with periodic wrap-around; mixed second derivatives are evaluated by
//! applying the two one-dimensional stencils in a canonical order (lower
//! axis first) so that symmetric index pairs read bit-identical values.

use std::f64::consts::TAU;

use crate::error::{RbError, Result};

/// Uniform periodic grid on [0, 2pi)^n.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
}

impl GridSpec {
    pub fn new(dims: &[usize]) -> Self {
        let spacing = dims.iter().map(|&d| TAU / d as f64).collect();
        GridSpec { dims: dims.to_vec(), spacing }
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Multi-index of a flat point index (row-major).
    pub fn coords(&self, mut flat: usize) -> Vec<usize> {
        let mut c = vec![0usize; self.ndim()];
        for axis in (0..self.ndim()).rev() {
            c[axis] = flat % self.dims[axis];
            flat /= self.dims[axis];
        }
        c
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        let mut f = 0usize;
        for axis in 0..self.ndim() {
            f = f * self.dims[axis] + idx[axis] % self.dims[axis];
        }
        f
    }

    /// Flat index of the point shifted by `offset` cells along `axis`, wrapping.
    pub fn shift(&self, flat: usize, axis: usize, offset: isize) -> usize {
        let mut c = self.coords(flat);
        let d = self.dims[axis] as isize;
        c[axis] = (((c[axis] as isize + offset) % d + d) % d) as usize;
        self.flat(&c)
    }

    /// Coordinates of a grid point in [0, 2pi)^n.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.coords(flat)
            .iter()
            .zip(&self.spacing)
            .map(|(&i, &h)| i as f64 * h)
            .collect()
    }

    /// Cell volume h_1 * ... * h_n.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }
}

/// Dense field of rank-`rank` tensor components over a periodic grid.
///
/// Fiber dimension equals the grid dimension (coordinate charts). Layout is
/// point-major, components row-major, so `data[p * n^rank + c]` with
/// `c = ((i1*n + i2)*n + i3)...`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub grid: GridSpec,
    pub n: usize,
    pub rank: usize,
    pub data: Vec<f64>,
}

impl TensorField {
    pub fn zeros(grid: &GridSpec, rank: usize) -> Self {
        let n = grid.ndim();
        let len = grid.len() * n.pow(rank as u32);
        TensorField { grid: grid.clone(), n, rank, data: vec![0.0; len] }
    }

    pub fn ncomp(&self) -> usize {
        self.n.pow(self.rank as u32)
    }

    #[inline]
    pub fn comp_offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        let mut c = 0usize;
        for &i in idx {
            c = c * self.n + i;
        }
        c
    }

    #[inline]
    pub fn get(&self, point: usize, idx: &[usize]) -> f64 {
        self.data[point * self.ncomp() + self.comp_offset(idx)]
    }

    #[inline]
    pub fn set(&mut self, point: usize, idx: &[usize], v: f64) {
        let off = point * self.ncomp() + self.comp_offset(idx);
        self.data[off] = v;
    }

    /// Slice of all components at a grid point.
    #[inline]
    pub fn at(&self, point: usize) -> &[f64] {
        let m = self.ncomp();
        &self.data[point * m..(point + 1) * m]
    }

    #[inline]
    pub fn at_mut(&mut self, point: usize) -> &mut [f64] {
        let m = self.ncomp();
        &mut self.data[point * m..(point + 1) * m]
    }

    pub fn check_same_layout(&self, other: &TensorField) -> Result<()> {
        if self.grid != other.grid || self.rank != other.rank {
            return Err(RbError::GridMismatch(format!(
                "fields have layouts (dims {:?}, rank {}) vs (dims {:?}, rank {})",
                self.grid.dims, self.rank, other.grid.dims, other.rank
            )));
        }
        Ok(())
    }

    /// 4th-order central partial derivative along `axis`, same rank.
    pub fn partial(&self, axis: usize) -> TensorField {
        let mut out = TensorField::zeros(&self.grid, self.rank);
        out.n = self.n;
        let m = self.ncomp();
        let h = self.grid.spacing[axis];
        for p in 0..self.grid.len() {
            let p1 = self.grid.shift(p, axis, 1);
            let p2 = self.grid.shift(p, axis, 2);
            let m1 = self.grid.shift(p, axis, -1);
            let m2 = self.grid.shift(p, axis, -2);
            for c in 0..m {
                let v = (-self.data[p2 * m + c] + 8.0 * self.data[p1 * m + c]
                    - 8.0 * self.data[m1 * m + c]
                    + self.data[m2 * m + c])
                    / (12.0 * h);
                out.data[p * m + c] = v;
            }
        }
        out
    }

    /// 4th-order second derivative; for `a != b` the lower axis is applied
    /// first so that (a, b) and (b, a) requests produce identical bits.
    pub fn partial2(&self, a: usize, b: usize) -> TensorField {
        if a == b {
            let mut out = TensorField::zeros(&self.grid, self.rank);
            let m = self.ncomp();
            let h2 = self.grid.spacing[a] * self.grid.spacing[a];
            for p in 0..self.grid.len() {
                let p1 = self.grid.shift(p, a, 1);
                let p2 = self.grid.shift(p, a, 2);
                let m1 = self.grid.shift(p, a, -1);
                let m2 = self.grid.shift(p, a, -2);
                for c in 0..m {
                    let v = (-self.data[p2 * m + c] + 16.0 * self.data[p1 * m + c]
                        - 30.0 * self.data[p * m + c]
                        + 16.0 * self.data[m1 * m + c]
                        - self.data[m2 * m + c])
                        / (12.0 * h2);
                    out.data[p * m + c] = v;
                }
            }
            out
        } else {
            let (lo, hi) = (a.min(b), a.max(b));
            self.partial(lo).partial(hi)
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// self += s * other
    pub fn axpy(&mut self, s: f64, other: &TensorField) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Iterate all rank-`rank` multi-indices with entries in 0..n.
pub fn multi_indices(n: usize, rank: usize) -> MultiIndexIter {
    MultiIndexIter { n, idx: vec![0; rank], done: rank == 0 && n == 0, first: true }
}

pub struct MultiIndexIter {
    n: usize,
    idx: Vec<usize>,
    done: bool,
    first: bool,
}

impl Iterator for MultiIndexIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if self.first {
            self.first = false;
            return Some(self.idx.clone());
        }
        for pos in (0..self.idx.len()).rev() {
            self.idx[pos] += 1;
            if self.idx[pos] < self.n {
                return Some(self.idx.clone());
            }
            self.idx[pos] = 0;
        }
        self.done = true;
        None
    }
}
