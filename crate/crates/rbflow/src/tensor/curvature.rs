//! Curvature of a metric field: Christoffel symbols, the (4,0) Riemann
//! tensor, Ricci, scalar and Weyl parts, covariant derivatives and the rough
//! Laplacian.
//!
//! Sign convention: the round sphere has Riem(v, w, v, w) > 0, Ricci is the
//! contraction R_ik = g^{jl} R_ijkl and constant curvature k means
//! R_ijkl = k (g_ik g_jl - g_il g_jk). The Riemann tensor is assembled from
//! second derivatives of the metric,
//!
//!   R_ijkl = (d_j d_k g_il + d_i d_l g_jk - d_j d_l g_ik - d_i d_k g_jl) / 2
//!            + g_mp (G^m_jk G^p_il - G^m_ik G^p_jl),
//!
//! which keeps the pair symmetries and the first Bianchi identity exact at
//! round-off level on discrete data.

use nalgebra::DMatrix;

use crate::error::{RbError, Result};
use crate::grid::TensorField;
use crate::tensor::fiber::FourTensor;
use crate::tensor::metric::MetricField;
use crate::tensor::weyl::weyl_from_parts;

/// All pointwise curvature quantities of a metric field.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    /// Christoffel symbols, layout (k, i, j) = Gamma^k_ij.
    pub gamma: TensorField,
    /// (4,0) Riemann tensor R_ijkl.
    pub riem: TensorField,
    /// Ricci tensor R_ik.
    pub ric: TensorField,
    /// Scalar curvature.
    pub scal: TensorField,
    /// Weyl tensor W_ijkl (zero field for n = 2 where the decomposition is
    /// undefined; identically small for n = 3).
    pub weyl: TensorField,
    /// Inverse metric g^{ij}.
    pub ginv: TensorField,
    /// sqrt(det g), the volume density.
    pub sqrt_det: TensorField,
}

impl CurvatureBundle {
    pub fn riem_at(&self, p: usize) -> FourTensor {
        let n = self.riem.n;
        let mut t = FourTensor::zeros(n);
        t.a.copy_from_slice(self.riem.at(p));
        t
    }

    pub fn weyl_at(&self, p: usize) -> FourTensor {
        let n = self.weyl.n;
        let mut t = FourTensor::zeros(n);
        t.a.copy_from_slice(self.weyl.at(p));
        t
    }

    pub fn ric_at(&self, p: usize) -> DMatrix<f64> {
        let n = self.ric.n;
        DMatrix::from_fn(n, n, |i, j| self.ric.get(p, &[i, j]))
    }

    pub fn ginv_at(&self, p: usize) -> DMatrix<f64> {
        let n = self.ginv.n;
        DMatrix::from_fn(n, n, |i, j| self.ginv.get(p, &[i, j]))
    }

    /// Pointwise |Riem|_g (orthonormal-frame Frobenius norm) maximized over
    /// the grid.
    pub fn sup_riem(&self, m: &MetricField) -> f64 {
        let mut sup = 0.0f64;
        for p in 0..m.grid.len() {
            let e = crate::tensor::operator::orthonormal_frame(&m.metric_at(p))
                .expect("bundle built from SPD metric");
            let t = crate::tensor::operator::transform_slots4(&self.riem_at(p), &e);
            sup = sup.max(t.frobenius());
        }
        sup
    }
}

/// Christoffel symbols of a metric field, Gamma^k_ij, 4th-order stencils.
pub fn compute_christoffel(m: &MetricField) -> Result<TensorField> {
    m.require_min_points("compute_christoffel", 8)?;
    m.check_spd("compute_christoffel")?;
    let n = m.n;
    let dg: Vec<TensorField> = (0..n).map(|a| m.g.partial(a)).collect();
    let mut gamma = TensorField::zeros(&m.grid, 3);
    for p in 0..m.grid.len() {
        let ginv = m
            .metric_at(p)
            .try_inverse()
            .ok_or_else(|| RbError::DegenerateMetric { context: "compute_christoffel", index: m.grid.coords(p) })?;
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += ginv[(k, l)]
                            * (dg[i].get(p, &[j, l]) + dg[j].get(p, &[i, l]) - dg[l].get(p, &[i, j]));
                    }
                    s *= 0.5;
                    gamma.set(p, &[k, i, j], s);
                    if i != j {
                        gamma.set(p, &[k, j, i], s);
                    }
                }
            }
        }
    }
    Ok(gamma)
}

/// Full curvature bundle of a metric field.
pub fn compute_curvature(m: &MetricField) -> Result<CurvatureBundle> {
    m.require_min_points("compute_curvature", 8)?;
    let n = m.n;
    let gamma = compute_christoffel(m)?;
    let dg: Vec<TensorField> = (0..n).map(|a| m.g.partial(a)).collect();
    let _ = &dg;
    // canonical second derivatives, d2g[a][b] for a <= b, mirrored otherwise
    let mut d2g: Vec<Vec<Option<TensorField>>> = vec![vec![None; n]; n];
    for a in 0..n {
        for b in a..n {
            let f = m.g.partial2(a, b);
            d2g[a][b] = Some(f);
        }
    }
    let d2 = |a: usize, b: usize| -> &TensorField {
        let (lo, hi) = (a.min(b), a.max(b));
        d2g[lo][hi].as_ref().unwrap()
    };

    let mut riem = TensorField::zeros(&m.grid, 4);
    let mut ric = TensorField::zeros(&m.grid, 2);
    let mut scal = TensorField::zeros(&m.grid, 0);
    let mut weyl = TensorField::zeros(&m.grid, 4);
    let mut ginv_f = TensorField::zeros(&m.grid, 2);
    let mut sqrt_det = TensorField::zeros(&m.grid, 0);

    for p in 0..m.grid.len() {
        let g = m.metric_at(p);
        let chol = g.clone().cholesky().ok_or_else(|| RbError::DegenerateMetric {
            context: "compute_curvature",
            index: m.grid.coords(p),
        })?;
        let ginv = chol.inverse();
        let det_sqrt = chol.l().diagonal().iter().product::<f64>();
        sqrt_det.set(p, &[], det_sqrt);
        for i in 0..n {
            for j in 0..n {
                ginv_f.set(p, &[i, j], ginv[(i, j)]);
            }
        }

        let gam = |k: usize, i: usize, j: usize| gamma.get(p, &[k, i, j]);
        let mut riem_fiber = FourTensor::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let second = 0.5
                            * (d2(j, k).get(p, &[i, l]) + d2(i, l).get(p, &[j, k])
                                - d2(j, l).get(p, &[i, k])
                                - d2(i, k).get(p, &[j, l]));
                        let mut quad = 0.0;
                        for mm in 0..n {
                            for pp in 0..n {
                                quad += g[(mm, pp)]
                                    * (gam(mm, j, k) * gam(pp, i, l) - gam(mm, i, k) * gam(pp, j, l));
                            }
                        }
                        riem_fiber.set(i, j, k, l, second + quad);
                    }
                }
            }
        }
        riem.at_mut(p).copy_from_slice(&riem_fiber.a);

        let ric_fiber = riem_fiber.ricci(&ginv);
        let mut r = 0.0;
        for i in 0..n {
            for k in 0..n {
                ric.set(p, &[i, k], ric_fiber[(i, k)]);
                r += ginv[(i, k)] * ric_fiber[(i, k)];
            }
        }
        scal.set(p, &[], r);

        if n >= 3 {
            let w = weyl_from_parts(&riem_fiber, &ric_fiber, r, &g);
            weyl.at_mut(p).copy_from_slice(&w.a);
        }
    }

    Ok(CurvatureBundle { gamma, riem, ric, scal, weyl, ginv: ginv_f, sqrt_det })
}

/// Covariant derivative of a fully covariant rank-r field; the derivative
/// index is prepended: (DT)_{a, i1..ir} = d_a T - sum_s Gamma^m_{a i_s} T|_{i_s -> m}.
pub fn covariant_derivative(t: &TensorField, gamma: &TensorField) -> TensorField {
    let n = t.n;
    let r = t.rank;
    let mut out = TensorField::zeros(&t.grid, r + 1);
    let partials: Vec<TensorField> = (0..n).map(|a| t.partial(a)).collect();
    let ncomp = t.ncomp();
    let mut idx = vec![0usize; r];
    for p in 0..t.grid.len() {
        for c in 0..ncomp {
            // decode component multi-index
            let mut cc = c;
            for s in (0..r).rev() {
                idx[s] = cc % n;
                cc /= n;
            }
            for a in 0..n {
                let mut v = partials[a].data[p * ncomp + c];
                for s in 0..r {
                    let orig = idx[s];
                    let mut corr = 0.0;
                    for mm in 0..n {
                        idx[s] = mm;
                        corr += gamma.get(p, &[mm, a, orig]) * t.get(p, &idx);
                    }
                    idx[s] = orig;
                    v -= corr;
                }
                let off = p * out.ncomp() + a * ncomp + c;
                out.data[off] = v;
            }
        }
    }
    out
}

/// Rough Laplacian g^{ab} D_a D_b T with full covariant derivatives on every
/// slot. Recomputes the connection; use [`rough_laplacian_with`] when a
/// bundle is already available.
pub fn rough_laplacian(t: &TensorField, m: &MetricField) -> Result<TensorField> {
    let gamma = compute_christoffel(m)?;
    let bundle_ginv = inverse_field(m)?;
    Ok(rough_laplacian_with(t, &gamma, &bundle_ginv))
}

pub fn rough_laplacian_with(t: &TensorField, gamma: &TensorField, ginv: &TensorField) -> TensorField {
    let first = covariant_derivative(t, gamma);
    let second = covariant_derivative(&first, gamma);
    let n = t.n;
    let ncomp = t.ncomp();
    let mut out = TensorField::zeros(&t.grid, t.rank);
    for p in 0..t.grid.len() {
        for c in 0..ncomp {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += ginv.get(p, &[a, b]) * second.data[p * second.ncomp() + (a * n + b) * ncomp + c];
                }
            }
            out.data[p * ncomp + c] = s;
        }
    }
    out
}

/// Pointwise inverse metric as a rank-2 field.
pub fn inverse_field(m: &MetricField) -> Result<TensorField> {
    let n = m.n;
    let mut out = TensorField::zeros(&m.grid, 2);
    for p in 0..m.grid.len() {
        let inv = m
            .metric_at(p)
            .try_inverse()
            .ok_or_else(|| RbError::DegenerateMetric { context: "inverse_field", index: m.grid.coords(p) })?;
        for i in 0..n {
            for j in 0..n {
                out.set(p, &[i, j], inv[(i, j)]);
            }
        }
    }
    Ok(out)
}
