//! The curvature operator on Lambda^2: a symmetric N x N matrix, N = n(n-1)/2,
//! over the orthonormal wedge basis {e_i ^ e_j}_{i<j} in lexicographic order.
//!
//! Normalization: eigenvalues are sectional curvatures and the trace equals
//! half the scalar curvature. The sharp operator Q# goes through the rank-4
//! representation via (R#R)_{ijkl} = B_{ikjl} - B_{iljk}, which is uniform in
//! the dimension; structure constants appear only in test oracles.

use nalgebra::DMatrix;

use crate::error::{RbError, Result};
use crate::tensor::fiber::{b_tensor, FourTensor};

/// Lexicographic Lambda^2 index pairs (0,1), (0,2), ..., (n-2, n-1).
pub fn lambda2_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            v.push((i, j));
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureOperator {
    pub n: usize,
    pub mat: DMatrix<f64>,
}

impl CurvatureOperator {
    pub fn lambda2_dim(n: usize) -> usize {
        n * (n - 1) / 2
    }

    pub fn zeros(n: usize) -> Self {
        let nn = Self::lambda2_dim(n);
        CurvatureOperator { n, mat: DMatrix::zeros(nn, nn) }
    }

    pub fn identity(n: usize) -> Self {
        let nn = Self::lambda2_dim(n);
        CurvatureOperator { n, mat: DMatrix::identity(nn, nn) }
    }

    pub fn from_diagonal(n: usize, diag: &[f64]) -> Self {
        let nn = Self::lambda2_dim(n);
        assert_eq!(diag.len(), nn);
        let mut mat = DMatrix::zeros(nn, nn);
        for (i, &d) in diag.iter().enumerate() {
            mat[(i, i)] = d;
        }
        CurvatureOperator { n, mat }
    }

    /// Build from a rank-4 fiber already expressed in a g-orthonormal frame.
    pub fn from_orthonormal_fiber(t: &FourTensor) -> Self {
        let n = t.n;
        let pairs = lambda2_pairs(n);
        let nn = pairs.len();
        let mat = DMatrix::from_fn(nn, nn, |a, b| {
            let (i, j) = pairs[a];
            let (k, l) = pairs[b];
            t.get(i, j, k, l)
        });
        CurvatureOperator { n, mat }
    }

    /// Build from a rank-4 fiber and the metric at that point. The frame is
    /// orthonormalized with the Cholesky factor of g, which makes the wedge
    /// basis orthonormal for the determinant extension of g to Lambda^2.
    pub fn from_fiber(t: &FourTensor, g: &DMatrix<f64>) -> Result<Self> {
        let frame = orthonormal_frame(g)?;
        let t_on = transform_slots4(t, &frame);
        Ok(Self::from_orthonormal_fiber(&t_on))
    }

    /// Reconstruct the rank-4 representation (orthonormal frame), extending
    /// by the wedge antisymmetries.
    pub fn to_fiber(&self) -> FourTensor {
        let n = self.n;
        let index_of = pair_lookup(n);
        FourTensor::from_fn(n, |i, j, k, l| {
            if i == j || k == l {
                return 0.0;
            }
            let (a, sa) = index_of[i * n + j];
            let (b, sb) = index_of[k * n + l];
            sa * sb * self.mat[(a, b)]
        })
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace()
    }

    pub fn square(&self) -> CurvatureOperator {
        CurvatureOperator { n: self.n, mat: &self.mat * &self.mat }
    }

    /// Q# via the rank-4 route: sharp_{ijkl} = B_{ikjl} - B_{iljk} with the
    /// identity metric of the orthonormal frame.
    pub fn sharp(&self) -> CurvatureOperator {
        let t = self.to_fiber();
        let id = DMatrix::<f64>::identity(self.n, self.n);
        let b = b_tensor(&t, &t, &id).expect("matching fibers");
        let sharp4 = FourTensor::from_fn(self.n, |i, j, k, l| b.get(i, k, j, l) - b.get(i, l, j, k));
        Self::from_orthonormal_fiber(&sharp4)
    }

    /// Q^2 via the rank-4 identity (R^2)_{ijkl} = B_{ijkl} - B_{ijlk};
    /// a second route to `square` used by dual-path checks.
    pub fn square_via_b(&self) -> CurvatureOperator {
        let t = self.to_fiber();
        let id = DMatrix::<f64>::identity(self.n, self.n);
        let b = b_tensor(&t, &t, &id).expect("matching fibers");
        let sq4 = FourTensor::from_fn(self.n, |i, j, k, l| b.get(i, j, k, l) - b.get(i, j, l, k));
        Self::from_orthonormal_fiber(&sq4)
    }

    pub fn eigenvalues_sorted(&self) -> Vec<f64> {
        let sym = (self.mat.clone() + self.mat.transpose()) * 0.5;
        let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues_sorted()[0]
    }
}

/// Frame matrix E with columns e_a satisfying E^T g E = Id.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = g.clone().cholesky().ok_or_else(|| RbError::DegenerateMetric {
        context: "orthonormal_frame",
        index: vec![],
    })?;
    let l = chol.l();
    let linv = l.try_inverse().ok_or_else(|| RbError::DegenerateMetric {
        context: "orthonormal_frame",
        index: vec![],
    })?;
    Ok(linv.transpose())
}

/// Apply the frame to every slot: out_{abcd} = E^i_a E^j_b E^k_c E^l_d T_{ijkl}.
pub fn transform_slots4(t: &FourTensor, e: &DMatrix<f64>) -> FourTensor {
    let n = t.n;
    let mut cur = t.clone();
    for _slot in 0..4 {
        // contract the first slot with E and rotate it to the back
        let mut next = FourTensor::zeros(n);
        for a in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = 0.0;
                        for i in 0..n {
                            acc += e[(i, a)] * cur.get(i, j, k, l);
                        }
                        // rotate: (a, j, k, l) -> store at (j, k, l, a)
                        next.set(j, k, l, a, acc);
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

fn pair_lookup(n: usize) -> Vec<(usize, f64)> {
    let pairs = lambda2_pairs(n);
    let mut table = vec![(usize::MAX, 0.0); n * n];
    for (a, &(i, j)) in pairs.iter().enumerate() {
        table[i * n + j] = (a, 1.0);
        table[j * n + i] = (a, -1.0);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::fiber::random_curvature_fiber;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent sharp through so(n) structure constants with the wedge
    /// basis represented as T_(ij) = e_i e_j^T - e_j e_i^T and inner product
    /// <A, B> = tr(A^T B) / 2.
    fn sharp_structure_constants(q: &CurvatureOperator) -> DMatrix<f64> {
        let n = q.n;
        let pairs = lambda2_pairs(n);
        let nn = pairs.len();
        let basis: Vec<DMatrix<f64>> = pairs
            .iter()
            .map(|&(i, j)| {
                let mut m = DMatrix::zeros(n, n);
                m[(i, j)] = 1.0;
                m[(j, i)] = -1.0;
                m
            })
            .collect();
        let mut c = vec![0.0; nn * nn * nn];
        for a in 0..nn {
            for b in 0..nn {
                let bracket = &basis[a] * &basis[b] - &basis[b] * &basis[a];
                for g in 0..nn {
                    c[(a * nn + b) * nn + g] = 0.5 * (basis[g].transpose() * &bracket).trace();
                }
            }
        }
        DMatrix::from_fn(nn, nn, |al, be| {
            let mut s = 0.0;
            for ga in 0..nn {
                for de in 0..nn {
                    for ep in 0..nn {
                        for ze in 0..nn {
                            // c^{gd}_a c^{ez}_b Q_{ge} Q_{dz} / 2
                            s += 0.5
                                * c[(ga * nn + de) * nn + al]
                                * c[(ep * nn + ze) * nn + be]
                                * q.mat[(ga, ep)]
                                * q.mat[(de, ze)];
                        }
                    }
                }
            }
            s
        })
    }

    #[test]
    fn identity_operator_n3() {
        // constant sectional curvature k = 1 in an orthonormal frame
        let id3 = DMatrix::<f64>::identity(3, 3);
        let r = FourTensor::constant_curvature(3, 1.0, &id3);
        let q = CurvatureOperator::from_fiber(&r, &id3).unwrap();
        assert_relative_eq!(q.mat, DMatrix::<f64>::identity(3, 3), epsilon = 1e-14);
        assert_relative_eq!(q.trace(), 3.0, epsilon = 1e-14); // R/2 with R = 6k
    }

    #[test]
    fn sharp_of_identity_is_identity_n3() {
        let q = CurvatureOperator::identity(3);
        let sharp = q.sharp();
        assert_relative_eq!(sharp.mat, DMatrix::<f64>::identity(3, 3), epsilon = 1e-13);
        let oracle = sharp_structure_constants(&q);
        assert_relative_eq!(sharp.mat, oracle, epsilon = 1e-13);
        assert_relative_eq!(q.square().mat, DMatrix::<f64>::identity(3, 3), epsilon = 1e-14);
    }

    #[test]
    fn zero_operator_maps_to_zero() {
        let q = CurvatureOperator::zeros(4);
        assert_eq!(q.square().mat.norm(), 0.0);
        assert_eq!(q.sharp().mat.norm(), 0.0);
    }

    #[test]
    fn sharp_matches_structure_constants_on_random_fibers() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [3usize, 4] {
            for _ in 0..25 {
                let r = random_curvature_fiber(n, 1.0, &mut rng);
                let q = CurvatureOperator::from_orthonormal_fiber(&r);
                let sharp = q.sharp();
                let oracle = sharp_structure_constants(&q);
                assert_relative_eq!(sharp.mat, oracle, epsilon = 1e-10, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn square_dual_route_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in [3usize, 4] {
            let r = random_curvature_fiber(n, 1.0, &mut rng);
            let q = CurvatureOperator::from_orthonormal_fiber(&r);
            assert_relative_eq!(q.square().mat, q.square_via_b().mat, epsilon = 1e-11, max_relative = 1e-11);
        }
    }

    #[test]
    fn diagonal_sharp_is_product_of_other_two_n3() {
        let q = CurvatureOperator::from_diagonal(3, &[2.0, 3.0, 5.0]);
        let sharp = q.sharp();
        let expect = CurvatureOperator::from_diagonal(3, &[15.0, 10.0, 6.0]);
        assert_relative_eq!(sharp.mat, expect.mat, epsilon = 1e-12);
    }

    #[test]
    fn operator_from_curved_metric_constant_curvature() {
        // eigenvalues equal the sectional curvature for any SPD g
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let a = crate::tensor::fiber::random_symmetric(4, 0.3, &mut rng);
        let g = DMatrix::<f64>::identity(4, 4) + &a * a.transpose();
        let r = FourTensor::constant_curvature(4, 0.7, &g);
        let q = CurvatureOperator::from_fiber(&r, &g).unwrap();
        for ev in q.eigenvalues_sorted() {
            assert_relative_eq!(ev, 0.7, epsilon = 1e-12);
        }
    }
}
