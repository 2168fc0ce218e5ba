//! Pointwise (single-fiber) rank-4 tensor algebra: Kulkarni-Nomizu products,
//! the quadratic B contraction and random algebraic curvature tensors.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{RbError, Result};

/// Dense rank-4 array indexed (i, j, k, l). Storage carries no symmetry;
/// symmetry is a property of specific values.
#[derive(Debug, Clone, PartialEq)]
pub struct FourTensor {
    pub n: usize,
    pub a: Vec<f64>,
}

impl FourTensor {
    pub fn zeros(n: usize) -> Self {
        FourTensor { n, a: vec![0.0; n * n * n * n] }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.a[self.idx(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let t = self.idx(i, j, k, l);
        self.a[t] = v;
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = FourTensor::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        t.set(i, j, k, l, f(i, j, k, l));
                    }
                }
            }
        }
        t
    }

    /// Constant-curvature tensor k * (g_ik g_jl - g_il g_jk); the round
    /// sphere of sectional curvature k > 0 in this sign convention.
    pub fn constant_curvature(n: usize, k: f64, g: &DMatrix<f64>) -> Self {
        FourTensor::from_fn(n, |i, j, p, q| k * (g[(i, p)] * g[(j, q)] - g[(i, q)] * g[(j, p)]))
    }

    /// Reindexed copy: out_{ijkl} = self_{perm(ijkl)}. `perm[s]` names which
    /// of (i,j,k,l) feeds slot s, e.g. [0,2,1,3] produces B_{ikjl}.
    pub fn permuted(&self, perm: [usize; 4]) -> FourTensor {
        let n = self.n;
        FourTensor::from_fn(n, |i, j, k, l| {
            let src = [i, j, k, l];
            self.get(src[perm[0]], src[perm[1]], src[perm[2]], src[perm[3]])
        })
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.a {
            *v *= s;
        }
    }

    pub fn axpy(&mut self, s: f64, other: &FourTensor) {
        debug_assert_eq!(self.a.len(), other.a.len());
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += s * y;
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Ricci contraction ric_ik = g^{jl} T_{ijkl}.
    pub fn ricci(&self, ginv: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, k| {
            let mut s = 0.0;
            for j in 0..n {
                for l in 0..n {
                    s += ginv[(j, l)] * self.get(i, j, k, l);
                }
            }
            s
        })
    }

    /// Total antisymmetrization over the first three slots; subtracting it
    /// projects a pair-symmetric tensor onto the first-Bianchi subspace.
    pub fn bianchi_part(&self) -> FourTensor {
        FourTensor::from_fn(self.n, |i, j, k, l| {
            (self.get(i, j, k, l) + self.get(j, k, i, l) + self.get(k, i, j, l)) / 3.0
        })
    }
}

/// Kulkarni-Nomizu product of symmetric 2-tensors:
/// (p ^o q)_{ijkl} = p_ik q_jl + p_jl q_ik - p_il q_jk - p_jk q_il.
pub fn kulkarni_nomizu(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<FourTensor> {
    if p.nrows() != q.nrows() || p.nrows() != p.ncols() || q.nrows() != q.ncols() {
        return Err(RbError::DimensionMismatch(format!(
            "kulkarni_nomizu needs square factors of equal size, got {}x{} and {}x{}",
            p.nrows(),
            p.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let n = p.nrows();
    Ok(FourTensor::from_fn(n, |i, j, k, l| {
        p[(i, k)] * q[(j, l)] + p[(j, l)] * q[(i, k)] - p[(i, l)] * q[(j, k)] - p[(j, k)] * q[(i, l)]
    }))
}

/// Quadratic contraction B_{ijkl} = g^{pq} g^{rs} S_{ipjr} T_{kqls}.
///
/// Evaluated through the intermediate S with raised 2nd/4th slots so the
/// cost stays O(n^6) per fiber.
pub fn b_tensor(s: &FourTensor, t: &FourTensor, ginv: &DMatrix<f64>) -> Result<FourTensor> {
    if s.n != t.n || ginv.nrows() != s.n {
        return Err(RbError::DimensionMismatch(format!(
            "b_tensor arguments disagree: S fiber {}, T fiber {}, metric {}",
            s.n,
            t.n,
            ginv.nrows()
        )));
    }
    let n = s.n;
    // raised_{i q j s} = g^{pq} g^{rs} S_{ipjr}
    let mut raised = FourTensor::zeros(n);
    for i in 0..n {
        for q in 0..n {
            for j in 0..n {
                for sx in 0..n {
                    let mut acc = 0.0;
                    for p in 0..n {
                        for r in 0..n {
                            acc += ginv[(p, q)] * ginv[(r, sx)] * s.get(i, p, j, r);
                        }
                    }
                    raised.set(i, q, j, sx, acc);
                }
            }
        }
    }
    let mut out = FourTensor::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for q in 0..n {
                        for sx in 0..n {
                            acc += raised.get(i, q, j, sx) * t.get(k, q, l, sx);
                        }
                    }
                    out.set(i, j, k, l, acc);
                }
            }
        }
    }
    Ok(out)
}

/// The antisymmetrized B combination appearing in the Riemann reaction term:
/// B_{ijkl} - B_{ijlk} - B_{iljk} + B_{ikjl}.
pub fn b_reaction(b: &FourTensor) -> FourTensor {
    let n = b.n;
    FourTensor::from_fn(n, |i, j, k, l| {
        b.get(i, j, k, l) - b.get(i, j, l, k) - b.get(i, l, j, k) + b.get(i, k, j, l)
    })
}

/// (Riem * Ric)_ab = R_{apbq} Ric_{st} g^{ps} g^{qt}.
pub fn riem_ric_contract(t: &FourTensor, ric: &DMatrix<f64>, ginv: &DMatrix<f64>) -> DMatrix<f64> {
    let n = t.n;
    let ric_up = ginv * ric * ginv; // Ric^{pq}
    DMatrix::from_fn(n, n, |a, b| {
        let mut s = 0.0;
        for p in 0..n {
            for q in 0..n {
                s += t.get(a, p, b, q) * ric_up[(p, q)];
            }
        }
        s
    })
}

/// g^{pq} (T_{pjkl} S_qi + T_{ipkl} S_qj + T_{ijpl} S_qk + T_{ijkp} S_ql),
/// the curvature-times-Ricci commutator term of the evolution equations.
pub fn ric_action(t: &FourTensor, s: &DMatrix<f64>, ginv: &DMatrix<f64>) -> FourTensor {
    let n = t.n;
    let s_up = ginv * s; // S^p_q with p up
    FourTensor::from_fn(n, |i, j, k, l| {
        let mut acc = 0.0;
        for p in 0..n {
            acc += t.get(p, j, k, l) * s_up[(p, i)]
                + t.get(i, p, k, l) * s_up[(p, j)]
                + t.get(i, j, p, l) * s_up[(p, k)]
                + t.get(i, j, k, p) * s_up[(p, l)];
        }
        acc
    })
}

/// Random algebraic curvature tensor: all Riemann symmetries plus the first
/// Bianchi identity, entries O(scale).
pub fn random_curvature_fiber(n: usize, scale: f64, rng: &mut impl Rng) -> FourTensor {
    let raw = FourTensor::from_fn(n, |_, _, _, _| rng.gen_range(-scale..scale));
    // antisymmetrize (ij) and (kl), then symmetrize the pairs
    let mut sym = FourTensor::from_fn(n, |i, j, k, l| {
        let t = |a: usize, b: usize, c: usize, d: usize| {
            0.25 * (raw.get(a, b, c, d) - raw.get(b, a, c, d) - raw.get(a, b, d, c)
                + raw.get(b, a, d, c))
        };
        0.5 * (t(i, j, k, l) + t(k, l, i, j))
    });
    let b = sym.bianchi_part();
    sym.axpy(-1.0, &b);
    sym
}

/// Random symmetric matrix with entries O(scale).
pub fn random_symmetric(n: usize, scale: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-scale..scale);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute_force_b(s: &FourTensor, t: &FourTensor, ginv: &DMatrix<f64>) -> FourTensor {
        let n = s.n;
        FourTensor::from_fn(n, |i, j, k, l| {
            let mut acc = 0.0;
            for p in 0..n {
                for q in 0..n {
                    for r in 0..n {
                        for sx in 0..n {
                            acc += ginv[(p, q)] * ginv[(r, sx)] * s.get(i, p, j, r) * t.get(k, q, l, sx);
                        }
                    }
                }
            }
            acc
        })
    }

    #[test]
    fn kn_delta_delta_1212_is_two() {
        let id = DMatrix::<f64>::identity(3, 3);
        let t = kulkarni_nomizu(&id, &id).unwrap();
        assert_eq!(t.get(0, 1, 0, 1), 2.0);
    }

    #[test]
    fn kn_is_symmetric_in_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = random_symmetric(4, 1.0, &mut rng);
            let q = random_symmetric(4, 1.0, &mut rng);
            let pq = kulkarni_nomizu(&p, &q).unwrap();
            let qp = kulkarni_nomizu(&q, &p).unwrap();
            for (a, b) in pq.a.iter().zip(&qp.a) {
                assert_relative_eq!(a, b, max_relative = 1e-14, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn kn_dimension_mismatch_rejected() {
        let p = DMatrix::<f64>::identity(3, 3);
        let q = DMatrix::<f64>::identity(4, 4);
        assert!(kulkarni_nomizu(&p, &q).is_err());
    }

    /// [(g^o g) * Ric]_ab = 2 [R g - Ric]_ab on random data.
    #[test]
    fn gg_contract_ric_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [3usize, 4] {
            let g = {
                let a = random_symmetric(n, 0.3, &mut rng);
                DMatrix::<f64>::identity(n, n) + &a * a.transpose()
            };
            let ginv = g.clone().try_inverse().unwrap();
            let ric = random_symmetric(n, 1.0, &mut rng);
            let gg = kulkarni_nomizu(&g, &g).unwrap();
            let lhs = riem_ric_contract(&gg, &ric, &ginv);
            let r = (&ginv * &ric).trace();
            let rhs = &g * r * 2.0 - &ric * 2.0;
            assert_relative_eq!(lhs, rhs, max_relative = 1e-11, epsilon = 1e-12);
        }
    }

    #[test]
    fn b_tensor_zero_input() {
        let z = FourTensor::zeros(3);
        let id = DMatrix::<f64>::identity(3, 3);
        let b = b_tensor(&z, &z, &id).unwrap();
        assert_eq!(b.sup_norm(), 0.0);
    }

    #[test]
    fn b_tensor_matches_brute_force_constant_curvature() {
        // n = 3, k = 1, non-flat metric exercised through the inverse
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_symmetric(3, 0.2, &mut rng);
        let g = DMatrix::<f64>::identity(3, 3) + &a * a.transpose();
        let ginv = g.clone().try_inverse().unwrap();
        let r = FourTensor::constant_curvature(3, 1.0, &g);
        let fast = b_tensor(&r, &r, &ginv).unwrap();
        let brute = brute_force_b(&r, &r, &ginv);
        // identical contraction order per entry -> bit-for-bit equality is not
        // guaranteed, but both are plain sums; compare to round-off
        for (x, y) in fast.a.iter().zip(&brute.a) {
            assert_relative_eq!(x, y, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn random_fiber_has_curvature_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [3usize, 4] {
            let r = random_curvature_fiber(n, 1.0, &mut rng);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let v = r.get(i, j, k, l);
                            assert_relative_eq!(v, -r.get(j, i, k, l), epsilon = 1e-13);
                            assert_relative_eq!(v, -r.get(i, j, l, k), epsilon = 1e-13);
                            assert_relative_eq!(v, r.get(k, l, i, j), epsilon = 1e-13);
                            let bianchi = v + r.get(j, k, i, l) + r.get(k, i, j, l);
                            assert!(bianchi.abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }
}
