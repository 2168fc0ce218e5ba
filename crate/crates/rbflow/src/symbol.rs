//! Principal symbols of the linearized flow operator and the parabolicity
//! classification in (n, rho).
//!
//! The symbol is evaluated in the direction of a unit covector xi aligned
//! with the first coordinate axis (homogeneity makes other directions
//! redundant) and expressed in the coordinate ordering
//! (h_11, h_22, ..., h_nn, h_12, ..., h_1n, h_23, ..., h_{n-1,n}).

use nalgebra::DMatrix;

use crate::error::{RbError, Result};
use crate::grid::TensorField;
use crate::tensor::curvature::{compute_christoffel, covariant_derivative, inverse_field};
use crate::tensor::metric::MetricField;

/// Which operator the symbol matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolVariant {
    /// Linearization of -2(Ric - rho R g) itself.
    Raw,
    /// After subtracting the Lie-derivative symbol of the DeTurck field.
    Deturck,
    /// The second-order operator acting on curvature operators in the
    /// reaction-diffusion system on S^2(Lambda^2 V).
    OperatorL,
}

impl std::str::FromStr for SymbolVariant {
    type Err = RbError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(SymbolVariant::Raw),
            "deturck" => Ok(SymbolVariant::Deturck),
            "operator_l" | "operator-l" => Ok(SymbolVariant::OperatorL),
            other => Err(RbError::UnknownVariant(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SymbolMatrix {
    pub n: usize,
    pub rho: f64,
    pub variant: SymbolVariant,
    pub mat: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    StrictlyParabolicAfterDeturck,
    DegenerateSchouten,
    NotParabolic,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::StrictlyParabolicAfterDeturck => "strictly_parabolic_after_deturck",
            Classification::DegenerateSchouten => "degenerate_schouten",
            Classification::NotParabolic => "not_parabolic",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParabolicityReport {
    pub n: usize,
    pub rho: f64,
    /// Eigenvalues of the DeTurck symbol with multiplicities, ascending.
    pub eigenvalues: Vec<(f64, usize)>,
    pub classification: Classification,
}

/// The m x m matrix with 1 - 2 rho on the diagonal and -2 rho off it; its
/// characteristic polynomial is (1 - lambda)^{m-1} (1 - 2 m rho - lambda).
pub fn build_a_matrix(m: usize, rho: f64) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(RbError::InvalidParameter("build_a_matrix: m >= 1 required".into()));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 - 2.0 * rho } else { -2.0 * rho }))
}

/// Principal symbol matrix for the requested variant.
pub fn symbol(n: usize, rho: f64, variant: SymbolVariant) -> Result<SymbolMatrix> {
    if n < 2 {
        return Err(RbError::InvalidParameter(format!("symbol: n >= 2 required, got {n}")));
    }
    let mat = match variant {
        SymbolVariant::Raw | SymbolVariant::Deturck => {
            // size n(n+1)/2 in the ordering (h_11..h_nn, h_12..h_1n, h_23..)
            let size = n * (n + 1) / 2;
            let mut m = DMatrix::zeros(size, size);
            // diagonal-components block
            m[(0, 0)] = if variant == SymbolVariant::Deturck { 1.0 } else { 0.0 };
            let off = if variant == SymbolVariant::Deturck { -2.0 * rho } else { 1.0 - 2.0 * rho };
            for c in 1..n {
                m[(0, c)] = off;
            }
            for r in 1..n {
                for c in 1..n {
                    m[(r, c)] = if r == c { 1.0 - 2.0 * rho } else { -2.0 * rho };
                }
            }
            // h_1k rows: zero for the raw operator, identity after DeTurck
            if variant == SymbolVariant::Deturck {
                for r in n..(2 * n - 1) {
                    m[(r, r)] = 1.0;
                }
            }
            // remaining off-diagonal components h_ij, 1 < i < j
            for r in (2 * n - 1)..size {
                m[(r, r)] = 1.0;
            }
            m
        }
        SymbolVariant::OperatorL => {
            // components ordered: (1j)(1j) j>1 [n-1], (ij)(ij) 1<i<j
            // [(n-1)(n-2)/2], then the off-diagonal pairs [N(N-1)/2]
            let nn = n * (n - 1) / 2;
            let size = nn * (nn + 1) / 2;
            let first = n - 1;
            let diag = nn; // all (ij)(ij) components
            let mut m = DMatrix::identity(size, size);
            for r in 0..first {
                for c in 0..diag {
                    if r == c {
                        m[(r, c)] = 1.0 - 2.0 * rho;
                    } else {
                        m[(r, c)] = -2.0 * rho;
                    }
                }
            }
            m
        }
    };
    Ok(SymbolMatrix { n, rho, variant, mat })
}

impl SymbolMatrix {
    /// Eigenvalues of the (generally non-symmetric) symbol matrix, validated
    /// to be real within `tol` and returned ascending.
    pub fn eigenvalues(&self, tol: f64) -> Result<Vec<f64>> {
        let ev = self.mat.clone().complex_eigenvalues();
        let mut out = Vec::with_capacity(ev.len());
        for z in ev.iter() {
            if z.im.abs() > tol {
                return Err(RbError::InvalidParameter(format!(
                    "symbol eigenvalue {} + {}i has non-real part beyond tolerance",
                    z.re, z.im
                )));
            }
            out.push(z.re);
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(out)
    }

    /// Cluster eigenvalues into (value, multiplicity) pairs with gap `tol`.
    pub fn spectrum(&self, tol: f64) -> Result<Vec<(f64, usize)>> {
        Ok(cluster(&self.eigenvalues(tol)?, tol))
    }
}

pub fn cluster(sorted: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &v in sorted {
        match out.last_mut() {
            Some((rep, count)) if (v - *rep).abs() <= tol => {
                // running mean keeps the representative centered
                *rep = (*rep * *count as f64 + v) / (*count as f64 + 1.0);
                *count += 1;
            }
            _ => out.push((v, 1)),
        }
    }
    out
}

/// Expected symbol spectrum as multiplicity lists.
pub fn expected_spectrum(n: usize, rho: f64, variant: SymbolVariant) -> Vec<(f64, usize)> {
    let extra = 1.0 - 2.0 * (n as f64 - 1.0) * rho;
    let mut v = match variant {
        SymbolVariant::Raw => vec![(0.0, n), (1.0, (n + 1) * (n - 2) / 2), (extra, 1)],
        SymbolVariant::Deturck => vec![(1.0, n * (n + 1) / 2 - 1), (extra, 1)],
        SymbolVariant::OperatorL => {
            let nn = n * (n - 1) / 2;
            vec![(1.0, nn * (nn + 1) / 2 - 1), (extra, 1)]
        }
    };
    v.retain(|&(_, m)| m > 0);
    v
}

/// Classification of (n, rho): strictly parabolic modulo diffeomorphisms
/// below the Schouten threshold, degenerate exactly at it, and not parabolic
/// above (the symbol acquires a negative eigenvalue).
pub fn classify(n: usize, rho: f64) -> Result<ParabolicityReport> {
    if n < 2 {
        return Err(RbError::InvalidParameter(format!("classify: n >= 2 required, got {n}")));
    }
    let schouten = 1.0 / (2.0 * (n as f64 - 1.0));
    let classification = if rho < schouten {
        Classification::StrictlyParabolicAfterDeturck
    } else if rho == schouten {
        Classification::DegenerateSchouten
    } else {
        Classification::NotParabolic
    };
    let eigenvalues = symbol(n, rho, SymbolVariant::Deturck)?.spectrum(1e-10)?;
    Ok(ParabolicityReport { n, rho, eigenvalues, classification })
}

/// DeTurck's vector field V^j(g) for a background metric g0, evaluated from
/// V^j = -1/2 g0^{jk} g^{pq} (D_k (g0)_pq - D_p (g0)_qk - D_q (g0)_pk)
/// with D the Levi-Civita connection of g.
pub fn deturck_vector(g: &MetricField, g0: &MetricField) -> Result<TensorField> {
    if g.grid != g0.grid {
        return Err(RbError::GridMismatch(format!(
            "deturck_vector: grids {:?} vs {:?}",
            g.grid.dims, g0.grid.dims
        )));
    }
    g0.check_spd("deturck_vector (background)")?;
    let n = g.n;
    let gamma = compute_christoffel(g)?;
    let ginv = inverse_field(g)?;
    let dg0 = covariant_derivative(&g0.g, &gamma); // (a, p, q) = D_a (g0)_pq
    let mut out = TensorField::zeros(&g.grid, 1);
    for pt in 0..g.grid.len() {
        let g0inv = g0
            .metric_at(pt)
            .try_inverse()
            .ok_or_else(|| RbError::DegenerateMetric { context: "deturck_vector", index: g.grid.coords(pt) })?;
        for j in 0..n {
            let mut v = 0.0;
            for k in 0..n {
                for p in 0..n {
                    for q in 0..n {
                        v += g0inv[(j, k)]
                            * ginv.get(pt, &[p, q])
                            * (dg0.get(pt, &[k, p, q]) - dg0.get(pt, &[p, q, k]) - dg0.get(pt, &[q, p, k]));
                    }
                }
            }
            out.set(pt, &[j], -0.5 * v);
        }
    }
    Ok(out)
}

/// First displayed form of the DeTurck field,
/// V^j = -g0^{jk} g^{pq} D_p (tr_g(g0)/2 g_qk - (g0)_qk); agrees with
/// [`deturck_vector`] and exists as the dual route for tests.
pub fn deturck_vector_trace_form(g: &MetricField, g0: &MetricField) -> Result<TensorField> {
    if g.grid != g0.grid {
        return Err(RbError::GridMismatch("deturck_vector_trace_form: grid mismatch".into()));
    }
    let n = g.n;
    let gamma = compute_christoffel(g)?;
    let ginv = inverse_field(g)?;
    // scalar field tr_g(g0)
    let mut tr = TensorField::zeros(&g.grid, 0);
    for pt in 0..g.grid.len() {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += ginv.get(pt, &[a, b]) * g0.g.get(pt, &[a, b]);
            }
        }
        tr.data[pt] = s;
    }
    let dtr = covariant_derivative(&tr, &gamma); // = plain gradient
    let dg0 = covariant_derivative(&g0.g, &gamma);
    let mut out = TensorField::zeros(&g.grid, 1);
    for pt in 0..g.grid.len() {
        let g0inv = g0
            .metric_at(pt)
            .try_inverse()
            .ok_or_else(|| RbError::DegenerateMetric { context: "deturck_vector_trace_form", index: g.grid.coords(pt) })?;
        for j in 0..n {
            let mut v = 0.0;
            for k in 0..n {
                for p in 0..n {
                    for q in 0..n {
                        // D_p (tr/2 g_qk) = (d_p tr)/2 g_qk since D g = 0
                        let term = 0.5 * dtr.get(pt, &[p]) * g.g.get(pt, &[q, k]) - dg0.get(pt, &[p, q, k]);
                        v += g0inv[(j, k)] * ginv.get(pt, &[p, q]) * term;
                    }
                }
            }
            out.set(pt, &[j], -v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spectrum_matches(actual: &[f64], expected: &[(f64, usize)], tol: f64) -> bool {
        let mut expanded: Vec<f64> = Vec::new();
        for &(v, m) in expected {
            expanded.extend(std::iter::repeat(v).take(m));
        }
        expanded.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if expanded.len() != actual.len() {
            return false;
        }
        expanded.iter().zip(actual).all(|(e, a)| (e - a).abs() <= tol)
    }

    #[test]
    fn a_matrix_small_cases() {
        // m = 2, rho = 1/8: eigenvalues {1, 1/2}
        let a = build_a_matrix(2, 0.125).unwrap();
        let ev = SymbolMatrix { n: 2, rho: 0.125, variant: SymbolVariant::Raw, mat: a }
            .eigenvalues(1e-10)
            .unwrap();
        assert_relative_eq!(ev[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(ev[1], 1.0, epsilon = 1e-12);

        // rho = 0: identity
        let a = build_a_matrix(5, 0.0).unwrap();
        assert_eq!(a, DMatrix::identity(5, 5));

        // m = 5, rho = 0.1 = 1/(2m): spectrum {1 x4, 0}
        let a = build_a_matrix(5, 0.1).unwrap();
        let ev = SymbolMatrix { n: 5, rho: 0.1, variant: SymbolVariant::Raw, mat: a }
            .eigenvalues(1e-10)
            .unwrap();
        assert!(ev[0].abs() < 1e-12);
        for &v in &ev[1..] {
            assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn characteristic_polynomial_closed_form() {
        for m in 1..=8usize {
            for &rho in &[-1.0, 0.0, 0.07, 0.25] {
                let a = build_a_matrix(m, rho).unwrap();
                for s in 0..20 {
                    let lambda = -2.0 + 0.21 * s as f64;
                    let det = (a.clone() - DMatrix::identity(m, m) * lambda).determinant();
                    let expect = (1.0 - lambda).powi(m as i32 - 1) * (1.0 - 2.0 * m as f64 * rho - lambda);
                    assert_relative_eq!(det, expect, epsilon = 1e-10, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn raw_spectrum_n3_rho0() {
        let s = symbol(3, 0.0, SymbolVariant::Raw).unwrap();
        let ev = s.eigenvalues(1e-10).unwrap();
        // 0 x3 and 1 x3 (the 1 - 2(n-1)rho eigenvalue merges with the ones)
        assert!(spectrum_matches(&ev, &[(0.0, 3), (1.0, 3)], 1e-10));
    }

    #[test]
    fn deturck_spectrum_schouten_n4() {
        let rho = 1.0 / 6.0;
        let s = symbol(4, rho, SymbolVariant::Deturck).unwrap();
        let ev = s.eigenvalues(1e-10).unwrap();
        let zeros = ev.iter().filter(|v| v.abs() < 1e-10).count();
        assert_eq!(zeros, 1);
        assert!(ev.iter().filter(|v| (**v - 1.0).abs() < 1e-10).count() == ev.len() - 1);
    }

    #[test]
    fn deturck_min_eigenvalue_negative_rho() {
        let s = symbol(3, -1.0, SymbolVariant::Deturck).unwrap();
        let ev = s.eigenvalues(1e-10).unwrap();
        assert_relative_eq!(*ev.last().unwrap(), 5.0, epsilon = 1e-10);
        assert!(ev[0] > 0.0);
    }

    #[test]
    fn spectra_match_multiplicity_lists_across_parameters() {
        for n in 2..=6usize {
            let schouten = 1.0 / (2.0 * (n as f64 - 1.0));
            let rhos = [-1.0, 0.0, schouten - 0.05, schouten + 0.05, 1.0 / n as f64, 0.5, schouten];
            for &rho in &rhos {
                for variant in [SymbolVariant::Raw, SymbolVariant::Deturck, SymbolVariant::OperatorL] {
                    let s = symbol(n, rho, variant).unwrap();
                    let ev = s.eigenvalues(1e-10).unwrap();
                    let expect = expected_spectrum(n, rho, variant);
                    assert!(
                        spectrum_matches(&ev, &expect, 1e-10),
                        "n={n} rho={rho} variant={variant:?}: got {ev:?} expected {expect:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn classification_thresholds() {
        assert_eq!(classify(3, 0.3).unwrap().classification, Classification::NotParabolic);
        assert_eq!(classify(3, 0.25).unwrap().classification, Classification::DegenerateSchouten);
        assert_eq!(
            classify(2, 0.0).unwrap().classification,
            Classification::StrictlyParabolicAfterDeturck
        );
    }

    #[test]
    fn deturck_vector_vanishes_when_g_equals_g0() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let g = MetricField::random_perturbation(&[10, 10], 0.2, 2, &mut rng);
        let v = deturck_vector(&g, &g.clone()).unwrap();
        assert!(v.sup_norm() < 1e-12, "{}", v.sup_norm());
        // constant conformal multiple of the background is also parallel
        let mut g2 = g.clone();
        g2.g.scale(1.7);
        let v2 = deturck_vector(&g2, &g).unwrap();
        assert!(v2.sup_norm() < 1e-12, "{}", v2.sup_norm());
    }

    /// The two displayed forms of V differ only by the product rule, so their
    /// discrete versions agree to truncation error: 4th-order decay under
    /// refinement.
    #[test]
    fn deturck_vector_two_forms_agree() {
        use rand::SeedableRng;
        let err_at = |d: usize| -> f64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
            let g = MetricField::random_perturbation(&[d, d], 0.15, 2, &mut rng);
            let g0 = MetricField::random_perturbation(&[d, d], 0.15, 2, &mut rng);
            let v1 = deturck_vector(&g, &g0).unwrap();
            let v2 = deturck_vector_trace_form(&g, &g0).unwrap();
            let mut err = 0.0f64;
            for (a, b) in v1.data.iter().zip(&v2.data) {
                err = err.max((a - b).abs());
            }
            err
        };
        let (e1, e2) = (err_at(16), err_at(32));
        assert!(e2 < e1 / 12.0, "e16={e1} e32={e2}");
        assert!(e2 < 2e-4, "e32={e2}");
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g = MetricField::flat(&[8, 8]);
        let g0 = MetricField::flat(&[10, 10]);
        assert!(deturck_vector(&g, &g0).is_err());
    }
}
