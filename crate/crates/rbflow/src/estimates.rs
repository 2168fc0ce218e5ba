//! Discrete L^p norms of covariant derivatives, interpolation-inequality
//! ratios, Hamilton's sequence lemma and the smoothing-estimate energy
//! ledger fed by flow runs.

use nalgebra::DMatrix;

use crate::error::{RbError, Result};
use crate::flow::FlowState;
use crate::grid::TensorField;
use crate::tensor::curvature::{compute_christoffel, covariant_derivative, inverse_field};
use crate::tensor::metric::MetricField;
use crate::tensor::operator::orthonormal_frame;

/// Exponent for an L^p norm; `Inf` is the sup norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lp {
    P(f64),
    Inf,
}

impl Lp {
    pub fn value(&self) -> f64 {
        match self {
            Lp::P(p) => *p,
            Lp::Inf => f64::INFINITY,
        }
    }

    pub fn from_f64(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(Lp::Inf)
        } else if p >= 1.0 {
            Ok(Lp::P(p))
        } else {
            Err(RbError::InvalidParameter(format!("L^p exponent must satisfy p >= 1, got {p}")))
        }
    }
}

/// Pointwise |T|_g: transform every slot into a g-orthonormal frame, then
/// take the Frobenius norm.
pub fn pointwise_norm(t: &TensorField, frames: &[DMatrix<f64>], p: usize) -> f64 {
    let n = t.n;
    let rank = t.rank;
    if rank == 0 {
        return t.data[p].abs();
    }
    let e = &frames[p];
    let ncomp = t.ncomp();
    let mut cur: Vec<f64> = t.at(p).to_vec();
    let mut next = vec![0.0; ncomp];
    // contract the leading slot with E and rotate it to the back, rank times
    let lead = ncomp / n;
    for _ in 0..rank {
        for rest in 0..lead {
            for a in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += e[(i, a)] * cur[i * lead + rest];
                }
                next[rest * n + a] = acc;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Orthonormal frames of a metric field, one per point.
pub fn frames_of(m: &MetricField) -> Result<Vec<DMatrix<f64>>> {
    (0..m.grid.len())
        .map(|p| {
            orthonormal_frame(&m.metric_at(p)).map_err(|_| RbError::DegenerateMetric {
                context: "frames_of",
                index: m.grid.coords(p),
            })
        })
        .collect()
}

/// L^p norm with the volume measure: (sum |T|^p sqrt(det g) h^n)^{1/p}.
pub fn lp_norm(t: &TensorField, p: Lp, m: &MetricField) -> Result<f64> {
    if t.grid != m.grid {
        return Err(RbError::GridMismatch("lp_norm: field and metric on different grids".into()));
    }
    let frames = frames_of(m)?;
    lp_norm_with(t, p, m, &frames)
}

pub fn lp_norm_with(t: &TensorField, p: Lp, m: &MetricField, frames: &[DMatrix<f64>]) -> Result<f64> {
    let cell = m.grid.cell_volume();
    match p {
        Lp::Inf => {
            let mut sup = 0.0f64;
            for pt in 0..m.grid.len() {
                sup = sup.max(pointwise_norm(t, frames, pt));
            }
            Ok(sup)
        }
        Lp::P(p) => {
            let mut acc = 0.0;
            for pt in 0..m.grid.len() {
                let v = pointwise_norm(t, frames, pt);
                let det_sqrt = m.metric_at(pt).determinant().sqrt();
                acc += v.powf(p) * det_sqrt * cell;
            }
            Ok(acc.powf(1.0 / p))
        }
    }
}

/// Covariant derivative powers D^0 T .. D^k T.
pub fn derivative_tower(t: &TensorField, m: &MetricField, k: usize) -> Result<Vec<TensorField>> {
    let gamma = compute_christoffel(m)?;
    let mut tower = vec![t.clone()];
    for _ in 0..k {
        let next = covariant_derivative(tower.last().unwrap(), &gamma);
        tower.push(next);
    }
    Ok(tower)
}

/// Interpolation exponent 1/r_j = (1 - j/k)/p + (j/k)/q.
pub fn interpolation_exponent(j: usize, k: usize, p: Lp, q: f64) -> f64 {
    let theta = j as f64 / k as f64;
    let inv_p = match p {
        Lp::Inf => 0.0,
        Lp::P(p) => 1.0 / p,
    };
    1.0 / ((1.0 - theta) * inv_p + theta / q)
}

/// || D^j T ||_{r_j} / (||T||_p^{1-j/k} ||D^k T||_q^{j/k}).
pub fn interpolation_ratio(
    t: &TensorField,
    j: usize,
    k: usize,
    p: Lp,
    q: f64,
    m: &MetricField,
) -> Result<f64> {
    if j > k || k == 0 {
        return Err(RbError::InvalidParameter(format!(
            "interpolation_ratio needs 0 <= j <= k with k >= 1, got j={j} k={k}"
        )));
    }
    let frames = frames_of(m)?;
    let tower = derivative_tower(t, m, k)?;
    let theta = j as f64 / k as f64;
    let base = lp_norm_with(&tower[0], p, m, &frames)?;
    let top = lp_norm_with(&tower[k], Lp::P(q), m, &frames)?;
    let denom = base.powf(1.0 - theta) * top.powf(theta);
    if denom == 0.0 {
        return Err(RbError::InvalidParameter(
            "interpolation_ratio: denominator vanishes (zero field)".into(),
        ));
    }
    let rj = interpolation_exponent(j, k, p, q);
    let num = lp_norm_with(&tower[j], Lp::P(rj), m, &frames)?;
    Ok(num / denom)
}

#[derive(Debug, Clone)]
pub struct SequenceReport {
    pub hypothesis_ok: bool,
    /// Worst (most negative) slack of f(j) <= C sqrt(f(j-1) f(j+1)).
    pub hypothesis_slack: f64,
    /// Worst (most negative) slack of the conclusion when the hypothesis holds.
    pub conclusion_slack: Option<f64>,
}

/// Hamilton's sequence lemma: if f(j) <= C f(j-1)^{1/2} f(j+1)^{1/2} for
/// 0 < j < k, then f(j) <= C^{j(k-j)} f(0)^{1-j/k} f(k)^{j/k}.
pub fn hamilton_sequence_check(f: &[f64], c: f64) -> Result<SequenceReport> {
    if f.len() < 2 {
        return Err(RbError::InvalidParameter("sequence needs length >= 2 (k >= 1)".into()));
    }
    if f.iter().any(|&v| v <= 0.0) {
        return Err(RbError::InvalidParameter("sequence entries must be positive".into()));
    }
    if c <= 0.0 {
        return Err(RbError::InvalidParameter("constant C must be positive".into()));
    }
    let k = f.len() - 1;
    let mut hyp_slack = f64::INFINITY;
    for j in 1..k {
        let bound = c * (f[j - 1] * f[j + 1]).sqrt();
        hyp_slack = hyp_slack.min(bound - f[j]);
    }
    if k == 1 {
        hyp_slack = 0.0;
    }
    let hypothesis_ok = hyp_slack >= -1e-14 * f.iter().fold(0.0f64, |m, v| m.max(*v));
    let conclusion_slack = if hypothesis_ok {
        let mut slack = f64::INFINITY;
        for j in 0..=k {
            let theta = j as f64 / k as f64;
            let bound = c.powf((j * (k - j)) as f64) * f[0].powf(1.0 - theta) * f[k].powf(theta);
            slack = slack.min(bound - f[j]);
        }
        Some(slack)
    } else {
        None
    };
    Ok(SequenceReport { hypothesis_ok, hypothesis_slack: hyp_slack, conclusion_slack })
}

/// ratio of int |F_g(T)| dmu to ||T||_inf ||D^k T||_2^2 with
/// F_g(T) = sum_{j+l=k} D^j T * D^l T * D^k T taken with unit coefficients
/// (pointwise products of frame norms).
pub fn lem5_ratio(t: &TensorField, k: usize, m: &MetricField) -> Result<f64> {
    if k == 0 {
        return Err(RbError::InvalidParameter("lem5_ratio needs k >= 1".into()));
    }
    let frames = frames_of(m)?;
    let tower = derivative_tower(t, m, k)?;
    let sup_t = lp_norm_with(&tower[0], Lp::Inf, m, &frames)?;
    let top2 = lp_norm_with(&tower[k], Lp::P(2.0), m, &frames)?;
    let denom = sup_t * top2 * top2;
    if denom == 0.0 {
        return Err(RbError::InvalidParameter("lem5_ratio: degenerate (zero field)".into()));
    }
    let cell = m.grid.cell_volume();
    let mut integral = 0.0;
    for p in 0..m.grid.len() {
        let nk = pointwise_norm(&tower[k], &frames, p);
        let mut f = 0.0;
        for j in 0..=k {
            let l = k - j;
            f += pointwise_norm(&tower[j], &frames, p) * pointwise_norm(&tower[l], &frames, p) * nk;
        }
        integral += f * m.metric_at(p).determinant().sqrt() * cell;
    }
    Ok(integral / denom)
}

/// Energy functionals along a flow run: A_k = ||D^k Riem||_2^2 +
/// 4|rho|/(1 - 2(n-1) rho) ||D^k R||_2^2 and the weighted sums
/// f_k(t) = sum_j beta^j t^j / j! A_j with beta = min(1, 1 - 2(n-1) rho).
#[derive(Debug, Clone)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    /// a_k[i][j] = A_j at sample i, j <= k_max.
    pub a_k: Vec<Vec<f64>>,
    pub f_k: Vec<Vec<f64>>,
    pub beta: f64,
    pub rho: f64,
}

impl EnergyLedger {
    /// Least-squares slope of log ||D^k Riem||_2^2-proxy (here log A_k)
    /// against log t over samples within [t_lo, t_hi].
    pub fn fitted_exponent(&self, k: usize, t_lo: f64, t_hi: f64) -> Option<f64> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, &t) in self.times.iter().enumerate() {
            if t >= t_lo && t <= t_hi && self.a_k[i][k] > 0.0 {
                xs.push(t.ln());
                ys.push(self.a_k[i][k].ln());
            }
        }
        if xs.len() < 3 {
            return None;
        }
        let nx = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / nx;
        let my = ys.iter().sum::<f64>() / nx;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        Some(sxy / sxx)
    }
}

/// Assemble the ledger from flow states (time-stamped metrics).
pub fn energy_monitor(states: &[FlowState], k_max: usize, rho: f64) -> Result<EnergyLedger> {
    if states.len() < 5 {
        return Err(RbError::InvalidParameter(format!(
            "energy_monitor needs >= 5 snapshots, got {}",
            states.len()
        )));
    }
    let n = states[0].metric.n as f64;
    let denom = 1.0 - 2.0 * (n - 1.0) * rho;
    if denom <= 0.0 {
        return Err(RbError::InvalidParameter(
            "energy_monitor needs rho < 1/(2(n-1))".into(),
        ));
    }
    let coeff = 4.0 * rho.abs() / denom;
    let beta = 1.0f64.min(denom);
    let mut times = Vec::new();
    let mut a_all = Vec::new();
    for st in states {
        let m = &st.metric;
        let frames = frames_of(m)?;
        let gamma = &st.bundle.gamma;
        let mut a_row = Vec::with_capacity(k_max + 1);
        let mut riem_d = st.bundle.riem.clone();
        let mut scal_d = st.bundle.scal.clone();
        for k in 0..=k_max {
            if k > 0 {
                riem_d = covariant_derivative(&riem_d, gamma);
                scal_d = covariant_derivative(&scal_d, gamma);
            }
            let nr = lp_norm_with(&riem_d, Lp::P(2.0), m, &frames)?;
            let ns = lp_norm_with(&scal_d, Lp::P(2.0), m, &frames)?;
            a_row.push(nr * nr + coeff * ns * ns);
        }
        times.push(st.t);
        a_all.push(a_row);
    }
    let mut f_all = Vec::with_capacity(a_all.len());
    for (i, row) in a_all.iter().enumerate() {
        let t = times[i];
        let mut f_row = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let mut f = 0.0;
            let mut fact = 1.0;
            for (j, aj) in row.iter().take(k + 1).enumerate() {
                if j > 0 {
                    fact *= j as f64;
                }
                f += beta.powi(j as i32) * t.powi(j as i32) / fact * aj;
            }
            f_row.push(f);
        }
        f_all.push(f_row);
    }
    Ok(EnergyLedger { times, a_k: a_all, f_k: f_all, beta, rho })
}

/// Contract `pairs` of slots of S (x) T with the inverse metric; the bound
/// |S * T| <= n^{c/2} |S| |T| of the norm lemma is checked against this.
pub fn star_contract(
    s: &TensorField,
    t: &TensorField,
    pairs: &[(usize, usize)],
    m: &MetricField,
) -> Result<TensorField> {
    s.check_same_layout(&TensorField::zeros(&s.grid, s.rank))?;
    if s.grid != t.grid {
        return Err(RbError::GridMismatch("star_contract: grids differ".into()));
    }
    let n = s.n;
    let rs = s.rank;
    let rt = t.rank;
    let total = rs + rt;
    for &(a, b) in pairs {
        if a >= total || b >= total || a == b {
            return Err(RbError::InvalidParameter(format!("bad contraction pair ({a}, {b})")));
        }
    }
    let ginv = inverse_field(m)?;
    let mut contracted: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    contracted.sort_unstable();
    let free: Vec<usize> = (0..total).filter(|i| !contracted.contains(i)).collect();
    let out_rank = free.len();
    let mut out = TensorField::zeros(&s.grid, out_rank);

    let mut full_idx = vec![0usize; total];
    let mut out_idx = vec![0usize; out_rank];
    let npairs = pairs.len();
    let mut pair_idx = vec![0usize; 2 * npairs];
    for p in 0..s.grid.len() {
        let ncomp_out = out.ncomp();
        for co in 0..ncomp_out {
            // decode free indices
            let mut cc = co;
            for i in (0..out_rank).rev() {
                out_idx[i] = cc % n;
                cc /= n;
            }
            for (slot, &pos) in free.iter().enumerate() {
                full_idx[pos] = out_idx[slot];
            }
            // sum over contracted pairs with g^{ab} weights
            let mut acc = 0.0;
            let combos = n.pow(2 * npairs as u32);
            for combo in 0..combos {
                let mut cc = combo;
                for i in 0..2 * npairs {
                    pair_idx[i] = cc % n;
                    cc /= n;
                }
                let mut weight = 1.0;
                for (pi, &(a, b)) in pairs.iter().enumerate() {
                    let ia = pair_idx[2 * pi];
                    let ib = pair_idx[2 * pi + 1];
                    weight *= ginv.get(p, &[ia, ib]);
                    full_idx[a] = ia;
                    full_idx[b] = ib;
                }
                let sv = s.get(p, &full_idx[..rs]);
                let tv = t.get(p, &full_idx[rs..]);
                acc += weight * sv * tv;
            }
            let off = p * ncomp_out + co;
            out.data[off] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sin_x1(dims: &[usize]) -> (TensorField, MetricField) {
        let m = MetricField::flat(dims);
        let mut f = TensorField::zeros(&m.grid, 0);
        for p in 0..m.grid.len() {
            f.data[p] = m.grid.point(p)[0].sin();
        }
        (f, m)
    }

    #[test]
    fn lp_norm_values() {
        let (f, m) = sin_x1(&[64, 64]);
        // ||sin x1||_2 over the flat 2-torus = sqrt(2 pi^2) = pi sqrt(2)
        let n2 = lp_norm(&f, Lp::P(2.0), &m).unwrap();
        assert_relative_eq!(n2, std::f64::consts::PI * 2.0f64.sqrt(), max_relative = 1e-12);
        let ninf = lp_norm(&f, Lp::Inf, &m).unwrap();
        assert_relative_eq!(ninf, 1.0, epsilon = 1e-12);
        // zero field and homogeneity
        let z = TensorField::zeros(&m.grid, 0);
        assert_eq!(lp_norm(&z, Lp::P(3.0), &m).unwrap(), 0.0);
        let mut f3 = f.clone();
        f3.scale(-3.0);
        assert_relative_eq!(lp_norm(&f3, Lp::P(2.0), &m).unwrap(), 3.0 * n2, max_relative = 1e-13);
        assert!(Lp::from_f64(0.5).is_err());
    }

    #[test]
    fn interpolation_endpoints_are_exactly_one() {
        let (f, m) = sin_x1(&[32, 32]);
        let r0 = interpolation_ratio(&f, 0, 2, Lp::P(2.0), 2.0, &m).unwrap();
        assert_relative_eq!(r0, 1.0, epsilon = 1e-13);
        let rk = interpolation_ratio(&f, 2, 2, Lp::P(4.0), 2.0, &m).unwrap();
        assert_relative_eq!(rk, 1.0, epsilon = 1e-13);
    }

    /// Eigenfunction equality: ||T'||_2^2 = ||T||_2 ||T''||_2 for sin x1, so
    /// the j=1, k=2 ratio is exactly 1.
    #[test]
    fn interpolation_eigenfunction_equality() {
        let (f, m) = sin_x1(&[64, 64]);
        let r = interpolation_ratio(&f, 1, 2, Lp::P(2.0), 2.0, &m).unwrap();
        assert_relative_eq!(r, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn sequence_lemma_cases() {
        // constant sequence: equality everywhere
        let r = hamilton_sequence_check(&[1.0, 1.0, 1.0, 1.0], 1.0).unwrap();
        assert!(r.hypothesis_ok);
        assert!(r.conclusion_slack.unwrap().abs() < 1e-12);
        // geometric sequence 2^j: equality in both hypothesis and conclusion
        let f: Vec<f64> = (0..5).map(|j| 2.0f64.powi(j)).collect();
        let r = hamilton_sequence_check(&f, 1.0).unwrap();
        assert!(r.hypothesis_ok);
        assert!(r.hypothesis_slack.abs() < 1e-12);
        assert!(r.conclusion_slack.unwrap().abs() < 1e-11);
        // hypothesis violated at j = 1
        let r = hamilton_sequence_check(&[1.0, 10.0, 1.0], 1.0).unwrap();
        assert!(!r.hypothesis_ok);
        assert!(r.conclusion_slack.is_none());
        // bad inputs
        assert!(hamilton_sequence_check(&[1.0, -1.0, 1.0], 1.0).is_err());
        assert!(hamilton_sequence_check(&[1.0], 1.0).is_err());
    }

    #[test]
    fn lemma_conclusion_never_violated_on_admissible_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..2000 {
            let k = rng.gen_range(2..8usize);
            let c: f64 = rng.gen_range(1.0..10.0);
            // log-convex up to slack 2 log C => admissible by construction
            let mut logf = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            for j in 1..k {
                let second = rng.gen_range(-2.0 * c.ln()..2.0);
                let next = second + 2.0 * logf[j] - logf[j - 1];
                logf.push(next);
            }
            let f: Vec<f64> = logf.iter().map(|l| l.exp()).collect();
            let rep = hamilton_sequence_check(&f, c).unwrap();
            if rep.hypothesis_ok {
                let slack = rep.conclusion_slack.unwrap();
                let scale = f.iter().fold(0.0f64, |m, v| m.max(*v));
                assert!(slack >= -1e-9 * scale, "slack {slack} on {f:?} C={c}");
            }
        }
    }

    /// T = sin x1, k = 1: int |F| = 2 int |T||T'|^2 = 16 pi / 3 over the
    /// 2-torus; ||T||_inf ||T'||_2^2 = 2 pi^2; ratio below 3.
    #[test]
    fn lem5_closed_form_case() {
        let (f, m) = sin_x1(&[64, 64]);
        let r = lem5_ratio(&f, 1, &m).unwrap();
        let expect = (16.0 * std::f64::consts::PI / 3.0) / (2.0 * std::f64::consts::PI.powi(2));
        assert_relative_eq!(r, expect, max_relative = 1e-2); // |sin| kink limits midpoint quadrature
        assert!(r <= 3.0);
        let z = TensorField::zeros(&m.grid, 0);
        assert!(lem5_ratio(&z, 1, &m).is_err());
    }

    /// |S * T| <= n^{c/2} |S| |T| for metric contractions (flat metric).
    #[test]
    fn star_contraction_norm_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = MetricField::flat(&[8, 8, 8]);
        let frames = frames_of(&m).unwrap();
        for _ in 0..10 {
            let mut s = TensorField::zeros(&m.grid, 2);
            let mut t = TensorField::zeros(&m.grid, 2);
            for v in s.data.iter_mut().chain(t.data.iter_mut()) {
                *v = rng.gen_range(-1.0..1.0);
            }
            let out = star_contract(&s, &t, &[(1, 2)], &m).unwrap();
            for p in 0..m.grid.len() {
                let lhs = pointwise_norm(&out, &frames, p);
                let rhs = (3.0f64).sqrt()
                    * pointwise_norm(&s, &frames, p)
                    * pointwise_norm(&t, &frames, p);
                assert!(lhs <= rhs + 1e-12, "p={p} lhs={lhs} rhs={rhs}");
            }
        }
    }

    #[test]
    fn energy_monitor_flat_run_is_zero() {
        let m = MetricField::flat(&[8, 8]);
        let states = crate::flow::run_states(m, 0.1, 1e-3, 5).unwrap();
        let ledger = energy_monitor(&states, 2, 0.1).unwrap();
        for row in &ledger.a_k {
            for a in row {
                assert!(a.abs() < 1e-20);
            }
        }
        assert_relative_eq!(ledger.beta, 1.0 - 2.0 * 0.1);
        // too few snapshots rejected
        let m = MetricField::flat(&[8, 8]);
        let states = crate::flow::run_states(m, 0.1, 1e-3, 2).unwrap();
        assert!(energy_monitor(&states, 1, 0.1).is_err());
    }

    #[test]
    fn exponent_formula_endpoints() {
        assert_relative_eq!(interpolation_exponent(0, 3, Lp::P(4.0), 2.0), 4.0);
        assert_relative_eq!(interpolation_exponent(3, 3, Lp::P(4.0), 2.0), 2.0);
        assert_relative_eq!(interpolation_exponent(1, 2, Lp::Inf, 2.0), 4.0);
    }

    #[test]
    fn pointwise_norm_matches_direct_contraction_on_curved_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let m = MetricField::random_perturbation(&[8, 8], 0.2, 2, &mut rng);
        let frames = frames_of(&m).unwrap();
        let mut t = TensorField::zeros(&m.grid, 2);
        for v in t.data.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let ginv = inverse_field(&m).unwrap();
        for p in [0usize, 17, 40] {
            let direct: f64 = {
                let mut acc = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        for a in 0..2 {
                            for b in 0..2 {
                                acc += ginv.get(p, &[i, a])
                                    * ginv.get(p, &[j, b])
                                    * t.get(p, &[i, j])
                                    * t.get(p, &[a, b]);
                            }
                        }
                    }
                }
                acc.sqrt()
            };
            assert_relative_eq!(pointwise_norm(&t, &frames, p), direct, max_relative = 1e-12);
        }
        let _ = GridSpec::new(&[4, 4]);
    }
}
