//! Method-of-lines evolution of metrics under dg/dt = -2(Ric - rho R g),
//! with monitor series, blow-up detection, the homogeneous sphere model and
//! residual checks of the curvature evolution equations.

pub mod conformal;
pub mod residual;
pub mod sphere;
pub mod uhlenbeck;

use nalgebra::DMatrix;

use crate::error::{RbError, Result};
use crate::grid::TensorField;
use crate::tensor::curvature::{compute_curvature, CurvatureBundle};
use crate::tensor::metric::MetricField;

/// Time step policy: fixed dt, or curvature-scaled
/// dt = cfl * min(h)^2 / (1 + sup|Riem|).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    Cfl(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// Periodic chart with finite-difference curvature.
    Torus,
    /// Homogeneous round-sphere fiber with closed-form curvature.
    Sphere { c0: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Flat,
    /// g = e^{2u} delta with u = amplitude sin(x1) sin(x2) (n = 2).
    SineConformal { amplitude: f64 },
    /// g = e^{2u} delta with u a random band-limited field (n = 2).
    RandomConformal { amplitude: f64, max_mode: usize },
    /// Flat metric plus a random band-limited symmetric perturbation.
    RandomMetric { amplitude: f64, max_mode: usize },
}

#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub n: usize,
    pub rho: f64,
    pub dims: Vec<usize>,
    pub dt: DtPolicy,
    pub t_end: f64,
    pub model: Model,
    pub initial: InitialData,
    pub seed: u64,
    /// sup|Riem| beyond which the run aborts with BlowUp status.
    pub blowup_threshold: f64,
    /// Record monitors every `sample_stride` accepted steps.
    pub sample_stride: usize,
    /// Evolve the Uhlenbeck frame alongside the metric.
    pub uhlenbeck: bool,
    /// Keep metric snapshots at sample times (for energy monitors).
    pub store_snapshots: bool,
}

impl FlowConfig {
    pub fn torus(n: usize, rho: f64, dims: &[usize]) -> Self {
        FlowConfig {
            n,
            rho,
            dims: dims.to_vec(),
            dt: DtPolicy::Cfl(0.2),
            t_end: 0.1,
            model: Model::Torus,
            initial: InitialData::SineConformal { amplitude: 0.3 },
            seed: 0,
            blowup_threshold: 1e6,
            sample_stride: 1,
            uhlenbeck: false,
            store_snapshots: false,
        }
    }

    pub fn sphere(n: usize, rho: f64, c0: f64) -> Self {
        FlowConfig {
            n,
            rho,
            dims: vec![],
            dt: DtPolicy::Fixed(1e-4),
            t_end: 10.0,
            model: Model::Sphere { c0 },
            initial: InitialData::Flat,
            seed: 0,
            blowup_threshold: 1e6,
            sample_stride: 10,
            uhlenbeck: false,
            store_snapshots: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let schouten = 1.0 / (2.0 * (self.n as f64 - 1.0));
        if matches!(self.model, Model::Torus) && !(self.rho < schouten) {
            return Err(RbError::InvalidParameter(format!(
                "PDE runs need rho < 1/(2(n-1)) = {schouten}, got {}",
                self.rho
            )));
        }
        if let DtPolicy::Cfl(c) = self.dt {
            if !(c > 0.0 && c <= 0.5) {
                return Err(RbError::InvalidParameter(format!("cfl must lie in (0, 0.5], got {c}")));
            }
        }
        if let DtPolicy::Fixed(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(RbError::InvalidParameter(format!("dt must be positive, got {dt}")));
            }
        }
        if self.n < 2 {
            return Err(RbError::InvalidParameter("flow needs n >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// sup|Riem| crossed the threshold at this time.
    BlowUp { t: f64 },
    /// The metric stopped being positive definite; `last_good_t` is the last
    /// time with an SPD metric.
    PositivityLost { last_good_t: f64 },
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Completed => 0,
            RunStatus::BlowUp { .. } => 2,
            RunStatus::PositivityLost { .. } => 3,
        }
    }
}

/// Monitor values at one sample time.
#[derive(Debug, Clone)]
pub struct FlowSample {
    pub t: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub volume: f64,
    pub sup_riem: f64,
    pub uhlenbeck_drift: Option<f64>,
    pub snapshot: Option<MetricField>,
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub samples: Vec<FlowSample>,
    pub status: RunStatus,
    pub steps: usize,
    /// Final (or last good) metric for torus runs.
    pub final_metric: Option<MetricField>,
}

/// One flow state with its curvature cache.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub metric: MetricField,
    pub bundle: CurvatureBundle,
}

impl FlowState {
    pub fn new(t: f64, metric: MetricField) -> Result<Self> {
        let bundle = compute_curvature(&metric)?;
        Ok(FlowState { t, metric, bundle })
    }
}

/// Pointwise flow right-hand side -2 (Ric - rho R g) from the cached bundle.
pub fn rb_rhs(state: &FlowState, rho: f64) -> TensorField {
    let n = state.metric.n;
    let mut out = TensorField::zeros(&state.metric.grid, 2);
    for p in 0..state.metric.grid.len() {
        let r = state.bundle.scal.get(p, &[]);
        for i in 0..n {
            for j in 0..n {
                let v = -2.0
                    * (state.bundle.ric.get(p, &[i, j]) - rho * r * state.metric.g.get(p, &[i, j]));
                out.set(p, &[i, j], v);
            }
        }
    }
    out
}

pub fn initial_metric(cfg: &FlowConfig) -> Result<MetricField> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = match &cfg.initial {
        InitialData::Flat => MetricField::flat(&cfg.dims),
        InitialData::SineConformal { amplitude } => {
            if cfg.n != 2 {
                return Err(RbError::InvalidParameter("conformal initial data needs n = 2".into()));
            }
            let a = *amplitude;
            MetricField::conformal2d(&[cfg.dims[0], cfg.dims[1]], move |x, y| a * x.sin() * y.sin())
        }
        InitialData::RandomConformal { amplitude, max_mode } => {
            if cfg.n != 2 {
                return Err(RbError::InvalidParameter("conformal initial data needs n = 2".into()));
            }
            let u = random_band_limited(&cfg.dims, *amplitude, *max_mode, &mut rng);
            let grid = u.grid.clone();
            let mut g = TensorField::zeros(&grid, 2);
            for p in 0..grid.len() {
                let s = (2.0 * u.data[p]).exp();
                g.set(p, &[0, 0], s);
                g.set(p, &[1, 1], s);
            }
            MetricField::from_field(grid, g)
        }
        InitialData::RandomMetric { amplitude, max_mode } => {
            MetricField::random_perturbation(&cfg.dims, *amplitude, *max_mode, &mut rng)
        }
    };
    m.check_spd("initial_metric")?;
    Ok(m)
}

/// Random band-limited scalar field: modes with |m_i| <= max_mode, amplitudes
/// scaled so the sup norm is close to `amplitude`.
pub fn random_band_limited(
    dims: &[usize],
    amplitude: f64,
    max_mode: usize,
    rng: &mut impl rand::Rng,
) -> TensorField {
    let grid = crate::grid::GridSpec::new(dims);
    let ndim = grid.ndim();
    let mut terms: Vec<(Vec<i32>, f64, f64)> = Vec::new();
    let mm = max_mode as i32;
    // one random phase pair per lattice mode in the half-space
    let mut modes: Vec<Vec<i32>> = Vec::new();
    let mut stack = vec![vec![]];
    for _ in 0..ndim {
        let mut next = Vec::new();
        for m in &stack {
            for v in -mm..=mm {
                let mut m2 = m.clone();
                m2.push(v);
                next.push(m2);
            }
        }
        stack = next;
    }
    for m in stack {
        if m.iter().all(|&v| v == 0) {
            continue;
        }
        // keep one representative of {m, -m}
        if m.iter().find(|&&v| v != 0).map(|&v| v > 0).unwrap_or(false) {
            modes.push(m);
        }
    }
    for m in modes {
        terms.push((m, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    }
    let mut f = TensorField::zeros(&grid, 0);
    for p in 0..grid.len() {
        let x = grid.point(p);
        let mut v = 0.0;
        for (m, ac, asn) in &terms {
            let phase: f64 = m.iter().zip(&x).map(|(&mi, &xi)| mi as f64 * xi).sum();
            v += ac * phase.cos() + asn * phase.sin();
        }
        f.data[p] = v;
    }
    let sup = f.sup_norm();
    if sup > 0.0 {
        f.scale(amplitude / sup);
    }
    f
}

/// Classical RK4 on a flat state vector; the right-hand side may fail (e.g.
/// the metric degenerates mid-stage), which aborts the step.
pub fn rk4_step(
    y: &[f64],
    dt: f64,
    mut rhs: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let k1 = rhs(y)?;
    let mut y2: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * dt * k).collect();
    let k2 = rhs(&y2)?;
    y2 = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * dt * k).collect();
    let k3 = rhs(&y2)?;
    y2 = y.iter().zip(&k3).map(|(a, k)| a + dt * k).collect();
    let k4 = rhs(&y2)?;
    Ok(y
        .iter()
        .enumerate()
        .map(|(i, a)| a + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Run the flow described by `cfg`.
pub fn run(cfg: &FlowConfig) -> Result<FlowRun> {
    cfg.validate()?;
    match cfg.model {
        Model::Sphere { c0 } => sphere::run_sphere_model(cfg, c0),
        Model::Torus => run_torus(cfg),
    }
}

fn run_torus(cfg: &FlowConfig) -> Result<FlowRun> {
    let metric0 = initial_metric(cfg)?;
    let n = cfg.n;
    let grid = metric0.grid.clone();
    let npts = grid.len();
    let ncomp2 = n * n;
    let glen = npts * ncomp2;

    // state = metric components, optionally followed by the frame phi
    let mut y: Vec<f64> = metric0.g.data.clone();
    if cfg.uhlenbeck {
        let mut phi = vec![0.0; glen];
        for p in 0..npts {
            for i in 0..n {
                phi[p * ncomp2 + i * n + i] = 1.0;
            }
        }
        y.extend_from_slice(&phi);
    }
    let g0_data = metric0.g.data.clone();

    let metric_of = |y: &[f64]| -> MetricField {
        let mut f = TensorField::zeros(&grid, 2);
        f.data.copy_from_slice(&y[..glen]);
        MetricField::from_field(grid.clone(), f)
    };

    let rhs = |y: &[f64]| -> Result<Vec<f64>> {
        let m = metric_of(y);
        let state = FlowState::new(0.0, m)?;
        let dg = rb_rhs(&state, cfg.rho);
        let mut out = dg.data;
        if cfg.uhlenbeck {
            let dphi = uhlenbeck::frame_rhs(&state, &y[glen..], cfg.rho);
            out.extend_from_slice(&dphi);
        }
        Ok(out)
    };

    let mut t = 0.0;
    let mut samples: Vec<FlowSample> = Vec::new();
    let mut steps = 0usize;
    let mut status = RunStatus::Completed;

    loop {
        // curvature at the current state; failure means positivity was lost
        // inside the last step
        let state = match FlowState::new(t, metric_of(&y)) {
            Ok(s) => s,
            Err(RbError::DegenerateMetric { .. }) => {
                status = RunStatus::PositivityLost {
                    last_good_t: samples.last().map(|s| s.t).unwrap_or(0.0),
                };
                break;
            }
            Err(e) => return Err(e),
        };
        let sup_riem = state.bundle.sup_riem(&state.metric);

        if steps % cfg.sample_stride == 0 || t >= cfg.t_end || sup_riem > cfg.blowup_threshold {
            samples.push(make_sample(cfg, &state, &y[glen.min(y.len())..], &g0_data, sup_riem));
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
            DtPolicy::Cfl(c) => {
                let h = grid.min_spacing();
                c * h * h / (1.0 + sup_riem)
            }
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

    let final_metric = Some(metric_of(&y));
    Ok(FlowRun { samples, status, steps, final_metric })
}

fn make_sample(
    cfg: &FlowConfig,
    state: &FlowState,
    phi: &[f64],
    g0: &[f64],
    sup_riem: f64,
) -> FlowSample {
    let grid = &state.metric.grid;
    let mut r_min = f64::INFINITY;
    let mut r_max = f64::NEG_INFINITY;
    let mut volume = 0.0;
    let cell = grid.cell_volume();
    for p in 0..grid.len() {
        let r = state.bundle.scal.get(p, &[]);
        r_min = r_min.min(r);
        r_max = r_max.max(r);
        volume += state.bundle.sqrt_det.get(p, &[]) * cell;
    }
    let uhlenbeck_drift = if cfg.uhlenbeck && !phi.is_empty() {
        Some(uhlenbeck::frame_drift_against(&state.metric, phi, g0))
    } else {
        None
    };
    FlowSample {
        t: state.t,
        r_min,
        r_max,
        volume,
        sup_riem,
        uhlenbeck_drift,
        snapshot: if cfg.store_snapshots { Some(state.metric.clone()) } else { None },
    }
}

/// Fixed-dt run that keeps every state; used by residual checks.
pub fn run_states(metric0: MetricField, rho: f64, dt: f64, nsteps: usize) -> Result<Vec<FlowState>> {
    let grid = metric0.grid.clone();
    let glen = grid.len() * metric0.n * metric0.n;
    let metric_of = |y: &[f64]| -> MetricField {
        let mut f = TensorField::zeros(&grid, 2);
        f.data.copy_from_slice(&y[..glen]);
        MetricField::from_field(grid.clone(), f)
    };
    let rhs = |y: &[f64]| -> Result<Vec<f64>> {
        let state = FlowState::new(0.0, metric_of(y))?;
        Ok(rb_rhs(&state, rho).data)
    };
    let mut y = metric0.g.data.clone();
    let mut out = Vec::with_capacity(nsteps + 1);
    out.push(FlowState::new(0.0, metric_of(&y))?);
    for s in 0..nsteps {
        y = rk4_step(&y, dt, rhs)?;
        out.push(FlowState::new(dt * (s + 1) as f64, metric_of(&y))?);
    }
    Ok(out)
}

/// Ricci endomorphism (Ric^#)^i_k = g^{im} Ric_mk at a point.
pub fn ric_sharp_at(state: &FlowState, p: usize) -> DMatrix<f64> {
    let n = state.metric.n;
    let ginv = state.bundle.ginv_at(p);
    let ric = state.bundle.ric_at(p);
    ginv * ric
}
