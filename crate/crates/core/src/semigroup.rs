//! Monte-Carlo estimators of (f, e^{−tH} g) for the subordinated Feynman–Kac
//! formulas, with coupled modulus companions and derived diagnostics.

use crate::bernstein::BernsteinFunction;
use crate::error::{invalid, Error, Result};
use crate::field::{FieldSpec, Potential};
use crate::pathkit::{potential_integral, stratonovich_integral, subordinate, subordinate_path, uniform_grid, TimeRule};
use crate::quad;
use crate::rng::{self, PathRng};
use crate::spin::{sample_spin_trajectory, spin_weight_scaled, SpinCoupling, SpinTrajectory};
use crate::stats::{ComplexStats, RunningStats};
use crate::subordinator::{SamplingStrategy, SubordinatorSpec};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Shape of a test function around its Gaussian envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestShape {
    /// a·e^{−|x−c|²/(2w²)}.
    Gaussian,
    /// a·((x₁−c₁)/w)·e^{−|x−c|²/(2w²)}; changes sign.
    FirstHermite,
}

/// Real test function built on a Gaussian envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
    pub shape: TestShape,
}

impl TestFunction {
    pub fn gaussian(center: Vec<f64>, width: f64, amplitude: f64) -> Result<Self> {
        Self::build(center, width, amplitude, TestShape::Gaussian)
    }

    /// Gaussian with unit L² norm.
    pub fn normalized_gaussian(center: Vec<f64>, width: f64) -> Result<Self> {
        let d = center.len() as f64;
        Self::gaussian(center, width, (PI * width * width).powf(-d / 4.0))
    }

    pub fn first_hermite(center: Vec<f64>, width: f64, amplitude: f64) -> Result<Self> {
        Self::build(center, width, amplitude, TestShape::FirstHermite)
    }

    fn build(center: Vec<f64>, width: f64, amplitude: f64, shape: TestShape) -> Result<Self> {
        if center.is_empty() || center.len() > 3 {
            return Err(invalid(format!("test function dimension must be 1..=3, got {}", center.len())));
        }
        if !(width > 0.0 && width.is_finite()) || !amplitude.is_finite() {
            return Err(invalid("test function needs a positive width and finite amplitude"));
        }
        Ok(Self { center, width, amplitude, shape })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn poly(&self, x: &[f64]) -> f64 {
        match self.shape {
            TestShape::Gaussian => 1.0,
            TestShape::FirstHermite => (x[0] - self.center[0]) / self.width,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        self.amplitude * self.poly(x) * (-r2 / (2.0 * self.width * self.width)).exp()
    }

    pub fn is_sign_changing(&self) -> bool {
        self.shape != TestShape::Gaussian && self.amplitude != 0.0
    }

    /// ‖f‖₁ for the Gaussian shape.
    pub fn l1_norm(&self) -> Result<f64> {
        match self.shape {
            TestShape::Gaussian => Ok(self.amplitude.abs() * (2.0 * PI * self.width * self.width).powf(self.dim() as f64 / 2.0)),
            TestShape::FirstHermite => Err(invalid("L1 importance sampling needs a one-signed test function")),
        }
    }

    /// (f, e^{tΔ/2} g) in closed form for Gaussian pairs; t = 0 gives (f, g).
    pub fn heat_inner(&self, other: &TestFunction, t: f64) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(invalid("test functions have different dimensions"));
        }
        if self.shape != TestShape::Gaussian || other.shape != TestShape::Gaussian {
            return Err(Error::Unsupported("closed-form inner products need Gaussian test functions".into()));
        }
        if !(t >= 0.0) {
            return Err(invalid("time must be nonnegative"));
        }
        let d = self.dim() as f64;
        let a = self.width * self.width;
        let b = other.width * other.width;
        let dist2: f64 = self.center.iter().zip(&other.center).map(|(x, y)| (x - y) * (x - y)).sum();
        let spread = (b / (b + t)).powf(d / 2.0);
        let overlap = (2.0 * PI * a * (b + t) / (a + b + t)).powf(d / 2.0) * (-dist2 / (2.0 * (a + b + t))).exp();
        Ok(self.amplitude * other.amplitude * spread * overlap)
    }

    /// (f, g): closed form for Gaussian pairs, tensor Gauss–Hermite otherwise.
    pub fn inner(&self, other: &TestFunction) -> Result<f64> {
        match self.heat_inner(other, 0.0) {
            Err(Error::Unsupported(_)) => {
                let design = XDesign::quadrature(self, 20)?;
                Ok(design.points.iter().zip(&design.weights).map(|(x, w)| w * other.eval(x)).sum())
            }
            r => r,
        }
    }
}

/// ℤ_p test function f(x, σ_α) = c_α · base(x).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinTestFunction {
    pub base: TestFunction,
    pub amplitudes: Vec<Complex64>,
}

impl SpinTestFunction {
    pub fn new(base: TestFunction, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(invalid("spin test function needs p >= 2 amplitudes"));
        }
        Ok(Self { base, amplitudes })
    }

    /// Same base in every spin sector.
    pub fn uniform(base: TestFunction, p: usize) -> Result<Self> {
        Self::new(base, vec![Complex64::new(1.0, 0.0); p])
    }

    pub fn p(&self) -> usize {
        self.amplitudes.len()
    }

    /// f(x, σ_α) for α in 1..=p.
    pub fn eval(&self, x: &[f64], alpha: usize) -> Complex64 {
        self.amplitudes[alpha - 1] * self.base.eval(x)
    }
}

/// How the outer dx integral is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XSampling {
    /// Tensor Gauss–Hermite nodes matched to the envelope of f; path i uses node i mod M.
    Quadrature { nodes_per_axis: usize },
    /// x ∝ |f| with weight sign(f)·‖f‖₁.
    ImportanceFromF,
}

/// Monte-Carlo run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub t: f64,
    pub n_paths: u64,
    /// Outer (subordinator) grid steps on [0, t].
    pub n_time_steps: usize,
    /// Brownian substeps per subordinator segment.
    pub n_inner: usize,
    pub x_sampling: XSampling,
    pub seed: u64,
    pub n_chunks: u64,
    pub time_rule: TimeRule,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl EstimatorConfig {
    pub fn new(t: f64, n_paths: u64, seed: u64) -> Self {
        Self {
            t,
            n_paths,
            n_time_steps: 16,
            n_inner: 4,
            x_sampling: XSampling::Quadrature { nodes_per_axis: 8 },
            seed,
            n_chunks: 16,
            time_rule: TimeRule::Trapezoid,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(invalid(format!("t must be finite and nonnegative, got {}", self.t)));
        }
        if self.n_chunks == 0 || self.n_paths == 0 {
            return Err(invalid("n_paths and n_chunks must be positive"));
        }
        if self.n_paths % self.n_chunks != 0 {
            return Err(invalid(format!("n_paths {} is not divisible by n_chunks {}", self.n_paths, self.n_chunks)));
        }
        if self.n_time_steps == 0 || self.n_inner == 0 {
            return Err(invalid("n_time_steps and n_inner must be positive"));
        }
        if let XSampling::Quadrature { nodes_per_axis } = self.x_sampling {
            if nodes_per_axis == 0 || nodes_per_axis > 64 {
                return Err(invalid("nodes_per_axis must be in 1..=64"));
            }
        }
        if self.threads == Some(0) {
            return Err(invalid("threads must be positive"));
        }
        Ok(())
    }
}

/// Statistics of one chunk of consecutive paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkSummary {
    pub n: u64,
    pub mean: Complex64,
    pub abs_mean: f64,
}

/// Monte-Carlo estimate of a matrix element with its coupled modulus companion.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: Complex64,
    pub stderr: f64,
    pub n: u64,
    pub companion_abs_mean: f64,
    pub companion_stderr: f64,
    pub chunks: Vec<ChunkSummary>,
}

impl Estimate {
    fn exact(value: Complex64, abs_value: f64) -> Self {
        Self { mean: value, stderr: 0.0, n: 0, companion_abs_mean: abs_value, companion_stderr: 0.0, chunks: Vec::new() }
    }

    fn from_stats(chunks: &[ComplexStats]) -> Self {
        let mut total = ComplexStats::new();
        for c in chunks {
            total.merge(c);
        }
        Self {
            mean: total.mean,
            stderr: total.stderr(),
            n: total.n,
            companion_abs_mean: total.abs.mean,
            companion_stderr: total.abs.stderr(),
            chunks: chunks.iter().map(|c| ChunkSummary { n: c.n, mean: c.mean, abs_mean: c.abs.mean }).collect(),
        }
    }
}

/// Starting points and weights for the outer dx integral.
struct XDesign {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    importance: Option<(Vec<f64>, f64, f64)>,
}

impl XDesign {
    /// Weights include the value of f, so Σ w_j h(x_j) ≈ ∫ f h dx.
    fn quadrature(f: &TestFunction, nodes_per_axis: usize) -> Result<Self> {
        let d = f.dim();
        let (nodes, gw) = quad::gauss_hermite(nodes_per_axis);
        let scale = std::f64::consts::SQRT_2 * f.width;
        let total = nodes_per_axis.pow(d as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rest = idx;
            let mut x = vec![0.0; d];
            let mut w = f.amplitude * scale.powi(d as i32);
            for (i, xi) in x.iter_mut().enumerate() {
                let j = rest % nodes_per_axis;
                rest /= nodes_per_axis;
                *xi = f.center[i] + scale * nodes[j];
                w *= gw[j];
            }
            w *= f.poly(&x);
            points.push(x);
            weights.push(w);
        }
        Ok(Self { points, weights, importance: None })
    }

    fn importance(f: &TestFunction) -> Result<Self> {
        if f.is_sign_changing() {
            return Err(invalid("ImportanceFromF needs a test function that does not change sign"));
        }
        let norm = f.l1_norm()?;
        Ok(Self { points: Vec::new(), weights: Vec::new(), importance: Some((f.center.clone(), f.width, norm * f.amplitude.signum())) })
    }

    fn build(f: &TestFunction, sampling: XSampling) -> Result<Self> {
        match sampling {
            XSampling::Quadrature { nodes_per_axis } => Self::quadrature(f, nodes_per_axis),
            XSampling::ImportanceFromF => Self::importance(f),
        }
    }

    fn check_paths(&self, cfg: &EstimatorConfig) -> Result<()> {
        let m = self.points.len() as u64;
        if m > 0 && cfg.n_paths % m != 0 {
            return Err(invalid(format!("n_paths {} must be a multiple of the {} quadrature nodes", cfg.n_paths, m)));
        }
        Ok(())
    }

    /// Starting point and weight ∝ f(x)/density(x) for path `i`.
    fn draw(&self, i: u64, rng: &mut PathRng) -> (Vec<f64>, f64) {
        match &self.importance {
            Some((c, w, weight)) => (c.iter().map(|ci| ci + w * rng::normal(rng)).collect(), *weight),
            None => {
                let j = (i % self.points.len() as u64) as usize;
                (self.points[j].clone(), self.points.len() as f64 * self.weights[j])
            }
        }
    }
}

/// Runs `sample(i, rng)` over every path index in deterministic chunks and
/// merges chunk statistics in index order.
fn run_chunks<F>(cfg: &EstimatorConfig, sample: F) -> Result<Estimate>
where
    F: Fn(u64, &mut PathRng) -> Result<(Complex64, f64)> + Sync,
{
    let per_chunk = cfg.n_paths / cfg.n_chunks;
    let work = || -> Result<Vec<ComplexStats>> {
        (0..cfg.n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut stats = ComplexStats::new();
                for i in c * per_chunk..(c + 1) * per_chunk {
                    let mut r = rng::stream(cfg.seed, i);
                    let (z, abs) = sample(i, &mut r)?;
                    if !(z.re.is_finite() && z.im.is_finite() && abs.is_finite()) {
                        return Err(Error::NonFiniteWeight { path: i });
                    }
                    stats.push_with_abs(z, abs);
                }
                Ok(stats)
            })
            .collect()
    };
    let chunks = with_threads(cfg.threads, work)?;
    Ok(Estimate::from_stats(&chunks))
}

fn with_threads<T: Send>(threads: Option<usize>, work: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => work(),
        Some(k) => {
            rayon::ThreadPoolBuilder::new().num_threads(k).build().map_err(|e| invalid(format!("cannot build thread pool: {e}")))?.install(work)
        }
    }
}

/// Real-valued chunked Monte-Carlo mean, deterministic in (seed, n, n_chunks).
fn mc_real<F>(n: u64, n_chunks: u64, seed: u64, sample: F) -> Result<RunningStats>
where
    F: Fn(&mut PathRng) -> Result<f64> + Sync,
{
    let chunks = n_chunks.clamp(1, n.max(1));
    let per = n.div_ceil(chunks);
    let parts: Result<Vec<RunningStats>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = RunningStats::new();
            for i in c * per..((c + 1) * per).min(n) {
                s.push(sample(&mut rng::stream(seed, i))?);
            }
            Ok(s)
        })
        .collect();
    let mut total = RunningStats::new();
    for p in parts? {
        total.merge(&p);
    }
    Ok(total)
}

fn check_dims(d: usize, field: &FieldSpec, v: &Potential, f: &TestFunction, g: &TestFunction) -> Result<()> {
    if field.dim != d || v.dim != d || f.dim() != d || g.dim() != d {
        return Err(invalid(format!("dimension mismatch: field {}, potential {}, f {}, g {}", field.dim, v.dim, f.dim(), g.dim())));
    }
    Ok(())
}

/// Estimates ∫dx E[f(B₀) g(B_{T_t}) e^{−i∫a∘dB} e^{−∫₀^t V(B_{T_s})ds}] for real f, g.
pub fn estimate_spinless(
    spec: &SubordinatorSpec,
    field: &FieldSpec,
    v: &Potential,
    f: &TestFunction,
    g: &TestFunction,
    cfg: &EstimatorConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    check_dims(f.dim(), field, v, f, g)?;
    if cfg.t == 0.0 {
        let value = f.inner(g)?;
        let abs_value = abs_inner(f, g)?;
        return Ok(Estimate::exact(Complex64::new(value, 0.0), abs_value));
    }
    let design = XDesign::build(f, cfg.x_sampling)?;
    design.check_paths(cfg)?;
    let outer = uniform_grid(cfg.t, cfg.n_time_steps);
    // The Brownian resolution only matters for the magnetic phase.
    let n_inner = if field.is_zero() { 1 } else { cfg.n_inner };
    run_chunks(cfg, |i, r| {
        let (x, wx) = design.draw(i, r);
        let sub = spec.sample_path(&outer, r)?;
        let spath = subordinate_path(&x, sub, n_inner, &[], r)?;
        let sv = potential_integral(&spath, v, cfg.time_rule)?;
        let phase = if field.is_zero() { 0.0 } else { stratonovich_integral(&spath.brownian, field)?.midpoint };
        let amp = wx * g.eval(spath.end()) * (-sv).exp();
        Ok((Complex64::from_polar(1.0, -phase) * amp, amp.abs()))
    })
}

fn abs_inner(f: &TestFunction, g: &TestFunction) -> Result<f64> {
    let design = XDesign::quadrature(f, 20)?;
    Ok(design.points.iter().zip(&design.weights).map(|(x, w)| (w * g.eval(x)).abs()).sum())
}

/// Estimates Σ_α ∫dx E[e^{(p−1)T_t} conj f(B₀,σ_α) g(B_{T_t},σ_{α+N}) e^{S_V + S_a + S_spin}].
///
/// `spectral_shift` is subtracted from the spin diagonal, so the run targets
/// e^{−t(Ψ(h_{ℤ_p} − shift) + V)}.
#[allow(clippy::too_many_arguments)]
pub fn estimate_spin(
    spec: &SubordinatorSpec,
    field: &FieldSpec,
    coupling: &SpinCoupling,
    v: &Potential,
    f: &SpinTestFunction,
    g: &SpinTestFunction,
    cfg: &EstimatorConfig,
    spectral_shift: f64,
) -> Result<Estimate> {
    cfg.validate()?;
    check_dims(f.base.dim(), field, v, &f.base, &g.base)?;
    let p = coupling.config.p;
    if f.p() != p || g.p() != p {
        return Err(invalid(format!("test functions carry {} and {} spin sectors, coupling has p = {p}", f.p(), g.p())));
    }
    if cfg.t == 0.0 {
        let base = f.base.inner(&g.base)?;
        let base_abs = abs_inner(&f.base, &g.base)?;
        let (mut value, mut abs_value) = (Complex64::new(0.0, 0.0), 0.0);
        for (a, b) in f.amplitudes.iter().zip(&g.amplitudes) {
            value += a.conj() * b * base;
            abs_value += (a.conj() * b).norm() * base_abs;
        }
        return Ok(Estimate::exact(value, abs_value));
    }
    let design = XDesign::build(&f.base, cfg.x_sampling)?;
    design.check_paths(cfg)?;
    let outer = uniform_grid(cfg.t, cfg.n_time_steps);
    let config = coupling.config;
    if let Some((u, u_beta)) = coupling.constant_values() {
        return run_chunks(cfg, |i, r| {
            let (x, wx) = design.draw(i, r);
            let sub = spec.sample_path(&outer, r)?;
            let horizon = sub.terminal();
            let n_inner = if field.is_zero() { 1 } else { cfg.n_inner };
            let spath = subordinate_path(&x, sub, n_inner, &[], r)?;
            let sv = potential_integral(&spath, v, cfg.time_rule)?;
            let phase = if field.is_zero() { 0.0 } else { stratonovich_integral(&spath.brownian, field)?.midpoint };
            let counts: Vec<u64> = (1..p).map(|_| rng::poisson(r, horizon)).collect();
            let Some(jumps) = constant_jump_factor(u_beta, &counts) else {
                return Ok((Complex64::new(0.0, 0.0), 0.0));
            };
            // The amplitude joins the exponent so that a large horizon and a
            // far endpoint cannot meet as inf · 0.
            let amp = wx * g.base.eval(spath.end());
            if amp == 0.0 {
                return Ok((Complex64::new(0.0, 0.0), 0.0));
            }
            let log_w = (p as f64 - 1.0) * horizon - sv - (u - spectral_shift) * horizon + jumps.re + amp.abs().ln();
            let weight = Complex64::from_polar(log_w.exp(), jumps.im - phase) * amp.signum();
            let shift = (counts.iter().enumerate().map(|(b, n)| (b as u64 + 1) * n).sum::<u64>() % p as u64) as usize;
            let (mut z, mut abs) = (Complex64::new(0.0, 0.0), 0.0);
            for alpha0 in 1..=p {
                let pair = f.amplitudes[alpha0 - 1].conj() * g.amplitudes[config.shift(alpha0, shift) - 1];
                z += pair;
                abs += pair.norm();
            }
            Ok((z * weight, abs * weight.norm()))
        });
    }
    run_chunks(cfg, |i, r| {
        let (x, wx) = design.draw(i, r);
        let sub = spec.sample_path(&outer, r)?;
        let horizon = sub.terminal();
        let first = sample_spin_trajectory(p, horizon, 1, r)?;
        let jumps = first.all_times();
        let spath = subordinate_path(&x, sub, cfg.n_inner, &jumps, r)?;
        let sv = potential_integral(&spath, v, cfg.time_rule)?;
        let phase = if field.is_zero() { 0.0 } else { stratonovich_integral(&spath.brownian, field)?.midpoint };
        let amp = wx * g.base.eval(spath.end());
        if amp == 0.0 {
            return Ok((Complex64::new(0.0, 0.0), 0.0));
        }
        let log_scale = (p as f64 - 1.0) * horizon - sv + amp.abs().ln();
        let (mut z, mut abs) = (Complex64::new(0.0, 0.0), 0.0);
        for alpha0 in 1..=p {
            let traj = if alpha0 == 1 { first.clone() } else { SpinTrajectory::from_jumps(config, horizon, alpha0, first.jump_times.clone())? };
            let sw = spin_weight_scaled(&traj, &spath.brownian, coupling, spectral_shift, log_scale)?;
            let pair = f.amplitudes[alpha0 - 1].conj() * g.amplitudes[traj.final_index() - 1];
            z += pair * sw;
            abs += pair.norm() * sw.norm();
        }
        Ok((Complex64::from_polar(amp.signum(), -phase) * z, abs))
    })
}

/// log Π_β (−U_β)^{n_β} as (log modulus, argument); `None` when a vanishing
/// factor is hit.
fn constant_jump_factor(u_beta: &[Complex64], counts: &[u64]) -> Option<Complex64> {
    let mut log = Complex64::new(0.0, 0.0);
    for (z, &n) in u_beta.iter().zip(counts) {
        if n == 0 {
            continue;
        }
        let factor = -z;
        if factor.norm() == 0.0 {
            return None;
        }
        log += n as f64 * Complex64::new(factor.norm().ln(), factor.arg());
    }
    Some(log)
}

/// Spin-½ relativistic run: Ψ(u) = √(2u + m²) − m with the curl coupling,
/// ε-regularized when `epsilon > 0`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_relativistic_spin_half(
    mass: f64,
    field: &FieldSpec,
    v: &Potential,
    f: &SpinTestFunction,
    g: &SpinTestFunction,
    cfg: &EstimatorConfig,
    epsilon: f64,
    spectral_shift: f64,
) -> Result<Estimate> {
    if field.dim != 3 || field.curl_b.is_none() {
        return Err(invalid("relativistic spin-1/2 runs need d = 3 and a curl"));
    }
    let spec = SubordinatorSpec::new(BernsteinFunction::relativistic(mass)?, SamplingStrategy::RelativisticExact)?;
    let mut coupling = SpinCoupling::spin12(field)?;
    if epsilon > 0.0 {
        coupling = coupling.regularize(epsilon)?;
    } else if epsilon < 0.0 {
        return Err(invalid("epsilon must be nonnegative"));
    }
    estimate_spin(&spec, field, &coupling, v, f, g, cfg, spectral_shift)
}

/// Closed-form value of (f, e^{−tΨ(−Δ/2)} g) for Gaussian f, g with a common
/// center, by radial quadrature in Fourier space.
pub fn fourier_matrix_element(psi: &BernsteinFunction, t: f64, f: &TestFunction, g: &TestFunction) -> Result<f64> {
    if f.shape != TestShape::Gaussian || g.shape != TestShape::Gaussian {
        return Err(Error::Unsupported("Fourier reference needs Gaussian test functions".into()));
    }
    if f.dim() != g.dim() || f.center.iter().zip(&g.center).any(|(a, b)| a != b) {
        return Err(Error::Unsupported("Fourier reference needs a common center".into()));
    }
    let d = f.dim() as i32;
    let s = f.width * f.width + g.width * g.width;
    let sphere = 2.0 * PI.powf(d as f64 / 2.0) / crate::special::gamma(d as f64 / 2.0);
    let rho_max = (2.0 * 745.0 / s).sqrt();
    let psi_err = std::cell::Cell::new(None);
    let r = quad::integrate(
        |rho| {
            let u = 0.5 * rho * rho;
            let val = psi.eval(u).unwrap_or_else(|e| {
                psi_err.set(Some(e.to_string()));
                0.0
            });
            rho.powi(d - 1) * (-0.5 * s * rho * rho - t * val).exp()
        },
        0.0,
        rho_max,
        1e-15,
        1e-11,
        4000,
    )?;
    if let Some(e) = psi_err.take() {
        return Err(invalid(format!("Psi evaluation failed: {e}")));
    }
    Ok(f.amplitude * g.amplitude * (f.width * g.width).powi(d) * sphere * r.value)
}

/// Both sides of the coupled diamagnetic inequality |mean| ≤ mean|weight|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiamagneticReport {
    pub modulus: f64,
    pub companion: f64,
    pub gap: f64,
    pub holds: bool,
}

/// The inequality is the triangle inequality on the sample, so it is checked
/// with zero tolerance beyond one ulp of summation rounding.
pub fn diamagnetic_check(est: &Estimate) -> DiamagneticReport {
    let modulus = est.mean.norm();
    let companion = est.companion_abs_mean;
    let slack = 4.0 * f64::EPSILON * companion * (est.n.max(1) as f64).log2().max(1.0);
    DiamagneticReport { modulus, companion, gap: companion - modulus, holds: modulus <= companion + slack }
}

/// E(t) = −log Re(f, e^{−tH} f) / t at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyPoint {
    pub t: f64,
    pub energy: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundEnergyReport {
    pub points: Vec<EnergyPoint>,
    /// Times dropped because the estimate had a non-positive real part.
    pub dropped: Vec<f64>,
    /// E_∞ and its standard error from a weighted fit E(t) = E_∞ + c/t.
    pub extrapolated: Option<(f64, f64)>,
}

pub fn ground_energy_estimate(runs: &[(f64, Estimate)]) -> GroundEnergyReport {
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for (t, est) in runs {
        let re = est.mean.re;
        if re > 0.0 && *t > 0.0 {
            points.push(EnergyPoint { t: *t, energy: -re.ln() / t, stderr: est.stderr / (t * re) });
        } else {
            log::warn!("dropping t = {t}: estimate {re} is not positive");
            dropped.push(*t);
        }
    }
    points.sort_by(|a, b| a.t.total_cmp(&b.t));
    let extrapolated = fit_inverse_t(&points);
    GroundEnergyReport { points, dropped, extrapolated }
}

fn fit_inverse_t(points: &[EnergyPoint]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let min_se = points.iter().map(|p| p.stderr).filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if min_se.is_finite() { min_se * 1e-3 } else { 1.0 };
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let w = 1.0 / p.stderr.max(floor).powi(2);
        let x = 1.0 / p.t;
        sw += w;
        sx += w * x;
        sy += w * p.energy;
        sxx += w * x * x;
        sxy += w * x * p.energy;
    }
    let det = sw * sxx - sx * sx;
    if det.abs() <= 1e-300 {
        return None;
    }
    let intercept = (sxx * sy - sx * sxy) / det;
    Some((intercept, (sxx / det).sqrt()))
}

/// sup_x ∫₀^t E[V(X_s)] ds over probes, for each t.
#[derive(Debug, Clone, PartialEq)]
pub struct KatoReport {
    pub t_grid: Vec<f64>,
    /// Value per (probe, t).
    pub values: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub sup_values: Vec<f64>,
    pub sup_stderr: Vec<f64>,
    /// Whether the sup decays to 0 as t → 0.
    pub decays: bool,
}

/// Monte-Carlo sampling parameters shared by the Kato-type diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticSampling {
    pub n_paths: u64,
    pub n_time_steps: usize,
    pub seed: u64,
    pub n_chunks: u64,
}

impl Default for DiagnosticSampling {
    fn default() -> Self {
        Self { n_paths: 4000, n_time_steps: 16, seed: 1, n_chunks: 16 }
    }
}

fn time_average(v: &Potential, spec: &SubordinatorSpec, x: &[f64], t: f64, s: DiagnosticSampling, stream_seed: u64) -> Result<RunningStats> {
    if let Some(c) = v.constant_value() {
        return Ok(RunningStats { n: s.n_paths, mean: c * t, m2: 0.0 });
    }
    mc_real(s.n_paths, s.n_chunks, stream_seed, |r| {
        let sp = subordinate(x, t, spec, s.n_time_steps, 1, r)?;
        potential_integral(&sp, v, TimeRule::Trapezoid)
    })
}

fn derived_seed(seed: u64, a: usize, b: usize) -> u64 {
    seed ^ (a as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (b as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

pub fn kato_condition1_check(
    v: &Potential,
    spec: &SubordinatorSpec,
    t_grid: &[f64],
    probes: &[Vec<f64>],
    sampling: DiagnosticSampling,
) -> Result<KatoReport> {
    if t_grid.is_empty() || probes.is_empty() {
        return Err(invalid("kato check needs times and probe points"));
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(invalid("kato times must be positive"));
    }
    if probes.iter().any(|x| x.len() != v.dim) {
        return Err(invalid("probe dimension does not match the potential"));
    }
    let mut values = Vec::new();
    let mut stderr = Vec::new();
    for (pi, x) in probes.iter().enumerate() {
        let mut row = Vec::new();
        let mut se = Vec::new();
        for (ti, &t) in t_grid.iter().enumerate() {
            let st = time_average(v, spec, x, t, sampling, derived_seed(sampling.seed, pi, ti))?;
            row.push(st.mean);
            se.push(st.stderr());
        }
        values.push(row);
        stderr.push(se);
    }
    let mut sup_values = vec![f64::NEG_INFINITY; t_grid.len()];
    let mut sup_stderr = vec![0.0; t_grid.len()];
    for (row, se) in values.iter().zip(&stderr) {
        for k in 0..t_grid.len() {
            if row[k] > sup_values[k] {
                sup_values[k] = row[k];
                sup_stderr[k] = se[k];
            }
        }
    }
    let decays = crate::stats::vanishes_at_zero(t_grid, &sup_values, &sup_stderr);
    Ok(KatoReport { t_grid: t_grid.to_vec(), values, stderr, sup_values, sup_stderr, decays })
}

/// Monte-Carlo sup_x E[e^{∫₀^t V(X_s)ds}] next to the chained bound (1−ε)^{−⌈t/s⌉}.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpMomentReport {
    pub t: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub argmax: Vec<f64>,
    /// Block length s used for the chained bound.
    pub block: f64,
    /// Measured sup_x ∫₀^s E[V(X_r)] dr.
    pub epsilon: f64,
    pub bound: Option<f64>,
    pub within_bound: bool,
}

pub fn exponential_moment_check(
    v: &Potential,
    spec: &SubordinatorSpec,
    t: f64,
    probes: &[Vec<f64>],
    sampling: DiagnosticSampling,
) -> Result<ExpMomentReport> {
    if !(t > 0.0 && t.is_finite()) || probes.is_empty() {
        return Err(invalid("exponential moment check needs t > 0 and probe points"));
    }
    let (mut best, mut best_se, mut argmax) = (f64::NEG_INFINITY, 0.0, probes[0].clone());
    for (pi, x) in probes.iter().enumerate() {
        let st = if let Some(c) = v.constant_value() {
            RunningStats { n: sampling.n_paths, mean: (c * t).exp(), m2: 0.0 }
        } else {
            mc_real(sampling.n_paths, sampling.n_chunks, derived_seed(sampling.seed, pi, 999), |r| {
                let sp = subordinate(x, t, spec, sampling.n_time_steps, 1, r)?;
                Ok(potential_integral(&sp, v, TimeRule::Trapezoid)?.exp())
            })?
        };
        if st.mean > best {
            best = st.mean;
            best_se = st.stderr();
            argmax = x.clone();
        }
    }
    // Pick the block length giving the smallest chained bound.
    let mut choice: Option<(f64, f64, f64)> = None;
    let mut fallback = (t, f64::INFINITY);
    for k in 0..8 {
        let s = t / 2f64.powi(k);
        let mut eps: f64 = 0.0;
        for (pi, x) in probes.iter().enumerate() {
            let st = time_average(v, spec, x, s, sampling, derived_seed(sampling.seed, pi, 1000 + k as usize))?;
            eps = eps.max(st.mean + 2.0 * st.stderr());
        }
        if k == 0 {
            fallback = (s, eps);
        }
        if eps < 1.0 {
            let bound = (1.0 - eps).powf(-(t / s).ceil());
            if choice.is_none_or(|(_, _, b)| bound < b) {
                choice = Some((s, eps, bound));
            }
        }
    }
    let (block, epsilon, bound) = match choice {
        Some((s, e, b)) => (s, e, Some(b)),
        None => (fallback.0, fallback.1, None),
    };
    let within_bound = bound.is_none_or(|b| best <= b + 4.0 * best_se);
    Ok(ExpMomentReport { t, estimate: best, stderr: best_se, argmax, block, epsilon, bound, within_bound })
}
