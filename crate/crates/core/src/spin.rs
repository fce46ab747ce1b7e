//! ℤ_p spin: couplings, Poisson-driven spin trajectories and the spin action.

use crate::error::{invalid, Error, Result};
use crate::field::FieldSpec;
use crate::pathkit::BrownianPath;
use crate::rng;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Spin state space {σ_α = e^{2πiα/p} : α = 1..p}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinConfig {
    pub p: usize,
}

impl SpinConfig {
    pub fn new(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(invalid(format!("spin order p must be at least 2, got {p}")));
        }
        Ok(Self { p })
    }

    /// Index α + β reduced to 1..p.
    #[inline]
    pub fn shift(&self, alpha: usize, beta: usize) -> usize {
        (alpha + beta - 1) % self.p + 1
    }

    /// σ_α.
    pub fn root(&self, alpha: usize) -> Complex64 {
        if alpha % self.p == 0 {
            return Complex64::new(1.0, 0.0);
        }
        Complex64::from_polar(1.0, 2.0 * PI * alpha as f64 / self.p as f64)
    }

    /// σ_α for p = 2, as a real sign.
    pub fn sign(&self, alpha: usize) -> f64 {
        if alpha % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Diagonal coupling U(x, σ_α), indexed by α.
pub type DiagFn = Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;
/// Off-diagonal coupling U_β(x, σ_α) or W_β(x, σ_α), indexed by α.
pub type OffDiagFn = Arc<dyn Fn(&[f64], usize) -> Complex64 + Send + Sync>;

/// The spin part of h_{ℤ_p}: (M f)(x, σ_α) = U(x,σ_α) f(x,σ_α) + Σ_β U_β(x,σ_α) f(x,σ_{α+β}).
#[derive(Clone)]
pub struct SpinCoupling {
    pub config: SpinConfig,
    pub u: DiagFn,
    /// U_β for β = 1..p−1, stored at β−1.
    pub u_beta: Vec<OffDiagFn>,
    /// sup |U| when known.
    pub sup_u: Option<f64>,
    /// sup |U_β| when known.
    pub sup_u_beta: Vec<Option<f64>>,
    pub epsilon: f64,
    pub label: String,
    offdiag_zero: bool,
    /// (U, [U_β]) when the coupling is constant in x and spin.
    constants: Option<(f64, Vec<Complex64>)>,
}

impl fmt::Debug for SpinCoupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpinCoupling").field("p", &self.config.p).field("label", &self.label).field("epsilon", &self.epsilon).finish()
    }
}

impl SpinCoupling {
    pub fn new(config: SpinConfig, u: DiagFn, u_beta: Vec<OffDiagFn>, label: impl Into<String>) -> Result<Self> {
        if u_beta.len() != config.p - 1 {
            return Err(invalid(format!("expected {} off-diagonal couplings, got {}", config.p - 1, u_beta.len())));
        }
        let p = config.p;
        Ok(Self {
            config,
            u,
            u_beta,
            sup_u: None,
            sup_u_beta: vec![None; p - 1],
            epsilon: 0.0,
            label: label.into(),
            offdiag_zero: false,
            constants: None,
        })
    }

    /// Spin-independent constants: U ≡ `diag`, U_β ≡ `offdiag[β−1]`; Hermitian
    /// only when U_{p−β} = conj(U_β), which is enforced.
    pub fn constant(p: usize, diag: f64, offdiag: Vec<Complex64>) -> Result<Self> {
        let config = SpinConfig::new(p)?;
        if offdiag.len() != p - 1 {
            return Err(invalid(format!("expected {} off-diagonal values", p - 1)));
        }
        for b in 1..p {
            if (offdiag[p - b - 1] - offdiag[b - 1].conj()).norm() > 1e-14 {
                return Err(invalid(format!("constant coupling not Hermitian: U_{} != conj(U_{b})", p - b)));
            }
        }
        let u_beta: Vec<OffDiagFn> = offdiag.iter().map(|&c| Arc::new(move |_: &[f64], _: usize| c) as OffDiagFn).collect();
        let mut c = Self::new(config, Arc::new(move |_: &[f64], _: usize| diag), u_beta, format!("constant(U={diag})"))?;
        c.sup_u = Some(diag.abs());
        c.sup_u_beta = offdiag.iter().map(|z| Some(z.norm())).collect();
        c.offdiag_zero = offdiag.iter().all(|z| *z == Complex64::new(0.0, 0.0));
        c.constants = Some((diag, offdiag));
        Ok(c)
    }

    /// Off-diagonal couplings from spin-independent constants W_β ≡ `w[β−1]`.
    pub fn constant_w(p: usize, diag: f64, w: Vec<Complex64>) -> Result<Self> {
        if w.len() != p - 1 {
            return Err(invalid(format!("expected {} W values", p - 1)));
        }
        let offdiag = (1..p).map(|b| 0.5 * (w[b - 1] + w[p - b - 1].conj())).collect();
        Self::constant(p, diag, offdiag)
    }

    /// U_β(x,σ_α) = ½(W_β(x,σ_{α+β}) + conj W_{p−β}(x,σ_α)).
    pub fn offdiag_from_w(p: usize, diag: DiagFn, w: Vec<OffDiagFn>) -> Result<Self> {
        let config = SpinConfig::new(p)?;
        if w.len() != p - 1 {
            return Err(invalid(format!("expected {} W functions, got {}", p - 1, w.len())));
        }
        let w = Arc::new(w);
        let u_beta: Vec<OffDiagFn> = (1..p)
            .map(|b| {
                let w = w.clone();
                Arc::new(move |x: &[f64], alpha: usize| 0.5 * (w[b - 1](x, config.shift(alpha, b)) + w[p - b - 1](x, alpha).conj())) as OffDiagFn
            })
            .collect();
        Self::new(config, diag, u_beta, "from_W")
    }

    /// Spin-½ coupling of a magnetic field: U = −½σb₃, U₁ = −½(b₁ − iσb₂).
    pub fn spin12(field: &FieldSpec) -> Result<Self> {
        if field.dim != 3 {
            return Err(invalid("spin-1/2 coupling needs d = 3"));
        }
        let curl = field.curl_b.clone().ok_or_else(|| invalid("spin-1/2 coupling needs curl_b"))?;
        let config = SpinConfig::new(2)?;
        let c1 = curl.clone();
        let u: DiagFn = Arc::new(move |x: &[f64], alpha: usize| -0.5 * config.sign(alpha) * c1(x)[2]);
        let u1: OffDiagFn = Arc::new(move |x: &[f64], alpha: usize| {
            let b = curl(x);
            -0.5 * Complex64::new(b[0], -config.sign(alpha) * b[1])
        });
        let mut c = Self::new(config, u, vec![u1], format!("spin12({})", field.label))?;
        c.offdiag_zero = field.is_zero();
        if field.is_zero() {
            c.constants = Some((0.0, vec![Complex64::new(0.0, 0.0)]));
            c.sup_u = Some(0.0);
            c.sup_u_beta = vec![Some(0.0)];
        }
        Ok(c)
    }

    #[inline]
    pub fn diag(&self, x: &[f64], alpha: usize) -> f64 {
        (self.u)(x, alpha)
    }

    #[inline]
    pub fn offdiag(&self, x: &[f64], alpha: usize, beta: usize) -> Complex64 {
        (self.u_beta[beta - 1])(x, alpha)
    }

    /// True when every U_β is identically zero by construction.
    /// (U, [U_β]) when U and every U_β are constant in x and spin.
    pub fn constant_values(&self) -> Option<(f64, &[Complex64])> {
        self.constants.as_ref().map(|(u, ub)| (*u, ub.as_slice()))
    }

    pub fn offdiag_vanishes_identically(&self) -> bool {
        self.offdiag_zero
    }

    /// Replaces −U_β by χ_ε(−U_β) = −U_β + ε·1{|U_β| < ε/2}.
    pub fn regularize(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(invalid("regularization level must be positive"));
        }
        let u_beta = self
            .u_beta
            .iter()
            .map(|f| {
                let f = f.clone();
                Arc::new(move |x: &[f64], alpha: usize| {
                    let z = f(x, alpha);
                    if z.norm() < 0.5 * epsilon {
                        z - epsilon
                    } else {
                        z
                    }
                }) as OffDiagFn
            })
            .collect();
        Ok(Self {
            u_beta,
            epsilon,
            sup_u_beta: self.sup_u_beta.iter().map(|s| s.map(|v| v.max(epsilon))).collect(),
            label: format!("{}|eps={epsilon}", self.label),
            offdiag_zero: false,
            constants: self
                .constants
                .as_ref()
                .map(|(u, ub)| (*u, ub.iter().map(|&z| if z.norm() < 0.5 * epsilon { z - epsilon } else { z }).collect())),
            ..self.clone()
        })
    }

    /// Diagonal and off-diagonal parts multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let u = self.u.clone();
        let u_beta = self
            .u_beta
            .iter()
            .map(|f| {
                let f = f.clone();
                Arc::new(move |x: &[f64], alpha: usize| factor * f(x, alpha)) as OffDiagFn
            })
            .collect();
        Self {
            u: Arc::new(move |x: &[f64], alpha: usize| factor * u(x, alpha)),
            u_beta,
            sup_u: self.sup_u.map(|s| s * factor.abs()),
            sup_u_beta: self.sup_u_beta.iter().map(|s| s.map(|v| v * factor.abs())).collect(),
            label: format!("{}*{factor}", self.label),
            offdiag_zero: self.offdiag_zero || factor == 0.0,
            constants: self.constants.as_ref().map(|(u, ub)| (factor * u, ub.iter().map(|z| factor * z).collect())),
            ..self.clone()
        }
    }

    /// The comparison coupling of h⁰_{ℤ_p}: U_β replaced by −|U_β|.
    pub fn abs_offdiag(&self) -> Self {
        let u_beta = self
            .u_beta
            .iter()
            .map(|f| {
                let f = f.clone();
                Arc::new(move |x: &[f64], alpha: usize| Complex64::new(-f(x, alpha).norm(), 0.0)) as OffDiagFn
            })
            .collect();
        Self {
            u_beta,
            label: format!("{}|abs", self.label),
            constants: self.constants.as_ref().map(|(u, ub)| (*u, ub.iter().map(|z| Complex64::new(-z.norm(), 0.0)).collect())),
            ..self.clone()
        }
    }

    /// Largest |U_β(x,σ_α) − conj U_{p−β}(x,σ_{α+β})| over the probes.
    pub fn hermiticity_defect(&self, probes: &[Vec<f64>]) -> f64 {
        let p = self.config.p;
        let mut worst: f64 = 0.0;
        for x in probes {
            for alpha in 1..=p {
                for b in 1..p {
                    let fwd = self.offdiag(x, alpha, b);
                    let back = self.offdiag(x, self.config.shift(alpha, b), p - b);
                    worst = worst.max((fwd - back.conj()).norm());
                }
            }
        }
        worst
    }

    /// Bound exp(c·T‖U‖∞) · Π_β exp(T(‖U_β‖∞^c − 1)) on E[e^{c·Re S_spin}], when
    /// the sup norms are known.
    pub fn exponential_moment_bound(&self, c: f64, horizon: f64) -> Option<f64> {
        let su = self.sup_u?;
        let mut log_bound = c * horizon * su;
        for s in &self.sup_u_beta {
            log_bound += horizon * (s.as_ref()?.powf(c) - 1.0);
        }
        Some(log_bound.exp())
    }
}

/// Jump times of N^β (β = 1..p−1) and the composite N_s = Σ β N^β_s.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinTrajectory {
    pub config: SpinConfig,
    pub horizon: f64,
    pub alpha0: usize,
    /// Ascending jump times of N^β at index β−1.
    pub jump_times: Vec<Vec<f64>>,
    events: Vec<(f64, usize)>,
}

impl SpinTrajectory {
    pub fn from_jumps(config: SpinConfig, horizon: f64, alpha0: usize, jump_times: Vec<Vec<f64>>) -> Result<Self> {
        if !(1..=config.p).contains(&alpha0) {
            return Err(invalid(format!("initial spin index {alpha0} outside 1..={}", config.p)));
        }
        if jump_times.len() != config.p - 1 {
            return Err(invalid("need one jump list per beta"));
        }
        let mut events = Vec::new();
        for (b, times) in jump_times.iter().enumerate() {
            if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|&s| !(s > 0.0 && s <= horizon)) {
                return Err(invalid("jump times must be ascending in (0, horizon]"));
            }
            events.extend(times.iter().map(|&s| (s, b + 1)));
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(Self { config, horizon, alpha0, jump_times, events })
    }

    /// All jumps as (time, β), ordered in time.
    pub fn events(&self) -> &[(f64, usize)] {
        &self.events
    }

    /// Ascending list of all jump times.
    pub fn all_times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.0).collect()
    }

    pub fn jump_count(&self, beta: usize) -> usize {
        self.jump_times[beta - 1].len()
    }

    /// N_s = Σ β N^β_s (right-continuous).
    pub fn composite(&self, s: f64) -> u64 {
        self.events.iter().take_while(|e| e.0 <= s).map(|e| e.1 as u64).sum()
    }

    /// N_{s−}.
    pub fn composite_left(&self, s: f64) -> u64 {
        self.events.iter().take_while(|e| e.0 < s).map(|e| e.1 as u64).sum()
    }

    /// Spin index at time s: α₀ shifted by N_s.
    pub fn index_at(&self, s: f64) -> usize {
        self.config.shift(self.alpha0, (self.composite(s) % self.config.p as u64) as usize)
    }

    /// Spin index at the end of the trajectory.
    pub fn final_index(&self) -> usize {
        self.index_at(self.horizon)
    }
}

/// p−1 independent unit-rate Poisson processes on [0, horizon].
pub fn sample_spin_trajectory<R: Rng + ?Sized>(p: usize, horizon: f64, alpha0: usize, rng: &mut R) -> Result<SpinTrajectory> {
    let config = SpinConfig::new(p)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("spin horizon must be finite and nonnegative, got {horizon}")));
    }
    let jump_times = (1..p)
        .map(|_| {
            let n = rng::poisson(rng, horizon);
            let mut v: Vec<f64> = (0..n).map(|_| horizon * (1.0 - rng.random::<f64>())).collect();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    SpinTrajectory::from_jumps(config, horizon, alpha0, jump_times)
}

/// S_spin = −∫₀^T (U(B_s,σ_{N_s}) − shift) ds + Σ_jumps log(−U_β(B_r,σ_{N_{r−}})).
///
/// The Brownian grid must contain every jump time; the time integral uses the
/// trapezoid rule with the spin frozen on each segment.
pub fn spin_action(traj: &SpinTrajectory, path: &BrownianPath, coupling: &SpinCoupling, spectral_shift: f64) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    for factor in spin_terms(traj, path, coupling, spectral_shift)? {
        match factor {
            Term::Log(z) => total += z,
            Term::Jump { beta, node, value } => {
                if value == Complex64::new(0.0, 0.0) {
                    return Err(Error::VanishingOffDiagonal { beta, point: path.position(node).to_vec() });
                }
                total += value.ln();
            }
        }
    }
    Ok(total)
}

/// e^{S_spin}; a vanishing jump factor gives 0 only when every U_β vanishes
/// identically, otherwise it is an error.
pub fn spin_weight(traj: &SpinTrajectory, path: &BrownianPath, coupling: &SpinCoupling, spectral_shift: f64) -> Result<Complex64> {
    spin_weight_scaled(traj, path, coupling, spectral_shift, 0.0)
}

/// e^{S_spin + log_scale}, accumulated in log space so that large factors
/// such as e^{(p−1)T} cannot overflow against small jump products.
pub fn spin_weight_scaled(
    traj: &SpinTrajectory,
    path: &BrownianPath,
    coupling: &SpinCoupling,
    spectral_shift: f64,
    log_scale: f64,
) -> Result<Complex64> {
    let mut log_part = Complex64::new(log_scale, 0.0);
    let mut phase = Complex64::new(1.0, 0.0);
    for factor in spin_terms(traj, path, coupling, spectral_shift)? {
        match factor {
            Term::Log(z) => log_part += z,
            Term::Jump { beta, node, value } => {
                let modulus = value.norm();
                if modulus == 0.0 {
                    if coupling.offdiag_vanishes_identically() {
                        return Ok(Complex64::new(0.0, 0.0));
                    }
                    return Err(Error::VanishingOffDiagonal { beta, point: path.position(node).to_vec() });
                }
                phase *= value / modulus;
                log_part.re += modulus.ln();
            }
        }
    }
    Ok(phase * log_part.exp())
}

enum Term {
    Log(Complex64),
    Jump { beta: usize, node: usize, value: Complex64 },
}

fn spin_terms(traj: &SpinTrajectory, path: &BrownianPath, coupling: &SpinCoupling, shift: f64) -> Result<Vec<Term>> {
    if coupling.config.p != traj.config.p {
        return Err(invalid("coupling and trajectory have different p"));
    }
    if (path.horizon() - traj.horizon).abs() > 1e-12 * traj.horizon.max(1.0) {
        return Err(invalid(format!("Brownian horizon {} differs from spin horizon {}", path.horizon(), traj.horizon)));
    }
    let cfg = traj.config;
    let mut terms = Vec::with_capacity(traj.events.len() + 1);
    let mut alpha = traj.alpha0;
    let mut ev = traj.events.iter().peekable();
    let mut integral = 0.0;
    for k in 0..path.len() {
        let t = path.times[k];
        while let Some(&&(s, beta)) = ev.peek() {
            if s < t {
                return Err(invalid(format!("jump time {s} is not a Brownian grid node")));
            }
            if s > t {
                break;
            }
            let value = -coupling.offdiag(path.position(k), alpha, beta);
            terms.push(Term::Jump { beta, node: k, value });
            alpha = cfg.shift(alpha, beta);
            ev.next();
        }
        if k + 1 < path.len() {
            let dt = path.times[k + 1] - t;
            let ua = coupling.diag(path.position(k), alpha);
            let ub = coupling.diag(path.position(k + 1), alpha);
            integral += dt * (0.5 * (ua + ub) - shift);
        }
    }
    if let Some(&(s, _)) = ev.next() {
        return Err(invalid(format!("jump time {s} lies beyond the Brownian horizon")));
    }
    terms.push(Term::Log(Complex64::new(-integral, 0.0)));
    Ok(terms)
}
