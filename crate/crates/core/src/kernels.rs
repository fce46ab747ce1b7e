//! Deterministic quadrature for the subordinated heat kernel p_t and the
//! resolvent kernel Π_λ, plus the kernel-based Kato, integrability and
//! hypercontractivity diagnostics.

use crate::bernstein::BernsteinFunction;
use crate::error::{invalid, Error, Result};
use crate::field::{FieldSpec, Potential};
use crate::oracle::{psi_of_operator, Discretization, GridOperator, GridSpec, ShiftMode};
use crate::quad;
use crate::special::{bessel_j, gamma};
use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use std::cell::RefCell;
use std::f64::consts::PI;

/// Radial reduction of the d-dimensional Fourier integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadMethod {
    /// (1/π)∫cos(rρ)…dρ, d = 1 only.
    CosineTransform1D,
    /// Bessel J_{(d−2)/2} kernel, any d.
    HankelRadial,
    /// ρ sin(rρ)/(2π²r) kernel, d = 3 only.
    SinFormula3D,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub method: QuadMethod,
    /// Frequency cutoff for heat kernels; `None` picks it from `tail_tolerance`.
    pub max_frequency: Option<f64>,
    /// Largest number of quadrature panels per radius.
    pub n_nodes: usize,
    pub tail_tolerance: f64,
}

impl QuadratureSpec {
    /// Cosine transform in d = 1, sine formula in d = 3, Hankel otherwise.
    pub fn auto(d: usize) -> Self {
        let method = match d {
            1 => QuadMethod::CosineTransform1D,
            3 => QuadMethod::SinFormula3D,
            _ => QuadMethod::HankelRadial,
        };
        Self { method, max_frequency: None, n_nodes: 200_000, tail_tolerance: 1e-12 }
    }

    pub fn hankel(d: usize) -> Self {
        Self { method: QuadMethod::HankelRadial, ..Self::auto(d) }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if !(1..=3).contains(&d) {
            return Err(invalid(format!("kernel dimension must be 1..=3, got {d}")));
        }
        match self.method {
            QuadMethod::CosineTransform1D if d != 1 => Err(invalid("the cosine transform needs d = 1")),
            QuadMethod::SinFormula3D if d != 3 => Err(invalid("the sine formula needs d = 3")),
            _ if !(self.tail_tolerance > 0.0) || self.n_nodes < 16 => Err(invalid("tail_tolerance must be positive and n_nodes at least 16")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Heat { t: f64 },
    Resolvent { lambda: f64 },
}

/// Quadrature diagnostics attached to a kernel table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelDiagnostics {
    pub method: QuadMethod,
    /// Frequency cutoff used (heat kernels); infinite for resolvents.
    pub max_frequency: f64,
    /// Bound on the truncated frequency tail (heat kernels).
    pub tail_estimate: f64,
    /// Largest per-radius quadrature error estimate.
    pub max_error: f64,
}

/// Radial samples of a kernel with monotone cubic interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub d: usize,
    pub kind: KernelKind,
    pub psi_label: String,
    pub diagnostics: KernelDiagnostics,
    slopes: Vec<f64>,
}

impl KernelTable {
    fn new(radii: Vec<f64>, values: Vec<f64>, d: usize, kind: KernelKind, psi_label: String, diagnostics: KernelDiagnostics) -> Self {
        let slopes = pchip_slopes(&radii, &values);
        Self { radii, values, d, kind, psi_label, diagnostics, slopes }
    }

    /// Power-law fit A·r^{−k} through the last two table points.
    pub fn tail_power_law(&self) -> Option<(f64, f64)> {
        let n = self.radii.len();
        if n < 2 {
            return None;
        }
        let (r0, r1) = (self.radii[n - 2], self.radii[n - 1]);
        let (v0, v1) = (self.values[n - 2], self.values[n - 1]);
        if !(v0 > 0.0 && v1 > 0.0 && r0 > 0.0 && r1 > r0) {
            return None;
        }
        let k = (v0 / v1).ln() / (r1 / r0).ln();
        Some((v1 * r1.powf(k), k))
    }

    /// Interpolated value; beyond the table the power-law tail is used.
    pub fn value_at(&self, r: f64) -> f64 {
        let n = self.radii.len();
        if r >= self.radii[n - 1] {
            return match self.tail_power_law() {
                Some((a, k)) if r > self.radii[n - 1] => a * r.powf(-k),
                _ => self.values[n - 1],
            };
        }
        if r <= self.radii[0] {
            return self.values[0];
        }
        let j = self.radii.partition_point(|&x| x <= r) - 1;
        let (x0, x1) = (self.radii[j], self.radii[j + 1]);
        let h = x1 - x0;
        let s = (r - x0) / h;
        let (y0, y1) = (self.values[j], self.values[j + 1]);
        let (m0, m1) = (self.slopes[j], self.slopes[j + 1]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
    }

    /// Radial mass S_{d−1}∫r^{d−1}k(r)dr: trapezoid on the table plus the
    /// integrated power-law tail.
    pub fn mass(&self) -> f64 {
        let d = self.d as i32;
        let sphere = sphere_area(self.d);
        let mut total = 0.0;
        for j in 0..self.radii.len() - 1 {
            let (a, b) = (self.radii[j], self.radii[j + 1]);
            total += 0.5 * (b - a) * (a.powi(d - 1) * self.values[j] + b.powi(d - 1) * self.values[j + 1]);
        }
        let r_end = *self.radii.last().unwrap();
        if let Some((a, k)) = self.tail_power_law() {
            if k > d as f64 {
                total += a * r_end.powf(d as f64 - k) / (k - d as f64);
            }
        }
        sphere * total
    }
}

/// Fritsch–Carlson monotone slopes.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let delta: Vec<f64> = (0..n - 1).map(|j| (y[j + 1] - y[j]) / (x[j + 1] - x[j])).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for j in 1..n - 1 {
        if delta[j - 1] * delta[j] > 0.0 {
            let (h0, h1) = (x[j] - x[j - 1], x[j + 1] - x[j]);
            let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
            m[j] = (w1 + w2) / (w1 / delta[j - 1] + w2 / delta[j]);
        }
    }
    m
}

fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// Ψ evaluation inside quadrature closures, remembering the first failure.
struct PsiCache<'a> {
    psi: &'a BernsteinFunction,
    error: RefCell<Option<Error>>,
}

impl<'a> PsiCache<'a> {
    fn new(psi: &'a BernsteinFunction) -> Self {
        Self { psi, error: RefCell::new(None) }
    }

    fn at(&self, u: f64) -> f64 {
        match self.psi.eval(u) {
            Ok(v) => v,
            Err(e) => {
                self.error.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    fn finish(&self) -> Result<()> {
        match self.error.borrow_mut().take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Angular factor of the radial Fourier transform, normalized to 1 at z = 0.
fn angular(method: QuadMethod, d: usize, z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    match method {
        QuadMethod::CosineTransform1D => z.cos(),
        QuadMethod::SinFormula3D => z.sin() / z,
        QuadMethod::HankelRadial => {
            let nu = d as f64 / 2.0 - 1.0;
            gamma(d as f64 / 2.0) * (2.0 / z).powf(nu) * bessel_j(nu, z)
        }
    }
}

/// (2π)^{−d} S_{d−1}: prefactor of the radial integral.
fn radial_norm(d: usize) -> f64 {
    (2.0 * PI).powi(-(d as i32)) * sphere_area(d)
}

/// Integrability of ξ ↦ e^{−tΨ(|ξ|²/2)} over ℝ^d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionAReport {
    pub finite: bool,
    /// ∫ e^{−tΨ(|ξ|²/2)} dξ up to `radius` (the partial value when divergent).
    pub value: f64,
    /// Radius where the doubling blocks became negligible (or gave up).
    pub radius: f64,
    pub last_block: f64,
}

/// Doubling blocks [R, 2R]; finite once a block is negligible against the sum.
pub fn assumption_a_check(psi: &BernsteinFunction, t: f64, d: usize) -> Result<AssumptionAReport> {
    if !(t > 0.0) || !(1..=3).contains(&d) {
        return Err(invalid("assumption check needs t > 0 and d in 1..=3"));
    }
    let cache = PsiCache::new(psi);
    let env = |rho: f64| rho.powi(d as i32 - 1) * (-t * cache.at(0.5 * rho * rho)).exp();
    let mut sum = quad::integrate(env, 0.0, 1.0, 1e-300, 1e-12, 500)?.value;
    let mut lo = 1.0;
    let mut last = sum;
    for _ in 0..400 {
        let block = quad::integrate(env, lo, 2.0 * lo, 1e-300, 1e-10, 500)?.value;
        cache.finish()?;
        sum += block;
        last = block;
        lo *= 2.0;
        if !sum.is_finite() {
            break;
        }
        if block <= 1e-14 * sum {
            return Ok(AssumptionAReport { finite: true, value: sphere_area(d) * sum, radius: lo, last_block: block });
        }
    }
    Ok(AssumptionAReport { finite: false, value: sphere_area(d) * sum, radius: lo, last_block: last })
}

/// Cutoff R with a rigorous bound on the neglected frequency tail.
fn frequency_cutoff(cache: &PsiCache, t: f64, d: usize, q: &QuadratureSpec) -> Result<(f64, f64)> {
    let env = |rho: f64| rho.powi(d as i32 - 1) * (-t * cache.at(0.5 * rho * rho)).exp();
    let norm = radial_norm(d);
    let tail_from = |r: f64| -> Result<f64> {
        let mut tail = 0.0;
        let mut lo = r;
        for _ in 0..400 {
            let block = quad::integrate(env, lo, 2.0 * lo, 1e-300, 1e-8, 500)?.value;
            tail += block;
            lo *= 2.0;
            if block <= 1e-3 * tail || block == 0.0 {
                return Ok(norm * tail);
            }
        }
        Err(Error::AssumptionA(format!("frequency tail of e^(-t Psi) does not decay (t = {t})")))
    };
    if let Some(r) = q.max_frequency {
        let tail = tail_from(r)?;
        cache.finish()?;
        return Ok((r, tail));
    }
    let mut r = 1.0;
    for _ in 0..200 {
        let tail = tail_from(r)?;
        cache.finish()?;
        if tail < q.tail_tolerance {
            return Ok((r, tail));
        }
        r *= 1.5;
    }
    Err(Error::AssumptionA(format!("no frequency cutoff reaches tail tolerance {:e}", q.tail_tolerance)))
}

/// ∫₀^R env(ρ) A(rρ) dρ over panels that resolve both the oscillation and
/// the behavior of the envelope near 0.
fn finite_radial(env: &dyn Fn(f64) -> f64, method: QuadMethod, d: usize, r: f64, cutoff: f64, q: &QuadratureSpec) -> Result<(f64, f64)> {
    let mut breaks = Vec::new();
    let uniform = if r > 0.0 { (0.5 * PI / r).min(cutoff / 32.0) } else { cutoff / 32.0 };
    let n_uniform = (cutoff / uniform).ceil() as usize;
    if n_uniform > q.n_nodes.min(20_000) && r > 0.0 {
        // Slowly decaying envelope: sum half-periods with acceleration instead.
        return oscillatory_radial(env, method, d, r, q);
    }
    for k in (1..=30).rev() {
        breaks.push(uniform * 2f64.powi(-k));
    }
    for k in 1..=n_uniform {
        breaks.push((k as f64 * uniform).min(cutoff));
    }
    breaks.dedup();
    let f = |rho: f64| env(rho) * angular(method, d, r * rho);
    let abs_tol = (0.1 * q.tail_tolerance / (breaks.len() as f64 * radial_norm(d))).max(1e-17);
    let mut total = quad::integrate(f, 0.0, breaks[0], abs_tol, 1e-13, 200)?;
    for w in breaks.windows(2) {
        let piece = quad::integrate(f, w[0], w[1], abs_tol, 1e-13, 200)?;
        total.value += piece.value;
        total.error += piece.error;
    }
    Ok((total.value, total.error))
}

fn sorted_radii(radii: &[f64]) -> Result<Vec<f64>> {
    if radii.is_empty() || radii.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
        return Err(invalid("radii must be finite and nonnegative"));
    }
    let mut r = radii.to_vec();
    r.sort_by(f64::total_cmp);
    r.dedup();
    Ok(r)
}

/// p_t(x) = (2π)^{−d}∫e^{−ix·ξ}e^{−tΨ(|ξ|²/2)}dξ on the given radii.
pub fn heat_kernel(psi: &BernsteinFunction, t: f64, radii: &[f64], d: usize, q: &QuadratureSpec) -> Result<KernelTable> {
    q.validate(d)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("heat kernel time must be positive"));
    }
    let check = assumption_a_check(psi, t, d)?;
    if !check.finite {
        return Err(Error::AssumptionA(format!(
            "integral of exp(-t Psi(|xi|^2/2)) keeps growing up to |xi| = {:e} (partial value {:e})",
            check.radius, check.value
        )));
    }
    let radii = sorted_radii(radii)?;
    let (cutoff, tail) = {
        let cache = PsiCache::new(psi);
        frequency_cutoff(&cache, t, d, q)?
    };
    let norm = radial_norm(d);
    let rows: Result<Vec<(f64, f64)>> = radii
        .par_iter()
        .map(|&r| {
            let cache = PsiCache::new(psi);
            let env = |rho: f64| rho.powi(d as i32 - 1) * (-t * cache.at(0.5 * rho * rho)).exp();
            let (v, e) = finite_radial(&env, q.method, d, r, cutoff, q)?;
            cache.finish()?;
            Ok((norm * v, norm * e))
        })
        .collect();
    let rows = rows?;
    let diagnostics =
        KernelDiagnostics { method: q.method, max_frequency: cutoff, tail_estimate: tail, max_error: rows.iter().map(|r| r.1).fold(0.0, f64::max) };
    Ok(KernelTable::new(radii, rows.iter().map(|r| r.0).collect(), d, KernelKind::Heat { t }, psi.label(), diagnostics))
}

/// Conditionally convergent radial integral: half-period panels summed with
/// Wynn's epsilon acceleration.
fn oscillatory_radial(env: &dyn Fn(f64) -> f64, method: QuadMethod, d: usize, r: f64, q: &QuadratureSpec) -> Result<(f64, f64)> {
    let h = PI / r;
    // Panel ends near the zeros of the angular factor: (k + ν/2 + 3/4)π/r.
    let offset = match method {
        QuadMethod::SinFormula3D => 1.0,
        _ => 0.5 * (d as f64 / 2.0 - 1.0) + 0.75,
    };
    let f = |rho: f64| env(rho) * angular(method, d, r * rho);
    let mut partial = Vec::new();
    let mut running = 0.0;
    let mut err_sum = 0.0;
    let mut prev_estimate: Option<f64> = None;
    let max_panels = q.n_nodes.min(20_000);
    for k in 0..max_panels {
        let a = if k == 0 { 0.0 } else { (k as f64 - 1.0 + offset) * h };
        let b = (k as f64 + offset) * h;
        let tol = 1e-14 * (b - a) * env(a).abs().max(env(b).abs());
        let piece = quad::integrate(f, a, b, tol.max(1e-300), 1e-12, 400)?;
        running += piece.value;
        err_sum += piece.error;
        partial.push(running);
        if k >= 24 && k % 8 == 0 {
            let window = &partial[partial.len() - 24..];
            let (est, diff) = quad::wynn_epsilon(window);
            let scale = est.abs().max(1e-300);
            if let Some(p) = prev_estimate {
                if diff <= 1e-9 * scale && (est - p).abs() <= 1e-9 * scale {
                    return Ok((est, diff.max((est - p).abs()) + err_sum));
                }
            }
            prev_estimate = Some(est);
        }
    }
    let (est, diff) = quad::wynn_epsilon(&partial[partial.len().saturating_sub(24)..]);
    Err(Error::QuadratureNonConvergence {
        context: format!("oscillatory resolvent integral at r = {r} after {max_panels} half-periods (last partial sums ..., {:e})", running),
        partial: est,
        error_estimate: diff,
    })
}

/// Π_λ(x) = (2π)^{−d}∫e^{−ix·ξ}(λ + Ψ(|ξ|²/2))^{−1}dξ on positive radii.
pub fn resolvent_kernel(psi: &BernsteinFunction, lambda: f64, radii: &[f64], d: usize, q: &QuadratureSpec) -> Result<KernelTable> {
    q.validate(d)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("resolvent parameter must be positive"));
    }
    let radii = sorted_radii(radii)?;
    if radii[0] == 0.0 {
        return Err(invalid("resolvent kernels are evaluated at positive radii only"));
    }
    let norm = radial_norm(d);
    let rows: Result<Vec<(f64, f64)>> = radii
        .par_iter()
        .map(|&r| {
            let cache = PsiCache::new(psi);
            let env = |rho: f64| rho.powi(d as i32 - 1) / (lambda + cache.at(0.5 * rho * rho));
            let out = oscillatory_radial(&env, q.method, d, r, q);
            cache.finish()?;
            let (v, e) = out?;
            Ok((norm * v, norm * e))
        })
        .collect();
    let rows = rows?;
    let diagnostics = KernelDiagnostics {
        method: q.method,
        max_frequency: f64::INFINITY,
        tail_estimate: 0.0,
        max_error: rows.iter().map(|r| r.1).fold(0.0, f64::max),
    };
    Ok(KernelTable::new(radii, rows.iter().map(|r| r.0).collect(), d, KernelKind::Resolvent { lambda }, psi.label(), diagnostics))
}

/// ∫₀^∞ e^{−λt} p_t(r) dt by quadrature in log t; the piece below t = 1e−6
/// is bounded by its Lévy-density order and dropped.
pub fn resolvent_from_heat(psi: &BernsteinFunction, lambda: f64, r: f64, d: usize, q: &QuadratureSpec) -> Result<f64> {
    if !(lambda > 0.0 && r > 0.0) {
        return Err(invalid("need lambda > 0 and r > 0"));
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |s: f64| {
        let t = s.exp();
        match heat_kernel(psi, t, &[r], d, q) {
            Ok(table) => t * (-lambda * t).exp() * table.values[0],
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let hi = (60.0 / lambda).ln();
    let value = quad::integrate(integrand, (1e-6f64).ln(), hi, 1e-10, 1e-6, 200)?.value;
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    Ok(value)
}

/// Branch of the Riesz potential c|x|^{β−d} for β = 2α.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RieszBranch {
    /// β < d: c(d,β)|x|^{β−d}.
    Singular,
    /// β = d = 1: −(1/π) log|x|.
    Logarithmic,
    /// β > d = 1: c(1,β)|x|^{β−1} (negative prefactor).
    Growing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszKernel {
    pub branch: RieszBranch,
    pub constant: f64,
    pub exponent: f64,
}

impl RieszKernel {
    pub fn eval(&self, r: f64) -> f64 {
        match self.branch {
            RieszBranch::Logarithmic => -self.constant * r.ln(),
            _ => self.constant * r.powf(self.exponent),
        }
    }
}

/// c(d,β) = Γ((d−β)/2) / (2^β π^{d/2} |Γ(β/2)|).
fn riesz_c(d: usize, beta: f64) -> f64 {
    let df = d as f64;
    gamma((df - beta) / 2.0) / (2f64.powf(beta) * PI.powf(df / 2.0) * gamma(beta / 2.0).abs())
}

/// Green kernel of (−Δ)^α with its branch.
pub fn riesz_kernel(d: usize, alpha: f64) -> Result<RieszKernel> {
    if !(alpha > 0.0 && alpha < 1.0) || !(1..=3).contains(&d) {
        return Err(invalid("Riesz kernels need alpha in (0,1) and d in 1..=3"));
    }
    let beta = 2.0 * alpha;
    let df = d as f64;
    if (beta - df).abs() < 1e-12 {
        return Ok(RieszKernel { branch: RieszBranch::Logarithmic, constant: 1.0 / PI, exponent: 0.0 });
    }
    let branch = if beta < df { RieszBranch::Singular } else { RieszBranch::Growing };
    Ok(RieszKernel { branch, constant: riesz_c(d, beta), exponent: beta - df })
}

/// c(d, 2α) of the singular branch; other branches are an error naming them.
pub fn stable_riesz_constant(d: usize, alpha: f64) -> Result<f64> {
    let k = riesz_kernel(d, alpha)?;
    match k.branch {
        RieszBranch::Singular => Ok(k.constant),
        RieszBranch::Logarithmic => Err(invalid(format!("2*alpha = d = {d}: logarithmic branch -(1/pi) log|x| applies"))),
        RieszBranch::Growing => Err(invalid(format!("2*alpha = {} > d = {d}: growing branch c(1,2 alpha)|x|^(2 alpha - 1) applies", 2.0 * alpha))),
    }
}

/// Small-|x| asymptote of Π_λ for Ψ(u) = u^α: since Ψ(|ξ|²/2) = 2^{−α}|ξ|^{2α},
/// the Riesz kernel of (−Δ)^α picks up a factor 2^α.
pub fn stable_resolvent_asymptote(d: usize, alpha: f64) -> Result<RieszKernel> {
    let mut k = riesz_kernel(d, alpha)?;
    k.constant *= 2f64.powf(alpha);
    Ok(k)
}

/// Points on the unit sphere with equal-weight averaging.
fn sphere_rule(d: usize) -> Vec<(Vec<f64>, f64)> {
    match d {
        1 => vec![(vec![1.0], 0.5), (vec![-1.0], 0.5)],
        2 => {
            let n = 32;
            (0..n)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / n as f64;
                    (vec![a.cos(), a.sin()], 1.0 / n as f64)
                })
                .collect()
        }
        _ => {
            let (mu, w) = quad::gauss_legendre(16);
            let nphi = 24;
            let mut out = Vec::new();
            for (m, wm) in mu.iter().zip(&w) {
                let s = (1.0 - m * m).sqrt();
                for k in 0..nphi {
                    let phi = 2.0 * PI * (k as f64 + 0.5) / nphi as f64;
                    out.push((vec![s * phi.cos(), s * phi.sin(), *m], 0.5 * wm / nphi as f64));
                }
            }
            out
        }
    }
}

/// sup over probes of ∫_{|x−y|<δ} Π₁(x−y)V(y)dy for each δ.
#[derive(Debug, Clone, PartialEq)]
pub struct Kato3Report {
    pub deltas: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub sup_values: Vec<f64>,
    pub decays: bool,
}

pub fn kato_condition3_check(v: &Potential, psi: &BernsteinFunction, deltas: &[f64], probes: &[Vec<f64>], q: &QuadratureSpec) -> Result<Kato3Report> {
    let d = v.dim;
    q.validate(d)?;
    if deltas.is_empty() || probes.is_empty() || deltas.iter().any(|&x| !(x > 0.0)) {
        return Err(invalid("kato condition 3 needs positive deltas and probe points"));
    }
    if probes.iter().any(|x| x.len() != d) {
        return Err(invalid("probe dimension does not match the potential"));
    }
    let (u, w) = quad::gauss_legendre(24);
    let sphere = sphere_rule(d);
    let area = sphere_area(d);
    let zero = v.constant_value() == Some(0.0);
    let mut values = vec![vec![0.0; deltas.len()]; probes.len()];
    if !zero {
        for (k, &delta) in deltas.iter().enumerate() {
            // ρ = δ s², s ∈ (0,1): smooths the ρ^{β−d}·ρ^{d−1} endpoint.
            let nodes: Vec<f64> = u.iter().map(|x| delta * (0.5 * (x + 1.0)).powi(2)).collect();
            let table = resolvent_kernel(psi, 1.0, &nodes, d, q)?;
            for (pi, x) in probes.iter().enumerate() {
                let mut total = 0.0;
                for (j, &rho) in nodes.iter().enumerate() {
                    let s = 0.5 * (u[j] + 1.0);
                    let jac = 2.0 * delta * s * 0.5 * w[j];
                    let avg: f64 = sphere
                        .iter()
                        .map(|(dir, wt)| {
                            let y: Vec<f64> = x.iter().zip(dir).map(|(a, b)| a - rho * b).collect();
                            wt * v.eval(&y)
                        })
                        .sum();
                    total += jac * table.value_at(rho) * rho.powi(d as i32 - 1) * avg;
                }
                values[pi][k] = area * total;
            }
        }
    }
    let sup_values: Vec<f64> = (0..deltas.len()).map(|k| values.iter().map(|row| row[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let decays = crate::stats::vanishes_at_zero(deltas, &sup_values, &[]);
    Ok(Kato3Report { deltas: deltas.to_vec(), values, sup_values, decays })
}

/// Σ over unit cubes of sup over the cube of 1_{|x|>δ} p(x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1LinfReport {
    pub value: f64,
    /// The table is radially non-increasing beyond δ, so cube sups sit at the
    /// point nearest the origin.
    pub monotone: bool,
    pub max_violation: f64,
}

pub fn l1_linf_diagnostic(kernel: &KernelTable, delta: f64) -> Result<L1LinfReport> {
    if !(delta >= 0.0) {
        return Err(invalid("delta must be nonnegative"));
    }
    let d = kernel.d;
    let mut max_violation: f64 = 0.0;
    for j in 0..kernel.radii.len() - 1 {
        if kernel.radii[j] >= delta {
            max_violation = max_violation.max(kernel.values[j + 1] - kernel.values[j]);
        }
    }
    let scale = kernel.values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let monotone = max_violation <= 1e-9 * scale + kernel.diagnostics.tail_estimate;
    let reach: i64 = match d {
        1 => 20_000,
        2 => 400,
        _ => 60,
    };
    let sup_on_cube = |dist: f64| kernel.value_at(dist.max(delta)).max(0.0);
    let mut value = 0.0;
    let mut idx = vec![-reach; d];
    loop {
        let dist2: f64 = idx.iter().map(|&k| ((k.abs() as f64) - 0.5).max(0.0).powi(2)).sum();
        value += sup_on_cube(dist2.sqrt());
        let mut axis = 0;
        while axis < d {
            idx[axis] += 1;
            if idx[axis] <= reach {
                break;
            }
            idx[axis] = -reach;
            axis += 1;
        }
        if axis == d {
            break;
        }
    }
    // Cubes beyond the enumerated block: integral of the power-law tail.
    if let Some((a, k)) = kernel.tail_power_law() {
        let r0 = reach as f64 + 0.5;
        if k > d as f64 && r0 > delta {
            value += sphere_area(d) * a * r0.powf(d as f64 - k) / (k - d as f64);
        }
    }
    Ok(L1LinfReport { value, monotone, max_violation })
}

/// Both L^p → L^∞ bounds of the Feynman–Kac semigroup on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperReport {
    pub sup_pt_f: f64,
    /// (C_t ‖p_t‖_∞)^{1/2} ‖f‖₂.
    pub bound_2: f64,
    /// C_{t/2} ‖p_{t/2}‖_∞ ‖f‖₁.
    pub bound_1: f64,
    pub c_t: f64,
    pub c_half: f64,
    pub p_inf: f64,
    pub p_half_inf: f64,
    pub holds: bool,
}

/// Checks ‖P_t f‖_∞ ≤ (C_t‖p_t‖_∞)^{1/2}‖f‖₂ and ‖P_t f‖_∞ ≤ C_{t/2}‖p_{t/2}‖_∞‖f‖₁
/// with C_s = sup_x E[e^{−2∫₀^s V(X_r)dr}] = sup (e^{−s(Ψ(h)+2V)}1) and
/// ‖p_s‖_∞ the diagonal of the free grid semigroup.
pub fn hypercontractivity_bound_check(grid: GridSpec, psi: &BernsteinFunction, v: &Potential, t: f64, f: &DVector<Complex64>) -> Result<HyperReport> {
    if !(t > 0.0) || f.len() != grid.size() || v.dim != grid.d {
        return Err(invalid("hypercontractivity check needs t > 0 and f, V on the grid"));
    }
    let free = GridOperator::kinetic(grid, &FieldSpec::zero(grid.d), Discretization::Spectral)?;
    let (kin, _) = psi_of_operator(&free, psi, ShiftMode::None)?;
    let vals = GridOperator::potential_values(&grid, v)?;
    let kin_spec = kin.spectrum()?;
    let h = grid.cell_volume();
    let p_sup = |s: f64| -> f64 {
        let m = kin_spec.function(|l| (-s * l).exp());
        (0..m.nrows()).map(|i| m[(i, i)].re).fold(0.0, f64::max) / h
    };
    let ones = DVector::from_element(grid.size(), Complex64::new(1.0, 0.0));
    let mut doubled = kin.clone();
    doubled.add_diagonal(&vals.iter().map(|x| 2.0 * x).collect::<Vec<_>>())?;
    let dspec = doubled.spectrum()?;
    let c_of = |s: f64| dspec.apply(|l| (-s * l).exp(), &ones).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let mut full = kin.clone();
    full.add_diagonal(&vals)?;
    let pt_f = full.spectrum()?.apply(|l| (-t * l).exp(), f);
    let sup_pt_f = pt_f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let l2 = (f.iter().map(|z| z.norm_sqr()).sum::<f64>() * h).sqrt();
    let l1 = f.iter().map(|z| z.norm()).sum::<f64>() * h;
    let (c_t, c_half) = (c_of(t), c_of(0.5 * t));
    let (p_inf, p_half_inf) = (p_sup(t), p_sup(0.5 * t));
    let bound_2 = (c_t * p_inf).sqrt() * l2;
    let bound_1 = c_half * p_half_inf * l1;
    let slack = 1e-10 * sup_pt_f.max(1e-300);
    let holds = sup_pt_f <= bound_2 + slack && sup_pt_f <= bound_1 + slack;
    Ok(HyperReport { sup_pt_f, bound_2, bound_1, c_t, c_half, p_inf, p_half_inf, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lin() -> BernsteinFunction {
        BernsteinFunction::linear(1.0).unwrap()
    }

    fn log_radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let mut r = vec![0.0];
        r.extend((0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)));
        r
    }

    #[test]
    fn gaussian_heat_kernel_is_exact() {
        let table = heat_kernel(&lin(), 1.0, &[0.0, 1.0, 2.0], 1, &QuadratureSpec::auto(1)).unwrap();
        for (r, v) in table.radii.iter().zip(&table.values) {
            let exact = (-0.5 * r * r).exp() / (2.0 * PI).sqrt();
            assert!((v - exact).abs() < 1e-8, "r={r}: {v} vs {exact}");
        }
    }

    #[test]
    fn cauchy_heat_kernel() {
        let psi = BernsteinFunction::relativistic(0.0).unwrap();
        let radii = [0.0, 0.5, 1.0, 2.0, 5.0];
        let table = heat_kernel(&psi, 1.0, &radii, 1, &QuadratureSpec::auto(1)).unwrap();
        for (r, v) in table.radii.iter().zip(&table.values) {
            let exact = 1.0 / (PI * (1.0 + r * r));
            assert!((v - exact).abs() < 1e-6, "r={r}: {v} vs {exact}");
        }
    }

    #[test]
    fn relativistic_massless_3d_kernel() {
        let psi = BernsteinFunction::relativistic(0.0).unwrap();
        let radii = [0.0, 0.7, 1.5];
        let t = 0.8;
        let table = heat_kernel(&psi, t, &radii, 3, &QuadratureSpec::auto(3)).unwrap();
        for (r, v) in table.radii.iter().zip(&table.values) {
            let exact = t / (PI * PI * (t * t + r * r).powi(2));
            assert!((v - exact).abs() < 1e-8 * exact.max(1.0), "r={r}: {v} vs {exact}");
        }
    }

    #[test]
    fn masses_are_one() {
        let families = [
            lin(),
            BernsteinFunction::stable(0.5).unwrap(),
            BernsteinFunction::stable(0.75).unwrap(),
            BernsteinFunction::relativistic(1.0).unwrap(),
            BernsteinFunction::relativistic(0.0).unwrap(),
            BernsteinFunction::hyperbolic_k1(1.0, 1.0).unwrap(),
        ];
        for psi in &families {
            for d in [1, 3] {
                let table = heat_kernel(psi, 1.0, &log_radii(1e-3, 200.0, 160), d, &QuadratureSpec::auto(d)).unwrap();
                let m = table.mass();
                assert!((m - 1.0).abs() < 1e-3, "{} d={d}: mass {m}", psi.label());
                let floor = table.values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
                if psi.label().starts_with("hyperbolic") {
                    // Ψ(u) ~ cu² near 0 is not Bernstein, so e^{−tΨ} is not positive definite.
                    assert!(floor < -1e-6, "{} d={d}: min {floor}", psi.label());
                } else {
                    assert!(floor > -1e-6, "{} d={d}: min {floor}", psi.label());
                }
            }
        }
    }

    #[test]
    fn bounded_psi_fails_assumption_a() {
        let bounded = BernsteinFunction::one_minus_exp(1.0).unwrap();
        assert!(!assumption_a_check(&bounded, 1.0, 1).unwrap().finite);
        let r = heat_kernel(&bounded, 1.0, &[0.0], 1, &QuadratureSpec::auto(1));
        assert!(matches!(r, Err(Error::AssumptionA(_))));
        assert!(assumption_a_check(&lin(), 1.0, 3).unwrap().finite);
        let stable = assumption_a_check(&BernsteinFunction::stable(0.5).unwrap(), 1.0, 2).unwrap();
        assert!(stable.finite);
        // ∫ e^{−|ξ|/√2} dξ over ℝ² = 2π·2.
        assert!((stable.value - 4.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn sine_and_hankel_resolvents_agree() {
        let psi = BernsteinFunction::stable(0.75).unwrap();
        let radii = [0.5, 1.0, 2.0];
        let a = resolvent_kernel(&psi, 1.0, &radii, 3, &QuadratureSpec::auto(3)).unwrap();
        let b = resolvent_kernel(&psi, 1.0, &radii, 3, &QuadratureSpec::hankel(3)).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-5 * x.abs(), "{x} vs {y}");
        }
    }

    #[test]
    fn yukawa_resolvent() {
        let radii = [0.5, 1.0, 2.0];
        for lambda in [0.5, 2.0] {
            let table = resolvent_kernel(&lin(), lambda, &radii, 3, &QuadratureSpec::auto(3)).unwrap();
            for (r, v) in table.radii.iter().zip(&table.values) {
                let exact = (-(2.0f64 * lambda).sqrt() * r).exp() / (2.0 * PI * r);
                assert!((v - exact).abs() < 1e-6 * exact, "lambda={lambda} r={r}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn resolvent_decreases_in_lambda() {
        let psi = BernsteinFunction::stable(0.75).unwrap();
        let vals: Vec<f64> =
            [1.0, 2.0, 4.0].iter().map(|&l| resolvent_kernel(&psi, l, &[0.8], 3, &QuadratureSpec::auto(3)).unwrap().values[0]).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    }

    #[test]
    fn riesz_constants_and_asymptote() {
        let c = stable_riesz_constant(3, 0.75).unwrap();
        assert!((c - 1.0 / (2f64.powf(1.5) * PI.powf(1.5))).abs() < 1e-14);
        assert!(stable_riesz_constant(1, 0.5).is_err());
        assert!(stable_riesz_constant(1, 0.75).is_err());
        let grow = riesz_kernel(1, 0.75).unwrap();
        assert_eq!(grow.branch, RieszBranch::Growing);
        assert!((grow.exponent - 0.5).abs() < 1e-15);
        assert!((grow.constant - riesz_c(1, 1.5)).abs() < 1e-15);
        assert_eq!(riesz_kernel(1, 0.5).unwrap().branch, RieszBranch::Logarithmic);
        let psi = BernsteinFunction::stable(0.75).unwrap();
        let r = 0.05;
        let pi = resolvent_kernel(&psi, 1e-3, &[r], 3, &QuadratureSpec::auto(3)).unwrap().values[0];
        let asym = stable_resolvent_asymptote(3, 0.75).unwrap().eval(r);
        assert!((pi / asym - 1.0).abs() < 0.05, "{pi} vs {asym}");
    }

    #[test]
    fn resolvent_is_laplace_transform_of_heat() {
        let psi = BernsteinFunction::relativistic(1.0).unwrap();
        let (lambda, r) = (1.0, 1.0);
        let direct = resolvent_kernel(&psi, lambda, &[r], 1, &QuadratureSpec::auto(1)).unwrap().values[0];
        let via_time = resolvent_from_heat(&psi, lambda, r, 1, &QuadratureSpec::auto(1)).unwrap();
        assert!((direct - via_time).abs() < 1e-3 * direct, "{direct} vs {via_time}");
    }

    #[test]
    fn kernel_semigroup_property() {
        for psi in [lin(), BernsteinFunction::relativistic(1.0).unwrap(), BernsteinFunction::stable(0.5).unwrap()] {
            let radii = log_radii(1e-3, 400.0, 300);
            let q = QuadratureSpec::auto(1);
            let ps = heat_kernel(&psi, 0.4, &radii, 1, &q).unwrap();
            let pt = heat_kernel(&psi, 0.6, &radii, 1, &q).unwrap();
            let probes = [0.0, 0.5, 1.5];
            let sum = heat_kernel(&psi, 1.0, &probes, 1, &q).unwrap();
            for (k, &x) in probes.iter().enumerate() {
                let f = |y: f64| ps.value_at(y.abs()) * pt.value_at((x - y).abs());
                let mut conv = 0.0;
                let edges = [-1e5, -1e3, -50.0, -5.0, 0.0, x, x + 5.0, 50.0, 1e3, 1e5];
                for w in edges.windows(2) {
                    conv += quad::integrate(f, w[0], w[1], 1e-14, 1e-10, 4000).unwrap().value;
                }
                assert!((conv - sum.values[k]).abs() < 1e-4, "{} x={x}: {conv} vs {}", psi.label(), sum.values[k]);
            }
        }
    }

    #[test]
    fn kato_condition3_constant_and_zero() {
        let psi = BernsteinFunction::stable(0.75).unwrap();
        let q = QuadratureSpec::auto(3);
        let probes = vec![vec![0.0; 3]];
        let rep = kato_condition3_check(&Potential::zero(3), &psi, &[0.01, 0.1], &probes, &q).unwrap();
        assert!(rep.sup_values.iter().all(|&v| v == 0.0));
        let delta = 0.01;
        let rep = kato_condition3_check(&Potential::constant(3, 1.0), &psi, &[delta, 0.1], &probes, &q).unwrap();
        let c = stable_resolvent_asymptote(3, 0.75).unwrap().constant;
        let expect = 4.0 * PI * c * delta.powf(1.5) / 1.5;
        assert!((rep.sup_values[0] / expect - 1.0).abs() < 0.1, "{} vs {expect}", rep.sup_values[0]);
        assert!(rep.decays);
    }

    #[test]
    fn coulomb_kato_conditions_agree() {
        use crate::semigroup::{kato_condition1_check, DiagnosticSampling};
        use crate::subordinator::SubordinatorSpec;
        let psi = BernsteinFunction::stable(0.75).unwrap();
        let v = Potential::coulomb_mollified(3, 1.0, 0.1).unwrap();
        let probes = vec![vec![0.0; 3], vec![0.5, 0.0, 0.0]];
        let k3 = kato_condition3_check(&v, &psi, &[0.01, 0.1, 0.5], &probes, &QuadratureSpec::auto(3)).unwrap();
        let spec = SubordinatorSpec::auto(psi).unwrap();
        let s = DiagnosticSampling { n_paths: 2000, ..Default::default() };
        let k1 = kato_condition1_check(&v, &spec, &[0.001, 0.01, 0.1], &probes, s).unwrap();
        assert!(k3.decays && k1.decays, "{:?} {:?}", k3.sup_values, k1.sup_values);
        // Both suprema sit at the singularity.
        assert!(k3.values[0][0] >= k3.values[1][0]);
    }

    #[test]
    fn l1_linf_gaussian_and_stable() {
        let q = QuadratureSpec::auto(1);
        let radii = log_radii(1e-3, 60.0, 200);
        let gauss = heat_kernel(&lin(), 1.0, &radii, 1, &q).unwrap();
        let a = l1_linf_diagnostic(&gauss, 1.0).unwrap();
        let b = l1_linf_diagnostic(&gauss, 2.0).unwrap();
        let far = l1_linf_diagnostic(&gauss, 50.0).unwrap();
        assert!(a.monotone && a.value.is_finite() && b.value < a.value);
        assert!(far.value < 1e-6 * a.value, "{far:?}");
        let stable = heat_kernel(&BernsteinFunction::stable(0.5).unwrap(), 1.0, &log_radii(1e-3, 200.0, 200), 1, &q).unwrap();
        let s = l1_linf_diagnostic(&stable, 1.0).unwrap();
        assert!(s.monotone, "{s:?}");
        assert!(s.value.is_finite());
    }

    #[test]
    fn hypercontractivity_three_potentials() {
        let grid = GridSpec::new(1, 48, 8.0).unwrap();
        let psi = BernsteinFunction::stable(0.5).unwrap();
        let f = grid.sample(|x| Complex64::new((-(x[0] - 0.5).powi(2)).exp(), 0.0));
        let wells = Potential::bump(1, 0.6, 1.0, vec![1.0]).unwrap().plus(&Potential::bump(1, -0.3, 0.8, vec![-1.0]).unwrap());
        for v in [Potential::zero(1), Potential::constant(1, 0.7), wells] {
            let rep = hypercontractivity_bound_check(grid, &psi, &v, 0.8, &f).unwrap();
            assert!(rep.holds, "{}: {rep:?}", v.label);
        }
        let c = hypercontractivity_bound_check(grid, &psi, &Potential::constant(1, 0.7), 0.8, &f).unwrap();
        assert!(c.c_t <= 1.0 + 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn pchip_preserves_monotone_data(ys in proptest::collection::vec(0.0f64..1.0, 4..12)) {
            let mut v = ys.clone();
            v.sort_by(|a, b| b.total_cmp(a));
            let xs: Vec<f64> = (0..v.len()).map(|k| k as f64).collect();
            let diag = KernelDiagnostics { method: QuadMethod::HankelRadial, max_frequency: 0.0, tail_estimate: 0.0, max_error: 0.0 };
            let t = KernelTable::new(xs.clone(), v.clone(), 1, KernelKind::Heat { t: 1.0 }, String::new(), diag);
            let mut prev = f64::INFINITY;
            for k in 0..(10 * (v.len() - 1)) {
                let y = t.value_at(k as f64 / 10.0);
                prop_assert!(y <= prev + 1e-12);
                prev = y;
            }
        }
    }
}
