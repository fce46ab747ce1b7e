//! Bernstein functions Ψ(u) = b·u + ∫(1 − e^{−uy}) λ(dy) and their Lévy triplets.

use crate::error::{invalid, Error, Result};
use crate::quad;
use crate::special;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

/// Default lower integration cutoff for numeric Lévy densities.
pub const DEFAULT_Y_MIN: f64 = 1e-12;
/// Default upper integration cutoff for numeric Lévy densities.
pub const DEFAULT_Y_MAX: f64 = 1e4;
/// Relative tolerance of the triplet quadrature.
pub const TRIPLET_REL_TOL: f64 = 1e-8;

/// Density of a Lévy measure on (0, ∞).
pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Named closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    /// Ψ(u) = u^α, 0 < α < 1.
    Stable { alpha: f64 },
    /// Ψ(u) = √(2u + m²) − m.
    Relativistic { mass: f64 },
    /// Ψ(u) = 1 − e^{−au}.
    OneMinusExp { a: f64 },
    /// Ψ(u) = −log(a K₁(√(a²+b²u²)) / (K₁(a) √(a²+b²u²))).
    HyperbolicK1 { a: f64, b: f64 },
    /// Ψ(u) = b·u.
    Linear { b: f64 },
}

/// Numerically specified Lévy density with integration cutoffs.
#[derive(Clone)]
pub struct NumericDensity {
    pub density: DensityFn,
    pub y_min: f64,
    pub y_max: f64,
    pub label: String,
}

impl fmt::Debug for NumericDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumericDensity").field("label", &self.label).field("y_min", &self.y_min).field("y_max", &self.y_max).finish()
    }
}

impl NumericDensity {
    pub fn new(density: DensityFn, y_min: f64, y_max: f64, label: impl Into<String>) -> Result<Self> {
        if !(y_min > 0.0 && y_max > y_min) {
            return Err(invalid(format!("cutoffs must satisfy 0 < y_min < y_max, got {y_min}, {y_max}")));
        }
        Ok(Self { density, y_min, y_max, label: label.into() })
    }

    /// Tabulated density with log-linear interpolation (log ρ linear in log y).
    pub fn from_table(ys: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ys.len() < 2 || ys.len() != values.len() {
            return Err(invalid("density table needs at least two (y, density) rows of equal length"));
        }
        if ys.windows(2).any(|w| !(w[1] > w[0])) || ys[0] <= 0.0 {
            return Err(invalid("density table abscissae must be positive and strictly increasing"));
        }
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(invalid("density table values must be positive and finite"));
        }
        let lx: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let (y_min, y_max) = (ys[0], ys[ys.len() - 1]);
        let density: DensityFn = Arc::new(move |y: f64| {
            let l = y.ln();
            let k = match lx.binary_search_by(|p| p.total_cmp(&l)) {
                Ok(i) => return ly[i].exp(),
                Err(i) => i.clamp(1, lx.len() - 1),
            };
            let w = (l - lx[k - 1]) / (lx[k] - lx[k - 1]);
            (ly[k - 1] + w * (ly[k] - ly[k - 1])).exp()
        });
        Self::new(density, y_min, y_max, "table")
    }

    /// Reads a headerless or headed two-column CSV of (y, density).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| Error::Parse(e.to_string()))?;
        let (mut ys, mut vs) = (Vec::new(), Vec::new());
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() < 2 {
                return Err(Error::Parse(format!("row {}: expected two columns", i + 1)));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(y), Ok(v)) => {
                    ys.push(y);
                    vs.push(v);
                }
                _ if i == 0 => continue,
                _ => return Err(Error::Parse(format!("row {}: non-numeric entry", i + 1))),
            }
        }
        Self::from_table(ys, vs)
    }
}

/// Lévy measure on (0, ∞).
#[derive(Debug, Clone)]
pub enum LevyMeasure {
    /// scale · y^{−1−α} dy.
    StableDensity {
        alpha: f64,
        scale: f64,
    },
    /// Unit point mass at y = a.
    CompoundExp {
        a: f64,
    },
    NumericDensity(NumericDensity),
}

impl LevyMeasure {
    /// Density at y, if the measure is absolutely continuous.
    pub fn density(&self, y: f64) -> Option<f64> {
        match self {
            LevyMeasure::StableDensity { alpha, scale } => Some(scale * y.powf(-1.0 - alpha)),
            LevyMeasure::CompoundExp { .. } => None,
            LevyMeasure::NumericDensity(nd) => Some((nd.density)(y)),
        }
    }

    fn cutoffs(&self) -> (f64, f64) {
        match self {
            LevyMeasure::NumericDensity(nd) => (nd.y_min, nd.y_max),
            _ => (DEFAULT_Y_MIN, DEFAULT_Y_MAX),
        }
    }

    /// ∫ w(y) λ(dy) over (lo, hi) for a smooth weight, with power-law tail
    /// extrapolation below the lower cutoff and above the upper cutoff.
    pub fn integrate(&self, w: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
        match self {
            LevyMeasure::CompoundExp { a } => Ok(if *a >= lo && *a < hi { w(*a) } else { 0.0 }),
            _ => {
                let rho = |y: f64| self.density(y).unwrap_or(0.0);
                integrate_density(&rho, w, lo, hi, self.cutoffs())
            }
        }
    }

    /// Total mass of [y₀, ∞).
    pub fn tail_mass(&self, y0: f64) -> Result<f64> {
        self.integrate(&|_| 1.0, y0, f64::INFINITY)
    }

    /// ∫₀^{y₀} y λ(dy).
    pub fn small_jump_mean(&self, y0: f64) -> Result<f64> {
        match self {
            LevyMeasure::CompoundExp { a } => Ok(if *a < y0 { *a } else { 0.0 }),
            _ => self.integrate(&|y| y, 0.0, y0),
        }
    }
}

/// Power-law fit ρ(y) ≈ ρ(y₀)(y/y₀)^{−1−γ} from two nearby samples.
fn power_exponent(rho: &dyn Fn(f64) -> f64, y0: f64, y1: f64) -> f64 {
    let (r0, r1) = (rho(y0), rho(y1));
    if r0 <= 0.0 || r1 <= 0.0 {
        return f64::INFINITY;
    }
    -1.0 - (r1 / r0).ln() / (y1 / y0).ln()
}

fn integrate_log(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, scale: f64) -> Result<f64> {
    if !(hi > lo) {
        return Ok(0.0);
    }
    let g = |s: f64| {
        let y = s.exp();
        f(y) * y
    };
    let r = quad::integrate(g, lo.ln(), hi.ln(), 1e-300_f64.max(1e-15 * scale), TRIPLET_REL_TOL * 1e-2, 4000)?;
    Ok(r.value)
}

fn integrate_density(rho: &dyn Fn(f64) -> f64, w: &dyn Fn(f64) -> f64, lo: f64, hi: f64, (y_min, y_max): (f64, f64)) -> Result<f64> {
    let f = |y: f64| w(y) * rho(y);
    let a = lo.max(y_min);
    let b = hi.min(y_max);
    let mut total = 0.0;
    if b > a {
        // Split at y = 1 and at decades so each log-panel sees a smooth integrand.
        let mut breaks = vec![a];
        let mut p = 10f64.powi(a.log10().ceil() as i32);
        while p < b {
            if p > a {
                breaks.push(p);
            }
            p *= 10.0;
        }
        breaks.push(b);
        let scale = f(1f64.clamp(a, b)).abs().max(f(a).abs() * a).max(1e-300);
        for pair in breaks.windows(2) {
            total += integrate_log(&f, pair[0], pair[1], scale)?;
        }
    }
    // Lower tail below y_min.
    if lo < y_min {
        let gamma = power_exponent(rho, y_min, 2.0 * y_min);
        let r0 = rho(y_min);
        let model = move |y: f64| r0 * (y / y_min).powf(-1.0 - gamma);
        let g = |y: f64| w(y) * model(y);
        let probe = w(0.5 * y_min) * model(0.5 * y_min) * y_min;
        if probe.is_finite() && probe != 0.0 {
            // The weighted power law must be integrable at 0; check the decay
            // rate of w·ρ·y on the last two decades.
            let q1 = (g(1e-2 * y_min) * 1e-2 * y_min).abs();
            let q0 = (g(y_min) * y_min).abs();
            if q1 >= q0 && q0 > 0.0 {
                return Err(Error::QuadratureNonConvergence {
                    context: format!("Lévy density not integrable against the weight below y_min = {y_min:e}"),
                    partial: total,
                    error_estimate: f64::INFINITY,
                });
            }
            let floor = lo.max(y_min * 1e-60);
            let tail = integrate_log(&g, floor, y_min.min(hi), q0)?;
            if tail.abs() > 1e-8 * total.abs().max(1e-300) {
                log::debug!("lower tail extrapolation below {y_min:e} contributes {tail:e}");
            }
            total += tail;
        }
    }
    // Upper tail above y_max.
    if hi > y_max {
        let gamma = power_exponent(rho, 0.5 * y_max, y_max);
        let r0 = rho(y_max);
        if r0 > 0.0 {
            if !(gamma > 0.0) {
                return Err(Error::QuadratureNonConvergence {
                    context: format!("Lévy density tail above y_max = {y_max:e} is not integrable (fitted exponent {gamma})"),
                    partial: total,
                    error_estimate: f64::INFINITY,
                });
            }
            if gamma.is_finite() && gamma < 60.0 {
                let model = move |y: f64| r0 * (y / y_max).powf(-1.0 - gamma);
                let g = |y: f64| w(y) * model(y);
                let ceiling = hi.min(y_max * (80.0 / gamma).exp());
                let tail = integrate_log(&g, y_max.max(lo), ceiling, (g(y_max) * y_max).abs())?;
                if tail.abs() > 1e-6 * total.abs().max(1e-300) {
                    log::warn!("upper tail extrapolation above {y_max:e} contributes {tail:e} (relative {:e})", tail / total);
                }
                total += tail;
            }
        }
    }
    Ok(total)
}

/// A Bernstein function in 𝓑₀ with drift, optional Lévy measure and optional closed form.
#[derive(Debug, Clone)]
pub struct BernsteinFunction {
    pub drift: f64,
    pub measure: Option<LevyMeasure>,
    pub closed_form: Option<ClosedForm>,
}

impl BernsteinFunction {
    pub fn stable(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("stable index must lie in (0,1), got {alpha}")));
        }
        Ok(Self {
            drift: 0.0,
            measure: Some(LevyMeasure::StableDensity { alpha, scale: alpha / special::gamma(1.0 - alpha) }),
            closed_form: Some(ClosedForm::Stable { alpha }),
        })
    }

    pub fn relativistic(mass: f64) -> Result<Self> {
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(invalid(format!("mass must be non-negative, got {mass}")));
        }
        let c = (2.0 * std::f64::consts::PI).powf(-0.5);
        let density: DensityFn = Arc::new(move |y: f64| c * y.powf(-1.5) * (-0.5 * mass * mass * y).exp());
        let nd = NumericDensity::new(density, DEFAULT_Y_MIN, DEFAULT_Y_MAX, format!("relativistic(m={mass})"))?;
        Ok(Self { drift: 0.0, measure: Some(LevyMeasure::NumericDensity(nd)), closed_form: Some(ClosedForm::Relativistic { mass }) })
    }

    pub fn one_minus_exp(a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(invalid(format!("parameter a must be positive, got {a}")));
        }
        Ok(Self { drift: 0.0, measure: Some(LevyMeasure::CompoundExp { a }), closed_form: Some(ClosedForm::OneMinusExp { a }) })
    }

    pub fn hyperbolic_k1(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(invalid(format!("hyperbolic parameters must be positive, got a={a}, b={b}")));
        }
        Ok(Self { drift: 0.0, measure: None, closed_form: Some(ClosedForm::HyperbolicK1 { a, b }) })
    }

    pub fn linear(b: f64) -> Result<Self> {
        if !(b >= 0.0) || !b.is_finite() {
            return Err(invalid(format!("drift must be non-negative, got {b}")));
        }
        Ok(Self { drift: b, measure: None, closed_form: Some(ClosedForm::Linear { b }) })
    }

    pub fn from_triplet(drift: f64, measure: Option<LevyMeasure>) -> Result<Self> {
        if !(drift >= 0.0) || !drift.is_finite() {
            return Err(invalid(format!("drift must be non-negative, got {drift}")));
        }
        if let Some(m) = &measure {
            // ∫ (y ∧ 1) λ(dy) must be finite.
            let v = m.integrate(&|y: f64| y.min(1.0), 0.0, f64::INFINITY)?;
            if !v.is_finite() {
                return Err(invalid("Lévy measure violates the integrability condition on (y ∧ 1)"));
            }
        }
        Ok(Self { drift, measure, closed_form: None })
    }

    /// Whether a Lévy triplet is available.
    pub fn has_triplet(&self) -> bool {
        self.measure.is_some() || matches!(self.closed_form, Some(ClosedForm::Linear { .. }) | None)
    }

    /// Ψ(u), via the closed form when present and the triplet otherwise.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(invalid(format!("Psi requires u >= 0, got {u}")));
        }
        if u == 0.0 {
            return Ok(0.0);
        }
        match self.closed_form {
            Some(cf) => Ok(eval_closed(cf, u)),
            None => self.eval_triplet(u),
        }
    }

    /// Ψ(u) for a closed-form function; panics on triplet-only functions.
    ///
    /// Convenience for hot loops where the closed form is known to exist.
    pub fn eval_fast(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match self.closed_form {
            Some(cf) => eval_closed(cf, u),
            None => self.eval_triplet(u).expect("triplet quadrature failed"),
        }
    }

    /// b·u + ∫(1 − e^{−uy}) λ(dy) by quadrature.
    pub fn eval_triplet(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(invalid(format!("Psi requires u >= 0, got {u}")));
        }
        if u == 0.0 {
            return Ok(0.0);
        }
        if !self.has_triplet() {
            return Err(Error::Unsupported("this Bernstein function has no Lévy triplet".into()));
        }
        let jump = match &self.measure {
            None => 0.0,
            Some(m) => m.integrate(&|y: f64| -(-u * y).exp_m1(), 0.0, f64::INFINITY)?,
        };
        Ok(self.drift * u + jump)
    }

    /// (c₁, c₂) with Ψ(u) ≤ c₁u + c₂: c₁ = b + ∫_{(0,1)} y λ(dy), c₂ = λ([1, ∞)).
    pub fn linear_bound_constants(&self) -> Result<(f64, f64)> {
        if !self.has_triplet() {
            return Err(Error::Unsupported("linear bound constants need a Lévy triplet".into()));
        }
        match &self.measure {
            None => Ok((self.drift, 0.0)),
            Some(LevyMeasure::CompoundExp { a }) => {
                if *a < 1.0 {
                    Ok((self.drift + a, 0.0))
                } else {
                    Ok((self.drift, 1.0))
                }
            }
            Some(m) => {
                let c1 = self.drift + m.integrate(&|y| y, 0.0, 1.0)?;
                let c2 = m.integrate(&|_| 1.0, 1.0, f64::INFINITY)?;
                Ok((c1, c2))
            }
        }
    }

    /// Finite-difference complete-monotonicity diagnostics.
    pub fn check_complete_monotonicity(&self, grid: &[f64], t_list: &[f64], max_order: usize) -> Result<MonotonicityReport> {
        let rel_err = if self.closed_form.is_some() { 1e-14 } else { TRIPLET_REL_TOL };
        let mut values = Vec::with_capacity(grid.len());
        for &u in grid {
            values.push(self.eval(u)?);
        }
        check_complete_monotonicity_values(grid, &values, t_list, max_order, rel_err)
    }

    pub fn label(&self) -> String {
        match self.closed_form {
            Some(ClosedForm::Stable { alpha }) => format!("stable(alpha={alpha})"),
            Some(ClosedForm::Relativistic { mass }) => format!("relativistic(m={mass})"),
            Some(ClosedForm::OneMinusExp { a }) => format!("one_minus_exp(a={a})"),
            Some(ClosedForm::HyperbolicK1 { a, b }) => format!("hyperbolic_k1(a={a},b={b})"),
            Some(ClosedForm::Linear { b }) => format!("linear(b={b})"),
            None => format!("triplet(b={})", self.drift),
        }
    }
}

fn eval_closed(cf: ClosedForm, u: f64) -> f64 {
    match cf {
        ClosedForm::Stable { alpha } => u.powf(alpha),
        ClosedForm::Relativistic { mass } => {
            // √(2u+m²) − m without cancellation.
            2.0 * u / ((2.0 * u + mass * mass).sqrt() + mass)
        }
        ClosedForm::OneMinusExp { a } => -(-a * u).exp_m1(),
        ClosedForm::HyperbolicK1 { a, b } => {
            let z = (a * a + b * b * u * u).sqrt();
            // log ratio with exponential scaling to stay finite for large z.
            let ln_num = a.ln() + special::bessel_k1_scaled(z).ln() - z;
            let ln_den = special::bessel_k1_scaled(a).ln() - a + z.ln();
            -(ln_num - ln_den)
        }
        ClosedForm::Linear { b } => b * u,
    }
}

/// One order of divided differences with its sign requirement.
#[derive(Debug, Clone)]
pub struct DifferenceCheck {
    /// `"psi"` or `"exp(-t psi)"`.
    pub function: String,
    pub t: Option<f64>,
    pub order: usize,
    /// Smallest sign-normalized divided difference (should be ≥ −tolerance).
    pub min_signed: f64,
    /// Largest rounding margin used at this order.
    pub tolerance: f64,
    pub violations: usize,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub checks: Vec<DifferenceCheck>,
    pub passed: bool,
}

impl MonotonicityReport {
    pub fn check(&self, function: &str, order: usize) -> Option<&DifferenceCheck> {
        self.checks.iter().find(|c| c.function == function && c.order == order)
    }
}

/// Divided differences of order `n` together with Σ|coefficients| per entry.
fn divided_differences(x: &[f64], f: &[f64], n: usize) -> Vec<(f64, f64)> {
    let m = x.len();
    if m <= n {
        return Vec::new();
    }
    (0..m - n)
        .map(|i| {
            let (mut v, mut c) = (0.0, 0.0);
            for j in i..=i + n {
                let mut denom = 1.0;
                for k in i..=i + n {
                    if k != j {
                        denom *= x[j] - x[k];
                    }
                }
                v += f[j] / denom;
                c += (f[j].abs().max(1e-300)) / denom.abs();
            }
            (v, c)
        })
        .collect()
}

/// Complete-monotonicity diagnostics for arbitrary sampled values of a candidate Ψ.
pub fn check_complete_monotonicity_values(
    grid: &[f64],
    values: &[f64],
    t_list: &[f64],
    max_order: usize,
    value_rel_err: f64,
) -> Result<MonotonicityReport> {
    if grid.len() != values.len() {
        return Err(invalid("grid and values must have equal length"));
    }
    if grid.iter().any(|u| !(*u > 0.0)) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("grid must be strictly increasing positive reals"));
    }
    if max_order == 0 || max_order > 4 {
        return Err(invalid(format!("max_order must be in 1..=4, got {max_order}")));
    }
    if t_list.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("t_list entries must be positive"));
    }
    let eps = value_rel_err.max(f64::EPSILON) * 8.0;
    let mut checks = Vec::new();
    let mut run = |name: &str, t: Option<f64>, vals: &[f64], sign_of: &dyn Fn(usize) -> f64| {
        for order in 1..=max_order {
            let dd = divided_differences(grid, vals, order);
            let mut min_signed = f64::INFINITY;
            let mut tol_max: f64 = 0.0;
            let mut violations = 0;
            for (v, c) in dd {
                let s = sign_of(order) * v;
                let tol = eps * c;
                tol_max = tol_max.max(tol);
                min_signed = min_signed.min(s);
                if s < -tol {
                    violations += 1;
                }
            }
            checks.push(DifferenceCheck {
                function: name.to_string(),
                t,
                order,
                min_signed,
                tolerance: tol_max,
                violations,
                passed: violations == 0,
            });
        }
    };
    // Ψ' ≥ 0, Ψ'' ≤ 0, ...: sign-normalized value (−1)^{n+1} D_n ≥ 0.
    run("psi", None, values, &|n| if n % 2 == 1 { 1.0 } else { -1.0 });
    for &t in t_list {
        let g: Vec<f64> = values.iter().map(|v| (-t * v).exp()).collect();
        run("exp(-t psi)", Some(t), &g, &|n| if n % 2 == 0 { 1.0 } else { -1.0 });
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(MonotonicityReport { checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn builtins() -> Vec<BernsteinFunction> {
        vec![
            BernsteinFunction::stable(0.5).unwrap(),
            BernsteinFunction::stable(0.75).unwrap(),
            BernsteinFunction::relativistic(0.0).unwrap(),
            BernsteinFunction::relativistic(2.0).unwrap(),
            BernsteinFunction::one_minus_exp(1.0).unwrap(),
            BernsteinFunction::linear(2.0).unwrap(),
            BernsteinFunction::hyperbolic_k1(1.0, 1.0).unwrap(),
        ]
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(BernsteinFunction::stable(0.5).unwrap().eval(1.0).unwrap(), 1.0);
        assert!((BernsteinFunction::relativistic(0.0).unwrap().eval(2.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(BernsteinFunction::hyperbolic_k1(1.3, 0.7).unwrap().eval(0.0).unwrap(), 0.0);
        assert!((BernsteinFunction::relativistic(3.0).unwrap().eval(8.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn psi_at_zero_is_exactly_zero() {
        for psi in builtins() {
            assert_eq!(psi.eval(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn negative_argument_rejected() {
        assert!(BernsteinFunction::linear(1.0).unwrap().eval(-1.0).is_err());
    }

    #[test]
    fn stable_triplet_matches_closed_form() {
        for alpha in [0.25, 0.5, 0.75] {
            let psi = BernsteinFunction::stable(alpha).unwrap();
            for u in [1e-3f64, 0.1, 1.0, 7.0, 100.0] {
                let exact = u.powf(alpha);
                let tri = psi.eval_triplet(u).unwrap();
                assert!((tri - exact).abs() <= 1e-6 * (1.0 + exact), "alpha={alpha} u={u} tri={tri}");
            }
        }
    }

    #[test]
    fn relativistic_triplet_matches_closed_form() {
        for m in [0.0, 0.5, 2.0] {
            let psi = BernsteinFunction::relativistic(m).unwrap();
            for u in [0.01, 1.0, 10.0] {
                let exact = psi.eval(u).unwrap();
                let tri = psi.eval_triplet(u).unwrap();
                assert!((tri - exact).abs() <= 1e-6 * (1.0 + exact), "m={m} u={u} tri={tri} exact={exact}");
            }
        }
    }

    #[test]
    fn one_minus_exp_triplet_is_exact() {
        let psi = BernsteinFunction::one_minus_exp(1.0).unwrap();
        for u in [0.1f64, 1.0, 5.0] {
            assert!((psi.eval_triplet(u).unwrap() - (1.0 - (-u).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn hyperbolic_has_no_triplet() {
        let psi = BernsteinFunction::hyperbolic_k1(1.0, 1.0).unwrap();
        assert!(matches!(psi.eval_triplet(1.0), Err(Error::Unsupported(_))));
        assert!(matches!(psi.linear_bound_constants(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn hyperbolic_matches_direct_bessel_ratio() {
        let (a, b) = (1.0, 2.0);
        let psi = BernsteinFunction::hyperbolic_k1(a, b).unwrap();
        for u in [0.3, 1.0, 4.0] {
            let z: f64 = (a * a + b * b * u * u).sqrt();
            let direct = -(a * special::bessel_k1(z) / (special::bessel_k1(a) * z)).ln();
            assert!((psi.eval(u).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_bound_examples() {
        assert_eq!(BernsteinFunction::linear(2.0).unwrap().linear_bound_constants().unwrap(), (2.0, 0.0));
        assert_eq!(BernsteinFunction::one_minus_exp(1.0).unwrap().linear_bound_constants().unwrap(), (0.0, 1.0));
        let psi = BernsteinFunction::stable(0.5).unwrap();
        let (c1, c2) = psi.linear_bound_constants().unwrap();
        // scale = α/Γ(1−α); ∫₀¹ y·scale·y^{−1−α} = scale/(1−α), ∫₁^∞ = scale/α.
        let scale = 0.5 / special::gamma(0.5);
        assert!((c1 - scale / 0.5).abs() < 1e-8);
        assert!((c2 - scale / 0.5).abs() < 1e-8);
        for u in [0.1, 1.0, 10.0, 100.0] {
            assert!(psi.eval(u).unwrap() <= c1 * u + c2);
        }
    }

    #[test]
    fn stable_is_completely_monotone_on_grid() {
        let psi = BernsteinFunction::stable(0.5).unwrap();
        let grid: Vec<f64> = (1..=16).map(|k| 0.5 * k as f64).collect();
        let rep = psi.check_complete_monotonicity(&grid, &[0.5, 1.0], 3).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn square_is_flagged_at_order_two() {
        let grid: Vec<f64> = (1..=16).map(|k| 0.5 * k as f64).collect();
        let values: Vec<f64> = grid.iter().map(|u| u * u).collect();
        let rep = check_complete_monotonicity_values(&grid, &values, &[1.0], 3, 1e-15).unwrap();
        assert!(!rep.passed);
        assert!(rep.check("psi", 1).unwrap().passed);
        assert!(!rep.check("psi", 2).unwrap().passed);
    }

    #[test]
    fn linear_higher_differences_vanish() {
        let psi = BernsteinFunction::linear(1.0).unwrap();
        let grid: Vec<f64> = (1..=12).map(|k| 0.25 * k as f64).collect();
        let rep = psi.check_complete_monotonicity(&grid, &[1.0], 4).unwrap();
        assert!(rep.passed);
        for order in 2..=4 {
            let c = rep.check("psi", order).unwrap();
            assert!(c.min_signed.abs() <= c.tolerance.max(1e-12));
        }
    }

    #[test]
    fn hyperbolic_literal_formula_is_convex_near_zero() {
        // The K₁ ratio in u² behaves like c·u² at the origin, so concavity fails there.
        let psi = BernsteinFunction::hyperbolic_k1(1.0, 1.0).unwrap();
        let grid: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
        let rep = psi.check_complete_monotonicity(&grid, &[], 2).unwrap();
        assert!(rep.check("psi", 1).unwrap().passed);
        assert!(!rep.check("psi", 2).unwrap().passed);
    }

    #[test]
    fn max_order_capped() {
        let psi = BernsteinFunction::linear(1.0).unwrap();
        assert!(psi.check_complete_monotonicity(&[1.0, 2.0, 3.0], &[], 5).is_err());
        assert!(psi.check_complete_monotonicity(&[2.0, 1.0], &[], 1).is_err());
    }

    #[test]
    fn numeric_table_reproduces_stable() {
        let alpha = 0.5;
        let scale = alpha / special::gamma(1.0 - alpha);
        let ys: Vec<f64> = (-60..=20).map(|k| 10f64.powf(k as f64 * 0.2)).collect();
        let vs: Vec<f64> = ys.iter().map(|y| scale * y.powf(-1.5)).collect();
        let nd = NumericDensity::from_table(ys, vs).unwrap();
        let psi = BernsteinFunction::from_triplet(0.0, Some(LevyMeasure::NumericDensity(nd))).unwrap();
        for u in [0.5f64, 2.0] {
            assert!((psi.eval(u).unwrap() - u.sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn csv_density_roundtrip() {
        let dir = std::env::temp_dir().join(format!("subfk-density-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rho.csv");
        let mut s = String::from("y,density\n");
        for k in -2000..=500 {
            let y = 10f64.powf(k as f64 * 0.005);
            s.push_str(&format!("{y},{}\n", (-y).exp() / y));
        }
        std::fs::write(&path, s).unwrap();
        let nd = NumericDensity::from_csv(&path).unwrap();
        // Gamma-process density e^{−y}/y gives Ψ(u) = log(1+u).
        let psi = BernsteinFunction::from_triplet(0.0, Some(LevyMeasure::NumericDensity(nd))).unwrap();
        let v = psi.eval(1.0).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-5, "{v}");
        std::fs::remove_dir_all(&dir).ok();
    }

    proptest! {
        #[test]
        fn monotone_for_builtins(u in 0.0f64..50.0, v in 0.0f64..50.0) {
            let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
            for psi in builtins() {
                prop_assert!(psi.eval(lo).unwrap() <= psi.eval(hi).unwrap() + 1e-12);
            }
        }

        #[test]
        fn concave_for_bernstein_builtins(u in 0.0f64..50.0, v in 0.0f64..50.0) {
            for psi in builtins().into_iter().filter(|p| !matches!(p.closed_form, Some(ClosedForm::HyperbolicK1 { .. }))) {
                let mid = psi.eval(0.5 * (u + v)).unwrap();
                let avg = 0.5 * (psi.eval(u).unwrap() + psi.eval(v).unwrap());
                prop_assert!(mid >= avg - 1e-12 * (1.0 + avg));
            }
        }

        #[test]
        fn triplet_agrees_with_closed_form(u in 1e-3f64..200.0, alpha in 0.2f64..0.9, a in 0.1f64..3.0) {
            let s = BernsteinFunction::stable(alpha).unwrap();
            let c = s.eval(u).unwrap();
            prop_assert!((s.eval_triplet(u).unwrap() - c).abs() <= 1e-6 * (1.0 + c));
            let o = BernsteinFunction::one_minus_exp(a).unwrap();
            let c = o.eval(u).unwrap();
            prop_assert!((o.eval_triplet(u).unwrap() - c).abs() <= 1e-6 * (1.0 + c));
        }

        #[test]
        fn linear_bound_holds(u in 0.0f64..1e3) {
            for psi in builtins().into_iter().filter(|p| p.has_triplet()) {
                let (c1, c2) = psi.linear_bound_constants().unwrap();
                prop_assert!(psi.eval(u).unwrap() <= c1 * u + c2 + 1e-9);
            }
        }
    }
}
