//! Lévy subordinators T_t matched to a Bernstein function.

use crate::bernstein::{BernsteinFunction, ClosedForm, LevyMeasure};
use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::stats::{z_score, RunningStats};
use rand::Rng;
use std::f64::consts::PI;

/// How increments are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingStrategy {
    /// Kanter's representation of the one-sided α-stable law.
    StableExact,
    /// Inverse-Gaussian first-passage law (m > 0), T = t²/Z² (m = 0).
    RelativisticExact,
    /// T_t = b·t.
    DriftOnly,
    /// Jumps above `cutoff` as compound Poisson, smaller jumps replaced by their mean.
    CompoundPoissonPlusDrift { cutoff: f64 },
}

#[derive(Debug, Clone)]
enum JumpLaw {
    /// Pareto tail P(Y > y) = (y/y₀)^{−α}.
    Pareto { alpha: f64, y0: f64 },
    /// All jumps equal to `a`.
    Point { a: f64 },
    /// Cells in y with cumulative masses; local power law inside a cell.
    Table { edges: Vec<f64>, cumulative: Vec<f64>, exponents: Vec<f64>, tail_exponent: Option<f64> },
}

#[derive(Debug, Clone)]
struct CompoundPoisson {
    intensity: f64,
    drift: f64,
    law: JumpLaw,
}

/// A sampler for T_t^Ψ.
#[derive(Debug, Clone)]
pub struct SubordinatorSpec {
    pub psi: BernsteinFunction,
    pub strategy: SamplingStrategy,
    cp: Option<CompoundPoisson>,
}

impl SubordinatorSpec {
    pub fn new(psi: BernsteinFunction, strategy: SamplingStrategy) -> Result<Self> {
        let cf = psi.closed_form;
        let cp = match strategy {
            SamplingStrategy::StableExact => {
                if !matches!(cf, Some(ClosedForm::Stable { .. })) {
                    return Err(Error::Unsupported(format!("StableExact needs a stable Psi, got {}", psi.label())));
                }
                None
            }
            SamplingStrategy::RelativisticExact => {
                if !matches!(cf, Some(ClosedForm::Relativistic { .. })) {
                    return Err(Error::Unsupported(format!("RelativisticExact needs a relativistic Psi, got {}", psi.label())));
                }
                None
            }
            SamplingStrategy::DriftOnly => {
                if psi.measure.is_some() || !psi.has_triplet() {
                    return Err(Error::Unsupported(format!("DriftOnly needs a pure-drift Psi, got {}", psi.label())));
                }
                None
            }
            SamplingStrategy::CompoundPoissonPlusDrift { cutoff } => {
                if !(cutoff > 0.0) {
                    return Err(invalid(format!("small-jump cutoff must be positive, got {cutoff}")));
                }
                if !psi.has_triplet() {
                    return Err(Error::Unsupported(format!("no sampler for {}: compound Poisson needs a Lévy triplet", psi.label())));
                }
                Some(build_compound_poisson(&psi, cutoff)?)
            }
        };
        Ok(Self { psi, strategy, cp })
    }

    /// Exact sampler for the family when one exists, compound Poisson otherwise.
    pub fn auto(psi: BernsteinFunction) -> Result<Self> {
        let strategy = match psi.closed_form {
            Some(ClosedForm::Stable { .. }) => SamplingStrategy::StableExact,
            Some(ClosedForm::Relativistic { .. }) => SamplingStrategy::RelativisticExact,
            Some(ClosedForm::Linear { .. }) => SamplingStrategy::DriftOnly,
            Some(ClosedForm::OneMinusExp { a }) => SamplingStrategy::CompoundPoissonPlusDrift { cutoff: a },
            Some(ClosedForm::HyperbolicK1 { .. }) => {
                return Err(Error::Unsupported("sampling the hyperbolic Lévy subordinator is not supported".into()))
            }
            None if psi.measure.is_none() => SamplingStrategy::DriftOnly,
            None => SamplingStrategy::CompoundPoissonPlusDrift { cutoff: 1e-3 },
        };
        Self::new(psi, strategy)
    }

    /// Jump intensity Λ = λ([y₀, ∞)) of the compound-Poisson strategy.
    pub fn intensity(&self) -> Option<f64> {
        self.cp.as_ref().map(|c| c.intensity)
    }

    /// Effective drift of the compound-Poisson strategy (b plus small-jump mean).
    pub fn effective_drift(&self) -> Option<f64> {
        self.cp.as_ref().map(|c| c.drift)
    }

    /// One draw of T_Δt.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(invalid(format!("time increment must be positive, got {dt}")));
        }
        Ok(self.draw(dt, rng))
    }

    fn draw<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        match self.strategy {
            SamplingStrategy::StableExact => {
                let alpha = match self.psi.closed_form {
                    Some(ClosedForm::Stable { alpha }) => alpha,
                    _ => unreachable!(),
                };
                dt.powf(1.0 / alpha) * stable_unit(alpha, rng)
            }
            SamplingStrategy::RelativisticExact => {
                let mass = match self.psi.closed_form {
                    Some(ClosedForm::Relativistic { mass }) => mass,
                    _ => unreachable!(),
                };
                first_passage(mass, dt, rng)
            }
            SamplingStrategy::DriftOnly => self.psi.drift * dt,
            SamplingStrategy::CompoundPoissonPlusDrift { .. } => {
                let cp = self.cp.as_ref().expect("compound Poisson parameters");
                let n = rng::poisson(rng, cp.intensity * dt);
                let mut total = cp.drift * dt;
                for _ in 0..n {
                    total += cp.law.sample(rng);
                }
                total
            }
        }
    }

    /// Path on an ascending grid starting at 0.
    pub fn sample_path<R: Rng + ?Sized>(&self, times: &[f64], rng: &mut R) -> Result<SubordinatorPath> {
        validate_grid(times)?;
        let mut values = Vec::with_capacity(times.len());
        values.push(0.0);
        let mut acc = 0.0;
        for w in times.windows(2) {
            let dt = w[1] - w[0];
            if dt > 0.0 {
                acc += self.draw(dt, rng);
            }
            values.push(acc);
        }
        Ok(SubordinatorPath { times: times.to_vec(), values })
    }

    /// Monte-Carlo check of E[e^{−uT_t}] = e^{−tΨ(u)}, one stream per draw.
    pub fn laplace_check(&self, u: f64, t: f64, n: usize, seed: u64) -> Result<LaplaceReport> {
        if n < 1000 {
            return Err(invalid(format!("laplace_check needs n >= 1000, got {n}")));
        }
        if !(u >= 0.0 && t > 0.0) {
            return Err(invalid("laplace_check needs u >= 0 and t > 0"));
        }
        let mut stats = RunningStats::new();
        for i in 0..n {
            let mut r = rng::stream(seed, i as u64);
            let x = self.draw(t, &mut r);
            stats.push((-u * x).exp());
        }
        let analytic = (-t * self.psi.eval(u)?).exp();
        let stderr = stats.stderr();
        Ok(LaplaceReport { u, t, n, mc_mean: stats.mean, stderr, analytic, z_score: z_score(stats.mean, analytic, stderr) })
    }
}

/// Outcome of [`SubordinatorSpec::laplace_check`].
#[derive(Debug, Clone, Copy)]
pub struct LaplaceReport {
    pub u: f64,
    pub t: f64,
    pub n: usize,
    pub mc_mean: f64,
    pub stderr: f64,
    pub analytic: f64,
    pub z_score: f64,
}

/// Sampled non-decreasing trajectory of T on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl SubordinatorPath {
    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    pub fn is_valid(&self) -> bool {
        self.values.first() == Some(&0.0) && self.values.windows(2).all(|w| w[1] >= w[0]) && self.times.len() == self.values.len()
    }
}

pub(crate) fn validate_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() || times[0] != 0.0 {
        return Err(invalid("time grid must start at 0"));
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(invalid("time grid must be ascending and finite"));
    }
    Ok(())
}

/// Unit-time one-sided α-stable draw with E e^{−uT} = e^{−u^α}.
pub fn stable_unit<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u = PI * rng::open01(rng);
    let e = rng::exp1(rng);
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let b = ((1.0 - alpha) * u).sin() / e;
    a * b.powf((1.0 - alpha) / alpha)
}

/// First-passage time of B_s + m s to level t.
pub fn first_passage<R: Rng + ?Sized>(mass: f64, t: f64, rng: &mut R) -> f64 {
    let z = rng::normal(rng);
    if mass == 0.0 {
        return t * t / (z * z);
    }
    // Inverse Gaussian(μ = t/m, shape λ = t²), Michael–Schucany–Haas.
    let mu = t / mass;
    let lambda = t * t;
    let nu = z * z;
    let x = mu + mu * mu * nu / (2.0 * lambda) - mu / (2.0 * lambda) * (4.0 * mu * lambda * nu + mu * mu * nu * nu).sqrt();
    let u: f64 = rng.random();
    if u <= mu / (mu + x) {
        x
    } else {
        mu * mu / x
    }
}

impl JumpLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpLaw::Pareto { alpha, y0 } => y0 * rng::open01(rng).powf(-1.0 / alpha),
            JumpLaw::Point { a } => *a,
            JumpLaw::Table { edges, cumulative, exponents, tail_exponent } => {
                let total = *cumulative.last().expect("non-empty table");
                let target = rng::open01(rng) * total;
                let k = cumulative.partition_point(|&c| c < target);
                let u = rng::open01(rng);
                if k >= edges.len() - 1 {
                    // Pareto tail beyond the last edge.
                    let g = tail_exponent.expect("tail mass implies a tail exponent");
                    return edges[edges.len() - 1] * u.powf(-1.0 / g);
                }
                power_law_in_cell(edges[k], edges[k + 1], exponents[k], u)
            }
        }
    }
}

/// Inverse CDF inside [a, b] for density ∝ y^{−1−γ}.
fn power_law_in_cell(a: f64, b: f64, gamma: f64, u: f64) -> f64 {
    if gamma.abs() < 1e-9 {
        return a * (b / a).powf(u);
    }
    let (pa, pb) = (a.powf(-gamma), b.powf(-gamma));
    (pa - u * (pa - pb)).powf(-1.0 / gamma)
}

fn build_compound_poisson(psi: &BernsteinFunction, y0: f64) -> Result<CompoundPoisson> {
    let measure = match &psi.measure {
        None => {
            return Ok(CompoundPoisson { intensity: 0.0, drift: psi.drift, law: JumpLaw::Point { a: 0.0 } });
        }
        Some(m) => m,
    };
    match measure {
        LevyMeasure::CompoundExp { a } => {
            if *a >= y0 {
                Ok(CompoundPoisson { intensity: 1.0, drift: psi.drift, law: JumpLaw::Point { a: *a } })
            } else {
                Ok(CompoundPoisson { intensity: 0.0, drift: psi.drift + a, law: JumpLaw::Point { a: 0.0 } })
            }
        }
        LevyMeasure::StableDensity { alpha, scale } => {
            let intensity = scale / alpha * y0.powf(-alpha);
            let small = scale * y0.powf(1.0 - alpha) / (1.0 - alpha);
            Ok(CompoundPoisson { intensity, drift: psi.drift + small, law: JumpLaw::Pareto { alpha: *alpha, y0 } })
        }
        LevyMeasure::NumericDensity(nd) => {
            let intensity = measure.tail_mass(y0)?;
            if !intensity.is_finite() || intensity <= 0.0 {
                return Err(invalid(format!("jump intensity above cutoff {y0} is not positive and finite")));
            }
            let small = measure.small_jump_mean(y0)?;
            let hi = nd.y_max.max(y0 * 10.0);
            let cells = 400;
            let ratio = (hi / y0).powf(1.0 / cells as f64);
            let mut edges = vec![y0];
            for k in 1..=cells {
                edges.push(y0 * ratio.powi(k as i32));
            }
            let rho = |y: f64| (nd.density)(y);
            let mut cumulative = Vec::with_capacity(cells + 1);
            let mut exponents = Vec::with_capacity(cells);
            let mut acc = 0.0;
            for w in edges.windows(2) {
                let (a, b) = (w[0], w[1]);
                let (ra, rb) = (rho(a), rho(b));
                let gamma = if ra > 0.0 && rb > 0.0 { -1.0 - (rb / ra).ln() / (b / a).ln() } else { 0.0 };
                let mass = measure.integrate(&|_| 1.0, a, b)?;
                acc += mass;
                cumulative.push(acc);
                exponents.push(gamma);
            }
            let tail = (intensity - acc).max(0.0);
            let last = edges[edges.len() - 1];
            let (r1, r0) = (rho(last), rho(last / ratio));
            let tail_exponent = if tail > 1e-14 * intensity && r1 > 0.0 && r0 > 0.0 {
                let g = -1.0 - (r1 / r0).ln() / ratio.ln();
                if g > 0.0 {
                    cumulative.push(acc + tail);
                    Some(g)
                } else {
                    None
                }
            } else {
                None
            };
            let total = *cumulative.last().unwrap_or(&acc);
            Ok(CompoundPoisson { intensity: total, drift: psi.drift + small, law: JumpLaw::Table { edges, cumulative, exponents, tail_exponent } })
        }
    }
}
