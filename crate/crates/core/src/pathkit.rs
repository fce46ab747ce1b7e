//! Brownian paths, subordinated paths and the path functionals along them.

use crate::error::{invalid, Result};
use crate::field::{FieldSpec, Potential};
use crate::rng;
use crate::subordinator::{validate_grid, SubordinatorPath, SubordinatorSpec};
use rand::Rng;

/// Brownian trajectory sampled on an ascending time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub dim: usize,
    pub times: Vec<f64>,
    /// Row-major positions, `dim` entries per node.
    pub positions: Vec<f64>,
}

impl BrownianPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    #[inline]
    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn start(&self) -> &[f64] {
        self.position(0)
    }

    pub fn end(&self) -> &[f64] {
        self.position(self.len() - 1)
    }

    /// Node index whose time is the largest one not exceeding `s`.
    pub fn index_at(&self, s: f64) -> usize {
        self.times.partition_point(|&t| t <= s).saturating_sub(1)
    }

    /// Inserts the given times by Brownian-bridge interpolation; times already
    /// on the grid are left alone.
    pub fn refine<R: Rng + ?Sized>(&mut self, new_times: &[f64], rng: &mut R) -> Result<()> {
        let horizon = self.horizon();
        for &s in new_times {
            if !(s >= 0.0 && s <= horizon) {
                return Err(invalid(format!("refinement time {s} outside [0, {horizon}]")));
            }
            let k = self.times.partition_point(|&t| t < s);
            if k < self.times.len() && self.times[k] == s {
                continue;
            }
            let (ta, tb) = (self.times[k - 1], self.times[k]);
            let w = (s - ta) / (tb - ta);
            let sd = ((s - ta) * (tb - s) / (tb - ta)).sqrt();
            let d = self.dim;
            let point: Vec<f64> = (0..d)
                .map(|i| {
                    let (xa, xb) = (self.positions[(k - 1) * d + i], self.positions[k * d + i]);
                    xa + w * (xb - xa) + sd * rng::normal(rng)
                })
                .collect();
            self.times.insert(k, s);
            self.positions.splice(k * d..k * d, point);
        }
        Ok(())
    }
}

/// Brownian motion from `x0` on `n_steps` equal steps over `[0, horizon]`.
pub fn sample_brownian<R: Rng + ?Sized>(x0: &[f64], horizon: f64, n_steps: usize, rng: &mut R) -> Result<BrownianPath> {
    if n_steps == 0 {
        return Err(invalid("n_steps must be at least 1"));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("horizon must be finite and nonnegative, got {horizon}")));
    }
    if horizon == 0.0 {
        return Ok(BrownianPath { dim: x0.len(), times: vec![0.0], positions: x0.to_vec() });
    }
    sample_brownian_on(x0, &uniform_grid(horizon, n_steps), rng)
}

/// Brownian motion from `x0` on an explicit grid starting at 0.
pub fn sample_brownian_on<R: Rng + ?Sized>(x0: &[f64], times: &[f64], rng: &mut R) -> Result<BrownianPath> {
    if x0.is_empty() {
        return Err(invalid("starting point must have positive dimension"));
    }
    validate_grid(times)?;
    let d = x0.len();
    let mut positions = Vec::with_capacity(times.len() * d);
    positions.extend_from_slice(x0);
    for (k, w) in times.windows(2).enumerate() {
        let sd = (w[1] - w[0]).sqrt();
        for i in 0..d {
            let prev = positions[k * d + i];
            positions.push(if sd > 0.0 { prev + sd * rng::normal(rng) } else { prev });
        }
    }
    Ok(BrownianPath { dim: d, times: times.to_vec(), positions })
}

/// `n + 1` equally spaced points on `[0, t]` with the last one exactly `t`.
pub fn uniform_grid(t: f64, n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=n).map(|j| t * j as f64 / n as f64).collect();
    g[n] = t;
    g
}

/// X_s = B_{T_s}: a Brownian path whose grid contains every subordination node.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatedPath {
    pub brownian: BrownianPath,
    pub subordinator: SubordinatorPath,
    node_index: Vec<usize>,
}

impl SubordinatedPath {
    /// T_t, which is also the Brownian horizon.
    pub fn horizon(&self) -> f64 {
        self.subordinator.terminal()
    }

    pub fn outer_times(&self) -> &[f64] {
        &self.subordinator.times
    }

    /// Brownian node index of T_{s_j}.
    pub fn node_index(&self, j: usize) -> usize {
        self.node_index[j]
    }

    /// X_{s_j} at the j-th outer node.
    pub fn node(&self, j: usize) -> &[f64] {
        self.brownian.position(self.node_index[j])
    }

    /// X_s with s rounded down to the outer grid (exact at nodes).
    pub fn lookup(&self, s: f64) -> &[f64] {
        let j = self.subordinator.times.partition_point(|&t| t <= s).saturating_sub(1);
        self.node(j)
    }

    pub fn start(&self) -> &[f64] {
        self.brownian.start()
    }

    pub fn end(&self) -> &[f64] {
        self.brownian.end()
    }
}

/// Samples T on a uniform outer grid, then B on a grid containing every T_{s_j}.
pub fn subordinate<R: Rng + ?Sized>(
    x0: &[f64],
    t: f64,
    spec: &SubordinatorSpec,
    n_outer: usize,
    n_inner: usize,
    rng: &mut R,
) -> Result<SubordinatedPath> {
    if n_outer == 0 {
        return Err(invalid("n_outer must be at least 1"));
    }
    let sub = spec.sample_path(&uniform_grid(t, n_outer), rng)?;
    subordinate_path(x0, sub, n_inner, &[], rng)
}

/// Brownian motion on `[0, T_t]` sampled on the subordination nodes, `n_inner`
/// substeps per segment and the extra times (for example spin jump times).
pub fn subordinate_path<R: Rng + ?Sized>(
    x0: &[f64],
    sub: SubordinatorPath,
    n_inner: usize,
    extra_times: &[f64],
    rng: &mut R,
) -> Result<SubordinatedPath> {
    if n_inner == 0 {
        return Err(invalid("n_inner must be at least 1"));
    }
    if !sub.is_valid() {
        return Err(invalid("subordinator path must start at 0 and be non-decreasing"));
    }
    let horizon = sub.terminal();
    if extra_times.iter().any(|&s| !(s >= 0.0 && s <= horizon)) {
        return Err(invalid(format!("extra times must lie in [0, {horizon}]")));
    }
    if extra_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("extra times must be ascending"));
    }

    let mut times = vec![0.0];
    let mut node_index = vec![0usize];
    let mut extra = extra_times.iter().copied().peekable();
    let push = |times: &mut Vec<f64>, s: f64| {
        if s > *times.last().unwrap() {
            times.push(s);
        }
    };
    for w in sub.values.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a {
            for k in 1..=n_inner {
                let s = if k == n_inner { b } else { a + (b - a) * k as f64 / n_inner as f64 };
                while let Some(&e) = extra.peek() {
                    if e < s {
                        push(&mut times, e);
                        extra.next();
                    } else {
                        break;
                    }
                }
                push(&mut times, s);
            }
        }
        node_index.push(times.len() - 1);
    }
    for e in extra {
        push(&mut times, e);
    }
    let brownian = sample_brownian_on(x0, &times, rng)?;
    Ok(SubordinatedPath { brownian, subordinator: sub, node_index })
}

/// Stratonovich integral ∫a(B)∘dB and its Itô + ½∫div a cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StratonovichIntegral {
    pub midpoint: f64,
    pub ito_plus_div: Option<f64>,
}

/// Σ ½(a(B_k) + a(B_{k+1}))·ΔB_k over the whole path.
pub fn stratonovich_integral(path: &BrownianPath, field: &FieldSpec) -> Result<StratonovichIntegral> {
    if path.len() < 2 {
        return Err(invalid("stratonovich_integral needs at least two nodes"));
    }
    if path.dim != field.dim {
        return Err(invalid(format!("path dimension {} does not match field dimension {}", path.dim, field.dim)));
    }
    if field.is_zero() {
        return Ok(StratonovichIntegral { midpoint: 0.0, ito_plus_div: field.div_a.as_ref().map(|_| 0.0) });
    }
    let d = path.dim;
    let mut a_prev = vec![0.0; d];
    let mut a_next = vec![0.0; d];
    field.eval(path.position(0), &mut a_prev);
    let (mut strat, mut ito, mut div) = (0.0, 0.0, 0.0);
    for k in 0..path.len() - 1 {
        let (x, y) = (path.position(k), path.position(k + 1));
        field.eval(y, &mut a_next);
        for i in 0..d {
            let db = y[i] - x[i];
            strat += 0.5 * (a_prev[i] + a_next[i]) * db;
            ito += a_prev[i] * db;
        }
        if let Some(dv) = &field.div_a {
            div += dv(x) * (path.times[k + 1] - path.times[k]);
        }
        std::mem::swap(&mut a_prev, &mut a_next);
    }
    Ok(StratonovichIntegral { midpoint: strat, ito_plus_div: field.div_a.as_ref().map(|_| ito + 0.5 * div) })
}

/// Time rule for ∫₀^t V(X_s) ds on the outer grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeRule {
    #[default]
    Trapezoid,
    LeftRiemann,
    RightRiemann,
}

/// ∫₀^t V(X_s) ds on the outer clock of the subordinated path.
pub fn potential_integral(spath: &SubordinatedPath, v: &Potential, rule: TimeRule) -> Result<f64> {
    let times = spath.outer_times();
    let t = *times.last().unwrap_or(&0.0);
    if let Some(c) = v.constant_value() {
        return Ok(c * t);
    }
    let mut prev = v.eval_checked(spath.node(0))?;
    let mut total = 0.0;
    for j in 0..times.len() - 1 {
        let next = v.eval_checked(spath.node(j + 1))?;
        let dt = times[j + 1] - times[j];
        total += dt
            * match rule {
                TimeRule::Trapezoid => 0.5 * (prev + next),
                TimeRule::LeftRiemann => prev,
                TimeRule::RightRiemann => next,
            };
        prev = next;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::BernsteinFunction;
    use crate::field::Profile;
    use crate::rng::stream;
    use crate::stats::{z_score, RunningStats};
    use crate::subordinator::SamplingStrategy;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn unit_step_increment_has_unit_variance() {
        let stats: RunningStats = (0..100_000)
            .map(|i| {
                let p = sample_brownian(&[0.0], 1.0, 1, &mut stream(1, i)).unwrap();
                p.end()[0].powi(2)
            })
            .collect();
        assert!((stats.mean - 1.0).abs() < 0.02, "{}", stats.mean);
    }

    #[test]
    fn zero_horizon_is_a_single_point() {
        let p = sample_brownian(&[1.0, 2.0], 0.0, 5, &mut stream(0, 0)).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.start(), &[1.0, 2.0]);
        assert!(sample_brownian(&[0.0], 1.0, 0, &mut stream(0, 0)).is_err());
    }

    #[test]
    fn planar_displacement_is_centered() {
        let mut sx = RunningStats::new();
        let mut sy = RunningStats::new();
        for i in 0..100_000 {
            let p = sample_brownian(&[0.0, 0.0], 2.0, 4, &mut stream(2, i)).unwrap();
            sx.push(p.end()[0]);
            sy.push(p.end()[1]);
        }
        assert!(sx.mean.abs() < 3.0 * sx.stderr());
        assert!(sy.mean.abs() < 3.0 * sy.stderr());
    }

    #[test]
    fn same_stream_same_path() {
        let a = sample_brownian(&[0.0, 1.0], 1.5, 20, &mut stream(9, 4)).unwrap();
        let b = sample_brownian(&[0.0, 1.0], 1.5, 20, &mut stream(9, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bridge_refinement_has_brownian_covariance() {
        let (mut s03, mut c) = (RunningStats::new(), RunningStats::new());
        for i in 0..100_000 {
            let mut r = stream(3, i);
            let mut p = sample_brownian(&[0.0], 1.0, 1, &mut r).unwrap();
            p.refine(&[0.3, 0.3, 1.0], &mut r).unwrap();
            assert_eq!(p.times, vec![0.0, 0.3, 1.0]);
            let (x, y) = (p.position(1)[0], p.end()[0]);
            s03.push(x * x);
            c.push(x * y);
        }
        assert!(z_score(s03.mean, 0.3, s03.stderr()).abs() < 4.0);
        assert!(z_score(c.mean, 0.3, c.stderr()).abs() < 4.0);
    }

    #[test]
    fn subordination_nodes_are_brownian_nodes() {
        let spec = SubordinatorSpec::auto(BernsteinFunction::stable(0.5).unwrap()).unwrap();
        for i in 0..200 {
            let mut r = stream(4, i);
            let sp = subordinate(&[0.5, -0.5], 1.0, &spec, 16, 3, &mut r).unwrap();
            assert_eq!(sp.horizon(), sp.brownian.horizon());
            for (j, &tv) in sp.subordinator.values.iter().enumerate() {
                assert_eq!(sp.brownian.times[sp.node_index(j)], tv);
            }
            assert_eq!(sp.lookup(0.0), &[0.5, -0.5]);
            assert_eq!(sp.lookup(1.0), sp.end());
        }
    }

    #[test]
    fn extra_times_are_merged() {
        let sub = SubordinatorPath { times: vec![0.0, 0.5, 1.0], values: vec![0.0, 0.0, 2.0] };
        let sp = subordinate_path(&[0.0], sub, 2, &[0.25, 1.0, 1.7, 2.0], &mut stream(0, 0)).unwrap();
        assert_eq!(sp.brownian.times, vec![0.0, 0.25, 1.0, 1.7, 2.0]);
        assert_eq!(sp.node_index(0), 0);
        assert_eq!(sp.node_index(1), 0);
        assert_eq!(sp.node_index(2), 4);
        assert!(subordinate_path(&[0.0], SubordinatorPath { times: vec![0.0, 1.0], values: vec![0.0, 1.0] }, 1, &[1.5], &mut stream(0, 0)).is_err());
    }

    fn char_fn_z(spec: &SubordinatorSpec, xi: f64, seed: u64) -> f64 {
        let t = 1.0;
        let stats: RunningStats = (0..100_000)
            .map(|i| {
                let sp = subordinate(&[0.0, 0.0], t, spec, 1, 1, &mut stream(seed, i)).unwrap();
                (xi * sp.end()[0]).cos()
            })
            .collect();
        let exact = (-t * spec.psi.eval(0.5 * xi * xi).unwrap()).exp();
        z_score(stats.mean, exact, stats.stderr())
    }

    #[test]
    fn characteristic_function_matches_psi() {
        let specs = [
            SubordinatorSpec::auto(BernsteinFunction::stable(0.5).unwrap()).unwrap(),
            SubordinatorSpec::auto(BernsteinFunction::relativistic(2.0).unwrap()).unwrap(),
            SubordinatorSpec::auto(BernsteinFunction::relativistic(0.0).unwrap()).unwrap(),
            SubordinatorSpec::new(BernsteinFunction::linear(1.0).unwrap(), SamplingStrategy::DriftOnly).unwrap(),
        ];
        for (k, spec) in specs.iter().enumerate() {
            for (m, xi) in [0.5, 1.0, 2.0].into_iter().enumerate() {
                let z = char_fn_z(spec, xi, 100 + (k * 3 + m) as u64);
                assert!(z.abs() <= 4.0, "{} xi={xi}: z={z}", spec.psi.label());
            }
        }
    }

    #[test]
    fn constant_field_integral_is_displacement() {
        let c = vec![0.3, -1.2];
        let f = FieldSpec::constant(c.clone());
        let p = sample_brownian(&[0.1, 0.2], 2.0, 50, &mut stream(5, 0)).unwrap();
        let s = stratonovich_integral(&p, &f).unwrap();
        let exact = c[0] * (p.end()[0] - p.start()[0]) + c[1] * (p.end()[1] - p.start()[1]);
        assert!((s.midpoint - exact).abs() < 1e-12);
    }

    #[test]
    fn identity_field_integral_telescopes() {
        let f = FieldSpec::linear(1, 1.0);
        let p = sample_brownian(&[0.4], 3.0, 100, &mut stream(5, 1)).unwrap();
        let s = stratonovich_integral(&p, &f).unwrap();
        let exact = 0.5 * (p.end()[0].powi(2) - p.start()[0].powi(2));
        assert!((s.midpoint - exact).abs() < 1e-12);
        assert!(stratonovich_integral(&sample_brownian(&[0.0], 0.0, 1, &mut stream(0, 0)).unwrap(), &f).is_err());
    }

    /// Log-log slope of the mean-square Stratonovich/Itô gap against Δt.
    fn gap_slope(field: &FieldSpec, seed: u64) -> f64 {
        let steps = [100usize, 1_000, 10_000];
        let mut pts = Vec::new();
        for &n in &steps {
            let stats: RunningStats = (0..1_000)
                .map(|i| {
                    let p = sample_brownian(&vec![0.2; field.dim], 1.0, n, &mut stream(seed, i)).unwrap();
                    let s = stratonovich_integral(&p, field).unwrap();
                    (s.midpoint - s.ito_plus_div.unwrap()).powi(2)
                })
                .collect();
            pts.push(((1.0 / n as f64).ln(), stats.mean.ln()));
        }
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn stratonovich_ito_gap_vanishes_at_first_order() {
        let fields = [FieldSpec::linear(1, 1.0), FieldSpec::wavy(3, 1.0).unwrap()];
        for (k, f) in fields.iter().enumerate() {
            let slope = gap_slope(f, 40 + k as u64);
            assert!((slope - 1.0).abs() < 0.15, "{}: slope {slope}", f.label);
        }
    }

    #[test]
    fn rotational_field_gap_is_small() {
        let f = FieldSpec::rotational(3, 2.0, Profile::Gaussian { width: 1.0 }).unwrap();
        let p = sample_brownian(&[0.1, 0.2, 0.0], 1.0, 20_000, &mut stream(6, 0)).unwrap();
        let s = stratonovich_integral(&p, &f).unwrap();
        assert!((s.midpoint - s.ito_plus_div.unwrap()).abs() < 0.05);
    }

    #[test]
    fn constant_potentials_integrate_exactly() {
        let spec = SubordinatorSpec::auto(BernsteinFunction::stable(0.5).unwrap()).unwrap();
        let sp = subordinate(&[0.0], 1.7, &spec, 13, 2, &mut stream(7, 0)).unwrap();
        assert_eq!(potential_integral(&sp, &Potential::constant(1, 1.0), TimeRule::Trapezoid).unwrap(), 1.7);
        assert_eq!(potential_integral(&sp, &Potential::zero(1), TimeRule::RightRiemann).unwrap(), 0.0);
        let one = Potential::new(1, Arc::new(|_: &[f64]| 1.0), "one");
        assert!((potential_integral(&sp, &one, TimeRule::LeftRiemann).unwrap() - 1.7).abs() < 1e-12);
    }

    #[test]
    fn squared_norm_potential_has_brownian_mean() {
        let spec = SubordinatorSpec::new(BernsteinFunction::linear(1.0).unwrap(), SamplingStrategy::DriftOnly).unwrap();
        let v = Potential::harmonic(2, 2f64.sqrt());
        let t = 1.5;
        let stats: RunningStats = (0..100_000)
            .map(|i| {
                let sp = subordinate(&[0.0, 0.0], t, &spec, 10, 1, &mut stream(8, i)).unwrap();
                potential_integral(&sp, &v, TimeRule::Trapezoid).unwrap()
            })
            .collect();
        let exact = 2.0 * t * t / 2.0;
        assert!(z_score(stats.mean, exact, stats.stderr()).abs() < 4.0, "{} vs {exact}", stats.mean);
    }

    #[test]
    fn non_finite_potential_is_reported() {
        let spec = SubordinatorSpec::new(BernsteinFunction::linear(1.0).unwrap(), SamplingStrategy::DriftOnly).unwrap();
        let sp = subordinate(&[0.0], 1.0, &spec, 4, 1, &mut stream(0, 0)).unwrap();
        let pole = Potential::new(1, Arc::new(|x: &[f64]| if x[0] == 0.0 { f64::INFINITY } else { 1.0 }), "pole");
        assert!(matches!(potential_integral(&sp, &pole, TimeRule::Trapezoid), Err(crate::Error::NonFinitePotential { .. })));
    }

    proptest! {
        #[test]
        fn potential_integral_is_linear_and_monotone(seed in 0u64..500, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, h in 0.0f64..3.0) {
            let spec = SubordinatorSpec::auto(BernsteinFunction::relativistic(1.0).unwrap()).unwrap();
            let sp = subordinate(&[0.3, 0.1], 1.0, &spec, 8, 2, &mut stream(seed, 0)).unwrap();
            let v1 = Potential::harmonic(2, 1.0);
            let v2 = Potential::bump(2, 1.0, 0.7, vec![0.0, 0.0]).unwrap();
            let i1 = potential_integral(&sp, &v1, TimeRule::Trapezoid).unwrap();
            let i2 = potential_integral(&sp, &v2, TimeRule::Trapezoid).unwrap();
            let comb = v1.scaled(c1).plus(&v2.scaled(c2));
            let ic = potential_integral(&sp, &comb, TimeRule::Trapezoid).unwrap();
            prop_assert!((ic - (c1 * i1 + c2 * i2)).abs() < 1e-10 * (1.0 + ic.abs()));
            let upper = v2.plus(&Potential::constant(2, h));
            let iu = potential_integral(&sp, &upper, TimeRule::Trapezoid).unwrap();
            prop_assert!(iu >= i2);
        }

        #[test]
        fn subordinated_paths_respect_grid_containment(seed in 0u64..1000, n_outer in 1usize..20, n_inner in 1usize..4) {
            let spec = SubordinatorSpec::auto(BernsteinFunction::one_minus_exp(1.0).unwrap()).unwrap();
            let sp = subordinate(&[0.0], 2.0, &spec, n_outer, n_inner, &mut stream(seed, 1)).unwrap();
            prop_assert_eq!(sp.horizon(), sp.brownian.horizon());
            prop_assert!(sp.brownian.times.windows(2).all(|w| w[1] > w[0]));
            for (j, &tv) in sp.subordinator.values.iter().enumerate() {
                prop_assert_eq!(sp.brownian.times[sp.node_index(j)], tv);
            }
        }
    }
}
