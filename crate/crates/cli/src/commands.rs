//! One function per subcommand; each returns an [`Artifact`] for the writer.

use crate::config::{PsiConfig, RunConfig, ShiftConfig, StrategyConfig};
use crate::error::CliError;
use crate::output::{num, Artifact};
use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};
use subfk::bernstein::BernsteinFunction;
use subfk::field::{FieldSpec, Potential};
use subfk::kernels::{
    assumption_a_check, heat_kernel, hypercontractivity_bound_check, kato_condition3_check, resolvent_kernel, KernelTable, QuadMethod, QuadratureSpec,
};
use subfk::oracle::{ground_energy, psi_of_operator, GridOperator, ShiftMode};
use subfk::semigroup::{diamagnetic_check, estimate_spin, estimate_spinless, kato_condition1_check, DiagnosticSampling, Estimate};
use subfk::spin::SpinCoupling;
use subfk::subordinator::{SamplingStrategy, SubordinatorSpec};

/// |z| above which a Monte-Carlo versus oracle comparison counts as failed.
pub const Z_MAX: f64 = 4.0;
/// Rounding slack for eigenvalue inequalities.
const EIG_SLACK: f64 = 1e-10;

/// Inputs shared by all subcommands.
pub struct Ctx {
    pub config: Option<RunConfig>,
    pub seed: Option<u64>,
}

impl Ctx {
    fn config(&self) -> Result<&RunConfig, CliError> {
        self.config.as_ref().ok_or_else(|| CliError::Usage("this subcommand needs --config".into()))
    }

    /// Config with the command-line seed written into the estimator block.
    fn resolved(&self) -> Result<RunConfig, CliError> {
        let mut cfg = self.config()?.clone();
        if let (Some(seed), Some(e)) = (self.seed, cfg.estimator.as_mut()) {
            e.seed = seed;
        }
        if let (Some(seed), Some(k)) = (self.seed, cfg.kato.as_mut()) {
            k.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Stable,
    Relativistic,
    Linear,
    OneMinusExp,
    HyperbolicK1,
}

/// Ψ given inline; falls back to the config file when `--family` is absent.
#[derive(Debug, Clone, Default, Args)]
pub struct PsiArgs {
    #[arg(long = "family", visible_alias = "psi", value_enum)]
    pub family: Option<Family>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
}

impl PsiArgs {
    fn resolve(&self, cfg: Option<&RunConfig>) -> Result<PsiConfig, CliError> {
        let need = |v: Option<f64>, flag: &str, fam: &str| v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for --family {fam}")));
        Ok(match self.family {
            Some(Family::Stable) => PsiConfig::Stable { alpha: need(self.alpha, "alpha", "stable")? },
            Some(Family::Relativistic) => PsiConfig::Relativistic { m: need(self.m, "m", "relativistic")? },
            Some(Family::Linear) => PsiConfig::Linear { b: self.b.unwrap_or(1.0) },
            Some(Family::OneMinusExp) => PsiConfig::OneMinusExp { a: need(self.a, "a", "one-minus-exp")? },
            Some(Family::HyperbolicK1) => PsiConfig::HyperbolicK1 { a: need(self.a, "a", "hyperbolic-k1")?, b: need(self.b, "b", "hyperbolic-k1")? },
            None => cfg.map(|c| c.psi.clone()).ok_or_else(|| CliError::Usage("give --family or --config".into()))?,
        })
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(x)?)
}

fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

// ---------------------------------------------------------------- bernstein-check

#[derive(Debug, Clone, Args)]
pub struct BernsteinArgs {
    #[command(flatten)]
    pub psi: PsiArgs,
    /// Times t at which e^{−tΨ} is tested for complete monotonicity.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
    pub t_list: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    pub max_order: usize,
    /// Geometric grid u_min..u_max with this many points.
    #[arg(long, default_value_t = 48)]
    pub n_grid: usize,
    #[arg(long, default_value_t = 0.01)]
    pub u_min: f64,
    #[arg(long, default_value_t = 100.0)]
    pub u_max: f64,
}

pub fn bernstein_check(ctx: &Ctx, args: &BernsteinArgs) -> Result<Artifact, CliError> {
    let psi_cfg = args.psi.resolve(ctx.config.as_ref())?;
    let psi = psi_cfg.build()?;
    if !(args.u_min > 0.0 && args.u_max > args.u_min && args.n_grid >= 2) {
        return Err(CliError::Usage("need 0 < u_min < u_max and n_grid >= 2".into()));
    }
    let ratio = (args.u_max / args.u_min).powf(1.0 / (args.n_grid - 1) as f64);
    let grid: Vec<f64> = (0..args.n_grid).map(|k| args.u_min * ratio.powi(k as i32)).collect();
    let report = psi.check_complete_monotonicity(&grid, &args.t_list, args.max_order)?;
    let constants = if psi.has_triplet() { psi.linear_bound_constants().ok() } else { None };
    let rows = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.function.clone(),
                c.t.map(num).unwrap_or_default(),
                c.order.to_string(),
                num(c.min_signed),
                num(c.tolerance),
                c.violations.to_string(),
                c.passed.to_string(),
            ]
        })
        .collect();
    Ok(Artifact {
        command: "bernstein-check",
        seed: None,
        config: json!({
            "psi": to_value(&psi_cfg)?, "t_list": args.t_list, "max_order": args.max_order,
            "n_grid": args.n_grid, "u_min": args.u_min, "u_max": args.u_max,
        }),
        result: json!({
            "psi": psi.label(),
            "passed": report.passed,
            "failed_checks": report.checks.iter().filter(|c| !c.passed).count(),
            "linear_bound_constants": constants.map(|(c1, c2)| json!({ "c1": c1, "c2": c2 })),
        }),
        csv_header: vec!["function", "t", "order", "min_signed", "tolerance", "violations", "passed"],
        csv_rows: rows,
        passed: report.passed,
    })
}

// ---------------------------------------------------------------- sample-subordinator

#[derive(Debug, Clone, Args)]
pub struct SubordinatorArgs {
    #[command(flatten)]
    pub psi: PsiArgs,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    /// Laplace variables u in E[e^{−u T_t}].
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
    pub u: Vec<f64>,
    /// Force compound-Poisson sampling with this jump cutoff.
    #[arg(long)]
    pub cutoff: Option<f64>,
}

pub fn sample_subordinator(ctx: &Ctx, args: &SubordinatorArgs) -> Result<Artifact, CliError> {
    let psi_cfg = args.psi.resolve(ctx.config.as_ref())?;
    let strategy = match (args.cutoff, ctx.config.as_ref()) {
        (Some(cutoff), _) => StrategyConfig::CompoundPoisson { cutoff },
        (None, Some(c)) if args.psi.family.is_none() => c.strategy.clone(),
        _ => StrategyConfig::Auto,
    };
    let psi = psi_cfg.build()?;
    let spec = match strategy {
        StrategyConfig::Auto => SubordinatorSpec::auto(psi)?,
        StrategyConfig::CompoundPoisson { cutoff } => SubordinatorSpec::new(psi, SamplingStrategy::CompoundPoissonPlusDrift { cutoff })?,
    };
    let seed = ctx.seed.unwrap_or(1);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (k, &u) in args.u.iter().enumerate() {
        let r = spec.laplace_check(u, args.t, args.n, seed.wrapping_add(k as u64))?;
        worst = worst.max(r.z_score.abs());
        rows.push(vec![num(r.u), num(r.t), r.n.to_string(), num(r.mc_mean), num(r.stderr), num(r.analytic), num(r.z_score)]);
    }
    let passed = worst <= Z_MAX;
    Ok(Artifact {
        command: "sample-subordinator",
        seed: Some(seed),
        config: json!({ "psi": to_value(&psi_cfg)?, "strategy": to_value(&strategy)?, "t": args.t, "n": args.n, "u": args.u }),
        result: json!({ "psi": spec.psi.label(), "max_abs_z": worst, "z_max": Z_MAX, "passed": passed }),
        csv_header: vec!["u", "t", "n", "mc_mean", "stderr", "analytic", "z"],
        csv_rows: rows,
        passed,
    })
}

// ---------------------------------------------------------------- estimate / oracle-compare / diamagnetic

/// Everything needed to run one Feynman-Kac estimate from a config.
struct Problem {
    cfg: RunConfig,
    psi: BernsteinFunction,
    spec: SubordinatorSpec,
    field: FieldSpec,
    v: Potential,
    coupling: Option<SpinCoupling>,
    shift: f64,
}

impl Problem {
    fn build(ctx: &Ctx) -> Result<Self, CliError> {
        let cfg = ctx.resolved()?;
        let psi = cfg.psi()?;
        let spec = cfg.subordinator()?;
        let field = cfg.field()?;
        let v = cfg.potential()?;
        let coupling = cfg.coupling(&field)?;
        let shift = match (&cfg.spectral_shift, &coupling) {
            (ShiftConfig::None, _) | (_, None) => 0.0,
            (ShiftConfig::Fixed(s), Some(_)) => *s,
            (ShiftConfig::Oracle, Some(c)) => {
                let o = cfg.oracle()?;
                let op = GridOperator::kinetic(o.grid(cfg.dim)?, &field, o.discretization())?.with_spin(c)?;
                ground_energy(&op)?.min(0.0)
            }
        };
        Ok(Self { cfg, psi, spec, field, v, coupling, shift })
    }

    fn estimate(&self) -> Result<Estimate, CliError> {
        let ecfg = self.cfg.estimator()?;
        let (f, g) = (self.cfg.f()?, self.cfg.g()?);
        Ok(match &self.coupling {
            None => estimate_spinless(&self.spec, &self.field, &self.v, &f.build()?, &g.build()?, &ecfg)?,
            Some(c) => {
                let p = c.config.p;
                estimate_spin(&self.spec, &self.field, c, &self.v, &f.build_spin(p)?, &g.build_spin(p)?, &ecfg, self.shift)?
            }
        })
    }

    /// (f, e^{−t(Ψ(h − shift) + V)} g) on the oracle grid.
    fn oracle(&self) -> Result<Complex64, CliError> {
        let o = self.cfg.oracle()?;
        let grid = o.grid(self.cfg.dim)?;
        let t = self.cfg.estimator()?.t;
        let kin = GridOperator::kinetic(grid, &self.field, o.discretization())?;
        let (f, g) = (self.cfg.f()?, self.cfg.g()?);
        Ok(match &self.coupling {
            None => {
                let h = psi_of_operator(&kin, &self.psi, ShiftMode::None)?.0.plus_potential(&self.v)?;
                let (f, g) = (f.build()?, g.build()?);
                let fv = grid.sample(|x| Complex64::new(f.eval(x), 0.0));
                let gv = grid.sample(|x| Complex64::new(g.eval(x), 0.0));
                h.spectrum()?.matrix_element(&fv, &gv, t)
            }
            Some(c) => {
                let p = c.config.p;
                let h = psi_of_operator(&kin.with_spin(c)?, &self.psi, ShiftMode::Fixed(self.shift))?.0.plus_potential(&self.v)?;
                let (f, g) = (f.build_spin(p)?, g.build_spin(p)?);
                let fv = grid.sample_spinor(p, |x, a| f.eval(x, a));
                let gv = grid.sample_spinor(p, |x, a| g.eval(x, a));
                h.spectrum()?.matrix_element(&fv, &gv, t)
            }
        })
    }

    fn seed(&self) -> Option<u64> {
        self.cfg.estimator.as_ref().map(|e| e.seed)
    }

    fn config_value(&self) -> Result<Value, CliError> {
        to_value(&self.cfg)
    }
}

fn estimate_json(est: &Estimate) -> Value {
    json!({
        "mean": complex(est.mean),
        "stderr": est.stderr,
        "n": est.n,
        "companion_abs_mean": est.companion_abs_mean,
        "companion_stderr": est.companion_stderr,
    })
}

fn chunk_rows(est: &Estimate) -> Vec<Vec<String>> {
    est.chunks.iter().enumerate().map(|(k, c)| vec![k.to_string(), c.n.to_string(), num(c.mean.re), num(c.mean.im), num(c.abs_mean)]).collect()
}

const CHUNK_HEADER: [&str; 5] = ["chunk", "n", "mean_re", "mean_im", "abs_mean"];

fn z_score(est: &Estimate, exact: Complex64) -> f64 {
    let d = (est.mean - exact).norm();
    if est.stderr > 0.0 {
        d / est.stderr
    } else if d < 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn estimate(ctx: &Ctx) -> Result<Artifact, CliError> {
    let pb = Problem::build(ctx)?;
    let est = pb.estimate()?;
    Ok(Artifact {
        command: "estimate",
        seed: pb.seed(),
        config: pb.config_value()?,
        result: json!({
            "psi": pb.psi.label(), "field": pb.field.label, "potential": pb.v.label,
            "spin": pb.coupling.as_ref().map(|c| c.label.clone()), "spectral_shift": pb.shift,
            "estimate": estimate_json(&est),
        }),
        csv_header: CHUNK_HEADER.to_vec(),
        csv_rows: chunk_rows(&est),
        passed: true,
    })
}

pub fn oracle_compare(ctx: &Ctx) -> Result<Artifact, CliError> {
    let pb = Problem::build(ctx)?;
    let est = pb.estimate()?;
    let exact = pb.oracle()?;
    let z = z_score(&est, exact);
    let passed = z <= Z_MAX;
    Ok(Artifact {
        command: "oracle-compare",
        seed: pb.seed(),
        config: pb.config_value()?,
        result: json!({
            "psi": pb.psi.label(), "spectral_shift": pb.shift,
            "estimate": estimate_json(&est), "oracle": complex(exact), "z": z, "z_max": Z_MAX, "passed": passed,
        }),
        csv_header: CHUNK_HEADER.to_vec(),
        csv_rows: chunk_rows(&est),
        passed,
    })
}

pub fn diamagnetic(ctx: &Ctx) -> Result<Artifact, CliError> {
    let pb = Problem::build(ctx)?;
    let est = pb.estimate()?;
    let coupled = diamagnetic_check(&est);
    let mut passed = coupled.holds;
    let mut rows = vec![vec!["coupled".to_string(), num(coupled.modulus), num(coupled.companion), coupled.holds.to_string()]];
    let operator = match &pb.cfg.oracle {
        None => Value::Null,
        Some(o) => {
            let grid = o.grid(pb.cfg.dim)?;
            let kin = GridOperator::kinetic(grid, &pb.field, o.discretization())?;
            let free = GridOperator::kinetic(grid, &FieldSpec::zero(pb.cfg.dim), o.discretization())?;
            let (mut checks, mut out) = (Vec::new(), serde_json::Map::new());
            match &pb.coupling {
                None => {
                    // inf spec(Ψ(½p²) + V) ≤ inf spec(Ψ(h) + V).
                    let e = ground_energy(&psi_of_operator(&kin, &pb.psi, ShiftMode::None)?.0.plus_potential(&pb.v)?)?;
                    let e0 = ground_energy(&psi_of_operator(&free, &pb.psi, ShiftMode::None)?.0.plus_potential(&pb.v)?)?;
                    checks.push(("psi_h_plus_v", e0, e));
                }
                Some(c) => {
                    // inf h⁰ ≤ inf h, with h⁰ field-free and off-diagonals −|U_β|.
                    let h = kin.with_spin(c)?;
                    let h0 = free.with_spin(&c.abs_offdiag())?;
                    let (e, e0) = (ground_energy(&h)?, ground_energy(&h0)?);
                    checks.push(("h_spin", e0, e));
                    let s = ShiftMode::Fixed(e0.min(0.0));
                    let lhs = ground_energy(&psi_of_operator(&h0, &pb.psi, s)?.0.plus_potential(&pb.v)?)?;
                    let rhs = ground_energy(&psi_of_operator(&h, &pb.psi, s)?.0.plus_potential(&pb.v)?)?;
                    checks.push(("psi_h_spin_plus_v", lhs, rhs));
                }
            }
            for (name, lower, upper) in checks {
                let holds = lower <= upper + EIG_SLACK;
                passed &= holds;
                rows.push(vec![name.to_string(), num(lower), num(upper), holds.to_string()]);
                out.insert(name.into(), json!({ "field_free_inf": lower, "magnetic_inf": upper, "holds": holds }));
            }
            Value::Object(out)
        }
    };
    Ok(Artifact {
        command: "diamagnetic",
        seed: pb.seed(),
        config: pb.config_value()?,
        result: json!({
            "estimate": estimate_json(&est),
            "coupled": { "modulus": coupled.modulus, "companion": coupled.companion, "gap": coupled.gap, "holds": coupled.holds },
            "operator": operator,
            "passed": passed,
        }),
        csv_header: vec!["check", "lower", "upper", "holds"],
        csv_rows: rows,
        passed,
    })
}

// ---------------------------------------------------------------- kernel

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Cosine,
    Hankel,
    Sine,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub psi: PsiArgs,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Heat kernel p_t.
    #[arg(long, conflicts_with = "lambda")]
    pub t: Option<f64>,
    /// Resolvent kernel Π_λ.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 101)]
    pub n_r: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
}

pub fn kernel(ctx: &Ctx, args: &KernelArgs) -> Result<Artifact, CliError> {
    let psi_cfg = args.psi.resolve(ctx.config.as_ref())?;
    let psi = psi_cfg.build()?;
    let d = args.d;
    if !(args.r_max > 0.0) || args.n_r < 2 {
        return Err(CliError::Usage("need r_max > 0 and n_r >= 2".into()));
    }
    let mut q = QuadratureSpec::auto(d);
    q.method = match args.method {
        MethodArg::Auto => q.method,
        MethodArg::Cosine => QuadMethod::CosineTransform1D,
        MethodArg::Hankel => QuadMethod::HankelRadial,
        MethodArg::Sine => QuadMethod::SinFormula3D,
    };
    let config = json!({
        "psi": to_value(&psi_cfg)?, "d": d, "t": args.t, "lambda": args.lambda,
        "r_max": args.r_max, "n_r": args.n_r, "method": format!("{:?}", q.method),
    });
    let step = args.r_max / (args.n_r - 1) as f64;
    let table: KernelTable = match (args.t, args.lambda) {
        (Some(t), None) => {
            let report = assumption_a_check(&psi, t, d)?;
            if !report.finite {
                return Ok(Artifact {
                    command: "kernel",
                    seed: None,
                    config,
                    result: json!({
                        "psi": psi.label(), "passed": false,
                        "assumption_a": { "finite": false, "partial_value": report.value, "radius": report.radius, "last_block": report.last_block },
                    }),
                    csv_header: vec!["r", "value"],
                    csv_rows: Vec::new(),
                    passed: false,
                });
            }
            let radii: Vec<f64> = (0..args.n_r).map(|k| k as f64 * step).collect();
            heat_kernel(&psi, t, &radii, d, &q)?
        }
        (None, Some(lambda)) => {
            // The resolvent is singular at the origin for d ≥ 2, so the grid starts one step out.
            let radii: Vec<f64> = (1..=args.n_r).map(|k| k as f64 * args.r_max / args.n_r as f64).collect();
            resolvent_kernel(&psi, lambda, &radii, d, &q)?
        }
        _ => return Err(CliError::Usage("give exactly one of --t or --lambda".into())),
    };
    let diag = table.diagnostics;
    let mass = matches!(table.kind, subfk::kernels::KernelKind::Heat { .. }).then(|| table.mass());
    let rows = table.radii.iter().zip(&table.values).map(|(r, v)| vec![num(*r), num(*v)]).collect();
    Ok(Artifact {
        command: "kernel",
        seed: None,
        config,
        result: json!({
            "psi": psi.label(),
            "passed": true,
            "mass_in_table": mass,
            "diagnostics": {
                "method": format!("{:?}", diag.method),
                "max_frequency": if diag.max_frequency.is_finite() { json!(diag.max_frequency) } else { json!("inf") },
                "tail_estimate": diag.tail_estimate,
                "max_error": diag.max_error,
            },
            "tail_power_law": table.tail_power_law().map(|(a, k)| json!({ "amplitude": a, "exponent": k })),
        }),
        csv_header: vec!["r", "value"],
        csv_rows: rows,
        passed: true,
    })
}

// ---------------------------------------------------------------- kato

pub fn kato(ctx: &Ctx) -> Result<Artifact, CliError> {
    let cfg = ctx.resolved()?;
    let kb = cfg.kato.clone().ok_or_else(|| CliError::Config("missing key `kato`".into()))?;
    let psi = cfg.psi()?;
    let spec = cfg.subordinator()?;
    let v = cfg.potential()?;
    let sampling = DiagnosticSampling { n_paths: kb.n_paths, seed: kb.seed, ..Default::default() };
    let k1 = kato_condition1_check(&v, &spec, &kb.t_grid, &kb.probes, sampling)?;
    let k3 = kato_condition3_check(&v, &psi, &kb.deltas, &kb.probes, &QuadratureSpec::auto(cfg.dim))?;
    let agree = k1.decays == k3.decays;
    let mut rows = Vec::new();
    for (p, row) in k1.values.iter().enumerate() {
        for (k, val) in row.iter().enumerate() {
            rows.push(vec!["1".into(), p.to_string(), num(k1.t_grid[k]), num(*val), num(k1.stderr[p][k])]);
        }
    }
    for (p, row) in k3.values.iter().enumerate() {
        for (k, val) in row.iter().enumerate() {
            rows.push(vec!["3".into(), p.to_string(), num(k3.deltas[k]), num(*val), String::new()]);
        }
    }
    Ok(Artifact {
        command: "kato",
        seed: Some(kb.seed),
        config: to_value(&cfg)?,
        result: json!({
            "psi": psi.label(), "potential": v.label,
            "condition1": { "t_grid": k1.t_grid, "sup_values": k1.sup_values, "sup_stderr": k1.sup_stderr, "vanishes": k1.decays },
            "condition3": { "deltas": k3.deltas, "sup_values": k3.sup_values, "vanishes": k3.decays },
            "verdicts_agree": agree,
        }),
        csv_header: vec!["condition", "probe", "scale", "value", "stderr"],
        csv_rows: rows,
        passed: agree,
    })
}

// ---------------------------------------------------------------- hyper-check

pub fn hyper_check(ctx: &Ctx) -> Result<Artifact, CliError> {
    let cfg = ctx.resolved()?;
    let psi = cfg.psi()?;
    let v = cfg.potential()?;
    let o = cfg.oracle()?;
    let grid = o.grid(cfg.dim)?;
    let f = cfg.f()?.build()?;
    let fv = grid.sample(|x| Complex64::new(f.eval(x), 0.0));
    let times = cfg.hyper_times.clone().unwrap_or_else(|| vec![0.3, 1.0]);
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut passed = true;
    for &t in &times {
        let r = hypercontractivity_bound_check(grid, &psi, &v, t, &fv)?;
        passed &= r.holds;
        rows.push(vec![num(t), num(r.sup_pt_f), num(r.bound_2), num(r.bound_1), num(r.c_t), num(r.p_inf), r.holds.to_string()]);
        reports.push(json!({
            "t": t, "sup_pt_f": r.sup_pt_f, "bound_2": r.bound_2, "bound_1": r.bound_1,
            "c_t": r.c_t, "c_half": r.c_half, "p_inf": r.p_inf, "p_half_inf": r.p_half_inf, "holds": r.holds,
        }));
    }
    Ok(Artifact {
        command: "hyper-check",
        seed: None,
        config: to_value(&cfg)?,
        result: json!({ "psi": psi.label(), "potential": v.label, "times": reports, "passed": passed }),
        csv_header: vec!["t", "sup_pt_f", "bound_2", "bound_1", "c_t", "p_inf", "holds"],
        csv_rows: rows,
        passed,
    })
}
