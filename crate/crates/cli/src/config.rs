//! JSON run configuration. Unknown keys are rejected everywhere.

use crate::error::CliError;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use subfk::bernstein::BernsteinFunction;
use subfk::field::{FieldSpec, FourierMode, Potential, Profile};
use subfk::oracle::{Discretization, GridSpec};
use subfk::semigroup::{EstimatorConfig, SpinTestFunction, TestFunction, XSampling};
use subfk::spin::SpinCoupling;
use subfk::subordinator::{SamplingStrategy, SubordinatorSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiConfig {
    Stable { alpha: f64 },
    Relativistic { m: f64 },
    Linear { b: f64 },
    OneMinusExp { a: f64 },
    HyperbolicK1 { a: f64, b: f64 },
}

impl PsiConfig {
    pub fn build(&self) -> subfk::Result<BernsteinFunction> {
        match *self {
            PsiConfig::Stable { alpha } => BernsteinFunction::stable(alpha),
            PsiConfig::Relativistic { m } => BernsteinFunction::relativistic(m),
            PsiConfig::Linear { b } => BernsteinFunction::linear(b),
            PsiConfig::OneMinusExp { a } => BernsteinFunction::one_minus_exp(a),
            PsiConfig::HyperbolicK1 { a, b } => BernsteinFunction::hyperbolic_k1(a, b),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyConfig {
    /// Exact sampler when the family has one, compound Poisson otherwise.
    #[default]
    Auto,
    CompoundPoisson {
        cutoff: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub amplitude: Vec<f64>,
    pub wavevector: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldConfig {
    #[default]
    Zero,
    Constant {
        c: Vec<f64>,
    },
    Linear {
        k: f64,
    },
    Rotational {
        strength: f64,
        width: f64,
    },
    Wavy {
        strength: f64,
    },
    Fourier {
        modes: Vec<ModeConfig>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    Zero,
    Constant {
        c: f64,
    },
    Harmonic {
        omega: f64,
    },
    Bump {
        height: f64,
        width: f64,
        center: Vec<f64>,
    },
    Coulomb {
        charge: f64,
        epsilon: f64,
    },
    Sum {
        terms: Vec<PotentialConfig>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpinBlock {
    /// Constant U and U_β; off-diagonals as [re, im] pairs.
    Constant { p: usize, diag: f64, offdiag: Vec<[f64; 2]> },
    /// Spin-½ coupling of the field's curl (d = 3), optionally ε-regularized.
    Spin12 {
        #[serde(default)]
        epsilon: f64,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeConfig {
    #[default]
    Gaussian,
    FirstHermite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFnConfig {
    pub center: Vec<f64>,
    pub width: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub shape: ShapeConfig,
    /// Per-spin amplitudes as [re, im] pairs; uniform 1 when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin_amplitudes: Option<Vec<[f64; 2]>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum XSamplingConfig {
    Quadrature {
        nodes_per_axis: usize,
    },
    #[default]
    Importance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorBlock {
    pub t: f64,
    pub n_paths: u64,
    #[serde(default = "default_steps")]
    pub n_time_steps: usize,
    #[serde(default = "default_inner")]
    pub n_inner: usize,
    #[serde(default)]
    pub x_sampling: XSamplingConfig,
    #[serde(default = "default_chunks")]
    pub n_chunks: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_steps() -> usize {
    16
}
fn default_inner() -> usize {
    4
}
fn default_chunks() -> u64 {
    16
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscretizationConfig {
    #[default]
    Spectral,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    pub n: usize,
    pub half_width: f64,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
}

impl OracleBlock {
    pub fn grid(&self, d: usize) -> subfk::Result<GridSpec> {
        GridSpec::new(d, self.n, self.half_width)
    }

    pub fn discretization(&self) -> Discretization {
        match self.discretization {
            DiscretizationConfig::Spectral => Discretization::Spectral,
            DiscretizationConfig::FiniteDifference => Discretization::FiniteDifference,
        }
    }
}

/// Spectral shift for spin runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ShiftConfig {
    #[default]
    None,
    Fixed(f64),
    /// inf spec of h_{ℤ_p} on the oracle grid when negative.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KatoBlock {
    pub t_grid: Vec<f64>,
    pub deltas: Vec<f64>,
    pub probes: Vec<Vec<f64>>,
    #[serde(default = "default_kato_paths")]
    pub n_paths: u64,
    #[serde(default = "default_kato_seed")]
    pub seed: u64,
}

fn default_kato_seed() -> u64 {
    1
}

fn default_kato_paths() -> u64 {
    4000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub psi: PsiConfig,
    #[serde(default)]
    pub strategy: StrategyConfig,
    pub dim: usize,
    #[serde(default)]
    pub field: FieldConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin: Option<SpinBlock>,
    #[serde(default)]
    pub spectral_shift: ShiftConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<TestFnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<TestFnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kato: Option<KatoBlock>,
    /// Times at which hyper-check evaluates the bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyper_times: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn psi(&self) -> subfk::Result<BernsteinFunction> {
        self.psi.build()
    }

    pub fn subordinator(&self) -> subfk::Result<SubordinatorSpec> {
        let psi = self.psi()?;
        match self.strategy {
            StrategyConfig::Auto => SubordinatorSpec::auto(psi),
            StrategyConfig::CompoundPoisson { cutoff } => SubordinatorSpec::new(psi, SamplingStrategy::CompoundPoissonPlusDrift { cutoff }),
        }
    }

    pub fn field(&self) -> Result<FieldSpec, CliError> {
        let d = self.dim;
        Ok(match &self.field {
            FieldConfig::Zero => FieldSpec::zero(d),
            FieldConfig::Constant { c } => {
                if c.len() != d {
                    return Err(CliError::Config(format!("field.c has {} entries for dim {d}", c.len())));
                }
                FieldSpec::constant(c.clone())
            }
            FieldConfig::Linear { k } => FieldSpec::linear(d, *k),
            FieldConfig::Rotational { strength, width } => FieldSpec::rotational(d, *strength, Profile::Gaussian { width: *width })?,
            FieldConfig::Wavy { strength } => FieldSpec::wavy(d, *strength)?,
            FieldConfig::Fourier { modes } => FieldSpec::fourier(
                d,
                modes.iter().map(|m| FourierMode { amplitude: m.amplitude.clone(), wavevector: m.wavevector.clone(), phase: m.phase }).collect(),
            )?,
        })
    }

    pub fn potential(&self) -> Result<Potential, CliError> {
        build_potential(&self.potential, self.dim)
    }

    pub fn coupling(&self, field: &FieldSpec) -> Result<Option<SpinCoupling>, CliError> {
        Ok(match &self.spin {
            None => None,
            Some(SpinBlock::Constant { p, diag, offdiag }) => {
                Some(SpinCoupling::constant(*p, *diag, offdiag.iter().map(|z| Complex64::new(z[0], z[1])).collect())?)
            }
            Some(SpinBlock::Spin12 { epsilon }) => {
                let c = SpinCoupling::spin12(field)?;
                Some(if *epsilon > 0.0 { c.regularize(*epsilon)? } else { c })
            }
        })
    }

    pub fn f(&self) -> Result<&TestFnConfig, CliError> {
        self.f.as_ref().ok_or_else(|| CliError::Config("missing key `f`".into()))
    }

    pub fn g(&self) -> Result<&TestFnConfig, CliError> {
        Ok(self.g.as_ref().unwrap_or(self.f()?))
    }

    pub fn estimator(&self) -> Result<EstimatorConfig, CliError> {
        let e = self.estimator.as_ref().ok_or_else(|| CliError::Config("missing key `estimator`".into()))?;
        let mut cfg = EstimatorConfig::new(e.t, e.n_paths, e.seed);
        cfg.n_time_steps = e.n_time_steps;
        cfg.n_inner = e.n_inner;
        cfg.n_chunks = e.n_chunks;
        cfg.x_sampling = match e.x_sampling {
            XSamplingConfig::Quadrature { nodes_per_axis } => XSampling::Quadrature { nodes_per_axis },
            XSamplingConfig::Importance => XSampling::ImportanceFromF,
        };
        Ok(cfg)
    }

    pub fn oracle(&self) -> Result<&OracleBlock, CliError> {
        self.oracle.as_ref().ok_or_else(|| CliError::Config("missing key `oracle`".into()))
    }
}

fn build_potential(p: &PotentialConfig, d: usize) -> Result<Potential, CliError> {
    Ok(match p {
        PotentialConfig::Zero => Potential::zero(d),
        PotentialConfig::Constant { c } => Potential::constant(d, *c),
        PotentialConfig::Harmonic { omega } => Potential::harmonic(d, *omega),
        PotentialConfig::Bump { height, width, center } => Potential::bump(d, *height, *width, center.clone())?,
        PotentialConfig::Coulomb { charge, epsilon } => Potential::coulomb_mollified(d, *charge, *epsilon)?,
        PotentialConfig::Sum { terms } => {
            let mut acc = Potential::zero(d);
            for t in terms {
                acc = acc.plus(&build_potential(t, d)?);
            }
            acc
        }
    })
}

impl TestFnConfig {
    pub fn build(&self) -> subfk::Result<TestFunction> {
        match self.shape {
            ShapeConfig::Gaussian => TestFunction::gaussian(self.center.clone(), self.width, self.amplitude),
            ShapeConfig::FirstHermite => TestFunction::first_hermite(self.center.clone(), self.width, self.amplitude),
        }
    }

    pub fn build_spin(&self, p: usize) -> subfk::Result<SpinTestFunction> {
        let base = self.build()?;
        match &self.spin_amplitudes {
            Some(a) => SpinTestFunction::new(base, a.iter().map(|z| Complex64::new(z[0], z[1])).collect()),
            None => SpinTestFunction::uniform(base, p),
        }
    }
}
