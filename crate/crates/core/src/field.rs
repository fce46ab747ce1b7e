//! Vector potentials and scalar potentials evaluated along paths.

use crate::error::{invalid, Error, Result};
use std::fmt;
use std::sync::Arc;

pub type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type CurlFn = Arc<dyn Fn(&[f64]) -> [f64; 3] + Send + Sync>;

/// Radial profile φ(r²) of a rotational field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// φ(s) = exp(−s/(2w²)).
    Gaussian { width: f64 },
    /// φ(s) = exp(−1/(1 − s/R²)) for s < R², zero outside.
    Bump { radius: f64 },
}

impl Profile {
    /// (φ(s), φ'(s)) at s = r².
    pub fn value_and_slope(&self, s: f64) -> (f64, f64) {
        match *self {
            Profile::Gaussian { width } => {
                let w2 = width * width;
                let v = (-s / (2.0 * w2)).exp();
                (v, -v / (2.0 * w2))
            }
            Profile::Bump { radius } => {
                let r2 = radius * radius;
                let q = 1.0 - s / r2;
                if q <= 0.0 {
                    (0.0, 0.0)
                } else {
                    let v = (-1.0 / q).exp();
                    (v, -v / (r2 * q * q))
                }
            }
        }
    }
}

/// One term c·sin(q·x + φ) of a Fourier field.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierMode {
    pub amplitude: Vec<f64>,
    pub wavevector: Vec<f64>,
    pub phase: f64,
}

impl FourierMode {
    #[inline]
    fn phase_at(&self, x: &[f64]) -> f64 {
        self.phase + self.wavevector.iter().zip(x).map(|(q, xi)| q * xi).sum::<f64>()
    }
}

/// Vector potential a with optional divergence and curl.
#[derive(Clone)]
pub struct FieldSpec {
    pub dim: usize,
    pub a: VectorFn,
    pub div_a: Option<ScalarFn>,
    pub curl_b: Option<CurlFn>,
    pub label: String,
    zero: bool,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("div_a", &self.div_a.is_some())
            .field("curl_b", &self.curl_b.is_some())
            .finish()
    }
}

impl FieldSpec {
    pub fn new(dim: usize, a: VectorFn, div_a: Option<ScalarFn>, curl_b: Option<CurlFn>, label: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("field dimension must be positive"));
        }
        if curl_b.is_some() && dim != 3 {
            return Err(invalid("curl_b is only defined in dimension 3"));
        }
        Ok(Self { dim, a, div_a, curl_b, label: label.into(), zero: false })
    }

    pub fn zero(dim: usize) -> Self {
        let curl: Option<CurlFn> = if dim == 3 { Some(Arc::new(|_: &[f64]| [0.0; 3])) } else { None };
        Self {
            dim,
            a: Arc::new(|_: &[f64], out: &mut [f64]| out.iter_mut().for_each(|o| *o = 0.0)),
            div_a: Some(Arc::new(|_: &[f64]| 0.0)),
            curl_b: curl,
            label: "zero".into(),
            zero: true,
        }
    }

    /// a ≡ c.
    pub fn constant(c: Vec<f64>) -> Self {
        let dim = c.len();
        let curl: Option<CurlFn> = if dim == 3 { Some(Arc::new(|_: &[f64]| [0.0; 3])) } else { None };
        let zero = c.iter().all(|v| *v == 0.0);
        Self {
            dim,
            a: Arc::new(move |_: &[f64], out: &mut [f64]| out.copy_from_slice(&c)),
            div_a: Some(Arc::new(|_: &[f64]| 0.0)),
            curl_b: curl,
            label: "constant".into(),
            zero,
        }
    }

    /// a(x) = k·x (a pure gradient, so b = 0).
    pub fn linear(dim: usize, k: f64) -> Self {
        let curl: Option<CurlFn> = if dim == 3 { Some(Arc::new(|_: &[f64]| [0.0; 3])) } else { None };
        Self {
            dim,
            a: Arc::new(move |x: &[f64], out: &mut [f64]| {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = k * xi;
                }
            }),
            div_a: Some(Arc::new(move |_: &[f64]| k * dim as f64)),
            curl_b: curl,
            label: format!("linear(k={k})"),
            zero: k == 0.0,
        }
    }

    /// Divergence-free rotational field a = κ φ(|x|²)(−x₂, x₁[, 0]) in d = 2 or 3.
    pub fn rotational(dim: usize, strength: f64, profile: Profile) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(invalid("rotational fields need d = 2 or 3"));
        }
        let a: VectorFn = Arc::new(move |x: &[f64], out: &mut [f64]| {
            let s: f64 = x.iter().map(|v| v * v).sum();
            let (phi, _) = profile.value_and_slope(s);
            out[0] = -strength * phi * x[1];
            out[1] = strength * phi * x[0];
            if out.len() > 2 {
                out[2] = 0.0;
            }
        });
        let curl: Option<CurlFn> = if dim == 3 {
            Some(Arc::new(move |x: &[f64]| {
                let s = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                let (phi, dphi) = profile.value_and_slope(s);
                [
                    -2.0 * strength * x[0] * x[2] * dphi,
                    -2.0 * strength * x[1] * x[2] * dphi,
                    strength * (2.0 * phi + 2.0 * (x[0] * x[0] + x[1] * x[1]) * dphi),
                ]
            }))
        } else {
            None
        };
        Ok(Self {
            dim,
            a,
            div_a: Some(Arc::new(|_: &[f64]| 0.0)),
            curl_b: curl,
            label: format!("rotational(kappa={strength},{profile:?})"),
            zero: strength == 0.0,
        })
    }

    /// a(x) = κ(sin x₂, cos x₁[, 0]) in d = 2 or 3.
    pub fn wavy(dim: usize, strength: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(invalid("wavy fields need d = 2 or 3"));
        }
        let curl: Option<CurlFn> = if dim == 3 { Some(Arc::new(move |x: &[f64]| [0.0, 0.0, -strength * (x[0].sin() + x[1].cos())])) } else { None };
        Ok(Self {
            dim,
            a: Arc::new(move |x: &[f64], out: &mut [f64]| {
                out[0] = strength * x[1].sin();
                out[1] = strength * x[0].cos();
                if out.len() > 2 {
                    out[2] = 0.0;
                }
            }),
            div_a: Some(Arc::new(|_: &[f64]| 0.0)),
            curl_b: curl,
            label: format!("wavy(kappa={strength})"),
            zero: strength == 0.0,
        })
    }

    /// a(x) = Σ_k c_k sin(q_k·x + φ_k), a smooth field with closed-form divergence and curl.
    pub fn fourier(dim: usize, modes: Vec<FourierMode>) -> Result<Self> {
        if modes.iter().any(|m| m.amplitude.len() != dim || m.wavevector.len() != dim) {
            return Err(invalid("Fourier mode dimension mismatch"));
        }
        let modes = Arc::new(modes);
        let (m1, m2, m3) = (modes.clone(), modes.clone(), modes.clone());
        let curl: Option<CurlFn> = if dim == 3 {
            Some(Arc::new(move |x: &[f64]| {
                let mut b = [0.0; 3];
                for m in m3.iter() {
                    let c = m.phase_at(x).cos();
                    let (q, a) = (&m.wavevector, &m.amplitude);
                    b[0] += (q[1] * a[2] - q[2] * a[1]) * c;
                    b[1] += (q[2] * a[0] - q[0] * a[2]) * c;
                    b[2] += (q[0] * a[1] - q[1] * a[0]) * c;
                }
                b
            }))
        } else {
            None
        };
        let zero = modes.iter().all(|m| m.amplitude.iter().all(|c| *c == 0.0));
        Ok(Self {
            dim,
            a: Arc::new(move |x: &[f64], out: &mut [f64]| {
                out.iter_mut().for_each(|o| *o = 0.0);
                for m in m1.iter() {
                    let s = m.phase_at(x).sin();
                    for (o, c) in out.iter_mut().zip(&m.amplitude) {
                        *o += c * s;
                    }
                }
            }),
            div_a: Some(Arc::new(move |x: &[f64]| {
                m2.iter().map(|m| m.phase_at(x).cos() * m.amplitude.iter().zip(&m.wavevector).map(|(c, q)| c * q).sum::<f64>()).sum()
            })),
            curl_b: curl,
            label: format!("fourier({} modes)", modes.len()),
            zero,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    #[inline]
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        (self.a)(x, out)
    }

    /// Field multiplied by `factor` (divergence and curl scale alike).
    pub fn scaled(&self, factor: f64) -> Self {
        let a = self.a.clone();
        let div = self.div_a.clone();
        let curl = self.curl_b.clone();
        Self {
            dim: self.dim,
            a: Arc::new(move |x: &[f64], out: &mut [f64]| {
                a(x, out);
                out.iter_mut().for_each(|o| *o *= factor);
            }),
            div_a: div.map(|d| Arc::new(move |x: &[f64]| factor * d(x)) as ScalarFn),
            curl_b: curl.map(|c| {
                Arc::new(move |x: &[f64]| {
                    let b = c(x);
                    [factor * b[0], factor * b[1], factor * b[2]]
                }) as CurlFn
            }),
            label: format!("{}*{factor}", self.label),
            zero: self.zero || factor == 0.0,
        }
    }

    /// Largest |div_a − centered-difference divergence| over the probes.
    pub fn divergence_mismatch(&self, probes: &[Vec<f64>], h: f64) -> Option<f64> {
        let div = self.div_a.as_ref()?;
        let d = self.dim;
        let mut worst: f64 = 0.0;
        let (mut ap, mut am) = (vec![0.0; d], vec![0.0; d]);
        for x in probes {
            let mut fd = 0.0;
            for mu in 0..d {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[mu] += h;
                xm[mu] -= h;
                self.eval(&xp, &mut ap);
                self.eval(&xm, &mut am);
                fd += (ap[mu] - am[mu]) / (2.0 * h);
            }
            worst = worst.max((fd - div(x)).abs());
        }
        Some(worst)
    }

    /// Largest |curl_b − centered-difference curl of a| over the probes (d = 3).
    pub fn curl_mismatch(&self, probes: &[Vec<f64>], h: f64) -> Option<f64> {
        let curl = self.curl_b.as_ref()?;
        let mut worst: f64 = 0.0;
        let (mut ap, mut am) = ([0.0; 3], [0.0; 3]);
        for x in probes {
            let mut jac = [[0.0; 3]; 3];
            for (nu, col) in jac.iter_mut().enumerate() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[nu] += h;
                xm[nu] -= h;
                self.eval(&xp, &mut ap);
                self.eval(&xm, &mut am);
                for mu in 0..3 {
                    col[mu] = (ap[mu] - am[mu]) / (2.0 * h);
                }
            }
            // jac[ν][μ] = ∂_ν a_μ
            let fd = [jac[1][2] - jac[2][1], jac[2][0] - jac[0][2], jac[0][1] - jac[1][0]];
            let b = curl(x);
            for k in 0..3 {
                worst = worst.max((fd[k] - b[k]).abs());
            }
        }
        Some(worst)
    }
}

/// Scalar potential V.
#[derive(Clone)]
pub struct Potential {
    pub dim: usize,
    pub v: ScalarFn,
    pub label: String,
    constant: Option<f64>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential").field("dim", &self.dim).field("label", &self.label).finish()
    }
}

impl Potential {
    pub fn new(dim: usize, v: ScalarFn, label: impl Into<String>) -> Self {
        Self { dim, v, label: label.into(), constant: None }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(dim, 0.0)
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self { dim, v: Arc::new(move |_: &[f64]| c), label: format!("constant({c})"), constant: Some(c) }
    }

    /// V(x) = ½ω²|x|².
    pub fn harmonic(dim: usize, omega: f64) -> Self {
        let k = 0.5 * omega * omega;
        Self::new(dim, Arc::new(move |x: &[f64]| k * x.iter().map(|v| v * v).sum::<f64>()), format!("harmonic(omega={omega})"))
    }

    /// V(x) = h·exp(−|x − c|²/(2w²)).
    pub fn bump(dim: usize, height: f64, width: f64, center: Vec<f64>) -> Result<Self> {
        if center.len() != dim {
            return Err(invalid("bump center dimension mismatch"));
        }
        let w2 = 2.0 * width * width;
        Ok(Self::new(
            dim,
            Arc::new(move |x: &[f64]| {
                let s: f64 = x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
                height * (-s / w2).exp()
            }),
            format!("bump(h={height},w={width})"),
        ))
    }

    /// V(x) = q/√(|x|² + ε²).
    pub fn coulomb_mollified(dim: usize, charge: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(invalid("mollification length must be positive"));
        }
        let e2 = epsilon * epsilon;
        Ok(Self::new(
            dim,
            Arc::new(move |x: &[f64]| charge / (x.iter().map(|v| v * v).sum::<f64>() + e2).sqrt()),
            format!("coulomb(q={charge},eps={epsilon})"),
        ))
    }

    /// Truncation min(V₊, n) − min(V₋, m); `None` means no cap.
    pub fn truncated(&self, n_plus: Option<f64>, m_minus: Option<f64>) -> Self {
        let v = self.v.clone();
        let (np, mm) = (n_plus.unwrap_or(f64::INFINITY), m_minus.unwrap_or(f64::INFINITY));
        Self::new(
            self.dim,
            Arc::new(move |x: &[f64]| {
                let val = v(x);
                val.max(0.0).min(np) - (-val).max(0.0).min(mm)
            }),
            format!("{}|trunc({np},{mm})", self.label),
        )
    }

    /// V multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let v = self.v.clone();
        Self {
            dim: self.dim,
            v: Arc::new(move |x: &[f64]| factor * v(x)),
            label: format!("{}*{factor}", self.label),
            constant: self.constant.map(|c| c * factor),
        }
    }

    /// Pointwise sum.
    pub fn plus(&self, other: &Potential) -> Self {
        let (a, b) = (self.v.clone(), other.v.clone());
        Self {
            dim: self.dim,
            v: Arc::new(move |x: &[f64]| a(x) + b(x)),
            label: format!("{}+{}", self.label, other.label),
            constant: match (self.constant, other.constant) {
                (Some(p), Some(q)) => Some(p + q),
                _ => None,
            },
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.v)(x)
    }

    /// Value at x, or an error naming the point when it is not finite.
    pub fn eval_checked(&self, x: &[f64]) -> Result<f64> {
        let v = (self.v)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinitePotential { point: x.to_vec(), value: v })
        }
    }
}
