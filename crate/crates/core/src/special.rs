//! Special functions not covered by `libm`.

use std::f64::consts::PI;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Exponentially scaled modified Bessel function e^z K₁(z), z > 0.
///
/// Trapezoid rule on e^z K₁(z) = ∫₀^∞ e^{−z(cosh s − 1)} cosh s ds; the
/// integrand is entire and even, so the error decays like e^{−π²/h}.
pub fn bessel_k1_scaled(z: f64) -> f64 {
    assert!(z > 0.0, "K1 requires a positive argument");
    let h = 0.125;
    let mut sum = 0.5;
    let mut k = 1;
    loop {
        let s = k as f64 * h;
        let c = s.cosh();
        let term = (-z * (c - 1.0)).exp() * c;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        k += 1;
    }
    sum * h
}

/// Modified Bessel function K₁(z), z > 0.
pub fn bessel_k1(z: f64) -> f64 {
    bessel_k1_scaled(z) * (-z).exp()
}

/// Bessel function J_ν(z) for integer or half-integer ν ≥ −1/2 and z ≥ 0.
pub fn bessel_j(nu: f64, z: f64) -> f64 {
    let twice = (2.0 * nu).round();
    assert!((2.0 * nu - twice).abs() < 1e-12 && nu >= -0.5, "order must be an integer or half-integer >= -1/2");
    if z == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if z < 2.0 + nu.abs() {
        return bessel_j_series(nu, z);
    }
    if twice as i64 % 2 == 0 {
        let n = nu.round() as i32;
        match n {
            0 => libm::j0(z),
            1 => libm::j1(z),
            _ => libm::jn(n, z),
        }
    } else {
        let pref = (2.0 / (PI * z)).sqrt();
        let mut jm = pref * z.cos(); // J_{-1/2}
        let mut j = pref * z.sin(); // J_{1/2}
        if nu < 0.0 {
            return jm;
        }
        let mut order = 0.5;
        while order < nu - 1e-12 {
            let next = (2.0 * order / z) * j - jm;
            jm = j;
            j = next;
            order += 1.0;
        }
        j
    }
}

/// Ascending series, accurate for z below a few units.
fn bessel_j_series(nu: f64, z: f64) -> f64 {
    let x = 0.25 * z * z;
    let mut term = (nu * (0.5 * z).ln() - ln_gamma(nu + 1.0)).exp();
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= -x / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Derivative of J_ν.
pub fn bessel_j_prime(nu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if (nu - 1.0).abs() < 1e-12 { 0.5 } else { 0.0 };
    }
    nu / z * bessel_j(nu, z) - bessel_j(nu + 1.0, z)
}

/// k-th positive zero (k ≥ 1) of J_ν, via McMahon's expansion refined by Newton.
pub fn bessel_j_zero(nu: f64, k: usize) -> f64 {
    let twice = (2.0 * nu).round() as i64;
    if twice % 2 != 0 && nu.abs() < 1.0 {
        // J_{±1/2} are elementary.
        return if nu < 0.0 { (k as f64 - 0.5) * PI } else { k as f64 * PI };
    }
    let mu = 4.0 * nu * nu;
    let beta = (k as f64 + 0.5 * nu - 0.25) * PI;
    let b8 = 8.0 * beta;
    let mut z = beta - (mu - 1.0) / b8 - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8.powi(3));
    if k == 1 && nu > 0.0 {
        // Small-order first zeros: McMahon is rough, start from a safer guess.
        z = z.max(nu + 1.8557 * nu.powf(1.0 / 3.0) + 0.5);
    }
    for _ in 0..50 {
        let f = bessel_j(nu, z);
        let fp = bessel_j_prime(nu, z);
        let step = f / fp;
        z -= step;
        if step.abs() < 1e-15 * z {
            break;
        }
    }
    z
}
