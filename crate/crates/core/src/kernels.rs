//! Modified Bessel functions and the fundamental solution of `-Δ + λ` in two
//! and three dimensions.
//!
//! `K_0`, `K_1` use power series for `z <= 2` and Steed's continued fraction
//! above. Half-integer orders are elementary.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_SWITCH: f64 = 2.0;

/// Laplace-domain spectral parameter together with the lower bound of the
/// boundary condition in force.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralParam {
    lambda: f64,
    lower_bound: f64,
}

impl SpectralParam {
    pub fn new(lambda: f64, lower_bound: f64) -> Result<Self> {
        if !lambda.is_finite() || !lower_bound.is_finite() || lower_bound < 0.0 {
            return Err(Error::SpectralParameter(format!(
                "lambda = {lambda}, lower bound = {lower_bound}"
            )));
        }
        if lambda <= lower_bound {
            return Err(Error::SpectralParameter(format!(
                "lambda = {lambda} must exceed the lower bound {lower_bound}"
            )));
        }
        Ok(Self { lambda, lower_bound })
    }

    /// Parameter with lower bound zero.
    pub fn free(lambda: f64) -> Result<Self> {
        Self::new(lambda, 0.0)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    /// `√λ`, the decay rate of the kernel.
    pub fn kappa(&self) -> f64 {
        self.lambda.sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn value(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn from_value(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(Error::Parameter(format!("dimension {n} is not supported"))),
        }
    }
}

/// `I_0(z)` by its power series. Accurate for moderate `z`.
pub fn bessel_i0(z: f64) -> f64 {
    let y = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        let k = k as f64;
        term *= y / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// `I_1(z)` by its power series.
pub fn bessel_i1(z: f64) -> f64 {
    let y = 0.25 * z * z;
    let mut term = 0.5 * z;
    let mut sum = term;
    for k in 1..500 {
        let k = k as f64;
        term *= y / (k * (k + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `(K_0(z), K_1(z))` for `z > 0`; no argument checking.
pub fn bessel_k01(z: f64) -> (f64, f64) {
    if z <= SERIES_SWITCH {
        k01_series(z)
    } else {
        k01_continued_fraction(z)
    }
}

/// `K_0(z)` for `z > 0`; no argument checking.
pub fn bessel_k0(z: f64) -> f64 {
    bessel_k01(z).0
}

/// `K_1(z)` for `z > 0`; no argument checking.
pub fn bessel_k1(z: f64) -> f64 {
    bessel_k01(z).1
}

fn k01_series(z: f64) -> (f64, f64) {
    let y = 0.25 * z * z;
    let log = (0.5 * z).ln();
    // K0 = -(ln(z/2) + γ) I0 + Σ y^k H_k / (k!)^2
    let mut t0 = 1.0;
    let mut harmonic = 0.0;
    let mut i0 = 1.0;
    let mut h_sum = 0.0;
    // K1 = 1/z + ln(z/2) I1 - (z/4) Σ (ψ(k+1) + ψ(k+2)) y^k / (k! (k+1)!)
    let mut t1 = 1.0;
    let mut i1_sum = 1.0;
    let mut psi_sum = 2.0 * (-EULER_GAMMA) + 1.0;
    for k in 1..60 {
        let kf = k as f64;
        t0 *= y / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += t0;
        h_sum += t0 * harmonic;
        t1 *= y / (kf * (kf + 1.0));
        i1_sum += t1;
        let psi = 2.0 * (-EULER_GAMMA + harmonic) + 1.0 / (kf + 1.0);
        psi_sum += psi * t1;
        if t0 < 1e-18 * i0 && t1 < 1e-18 * i1_sum {
            break;
        }
    }
    let k0 = -(log + EULER_GAMMA) * i0 + h_sum;
    let i1 = 0.5 * z * i1_sum;
    let k1 = 1.0 / z + log * i1 - 0.25 * z * psi_sum;
    (k0, k1)
}

fn k01_continued_fraction(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// Modified Bessel function of the second kind `K_ν(z)` for
/// `ν ∈ {0, 1} ∪ {m + 1/2}`.
pub fn bessel_k(order: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("K_nu requires z > 0, got {z}")));
    }
    if order == 0.0 {
        return Ok(bessel_k0(z));
    }
    if order == 1.0 {
        return Ok(bessel_k1(z));
    }
    let m = order - 0.5;
    if order < 0.0 || m.fract() != 0.0 || m > 200.0 {
        return Err(Error::UnsupportedOrder(order));
    }
    let m = m as usize;
    let mut k_prev = (PI / (2.0 * z)).sqrt() * (-z).exp();
    if m == 0 {
        return Ok(k_prev);
    }
    let mut k = k_prev * (1.0 + 1.0 / z);
    for j in 1..m {
        let nu = j as f64 + 0.5;
        let next = k_prev + 2.0 * nu / z * k;
        k_prev = k;
        k = next;
    }
    Ok(k)
}

/// Radial profile of the fundamental solution at fixed `√λ`.
#[derive(Clone, Copy, Debug)]
pub struct RadialKernel {
    pub dim: Dim,
    pub kappa: f64,
}

impl RadialKernel {
    pub fn new(dim: Dim, lambda: SpectralParam) -> Self {
        Self {
            dim,
            kappa: lambda.kappa(),
        }
    }

    /// `g(r)` for `r > 0`.
    pub fn value(&self, r: f64) -> f64 {
        match self.dim {
            Dim::Two => bessel_k0(self.kappa * r) / (2.0 * PI),
            Dim::Three => (-self.kappa * r).exp() / (4.0 * PI * r),
        }
    }

    /// `g'(r)` for `r > 0`.
    pub fn derivative(&self, r: f64) -> f64 {
        match self.dim {
            Dim::Two => -self.kappa * bessel_k1(self.kappa * r) / (2.0 * PI),
            Dim::Three => -(-self.kappa * r).exp() * (1.0 + self.kappa * r) / (4.0 * PI * r * r),
        }
    }

    /// `g''(r)` for `r > 0`.
    pub fn second_derivative(&self, r: f64) -> f64 {
        let z = self.kappa * r;
        match self.dim {
            Dim::Two => {
                let (k0, k1) = bessel_k01(z);
                self.kappa * self.kappa * (k0 + k1 / z) / (2.0 * PI)
            }
            Dim::Three => (-z).exp() * (z * z + 2.0 * z + 2.0) / (4.0 * PI * r * r * r),
        }
    }
}

fn distance(dim: Dim, x: &[f64], y: &[f64]) -> Result<f64> {
    let n = dim.value();
    if x.len() != n || y.len() != n {
        return Err(Error::Parameter(format!(
            "points must have {n} coordinates, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let r = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(Error::Singularity(format!("coincident points {x:?}")));
    }
    Ok(r)
}

/// `g_λ(x, y)`, the fundamental solution of `-Δ + λ`.
pub fn fundamental_solution(dim: Dim, lambda: SpectralParam, x: &[f64], y: &[f64]) -> Result<f64> {
    let r = distance(dim, x, y)?;
    Ok(RadialKernel::new(dim, lambda).value(r))
}

/// Gradient of `g_λ(x, y)` with respect to `y`.
pub fn fundamental_solution_gradient(
    dim: Dim,
    lambda: SpectralParam,
    x: &[f64],
    y: &[f64],
) -> Result<Vec<f64>> {
    let r = distance(dim, x, y)?;
    let g = RadialKernel::new(dim, lambda).derivative(r);
    Ok(y.iter().zip(x).map(|(b, a)| g * (b - a) / r).collect())
}

/// The fundamental solution written through the Bessel function of order
/// `n/2 - 1`:
/// `(2π)^{-n/2} (√λ / r)^{n/2-1} K_{n/2-1}(√λ r)`.
pub fn fundamental_solution_bessel_form(dim: Dim, lambda: SpectralParam, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Singularity(format!("distance {r}")));
    }
    let n = dim.value() as f64;
    let nu = 0.5 * n - 1.0;
    let kappa = lambda.kappa();
    let k = bessel_k(nu, kappa * r)?;
    Ok((2.0 * PI).powf(-0.5 * n) * (kappa / r).powf(nu) * k)
}
