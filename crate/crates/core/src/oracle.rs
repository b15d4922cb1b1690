//! Reference computations that share no code path with the solvers. Used by
//! the test suites and the self-test runner.

use std::f64::consts::PI;

use crate::geometry::Point;
use crate::quadrature::gauss_legendre;

/// `K_ν(z) = ∫₀^∞ e^{-z cosh t} cosh(ν t) dt` by the trapezoid rule, which
/// converges geometrically for this integrand.
pub fn bessel_k_integral(nu: f64, z: f64) -> f64 {
    let h = 0.02;
    let mut sum = 0.5 * (-z).exp();
    let mut k = 1;
    loop {
        let t = h * k as f64;
        let e = -z * t.cosh() + (nu * t).abs();
        if e < -745.0 {
            break;
        }
        sum += (-z * t.cosh()).exp() * (nu * t).cosh();
        k += 1;
    }
    h * sum
}

/// `I_m(z) = Σ_k (z/2)^{m+2k} / (k! (m+k)!)`. Every term is positive so
/// the sum carries no cancellation at high order.
pub fn bessel_i_series(m: i32, z: f64) -> f64 {
    let m = m.unsigned_abs() as usize;
    let half = 0.5 * z;
    let mut term = (1..=m).fold(1.0, |t, j| t * half / j as f64);
    let mut sum = term;
    for k in 1..500 {
        term *= half * half / (k as f64 * (m + k) as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Eigenvalue of the single-layer trace for the mode `e^{imθ}` on a circle
/// of radius `r`: `R I_m(κR) K_m(κR)`.
pub fn circle_sl_eigenvalue(m: i32, kappa: f64, r: f64) -> f64 {
    let m = m.abs();
    r * bessel_i_series(m, kappa * r) * bessel_k_integral(m as f64, kappa * r)
}

/// Same eigenvalue by direct quadrature of
/// `(R/π) ∫₀^π K_0(2κR sin(θ/2)) cos(mθ) dθ`, with panels graded toward
/// the logarithmic singularity at `θ = 0`. `k0` is the Bessel routine
/// under test elsewhere; it is passed in so the caller decides.
pub fn circle_sl_eigenvalue_quadrature(m: i32, kappa: f64, r: f64, k0: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(16);
    let f = |t: f64| k0(2.0 * kappa * r * (0.5 * t).sin()) * (m as f64 * t).cos();
    let mut intervals = Vec::new();
    let split = PI / 64.0;
    for p in 0..32 {
        let a = split + (PI - split) * p as f64 / 32.0;
        let b = split + (PI - split) * (p + 1) as f64 / 32.0;
        intervals.push((a, b));
    }
    let mut b = split;
    for _ in 0..48 {
        intervals.push((0.5 * b, b));
        b *= 0.5;
    }
    let sum: f64 = intervals
        .iter()
        .map(|(a, b)| {
            let h = 0.5 * (b - a);
            let c = 0.5 * (a + b);
            x.iter().zip(&w).map(|(x, w)| w * h * f(c + h * x)).sum::<f64>()
        })
        .sum();
    r / PI * sum
}

/// Eigenvalue of the hypersingular trace for mode `m` on a circle:
/// `κ² R I_m'(κR) K_m'(κR)`.
pub fn circle_hypersingular_eigenvalue(m: i32, kappa: f64, r: f64) -> f64 {
    let m = m.abs();
    let z = kappa * r;
    let ip = 0.5 * (bessel_i_series(m - 1, z) + bessel_i_series(m + 1, z));
    let kp = -0.5 * (bessel_k_integral((m - 1) as f64, z) + bessel_k_integral((m + 1) as f64, z));
    kappa * kappa * r * ip * kp
}

/// Hypersingular eigenvalue from single-layer eigenvalues through the
/// tangential-derivative identity, `−(m²/R²)s_m − κ²(s_{m+1} + s_{m−1})/2`.
pub fn circle_hypersingular_from_sl(m: i32, kappa: f64, r: f64, s: impl Fn(i32) -> f64) -> f64 {
    let mf = m as f64;
    -(mf * mf / (r * r)) * s(m) - 0.5 * kappa * kappa * (s(m + 1) + s(m - 1))
}

/// Eigenvalue of the data operator for mode `m` with the obstacle the
/// circle of radius `r` and the probe the concentric ring of radius `rp`:
/// `-rp I_m(κr) K_m(κ rp)² / K_m(κr)` for Dirichlet, with `I_m'`, `K_m'` in
/// place of `I_m`, `K_m` at the obstacle for Neumann.
pub fn circle_data_eigenvalue(neumann: bool, m: i32, kappa: f64, r: f64, rp: f64) -> f64 {
    let m = m.abs();
    let z = kappa * r;
    let kp = bessel_k_integral(m as f64, kappa * rp);
    if neumann {
        let ip = 0.5 * (bessel_i_series(m - 1, z) + bessel_i_series(m + 1, z));
        let kd = -0.5 * (bessel_k_integral((m - 1) as f64, z) + bessel_k_integral((m + 1) as f64, z));
        -rp * ip * kp * kp / kd
    } else {
        -rp * bessel_i_series(m, z) * kp * kp / bessel_k_integral(m as f64, z)
    }
}

/// Even-odd ray casting toward `+x`.
pub fn ray_cast_contains(polygon: &[Point], p: Point) -> bool {
    let n = polygon.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Proper crossing of the segments `ab` and `cd`.
pub fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// True when no two non-adjacent edges of the closed polygon cross.
pub fn polygon_is_simple(polygon: &[Point]) -> bool {
    let n = polygon.len();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Perimeter of the ellipse with semi-axes `a`, `b`.
pub fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let f = |t: f64| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
    4.0 * adaptive_simpson(&f, 0.0, 0.5 * PI, 1e-13)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_oracles_satisfy_wronskian() {
        for z in [0.3, 1.0, 2.5, 7.0] {
            let w = bessel_i_series(0, z) * bessel_k_integral(1.0, z) + bessel_i_series(1, z) * bessel_k_integral(0.0, z);
            assert!((w * z - 1.0).abs() < 1e-13, "z = {z}");
        }
    }

    #[test]
    fn half_order_oracle() {
        let z = 1.7;
        let exact = (PI / (2.0 * z)).sqrt() * (-z).exp();
        assert!((bessel_k_integral(0.5, z) / exact - 1.0).abs() < 1e-13);
    }

    #[test]
    fn ray_cast_square() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(ray_cast_contains(&sq, [0.5, 0.5]));
        assert!(!ray_cast_contains(&sq, [1.5, 0.5]));
    }
}
