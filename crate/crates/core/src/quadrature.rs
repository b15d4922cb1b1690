//! Quadrature rules and trigonometric tools for periodic boundary data.

use std::f64::consts::PI;

use nalgebra::DMatrix;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * x * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (x * p0 - p1) / (x * x - 1.0);
            let dx = p0 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule on `[a, b]`: `panels` equal panels with
/// `order` points each.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + 0.5 * h * xi);
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// Kress weights `R_j` for the logarithmic kernel `ln(4 sin²((t-τ)/2))` on
/// `2n` equispaced nodes. Entry `j` belongs to the node offset `t_j = πj/n`.
pub fn kress_log_weights(n_nodes: usize) -> Vec<f64> {
    let n = n_nodes / 2;
    let nf = n as f64;
    (0..n_nodes)
        .map(|j| {
            let t = PI * j as f64 / nf;
            let s: f64 = (1..n).map(|m| (m as f64 * t).cos() / m as f64).sum();
            -2.0 * PI / nf * s - PI / (nf * nf) * (nf * t).cos()
        })
        .collect()
}

/// Differentiation matrix of trigonometric interpolation on an even number
/// of equispaced nodes. Antisymmetric, with the Nyquist mode annihilated.
pub fn trig_diff_matrix(n_nodes: usize) -> DMatrix<f64> {
    let h = 2.0 * PI / n_nodes as f64;
    DMatrix::from_fn(n_nodes, n_nodes, |i, j| {
        if i == j {
            0.0
        } else {
            let d = i as isize - j as isize;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            0.5 * sign / (0.5 * d as f64 * h).tan()
        }
    })
}

/// Evaluates the trigonometric interpolant of equispaced periodic samples on
/// `factor` times as many equispaced nodes.
pub fn trig_upsample(values: &[f64], factor: usize) -> Vec<f64> {
    let n = values.len();
    let m = n * factor;
    let half = n / 2;
    // Real Fourier coefficients; the Nyquist term is split evenly.
    let mut a = vec![0.0; half + 1];
    let mut b = vec![0.0; half + 1];
    for (k, (ak, bk)) in a.iter_mut().zip(b.iter_mut()).enumerate() {
        for (j, v) in values.iter().enumerate() {
            let t = 2.0 * PI * (j * k) as f64 / n as f64;
            *ak += v * t.cos();
            *bk += v * t.sin();
        }
        *ak *= 2.0 / n as f64;
        *bk *= 2.0 / n as f64;
    }
    a[0] *= 0.5;
    if n % 2 == 0 {
        a[half] *= 0.5;
        b[half] = 0.0;
    }
    (0..m)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / m as f64;
            (0..=half)
                .map(|k| a[k] * (k as f64 * t).cos() + b[k] * (k as f64 * t).sin())
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        for p in 0..14 {
            let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            assert!((q - exact).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn kress_weights_integrate_log_kernel() {
        // ∫ ln(4 sin²(t/2)) cos(t) dt = -2π
        let n = 32;
        let r = kress_log_weights(n);
        let q: f64 = (0..n).map(|j| r[j] * (PI * j as f64 / 16.0).cos()).sum();
        assert!((q + 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn differentiation_is_exact_on_trig_polynomials() {
        let n = 16;
        let d = trig_diff_matrix(n);
        let t: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let f = nalgebra::DVector::from_iterator(n, t.iter().map(|t| (3.0 * t).sin()));
        let df = &d * f;
        for (j, t) in t.iter().enumerate() {
            assert!((df[j] - 3.0 * (3.0 * t).cos()).abs() < 1e-12);
        }
        assert!((&d + d.transpose()).norm() < 1e-12);
    }

    #[test]
    fn upsampling_reproduces_samples() {
        let v: Vec<f64> = (0..8).map(|j| (j as f64 * 0.7).sin() + 0.2 * j as f64).collect();
        let u = trig_upsample(&v, 4);
        for (j, x) in v.iter().enumerate() {
            assert!((u[4 * j] - x).abs() < 1e-12);
        }
    }
}
