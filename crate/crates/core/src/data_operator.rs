//! The near-field data operator `F = Ĝ M⁻¹ Ĝᵀ` on the probe region and its
//! eigensystem.
//!
//! Matrices use orthonormal probe coordinates `û_i = √w_i u(b_i)`.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::boundary_ops::{assemble_m, invert_m, BcKind, BoundaryCondition};
use crate::error::{Error, Result};
use crate::geometry::{dist, validate_separation, BoundaryGeometry, ProbeRegion};
use crate::kernels::{Dim, RadialKernel, SpectralParam};

#[derive(Clone, Debug)]
pub struct DataOperator {
    pub matrix: DMatrix<f64>,
    pub lambda: SpectralParam,
    pub bc: BoundaryCondition,
    /// Sorted by modulus, largest first.
    pub eigenvalues: Vec<f64>,
    /// Columns are orthonormal eigenvectors in probe coordinates.
    pub eigenvectors: DMatrix<f64>,
    pub probe_weights: Vec<f64>,
    pub noise_level: Option<f64>,
    /// Number of boundary unknowns behind the factorization.
    pub boundary_rank: usize,
}

/// Kernel matrix from active boundary nodes to probe points, with both sets
/// of quadrature weights folded in symmetrically.
fn probe_kernel(
    bc: &BoundaryCondition,
    geom: &BoundaryGeometry,
    probe: &ProbeRegion,
    lambda: SpectralParam,
    active: &[usize],
) -> DMatrix<f64> {
    let k = RadialKernel::new(Dim::Two, lambda);
    let double = matches!(bc.kind, BcKind::Neumann | BcKind::Theta);
    DMatrix::from_fn(probe.len(), active.len(), |i, c| {
        let j = active[c];
        let b = probe.points()[i];
        let y = geom.nodes()[j];
        let r = dist(b, y);
        let kern = if double {
            let nu = geom.normals()[j];
            k.derivative(r) * ((y[0] - b[0]) * nu[0] + (y[1] - b[1]) * nu[1]) / r
        } else {
            k.value(r)
        };
        probe.weights()[i].sqrt() * kern * geom.weights()[j].sqrt()
    })
}

/// Assembles the data operator from the factorization through `M_λ⁻¹`.
pub fn assemble_f(
    bc: &BoundaryCondition,
    geom: &BoundaryGeometry,
    probe: &ProbeRegion,
    lambda: SpectralParam,
) -> Result<DataOperator> {
    let margin = 2.0 * geom.max_spacing();
    if !validate_separation(geom, probe, margin)? {
        return Err(Error::Geometry(format!(
            "probe region is not separated from the obstacle by {margin:.3e}"
        )));
    }
    let m = assemble_m(bc, geom, lambda)?;
    let minv = invert_m(&m)?;
    let g = probe_kernel(bc, geom, probe, lambda, &m.active);
    let mut f = &g * &minv.matrix * g.transpose();
    let t = f.transpose();
    f += t;
    f *= 0.5;
    let (eigenvalues, eigenvectors) = eigendecompose_matrix(&f);
    Ok(DataOperator {
        matrix: f,
        lambda,
        bc: bc.clone(),
        eigenvalues,
        eigenvectors,
        probe_weights: probe.weights().to_vec(),
        noise_level: None,
        boundary_rank: m.active.len(),
    })
}

/// Symmetric eigendecomposition with eigenpairs sorted by modulus.
pub fn eigendecompose_matrix(f: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(f.clone());
    let mut order: Vec<usize> = (0..f.nrows()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .partial_cmp(&eig.eigenvalues[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(f.nrows(), f.nrows(), |i, c| eig.eigenvectors[(i, order[c])]);
    (values, vectors)
}

impl DataOperator {
    /// Recomputes the eigensystem from `matrix`.
    pub fn eigendecompose(&mut self) {
        let (v, e) = eigendecompose_matrix(&self.matrix);
        self.eigenvalues = v;
        self.eigenvectors = e;
    }

    /// Eigenvector `k` in raw sample coordinates, orthonormal for the
    /// probe-weighted inner product.
    pub fn raw_eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors
            .column(k)
            .iter()
            .zip(&self.probe_weights)
            .map(|(v, w)| v / w.sqrt())
            .collect()
    }

    /// The matrix acting on raw sample values:
    /// `(F u)(b_i) ≈ Σ_j F_raw[i][j] u(b_j)`.
    pub fn raw_matrix(&self) -> DMatrix<f64> {
        let w = &self.probe_weights;
        DMatrix::from_fn(w.len(), w.len(), |i, j| self.matrix[(i, j)] * w[j].sqrt() / w[i].sqrt())
    }

    /// `‖F‖₂`
    pub fn norm(&self) -> f64 {
        self.eigenvalues.first().map_or(0.0, |m| m.abs())
    }

    /// Adds a symmetric Gaussian perturbation of spectral norm
    /// `relative_level · ‖F‖₂` and re-decomposes. The perturbation depends
    /// only on `seed` and the probe size.
    pub fn add_noise(&self, relative_level: f64, seed: u64) -> Result<DataOperator> {
        if !(relative_level >= 0.0) || !relative_level.is_finite() {
            return Err(Error::Parameter(format!("noise level {relative_level} must be non-negative")));
        }
        let mut out = self.clone();
        out.noise_level = Some(relative_level);
        if relative_level == 0.0 {
            return Ok(out);
        }
        let n = self.matrix.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = StandardNormal.sample(&mut rng);
                e[(i, j)] = v;
                e[(j, i)] = v;
            }
        }
        let en = SymmetricEigen::new(e.clone())
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if en > 0.0 {
            e *= relative_level * self.norm() / en;
        }
        out.matrix += e;
        out.eigendecompose();
        Ok(out)
    }

    /// CSV with columns `k, mu` (1-based `k`).
    pub fn write_spectrum_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["k", "mu"])?;
        for (k, mu) in self.eigenvalues.iter().enumerate() {
            wr.write_record([(k + 1).to_string(), format!("{mu:e}")])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Full matrix as CSV, one row per line, no header.
    pub fn write_matrix_csv<W: Write>(&self, w: W) -> Result<()> {
        write_matrix_csv(&self.matrix, w)
    }
}

pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..m.nrows() {
        wr.write_record((0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])))?;
    }
    wr.flush()?;
    Ok(())
}
