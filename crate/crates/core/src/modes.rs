//! Thermal modes: eigendecomposition of the Jacobian.
//!
//! The eigenproblem is solved on the nearly symmetric `A = C^{1/2} J C^{-1/2}`
//! and mapped back with `P = C^{-1/2} U`, so the columns of `P` satisfy
//! `PᵗCP ≈ I` to the extent that `A` is symmetric.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::jacobian::{similarity_transform, JacobianBundle};

/// Largest accepted `|Im λ| / max|λ|`.
pub const REALNESS_TOLERANCE: f64 = 1e-6;
/// Eigenvalues closer than this (relative to `max|λ|`) are treated as one
/// degenerate eigenvalue.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;
const NULLSPACE_TOLERANCE: f64 = 1e-8;

/// All eigenvalues of a real square matrix (real Schur form).
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    m.clone().complex_eigenvalues().iter().copied().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    /// s⁻¹, sorted by `|λ|` descending (fastest mode first).
    pub eigenvalues: DVector<f64>,
    /// Columns are the eigenvectors of `J`, scaled so `PᵗCP` has a unit diagonal.
    pub mode_matrix: DMatrix<f64>,
    /// `max |(PᵗCP - I)_ab|`.
    pub normalization_error: f64,
    pub max_imag_part: f64,
    /// `1/|λ_a|`, s.
    pub relaxation_times: DVector<f64>,
    inverse: DMatrix<f64>,
}

impl ModeBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `P⁻¹`, used to project a forcing onto the modes.
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn perron_index(&self) -> usize {
        self.len() - 1
    }
}

pub fn decompose(j: &JacobianBundle, c: &DVector<f64>) -> Result<ModeBasis> {
    let n = j.dim();
    if c.len() != n {
        return Err(Error::Dimension(format!(
            "capacitance has {} entries, Jacobian is {n}x{n}",
            c.len()
        )));
    }
    let a = similarity_transform(&j.matrix, c);
    let eigs = eigenvalues(&a);
    let scale = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_imag_part = eigs.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if scale > 0.0 && max_imag_part / scale >= REALNESS_TOLERANCE {
        return Err(Error::ComplexEigenvalues {
            ratio: max_imag_part / scale,
            tolerance: REALNESS_TOLERANCE,
        });
    }
    let mut values: Vec<f64> = eigs.iter().map(|z| z.re).collect();
    values.sort_by(|x, y| y.abs().total_cmp(&x.abs()));

    let a_norm = a.norm();
    let mut u = DMatrix::zeros(n, n);
    let mut sorted = DVector::zeros(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end] - values[start]).abs() <= DEGENERACY_TOLERANCE * scale {
            end += 1;
        }
        let k = end - start;
        let lambda = values[start..end].iter().sum::<f64>() / k as f64;
        let shifted = &a - DMatrix::identity(n, n) * lambda;
        let svd = SVD::new(shifted, false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
        let rank = order
            .iter()
            .take(k)
            .filter(|&&i| svd.singular_values[i] <= NULLSPACE_TOLERANCE * a_norm.max(f64::MIN_POSITIVE))
            .count();
        if rank < k {
            return Err(Error::Defective {
                eigenvalue: lambda,
                multiplicity: k,
                rank,
            });
        }
        for (offset, &row) in order.iter().take(k).enumerate() {
            u.set_column(start + offset, &v_t.row(row).transpose());
            sorted[start + offset] = values[start + offset];
        }
        start = end;
    }

    let mut p = DMatrix::from_fn(n, n, |i, a| u[(i, a)] / c[i].sqrt());
    for a in 0..n {
        let mut col = p.column_mut(a);
        let flip = if a == n - 1 {
            col.sum() < 0.0
        } else {
            let imax = col.iamax();
            col[imax] < 0.0
        };
        if flip {
            col.neg_mut();
        }
    }
    let gram = p.transpose() * DMatrix::from_diagonal(c) * &p;
    let normalization_error = (gram - DMatrix::identity(n, n)).amax();
    let inverse = p
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("mode matrix".into()))?;
    let relaxation_times = sorted.map(|l| 1.0 / l.abs());
    Ok(ModeBasis {
        eigenvalues: sorted,
        mode_matrix: p,
        normalization_error,
        max_imag_part,
        relaxation_times,
        inverse,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerronMode {
    pub eigenvalue: f64,
    pub relaxation_time: f64,
    /// Unit Euclidean norm, strictly positive.
    pub vector: DVector<f64>,
    /// The same mode as stored in the basis (`pᵗCp = 1`).
    pub c_normalized: DVector<f64>,
}

/// The slowest mode, whose eigenvector must be strictly positive.
pub fn perron_mode(basis: &ModeBasis) -> Result<PerronMode> {
    if basis.is_empty() {
        return Err(Error::Dimension("empty mode basis".into()));
    }
    let idx = basis.perron_index();
    let c_normalized: DVector<f64> = basis.mode_matrix.column(idx).into_owned();
    let negative: Vec<usize> = c_normalized
        .iter()
        .enumerate()
        .filter(|(_, v)| **v <= 0.0)
        .map(|(i, _)| i + 1)
        .collect();
    if !negative.is_empty() {
        return Err(Error::NotPositive(negative));
    }
    Ok(PerronMode {
        eigenvalue: basis.eigenvalues[idx],
        relaxation_time: basis.relaxation_times[idx],
        vector: c_normalized.normalize(),
        c_normalized,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntisymmetricShift {
    /// First-order eigenvalue shifts `e_aᵗ δA e_a`, one per eigenvector of `S`.
    pub shifts: DVector<f64>,
    /// Eigenvalues of the symmetric part `S`, sorted by `|λ|` descending.
    pub symmetric_eigenvalues: DVector<f64>,
    /// `‖δA‖_F / ‖A‖_F`.
    pub antisymmetry_ratio: f64,
}

/// Splits `A = C^{1/2} J C^{-1/2}` into `S + δA` and evaluates the
/// first-order effect of `δA` on the eigenvalues of `S`.
pub fn antisymmetric_eigen_shift(j: &JacobianBundle, c: &DVector<f64>) -> Result<AntisymmetricShift> {
    let n = j.dim();
    if c.len() != n {
        return Err(Error::Dimension(format!(
            "capacitance has {} entries, Jacobian is {n}x{n}",
            c.len()
        )));
    }
    let a = similarity_transform(&j.matrix, c);
    let s = (&a + a.transpose()) * 0.5;
    let delta = (&a - a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].abs().total_cmp(&eig.eigenvalues[x].abs()));
    let shifts = DVector::from_iterator(
        n,
        order.iter().map(|&a| {
            let e = eig.eigenvectors.column(a);
            (e.transpose() * &delta * e)[(0, 0)]
        }),
    );
    let symmetric_eigenvalues = DVector::from_iterator(n, order.iter().map(|&a| eig.eigenvalues[a]));
    Ok(AntisymmetricShift {
        shifts,
        symmetric_eigenvalues,
        antisymmetry_ratio: delta.norm() / a.norm(),
    })
}
