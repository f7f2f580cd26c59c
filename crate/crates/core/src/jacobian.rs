//! Jacobians of the energy balance: the exact perturbative linearization
//! and the heuristic radiation-conductance variants, plus structural checks.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ThermalModel;
use crate::modes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianVariant {
    Exact,
    HeuristicOneSided,
    HeuristicSymmetrized,
}

/// Effective linear conductances (W/K) that replace the quartic couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiationConductances {
    pub pairwise: DMatrix<f64>,
    pub environment: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianBundle {
    /// N×N, s⁻¹.
    pub matrix: DMatrix<f64>,
    pub variant: JacobianVariant,
    pub reference_t: DVector<f64>,
    pub radiation_conductances: Option<RadiationConductances>,
}

impl JacobianBundle {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn check_temperatures(model: &ThermalModel, t: &DVector<f64>) -> Result<()> {
    if t.len() != model.node_count() {
        return Err(Error::Dimension(format!(
            "temperature vector has {} entries, model has {} nodes",
            t.len(),
            model.node_count()
        )));
    }
    if let Some(i) = t.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Validation(format!(
            "temperature of node {} must be positive, got {}",
            i + 1,
            t[i]
        )));
    }
    Ok(())
}

/// Exact Jacobian of the right-hand side at `t`.
///
/// `J_ij = (K_ij + 4 R_ij T_j³)/C_i` for `i ≠ j` and
/// `J_ii = -[Σ_k (K_ik + 4 R_ik T_i³) + 4 R_i T_i³]/C_i`.
pub fn jacobian_exact(model: &ThermalModel, t: &DVector<f64>) -> Result<JacobianBundle> {
    check_temperatures(model, t)?;
    Ok(JacobianBundle {
        matrix: exact_matrix(model, t),
        variant: JacobianVariant::Exact,
        reference_t: t.clone(),
        radiation_conductances: None,
    })
}

/// Unchecked exact Jacobian, used inside the Newton loop.
pub(crate) fn exact_matrix(model: &ThermalModel, t: &DVector<f64>) -> DMatrix<f64> {
    let n = model.node_count();
    let k = model.conduction();
    let r = model.radiation();
    let c = model.capacitance();
    let cube = t.map(|v| v * v * v);
    let mut j = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 4.0 * model.env_radiation()[i] * cube[i];
        for m in 0..n {
            if m == i {
                continue;
            }
            j[(i, m)] = (k[(i, m)] + 4.0 * r[(i, m)] * cube[m]) / c[i];
            diag += k[(i, m)] + 4.0 * r[(i, m)] * cube[i];
        }
        j[(i, i)] = -diag / c[i];
    }
    j
}

/// Jacobian of the linear network obtained by replacing each radiation
/// coupling with an effective conductance evaluated at `t_ref`.
///
/// One-sided: `K^R_ij = R_ij (T_i + T_j)(T_i² + T_j²)`.
/// Symmetrized: `K^R_ij = 2 R_ij (T_i³ + T_j³)`.
/// Both use `K^R_i = 4 R_i T_i³` for the environment.
pub fn jacobian_heuristic(
    model: &ThermalModel,
    t_ref: &DVector<f64>,
    symmetrized: bool,
) -> Result<JacobianBundle> {
    check_temperatures(model, t_ref)?;
    let n = model.node_count();
    let r = model.radiation();
    let mut pairwise = DMatrix::zeros(n, n);
    for i in 0..n {
        for m in 0..n {
            if i == m || r[(i, m)] == 0.0 {
                continue;
            }
            let (ti, tm) = (t_ref[i], t_ref[m]);
            pairwise[(i, m)] = if symmetrized {
                2.0 * r[(i, m)] * (ti * ti * ti + tm * tm * tm)
            } else {
                r[(i, m)] * (ti + tm) * (ti * ti + tm * tm)
            };
        }
    }
    let environment = DVector::from_iterator(
        n,
        (0..n).map(|i| 4.0 * model.env_radiation()[i] * t_ref[i].powi(3)),
    );
    let k = model.conduction();
    let c = model.capacitance();
    let mut j = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = environment[i];
        for m in 0..n {
            if m == i {
                continue;
            }
            let g = k[(i, m)] + pairwise[(i, m)];
            j[(i, m)] = g / c[i];
            diag += g;
        }
        j[(i, i)] = -diag / c[i];
    }
    Ok(JacobianBundle {
        matrix: j,
        variant: if symmetrized {
            JacobianVariant::HeuristicSymmetrized
        } else {
            JacobianVariant::HeuristicOneSided
        },
        reference_t: t_ref.clone(),
        radiation_conductances: Some(RadiationConductances {
            pairwise,
            environment,
        }),
    })
}

/// `C^{1/2} J C^{-1/2}`.
pub fn similarity_transform(j: &DMatrix<f64>, c: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(j.nrows(), j.ncols(), |i, m| {
        j[(i, m)] * (c[i] / c[m]).sqrt()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    /// Off-diagonal entries non-negative and diagonal entries negative,
    /// i.e. `-J` is a Z-matrix.
    pub z_matrix: bool,
    /// `|J_ii| >= Σ_{j≠i} |J_ij|`, per row. This is plain row dominance,
    /// not dominance up to a positive diagonal similarity.
    pub diagonally_dominant: Vec<bool>,
    pub max_eigen_real: f64,
    /// All eigenvalue real parts below `-1e-15·‖J‖`.
    pub stable: bool,
    /// `‖δA‖_F / ‖A‖_F` with `A = C^{1/2} J C^{-1/2}` and `δA = (A - Aᵗ)/2`.
    pub antisymmetry_ratio: f64,
}

pub fn structure_report(j: &JacobianBundle, c: &DVector<f64>) -> StructureReport {
    let m = &j.matrix;
    let n = m.nrows();
    let mut z_matrix = true;
    let mut diagonally_dominant = Vec::with_capacity(n);
    for i in 0..n {
        let mut off = 0.0;
        for k in 0..n {
            if k == i {
                if m[(i, i)] >= 0.0 {
                    z_matrix = false;
                }
            } else {
                if m[(i, k)] < 0.0 {
                    z_matrix = false;
                }
                off += m[(i, k)].abs();
            }
        }
        diagonally_dominant.push(m[(i, i)].abs() >= off);
    }
    let max_eigen_real = modes::eigenvalues(m)
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let a = similarity_transform(m, c);
    let delta = (&a - a.transpose()) * 0.5;
    StructureReport {
        z_matrix,
        diagonally_dominant,
        max_eigen_real,
        stable: max_eigen_real < -1e-15 * m.norm(),
        antisymmetry_ratio: delta.norm() / a.norm(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::balance_rhs;

    fn table1_kelvin() -> DVector<f64> {
        DVector::from_vec(vec![2.6, 3.6, 2.6, 2.3, 0.2, 2.2, 6.3, 4.7, 15.9, 11.1]).add_scalar(273.15)
    }

    fn single_node() -> ThermalModel {
        ThermalModel::from_json(r#"{"nodes":[{"capacitance":100,"env_radiation":2e-9}],"env_temperature":0}"#)
            .unwrap()
    }

    #[test]
    fn single_node_scalar_formula() {
        let t = DVector::from_element(1, (10.0f64 / 2e-9).powf(0.25));
        let j = jacobian_exact(&single_node(), &t).unwrap();
        let want = -4.0 * 2e-9 * t[0].powi(3) / 100.0;
        assert!((j.matrix[(0, 0)] - want).abs() < 1e-18);
        assert!((j.matrix[(0, 0)] + 1.504e-3).abs() < 1e-5);
        let h = jacobian_heuristic(&single_node(), &t, true).unwrap();
        assert_eq!(h.matrix, j.matrix);
        let h = jacobian_heuristic(&single_node(), &t, false).unwrap();
        assert_eq!(h.matrix, j.matrix);
    }

    #[test]
    fn pure_conduction_is_temperature_independent() {
        // a vanishing environment coupling on node 3 keeps the model connected
        let model = ThermalModel::from_json(
            r#"{"nodes":[{"capacitance":2},{"capacitance":4},{"capacitance":1,"env_radiation":1e-30}],
            "conduction":[{"i":1,"j":2,"value":0.5},{"i":2,"j":3,"value":0.25}]}"#,
        )
        .unwrap();
        let a = jacobian_exact(&model, &DVector::from_element(3, 100.0)).unwrap();
        let b = jacobian_exact(&model, &DVector::from_vec(vec![50.0, 300.0, 700.0])).unwrap();
        assert!((&a.matrix - &b.matrix).amax() < 1e-20);
        assert_eq!(a.matrix[(0, 1)], 0.25);
        assert_eq!(a.matrix[(1, 0)], 0.125);
        assert_eq!(a.matrix[(1, 1)], -0.1875);
    }

    #[test]
    fn equal_temperatures_make_variants_agree() {
        let model = ThermalModel::ten_node_moon();
        let t = DVector::from_element(10, 280.0);
        let exact = jacobian_exact(&model, &t).unwrap().matrix;
        for sym in [false, true] {
            let h = jacobian_heuristic(&model, &t, sym).unwrap().matrix;
            assert!((&h - &exact).amax() <= 1e-15 * exact.amax());
        }
    }

    #[test]
    fn heuristic_close_to_exact_and_c_symmetric() {
        let model = ThermalModel::ten_node_moon();
        let t = table1_kelvin();
        let exact = jacobian_exact(&model, &t).unwrap();
        for sym in [false, true] {
            let h = jacobian_heuristic(&model, &t, sym).unwrap();
            let rel = (&h.matrix - &exact.matrix).norm() / exact.matrix.norm();
            assert!(rel < 1e-2, "relative difference {rel}");
            let a = similarity_transform(&h.matrix, model.capacitance());
            assert!((&a - a.transpose()).amax() <= 1e-12 * a.amax());
        }
    }

    #[test]
    fn ten_node_printed_entries() {
        let model = ThermalModel::ten_node_moon();
        let j = jacobian_exact(&model, &table1_kelvin()).unwrap();
        assert!((j.matrix[(0, 1)] - 1.18e-3).abs() < 1e-5);
        assert!((j.matrix[(0, 0)] + 6.99e-3).abs() < 1e-5);
    }

    #[test]
    fn structure_of_ten_node_jacobians() {
        let model = ThermalModel::ten_node_moon();
        let t = table1_kelvin();
        let exact = jacobian_exact(&model, &t).unwrap();
        let rep = structure_report(&exact, model.capacitance());
        assert!(rep.z_matrix);
        assert!(rep.diagonally_dominant.iter().all(|&d| d));
        assert!(rep.stable);
        assert!(rep.antisymmetry_ratio < 1e-3);
        let sym = jacobian_heuristic(&model, &t, true).unwrap();
        let rep = structure_report(&sym, model.capacitance());
        assert!(rep.antisymmetry_ratio < 1e-12);
    }

    #[test]
    fn finite_difference_agrees_with_exact() {
        let model = ThermalModel::ten_node_moon();
        let t = table1_kelvin();
        let q = DVector::from_vec(vec![15.18, 2.30, 15.17, 14.80, 3.91, 0.63, 0.0, 1.70, 4.35, 6.15]);
        let exact = jacobian_exact(&model, &t).unwrap().matrix;
        let step = 1e-3;
        for m in 0..10 {
            let mut tp = t.clone();
            let mut tm = t.clone();
            tp[m] += step;
            tm[m] -= step;
            let fp = balance_rhs(&model, &tp, &q).unwrap();
            let fm = balance_rhs(&model, &tm, &q).unwrap();
            for i in 0..10 {
                let fd = (fp[i] - fm[i]) / (2.0 * step);
                let e = exact[(i, m)];
                assert!(
                    (fd - e).abs() <= 1e-6 * e.abs().max(1e-12) + 1e-14,
                    "({i},{m}) fd {fd} exact {e}"
                );
            }
        }
    }

    #[test]
    fn rejects_bad_temperatures() {
        let model = ThermalModel::ten_node_moon();
        assert!(matches!(
            jacobian_exact(&model, &DVector::from_element(3, 300.0)),
            Err(Error::Dimension(_))
        ));
        let mut t = DVector::from_element(10, 300.0);
        t[4] = -1.0;
        assert!(jacobian_heuristic(&model, &t, true).is_err());
    }
}
