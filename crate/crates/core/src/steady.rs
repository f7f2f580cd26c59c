//! Energy-balance residual and the averaged steady-state problem.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::jacobian::exact_matrix;
use crate::model::{HeatProfile, ThermalModel};

/// Lower bound applied to temperatures during Newton iteration, K.
const MIN_TEMPERATURE: f64 = 1.0;
const MAX_HALVINGS: usize = 30;

/// `dT_i/dt` in K/s for temperatures `t` (K) and heat inputs `qdot` (W).
pub fn balance_rhs(model: &ThermalModel, t: &DVector<f64>, qdot: &DVector<f64>) -> Result<DVector<f64>> {
    let n = model.node_count();
    if t.len() != n || qdot.len() != n {
        return Err(Error::Dimension(format!(
            "balance_rhs: model has {n} nodes, got {} temperatures and {} inputs",
            t.len(),
            qdot.len()
        )));
    }
    let mut out = DVector::zeros(n);
    rhs_into(model, t, qdot, &mut out);
    Ok(out)
}

/// Allocation-free residual used by the integrator.
pub(crate) fn rhs_into(model: &ThermalModel, t: &DVector<f64>, qdot: &DVector<f64>, out: &mut DVector<f64>) {
    let n = model.node_count();
    let k = model.conduction();
    let r = model.radiation();
    let t0 = model.env_temperature();
    let t0_4 = t0 * t0 * t0 * t0;
    for i in 0..n {
        let ti = t[i];
        let ti4 = ti * ti * ti * ti;
        let mut flow = qdot[i] - model.env_radiation()[i] * (ti4 - t0_4);
        for j in 0..n {
            if j == i {
                continue;
            }
            let (kij, rij) = (k[(i, j)], r[(i, j)]);
            if kij != 0.0 {
                flow -= kij * (ti - t[j]);
            }
            if rij != 0.0 {
                let tj = t[j];
                flow -= rij * (ti4 - tj * tj * tj * tj);
            }
        }
        out[i] = flow / model.capacitance()[i];
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    /// K.
    pub temperatures: DVector<f64>,
    /// ‖balance_rhs‖_∞ at return, K/s.
    pub residual_norm: f64,
    pub iterations: usize,
    /// W.
    pub inputs_used: DVector<f64>,
    /// Set when the 1 K floor was hit during iteration.
    pub clamped: bool,
}

impl SteadyState {
    pub fn celsius(&self) -> DVector<f64> {
        self.temperatures.add_scalar(-273.15)
    }
}

#[derive(Debug, Clone)]
pub struct SteadyOptions {
    pub init: Option<DVector<f64>>,
    /// K/s.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions {
            init: None,
            tol: 1e-9,
            max_iterations: 100,
        }
    }
}

/// Damped Newton iteration on the averaged balance `balance_rhs(T, qdot) = 0`.
pub fn solve_steady(model: &ThermalModel, qdot: &DVector<f64>, opts: &SteadyOptions) -> Result<SteadyState> {
    let n = model.node_count();
    let mut t = opts
        .init
        .clone()
        .unwrap_or_else(|| DVector::from_element(n, 300.0));
    if t.len() != n {
        return Err(Error::Dimension(format!(
            "initial guess has {} entries, model has {n} nodes",
            t.len()
        )));
    }
    let mut clamped = false;
    for v in t.iter_mut() {
        if !(*v >= MIN_TEMPERATURE) {
            *v = MIN_TEMPERATURE;
            clamped = true;
        }
    }
    let mut f = balance_rhs(model, &t, qdot)?;
    let mut norm = f.amax();
    let mut iterations = 0;
    while norm > opts.tol {
        if iterations >= opts.max_iterations {
            return Err(Error::NonConvergence {
                iterations,
                residual: norm,
                last_iterate: t.iter().copied().collect(),
            });
        }
        iterations += 1;
        let jac = exact_matrix(model, &t);
        let step = jac
            .lu()
            .solve(&(-&f))
            .ok_or_else(|| Error::Singular("steady-state Jacobian".into()))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let mut trial = &t + &step * lambda;
            let mut hit = false;
            for v in trial.iter_mut() {
                if *v < MIN_TEMPERATURE {
                    *v = MIN_TEMPERATURE;
                    hit = true;
                }
            }
            let ft = balance_rhs(model, &trial, qdot)?;
            let nt = ft.amax();
            if nt.is_finite() && nt < norm {
                clamped |= hit;
                t = trial;
                f = ft;
                norm = nt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                iterations,
                residual: norm,
                last_iterate: t.iter().copied().collect(),
            });
        }
    }
    Ok(SteadyState {
        temperatures: t,
        residual_norm: norm,
        iterations,
        inputs_used: qdot.clone(),
        clamped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HotColdCases {
    pub hot: SteadyState,
    pub hot_index: usize,
    pub cold: SteadyState,
    pub cold_index: usize,
}

/// Steady states at the samples of maximum and minimum total heat load
/// (earliest sample on ties).
pub fn hot_cold_cases(model: &ThermalModel, profile: &HeatProfile, opts: &SteadyOptions) -> Result<HotColdCases> {
    let load = profile.total_load();
    let mut hot_index = 0;
    let mut cold_index = 0;
    for (k, &v) in load.iter().enumerate() {
        if v > load[hot_index] {
            hot_index = k;
        }
        if v < load[cold_index] {
            cold_index = k;
        }
    }
    let inputs = |k: usize| profile.samples().row(k).transpose();
    Ok(HotColdCases {
        hot: solve_steady(model, &inputs(hot_index), opts)?,
        hot_index,
        cold: solve_steady(model, &inputs(cold_index), opts)?,
        cold_index,
    })
}
