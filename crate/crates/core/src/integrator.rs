//! Direct integration of the nonlinear energy balance.
//!
//! Dormand–Prince 5(4) with PI step control. The heat input is linear between
//! profile samples, so the integrator steps segment by segment and never
//! straddles a kink of the right-hand side.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{HeatProfile, ThermalModel};
use crate::periodic::PeriodicSolution;
use crate::steady::rhs_into;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    /// K.
    pub atol: f64,
    /// First trial step, s; defaults to a fraction of the sample spacing.
    pub initial_step: Option<f64>,
    /// Upper bound on the step, s.
    pub max_step: Option<f64>,
    /// Steps below this size (s) abort the integration.
    pub min_step: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-8,
            atol: 1e-6,
            initial_step: None,
            max_step: None,
            min_step: 1e-8,
        }
    }
}

impl IntegratorOptions {
    fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            )));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter(format!("max step must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub min_step: f64,
    pub max_step: f64,
}

impl StepStats {
    fn record(&mut self, h: f64) {
        if self.accepted == 0 {
            self.min_step = h;
            self.max_step = h;
        } else {
            self.min_step = self.min_step.min(h);
            self.max_step = self.max_step.max(h);
        }
        self.accepted += 1;
    }

    fn merge(&mut self, other: &StepStats) {
        if other.accepted == 0 {
            self.rejected += other.rejected;
            return;
        }
        if self.accepted == 0 {
            self.min_step = other.min_step;
            self.max_step = other.max_step;
        } else {
            self.min_step = self.min_step.min(other.min_step);
            self.max_step = self.max_step.max(other.max_step);
        }
        self.accepted += other.accepted;
        self.rejected += other.rejected;
    }
}

/// Which states to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Record {
    /// Start, every profile sample time crossed, and the end.
    Samples,
    /// Every accepted step.
    Steps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn last(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory holds at least its start")
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const ALPHA: f64 = 0.7 / 5.0;
const BETA: f64 = 0.4 / 5.0;

struct Stepper<'a> {
    model: &'a ThermalModel,
    opts: &'a IntegratorOptions,
    k: [DVector<f64>; 7],
    stage: DVector<f64>,
    q: DVector<f64>,
    err_prev: f64,
    h: f64,
    stats: StepStats,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a ThermalModel, opts: &'a IntegratorOptions, h: f64) -> Self {
        let n = model.node_count();
        Stepper {
            model,
            opts,
            k: std::array::from_fn(|_| DVector::zeros(n)),
            stage: DVector::zeros(n),
            q: DVector::zeros(n),
            err_prev: 1e-4,
            h,
            stats: StepStats::default(),
        }
    }

    /// Advances `y` from `t0` to `t1` with heat input linear from `q0` to `q1`.
    fn segment<F: FnMut(f64, &DVector<f64>)>(
        &mut self,
        y: &mut DVector<f64>,
        t0: f64,
        t1: f64,
        q0: &DVector<f64>,
        q1: &DVector<f64>,
        mut on_step: F,
    ) -> Result<()> {
        let span = t1 - t0;
        let n = y.len();
        let mut t = t0;
        let mut fsal = false;
        while t1 - t > 1e-12 * span.abs().max(1.0) {
            let mut h = self.h.min(t1 - t);
            if let Some(hmax) = self.opts.max_step {
                h = h.min(hmax);
            }
            let last = h >= t1 - t;
            if !fsal {
                self.heat(t, t0, span, q0, q1);
                rhs_into(self.model, y, &self.q, &mut self.k[0]);
            }
            for s in 1..7 {
                self.stage.copy_from(y);
                for (p, a) in A[s].iter().enumerate().take(s) {
                    if *a != 0.0 {
                        self.stage.axpy(h * a, &self.k[p], 1.0);
                    }
                }
                let ts = t + C[s] * h;
                self.heat(ts, t0, span, q0, q1);
                rhs_into(self.model, &self.stage, &self.q, &mut self.k[s]);
            }
            // stage 7 was evaluated at the fifth-order solution
            let mut err = 0.0;
            let mut positive = true;
            for i in 0..n {
                let mut e = 0.0;
                for (s, w) in E.iter().enumerate() {
                    e += w * self.k[s][i];
                }
                let ynew = self.stage[i];
                if !(ynew > 0.0) {
                    positive = false;
                }
                let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(ynew.abs());
                err += (h * e / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if positive && err <= 1.0 {
                y.copy_from(&self.stage);
                t = if last { t1 } else { t + h };
                self.stats.record(h);
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-ALPHA) * self.err_prev.powf(BETA)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                self.err_prev = err.max(1e-4);
                // a step cut short by the segment end does not shrink the next
                self.h = if last { self.h.max(h * factor) } else { h * factor };
                let (k0, rest) = self.k.split_at_mut(1);
                k0[0].copy_from(&rest[5]);
                fsal = true;
                on_step(t, y);
            } else {
                let factor = if err.is_finite() {
                    (SAFETY * err.powf(-ALPHA)).clamp(MIN_FACTOR, 1.0)
                } else {
                    MIN_FACTOR
                };
                self.h = h * factor;
                self.stats.rejected += 1;
                fsal = true;
                if self.h < self.opts.min_step {
                    return Err(Error::StepUnderflow { t, h: self.h });
                }
            }
        }
        Ok(())
    }

    fn heat(&mut self, t: f64, t0: f64, span: f64, q0: &DVector<f64>, q1: &DVector<f64>) {
        let frac = ((t - t0) / span).clamp(0.0, 1.0);
        for i in 0..self.q.len() {
            self.q[i] = (1.0 - frac) * q0[i] + frac * q1[i];
        }
    }
}

/// Integrates from `start` (K) over `t_span` (s) with the periodic, linearly
/// interpolated heat input of `profile`.
pub fn integrate(
    model: &ThermalModel,
    profile: &HeatProfile,
    start: &DVector<f64>,
    t_span: (f64, f64),
    opts: &IntegratorOptions,
    record: Record,
) -> Result<Trajectory> {
    opts.validate()?;
    let n = model.node_count();
    if start.len() != n || profile.node_count() != n {
        return Err(Error::Dimension(format!(
            "model has {n} nodes, start has {}, profile has {}",
            start.len(),
            profile.node_count()
        )));
    }
    if let Some(i) = start.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Validation(format!(
            "start temperature of node {} must be positive, got {}",
            i + 1,
            start[i]
        )));
    }
    let (t_begin, t_end) = t_span;
    if !(t_begin.is_finite() && t_end.is_finite() && t_end >= t_begin) {
        return Err(Error::InvalidParameter(format!(
            "invalid time span [{t_begin}, {t_end}]"
        )));
    }
    let h = profile.step();
    let samples = profile.samples();
    let count = profile.sample_count();
    let mut stepper = Stepper::new(model, opts, opts.initial_step.unwrap_or(0.1 * h));
    let mut y = start.clone();
    let mut traj = Trajectory {
        times: vec![t_begin],
        states: vec![y.clone()],
        stats: StepStats::default(),
    };
    let mut q0 = DVector::zeros(n);
    let mut q1 = DVector::zeros(n);
    // first grid index strictly after t_begin (with a rounding guard)
    let mut k = (t_begin / h + 1e-9).floor() as i64 + 1;
    let mut t = t_begin;
    while t < t_end {
        let grid = k as f64 * h;
        let t_next = grid.min(t_end);
        let seg_start = (k - 1) as f64 * h;
        let idx0 = (k - 1).rem_euclid(count as i64) as usize;
        let idx1 = k.rem_euclid(count as i64) as usize;
        // heat input at t and t_next on the segment's line
        let f0 = (t - seg_start) / h;
        let f1 = (t_next - seg_start) / h;
        for j in 0..n {
            let (a, b) = (samples[(idx0, j)], samples[(idx1, j)]);
            q0[j] = a + f0 * (b - a);
            q1[j] = a + f1 * (b - a);
        }
        let times = &mut traj.times;
        let states = &mut traj.states;
        stepper.segment(&mut y, t, t_next, &q0, &q1, |ts, ys| {
            if record == Record::Steps && ts < t_next {
                times.push(ts);
                states.push(ys.clone());
            }
        })?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(t_next));
        }
        if t_next > t {
            traj.times.push(t_next);
            traj.states.push(y.clone());
        }
        t = t_next;
        k += 1;
    }
    traj.stats = stepper.stats;
    Ok(traj)
}

/// States on the profile's sample grid over one period, n×N.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledOrbit {
    pub times: Vec<f64>,
    pub states: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyclicOrbit {
    pub orbit: SampledOrbit,
    /// Temperatures at the end of the last period.
    pub end_state: DVector<f64>,
    pub periods: usize,
    /// `max_i |T_i(m𝒯) - T_i((m-1)𝒯)|` for each period m, K.
    pub mismatches: Vec<f64>,
    pub stats: StepStats,
}

impl CyclicOrbit {
    /// Successive mismatch ratios.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.mismatches.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyclicOptions {
    /// K, on the max-norm start/end mismatch of one period.
    pub cycle_tol: f64,
    pub max_periods: usize,
    pub integrator: IntegratorOptions,
}

impl Default for CyclicOptions {
    fn default() -> Self {
        CyclicOptions {
            cycle_tol: 1e-3,
            max_periods: 100,
            integrator: IntegratorOptions::default(),
        }
    }
}

/// Integrates whole periods from `start` until the state repeats within
/// `cycle_tol`; returns the last period sampled at the profile's times.
pub fn cyclic_solve(
    model: &ThermalModel,
    profile: &HeatProfile,
    start: &DVector<f64>,
    opts: &CyclicOptions,
) -> Result<CyclicOrbit> {
    if !(opts.cycle_tol > 0.0) || opts.max_periods == 0 {
        return Err(Error::InvalidParameter(format!(
            "cycle tolerance must be positive and max periods at least 1 (got {}, {})",
            opts.cycle_tol, opts.max_periods
        )));
    }
    let period = profile.period();
    let n = profile.sample_count();
    let mut state = start.clone();
    let mut mismatches = Vec::new();
    let mut stats = StepStats::default();
    for m in 0..opts.max_periods {
        let traj = integrate(model, profile, &state, (0.0, period), &opts.integrator, Record::Samples)?;
        stats.merge(&traj.stats);
        let end = traj.last().clone();
        let mismatch = (&end - &state).amax();
        mismatches.push(mismatch);
        if mismatch <= opts.cycle_tol {
            let states = DMatrix::from_fn(n, state.len(), |k, j| traj.states[k][j]);
            return Ok(CyclicOrbit {
                orbit: SampledOrbit {
                    times: traj.times[..n].to_vec(),
                    states,
                },
                end_state: end,
                periods: m + 1,
                mismatches,
                stats,
            });
        }
        state = end;
    }
    Err(Error::MaxPeriods {
        periods: opts.max_periods,
        mismatch: *mismatches.last().unwrap(),
    })
}

/// `ΔT = T_oracle - T_linear` on a common sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    /// n×N, K.
    pub delta: DMatrix<f64>,
    /// Per node, K.
    pub max_abs: DVector<f64>,
    /// Per node, sample index of the largest |ΔT|.
    pub argmax: Vec<usize>,
}

impl ComparisonReport {
    pub fn max_abs_overall(&self) -> f64 {
        self.delta.amax()
    }

    /// Sample indices ordered by their largest |ΔT| over nodes, descending.
    pub fn ranked_samples(&self) -> Vec<usize> {
        let worst: Vec<f64> = self.delta.row_iter().map(|r| r.amax()).collect();
        let mut idx: Vec<usize> = (0..worst.len()).collect();
        idx.sort_by(|&a, &b| worst[b].total_cmp(&worst[a]).then(a.cmp(&b)));
        idx
    }
}

/// Compares two sampled orbits given as (times, n×N states).
pub fn compare_samples(
    linear_times: &[f64],
    linear: &DMatrix<f64>,
    oracle_times: &[f64],
    oracle: &DMatrix<f64>,
) -> Result<ComparisonReport> {
    if linear.shape() != oracle.shape() || linear_times.len() != oracle_times.len() || linear_times.len() != linear.nrows() {
        return Err(Error::GridMismatch(format!(
            "linear is {}x{} on {} times, oracle is {}x{} on {} times",
            linear.nrows(),
            linear.ncols(),
            linear_times.len(),
            oracle.nrows(),
            oracle.ncols(),
            oracle_times.len()
        )));
    }
    let span = linear_times.last().copied().unwrap_or(0.0).abs().max(1.0);
    if let Some(k) = linear_times
        .iter()
        .zip(oracle_times)
        .position(|(a, b)| (a - b).abs() > 1e-9 * span)
    {
        return Err(Error::GridMismatch(format!(
            "sample {k}: linear at {} s, oracle at {} s",
            linear_times[k], oracle_times[k]
        )));
    }
    let delta = oracle - linear;
    if delta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(0.0));
    }
    let mut max_abs = DVector::zeros(delta.ncols());
    let mut argmax = vec![0; delta.ncols()];
    for (j, col) in delta.column_iter().enumerate() {
        let k = col.iamax();
        argmax[j] = k;
        max_abs[j] = col[k].abs();
    }
    Ok(ComparisonReport {
        times: linear_times.to_vec(),
        delta,
        max_abs,
        argmax,
    })
}

pub fn compare(linear: &PeriodicSolution, oracle: &SampledOrbit) -> Result<ComparisonReport> {
    compare_samples(&linear.times, &linear.total, &oracle.times, &oracle.states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::decompose;
    use crate::jacobian::jacobian_exact;
    use crate::periodic::{solve_periodic, LinearSolver, PeriodicOptions, Summation};
    use crate::steady::{solve_steady, SteadyOptions};
    use crate::synth::EclipseProfile;
    use std::f64::consts::PI;

    struct Moon {
        model: ThermalModel,
        profile: HeatProfile,
        base: DVector<f64>,
    }

    fn moon(hard_steps: bool) -> Moon {
        let model = ThermalModel::ten_node_moon();
        let means = model.mean_inputs().unwrap().clone();
        let profile = EclipseProfile { hard_steps, ..Default::default() }
            .generate(&model, &means)
            .unwrap();
        let base = solve_steady(&model, &means, &SteadyOptions::default()).unwrap().temperatures;
        Moon { model, profile, base }
    }

    fn single_node() -> ThermalModel {
        ThermalModel::from_json(r#"{"nodes":[{"capacitance":1000,"env_radiation":2e-9}],"env_temperature":0}"#)
            .unwrap()
    }

    #[test]
    fn small_displacement_decays_exponentially() {
        // a small displacement from equilibrium relaxes at the linear rate
        let model = single_node();
        let q = 10.0;
        let teq = (q / 2e-9f64).powf(0.25);
        let profile = HeatProfile::constant(&model, &DVector::from_element(1, q), 16, 6400.0).unwrap();
        let lambda = -4.0 * 2e-9 * teq.powi(3) / 1000.0;
        let d0 = 1e-4;
        let opts = IntegratorOptions { rtol: 1e-12, atol: 1e-12, ..Default::default() };
        let traj = integrate(&model, &profile, &DVector::from_element(1, teq + d0), (0.0, 6400.0), &opts, Record::Samples).unwrap();
        for (t, y) in traj.times.iter().zip(&traj.states) {
            let linear = teq + d0 * (lambda * t).exp();
            assert!((y[0] - linear).abs() < 1e-8, "t = {t}");
        }
        assert_eq!(traj.times.len(), 17);
        assert_eq!(*traj.times.last().unwrap(), 6400.0);
    }

    #[test]
    fn equilibrium_is_invariant() {
        let m = moon(false);
        let means = m.model.mean_inputs().unwrap().clone();
        let constant = HeatProfile::constant(&m.model, &means, 111, 6660.0).unwrap();
        let opts = IntegratorOptions::default();
        let traj = integrate(&m.model, &constant, &m.base, (0.0, 10.0 * 6660.0), &opts, Record::Samples).unwrap();
        for y in &traj.states {
            assert!((y - &m.base).amax() < 10.0 * opts.atol);
        }
        let cyc = cyclic_solve(&m.model, &constant, &m.base, &CyclicOptions::default()).unwrap();
        assert_eq!(cyc.periods, 1);
    }

    #[test]
    fn energy_bookkeeping() {
        let m = moon(false);
        let opts = IntegratorOptions { rtol: 1e-10, atol: 1e-8, max_step: Some(5.0), ..Default::default() };
        let traj = integrate(&m.model, &m.profile, &m.base, (0.0, 6660.0), &opts, Record::Steps).unwrap();
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        let c = m.model.capacitance();
        let r = m.model.env_radiation();
        let t04 = m.model.env_temperature().powi(4);
        let mut q = DVector::zeros(10);
        let mut source = |t: f64, y: &DVector<f64>| {
            m.profile.interpolate(t, &mut q);
            q.sum() - (0..10).map(|i| r[i] * (y[i].powi(4) - t04)).sum::<f64>()
        };
        let mut integral = 0.0;
        for w in 0..traj.times.len() - 1 {
            let (t0, t1) = (traj.times[w], traj.times[w + 1]);
            integral += 0.5 * (t1 - t0) * (source(t0, &traj.states[w]) + source(t1, &traj.states[w + 1]));
        }
        let stored = c.dot(&(traj.last() - &traj.states[0]));
        let scale: f64 = m.profile.means().sum() * 6660.0;
        assert!((stored - integral).abs() < 1e-5 * scale, "{stored} vs {integral}");
    }

    #[test]
    fn single_node_converges_to_first_order_closed_form() {
        let model = single_node();
        let q_mean = 10.0;
        let period = 6660.0;
        let n = 222;
        let teq = (q_mean / 2e-9f64).powf(0.25);
        let lambda = -4.0 * 2e-9 * teq.powi(3) / 1000.0;
        let omega = 2.0 * PI / period;
        let mut errs = Vec::new();
        for amp in [1.0, 0.5] {
            let samples = DMatrix::from_fn(n, 1, |k, _| q_mean + amp * (omega * k as f64 * period / n as f64).cos());
            let profile = HeatProfile::new(&model, period, samples).unwrap();
            let opts = CyclicOptions {
                cycle_tol: 1e-9,
                integrator: IntegratorOptions { rtol: 1e-11, atol: 1e-10, ..Default::default() },
                ..Default::default()
            };
            let orbit = cyclic_solve(&model, &profile, &DVector::from_element(1, teq), &opts).unwrap();
            let f = amp / 1000.0;
            let mut err: f64 = 0.0;
            for (k, &t) in orbit.orbit.times.iter().enumerate() {
                let exact = teq + f / (lambda * lambda + omega * omega).sqrt() * (omega * t - omega.atan2(-lambda)).cos();
                err = err.max((orbit.orbit.states[(k, 0)] - exact).abs());
            }
            let first = f / (lambda * lambda + omega * omega).sqrt();
            assert!(err < 0.05 * first, "{err} vs {first}");
            errs.push(err);
        }
        // interpolation error of the cosine is O(h²)·amp, the nonlinear error
        // O(amp²); halving amp must shrink the error by well over 2
        assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn cyclic_solve_contracts_at_slowest_rate() {
        let m = moon(false);
        let cyc = cyclic_solve(&m.model, &m.profile, &m.base, &CyclicOptions::default()).unwrap();
        assert!(cyc.periods <= 15, "{}", cyc.periods);
        let ratios = cyc.contraction_ratios();
        let tail = &ratios[ratios.len().saturating_sub(3)..];
        let jac = jacobian_exact(&m.model, &m.base).unwrap();
        let slow = decompose(&jac, m.model.capacitance()).unwrap().eigenvalues[9];
        let theory = (slow * 6660.0).exp();
        for r in tail {
            assert!((0.2..=0.5).contains(r), "{ratios:?}");
            assert!((r - theory).abs() < 0.05, "{r} vs {theory}");
        }
        // the orbit is a fixed point of one more period
        let again = integrate(&m.model, &m.profile, &cyc.end_state, (0.0, 6660.0), &Default::default(), Record::Samples).unwrap();
        assert!((again.last() - &cyc.end_state).amax() <= 10.0 * 1e-3);
        for k in 0..111 {
            assert!((&again.states[k] - cyc.orbit.states.row(k).transpose()).amax() <= 10.0 * 1e-3);
        }
    }

    #[test]
    fn halving_tolerances_changes_orbit_below_cycle_tol() {
        let m = moon(false);
        let base = cyclic_solve(&m.model, &m.profile, &m.base, &CyclicOptions::default()).unwrap();
        let tight = CyclicOptions {
            integrator: IntegratorOptions { rtol: 5e-9, atol: 5e-7, ..Default::default() },
            ..Default::default()
        };
        let finer = cyclic_solve(&m.model, &m.profile, &m.base, &tight).unwrap();
        assert!((&base.orbit.states - &finer.orbit.states).amax() < 1e-3);
    }

    #[test]
    fn comparison_against_self_and_oracle() {
        let m = moon(false);
        let lin = solve_periodic(&m.model, &m.profile, &PeriodicOptions::default()).unwrap();
        let own = SampledOrbit { times: lin.times.clone(), states: lin.total.clone() };
        assert_eq!(compare(&lin, &own).unwrap().max_abs_overall(), 0.0);

        let oracle = cyclic_solve(
            &m.model,
            &m.profile,
            &m.base,
            &CyclicOptions { cycle_tol: 1e-6, ..Default::default() },
        )
        .unwrap();
        let report = compare(&lin, &oracle.orbit).unwrap();
        assert!(report.max_abs_overall() < lin.second_order.amax(), "{} vs {}", report.max_abs_overall(), lin.second_order.amax());

        let short = SampledOrbit { times: lin.times[..10].to_vec(), states: lin.total.rows(0, 10).into_owned() };
        assert!(matches!(compare(&lin, &short), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn bad_inputs() {
        let m = moon(false);
        let opts = IntegratorOptions::default();
        let cold = DVector::from_element(10, -1.0);
        assert!(integrate(&m.model, &m.profile, &cold, (0.0, 1.0), &opts, Record::Samples).is_err());
        assert!(integrate(&m.model, &m.profile, &m.base, (1.0, 0.0), &opts, Record::Samples).is_err());
        let loose = IntegratorOptions { rtol: 0.0, ..Default::default() };
        assert!(integrate(&m.model, &m.profile, &m.base, (0.0, 1.0), &loose, Record::Samples).is_err());
        let short = CyclicOptions { max_periods: 2, cycle_tol: 1e-9, ..Default::default() };
        assert!(matches!(
            cyclic_solve(&m.model, &m.profile, &m.base, &short),
            Err(Error::MaxPeriods { periods: 2, .. })
        ));
    }

    fn excursion(linear: &DMatrix<f64>, oracle: &DMatrix<f64>, window: usize) -> f64 {
        let n = linear.nrows();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for j in 0..linear.ncols() {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for d in 0..=2 * window {
                    let v = oracle[((k + n + d - window) % n, j)];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                worst = worst.max(linear[(k, j)] - hi).max(lo - linear[(k, j)]);
            }
        }
        worst
    }

    #[test]
    fn cesaro_reduces_square_wave_overshoot_on_one_node() {
        // relaxation time comparable to the sample spacing: the response has
        // sharp corners at the jumps
        let model = ThermalModel::from_json(r#"{"nodes":[{"capacitance":20,"env_radiation":2e-9}]}"#).unwrap();
        let n = 64;
        let period = 6400.0;
        let samples = DMatrix::from_fn(n, 1, |k, _| if k < n / 2 { 10.5 } else { 9.5 });
        let profile = HeatProfile::new(&model, period, samples).unwrap();
        let base = solve_steady(&model, profile.means(), &SteadyOptions::default()).unwrap().temperatures;
        let oracle = cyclic_solve(&model, &profile, &base, &CyclicOptions { cycle_tol: 1e-8, ..Default::default() }).unwrap();
        let plain = solve_periodic(&model, &profile, &PeriodicOptions::default()).unwrap();
        let smooth_opts = PeriodicOptions {
            solver: LinearSolver { summation: Summation::Cesaro, ..Default::default() },
            ..Default::default()
        };
        let smooth = solve_periodic(&model, &profile, &smooth_opts).unwrap();
        let p = excursion(&plain.total, &oracle.orbit.states, 2);
        let c = excursion(&smooth.total, &oracle.orbit.states, 2);
        assert!(p > 0.0, "plain summation should overshoot");
        assert!(c < p, "Cesàro {c} vs plain {p}");
    }

    #[test]
    fn second_order_improves_on_smooth_profile() {
        let model = ThermalModel::ten_node_moon();
        let means = model.mean_inputs().unwrap().clone();
        let profile = EclipseProfile::default().generate(&model, &means).unwrap();
        let base = solve_steady(&model, &means, &SteadyOptions::default()).unwrap().temperatures;
        let oracle = cyclic_solve(&model, &profile, &base, &CyclicOptions { cycle_tol: 1e-6, ..Default::default() }).unwrap();
        let first = solve_periodic(&model, &profile, &PeriodicOptions { order: 1, ..Default::default() }).unwrap();
        let second = solve_periodic(&model, &profile, &PeriodicOptions::default()).unwrap();
        let e1 = compare(&first, &oracle.orbit).unwrap().max_abs_overall();
        let e2 = compare(&second, &oracle.orbit).unwrap().max_abs_overall();
        assert!(e2 < e1, "{e2} vs {e1}");
        assert!(e2 < second.second_order.amax());
    }

    #[test]
    fn dropping_fastest_mode_changes_little() {
        let model = ThermalModel::ten_node_moon();
        let means = model.mean_inputs().unwrap().clone();
        let profile = EclipseProfile { hard_steps: true, ..Default::default() }.generate(&model, &means).unwrap();
        let full = solve_periodic(&model, &profile, &PeriodicOptions { order: 1, ..Default::default() }).unwrap();
        let opts = PeriodicOptions {
            order: 1,
            solver: LinearSolver { modes_kept: Some(9), ..Default::default() },
            ..Default::default()
        };
        let nine = solve_periodic(&model, &profile, &opts).unwrap();
        let dev = (&nine.total - &full.total).amax();
        assert!(dev > 0.0 && dev <= 1.6, "{dev}");
        assert_eq!(nine.modes_kept, Some(9));
    }

    #[test]
    fn hard_step_errors_sit_at_the_steps() {
        let model = ThermalModel::ten_node_moon();
        let means = model.mean_inputs().unwrap().clone();
        let generator = EclipseProfile { hard_steps: true, phase_spread: 0.0, ..Default::default() };
        let profile = generator.generate(&model, &means).unwrap();
        let base: DVector<f64> = solve_steady(&model, &means, &SteadyOptions::default()).unwrap().temperatures;
        let oracle = cyclic_solve(&model, &profile, &base, &CyclicOptions { cycle_tol: 1e-6, ..Default::default() }).unwrap();
        let linear = solve_periodic(&model, &profile, &PeriodicOptions::default()).unwrap();
        let report = compare(&linear, &oracle.orbit).unwrap();
        let n = profile.sample_count() as f64;
        let steps: Vec<f64> = generator.step_times(1).iter().map(|t| t / profile.step()).collect();
        for &k in &report.ranked_samples()[..2] {
            let d = steps
                .iter()
                .map(|&s| {
                    let d = (k as f64 - s).abs();
                    d.min(n - d)
                })
                .fold(f64::INFINITY, f64::min);
            assert!(d <= 2.0, "sample {k} is {d} samples from a step");
        }
    }
}
