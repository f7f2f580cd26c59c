//! Stationary periodic solution of the linearized problem.
//!
//! The first-order response to a zero-mean periodic driving `F(t)` is
//!
//! ```text
//! T₁(t) = ∫₀^∞ exp(τJ) F(t - τ) dτ = Σ_m e^{iω_m t} (iω_m I - J)⁻¹ F̂(m)
//! ```
//!
//! Two routes are provided: the discrete Fourier transform with one
//! resolvent solve per harmonic, and the time-domain convolution folded onto
//! one period with `[I - exp(𝒯J)]⁻¹`. The second-order correction solves the
//! same linear problem with the quadratic driving `G(T̃, T₁)`.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jacobian::{jacobian_exact, JacobianBundle};
use crate::model::{HeatProfile, ThermalModel};
use crate::modes::{self, decompose, ModeBasis};
use crate::steady::{solve_steady, SteadyOptions};

type C64 = Complex<f64>;

/// Relative tolerance on the sample mean of a driving column.
pub const ZERO_MEAN_TOLERANCE: f64 = 1e-9;
/// Gauss–Legendre nodes per sample interval for the interpolated quadrature.
const GAUSS_NODES: usize = 16;

/// Discrete Fourier coefficients of a sampled periodic vector function.
///
/// Row `m` holds `X̂(m) = (1/n) Σ_k X(k𝒯/n) e^{-2πimk/n}` for every node.
/// Row `m` with `m > n/2` stands for the negative frequency `m - n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    coefficients: DMatrix<C64>,
    period: f64,
}

impl Spectrum {
    pub fn sample_count(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn node_count(&self) -> usize {
        self.coefficients.ncols()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn coefficients(&self) -> &DMatrix<C64> {
        &self.coefficients
    }

    pub fn coefficient(&self, m: usize, node: usize) -> C64 {
        self.coefficients[(m, node)]
    }

    /// Number of independent positive harmonics below the Nyquist index.
    pub fn harmonic_count(&self) -> usize {
        (self.sample_count() - 1) / 2
    }

    /// Index of the real Nyquist coefficient, present for even `n`.
    pub fn nyquist(&self) -> Option<usize> {
        let n = self.sample_count();
        (n.is_multiple_of(2)).then_some(n / 2)
    }

    /// Angular frequency of harmonic `m`, rad/s (non-negative `m` only).
    pub fn angular_frequency(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / self.period
    }

    /// Number of independent real parameters carried by the spectrum.
    pub fn independent_real_parameters(&self) -> usize {
        2 * self.harmonic_count() + usize::from(self.nyquist().is_some())
    }
}

fn fft_columns(data: &DMatrix<C64>, inverse: bool) -> DMatrix<C64> {
    let n = data.nrows();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut out = data.clone();
    for mut col in out.column_iter_mut() {
        let mut buf: Vec<C64> = col.iter().copied().collect();
        fft.process(&mut buf);
        for (dst, src) in col.iter_mut().zip(buf) {
            *dst = src;
        }
    }
    out
}

/// Forward transform of zero-mean samples (n×N, rows are sample times).
pub fn dft_forward(driving: &DMatrix<f64>, period: f64) -> Result<Spectrum> {
    let n = driving.nrows();
    if n < 2 {
        return Err(Error::Validation(format!("need at least 2 samples, got {n}")));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::Validation(format!("period must be positive, got {period}")));
    }
    for (j, col) in driving.column_iter().enumerate() {
        let scale = col.amax();
        let mean = col.sum() / n as f64;
        if scale > 0.0 && (mean / scale).abs() > ZERO_MEAN_TOLERANCE {
            return Err(Error::NonZeroMean {
                node: j + 1,
                relative: mean / scale,
            });
        }
    }
    let complex = driving.map(|v| C64::new(v, 0.0));
    let mut coefficients = fft_columns(&complex, false) / C64::new(n as f64, 0.0);
    // exact zero mean and conjugate symmetry
    for j in 0..coefficients.ncols() {
        coefficients[(0, j)] = C64::new(0.0, 0.0);
        for m in 1..=(n - 1) / 2 {
            let avg = (coefficients[(m, j)] + coefficients[(n - m, j)].conj()) * 0.5;
            coefficients[(m, j)] = avg;
            coefficients[(n - m, j)] = avg.conj();
        }
        if n.is_multiple_of(2) {
            coefficients[(n / 2, j)].im = 0.0;
        }
    }
    Ok(Spectrum {
        coefficients,
        period,
    })
}

/// Reconstruction weighting of the harmonics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Summation {
    Plain,
    /// Fejér weights `1 - |m|/M` with `M = (n+1)/2`.
    Cesaro,
}

fn harmonic_weight(summation: Summation, m: usize, n: usize) -> f64 {
    match summation {
        Summation::Plain => 1.0,
        Summation::Cesaro => 1.0 - m as f64 / ((n + 1) as f64 / 2.0),
    }
}

/// Values at the sample times `k𝒯/n` (inverse discrete transform).
pub fn synthesize_samples(spec: &Spectrum, summation: Summation) -> DMatrix<f64> {
    let n = spec.sample_count();
    let mut coeffs = spec.coefficients.clone();
    if summation != Summation::Plain {
        for m in 1..n {
            let w = harmonic_weight(summation, m.min(n - m), n);
            coeffs.row_mut(m).scale_mut(w);
        }
    }
    fft_columns(&coeffs, true).map(|z| z.re)
}

/// Values at arbitrary times by the explicit finite Fourier sum.
pub fn synthesize_at(spec: &Spectrum, times: &[f64], summation: Summation) -> DMatrix<f64> {
    let n = spec.sample_count();
    let nodes = spec.node_count();
    let mut out = DMatrix::zeros(times.len(), nodes);
    for (r, &t) in times.iter().enumerate() {
        for j in 0..nodes {
            let mut acc = spec.coefficients[(0, j)].re;
            for m in 1..=spec.harmonic_count() {
                let phase = C64::from_polar(1.0, spec.angular_frequency(m) * t);
                acc += 2.0 * harmonic_weight(summation, m, n) * (phase * spec.coefficients[(m, j)]).re;
            }
            if let Some(m) = spec.nyquist() {
                let phase = C64::from_polar(1.0, spec.angular_frequency(m) * t);
                acc += harmonic_weight(summation, m, n) * (phase * spec.coefficients[(m, j)]).re;
            }
            out[(r, j)] = acc;
        }
    }
    out
}

fn ensure_stable(j: &DMatrix<f64>) -> Result<()> {
    let max_re = modes::eigenvalues(j)
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_re < 0.0 {
        Ok(())
    } else {
        Err(Error::Unstable(max_re))
    }
}

/// Applies `(iω_m I - J)⁻¹` harmonic by harmonic.
///
/// The Nyquist coefficient of an even-length spectrum is the response to
/// `F̂(n/2)·cos(ω_{n/2} t)` and is complex in general.
pub fn resolvent_response(j: &JacobianBundle, spec: &Spectrum) -> Result<Spectrum> {
    let n = spec.sample_count();
    let dim = j.dim();
    if spec.node_count() != dim {
        return Err(Error::Dimension(format!(
            "spectrum has {} nodes, Jacobian is {dim}x{dim}",
            spec.node_count()
        )));
    }
    ensure_stable(&j.matrix)?;
    let jc = j.matrix.map(|v| C64::new(v, 0.0));
    let mut out = DMatrix::zeros(n, dim);
    let last = spec.nyquist().unwrap_or(spec.harmonic_count());
    for m in 1..=last {
        let omega = spec.angular_frequency(m);
        let mut system = -&jc;
        for d in 0..dim {
            system[(d, d)] += C64::new(0.0, omega);
        }
        let rhs: DVector<C64> = spec.coefficients.row(m).transpose();
        let x = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular(format!("resolvent at harmonic {m}")))?;
        out.set_row(m, &x.transpose());
        if 2 * m != n {
            out.set_row(n - m, &x.map(|z| z.conj()).transpose());
        }
    }
    Ok(Spectrum {
        coefficients: out,
        period: spec.period,
    })
}

/// Sample-time evaluation or evaluation at caller-chosen times.
#[derive(Debug, Clone, Copy)]
pub enum Evaluation<'a> {
    Samples,
    Times(&'a [f64]),
}

/// First-order periodic response through the discrete Fourier transform.
pub fn first_order_fourier(j: &JacobianBundle, spectrum: &Spectrum, eval: Evaluation<'_>) -> Result<DMatrix<f64>> {
    let response = resolvent_response(j, spectrum)?;
    Ok(match eval {
        Evaluation::Samples => synthesize_samples(&response, Summation::Plain),
        Evaluation::Times(t) => synthesize_at(&response, t, Summation::Plain),
    })
}

/// Fejér-weighted reconstruction of a response spectrum at the sample times.
pub fn cesaro_smooth(response: &Spectrum) -> DMatrix<f64> {
    synthesize_samples(response, Summation::Cesaro)
}

/// Quadrature for the time-domain route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Composite trapezoidal rule on the sample grid; `O(h²)` accurate.
    Trapezoidal,
    /// Trigonometric interpolant of the samples, integrated by
    /// Gauss–Legendre on each sample interval. Exact to rounding for data
    /// band-limited by the sampling.
    Trigonometric,
}

/// First-order periodic response through `[I - exp(𝒯J)]⁻¹ ∫₀^𝒯 exp(τJ) F(t-τ) dτ`
/// at the sample times, with `F` wrapped periodically.
///
/// The driving is not required to be zero-mean; a constant driving `c`
/// yields the static response `-J⁻¹c`.
pub fn first_order_integral(
    j: &JacobianBundle,
    driving: &DMatrix<f64>,
    period: f64,
    quadrature: Quadrature,
) -> Result<DMatrix<f64>> {
    let n = driving.nrows();
    let dim = j.dim();
    if driving.ncols() != dim {
        return Err(Error::Dimension(format!(
            "driving has {} nodes, Jacobian is {dim}x{dim}",
            driving.ncols()
        )));
    }
    if n < 2 || !(period.is_finite() && period > 0.0) {
        return Err(Error::Validation(format!(
            "need n >= 2 samples and a positive period (n = {n}, period = {period})"
        )));
    }
    ensure_stable(&j.matrix)?;
    let h = period / n as f64;
    let jm = &j.matrix;
    let fold = (DMatrix::identity(dim, dim) - (jm * period).exp())
        .lu();

    // acc.column(k) = ∫₀^𝒯 exp(τJ) F(t_k - τ) dτ
    let mut acc = DMatrix::<f64>::zeros(dim, n);
    let ft = driving.transpose(); // dim × n
    match quadrature {
        Quadrature::Trapezoidal => {
            for s in 0..=n {
                let w = if s == 0 || s == n { 0.5 * h } else { h };
                let e = (jm * (s as f64 * h)).exp() * w;
                let shifted = periodic_shift(&ft, s);
                acc += &e * shifted;
            }
        }
        Quadrature::Trigonometric => {
            let (nodes, weights) = gauss_legendre(GAUSS_NODES);
            for (x, wq) in nodes.iter().zip(&weights) {
                let theta = 0.5 * h * (1.0 + x);
                // g.column(r) = F_trig(r·h - θ)
                let g = trig_interpolate(&ft, period, -theta);
                let e_theta = (jm * theta).exp() * (0.5 * h * wq);
                let mut e_s = DMatrix::identity(dim, dim);
                let e_h = (jm * h).exp();
                for s in 0..n {
                    if s > 0 {
                        e_s = &e_s * &e_h;
                    }
                    acc += (&e_s * &e_theta) * periodic_shift(&g, s);
                }
            }
        }
    }
    let t = fold
        .solve(&acc)
        .ok_or_else(|| Error::Singular("I - exp(period·J)".into()))?;
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(0.0));
    }
    Ok(t.transpose())
}

/// Columns rotated so that column `k` of the result is column `(k - s) mod n`.
fn periodic_shift(m: &DMatrix<f64>, s: usize) -> DMatrix<f64> {
    let n = m.ncols();
    DMatrix::from_fn(m.nrows(), n, |i, k| m[(i, (k + n - s % n) % n)])
}

/// Trigonometric interpolant of `samples` (dim × n) evaluated at `r·h + offset`
/// for `r = 0..n`. The Nyquist term of even `n` is taken as a cosine.
fn trig_interpolate(samples: &DMatrix<f64>, period: f64, offset: f64) -> DMatrix<f64> {
    let n = samples.ncols();
    let h = period / n as f64;
    let even = n.is_multiple_of(2);
    // cardinal function depends only on (r - k)
    let kernel: Vec<f64> = (0..n)
        .map(|d| {
            let x = PI * (d as f64 * h + offset) / period;
            let s = x.sin();
            if s.abs() < 1e-14 {
                return if (d as f64 * h + offset).abs() < 0.5 * h { 1.0 } else { 0.0 };
            }
            let num = (n as f64 * x).sin();
            if even {
                num * x.cos() / (n as f64 * s)
            } else {
                num / (n as f64 * s)
            }
        })
        .collect();
    DMatrix::from_fn(samples.nrows(), n, |i, r| {
        let mut acc = 0.0;
        for k in 0..n {
            acc += samples[(i, k)] * kernel[(r + n - k) % n];
        }
        acc
    })
}

/// Nodes and weights of the `q`-point Gauss–Legendre rule on [-1, 1].
fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q {
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Second-order driving `G` (K/s) at each sample, from the steady state
/// `base` and the first-order response (n×N).
///
/// `G_i = Σ_j (6R_ij/C_i) T̃_j² T₁_j² - (6/C_i)(Σ_j R_ij + R_i) T̃_i² T₁_i²`.
pub fn second_order_driving(
    model: &ThermalModel,
    base: &DVector<f64>,
    first_order: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let dim = model.node_count();
    if base.len() != dim || first_order.ncols() != dim {
        return Err(Error::Dimension(format!(
            "model has {dim} nodes, got base {} and first order {} columns",
            base.len(),
            first_order.ncols()
        )));
    }
    let r = model.radiation();
    let c = model.capacitance();
    let loss: Vec<f64> = (0..dim)
        .map(|i| r.row(i).sum() + model.env_radiation()[i])
        .collect();
    let mut g = DMatrix::zeros(first_order.nrows(), dim);
    for k in 0..first_order.nrows() {
        let sq: Vec<f64> = (0..dim)
            .map(|i| base[i] * base[i] * first_order[(k, i)] * first_order[(k, i)])
            .collect();
        for i in 0..dim {
            let mut gain = 0.0;
            for jn in 0..dim {
                gain += r[(i, jn)] * sq[jn];
            }
            g[(k, i)] = 6.0 * (gain - loss[i] * sq[i]) / c[i];
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fourier,
    Integral,
}

/// How a mean-free driving is turned into a periodic response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolver {
    pub method: Method,
    pub quadrature: Quadrature,
    pub summation: Summation,
    /// Number of slowest modes kept (Fourier route only); `None` keeps all.
    pub modes_kept: Option<usize>,
    /// Replace dropped modes by their quasi-static term `F_a(t)/(-λ_a)`.
    pub asymptotic: bool,
}

impl Default for LinearSolver {
    fn default() -> Self {
        LinearSolver {
            method: Method::Fourier,
            quadrature: Quadrature::Trigonometric,
            summation: Summation::Plain,
            modes_kept: None,
            asymptotic: false,
        }
    }
}

impl LinearSolver {
    fn validate(&self) -> Result<()> {
        if self.method == Method::Integral {
            if self.summation != Summation::Plain {
                return Err(Error::InvalidParameter(
                    "Cesàro summation requires the Fourier method".into(),
                ));
            }
            if self.modes_kept.is_some() {
                return Err(Error::InvalidParameter(
                    "mode truncation requires the Fourier method".into(),
                ));
            }
        }
        Ok(())
    }

    /// Response (n×N) to a zero-mean driving.
    pub fn respond(
        &self,
        j: &JacobianBundle,
        basis: Option<&ModeBasis>,
        driving: &DMatrix<f64>,
        period: f64,
    ) -> Result<DMatrix<f64>> {
        self.validate()?;
        match self.method {
            Method::Integral => first_order_integral(j, driving, period, self.quadrature),
            Method::Fourier => {
                let spectrum = dft_forward(driving, period)?;
                let response = match (self.modes_kept, basis) {
                    (Some(keep), Some(b)) => modal_response(b, &spectrum, keep, self.asymptotic)?,
                    (Some(_), None) => {
                        return Err(Error::InvalidParameter(
                            "mode truncation needs a mode basis".into(),
                        ))
                    }
                    (None, _) => resolvent_response(j, &spectrum)?,
                };
                Ok(synthesize_samples(&response, self.summation))
            }
        }
    }
}

/// Response spectrum summed over the `keep` slowest modes.
fn modal_response(basis: &ModeBasis, spectrum: &Spectrum, keep: usize, asymptotic: bool) -> Result<Spectrum> {
    let dim = basis.len();
    if keep > dim {
        return Err(Error::InvalidParameter(format!(
            "cannot keep {keep} modes of {dim}"
        )));
    }
    if spectrum.node_count() != dim {
        return Err(Error::Dimension(format!(
            "spectrum has {} nodes, basis has {dim} modes",
            spectrum.node_count()
        )));
    }
    let n = spectrum.sample_count();
    let p = basis.mode_matrix.map(|v| C64::new(v, 0.0));
    let p_inv = basis.inverse().map(|v| C64::new(v, 0.0));
    // modes are stored fastest first
    let first_kept = dim - keep;
    let mut out = DMatrix::zeros(n, dim);
    let last = spectrum.nyquist().unwrap_or(spectrum.harmonic_count());
    for m in 1..=last {
        // the Nyquist row is the response to a cosine, as in resolvent_response
        let omega = spectrum.angular_frequency(m);
        let modal: DVector<C64> = &p_inv * spectrum.coefficients.row(m).transpose();
        let mut scaled = DVector::zeros(dim);
        for a in 0..dim {
            let lambda = basis.eigenvalues[a];
            scaled[a] = if a >= first_kept {
                modal[a] / C64::new(-lambda, omega)
            } else if asymptotic {
                modal[a] / -lambda
            } else {
                C64::new(0.0, 0.0)
            };
        }
        let row = &p * scaled;
        out.set_row(m, &row.transpose());
        if 2 * m != n {
            out.set_row(n - m, &row.map(|z| z.conj()).transpose());
        }
    }
    Ok(Spectrum {
        coefficients: out,
        period: spectrum.period,
    })
}

/// First-order response using only the `keep` slowest thermal modes.
pub fn mode_truncated(basis: &ModeBasis, spectrum: &Spectrum, keep: usize, asymptotic: bool) -> Result<DMatrix<f64>> {
    Ok(synthesize_samples(
        &modal_response(basis, spectrum, keep, asymptotic)?,
        Summation::Plain,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrder {
    /// Periodic correction including the static shift, n×N, K.
    pub correction: DMatrix<f64>,
    /// `-J⁻¹⟨G⟩`, K.
    pub static_shift: DVector<f64>,
    /// `⟨G⟩`, K/s.
    pub mean_driving: DVector<f64>,
}

/// Solves the second-order problem: the periodic response to `G - ⟨G⟩`
/// plus the static response `-J⁻¹⟨G⟩` to its mean.
pub fn second_order_solve(
    j: &JacobianBundle,
    basis: Option<&ModeBasis>,
    g: &DMatrix<f64>,
    period: f64,
    solver: &LinearSolver,
) -> Result<SecondOrder> {
    let n = g.nrows();
    let dim = j.dim();
    let mean_driving = DVector::from_iterator(dim, g.column_iter().map(|c| c.sum() / n as f64));
    let mut centered = g.clone();
    for (jn, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean_driving[jn]);
    }
    let mut correction = solver.respond(j, basis, &centered, period)?;
    let static_shift = j
        .matrix
        .clone()
        .lu()
        .solve(&(-&mean_driving))
        .ok_or_else(|| Error::Singular("Jacobian".into()))?;
    for mut row in correction.row_iter_mut() {
        row += static_shift.transpose();
    }
    Ok(SecondOrder {
        correction,
        static_shift,
        mean_driving,
    })
}

#[derive(Debug, Clone)]
pub struct PeriodicOptions {
    pub solver: LinearSolver,
    /// 1 or 2.
    pub order: u8,
    pub steady: SteadyOptions,
}

impl Default for PeriodicOptions {
    fn default() -> Self {
        PeriodicOptions {
            solver: LinearSolver::default(),
            order: 2,
            steady: SteadyOptions::default(),
        }
    }
}

/// Sampled `T̃ + T₁(t) + T₂(t)` with its components.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSolution {
    pub times: Vec<f64>,
    pub base: DVector<f64>,
    pub first_order: DMatrix<f64>,
    pub second_order: DMatrix<f64>,
    pub second_order_shift: DVector<f64>,
    pub total: DMatrix<f64>,
    pub order: u8,
    pub method: Method,
    pub modes_kept: Option<usize>,
    pub asymptotic: bool,
    pub cesaro: bool,
}

/// Full pipeline: averaged steady state, exact Jacobian, first and
/// (optionally) second order.
pub fn solve_periodic(model: &ThermalModel, profile: &HeatProfile, opts: &PeriodicOptions) -> Result<PeriodicSolution> {
    if !(1..=2).contains(&opts.order) {
        return Err(Error::InvalidParameter(format!(
            "order must be 1 or 2, got {}",
            opts.order
        )));
    }
    opts.solver.validate()?;
    let steady = solve_steady(model, profile.means(), &opts.steady)?;
    let jac = jacobian_exact(model, &steady.temperatures)?;
    let basis = match opts.solver.modes_kept {
        Some(_) => Some(decompose(&jac, model.capacitance())?),
        None => None,
    };
    let first = opts
        .solver
        .respond(&jac, basis.as_ref(), profile.driving(), profile.period())?;
    let n = profile.sample_count();
    let dim = model.node_count();
    let (second, shift) = if opts.order == 2 {
        let g = second_order_driving(model, &steady.temperatures, &first)?;
        let s = second_order_solve(&jac, basis.as_ref(), &g, profile.period(), &opts.solver)?;
        (s.correction, s.static_shift)
    } else {
        (DMatrix::zeros(n, dim), DVector::zeros(dim))
    };
    let mut total = &first + &second;
    for mut row in total.row_iter_mut() {
        row += steady.temperatures.transpose();
    }
    Ok(PeriodicSolution {
        times: profile.times(),
        base: steady.temperatures,
        first_order: first,
        second_order: second,
        second_order_shift: shift,
        total,
        order: opts.order,
        method: opts.solver.method,
        modes_kept: opts.solver.modes_kept,
        asymptotic: opts.solver.asymptotic,
        cesaro: opts.solver.summation == Summation::Cesaro,
    })
}
