//! Periodic thermal analysis of lumped-parameter spacecraft models.
//!
//! The pipeline linearizes the nonlinear energy balance about the steady
//! state of the orbit-averaged heat inputs and solves the resulting linear
//! periodic problem to first and second perturbative order, either through
//! the discrete Fourier transform or through the periodicity-reduced
//! convolution integral. A direct Runge–Kutta integration of the nonlinear
//! equations serves as the reference solution.
//!
//! ```no_run
//! use orbtherm::prelude::*;
//!
//! let model = ThermalModel::ten_node_moon();
//! let means = model.mean_inputs().unwrap().clone();
//! let steady = solve_steady(&model, &means, &SteadyOptions::default()).unwrap();
//! let jac = jacobian_exact(&model, &steady.temperatures).unwrap();
//! let modes = decompose(&jac, model.capacitance()).unwrap();
//! println!("slowest relaxation time: {:.0} s", modes.relaxation_times[9]);
//! ```

pub mod error;
pub mod integrator;
pub mod jacobian;
pub mod model;
pub mod modes;
pub mod periodic;
pub mod steady;
pub mod synth;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::jacobian::{jacobian_exact, jacobian_heuristic, structure_report, JacobianBundle, JacobianVariant};
    pub use crate::model::{load_model, load_profile, total_load, HeatProfile, ThermalModel};
    pub use crate::modes::{antisymmetric_eigen_shift, decompose, perron_mode, ModeBasis};
    pub use crate::integrator::{
        compare, compare_samples, cyclic_solve, integrate, ComparisonReport, CyclicOptions, CyclicOrbit,
        IntegratorOptions, Record, SampledOrbit, Trajectory,
    };
    pub use crate::periodic::{
        cesaro_smooth, dft_forward, first_order_fourier, first_order_integral, mode_truncated, second_order_driving,
        second_order_solve, solve_periodic, Evaluation, LinearSolver, Method, PeriodicOptions, PeriodicSolution,
        Quadrature, Spectrum, Summation,
    };
    pub use crate::steady::{balance_rhs, hot_cold_cases, solve_steady, SteadyOptions, SteadyState};
    pub use crate::synth::EclipseProfile;
}
