//! `orbtherm` command-line front end.
//!
//! Exit codes: 0 on success, 1 when the analysis fails, 2 on usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde_json::json;

use orbtherm::jacobian::{jacobian_heuristic, RadiationConductances};
use orbtherm::model::fmt_f64;
use orbtherm::prelude::*;

const KELVIN_OFFSET: f64 = 273.15;

#[derive(Parser)]
#[command(name = "orbtherm", version, about = "Periodic thermal analysis of lumped-parameter spacecraft models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steady state of the orbit-averaged heat inputs.
    Steady(SteadyArgs),
    /// Steady states at the samples of maximum and minimum total heat load.
    Hotcold(HotColdArgs),
    /// Jacobian at the steady state, with structure diagnostics.
    Jacobian(JacobianArgs),
    /// Thermal modes: eigenvalues, relaxation times and the Perron mode.
    Modes(ModesArgs),
    /// Stationary periodic solution of the linearized problem.
    Periodic(PeriodicArgs),
    /// Direct integration of the nonlinear equations.
    Integrate(IntegrateArgs),
    /// Period-by-period integration until the orbit repeats.
    Cycle(CycleArgs),
    /// Deviation of a linear periodic solution from an integrated orbit.
    Compare(CompareArgs),
    /// Synthetic eclipse-like heat-input profile.
    Genprofile(GenProfileArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ModelInput {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Heat-input profile (CSV); its sample means drive the steady state.
    /// Defaults to the model's `mean_inputs`.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Args)]
struct SteadyArgs {
    #[command(flatten)]
    input: ModelInput,
    /// Uniform initial temperature for Newton's method, K.
    #[arg(long, default_value_t = 300.0, value_parser = positive)]
    init: f64,
    /// Residual tolerance, K/s.
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    tol: f64,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct HotColdArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Variant {
    Exact,
    HeuristicOneSided,
    HeuristicSymmetrized,
}

#[derive(Args)]
struct JacobianArgs {
    #[command(flatten)]
    input: ModelInput,
    #[arg(long, value_enum, default_value_t = Variant::Exact)]
    variant: Variant,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct ModesArgs {
    #[command(flatten)]
    input: ModelInput,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum MethodArg {
    Fourier,
    Integral,
}

#[derive(Args)]
struct PeriodicArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Fourier)]
    method: MethodArg,
    /// Perturbative order, 1 or 2.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    order: u8,
    /// Keep only the slowest K modes (Fourier method).
    #[arg(long)]
    modes_kept: Option<usize>,
    /// Replace dropped modes by their quasi-static response.
    #[arg(long, requires = "modes_kept")]
    asymptotic: bool,
    /// Fejér-weighted (Cesàro) reconstruction (Fourier method).
    #[arg(long)]
    cesaro: bool,
    /// Sampled solution, CSV.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Per-node extremes, JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct Tolerances {
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    rtol: f64,
    /// K.
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    atol: f64,
}

impl Tolerances {
    fn options(&self) -> IntegratorOptions {
        IntegratorOptions {
            rtol: self.rtol,
            atol: self.atol,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct IntegrateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    /// Comma-separated start temperatures, K; defaults to the averaged steady state.
    #[arg(long, value_delimiter = ',')]
    start: Option<Vec<f64>>,
    /// Number of periods to integrate.
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    periods: f64,
    #[command(flatten)]
    tolerances: Tolerances,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CycleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    /// K, on the start/end mismatch of one period.
    #[arg(long, default_value_t = 1e-3, value_parser = positive)]
    cycle_tol: f64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    max_periods: u32,
    #[command(flatten)]
    tolerances: Tolerances,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Output of `periodic` (CSV).
    #[arg(long)]
    linear: PathBuf,
    /// Output of `cycle` (CSV).
    #[arg(long)]
    oracle: PathBuf,
    /// ΔT = oracle - linear, CSV.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct GenProfileArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated mean inputs, W; defaults to the model's `mean_inputs`.
    #[arg(long, value_delimiter = ',')]
    means: Option<Vec<f64>>,
    /// Sunlit fraction of the period, in (0, 1).
    #[arg(long, default_value_t = 0.7, value_parser = open_unit)]
    duty: f64,
    /// Eclipse level relative to sunlight, in [0, 1).
    #[arg(long, default_value_t = 0.2, value_parser = half_open_unit)]
    baseline: f64,
    /// Width of the smoothed transitions, as a fraction of the period.
    #[arg(long, default_value_t = 0.03, value_parser = open_unit)]
    ramp: f64,
    /// Discontinuous eclipse entry and exit.
    #[arg(long)]
    hard_steps: bool,
    /// Number of samples (at least 8).
    #[arg(long, short = 'n', default_value_t = 111, value_parser = clap::value_parser!(u32).range(8..))]
    samples: u32,
    /// s.
    #[arg(long, default_value_t = 6660.0, value_parser = positive)]
    period: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Node phases are drawn from [0, spread) (period fractions).
    #[arg(long, default_value_t = 0.02, value_parser = half_open_unit)]
    phase_spread: f64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>()
        .map_err(|e| format!("{e}"))
        .and_then(|v| if v.is_finite() { Ok(v) } else { Err("must be finite".into()) })
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not positive"))
    }
}

fn open_unit(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1)"))
    }
}

fn half_open_unit(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1)"))
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Data goes to `output` when given (summary on stdout), otherwise to
/// stdout with the summary on stderr.
fn emit(output: Option<&Path>, data: &str, summary: &str) -> Result<()> {
    match output {
        Some(path) => {
            write_file(path, data)?;
            print!("{summary}");
        }
        None => {
            print!("{data}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn model_and_means(input: &ModelInput) -> Result<(ThermalModel, DVector<f64>)> {
    let model = load_model(&input.model)?;
    let means = match &input.profile {
        Some(p) => load_profile(p, &model)?.means().clone(),
        None => model.mean_inputs().cloned().ok_or_else(|| {
            Error::Validation("model has no mean_inputs; pass --profile".into())
        })?,
    };
    Ok((model, means))
}

fn node_table(model: &ThermalModel, t: &DVector<f64>) -> String {
    let mut out = String::from("node,label,temperature_K\n");
    for (i, label) in model.labels().iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, csv_field(label), fmt_f64(t[i])));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn label_width(model: &ThermalModel) -> usize {
    model.labels().iter().map(|l| l.chars().count()).max().unwrap_or(4).max(4)
}

fn celsius_lines(model: &ThermalModel, t: &DVector<f64>) -> String {
    let width = label_width(model);
    let mut out = String::new();
    for (i, label) in model.labels().iter().enumerate() {
        out.push_str(&format!("{:>3}  {label:<width$}  {:>8.2} °C\n", i + 1, t[i] - KELVIN_OFFSET));
    }
    out
}

fn steady(args: &SteadyArgs) -> Result<()> {
    let (model, means) = model_and_means(&args.input)?;
    let opts = SteadyOptions {
        init: Some(DVector::from_element(model.node_count(), args.init)),
        tol: args.tol,
        ..Default::default()
    };
    let s = solve_steady(&model, &means, &opts)?;
    let data = match args.format {
        Format::Csv => node_table(&model, &s.temperatures),
        Format::Json => {
            let v = json!({
                "temperatures_K": s.temperatures.as_slice(),
                "labels": model.labels(),
                "residual_K_per_s": s.residual_norm,
                "iterations": s.iterations,
                "inputs_W": s.inputs_used.as_slice(),
            });
            format!("{}\n", serde_json::to_string_pretty(&v).unwrap())
        }
    };
    let summary = format!(
        "steady state ({} Newton iterations, residual {:.2e} K/s)\n{}",
        s.iterations,
        s.residual_norm,
        celsius_lines(&model, &s.temperatures)
    );
    emit(args.output.as_deref(), &data, &summary)
}

fn hotcold(args: &HotColdArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let profile = load_profile(&args.profile, &model)?;
    let cases = hot_cold_cases(&model, &profile, &SteadyOptions::default())?;
    let times = profile.times();
    let data = match args.format {
        Format::Csv => {
            let mut out = String::from("node,label,hot_K,cold_K\n");
            for (i, label) in model.labels().iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    i + 1,
                    csv_field(label),
                    fmt_f64(cases.hot.temperatures[i]),
                    fmt_f64(cases.cold.temperatures[i])
                ));
            }
            out
        }
        Format::Json => {
            let v = json!({
                "hot": {"sample": cases.hot_index, "time_s": times[cases.hot_index],
                        "temperatures_K": cases.hot.temperatures.as_slice()},
                "cold": {"sample": cases.cold_index, "time_s": times[cases.cold_index],
                         "temperatures_K": cases.cold.temperatures.as_slice()},
                "labels": model.labels(),
            });
            format!("{}\n", serde_json::to_string_pretty(&v).unwrap())
        }
    };
    let mut summary = format!(
        "hot case at t = {:.0} s, cold case at t = {:.0} s\n",
        times[cases.hot_index], times[cases.cold_index]
    );
    let width = label_width(&model);
    for (i, label) in model.labels().iter().enumerate() {
        summary.push_str(&format!(
            "{:>3}  {label:<width$}  hot {:>8.2} °C  cold {:>8.2} °C\n",
            i + 1,
            cases.hot.temperatures[i] - KELVIN_OFFSET,
            cases.cold.temperatures[i] - KELVIN_OFFSET
        ));
    }
    emit(args.output.as_deref(), &data, &summary)
}

fn jacobian(args: &JacobianArgs) -> Result<()> {
    let (model, means) = model_and_means(&args.input)?;
    let s = solve_steady(&model, &means, &SteadyOptions::default())?;
    let jac = match args.variant {
        Variant::Exact => jacobian_exact(&model, &s.temperatures)?,
        Variant::HeuristicOneSided => jacobian_heuristic(&model, &s.temperatures, false)?,
        Variant::HeuristicSymmetrized => jacobian_heuristic(&model, &s.temperatures, true)?,
    };
    let report = structure_report(&jac, model.capacitance());
    let data = match args.format {
        Format::Csv => matrix_csv(&jac.matrix),
        Format::Json => {
            let conductances = jac.radiation_conductances.as_ref().map(|rc: &RadiationConductances| {
                json!({"pairwise_W_per_K": rows(&rc.pairwise), "environment_W_per_K": rc.environment.as_slice()})
            });
            let v = json!({
                "variant": jac.variant,
                "reference_temperatures_K": jac.reference_t.as_slice(),
                "matrix_per_s": rows(&jac.matrix),
                "radiation_conductances": conductances,
                "structure": report,
            });
            format!("{}\n", serde_json::to_string_pretty(&v).unwrap())
        }
    };
    let mut summary = String::from("Jacobian, 1e-3 s^-1\n");
    for row in jac.matrix.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{:>7.2}", v * 1e3)).collect();
        summary.push_str(&cells.join(" "));
        summary.push('\n');
    }
    summary.push_str(&format!(
        "-J is a Z-matrix: {}; diagonally dominant rows: {}/{}; stable: {} (max Re λ = {:.3e} s^-1); antisymmetry ratio {:.2e}\n",
        report.z_matrix,
        report.diagonally_dominant.iter().filter(|&&d| d).count(),
        report.diagonally_dominant.len(),
        report.stable,
        report.max_eigen_real,
        report.antisymmetry_ratio
    ));
    emit(args.output.as_deref(), &data, &summary)
}

fn modes(args: &ModesArgs) -> Result<()> {
    let (model, means) = model_and_means(&args.input)?;
    let s = solve_steady(&model, &means, &SteadyOptions::default())?;
    let jac = jacobian_exact(&model, &s.temperatures)?;
    let basis = decompose(&jac, model.capacitance())?;
    let perron = perron_mode(&basis).ok();
    let data = match args.format {
        Format::Csv => {
            let mut out = String::from("mode,eigenvalue_per_s,relaxation_time_s");
            for i in 0..model.node_count() {
                out.push_str(&format!(",p{}", i + 1));
            }
            out.push('\n');
            for a in 0..basis.len() {
                out.push_str(&format!(
                    "{},{},{}",
                    a + 1,
                    fmt_f64(basis.eigenvalues[a]),
                    fmt_f64(basis.relaxation_times[a])
                ));
                for v in basis.mode_matrix.column(a).iter() {
                    out.push(',');
                    out.push_str(&fmt_f64(*v));
                }
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let v = json!({
                "eigenvalues_per_s": basis.eigenvalues.as_slice(),
                "relaxation_times_s": basis.relaxation_times.as_slice(),
                "mode_matrix": rows(&basis.mode_matrix),
                "normalization_error": basis.normalization_error,
                "perron_mode": perron.as_ref().map(|p| p.vector.as_slice().to_vec()),
            });
            format!("{}\n", serde_json::to_string_pretty(&v).unwrap())
        }
    };
    let mut summary = String::from("mode  eigenvalue (1e-4 s^-1)  relaxation time (s)\n");
    for a in 0..basis.len() {
        summary.push_str(&format!(
            "{:>4}  {:>22.2}  {:>19.1}\n",
            a + 1,
            basis.eigenvalues[a] * 1e4,
            basis.relaxation_times[a]
        ));
    }
    summary.push_str(&format!("PᵗCP deviation from identity: {:.4}\n", basis.normalization_error));
    match &perron {
        Some(p) => {
            let cells: Vec<String> = p.vector.iter().map(|v| format!("{v:.3}")).collect();
            summary.push_str(&format!("Perron mode (unit norm): {}\n", cells.join(" ")));
        }
        None => summary.push_str("slowest mode is not strictly positive\n"),
    }
    emit(args.output.as_deref(), &data, &summary)
}

fn periodic(args: &PeriodicArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let profile = load_profile(&args.profile, &model)?;
    let opts = PeriodicOptions {
        solver: LinearSolver {
            method: match args.method {
                MethodArg::Fourier => Method::Fourier,
                MethodArg::Integral => Method::Integral,
            },
            summation: if args.cesaro { Summation::Cesaro } else { Summation::Plain },
            modes_kept: args.modes_kept,
            asymptotic: args.asymptotic,
            ..Default::default()
        },
        order: args.order,
        ..Default::default()
    };
    let sol = solve_periodic(&model, &profile, &opts)?;
    let n_nodes = model.node_count();
    let mut data = String::from("time_s");
    for part in ["total", "first", "second"] {
        for i in 0..n_nodes {
            data.push_str(&format!(",{part}_{}_K", i + 1));
        }
    }
    data.push('\n');
    for (k, t) in sol.times.iter().enumerate() {
        data.push_str(&fmt_f64(*t));
        for m in [&sol.total, &sol.first_order, &sol.second_order] {
            for i in 0..n_nodes {
                data.push(',');
                data.push_str(&fmt_f64(m[(k, i)]));
            }
        }
        data.push('\n');
    }
    let col_min = |m: &DMatrix<f64>| -> Vec<f64> { m.column_iter().map(|c| c.min()).collect() };
    let col_max = |m: &DMatrix<f64>| -> Vec<f64> { m.column_iter().map(|c| c.max()).collect() };
    if let Some(path) = &args.summary {
        let v = json!({
            "method": sol.method,
            "order": sol.order,
            "modes_kept": sol.modes_kept,
            "asymptotic": sol.asymptotic,
            "cesaro": sol.cesaro,
            "labels": model.labels(),
            "base_K": sol.base.as_slice(),
            "min_K": col_min(&sol.total),
            "max_K": col_max(&sol.total),
            "first_order_amplitude_K": sol.first_order.column_iter().map(|c| c.amax()).collect::<Vec<_>>(),
            "second_order_min_K": col_min(&sol.second_order),
            "second_order_max_K": col_max(&sol.second_order),
            "second_order_static_shift_K": sol.second_order_shift.as_slice(),
        });
        write_file(path, &format!("{}\n", serde_json::to_string_pretty(&v).unwrap()))?;
    }
    let (lo, hi) = (col_min(&sol.total), col_max(&sol.total));
    let mut summary = format!(
        "periodic solution: order {}, {} samples, max |first order| {:.3} K, max |second order| {:.3} K\n",
        sol.order,
        sol.times.len(),
        sol.first_order.amax(),
        sol.second_order.amax()
    );
    let width = label_width(&model);
    for (i, label) in model.labels().iter().enumerate() {
        summary.push_str(&format!(
            "{:>3}  {label:<width$}  mean {:>7.2} °C  min {:>7.2} °C  max {:>7.2} °C\n",
            i + 1,
            sol.base[i] - KELVIN_OFFSET,
            lo[i] - KELVIN_OFFSET,
            hi[i] - KELVIN_OFFSET
        ));
    }
    emit(args.output.as_deref(), &data, &summary)
}

fn states_csv(times: &[f64], states: impl Iterator<Item = Vec<f64>>, nodes: usize) -> String {
    let mut out = String::from("time_s");
    for i in 0..nodes {
        out.push_str(&format!(",T{}_K", i + 1));
    }
    out.push('\n');
    for (t, y) in times.iter().zip(states) {
        out.push_str(&fmt_f64(*t));
        for v in y {
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    out
}

fn start_state(model: &ThermalModel, profile: &HeatProfile, start: &Option<Vec<f64>>) -> Result<DVector<f64>> {
    match start {
        Some(v) => {
            if v.len() != model.node_count() {
                return Err(Error::Dimension(format!(
                    "{} start temperatures for {} nodes",
                    v.len(),
                    model.node_count()
                )));
            }
            Ok(DVector::from_column_slice(v))
        }
        None => Ok(solve_steady(model, profile.means(), &SteadyOptions::default())?.temperatures),
    }
}

fn integrate_cmd(args: &IntegrateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let profile = load_profile(&args.profile, &model)?;
    let start = start_state(&model, &profile, &args.start)?;
    let t_end = args.periods * profile.period();
    let traj = integrate(
        &model,
        &profile,
        &start,
        (0.0, t_end),
        &args.tolerances.options(),
        Record::Samples,
    )?;
    let data = states_csv(
        &traj.times,
        traj.states.iter().map(|s| s.as_slice().to_vec()),
        model.node_count(),
    );
    let stats = traj.stats;
    let mut summary = format!(
        "integrated {:.0} s: {} accepted / {} rejected steps, step {:.3e} .. {:.3e} s\nfinal state:\n",
        t_end, stats.accepted, stats.rejected, stats.min_step, stats.max_step
    );
    summary.push_str(&celsius_lines(&model, traj.last()));
    emit(args.output.as_deref(), &data, &summary)
}

fn cycle(args: &CycleArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let profile = load_profile(&args.profile, &model)?;
    let start = start_state(&model, &profile, &None)?;
    let opts = CyclicOptions {
        cycle_tol: args.cycle_tol,
        max_periods: args.max_periods as usize,
        integrator: args.tolerances.options(),
    };
    let orbit = cyclic_solve(&model, &profile, &start, &opts)?;
    let states = &orbit.orbit.states;
    let data = states_csv(
        &orbit.orbit.times,
        states.row_iter().map(|r| r.iter().copied().collect()),
        model.node_count(),
    );
    let mismatches: Vec<String> = orbit.mismatches.iter().map(|m| format!("{m:.2e}")).collect();
    let mut summary = format!(
        "cyclic orbit after {} periods; start/end mismatch per period (K): {}\n",
        orbit.periods,
        mismatches.join(" ")
    );
    let width = label_width(&model);
    for (i, label) in model.labels().iter().enumerate() {
        let col = states.column(i);
        summary.push_str(&format!(
            "{:>3}  {label:<width$}  min {:>7.2} °C  max {:>7.2} °C\n",
            i + 1,
            col.min() - KELVIN_OFFSET,
            col.max() - KELVIN_OFFSET
        ));
    }
    emit(args.output.as_deref(), &data, &summary)
}

/// Reads `time_s` and the columns accepted by `keep` from a CSV file.
fn read_table(path: &Path, keep: impl Fn(&str) -> bool) -> Result<(Vec<f64>, DMatrix<f64>, Vec<String>)> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        .clone();
    if headers.get(0) != Some("time_s") {
        return Err(Error::Parse(format!("{}: first column must be time_s", path.display())));
    }
    let cols: Vec<usize> = (1..headers.len()).filter(|&c| keep(&headers[c])).collect();
    if cols.is_empty() {
        return Err(Error::Parse(format!("{}: no temperature columns", path.display())));
    }
    let names = cols.iter().map(|&c| headers[c].to_string()).collect();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let field = |c: usize| -> Result<f64> {
            record
                .get(c)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("{}: bad value in row {}, column {}", path.display(), line + 1, c + 1)))
        };
        times.push(field(0)?);
        for &c in &cols {
            values.push(field(c)?);
        }
    }
    let m = DMatrix::from_row_slice(times.len(), cols.len(), &values);
    Ok((times, m, names))
}

fn compare_cmd(args: &CompareArgs) -> Result<()> {
    let (lt, lin, _) = read_table(&args.linear, |h| h.starts_with("total_"))?;
    let (ot, orc, _) = read_table(&args.oracle, |_| true)?;
    let report = compare_samples(&lt, &lin, &ot, &orc)?;
    let nodes = lin.ncols();
    let mut data = String::from("time_s");
    for i in 0..nodes {
        data.push_str(&format!(",dT{}_K", i + 1));
    }
    data.push('\n');
    for (k, t) in report.times.iter().enumerate() {
        data.push_str(&fmt_f64(*t));
        for i in 0..nodes {
            data.push(',');
            data.push_str(&fmt_f64(report.delta[(k, i)]));
        }
        data.push('\n');
    }
    let ranked: Vec<usize> = report.ranked_samples().into_iter().take(5).collect();
    if let Some(path) = &args.summary {
        let v = json!({
            "max_abs_K": report.max_abs.as_slice(),
            "argmax_sample": report.argmax,
            "argmax_time_s": report.argmax.iter().map(|&k| report.times[k]).collect::<Vec<_>>(),
            "max_abs_overall_K": report.max_abs_overall(),
            "largest_samples": ranked,
        });
        write_file(path, &format!("{}\n", serde_json::to_string_pretty(&v).unwrap()))?;
    }
    let mut summary = format!("max |ΔT| = {:.4} K\n", report.max_abs_overall());
    for i in 0..nodes {
        let k = report.argmax[i];
        summary.push_str(&format!(
            "{:>3}  max |ΔT| {:>8.4} K at t = {:.0} s\n",
            i + 1,
            report.max_abs[i],
            report.times[k]
        ));
    }
    let at: Vec<String> = ranked.iter().map(|&k| format!("{:.0}", report.times[k])).collect();
    summary.push_str(&format!("largest deviations at t = {} s\n", at.join(", ")));
    emit(args.output.as_deref(), &data, &summary)
}

fn genprofile(args: &GenProfileArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let means = match &args.means {
        Some(v) => {
            if v.len() != model.node_count() {
                return Err(Error::Dimension(format!(
                    "{} means for {} nodes",
                    v.len(),
                    model.node_count()
                )));
            }
            DVector::from_column_slice(v)
        }
        None => model.mean_inputs().cloned().ok_or_else(|| {
            Error::Validation("model has no mean_inputs; pass --means".into())
        })?,
    };
    let generator = EclipseProfile {
        duty: args.duty,
        baseline: args.baseline,
        ramp: args.ramp,
        hard_steps: args.hard_steps,
        samples: args.samples as usize,
        period: args.period,
        seed: args.seed,
        phase_spread: args.phase_spread,
    };
    let profile = generator.generate(&model, &means)?;
    let total = profile.total_load();
    let summary = format!(
        "{} samples over {:.0} s, total load {:.2} .. {:.2} W (mean {:.2} W)\n",
        profile.sample_count(),
        profile.period(),
        total.min(),
        total.max(),
        total.mean()
    );
    emit(args.output.as_deref(), &profile.to_csv(), &summary)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Steady(a) => steady(a),
        Command::Hotcold(a) => hotcold(a),
        Command::Jacobian(a) => jacobian(a),
        Command::Modes(a) => modes(a),
        Command::Periodic(a) => periodic(a),
        Command::Integrate(a) => integrate_cmd(a),
        Command::Cycle(a) => cycle(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Genprofile(a) => genprofile(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
