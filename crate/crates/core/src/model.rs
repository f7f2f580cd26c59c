//! Lumped-parameter thermal models and periodic heat-input profiles.
//!
//! A [`ThermalModel`] holds the node capacitances together with the
//! conduction and radiation couplings of the energy balance
//!
//! ```text
//! C_i dT_i/dt = Q_i(t) - Σ_j [K_ij (T_i - T_j) + R_ij (T_i⁴ - T_j⁴)] - R_i (T_i⁴ - T₀⁴)
//! ```
//!
//! and a [`HeatProfile`] holds one orbit of uniformly spaced heat-input
//! samples with periodic wraparound.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default environment (deep space) temperature in kelvin.
pub const DEFAULT_ENV_TEMPERATURE: f64 = 2.73;

/// Relative tolerance on the uniformity of profile time stamps.
const SPACING_TOLERANCE: f64 = 1e-6;

/// Validated thermal network. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalModel {
    capacitance: DVector<f64>,
    conduction: DMatrix<f64>,
    radiation: DMatrix<f64>,
    env_radiation: DVector<f64>,
    env_temperature: f64,
    labels: Vec<String>,
    mean_inputs: Option<DVector<f64>>,
}

impl ThermalModel {
    /// Builds a model from dense data and checks every invariant.
    ///
    /// `conduction` (W/K) and `radiation` (W/K⁴) must be symmetric with a zero
    /// diagonal; `env_radiation` (W/K⁴) and `capacitance` (J/K) have one entry
    /// per node.
    pub fn new(
        capacitance: DVector<f64>,
        conduction: DMatrix<f64>,
        radiation: DMatrix<f64>,
        env_radiation: DVector<f64>,
        env_temperature: f64,
    ) -> Result<Self> {
        let n = capacitance.len();
        let model = ThermalModel {
            capacitance,
            conduction,
            radiation,
            env_radiation,
            env_temperature,
            labels: (1..=n).map(|i| format!("node {i}")).collect(),
            mean_inputs: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.node_count() {
            return Err(Error::Dimension(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.node_count()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Attaches reference orbit-mean heat inputs (W), used by the profile generator.
    pub fn with_mean_inputs(mut self, means: DVector<f64>) -> Result<Self> {
        if means.len() != self.node_count() {
            return Err(Error::Dimension(format!(
                "{} mean inputs for {} nodes",
                means.len(),
                self.node_count()
            )));
        }
        if means.iter().any(|q| !q.is_finite()) {
            return Err(Error::Validation("mean_inputs must be finite".into()));
        }
        self.mean_inputs = Some(means);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.capacitance.len()
    }

    pub fn capacitance(&self) -> &DVector<f64> {
        &self.capacitance
    }

    pub fn conduction(&self) -> &DMatrix<f64> {
        &self.conduction
    }

    pub fn radiation(&self) -> &DMatrix<f64> {
        &self.radiation
    }

    pub fn env_radiation(&self) -> &DVector<f64> {
        &self.env_radiation
    }

    pub fn env_temperature(&self) -> f64 {
        self.env_temperature
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn mean_inputs(&self) -> Option<&DVector<f64>> {
        self.mean_inputs.as_ref()
    }

    fn validate(&self) -> Result<()> {
        let n = self.node_count();
        if n == 0 {
            return Err(Error::Validation("model has no nodes".into()));
        }
        for (name, m) in [("conduction", &self.conduction), ("radiation", &self.radiation)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension(format!(
                    "{name} matrix is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if self.env_radiation.len() != n {
            return Err(Error::Dimension(format!(
                "env_radiation has {} entries, expected {n}",
                self.env_radiation.len()
            )));
        }
        for (i, &c) in self.capacitance.iter().enumerate() {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Validation(format!(
                    "capacitance of node {} must be positive, got {c}",
                    i + 1
                )));
            }
        }
        for (name, sym, m) in [
            ("conduction", 'K', &self.conduction),
            ("radiation", 'R', &self.radiation),
        ] {
            for i in 0..n {
                if m[(i, i)] != 0.0 {
                    return Err(Error::Validation(format!(
                        "{name} diagonal {sym}_{0}{0} must be zero, got {1}",
                        i + 1,
                        m[(i, i)]
                    )));
                }
                for j in (i + 1)..n {
                    let (a, b) = (m[(i, j)], m[(j, i)]);
                    if !(a.is_finite() && b.is_finite()) || a < 0.0 || b < 0.0 {
                        return Err(Error::Validation(format!(
                            "{name} coupling ({},{}) must be finite and non-negative",
                            i + 1,
                            j + 1
                        )));
                    }
                    if a != b {
                        return Err(Error::Validation(format!(
                            "{name} matrix not symmetric at ({},{}): {sym}_{}{} = {a} but {sym}_{}{} = {b}",
                            i + 1,
                            j + 1,
                            i + 1,
                            j + 1,
                            j + 1,
                            i + 1
                        )));
                    }
                }
            }
        }
        for (i, &r) in self.env_radiation.iter().enumerate() {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::Validation(format!(
                    "env_radiation of node {} must be non-negative, got {r}",
                    i + 1
                )));
            }
        }
        if !(self.env_temperature.is_finite() && self.env_temperature >= 0.0) {
            return Err(Error::Validation(format!(
                "env_temperature must be non-negative, got {}",
                self.env_temperature
            )));
        }
        let isolated = self.unreachable_nodes();
        if !isolated.is_empty() {
            let idx: Vec<String> = isolated.iter().map(|i| (i + 1).to_string()).collect();
            return Err(Error::Validation(format!(
                "coupling graph is not connected to the environment; isolated nodes: {}",
                idx.join(", ")
            )));
        }
        Ok(())
    }

    /// Nodes with no coupling path to the environment (treated as node N+1).
    fn unreachable_nodes(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for i in 0..n {
            if self.env_radiation[i] > 0.0 {
                seen[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if !seen[j] && (self.conduction[(i, j)] > 0.0 || self.radiation[(i, j)] > 0.0) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        (0..n).filter(|&i| !seen[i]).collect()
    }

    /// Parses the JSON model format.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("model file: {e}")))?;
        file.into_model()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile::from_model(self);
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    /// The bundled ten-node lunar-orbit satellite model.
    pub fn ten_node_moon() -> Self {
        Self::from_json(TEN_NODE_MOON).expect("bundled model is valid")
    }
}

/// Bundled ten-node model file contents.
pub const TEN_NODE_MOON: &str = include_str!("../data/ten_node_moon.json");
/// Bundled constant (orbit-mean) profile for the ten-node model.
pub const TEN_NODE_CONST: &str = include_str!("../data/ten_node_const.csv");

#[derive(Debug, Serialize, Deserialize)]
struct NodeEntry {
    #[serde(default)]
    label: Option<String>,
    capacitance: f64,
    #[serde(default)]
    env_radiation: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CouplingEntry {
    i: usize,
    j: usize,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    nodes: Vec<NodeEntry>,
    #[serde(default = "default_env_temperature")]
    env_temperature: f64,
    #[serde(default)]
    conduction: Vec<CouplingEntry>,
    #[serde(default)]
    radiation: Vec<CouplingEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mean_inputs: Option<Vec<f64>>,
}

fn default_env_temperature() -> f64 {
    DEFAULT_ENV_TEMPERATURE
}

impl ModelFile {
    fn into_model(self) -> Result<ThermalModel> {
        let n = self.nodes.len();
        let capacitance = DVector::from_iterator(n, self.nodes.iter().map(|e| e.capacitance));
        let env_radiation = DVector::from_iterator(n, self.nodes.iter().map(|e| e.env_radiation));
        let conduction = assemble_couplings("conduction", 'K', n, &self.conduction)?;
        let radiation = assemble_couplings("radiation", 'R', n, &self.radiation)?;
        let mut model = ThermalModel::new(
            capacitance,
            conduction,
            radiation,
            env_radiation,
            self.env_temperature,
        )?;
        let labels: Vec<String> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, e)| e.label.clone().unwrap_or_else(|| format!("node {}", i + 1)))
            .collect();
        model = model.with_labels(labels)?;
        if let Some(means) = self.mean_inputs {
            model = model.with_mean_inputs(DVector::from_vec(means))?;
        }
        Ok(model)
    }

    fn from_model(model: &ThermalModel) -> Self {
        let n = model.node_count();
        let nodes = (0..n)
            .map(|i| NodeEntry {
                label: Some(model.labels[i].clone()),
                capacitance: model.capacitance[i],
                env_radiation: model.env_radiation[i],
            })
            .collect();
        let pairs = |m: &DMatrix<f64>| {
            let mut out = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if m[(i, j)] != 0.0 {
                        out.push(CouplingEntry {
                            i: i + 1,
                            j: j + 1,
                            value: m[(i, j)],
                        });
                    }
                }
            }
            out
        };
        ModelFile {
            nodes,
            env_temperature: model.env_temperature,
            conduction: pairs(&model.conduction),
            radiation: pairs(&model.radiation),
            mean_inputs: model.mean_inputs.as_ref().map(|m| m.iter().copied().collect()),
        }
    }
}

/// Couplings are listed once per unordered pair; a pair given twice with
/// different values is reported as an asymmetry.
fn assemble_couplings(
    name: &str,
    sym: char,
    n: usize,
    entries: &[CouplingEntry],
) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(n, n);
    let mut set = DMatrix::from_element(n, n, false);
    for e in entries {
        if e.i == 0 || e.j == 0 || e.i > n || e.j > n {
            return Err(Error::Validation(format!(
                "{name} entry ({},{}) out of range 1..={n}",
                e.i, e.j
            )));
        }
        let (i, j) = (e.i - 1, e.j - 1);
        if i == j {
            if e.value != 0.0 {
                return Err(Error::Validation(format!(
                    "{name} diagonal {sym}_{0}{0} must be zero, got {1}",
                    e.i, e.value
                )));
            }
            continue;
        }
        if set[(i, j)] {
            if m[(i, j)] != e.value {
                let (a, b) = (m[(i, j)], e.value);
                return Err(Error::Validation(format!(
                    "{name} matrix not symmetric at ({},{}): {sym}_{}{} = {} but {sym}_{}{} = {}",
                    i.min(j) + 1,
                    i.max(j) + 1,
                    e.j,
                    e.i,
                    a,
                    e.i,
                    e.j,
                    b
                )));
            }
            continue;
        }
        m[(i, j)] = e.value;
        m[(j, i)] = e.value;
        set[(i, j)] = true;
        set[(j, i)] = true;
    }
    Ok(m)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ThermalModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    ThermalModel::from_json(&text)
}

pub fn save_model(model: &ThermalModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json() + "\n").map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One period of uniformly sampled heat inputs.
///
/// Sample `k` is taken at `t_k = k·period/n`; the sequence wraps around
/// periodically. `driving` holds `(Q_i - <Q_i>)/C_i` in K/s.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatProfile {
    period: f64,
    samples: DMatrix<f64>,
    means: DVector<f64>,
    driving: DMatrix<f64>,
}

impl HeatProfile {
    /// `samples` is n×N (rows are sample times, columns are nodes), in watts.
    pub fn new(model: &ThermalModel, period: f64, samples: DMatrix<f64>) -> Result<Self> {
        let n = samples.nrows();
        if n < 2 {
            return Err(Error::Validation(format!(
                "profile needs at least 2 samples, got {n}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Validation(format!("period must be positive, got {period}")));
        }
        if samples.ncols() != model.node_count() {
            return Err(Error::Dimension(format!(
                "profile has {} node columns, model has {} nodes",
                samples.ncols(),
                model.node_count()
            )));
        }
        if let Some((k, _)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite heat input at sample {}, node {}",
                k % n,
                k / n + 1
            )));
        }
        let means = DVector::from_iterator(
            samples.ncols(),
            samples.column_iter().map(|c| c.sum() / n as f64),
        );
        let mut driving = samples.clone();
        for (j, mut col) in driving.column_iter_mut().enumerate() {
            let c = model.capacitance()[j];
            col.apply(|v| *v = (*v - means[j]) / c);
            // second pass removes the rounding residue of the first
            let residue = col.sum() / n as f64;
            col.apply(|v| *v -= residue);
        }
        Ok(HeatProfile {
            period,
            samples,
            means,
            driving,
        })
    }

    /// Profile whose every sample equals `means`.
    pub fn constant(model: &ThermalModel, means: &DVector<f64>, n: usize, period: f64) -> Result<Self> {
        let samples = DMatrix::from_fn(n, means.len(), |_, j| means[j]);
        Self::new(model, period, samples)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn sample_count(&self) -> usize {
        self.samples.nrows()
    }

    pub fn node_count(&self) -> usize {
        self.samples.ncols()
    }

    pub fn step(&self) -> f64 {
        self.period / self.sample_count() as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.sample_count()).map(|k| k as f64 * h).collect()
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn means(&self) -> &DVector<f64> {
        &self.means
    }

    pub fn driving(&self) -> &DMatrix<f64> {
        &self.driving
    }

    /// Heat input at arbitrary time, linearly interpolated between samples
    /// with periodic wraparound.
    pub fn interpolate(&self, t: f64, out: &mut DVector<f64>) {
        let n = self.sample_count();
        let x = (t / self.step()).rem_euclid(n as f64);
        let mut k = x.floor() as usize;
        let mut frac = x - k as f64;
        if k >= n {
            k = 0;
            frac = 0.0;
        }
        let k1 = (k + 1) % n;
        for j in 0..self.node_count() {
            out[j] = (1.0 - frac) * self.samples[(k, j)] + frac * self.samples[(k1, j)];
        }
    }

    /// Parses the profile CSV format: a header row, then `time_s, Q_1 .. Q_N`.
    /// A `# period = <seconds>` comment overrides the implied period.
    pub fn from_csv(text: &str, model: &ThermalModel) -> Result<Self> {
        let mut period_override = None;
        let mut body = String::with_capacity(text.len());
        for line in text.lines() {
            let trimmed = line.trim();
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once('=') {
                    if key.trim() == "period" {
                        let p: f64 = value.trim().parse().map_err(|_| {
                            Error::Parse(format!("bad period comment: {trimmed}"))
                        })?;
                        period_override = Some(p);
                    }
                }
                continue;
            }
            if trimmed.is_empty() {
                continue;
            }
            body.push_str(line);
            body.push('\n');
        }

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let n_nodes = model.node_count();
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(format!("profile csv: {e}")))?;
            if record.len() != n_nodes + 1 {
                return Err(Error::Parse(format!(
                    "profile row {} has {} columns, expected {}",
                    row + 1,
                    record.len(),
                    n_nodes + 1
                )));
            }
            let mut fields = record.iter().map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("profile row {}: bad number '{f}'", row + 1)))
            });
            times.push(fields.next().unwrap()?);
            for f in fields {
                values.push(f?);
            }
        }
        let n = times.len();
        if n < 2 {
            return Err(Error::Validation(format!(
                "profile needs at least 2 rows, got {n}"
            )));
        }
        let last = times[n - 1];
        let period = period_override.unwrap_or(last * n as f64 / (n - 1) as f64);
        let h = period / n as f64;
        for (k, &t) in times.iter().enumerate() {
            if (t - k as f64 * h).abs() > SPACING_TOLERANCE * h.max(last.abs()) {
                return Err(Error::Validation(format!(
                    "non-uniform time spacing at row {}: t = {t}, expected {}",
                    k + 1,
                    k as f64 * h
                )));
            }
        }
        let samples = DMatrix::from_row_slice(n, n_nodes, &values);
        Self::new(model, period, samples)
    }

    /// Writes the profile CSV with an explicit period comment.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# period = {}\n", fmt_f64(self.period));
        out.push_str("time_s");
        for j in 0..self.node_count() {
            out.push_str(&format!(",q{}_W", j + 1));
        }
        out.push('\n');
        for (k, t) in self.times().into_iter().enumerate() {
            out.push_str(&fmt_f64(t));
            for j in 0..self.node_count() {
                out.push(',');
                out.push_str(&fmt_f64(self.samples[(k, j)]));
            }
            out.push('\n');
        }
        out
    }

    /// Total heat load Σ_i Q_i at each sample, in watts.
    pub fn total_load(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.sample_count(),
            self.samples.row_iter().map(|r| r.sum()),
        )
    }
}

pub fn load_profile(path: impl AsRef<Path>, model: &ThermalModel) -> Result<HeatProfile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    HeatProfile::from_csv(&text, model)
}

pub fn total_load(profile: &HeatProfile) -> DVector<f64> {
    profile.total_load()
}

/// Full double precision (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
