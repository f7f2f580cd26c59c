//! Synthetic eclipse-like heat-input profiles.
//!
//! Each node sees `Q_i(t) = <Q_i>·r_i(t)/<r_i>` with
//! `r_i(t) = b + (1 - b)·s(t; duty, φ_i)`: a sunlit plateau of relative length
//! `duty` starting at `φ_i·𝒯`, followed by an eclipse at the baseline level.
//! The sample means of the generated columns equal the requested means, so
//! the averaged steady state is unchanged.

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{HeatProfile, ThermalModel};

#[derive(Debug, Clone, PartialEq)]
pub struct EclipseProfile {
    /// Sunlit fraction of the period, in (0, 1).
    pub duty: f64,
    /// Eclipse level relative to the sunlit level, in [0, 1).
    pub baseline: f64,
    /// Width of the raised-cosine transitions as a fraction of the period.
    pub ramp: f64,
    /// Use discontinuous steps instead of ramps.
    pub hard_steps: bool,
    pub samples: usize,
    pub period: f64,
    pub seed: u64,
    /// Node phases are drawn uniformly from `[0, phase_spread)` (period fractions).
    pub phase_spread: f64,
}

impl Default for EclipseProfile {
    fn default() -> Self {
        EclipseProfile {
            duty: 0.7,
            baseline: 0.2,
            ramp: 0.03,
            hard_steps: false,
            samples: 111,
            period: 6660.0,
            seed: 1,
            phase_spread: 0.02,
        }
    }
}

fn raised_step(u: f64, width: f64) -> f64 {
    if u <= -0.5 * width {
        0.0
    } else if u >= 0.5 * width {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * (u + 0.5 * width) / width).cos())
    }
}

impl EclipseProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return bad(format!("duty must lie in (0, 1), got {}", self.duty));
        }
        if !(self.baseline >= 0.0 && self.baseline < 1.0) {
            return bad(format!("baseline must lie in [0, 1), got {}", self.baseline));
        }
        if self.samples < 8 {
            return bad(format!("need at least 8 samples, got {}", self.samples));
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return bad(format!("period must be positive, got {}", self.period));
        }
        if !self.hard_steps && !(self.ramp > 0.0 && self.ramp < self.duty.min(1.0 - self.duty)) {
            return bad(format!(
                "ramp must lie in (0, min(duty, 1 - duty)), got {}",
                self.ramp
            ));
        }
        if !(self.phase_spread >= 0.0 && self.phase_spread < 1.0) {
            return bad(format!("phase spread must lie in [0, 1), got {}", self.phase_spread));
        }
        Ok(())
    }

    /// Per-node start of the sunlit plateau, as period fractions.
    pub fn phases(&self, nodes: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..nodes)
            .map(|_| {
                if self.phase_spread > 0.0 {
                    rng.random_range(0.0..self.phase_spread)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Times (s) of eclipse exit and entry for every node.
    pub fn step_times(&self, nodes: usize) -> Vec<f64> {
        self.phases(nodes)
            .into_iter()
            .flat_map(|p| [p * self.period, ((p + self.duty) % 1.0) * self.period])
            .collect()
    }

    /// Unit sunlit indicator at time `t` for a node with phase `phase`.
    pub fn shape(&self, t: f64, phase: f64) -> f64 {
        // centre the window on the middle of the plateau
        let x = (t / self.period - phase - 0.5 * self.duty + 0.5).rem_euclid(1.0) - 0.5 + 0.5 * self.duty;
        if self.hard_steps {
            if (0.0..self.duty).contains(&x) {
                1.0
            } else {
                0.0
            }
        } else {
            raised_step(x, self.ramp) * raised_step(self.duty - x, self.ramp)
        }
    }

    /// Profile for `model` whose sample means equal `means` (W).
    pub fn generate(&self, model: &ThermalModel, means: &DVector<f64>) -> Result<HeatProfile> {
        self.validate()?;
        let nodes = model.node_count();
        if means.len() != nodes {
            return Err(Error::Dimension(format!(
                "{} mean inputs for {nodes} nodes",
                means.len()
            )));
        }
        let n = self.samples;
        let h = self.period / n as f64;
        let phases = self.phases(nodes);
        let mut samples = DMatrix::zeros(n, nodes);
        for (j, &phase) in phases.iter().enumerate() {
            let r: Vec<f64> = (0..n)
                .map(|k| self.baseline + (1.0 - self.baseline) * self.shape(k as f64 * h, phase))
                .collect();
            let avg = r.iter().sum::<f64>() / n as f64;
            for (k, rk) in r.iter().enumerate() {
                samples[(k, j)] = means[j] * rk / avg;
            }
        }
        HeatProfile::new(model, self.period, samples)
    }
}
