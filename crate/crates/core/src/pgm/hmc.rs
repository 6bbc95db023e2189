//! Hamiltonian Monte Carlo with identity mass matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastics::{standard_normal, RngStream};

/// A differentiable potential energy `U(q)`.
pub trait Potential {
    fn dim(&self) -> usize;
    fn value(&self, q: &[f64]) -> f64;
    fn gradient(&self, q: &[f64], grad: &mut [f64]);
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmcConfig {
    pub step_size: f64,
    pub leapfrog_steps: usize,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            step_size: 0.018,
            leapfrog_steps: 10,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::param(format!("step size must be positive, got {}", self.step_size)));
        }
        if self.leapfrog_steps == 0 {
            return Err(Error::param("leapfrog steps must be at least 1"));
        }
        Ok(())
    }
}

/// Runs `steps` leapfrog steps in place. Each step is a half momentum
/// update, a full position update and another half momentum update.
/// Returns `false` as soon as a position or momentum turns non-finite.
pub fn leapfrog<P: Potential + ?Sized>(
    potential: &P,
    q: &mut [f64],
    p: &mut [f64],
    step_size: f64,
    steps: usize,
) -> bool {
    let mut grad = vec![0.0; q.len()];
    let half = 0.5 * step_size;
    for _ in 0..steps {
        potential.gradient(q, &mut grad);
        for (pi, g) in p.iter_mut().zip(&grad) {
            *pi -= half * g;
        }
        for (qi, pi) in q.iter_mut().zip(p.iter()) {
            *qi += step_size * pi;
        }
        potential.gradient(q, &mut grad);
        for (pi, g) in p.iter_mut().zip(&grad) {
            *pi -= half * g;
        }
        if !q.iter().chain(p.iter()).all(|v| v.is_finite()) {
            return false;
        }
    }
    true
}

pub fn hamiltonian<P: Potential + ?Sized>(potential: &P, q: &[f64], p: &[f64]) -> f64 {
    potential.value(q) + 0.5 * p.iter().map(|v| v * v).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HmcOutcome {
    pub position: Vec<f64>,
    pub accepted: bool,
    /// `H(end) - H(start)`; infinite for a divergent trajectory.
    pub energy_error: f64,
    pub divergent: bool,
}

/// One HMC transition from `q0`. Non-finite energies reject the proposal and
/// mark the transition as divergent.
pub fn hmc_transition<P: Potential + ?Sized>(
    potential: &P,
    q0: &[f64],
    cfg: &HmcConfig,
    rng: &mut RngStream,
) -> HmcOutcome {
    let mut p: Vec<f64> = (0..q0.len()).map(|_| standard_normal(rng)).collect();
    let h0 = hamiltonian(potential, q0, &p);
    let mut q = q0.to_vec();
    let finite = leapfrog(potential, &mut q, &mut p, cfg.step_size, cfg.leapfrog_steps);
    let h1 = if finite { hamiltonian(potential, &q, &p) } else { f64::NAN };
    let u = rng.uniform_open();
    if !(h1.is_finite() && h0.is_finite()) {
        return HmcOutcome {
            position: q0.to_vec(),
            accepted: false,
            energy_error: f64::INFINITY,
            divergent: true,
        };
    }
    let delta = h1 - h0;
    if u.ln() < -delta {
        HmcOutcome {
            position: q,
            accepted: true,
            energy_error: delta,
            divergent: false,
        }
    } else {
        HmcOutcome {
            position: q0.to_vec(),
            accepted: false,
            energy_error: delta,
            divergent: false,
        }
    }
}

/// Running acceptance and energy-error tallies.
#[derive(Clone, Debug, Default)]
pub struct HmcStats {
    pub transitions: usize,
    pub accepted: usize,
    pub divergences: usize,
    abs_energy_sum: f64,
}

impl HmcStats {
    pub fn record(&mut self, outcome: &HmcOutcome) {
        self.transitions += 1;
        if outcome.accepted {
            self.accepted += 1;
        }
        if outcome.divergent {
            self.divergences += 1;
        } else {
            self.abs_energy_sum += outcome.energy_error.abs();
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.transitions == 0 {
            return f64::NAN;
        }
        self.accepted as f64 / self.transitions as f64
    }

    /// Mean absolute energy error over non-divergent transitions.
    pub fn mean_abs_energy_error(&self) -> f64 {
        let finite = self.transitions - self.divergences;
        if finite == 0 {
            return f64::NAN;
        }
        self.abs_energy_sum / finite as f64
    }
}
