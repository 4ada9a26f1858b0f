//! Probabilistic imaginary-time evolution.
//!
//! One ancilla in `|+⟩` controls forward and backward real-time evolution;
//! a final single-qubit gate on the ancilla leaves
//!
//! `amp₀ = ½(e^{−iθ₀}U + e^{iθ₀}U†)ψ`, `amp₁ = −(i/2)(e^{−iθ₀}U − e^{iθ₀}U†)ψ`
//!
//! so that with `U = e^{−iHΔt}`, `amp₀ = cos(HΔt + θ₀)ψ`. Choosing
//! `cos θ₀ = m₀` and `Δt = s₁Δτ`, `s₁ = m₀/√(1 − m₀²)`, makes the success
//! branch `m₀ e^{−HΔτ}ψ` to first order in `Δτ`.

use serde::{Deserialize, Serialize};

use crate::error::{FqeError, Result};
use crate::evolution::Propagator;
use crate::grid::{eigenweights, hadamard, parity_expectation, BranchState};
use crate::hamiltonian::{EigenSet, Hamiltonian};
use crate::C64;

pub const SUCCESS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiteParams {
    pub m0: f64,
    pub theta0: f64,
    pub s1: f64,
}

impl PiteParams {
    pub fn new(m0: f64) -> Result<Self> {
        if !(m0 > 0.0 && m0 < 1.0) {
            return Err(FqeError::invalid(format!(
                "m0 must lie in (0, 1), got {m0}"
            )));
        }
        let root = (1.0 - m0 * m0).sqrt();
        Ok(PiteParams {
            m0,
            theta0: root.atan2(m0),
            s1: m0 / root,
        })
    }

    /// The ancilla gate applied after the controlled evolutions.
    fn ancilla_gate(&self) -> [[C64; 2]; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let em = C64::from_polar(h, -self.theta0);
        let ep = C64::from_polar(h, self.theta0);
        let i = C64::new(0.0, 1.0);
        [[em, ep], [-i * em, i * ep]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    Constant {
        dtau: f64,
    },
    /// `Δτ_k = (1 − e^{−k/κ})(Δτ_max − Δτ_min) + Δτ_min`.
    Ramp {
        dtau_min: f64,
        dtau_max: f64,
        kappa: f64,
    },
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Schedule::Constant { dtau } => dtau > 0.0 && dtau.is_finite(),
            Schedule::Ramp {
                dtau_min,
                dtau_max,
                kappa,
            } => dtau_min > 0.0 && dtau_min <= dtau_max && dtau_max.is_finite() && kappa > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(FqeError::invalid(format!("invalid schedule {self:?}")))
        }
    }

    pub fn tau_at_step(&self, k: usize) -> f64 {
        match *self {
            Schedule::Constant { dtau } => dtau,
            Schedule::Ramp {
                dtau_min,
                dtau_max,
                kappa,
            } => (1.0 - (-(k as f64) / kappa).exp()) * (dtau_max - dtau_min) + dtau_min,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PiteOutcome {
    pub success_state: BranchState,
    pub p_success: f64,
    /// Squared norm of the failure branch.
    pub p_failure: f64,
}

/// Pre-measurement two-branch state of one PITE step.
pub fn pite_branches(
    state: &BranchState,
    prop: &Propagator,
    params: &PiteParams,
    dtau: f64,
) -> Result<BranchState> {
    if state.n_branches() != 1 {
        return Err(FqeError::invalid("PITE acts on a single-branch register"));
    }
    if !(dtau >= 0.0 && dtau.is_finite()) {
        return Err(FqeError::invalid(format!(
            "Δτ must be non-negative, got {dtau}"
        )));
    }
    let dt = params.s1 * dtau;
    let mut joint = state.with_ancillae(2)?;
    joint.apply_ancilla_gate(0, hadamard::gate())?;
    prop.evolve(&mut joint, &[dt, -dt])?;
    joint.apply_ancilla_gate(0, params.ancilla_gate())?;
    Ok(joint)
}

pub fn pite_step(
    state: &BranchState,
    prop: &Propagator,
    params: &PiteParams,
    dtau: f64,
) -> Result<PiteOutcome> {
    let joint = pite_branches(state, prop, params, dtau)?;
    let p_success = joint.branch_norm_sqr(0);
    if p_success < SUCCESS_FLOOR {
        return Err(FqeError::VanishingSuccess {
            step: 0,
            p: p_success,
        });
    }
    let mut success_state = joint.take_branch(0);
    success_state.normalize()?;
    Ok(PiteOutcome {
        success_state,
        p_success,
        p_failure: joint.branch_norm_sqr(1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub dtau: f64,
    pub p_success: f64,
    pub p_cumulative: f64,
    pub weights: Vec<f64>,
    pub energy: f64,
    pub parity: f64,
}

/// Snapshot of a register state against the reference eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSummary {
    pub weights: Vec<f64>,
    pub energy: f64,
    pub parity: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial: StateSummary,
    pub rows: Vec<TrajectoryRow>,
    pub final_state: BranchState,
}

impl Trajectory {
    pub fn weight_series(&self, level: usize) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.weights.get(level).copied().unwrap_or(f64::NAN))
            .collect()
    }
}

pub fn summarize(
    state: &BranchState,
    ham: &Hamiltonian,
    eig: Option<&EigenSet>,
) -> Result<StateSummary> {
    let weights = match eig {
        Some(e) => eigenweights(state, e)?.individual,
        None => Vec::new(),
    };
    Ok(StateSummary {
        weights,
        energy: ham.expectation(state.amplitudes()),
        parity: parity_expectation(state)?,
    })
}

/// Runs `n_steps` PITE steps, always following the success branch.
pub fn run_pite(
    initial: &BranchState,
    prop: &Propagator,
    ham: &Hamiltonian,
    params: &PiteParams,
    schedule: &Schedule,
    n_steps: usize,
    eig: Option<&EigenSet>,
) -> Result<Trajectory> {
    schedule.validate()?;
    let mut state = initial.clone();
    state.normalize()?;
    let summary = summarize(&state, ham, eig)?;
    let mut rows = Vec::with_capacity(n_steps);
    let mut cumulative = 1.0;
    for k in 0..n_steps {
        let dtau = schedule.tau_at_step(k);
        let out = pite_step(&state, prop, params, dtau).map_err(|e| match e {
            FqeError::VanishingSuccess { p, .. } => FqeError::VanishingSuccess { step: k, p },
            other => other,
        })?;
        cumulative *= out.p_success;
        state = out.success_state;
        let s = summarize(&state, ham, eig)?;
        rows.push(TrajectoryRow {
            step: k,
            dtau,
            p_success: out.p_success,
            p_cumulative: cumulative,
            weights: s.weights,
            energy: s.energy,
            parity: s.parity,
        });
    }
    Ok(Trajectory {
        initial: summary,
        rows,
        final_state: state,
    })
}
