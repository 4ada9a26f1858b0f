//! Probabilistic filtration circuits that remove the eigenstate at a target
//! energy `λ` from the register.
//!
//! With `θ = (H − λ)Δt_f/2` the first-order circuit leaves
//! `i e^{−iHΔt_f/2} sin θ ψ` on the success outcome `|0⟩` and the
//! second-order circuit leaves `sin²θ ψ` on `|q₁q₀⟩ = |10⟩`.

use serde::{Deserialize, Serialize};

use crate::error::{FqeError, Result};
use crate::evolution::Propagator;
use crate::grid::{eigenweights, hadamard, BranchState};
use crate::hamiltonian::EigenSet;
use crate::pite::SUCCESS_FLOOR;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiltrationOrder {
    First,
    Second,
}

impl FiltrationOrder {
    pub fn number(self) -> u8 {
        match self {
            FiltrationOrder::First => 1,
            FiltrationOrder::Second => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiltrationParams {
    pub lambda: f64,
    pub dt_f: f64,
    pub order: FiltrationOrder,
}

impl FiltrationParams {
    pub fn new(lambda: f64, dt_f: f64, order: FiltrationOrder) -> Result<Self> {
        if !(dt_f > 0.0 && dt_f.is_finite() && lambda.is_finite()) {
            return Err(FqeError::invalid(format!(
                "need finite λ and Δt_f > 0, got {lambda}, {dt_f}"
            )));
        }
        Ok(FiltrationParams {
            lambda,
            dt_f,
            order,
        })
    }
}

#[derive(Debug, Clone)]
pub struct FiltrationReport {
    /// Normalized success state; `None` when the success branch vanished.
    pub success_state: Option<BranchState>,
    pub p_success: f64,
    /// Squared norm of every ancilla branch.
    pub branch_norms: Vec<f64>,
    pub weights_before: Vec<f64>,
    pub weights_after: Vec<f64>,
}

impl FiltrationReport {
    pub fn into_state(self) -> Result<BranchState> {
        let p = self.p_success;
        self.success_state
            .ok_or(FqeError::VanishingSuccess { step: 0, p })
    }
}

/// `Δt₁ = π/(Ẽ₁ − Ẽ₀)`.
pub fn optimal_dt(e1_est: f64, e0_est: f64) -> Result<f64> {
    let gap = e1_est - e0_est;
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(FqeError::invalid(format!(
            "energy gap must be positive, got {gap}"
        )));
    }
    Ok(std::f64::consts::PI / gap)
}

fn phase_branches(state: &mut BranchState, phases: &[f64]) {
    for (b, &ph) in phases.iter().enumerate() {
        if ph != 0.0 {
            let z = C64::from_polar(1.0, ph);
            state.branch_mut(b).iter_mut().for_each(|a| *a *= z);
        }
    }
}

/// Applies `e^{±iθ}` on the two values of ancilla `q` between Hadamards:
/// leaves `cos θ` on `q = 0` and `i sin θ` on `q = 1`.
fn rotation_block(
    state: &mut BranchState,
    q: usize,
    prop: &Propagator,
    p: &FiltrationParams,
) -> Result<()> {
    state.apply_ancilla_gate(q, hadamard::gate())?;
    let half = 0.5 * p.dt_f;
    let (dts, phases): (Vec<f64>, Vec<f64>) = (0..state.n_branches())
        .map(|b| {
            if b >> q & 1 == 0 {
                (-half, -p.lambda * half)
            } else {
                (half, p.lambda * half)
            }
        })
        .unzip();
    prop.evolve(state, &dts)?;
    phase_branches(state, &phases);
    state.apply_ancilla_gate(q, hadamard::gate())
}

fn x_gate() -> [[C64; 2]; 2] {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    [[z, o], [o, z]]
}

/// Pre-measurement branches of the first-order circuit.
pub fn filt1_branches(
    state: &BranchState,
    prop: &Propagator,
    p: &FiltrationParams,
) -> Result<BranchState> {
    let mut joint = state.with_ancillae(2)?;
    joint.apply_ancilla_gate(0, hadamard::gate())?;
    prop.evolve(&mut joint, &[0.0, p.dt_f])?;
    let half = 0.5 * p.lambda * p.dt_f;
    phase_branches(&mut joint, &[-half, half]);
    joint.apply_ancilla_gate(0, hadamard::gate())?;
    joint.apply_ancilla_gate(0, x_gate())?;
    Ok(joint)
}

/// Pre-measurement branches of the second-order circuit; branch index is
/// `2q₁ + q₀`.
pub fn filt2_branches(
    state: &BranchState,
    prop: &Propagator,
    p: &FiltrationParams,
) -> Result<BranchState> {
    let mut joint = state.with_ancillae(4)?;
    rotation_block(&mut joint, 1, prop, p)?;
    rotation_block(&mut joint, 0, prop, p)?;
    let minus_x = x_gate().map(|row| row.map(|z| -z));
    joint.apply_controlled_ancilla_gate(1, 0, minus_x)?;
    Ok(joint)
}

/// Runs the circuit of the requested order and post-selects success.
pub fn filter(
    state: &BranchState,
    prop: &Propagator,
    p: &FiltrationParams,
    eig: Option<&EigenSet>,
) -> Result<FiltrationReport> {
    if state.n_branches() != 1 {
        return Err(FqeError::invalid(
            "filtration acts on a single-branch register",
        ));
    }
    let (joint, success) = match p.order {
        FiltrationOrder::First => (filt1_branches(state, prop, p)?, 0),
        FiltrationOrder::Second => (filt2_branches(state, prop, p)?, 2),
    };
    let norm_in = state.norm_sqr();
    let branch_norms: Vec<f64> = (0..joint.n_branches())
        .map(|b| joint.branch_norm_sqr(b) / norm_in)
        .collect();
    let p_success = branch_norms[success];
    let weights_before = match eig {
        Some(e) => eigenweights(state, e)?.individual,
        None => Vec::new(),
    };
    let mut success_state = None;
    let mut weights_after = Vec::new();
    if p_success >= SUCCESS_FLOOR {
        let mut s = joint.take_branch(success);
        s.normalize()?;
        if let Some(e) = eig {
            weights_after = eigenweights(&s, e)?.individual;
        }
        success_state = Some(s);
    }
    Ok(FiltrationReport {
        success_state,
        p_success,
        branch_norms,
        weights_before,
        weights_after,
    })
}

pub fn filt1(
    state: &BranchState,
    prop: &Propagator,
    lambda: f64,
    dt_f: f64,
    eig: Option<&EigenSet>,
) -> Result<FiltrationReport> {
    filter(
        state,
        prop,
        &FiltrationParams::new(lambda, dt_f, FiltrationOrder::First)?,
        eig,
    )
}

pub fn filt2(
    state: &BranchState,
    prop: &Propagator,
    lambda: f64,
    dt_f: f64,
    eig: Option<&EigenSet>,
) -> Result<FiltrationReport> {
    filter(
        state,
        prop,
        &FiltrationParams::new(lambda, dt_f, FiltrationOrder::Second)?,
        eig,
    )
}

fn reduced_angles(de0: f64, de1: f64) -> (f64, f64) {
    let denom = 2.0 * (1.0 + de1 - de0);
    (
        std::f64::consts::PI * de0 / denom,
        std::f64::consts::PI * de1 / denom,
    )
}

/// Ground-to-first-excited weight ratio left by first-order filtration with
/// relative energy errors `δ̄E_k = δE_k/(E₁ − E₀)`.
pub fn residual_weight_ratio(c0: C64, c1: C64, de0_rel: f64, de1_rel: f64) -> Result<f64> {
    if c1.norm() == 0.0 {
        return Err(FqeError::Singular("c1 = 0".into()));
    }
    let (a0, a1) = reduced_angles(de0_rel, de1_rel);
    let cos2 = a1.cos().powi(2);
    if cos2 < 1e-24 {
        return Err(FqeError::Singular("cosine denominator vanishes".into()));
    }
    Ok((c0 / c1).norm_sqr() * a0.sin().powi(2) / cos2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauBounds {
    pub exact_ub1: f64,
    pub approx_ub1: f64,
    pub approx_ub2: f64,
}

/// Upper bounds on the total imaginary time after filtration that keep the
/// relative ground-state weight below `eps`.
pub fn tau_upper_bounds(
    c0: C64,
    c1: C64,
    de0_rel: f64,
    de1_rel: f64,
    eps: f64,
    gap: f64,
) -> Result<TauBounds> {
    if !(eps > 0.0 && eps < 1.0) || !(gap > 0.0) {
        return Err(FqeError::invalid("need ε ∈ (0, 1) and a positive gap"));
    }
    let ln = |x: f64, what: &str| {
        if x > 0.0 && x.is_finite() {
            Ok(x.ln())
        } else {
            Err(FqeError::Singular(format!(
                "logarithm of non-positive {what}"
            )))
        }
    };
    let ratio = ln(c1.norm() / c0.norm(), "|c1/c0|")?;
    let (a0, a1) = reduced_angles(de0_rel, de1_rel);
    let pi2 = std::f64::consts::PI.powi(2);
    let exact_ub1 =
        (eps.ln() + 2.0 * ratio + 2.0 * ln((a1.cos() / a0.sin()).abs(), "cos/sin ratio")?) / gap;
    let inv_de0 = ln(1.0 / de0_rel.abs(), "1/|δE0|")?;
    let approx_ub1 = ((4.0 * eps / pi2).ln() + 2.0 * ratio + 2.0 * inv_de0) / gap;
    let approx_ub2 = ((16.0 * eps / (pi2 * pi2)).ln() + 2.0 * ratio + 4.0 * inv_de0) / gap;
    Ok(TauBounds {
        exact_ub1,
        approx_ub1,
        approx_ub2,
    })
}
