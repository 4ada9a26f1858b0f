//! Subroutine call numbers and CNOT counts of a single PITE step for one
//! particle in two dimensions.
//!
//! Singly controlled single-qubit gates cost 2 CNOTs and doubly controlled
//! ones 6.

use serde::{Deserialize, Serialize};

use crate::error::{FqeError, Result};
use crate::evolution::{kinetic_sequence, magnetic_sequence, SplittingPattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub qft: u32,
    pub u_kin: u32,
    pub u_kin_controlled: u32,
    pub u_mag: u32,
    pub u_pot: u32,
    pub u_pot_controlled: u32,
}

/// Calls per PITE step; controlled calls are included in the totals.
pub fn subroutine_calls(splitting: SplittingPattern, magnetic: bool) -> CallCounts {
    let (qft, u_kin, u_kin_controlled, u_mag) = match (splitting, magnetic) {
        (SplittingPattern::TV, false) => (6, 6, 3, 0),
        (SplittingPattern::TVT, false) => (18, 12, 6, 0),
        (SplittingPattern::TV, true) => (8, 6, 3, 2),
        (SplittingPattern::TVT, true) => (20, 12, 6, 6),
    };
    CallCounts {
        qft,
        u_kin,
        u_kin_controlled,
        u_mag,
        u_pot: 2,
        u_pot_controlled: 1,
    }
}

/// Costs of the arithmetic blocks of the Gaussian-evolution circuit. They
/// have no defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleWellSubcosts {
    /// Squared-distance unitary `S`.
    pub s: u64,
    pub add: u64,
    /// Exponential phase `U_e`.
    pub u_e: u64,
    /// Controlled `U_e`; the compute/uncompute blocks need no control.
    pub cu_e: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnotModel {
    pub n: u32,
    pub double_well: Option<DoubleWellSubcosts>,
}

impl CnotModel {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(FqeError::invalid(format!(
                "qubits per axis must be in 1..=64, got {n}"
            )));
        }
        Ok(CnotModel {
            n,
            double_well: None,
        })
    }

    pub fn with_double_well(mut self, subcosts: DoubleWellSubcosts) -> Self {
        self.double_well = Some(subcosts);
        self
    }

    /// Textbook QFT: `n(n−1)/2` controlled phases and `⌊n/2⌋` swaps at three
    /// CNOTs each; `n² + n/2` for even `n`.
    pub fn qft(&self) -> u64 {
        let n = self.n as u64;
        n * (n - 1) + 3 * (n / 2)
    }

    pub fn u_mag(&self) -> u64 {
        2 * (self.n as u64).pow(2)
    }

    pub fn u_kin(&self) -> u64 {
        let n = self.n as u64;
        n * (n - 1)
    }

    /// `n` singly and `n(n−1)/2` doubly controlled single-qubit gates.
    pub fn cu_kin(&self) -> u64 {
        let n = self.n as u64;
        3 * n * n - n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialScenario {
    /// Separable quadratic potential, one kinetic-like phase gate per axis.
    Harmonic,
    /// Three Gaussian-evolution circuits.
    DoubleWell,
    /// Potential costs left as symbols.
    Symbolic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentCounts {
    pub qft: u64,
    pub u_kin: u64,
    pub cu_kin: u64,
    pub u_mag: u64,
    /// `None` when the potential is symbolic.
    pub u_pot: Option<u64>,
    pub cu_pot: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum CnotCount {
    Exact(u64),
    /// `c(U_pot) + c(CU_pot) + constant`.
    Symbolic {
        expression: String,
        constant: u64,
    },
}

impl CnotCount {
    pub fn exact(&self) -> Option<u64> {
        match self {
            CnotCount::Exact(v) => Some(*v),
            CnotCount::Symbolic { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GateCountReport {
    pub splitting: SplittingPattern,
    pub n: u32,
    pub scenario: PotentialScenario,
    pub calls: CallCounts,
    pub components: ComponentCounts,
    pub total: CnotCount,
}

/// Multiplicities of QFT, kinetic, controlled-kinetic and magnetic costs.
fn multiplicities(splitting: SplittingPattern) -> [u64; 4] {
    match splitting {
        SplittingPattern::TV => [6, 2, 2, 2],
        SplittingPattern::TVT => [14, 4, 4, 6],
    }
}

fn potential_costs(model: &CnotModel, scenario: PotentialScenario) -> Result<Option<(u64, u64)>> {
    match scenario {
        PotentialScenario::Harmonic => Ok(Some((2 * model.u_kin(), 2 * model.cu_kin()))),
        PotentialScenario::DoubleWell => {
            let s = model.double_well.ok_or_else(|| {
                FqeError::invalid("double-well counts need the S, ADD, U_e and CU_e costs")
            })?;
            Ok(Some((
                12 * s.s + 6 * s.add + 3 * s.u_e,
                12 * s.s + 6 * s.add + 3 * s.cu_e,
            )))
        }
        PotentialScenario::Symbolic => Ok(None),
    }
}

/// CNOTs of one PITE step with the field on.
pub fn cnot_counts(
    model: &CnotModel,
    splitting: SplittingPattern,
    scenario: PotentialScenario,
) -> Result<GateCountReport> {
    let [a, b, c, d] = multiplicities(splitting);
    let kinetic = a * model.qft() + b * model.u_kin() + c * model.cu_kin() + d * model.u_mag();
    let pot = potential_costs(model, scenario)?;
    let total = match pot {
        Some((u, cu)) => CnotCount::Exact(u + cu + kinetic),
        None => CnotCount::Symbolic {
            expression: format!("c(U_pot) + c(CU_pot) + {kinetic}"),
            constant: kinetic,
        },
    };
    Ok(GateCountReport {
        splitting,
        n: model.n,
        scenario,
        calls: subroutine_calls(splitting, true),
        components: ComponentCounts {
            qft: model.qft(),
            u_kin: model.u_kin(),
            cu_kin: model.cu_kin(),
            u_mag: model.u_mag(),
            u_pot: pot.map(|p| p.0),
            cu_pot: pot.map(|p| p.1),
        },
        total,
    })
}

/// Closed form of the potential-independent part for even `n`:
/// `18n² − n` (TV) and `42n² − n` (TVT).
pub fn collapsed_kinetic_count(n: u32, splitting: SplittingPattern) -> u64 {
    let n = n as u64;
    match splitting {
        SplittingPattern::TV => 18 * n * n - n,
        SplittingPattern::TVT => 42 * n * n - n,
    }
}

/// CNOTs implied by the emitted phase-gate sequences: 2 per controlled
/// phase in `U_kin` and `U_mag`, and for `CU_kin` 2 per single-qubit phase
/// plus 6 per controlled phase.
pub fn counts_from_sequences(n: u32) -> Result<(u64, u64, u64)> {
    let kin = kinetic_sequence(n as usize, 1.0, 1.0)?;
    let mag = magnetic_sequence(n as usize, 1.0, 1.0, 0.0)?;
    let kc = kin.controlled_count() as u64;
    let ks = kin.gates.len() as u64 - kc;
    Ok((2 * kc, 2 * ks + 6 * kc, 2 * mag.controlled_count() as u64))
}
