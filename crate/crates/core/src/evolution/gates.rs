//! Explicit phase-gate decompositions of the diagonal kinetic and magnetic
//! operators.
//!
//! Each element multiplies the basis states on which all of its qubits are 1
//! by `e^{iθ}`. Qubit `q` is bit `q` of the register index, so for the
//! two-axis magnetic gate qubits `0..n` encode `k_x` and `n..2n` encode `k_y`.

use serde::{Deserialize, Serialize};

use crate::error::{FqeError, Result};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGate {
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
    pub angle: f64,
    pub layer: usize,
}

impl PhaseGate {
    fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().chain(&self.controls).copied()
    }

    pub fn is_controlled(&self) -> bool {
        !self.controls.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGateSequence {
    pub n_qubits: usize,
    pub gates: Vec<PhaseGate>,
    pub global_phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Kinetic,
    Magnetic,
}

impl PhaseGateSequence {
    pub fn layer_count(&self) -> usize {
        self.gates.iter().map(|g| g.layer + 1).max().unwrap_or(0)
    }

    pub fn controlled_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_controlled()).count()
    }

    /// True if no two gates of one layer touch the same qubit.
    pub fn layers_are_disjoint(&self) -> bool {
        let mut used = std::collections::HashSet::new();
        self.gates
            .iter()
            .all(|g| g.qubits().all(|q| used.insert((g.layer, q))))
    }

    /// The diagonal implemented by the sequence, global phase included.
    pub fn diagonal(&self) -> Vec<C64> {
        let masks: Vec<(usize, f64)> = self
            .gates
            .iter()
            .map(|g| (g.qubits().fold(0, |m, q| m | 1 << q), g.angle))
            .collect();
        (0..1usize << self.n_qubits)
            .map(|b| {
                let phase: f64 = masks
                    .iter()
                    .filter(|(m, _)| b & m == *m)
                    .map(|(_, a)| a)
                    .sum();
                C64::from_polar(1.0, phase + self.global_phase)
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Greedy layer assignment: each gate goes to the first layer at or after
/// `first` where all its qubits are free.
fn schedule(gates: &mut [PhaseGate], first: usize) {
    let mut busy: Vec<Vec<usize>> = Vec::new();
    for g in gates.iter_mut() {
        let qs: Vec<usize> = g.qubits().collect();
        let mut layer = first;
        loop {
            if busy.len() <= layer {
                busy.resize(layer + 1, Vec::new());
            }
            if qs.iter().all(|q| !busy[layer].contains(q)) {
                busy[layer].extend(&qs);
                g.layer = layer;
                break;
            }
            layer += 1;
        }
    }
}

/// `e^{−i e_kin s̃² Δt}` on `n` qubits with `s̃ = s − N/2`, where `e_kin` is
/// the kinetic energy quantum `Δp²/2m`.
pub fn kinetic_sequence(n: usize, e_kin: f64, dt: f64) -> Result<PhaseGateSequence> {
    if n == 0 || n > 16 {
        return Err(FqeError::invalid(format!("qubit count {n} out of range")));
    }
    let big_n = (1u64 << n) as f64;
    let c = e_kin * dt;
    let mut gates: Vec<PhaseGate> = (0..n)
        .map(|l| {
            let p = (1u64 << l) as f64;
            PhaseGate {
                targets: vec![l],
                controls: vec![],
                angle: p * (big_n - p) * c,
                layer: 0,
            }
        })
        .collect();
    let mut controlled = Vec::new();
    for l in 0..n {
        for lp in 0..l {
            let angle = -((1u64 << (l + lp + 1)) as f64) * c;
            controlled.push(PhaseGate {
                targets: vec![lp],
                controls: vec![l],
                angle,
                layer: 0,
            });
        }
    }
    schedule(&mut controlled, 1);
    gates.extend(controlled);
    Ok(PhaseGateSequence {
        n_qubits: n,
        gates,
        global_phase: -big_n * big_n * c / 4.0,
    })
}

/// `e^{iμ x y}` on `2n` qubits with `x = k_xΔx`, `y = k_yΔx`, as `n` layers
/// of `n` disjoint controlled phases (layer `d` couples `x_ℓ` to
/// `y_{(ℓ+d) mod n}`). A nonzero `x_g` appends one layer of single-qubit
/// phases on the y register for the factor `e^{−iμ x_g y}`.
pub fn magnetic_sequence(n: usize, mu: f64, dx: f64, x_g: f64) -> Result<PhaseGateSequence> {
    if n == 0 || n > 12 {
        return Err(FqeError::invalid(format!("qubit count {n} out of range")));
    }
    let mut gates = Vec::with_capacity(n * n + n);
    for d in 0..n {
        for l in 0..n {
            let lp = (l + d) % n;
            let angle = (1u64 << (l + lp)) as f64 * mu * dx * dx;
            gates.push(PhaseGate {
                targets: vec![n + lp],
                controls: vec![l],
                angle,
                layer: d,
            });
        }
    }
    if x_g != 0.0 {
        for lp in 0..n {
            let angle = -mu * x_g * (1u64 << lp) as f64 * dx;
            gates.push(PhaseGate {
                targets: vec![n + lp],
                controls: vec![],
                angle,
                layer: n,
            });
        }
    }
    Ok(PhaseGateSequence {
        n_qubits: 2 * n,
        gates,
        global_phase: 0.0,
    })
}
