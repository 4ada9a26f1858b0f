//! Observables extracted from position measurements: electron density, the
//! one-electron density matrix and current densities.
//!
//! Currents are reported as probability currents (electric current divided
//! by the electron charge) unless [`CurrentUnits::Charge`] is requested, in
//! which case they carry the sign of the charge `−e`.

pub mod derivatives;

use nalgebra::DMatrix;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FqeError, Result};
use crate::grid::{BranchState, Grid};
use crate::hamiltonian::GaugeSpec;
use crate::spectral::{shift_raw, spectral_derivative};
use crate::units::UNITS;
use crate::C64;

pub use derivatives::{
    combinatorics, reconstruct_derivatives, unknown_count, CircuitSampler, DerivativeDistributions,
    DerivativeProblem, ProbabilitySource,
};

/// Largest 1DM dimension built for several particles.
pub const MAX_MANY_BODY_DM: usize = 64;
const MAX_DM: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldUnit {
    /// 1/length^dims.
    Density,
    ProbabilityCurrent,
    /// Probability current times the charge, in units of e.
    ChargeCurrent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurrentUnits {
    #[default]
    Probability,
    Charge,
}

impl CurrentUnits {
    fn factor(self) -> f64 {
        match self {
            CurrentUnits::Probability => 1.0,
            CurrentUnits::Charge => -1.0,
        }
    }

    fn unit(self) -> FieldUnit {
        match self {
            CurrentUnits::Probability => FieldUnit::ProbabilityCurrent,
            CurrentUnits::Charge => FieldUnit::ChargeCurrent,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub unit: FieldUnit,
}

impl ScalarField {
    /// `ΔV·Σ values`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    /// One value array per axis.
    pub components: Vec<Vec<f64>>,
    pub unit: FieldUnit,
}

impl VectorField {
    pub fn zeros(grid: Grid, unit: FieldUnit) -> Self {
        VectorField {
            grid,
            components: vec![vec![0.0; grid.len()]; grid.dims()],
            unit,
        }
    }

    pub fn component(&self, axis: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.components[axis].clone(),
            unit: self.unit,
        }
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        self.grid.check_same(&other.grid)?;
        if self.unit != other.unit {
            return Err(FqeError::invalid("cannot add fields with different units"));
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(VectorField {
            grid: self.grid,
            components,
            unit: self.unit,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        self.components
            .iter()
            .flatten()
            .zip(other.components.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Spectral divergence `Σ_a ∂_a j_a`.
    pub fn divergence(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (axis, comp) in self.components.iter().enumerate() {
            let c: Vec<C64> = comp.iter().map(|&v| C64::new(v, 0.0)).collect();
            for (o, d) in out
                .iter_mut()
                .zip(spectral_derivative(&c, &self.grid, axis))
            {
                *o += d.re;
            }
        }
        out
    }

    /// `ΔV·Σ (X j_y − Y j_x)` about the cell center; positive means
    /// counterclockwise circulation seen from +z.
    pub fn circulation(&self) -> Result<f64> {
        if self.grid.dims() < 2 {
            return Err(FqeError::invalid(
                "circulation needs at least two dimensions",
            ));
        }
        let g = self.grid;
        let sum: f64 = (0..g.len())
            .map(|i| {
                let k = g.unravel(i);
                g.centered(k[0]) * self.components[1][i] - g.centered(k[1]) * self.components[0][i]
            })
            .sum();
        Ok(sum * g.cell_volume())
    }
}

/// How outcome probabilities are obtained from a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasurementModel {
    #[default]
    Exact,
    Sampled {
        shots: u64,
        seed: u64,
    },
}

/// Turns exact outcome distributions into estimates. One generator serves
/// a whole field run.
#[derive(Debug)]
pub struct Estimator {
    rng: Option<(ChaCha8Rng, u64)>,
}

impl Estimator {
    pub fn new(model: MeasurementModel) -> Result<Self> {
        match model {
            MeasurementModel::Exact => Ok(Estimator { rng: None }),
            MeasurementModel::Sampled { shots, seed } => {
                if shots == 0 {
                    return Err(FqeError::invalid("sampled mode needs at least one shot"));
                }
                Ok(Estimator {
                    rng: Some((ChaCha8Rng::seed_from_u64(seed), shots)),
                })
            }
        }
    }

    /// Exact probabilities are returned unchanged; in sampled mode each entry
    /// becomes the observed frequency over the configured number of shots.
    pub fn estimate(&mut self, probs: Vec<f64>) -> Result<Vec<f64>> {
        let Some((rng, shots)) = self.rng.as_mut() else {
            return Ok(probs);
        };
        let dist = WeightedIndex::new(probs.iter().map(|p| p.max(0.0)))
            .map_err(|e| FqeError::invalid(format!("bad outcome distribution: {e}")))?;
        let mut counts = vec![0u64; probs.len()];
        for _ in 0..*shots {
            counts[dist.sample(rng)] += 1;
        }
        let s = *shots as f64;
        Ok(counts.into_iter().map(|c| c as f64 / s).collect())
    }
}

/// Amplitudes of `n_e` particle registers, particle 0 fastest:
/// `idx = Σ_p k_p·M^p` with `M = N^dims`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyParticleState {
    grid: Grid,
    n_e: usize,
    amps: Vec<C64>,
}

impl ManyParticleState {
    pub fn new(grid: Grid, n_e: usize, amps: Vec<C64>) -> Result<Self> {
        if n_e == 0 {
            return Err(FqeError::invalid("need at least one particle"));
        }
        let m = grid.len();
        let len = m
            .checked_pow(n_e as u32)
            .filter(|&l| l <= 1 << 24)
            .ok_or_else(|| {
                FqeError::SizeGuard(format!(
                    "{n_e} registers of {m} points exceed the memory guard"
                ))
            })?;
        if amps.len() != len {
            return Err(FqeError::invalid(format!(
                "expected {len} amplitudes, got {}",
                amps.len()
            )));
        }
        Ok(ManyParticleState { grid, n_e, amps })
    }

    pub fn single(state: &BranchState) -> Result<Self> {
        if state.n_branches() != 1 {
            return Err(FqeError::invalid("observables need a single-branch state"));
        }
        state.require_position()?;
        ManyParticleState::new(*state.grid(), 1, state.amplitudes().to_vec())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_e(&self) -> usize {
        self.n_e
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    fn marginal(&self, amps: &[C64]) -> Vec<f64> {
        let m = self.grid.len();
        let mut p = vec![0.0; m];
        for chunk in amps.chunks(m) {
            for (pk, a) in p.iter_mut().zip(chunk) {
                *pk += a.norm_sqr();
            }
        }
        p
    }

    /// Probability `P_k` of finding particle 0 at grid point `k`.
    pub fn marginal_probabilities(&self) -> Vec<f64> {
        self.marginal(&self.amps)
    }
}

/// `ρ(r_k) = n_e·P_k/ΔV`.
pub fn density(state: &ManyParticleState, est: &mut Estimator) -> Result<ScalarField> {
    let scale = state.n_e as f64 / state.grid.cell_volume();
    let p = est.estimate(state.marginal_probabilities())?;
    Ok(ScalarField {
        grid: state.grid,
        values: p.into_iter().map(|v| v * scale).collect(),
        unit: FieldUnit::Density,
    })
}

pub fn density_exact(state: &BranchState) -> Result<ScalarField> {
    density(
        &ManyParticleState::single(state)?,
        &mut Estimator::new(MeasurementModel::Exact)?,
    )
}

#[derive(Debug, Clone)]
pub struct OneElectronDM {
    pub gamma: DMatrix<C64>,
    pub n_e: usize,
    pub cell_volume: f64,
}

impl OneElectronDM {
    /// `ΔV·tr γ`, equal to `n_e`.
    pub fn trace_volume(&self) -> f64 {
        self.gamma.trace().re * self.cell_volume
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.gamma - self.gamma.adjoint())
            .iter()
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn diagonal_density(&self) -> Vec<f64> {
        self.gamma.diagonal().iter().map(|z| z.re).collect()
    }
}

/// `γ(r, r′) = (n_e/ΔV)·Σ_rest Ψ(r, rest)Ψ*(r′, rest)` over the amplitudes
/// of the other registers.
pub fn one_electron_dm(state: &ManyParticleState) -> Result<OneElectronDM> {
    let m = state.grid.len();
    if (state.n_e >= 2 && m > MAX_MANY_BODY_DM) || m > MAX_DM {
        return Err(FqeError::SizeGuard(format!(
            "1DM of {m} points for {} particles",
            state.n_e
        )));
    }
    let scale = state.n_e as f64 / state.grid.cell_volume();
    let mut gamma = DMatrix::<C64>::zeros(m, m);
    for chunk in state.amps.chunks(m) {
        let v = nalgebra::DVector::from_column_slice(chunk);
        gamma += &v * v.adjoint();
    }
    gamma *= C64::new(scale, 0.0);
    Ok(OneElectronDM {
        gamma,
        n_e: state.n_e,
        cell_volume: state.grid.cell_volume(),
    })
}

/// `j_para = (1/m)·Im[ψ*∇ψ]` with an exact spectral derivative.
pub fn paramagnetic_current_oracle(
    state: &BranchState,
    mass_ratio: f64,
    units: CurrentUnits,
) -> Result<VectorField> {
    let single = ManyParticleState::single(state)?;
    let g = single.grid;
    let scale = units.factor() * UNITS.inverse_mass(mass_ratio) / g.cell_volume();
    let components = (0..g.dims())
        .map(|axis| {
            let d = spectral_derivative(&single.amps, &g, axis);
            single
                .amps
                .iter()
                .zip(d)
                .map(|(a, da)| scale * (a.conj() * da).im)
                .collect()
        })
        .collect();
    Ok(VectorField {
        grid: g,
        components,
        unit: units.unit(),
    })
}

/// Outcome probabilities of the shift interferometer acting on particle 0:
/// ancilla Hadamard, controlled cyclic shift by `shifts`, `Z_φ`, Hadamard.
/// Returns `[P_{k0}…, P_{k1}…]` marginalized over the other registers.
pub(crate) fn interferometer_probabilities(
    amps: &[C64],
    grid: &Grid,
    shifts: &[(usize, i64)],
    phi: f64,
) -> Vec<f64> {
    let n = grid.n_points();
    let mut moved = amps.to_vec();
    for &(axis, d) in shifts {
        shift_raw(&mut moved, n, grid.stride(axis), d);
    }
    let z = C64::from_polar(1.0, phi);
    let m = grid.len();
    let mut out = vec![0.0; 2 * m];
    for (i, (a, b)) in amps.iter().zip(&moved).enumerate() {
        let k = i % m;
        out[k] += (0.5 * (a + z * b)).norm_sqr();
        out[m + k] += (0.5 * (a - z * b)).norm_sqr();
    }
    out
}

/// Paramagnetic current along `axis` from the `φ = π/2` circuits with
/// displacements `±d` and the density at `r ± dΔx`.
pub fn paramagnetic_current_measured(
    state: &ManyParticleState,
    axis: usize,
    d: i64,
    mass_ratio: f64,
    est: &mut Estimator,
    units: CurrentUnits,
) -> Result<ScalarField> {
    let g = state.grid;
    if axis >= g.dims() {
        return Err(FqeError::invalid(format!(
            "axis {axis} outside a {}-D grid",
            g.dims()
        )));
    }
    if d < 1 || d as usize >= g.n_points() / 2 {
        return Err(FqeError::invalid(format!(
            "displacement must satisfy 1 ≤ d < N/2 = {}, got {d}",
            g.n_points() / 2
        )));
    }
    let m = g.len();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let p_plus = est.estimate(interferometer_probabilities(
        &state.amps,
        &g,
        &[(axis, d)],
        half_pi,
    ))?;
    let p_minus = est.estimate(interferometer_probabilities(
        &state.amps,
        &g,
        &[(axis, -d)],
        half_pi,
    ))?;
    let rho = density(state, est)?.values;
    let dv = g.cell_volume();
    let ne = state.n_e as f64;
    let scale = units.factor() * UNITS.inverse_mass(mass_ratio) / (2.0 * d as f64 * g.dx());
    let values = (0..m)
        .map(|k| {
            let fwd = rho[g.displaced(k, axis, d)];
            let bwd = rho[g.displaced(k, axis, -d)];
            scale * (2.0 * ne / dv * (p_plus[k] - p_minus[k]) + 0.5 * (fwd - bwd))
        })
        .collect();
    Ok(ScalarField {
        grid: g,
        values,
        unit: units.unit(),
    })
}

/// All components of the measured paramagnetic current.
pub fn paramagnetic_current_measured_vector(
    state: &ManyParticleState,
    d: i64,
    mass_ratio: f64,
    est: &mut Estimator,
    units: CurrentUnits,
) -> Result<VectorField> {
    let components = (0..state.grid.dims())
        .map(|axis| {
            paramagnetic_current_measured(state, axis, d, mass_ratio, est, units).map(|f| f.values)
        })
        .collect::<Result<_>>()?;
    Ok(VectorField {
        grid: state.grid,
        components,
        unit: units.unit(),
    })
}

/// `j_dia = −(1/m)·ρ·A` with the Landau-gauge `A = μ(x − x_g) e_y`.
pub fn diamagnetic_current(
    density: &ScalarField,
    gauge: &GaugeSpec,
    mass_ratio: f64,
    units: CurrentUnits,
) -> Result<VectorField> {
    let g = density.grid;
    let mut out = VectorField::zeros(g, units.unit());
    if gauge.field_tesla == 0.0 {
        return Ok(out);
    }
    if g.dims() < 2 {
        return Err(FqeError::invalid(
            "a magnetic field needs at least two dimensions",
        ));
    }
    let scale = -units.factor() * UNITS.inverse_mass(mass_ratio);
    for (i, (o, rho)) in out.components[1]
        .iter_mut()
        .zip(&density.values)
        .enumerate()
    {
        *o = scale * rho * gauge.vector_potential(g.coord(g.unravel(i)[0]));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct CurrentFields {
    pub density: ScalarField,
    pub paramagnetic: VectorField,
    pub diamagnetic: VectorField,
    pub total: VectorField,
}

/// Density, both current contributions and their sum from the spectral
/// oracle.
pub fn current_fields_oracle(
    state: &BranchState,
    gauge: &GaugeSpec,
    mass_ratio: f64,
    units: CurrentUnits,
) -> Result<CurrentFields> {
    let density = density_exact(state)?;
    let paramagnetic = paramagnetic_current_oracle(state, mass_ratio, units)?;
    let diamagnetic = diamagnetic_current(&density, gauge, mass_ratio, units)?;
    let total = paramagnetic.add(&diamagnetic)?;
    Ok(CurrentFields {
        density,
        paramagnetic,
        diamagnetic,
        total,
    })
}

/// Same as [`current_fields_oracle`] with the paramagnetic part from the
/// measurement circuits.
pub fn current_fields_measured(
    state: &BranchState,
    gauge: &GaugeSpec,
    mass_ratio: f64,
    d: i64,
    model: MeasurementModel,
    units: CurrentUnits,
) -> Result<CurrentFields> {
    let many = ManyParticleState::single(state)?;
    let mut est = Estimator::new(model)?;
    let density = density(&many, &mut est)?;
    let paramagnetic = paramagnetic_current_measured_vector(&many, d, mass_ratio, &mut est, units)?;
    let diamagnetic = diamagnetic_current(&density, gauge, mass_ratio, units)?;
    let total = paramagnetic.add(&diamagnetic)?;
    Ok(CurrentFields {
        density,
        paramagnetic,
        diamagnetic,
        total,
    })
}
