//! Real-time evolution: diagonal phase operators and Trotterized steps.
//!
//! The kinetic propagator is realized through the magnetic conjugation
//! identity
//!
//! `e^{−iT̂Δt} = U_mag e^{−iT₀yΔt} U_mag† e^{−iT₀xΔt} (e^{−iT₀zΔt})`
//!
//! with free-particle factors `T₀ν` that are diagonal in the centered
//! momentum basis and `U_mag = e^{iμ(x−x_g)y}` diagonal in position.
//!
//! Controlled evolution is simulated per ancilla branch: every operator takes
//! one time step per branch, with zero meaning identity on that branch.

pub mod gates;
pub mod krylov;

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FqeError, Result};
use crate::grid::{BranchMask, BranchState, Repr};
use crate::hamiltonian::lanczos::dense_eigen;
use crate::hamiltonian::{Hamiltonian, HamiltonianSpec};
use crate::spectral::{cqft_axis, CqftDirection};
use crate::C64;

pub use gates::{kinetic_sequence, magnetic_sequence, GateKind, PhaseGate, PhaseGateSequence};
pub use krylov::KrylovPropagator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplittingPattern {
    /// `K(Δt)V(Δt)`, potential applied first.
    TV,
    /// `K(Δt/2)V(Δt)K(Δt/2)`.
    TVT,
}

/// Per-branch time steps from a mask.
pub fn masked_dts(n_branches: usize, dt: f64, mask: BranchMask) -> Vec<f64> {
    (0..n_branches)
        .map(|b| if mask.contains(b) { dt } else { 0.0 })
        .collect()
}

fn check_dts(state: &BranchState, dts: &[f64]) -> Result<()> {
    if dts.len() != state.n_branches() {
        return Err(FqeError::invalid(format!(
            "{} time steps for {} branches",
            dts.len(),
            state.n_branches()
        )));
    }
    Ok(())
}

/// Precomputed diagonals for Trotterized evolution under one Hamiltonian.
#[derive(Debug, Clone)]
pub struct Evolver {
    ham: Hamiltonian,
    /// Free kinetic energy of each momentum label.
    kinetic: Vec<f64>,
    /// `μ(x − x_g)` per x index, empty without a field.
    a_y: Vec<f64>,
}

impl Evolver {
    pub fn new(spec: &HamiltonianSpec) -> Result<Self> {
        let ham = Hamiltonian::new(spec)?;
        let grid = spec.grid;
        let kinetic = (0..grid.n_points())
            .map(|s| spec.kinetic_energy(s))
            .collect();
        let a_y = if spec.has_field() {
            (0..grid.n_points())
                .map(|k| spec.gauge.vector_potential(grid.coord(k)))
                .collect()
        } else {
            Vec::new()
        };
        Ok(Evolver { ham, kinetic, a_y })
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.ham
    }

    pub fn spec(&self) -> &HamiltonianSpec {
        self.ham.spec()
    }

    fn check(&self, state: &BranchState) -> Result<()> {
        self.ham.grid().check_same(state.grid())
    }

    /// `e^{−iE_s dt_b}` along `axis` on branch `b`. The axis must be in
    /// momentum representation.
    pub fn kinetic_phase(&self, state: &mut BranchState, axis: usize, dts: &[f64]) -> Result<()> {
        self.check(state)?;
        check_dts(state, dts)?;
        state.require(axis, Repr::Momentum)?;
        let grid = *state.grid();
        let (n, stride) = (grid.n_points(), grid.stride(axis));
        for (b, &dt) in dts.iter().enumerate() {
            if dt == 0.0 {
                continue;
            }
            let phases: Vec<C64> = self
                .kinetic
                .iter()
                .map(|e| C64::from_polar(1.0, -e * dt))
                .collect();
            for (i, a) in state.branch_mut(b).iter_mut().enumerate() {
                *a *= phases[(i / stride) % n];
            }
        }
        Ok(())
    }

    /// `U_mag` (or its adjoint) on the selected branches.
    pub fn magnetic_phase(
        &self,
        state: &mut BranchState,
        dagger: bool,
        mask: BranchMask,
    ) -> Result<()> {
        self.check(state)?;
        let grid = *state.grid();
        if grid.dims() < 2 {
            return Err(FqeError::invalid(
                "the magnetic phase needs at least two dimensions",
            ));
        }
        state.require(0, Repr::Position)?;
        state.require(1, Repr::Position)?;
        if self.a_y.is_empty() {
            return Ok(());
        }
        let n = grid.n_points();
        let sign = if dagger { -1.0 } else { 1.0 };
        let phases: Vec<C64> = (0..n * n)
            .map(|i| C64::from_polar(1.0, sign * self.a_y[i % n] * grid.coord((i / n) % n)))
            .collect();
        for b in (0..state.n_branches()).filter(|&b| mask.contains(b)) {
            for (i, a) in state.branch_mut(b).iter_mut().enumerate() {
                *a *= phases[i % (n * n)];
            }
        }
        Ok(())
    }

    /// `e^{−iV dt_b}` on branch `b`.
    pub fn potential_phase(&self, state: &mut BranchState, dts: &[f64]) -> Result<()> {
        self.check(state)?;
        check_dts(state, dts)?;
        state.require_position()?;
        for (b, &dt) in dts.iter().enumerate() {
            if dt == 0.0 {
                continue;
            }
            for (a, v) in state.branch_mut(b).iter_mut().zip(self.ham.potential()) {
                *a *= C64::from_polar(1.0, -v * dt);
            }
        }
        Ok(())
    }

    fn free_axis(&self, state: &mut BranchState, axis: usize, dts: &[f64]) -> Result<()> {
        cqft_axis(state, axis, CqftDirection::ToMomentum)?;
        self.kinetic_phase(state, axis, dts)?;
        cqft_axis(state, axis, CqftDirection::ToPosition)
    }

    /// Full kinetic propagator `e^{−iT̂ dt_b}` per branch. A negative step
    /// runs the adjoint of the positive-step circuit, so the factor order is
    /// reversed on those branches.
    pub fn kinetic_step(&self, state: &mut BranchState, dts: &[f64]) -> Result<()> {
        check_dts(state, dts)?;
        state.require_position()?;
        let dims = state.grid().dims();
        let (fwd, bwd) = split_signs(dts);
        if dims == 3 {
            self.free_axis(state, 2, dts)?;
        }
        self.free_axis(state, 0, &fwd)?;
        if dims >= 2 {
            let field = !self.a_y.is_empty();
            if field {
                self.magnetic_phase(state, true, BranchMask::ALL)?;
            }
            self.free_axis(state, 1, dts)?;
            if field {
                self.magnetic_phase(state, false, BranchMask::ALL)?;
            }
        }
        if bwd.iter().any(|&d| d != 0.0) {
            self.free_axis(state, 0, &bwd)?;
        }
        Ok(())
    }

    /// One Trotter step with branch-dependent time steps. Branches with a
    /// negative step receive the exact inverse of the positive-step circuit.
    pub fn step(
        &self,
        state: &mut BranchState,
        dts: &[f64],
        splitting: SplittingPattern,
    ) -> Result<()> {
        match splitting {
            SplittingPattern::TV => {
                let (fwd, bwd) = split_signs(dts);
                self.potential_phase(state, &fwd)?;
                self.kinetic_step(state, dts)?;
                self.potential_phase(state, &bwd)
            }
            SplittingPattern::TVT => {
                let half: Vec<f64> = dts.iter().map(|d| 0.5 * d).collect();
                self.kinetic_step(state, &half)?;
                self.potential_phase(state, dts)?;
                self.kinetic_step(state, &half)
            }
        }
    }
}

/// Splits per-branch steps into the non-negative and the negative ones.
fn split_signs(dts: &[f64]) -> (Vec<f64>, Vec<f64>) {
    dts.iter()
        .map(|&d| if d < 0.0 { (0.0, d) } else { (d, 0.0) })
        .unzip()
}

/// One Trotter step on the branches selected by `mask`.
pub fn rte_step(
    state: &mut BranchState,
    evolver: &Evolver,
    dt: f64,
    splitting: SplittingPattern,
    mask: BranchMask,
) -> Result<()> {
    let dts = masked_dts(state.n_branches(), dt, mask);
    evolver.step(state, &dts, splitting)
}

/// `e^{−i(H − offset)t}` from a dense eigendecomposition.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    energies: Vec<f64>,
    vectors: DMatrix<C64>,
    offset: f64,
}

impl ExactPropagator {
    pub fn from_matrix(h: DMatrix<C64>) -> Self {
        let (energies, vectors) = dense_eigen(h);
        ExactPropagator {
            energies,
            vectors,
            offset: 0.0,
        }
    }

    /// Propagator of the Hamiltonian described by `spec`, same
    /// discretization as the diagonalization oracle.
    pub fn new(spec: &HamiltonianSpec) -> Result<Self> {
        Ok(Self::from_matrix(Hamiltonian::new(spec)?.dense()?))
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenvector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i).iter().copied().collect()
    }

    /// `f(H − offset)ψ` for a scalar function of the energy.
    pub fn apply_fn(&self, amps: &[C64], f: impl Fn(f64) -> C64) -> Vec<C64> {
        let dim = amps.len();
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for (c, e) in self.energies.iter().enumerate() {
            let col = self.vectors.column(c);
            let coeff: C64 =
                col.iter().zip(amps).map(|(v, a)| v.conj() * a).sum::<C64>() * f(e - self.offset);
            out.iter_mut()
                .zip(col.iter())
                .for_each(|(o, v)| *o += coeff * v);
        }
        out
    }

    fn evolve(&self, state: &mut BranchState, dts: &[f64]) -> Result<()> {
        if state.grid().len() != self.energies.len() {
            return Err(FqeError::GridMismatch(
                "exact propagator built for another grid".into(),
            ));
        }
        state.require_position()?;
        for (b, &dt) in dts.iter().enumerate() {
            if dt == 0.0 {
                continue;
            }
            let out = self.apply_fn(state.branch(b), |e| C64::from_polar(1.0, -e * dt));
            state.branch_mut(b).copy_from_slice(&out);
        }
        Ok(())
    }
}

/// How `U(Δt)` is realized in the probabilistic circuits.
#[derive(Debug, Clone)]
pub enum Propagator {
    /// Trotterized evolution; steps longer than `max_substep` are split
    /// into equal substeps.
    Trotter {
        evolver: Arc<Evolver>,
        splitting: SplittingPattern,
        max_substep: Option<f64>,
    },
    /// Dense eigendecomposition of the Hamiltonian; small grids only.
    Exact(Arc<ExactPropagator>),
    /// Matrix-free exponential of the same Hamiltonian for any grid.
    Krylov(Arc<KrylovPropagator>),
}

impl Propagator {
    pub fn trotter(spec: &HamiltonianSpec, splitting: SplittingPattern) -> Result<Self> {
        Ok(Propagator::Trotter {
            evolver: Arc::new(Evolver::new(spec)?),
            splitting,
            max_substep: None,
        })
    }

    pub fn exact(spec: &HamiltonianSpec) -> Result<Self> {
        Ok(Propagator::Exact(Arc::new(ExactPropagator::new(spec)?)))
    }

    pub fn krylov(spec: &HamiltonianSpec) -> Result<Self> {
        Ok(Propagator::Krylov(Arc::new(KrylovPropagator::new(spec)?)))
    }

    pub fn with_max_substep(self, max: f64) -> Self {
        match self {
            Propagator::Trotter {
                evolver, splitting, ..
            } => Propagator::Trotter {
                evolver,
                splitting,
                max_substep: Some(max),
            },
            other => other,
        }
    }

    /// Applies `U(dt_b)` to branch `b`.
    pub fn evolve(&self, state: &mut BranchState, dts: &[f64]) -> Result<()> {
        check_dts(state, dts)?;
        match self {
            Propagator::Trotter {
                evolver,
                splitting,
                max_substep,
            } => {
                let longest = dts.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                let pieces = match max_substep {
                    Some(h) if *h > 0.0 && longest > *h => (longest / h).ceil() as usize,
                    _ => 1,
                };
                let sub: Vec<f64> = dts.iter().map(|d| d / pieces as f64).collect();
                for _ in 0..pieces {
                    evolver.step(state, &sub, *splitting)?;
                }
                Ok(())
            }
            Propagator::Exact(p) => p.evolve(state, dts),
            Propagator::Krylov(p) => p.evolve(state, dts),
        }
    }
}

/// Dense generator of the conjugation-form kinetic discretization,
/// `T₀x + U_mag T₀y U_mag† (+ T₀z) + V`.
pub fn dense_conjugation_hamiltonian(spec: &HamiltonianSpec) -> Result<DMatrix<C64>> {
    let grid = spec.grid;
    let dim = grid.len();
    if dim > 4096 {
        return Err(FqeError::SizeGuard(format!(
            "dense matrix of dimension {dim}"
        )));
    }
    let n = grid.n_points();
    let ham = Hamiltonian::new(spec)?;
    // 1-D free kinetic matrix from the centered basis.
    let t0 = DMatrix::<C64>::from_fn(n, n, |r, c| {
        (0..n)
            .map(|s| {
                C64::from_polar(
                    spec.kinetic_energy(s) / n as f64,
                    grid.momentum(s) * (grid.coord(r) - grid.coord(c)),
                )
            })
            .sum()
    });
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..dim {
        h[(i, i)] += ham.potential()[i];
    }
    let umag = |i: usize| {
        if grid.dims() >= 2 && spec.has_field() {
            let k = grid.unravel(i);
            C64::from_polar(
                1.0,
                spec.gauge.vector_potential(grid.coord(k[0])) * grid.coord(k[1]),
            )
        } else {
            C64::new(1.0, 0.0)
        }
    };
    for axis in 0..grid.dims() {
        let stride = grid.stride(axis);
        for base in (0..dim).filter(|&i| grid.unravel(i)[axis] == 0) {
            for j in 0..n {
                for jp in 0..n {
                    let (r, c) = (base + j * stride, base + jp * stride);
                    let mut t = t0[(j, jp)];
                    if axis == 1 {
                        t *= umag(r) * umag(c).conj();
                    }
                    h[(r, c)] += t;
                }
            }
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::hamiltonian::tests::random_vec;
    use crate::hamiltonian::{GaugeSpec, PotentialSpec};
    use crate::spectral::momentum_eigenstate_1d;

    fn spec(n: u32, b: f64, pot: PotentialSpec) -> HamiltonianSpec {
        HamiltonianSpec::new(
            Grid::new(n, 2, 40.0).unwrap(),
            0.067,
            GaugeSpec::new(b, 20.0),
            pot,
        )
        .unwrap()
    }

    fn random_state(g: Grid, seed: u64) -> BranchState {
        BranchState::from_amplitudes(g, random_vec(g.len(), seed)).unwrap()
    }

    fn dist(a: &[C64], b: &[C64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn zero_steps_are_identity() {
        let sp = spec(3, 2.0, PotentialSpec::Harmonic { omega0: 4.0 });
        let ev = Evolver::new(&sp).unwrap();
        let s0 = random_state(sp.grid, 1);
        let mut s = s0.clone();
        rte_step(&mut s, &ev, 0.0, SplittingPattern::TVT, BranchMask::ALL).unwrap();
        assert!(dist(s.amplitudes(), s0.amplitudes()) < 1e-13);
        ev.magnetic_phase(&mut s, false, BranchMask::ALL).unwrap();
        ev.magnetic_phase(&mut s, true, BranchMask::ALL).unwrap();
        assert!(dist(s.amplitudes(), s0.amplitudes()) < 1e-12);
    }

    #[test]
    fn kinetic_phase_needs_momentum_representation() {
        let sp = spec(3, 0.0, PotentialSpec::Zero);
        let ev = Evolver::new(&sp).unwrap();
        let mut s = random_state(sp.grid, 2);
        assert!(matches!(
            ev.kinetic_phase(&mut s, 0, &[0.1]),
            Err(FqeError::Representation { .. })
        ));
        cqft_axis(&mut s, 0, CqftDirection::ToMomentum).unwrap();
        let before = s.amplitudes()[4 + 8 * 3];
        ev.kinetic_phase(&mut s, 0, &[0.1]).unwrap();
        // label N/2 carries zero momentum
        assert!((s.amplitudes()[4 + 8 * 3] - before).norm() < 1e-15);
    }

    #[test]
    fn free_step_is_exact() {
        let sp = spec(4, 0.0, PotentialSpec::Zero);
        let ev = Evolver::new(&sp).unwrap();
        let g = sp.grid;
        let (sx, sy) = (3, 11);
        let (px, py) = (
            momentum_eigenstate_1d(&g, sx),
            momentum_eigenstate_1d(&g, sy),
        );
        let amps: Vec<C64> = (0..g.len()).map(|i| px[i % 16] * py[i / 16]).collect();
        let mut s = BranchState::from_amplitudes(g, amps.clone()).unwrap();
        let dt = 0.7;
        rte_step(&mut s, &ev, dt, SplittingPattern::TV, BranchMask::ALL).unwrap();
        let ph = C64::from_polar(1.0, -(sp.kinetic_energy(sx) + sp.kinetic_energy(sy)) * dt);
        for (a, b) in s.amplitudes().iter().zip(&amps) {
            assert!((a - ph * b).norm() < 1e-12);
        }
    }

    #[test]
    fn potential_phase_pointwise() {
        let sp = spec(3, 0.0, PotentialSpec::Harmonic { omega0: 4.0 });
        let ev = Evolver::new(&sp).unwrap();
        let s0 = random_state(sp.grid, 3);
        let mut s = s0.clone();
        ev.potential_phase(&mut s, &[0.3]).unwrap();
        let v = sp.evaluate_potential().unwrap();
        for i in 0..sp.grid.len() {
            assert!(
                (s.amplitudes()[i] - s0.amplitudes()[i] * C64::from_polar(1.0, -v[i] * 0.3)).norm()
                    < 1e-14
            );
        }
        assert_eq!(
            s.amplitudes()[sp.grid.ravel([4, 4, 0])],
            s0.amplitudes()[sp.grid.ravel([4, 4, 0])]
        );
    }

    #[test]
    fn magnetic_phase_matches_gate_sequence() {
        let sp = spec(4, 3.0, PotentialSpec::Zero);
        let ev = Evolver::new(&sp).unwrap();
        let g = sp.grid;
        let mut s =
            BranchState::from_amplitudes(g, vec![C64::new(0.25 / 4.0, 0.0); g.len()]).unwrap();
        let s0 = s.clone();
        ev.magnetic_phase(&mut s, false, BranchMask::ALL).unwrap();
        let seq = magnetic_sequence(4, sp.gauge.mu(), g.dx(), sp.gauge.gauge_center).unwrap();
        for (i, d) in seq.diagonal().iter().enumerate() {
            assert!((s.amplitudes()[i] - s0.amplitudes()[i] * d).norm() < 1e-12);
        }
    }

    #[test]
    fn kinetic_phase_matches_gate_sequence() {
        let sp = spec(4, 0.0, PotentialSpec::Zero);
        let ev = Evolver::new(&sp).unwrap();
        let g = Grid::new(4, 1, 40.0).unwrap();
        let sp1 =
            HamiltonianSpec::new(g, sp.mass_ratio, GaugeSpec::none(), PotentialSpec::Zero).unwrap();
        let ev1 = Evolver::new(&sp1).unwrap();
        let _ = ev;
        let mut s = BranchState::from_amplitudes(g, vec![C64::new(0.25, 0.0); 16]).unwrap();
        s.set_repr(0, Repr::Momentum);
        let dt = 0.9;
        ev1.kinetic_phase(&mut s, 0, &[dt]).unwrap();
        let e_kin = 0.5 * sp1.inverse_mass() * g.dp() * g.dp();
        let seq = kinetic_sequence(4, e_kin, dt).unwrap();
        for (a, d) in s.amplitudes().iter().zip(seq.diagonal()) {
            assert!((a - 0.25 * d).norm() < 1e-12);
        }
    }

    #[test]
    fn masked_step_leaves_other_branches() {
        let sp = spec(3, 3.0, PotentialSpec::Harmonic { omega0: 4.0 });
        let ev = Evolver::new(&sp).unwrap();
        let s0 = random_state(sp.grid, 5);
        let mut two = s0.with_ancillae(2).unwrap();
        two.branch_mut(1).copy_from_slice(s0.amplitudes());
        rte_step(
            &mut two,
            &ev,
            0.2,
            SplittingPattern::TVT,
            BranchMask::only(1),
        )
        .unwrap();
        assert!(dist(two.branch(0), s0.amplitudes()) < 1e-12);
        let mut one = s0.clone();
        rte_step(&mut one, &ev, 0.2, SplittingPattern::TVT, BranchMask::ALL).unwrap();
        assert!(dist(two.branch(1), one.amplitudes()) < 1e-12);
    }

    #[test]
    fn negative_step_is_inverse_circuit() {
        let sp = spec(3, 3.0, PotentialSpec::Harmonic { omega0: 4.0 });
        let ev = Evolver::new(&sp).unwrap();
        let s0 = random_state(sp.grid, 8);
        for pattern in [SplittingPattern::TV, SplittingPattern::TVT] {
            let mut s = s0.clone();
            ev.step(&mut s, &[0.37], pattern).unwrap();
            ev.step(&mut s, &[-0.37], pattern).unwrap();
            assert!(dist(s.amplitudes(), s0.amplitudes()) < 1e-12, "{pattern:?}");
            // both signs in one call, one per branch
            let mut two = s0.with_ancillae(2).unwrap();
            two.branch_mut(1).copy_from_slice(s0.amplitudes());
            ev.step(&mut two, &[0.37, -0.37], pattern).unwrap();
            ev.step(&mut two, &[-0.37, 0.37], pattern).unwrap();
            assert!(dist(two.branch(0), s0.amplitudes()) < 1e-12);
            assert!(dist(two.branch(1), s0.amplitudes()) < 1e-12);
        }
    }

    #[test]
    fn norm_after_many_steps() {
        let sp = spec(4, 5.0, PotentialSpec::Harmonic { omega0: 4.0 });
        let ev = Evolver::new(&sp).unwrap();
        let mut s = random_state(sp.grid, 6);
        for k in 0..100 {
            let pattern = if k % 2 == 0 {
                SplittingPattern::TV
            } else {
                SplittingPattern::TVT
            };
            rte_step(
                &mut s,
                &ev,
                0.05 * (1.0 + (k % 7) as f64),
                pattern,
                BranchMask::ALL,
            )
            .unwrap();
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    fn trotter_error_ratio(b: f64, pattern: SplittingPattern) -> f64 {
        let sp = spec(3, b, PotentialSpec::Harmonic { omega0: 4.0 });
        let ev = Evolver::new(&sp).unwrap();
        let exact = ExactPropagator::from_matrix(dense_conjugation_hamiltonian(&sp).unwrap());
        let s0 = random_state(sp.grid, 7);
        let err = |dt: f64| {
            let mut s = s0.clone();
            rte_step(&mut s, &ev, dt, pattern, BranchMask::ALL).unwrap();
            let e = exact.apply_fn(s0.amplitudes(), |e| C64::from_polar(1.0, -e * dt));
            dist(s.amplitudes(), &e)
        };
        err(2e-3) / err(1e-3)
    }

    #[test]
    fn trotter_order_without_field() {
        let r = trotter_error_ratio(0.0, SplittingPattern::TV);
        assert!((r / 4.0 - 1.0).abs() < 0.2, "TV ratio {r}");
        let r = trotter_error_ratio(0.0, SplittingPattern::TVT);
        assert!((r / 8.0 - 1.0).abs() < 0.2, "TVT ratio {r}");
    }

    /// The x and magnetic-conjugated y kinetic factors do not commute, so
    /// with a field the kinetic block is itself a first-order split and
    /// both patterns have second-order local error.
    #[test]
    fn trotter_order_with_field() {
        for pattern in [SplittingPattern::TV, SplittingPattern::TVT] {
            let r = trotter_error_ratio(3.0, pattern);
            assert!((r / 4.0 - 1.0).abs() < 0.2, "{pattern:?} ratio {r}");
        }
    }

    #[test]
    fn exact_propagator_unitary_and_inverse() {
        let sp = spec(3, 3.0, PotentialSpec::Harmonic { omega0: 4.0 });
        let p = Propagator::exact(&sp).unwrap();
        let s0 = random_state(sp.grid, 8);
        let mut two = s0.with_ancillae(2).unwrap();
        two.branch_mut(1).copy_from_slice(s0.amplitudes());
        p.evolve(&mut two, &[0.4, -0.4]).unwrap();
        assert!((two.branch_norm_sqr(0) - 1.0).abs() < 1e-12);
        p.evolve(&mut two, &[-0.4, 0.4]).unwrap();
        assert!(dist(two.branch(0), s0.amplitudes()) < 1e-12);
        assert!(dist(two.branch(1), s0.amplitudes()) < 1e-12);
    }

    #[test]
    fn substeps_converge_to_exact() {
        let sp = spec(3, 3.0, PotentialSpec::Harmonic { omega0: 4.0 });
        let exact = ExactPropagator::from_matrix(dense_conjugation_hamiltonian(&sp).unwrap());
        let s0 = random_state(sp.grid, 9);
        let reference = exact.apply_fn(s0.amplitudes(), |e| C64::from_polar(1.0, -e * 0.05));
        let coarse = Propagator::trotter(&sp, SplittingPattern::TVT).unwrap();
        let fine = coarse.clone().with_max_substep(0.0025);
        let run = |p: &Propagator| {
            let mut s = s0.clone();
            p.evolve(&mut s, &[0.05]).unwrap();
            dist(s.amplitudes(), &reference)
        };
        let (f, c) = (run(&fine), run(&coarse));
        assert!(f < c * 0.1, "fine {f} coarse {c}");
    }

    #[test]
    fn dims_three_free_step() {
        let g = Grid::new(2, 3, 10.0).unwrap();
        let sp = HamiltonianSpec::new(g, 1.0, GaugeSpec::none(), PotentialSpec::Zero).unwrap();
        let ev = Evolver::new(&sp).unwrap();
        let exact = ExactPropagator::from_matrix(dense_conjugation_hamiltonian(&sp).unwrap());
        let s0 = random_state(g, 10);
        let mut s = s0.clone();
        rte_step(&mut s, &ev, 0.3, SplittingPattern::TV, BranchMask::ALL).unwrap();
        let e = exact.apply_fn(s0.amplitudes(), |e| C64::from_polar(1.0, -e * 0.3));
        // free kinetic factors along different axes commute
        assert!(dist(s.amplitudes(), &e) < 1e-10);
    }
}
