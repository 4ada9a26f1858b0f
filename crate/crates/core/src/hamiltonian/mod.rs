//! Hamiltonian of a charged particle in a uniform field `B e_z` with the
//! Landau gauge `A = (x − x_g) B e_y`.
//!
//! The kinetic term is discretized through the rectangular matrices
//! `Π_ν[k, s] = (p_s − A_ν(r_k)) e^{i p_s·r_k}` (momentum labels `s` over
//! the full grid), `T = Σ_ν Π_ν Π_ν† / (2m N^dims)`. Applying it needs two
//! centered transforms per component and never forms a matrix.

pub mod fock_darwin;
pub mod lanczos;
pub mod potential;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FqeError, Result};
use crate::grid::{BranchState, Grid};
use crate::spectral::{cqft_raw, CqftDirection};
use crate::units::UNITS;
use crate::C64;

pub use fock_darwin::fock_darwin_levels;
pub use lanczos::{lowest_eigenpairs, EigenSet, LanczosOptions};
pub use potential::PotentialSpec;

pub const DEGENERACY_TOL: f64 = 1e-6;
const DENSE_LIMIT: usize = 4096;

/// Uniform field along z in the Landau gauge centered at `x_g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    pub field_tesla: f64,
    pub gauge_center: f64,
}

impl GaugeSpec {
    pub fn new(field_tesla: f64, gauge_center: f64) -> Self {
        GaugeSpec {
            field_tesla,
            gauge_center,
        }
    }

    pub fn none() -> Self {
        GaugeSpec::new(0.0, 0.0)
    }

    /// Signed coupling μ with `A_y(x) = μ(x − x_g)` absorbed into the
    /// kinetic momentum `p − A`.
    pub fn mu(&self) -> f64 {
        UNITS.magnetic_mu(self.field_tesla)
    }

    /// `μ(x − x_g)`.
    pub fn vector_potential(&self, x: f64) -> f64 {
        self.mu() * (x - self.gauge_center)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub grid: Grid,
    pub mass_ratio: f64,
    pub gauge: GaugeSpec,
    pub potential: PotentialSpec,
}

impl HamiltonianSpec {
    pub fn new(
        grid: Grid,
        mass_ratio: f64,
        gauge: GaugeSpec,
        potential: PotentialSpec,
    ) -> Result<Self> {
        let spec = HamiltonianSpec {
            grid,
            mass_ratio,
            gauge,
            potential,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass_ratio > 0.0 && self.mass_ratio.is_finite()) {
            return Err(FqeError::invalid(format!(
                "mass ratio must be positive, got {}",
                self.mass_ratio
            )));
        }
        if !self.gauge.field_tesla.is_finite() || !self.gauge.gauge_center.is_finite() {
            return Err(FqeError::invalid("field and gauge center must be finite"));
        }
        if self.grid.dims() < 2 && self.gauge.field_tesla != 0.0 {
            return Err(FqeError::invalid(
                "a magnetic field needs at least two dimensions",
            ));
        }
        Ok(())
    }

    pub fn inverse_mass(&self) -> f64 {
        UNITS.inverse_mass(self.mass_ratio)
    }

    pub fn has_field(&self) -> bool {
        self.gauge.field_tesla != 0.0
    }

    pub fn evaluate_potential(&self) -> Result<Vec<f64>> {
        self.potential.evaluate(&self.grid, self.mass_ratio)
    }

    /// Free-particle kinetic energy `(p_s)²/2m` of momentum label `s`.
    pub fn kinetic_energy(&self, s: usize) -> f64 {
        0.5 * self.inverse_mass() * self.grid.momentum(s).powi(2)
    }

    pub fn with_gauge_center(&self, x_g: f64) -> Self {
        let mut s = self.clone();
        s.gauge.gauge_center = x_g;
        s
    }
}

/// Evaluated Hamiltonian ready for repeated application.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    spec: HamiltonianSpec,
    potential: Vec<f64>,
    /// `A_y` per x index; empty when there is no field.
    a_y: Vec<f64>,
    momenta: Vec<f64>,
}

impl Hamiltonian {
    pub fn new(spec: &HamiltonianSpec) -> Result<Self> {
        spec.validate()?;
        let grid = spec.grid;
        let a_y = if spec.has_field() {
            (0..grid.n_points())
                .map(|k| spec.gauge.vector_potential(grid.coord(k)))
                .collect()
        } else {
            Vec::new()
        };
        Ok(Hamiltonian {
            spec: spec.clone(),
            potential: spec.evaluate_potential()?,
            a_y,
            momenta: grid.momenta(),
        })
    }

    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }
    pub fn grid(&self) -> &Grid {
        &self.spec.grid
    }
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// `A_ν` at flat index `i`.
    fn vector_potential(&self, axis: usize, i: usize) -> f64 {
        if axis == 1 && !self.a_y.is_empty() {
            self.a_y[self.grid().unravel(i)[0]]
        } else {
            0.0
        }
    }

    fn multiply_momenta(&self, data: &mut [C64], stride: usize) {
        let n = self.grid().n_points();
        for (j, a) in data.iter_mut().enumerate() {
            *a *= self.momenta[(j / stride) % n];
        }
    }

    /// `out = H·input` for one amplitude vector in position representation.
    pub fn apply_into(&self, input: &[C64], out: &mut [C64]) {
        let grid = *self.grid();
        let n = grid.n_points();
        let half_inv_m = 0.5 * self.spec.inverse_mass();
        for ((o, a), v) in out.iter_mut().zip(input).zip(&self.potential) {
            *o = a * v;
        }
        let mut w = input.to_vec();
        let mut scratch = vec![C64::new(0.0, 0.0); input.len()];
        for axis in 0..grid.dims() {
            let stride = grid.stride(axis);
            let magnetic = axis == 1 && !self.a_y.is_empty();
            // w = Π†ψ = p·Fψ − F(Aψ)
            w.copy_from_slice(input);
            cqft_raw(&mut w, n, stride, CqftDirection::ToMomentum);
            self.multiply_momenta(&mut w, stride);
            if magnetic {
                for (i, (s, a)) in scratch.iter_mut().zip(input).enumerate() {
                    *s = a * self.vector_potential(axis, i);
                }
                cqft_raw(&mut scratch, n, stride, CqftDirection::ToMomentum);
                w.iter_mut().zip(&scratch).for_each(|(x, y)| *x -= y);
                // scratch = F⁻¹ w, used for the A·F⁻¹w term
                scratch.copy_from_slice(&w);
                cqft_raw(&mut scratch, n, stride, CqftDirection::ToPosition);
            }
            self.multiply_momenta(&mut w, stride);
            cqft_raw(&mut w, n, stride, CqftDirection::ToPosition);
            for (i, o) in out.iter_mut().enumerate() {
                let mut t = w[i];
                if magnetic {
                    t -= scratch[i] * self.vector_potential(axis, i);
                }
                *o += half_inv_m * t;
            }
        }
    }

    pub fn apply_vec(&self, input: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); input.len()];
        self.apply_into(input, &mut out);
        out
    }

    /// `H|ψ⟩` for a single-branch position-space state.
    pub fn apply(&self, state: &BranchState) -> Result<BranchState> {
        self.grid().check_same(state.grid())?;
        if state.n_branches() != 1 {
            return Err(FqeError::invalid(
                "the Hamiltonian acts on single-branch states",
            ));
        }
        state.require_position()?;
        BranchState::from_amplitudes(*state.grid(), self.apply_vec(state.amplitudes()))
    }

    /// `⟨ψ|H|ψ⟩/⟨ψ|ψ⟩`.
    pub fn expectation(&self, amps: &[C64]) -> f64 {
        let h = self.apply_vec(amps);
        crate::grid::inner(amps, &h).re / crate::grid::norm_sqr(amps)
    }

    /// Dense matrix with the same discretization, assembled line by line
    /// from `Σ_s (p_s − A_k)(p_s − A_k') e^{i p_s (x_k − x_k')}/(2mN)`.
    pub fn dense(&self) -> Result<DMatrix<C64>> {
        let grid = *self.grid();
        let dim = grid.len();
        if dim > DENSE_LIMIT {
            return Err(FqeError::SizeGuard(format!(
                "dense Hamiltonian of dimension {dim} exceeds {DENSE_LIMIT}"
            )));
        }
        let n = grid.n_points();
        let half_inv_m = 0.5 * self.spec.inverse_mass();
        // phase[(j − j') mod N][s] = e^{i p_s (j − j') Δx}
        let phase: Vec<Vec<C64>> = (0..n)
            .map(|dj| {
                (0..n)
                    .map(|s| C64::from_polar(1.0, self.momenta[s] * grid.coord(dj)))
                    .collect()
            })
            .collect();
        let mut h = DMatrix::<C64>::zeros(dim, dim);
        for i in 0..dim {
            h[(i, i)] += self.potential[i];
        }
        for axis in 0..grid.dims() {
            let stride = grid.stride(axis);
            for base in (0..dim).filter(|&i| grid.unravel(i)[axis] == 0) {
                for j in 0..n {
                    let r = base + j * stride;
                    let ar = self.vector_potential(axis, r);
                    for jp in 0..n {
                        let c = base + jp * stride;
                        let ac = self.vector_potential(axis, c);
                        let ph = &phase[(j + n - jp) % n];
                        let sum: C64 = (0..n)
                            .map(|s| ph[s] * (self.momenta[s] - ar) * (self.momenta[s] - ac))
                            .sum();
                        h[(r, c)] += sum * (half_inv_m / n as f64);
                    }
                }
            }
        }
        Ok(h)
    }
}

/// `(T + V)ψ` for a single-branch state.
pub fn apply_hamiltonian(state: &BranchState, spec: &HamiltonianSpec) -> Result<BranchState> {
    Hamiltonian::new(spec)?.apply(state)
}

pub fn dense_hamiltonian(spec: &HamiltonianSpec) -> Result<DMatrix<C64>> {
    Hamiltonian::new(spec)?.dense()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::spectral::momentum_eigenstate_1d;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_vec(len: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<C64> = (0..len)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let n = crate::grid::norm_sqr(&v).sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    pub(crate) fn dw_spec(n: u32, b: f64) -> HamiltonianSpec {
        let g = Grid::new(n, 2, 120.0).unwrap();
        let pot = PotentialSpec::DoubleWell {
            v0: -59.3,
            vp: 41.51,
            a: 20.0,
            delta: 24.48,
            delta_x: 2.94,
            delta_y: 24.48,
        };
        HamiltonianSpec::new(g, 0.067, GaugeSpec::new(b, 60.0), pot).unwrap()
    }

    fn matvec(h: &DMatrix<C64>, v: &[C64]) -> Vec<C64> {
        (0..v.len())
            .map(|i| (0..v.len()).map(|j| h[(i, j)] * v[j]).sum())
            .collect()
    }

    #[test]
    fn momentum_eigenstate_has_kinetic_eigenvalue() {
        let g = Grid::new(4, 1, 30.0).unwrap();
        let spec = HamiltonianSpec::new(g, 0.067, GaugeSpec::none(), PotentialSpec::Zero).unwrap();
        let h = Hamiltonian::new(&spec).unwrap();
        for s in [0, 5, 8, 13] {
            let v = momentum_eigenstate_1d(&g, s);
            let hv = h.apply_vec(&v);
            let e = spec.kinetic_energy(s);
            for (a, b) in hv.iter().zip(&v) {
                assert!((a - e * b).norm() < 1e-10 * e.max(1.0));
            }
        }
    }

    #[test]
    fn hermitian_as_operator() {
        let spec = dw_spec(3, 3.0);
        let h = Hamiltonian::new(&spec).unwrap();
        let (a, b) = (random_vec(64, 1), random_vec(64, 2));
        let lhs = crate::grid::inner(&a, &h.apply_vec(&b));
        let rhs = crate::grid::inner(&h.apply_vec(&a), &b);
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn matrix_free_equals_dense() {
        for (n, dims, b) in [
            (3, 2, 0.0),
            (3, 2, 3.0),
            (2, 2, 5.0),
            (3, 1, 0.0),
            (2, 3, 0.0),
            (2, 3, 2.0),
        ] {
            let g = Grid::new(n, dims, 50.0).unwrap();
            let pot = PotentialSpec::Harmonic { omega0: 4.0 };
            let spec = HamiltonianSpec::new(g, 0.067, GaugeSpec::new(b, 17.0), pot).unwrap();
            let h = Hamiltonian::new(&spec).unwrap();
            let d = h.dense().unwrap();
            for seed in 0..20 {
                let v = random_vec(g.len(), seed);
                let x = h.apply_vec(&v);
                let y = matvec(&d, &v);
                let err = x
                    .iter()
                    .zip(&y)
                    .map(|(p, q)| (p - q).norm())
                    .fold(0.0, f64::max);
                assert!(err < 1e-10, "n={n} dims={dims} B={b} err={err}");
            }
        }
    }

    #[test]
    fn dense_is_hermitian_for_double_well() {
        let d = dense_hamiltonian(&dw_spec(3, 3.0)).unwrap();
        let err = (&d - d.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn free_dense_is_fourier_conjugated_kinetic() {
        let g = Grid::new(2, 1, 3.0).unwrap();
        let spec = HamiltonianSpec::new(g, 1.0, GaugeSpec::none(), PotentialSpec::Zero).unwrap();
        let d = dense_hamiltonian(&spec).unwrap();
        let f: Vec<Vec<C64>> = (0..4).map(|s| momentum_eigenstate_1d(&g, s)).collect();
        for r in 0..4 {
            for c in 0..4 {
                let expect: C64 = (0..4)
                    .map(|s| f[s][r] * spec.kinetic_energy(s) * f[s][c].conj())
                    .sum();
                assert!((d[(r, c)] - expect).norm() < 1e-12);
            }
        }
    }

    /// Literal `Σ_ν Π_ν Π_ν†/(2m N^dims) + V` with full-grid momentum labels.
    #[test]
    fn dense_matches_brute_force_pi_sum() {
        let g = Grid::new(2, 2, 9.0).unwrap();
        let spec = HamiltonianSpec::new(
            g,
            0.3,
            GaugeSpec::new(4.0, 2.0),
            PotentialSpec::Harmonic { omega0: 2.0 },
        )
        .unwrap();
        let h = Hamiltonian::new(&spec).unwrap();
        let d = h.dense().unwrap();
        let dim = g.len();
        let mut brute = DMatrix::<C64>::zeros(dim, dim);
        for nu in 0..2 {
            let pi = DMatrix::<C64>::from_fn(dim, dim, |k, s| {
                let (rk, ms) = (g.unravel(k), g.unravel(s));
                let dot: f64 = (0..2).map(|a| g.momentum(ms[a]) * g.coord(rk[a])).sum();
                let a_nu = if nu == 1 {
                    spec.gauge.vector_potential(g.coord(rk[0]))
                } else {
                    0.0
                };
                C64::from_polar(1.0, dot) * (g.momentum(ms[nu]) - a_nu)
            });
            brute += &pi * pi.adjoint() * C64::new(0.5 * spec.inverse_mass() / dim as f64, 0.0);
        }
        for i in 0..dim {
            brute[(i, i)] += h.potential()[i];
        }
        let err = (&d - &brute).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
        let tr_d: C64 = (0..dim).map(|i| d[(i, i)]).sum();
        let tr_b: C64 = (0..dim).map(|i| brute[(i, i)]).sum();
        assert!((tr_d - tr_b).norm() < 1e-10);
    }

    #[test]
    fn rejects_field_in_one_dimension() {
        let g = Grid::new(3, 1, 1.0).unwrap();
        assert!(
            HamiltonianSpec::new(g, 1.0, GaugeSpec::new(1.0, 0.0), PotentialSpec::Zero).is_err()
        );
        assert!(HamiltonianSpec::new(g, 0.0, GaugeSpec::none(), PotentialSpec::Zero).is_err());
        let big = Grid::new(7, 2, 1.0).unwrap();
        let spec = HamiltonianSpec::new(big, 1.0, GaugeSpec::none(), PotentialSpec::Zero).unwrap();
        assert!(matches!(
            dense_hamiltonian(&spec),
            Err(FqeError::SizeGuard(_))
        ));
    }
}
