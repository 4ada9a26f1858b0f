//! Simulation cell, qubit encoding of the wavefunction and initial states.
//!
//! A grid with `n` qubits per axis has `N = 2^n` points per axis at
//! coordinates `k·Δx`, `Δx = L/N`, covering `[0, L)` periodically. Flat
//! indices are row-major with x fastest: `(k_x, k_y) ↦ k_y·N + k_x`.
//!
//! The encoded amplitude of grid point `k` is `ΔV^{1/2} ψ(r_k)`, so the
//! amplitude vector has unit Euclidean norm.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FqeError, Result};
use crate::hamiltonian::EigenSet;
use crate::C64;

pub const MAX_QUBITS_PER_AXIS: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n_per_axis: u32,
    dims: usize,
    box_len: f64,
    n_points: usize,
    dx: f64,
    dp: f64,
    cell_volume: f64,
}

impl Grid {
    pub fn new(n_per_axis: u32, dims: usize, box_len: f64) -> Result<Self> {
        if !(1..=MAX_QUBITS_PER_AXIS).contains(&n_per_axis) {
            return Err(FqeError::invalid(format!(
                "qubits per axis must be in 1..={MAX_QUBITS_PER_AXIS}, got {n_per_axis}"
            )));
        }
        if !(1..=3).contains(&dims) {
            return Err(FqeError::invalid(format!(
                "dims must be 1, 2 or 3, got {dims}"
            )));
        }
        if !(box_len > 0.0 && box_len.is_finite()) {
            return Err(FqeError::invalid(format!(
                "box length must be positive, got {box_len}"
            )));
        }
        let n_points = 1usize << n_per_axis;
        if n_points.pow(dims as u32) > (1 << 24) {
            return Err(FqeError::SizeGuard(format!(
                "{n_points}^{dims} grid points exceed the memory guard"
            )));
        }
        let dx = box_len / n_points as f64;
        Ok(Grid {
            n_per_axis,
            dims,
            box_len,
            n_points,
            dx,
            dp: 2.0 * std::f64::consts::PI / box_len,
            cell_volume: dx.powi(dims as i32),
        })
    }

    pub fn n_per_axis(&self) -> u32 {
        self.n_per_axis
    }
    pub fn dims(&self) -> usize {
        self.dims
    }
    pub fn box_len(&self) -> f64 {
        self.box_len
    }
    /// Points per axis, `N = 2^n`.
    pub fn n_points(&self) -> usize {
        self.n_points
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dp(&self) -> f64 {
        self.dp
    }
    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Total number of grid points, `N^dims`.
    pub fn len(&self) -> usize {
        self.n_points.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat-index stride of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n_points.pow(axis as u32)
    }

    /// Coordinate `k·Δx` of index `k` along any axis.
    pub fn coord(&self, k: usize) -> f64 {
        k as f64 * self.dx
    }

    /// Coordinate measured from the cell center, `k·Δx − L/2`.
    pub fn centered(&self, k: usize) -> f64 {
        self.coord(k) - 0.5 * self.box_len
    }

    /// Momentum of label `s`, `(s − N/2)·Δp`.
    pub fn momentum(&self, s: usize) -> f64 {
        (s as f64 - (self.n_points / 2) as f64) * self.dp
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n_points).map(|s| self.momentum(s)).collect()
    }

    /// Per-axis indices of a flat index (unused axes are zero).
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for slot in out.iter_mut().take(self.dims) {
            *slot = idx % self.n_points;
            idx /= self.n_points;
        }
        out
    }

    pub fn ravel(&self, k: [usize; 3]) -> usize {
        (0..self.dims)
            .rev()
            .fold(0, |acc, a| acc * self.n_points + k[a] % self.n_points)
    }

    /// Index of the point obtained by inversion through the cell center,
    /// `k ↦ (N − k) mod N` per axis.
    pub fn inverted(&self, idx: usize) -> usize {
        let mut k = self.unravel(idx);
        for slot in k.iter_mut().take(self.dims) {
            *slot = (self.n_points - *slot) % self.n_points;
        }
        self.ravel(k)
    }

    /// Flat index displaced by `d` points along `axis`, periodically.
    pub fn displaced(&self, idx: usize, axis: usize, d: i64) -> usize {
        let mut k = self.unravel(idx);
        let n = self.n_points as i64;
        k[axis] = (k[axis] as i64 + d).rem_euclid(n) as usize;
        self.ravel(k)
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.n_per_axis == other.n_per_axis
            && self.dims == other.dims
            && (self.box_len - other.box_len).abs() <= 1e-12 * self.box_len
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(FqeError::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Representation of one axis of the register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Repr {
    Position,
    Momentum,
}

/// Selection of ancilla branches an operator acts on (bit `b` = branch `b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchMask(pub u8);

impl BranchMask {
    pub const ALL: BranchMask = BranchMask(u8::MAX);

    pub fn only(branch: usize) -> Self {
        BranchMask(1 << branch)
    }

    pub fn contains(self, branch: usize) -> bool {
        self.0 & (1 << branch) != 0
    }
}

/// System register together with up to two ancilla qubits.
///
/// The ancillae only couple to the register through controlled operators, so
/// the joint state is stored as one amplitude array per ancilla basis state.
/// Branch index bit `j` is the value of ancilla `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    grid: Grid,
    n_branches: usize,
    amps: Vec<C64>,
    repr: [Repr; 3],
}

impl BranchState {
    pub fn zeros(grid: Grid, n_branches: usize) -> Result<Self> {
        if ![1, 2, 4].contains(&n_branches) {
            return Err(FqeError::invalid(format!(
                "branch count must be 1, 2 or 4, got {n_branches}"
            )));
        }
        Ok(BranchState {
            grid,
            n_branches,
            amps: vec![C64::new(0.0, 0.0); n_branches * grid.len()],
            repr: [Repr::Position; 3],
        })
    }

    /// Single-branch state in position representation.
    pub fn from_amplitudes(grid: Grid, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(FqeError::GridMismatch(format!(
                "{} amplitudes for a grid of {} points",
                amps.len(),
                grid.len()
            )));
        }
        Ok(BranchState {
            grid,
            n_branches: 1,
            amps,
            repr: [Repr::Position; 3],
        })
    }

    pub fn position_basis(grid: Grid, k: [usize; 3]) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); grid.len()];
        amps[grid.ravel(k)] = C64::new(1.0, 0.0);
        BranchState {
            grid,
            n_branches: 1,
            amps,
            repr: [Repr::Position; 3],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn n_branches(&self) -> usize {
        self.n_branches
    }
    pub fn repr(&self, axis: usize) -> Repr {
        self.repr[axis]
    }
    pub(crate) fn set_repr(&mut self, axis: usize, r: Repr) {
        self.repr[axis] = r;
    }

    pub fn is_position(&self) -> bool {
        self.repr[..self.grid.dims()]
            .iter()
            .all(|r| *r == Repr::Position)
    }

    pub(crate) fn require(&self, axis: usize, expected: Repr) -> Result<()> {
        if self.repr[axis] == expected {
            Ok(())
        } else {
            Err(FqeError::Representation { axis, expected })
        }
    }

    pub(crate) fn require_position(&self) -> Result<()> {
        (0..self.grid.dims()).try_for_each(|a| self.require(a, Repr::Position))
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }
    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn branch(&self, b: usize) -> &[C64] {
        let m = self.grid.len();
        &self.amps[b * m..(b + 1) * m]
    }

    pub fn branch_mut(&mut self, b: usize) -> &mut [C64] {
        let m = self.grid.len();
        &mut self.amps[b * m..(b + 1) * m]
    }

    pub fn branch_norm_sqr(&self, b: usize) -> f64 {
        norm_sqr(self.branch(b))
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm_sqr().sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(FqeError::invalid("cannot normalize a zero-norm state"));
        }
        let inv = 1.0 / n;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(n)
    }

    /// Appends ancilla qubits in |0⟩: the register moves to branch 0 of a
    /// `n_branches`-branch state.
    pub fn with_ancillae(&self, n_branches: usize) -> Result<Self> {
        if self.n_branches != 1 {
            return Err(FqeError::invalid(
                "ancillae can only be attached to a single-branch state",
            ));
        }
        let mut out = BranchState::zeros(self.grid, n_branches)?;
        out.repr = self.repr;
        out.branch_mut(0).copy_from_slice(&self.amps);
        Ok(out)
    }

    /// Unnormalized single-branch state holding branch `b`.
    pub fn take_branch(&self, b: usize) -> BranchState {
        BranchState {
            grid: self.grid,
            n_branches: 1,
            amps: self.branch(b).to_vec(),
            repr: self.repr,
        }
    }

    /// Applies a single-qubit gate `[[g00, g01], [g10, g11]]` to ancilla
    /// `ancilla`, mixing the branch pairs that differ in that bit.
    pub fn apply_ancilla_gate(&mut self, ancilla: usize, gate: [[C64; 2]; 2]) -> Result<()> {
        let bit = 1usize << ancilla;
        if bit >= self.n_branches {
            return Err(FqeError::invalid(format!(
                "no ancilla {ancilla} in a {}-branch state",
                self.n_branches
            )));
        }
        let m = self.grid.len();
        for b0 in (0..self.n_branches).filter(|b| b & bit == 0) {
            let b1 = b0 | bit;
            let (lo, hi) = self.amps.split_at_mut(b1 * m);
            let v0 = &mut lo[b0 * m..(b0 + 1) * m];
            let v1 = &mut hi[..m];
            for (a0, a1) in v0.iter_mut().zip(v1.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = gate[0][0] * x0 + gate[0][1] * x1;
                *a1 = gate[1][0] * x0 + gate[1][1] * x1;
            }
        }
        Ok(())
    }

    /// Applies a gate on `ancilla` only within branches where ancilla
    /// `control` is 1.
    pub fn apply_controlled_ancilla_gate(
        &mut self,
        control: usize,
        ancilla: usize,
        gate: [[C64; 2]; 2],
    ) -> Result<()> {
        let bit = 1usize << ancilla;
        let cbit = 1usize << control;
        if bit >= self.n_branches || cbit >= self.n_branches || bit == cbit {
            return Err(FqeError::invalid("invalid ancilla/control pair"));
        }
        let m = self.grid.len();
        for b0 in (0..self.n_branches).filter(|b| b & bit == 0 && b & cbit != 0) {
            let b1 = b0 | bit;
            for i in 0..m {
                let (x0, x1) = (self.amps[b0 * m + i], self.amps[b1 * m + i]);
                self.amps[b0 * m + i] = gate[0][0] * x0 + gate[0][1] * x1;
                self.amps[b1 * m + i] = gate[1][0] * x0 + gate[1][1] * x1;
            }
        }
        Ok(())
    }

    pub fn inner(&self, other: &BranchState) -> Result<C64> {
        self.grid.check_same(&other.grid)?;
        if self.amps.len() != other.amps.len() {
            return Err(FqeError::invalid("branch count mismatch"));
        }
        Ok(inner(&self.amps, &other.amps))
    }
}

pub(crate) fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// ⟨a|b⟩.
pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub mod hadamard {
    use crate::C64;
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn gate() -> [[C64; 2]; 2] {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        [[h, h], [h, -h]]
    }
}

/// Initial wavefunction shapes. Offsets and widths are in nm; centers are
/// measured from the cell center along x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateSpec {
    /// `exp(−((X − x_c)² + Y²)/w²)`.
    Gaussian {
        x_c: f64,
        width: f64,
    },
    /// `exp(−(|X| + |Y|)/d)`.
    Exponential {
        decay: f64,
    },
    /// `g(a) + g(−a)`.
    BondingS {
        a: f64,
        width: f64,
    },
    /// `g(a) − g(−a)`.
    AntibondingS {
        a: f64,
        width: f64,
    },
    /// `g(3a/2) + g(−3a/2) − (5/2) g(0)`.
    BondingPx {
        a: f64,
        width: f64,
    },
    PositionBasis {
        k: Vec<usize>,
    },
    /// Rows of `(k_x, k_y, re, im)` read from a CSV file.
    CustomTable {
        path: String,
    },
}

fn gaussian(grid: &Grid, idx: usize, x_c: f64, width: f64) -> f64 {
    let k = grid.unravel(idx);
    let mut r2 = (grid.centered(k[0]) - x_c).powi(2);
    for &kk in k.iter().take(grid.dims()).skip(1) {
        r2 += grid.centered(kk).powi(2);
    }
    (-r2 / (width * width)).exp()
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(FqeError::invalid(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn inside(grid: &Grid, offset: f64) -> Result<()> {
    if offset.abs() < 0.5 * grid.box_len() {
        Ok(())
    } else {
        Err(FqeError::invalid(format!(
            "offset {offset} lies outside the cell"
        )))
    }
}

/// Builds a normalized single-branch state.
pub fn init_state(grid: &Grid, spec: &InitialStateSpec) -> Result<BranchState> {
    let real = |f: &dyn Fn(usize) -> f64| -> Vec<C64> {
        (0..grid.len()).map(|i| C64::new(f(i), 0.0)).collect()
    };
    let amps = match spec {
        InitialStateSpec::Gaussian { x_c, width } => {
            positive("width", *width)?;
            inside(grid, *x_c)?;
            real(&|i| gaussian(grid, i, *x_c, *width))
        }
        InitialStateSpec::Exponential { decay } => {
            positive("decay", *decay)?;
            real(&|i| {
                let k = grid.unravel(i);
                let s: f64 = k
                    .iter()
                    .take(grid.dims())
                    .map(|&kk| grid.centered(kk).abs())
                    .sum();
                (-s / decay).exp()
            })
        }
        InitialStateSpec::BondingS { a, width } | InitialStateSpec::AntibondingS { a, width } => {
            positive("width", *width)?;
            inside(grid, *a)?;
            let sign = if matches!(spec, InitialStateSpec::BondingS { .. }) {
                1.0
            } else {
                -1.0
            };
            real(&|i| gaussian(grid, i, *a, *width) + sign * gaussian(grid, i, -*a, *width))
        }
        InitialStateSpec::BondingPx { a, width } => {
            positive("width", *width)?;
            inside(grid, 1.5 * a)?;
            real(&|i| {
                gaussian(grid, i, 1.5 * a, *width) + gaussian(grid, i, -1.5 * a, *width)
                    - 2.5 * gaussian(grid, i, 0.0, *width)
            })
        }
        InitialStateSpec::PositionBasis { k } => {
            if k.len() != grid.dims() || k.iter().any(|&kk| kk >= grid.n_points()) {
                return Err(FqeError::invalid(format!(
                    "basis index {k:?} outside the grid"
                )));
            }
            let mut kk = [0; 3];
            kk[..k.len()].copy_from_slice(k);
            return Ok(BranchState::position_basis(*grid, kk));
        }
        InitialStateSpec::CustomTable { path } => read_table(grid, Path::new(path))?,
    };
    let mut state = BranchState::from_amplitudes(*grid, amps)?;
    state
        .normalize()
        .map_err(|_| FqeError::invalid("initial state has zero norm on this grid"))?;
    Ok(state)
}

fn read_table(grid: &Grid, path: &Path) -> Result<Vec<C64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut amps = vec![C64::new(0.0, 0.0); grid.len()];
    for rec in reader.records() {
        let rec = rec?;
        let field = |i: usize| -> Result<&str> {
            rec.get(i)
                .ok_or_else(|| FqeError::invalid(format!("row {:?} has fewer than 4 columns", rec)))
        };
        let parse_idx = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| FqeError::invalid(format!("bad index {s:?}: {e}")))
        };
        let parse_f = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| FqeError::invalid(format!("bad value {s:?}: {e}")))
        };
        if field(0)?.eq_ignore_ascii_case("k_x") {
            continue;
        }
        let (kx, ky) = (parse_idx(field(0)?)?, parse_idx(field(1)?)?);
        if kx >= grid.n_points() || ky >= grid.n_points() || (grid.dims() == 1 && ky != 0) {
            return Err(FqeError::invalid(format!(
                "table index ({kx}, {ky}) outside the grid"
            )));
        }
        amps[grid.ravel([kx, ky, 0])] = C64::new(parse_f(field(2)?)?, parse_f(field(3)?)?);
    }
    Ok(amps)
}

/// ⟨ψ|P|ψ⟩ for the inversion `P` through the cell center.
pub fn parity_expectation(state: &BranchState) -> Result<f64> {
    if state.n_branches() != 1 {
        return Err(FqeError::invalid("parity needs a single-branch state"));
    }
    state.require_position()?;
    let grid = state.grid();
    let a = state.amplitudes();
    let num: C64 = (0..grid.len())
        .map(|i| a[i].conj() * a[grid.inverted(i)])
        .sum();
    Ok(num.re / state.norm_sqr())
}

/// Per-level weights `|⟨φ_ν|ψ⟩|²` plus the sums over degenerate groups.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenWeights {
    pub individual: Vec<f64>,
    pub grouped: Vec<f64>,
}

pub fn eigenweights(state: &BranchState, eig: &EigenSet) -> Result<EigenWeights> {
    state.grid().check_same(eig.grid())?;
    if state.n_branches() != 1 {
        return Err(FqeError::invalid("eigenweights need a single-branch state"));
    }
    state.require_position()?;
    let norm = state.norm_sqr();
    let individual: Vec<f64> = (0..eig.len())
        .map(|nu| inner(eig.vector(nu), state.amplitudes()).norm_sqr() / norm)
        .collect();
    let grouped = eig
        .degeneracy_groups()
        .iter()
        .map(|g| g.iter().map(|&i| individual[i]).sum())
        .collect();
    Ok(EigenWeights {
        individual,
        grouped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_grid_geometry() {
        let g = Grid::new(6, 2, 120.0).unwrap();
        assert_eq!(g.n_points(), 64);
        assert!((g.dx() - 1.875).abs() < 1e-15);
        assert!((g.cell_volume() - 3.515625).abs() < 1e-12);
        assert!((g.dp() - 0.052_359_877_559_829_89).abs() < 1e-15);
        assert!((g.dx() * g.n_points() as f64 - g.box_len()).abs() < 1e-12);
    }

    #[test]
    fn minimal_grid() {
        let g = Grid::new(1, 1, 2.0).unwrap();
        assert_eq!(g.n_points(), 2);
        assert_eq!(g.dx(), 1.0);
        assert!((g.dp() - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::new(0, 2, 1.0).is_err());
        assert!(Grid::new(13, 1, 1.0).is_err());
        assert!(Grid::new(3, 2, 0.0).is_err());
        assert!(Grid::new(3, 2, -1.0).is_err());
        assert!(Grid::new(3, 4, 1.0).is_err());
    }

    #[test]
    fn ravel_roundtrip_and_inversion() {
        let g = Grid::new(3, 2, 8.0).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.ravel(g.unravel(i)), i);
            assert_eq!(g.inverted(g.inverted(i)), i);
        }
        assert_eq!(g.ravel([3, 5, 0]), 5 * 8 + 3);
        assert_eq!(g.inverted(g.ravel([0, 4, 0])), g.ravel([0, 4, 0]));
        assert_eq!(g.inverted(g.ravel([1, 2, 0])), g.ravel([7, 6, 0]));
    }

    #[test]
    fn gaussian_is_normalized_and_peaked_at_center() {
        let g = Grid::new(6, 2, 120.0).unwrap();
        let s = init_state(
            &g,
            &InitialStateSpec::Gaussian {
                x_c: 0.0,
                width: 20.0,
            },
        )
        .unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let (imax, _) = s
            .amplitudes()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert_eq!(g.unravel(imax), [32, 32, 0]);
    }

    #[test]
    fn position_basis_has_single_unit_amplitude() {
        let g = Grid::new(4, 2, 10.0).unwrap();
        let s = init_state(&g, &InitialStateSpec::PositionBasis { k: vec![3, 5] }).unwrap();
        let nz: Vec<_> = s
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 0.0)
            .collect();
        assert_eq!(nz.len(), 1);
        assert_eq!(nz[0].0, g.ravel([3, 5, 0]));
        assert_eq!(nz[0].1.norm(), 1.0);
    }

    #[test]
    fn init_state_errors() {
        let g = Grid::new(4, 2, 10.0).unwrap();
        assert!(init_state(
            &g,
            &InitialStateSpec::Gaussian {
                x_c: 0.0,
                width: 0.0
            }
        )
        .is_err());
        assert!(init_state(&g, &InitialStateSpec::Exponential { decay: -1.0 }).is_err());
        assert!(init_state(
            &g,
            &InitialStateSpec::Gaussian {
                x_c: 7.0,
                width: 1.0
            }
        )
        .is_err());
        assert!(init_state(&g, &InitialStateSpec::PositionBasis { k: vec![16, 0] }).is_err());
    }

    #[test]
    fn custom_table_roundtrip_and_zero_norm() {
        let g = Grid::new(2, 2, 4.0).unwrap();
        let dir = std::env::temp_dir().join(format!("fqe-table-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("t.csv");
        std::fs::write(&p, "# comment\nk_x,k_y,re,im\n1,2,3.0,4.0\n").unwrap();
        let s = init_state(
            &g,
            &InitialStateSpec::CustomTable {
                path: p.display().to_string(),
            },
        )
        .unwrap();
        let a = s.amplitudes()[g.ravel([1, 2, 0])];
        assert!((a - C64::new(0.6, 0.8)).norm() < 1e-15);
        std::fs::write(&p, "1,2,0.0,0.0\n").unwrap();
        assert!(init_state(
            &g,
            &InitialStateSpec::CustomTable {
                path: p.display().to_string()
            }
        )
        .is_err());
    }

    #[test]
    fn parity_of_symmetric_orbitals() {
        let g = Grid::new(5, 2, 120.0).unwrap();
        let sp = init_state(
            &g,
            &InitialStateSpec::BondingS {
                a: 20.0,
                width: 11.0,
            },
        )
        .unwrap();
        let sm = init_state(
            &g,
            &InitialStateSpec::AntibondingS {
                a: 20.0,
                width: 11.0,
            },
        )
        .unwrap();
        assert!((parity_expectation(&sp).unwrap() - 1.0).abs() < 1e-10);
        assert!((parity_expectation(&sm).unwrap() + 1.0).abs() < 1e-10);
        let uniform =
            BranchState::from_amplitudes(g, vec![C64::new(1.0 / 32.0, 0.0); g.len()]).unwrap();
        assert!((parity_expectation(&uniform).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ancilla_gate_mixes_branches_unitarily() {
        let g = Grid::new(2, 1, 1.0).unwrap();
        let s = BranchState::from_amplitudes(g, vec![C64::new(0.5, 0.0); 4]).unwrap();
        let mut t = s.with_ancillae(2).unwrap();
        t.apply_ancilla_gate(0, hadamard::gate()).unwrap();
        assert!((t.branch_norm_sqr(0) - 0.5).abs() < 1e-15);
        assert!((t.branch_norm_sqr(1) - 0.5).abs() < 1e-15);
        t.apply_ancilla_gate(0, hadamard::gate()).unwrap();
        assert!((t.branch_norm_sqr(0) - 1.0).abs() < 1e-15);
        assert!(t.apply_ancilla_gate(1, hadamard::gate()).is_err());
    }
}
