//! Derivative distributions `g_{r₀…}(x) = f(x)·(1/Πr_i!)·∂^{Σr} f*(x)` of an
//! encoded function, recovered from shift-interferometer probabilities.
//!
//! For displacement `h = dΔx` the symmetrized products
//! `G^{(r)}(x, h) = [f(x)f*(x+h) + (−1)^r f(x)f*(x−h)]/2` are linear in the
//! distributions of matching parity, up to `O(h^{r+2})`. Collecting one
//! displacement per unknown gives a small real system solved per grid point.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{interferometer_probabilities, Estimator, MeasurementModel};
use crate::error::{FqeError, Result};
use crate::grid::{BranchState, Grid};
use crate::C64;

/// `|D(ℓ)| = (ℓ+m−1)!/(ℓ!(m−1)!)`, the number of multi-indices of order `ℓ`
/// in `m` variables.
pub fn combinatorics(l: u64, m: u64) -> u64 {
    assert!(m >= 1, "need at least one variable");
    // C(l+m−1, m−1) built incrementally so every partial product is integral
    (1..m).fold(1u64, |acc, j| acc * (l + j) / j)
}

/// `N^{(r)}`: multi-indices of order `≤ r` with the parity of `r`.
pub fn unknown_count(r: u64, m: u64) -> u64 {
    (0..=r)
        .filter(|l| l % 2 == r % 2)
        .map(|l| combinatorics(l, m))
        .sum()
}

/// Multi-indices of total order `l` in `m` variables, first component
/// descending.
fn compositions(l: usize, m: usize) -> Vec<Vec<usize>> {
    if m == 1 {
        return vec![vec![l]];
    }
    (0..=l)
        .rev()
        .flat_map(|r0| {
            compositions(l - r0, m - 1)
                .into_iter()
                .map(move |mut rest| {
                    rest.insert(0, r0);
                    rest
                })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeProblem {
    pub m_vars: usize,
    pub order_r: usize,
    /// Integer displacements, one per unknown.
    pub displacements: Vec<Vec<i64>>,
}

impl DerivativeProblem {
    pub fn new(m_vars: usize, order_r: usize, displacements: Vec<Vec<i64>>) -> Result<Self> {
        if m_vars == 0 {
            return Err(FqeError::invalid("need at least one variable"));
        }
        let need = unknown_count(order_r as u64, m_vars as u64) as usize;
        if displacements.len() != need {
            return Err(FqeError::invalid(format!(
                "order {order_r} in {m_vars} variables has {need} unknowns, got {} displacements",
                displacements.len()
            )));
        }
        if let Some(bad) = displacements
            .iter()
            .find(|d| d.len() != m_vars || d.iter().all(|&c| c == 0))
        {
            return Err(FqeError::invalid(format!(
                "displacement {bad:?} must be a nonzero {m_vars}-vector"
            )));
        }
        Ok(DerivativeProblem {
            m_vars,
            order_r,
            displacements,
        })
    }

    /// Unit displacements along each axis; valid for `r = 1`.
    pub fn first_order_axes(m_vars: usize) -> Result<Self> {
        let disp = (0..m_vars)
            .map(|a| (0..m_vars).map(|b| i64::from(a == b)).collect())
            .collect();
        DerivativeProblem::new(m_vars, 1, disp)
    }

    /// Unknown multi-indices in column order: ascending order, then first
    /// component descending.
    pub fn unknowns(&self) -> Vec<Vec<usize>> {
        (0..=self.order_r)
            .filter(|l| l % 2 == self.order_r % 2)
            .flat_map(|l| compositions(l, self.m_vars))
            .collect()
    }

    /// Rows `h_d`, columns `Π_i h_{d,i}^{r_i}` with `h = dΔx`.
    pub fn system_matrix(&self, dx: f64) -> DMatrix<f64> {
        let unknowns = self.unknowns();
        DMatrix::from_fn(self.displacements.len(), unknowns.len(), |row, col| {
            self.displacements[row]
                .iter()
                .zip(&unknowns[col])
                .map(|(&d, &r)| (d as f64 * dx).powi(r as i32))
                .product()
        })
    }

    fn inverse(&self, dx: f64) -> Result<DMatrix<f64>> {
        let m = self.system_matrix(dx);
        let sv = m.singular_values();
        let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| {
            (lo.min(s), hi.max(s))
        });
        if !(lo > 1e-13 * hi) {
            return Err(FqeError::Singular(format!(
                "displacement matrix has singular values {lo:.3e}..{hi:.3e}"
            )));
        }
        m.try_inverse()
            .ok_or_else(|| FqeError::Singular("displacement matrix".into()))
    }
}

/// Supplies the probabilities the reconstruction consumes.
pub trait ProbabilitySource {
    fn grid(&self) -> &Grid;
    /// `P_x = |f(x)|²`.
    fn marginal(&mut self) -> Result<Vec<f64>>;
    /// `[P_{x0}…, P_{x1}…]` of the circuit `C^{(φ)}[d]`.
    fn interferometer(&mut self, d: &[i64], phi: f64) -> Result<Vec<f64>>;
}

/// Simulated circuits on an encoded function; axis `i` of the grid holds
/// variable `x_i`.
pub struct CircuitSampler {
    amps: Vec<C64>,
    grid: Grid,
    est: Estimator,
}

impl CircuitSampler {
    pub fn new(state: &BranchState, model: MeasurementModel) -> Result<Self> {
        if state.n_branches() != 1 {
            return Err(FqeError::invalid(
                "encoded function must be a single-branch state",
            ));
        }
        state.require_position()?;
        Ok(CircuitSampler {
            amps: state.amplitudes().to_vec(),
            grid: *state.grid(),
            est: Estimator::new(model)?,
        })
    }
}

impl ProbabilitySource for CircuitSampler {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn marginal(&mut self) -> Result<Vec<f64>> {
        self.est
            .estimate(self.amps.iter().map(|a| a.norm_sqr()).collect())
    }

    fn interferometer(&mut self, d: &[i64], phi: f64) -> Result<Vec<f64>> {
        let shifts: Vec<(usize, i64)> = d
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, c)| c != 0)
            .collect();
        self.est.estimate(interferometer_probabilities(
            &self.amps, &self.grid, &shifts, phi,
        ))
    }
}

#[derive(Debug, Clone)]
pub struct DerivativeDistributions {
    pub unknowns: Vec<Vec<usize>>,
    /// One field per unknown, on the source grid.
    pub values: Vec<Vec<C64>>,
}

impl DerivativeDistributions {
    pub fn get(&self, index: &[usize]) -> Result<&[C64]> {
        self.unknowns
            .iter()
            .position(|u| u == index)
            .map(|i| self.values[i].as_slice())
            .ok_or_else(|| {
                FqeError::invalid(format!("{index:?} is not an unknown of this order/parity"))
            })
    }
}

fn displaced_all(grid: &Grid, idx: usize, d: &[i64], sign: i64) -> usize {
    d.iter()
        .enumerate()
        .fold(idx, |i, (axis, &c)| grid.displaced(i, axis, sign * c))
}

/// `G^{(r)}(x, dΔx)` at every grid point from the `φ = 0, π/2` runs at `±d`
/// and the marginal.
pub fn symmetrized_products<S: ProbabilitySource + ?Sized>(
    src: &mut S,
    d: &[i64],
    order_r: usize,
    p: &[f64],
) -> Result<Vec<C64>> {
    let grid = *src.grid();
    let m = grid.len();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut run = |dd: &[i64]| -> Result<Vec<C64>> {
        let re = src.interferometer(dd, 0.0)?;
        let im = src.interferometer(dd, half_pi)?;
        Ok((0..m).map(|k| C64::new(re[k], im[k])).collect())
    };
    let neg: Vec<i64> = d.iter().map(|c| -c).collect();
    let plus = run(d)?;
    let minus = run(&neg)?;
    let w = C64::new(0.25, 0.25);
    Ok((0..m)
        .map(|k| {
            let fwd = p[displaced_all(&grid, k, d, 1)];
            let bwd = p[displaced_all(&grid, k, d, -1)];
            if order_r.is_multiple_of(2) {
                minus[k] + plus[k] - w * (2.0 * p[k] + fwd + bwd)
            } else {
                minus[k] - plus[k] - w * (fwd - bwd)
            }
        })
        .collect())
}

/// Solves the per-point linear systems for all distributions of the
/// problem's order and parity.
pub fn reconstruct_derivatives<S: ProbabilitySource + ?Sized>(
    problem: &DerivativeProblem,
    src: &mut S,
) -> Result<DerivativeDistributions> {
    let grid = *src.grid();
    if grid.dims() != problem.m_vars {
        return Err(FqeError::invalid(format!(
            "problem has {} variables but the register has {} axes",
            problem.m_vars,
            grid.dims()
        )));
    }
    let half = (grid.n_points() / 2) as i64;
    if problem
        .displacements
        .iter()
        .flatten()
        .any(|c| c.abs() >= half)
    {
        return Err(FqeError::invalid(
            "displacement components must stay below N/2",
        ));
    }
    let inv = problem.inverse(grid.dx())?;
    let p = src.marginal()?;
    let gs = problem
        .displacements
        .iter()
        .map(|d| symmetrized_products(src, d, problem.order_r, &p))
        .collect::<Result<Vec<_>>>()?;
    let n_u = inv.nrows();
    let m = grid.len();
    let per_point: Vec<Vec<C64>> = (0..m)
        .into_par_iter()
        .map(|k| {
            (0..n_u)
                .map(|u| (0..gs.len()).map(|d| gs[d][k] * inv[(u, d)]).sum())
                .collect()
        })
        .collect();
    let values = (0..n_u)
        .map(|u| per_point.iter().map(|row| row[u]).collect())
        .collect();
    Ok(DerivativeDistributions {
        unknowns: problem.unknowns(),
        values,
    })
}
