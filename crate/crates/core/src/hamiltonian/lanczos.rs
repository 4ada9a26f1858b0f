//! Lowest eigenpairs of the Hamiltonian.
//!
//! Small problems go through a dense Hermitian eigensolver. Larger ones use
//! Lanczos with full reorthogonalization on the matrix-free operator.
//! Lanczos from a single start vector sees one direction per degenerate
//! eigenspace, so converged pairs are locked and the iteration restarts
//! orthogonally to them until a restart finds nothing new below the
//! `count`-th locked level.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Hamiltonian, HamiltonianSpec, DEGENERACY_TOL};
use crate::error::{FqeError, Result};
use crate::grid::{inner, norm_sqr, BranchState, Grid};
use crate::C64;

pub const MAX_EIGENPAIRS: usize = 32;
const DENSE_FALLBACK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    pub seed: u64,
    pub max_iter: usize,
    /// Relative residual bound, applied as `tol·max(1, |E|)`.
    pub tol: f64,
    /// Use the dense solver whenever the grid is at most this large.
    pub dense_fallback: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            seed: 0x5eed,
            max_iter: 500,
            tol: 1e-8,
            dense_fallback: DENSE_FALLBACK,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenSet {
    grid: Grid,
    eigenvalues: Vec<f64>,
    vectors: Vec<Vec<C64>>,
    residuals: Vec<f64>,
    groups: Vec<Vec<usize>>,
}

impl EigenSet {
    /// Builds a set from pairs, sorting them and computing residuals
    /// against `ham`.
    pub fn from_pairs(ham: &Hamiltonian, mut pairs: Vec<(f64, Vec<C64>)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let residuals = pairs
            .iter()
            .map(|(e, v)| {
                let hv = ham.apply_vec(v);
                norm_sqr(
                    &hv.iter()
                        .zip(v)
                        .map(|(h, x)| h - *e * x)
                        .collect::<Vec<_>>(),
                )
                .sqrt()
            })
            .collect();
        let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let groups = group_degenerate(&eigenvalues, DEGENERACY_TOL);
        EigenSet {
            grid: *ham.grid(),
            eigenvalues,
            vectors: pairs.into_iter().map(|p| p.1).collect(),
            residuals,
            groups,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }
    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
    pub fn vector(&self, i: usize) -> &[C64] {
        &self.vectors[i]
    }
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }
    pub fn degeneracy_groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn state(&self, i: usize) -> BranchState {
        BranchState::from_amplitudes(self.grid, self.vectors[i].clone())
            .expect("eigenvector matches its grid")
    }

    /// Largest `|⟨v_i|v_j⟩ − δ_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for j in 0..=i {
                let d = inner(&self.vectors[i], &self.vectors[j]) - if i == j { 1.0 } else { 0.0 };
                worst = worst.max(d.norm());
            }
        }
        worst
    }
}

pub fn group_degenerate(sorted: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, e) in sorted.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (e - sorted[*g.last().unwrap()]).abs() <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Lowest `count` eigenpairs of the Hamiltonian described by `spec`.
pub fn lowest_eigenpairs(
    spec: &HamiltonianSpec,
    count: usize,
    opts: &LanczosOptions,
) -> Result<EigenSet> {
    lowest_eigenpairs_of(&Hamiltonian::new(spec)?, count, opts)
}

pub fn lowest_eigenpairs_of(
    ham: &Hamiltonian,
    count: usize,
    opts: &LanczosOptions,
) -> Result<EigenSet> {
    let dim = ham.grid().len();
    if count == 0 || count > MAX_EIGENPAIRS || count > dim {
        return Err(FqeError::invalid(format!(
            "eigenpair count must be in 1..={}",
            MAX_EIGENPAIRS.min(dim)
        )));
    }
    let set = if dim <= opts.dense_fallback {
        dense_lowest(ham, count)?
    } else {
        lanczos(ham, count, opts)?
    };
    if let Some(r) = set
        .residuals
        .iter()
        .zip(&set.eigenvalues)
        .find(|(r, e)| **r > opts.tol * e.abs().max(1.0))
        .map(|p| *p.0)
    {
        return Err(FqeError::NotConverged {
            iterations: opts.max_iter,
            residual: r,
        });
    }
    Ok(set)
}

/// All eigenpairs of the dense matrix, ascending.
pub fn dense_eigen(h: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

fn dense_lowest(ham: &Hamiltonian, count: usize) -> Result<EigenSet> {
    let (values, vectors) = dense_eigen(ham.dense()?);
    let pairs = (0..count)
        .map(|c| (values[c], vectors.column(c).iter().copied().collect()))
        .collect();
    Ok(EigenSet::from_pairs(ham, pairs))
}

/// Removes the components of `w` along every vector in `basis` by
/// classical Gram–Schmidt, repeated once when the first pass cancelled most
/// of the norm.
fn orthogonalize(w: &mut [C64], basis: &[&[C64]]) {
    let mut before = norm_sqr(w);
    for _ in 0..2 {
        let coeffs: Vec<C64> = basis.par_iter().map(|v| inner(v, w)).collect();
        w.par_chunks_mut(256).enumerate().for_each(|(ci, chunk)| {
            let off = ci * 256;
            for (v, c) in basis.iter().zip(&coeffs) {
                for (j, x) in chunk.iter_mut().enumerate() {
                    *x -= c * v[off + j];
                }
            }
        });
        let after = norm_sqr(w);
        if after > 0.5 * before {
            break;
        }
        before = after;
    }
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let n = norm_sqr(&v).sqrt();
    v.into_iter().map(|x| x / n).collect()
}

struct Ritz {
    values: Vec<f64>,
    /// Eigenvectors of the tridiagonal matrix, one column per value.
    vectors: DMatrix<f64>,
}

fn tridiagonal_ritz(alpha: &[f64], beta: &[f64]) -> Ritz {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Ritz {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]),
    }
}

fn lanczos(ham: &Hamiltonian, count: usize, opts: &LanczosOptions) -> Result<EigenSet> {
    let dim = ham.grid().len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<(f64, Vec<C64>)> = Vec::new();
    let max_iter = opts.max_iter.min(dim - 1).max(1);
    let converged = |theta: f64, est: f64| est <= 0.1 * opts.tol * theta.abs().max(1.0);
    let mut total_iter = 0;

    for _restart in 0..4 * count + 4 {
        // Only states below the current count-th locked level are of interest.
        let threshold = if locked.len() >= count {
            locked[count - 1].0 - 1e-3 * DEGENERACY_TOL
        } else {
            f64::INFINITY
        };
        // The run is finished once the lowest Ritz values have converged up
        // to the first one at or above the threshold.
        let settled = |values: &[f64], est: &[f64]| {
            for c in 0..values.len() {
                if !converged(values[c], est[c]) {
                    return false;
                }
                if values[c] >= threshold {
                    return true;
                }
            }
            true
        };

        let mut basis: Vec<Vec<C64>> = Vec::new();
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut v = random_unit(dim, &mut rng);
        orthogonalize(
            &mut v,
            &locked.iter().map(|p| p.1.as_slice()).collect::<Vec<_>>(),
        );
        let n0 = norm_sqr(&v).sqrt();
        v.iter_mut().for_each(|x| *x /= n0);
        basis.push(v);

        // Ritz checks cost O(m³), so their spacing grows with m.
        let mut next_check = 10;
        let (ritz, est) = loop {
            let j = alpha.len();
            let mut w = ham.apply_vec(&basis[j]);
            alpha.push(inner(&basis[j], &w).re);
            {
                let refs: Vec<&[C64]> = locked
                    .iter()
                    .map(|p| p.1.as_slice())
                    .chain(basis.iter().map(|b| b.as_slice()))
                    .collect();
                orthogonalize(&mut w, &refs);
            }
            let b = norm_sqr(&w).sqrt();
            let m = j + 1;
            let exhausted = b <= 1e-12 * alpha[j].abs().max(1.0) || m >= max_iter;
            if m >= next_check || exhausted {
                next_check = m + (m / 4).max(10);
                let r = tridiagonal_ritz(&alpha, &beta);
                let want = count.min(m);
                let est: Vec<f64> = (0..want)
                    .map(|c| (b * r.vectors[(m - 1, c)]).abs())
                    .collect();
                if exhausted || settled(&r.values[..want], &est) {
                    break (r, est);
                }
            }
            beta.push(b);
            w.iter_mut().for_each(|x| *x /= b);
            basis.push(w);
        };
        let m = alpha.len();
        total_iter += m;

        let mut new = 0;
        for (c, e) in est.iter().enumerate() {
            let theta = ritz.values[c];
            if !converged(theta, *e) {
                if c == 0 {
                    return Err(FqeError::NotConverged {
                        iterations: total_iter,
                        residual: *e,
                    });
                }
                break;
            }
            if theta >= threshold {
                break;
            }
            let mut x = vec![C64::new(0.0, 0.0); dim];
            for (k, bv) in basis.iter().take(m).enumerate() {
                let y = ritz.vectors[(k, c)];
                x.iter_mut().zip(bv).for_each(|(xi, bi)| *xi += y * bi);
            }
            orthogonalize(
                &mut x,
                &locked.iter().map(|p| p.1.as_slice()).collect::<Vec<_>>(),
            );
            let nx = norm_sqr(&x).sqrt();
            x.iter_mut().for_each(|xi| *xi /= nx);
            locked.push((ham.expectation(&x), x));
            new += 1;
        }
        locked.sort_by(|a, b| a.0.total_cmp(&b.0));
        if new == 0 && locked.len() >= count {
            locked.truncate(count);
            return Ok(EigenSet::from_pairs(ham, locked));
        }
    }
    Err(FqeError::NotConverged {
        iterations: total_iter,
        residual: f64::NAN,
    })
}
