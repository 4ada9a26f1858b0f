//! Matrix-free `e^{−iHt}ψ` by short Krylov recurrences.
//!
//! The interval is cut into substeps with `r·h ≤ 12`, where `r` is the
//! half-width of a spectral enclosure, so a 40-dimensional Krylov space is
//! converged to rounding. Each substep runs Lanczos on the shifted operator
//! `H − c` and exponentiates the small tridiagonal matrix exactly.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{FqeError, Result};
use crate::grid::{inner, norm_sqr, BranchState};
use crate::hamiltonian::{Hamiltonian, HamiltonianSpec};
use crate::C64;

const KRYLOV_DIM: usize = 40;
const MAX_PHASE_PER_STEP: f64 = 12.0;

#[derive(Debug, Clone)]
pub struct KrylovPropagator {
    ham: Hamiltonian,
    center: f64,
    radius: f64,
}

impl KrylovPropagator {
    pub fn new(spec: &HamiltonianSpec) -> Result<Self> {
        let ham = Hamiltonian::new(spec)?;
        let grid = spec.grid;
        let (vmin, vmax) = ham
            .potential()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let p_max = (grid.n_points() / 2) as f64 * grid.dp();
        let a_max = if spec.has_field() {
            (0..grid.n_points())
                .map(|k| spec.gauge.vector_potential(grid.coord(k)).abs())
                .fold(0.0, f64::max)
        } else {
            0.0
        };
        let kin_max: f64 = (0..grid.dims())
            .map(|axis| {
                let a = if axis == 1 { a_max } else { 0.0 };
                0.5 * spec.inverse_mass() * (p_max + a).powi(2)
            })
            .sum();
        let (lo, hi) = (vmin, vmax + kin_max);
        Ok(KrylovPropagator {
            ham,
            center: 0.5 * (lo + hi),
            radius: 0.5 * (hi - lo).max(1e-12),
        })
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.ham
    }

    /// `e^{−iHt}v` for one amplitude vector.
    pub fn apply(&self, v: &[C64], t: f64) -> Vec<C64> {
        if t == 0.0 {
            return v.to_vec();
        }
        let pieces = (self.radius * t.abs() / MAX_PHASE_PER_STEP).ceil().max(1.0) as usize;
        let h = t / pieces as f64;
        let mut out = v.to_vec();
        for _ in 0..pieces {
            out = self.substep(&out, h);
        }
        // global phase of the shift
        let g = C64::from_polar(1.0, -self.center * t);
        out.iter_mut().for_each(|a| *a *= g);
        out
    }

    fn substep(&self, v: &[C64], h: f64) -> Vec<C64> {
        let beta0 = norm_sqr(v).sqrt();
        if beta0 == 0.0 {
            return v.to_vec();
        }
        let mut basis: Vec<Vec<C64>> = vec![v.iter().map(|a| a / beta0).collect()];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let mut w = vec![C64::new(0.0, 0.0); v.len()];
        for j in 0..KRYLOV_DIM {
            self.ham.apply_into(&basis[j], &mut w);
            let q = &basis[j];
            w.iter_mut().zip(q).for_each(|(x, b)| *x -= self.center * b);
            alpha.push(inner(q, &w).re);
            for _ in 0..2 {
                for b in &basis {
                    let c = inner(b, &w);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let bn = norm_sqr(&w).sqrt();
            if j + 1 == KRYLOV_DIM || bn <= 1e-13 * beta0.max(alpha[j].abs()) {
                break;
            }
            beta.push(bn);
            basis.push(w.iter().map(|x| x / bn).collect());
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| match i.abs_diff(j) {
            0 => alpha[i],
            1 => beta[i.min(j)],
            _ => 0.0,
        });
        let eig = SymmetricEigen::new(t);
        // y = exp(−ihT)e₁
        let coeffs: Vec<C64> = (0..m)
            .map(|r| {
                (0..m)
                    .map(|k| {
                        let u = &eig.eigenvectors;
                        C64::from_polar(u[(r, k)] * u[(0, k)], -h * eig.eigenvalues[k])
                    })
                    .sum::<C64>()
                    * beta0
            })
            .collect();
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for (b, c) in basis.iter().zip(&coeffs) {
            out.iter_mut().zip(b).for_each(|(o, x)| *o += c * x);
        }
        out
    }

    pub fn evolve(&self, state: &mut BranchState, dts: &[f64]) -> Result<()> {
        if !state.grid().same_shape(self.ham.grid()) {
            return Err(FqeError::GridMismatch(
                "Krylov propagator built for another grid".into(),
            ));
        }
        state.require_position()?;
        for (b, &dt) in dts.iter().enumerate() {
            if dt != 0.0 {
                let out = self.apply(state.branch(b), dt);
                state.branch_mut(b).copy_from_slice(&out);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::ExactPropagator;
    use crate::grid::Grid;
    use crate::hamiltonian::tests::{dw_spec, random_vec};
    use crate::hamiltonian::{GaugeSpec, PotentialSpec};

    #[test]
    fn matches_dense_exponential() {
        let g = Grid::new(4, 2, 60.0).unwrap();
        let specs = [
            HamiltonianSpec::new(
                g,
                0.067,
                GaugeSpec::new(5.0, 30.0),
                PotentialSpec::Harmonic { omega0: 4.0 },
            )
            .unwrap(),
            dw_spec(4, 3.0),
        ];
        for spec in specs {
            let kr = KrylovPropagator::new(&spec).unwrap();
            let ex = ExactPropagator::new(&spec).unwrap();
            let v = random_vec(256, 7);
            for t in [0.003, 0.2, -1.3] {
                let a = kr.apply(&v, t);
                let b = ex.apply_fn(&v, |e| C64::from_polar(1.0, -e * t));
                let err = a
                    .iter()
                    .zip(&b)
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(err < 1e-11, "t={t}: {err}");
                assert!((norm_sqr(&a) - 1.0).abs() < 1e-12);
            }
        }
    }
}
