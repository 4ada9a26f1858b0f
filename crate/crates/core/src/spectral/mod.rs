//! Fourier machinery: the centered QFT along one axis and the cyclic shift.
//!
//! The centered transform labels momentum basis states by `s ∈ [0, N)` with
//! physical momentum `(s − N/2)·Δp`. In terms of the DFT it is the ordinary
//! transform composed with an alternating sign `(−1)^k` on the position
//! index, which moves the zero-momentum component to label `N/2`.

pub mod fft;

use rayon::prelude::*;

use crate::error::{FqeError, Result};
use crate::grid::{BranchState, Grid, Repr};
use crate::C64;
pub use fft::Direction;

/// Axis of one particle register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisSelector {
    pub axis: usize,
    pub particle: usize,
}

impl AxisSelector {
    pub fn new(axis: usize) -> Self {
        AxisSelector { axis, particle: 0 }
    }

    /// Flat-index stride of this axis in a register of `particles` copies
    /// of `grid`, particle 0 varying fastest.
    pub fn stride(&self, grid: &Grid) -> usize {
        grid.stride(self.particle * grid.dims() + self.axis)
    }

    fn check(&self, grid: &Grid, particles: usize) -> Result<()> {
        if self.axis >= grid.dims() || self.particle >= particles {
            return Err(FqeError::invalid(format!(
                "{self:?} is not an axis of this register"
            )));
        }
        Ok(())
    }
}

impl From<usize> for AxisSelector {
    fn from(axis: usize) -> Self {
        AxisSelector::new(axis)
    }
}

/// Which way the centered transform goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqftDirection {
    /// Position amplitudes to momentum amplitudes, `⟨p_s|ψ⟩`.
    ToMomentum,
    /// The inverse map. Sends momentum label `s` to the state
    /// `N^{−1/2} Σ_k e^{i p_s x_k} |k⟩`.
    ToPosition,
}

/// Applies `f` to every `n·stride` block of `data` in parallel.
fn for_blocks(data: &mut [C64], block: usize, f: impl Fn(&mut [C64]) + Sync) {
    if data.len() > block {
        data.par_chunks_mut(block).for_each(&f);
    } else {
        f(data);
    }
}

fn alternate_sign(block: &mut [C64], n: usize, stride: usize) {
    for row in (1..n).step_by(2) {
        block[row * stride..(row + 1) * stride]
            .iter_mut()
            .for_each(|a| *a = -*a);
    }
}

/// Centered transform of raw amplitudes along the axis with the given
/// stride. `data.len()` must be a multiple of `n·stride`.
pub fn cqft_raw(data: &mut [C64], n: usize, stride: usize, dir: CqftDirection) {
    let scale = 1.0 / (n as f64).sqrt();
    for_blocks(data, n * stride, |block| match dir {
        CqftDirection::ToMomentum => {
            alternate_sign(block, n, stride);
            fft::transform_rows(block, n, stride, Direction::Forward);
            block.iter_mut().for_each(|a| *a *= scale);
        }
        CqftDirection::ToPosition => {
            fft::transform_rows(block, n, stride, Direction::Backward);
            block.iter_mut().for_each(|a| *a *= scale);
            alternate_sign(block, n, stride);
        }
    });
}

/// Cyclic relabeling `|j⟩ → |j + d mod N⟩` of raw amplitudes, computed as
/// normalized DFT, diagonal phase `e^{−2πidk/N}`, inverse DFT.
pub fn shift_raw(data: &mut [C64], n: usize, stride: usize, d: i64) {
    let d = d.rem_euclid(n as i64) as usize;
    if d == 0 {
        return;
    }
    let phases: Vec<C64> = (0..n)
        .map(|k| {
            C64::from_polar(
                1.0 / n as f64,
                -2.0 * std::f64::consts::PI * ((d * k) % n) as f64 / n as f64,
            )
        })
        .collect();
    for_blocks(data, n * stride, |block| {
        fft::transform_rows(block, n, stride, Direction::Forward);
        for (k, ph) in phases.iter().enumerate() {
            block[k * stride..(k + 1) * stride]
                .iter_mut()
                .for_each(|a| *a *= ph);
        }
        fft::transform_rows(block, n, stride, Direction::Backward);
    });
}

/// Centered QFT of every branch along `axis`, updating the representation
/// tag. The axis must currently be in the source representation.
pub fn cqft_axis(
    state: &mut BranchState,
    axis: impl Into<AxisSelector>,
    dir: CqftDirection,
) -> Result<()> {
    let sel = axis.into();
    let grid = *state.grid();
    sel.check(&grid, 1)?;
    let (from, to) = match dir {
        CqftDirection::ToMomentum => (Repr::Position, Repr::Momentum),
        CqftDirection::ToPosition => (Repr::Momentum, Repr::Position),
    };
    state.require(sel.axis, from)?;
    cqft_raw(
        state.amplitudes_mut(),
        grid.n_points(),
        sel.stride(&grid),
        dir,
    );
    state.set_repr(sel.axis, to);
    Ok(())
}

/// Displaces every branch by `d` grid points along `axis`.
pub fn shift_unitary(state: &mut BranchState, axis: impl Into<AxisSelector>, d: i64) -> Result<()> {
    let sel = axis.into();
    let grid = *state.grid();
    sel.check(&grid, 1)?;
    state.require(sel.axis, Repr::Position)?;
    shift_raw(
        state.amplitudes_mut(),
        grid.n_points(),
        sel.stride(&grid),
        d,
    );
    Ok(())
}

/// Spectral derivative `∂f/∂x_axis` of a periodic field sampled on `grid`.
/// The unpaired Nyquist component is dropped so that real fields have real
/// derivatives.
pub fn spectral_derivative(values: &[C64], grid: &Grid, axis: usize) -> Vec<C64> {
    let n = grid.n_points();
    let stride = grid.stride(axis);
    let mut out = values.to_vec();
    cqft_raw(&mut out, n, stride, CqftDirection::ToMomentum);
    let factors: Vec<C64> = (0..n)
        .map(|s| {
            if s == 0 {
                C64::new(0.0, 0.0)
            } else {
                C64::new(0.0, grid.momentum(s))
            }
        })
        .collect();
    for_blocks(&mut out, n * stride, |block| {
        for (s, f) in factors.iter().enumerate() {
            block[s * stride..(s + 1) * stride]
                .iter_mut()
                .for_each(|a| *a *= f);
        }
    });
    cqft_raw(&mut out, n, stride, CqftDirection::ToPosition);
    out
}

/// Amplitudes of the momentum state of label `s` along a single axis,
/// `N^{−1/2} e^{i p_s x_k}`, summed directly from the definition.
pub fn momentum_eigenstate_1d(grid: &Grid, s: usize) -> Vec<C64> {
    let n = grid.n_points();
    (0..n)
        .map(|k| C64::from_polar(1.0 / (n as f64).sqrt(), grid.momentum(s) * grid.coord(k)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::norm_sqr;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(grid: Grid, seed: u64) -> BranchState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.len())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut s = BranchState::from_amplitudes(grid, v).unwrap();
        s.normalize().unwrap();
        s
    }

    #[test]
    fn roundtrip_is_identity() {
        let g = Grid::new(4, 2, 7.0).unwrap();
        let s0 = random_state(g, 1);
        let mut s = s0.clone();
        for axis in 0..2 {
            cqft_axis(&mut s, axis, CqftDirection::ToMomentum).unwrap();
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        for axis in 0..2 {
            cqft_axis(&mut s, axis, CqftDirection::ToPosition).unwrap();
        }
        let err = s
            .amplitudes()
            .iter()
            .zip(s0.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn position_eigenstate_spreads_uniformly() {
        let g = Grid::new(5, 1, 3.0).unwrap();
        let mut s = BranchState::position_basis(g, [11, 0, 0]);
        cqft_axis(&mut s, 0, CqftDirection::ToMomentum).unwrap();
        for a in s.amplitudes() {
            assert!((a.norm() - 1.0 / (32f64).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn momentum_state_from_definition_maps_to_basis_label() {
        let g = Grid::new(3, 1, 5.0).unwrap();
        for s in 0..8 {
            let mut st = BranchState::from_amplitudes(g, momentum_eigenstate_1d(&g, s)).unwrap();
            st.set_repr(0, Repr::Position);
            cqft_axis(&mut st, 0, CqftDirection::ToMomentum).unwrap();
            for (j, a) in st.amplitudes().iter().enumerate() {
                let expect = if j == s { 1.0 } else { 0.0 };
                assert!(
                    (a - C64::new(expect, 0.0)).norm() < 1e-12,
                    "s={s} j={j} a={a}"
                );
            }
        }
    }

    #[test]
    fn representation_tags_are_enforced() {
        let g = Grid::new(2, 2, 1.0).unwrap();
        let mut s = random_state(g, 2);
        assert!(cqft_axis(&mut s, 0, CqftDirection::ToPosition).is_err());
        cqft_axis(&mut s, 1, CqftDirection::ToMomentum).unwrap();
        assert!(shift_unitary(&mut s, 1, 1).is_err());
        assert!(cqft_axis(&mut s, 2, CqftDirection::ToMomentum).is_err());
    }

    #[test]
    fn shift_basis_example() {
        let g = Grid::new(4, 1, 1.0).unwrap();
        let mut s = BranchState::position_basis(g, [5, 0, 0]);
        shift_unitary(&mut s, 0, 3).unwrap();
        assert!((s.amplitudes()[8] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(norm_sqr(s.amplitudes()) - 1.0 < 1e-12);
    }

    #[test]
    fn shift_equals_index_rotation_exhaustively() {
        let g = Grid::new(4, 2, 1.0).unwrap();
        let s0 = random_state(g, 3);
        for axis in 0..2 {
            for d in -16i64..=16 {
                let mut s = s0.clone();
                shift_unitary(&mut s, axis, d).unwrap();
                for i in 0..g.len() {
                    let src = g.displaced(i, axis, -d);
                    assert!((s.amplitudes()[i] - s0.amplitudes()[src]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn multi_branch_transforms_each_branch() {
        let g = Grid::new(3, 2, 1.0).unwrap();
        let a = random_state(g, 4);
        let mut two = a.with_ancillae(2).unwrap();
        two.branch_mut(1).copy_from_slice(a.amplitudes());
        cqft_axis(&mut two, 1, CqftDirection::ToMomentum).unwrap();
        let mut single = a.clone();
        cqft_axis(&mut single, 1, CqftDirection::ToMomentum).unwrap();
        for b in 0..2 {
            for (x, y) in two.branch(b).iter().zip(single.amplitudes()) {
                assert!((x - y).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn kinetic_conjugation_identity() {
        let g = Grid::new(4, 1, 10.0).unwrap();
        let dt = 0.37;
        for s in [0usize, 3, 8, 15] {
            let mut st = BranchState::from_amplitudes(g, momentum_eigenstate_1d(&g, s)).unwrap();
            let orig = st.clone();
            cqft_axis(&mut st, 0, CqftDirection::ToMomentum).unwrap();
            for (j, a) in st.amplitudes_mut().iter_mut().enumerate() {
                *a *= C64::from_polar(1.0, -0.5 * g.momentum(j).powi(2) * dt);
            }
            cqft_axis(&mut st, 0, CqftDirection::ToPosition).unwrap();
            let ph = C64::from_polar(1.0, -0.5 * g.momentum(s).powi(2) * dt);
            for (x, y) in st.amplitudes().iter().zip(orig.amplitudes()) {
                assert!((x - ph * y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn spectral_derivative_of_sine() {
        let g = Grid::new(5, 2, 2.0 * std::f64::consts::PI).unwrap();
        let f: Vec<C64> = (0..g.len())
            .map(|i| C64::new((3.0 * g.coord(g.unravel(i)[1])).sin(), 0.0))
            .collect();
        let df = spectral_derivative(&f, &g, 1);
        for i in 0..g.len() {
            let y = g.coord(g.unravel(i)[1]);
            assert!((df[i] - C64::new(3.0 * (3.0 * y).cos(), 0.0)).norm() < 1e-11);
        }
        let dx = spectral_derivative(&f, &g, 0);
        assert!(dx.iter().all(|v| v.norm() < 1e-12));
    }

    proptest! {
        #[test]
        fn cqft_preserves_norm(seed in 0u64..1000, n in 1u32..7, axis in 0usize..2) {
            let g = Grid::new(n, 2, 3.0).unwrap();
            let mut s = random_state(g, seed);
            cqft_axis(&mut s, axis, CqftDirection::ToMomentum).unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
