//! In-place radix-2 FFT over batches of strided lines.
//!
//! A block of `n·s` values is viewed as `n` rows of `s` contiguous values;
//! the transform runs along the row index, so every butterfly is a
//! contiguous sweep over `s` values. `s = 1` is the ordinary 1-D case.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::grid::MAX_QUBITS_PER_AXIS;
use crate::C64;

struct Plan {
    /// `e^{−2πik/n}` for `k < n/2`.
    twiddles: Vec<C64>,
    /// Pairs `(i, rev(i))` with `i < rev(i)`.
    swaps: Vec<(usize, usize)>,
}

impl Plan {
    fn new(log2: u32) -> Self {
        let n = 1usize << log2;
        let twiddles = (0..n / 2)
            .map(|k| C64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        let swaps = (0..n)
            .filter_map(|i| {
                let r = if log2 == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - log2)
                };
                (i < r).then_some((i, r))
            })
            .collect();
        Plan { twiddles, swaps }
    }
}

const PLAN_SLOTS: usize = MAX_QUBITS_PER_AXIS as usize + 1;
static PLANS: [OnceLock<Plan>; PLAN_SLOTS] = [const { OnceLock::new() }; PLAN_SLOTS];

fn plan(n: usize) -> &'static Plan {
    assert!(n.is_power_of_two(), "FFT length {n} is not a power of two");
    let log2 = n.trailing_zeros();
    PLANS[log2 as usize].get_or_init(|| Plan::new(log2))
}

/// Sign of the exponent in `Σ_j e^{±2πijk/n} x_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `e^{−2πijk/n}`.
    Forward,
    /// `e^{+2πijk/n}`.
    Backward,
}

/// Unnormalized transform of `block` (`n` rows of `stride` values).
pub fn transform_rows(block: &mut [C64], n: usize, stride: usize, dir: Direction) {
    debug_assert_eq!(block.len(), n * stride);
    if n == 1 {
        return;
    }
    let plan = plan(n);
    for &(i, r) in &plan.swaps {
        let (lo, hi) = block.split_at_mut(r * stride);
        lo[i * stride..(i + 1) * stride].swap_with_slice(&mut hi[..stride]);
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let mut w = plan.twiddles[k * step];
                if dir == Direction::Backward {
                    w = w.conj();
                }
                let a = (start + k) * stride;
                let b = (start + k + half) * stride;
                let (lo, hi) = block.split_at_mut(b);
                let ra = &mut lo[a..a + stride];
                let rb = &mut hi[..stride];
                for (xa, xb) in ra.iter_mut().zip(rb.iter_mut()) {
                    let t = w * *xb;
                    *xb = *xa - t;
                    *xa += t;
                }
            }
        }
        len <<= 1;
    }
}

/// Reference `O(n²)` DFT used as a test oracle.
pub fn naive_dft(x: &[C64], dir: Direction) -> Vec<C64> {
    let n = x.len();
    let sign = if dir == Direction::Forward { -1.0 } else { 1.0 };
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, v)| {
                    v * C64::from_polar(1.0, sign * 2.0 * PI * ((j * k) % n) as f64 / n as f64)
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for log2 in 0..=9 {
            let n = 1 << log2;
            let x = random(n, log2 as u64);
            for dir in [Direction::Forward, Direction::Backward] {
                let mut y = x.clone();
                transform_rows(&mut y, n, 1, dir);
                let z = naive_dft(&x, dir);
                let err = y
                    .iter()
                    .zip(&z)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                assert!(err < 1e-11 * n as f64, "n={n} err={err}");
            }
        }
    }

    #[test]
    fn strided_rows_transform_each_column() {
        let (n, s) = (8, 3);
        let x = random(n * s, 7);
        let mut y = x.clone();
        transform_rows(&mut y, n, s, Direction::Forward);
        for c in 0..s {
            let col: Vec<C64> = (0..n).map(|r| x[r * s + c]).collect();
            let z = naive_dft(&col, Direction::Forward);
            for r in 0..n {
                assert!((y[r * s + c] - z[r]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn roundtrip_scales_by_n() {
        let x = random(64, 3);
        let mut y = x.clone();
        transform_rows(&mut y, 64, 1, Direction::Forward);
        transform_rows(&mut y, 64, 1, Direction::Backward);
        for (a, b) in x.iter().zip(&y) {
            assert!((a * 64.0 - b).norm() < 1e-12);
        }
    }
}
