//! Analytic Fock–Darwin levels `E = (n₁+1)Ω − ℓω_c/2`,
//! `Ω = √(ω₀² + ω_c²/4)`, with `ℓ ∈ {−n₁, −n₁+2, …, n₁}`.

use crate::error::{FqeError, Result};
use crate::units::UNITS;

/// Lowest `count` levels in meV, ascending, degeneracies repeated.
pub fn fock_darwin_levels(
    omega0: f64,
    field_tesla: f64,
    mass_ratio: f64,
    count: usize,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(FqeError::invalid("count must be at least 1"));
    }
    if !(omega0 >= 0.0 && mass_ratio > 0.0) {
        return Err(FqeError::invalid("need ω₀ ≥ 0 and a positive mass ratio"));
    }
    let wc = UNITS.cyclotron_energy(field_tesla, mass_ratio);
    let omega = (omega0 * omega0 + 0.25 * wc * wc).sqrt();
    // Lowest level of shell n₁ is Ω + n₁(Ω − ω_c/2); stop once it clears the
    // current count-th level. With ω₀ = 0 every shell reaches ω_c/2, so the
    // first `count` shells already contain the answer.
    let rise = omega - 0.5 * wc;
    let mut levels = Vec::new();
    for n1 in 0usize.. {
        let floor = (n1 as f64 + 1.0) * omega - 0.5 * n1 as f64 * wc;
        if levels.len() >= count {
            let kth = levels[count - 1];
            if floor > kth || (rise <= 1e-12 * omega && n1 >= count) || n1 > 1_000_000 {
                break;
            }
        }
        for l in (0..=n1).map(|j| 2 * j as i64 - n1 as i64) {
            levels.push((n1 as f64 + 1.0) * omega - l as f64 * 0.5 * wc);
        }
        levels.sort_by(f64::total_cmp);
    }
    levels.truncate(count);
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_shells() {
        let l = fock_darwin_levels(4.0, 0.0, 0.067, 10).unwrap();
        let expect = [4.0, 8.0, 8.0, 12.0, 12.0, 12.0, 16.0, 16.0, 16.0, 16.0];
        for (a, b) in l.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn five_tesla_lowest_levels() {
        let l = fock_darwin_levels(4.0, 5.0, 0.067, 3).unwrap();
        let wc = UNITS.cyclotron_energy(5.0, 0.067);
        let om = (16.0 + wc * wc / 4.0).sqrt();
        assert!((l[0] - om).abs() < 1e-12);
        assert!((l[1] - (2.0 * om - wc / 2.0)).abs() < 1e-12);
        assert!((l[2] - (3.0 * om - wc)).abs() < 1e-12);
        assert!(
            (l[0] - 5.887).abs() < 2e-3
                && (l[1] - 7.455).abs() < 2e-3
                && (l[2] - 9.022).abs() < 2e-3
        );
    }

    #[test]
    fn landau_limit() {
        let wc = UNITS.cyclotron_energy(2.0, 0.067);
        let l = fock_darwin_levels(0.0, 2.0, 0.067, 5).unwrap();
        assert!(l.iter().all(|e| (e - 0.5 * wc).abs() < 1e-12));
    }

    #[test]
    fn brute_force_enumeration_agrees() {
        let (w0, b, m) = (3.0, 4.0, 0.1);
        let wc = UNITS.cyclotron_energy(b, m);
        let om = (w0 * w0 + wc * wc / 4.0).sqrt();
        let mut all = Vec::new();
        for n1 in 0..200i64 {
            for l in (-n1..=n1).step_by(2) {
                all.push((n1 + 1) as f64 * om - l as f64 * wc / 2.0);
            }
        }
        all.sort_by(f64::total_cmp);
        let l = fock_darwin_levels(w0, b, m, 25).unwrap();
        for (a, b) in l.iter().zip(&all) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(fock_darwin_levels(w0, b, m, 0).is_err());
    }
}
