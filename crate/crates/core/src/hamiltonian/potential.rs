//! Static potentials on the grid. Coordinates are measured from the cell
//! center, `X = x − L/2`.

use serde::{Deserialize, Serialize};

use crate::error::{FqeError, Result};
use crate::grid::Grid;
use crate::units::UNITS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    /// `m ω₀² R²/2`.
    Harmonic {
        omega0: f64,
    },
    /// Two Gaussian dots at `X = ±a` and an anisotropic Gaussian barrier at
    /// the center. Two-dimensional only.
    DoubleWell {
        v0: f64,
        vp: f64,
        a: f64,
        delta: f64,
        delta_x: f64,
        delta_y: f64,
    },
    /// Explicit values in flat grid order.
    Table {
        values: Vec<f64>,
    },
}

impl PotentialSpec {
    /// Potential in meV at every grid point for a particle of mass
    /// `mass_ratio`·mₑ.
    pub fn evaluate(&self, grid: &Grid, mass_ratio: f64) -> Result<Vec<f64>> {
        let centered = |i: usize| {
            let k = grid.unravel(i);
            let mut r = [0.0; 3];
            for a in 0..grid.dims() {
                r[a] = grid.centered(k[a]);
            }
            r
        };
        let v: Vec<f64> = match self {
            PotentialSpec::Zero => vec![0.0; grid.len()],
            PotentialSpec::Harmonic { omega0 } => {
                let c = omega0 * omega0 * mass_ratio / (4.0 * UNITS.kinetic_coeff);
                (0..grid.len())
                    .map(|i| c * centered(i).iter().map(|x| x * x).sum::<f64>())
                    .collect()
            }
            PotentialSpec::DoubleWell {
                v0,
                vp,
                a,
                delta,
                delta_x,
                delta_y,
            } => {
                if grid.dims() != 2 {
                    return Err(FqeError::invalid(
                        "the double-well potential is two-dimensional",
                    ));
                }
                if *delta <= 0.0 || *delta_x <= 0.0 || *delta_y <= 0.0 {
                    return Err(FqeError::invalid("double-well widths must be positive"));
                }
                let (d2, dx2, dy2) = (delta * delta, delta_x * delta_x, delta_y * delta_y);
                (0..grid.len())
                    .map(|i| {
                        let [x, y, _] = centered(i);
                        v0 * (-((x + a).powi(2) + y * y) / d2).exp()
                            + v0 * (-((x - a).powi(2) + y * y) / d2).exp()
                            + vp * (-x * x / dx2 - y * y / dy2).exp()
                    })
                    .collect()
            }
            PotentialSpec::Table { values } => {
                if values.len() != grid.len() {
                    return Err(FqeError::GridMismatch(format!(
                        "potential table has {} values, grid has {} points",
                        values.len(),
                        grid.len()
                    )));
                }
                values.clone()
            }
        };
        if let Some(bad) = v.iter().position(|x| !x.is_finite()) {
            return Err(FqeError::invalid(format!(
                "potential is not finite at grid index {bad}"
            )));
        }
        Ok(v)
    }

    /// True if the potential is unchanged by inversion through the cell
    /// center (by construction, not by inspection of table values).
    pub fn is_inversion_symmetric(&self) -> bool {
        !matches!(self, PotentialSpec::Table { .. })
    }
}
