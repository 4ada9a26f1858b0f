//! Physical constants in the working unit system (ħ = 1, meV, nm).

/// CODATA 2018 exact/recommended SI values.
const HBAR_SI: f64 = 1.054_571_817e-34;
const ELECTRON_MASS_SI: f64 = 9.109_383_701_5e-31;
const ELEMENTARY_CHARGE_SI: f64 = 1.602_176_634e-19;

const JOULE_PER_MEV: f64 = ELEMENTARY_CHARGE_SI * 1e-3;
const NM2_PER_M2: f64 = 1e18;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    /// ħ²/2mₑ in meV·nm².
    pub kinetic_coeff: f64,
    /// e/ħ in nm⁻² per tesla.
    pub tesla_to_inv_len2: f64,
    /// Sign of the particle charge in units of e.
    pub electron_charge_sign: f64,
}

impl UnitSystem {
    pub const fn codata() -> Self {
        UnitSystem {
            kinetic_coeff: HBAR_SI * HBAR_SI / (2.0 * ELECTRON_MASS_SI) / JOULE_PER_MEV
                * NM2_PER_M2,
            tesla_to_inv_len2: ELEMENTARY_CHARGE_SI / HBAR_SI / NM2_PER_M2,
            electron_charge_sign: -1.0,
        }
    }

    /// 1/m in meV·nm² for a particle of mass `mass_ratio`·mₑ.
    pub fn inverse_mass(&self, mass_ratio: f64) -> f64 {
        2.0 * self.kinetic_coeff / mass_ratio
    }

    /// Signed μ = qB in nm⁻² for the electron.
    pub fn magnetic_mu(&self, field_tesla: f64) -> f64 {
        self.electron_charge_sign * self.tesla_to_inv_len2 * field_tesla
    }

    /// Cyclotron energy ħω_c = ħ|e|B/m in meV.
    pub fn cyclotron_energy(&self, field_tesla: f64, mass_ratio: f64) -> f64 {
        self.tesla_to_inv_len2 * field_tesla.abs() * self.inverse_mass(mass_ratio)
    }
}

pub const UNITS: UnitSystem = UnitSystem::codata();
