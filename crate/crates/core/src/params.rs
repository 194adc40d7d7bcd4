//! Physical parameters and their dimensionless reduction.
//!
//! All solver code works in units where the trap frequency is one: positions
//! are `ζ = k z`, momenta `π = k p / (μ ω_z)` and time `τ = ω_z t`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Mass of a ⁸⁷Rb atom (kg).
pub const RB87_MASS: f64 = 1.443_16e-25;
/// Rb D2 line wavelength (m).
pub const RB87_D2_WAVELENGTH: f64 = 780.24e-9;

/// Experimental parameters in SI units; all frequencies are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Number of pump-phase groups.
    pub n: usize,
    /// Atoms per group.
    pub nu: usize,
    pub omega_pump: f64,
    pub delta_pa: f64,
    pub delta_pc: f64,
    pub kappa: f64,
    pub omega_z: f64,
    pub g0: f64,
    /// Pump wavenumber (rad/m).
    pub k_pump: f64,
    /// Single-atom mass (kg).
    pub mass: f64,
}

impl PhysicalParams {
    /// The parameter set used for the cavity-field trajectory ensembles:
    /// Ω = 2π·20 MHz, Δpc = −2π·4 MHz, Δpa = −2π·100 MHz, κ = 2π·0.5 MHz,
    /// ν = 30, g0 = 2π·3 MHz, ω_z = 2π·70 kHz.
    pub fn reference(n: usize) -> Self {
        let mhz = 2.0 * PI * 1e6;
        Self {
            n,
            nu: 30,
            omega_pump: 20.0 * mhz,
            delta_pa: -100.0 * mhz,
            delta_pc: -4.0 * mhz,
            kappa: 0.5 * mhz,
            omega_z: 2.0 * PI * 70e3,
            g0: 3.0 * mhz,
            k_pump: 2.0 * PI / RB87_D2_WAVELENGTH,
            mass: RB87_MASS,
        }
    }

    /// Same as [`PhysicalParams::reference`] but with a lossless cavity.
    pub fn reference_lossless(n: usize) -> Self {
        Self {
            kappa: 0.0,
            ..Self::reference(n)
        }
    }

    /// Total atom number N = n·ν.
    pub fn total_atoms(&self) -> f64 {
        (self.n * self.nu) as f64
    }

    /// Group mass μ = ν·m.
    pub fn group_mass(&self) -> f64 {
        self.nu as f64 * self.mass
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.k_pump
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &'static str, reason: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter { field, reason })
            }
        };
        check(self.n >= 1, "n", "must be at least 1")?;
        check(self.nu >= 1, "nu", "must be at least 1")?;
        check(
            self.omega_pump.is_finite() && self.omega_pump >= 0.0,
            "omega_pump",
            "must be finite and non-negative",
        )?;
        check(
            self.delta_pa.is_finite() && self.delta_pa != 0.0,
            "delta_pa",
            "must be finite and nonzero",
        )?;
        check(self.delta_pc.is_finite(), "delta_pc", "must be finite")?;
        check(
            self.kappa.is_finite() && self.kappa >= 0.0,
            "kappa",
            "must be finite and non-negative",
        )?;
        check(
            self.omega_z.is_finite() && self.omega_z > 0.0,
            "omega_z",
            "must be finite and positive",
        )?;
        check(
            self.g0.is_finite() && self.g0 > 0.0,
            "g0",
            "must be finite and positive",
        )?;
        check(
            self.k_pump.is_finite() && self.k_pump > 0.0,
            "k_pump",
            "must be finite and positive",
        )?;
        check(
            self.mass.is_finite() && self.mass > 0.0,
            "mass",
            "must be finite and positive",
        )?;
        Ok(())
    }

    pub fn reduce(&self) -> Result<ReducedParams> {
        reduce(self)
    }
}

/// Dimensionless constants shared by every solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedParams {
    pub n: usize,
    /// Inter-group pump phase φ = 2π/n.
    pub phi: f64,
    /// Δpc / ω_z.
    pub delta: f64,
    /// κ / ω_z.
    pub kappa_t: f64,
    /// Cavity drive per unit `sin ζ`: ν Ω g0 / (Δpa ω_z).
    pub g_t: f64,
    /// Optomechanical coupling: ħ k² ν Ω g0 / (μ Δpa ω_z²).
    pub u: f64,
    /// Collective coupling ε; the κ = 0 threshold for n > 2 sits at ε = 1.
    pub eps: f64,
    /// atan2(−κ, Δpc).
    pub theta: f64,
    /// μ ω_z / (ħ k²), the weight of the mechanical terms in the energy.
    pub mech_scale: f64,
    #[serde(skip)]
    phases: Vec<Complex64>,
}

/// Nondimensionalizes a physical parameter set.
pub fn reduce(p: &PhysicalParams) -> Result<ReducedParams> {
    p.validate()?;
    let wz = p.omega_z;
    let mu = p.group_mass();
    let nu = p.nu as f64;
    let phi = 2.0 * PI / p.n as f64;
    let drive = nu * p.omega_pump * p.g0 / p.delta_pa;
    let detuning_norm = p.delta_pc.hypot(p.kappa);
    let eps = p.total_atoms() * p.omega_pump.powi(2) * HBAR * p.k_pump.powi(2) * p.g0.powi(2)
        / (p.mass * p.delta_pa.powi(2) * wz.powi(2) * detuning_norm);
    Ok(ReducedParams {
        n: p.n,
        phi,
        delta: p.delta_pc / wz,
        kappa_t: p.kappa / wz,
        g_t: drive / wz,
        u: HBAR * p.k_pump.powi(2) * drive / (mu * wz.powi(2)),
        // Ω = 0 with a resonant lossless cavity gives 0/0.
        eps: if p.omega_pump == 0.0 { 0.0 } else { eps },
        theta: (0.0 - p.kappa).atan2(p.delta_pc),
        mech_scale: mu * wz / (HBAR * p.k_pump.powi(2)),
        phases: group_phases(p.n, phi),
    })
}

fn group_phases(n: usize, phi: f64) -> Vec<Complex64> {
    (1..=n)
        .map(|j| Complex64::from_polar(1.0, phi * j as f64))
        .collect()
}

impl ReducedParams {
    /// `e^{iφj}` for j = 1..=n, indexed from zero.
    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    /// |Δpc + iκ| / ω_z.
    pub fn detuning_norm(&self) -> f64 {
        self.delta.hypot(self.kappa_t)
    }

    /// Whether the adiabatic cavity field is defined (Δpc, κ not both zero).
    pub fn has_adiabatic_limit(&self) -> bool {
        self.detuning_norm() > 0.0
    }

    pub(crate) fn require_adiabatic(&self) -> Result<()> {
        if self.has_adiabatic_limit() {
            Ok(())
        } else {
            Err(Error::SingularCavity)
        }
    }

    /// Prefactor of the light-mediated force, 2 u g̃ / (δ² + κ̃²).
    pub fn force_scale(&self) -> f64 {
        let d2 = self.delta * self.delta + self.kappa_t * self.kappa_t;
        if d2 == 0.0 {
            0.0
        } else {
            2.0 * self.u * self.g_t / d2
        }
    }

    /// Copy of these parameters with a different inter-group phase.
    pub fn with_phase(&self, phi: f64) -> Self {
        Self {
            phi,
            phases: group_phases(self.n, phi),
            ..self.clone()
        }
    }

    /// Copy with the cavity loss replaced (used for sign-flip checks).
    pub fn with_kappa(&self, kappa_t: f64) -> Self {
        Self {
            kappa_t,
            theta: (0.0 - kappa_t).atan2(self.delta),
            eps: self.eps * self.detuning_norm() / self.delta.hypot(kappa_t),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_drive_reduces_to_zero_couplings() {
        let p = PhysicalParams {
            omega_pump: 0.0,
            ..PhysicalParams::reference(4)
        };
        let r = reduce(&p).unwrap();
        assert_eq!(r.g_t, 0.0);
        assert_eq!(r.u, 0.0);
        assert_eq!(r.eps, 0.0);
    }

    #[test]
    fn lossless_red_detuning_gives_theta_pi() {
        let r = reduce(&PhysicalParams::reference_lossless(3)).unwrap();
        assert_eq!(r.theta, PI);
    }

    #[test]
    fn theta_matches_tangent() {
        let r = reduce(&PhysicalParams::reference(4)).unwrap();
        assert_relative_eq!(r.theta.tan(), -r.kappa_t / r.delta, max_relative = 1e-12);
        assert_relative_eq!(
            r.theta.cos(),
            r.delta / r.detuning_norm(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn reference_eps_is_order_ten() {
        // Direct evaluation with the default Rb constants.
        let r = reduce(&PhysicalParams::reference(4)).unwrap();
        assert_relative_eq!(r.eps, 16.494_764_061_101_7, max_relative = 1e-12);
    }

    #[test]
    fn eps_agrees_with_reduced_couplings() {
        // ε = n u g̃ / |δ + iκ̃| relates the two independent evaluation routes.
        for n in 1..=6 {
            let r = reduce(&PhysicalParams::reference(n)).unwrap();
            assert_relative_eq!(
                r.eps,
                n as f64 * r.u * r.g_t / r.detuning_norm(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn eps_scales_quadratically_with_pump() {
        let p = PhysicalParams::reference(4);
        let a = reduce(&p).unwrap().eps;
        let b = reduce(&PhysicalParams {
            omega_pump: 2.0 * p.omega_pump,
            ..p
        })
        .unwrap()
        .eps;
        assert_relative_eq!(b, 4.0 * a, max_relative = 1e-12);
    }

    #[test]
    fn rejects_invalid_fields() {
        let p = PhysicalParams::reference(4);
        let bad = PhysicalParams { delta_pa: 0.0, ..p };
        assert!(matches!(
            reduce(&bad),
            Err(Error::InvalidParameter {
                field: "delta_pa",
                ..
            })
        ));
        let bad = PhysicalParams { omega_z: 0.0, ..p };
        assert!(matches!(
            reduce(&bad),
            Err(Error::InvalidParameter {
                field: "omega_z",
                ..
            })
        ));
        let bad = PhysicalParams { kappa: -1.0, ..p };
        assert!(reduce(&bad).is_err());
        let bad = PhysicalParams { n: 0, ..p };
        assert!(reduce(&bad).is_err());
    }

    #[test]
    fn phases_are_roots_of_unity() {
        let r = reduce(&PhysicalParams::reference(5)).unwrap();
        let sum: Complex64 = r.phases().iter().sum();
        assert!(sum.norm() < 1e-12);
        assert_relative_eq!(r.phases()[4].re, 1.0, max_relative = 1e-12);
    }
}
