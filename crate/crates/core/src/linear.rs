//! Closed-form linearization about the normal phase: eigenfrequencies,
//! critical pump strength and the effective phonon hopping matrix.
//!
//! Modes evolve as `e^{−iωτ}`, so `Im ω > 0` means growth.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{PhysicalParams, ReducedParams, HBAR};

/// The two eigenfrequency branches `ω± = √(1 + ε e^{±iθ})` (units of ω_z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModePair {
    pub omega_plus: Complex64,
    pub omega_minus: Complex64,
    pub growth_rate: f64,
}

impl ModePair {
    /// All four roots `±ω+`, `±ω−`.
    pub fn roots(&self) -> [Complex64; 4] {
        [
            self.omega_plus,
            -self.omega_plus,
            self.omega_minus,
            -self.omega_minus,
        ]
    }

    /// Roots with exact duplicates (κ = 0 makes the branches coincide) removed.
    pub fn distinct_roots(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = Vec::with_capacity(4);
        for w in self.roots() {
            if !out
                .iter()
                .any(|v| (v - w).norm() <= 1e-14 * w.norm().max(1.0))
            {
                out.push(w);
            }
        }
        out
    }

    /// Smallest |ω| over the branches; vanishes at the soft-mode threshold.
    pub fn min_frequency(&self) -> f64 {
        self.omega_plus.norm().min(self.omega_minus.norm())
    }
}

/// Normal-phase eigenfrequencies of the position dynamics for n > 2.
pub fn normal_modes(r: &ReducedParams) -> Result<ModePair> {
    if r.n <= 2 {
        return Err(Error::Unsupported(
            "closed-form normal modes require more than two groups",
        ));
    }
    let one = Complex64::new(1.0, 0.0);
    let omega_plus = (one + r.eps * Complex64::from_polar(1.0, r.theta)).sqrt();
    let omega_minus = (one + r.eps * Complex64::from_polar(1.0, -r.theta)).sqrt();
    let growth_rate = omega_plus.im.abs().max(omega_minus.im.abs());
    Ok(ModePair {
        omega_plus,
        omega_minus,
        growth_rate,
    })
}

/// Pump Rabi frequency (rad/s) at which the lossless dispersive system
/// leaves the normal phase: `Ω_c = √(Δpa² |Δpc| m ω_z² / (g0² ħ k² N))`.
pub fn critical_pump(p: &PhysicalParams) -> Result<f64> {
    p.validate()?;
    if p.delta_pc == 0.0 {
        return Err(Error::InvalidParameter {
            field: "delta_pc",
            reason: "critical pump undefined on cavity resonance",
        });
    }
    Ok(
        (p.delta_pa.powi(2) * p.delta_pc.abs() * p.mass * p.omega_z.powi(2)
            / (p.g0.powi(2) * HBAR * p.k_pump.powi(2) * p.total_atoms()))
        .sqrt(),
    )
}

/// Effective phonon hopping matrix in units of ω_z.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveHamiltonian {
    pub matrix: DMatrix<f64>,
    pub phi_used: f64,
}

impl EffectiveHamiltonian {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        crate::linalg::eigenvalues(&self.matrix)
    }

    /// Fastest amplitude growth rate of `ḃ = −i H b`, i.e. `max Im λ`.
    pub fn growth_rate(&self) -> f64 {
        self.spectrum()
            .iter()
            .map(|l| l.im)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Propagates `ḃ = −i H b` for a time `tau` with the matrix exponential.
    pub fn evolve(&self, b0: &DVector<Complex64>, tau: f64) -> DVector<Complex64> {
        let gen = self.matrix.map(|h| Complex64::new(0.0, -h * tau));
        gen.exp() * b0
    }
}

fn hopping(r: &ReducedParams, phi: f64, n: usize) -> DMatrix<f64> {
    let scale = r.force_scale();
    DMatrix::from_fn(n, n, |j, l| {
        if j == l {
            1.0 + scale * r.delta
        } else {
            let d = phi * (j as f64 - l as f64);
            scale * (r.delta * d.cos() - r.kappa_t * d.sin())
        }
    })
}

/// The n×n hopping matrix at the pump phase φ = 2π/n.
pub fn build_heff(r: &ReducedParams) -> EffectiveHamiltonian {
    EffectiveHamiltonian {
        matrix: hopping(r, r.phi, r.n),
        phi_used: r.phi,
    }
}

/// Largest directional asymmetry `max |H_jl − H_lj|`; zero iff reciprocal.
pub fn nonreciprocity(h: &EffectiveHamiltonian) -> f64 {
    let m = &h.matrix;
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for l in (j + 1)..n {
            worst = worst.max((m[(j, l)] - m[(l, j)]).abs());
        }
    }
    worst
}

/// Two groups with a free relative pump phase `varphi`.
pub fn two_group_heff(r: &ReducedParams, varphi: f64) -> EffectiveHamiltonian {
    EffectiveHamiltonian {
        matrix: hopping(r, varphi, 2),
        phi_used: varphi,
    }
}

/// Relative phase that decouples group 1 from group 2 (`H_12 = 0`):
/// `atan2(−Δpc, κ)`. Satisfies `φ* + θ ≡ π/2 (mod π)`.
pub fn ideal_phase(r: &ReducedParams) -> Result<f64> {
    if r.kappa_t <= 0.0 {
        return Err(Error::InvalidParameter {
            field: "kappa",
            reason: "one-way coupling needs a lossy cavity",
        });
    }
    let phase = (-r.delta).atan2(r.kappa_t);
    debug_assert!(flux_offset(phase + r.theta) < 1e-12);
    Ok(phase)
}

/// Distance of an angle from `π/2 (mod π)`.
pub fn flux_offset(angle: f64) -> f64 {
    let x = (angle - std::f64::consts::FRAC_PI_2).rem_euclid(std::f64::consts::PI);
    x.min(std::f64::consts::PI - x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PhysicalParams;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn params(n: usize) -> ReducedParams {
        PhysicalParams::reference(n).reduce().unwrap()
    }

    #[test]
    fn no_drive_gives_bare_trap() {
        let p = PhysicalParams {
            omega_pump: 0.0,
            ..PhysicalParams::reference(4)
        };
        let m = normal_modes(&p.reduce().unwrap()).unwrap();
        assert_eq!(m.omega_plus, Complex64::new(1.0, 0.0));
        assert_eq!(m.omega_minus, Complex64::new(1.0, 0.0));
        assert_eq!(m.growth_rate, 0.0);
    }

    #[test]
    fn rejects_two_or_fewer_groups() {
        assert!(normal_modes(&params(2)).is_err());
        assert!(normal_modes(&params(1)).is_err());
    }

    #[test]
    fn reference_point_grows() {
        for n in 3..=6 {
            assert!(normal_modes(&params(n)).unwrap().growth_rate > 0.0);
        }
    }

    #[test]
    fn lossless_mode_softens_at_threshold() {
        let p = PhysicalParams::reference_lossless(4);
        let oc = critical_pump(&p).unwrap();
        let r = PhysicalParams {
            omega_pump: oc,
            ..p
        }
        .reduce()
        .unwrap();
        assert_relative_eq!(r.eps, 1.0, max_relative = 1e-12);
        let m = normal_modes(&r).unwrap();
        assert!(m.min_frequency() < 1e-6);
        // Below threshold: ω² = 1 − ε is real.
        let r = PhysicalParams {
            omega_pump: 0.5 * oc,
            ..p
        }
        .reduce()
        .unwrap();
        let m = normal_modes(&r).unwrap();
        assert_relative_eq!(m.omega_plus.re, (1.0 - r.eps).sqrt(), max_relative = 1e-12);
        assert!(m.growth_rate < 1e-12);
    }

    #[test]
    fn critical_pump_scales_with_atom_number() {
        let p = PhysicalParams::reference(4);
        let a = critical_pump(&p).unwrap();
        let b = critical_pump(&PhysicalParams { nu: 60, ..p }).unwrap();
        assert_relative_eq!(a / b, 2f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn critical_pump_at_far_detuning() {
        // 2π·17.3432 MHz from an independent high-precision evaluation.
        let p = PhysicalParams {
            delta_pc: -2.0 * PI * 50e6,
            ..PhysicalParams::reference(4)
        };
        let oc = critical_pump(&p).unwrap() / (2.0 * PI);
        assert_relative_eq!(oc, 17.343_174_850_36e6, max_relative = 1e-10);
    }

    #[test]
    fn critical_pump_rejects_resonance() {
        let p = PhysicalParams {
            delta_pc: 0.0,
            ..PhysicalParams::reference(4)
        };
        assert!(critical_pump(&p).is_err());
    }

    #[test]
    fn two_groups_are_reciprocal() {
        let h = build_heff(&params(2));
        assert!(nonreciprocity(&h) < 1e-12 * h.matrix.amax());
        let h = build_heff(&params(1));
        assert_eq!(nonreciprocity(&h), 0.0);
    }

    #[test]
    fn asymmetry_for_four_groups() {
        let r = params(4);
        let h = build_heff(&r);
        let expected = 2.0 * r.force_scale() * r.kappa_t * r.phi.sin();
        assert_relative_eq!(
            h.matrix[(0, 1)] - h.matrix[(1, 0)],
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn three_groups_with_loss_are_nonreciprocal() {
        assert!(nonreciprocity(&build_heff(&params(3))) > 0.0);
        let lossless = PhysicalParams::reference_lossless(3).reduce().unwrap();
        assert!(nonreciprocity(&build_heff(&lossless)) < 1e-12);
    }

    #[test]
    fn heff_is_circulant() {
        for n in 1..=7 {
            let h = build_heff(&params(n)).matrix;
            for j in 0..n {
                for l in 0..n {
                    let diff = h[(j, l)] - h[((j + 1) % n, (l + 1) % n)];
                    assert!(diff.abs() <= 1e-12 * h.amax(), "n = {n}");
                }
            }
        }
    }

    #[test]
    fn zero_relative_phase_couples_symmetrically() {
        let r = params(2);
        let h = two_group_heff(&r, 0.0).matrix;
        let expected = r.force_scale() * r.delta;
        assert_relative_eq!(h[(0, 1)], expected, max_relative = 1e-12);
        assert_relative_eq!(h[(1, 0)], expected, max_relative = 1e-12);
    }

    #[test]
    fn ideal_phase_decouples_one_direction() {
        let r = params(2);
        let phase = ideal_phase(&r).unwrap();
        let h = two_group_heff(&r, phase).matrix;
        assert!(h[(0, 1)].abs() < 1e-12 * h[(1, 0)].abs());
        let expected = 2.0 * r.force_scale() * r.delta * phase.cos();
        assert_relative_eq!(h[(1, 0)], expected, max_relative = 1e-12);
        assert!(flux_offset(phase + r.theta) < 1e-12);
    }

    #[test]
    fn ideal_phase_special_cases() {
        let p = PhysicalParams::reference(2);
        let r = PhysicalParams {
            delta_pc: -p.kappa,
            ..p
        }
        .reduce()
        .unwrap();
        assert_relative_eq!(ideal_phase(&r).unwrap(), PI / 4.0, max_relative = 1e-15);

        let r = PhysicalParams { delta_pc: 0.0, ..p }.reduce().unwrap();
        let phase = ideal_phase(&r).unwrap();
        let h = two_group_heff(&r, phase).matrix;
        assert!(h[(0, 1)].abs() < 1e-12 * r.force_scale() * r.kappa_t);

        let r = PhysicalParams { kappa: 0.0, ..p }.reduce().unwrap();
        assert!(ideal_phase(&r).is_err());
    }

    #[test]
    fn flipping_loss_sign_swaps_directions() {
        let r = params(2);
        let flipped = r.with_kappa(-r.kappa_t);
        for varphi in [0.3, 1.1, 2.0, 4.0] {
            let a = two_group_heff(&r, varphi).matrix;
            let b = two_group_heff(&flipped, varphi).matrix;
            assert_relative_eq!(a[(0, 1)], b[(1, 0)], max_relative = 1e-12);
            assert_relative_eq!(a[(1, 0)], b[(0, 1)], max_relative = 1e-12);
        }
    }

    #[test]
    fn circulant_spectrum_matches_row_symbol() {
        for n in 3..=7 {
            let h = build_heff(&params(n));
            let numeric = h.spectrum();
            for q in 0..n {
                let wave = 2.0 * PI * q as f64 / n as f64;
                let symbol: Complex64 = (0..n)
                    .map(|m| h.matrix[(0, m)] * Complex64::from_polar(1.0, wave * m as f64))
                    .sum();
                let nearest = numeric
                    .iter()
                    .map(|z| (z - symbol).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest < 1e-9 * h.matrix.amax(), "n = {n}, q = {q}");
            }
        }
    }

    #[test]
    fn hopping_equals_linearized_position_coupling() {
        // H − 1 reproduces the coupling matrix of the linearized force.
        let r = params(5);
        let h = build_heff(&r).matrix;
        let k = crate::model::coupling_matrix(&r);
        let diff = h - DMatrix::identity(5, 5) - k;
        assert!(diff.amax() < 1e-12 * r.eps);
    }

    #[test]
    fn propagation_grows_at_spectral_rate() {
        let r = params(4);
        let h = build_heff(&r);
        let rate = h.growth_rate();
        assert!(rate > 0.0);
        let b0 = DVector::from_fn(4, |j, _| Complex64::new(1.0 + j as f64, 0.5));
        let t1 = 20.0 / rate;
        let t2 = 30.0 / rate;
        let n1 = h.evolve(&b0, t1).norm();
        let n2 = h.evolve(&b0, t2).norm();
        let measured = (n2 / n1).ln() / (t2 - t1);
        assert_relative_eq!(measured, rate, max_relative = 1e-2);
    }
}
