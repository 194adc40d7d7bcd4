//! Mean-field equations of motion, the adiabatic (mechanics-only) limit,
//! the conserved energy and the κ = 0 Lyapunov potential.
//!
//! Full model, in reduced units:
//!
//! ```text
//! dα/dτ  = (iδ − κ̃) α − i g̃ Σ_l e^{iφl} sin ζ_l
//! dζ_j/dτ = π_j
//! dπ_j/dτ = −ζ_j − 2u cos ζ_j Re(e^{−iφj} α)
//! ```
//!
//! Eliminating the cavity gives `α = i g̃ S / (iδ − κ̃)` with
//! `S = Σ_l e^{iφl} sin ζ_l`, and the force
//! `dπ_j/dτ = −ζ_j − cos ζ_j Σ_l K_jl sin ζ_l`, where
//! `K_jl = 2u g̃ [δ cos φ(j−l) − κ̃ sin φ(j−l)] / (δ² + κ̃²)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::ReducedParams;
use crate::state::{FullState, MechState};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `S = Σ_j e^{iφj} sin ζ_j`, the order parameter the cavity responds to.
pub fn collective_amplitude(zeta: &[f64], r: &ReducedParams) -> Complex64 {
    zeta.iter()
        .zip(r.phases())
        .map(|(z, ph)| ph * z.sin())
        .sum()
}

fn check_len(len: usize, r: &ReducedParams) -> Result<()> {
    if len != r.n {
        return Err(Error::DimensionMismatch {
            expected: r.n,
            got: len,
        });
    }
    Ok(())
}

/// Steady-state cavity amplitude for fixed atomic positions.
pub fn adiabatic_field(zeta: &[f64], r: &ReducedParams) -> Result<Complex64> {
    check_len(zeta.len(), r)?;
    r.require_adiabatic()?;
    Ok(adiabatic_field_unchecked(zeta, r))
}

pub(crate) fn adiabatic_field_unchecked(zeta: &[f64], r: &ReducedParams) -> Complex64 {
    let s = collective_amplitude(zeta, r);
    I * r.g_t * s / Complex64::new(-r.kappa_t, r.delta)
}

/// Time derivative of the full state in reduced units.
pub fn full_drift(s: &FullState, r: &ReducedParams) -> FullState {
    let y = s.to_vec();
    let mut dy = vec![0.0; y.len()];
    full_drift_flat(&y, &mut dy, r);
    FullState::from_slice(&dy)
}

/// Full drift on the flat layout `[Re α, Im α, ζ…, π…]`.
pub fn full_drift_flat(y: &[f64], dy: &mut [f64], r: &ReducedParams) {
    let n = r.n;
    let alpha = Complex64::new(y[0], y[1]);
    let (zeta, pi) = y[2..].split_at(n);
    let s = collective_amplitude(zeta, r);
    let da = Complex64::new(-r.kappa_t, r.delta) * alpha - I * r.g_t * s;
    dy[0] = da.re;
    dy[1] = da.im;
    let (dz, dp) = dy[2..].split_at_mut(n);
    for j in 0..n {
        dz[j] = pi[j];
        let proj = (r.phases()[j].conj() * alpha).re;
        dp[j] = -zeta[j] - 2.0 * r.u * zeta[j].cos() * proj;
    }
}

/// Mechanical drift with the cavity slaved to the atoms.
pub fn adiabatic_force(m: &MechState, r: &ReducedParams) -> Result<MechState> {
    m.check(r.n)?;
    r.require_adiabatic()?;
    Ok(MechState {
        zeta: m.pi.clone(),
        pi: position_force_unchecked(&m.zeta, r),
    })
}

/// The force `dπ/dτ` at rest, i.e. the quantity whose zeros are the
/// stationary states.
pub fn position_force(zeta: &[f64], r: &ReducedParams) -> Result<Vec<f64>> {
    check_len(zeta.len(), r)?;
    r.require_adiabatic()?;
    Ok(position_force_unchecked(zeta, r))
}

pub(crate) fn position_force_unchecked(zeta: &[f64], r: &ReducedParams) -> Vec<f64> {
    let alpha = adiabatic_field_unchecked(zeta, r);
    zeta.iter()
        .zip(r.phases())
        .map(|(z, ph)| -z - 2.0 * r.u * z.cos() * (ph.conj() * alpha).re)
        .collect()
}

/// Adiabatic drift on the flat layout `[ζ…, π…]`.
pub fn adiabatic_drift_flat(y: &[f64], dy: &mut [f64], r: &ReducedParams) {
    let n = r.n;
    let (zeta, pi) = y.split_at(n);
    let alpha = adiabatic_field_unchecked(zeta, r);
    let (dz, dp) = dy.split_at_mut(n);
    for j in 0..n {
        dz[j] = pi[j];
        dp[j] = -zeta[j] - 2.0 * r.u * zeta[j].cos() * (r.phases()[j].conj() * alpha).re;
    }
}

/// The light-mediated coupling matrix `K` (see module docs).
pub fn coupling_matrix(r: &ReducedParams) -> DMatrix<f64> {
    let scale = r.force_scale();
    DMatrix::from_fn(r.n, r.n, |j, l| {
        let d = r.phi * (j as f64 - l as f64);
        scale * (r.delta * d.cos() - r.kappa_t * d.sin())
    })
}

/// Lyapunov potential of the lossless adiabatic dynamics,
/// `V = ½ Σ ζ_j² + (ε/n) sign(δ) |S|²`; its negative gradient is the force.
pub fn lyapunov_potential(zeta: &[f64], r: &ReducedParams) -> Result<f64> {
    check_len(zeta.len(), r)?;
    if r.kappa_t != 0.0 {
        return Err(Error::LossyCavity);
    }
    r.require_adiabatic()?;
    let harmonic: f64 = 0.5 * zeta.iter().map(|z| z * z).sum::<f64>();
    let s = collective_amplitude(zeta, r);
    // u g̃ / δ equals (ε/n) sign(δ) at κ = 0.
    Ok(harmonic + r.u * r.g_t / r.delta * s.norm_sqr())
}

/// Mean-field energy in units of ħω_z. Conserved by [`full_drift`] when κ = 0.
pub fn energy(s: &FullState, r: &ReducedParams) -> f64 {
    let cavity = -r.delta * s.alpha.norm_sqr();
    let mech: f64 = s
        .mech
        .zeta
        .iter()
        .zip(&s.mech.pi)
        .zip(r.phases())
        .map(|((z, p), ph)| {
            0.5 * r.mech_scale * (p * p + z * z) + r.g_t * z.sin() * 2.0 * (ph.conj() * s.alpha).re
        })
        .sum();
    cavity + mech
}
