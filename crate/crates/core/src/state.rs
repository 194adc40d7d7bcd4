//! State vectors and the discrete symmetry group acting on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ReducedParams;

/// Mechanical coordinates of the n groups (dimensionless).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechState {
    pub zeta: Vec<f64>,
    pub pi: Vec<f64>,
}

impl MechState {
    pub fn at_rest(zeta: Vec<f64>) -> Self {
        let pi = vec![0.0; zeta.len()];
        Self { zeta, pi }
    }

    pub fn origin(n: usize) -> Self {
        Self::at_rest(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.zeta.iter().chain(&self.pi).all(|x| x.is_finite())
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        if self.zeta.len() != n || self.pi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.zeta.len().min(self.pi.len()),
            });
        }
        Ok(())
    }

    /// Flattens to `[ζ…, π…]`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.zeta.iter().chain(&self.pi).copied().collect()
    }

    pub fn from_slice(y: &[f64]) -> Self {
        let n = y.len() / 2;
        Self {
            zeta: y[..n].to_vec(),
            pi: y[n..2 * n].to_vec(),
        }
    }
}

/// Cavity amplitude plus mechanics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub alpha: Complex64,
    pub mech: MechState,
}

impl FullState {
    pub fn origin(n: usize) -> Self {
        Self {
            alpha: Complex64::new(0.0, 0.0),
            mech: MechState::origin(n),
        }
    }

    pub fn n(&self) -> usize {
        self.mech.len()
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite() && self.mech.is_finite()
    }

    /// Flattens to `[Re α, Im α, ζ…, π…]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(2 + 2 * self.n());
        y.push(self.alpha.re);
        y.push(self.alpha.im);
        y.extend_from_slice(&self.mech.zeta);
        y.extend_from_slice(&self.mech.pi);
        y
    }

    pub fn from_slice(y: &[f64]) -> Self {
        Self {
            alpha: Complex64::new(y[0], y[1]),
            mech: MechState::from_slice(&y[2..]),
        }
    }
}

/// An element of the model's symmetry group: a cyclic relabelling of the
/// groups by `step` (with the matching cavity phase advance), optionally
/// followed by the parity flip `(ζ, π, α) → (−ζ, −π, −α)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymmetryElement {
    pub step: usize,
    pub parity: bool,
}

impl SymmetryElement {
    pub const IDENTITY: Self = Self {
        step: 0,
        parity: false,
    };

    /// All 2n elements, identity first.
    pub fn all(n: usize) -> Vec<Self> {
        [false, true]
            .into_iter()
            .flat_map(|parity| (0..n).map(move |step| Self { step, parity }))
            .collect()
    }

    /// Relabels a per-group array: entry `j` of the result is entry `j − step`.
    pub fn permute(&self, values: &[f64]) -> Vec<f64> {
        let n = values.len();
        let sign = if self.parity { -1.0 } else { 1.0 };
        (0..n)
            .map(|j| sign * values[(j + n - self.step % n) % n])
            .collect()
    }

    pub fn apply_alpha(&self, alpha: Complex64, r: &ReducedParams) -> Complex64 {
        let rotated = alpha * Complex64::from_polar(1.0, r.phi * self.step as f64);
        if self.parity {
            -rotated
        } else {
            rotated
        }
    }

    pub fn apply_positions(&self, zeta: &[f64]) -> Vec<f64> {
        self.permute(zeta)
    }

    pub fn apply_mech(&self, m: &MechState) -> MechState {
        MechState {
            zeta: self.permute(&m.zeta),
            pi: self.permute(&m.pi),
        }
    }

    pub fn apply(&self, s: &FullState, r: &ReducedParams) -> FullState {
        FullState {
            alpha: self.apply_alpha(s.alpha, r),
            mech: self.apply_mech(&s.mech),
        }
    }
}

/// Applies the group element `(step, parity)` to a full state.
pub fn symmetry_transform(
    s: &FullState,
    step: usize,
    parity: bool,
    r: &ReducedParams,
) -> FullState {
    SymmetryElement { step, parity }.apply(s, r)
}
