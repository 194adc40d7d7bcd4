//! Stationary states of the adiabatic force equations: analytic Jacobians,
//! damped Newton, multistart search, stability labels, symmetry orbits and
//! Lyapunov minimization in the lossless limit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, spectral_abscissa};
use crate::model::{
    adiabatic_field, adiabatic_field_unchecked, coupling_matrix, lyapunov_potential,
    position_force, position_force_unchecked,
};
use crate::params::ReducedParams;
use crate::state::{FullState, MechState, SymmetryElement};

pub const DEFAULT_STABILITY_TOL: f64 = 1e-9;
pub const DEFAULT_DEDUP_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    /// Every mode decays.
    Stable,
    /// No growing mode, but at least one undamped oscillation.
    Marginal,
    Unstable,
}

impl Stability {
    /// True unless some mode grows. Undamped (marginal) points count as
    /// stable: in the lossless limit nothing is strictly attracting, and at
    /// finite loss the modes that do not radiate into the cavity stay undamped.
    pub fn is_linearly_stable(self) -> bool {
        self != Stability::Unstable
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Marginal => "marginal",
            Stability::Unstable => "unstable",
        }
    }
}

/// Unstable if any `Re λ > tol`, stable if all `Re λ < −tol`, else marginal.
pub fn classify(eigenvalues: &[Complex64], tol: f64) -> Stability {
    let top = spectral_abscissa(eigenvalues);
    if top > tol {
        Stability::Unstable
    } else if top < -tol {
        Stability::Stable
    } else {
        Stability::Marginal
    }
}

/// Which linearization decides stability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JacobianKind {
    /// Mechanics only, cavity slaved (2n × 2n).
    Adiabatic,
    /// Cavity quadratures plus mechanics ((2n+2) × (2n+2)).
    Full,
}

/// `∂(dπ/dτ)/∂ζ` at rest, the position block of the adiabatic Jacobian.
pub fn position_jacobian(zeta: &[f64], r: &ReducedParams) -> Result<DMatrix<f64>> {
    position_force(zeta, r)?;
    let k = coupling_matrix(r);
    let n = r.n;
    let sin: Vec<f64> = zeta.iter().map(|z| z.sin()).collect();
    let cos: Vec<f64> = zeta.iter().map(|z| z.cos()).collect();
    let mut b = DMatrix::zeros(n, n);
    for j in 0..n {
        let field: f64 = (0..n).map(|m| k[(j, m)] * sin[m]).sum();
        for l in 0..n {
            b[(j, l)] = -cos[j] * k[(j, l)] * cos[l];
        }
        b[(j, j)] += -1.0 + sin[j] * field;
    }
    Ok(b)
}

/// Linearization of `(dζ/dτ, dπ/dτ)` about `(ζ, π = 0)`.
pub fn adiabatic_jacobian(zeta: &[f64], r: &ReducedParams) -> Result<DMatrix<f64>> {
    let b = position_jacobian(zeta, r)?;
    let n = r.n;
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        jac[(j, n + j)] = 1.0;
    }
    jac.view_mut((n, 0), (n, n)).copy_from(&b);
    Ok(jac)
}

/// Linearization of the full drift in the coordinates `[Re α, Im α, ζ…, π…]`.
pub fn full_jacobian(s: &FullState, r: &ReducedParams) -> DMatrix<f64> {
    let n = s.n();
    let mut jac = DMatrix::zeros(2 * n + 2, 2 * n + 2);
    jac[(0, 0)] = -r.kappa_t;
    jac[(0, 1)] = -r.delta;
    jac[(1, 0)] = r.delta;
    jac[(1, 1)] = -r.kappa_t;
    for (l, (z, ph)) in s.mech.zeta.iter().zip(r.phases()).enumerate() {
        let c = r.g_t * z.cos();
        jac[(0, 2 + l)] = c * ph.im;
        jac[(1, 2 + l)] = -c * ph.re;
    }
    for j in 0..n {
        let z = s.mech.zeta[j];
        let ph = r.phases()[j];
        let row = 2 + n + j;
        jac[(2 + j, 2 + n + j)] = 1.0;
        jac[(row, 2 + j)] = -1.0 + 2.0 * r.u * z.sin() * (ph.conj() * s.alpha).re;
        jac[(row, 0)] = -2.0 * r.u * z.cos() * ph.re;
        jac[(row, 1)] = -2.0 * r.u * z.cos() * ph.im;
    }
    jac
}

/// Spectrum of the chosen Jacobian at a rest point `ζ`.
pub fn spectrum_at(zeta: &[f64], r: &ReducedParams, kind: JacobianKind) -> Result<Vec<Complex64>> {
    Ok(match kind {
        JacobianKind::Adiabatic => eigenvalues(&adiabatic_jacobian(zeta, r)?),
        JacobianKind::Full => {
            let s = FullState {
                alpha: adiabatic_field(zeta, r)?,
                mech: MechState::at_rest(zeta.to_vec()),
            };
            eigenvalues(&full_jacobian(&s, r))
        }
    })
}

/// Coordinates in which roots are sought.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subspace {
    /// All n positions free.
    Full,
    /// Even n only: `ζ_{j+n/2} = −ζ_j`, leaving n/2 free positions
    /// (for n = 4 this is `z₁ = −z₃`, `z₂ = −z₄`). The constraint is the
    /// fixed-point set of a symmetry element, so it is dynamically invariant.
    AntipodalPairs,
}

impl Subspace {
    pub fn free_dim(self, n: usize) -> Result<usize> {
        match self {
            Subspace::Full => Ok(n),
            Subspace::AntipodalPairs if n % 2 == 0 => Ok(n / 2),
            Subspace::AntipodalPairs => Err(Error::Unsupported(
                "antipodal-pair subspace needs an even group count",
            )),
        }
    }

    pub fn embed(self, x: &[f64], n: usize) -> Vec<f64> {
        match self {
            Subspace::Full => x.to_vec(),
            Subspace::AntipodalPairs => {
                let half = n / 2;
                (0..n)
                    .map(|j| if j < half { x[j] } else { -x[j - half] })
                    .collect()
            }
        }
    }

    pub fn project(self, zeta: &[f64]) -> Vec<f64> {
        match self {
            Subspace::Full => zeta.to_vec(),
            Subspace::AntipodalPairs => zeta[..zeta.len() / 2].to_vec(),
        }
    }

    fn reduce_jacobian(self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Subspace::Full => b.clone(),
            Subspace::AntipodalPairs => {
                let half = b.nrows() / 2;
                DMatrix::from_fn(half, half, |j, m| b[(j, m)] - b[(j, m + half)])
            }
        }
    }
}

/// A root of the force equations (momenta zero) with its linear stability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub zeta: Vec<f64>,
    pub alpha: Complex64,
    pub eigenvalues: Vec<Complex64>,
    pub stability: Stability,
    pub orbit_id: usize,
    pub residual: f64,
}

impl StationaryPoint {
    /// Largest displacement from the trap centre.
    pub fn amplitude(&self) -> f64 {
        self.zeta.iter().fold(0.0, |a, z| a.max(z.abs()))
    }

    pub fn is_origin(&self, radius: f64) -> bool {
        self.amplitude() <= radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Convergence threshold on `max |force|`.
    pub tol: f64,
    pub max_iter: usize,
    pub jacobian: JacobianKind,
    pub stability_tol: f64,
    pub subspace: Subspace,
    /// Newton steps are clipped to this max-norm (radians).
    pub max_step: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 100,
            jacobian: JacobianKind::Full,
            stability_tol: DEFAULT_STABILITY_TOL,
            subspace: Subspace::Full,
            max_step: 0.5,
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Undamped Newton direction `−J⁻¹F` in the free coordinates.
pub fn newton_step(x: &[f64], r: &ReducedParams, subspace: Subspace) -> Result<Vec<f64>> {
    let zeta = subspace.embed(x, r.n);
    let force = subspace.project(&position_force(&zeta, r)?);
    let jac = subspace.reduce_jacobian(&position_jacobian(&zeta, r)?);
    let rhs = DVector::from_iterator(force.len(), force.iter().map(|f| -f));
    jac.lu()
        .solve(&rhs)
        .map(|d| d.iter().copied().collect())
        .ok_or(Error::NoConvergence {
            residual: max_abs(&force),
            iterations: 0,
            last: x.to_vec(),
        })
}

/// Damped Newton from `guess` with default options apart from `tol`.
pub fn find_root(guess: &[f64], r: &ReducedParams, tol: f64) -> Result<StationaryPoint> {
    find_root_with(
        guess,
        r,
        &RootOptions {
            tol,
            ..RootOptions::default()
        },
    )
}

/// Damped Newton on the position force; `guess` lives in `opts.subspace`.
pub fn find_root_with(
    guess: &[f64],
    r: &ReducedParams,
    opts: &RootOptions,
) -> Result<StationaryPoint> {
    let x = newton_solve(guess, r, opts)?;
    analyze_point(
        &opts.subspace.embed(&x, r.n),
        r,
        opts.jacobian,
        opts.stability_tol,
    )
}

fn newton_solve(guess: &[f64], r: &ReducedParams, opts: &RootOptions) -> Result<Vec<f64>> {
    let n = r.n;
    let dim = opts.subspace.free_dim(n)?;
    if guess.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: guess.len(),
        });
    }
    r.require_adiabatic()?;
    let residual_of = |x: &[f64]| {
        let f = position_force_unchecked(&opts.subspace.embed(x, n), r);
        max_abs(&f)
    };
    let mut x = guess.to_vec();
    let mut res = residual_of(&x);
    for it in 0..opts.max_iter {
        if res < opts.tol {
            return Ok(x);
        }
        let Ok(mut step) = newton_step(&x, r, opts.subspace) else {
            return Err(Error::NoConvergence {
                residual: res,
                iterations: it,
                last: x,
            });
        };
        let len = max_abs(&step);
        if len > opts.max_step {
            step.iter_mut().for_each(|s| *s *= opts.max_step / len);
        }
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
            let trial_res = residual_of(&trial);
            if trial_res < (1.0 - 1e-4 * lambda) * res || lambda < 1e-3 {
                x = trial;
                res = trial_res;
                break;
            }
            lambda *= 0.5;
        }
        if !res.is_finite() {
            break;
        }
    }
    if res < opts.tol {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        residual: res,
        iterations: opts.max_iter,
        last: x,
    })
}

/// Builds the stationary-point record (field, spectrum, label) at `zeta`.
pub fn analyze_point(
    zeta: &[f64],
    r: &ReducedParams,
    kind: JacobianKind,
    stability_tol: f64,
) -> Result<StationaryPoint> {
    let residual = max_abs(&position_force(zeta, r)?);
    let eigenvalues = spectrum_at(zeta, r, kind)?;
    Ok(StationaryPoint {
        zeta: zeta.to_vec(),
        alpha: adiabatic_field_unchecked(zeta, r),
        stability: classify(&eigenvalues, stability_tol),
        eigenvalues,
        orbit_id: 0,
        residual,
    })
}

/// Box of Newton starting points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    /// Lower bounds on the free coordinates (radians).
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub grid_per_dim: usize,
    pub dedup_radius: f64,
    pub subspace: Subspace,
}

impl SearchRegion {
    /// Same bounds on every free coordinate.
    pub fn cube(dim: usize, lo: f64, hi: f64, grid_per_dim: usize, subspace: Subspace) -> Self {
        Self {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
            grid_per_dim,
            dedup_radius: DEFAULT_DEDUP_RADIUS,
            subspace,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let dim = self.subspace.free_dim(n)?;
        let bad = |reason| {
            Err(Error::InvalidParameter {
                field: "search_region",
                reason,
            })
        };
        if self.lo.len() != dim || self.hi.len() != dim {
            return bad("bounds must match the number of free coordinates");
        }
        if self.lo.iter().zip(&self.hi).any(|(a, b)| !(a < b)) {
            return bad("lower bounds must be below upper bounds");
        }
        if self.grid_per_dim < 2 {
            return bad("need at least two grid points per dimension");
        }
        if !(self.dedup_radius > 0.0) {
            return bad("dedup radius must be positive");
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| a < v && v < b)
    }

    /// All grid nodes in lexicographic order.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let dim = self.lo.len();
        let g = self.grid_per_dim;
        let total = g.pow(dim as u32);
        (0..total)
            .map(|mut idx| {
                let mut x = vec![0.0; dim];
                for d in (0..dim).rev() {
                    let i = idx % g;
                    idx /= g;
                    x[d] = self.lo[d] + (self.hi[d] - self.lo[d]) * i as f64 / (g - 1) as f64;
                }
                x
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub points: Vec<StationaryPoint>,
    pub newton_failures: usize,
    pub outside_region: usize,
}

impl SearchReport {
    pub fn count_linearly_stable(&self) -> usize {
        self.points
            .iter()
            .filter(|p| p.stability.is_linearly_stable())
            .count()
    }
}

/// Newton from every grid node, keeping distinct roots inside the region.
pub fn multistart_search(
    region: &SearchRegion,
    r: &ReducedParams,
    opts: &RootOptions,
) -> Result<SearchReport> {
    region.validate(r.n)?;
    r.require_adiabatic()?;
    let opts = RootOptions {
        subspace: region.subspace,
        ..*opts
    };
    let outcomes: Vec<Option<Vec<f64>>> = region
        .nodes()
        .par_iter()
        .map(|x0| newton_solve(x0, r, &opts).ok())
        .collect();

    let mut newton_failures = 0;
    let mut outside_region = 0;
    let mut roots: Vec<Vec<f64>> = Vec::new();
    for x in outcomes {
        let Some(x) = x else {
            newton_failures += 1;
            continue;
        };
        if !region.contains(&x) {
            outside_region += 1;
            continue;
        }
        let dup = roots.iter().any(|y| {
            x.iter()
                .zip(y)
                .all(|(a, b)| (a - b).abs() < region.dedup_radius)
        });
        if !dup {
            roots.push(x);
        }
    }
    roots.sort_by(|a, b| {
        max_abs(a).total_cmp(&max_abs(b)).then_with(|| {
            a.iter()
                .zip(b)
                .fold(std::cmp::Ordering::Equal, |o, (p, q)| {
                    o.then(p.total_cmp(q))
                })
        })
    });
    let mut points = roots
        .par_iter()
        .map(|x| {
            analyze_point(
                &region.subspace.embed(x, r.n),
                r,
                opts.jacobian,
                opts.stability_tol,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    symmetry_orbits(&mut points, r, 10.0 * region.dedup_radius);
    Ok(SearchReport {
        points,
        newton_failures,
        outside_region,
    })
}

fn close(a: &[f64], b: &[f64], radius: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= radius)
}

/// Partitions points into orbits of the symmetry group, writing `orbit_id`
/// on each point and returning the member indices of every orbit.
pub fn symmetry_orbits(
    points: &mut [StationaryPoint],
    r: &ReducedParams,
    radius: f64,
) -> Vec<Vec<usize>> {
    let zetas: Vec<Vec<f64>> = points.iter().map(|p| p.zeta.clone()).collect();
    let orbits = orbit_partition(&zetas, r.n, radius);
    for (id, members) in orbits.iter().enumerate() {
        for &i in members {
            points[i].orbit_id = id;
        }
    }
    orbits
}

/// Orbit partition of a set of position vectors under the 2n group elements.
pub fn orbit_partition(zetas: &[Vec<f64>], n: usize, radius: f64) -> Vec<Vec<usize>> {
    let group = SymmetryElement::all(n);
    let mut assigned = vec![false; zetas.len()];
    let mut orbits = Vec::new();
    for i in 0..zetas.len() {
        if assigned[i] {
            continue;
        }
        assigned[i] = true;
        let mut members = vec![i];
        for g in &group {
            let image = g.apply_positions(&zetas[i]);
            for (j, z) in zetas.iter().enumerate() {
                if !assigned[j] && close(&image, z, radius) {
                    assigned[j] = true;
                    members.push(j);
                }
            }
        }
        members.sort_unstable();
        orbits.push(members);
    }
    orbits
}

/// A local minimum of the lossless Lyapunov potential.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovMinimum {
    pub zeta: Vec<f64>,
    pub potential: f64,
    pub alpha: Complex64,
    pub orbit_id: usize,
    /// Lowest potential level among all minima found.
    pub ground: bool,
    /// Smallest Hessian eigenvalue (non-negative within tolerance).
    pub curvature: f64,
}

impl LyapunovMinimum {
    pub fn is_broken(&self, radius: f64) -> bool {
        self.zeta.iter().any(|z| z.abs() > radius)
    }
}

/// Uniform random starts in `(−half_width, half_width)^n`.
pub fn random_starts(n: usize, count: usize, half_width: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..n)
                .map(|_| rng.random_range(-half_width..half_width))
                .collect()
        })
        .collect()
}

/// Local minimization of the lossless Lyapunov potential from every start
/// (BFGS, then Newton polish on the exact Hessian), deduplicated and
/// checked to be true minima.
pub fn lyapunov_minimize(
    starts: &[Vec<f64>],
    r: &ReducedParams,
    tol: f64,
) -> Result<Vec<LyapunovMinimum>> {
    if r.kappa_t != 0.0 {
        return Err(Error::LossyCavity);
    }
    r.require_adiabatic()?;
    for s in starts {
        if s.len() != r.n {
            return Err(Error::DimensionMismatch {
                expected: r.n,
                got: s.len(),
            });
        }
    }
    let found: Vec<Option<(Vec<f64>, f64)>> = starts
        .par_iter()
        .map(|s| minimize_from(s, r, tol))
        .collect();

    let radius = DEFAULT_DEDUP_RADIUS;
    let mut minima: Vec<LyapunovMinimum> = Vec::new();
    for (zeta, curvature) in found.into_iter().flatten() {
        if minima.iter().any(|m| close(&m.zeta, &zeta, radius)) {
            continue;
        }
        minima.push(LyapunovMinimum {
            potential: lyapunov_potential(&zeta, r)?,
            alpha: adiabatic_field_unchecked(&zeta, r),
            zeta,
            orbit_id: 0,
            ground: false,
            curvature,
        });
    }
    minima.sort_by(|a, b| {
        a.potential
            .total_cmp(&b.potential)
            .then_with(|| a.alpha.arg().total_cmp(&b.alpha.arg()))
    });
    let zetas: Vec<Vec<f64>> = minima.iter().map(|m| m.zeta.clone()).collect();
    for (id, members) in orbit_partition(&zetas, r.n, 10.0 * radius)
        .iter()
        .enumerate()
    {
        for &i in members {
            minima[i].orbit_id = id;
        }
    }
    if let Some(lowest) = minima.first().map(|m| m.potential) {
        let band = 1e-9 * (1.0 + lowest.abs());
        for m in &mut minima {
            m.ground = m.potential <= lowest + band;
        }
    }
    Ok(minima)
}

/// Broken-symmetry minima on the lowest potential level.
pub fn ground_orbit(minima: &[LyapunovMinimum]) -> Vec<&LyapunovMinimum> {
    minima
        .iter()
        .filter(|m| m.ground && m.is_broken(DEFAULT_DEDUP_RADIUS))
        .collect()
}

fn minimize_from(start: &[f64], r: &ReducedParams, tol: f64) -> Option<(Vec<f64>, f64)> {
    let n = r.n;
    let potential = |x: &[f64]| lyapunov_potential(x, r).unwrap_or(f64::INFINITY);
    let gradient = |x: &[f64]| -> DVector<f64> {
        DVector::from_iterator(n, position_force_unchecked(x, r).into_iter().map(|f| -f))
    };

    let mut x = DVector::from_column_slice(start);
    let mut g = gradient(x.as_slice());
    let mut v = potential(x.as_slice());
    let mut inv_h = DMatrix::<f64>::identity(n, n);
    for _ in 0..500 {
        if g.amax() < tol.max(1e-8) {
            break;
        }
        let mut dir = -(&inv_h * &g);
        if dir.dot(&g) >= 0.0 {
            inv_h = DMatrix::identity(n, n);
            dir = -g.clone();
        }
        let slope = dir.dot(&g);
        let mut step = 1.0;
        let (x_new, v_new) = loop {
            let trial = &x + step * &dir;
            let vt = potential(trial.as_slice());
            if vt <= v + 1e-4 * step * slope || step < 1e-12 {
                break (trial, vt);
            }
            step *= 0.5;
        };
        let g_new = gradient(x_new.as_slice());
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-14 {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(n, n);
            let left = &eye - rho * &s * y.transpose();
            let right = &eye - rho * &y * s.transpose();
            inv_h = &left * &inv_h * &right + rho * &s * s.transpose();
        }
        x = x_new;
        g = g_new;
        v = v_new;
    }

    // Newton polish on the exact Hessian (−B at κ = 0).
    for _ in 0..20 {
        if g.amax() < 1e-13 {
            break;
        }
        let hess = -position_jacobian(x.as_slice(), r).ok()?;
        let Some(dx) = hess.lu().solve(&(-&g)) else {
            break;
        };
        if dx.amax() > 1e-2 {
            break;
        }
        x += dx;
        g = gradient(x.as_slice());
    }
    if g.amax() > tol {
        return None;
    }
    let hess = -position_jacobian(x.as_slice(), r).ok()?;
    let hess = (&hess + hess.transpose()) * 0.5;
    let curvature = hess.symmetric_eigenvalues().min();
    (curvature >= -tol).then(|| (x.iter().copied().collect(), curvature))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::finite_difference_jacobian;
    use crate::model::adiabatic_force;
    use crate::params::PhysicalParams;
    use std::f64::consts::PI;

    fn params(n: usize) -> ReducedParams {
        PhysicalParams::reference(n).reduce().unwrap()
    }

    fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).amax() / a.amax().max(1.0)
    }

    #[test]
    fn classification_examples() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        assert_eq!(
            classify(&[c(-1.0, 0.0), c(-2.0, 0.0)], 1e-9),
            Stability::Stable
        );
        assert_eq!(
            classify(&[c(0.1, 1.0), c(0.1, -1.0)], 1e-9),
            Stability::Unstable
        );
        assert_eq!(
            classify(&[c(0.0, 1.0), c(0.0, -1.0)], 1e-9),
            Stability::Marginal
        );
    }

    #[test]
    fn adiabatic_jacobian_matches_finite_differences() {
        let r = params(5);
        let zeta = [0.4, -1.2, 0.9, 1.7, -0.3];
        let pi = [0.2, 0.1, -0.4, 0.0, 0.3];
        let analytic = adiabatic_jacobian(&zeta, &r).unwrap();
        let numeric = finite_difference_jacobian(
            |y| {
                let m = MechState::from_slice(y);
                adiabatic_force(&m, &r).unwrap().to_vec()
            },
            &[zeta.as_slice(), pi.as_slice()].concat(),
            1e-6,
        );
        assert!(rel_diff(&analytic, &numeric) < 1e-6);
    }

    #[test]
    fn full_jacobian_matches_finite_differences() {
        let r = params(4);
        let s = FullState {
            alpha: Complex64::new(1.3, -0.7),
            mech: MechState {
                zeta: vec![0.4, -1.2, 0.9, 1.7],
                pi: vec![0.2, 0.1, -0.4, 0.0],
            },
        };
        let analytic = full_jacobian(&s, &r);
        let numeric = finite_difference_jacobian(
            |y| crate::model::full_drift(&FullState::from_slice(y), &r).to_vec(),
            &s.to_vec(),
            1e-6,
        );
        assert!(rel_diff(&analytic, &numeric) < 1e-6);
    }

    #[test]
    fn undriven_spectra() {
        let p = PhysicalParams {
            omega_pump: 0.0,
            ..PhysicalParams::reference(3)
        };
        let r = p.reduce().unwrap();
        let ev = eigenvalues(&adiabatic_jacobian(&[0.0; 3], &r).unwrap());
        assert_eq!(ev.len(), 6);
        for z in &ev {
            assert!(z.re.abs() < 1e-12 && (z.im.abs() - 1.0).abs() < 1e-12);
        }
        assert_eq!(ev.iter().filter(|z| z.im > 0.0).count(), 3);

        let ev = eigenvalues(&full_jacobian(&FullState::origin(3), &r));
        let cavity = Complex64::new(-r.kappa_t, r.delta);
        assert!(ev.iter().any(|z| (z - cavity).norm() < 1e-10));
        assert!(ev.iter().any(|z| (z - cavity.conj()).norm() < 1e-10));
        assert_eq!(
            ev.iter().filter(|z| (z.norm() - 1.0).abs() < 1e-12).count(),
            6
        );
    }

    #[test]
    fn origin_root() {
        let r = params(4);
        let p = find_root(&[0.0; 4], &r, 1e-12).unwrap();
        assert_eq!(p.residual, 0.0);
        assert_eq!(p.zeta, vec![0.0; 4]);
    }

    #[test]
    fn newton_step_matches_finite_difference_solve() {
        let r = params(4);
        let x = [0.9, 1.1, -0.8, -1.2];
        let step = newton_step(&x, &r, Subspace::Full).unwrap();
        let jac = finite_difference_jacobian(|z| position_force(z, &r).unwrap(), &x, 1e-6);
        let f = position_force(&x, &r).unwrap();
        let fd = jac
            .lu()
            .solve(&DVector::from_iterator(4, f.iter().map(|v| -v)))
            .unwrap();
        for i in 0..4 {
            assert!((step[i] - fd[i]).abs() < 1e-6 * fd.amax());
        }
    }

    #[test]
    fn nonconvergence_reports_last_iterate() {
        let r = params(4);
        let opts = RootOptions {
            max_iter: 1,
            tol: 1e-300,
            ..RootOptions::default()
        };
        match find_root_with(&[0.9, 1.1, -0.8, -1.2], &r, &opts) {
            Err(Error::NoConvergence { last, .. }) => assert_eq!(last.len(), 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn antipodal_subspace_round_trip() {
        let s = Subspace::AntipodalPairs;
        let z = s.embed(&[0.3, -0.5], 4);
        assert_eq!(z, vec![0.3, -0.5, -0.3, 0.5]);
        assert_eq!(s.project(&z), vec![0.3, -0.5]);
        assert!(s.free_dim(3).is_err());
    }

    #[test]
    fn weak_drive_has_only_the_origin() {
        let p = PhysicalParams {
            omega_pump: 2.0 * PI * 2e6,
            delta_pc: -2.0 * PI * 50e6,
            ..PhysicalParams::reference(4)
        };
        let r = p.reduce().unwrap();
        let region = SearchRegion::cube(2, -PI / 2.0, PI / 2.0, 15, Subspace::AntipodalPairs);
        let report = multistart_search(&region, &r, &RootOptions::default()).unwrap();
        assert_eq!(report.points.len(), 1);
        assert!(report.points[0].is_origin(1e-9));
    }

    #[test]
    fn origin_is_its_own_orbit() {
        let r = params(4);
        let mut pts = vec![analyze_point(&[0.0; 4], &r, JacobianKind::Full, 1e-9).unwrap()];
        assert_eq!(symmetry_orbits(&mut pts, &r, 1e-6), vec![vec![0]]);
    }

    #[test]
    fn lyapunov_requires_lossless_cavity() {
        let r = params(3);
        assert_eq!(
            lyapunov_minimize(&[vec![0.1; 3]], &r, 1e-9),
            Err(Error::LossyCavity)
        );
    }

    #[test]
    fn undriven_lyapunov_minimum_is_origin() {
        let p = PhysicalParams {
            omega_pump: 0.0,
            ..PhysicalParams::reference_lossless(3)
        };
        let r = p.reduce().unwrap();
        let minima = lyapunov_minimize(&random_starts(3, 20, 1.5, 1), &r, 1e-10).unwrap();
        assert_eq!(minima.len(), 1);
        assert!(minima[0].zeta.iter().all(|z| z.abs() < 1e-9));
        assert!(ground_orbit(&minima).is_empty());
    }

    #[test]
    fn lyapunov_minima_sit_near_quarter_wavelength() {
        let r = PhysicalParams::reference_lossless(4).reduce().unwrap();
        let minima = lyapunov_minimize(&random_starts(4, 200, PI / 2.0, 3), &r, 1e-10).unwrap();
        let ground = ground_orbit(&minima);
        assert_eq!(ground.len(), 4);
        for m in ground {
            for z in &m.zeta {
                assert!((z.abs() - PI / 2.0).abs() < 0.15, "{z}");
            }
        }
    }
}
