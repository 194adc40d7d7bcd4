//! Phase classification over (Ω, Δpc), branch continuation along line cuts
//! and force zero-level sets for the four-group symmetric subspace.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{linspace, polylines, zero_sets, Lattice, Point};
use crate::error::{Error, Result};
use crate::model::position_force_unchecked;
use crate::params::{PhysicalParams, ReducedParams};
use crate::state::SymmetryElement;
use crate::stationary::{
    analyze_point, find_root_with, multistart_search, orbit_partition, JacobianKind, RootOptions,
    SearchRegion, SearchReport, StationaryPoint, Subspace,
};

/// Default discontinuity threshold on the tracked position (radians).
pub const JUMP_THRESHOLD: f64 = 0.1;
/// Roots closer than this to ζ = 0 count as the symmetric state.
pub const ORIGIN_RADIUS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseLabel {
    Normal,
    DispersiveBroken,
    ReactiveBroken,
    Indeterminate,
}

impl PhaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseLabel::Normal => "normal",
            PhaseLabel::DispersiveBroken => "dispersive-broken",
            PhaseLabel::ReactiveBroken => "reactive-broken",
            PhaseLabel::Indeterminate => "indeterminate",
        }
    }
}

/// Normal when only the symmetric root exists, dispersive-broken when some
/// broken root is linearly stable, reactive-broken when broken roots exist
/// but all grow. A search that misses the symmetric root is incomplete.
pub fn classify_phase(report: &SearchReport) -> PhaseLabel {
    let (origin, broken): (Vec<&StationaryPoint>, Vec<&StationaryPoint>) = report
        .points
        .iter()
        .partition(|p| p.is_origin(ORIGIN_RADIUS));
    if origin.is_empty() {
        PhaseLabel::Indeterminate
    } else if broken.is_empty() {
        PhaseLabel::Normal
    } else if broken.iter().any(|p| p.stability.is_linearly_stable()) {
        PhaseLabel::DispersiveBroken
    } else {
        PhaseLabel::ReactiveBroken
    }
}

/// Index of the group whose position is tracked (the third, when present).
pub fn tracked_index(n: usize) -> usize {
    2.min(n - 1)
}

/// Maps `zeta` by the group element that makes the tracked coordinate
/// positive and smallest. `None` when it vanishes in every image.
pub fn tracked_representative(zeta: &[f64]) -> Option<Vec<f64>> {
    let idx = tracked_index(zeta.len());
    SymmetryElement::all(zeta.len())
        .into_iter()
        .map(|g| g.apply_positions(zeta))
        .filter(|z| z[idx] > ORIGIN_RADIUS)
        .min_by(|a, b| a[idx].total_cmp(&b[idx]))
}

/// The broken root to follow: the stable one with the strongest cavity field
/// (any broken root if none is stable), in tracked representation.
pub fn select_tracked(points: &[StationaryPoint]) -> Option<(Vec<f64>, bool)> {
    let broken = || points.iter().filter(|p| !p.is_origin(ORIGIN_RADIUS));
    let stable: Vec<&StationaryPoint> = broken()
        .filter(|p| p.stability.is_linearly_stable())
        .collect();
    let is_stable = !stable.is_empty();
    let pool: Vec<&StationaryPoint> = if is_stable {
        stable
    } else {
        broken().collect()
    };
    pool.into_iter()
        .max_by(|a, b| a.alpha.norm().total_cmp(&b.alpha.norm()))
        .and_then(|p| tracked_representative(&p.zeta))
        .map(|z| (z, is_stable))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePoint {
    /// rad/s
    pub omega_pump: f64,
    /// rad/s
    pub delta_pc: f64,
    pub tracked_zeta: Option<f64>,
    pub phase_label: PhaseLabel,
    /// Whether the tracked root is linearly stable.
    pub stable: bool,
    pub n_roots: usize,
    pub n_stable: usize,
}

/// Rectangular (Ω, Δpc) lattice in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub omegas: Vec<f64>,
    pub deltas: Vec<f64>,
}

/// Classifies every grid node; output is ordered Δpc-major, then Ω.
pub fn sweep(
    grid: &PhaseGrid,
    p: &PhysicalParams,
    region: &SearchRegion,
    opts: &RootOptions,
) -> Result<Vec<PhasePoint>> {
    p.validate()?;
    region.validate(p.n)?;
    let nodes: Vec<(f64, f64)> = grid
        .deltas
        .iter()
        .flat_map(|&d| grid.omegas.iter().map(move |&o| (o, d)))
        .collect();
    Ok(nodes
        .par_iter()
        .map(|&(omega_pump, delta_pc)| phase_point(omega_pump, delta_pc, p, region, opts))
        .collect())
}

fn phase_point(
    omega_pump: f64,
    delta_pc: f64,
    p: &PhysicalParams,
    region: &SearchRegion,
    opts: &RootOptions,
) -> PhasePoint {
    let node = PhysicalParams {
        omega_pump,
        delta_pc,
        ..*p
    };
    let report = node
        .reduce()
        .and_then(|r| multistart_search(region, &r, opts));
    match report {
        Ok(report) => {
            let tracked = select_tracked(&report.points);
            PhasePoint {
                omega_pump,
                delta_pc,
                tracked_zeta: tracked.as_ref().map(|(z, _)| z[tracked_index(p.n)]),
                phase_label: classify_phase(&report),
                stable: tracked.is_some_and(|(_, s)| s),
                n_roots: report.points.len(),
                n_stable: report.count_linearly_stable(),
            }
        }
        Err(_) => PhasePoint {
            omega_pump,
            delta_pc,
            tracked_zeta: None,
            phase_label: PhaseLabel::Indeterminate,
            stable: false,
            n_roots: 0,
            n_stable: 0,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineCutOptions {
    /// Where the starting root is sought at the largest Ω.
    pub region: SearchRegion,
    pub root: RootOptions,
    /// Continuation substeps between neighbouring grid values.
    pub substeps: usize,
    pub bisection_steps: usize,
    pub jump_threshold: f64,
    /// Largest accepted change of any position per substep (radians).
    pub max_shift: f64,
}

impl LineCutOptions {
    pub fn for_groups(n: usize) -> Self {
        let subspace = if n % 2 == 0 {
            Subspace::AntipodalPairs
        } else {
            Subspace::Full
        };
        let dim = subspace.free_dim(n).expect("subspace matches parity");
        let grid = if dim <= 2 { 25 } else { 9 };
        Self {
            region: SearchRegion::cube(dim, -PI / 2.0, PI / 2.0, grid, subspace),
            root: RootOptions {
                subspace,
                ..RootOptions::default()
            },
            substeps: 4,
            bisection_steps: 50,
            jump_threshold: JUMP_THRESHOLD,
            max_shift: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineCut {
    /// rad/s
    pub delta_pc: f64,
    /// Increasing pump grid (rad/s).
    pub omegas: Vec<f64>,
    /// Tracked position on the stable branch, `None` off the branch.
    pub branch: Vec<Option<f64>>,
    /// Refined lowest Ω reached by the branch (rad/s).
    pub branch_end: Option<f64>,
    /// Tracked position at `branch_end`.
    pub end_zeta: Option<f64>,
    /// `branch_end` when the branch stops at a finite displacement.
    pub jump_at: Option<f64>,
    pub jump_size: Option<f64>,
}

/// Follows the stable broken branch from the largest Ω downward until it
/// folds, merges with the symmetric root or loses stability.
pub fn line_cut(
    delta_pc: f64,
    omegas: &[f64],
    p: &PhysicalParams,
    opts: &LineCutOptions,
) -> Result<LineCut> {
    if omegas.is_empty() || omegas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter {
            field: "omegas",
            reason: "pump grid must be non-empty and strictly increasing",
        });
    }
    let at = |omega: f64| -> Result<ReducedParams> {
        PhysicalParams {
            omega_pump: omega,
            delta_pc,
            ..*p
        }
        .reduce()
    };
    let idx = tracked_index(p.n);
    let sub = opts.root.subspace;
    let mut cut = LineCut {
        delta_pc,
        omegas: omegas.to_vec(),
        branch: vec![None; omegas.len()],
        branch_end: None,
        end_zeta: None,
        jump_at: None,
        jump_size: None,
    };

    let top = omegas.len() - 1;
    let report = multistart_search(&opts.region, &at(omegas[top])?, &opts.root)?;
    let start = report
        .points
        .iter()
        .filter(|q| !q.is_origin(ORIGIN_RADIUS) && q.stability.is_linearly_stable())
        .max_by(|a, b| a.alpha.norm().total_cmp(&b.alpha.norm()))
        .and_then(|q| tracked_representative(&q.zeta))
        // the representative may leave the subspace only if it is not invariant
        .filter(|z| close_to(&sub.embed(&sub.project(z), p.n), z));
    let Some(start) = start else {
        return Ok(cut);
    };

    let mut x = sub.project(&start);
    cut.branch[top] = Some(start[idx]);
    let mut last_omega = omegas[top];
    for k in (0..top).rev() {
        match continue_to(&x, last_omega, omegas[k], &at, opts)? {
            Some(next) => {
                x = next;
                last_omega = omegas[k];
                cut.branch[k] = Some(sub.embed(&x, p.n)[idx]);
            }
            None => {
                // bisect between the last success and the failed value
                let (mut hi, mut lo) = (last_omega, omegas[k]);
                for _ in 0..opts.bisection_steps {
                    let mid = 0.5 * (hi + lo);
                    match continue_to(&x, hi, mid, &at, opts)? {
                        Some(next) => {
                            x = next;
                            hi = mid;
                        }
                        None => lo = mid,
                    }
                }
                last_omega = hi;
                break;
            }
        }
    }
    let end_zeta = sub.embed(&x, p.n)[idx];
    cut.branch_end = Some(last_omega);
    cut.end_zeta = Some(end_zeta);
    if last_omega > omegas[0] && end_zeta.abs() > opts.jump_threshold {
        cut.jump_at = Some(last_omega);
        cut.jump_size = Some(end_zeta.abs());
    }
    Ok(cut)
}

fn close_to(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
}

/// Walks the root from `from` to `to` in substeps; `None` if the branch is lost.
fn continue_to(
    x0: &[f64],
    from: f64,
    to: f64,
    at: &impl Fn(f64) -> Result<ReducedParams>,
    opts: &LineCutOptions,
) -> Result<Option<Vec<f64>>> {
    let mut x = x0.to_vec();
    let steps = opts.substeps.max(1);
    for s in 1..=steps {
        let omega = from + (to - from) * s as f64 / steps as f64;
        let r = at(omega)?;
        let Ok(next) = find_root_with(&x, &r, &opts.root) else {
            return Ok(None);
        };
        let moved = next
            .zeta
            .iter()
            .zip(opts.root.subspace.embed(&x, r.n))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if moved > opts.max_shift
            || next.is_origin(ORIGIN_RADIUS)
            || !next.stability.is_linearly_stable()
        {
            return Ok(None);
        }
        x = opts.root.subspace.project(&next.zeta);
    }
    Ok(Some(x))
}

/// Zero sets of the two independent force components for four groups
/// restricted to `z₁ = −z₃`, `z₂ = −z₄`, with their refined crossings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourData {
    pub first: Vec<Vec<Point>>,
    pub second: Vec<Vec<Point>>,
    /// Raw lattice crossings.
    pub crossings: Vec<Point>,
    /// Distinct roots obtained by Newton refinement of the crossings.
    pub roots: Vec<StationaryPoint>,
}

/// Samples the reduced forces on a `points × points` lattice covering
/// `(−half_width, half_width)²`.
pub fn contour_data(
    p: &PhysicalParams,
    points: usize,
    half_width: f64,
    opts: &RootOptions,
) -> Result<ContourData> {
    if p.n != 4 {
        return Err(Error::Unsupported("force contours need four groups"));
    }
    if points < 2 || !(half_width > 0.0) {
        return Err(Error::InvalidParameter {
            field: "contour_grid",
            reason: "need at least two points and a positive extent",
        });
    }
    let r = p.reduce()?;
    r.require_adiabatic()?;
    let sub = Subspace::AntipodalPairs;
    let axis = linspace(-half_width, half_width, points);
    let force = |x: f64, y: f64| position_force_unchecked(&sub.embed(&[x, y], 4), &r);
    let fa = Lattice::sample(axis.clone(), axis.clone(), |x, y| force(x, y)[0]);
    let fb = Lattice::sample(axis.clone(), axis, |x, y| force(x, y)[1]);
    let (sa, sb, crossings) = zero_sets(&fa, &fb);

    let opts = RootOptions {
        subspace: sub,
        ..*opts
    };
    let mut roots: Vec<StationaryPoint> = Vec::new();
    // The symmetric root can sit on a lattice node, where no crossing is seen.
    let origin: Point = [0.0, 0.0];
    for c in crossings.iter().chain(std::iter::once(&origin)) {
        let Ok(root) = find_root_with(c, &r, &opts) else {
            continue;
        };
        let inside = root.zeta[..2].iter().all(|z| z.abs() < half_width);
        let dup = roots.iter().any(|q| close(&q.zeta, &root.zeta, 1e-6));
        if inside && !dup {
            roots.push(root);
        }
    }
    roots.sort_by(|a, b| {
        a.zeta[0]
            .total_cmp(&b.zeta[0])
            .then(a.zeta[1].total_cmp(&b.zeta[1]))
    });
    let zetas: Vec<Vec<f64>> = roots.iter().map(|q| q.zeta.clone()).collect();
    for (id, members) in orbit_partition(&zetas, 4, 1e-5).iter().enumerate() {
        for &i in members {
            roots[i].orbit_id = id;
        }
    }
    Ok(ContourData {
        first: polylines(&sa),
        second: polylines(&sb),
        crossings,
        roots,
    })
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Re-evaluates a root's stability with the other Jacobian; returns
/// `(adiabatic, full)` labels.
pub fn stability_pair(
    point: &StationaryPoint,
    r: &ReducedParams,
    tol: f64,
) -> Result<(crate::stationary::Stability, crate::stationary::Stability)> {
    let a = analyze_point(&point.zeta, r, JacobianKind::Adiabatic, tol)?;
    let f = analyze_point(&point.zeta, r, JacobianKind::Full, tol)?;
    Ok((a.stability, f.stability))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MHZ: f64 = 2.0 * PI * 1e6;

    fn dispersive(omega_mhz: f64) -> PhysicalParams {
        PhysicalParams {
            omega_pump: omega_mhz * MHZ,
            delta_pc: -50.0 * MHZ,
            ..PhysicalParams::reference(4)
        }
    }

    fn region() -> SearchRegion {
        SearchRegion::cube(2, -PI / 2.0, PI / 2.0, 21, Subspace::AntipodalPairs)
    }

    #[test]
    fn weak_pump_is_normal() {
        let r = dispersive(5.0).reduce().unwrap();
        let rep = multistart_search(&region(), &r, &RootOptions::default()).unwrap();
        assert_eq!(classify_phase(&rep), PhaseLabel::Normal);
        assert_eq!(rep.points.len(), 1);
    }

    #[test]
    fn strong_dispersive_pump_has_nine_roots() {
        let r = dispersive(60.0).reduce().unwrap();
        let rep = multistart_search(&region(), &r, &RootOptions::default()).unwrap();
        assert_eq!(rep.points.len(), 9);
        assert_eq!(rep.count_linearly_stable(), 4);
        assert_eq!(classify_phase(&rep), PhaseLabel::DispersiveBroken);
    }

    #[test]
    fn missing_origin_is_indeterminate() {
        let rep = SearchReport {
            points: vec![],
            newton_failures: 3,
            outside_region: 0,
        };
        assert_eq!(classify_phase(&rep), PhaseLabel::Indeterminate);
    }

    #[test]
    fn representative_is_positive_and_minimal() {
        let z = tracked_representative(&[0.3, -1.2, -0.3, 1.2]).unwrap();
        assert!(z[2] > 0.0);
        assert!((z[2] - 0.3).abs() < 1e-15);
        assert!(tracked_representative(&[0.0; 4]).is_none());
    }

    #[test]
    fn sweep_orders_nodes_and_labels() {
        let grid = PhaseGrid {
            omegas: vec![5.0 * MHZ, 60.0 * MHZ],
            deltas: vec![-50.0 * MHZ],
        };
        let pts = sweep(&grid, &dispersive(1.0), &region(), &RootOptions::default()).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].phase_label, PhaseLabel::Normal);
        assert!(pts[0].tracked_zeta.is_none());
        assert_eq!(pts[1].phase_label, PhaseLabel::DispersiveBroken);
        assert!(pts[1].stable && pts[1].tracked_zeta.unwrap() > 0.0);
    }

    #[test]
    fn unpumped_contours_are_the_axes() {
        let cd = contour_data(&dispersive(0.0), 40, 1.5, &RootOptions::default()).unwrap();
        assert_eq!(cd.roots.len(), 1);
        assert!(cd.roots[0].zeta.iter().all(|z| z.abs() < 1e-12));
        for line in cd.first.iter().flatten() {
            assert!(line[0].abs() < 1e-12);
        }
        for line in cd.second.iter().flatten() {
            assert!(line[1].abs() < 1e-12);
        }
    }

    #[test]
    fn contour_crossings_match_search() {
        let p = dispersive(60.0);
        let cd = contour_data(&p, 120, PI / 2.0, &RootOptions::default()).unwrap();
        assert_eq!(cd.roots.len(), 9);
        assert!(cd.roots.iter().all(|q| q.residual < 1e-10));
    }

    #[test]
    fn line_cut_rejects_unsorted_grid() {
        let opts = LineCutOptions::for_groups(4);
        assert!(line_cut(-4.0 * MHZ, &[2.0, 1.0], &dispersive(1.0), &opts).is_err());
    }
}
