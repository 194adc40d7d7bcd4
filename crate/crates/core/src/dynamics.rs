//! Time integration of the full and adiabatic equations, seeded ensembles
//! and endpoint clustering.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{dopri5, sample_grid, StepControl};
use crate::model::{adiabatic_drift_flat, adiabatic_field_unchecked, full_drift_flat};
use crate::params::ReducedParams;
use crate::state::{FullState, MechState, SymmetryElement};

/// Step-size control and output cadence, all in dimensionless time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_end: f64,
    pub max_step: f64,
    pub sample_every: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_max_steps() -> usize {
    50_000_000
}

impl Default for IntegratorControls {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            t_end: 100.0,
            max_step: 1.0,
            sample_every: 0.1,
            max_steps: default_max_steps(),
        }
    }
}

impl IntegratorControls {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field, reason| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter { field, reason })
            }
        };
        check(self.rel_tol > 0.0, "rel_tol", "must be positive")?;
        check(self.abs_tol > 0.0, "abs_tol", "must be positive")?;
        check(
            self.t_end > 0.0 && self.t_end.is_finite(),
            "t_end",
            "must be positive and finite",
        )?;
        check(self.max_step > 0.0, "max_step", "must be positive")?;
        check(self.sample_every > 0.0, "sample_every", "must be positive")?;
        check(self.max_steps > 0, "max_steps", "must be positive")
    }

    fn step_control(&self) -> StepControl {
        StepControl {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            max_steps: self.max_steps,
        }
    }
}

/// Sampled solution. Adiabatic runs store the slaved cavity field in each
/// state, so `states[i].alpha == alpha_series[i]` in both cases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FullState>,
    pub alpha_series: Vec<Complex64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &FullState {
        self.states
            .last()
            .expect("trajectories hold at least one sample")
    }

    pub fn final_alpha(&self) -> Complex64 {
        *self
            .alpha_series
            .last()
            .expect("trajectories hold at least one sample")
    }
}

/// Integrates the coupled cavity and mechanics equations.
pub fn integrate_full(
    s0: &FullState,
    r: &ReducedParams,
    ctl: &IntegratorControls,
) -> Result<Trajectory> {
    ctl.validate()?;
    s0.mech.check(r.n)?;
    let times = sample_grid(ctl.t_end, ctl.sample_every);
    let sol = dopri5(
        |y, dy| full_drift_flat(y, dy, r),
        &s0.to_vec(),
        ctl.t_end,
        &times,
        &ctl.step_control(),
    )?;
    let states: Vec<FullState> = sol
        .states
        .iter()
        .map(|y| FullState::from_slice(y))
        .collect();
    Ok(Trajectory {
        alpha_series: states.iter().map(|s| s.alpha).collect(),
        times: sol.times,
        states,
    })
}

/// Integrates the mechanics with the cavity field slaved to its steady state.
pub fn integrate_adiabatic(
    m0: &MechState,
    r: &ReducedParams,
    ctl: &IntegratorControls,
) -> Result<Trajectory> {
    ctl.validate()?;
    m0.check(r.n)?;
    r.require_adiabatic()?;
    let times = sample_grid(ctl.t_end, ctl.sample_every);
    let sol = dopri5(
        |y, dy| adiabatic_drift_flat(y, dy, r),
        &m0.to_vec(),
        ctl.t_end,
        &times,
        &ctl.step_control(),
    )?;
    let states: Vec<FullState> = sol
        .states
        .iter()
        .map(|y| {
            let mech = MechState::from_slice(y);
            FullState {
                alpha: adiabatic_field_unchecked(&mech.zeta, r),
                mech,
            }
        })
        .collect();
    Ok(Trajectory {
        alpha_series: states.iter().map(|s| s.alpha).collect(),
        times: sol.times,
        states,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub count: usize,
    pub seed: u64,
    /// Standard deviation of the initial positions (radians).
    #[serde(default = "default_position_scale")]
    pub position_scale: f64,
    #[serde(default)]
    pub momentum_scale: f64,
}

fn default_position_scale() -> f64 {
    1e-3 * std::f64::consts::PI
}

impl EnsembleSpec {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            position_scale: default_position_scale(),
            momentum_scale: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParameter {
                field: "count",
                reason: "must be at least 1",
            });
        }
        if !(self.position_scale >= 0.0 && self.momentum_scale >= 0.0) {
            return Err(Error::InvalidParameter {
                field: "position_scale",
                reason: "perturbation scales must be non-negative",
            });
        }
        Ok(())
    }

    /// The initial conditions, drawn in order from a single seeded stream.
    pub fn initial_states(&self, n: usize) -> Vec<FullState> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| {
                let mut draw = |scale: f64| -> Vec<f64> {
                    (0..n)
                        .map(|_| {
                            let x: f64 = StandardNormal.sample(&mut rng);
                            scale * x
                        })
                        .collect()
                };
                let zeta = draw(self.position_scale);
                let pi = draw(self.momentum_scale);
                FullState {
                    alpha: Complex64::new(0.0, 0.0),
                    mech: MechState { zeta, pi },
                }
            })
            .collect()
    }
}

/// Integrates every ensemble member with the full equations. Results are
/// in draw order; a failed member does not abort the others.
pub fn run_ensemble(
    spec: &EnsembleSpec,
    r: &ReducedParams,
    ctl: &IntegratorControls,
) -> Result<Vec<Result<Trajectory>>> {
    spec.validate()?;
    ctl.validate()?;
    Ok(spec
        .initial_states(r.n)
        .par_iter()
        .map(|s0| integrate_full(s0, r, ctl))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clusters {
    pub centroids: Vec<Complex64>,
    pub members: Vec<Vec<usize>>,
}

impl Clusters {
    pub fn count(&self) -> usize {
        self.centroids.len()
    }

    /// Cluster sizes, largest first.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.members.iter().map(Vec::len).collect();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }
}

/// Default clustering radius: a tenth of the largest endpoint magnitude.
pub fn default_cluster_radius(finals: &[Complex64]) -> f64 {
    0.1 * finals.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Single-linkage clustering of complex points. Clusters are ordered by
/// the first member index.
pub fn cluster_endpoints(finals: &[Complex64], radius: f64) -> Result<Clusters> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter {
            field: "radius",
            reason: "must be positive",
        });
    }
    let n = finals.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (finals[i] - finals[j]).norm() <= radius {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = members.len();
            members.push(Vec::new());
        }
        members[slot[r]].push(i);
    }
    let centroids = members
        .iter()
        .map(|m| m.iter().map(|&i| finals[i]).sum::<Complex64>() / m.len() as f64)
        .collect();
    Ok(Clusters { centroids, members })
}

/// Largest distance from a group image of a centroid to the nearest centroid.
pub fn orbit_closure_error(centroids: &[Complex64], r: &ReducedParams) -> f64 {
    let mut worst: f64 = 0.0;
    for g in SymmetryElement::all(r.n) {
        for c in centroids {
            let image = g.apply_alpha(*c, r);
            let nearest = centroids
                .iter()
                .map(|d| (image - d).norm())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
    }
    worst
}

/// Clusters that belong to the group orbit of the most populated one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolygonSummary {
    pub clusters: Clusters,
    pub radius: f64,
    /// Indices into `clusters` of the orbit-related clusters.
    pub vertices: Vec<usize>,
    /// Share of all points that sit in an orbit-related cluster.
    pub assigned_fraction: f64,
    /// `orbit_closure_error` of the vertex centroids.
    pub closure_error: f64,
}

impl PolygonSummary {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_centroids(&self) -> Vec<Complex64> {
        self.vertices
            .iter()
            .map(|&i| self.clusters.centroids[i])
            .collect()
    }
}

/// Clusters endpoints and keeps the clusters whose centroids lie within
/// `radius` of a group image of the largest cluster's centroid.
pub fn polygon_summary(
    finals: &[Complex64],
    r: &ReducedParams,
    radius: f64,
) -> Result<PolygonSummary> {
    let clusters = cluster_endpoints(finals, radius)?;
    let Some(anchor) =
        (0..clusters.count()).max_by_key(|&i| (clusters.members[i].len(), usize::MAX - i))
    else {
        return Ok(PolygonSummary {
            clusters,
            radius,
            vertices: vec![],
            assigned_fraction: 0.0,
            closure_error: 0.0,
        });
    };
    let c0 = clusters.centroids[anchor];
    let images: Vec<Complex64> = SymmetryElement::all(r.n)
        .iter()
        .map(|g| g.apply_alpha(c0, r))
        .collect();
    let vertices: Vec<usize> = (0..clusters.count())
        .filter(|&i| {
            images
                .iter()
                .any(|z| (z - clusters.centroids[i]).norm() <= radius)
        })
        .collect();
    let assigned: usize = vertices.iter().map(|&i| clusters.members[i].len()).sum();
    let centroids: Vec<Complex64> = vertices.iter().map(|&i| clusters.centroids[i]).collect();
    Ok(PolygonSummary {
        closure_error: orbit_closure_error(&centroids, r),
        assigned_fraction: assigned as f64 / finals.len() as f64,
        clusters,
        radius,
        vertices,
    })
}
