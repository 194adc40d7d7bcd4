//! Dormand–Prince 5(4) with step-size control and the standard fourth-order
//! continuous extension for sampling between steps.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense-output weights.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

/// Output of an integration: samples at the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Integrates the autonomous system `dy/dt = f(y)` from `t = 0` and records
/// the state at each entry of `sample_times` (increasing, within `[0, t_end]`).
pub fn dopri5<F>(
    mut f: F,
    y0: &[f64],
    t_end: f64,
    sample_times: &[f64],
    ctl: &StepControl,
) -> Result<Solution>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let dim = y0.len();
    let mut sol = Solution {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
        accepted_steps: 0,
        rejected_steps: 0,
    };
    if y0.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { t: 0.0 });
    }

    let mut next_sample = 0;
    while next_sample < sample_times.len() && sample_times[next_sample] <= 0.0 {
        sol.times.push(sample_times[next_sample]);
        sol.states.push(y0.to_vec());
        next_sample += 1;
    }

    let mut y = y0.to_vec();
    let mut k = [(); 7].map(|_| vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    let mut cont = [(); 5].map(|_| vec![0.0; dim]);

    f(&y, &mut k[0]);
    let mut t = 0.0;
    let mut h = initial_step(&mut f, &y, &k[0], ctl, t_end, &mut tmp, &mut y_new);
    let h_min = 16.0 * f64::EPSILON * t_end.max(1.0);
    let mut last_rejected = false;

    while t < t_end {
        if sol.accepted_steps + sol.rejected_steps >= ctl.max_steps {
            return Err(Error::TooManySteps {
                t,
                steps: ctl.max_steps,
            });
        }
        if t + h > t_end {
            h = t_end - t;
        }
        if h < h_min && t + h < t_end {
            return Err(Error::StepSizeUnderflow { t, h });
        }

        for i in 0..dim {
            tmp[i] = y[i] + h * A21 * k[0][i];
        }
        f(&tmp, &mut k[1]);
        for i in 0..dim {
            tmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        f(&tmp, &mut k[2]);
        for i in 0..dim {
            tmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        f(&tmp, &mut k[3]);
        for i in 0..dim {
            tmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        f(&tmp, &mut k[4]);
        for i in 0..dim {
            tmp[i] = y[i]
                + h * (A61 * k[0][i]
                    + A62 * k[1][i]
                    + A63 * k[2][i]
                    + A64 * k[3][i]
                    + A65 * k[4][i]);
        }
        f(&tmp, &mut k[5]);
        for i in 0..dim {
            y_new[i] = y[i]
                + h * (A71 * k[0][i]
                    + A73 * k[2][i]
                    + A74 * k[3][i]
                    + A75 * k[4][i]
                    + A76 * k[5][i]);
        }
        f(&y_new, &mut k[6]);

        let mut norm = 0.0;
        for i in 0..dim {
            err[i] = h
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k[6][i]);
            let scale = ctl.abs_tol + ctl.rel_tol * y[i].abs().max(y_new[i].abs());
            norm += (err[i] / scale).powi(2);
        }
        let norm = (norm / dim.max(1) as f64).sqrt();

        if !norm.is_finite() {
            if y_new.iter().any(|x| !x.is_finite()) && h <= h_min {
                return Err(Error::NonFinite { t });
            }
            h *= FAC_MIN;
            sol.rejected_steps += 1;
            last_rejected = true;
            continue;
        }

        if norm <= 1.0 {
            for i in 0..dim {
                let dy = y_new[i] - y[i];
                let bspl = h * k[0][i] - dy;
                cont[0][i] = y[i];
                cont[1][i] = dy;
                cont[2][i] = bspl;
                cont[3][i] = dy - h * k[6][i] - bspl;
                cont[4][i] = h
                    * (D1 * k[0][i]
                        + D3 * k[2][i]
                        + D4 * k[3][i]
                        + D5 * k[4][i]
                        + D6 * k[5][i]
                        + D7 * k[6][i]);
            }
            let t_new = if t_end - (t + h) <= h_min {
                t_end
            } else {
                t + h
            };
            while next_sample < sample_times.len() && sample_times[next_sample] <= t_new {
                let theta = ((sample_times[next_sample] - t) / h).clamp(0.0, 1.0);
                let th1 = 1.0 - theta;
                let state: Vec<f64> = (0..dim)
                    .map(|i| {
                        cont[0][i]
                            + theta
                                * (cont[1][i]
                                    + th1 * (cont[2][i] + theta * (cont[3][i] + th1 * cont[4][i])))
                    })
                    .collect();
                sol.times.push(sample_times[next_sample]);
                sol.states.push(state);
                next_sample += 1;
            }

            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            t = t_new;
            sol.accepted_steps += 1;
            if y.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { t });
            }

            let mut fac = SAFETY * norm.powf(-0.2);
            if !fac.is_finite() {
                fac = FAC_MAX;
            }
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(ctl.max_step);
            last_rejected = false;
        } else {
            let fac = (SAFETY * norm.powf(-0.2)).clamp(FAC_MIN, 1.0);
            h *= fac;
            sol.rejected_steps += 1;
            last_rejected = true;
        }
    }
    Ok(sol)
}

/// Hairer's starting-step heuristic.
fn initial_step<F>(
    f: &mut F,
    y: &[f64],
    dy: &[f64],
    ctl: &StepControl,
    t_end: f64,
    tmp: &mut [f64],
    f1: &mut [f64],
) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    let dim = y.len().max(1) as f64;
    let scale = |i: usize| ctl.abs_tol + ctl.rel_tol * y[i].abs();
    let d0 = (y
        .iter()
        .enumerate()
        .map(|(i, v)| (v / scale(i)).powi(2))
        .sum::<f64>()
        / dim)
        .sqrt();
    let d1 = (dy
        .iter()
        .enumerate()
        .map(|(i, v)| (v / scale(i)).powi(2))
        .sum::<f64>()
        / dim)
        .sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(ctl.max_step).min(t_end);
    for i in 0..y.len() {
        tmp[i] = y[i] + h0 * dy[i];
    }
    f(tmp, f1);
    let d2 = (f1
        .iter()
        .zip(dy)
        .enumerate()
        .map(|(i, (a, b))| ((a - b) / scale(i)).powi(2))
        .sum::<f64>()
        / dim)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(ctl.max_step).min(t_end)
}

/// Uniform sampling grid `0, dt, 2dt, …` with `t_end` always included.
pub fn sample_grid(t_end: f64, every: f64) -> Vec<f64> {
    let count = (t_end / every).floor() as usize;
    let mut times: Vec<f64> = (0..=count).map(|i| i as f64 * every).collect();
    if times.last().is_some_and(|&t| t_end - t > 1e-9 * every) {
        times.push(t_end);
    } else if let Some(last) = times.last_mut() {
        *last = t_end;
    }
    times
}
