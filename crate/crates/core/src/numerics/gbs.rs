//! Gragg-Bulirsch-Stoer extrapolation integrator.
//!
//! The double-double paths cannot use the Runge-Kutta tableau: its
//! coefficients are f64 literals, which caps both the embedded error
//! estimate and the achievable accuracy near 1e-16. The modified midpoint
//! rule uses only factors of 2 and integer divisions, all exact (or
//! correctly rounded) in double-double, and polynomial extrapolation in h^2
//! reaches arbitrary even order, so tolerances down to ~1e-28 are practical.
//!
//! Step control is the classical scheme: build the Neville tableau column by
//! column with the harmonic substep sequence 2, 4, 6, ...; accept as soon as
//! the last two diagonal entries agree to tolerance, halve the step if the
//! tableau is exhausted.

use super::real::Real;
use super::rk::OdeSystem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct GbsOptions {
    /// Relative tolerance (scaled by 1 + |y|).
    pub tol: f64,
    /// Largest macro step; also bounds the node spacing used by shadow
    /// re-integration.
    pub h_max: f64,
    pub max_steps: usize,
    /// Maximum extrapolation columns.
    pub max_order: usize,
}

impl Default for GbsOptions {
    fn default() -> Self {
        GbsOptions {
            tol: 1e-22,
            h_max: 0.25,
            max_steps: 2_000_000,
            max_order: 12,
        }
    }
}

/// Node chain of an extrapolation integration: states at macro-step times
/// (no dense output; consumers re-anchor locally).
pub struct GbsSolution<S: Real, const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[S; N]>,
    pub n_steps: usize,
    pub n_rejected: usize,
    pub n_evals: usize,
}

impl<S: Real, const N: usize> GbsSolution<S, N> {
    pub fn final_state(&self) -> [S; N] {
        *self.states.last().unwrap()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Index of the last node at or before `t` (first node for earlier t).
    pub fn anchor_index(&self, t: f64) -> usize {
        let forward = self.t_end() >= self.times[0];
        let mut lo = 0usize;
        let mut hi = self.times.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let before = if forward {
                self.times[mid] <= t
            } else {
                self.times[mid] >= t
            };
            if before {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// One modified-midpoint traversal of [t, t+h] with n substeps.
///
/// Time is carried in the working scalar: an f64 time axis would leave a
/// ~1e-15 mismatch between the labeled and the integrated span, invisible to
/// the extrapolation but fatal to near-separatrix traces.
fn midpoint_pass<S: Real, const N: usize>(
    system: &impl OdeSystem<S, N>,
    ts: S,
    y: &[S; N],
    f0: &[S; N],
    h: S,
    n: usize,
    evals: &mut usize,
) -> [S; N] {
    let hs = h / S::from_f64(n as f64);
    let two = S::from_f64(2.0);
    let half = S::from_f64(0.5);

    let mut z_prev = *y;
    let mut z = *y;
    for c in 0..N {
        z[c] += hs * f0[c];
    }
    let mut f = [S::zero(); N];
    for k in 1..n {
        let tk = ts + hs * S::from_f64(k as f64);
        system.eval(tk, &z, &mut f);
        *evals += 1;
        let mut z_next = z_prev;
        for c in 0..N {
            z_next[c] += two * hs * f[c];
        }
        z_prev = z;
        z = z_next;
    }
    system.eval(ts + hs * S::from_f64(n as f64), &z, &mut f);
    *evals += 1;
    let mut out = [S::zero(); N];
    for c in 0..N {
        out[c] = half * (z[c] + z_prev[c] + hs * f[c]);
    }
    out
}

/// Integrate from t0 to t1 (either direction), recording every accepted
/// macro step.
pub fn integrate_gbs<S: Real, const N: usize>(
    system: &impl OdeSystem<S, N>,
    y0: [S; N],
    t0: f64,
    t1: f64,
    opts: &GbsOptions,
) -> Result<GbsSolution<S, N>> {
    let span = t1 - t0;
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };
    let kmax = opts.max_order.clamp(3, 16);

    let mut sol = GbsSolution {
        times: vec![t0],
        states: vec![y0],
        n_steps: 0,
        n_rejected: 0,
        n_evals: 0,
    };
    if span == 0.0 {
        return Ok(sol);
    }

    let t1_s = S::from_f64(t1);
    let mut t_s = S::from_f64(t0);
    let mut y = y0;
    let mut h = opts.h_max.min(span.abs()) * dir;
    // prev_row[k] = T_{j-1, k}; cur[k] = T_{j, k}
    let mut prev_row: Vec<[S; N]> = Vec::with_capacity(kmax);
    let mut cur: Vec<[S; N]> = Vec::with_capacity(kmax);

    let mut f0 = [S::zero(); N];
    loop {
        if sol.n_steps + sol.n_rejected >= opts.max_steps {
            return Err(Error::MaxSteps(opts.max_steps));
        }
        let remaining_s = t1_s - t_s;
        let remaining = remaining_s.to_f64();
        if remaining == 0.0 || remaining * dir <= 0.0 {
            break;
        }
        let last = h.abs() >= remaining.abs();
        let h_s = if last { remaining_s } else { S::from_f64(h) };
        {
            let t = t_s.to_f64();
            if t + h_s.to_f64() == t {
                return Err(Error::StepSizeUnderflow { t });
            }
        }

        system.eval(t_s, &y, &mut f0);
        sol.n_evals += 1;

        let mut accepted = false;
        let mut err = f64::INFINITY;
        let mut j_used = 0usize;
        prev_row.clear();
        for j in 0..kmax {
            let n_j = 2 * (j + 1);
            cur.clear();
            cur.push(midpoint_pass(
                system,
                t_s,
                &y,
                &f0,
                h_s,
                n_j,
                &mut sol.n_evals,
            ));
            for k in 1..=j {
                // T_{j,k} from T_{j,k-1} and T_{j-1,k-1}
                let n_jk = 2 * (j - k + 1);
                let r = (n_j as f64 / n_jk as f64).powi(2);
                let denom = S::from_f64(r - 1.0);
                let a = cur[k - 1];
                let b = prev_row[k - 1];
                let mut better = a;
                for c in 0..N {
                    better[c] = a[c] + (a[c] - b[c]) / denom;
                }
                cur.push(better);
            }
            if j > 0 {
                let a = cur[j];
                let b = cur[j - 1];
                let mut e: f64 = 0.0;
                for c in 0..N {
                    let scale = 1.0 + a[c].abs().to_f64().max(b[c].abs().to_f64());
                    e = e.max((a[c] - b[c]).abs().to_f64() / scale);
                }
                err = e;
                if err <= opts.tol {
                    j_used = j;
                    accepted = true;
                    break;
                }
            }
            j_used = j;
            std::mem::swap(&mut prev_row, &mut cur);
        }

        if accepted {
            t_s = if last { t1_s } else { t_s + h_s };
            y = cur[j_used];
            sol.times.push(t_s.to_f64());
            sol.states.push(y);
            sol.n_steps += 1;
            // step-size proposal from the achieved column
            let order = 2 * j_used as i32;
            let grow = if err == 0.0 {
                4.0
            } else {
                (0.9 * (opts.tol / err).powf(1.0 / (order as f64 + 1.0))).clamp(0.3, 4.0)
            };
            h = (h_s.to_f64() * grow).clamp(-opts.h_max, opts.h_max);
            if h == 0.0 {
                h = 1e-3 * opts.h_max * dir;
            }
        } else {
            sol.n_rejected += 1;
            h = 0.5 * h_s.to_f64();
        }
    }
    Ok(sol)
}
