//! Adaptive explicit Runge-Kutta integration with dense output.
//!
//! The method is Verner's efficient 6(5) pair: 9 stages, an embedded 5th
//! order error estimate, and a continuous 5th-order interpolant that needs
//! one extra stage per accepted step. The last stage is first-same-as-last,
//! so an accepted step costs 8 fresh derivative evaluations (plus one for
//! dense output when stored).
//!
//! Everything is generic over [`Real`] so the same loop runs in `f64` or
//! double-double precision.

#![allow(clippy::needless_range_loop)]

use super::real::Real;
use crate::error::{Error, Result};

/// Right-hand side of an autonomous-in-form ODE system `y' = f(t, y)`.
pub trait OdeSystem<S: Real, const N: usize> {
    fn eval(&self, t: S, y: &[S; N], dydt: &mut [S; N]);
}

impl<S: Real, const N: usize, F> OdeSystem<S, N> for F
where
    F: Fn(S, &[S; N], &mut [S; N]),
{
    #[inline(always)]
    fn eval(&self, t: S, y: &[S; N], dydt: &mut [S; N]) {
        self(t, y, dydt)
    }
}

const STAGES: usize = 9;
const DENSE_STAGES: usize = 10;
const ORDER: usize = 6;

#[rustfmt::skip]
const A: [[f64; STAGES]; STAGES] = [
    [0.0; 9],
    [0.6e-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.923_996_296_296_296_2e-2, 7.669_337_037_037_037e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.35975e-1, 0.0, 0.107925, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.318_683_415_233_148_4, 0.0, -5.042_058_063_628_562, 4.220_674_648_395_414, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-41.872_591_664_327_516, 0.0, 159.432_562_163_137_5, -122.119_213_565_010_03, 5.531_743_066_200_054, 0.0, 0.0, 0.0, 0.0],
    [-54.430_156_935_316_504, 0.0, 207.067_251_365_018_48, -158.610_813_784_59, 6.991_816_585_950_242, -1.859_723_106_220_323_4e-2, 0.0, 0.0, 0.0],
    [-54.663_741_787_281_98, 0.0, 207.952_806_255_389_36, -159.288_957_474_499_5, 7.018_743_740_796_944, -1.833_878_590_504_572_2e-2, -5.119_484_997_882_099e-4, 0.0, 0.0],
    [3.438_957_868_357_036e-2, 0.0, 0.0, 0.258_262_455_563_350_3, 0.420_937_118_967_353_7, 4.405_396_469_669_31, -176.483_119_024_298_65, 172.364_133_401_415_07, 0.0],
];

#[rustfmt::skip]
const B_HIGHER: [f64; STAGES] = [
    3.438_957_868_357_036e-2, 0.0, 0.0, 0.258_262_455_563_350_3, 0.420_937_118_967_353_7,
    4.405_396_469_669_31, -176.483_119_024_298_65, 172.364_133_401_415_07, 0.0,
];

#[rustfmt::skip]
const B_LOWER: [f64; STAGES] = [
    4.909_967_648_382_49e-2, 0.0, 0.0, 0.225_111_222_951_652_42, 0.469_468_225_302_956_2,
    0.806_579_224_998_886_8, 0.0, -0.607_119_489_177_796, 5.686_113_944_047_569_6e-2,
];

#[rustfmt::skip]
const C: [f64; STAGES] = [
    0.0, 0.6e-1, 9.593_333_333_333_333e-2, 0.1439, 0.4973, 0.9725, 0.9995, 1.0, 1.0,
];

#[rustfmt::skip]
const A_DENSE: [f64; DENSE_STAGES] = [
    1.652_415_901_357_280_6e-2, 0.0, 0.0, 0.305_312_818_751_417_9, 0.207_120_093_820_197_9,
    -1.293_879_140_655_123, 57.119_884_115_881_49, -55.879_792_075_109_32, 2.483_002_829_776_601_4e-2, 0.0,
];

const C_DENSE: f64 = 0.5;

#[rustfmt::skip]
const B_DENSE: [[f64; ORDER]; DENSE_STAGES] = [
    [1.0, -5.308_169_607_103_577, 10.181_680_448_958_68, -7.520_036_991_611_715, 0.934_048_536_863_116_1, 0.746_867_191_577_065],
    [0.0; 6],
    [0.0; 6],
    [0.0, 6.272_050_253_212_501, -16.026_181_474_677_46, 12.844_356_324_519_618, -1.148_794_504_476_759_1, -1.683_168_143_014_549_8],
    [0.0, 6.876_491_702_846_304, -24.635_767_260_846_333, 33.210_786_483_797_17, -17.494_615_282_636_44, 2.464_041_475_806_649_6],
    [0.0, -35.544_451_710_599_6, 165.701_617_019_024_2, -385.463_539_549_114_3, 442.432_413_701_570_17, -182.720_642_991_211_2],
    [0.0, 1_918.654_856_698_011_4, -9_268.121_508_966_042, 20_858.337_028_772_55, -22_645.827_671_584_81, 8_960.474_176_055_992],
    [0.0, -1_883.069_802_132_718_2, 9_101.025_187_200_634, -20_473.188_551_959_534, 22_209.765_551_256_532, -8_782.168_250_963_5],
    [0.0, 0.119_024_796_351_236_43, -0.125_026_967_050_393_76, 1.779_956_919_394_999_1, -4.660_932_123_043_763, 2.886_977_374_347_921],
    [0.0, -8.0, 32.0, -40.0, 16.0, 0.0],
];

/// Integration options.
#[derive(Debug, Clone, Copy)]
pub struct RkOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial step; 0 selects one automatically.
    pub h0: f64,
    pub max_steps: usize,
    /// Keep the per-step stage data needed for dense evaluation.
    pub dense: bool,
}

impl Default for RkOptions {
    fn default() -> Self {
        RkOptions {
            rel_tol: super::ODE_REL_TOL,
            abs_tol: super::ODE_ABS_TOL,
            h0: 0.0,
            max_steps: 4_000_000,
            dense: true,
        }
    }
}

struct StepRecord<S, const N: usize> {
    t: S,
    h: S,
    y: [S; N],
    k: [[S; N]; DENSE_STAGES],
}

/// Solution of an initial value problem with dense evaluation.
pub struct IvpSolution<S: Real, const N: usize> {
    /// Accepted step times, strictly monotone, covering the span.
    pub times: Vec<S>,
    /// States at the accepted step times.
    pub states: Vec<[S; N]>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub n_steps: usize,
    pub n_rejected: usize,
    pub n_evals: usize,
    steps: Vec<StepRecord<S, N>>,
    forward: bool,
}

impl<S: Real, const N: usize> IvpSolution<S, N> {
    pub fn t0(&self) -> S {
        self.times[0]
    }

    pub fn t_end(&self) -> S {
        *self.times.last().unwrap()
    }

    pub fn final_state(&self) -> [S; N] {
        *self.states.last().unwrap()
    }

    /// Dense evaluation at an arbitrary time inside the span.
    pub fn eval(&self, t: S) -> Result<[S; N]> {
        let (t0, t1) = (self.t0().to_f64(), self.t_end().to_f64());
        let tf = t.to_f64();
        let (lo, hi) = if self.forward { (t0, t1) } else { (t1, t0) };
        if tf < lo - 1e-12 || tf > hi + 1e-12 {
            return Err(Error::OutOfSpan {
                t: tf,
                t0: lo,
                t1: hi,
            });
        }
        if self.steps.is_empty() {
            // zero-length span
            return Ok(self.states[0]);
        }
        // binary search for the step containing t
        let mut a = 0usize;
        let mut b = self.steps.len();
        while b - a > 1 {
            let m = (a + b) / 2;
            let tm = self.steps[m].t.to_f64();
            let inside_left = if self.forward { tf < tm } else { tf > tm };
            if inside_left {
                b = m;
            } else {
                a = m;
            }
        }
        let rec = &self.steps[a];
        let s = (t - rec.t) / rec.h;
        let mut y = rec.y;
        for i in 0..DENSE_STAGES {
            // Horner in s, then multiply once more by s: every interpolation
            // term starts at s^1.
            let mut cont = S::from_f64(B_DENSE[i][ORDER - 1]);
            for j in (0..ORDER - 1).rev() {
                cont = cont * s + S::from_f64(B_DENSE[i][j]);
            }
            cont = cont * s;
            let w = cont * rec.h;
            for c in 0..N {
                y[c] += rec.k[i][c] * w;
            }
        }
        Ok(y)
    }
}

fn initial_step<S: Real, const N: usize>(
    f0: &[S; N],
    y0: &[S; N],
    span: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for i in 0..N {
        let sc = abs_tol + rel_tol * y0[i].abs().to_f64();
        d0 = d0.max(y0[i].to_f64().abs() / sc);
        d1 = d1.max(f0[i].to_f64().abs() / sc);
    }
    let mut h = if d0 > 1e-10 && d1 > 1e-10 {
        0.01 * d0 / d1
    } else {
        1e-6 * span.abs()
    };
    h = h.min(0.1 * span.abs()).max(1e-12 * span.abs());
    h
}

/// Integrate `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// Local error per step is kept at or below `rel_tol * |y| + abs_tol`
/// componentwise; the returned solution carries dense output when
/// `opts.dense` is set.
pub fn integrate_ivp<S: Real, const N: usize>(
    system: &impl OdeSystem<S, N>,
    y0: [S; N],
    t0: f64,
    t1: f64,
    opts: &RkOptions,
) -> Result<IvpSolution<S, N>> {
    let forward = t1 >= t0;
    let dir = if forward { 1.0 } else { -1.0 };
    let span = t1 - t0;

    let mut t = S::from_f64(t0);
    let mut y = y0;
    let mut k = [[S::zero(); N]; DENSE_STAGES];
    let mut n_evals = 0usize;

    let mut f0 = [S::zero(); N];
    system.eval(t, &y, &mut f0);
    n_evals += 1;
    k[0] = f0;

    let mut h = if opts.h0 != 0.0 {
        opts.h0.abs() * dir
    } else {
        initial_step(&f0, &y, span, opts.rel_tol, opts.abs_tol) * dir
    };

    let mut sol = IvpSolution {
        times: vec![S::from_f64(t0)],
        states: vec![y0],
        rel_tol: opts.rel_tol,
        abs_tol: opts.abs_tol,
        n_steps: 0,
        n_rejected: 0,
        n_evals: 0,
        steps: Vec::new(),
        forward,
    };

    if span == 0.0 {
        sol.n_evals = n_evals;
        return Ok(sol);
    }

    let mut done = false;
    while !done {
        if sol.n_steps + sol.n_rejected >= opts.max_steps {
            return Err(Error::MaxSteps(opts.max_steps));
        }
        // clamp to the endpoint
        let remaining = t1 - t.to_f64();
        if h.abs() >= remaining.abs() {
            h = remaining;
            done = true;
        }
        if t.to_f64() + h == t.to_f64() {
            return Err(Error::StepSizeUnderflow { t: t.to_f64() });
        }
        let hs = S::from_f64(h);

        // stages 1..9 (k[0] is fresh via FSAL)
        for i in 1..STAGES {
            let mut ys = y;
            for j in 0..i {
                let a = A[i][j];
                if a != 0.0 {
                    let w = S::from_f64(a) * hs;
                    for c in 0..N {
                        ys[c] += k[j][c] * w;
                    }
                }
            }
            let ts = t + S::from_f64(C[i]) * hs;
            let mut ki = [S::zero(); N];
            system.eval(ts, &ys, &mut ki);
            k[i] = ki;
        }
        n_evals += STAGES - 1;

        let mut y_high = y;
        let mut y_low = y;
        for i in 0..STAGES {
            if B_HIGHER[i] != 0.0 {
                let w = S::from_f64(B_HIGHER[i]) * hs;
                for c in 0..N {
                    y_high[c] += k[i][c] * w;
                }
            }
            if B_LOWER[i] != 0.0 {
                let w = S::from_f64(B_LOWER[i]) * hs;
                for c in 0..N {
                    y_low[c] += k[i][c] * w;
                }
            }
        }

        let mut err: f64 = 0.0;
        for c in 0..N {
            let tol = opts.abs_tol + opts.rel_tol * y[c].abs().max(y_high[c].abs()).to_f64();
            err = err.max((y_high[c] - y_low[c]).abs().to_f64() / tol);
        }

        if err <= 1.0 {
            if opts.dense {
                // one extra stage for the interpolant
                let mut ys = y;
                for j in 0..DENSE_STAGES {
                    let a = A_DENSE[j];
                    if a != 0.0 {
                        let w = S::from_f64(a) * hs;
                        for c in 0..N {
                            ys[c] += k[j][c] * w;
                        }
                    }
                }
                let ts = t + S::from_f64(C_DENSE) * hs;
                let mut k9 = [S::zero(); N];
                system.eval(ts, &ys, &mut k9);
                k[9] = k9;
                n_evals += 1;
                sol.steps.push(StepRecord { t, h: hs, y, k });
            }
            t = if done { S::from_f64(t1) } else { t + hs };
            y = y_high;
            k[0] = k[8]; // FSAL
            sol.times.push(t);
            sol.states.push(y);
            sol.n_steps += 1;
        } else {
            sol.n_rejected += 1;
            done = false;
        }

        let scale = (0.9 * err.powf(-1.0 / ORDER as f64)).clamp(0.2, 10.0);
        h *= scale;
    }

    sol.n_evals = n_evals;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    fn harmonic(_t: f64, y: &[f64; 2], dy: &mut [f64; 2]) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    #[test]
    fn harmonic_oscillator_period() {
        let opts = RkOptions {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            ..Default::default()
        };
        let sol = integrate_ivp(
            &harmonic,
            [0.0, 1.0],
            0.0,
            2.0 * std::f64::consts::PI,
            &opts,
        )
        .unwrap();
        let yf = sol.final_state();
        assert!((yf[0]).abs() < 1e-9, "x(2pi) = {}", yf[0]);
        assert!((yf[1] - 1.0).abs() < 1e-9, "v(2pi) = {}", yf[1]);
    }

    #[test]
    fn convergence_under_tolerance_halving() {
        let reference = {
            let opts = RkOptions {
                rel_tol: 1e-13,
                abs_tol: 1e-15,
                ..Default::default()
            };
            integrate_ivp(&harmonic, [0.0, 1.0], 0.0, 10.0, &opts)
                .unwrap()
                .final_state()
        };
        let mut last_err = f64::INFINITY;
        for rt in [1e-6, 1e-8, 1e-10] {
            let opts = RkOptions {
                rel_tol: rt,
                abs_tol: rt * 1e-2,
                ..Default::default()
            };
            let yf = integrate_ivp(&harmonic, [0.0, 1.0], 0.0, 10.0, &opts)
                .unwrap()
                .final_state();
            let err = (yf[0] - reference[0]).abs() + (yf[1] - reference[1]).abs();
            assert!(
                err < last_err,
                "tightening rtol to {rt} did not reduce error"
            );
            last_err = err;
        }
    }

    #[test]
    fn dense_reproduces_nodes() {
        let opts = RkOptions {
            rel_tol: 1e-11,
            abs_tol: 1e-12,
            ..Default::default()
        };
        let sol = integrate_ivp(&harmonic, [0.3, -0.2], 0.0, 7.0, &opts).unwrap();
        for (t, y) in sol.times.iter().zip(sol.states.iter()) {
            let yi = sol.eval(*t).unwrap();
            assert!((yi[0] - y[0]).abs() < 1e-13);
            assert!((yi[1] - y[1]).abs() < 1e-13);
        }
        // and interior points against the closed form x = 0.3 cos t - 0.2 sin t
        for i in 0..70 {
            let t = 0.1 * i as f64;
            let y = sol.eval(t).unwrap();
            let exact = 0.3 * t.cos() - 0.2 * t.sin();
            assert!(
                (y[0] - exact).abs() < 1e-9,
                "dense err at t={t}: {}",
                (y[0] - exact).abs()
            );
        }
    }

    #[test]
    fn time_reversal_roundtrip() {
        let opts = RkOptions {
            rel_tol: 1e-11,
            abs_tol: 1e-12,
            ..Default::default()
        };
        let fwd = integrate_ivp(&harmonic, [0.1, 0.9], 0.0, 5.0, &opts).unwrap();
        let back = integrate_ivp(&harmonic, fwd.final_state(), 5.0, 0.0, &opts).unwrap();
        let y = back.final_state();
        assert!((y[0] - 0.1).abs() < 1e-10);
        assert!((y[1] - 0.9).abs() < 1e-10);
    }
}
