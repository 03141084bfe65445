//! Stretched-exponential fits `exp[-(t/T)^b]` of coherence decays.

use std::fmt;
use std::fmt::Write as _;

use crate::gcce::{CoherenceSeries, LevelPair};
use crate::{Error, Result};

pub const B_MIN: f64 = 0.5;
pub const B_MAX: f64 = 4.0;
/// The fit window ends at the first sample below this value.
pub const WINDOW_FLOOR: f64 = 0.05;
/// A series that never drops below this is not fitted.
pub const DECAY_THRESHOLD: f64 = 0.9;
/// Smallest prominence of a local maximum used by [`fit_envelope`].
pub const PROMINENCE_FLOOR: f64 = 0.01;
/// Fewer maxima than this and [`fit_envelope`] falls back to a direct fit.
pub const MIN_MAXIMA: usize = 4;

const STARTS_B: [f64; 3] = [1.0, 2.0, 3.0];
const MAX_ITER: usize = 200;
const STEP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    Direct,
    Envelope,
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMethod::Direct => "direct",
            FitMethod::Envelope => "envelope",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Decay time, s.
    pub t: f64,
    /// Stretch exponent.
    pub b: f64,
    /// Root-mean-square residual over the fitted points.
    pub rmse: f64,
    /// First and last time of the fitted points, s.
    pub window: (f64, f64),
    pub method: FitMethod,
}

impl DecayFit {
    pub fn model(&self, t: f64) -> f64 {
        model(t, self.t.ln(), self.b)
    }
}

fn model(t: f64, ln_t: f64, b: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    (-(b * (t.ln() - ln_t)).exp()).exp()
}

/// Sum of squared residuals, gradient pieces `J^T J` and `J^T r`.
fn normal_equations(ts: &[f64], ys: &[f64], ln_t: f64, b: f64) -> (f64, [[f64; 2]; 2], [f64; 2]) {
    let mut sse = 0.0;
    let mut jtj = [[0.0; 2]; 2];
    let mut jtr = [0.0; 2];
    for (&t, &y) in ts.iter().zip(ys) {
        if t <= 0.0 {
            sse += (y - 1.0).powi(2);
            continue;
        }
        let l = t.ln() - ln_t;
        let x = (b * l).exp();
        let m = (-x).exp();
        let r = y - m;
        // dm/d(ln T) and dm/db
        let j = [m * x * b, -m * x * l];
        sse += r * r;
        for a in 0..2 {
            jtr[a] += j[a] * r;
            for c in 0..2 {
                jtj[a][c] += j[a] * j[c];
            }
        }
    }
    (sse, jtj, jtr)
}

struct Solution {
    ln_t: f64,
    b: f64,
    sse: f64,
}

/// Levenberg–Marquardt from one start. `None` when it does not converge.
fn refine(ts: &[f64], ys: &[f64], mut ln_t: f64, mut b: f64) -> Option<Solution> {
    let mut lambda = 1e-3;
    let (mut sse, mut jtj, mut jtr) = normal_equations(ts, ys, ln_t, b);
    for _ in 0..MAX_ITER {
        let mut accepted = false;
        while lambda < 1e12 {
            let a = [
                [jtj[0][0] * (1.0 + lambda), jtj[0][1]],
                [jtj[1][0], jtj[1][1] * (1.0 + lambda)],
            ];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            if det.abs() < f64::MIN_POSITIVE || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let d0 = (jtr[0] * a[1][1] - jtr[1] * a[0][1]) / det;
            let d1 = (a[0][0] * jtr[1] - a[1][0] * jtr[0]) / det;
            let new_ln_t = ln_t + d0;
            let new_b = (b + d1).clamp(B_MIN, B_MAX);
            let (new_sse, new_jtj, new_jtr) = normal_equations(ts, ys, new_ln_t, new_b);
            if new_sse.is_finite() && new_sse <= sse {
                let step = (new_ln_t - ln_t).abs().max((new_b - b).abs() / b);
                ln_t = new_ln_t;
                b = new_b;
                sse = new_sse;
                jtj = new_jtj;
                jtr = new_jtr;
                lambda = (lambda * 0.1).max(1e-12);
                accepted = true;
                if step < STEP_TOL {
                    return Some(Solution { ln_t, b, sse });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: a stationary point
            return Some(Solution { ln_t, b, sse });
        }
    }
    None
}

/// Time where the samples first cross `1/e`, by linear interpolation.
fn crossing_time(ts: &[f64], ys: &[f64]) -> f64 {
    let target = (-1.0f64).exp();
    for i in 1..ts.len() {
        if ys[i] <= target {
            let (y0, y1) = (ys[i - 1], ys[i]);
            let f = if y0 > y1 { (y0 - target) / (y0 - y1) } else { 0.0 };
            return ts[i - 1] + f * (ts[i] - ts[i - 1]);
        }
    }
    *ts.last().unwrap()
}

/// Multistart fit through the given points.
fn fit_points(ts: &[f64], ys: &[f64], method: FitMethod) -> Result<DecayFit> {
    let min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    if ts.is_empty() || !(min < DECAY_THRESHOLD) {
        return Err(Error::NoDecay { min });
    }
    let t0 = crossing_time(ts, ys);
    if !(t0 > 0.0) {
        return Err(Error::FitFailure(format!("no positive time scale in window (t0 = {t0})")));
    }
    let mut best: Option<Solution> = None;
    let mut failures = Vec::new();
    for b0 in STARTS_B {
        match refine(ts, ys, t0.ln(), b0) {
            Some(s) if best.as_ref().is_none_or(|b| s.sse < b.sse) => best = Some(s),
            Some(_) => {}
            None => failures.push(b0),
        }
    }
    let s = best.ok_or_else(|| {
        Error::FitFailure(format!(
            "no convergence in {MAX_ITER} iterations from b0 in {failures:?} (T0 = {t0:e} s, {} points)",
            ts.len()
        ))
    })?;
    Ok(DecayFit {
        t: s.ln_t.exp(),
        b: s.b,
        rmse: (s.sse / ts.len() as f64).sqrt(),
        window: (ts[0], *ts.last().unwrap()),
        method,
    })
}

/// Index one past the last sample of the direct-fit window.
fn window_end(values: &[f64]) -> usize {
    values
        .iter()
        .position(|&v| v < WINDOW_FLOOR)
        .map_or(values.len(), |i| i + 1)
}

/// Fits `exp[-(t/T)^b]` to a decaying modulus series from its second sample
/// to the first sample below [`WINDOW_FLOOR`].
pub fn fit_stretched_exponential(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidParameter("times and values differ in length".into()));
    }
    let end = window_end(values);
    if end < 2 {
        return Err(Error::NoDecay {
            min: values.first().copied().unwrap_or(f64::NAN),
        });
    }
    fit_points(&times[1..end], &values[1..end], FitMethod::Direct)
}

/// Strict local maxima with prominence at least [`PROMINENCE_FLOOR`].
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let y = values[i];
        if !(y > values[i - 1] && y > values[i + 1]) {
            continue;
        }
        let mut left = y;
        for &v in values[..i].iter().rev() {
            if v > y {
                break;
            }
            left = left.min(v);
        }
        let mut right = y;
        for &v in &values[i + 1..] {
            if v > y {
                break;
            }
            right = right.min(v);
        }
        if y - left.max(right) >= PROMINENCE_FLOOR {
            out.push(i);
        }
    }
    out
}

/// Fits the upper envelope of an oscillating decay: `t = 0` plus the local
/// maxima up to the first one below [`WINDOW_FLOOR`]. Falls back to
/// [`fit_stretched_exponential`] when fewer than [`MIN_MAXIMA`] maxima exist.
pub fn fit_envelope(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidParameter("times and values differ in length".into()));
    }
    let maxima = local_maxima(values);
    if maxima.len() < MIN_MAXIMA {
        return fit_stretched_exponential(times, values);
    }
    let mut ts = vec![times[0]];
    let mut ys = vec![values[0]];
    for i in maxima {
        ts.push(times[i]);
        ys.push(values[i]);
        if values[i] < WINDOW_FLOOR {
            break;
        }
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min < DECAY_THRESHOLD) {
        return Err(Error::NoDecay { min });
    }
    fit_points(&ts, &ys, FitMethod::Envelope)
}

/// Fits every pair of a series; `envelope` selects [`fit_envelope`].
pub fn fit_series(series: &CoherenceSeries, envelope: bool) -> [Result<DecayFit>; 6] {
    std::array::from_fn(|p| {
        let values = &series.moduli[p];
        if envelope {
            fit_envelope(&series.times, values)
        } else {
            fit_stretched_exponential(&series.times, values)
        }
    })
}

/// `pair,T_s,b,rmse,method,window_lo_s,window_hi_s`. Failed fits keep the
/// row with `NaN` values and the method column naming the failure.
pub fn fits_csv(fits: &[Result<DecayFit>; 6]) -> String {
    let mut out = String::from("pair,T_s,b,rmse,method,window_lo_s,window_hi_s\n");
    for pair in LevelPair::ALL {
        let name = pair.name();
        match &fits[pair.index()] {
            Ok(f) => writeln!(
                out,
                "{name},{},{},{},{},{},{}",
                f.t, f.b, f.rmse, f.method, f.window.0, f.window.1
            ),
            Err(e) => writeln!(out, "{name},NaN,NaN,NaN,{},NaN,NaN", failure_tag(e)),
        }
        .unwrap();
    }
    out
}

/// Short tag for a fit error, used in CSV method columns.
pub fn failure_tag(e: &Error) -> &'static str {
    match e {
        Error::NoDecay { .. } => "no_decay",
        _ => "failed",
    }
}
