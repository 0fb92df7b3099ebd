//! Dormand-Prince 5(4) integration with PI step control, cubic Hermite
//! dense output and sign-change events.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, RateParameters, State};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Output times. When absent, every accepted step is reported.
    pub dense_grid: Option<Vec<f64>>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-10, max_step: f64::INFINITY, max_steps: 1_000_000, dense_grid: None }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_steps > 0 && self.max_step > 0.0) {
            return Err(Error::InvalidInput(format!(
                "integrator config needs rel_tol, abs_tol, max_step, max_steps > 0: {self:?}"
            )));
        }
        if let Some(g) = &self.dense_grid {
            if g.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidInput("dense_grid must be strictly increasing".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedTEnd,
    EventFired,
    /// Step size fell below `1e-14` times the span width.
    StepFailure,
    /// `max_steps` accepted or rejected steps were used up.
    MaxSteps,
}

/// Time-stamped samples of an `N`-dimensional state.
///
/// `derivs` holds the vector field at each sample and drives the cubic
/// Hermite interpolant in [`Trajectory::sample`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub derivs: Vec<[f64; N]>,
    pub step_rejections: usize,
    pub termination: Termination,
}

impl<const N: usize> Trajectory<N> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    pub fn last(&self) -> [f64; N] {
        *self.states.last().expect("non-empty trajectory")
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|x| x[i]).collect()
    }

    /// Error unless the run reached its end time or fired its event.
    pub fn require_complete(self) -> Result<Self> {
        match self.termination {
            Termination::ReachedTEnd | Termination::EventFired => Ok(self),
            Termination::StepFailure => Err(Error::StepFailure { t: self.t_end(), h: 0.0 }),
            Termination::MaxSteps => Err(Error::MaxSteps(self.len())),
        }
    }

    /// Cubic Hermite value at `t`, clamped to the sampled range.
    pub fn sample(&self, t: f64) -> [f64; N] {
        let n = self.times.len();
        if t <= self.times[0] || n == 1 {
            return self.states[0];
        }
        if t >= self.times[n - 1] {
            return self.states[n - 1];
        }
        let i = self.times.partition_point(|&x| x <= t) - 1;
        hermite(self.times[i], self.times[i + 1], &self.states[i], &self.states[i + 1], &self.derivs[i], &self.derivs[i + 1], t)
    }

    /// Build from samples without stored slopes; slopes are estimated with
    /// three-point differences on the (possibly non-uniform) time grid.
    pub fn from_samples(times: Vec<f64>, states: Vec<[f64; N]>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(Error::InvalidInput("times and states must be non-empty and of equal length".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("times must be strictly increasing".into()));
        }
        let derivs = estimate_slopes(&times, &states);
        Ok(Self { times, states, derivs, step_rejections: 0, termination: Termination::ReachedTEnd })
    }

    /// CSV with the given column names, first column time, 17 significant digits.
    pub fn to_csv(&self, header: &[&str]) -> String {
        assert_eq!(header.len(), N + 1, "header must name time and every component");
        let mut out = header.join(",");
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            out.push_str(&crate::io::fmt_f64(*t));
            for v in x {
                out.push(',');
                out.push_str(&crate::io::fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, header: &[&str]) -> Result<Self> {
        let rows = crate::io::read_table(text, header)?;
        let times = rows.iter().map(|r| r[0]).collect();
        let states = rows
            .iter()
            .map(|r| {
                let mut x = [0.0; N];
                x.copy_from_slice(&r[1..]);
                x
            })
            .collect();
        Self::from_samples(times, states)
    }
}

fn estimate_slopes<const N: usize>(t: &[f64], x: &[[f64; N]]) -> Vec<[f64; N]> {
    let n = t.len();
    let mut d = vec![[0.0; N]; n];
    if n < 2 {
        return d;
    }
    for i in 0..n {
        let (a, b, c) = if i == 0 {
            (0, 1, 2.min(n - 1))
        } else if i == n - 1 {
            (n.saturating_sub(3), n - 2, n - 1)
        } else {
            (i - 1, i, i + 1)
        };
        for k in 0..N {
            d[i][k] = if a == b || b == c {
                (x[c][k] - x[a][k]) / (t[c] - t[a])
            } else {
                // derivative at t[i] of the quadratic through a, b, c
                let (ta, tb, tc, ti) = (t[a], t[b], t[c], t[i]);
                x[a][k] * ((ti - tb) + (ti - tc)) / ((ta - tb) * (ta - tc))
                    + x[b][k] * ((ti - ta) + (ti - tc)) / ((tb - ta) * (tb - tc))
                    + x[c][k] * ((ti - ta) + (ti - tb)) / ((tc - ta) * (tc - tb))
            };
        }
    }
    d
}

pub(crate) fn hermite<const N: usize>(
    t0: f64,
    t1: f64,
    y0: &[f64; N],
    y1: &[f64; N],
    f0: &[f64; N],
    f1: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    let th = (t - t0) / h;
    let th2 = th * th;
    let th3 = th2 * th;
    let h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
    let h10 = th3 - 2.0 * th2 + th;
    let h01 = -2.0 * th3 + 3.0 * th2;
    let h11 = th3 - th2;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
    out
}

// Dormand-Prince coefficients
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const EVENT_RESOLUTION: f64 = 1e-10;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (a, k) in terms {
            acc += a * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], cfg: &IntegratorConfig) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs().max(y1[i].abs());
        m = m.max((err[i] / sc).abs());
    }
    m
}

fn initial_step<const N: usize, F>(f: &mut F, t0: f64, y0: &[f64; N], f0: &[f64; N], cfg: &IntegratorConfig, width: f64) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
        d0 = d0.max((y0[i] / sc).abs());
        d1 = d1.max((f0[i] / sc).abs());
    }
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(width).min(cfg.max_step);
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = f(t0 + h0, &y1);
    let mut d2: f64 = 0.0;
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
        d2 = d2.max(((f1[i] - f0[i]) / sc).abs() / h0);
    }
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(width).min(cfg.max_step)
}

/// Integrate `x' = f(t, x)` over `t_span`.
///
/// Local error per component is kept below `abs_tol + rel_tol |x|`. If
/// `event` is given, the first sign change of `event(t, x)` after the start
/// is located by bisection on the dense output and ends the run with
/// [`Termination::EventFired`]; the event sample is the last one reported.
pub fn integrate<const N: usize, F>(
    mut f: F,
    x0: [f64; N],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    event: Option<&dyn Fn(f64, &[f64; N]) -> f64>,
) -> Result<Trajectory<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    cfg.validate()?;
    let (t0, t_end) = t_span;
    if !(t_end > t0) || !t0.is_finite() || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!("t_span ({t0}, {t_end}) must be finite and increasing")));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("initial state {x0:?} is not finite")));
    }
    let width = t_end - t0;
    let h_min = 1e-14 * width;

    let mut t = t0;
    let mut y = x0;
    let mut k1 = f(t, &y);
    let mut h = initial_step(&mut f, t, &y, &k1, cfg, width);

    let mut out = Output::new(cfg.dense_grid.as_deref(), t0, t_end);
    out.push_start(t, &y, &k1);

    let mut g_prev = event.map(|g| g(t, &y));
    let mut fac_old: f64 = 1e-4;
    let mut rejected_last = false;
    let mut rejections = 0usize;
    let mut steps = 0usize;
    let termination;

    loop {
        if t >= t_end {
            termination = Termination::ReachedTEnd;
            break;
        }
        if steps >= cfg.max_steps {
            termination = Termination::MaxSteps;
            break;
        }
        steps += 1;
        let last = t + h >= t_end - 1e-12 * width;
        if last {
            h = t_end - t;
        }
        if h < h_min {
            termination = Termination::StepFailure;
            break;
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y_new);
        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&err, &y, &y_new, cfg);
        if !en.is_finite() {
            rejections += 1;
            rejected_last = true;
            h *= FAC_MIN;
            continue;
        }

        let expo = 0.2 - BETA * 0.75;
        let fac11 = en.powf(expo);
        if en <= 1.0 {
            let t_new = if last { t_end } else { t + h };
            // event check on the accepted step
            if let (Some(g), Some(gp)) = (event, g_prev) {
                let g_new = g(t_new, &y_new);
                if gp != 0.0 && (g_new == 0.0 || g_new.signum() != gp.signum()) {
                    let (te, ye) = locate_event(g, t, t_new, &y, &y_new, &k1, &k7, gp);
                    let fe = f(te, &ye);
                    out.push_step(t, t_new, &y, &y_new, &k1, &k7, te);
                    out.push_final(te, &ye, &fe);
                    termination = Termination::EventFired;
                    break;
                }
                g_prev = Some(g_new);
            }
            out.push_step(t, t_new, &y, &y_new, &k1, &k7, t_new);
            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            fac_old = en.max(1e-4);
            let mut h_new = h / fac;
            if rejected_last {
                h_new = h_new.min(h);
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            h = h_new.min(cfg.max_step);
            rejected_last = false;
        } else {
            rejections += 1;
            rejected_last = true;
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }

    let (times, states, derivs) = out.finish();
    Ok(Trajectory { times, states, derivs, step_rejections: rejections, termination })
}

#[allow(clippy::too_many_arguments)]
fn locate_event<const N: usize>(
    g: &dyn Fn(f64, &[f64; N]) -> f64,
    t0: f64,
    t1: f64,
    y0: &[f64; N],
    y1: &[f64; N],
    f0: &[f64; N],
    f1: &[f64; N],
    g0: f64,
) -> (f64, [f64; N]) {
    let (mut a, mut b) = (t0, t1);
    let sa = g0.signum();
    while b - a > EVENT_RESOLUTION {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m, &hermite(t0, t1, y0, y1, f0, f1, m));
        if gm != 0.0 && gm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    let y = if b == t1 { *y1 } else { hermite(t0, t1, y0, y1, f0, f1, b) };
    (b, y)
}

/// Collects reported samples, either every accepted step or a dense grid.
struct Output<'a, const N: usize> {
    grid: Option<&'a [f64]>,
    next: usize,
    times: Vec<f64>,
    states: Vec<[f64; N]>,
    derivs: Vec<[f64; N]>,
}

impl<'a, const N: usize> Output<'a, N> {
    fn new(grid: Option<&'a [f64]>, t0: f64, _t_end: f64) -> Self {
        let next = grid.map(|g| g.partition_point(|&x| x < t0)).unwrap_or(0);
        Self { grid, next, times: Vec::new(), states: Vec::new(), derivs: Vec::new() }
    }

    fn push_start(&mut self, t: f64, y: &[f64; N], f: &[f64; N]) {
        match self.grid {
            None => self.push(t, *y, *f),
            Some(g) => {
                if self.next < g.len() && g[self.next] == t {
                    self.push(t, *y, *f);
                    self.next += 1;
                }
            }
        }
    }

    /// Record output inside the accepted step `[t0, t1]`, up to `upto`.
    #[allow(clippy::too_many_arguments)]
    fn push_step(&mut self, t0: f64, t1: f64, y0: &[f64; N], y1: &[f64; N], f0: &[f64; N], f1: &[f64; N], upto: f64) {
        match self.grid {
            None => {
                if upto == t1 {
                    self.push(t1, *y1, *f1);
                }
            }
            Some(g) => {
                while self.next < g.len() && g[self.next] <= upto {
                    let tg = g[self.next];
                    if tg == t1 {
                        self.push(t1, *y1, *f1);
                    } else {
                        let y = hermite(t0, t1, y0, y1, f0, f1, tg);
                        let d = hermite_derivative(t0, t1, y0, y1, f0, f1, tg);
                        self.push(tg, y, d);
                    }
                    self.next += 1;
                }
            }
        }
    }

    fn push_final(&mut self, t: f64, y: &[f64; N], f: &[f64; N]) {
        if self.times.last().is_none_or(|&last| t > last) {
            self.push(t, *y, *f);
        }
    }

    fn push(&mut self, t: f64, y: [f64; N], f: [f64; N]) {
        self.times.push(t);
        self.states.push(y);
        self.derivs.push(f);
    }

    fn finish(self) -> (Vec<f64>, Vec<[f64; N]>, Vec<[f64; N]>) {
        (self.times, self.states, self.derivs)
    }
}

fn hermite_derivative<const N: usize>(
    t0: f64,
    t1: f64,
    y0: &[f64; N],
    y1: &[f64; N],
    f0: &[f64; N],
    f1: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    let th = (t - t0) / h;
    let th2 = th * th;
    let d00 = (6.0 * th2 - 6.0 * th) / h;
    let d10 = 3.0 * th2 - 4.0 * th + 1.0;
    let d01 = (-6.0 * th2 + 6.0 * th) / h;
    let d11 = 3.0 * th2 - 2.0 * th;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = d00 * y0[i] + d10 * f0[i] + d01 * y1[i] + d11 * f1[i];
    }
    out
}

/// Integrate the planar model from `x0` over `[0, t_end]`.
///
/// Reported `c` values in `[-abs_tol, 0)` are clamped to zero.
pub fn simulate(
    p: &RateParameters,
    x0: State,
    t_end: f64,
    cfg: &IntegratorConfig,
    event: Option<&dyn Fn(f64, &[f64; 2]) -> f64>,
) -> Result<Trajectory<2>> {
    let mut traj = integrate(|_, x| model::rhs_array(p, x), x0.to_array(), (0.0, t_end), cfg, event)?;
    for x in &mut traj.states {
        if x[1] < 0.0 && x[1] >= -cfg.abs_tol {
            x[1] = 0.0;
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompareMode {
    SupNormS,
    L2S,
}

/// Norm of the difference of the first components over the common time window.
///
/// Both trajectories are evaluated by cubic Hermite interpolation on the
/// union of their sample times inside the window. `L2S` is the square root
/// of the trapezoid integral of the squared difference.
pub fn compare_trajectories<const N: usize, const M: usize>(
    full: &Trajectory<N>,
    reduced: &Trajectory<M>,
    mode: CompareMode,
    window: Option<(f64, f64)>,
) -> Result<f64> {
    if full.is_empty() || reduced.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    let mut lo = full.t_start().max(reduced.t_start());
    let mut hi = full.t_end().min(reduced.t_end());
    if let Some((a, b)) = window {
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if !(hi > lo) {
        return Err(Error::EmptyOverlap);
    }
    let mut grid: Vec<f64> = full
        .times
        .iter()
        .chain(&reduced.times)
        .copied()
        .filter(|&t| t > lo && t < hi)
        .chain([lo, hi])
        .collect();
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    let diff: Vec<f64> = grid.iter().map(|&t| full.sample(t)[0] - reduced.sample(t)[0]).collect();
    Ok(match mode {
        CompareMode::SupNormS => diff.iter().fold(0.0, |m: f64, d| m.max(d.abs())),
        CompareMode::L2S => {
            let mut acc = 0.0;
            for i in 1..grid.len() {
                acc += 0.5 * (diff[i] * diff[i] + diff[i - 1] * diff[i - 1]) * (grid[i] - grid[i - 1]);
            }
            acc.sqrt()
        }
    })
}
