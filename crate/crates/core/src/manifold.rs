//! Slow manifold `c = C(s)` from the invariance equation
//!
//! ```text
//! dc/dt(s, C(s)) = C'(s) ds/dt(s, C(s))
//! ```
//!
//! rearranged as the fixed-point map
//! `C = [k1 eT s (1 + C') - k0 C'] / [(k1 s + km1)(1 + C') + k2]`.
//!
//! [`fraser_step`] applies the map once on a sampled curve with
//! finite-difference slopes. [`slow_manifold`] iterates it exactly: every grid
//! point carries a truncated Taylor series, so iterate slopes are derivatives
//! of the previous iterate rather than difference quotients (repeated
//! differencing amplifies roundoff by roughly `1/h` per step and the sampled
//! iteration does not settle). Near `s = 0` the iterates drift apart even in
//! exact arithmetic; there the curve is continued from the converged part by
//! following the orbit through it. Going left, nearby orbits separate fast
//! (by factors of `1e8` or more at moderate parameters), so there the curve is
//! only pinned down to about `tol` times [`IterationReport::continuation_gain`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{self, IntegratorConfig, Termination};
use crate::io;
use crate::jet::Jet;
use crate::model::{self, ParameterFamily, RateParameters, State};

/// Sampled graph `c = C(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldCurve {
    pub grid: Vec<f64>,
    pub c_values: Vec<f64>,
    pub dc_ds: Vec<f64>,
    /// `sup |dc/dt - C' ds/dt|` over the grid, when known.
    pub residual_sup: Option<f64>,
}

pub const CSV_HEADER: [&str; 3] = ["s", "c", "dc_ds"];

impl ManifoldCurve {
    pub fn new(grid: Vec<f64>, c_values: Vec<f64>, dc_ds: Vec<f64>) -> Result<Self> {
        if grid.len() != c_values.len() || grid.len() != dc_ds.len() || grid.is_empty() {
            return Err(Error::InvalidInput("grid, values and slopes must have equal non-zero length".into()));
        }
        check_grid(&grid)?;
        Ok(Self { grid, c_values, dc_ds, residual_sup: None })
    }

    /// Sample `f` and its derivative `df` on `grid`.
    pub fn from_fn(grid: &[f64], f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.to_vec(), grid.iter().map(|&s| f(s)).collect(), grid.iter().map(|&s| df(s)).collect())
    }

    /// `C = 0`.
    pub fn zero(grid: &[f64]) -> Result<Self> {
        Self::from_fn(grid, |_| 0.0, |_| 0.0)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn with_residual(mut self, p: &RateParameters) -> Self {
        self.residual_sup = Some(invariance_residual(p, &self));
        self
    }

    /// Cubic Hermite evaluation using the stored slopes; clamped to the grid.
    pub fn eval(&self, s: f64) -> f64 {
        let g = &self.grid;
        let n = g.len();
        if s <= g[0] || n == 1 {
            return self.c_values[0];
        }
        if s >= g[n - 1] {
            return self.c_values[n - 1];
        }
        let i = g.partition_point(|&x| x <= s) - 1;
        integrate::hermite(
            g[i],
            g[i + 1],
            &[self.c_values[i]],
            &[self.c_values[i + 1]],
            &[self.dc_ds[i]],
            &[self.dc_ds[i + 1]],
            s,
        )[0]
    }

    /// Smallest `s` where the curve rises through `c = 0`, if it starts below the axis.
    pub fn axis_crossing(&self) -> Option<f64> {
        if self.c_values[0] >= 0.0 {
            return None;
        }
        let i = self.c_values.iter().position(|&c| c >= 0.0)?;
        crate::roots::bisect(|s| self.eval(s), self.grid[i - 1], self.grid[i], 1e-14, 200).ok()
    }

    pub fn to_csv(&self) -> String {
        io::write_table(
            &CSV_HEADER,
            (0..self.len()).map(|i| vec![self.grid[i], self.c_values[i], self.dc_ds[i]]),
        )
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = io::read_table(text, &CSV_HEADER)?;
        Self::new(
            rows.iter().map(|r| r[0]).collect(),
            rows.iter().map(|r| r[1]).collect(),
            rows.iter().map(|r| r[2]).collect(),
        )
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|s| !s.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// `n` equally spaced points on `[0, s_max]`.
pub fn uniform_grid(s_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(s_max > 0.0 && s_max.is_finite()) || n < 5 {
        return Err(Error::InvalidInput(format!("grid needs s_max > 0 and at least 5 points (got {s_max}, {n})")));
    }
    let m = (n - 1) as f64;
    Ok((0..n).map(|i| s_max * i as f64 / m).collect())
}

/// Right end of the default grid: `max(3 s_hat, 10 K_M)`.
pub fn default_s_max(p: &RateParameters) -> Result<f64> {
    let km = p.require_k_m()?;
    let s_hat = match model::equilibrium(p) {
        Ok(eq) => eq.point.map(|x| x.s).filter(|s| *s > 0.0).unwrap_or(0.0),
        Err(_) => 0.0,
    };
    Ok((3.0 * s_hat).max(10.0 * km))
}

pub const DEFAULT_GRID_POINTS: usize = 2001;

/// Fourth-order slopes on a uniform grid; one-sided five-point stencils at the ends.
pub fn fd_slopes(grid: &[f64], c: &[f64]) -> Result<Vec<f64>> {
    let n = grid.len();
    if n < 5 {
        return Err(Error::InvalidInput("finite differences need at least 5 grid points".into()));
    }
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    if grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(Error::InvalidInput("finite-difference slopes need a uniform grid".into()));
    }
    let mut d = vec![0.0; n];
    d[0] = (-25.0 * c[0] + 48.0 * c[1] - 36.0 * c[2] + 16.0 * c[3] - 3.0 * c[4]) / (12.0 * h);
    d[1] = (-3.0 * c[0] - 10.0 * c[1] + 18.0 * c[2] - 6.0 * c[3] + c[4]) / (12.0 * h);
    for i in 2..n - 2 {
        d[i] = (c[i - 2] - 8.0 * c[i - 1] + 8.0 * c[i + 1] - c[i + 2]) / (12.0 * h);
    }
    let (a, b, m, e, f) = (c[n - 5], c[n - 4], c[n - 3], c[n - 2], c[n - 1]);
    d[n - 2] = (3.0 * f + 10.0 * e - 18.0 * m + 6.0 * b - a) / (12.0 * h);
    d[n - 1] = (25.0 * f - 48.0 * e + 36.0 * m - 16.0 * b + 3.0 * a) / (12.0 * h);
    Ok(d)
}

/// One application of the fixed-point map on a sampled curve.
pub fn fraser_step(p: &RateParameters, curve: &ManifoldCurve) -> Result<ManifoldCurve> {
    let mut out = Vec::with_capacity(curve.len());
    for i in 0..curve.len() {
        let s = curve.grid[i];
        let d = curve.dc_ds[i];
        let den = (p.k1 * s + p.km1) * (1.0 + d) + p.k2;
        if den.abs() < 1e-12 || !den.is_finite() {
            return Err(Error::VanishingDenominator { s });
        }
        out.push((p.k1 * p.e_t * s * (1.0 + d) - p.k0 * d) / den);
    }
    let slopes = fd_slopes(&curve.grid, &out)?;
    ManifoldCurve::new(curve.grid.clone(), out, slopes)
}

/// The map applied to a vertical initial function (`C' -> infinity`),
/// which yields the s-nullcline `(k1 eT s - k0)/(k1 s + km1)`.
pub fn fraser_step_vertical(p: &RateParameters, grid: &[f64]) -> Result<ManifoldCurve> {
    let mut out = Vec::with_capacity(grid.len());
    for &s in grid {
        let den = p.k1 * s + p.km1;
        if den.abs() < 1e-12 {
            return Err(Error::VanishingDenominator { s });
        }
        out.push((p.k1 * p.e_t * s - p.k0) / den);
    }
    let slopes = fd_slopes(grid, &out)?;
    ManifoldCurve::new(grid.to_vec(), out, slopes)
}

/// `sup |dc/dt(s, C) - C' ds/dt(s, C)|` over the grid.
pub fn invariance_residual(p: &RateParameters, curve: &ManifoldCurve) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..curve.len() {
        let d = model::rhs(p, State::new(curve.grid[i], curve.c_values[i]));
        m = m.max((d.dc - curve.dc_ds[i] * d.ds).abs());
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    /// `C_0 = 0, C_1, ..., C_n` on the whole grid.
    pub iterates: Vec<ManifoldCurve>,
    /// `sup |C_{i+1} - C_i|`, taken over the converged part of the grid.
    pub sup_deltas: Vec<f64>,
    pub converged: bool,
    /// Per grid point: last update below `tol`.
    pub fraser_converged: Vec<bool>,
    /// Left end of the converged part. Below it the curve is the orbit
    /// through this point, followed towards `s = 0`.
    pub anchor_s: Option<f64>,
    /// Set when the continued orbit turns back in `s` below the s-axis. The
    /// curve then starts at the first grid point to the right of it.
    pub fold_s: Option<f64>,
    /// Largest factor by which an error in the anchor value grows along the
    /// continued orbit. Times `tol`, a rough bound on the error left of the anchor.
    pub continuation_gain: Option<f64>,
}

/// Iterate the fixed-point map from `C_0 = 0` with exact derivatives.
///
/// Returns the curve and the iteration history. The converged part of the
/// grid is the longest right-hand stretch on which one iterate changes by
/// less than `tol` everywhere. When that stretch does not reach the left end
/// of the grid, the remaining values come from integrating
/// `dc/ds = (dc/dt)/(ds/dt)` leftwards from its first point. If that orbit
/// folds below the s-axis the returned curve is shorter than `grid` (see
/// [`IterationReport::fold_s`]). When no stretch converges the last iterate is returned with `converged = false`.
pub fn slow_manifold(
    p: &RateParameters,
    grid: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(ManifoldCurve, IterationReport)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tol = {tol} must be positive")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be at least 1".into()));
    }
    check_grid(grid)?;
    let n = grid.len();

    // per point: (value, slope) for iterations 0..=max_iter
    let history: Vec<Vec<(f64, f64)>> = grid.par_iter().map(|&s| jet_iterates(p, s, max_iter)).collect();

    let delta = |it: usize, i: usize| (history[i][it].0 - history[i][it - 1].0).abs();
    // longest converged suffix per iteration
    let mut best: Option<(usize, usize)> = None; // (start index, iteration)
    for it in 1..=max_iter {
        let mut start = n;
        while start > 0 && delta(it, start - 1) < tol {
            start -= 1;
        }
        if start < n && best.is_none_or(|(b, _)| start < b) {
            best = Some((start, it));
        }
        if start == 0 {
            break;
        }
    }

    let Some((anchor, n_iter)) = best else {
        let iterates = collect_iterates(grid, &history, max_iter)?;
        let sup_deltas = (1..=max_iter).map(|it| (0..n).map(|i| delta(it, i)).fold(0.0, f64::max)).collect();
        let curve = iterates.last().cloned().expect("at least one iterate").with_residual(p);
        let report = IterationReport {
            iterates,
            sup_deltas,
            converged: false,
            fraser_converged: (0..n).map(|i| delta(max_iter, i) < tol).collect(),
            anchor_s: None,
            fold_s: None,
            continuation_gain: None,
        };
        return Ok((curve, report));
    };

    let iterates = collect_iterates(grid, &history, n_iter)?;
    let sup_deltas = (1..=n_iter).map(|it| (anchor..n).map(|i| delta(it, i)).fold(0.0, f64::max)).collect();
    let fraser_converged: Vec<bool> = (0..n).map(|i| delta(n_iter, i) < tol).collect();

    let mut c_values: Vec<f64> = history.iter().map(|h| h[n_iter].0).collect();
    let mut dc_ds: Vec<f64> = history.iter().map(|h| h[n_iter].1).collect();
    let mut first = 0;
    let mut fold_s = None;
    let mut gain = None;
    let anchor_s = if anchor > 0 {
        let left = continue_left(p, grid, anchor, c_values[anchor])?;
        first = left.first;
        fold_s = left.fold_s;
        gain = Some(left.gain);
        c_values[first..anchor].copy_from_slice(&left.c_values);
        dc_ds[first..anchor].copy_from_slice(&left.dc_ds);
        Some(grid[anchor])
    } else {
        None
    };
    let curve = ManifoldCurve::new(grid[first..].to_vec(), c_values.split_off(first), dc_ds.split_off(first))?
        .with_residual(p);
    let report = IterationReport { iterates, sup_deltas, converged: true, fraser_converged, anchor_s, fold_s, continuation_gain: gain };
    Ok((curve, report))
}

/// Values and slopes of `C_0..=C_max_iter` at one point.
fn jet_iterates(p: &RateParameters, s: f64, max_iter: usize) -> Vec<(f64, f64)> {
    let order = max_iter + 1;
    let sj = Jet::variable(s, order);
    let bind = sj.scale(p.k1 * p.e_t);
    let lin = sj.scale(p.k1).add_const(p.km1);
    let mut c = Jet::constant(0.0, order);
    let mut out = Vec::with_capacity(max_iter + 1);
    out.push((0.0, 0.0));
    for _ in 0..max_iter {
        let d = c.derivative();
        let one_plus_d = d.add_const(1.0);
        let num = &(&bind * &one_plus_d) - &d.scale(p.k0);
        let den = (&lin * &one_plus_d).add_const(p.k2);
        c = num.div(&den);
        out.push((c.value(), c.slope()));
    }
    out
}

fn collect_iterates(grid: &[f64], history: &[Vec<(f64, f64)>], upto: usize) -> Result<Vec<ManifoldCurve>> {
    (0..=upto)
        .map(|it| {
            ManifoldCurve::new(
                grid.to_vec(),
                history.iter().map(|h| h[it].0).collect(),
                history.iter().map(|h| h[it].1).collect(),
            )
        })
        .collect()
}

/// Follow the orbit through `(grid[anchor], c_anchor)` down to `grid[0]`.
///
/// Returns values and slopes for `grid[first..anchor]`. The orbit can turn
/// back in `s` (a fold, where `ds/dt = 0`) before reaching `grid[0]`. Below
/// the s-axis that only means the graph ends there, and `first > 0` is
/// returned together with the fold estimate. A fold with `c >= 0` is an error.
fn continue_left(p: &RateParameters, grid: &[f64], anchor: usize, c_anchor: f64) -> Result<LeftBranch> {
    let s_a = grid[anchor];
    // tau = s_a - s runs forward while s decreases
    let taus: Vec<f64> = (0..anchor).rev().map(|i| s_a - grid[i]).collect();
    let rate_scale = p.k0 + p.v_max() + p.k1 * p.e_t * s_a + 1e-300;
    let cfg = IntegratorConfig {
        rel_tol: 1e-12,
        abs_tol: 1e-14 * p.e_t.max(1e-300),
        dense_grid: Some(taus.clone()),
        ..IntegratorConfig::default()
    };
    // second component: log of the growth of a perturbation in c
    let field = |tau: f64, y: &[f64; 2]| {
        let s = s_a - tau;
        let d = model::rhs(p, State::new(s, y[0]));
        let (dds_dc, ddc_dc) = (p.k1 * s + p.km1, -(p.k1 * s + p.km1 + p.k2));
        [-d.dc / d.ds, -(ddc_dc * d.ds - d.dc * dds_dc) / (d.ds * d.ds)]
    };
    let fold = |tau: f64, c: &[f64; 2]| model::rhs(p, State::new(s_a - tau, c[0])).ds.abs() - 1e-10 * rate_scale;
    let span = *taus.last().expect("anchor > 0");
    let tr = integrate::integrate(field, [c_anchor, 0.0], (0.0, span), &cfg, Some(&fold))?;
    // samples that landed on requested grid points
    let reached = tr.times.iter().zip(&taus).take_while(|(t, tau)| t == tau).count();
    let mut fold_s = None;
    if tr.termination != Termination::ReachedTEnd || reached != taus.len() {
        let s_stop = s_a - tr.t_end();
        let c_stop = tr.last()[0];
        if c_stop >= 0.0 || reached == 0 {
            return Err(Error::Fold { s: s_stop });
        }
        fold_s = Some(s_stop.min(grid[anchor - reached]));
    }
    let first = anchor - reached;
    let mut c_values = vec![0.0; reached];
    let mut dc_ds = vec![0.0; reached];
    for (j, i) in (first..anchor).rev().enumerate() {
        let c = tr.states[j][0];
        let d = model::rhs(p, State::new(grid[i], c));
        c_values[i - first] = c;
        dc_ds[i - first] = d.dc / d.ds;
    }
    let gain = tr.states[..reached].iter().map(|y| y[1]).fold(0.0, f64::max).exp();
    Ok(LeftBranch { first, c_values, dc_ds, fold_s, gain })
}

struct LeftBranch {
    first: usize,
    c_values: Vec<f64>,
    dc_ds: Vec<f64>,
    fold_s: Option<f64>,
    gain: f64,
}

/// Truncated perturbation series for the slow manifold along a TFPV ray
/// `p = ray_scale(p_star, family, eps)`; returns `C(s)` itself.
///
/// * `(k0, eT)`: terms of order `eps` and `eps^2`, scaled by `eT*`.
/// * `(k0, k2)`: order `1` (the quasi-equilibrium curve) and `eps`, scaled by `eT`.
/// * `(k0, k1)`: order `eps` and `eps^2`, scaled by `eT`.
pub fn perturbation_series(p_star: &RateParameters, family: ParameterFamily, s: f64, eps: f64) -> Result<f64> {
    let p = p_star;
    let e_t = p.e_t;
    match family {
        ParameterFamily::TFPV_k0_eT => {
            let km = p.require_k_m()?;
            let a = s + km;
            let c1 = s / a;
            let c2 = km * (s * (p.k2 * e_t - p.k0) - p.k0 * km) / (p.k1 * a.powi(4));
            Ok(e_t * (c1 * eps + c2 * eps * eps))
        }
        ParameterFamily::TFPV_k0_k2 => {
            let ke = p.require_k_s()?;
            let a = s + ke;
            if a == 0.0 {
                return Err(Error::VanishingDenominator { s });
            }
            let c0 = s / a;
            let c1 = (ke * (p.k2 * s + p.k0) + p.k2 * s * s) / (p.k1 * a * (a * a + ke * e_t));
            Ok(e_t * (c0 - c1 * eps))
        }
        ParameterFamily::TFPV_k0_k1 => {
            let t = p.km1 + p.k2;
            if t == 0.0 {
                return Err(Error::VanishingDenominator { s });
            }
            let c1 = p.k1 * s / t;
            let c2 = p.k1 * (p.k1 * s * (s * t - p.k2 * e_t) + p.k0 * t) / t.powi(3);
            Ok(e_t * (c1 * eps - c2 * eps * eps))
        }
        other => Err(Error::InvalidInput(format!("{other:?} is not a TFPV family"))),
    }
}

/// Distance of the slow manifold at one point of a TFPV ray to the
/// leading-order curve and to the two-term series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayPoint {
    pub eps: f64,
    pub sup_leading: f64,
    pub sup_series: f64,
    pub converged: bool,
}

/// Leading-order curve of the slow manifold on a TFPV ray, evaluated at the
/// scaled parameters `p`.
fn leading_curve(p: &RateParameters, family: ParameterFamily, s: f64) -> Result<f64> {
    match family {
        ParameterFamily::TFPV_k0_eT => Ok(p.e_t * s / (p.require_k_m()? + s)),
        ParameterFamily::TFPV_k0_k2 => Ok(p.e_t * s / (p.require_k_s()? + s)),
        ParameterFamily::TFPV_k0_k1 => Ok(p.k1 * p.e_t * s / (p.km1 + p.k2)),
        other => Err(Error::InvalidInput(format!("{other:?} is not a TFPV family"))),
    }
}

/// Slow manifold at `ray_scale(p_star, family, eps)` on `grid`, compared
/// with the leading-order curve and with [`perturbation_series`].
pub fn ray_errors(
    p_star: &RateParameters,
    family: ParameterFamily,
    eps: f64,
    grid: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<RayPoint> {
    let p = model::ray_scale(p_star, family, eps)?;
    let (curve, report) = slow_manifold(&p, grid, tol, max_iter)?;
    let mut sup_leading = 0.0f64;
    let mut sup_series = 0.0f64;
    for (s, c) in curve.grid.iter().zip(&curve.c_values) {
        sup_leading = sup_leading.max((c - leading_curve(&p, family, *s)?).abs());
        sup_series = sup_series.max((c - perturbation_series(p_star, family, *s, eps)?).abs());
    }
    Ok(RayPoint { eps, sup_leading, sup_series, converged: report.converged })
}
