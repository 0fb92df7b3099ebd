//! Nullclines, the wedge between them and the divergence of the field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::ManifoldCurve;
use crate::model::{self, RateParameters, State};

/// Closed-form nullclines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nullclines {
    pub params: RateParameters,
    /// s-intercept `k0/(k1 eT)` of the s-nullcline.
    pub s_tilde: f64,
}

pub fn nullclines(p: &RateParameters) -> Result<Nullclines> {
    if !(p.k1 > 0.0 && p.e_t > 0.0) {
        return Err(Error::InvalidParameter("nullclines need k1 > 0 and eT > 0".into()));
    }
    Ok(Nullclines { params: *p, s_tilde: p.k0 / (p.k1 * p.e_t) })
}

impl Nullclines {
    /// `dc/dt = 0`: `k1 eT s/(k1 s + km1 + k2)`.
    pub fn n_c(&self, s: f64) -> f64 {
        let p = &self.params;
        p.k1 * p.e_t * s / (p.k1 * s + p.km1 + p.k2)
    }

    /// `ds/dt = 0`: `(k1 eT s - k0)/(k1 s + km1)`.
    pub fn n_s(&self, s: f64) -> f64 {
        let p = &self.params;
        (p.k1 * p.e_t * s - p.k0) / (p.k1 * s + p.km1)
    }

    /// Lower boundary of the wedge: `max(0, N_s)`.
    pub fn lower(&self, s: f64) -> f64 {
        self.n_s(s).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Arc {
    Upper,
    LowerNullcline,
    LowerAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeViolation {
    pub arc: Arc,
    pub s: f64,
    pub c: f64,
    pub ds: f64,
    pub dc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeReport {
    pub s_range: (f64, f64),
    pub samples_per_arc: usize,
    /// Smallest sign-relevant rate seen (negative means inflow is violated).
    pub min_rate: f64,
    pub violations: Vec<WedgeViolation>,
    pub passed: bool,
}

/// Default window: `[0, s_hat]` with a positive stationary point, else `[0, 100 K_M]`.
pub fn default_wedge_range(p: &RateParameters) -> Result<(f64, f64)> {
    let km = p.require_k_m()?;
    if p.v_max() > p.k0 && p.k0 > 0.0 {
        Ok((0.0, p.k0 * km / (p.v_max() - p.k0)))
    } else {
        Ok((0.0, 100.0 * km))
    }
}

/// Sign conditions of the vector field on the wedge boundary.
///
/// Upper arc `c = N_c(s)`: `ds/dt >= 0`. Lower arc on the s-nullcline:
/// `dc/dt >= 0`. Lower arc on the s-axis (`s < s_tilde`): `dc/dt >= 0` and
/// `ds/dt > 0`. Violations beyond `1e-12 (1 + k0 + k2 eT)` are reported.
pub fn wedge_inflow_check(p: &RateParameters, n_samples: usize, s_range: (f64, f64)) -> Result<WedgeReport> {
    if n_samples < 10 {
        return Err(Error::InvalidInput("wedge check needs at least 10 samples per arc".into()));
    }
    let (lo, hi) = s_range;
    if !(hi > lo && lo >= 0.0) {
        return Err(Error::InvalidInput(format!("bad s range ({lo}, {hi})")));
    }
    let nc = nullclines(p)?;
    let slack = 1e-12 * (1.0 + p.k0 + p.v_max());
    let mut violations = Vec::new();
    let mut min_rate = f64::INFINITY;
    let mut check = |arc: Arc, s: f64, c: f64, rate: f64, strict: bool, d: model::StateDerivative| {
        min_rate = min_rate.min(rate);
        let bad = if strict { rate <= 0.0 } else { rate < -slack };
        if bad {
            violations.push(WedgeViolation { arc, s, c, ds: d.ds, dc: d.dc });
        }
    };
    for i in 0..n_samples {
        let s = lo + (hi - lo) * i as f64 / (n_samples - 1) as f64;
        let c = nc.n_c(s);
        let d = model::rhs(p, State::new(s, c));
        check(Arc::Upper, s, c, d.ds, false, d);

        let ns = nc.n_s(s);
        if ns >= 0.0 {
            let d = model::rhs(p, State::new(s, ns));
            check(Arc::LowerNullcline, s, ns, d.dc, false, d);
        } else {
            let d = model::rhs(p, State::new(s, 0.0));
            check(Arc::LowerAxis, s, 0.0, d.dc, false, d);
            check(Arc::LowerAxis, s, 0.0, d.ds, true, d);
        }
    }
    let passed = violations.is_empty();
    Ok(WedgeReport { s_range, samples_per_arc: n_samples, min_rate, violations, passed })
}

/// `div f = -(k1 (eT - c) + k1 s + km1 + k2)`.
pub fn divergence(p: &RateParameters, x: State) -> f64 {
    -(p.k1 * (p.e_t - x.c) + p.k1 * x.s + p.km1 + p.k2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    /// Largest excess of the curve over the upper arc.
    pub max_above: f64,
    /// Largest shortfall of the curve below the lower arc.
    pub max_below: f64,
}

impl Containment {
    pub fn inside(&self, slack: f64) -> bool {
        self.max_above <= slack && self.max_below <= slack
    }
}

/// How far a curve leaves the closed wedge on the grid points in `[s_lo, s_hi]`.
pub fn curve_containment(p: &RateParameters, curve: &ManifoldCurve, s_lo: f64, s_hi: f64) -> Result<Containment> {
    let nc = nullclines(p)?;
    let mut out = Containment { max_above: 0.0, max_below: 0.0 };
    for (s, c) in curve.grid.iter().zip(&curve.c_values) {
        if *s < s_lo || *s > s_hi {
            continue;
        }
        out.max_above = out.max_above.max(c - nc.n_c(*s));
        out.max_below = out.max_below.max(nc.lower(*s) - c);
    }
    Ok(out)
}
