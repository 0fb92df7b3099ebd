//! Behavior at infinity on the Poincare sphere.
//!
//! Two charts cover the first quadrant near the equator:
//!
//! * `X1Chart`: `(x2, x3) = (c/s, 1/s)`, inverse `s = 1/x3, c = x2/x3`.
//! * `X2Chart`: `(x1, x3) = (s/c, 1/c)`, inverse `s = x1/x3, c = 1/x3`.
//!
//! Both chart fields equal `x3` times the pushed-forward planar field, so
//! orbits agree for `x3 > 0`. The equator `x3 = 0` holds three stationary
//! points: `P1 = (0, 0)` and `P3 = (-1, 0)` in `X1Chart`, `P2 = (0, 0)` in
//! `X2Chart`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{self, IntegratorConfig, Termination, Trajectory};
use crate::linalg::{self, Mat2, Spectrum};
use crate::model::{self, EquilibriumKind, RateParameters, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    X1Chart,
    X2Chart,
}

impl Chart {
    /// Chart coordinates `(a, b)` of a phase-plane point.
    pub fn from_plane(self, x: State) -> [f64; 2] {
        match self {
            Chart::X1Chart => [x.c / x.s, 1.0 / x.s],
            Chart::X2Chart => [x.s / x.c, 1.0 / x.c],
        }
    }

    pub fn to_plane(self, a: [f64; 2]) -> State {
        match self {
            Chart::X1Chart => State::new(1.0 / a[1], a[0] / a[1]),
            Chart::X2Chart => State::new(a[0] / a[1], 1.0 / a[1]),
        }
    }
}

/// Chart vector field at `(a, b)`.
pub fn chart_rhs(chart: Chart, p: &RateParameters, x: [f64; 2]) -> [f64; 2] {
    let (k0, et, k1, km1, k2) = (p.k0, p.e_t, p.k1, p.km1, p.k2);
    match chart {
        Chart::X1Chart => {
            let (x2, x3) = (x[0], x[1]);
            [
                -k1 * x2 + k1 * et * x3 - k1 * x2 * x2 + (k1 * et - km1 - k2) * x2 * x3
                    - km1 * x2 * x2 * x3
                    - k0 * x2 * x3 * x3,
                -x3 * (k1 * x2 - k1 * et * x3 + km1 * x2 * x3 + k0 * x3 * x3),
            ]
        }
        Chart::X2Chart => {
            let (x1, x3) = (x[0], x[1]);
            [
                k1 * (x1 + x1 * x1) + km1 * x3 + (km1 + k2 - k1 * et) * x1 * x3 + k0 * x3 * x3
                    - k1 * et * x1 * x1 * x3,
                -x3 * (k1 * et * x1 * x3 - k1 * x1 - (km1 + k2) * x3),
            ]
        }
    }
}

/// The `X2Chart` polynomial with the signs of the `k1 (x1 + x1^2)` term and
/// of `k1 eT` in the `x1 x3` coefficient flipped. Kept to flag the resulting
/// sign conflict at `P2`; it is not a reparametrization of the planar field.
pub fn x2_chart_rhs_variant(p: &RateParameters, x: [f64; 2]) -> [f64; 2] {
    let (k0, et, k1, km1, k2) = (p.k0, p.e_t, p.k1, p.km1, p.k2);
    let (x1, x3) = (x[0], x[1]);
    [
        -k1 * (x1 + x1 * x1) + km1 * x3 + (km1 + k2 + k1 * et) * x1 * x3 + k0 * x3 * x3 - k1 * et * x1 * x1 * x3,
        -x3 * (k1 * et * x1 * x3 - k1 * x1 - (km1 + k2) * x3),
    ]
}

/// Central-difference Jacobian of `f` at `x`, step `1e-6 max(1, |x_i|)`.
pub fn numeric_jacobian(f: impl Fn([f64; 2]) -> [f64; 2], x: [f64; 2]) -> Mat2 {
    let mut j = [[0.0; 2]; 2];
    for k in 0..2 {
        let h = 1e-6 * x[k].abs().max(1.0);
        let mut xp = x;
        let mut xm = x;
        xp[k] += h;
        xm[k] -= h;
        let (fp, fm) = (f(xp), f(xm));
        for i in 0..2 {
            j[i][k] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    j
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfinityLabel {
    DegenerateSaddle,
    DegenerateAttractingNode,
    SaddleNode,
    RepellingNode,
    DegenerateAttractingNodeDeg4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinityPoint {
    pub name: String,
    pub chart: Chart,
    pub coords: [f64; 2],
    pub jacobian: Mat2,
    pub jacobian_numeric: Mat2,
    pub eigenvalues: Spectrum,
    /// Degree and coefficient of the leading term of the reduced equation
    /// on the center manifold; absent for hyperbolic points.
    pub nfim_degree: Option<u32>,
    pub nfim_coefficient: Option<f64>,
    pub label: InfinityLabel,
}

/// Comparison of the two `X2Chart` polynomials at `P2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P2SignCheck {
    /// Nonzero eigenvalue of the chart field used here.
    pub computed_eigenvalue: f64,
    /// Nonzero eigenvalue from [`x2_chart_rhs_variant`].
    pub variant_eigenvalue: f64,
    pub signs_disagree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinityClassification {
    pub p1: InfinityPoint,
    pub p2: InfinityPoint,
    pub p3: InfinityPoint,
    pub p2_sign_check: P2SignCheck,
    /// Which alpha-limit sets occur for orbits above the distinguished
    /// trajectory when `k2 eT < k0`; topology alone does not decide it.
    pub upper_region_alpha_limit: Option<String>,
}

const JAC_RTOL: f64 = 1e-6;

fn check_jacobians(name: &str, closed: &Mat2, numeric: &Mat2) -> Result<()> {
    let scale = closed.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    for i in 0..2 {
        for k in 0..2 {
            if (closed[i][k] - numeric[i][k]).abs() > JAC_RTOL * scale {
                return Err(Error::JacobianMismatch {
                    point: name.to_string(),
                    detail: format!("closed form {closed:?}, finite differences {numeric:?}"),
                });
            }
        }
    }
    Ok(())
}

fn nonzero_eigenvalue(spec: &Spectrum, scale: f64) -> Option<f64> {
    match *spec {
        Spectrum::Real { lo, hi } => {
            let small = 1e-9 * scale;
            match (lo.abs() <= small, hi.abs() <= small) {
                (true, false) => Some(hi),
                (false, true) => Some(lo),
                _ => None,
            }
        }
        Spectrum::Complex { .. } => None,
    }
}

fn label_for(name: &str, spec: &Spectrum, nfim: Option<(u32, f64)>, scale: f64) -> Result<InfinityLabel> {
    let fail = || Error::ClassificationMismatch(format!("{name}: spectrum {spec:?}, center term {nfim:?}"));
    if let Spectrum::Real { lo, hi } = *spec {
        if lo > 1e-9 * scale && hi > 1e-9 * scale {
            return Ok(InfinityLabel::RepellingNode);
        }
    }
    let lambda = nonzero_eigenvalue(spec, scale).ok_or_else(fail)?;
    let (deg, coef) = nfim.ok_or_else(fail)?;
    match (deg, lambda < 0.0, coef) {
        (2, _, c) if c != 0.0 => Ok(InfinityLabel::SaddleNode),
        (3, true, c) if c > 0.0 => Ok(InfinityLabel::DegenerateSaddle),
        (3, true, c) if c < 0.0 => Ok(InfinityLabel::DegenerateAttractingNode),
        (4, true, c) if c < 0.0 => Ok(InfinityLabel::DegenerateAttractingNodeDeg4),
        _ => Err(fail()),
    }
}

/// Stationary points at infinity, their Jacobians and types.
///
/// Jacobians are computed both in closed form and by finite differences of
/// [`chart_rhs`]; a disagreement beyond `1e-6` relative is an error. Labels
/// come from the numeric eigenvalues together with the leading coefficient
/// of the reduced center-manifold equation.
pub fn classify_infinity(p: &RateParameters) -> Result<InfinityClassification> {
    if !(p.k1 > 0.0 && p.k2 > 0.0 && p.e_t > 0.0) {
        return Err(Error::InvalidParameter("classification at infinity needs k1, k2, eT > 0".into()));
    }
    let scale = p.k1.max(p.k2).max(p.km1).max(p.k1 * p.e_t);
    let gap = p.v_max() - p.k0;
    let balanced = gap.abs() <= 1e-12 * p.v_max().max(p.k0);

    let build = |name: &str, chart: Chart, coords: [f64; 2], closed: Mat2, nfim: Option<(u32, f64)>| {
        let numeric = numeric_jacobian(|x| chart_rhs(chart, p, x), coords);
        check_jacobians(name, &closed, &numeric)?;
        let eigenvalues = linalg::eigenvalues(&numeric);
        let label = label_for(name, &eigenvalues, nfim, scale)?;
        Ok::<_, Error>(InfinityPoint {
            name: name.to_string(),
            chart,
            coords,
            jacobian: closed,
            jacobian_numeric: numeric,
            eigenvalues,
            nfim_degree: nfim.map(|n| n.0),
            nfim_coefficient: nfim.map(|n| n.1),
            label,
        })
    };

    let p1_nfim = if balanced { (4, -(p.km1 + p.k2) * p.v_max() / p.k1) } else { (3, gap) };
    let p1 = build("P1", Chart::X1Chart, [0.0, 0.0], [[-p.k1, p.k1 * p.e_t], [0.0, 0.0]], Some(p1_nfim))?;
    let p3 = build("P3", Chart::X1Chart, [-1.0, 0.0], [[p.k1, p.k2], [0.0, p.k1]], None)?;
    let p2 = build("P2", Chart::X2Chart, [0.0, 0.0], [[p.k1, p.km1], [0.0, 0.0]], Some((2, p.k2)))?;

    let variant = linalg::eigenvalues(&numeric_jacobian(|x| x2_chart_rhs_variant(p, x), [0.0, 0.0]));
    let computed_eigenvalue = nonzero_eigenvalue(&p2.eigenvalues, scale).unwrap_or(f64::NAN);
    let variant_eigenvalue = nonzero_eigenvalue(&variant, scale).unwrap_or(f64::NAN);
    let p2_sign_check = P2SignCheck {
        computed_eigenvalue,
        variant_eigenvalue,
        signs_disagree: computed_eigenvalue.signum() != variant_eigenvalue.signum(),
    };
    let upper_region_alpha_limit = (gap < 0.0 && !balanced).then(|| "undetermined".to_string());
    Ok(InfinityClassification { p1, p2, p3, p2_sign_check, upper_region_alpha_limit })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistinguishedCase {
    /// `k2 eT > k0`: from `P1` at infinity to the node `P0`.
    FromInfinity,
    /// `k2 eT < k0`: from the saddle `P0` out to `P1`.
    ToInfinity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistinguishedTrajectory {
    pub case: DistinguishedCase,
    /// Phase-plane samples `(t, s, c)` in the original time.
    pub plane: Trajectory<2>,
    /// `X1Chart` samples `(tau, x2, x3)`. For [`DistinguishedCase::FromInfinity`]
    /// `tau` is chart time of the seeded run; otherwise the plane samples with
    /// `s > 0` mapped into the chart, in original time.
    pub chart: Trajectory<2>,
    /// `max |c - eT|` over samples with `s >= s_max/2`.
    pub tail_max_deviation: f64,
    pub endpoint: State,
}

pub const DEFAULT_OFFSET: f64 = 1e-3;

/// Trace the orbit that joins `P1` at infinity and the finite stationary point.
pub fn distinguished_trajectory(p: &RateParameters, cfg: &IntegratorConfig, offset: f64) -> Result<DistinguishedTrajectory> {
    if !(offset > 0.0 && offset <= 1e-3) {
        return Err(Error::InvalidInput(format!("offset {offset} must lie in (0, 1e-3]")));
    }
    let km = p.require_k_m()?;
    let eq = model::equilibrium(p)?;
    let x0 = match (eq.kind, eq.point) {
        (EquilibriumKind::AttractingNodeFirstQuadrant | EquilibriumKind::SaddleSecondQuadrant, Some(x)) => x,
        _ => return Err(Error::DegenerateFamily(format!("no generic finite stationary point ({:?})", eq.kind))),
    };
    match eq.kind {
        EquilibriumKind::AttractingNodeFirstQuadrant => from_infinity(p, cfg, offset, x0, km),
        _ => to_infinity(p, cfg, offset, x0, km),
    }
}

fn tail_deviation(p: &RateParameters, plane: &Trajectory<2>) -> f64 {
    let s_max = plane.states.iter().fold(f64::NEG_INFINITY, |m, x| m.max(x[0]));
    plane
        .states
        .iter()
        .filter(|x| x[0] >= 0.5 * s_max)
        .fold(0.0, |m: f64, x| m.max((x[1] - p.e_t).abs()))
}

fn from_infinity(p: &RateParameters, cfg: &IntegratorConfig, offset: f64, x0: State, km: f64) -> Result<DistinguishedTrajectory> {
    let cutoff = 10.0 * x0.s.max(km);
    let norm = (1.0 + p.e_t * p.e_t).sqrt();
    let seed = [offset * p.e_t / norm, offset / norm];

    // chart phase, with original time carried as a third component (dt/dtau = x3)
    let chart_field = |_: f64, y: &[f64; 3]| {
        let d = chart_rhs(Chart::X1Chart, p, [y[0], y[1]]);
        [d[0], d[1], y[1]]
    };
    let reach = |_: f64, y: &[f64; 3]| y[1] * cutoff - 1.0;
    let drift = (p.v_max() - p.k0).abs().max(1e-300);
    let tau_max = 4.0 / (drift * seed[1] * seed[1]) + 1e4 / p.k1;
    let ccfg = IntegratorConfig { dense_grid: None, ..cfg.clone() };
    let chart_run = integrate::integrate(chart_field, [seed[0], seed[1], 0.0], (0.0, tau_max), &ccfg, Some(&reach))?;
    if chart_run.states.iter().any(|y| y[1] <= 0.0) {
        return Err(Error::NonConvergence("orbit left the upper half chart (x3 <= 0)".into()));
    }
    match chart_run.termination {
        Termination::EventFired => {}
        Termination::MaxSteps => return Err(Error::MaxSteps(ccfg.max_steps)),
        other => return Err(Error::NonConvergence(format!("chart phase ended with {other:?} before s = {cutoff}"))),
    }

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut derivs = Vec::new();
    for y in &chart_run.states {
        let x = Chart::X1Chart.to_plane([y[0], y[1]]);
        times.push(y[2]);
        states.push(x.to_array());
        derivs.push(model::rhs_array(p, &x.to_array()));
    }
    let chart = Trajectory {
        times: chart_run.times.clone(),
        states: chart_run.states.iter().map(|y| [y[0], y[1]]).collect(),
        derivs: chart_run.derivs.iter().map(|d| [d[0], d[1]]).collect(),
        step_rejections: chart_run.step_rejections,
        termination: chart_run.termination,
    };

    // plane phase down to the node
    let start = *states.last().expect("chart run has samples");
    let t_shift = *times.last().expect("chart run has samples");
    let radius = 1e-7 * (1.0 + x0.s.abs() + x0.c.abs());
    let near = |_: f64, x: &[f64; 2]| (x[0] - x0.s).hypot(x[1] - x0.c) - radius;
    let jac = model::jacobian(p, x0);
    let slow = linalg::eigenvalues(&jac).real_parts()[1].abs().max(1e-300);
    let t_max = (cutoff / (p.v_max() - p.k0)) * 10.0 + 50.0 / slow;
    let pcfg = IntegratorConfig { dense_grid: None, ..cfg.clone() };
    let run = integrate::integrate(|_, x| model::rhs_array(p, x), start, (0.0, t_max), &pcfg, Some(&near))?;
    match run.termination {
        Termination::EventFired => {}
        Termination::MaxSteps => return Err(Error::MaxSteps(pcfg.max_steps)),
        other => return Err(Error::NonConvergence(format!("plane phase ended with {other:?} away from the node"))),
    }
    for i in 1..run.len() {
        times.push(run.times[i] + t_shift);
        states.push(run.states[i]);
        derivs.push(run.derivs[i]);
    }
    let plane = Trajectory {
        times,
        states,
        derivs,
        step_rejections: chart_run.step_rejections + run.step_rejections,
        termination: Termination::EventFired,
    };
    let endpoint = State::from_array(plane.last());
    let tail_max_deviation = tail_deviation(p, &plane);
    Ok(DistinguishedTrajectory { case: DistinguishedCase::FromInfinity, plane, chart, tail_max_deviation, endpoint })
}

fn to_infinity(p: &RateParameters, cfg: &IntegratorConfig, offset: f64, x0: State, km: f64) -> Result<DistinguishedTrajectory> {
    let cutoff = 100.0 * km;
    let jac = model::jacobian(p, x0);
    let unstable = linalg::eigenvalues(&jac).real_parts()[1];
    let mut v = linalg::eigenvector(&jac, unstable);
    if v[0] < 0.0 {
        v = [-v[0], -v[1]];
    }
    let seed = [x0.s + offset * v[0], x0.c + offset * v[1]];
    let past = |_: f64, x: &[f64; 2]| x[0] - cutoff;
    let t_max = (1.0 / offset).ln() / unstable * 10.0 + 10.0 * (cutoff - x0.s) / (p.k0 - p.v_max());
    let pcfg = IntegratorConfig { dense_grid: None, ..cfg.clone() };
    let plane = integrate::integrate(|_, x| model::rhs_array(p, x), seed, (0.0, t_max), &pcfg, Some(&past))?;
    match plane.termination {
        Termination::EventFired => {}
        Termination::MaxSteps => return Err(Error::MaxSteps(pcfg.max_steps)),
        other => return Err(Error::NonConvergence(format!("run ended with {other:?} before s = {cutoff}"))),
    }
    let mut ct = Vec::new();
    let mut cs = Vec::new();
    for (t, x) in plane.times.iter().zip(&plane.states) {
        if x[0] > 0.0 {
            ct.push(*t);
            cs.push(Chart::X1Chart.from_plane(State::from_array(*x)));
        }
    }
    let chart = Trajectory::from_samples(ct, cs)?;
    let endpoint = State::from_array(plane.last());
    let tail_max_deviation = tail_deviation(p, &plane);
    Ok(DistinguishedTrajectory { case: DistinguishedCase::ToInfinity, plane, chart, tail_max_deviation, endpoint })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1a() -> RateParameters {
        RateParameters::new(2.5, 1.0, 1.0, 1.0, 3.0).unwrap()
    }

    #[test]
    fn equator_stationary_points() {
        let p = fig1a();
        assert_eq!(chart_rhs(Chart::X1Chart, &p, [0.0, 0.0]), [0.0, 0.0]);
        assert_eq!(chart_rhs(Chart::X1Chart, &p, [-1.0, 0.0]), [0.0, 0.0]);
        assert_eq!(chart_rhs(Chart::X2Chart, &p, [0.0, 0.0]), [0.0, 0.0]);
        assert_eq!(chart_rhs(Chart::X2Chart, &p, [-1.0, 0.0]), [0.0, 0.0]);
        assert_eq!(chart_rhs(Chart::X1Chart, &p, [1.0, 0.0]), [-2.0, 0.0]);
    }

    #[test]
    fn labels_by_inflow() {
        let c = classify_infinity(&fig1a()).unwrap();
        assert_eq!(c.p1.label, InfinityLabel::DegenerateSaddle);
        assert_eq!(c.p2.label, InfinityLabel::SaddleNode);
        assert_eq!(c.p3.label, InfinityLabel::RepellingNode);
        assert_eq!(c.p1.jacobian, [[-1.0, 1.0], [0.0, 0.0]]);
        assert_eq!(c.p3.jacobian, [[1.0, 3.0], [0.0, 1.0]]);
        assert!(c.p2_sign_check.signs_disagree);
        assert_eq!(c.upper_region_alpha_limit, None);

        let p = RateParameters::new(3.5, 1.0, 1.0, 1.0, 3.0).unwrap();
        let c = classify_infinity(&p).unwrap();
        assert_eq!(c.p1.label, InfinityLabel::DegenerateAttractingNode);
        assert_eq!(c.upper_region_alpha_limit.as_deref(), Some("undetermined"));

        let p = RateParameters::new(3.0, 1.0, 1.0, 1.0, 3.0).unwrap();
        let c = classify_infinity(&p).unwrap();
        assert_eq!(c.p1.label, InfinityLabel::DegenerateAttractingNodeDeg4);
        assert_eq!(c.p1.nfim_coefficient, Some(-12.0));
    }

    #[test]
    fn chart_round_trip() {
        let x = State::new(3.0, 0.4);
        for chart in [Chart::X1Chart, Chart::X2Chart] {
            let y = chart.to_plane(chart.from_plane(x));
            assert!((y.s - x.s).abs() < 1e-15 && (y.c - x.c).abs() < 1e-15);
        }
    }
}
