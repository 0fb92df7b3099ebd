//! Parameters, the planar mass-action vector field and its equilibria.
//!
//! State variables are substrate `s` and complex `c`; free enzyme is
//! `e_T - c`. Units are carried in documentation only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::linalg::{self, Mat2, Spectrum};

/// Rate constants and total enzyme.
///
/// JSON form is a flat object `{"k0", "eT", "k1", "km1", "k2"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParameters")]
pub struct RateParameters {
    /// Substrate inflow, concentration/time.
    pub k0: f64,
    /// Total enzyme, concentration.
    #[serde(rename = "eT")]
    pub e_t: f64,
    /// Binding, 1/(concentration time).
    pub k1: f64,
    /// Unbinding, 1/time.
    pub km1: f64,
    /// Catalysis, 1/time.
    pub k2: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameters {
    k0: f64,
    #[serde(rename = "eT")]
    e_t: f64,
    k1: f64,
    km1: f64,
    k2: f64,
}

impl TryFrom<RawParameters> for RateParameters {
    type Error = Error;
    fn try_from(r: RawParameters) -> Result<Self> {
        RateParameters::new(r.k0, r.e_t, r.k1, r.km1, r.k2)
    }
}

impl RateParameters {
    pub fn new(k0: f64, e_t: f64, k1: f64, km1: f64, k2: f64) -> Result<Self> {
        for (name, v) in [("k0", k0), ("eT", e_t), ("k1", k1), ("km1", km1), ("k2", k2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(Self { k0, e_t, k1, km1, k2 })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }

    /// Michaelis constant `(km1 + k2)/k1`; `None` when `k1 = 0`.
    pub fn k_m(&self) -> Option<f64> {
        (self.k1 > 0.0).then(|| (self.km1 + self.k2) / self.k1)
    }

    /// Dissociation constant `km1/k1`; `None` when `k1 = 0`.
    pub fn k_s(&self) -> Option<f64> {
        (self.k1 > 0.0).then(|| self.km1 / self.k1)
    }

    pub fn v_max(&self) -> f64 {
        self.k2 * self.e_t
    }

    pub(crate) fn require_k_m(&self) -> Result<f64> {
        match self.k_m() {
            Some(km) if km > 0.0 => Ok(km),
            _ => Err(Error::InvalidParameter("K_M requires k1 > 0 and km1 + k2 > 0".into())),
        }
    }

    pub(crate) fn require_k_s(&self) -> Result<f64> {
        self.k_s().ok_or_else(|| Error::InvalidParameter("K_S requires k1 > 0".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub s: f64,
    pub c: f64,
}

impl State {
    pub fn new(s: f64, c: f64) -> Self {
        Self { s, c }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.s, self.c]
    }

    pub fn from_array(x: [f64; 2]) -> Self {
        Self { s: x[0], c: x[1] }
    }

    /// Membership in the strip `s >= 0, 0 <= c <= e_T`.
    pub fn in_strip(&self, p: &RateParameters) -> bool {
        self.s >= 0.0 && self.c >= 0.0 && self.c <= p.e_t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDerivative {
    pub ds: f64,
    pub dc: f64,
}

pub fn rhs(p: &RateParameters, x: State) -> StateDerivative {
    let bind = p.k1 * (p.e_t - x.c) * x.s;
    StateDerivative { ds: p.k0 - bind + p.km1 * x.c, dc: bind - (p.km1 + p.k2) * x.c }
}

/// Vector field on plain arrays, for the integrator.
pub fn rhs_array(p: &RateParameters, x: &[f64; 2]) -> [f64; 2] {
    let d = rhs(p, State::from_array(*x));
    [d.ds, d.dc]
}

pub fn jacobian(p: &RateParameters, x: State) -> Mat2 {
    let free = p.e_t - x.c;
    [
        [-p.k1 * free, p.k1 * x.s + p.km1],
        [p.k1 * free, -p.k1 * x.s - p.km1 - p.k2],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    AttractingNodeFirstQuadrant,
    /// Closed system (`k0 = 0`): the origin attracts.
    AttractingNodeAtOrigin,
    SaddleSecondQuadrant,
    /// `k2 e_T = k0` exactly: the stationary point has gone to infinity.
    NoneAtInfinityBalance,
    /// `k1 = 0` or `k2 = 0` with positive inflow: no stationary point at all.
    NoStationaryPoint,
    /// A line of stationary points (`k0 = k1 = 0`, `k0 = e_T = 0` or `k0 = k2 = 0`).
    DegenerateFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub point: Option<State>,
    pub kind: EquilibriumKind,
    pub eigenvalues: Option<Spectrum>,
}

impl Equilibrium {
    fn absent(kind: EquilibriumKind) -> Self {
        Self { point: None, kind, eigenvalues: None }
    }
}

/// Finite stationary point and its type.
///
/// The type comes from the Jacobian eigenvalues; the sign of `k2 e_T - k0`
/// must agree or [`Error::ClassificationMismatch`] is returned.
pub fn equilibrium(p: &RateParameters) -> Result<Equilibrium> {
    use EquilibriumKind::*;
    if p.k0 == 0.0 && (p.k1 == 0.0 || p.e_t == 0.0 || p.k2 == 0.0) {
        return Ok(Equilibrium::absent(DegenerateFamily));
    }
    if p.k0 == 0.0 {
        let x = State::new(0.0, 0.0);
        let spec = linalg::eigenvalues(&jacobian(p, x));
        return match spec {
            Spectrum::Real { hi, .. } if hi < 0.0 => {
                Ok(Equilibrium { point: Some(x), kind: AttractingNodeAtOrigin, eigenvalues: Some(spec) })
            }
            _ => Err(Error::ClassificationMismatch(format!("closed-system origin has spectrum {spec:?}"))),
        };
    }
    if p.k1 == 0.0 || p.k2 == 0.0 {
        return Ok(Equilibrium::absent(NoStationaryPoint));
    }
    let gap = p.k2 * p.e_t - p.k0;
    if gap == 0.0 {
        return Ok(Equilibrium::absent(NoneAtInfinityBalance));
    }
    let s_hat = (p.km1 + p.k2) * p.k0 / (p.k1 * gap);
    let c_hat = p.k0 / p.k2;
    let x = State::new(s_hat, c_hat);
    let spec = linalg::eigenvalues(&jacobian(p, x));
    let kind = match spec {
        Spectrum::Real { lo, hi } if hi < 0.0 && lo < 0.0 => AttractingNodeFirstQuadrant,
        Spectrum::Real { lo, hi } if lo < 0.0 && hi > 0.0 => SaddleSecondQuadrant,
        _ => return Err(Error::ClassificationMismatch(format!("spectrum {spec:?} at {x:?}"))),
    };
    let expected = if gap > 0.0 { AttractingNodeFirstQuadrant } else { SaddleSecondQuadrant };
    if kind != expected {
        return Err(Error::ClassificationMismatch(format!(
            "eigenvalues say {kind:?}, sign of k2 eT - k0 = {gap} says {expected:?}"
        )));
    }
    Ok(Equilibrium { point: Some(x), kind, eigenvalues: Some(spec) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum ParameterFamily {
    TFPV_k0_eT,
    TFPV_k0_k1,
    TFPV_k0_k2,
    QSSPV_eT,
    QSSPV_k1,
    QSSPV_k0_k2,
    QSSPV_km1_k2,
    Generic,
}

impl ParameterFamily {
    pub fn is_tfpv(self) -> bool {
        matches!(self, Self::TFPV_k0_eT | Self::TFPV_k0_k1 | Self::TFPV_k0_k2)
    }

    pub const TFPV: [ParameterFamily; 3] = [Self::TFPV_k0_eT, Self::TFPV_k0_k1, Self::TFPV_k0_k2];
}

impl std::str::FromStr for ParameterFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        use ParameterFamily::*;
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "tfpv_k0_et" | "k0_et" => TFPV_k0_eT,
            "tfpv_k0_k1" | "k0_k1" => TFPV_k0_k1,
            "tfpv_k0_k2" | "k0_k2" => TFPV_k0_k2,
            "qsspv_et" => QSSPV_eT,
            "qsspv_k1" => QSSPV_k1,
            "qsspv_k0_k2" => QSSPV_k0_k2,
            "qsspv_km1_k2" => QSSPV_km1_k2,
            "generic" => Generic,
            _ => return Err(Error::InvalidInput(format!("unknown parameter family '{s}'"))),
        })
    }
}

/// Families whose defining components vanish.
///
/// A component counts as zero when it is at most `tol` times the largest
/// parameter of the same physical dimension. Only `km1` and `k2` share a
/// dimension, so for `k0`, `e_T` and `k1` the test is exact.
pub fn classify_parameter_point(p: &RateParameters, tol: f64) -> Vec<ParameterFamily> {
    use ParameterFamily::*;
    let rate_scale = p.km1.max(p.k2);
    let z_k0 = p.k0 <= tol * p.k0;
    let z_et = p.e_t <= tol * p.e_t;
    let z_k1 = p.k1 <= tol * p.k1;
    let z_km1 = p.km1 <= tol * rate_scale;
    let z_k2 = p.k2 <= tol * rate_scale;
    let mut out = Vec::new();
    if z_k0 && z_et {
        out.push(TFPV_k0_eT);
    }
    if z_k0 && z_k1 {
        out.push(TFPV_k0_k1);
    }
    if z_k0 && z_k2 {
        out.push(TFPV_k0_k2);
    }
    if z_et {
        out.push(QSSPV_eT);
    }
    if z_k1 {
        out.push(QSSPV_k1);
    }
    if z_k0 && z_k2 {
        out.push(QSSPV_k0_k2);
    }
    if z_km1 && z_k2 {
        out.push(QSSPV_km1_k2);
    }
    if out.is_empty() {
        out.push(Generic);
    }
    out
}

/// Scale the two components that define a TFPV family by `eps`.
pub fn ray_scale(p_star: &RateParameters, family: ParameterFamily, eps: f64) -> Result<RateParameters> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps = {eps} must be finite and >= 0")));
    }
    let mut p = *p_star;
    match family {
        ParameterFamily::TFPV_k0_eT => {
            p.k0 *= eps;
            p.e_t *= eps;
        }
        ParameterFamily::TFPV_k0_k1 => {
            p.k0 *= eps;
            p.k1 *= eps;
        }
        ParameterFamily::TFPV_k0_k2 => {
            p.k0 *= eps;
            p.k2 *= eps;
        }
        other => return Err(Error::InvalidInput(format!("{other:?} is not a TFPV family"))),
    }
    Ok(p)
}

/// Free enzyme and product along a planar trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FullTrajectory {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub e: Vec<f64>,
    pub c: Vec<f64>,
    pub product: Vec<f64>,
}

/// Rebuild `e = e_T - c` and the product `p0 + int k2 c dt` (trapezoid rule).
pub fn recover_full_state(p: &RateParameters, traj: &Trajectory<2>, p0: f64) -> FullTrajectory {
    let (times, states) = (&traj.times, &traj.states);
    let mut product = Vec::with_capacity(times.len());
    let mut acc = p0;
    for i in 0..times.len() {
        if i > 0 {
            acc += 0.5 * p.k2 * (states[i][1] + states[i - 1][1]) * (times[i] - times[i - 1]);
        }
        product.push(acc);
    }
    FullTrajectory {
        times: times.to_vec(),
        s: states.iter().map(|x| x[0]).collect(),
        e: states.iter().map(|x| p.e_t - x[1]).collect(),
        c: states.iter().map(|x| x[1]).collect(),
        product,
    }
}
