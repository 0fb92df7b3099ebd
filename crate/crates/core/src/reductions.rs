//! Closed-form reduced equations for `s` and the planar Fenichel projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::model::{ParameterFamily, RateParameters, State};
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum ReducedKind {
    SQSSA,
    QEA,
    LinearLaw,
    Fenichel_k0k1,
    Fenichel_k0k2,
    ClassicalQSS_k0k2,
}

impl ReducedKind {
    pub const ALL: [ReducedKind; 6] = [
        Self::SQSSA,
        Self::QEA,
        Self::LinearLaw,
        Self::Fenichel_k0k1,
        Self::Fenichel_k0k2,
        Self::ClassicalQSS_k0k2,
    ];

    pub fn cli_name(self) -> &'static str {
        match self {
            Self::SQSSA => "sqssa",
            Self::QEA => "qea",
            Self::LinearLaw => "linear",
            Self::Fenichel_k0k1 => "fenichel-k0k1",
            Self::Fenichel_k0k2 => "fenichel-k0k2",
            Self::ClassicalQSS_k0k2 => "classical-k0k2",
        }
    }
}

impl std::str::FromStr for ReducedKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.cli_name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown reduction '{s}'")))
    }
}

impl std::fmt::Display for ReducedKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.cli_name())
    }
}

/// A reduced equation `ds/dt = rhs_s(s)` with its manifold `c = manifold_c(s)`
/// and the map from full initial values to a reduced initial value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedModel {
    pub kind: ReducedKind,
    pub params: RateParameters,
}

pub fn reduced_model(p: &RateParameters, kind: ReducedKind) -> Result<ReducedModel> {
    use ReducedKind::*;
    match kind {
        SQSSA | LinearLaw => {
            p.require_k_m()?;
        }
        QEA | Fenichel_k0k2 | ClassicalQSS_k0k2 => {
            p.require_k_s()?;
            if p.km1 == 0.0 {
                return Err(Error::InvalidParameter(format!("{kind} needs km1 > 0 (K_E = 0)")));
            }
        }
        Fenichel_k0k1 => {
            if p.km1 + p.k2 == 0.0 {
                return Err(Error::InvalidParameter("Fenichel_k0k1 needs km1 + k2 > 0".into()));
            }
        }
    }
    Ok(ReducedModel { kind, params: *p })
}

impl ReducedModel {
    pub fn rhs_s(&self, s: f64) -> f64 {
        let p = &self.params;
        match self.kind {
            ReducedKind::SQSSA => {
                let km = (p.km1 + p.k2) / p.k1;
                p.k0 - p.v_max() * s / (km + s)
            }
            ReducedKind::LinearLaw => {
                let km = (p.km1 + p.k2) / p.k1;
                p.k0 - p.v_max() * s / km
            }
            ReducedKind::Fenichel_k0k1 => p.k0 - p.k1 * p.k2 * p.e_t * s / (p.km1 + p.k2),
            ReducedKind::Fenichel_k0k2 | ReducedKind::QEA => {
                let a = p.k1 * s + p.km1;
                a * (p.k0 * a - p.k2 * p.k1 * p.e_t * s) / (p.k1 * p.km1 * p.e_t + a * a)
            }
            ReducedKind::ClassicalQSS_k0k2 => p.k0 - p.k2 * p.k1 * p.e_t * s / (p.k1 * s + p.km1),
        }
    }

    pub fn manifold_c(&self, s: f64) -> f64 {
        let p = &self.params;
        match self.kind {
            ReducedKind::SQSSA => {
                let km = (p.km1 + p.k2) / p.k1;
                p.e_t * s / (km + s)
            }
            ReducedKind::LinearLaw => {
                let km = (p.km1 + p.k2) / p.k1;
                p.e_t * s / km
            }
            ReducedKind::Fenichel_k0k1 => 0.0,
            ReducedKind::QEA | ReducedKind::Fenichel_k0k2 | ReducedKind::ClassicalQSS_k0k2 => {
                let ke = p.km1 / p.k1;
                p.e_t * s / (ke + s)
            }
        }
    }

    /// Reduced initial value for the full initial state `(s0, c0)`.
    ///
    /// Fenichel_k0k1 moves along the fast fibres `s + km1 c/(km1 + k2) = const`;
    /// the `(k0, k2)` reductions use the fast first integral `s + c`.
    pub fn map_initial(&self, s0: f64, c0: f64) -> Result<f64> {
        let p = &self.params;
        match self.kind {
            ReducedKind::SQSSA | ReducedKind::QEA | ReducedKind::LinearLaw => Ok(s0),
            ReducedKind::Fenichel_k0k1 => Ok(s0 + p.km1 * c0 / (p.km1 + p.k2)),
            ReducedKind::Fenichel_k0k2 | ReducedKind::ClassicalQSS_k0k2 => {
                let total = s0 + c0;
                if total <= 0.0 {
                    return Ok(0.0);
                }
                roots::bisect(|s| s + self.manifold_c(s) - total, 0.0, total, 0.0, 200)
            }
        }
    }
}

/// Decomposition `h = P f` of the fast part and the projection
/// `Pi = I - P (Df P)^-1 Df` for one TFPV family.
///
/// `g` is the remainder of the vector field (the terms carrying the small
/// parameters), so `P f + g` is the full vector field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionData {
    pub family: ParameterFamily,
    pub params: RateParameters,
}

pub fn fenichel_projection(p: &RateParameters, family: ParameterFamily) -> Result<ProjectionData> {
    if !family.is_tfpv() {
        return Err(Error::InvalidInput(format!("{family:?} is not a TFPV family")));
    }
    if family == ParameterFamily::TFPV_k0_k2 && p.km1 == 0.0 {
        return Err(Error::InvalidParameter("the (k0, k2) projection needs km1 > 0".into()));
    }
    Ok(ProjectionData { family, params: *p })
}

impl ProjectionData {
    pub fn p_vec(&self, x: State) -> [f64; 2] {
        let p = &self.params;
        match self.family {
            ParameterFamily::TFPV_k0_eT => [p.k1 * x.s + p.km1, -(p.k1 * x.s + p.km1 + p.k2)],
            ParameterFamily::TFPV_k0_k1 => [p.km1, -(p.km1 + p.k2)],
            _ => [-1.0, 1.0],
        }
    }

    pub fn f(&self, x: State) -> f64 {
        let p = &self.params;
        match self.family {
            ParameterFamily::TFPV_k0_k2 => p.k1 * (p.e_t - x.c) * x.s - p.km1 * x.c,
            _ => x.c,
        }
    }

    pub fn df(&self, x: State) -> [f64; 2] {
        let p = &self.params;
        match self.family {
            ParameterFamily::TFPV_k0_k2 => [p.k1 * (p.e_t - x.c), -(p.k1 * x.s + p.km1)],
            _ => [0.0, 1.0],
        }
    }

    pub fn g(&self, x: State) -> [f64; 2] {
        let p = &self.params;
        match self.family {
            ParameterFamily::TFPV_k0_eT => [p.k0 - p.k1 * p.e_t * x.s, p.k1 * p.e_t * x.s],
            ParameterFamily::TFPV_k0_k1 => {
                let b = p.k1 * (p.e_t - x.c) * x.s;
                [p.k0 - b, b]
            }
            _ => [p.k0, -p.k2 * x.c],
        }
    }

    pub fn pi(&self, x: State) -> Result<Mat2> {
        let pv = self.p_vec(x);
        let d = self.df(x);
        let dfp = d[0] * pv[0] + d[1] * pv[1];
        if dfp == 0.0 || !dfp.is_finite() {
            return Err(Error::SingularProjection { s: x.s, c: x.c });
        }
        Ok([
            [1.0 - pv[0] * d[0] / dfp, -pv[0] * d[1] / dfp],
            [-pv[1] * d[0] / dfp, 1.0 - pv[1] * d[1] / dfp],
        ])
    }

    /// Point of the critical manifold `f = 0` above `s`.
    pub fn manifold_point(&self, s: f64) -> State {
        let p = &self.params;
        match self.family {
            ParameterFamily::TFPV_k0_k2 => State::new(s, p.k1 * p.e_t * s / (p.k1 * s + p.km1)),
            _ => State::new(s, 0.0),
        }
    }

    /// A tangent vector of the critical manifold at `x`.
    pub fn tangent(&self, x: State) -> [f64; 2] {
        let d = self.df(x);
        [-d[1], d[0]]
    }

    /// `Pi g` at `x`.
    pub fn projected_rhs(&self, x: State) -> Result<[f64; 2]> {
        let pi = self.pi(x)?;
        Ok(crate::linalg::matvec(&pi, self.g(x)))
    }

    /// Reduced `ds/dt` on the critical manifold.
    pub fn reduced_s_rhs(&self, s: f64) -> Result<f64> {
        Ok(self.projected_rhs(self.manifold_point(s))?[0])
    }

    /// The closed-form reduction this projection reproduces.
    pub fn matching_kind(&self) -> ReducedKind {
        match self.family {
            ParameterFamily::TFPV_k0_eT => ReducedKind::SQSSA,
            ParameterFamily::TFPV_k0_k1 => ReducedKind::Fenichel_k0k1,
            _ => ReducedKind::Fenichel_k0k2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rhs;

    fn fig1a() -> RateParameters {
        RateParameters::new(2.5, 1.0, 1.0, 1.0, 3.0).unwrap()
    }

    #[test]
    fn sqssa_fixed_point_is_equilibrium() {
        let m = reduced_model(&fig1a(), ReducedKind::SQSSA).unwrap();
        assert_eq!(m.rhs_s(20.0), 0.0);
        let r = roots::bisect(|s| m.rhs_s(s), 0.0, 100.0, 1e-13, 200).unwrap();
        assert!((r - 20.0).abs() < 1e-11);
    }

    #[test]
    fn linear_law_fixed_point() {
        let m = reduced_model(&fig1a(), ReducedKind::LinearLaw).unwrap();
        assert!(m.rhs_s(10.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.rhs_s(0.0), 2.5);
    }

    #[test]
    fn k0k1_initial_map() {
        let m = reduced_model(&fig1a(), ReducedKind::Fenichel_k0k1).unwrap();
        assert!((m.map_initial(1.0, 0.4).unwrap() - 1.1).abs() < 1e-15);
    }

    #[test]
    fn first_integral_map() {
        let p = RateParameters::new(0.01, 1.0, 1.0, 1.0, 0.01).unwrap();
        let m = reduced_model(&p, ReducedKind::Fenichel_k0k2).unwrap();
        for (s0, c0) in [(0.0, 0.0), (1.0, 0.0), (3.0, 0.7), (0.2, 0.9)] {
            let st = m.map_initial(s0, c0).unwrap();
            assert!((st + m.manifold_c(st) - (s0 + c0)).abs() < 1e-10);
        }
    }

    #[test]
    fn foil_differs_from_fenichel() {
        let p = RateParameters::new(0.01, 1.0, 1.0, 1.0, 0.01).unwrap();
        let f = reduced_model(&p, ReducedKind::Fenichel_k0k2).unwrap();
        let c = reduced_model(&p, ReducedKind::ClassicalQSS_k0k2).unwrap();
        assert!((f.rhs_s(1.0) - c.rhs_s(1.0)).abs() > 1e-4);
    }

    #[test]
    fn qea_lies_above_sqssa() {
        let q = reduced_model(&fig1a(), ReducedKind::QEA).unwrap();
        let s = reduced_model(&fig1a(), ReducedKind::SQSSA).unwrap();
        for i in 0..100 {
            let x = i as f64 * 0.7;
            assert!(q.manifold_c(x) >= s.manifold_c(x));
        }
    }

    #[test]
    fn decomposition_sums_to_vector_field() {
        let p = fig1a();
        for fam in ParameterFamily::TFPV {
            let pd = fenichel_projection(&p, fam).unwrap();
            for &(s, c) in &[(0.3, 0.1), (5.0, 0.8), (12.0, 0.2)] {
                let x = State::new(s, c);
                let pv = pd.p_vec(x);
                let f = pd.f(x);
                let g = pd.g(x);
                let d = rhs(&p, x);
                assert!((pv[0] * f + g[0] - d.ds).abs() < 1e-13);
                assert!((pv[1] * f + g[1] - d.dc).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn k0_et_projection_row() {
        let pd = fenichel_projection(&fig1a(), ParameterFamily::TFPV_k0_eT).unwrap();
        let pi = pd.pi(pd.manifold_point(0.0)).unwrap();
        assert_eq!(pi[0], [1.0, 0.25]);
        let pd = fenichel_projection(&fig1a(), ParameterFamily::TFPV_k0_k1).unwrap();
        assert_eq!(pd.pi(pd.manifold_point(3.0)).unwrap(), [[1.0, 0.25], [0.0, 0.0]]);
    }

    #[test]
    fn singular_projection_reported() {
        let p = RateParameters::new(0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let pd = fenichel_projection(&p, ParameterFamily::TFPV_k0_eT).unwrap();
        assert!(matches!(pd.pi(State::new(0.0, 0.0)), Err(Error::SingularProjection { .. })));
    }
}
