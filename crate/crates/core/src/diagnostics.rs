//! Small parameters and error bounds for the quasi-steady-state reduction.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RateParameters;
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Inflow well below capacity: the interior maximum `delta_m` governs.
    UseDeltaM,
    /// `delta(0)` governs.
    UseDelta0,
    /// `k0 >= k2 eT`: no positive stationary point.
    InflowExceedsCapacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QssaDiagnostics {
    pub eps_c: f64,
    pub tau0: f64,
    /// Dimensional (concentration).
    pub eps_star: f64,
    pub eps_o: f64,
    pub alpha: f64,
    pub delta0: f64,
    /// Present only when `k2 eT > k0`.
    pub delta_m: Option<f64>,
    pub verdict: Verdict,
}

pub fn qssa_diagnostics(p: &RateParameters) -> Result<QssaDiagnostics> {
    if !(p.k1 > 0.0 && p.k2 > 0.0 && p.e_t > 0.0) {
        return Err(Error::InvalidParameter("diagnostics need k1, k2, eT > 0".into()));
    }
    let tau0 = p.km1 + p.k2;
    let km = tau0 / p.k1;
    let alpha = p.k0 / p.v_max();
    let delta_m = (p.v_max() > p.k0).then(|| delta_max(p, km, alpha));
    let verdict = if alpha >= 1.0 {
        Verdict::InflowExceedsCapacity
    } else if alpha < switch_threshold() {
        Verdict::UseDeltaM
    } else {
        Verdict::UseDelta0
    };
    Ok(QssaDiagnostics {
        eps_c: p.k1 * p.e_t / tau0,
        tau0,
        eps_star: p.k0 * p.k1 * p.e_t / (tau0 * tau0),
        eps_o: p.v_max() / (km * tau0),
        alpha,
        delta0: p.k0 / (p.k1 * km * km),
        delta_m,
        verdict,
    })
}

fn delta_max(p: &RateParameters, km: f64, alpha: f64) -> f64 {
    27.0 * p.v_max() * (1.0 - alpha).powi(4) / (256.0 * p.k1 * km * km)
}

/// Dimensionless size of the second-order term of the slow-manifold series
/// along the `(k0, eT)` ray.
pub fn delta(p_star: &RateParameters, s: f64) -> Result<f64> {
    let km = p_star.require_k_m()?;
    let p = p_star;
    Ok((km * (s * (p.k2 * p.e_t - p.k0) - p.k0 * km)).abs() / (p.k1 * (s + km).powi(4)))
}

/// Location of the interior maximum of [`delta`], when `k2 eT > k0`.
pub fn delta_argmax(p: &RateParameters) -> Option<f64> {
    let km = p.k_m()?;
    let a = p.v_max() - p.k0;
    (a > 0.0).then(|| km * (a + 4.0 * p.k0) / (3.0 * a))
}

/// Root in `(0, 1)` of `(27/256)(1 - x)^4 = x`: the value of `k0/(k2 eT)`
/// where `delta_m` and `delta(0)` trade places.
pub fn switch_threshold() -> f64 {
    static ROOT: OnceLock<f64> = OnceLock::new();
    *ROOT.get_or_init(|| {
        roots::bisect(|x| 27.0 / 256.0 * (1.0 - x).powi(4) - x, 0.0, 0.5, 1e-12, 200)
            .expect("sign change on [0, 0.5]")
    })
}

/// Gronwall-type bound on the distance `|c - w(s)|` to the c-nullcline for
/// solutions starting in the wedge at distance `l0`.
pub fn gronwall_bound(p: &RateParameters, l0: f64, t: f64) -> f64 {
    let tau0 = p.km1 + p.k2;
    let eps_c = p.k1 * p.e_t / tau0;
    let floor = eps_c * p.k0 / tau0;
    (l0 * l0 * (-tau0 * t).exp() + floor * floor).sqrt()
}

/// `eT / (s0 + K_M/(1 - alpha) + k0/k2)`; requires `alpha < 1`.
pub fn stoleriu_ratio(p: &RateParameters, s0: f64) -> Result<f64> {
    let km = p.require_k_m()?;
    if p.k2 == 0.0 || p.k0 >= p.v_max() {
        return Err(Error::InvalidParameter("alpha = k0/(k2 eT) must be < 1".into()));
    }
    let alpha = p.k0 / p.v_max();
    Ok(p.e_t / (s0 + km / (1.0 - alpha) + p.k0 / p.k2))
}

/// The c-nullcline `w(s) = k1 eT s/(k1 s + km1 + k2)`; `eT` in the limit
/// `k1 s + km1 + k2 -> 0`.
pub fn qss_variety(p: &RateParameters, s: f64) -> f64 {
    let den = p.k1 * s + p.km1 + p.k2;
    if den == 0.0 {
        p.e_t
    } else {
        p.k1 * p.e_t * s / den
    }
}

/// Lie-derivative defect `k1 (eT - w)(k0 - k2 w)` of the c-nullcline at `s`.
pub fn qss_defect(p: &RateParameters, s: f64) -> f64 {
    let w = qss_variety(p, s);
    // eT - w in closed form, so that km1 + k2 = 0 gives an exact zero
    let den = p.k1 * s + p.km1 + p.k2;
    let free = if den == 0.0 { 0.0 } else { p.e_t * (p.km1 + p.k2) / den };
    p.k1 * free * (p.k0 - p.k2 * w)
}
