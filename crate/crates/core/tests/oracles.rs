//! Checks against independent computations: closed forms written out by
//! hand, a fixed-step RK4 and plain bisection.

use qssa_lab::diagnostics::{self, Verdict};
use qssa_lab::integrate::{self, CompareMode, IntegratorConfig, Trajectory};
use qssa_lab::linalg::Spectrum;
use qssa_lab::manifold;
use qssa_lab::model::{self, ParameterFamily, RateParameters, State};
use qssa_lab::phase_plane;
use qssa_lab::poincare::{self, Chart};
use qssa_lab::reductions::{self, ReducedKind};

fn fig1a() -> RateParameters {
    RateParameters::new(2.5, 1.0, 1.0, 1.0, 3.0).unwrap()
}

fn saddle() -> RateParameters {
    RateParameters::new(3.5, 1.0, 1.0, 1.0, 3.0).unwrap()
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    assert!(fa * f(b) < 0.0, "no sign change on [{a}, {b}]");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Classical fourth-order Runge-Kutta with a fixed step.
fn rk4(f: impl Fn(&[f64; 2]) -> [f64; 2], x0: [f64; 2], t_end: f64, steps: usize) -> Vec<(f64, [f64; 2])> {
    let h = t_end / steps as f64;
    let add = |x: &[f64; 2], k: &[f64; 2], a: f64| [x[0] + a * k[0], x[1] + a * k[1]];
    let mut x = x0;
    let mut out = vec![(0.0, x)];
    for i in 0..steps {
        let k1 = f(&x);
        let k2 = f(&add(&x, &k1, h / 2.0));
        let k3 = f(&add(&x, &k2, h / 2.0));
        let k4 = f(&add(&x, &k3, h));
        for j in 0..2 {
            x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        out.push(((i + 1) as f64 * h, x));
    }
    out
}

fn mm(p: &RateParameters, x: &[f64; 2]) -> [f64; 2] {
    let (s, c) = (x[0], x[1]);
    let bind = p.k1 * (p.e_t - c) * s;
    [p.k0 - bind + p.km1 * c, bind - (p.km1 + p.k2) * c]
}

#[test]
fn nullcline_intersection_is_the_equilibrium() {
    for p in [
        fig1a(),
        RateParameters::new(0.3, 2.0, 0.7, 1.5, 0.4).unwrap(),
        RateParameters::new(1.0, 0.5, 4.0, 0.1, 3.0).unwrap(),
    ] {
        let nc = phase_plane::nullclines(&p).unwrap();
        let s_star = bisect(|s| nc.n_c(s) - nc.n_s(s), 1e-9, 1e6);
        let x = model::equilibrium(&p).unwrap().point.unwrap();
        assert!((s_star - x.s).abs() <= 1e-10 * x.s.max(1.0), "{s_star} vs {}", x.s);
        assert!((nc.n_c(s_star) - x.c).abs() <= 1e-10);
    }
}

#[test]
fn nullclines_need_not_pinch_by_100_km_above_capacity() {
    // gap ~ (k0 - k2 eT)/(100 (km1 + k2)) = 3.8/10 >> eT/100
    let p = RateParameters::new(3.875, 0.05, 0.05, 0.05, 0.05).unwrap();
    let nc = phase_plane::nullclines(&p).unwrap();
    let s = 100.0 * p.k_m().unwrap();
    assert!((nc.n_c(s) - nc.n_s(s)).abs() > p.e_t / 100.0);
}

#[test]
fn equilibrium_eigenvalues_from_the_quadratic() {
    for p in [fig1a(), saddle()] {
        let eq = model::equilibrium(&p).unwrap();
        let x = eq.point.unwrap();
        // trace and determinant of the Jacobian, written out
        let a = -p.k1 * (p.e_t - x.c);
        let b = p.k1 * x.s + p.km1;
        let c = p.k1 * (p.e_t - x.c);
        let d = -(p.k1 * x.s + p.km1 + p.k2);
        let (tr, det) = (a + d, a * d - b * c);
        let disc = (tr * tr - 4.0 * det).sqrt();
        let want = [(tr - disc) / 2.0, (tr + disc) / 2.0];
        let j = model::jacobian(&p, x);
        let (jt, jd) = (j[0][0] + j[1][1], j[0][0] * j[1][1] - j[0][1] * j[1][0]);
        assert!((jt - tr).abs() < 1e-12 && (jd - det).abs() < 1e-12 * det.abs().max(1.0));
        let Some(Spectrum::Real { lo, hi }) = eq.eigenvalues else { panic!("{:?}", eq.eigenvalues) };
        assert!((lo - want[0]).abs() < 1e-10 && (hi - want[1]).abs() < 1e-10, "{lo} {hi} vs {want:?}");
        if det > 0.0 {
            assert!(want.iter().all(|l| *l < 0.0));
        } else {
            assert!(want[0] < 0.0 && want[1] > 0.0);
        }
    }
}

#[test]
fn node_is_reached_on_the_slow_time_scale() {
    let p = fig1a();
    let cfg = IntegratorConfig::with_tolerances(1e-10, 1e-12);
    let tr = integrate::simulate(&p, State::new(0.0, 0.0), 1200.0, &cfg, None).unwrap();
    let x = tr.last();
    assert!((x[0] - 20.0).abs() < 1e-6 && (x[1] - 5.0 / 6.0).abs() < 1e-6, "{x:?}");
    // at t = 50 the slow mode (rate ~0.0207) still leaves s several units short
    let x50 = tr.sample(50.0);
    assert!((x50[0] - 16.37).abs() < 0.01, "{x50:?}");
}

#[test]
fn above_capacity_substrate_grows_linearly_and_enzyme_saturates() {
    let p = saddle();
    let cfg = IntegratorConfig::with_tolerances(1e-10, 1e-12);
    let tr = integrate::simulate(&p, State::new(0.0, 0.0), 800.0, &cfg, None).unwrap();
    let (a, b) = (tr.sample(400.0), tr.sample(800.0));
    // d(s + c)/dt = k0 - k2 c lies between k0 - k2 eT and k0 - k2 c(400) once c increases
    let rate = (b[0] + b[1] - a[0] - a[1]) / 400.0;
    let net = p.k0 - p.k2 * p.e_t;
    assert!(rate > net && rate < p.k0 - p.k2 * a[1], "rate {rate}");
    assert!(b[0] > a[0] + 0.9 * net * 400.0);
    assert!(p.e_t - b[1] < p.e_t - a[1] && p.e_t - b[1] < 0.02, "{a:?} {b:?}");
}

#[test]
fn adaptive_solver_matches_fixed_step_rk4() {
    let p = fig1a();
    let cfg = IntegratorConfig::with_tolerances(1e-11, 1e-13);
    let tr = integrate::simulate(&p, State::new(15.0, 1.0), 10.0, &cfg, None).unwrap();
    let reference = rk4(|x| mm(&p, x), [15.0, 1.0], 10.0, 20_000);
    for &(t, x) in reference.iter().step_by(1000) {
        let y = tr.sample(t);
        assert!((x[0] - y[0]).abs() < 1e-8 && (x[1] - y[1]).abs() < 1e-8, "t = {t}: {x:?} vs {y:?}");
    }
}

#[test]
fn sup_error_against_rk4_solutions() {
    let p = fig1a();
    let km = p.k_m().unwrap();
    let steps = 20_000;
    let full = rk4(|x| mm(&p, x), [0.0, 0.0], 20.0, steps);
    let red = rk4(|x| [p.k0 - p.v_max() * x[0] / (km + x[0]), 0.0], [0.0, 0.0], 20.0, steps);
    let want = full.iter().zip(&red).fold(0.0f64, |m, (a, b)| m.max((a.1[0] - b.1[0]).abs()));

    let cfg = IntegratorConfig::with_tolerances(1e-11, 1e-13);
    let sim = integrate::simulate(&p, State::new(0.0, 0.0), 20.0, &cfg, None).unwrap();
    let rm = reductions::reduced_model(&p, ReducedKind::SQSSA).unwrap();
    let rtr = integrate::integrate(|_, x: &[f64; 1]| [rm.rhs_s(x[0])], [0.0], (0.0, 20.0), &cfg, None).unwrap();
    let got = integrate::compare_trajectories(&sim, &rtr, CompareMode::SupNormS, None).unwrap();
    assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    assert_eq!(integrate::compare_trajectories(&sim, &sim, CompareMode::L2S, None).unwrap(), 0.0);
}

#[test]
fn compare_on_a_linear_pair() {
    // s = t against s = 0 on [0, 2]
    let a = Trajectory::from_samples(vec![0.0, 1.0, 2.0], vec![[0.0], [1.0], [2.0]]).unwrap();
    let b = Trajectory::from_samples(vec![0.0, 2.0], vec![[0.0], [0.0]]).unwrap();
    assert_eq!(integrate::compare_trajectories(&a, &b, CompareMode::SupNormS, None).unwrap(), 2.0);
    let l2 = integrate::compare_trajectories(&a, &b, CompareMode::L2S, None).unwrap();
    // the trapezoid rule on the nodes 0, 1, 2 gives sqrt(3)
    assert!((l2 - 3f64.sqrt()).abs() < 1e-12, "{l2}");
}

#[test]
fn qss_defect_counterexample() {
    let p = fig1a();
    // w(4) = 4/8, so k1 (eT - w)(k0 - k2 w) = 0.5 * 1.0
    assert!((diagnostics::qss_defect(&p, 4.0) - 0.5).abs() < 1e-15);
    assert_eq!(diagnostics::qss_defect(&p, 20.0), 0.0);
}

#[test]
fn fenichel_and_classical_reductions_differ() {
    let p = RateParameters::new(0.05, 1.0, 1.0, 1.0, 0.06).unwrap();
    let fen = reductions::reduced_model(&p, ReducedKind::Fenichel_k0k2).unwrap();
    let cls = reductions::reduced_model(&p, ReducedKind::ClassicalQSS_k0k2).unwrap();
    for s in [0.5, 1.0, 3.0] {
        let a = p.k1 * s + p.km1;
        let f = a * (p.k0 * a - p.k2 * p.k1 * p.e_t * s) / (p.k1 * p.km1 * p.e_t + a * a);
        let c = p.k0 - p.k2 * p.k1 * p.e_t * s / a;
        assert!((fen.rhs_s(s) - f).abs() < 1e-15 && (cls.rhs_s(s) - c).abs() < 1e-15);
        // the factor a^2/(k1 km1 eT + a^2) separates them
        assert!((f - c).abs() > 1e-3 * c.abs(), "s = {s}");
    }
}

#[test]
fn verdict_switches_at_the_threshold() {
    // root of (27/256)(1 - x)^4 = x by Newton from 0
    let g = |x: f64| 27.0 / 256.0 * (1.0 - x).powi(4) - x;
    let dg = |x: f64| -27.0 / 64.0 * (1.0 - x).powi(3) - 1.0;
    let mut x = 0.0;
    for _ in 0..50 {
        x -= g(x) / dg(x);
    }
    assert!((diagnostics::switch_threshold() - x).abs() < 1e-10);
    for (alpha, want) in [(x - 1e-3, Verdict::UseDeltaM), (x + 1e-3, Verdict::UseDelta0)] {
        let p = RateParameters::new(alpha * 3.0, 1.0, 1.0, 1.0, 3.0).unwrap();
        assert_eq!(diagnostics::qssa_diagnostics(&p).unwrap().verdict, want, "alpha {alpha}");
    }
    assert_eq!(diagnostics::qssa_diagnostics(&saddle()).unwrap().verdict, Verdict::InflowExceedsCapacity);
}

/// Seed on the x2 = 0 axis of the first chart close to P1; after the fast
/// transient the orbit follows the centre direction and x3 drifts out for
/// `k2 eT > k0`, in for `k2 eT < k0`.
fn center_drift(p: &RateParameters) -> f64 {
    let eta = 1e-2;
    let cfg = IntegratorConfig::with_tolerances(1e-10, 1e-14);
    let f = |_: f64, x: &[f64; 2]| poincare::chart_rhs(Chart::X1Chart, p, *x);
    let tr = integrate::integrate(f, [0.0, eta], (0.0, 2e4), &cfg, None).unwrap();
    tr.last()[1] - tr.sample(50.0)[1]
}

#[test]
fn center_direction_at_p1_matches_the_coefficient_sign() {
    for p in [fig1a(), saddle()] {
        let coef = poincare::classify_infinity(&p).unwrap().p1.nfim_coefficient.unwrap();
        let drift = center_drift(&p);
        assert_eq!(drift > 0.0, coef > 0.0, "coef {coef}, drift {drift}");
        assert!(drift.abs() > 1e-4);
    }
}

#[test]
fn first_iterate_and_tail_contraction() {
    let p = fig1a();
    let grid = manifold::uniform_grid(30.0, 301).unwrap();
    let (_, report) = manifold::slow_manifold(&p, &grid, 1e-10, 6).unwrap();
    let c1 = &report.iterates[1];
    for (s, c) in grid.iter().zip(&c1.c_values) {
        assert_eq!(*c, p.k1 * p.e_t * s / (p.k1 * s + p.km1 + p.k2));
    }
    // s_tilde = k0/(k1 eT) = 2.5
    let from = grid.iter().position(|&s| s >= 2.5).unwrap();
    let sup: Vec<f64> = (1..report.iterates.len())
        .map(|i| {
            (from..grid.len())
                .map(|j| (report.iterates[i].c_values[j] - report.iterates[i - 1].c_values[j]).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert_eq!(sup.len(), 6);
    assert!(sup.windows(2).all(|w| w[1] < w[0]), "{sup:?}");
}

#[test]
fn series_error_is_third_order_on_the_k0_et_ray() {
    let p_star = fig1a();
    let grid = manifold::uniform_grid(30.0, 601).unwrap();
    let err = |eps: f64| {
        let p = model::ray_scale(&p_star, ParameterFamily::TFPV_k0_eT, eps).unwrap();
        let (curve, report) = manifold::slow_manifold(&p, &grid, 1e-14, 50).unwrap();
        assert!(report.converged);
        curve
            .grid
            .iter()
            .zip(&curve.c_values)
            .map(|(s, c)| (c - manifold::perturbation_series(&p_star, ParameterFamily::TFPV_k0_eT, *s, eps).unwrap()).abs())
            .fold(0.0, f64::max)
    };
    let (a, b) = (err(0.04), err(0.02));
    let slope = (a / b).log2();
    assert!((slope - 3.0).abs() < 0.3, "errors {a:e} {b:e}, slope {slope}");
}
