use proptest::prelude::*;

use qssa_lab::diagnostics;
use qssa_lab::integrate::{self, IntegratorConfig};
use qssa_lab::manifold;
use qssa_lab::model::{self, ParameterFamily, RateParameters, State};
use qssa_lab::phase_plane;
use qssa_lab::poincare::{self, Chart};
use qssa_lab::reductions::{self, ReducedKind};

fn positive() -> impl Strategy<Value = f64> {
    0.05f64..5.0
}

prop_compose! {
    fn any_params()(k0 in 0.0f64..5.0, e_t in positive(), k1 in positive(), km1 in positive(), k2 in positive()) -> RateParameters {
        RateParameters::new(k0, e_t, k1, km1, k2).unwrap()
    }
}

prop_compose! {
    /// Parameters with a positive stationary point.
    fn node_params()(e_t in positive(), k1 in positive(), km1 in positive(), k2 in positive(), frac in 0.05f64..0.95) -> RateParameters {
        RateParameters::new(frac * k2 * e_t, e_t, k1, km1, k2).unwrap()
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn quadrant_boundary_not_exited(p in any_params(), t in 0.0f64..50.0) {
        // s-axis: dc/dt >= 0
        prop_assert!(model::rhs(&p, State::new(t, 0.0)).dc >= 0.0);
        // c-axis: ds/dt >= 0
        prop_assert!(model::rhs(&p, State::new(0.0, t)).ds >= 0.0);
    }

    #[test]
    fn total_rate_identity(p in any_params(), s in 0.0f64..100.0, c in 0.0f64..5.0) {
        let d = model::rhs(&p, State::new(s, c));
        prop_assert!(close(d.ds + d.dc, p.k0 - p.k2 * c, 1e-12));
    }

    #[test]
    fn equilibrium_zeroes_rhs(p in node_params()) {
        let eq = model::equilibrium(&p).unwrap();
        let x = eq.point.unwrap();
        let d = model::rhs(&p, x);
        let scale = p.k0 + p.k1 * p.e_t * x.s + p.km1 * x.c + p.k2 * x.c;
        prop_assert!(d.ds.abs() <= 1e-12 * scale && d.dc.abs() <= 1e-12 * scale, "{d:?} at {x:?}");
    }

    #[test]
    fn tfpv_ray_origin_is_classified(p in any_params()) {
        for f in ParameterFamily::TFPV {
            let q = model::ray_scale(&p, f, 0.0).unwrap();
            prop_assert!(model::classify_parameter_point(&q, 1e-12).contains(&f), "{f:?} for {q:?}");
        }
    }

    #[test]
    fn divergence_is_trace(p in any_params(), s in 0.0f64..100.0, frac in 0.0f64..=1.0) {
        let x = State::new(s, frac * p.e_t);
        let j = model::jacobian(&p, x);
        let div = phase_plane::divergence(&p, x);
        prop_assert!(close(div, j[0][0] + j[1][1], 1e-12));
        prop_assert!(close(div, -(p.k1 * (p.e_t - x.c) + p.k1 * x.s + p.km1 + p.k2), 1e-12));
        prop_assert!(div < 0.0);
    }

    #[test]
    fn sqssa_rest_point_is_equilibrium(p in node_params()) {
        let red = reductions::reduced_model(&p, ReducedKind::SQSSA).unwrap();
        let s_hat = model::equilibrium(&p).unwrap().point.unwrap().s;
        prop_assert!(red.rhs_s(s_hat).abs() <= 1e-12 * p.k0.max(1.0));
    }

    #[test]
    fn projection_identities(p in any_params(), s in 0.0f64..30.0) {
        for f in ParameterFamily::TFPV {
            let proj = reductions::fenichel_projection(&p, f).unwrap();
            let x = proj.manifold_point(s);
            let pi = proj.pi(x).unwrap();
            let pv = proj.p_vec(x);
            let scale = pi.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
            for i in 0..2 {
                for j in 0..2 {
                    let pi2 = pi[i][0] * pi[0][j] + pi[i][1] * pi[1][j];
                    prop_assert!((pi2 - pi[i][j]).abs() <= 1e-12 * scale * scale);
                }
                let pv_norm = pv[0].abs().max(pv[1].abs()).max(1.0);
                prop_assert!((pi[i][0] * pv[0] + pi[i][1] * pv[1]).abs() <= 1e-12 * scale * pv_norm);
            }
        }
    }

    #[test]
    fn k0k1_projection_is_linear_law(p in any_params(), s in 0.0f64..30.0) {
        let proj = reductions::fenichel_projection(&p, ParameterFamily::TFPV_k0_k1).unwrap();
        let lin = reductions::reduced_model(&p, ReducedKind::LinearLaw).unwrap();
        let got = proj.reduced_s_rhs(s).unwrap();
        prop_assert!(close(got, lin.rhs_s(s), 1e-10), "{got} vs {}", lin.rhs_s(s));
    }

    #[test]
    fn first_integral_map(p in any_params(), s0 in 0.0f64..20.0, frac in 0.0f64..=1.0) {
        let c0 = frac * p.e_t;
        let red = reductions::reduced_model(&p, ReducedKind::Fenichel_k0k2).unwrap();
        let s = red.map_initial(s0, c0).unwrap();
        prop_assert!((s + red.manifold_c(s) - (s0 + c0)).abs() <= 1e-10 * (s0 + c0).max(1.0));
    }

    #[test]
    fn delta_vanishes_at_equilibrium(p in node_params()) {
        let s_hat = model::equilibrium(&p).unwrap().point.unwrap().s;
        let km = p.k_m().unwrap();
        // delta is dimensionless; compare against its size at s = 0
        let scale = diagnostics::delta(&p, 0.0).unwrap().max(p.k0 / (p.k1 * km * km));
        prop_assert!(diagnostics::delta(&p, s_hat).unwrap() <= 1e-14 * scale.max(1.0));
    }

    #[test]
    fn delta_max_matches_closed_form(p in node_params()) {
        let d = diagnostics::qssa_diagnostics(&p).unwrap();
        let s_m = diagnostics::delta_argmax(&p).unwrap();
        let v = diagnostics::delta(&p, s_m).unwrap();
        let dm = d.delta_m.unwrap();
        prop_assert!(((v - dm) / dm).abs() <= 1e-10, "{v} vs {dm}");
        for ds in [-1e-3, 1e-3] {
            let nearby = diagnostics::delta(&p, s_m * (1.0 + ds)).unwrap();
            prop_assert!(nearby <= v * (1.0 + 1e-12));
        }
    }

    /// Below the saddle threshold `k0 < k2 eT`. For large `k0` the gap at
    /// `100 K_M` is about `(k0 - k2 eT)/(100 (km1 + k2))` and can exceed `eT/100`.
    #[test]
    fn nullclines_pinch(p in node_params()) {
        let nc = phase_plane::nullclines(&p).unwrap();
        let s = 100.0 * p.k_m().unwrap();
        prop_assert!((nc.n_c(s) - nc.n_s(s)).abs() < p.e_t / 100.0);
    }

    #[test]
    fn equator_is_invariant(p in any_params(), a in -5.0f64..5.0) {
        for chart in [Chart::X1Chart, Chart::X2Chart] {
            prop_assert_eq!(poincare::chart_rhs(chart, &p, [a, 0.0])[1], 0.0);
        }
    }

    #[test]
    fn charts_are_positive_reparametrizations(p in any_params(), s in 0.1f64..50.0, c in 0.01f64..5.0) {
        let x = State::new(s, c);
        let d = model::rhs(&p, x);
        for chart in [Chart::X1Chart, Chart::X2Chart] {
            let y = chart.from_plane(x);
            // pushforward of the planar field by the chart map
            let push = match chart {
                Chart::X1Chart => [(d.dc * s - c * d.ds) / (s * s), -d.ds / (s * s)],
                Chart::X2Chart => [(d.ds * c - s * d.dc) / (c * c), -d.dc / (c * c)],
            };
            let v = poincare::chart_rhs(chart, &p, y);
            let cross = v[0] * push[1] - v[1] * push[0];
            let dot = v[0] * push[0] + v[1] * push[1];
            let nv = v[0].hypot(v[1]);
            let np = push[0].hypot(push[1]);
            if np > 1e-9 {
                prop_assert!(cross.abs() <= 1e-8 * nv * np, "{chart:?}: not parallel");
                prop_assert!(dot > 0.0, "{chart:?}: opposite direction");
            }
        }
    }

    #[test]
    fn qss_defect_vanishes_on_qss_families(e_t in positive(), k1 in positive(), km1 in positive(), k2 in positive(), k0 in positive(), s in 0.0f64..50.0) {
        let zero = [
            RateParameters::new(k0, 0.0, k1, km1, k2).unwrap(),
            RateParameters::new(k0, e_t, 0.0, km1, k2).unwrap(),
            RateParameters::new(0.0, e_t, k1, km1, 0.0).unwrap(),
            RateParameters::new(k0, e_t, k1, 0.0, 0.0).unwrap(),
        ];
        for p in &zero {
            prop_assert_eq!(diagnostics::qss_defect(p, s), 0.0, "{:?}", p);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn strip_is_positively_invariant(p in any_params(), s0 in 0.0f64..30.0, frac in 0.0f64..=1.0) {
        let cfg = IntegratorConfig::default();
        let traj = integrate::simulate(&p, State::new(s0, frac * p.e_t), 20.0, &cfg, None).unwrap();
        for x in &traj.states {
            prop_assert!(x[0] >= -cfg.abs_tol);
            prop_assert!(x[1] >= -cfg.abs_tol && x[1] <= p.e_t + cfg.abs_tol, "{x:?}");
        }
    }

    #[test]
    fn wedge_start_has_nondecreasing_s(p in node_params(), u in 0.0f64..1.0, frac in 0.0f64..=1.0) {
        let nc = phase_plane::nullclines(&p).unwrap();
        let s_hat = model::equilibrium(&p).unwrap().point.unwrap().s;
        let s0 = u * s_hat;
        let c0 = nc.lower(s0) + frac * (nc.n_c(s0) - nc.lower(s0));
        // Error control that is absolute in effect, so abs_tol bounds the per-step
        // error. With relative control, steps at the stability limit of a stiff
        // node jitter s by a fraction of abs_tol + rel_tol |s|.
        let cfg = IntegratorConfig::with_tolerances(1e-14, 1e-10);
        let traj = integrate::simulate(&p, State::new(s0, c0), 20.0, &cfg, None).unwrap();
        for w in traj.states.windows(2) {
            prop_assert!(w[1][0] >= w[0][0] - cfg.abs_tol, "{:?} -> {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn halving_tolerances(p in any_params(), s0 in 0.0f64..10.0, frac in 0.0f64..=1.0) {
        let x0 = State::new(s0, frac * p.e_t);
        let cfg = IntegratorConfig::with_tolerances(1e-8, 1e-10);
        let a = integrate::simulate(&p, x0, 5.0, &cfg, None).unwrap().last();
        let half = IntegratorConfig::with_tolerances(0.5e-8, 0.5e-10);
        let b = integrate::simulate(&p, x0, 5.0, &half, None).unwrap().last();
        for i in 0..2 {
            prop_assert!((a[i] - b[i]).abs() < cfg.abs_tol + cfg.rel_tol * a[i].abs(), "{a:?} vs {b:?}");
        }
    }

    /// Left of the anchor the curve is one orbit out of a fan whose spread is
    /// about `tol * continuation_gain`; there the sign of the slope is fixed
    /// by the flow only where the orbit lies between the nullclines.
    #[test]
    fn manifold_slope_nonnegative_below_equilibrium(e_t in 0.5f64..2.0, km1 in 0.5f64..2.0, k2 in 1.0f64..4.0, frac in 0.3f64..0.9) {
        let p = RateParameters::new(frac * k2 * e_t, e_t, 1.0, km1, k2).unwrap();
        let s_hat = model::equilibrium(&p).unwrap().point.unwrap().s;
        let nc = phase_plane::nullclines(&p).unwrap();
        let grid = manifold::uniform_grid(s_hat, 201).unwrap();
        let (curve, report) = manifold::slow_manifold(&p, &grid, 1e-10, 50).unwrap();
        prop_assume!(report.converged);
        let anchor = report.anchor_s.unwrap_or(0.0);
        for i in 0..curve.len() {
            let (s, c, d) = (curve.grid[i], curve.c_values[i], curve.dc_ds[i]);
            let between = nc.n_s(s) - 1e-12 <= c && c <= nc.n_c(s) + 1e-12;
            if s >= anchor || between {
                prop_assert!(d >= -1e-9, "slope {d} at s = {s}, c = {c}");
            }
        }
    }
}
