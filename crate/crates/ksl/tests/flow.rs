//! Flow integrator: exact stationarity of flat data, the self-similar
//! motion of soliton data, origin curvature scaling, and the order of the
//! time discretization.

use ksl::flow::{
    f_consistency_residual, flow_rhs, run_flow, self_similar_reference, step, FlowSchedule,
};
use ksl::soliton::{build_profile, build_profile_t, flat_profile, SolitonParams};

fn params(n: usize, lambda: f64) -> SolitonParams {
    SolitonParams::new(n, lambda).unwrap()
}

#[test]
fn flat_data_is_stationary() {
    let flat = flat_profile(2, -5.0, 10.0, 128).unwrap();
    let result = run_flow(&flat, &FlowSchedule::with_defaults(1.0).unwrap()).unwrap();
    assert_eq!(result.snapshots.len(), 11);
    for snap in &result.snapshots {
        for i in 0..flat.len() {
            let drift = (snap.profile.phi[i] / flat.phi[i] - 1.0).abs();
            assert!(drift <= 2e-12, "s = {}: drift {drift:e}", snap.s);
        }
        for &f in &snap.f_grid {
            assert!(f.abs() <= 2e-12);
        }
        assert!(snap.selfsim_err.is_none());
        assert!(snap.diagnostics.r_max.abs() < 1e-8);
    }
    assert!(result.summary.selfsim_err_sup.is_none());
}

#[test]
fn flow_speed_vanishes_on_flat_data() {
    let flat = flat_profile(3, -4.0, 8.0, 96).unwrap();
    let result = run_flow(&flat, &FlowSchedule::with_defaults(0.1).unwrap()).unwrap();
    let g = flow_rhs(&result.snapshots[0]).unwrap();
    assert_eq!(g.len(), flat.len() - 2);
    for v in g {
        assert!(v.abs() < 1e-11);
    }
}

#[test]
fn flow_speed_on_a_soliton_is_the_selfsimilar_rate() {
    // Differentiating phi(t, s) = (1+s) phi0(t - lambda log(1+s)) at s = 0
    // gives dw/ds = 1 - lambda phi'/phi, so the reported speed
    // G = phi dw/ds must equal phi - lambda phi' pointwise.
    let lambda = 2.0;
    let profile = build_profile_t(params(2, lambda), -2.0, 6.0, 1024).unwrap();
    let result = run_flow(&profile, &FlowSchedule::with_defaults(0.01).unwrap()).unwrap();
    let g = flow_rhs(&result.snapshots[0]).unwrap();
    for (k, v) in g.iter().enumerate() {
        let i = k + 1;
        let expected = profile.phi[i] - lambda * profile.phi1[i];
        let err = (v - expected).abs() / profile.phi[i].max(1.0);
        assert!(err < 1e-5, "node {i}: {v} vs {expected} (err {err:e})");
    }
}

#[test]
fn single_step_advances_and_stays_positive() {
    let profile = build_profile_t(params(2, 2.0), -2.0, 5.0, 400).unwrap();
    let result = run_flow(&profile, &FlowSchedule::with_defaults(0.01).unwrap()).unwrap();
    let s0 = &result.snapshots[0];
    let s1 = step(s0, 1e-3).unwrap();
    assert!((s1.s - 1e-3).abs() < 1e-15);
    for i in 0..s1.profile.len() {
        assert!(s1.profile.phi[i] > 0.0);
        assert!(s1.profile.phi1[i] > 0.0);
    }
    // One step of size ds moves log-density by about ds R, downward.
    let r0 = s0.diagnostics.r_max;
    let interior = &s1.f_grid[40..360];
    assert!(interior.iter().all(|&f| f <= 1e-12));
    assert!(interior.iter().any(|&f| f < -1e-5));
    assert!(interior.iter().all(|&f| f.abs() < 3e-3 * r0.max(1.0)));
    assert!(step(s0, -1.0).is_err());
    assert!(step(s0, f64::NAN).is_err());
}

#[test]
fn selfsimilar_reference_is_the_identity_at_time_zero() {
    let p = params(2, 2.0);
    let profile = build_profile_t(p, -2.0, 5.0, 256).unwrap();
    let reference = self_similar_reference(p, &profile, 0.0).unwrap();
    assert_eq!(reference.len(), profile.len());
    for i in 0..profile.len() {
        assert_eq!(reference.t[i], profile.t[i]);
        assert_eq!(reference.phi[i], profile.phi[i]);
        assert_eq!(reference.phi1[i], profile.phi1[i]);
    }
}

#[test]
fn selfsimilar_reference_rescales_a_shifted_sample() {
    let p = params(3, 1.5);
    let profile = build_profile_t(p, -1.0, 4.0, 512).unwrap();
    let s = 0.8_f64;
    let shift = 1.5 * (1.0 + s).ln();
    let reference = self_similar_reference(p, &profile, s).unwrap();
    assert!(reference.len() < profile.len());
    let offset = profile.len() - reference.len();
    for j in (0..reference.len()).step_by(37) {
        let t = profile.t[j + offset];
        assert_eq!(reference.t[j], t);
        let row = profile.sample(t - shift).unwrap();
        assert_eq!(reference.phi[j], (1.0 + s) * row.phi);
    }
    assert!(self_similar_reference(p, &profile, 1e9).is_err());
    assert!(self_similar_reference(p, &profile, -0.5).is_err());
}

#[test]
fn soliton_data_flows_selfsimilarly() {
    let profile = build_profile_t(params(2, 2.0), -2.0, 6.0, 1000).unwrap();
    let result = run_flow(&profile, &FlowSchedule::with_defaults(0.6).unwrap()).unwrap();
    let sup = result.summary.selfsim_err_sup.unwrap();
    assert!(sup < 1e-3, "selfsimilar deviation {sup:e}");
    assert!(result.snapshots[0].selfsim_err.unwrap() < 1e-12);
    for snap in &result.snapshots {
        assert!(snap.selfsim_err.unwrap() <= sup);
    }
}

#[test]
fn origin_curvature_decays_at_the_selfsimilar_rate() {
    // The probe must sit at phi genuinely near zero, otherwise the shift
    // of the self-similar motion changes the curvature it reads.
    let profile = build_profile_t(params(1, 2.0), -12.0, 6.0, 1100).unwrap();
    let result = run_flow(&profile, &FlowSchedule::with_defaults(1.0).unwrap()).unwrap();
    let base = result.snapshots[0].diagnostics.r_origin;
    assert!(base > 0.0);
    for snap in &result.snapshots {
        let scaled = snap.diagnostics.r_origin * (1.0 + snap.s);
        assert!(
            (scaled / base - 1.0).abs() < 1e-2,
            "s = {}: scaled origin curvature {scaled} vs {base}",
            snap.s
        );
    }
}

#[test]
fn summary_aggregates_its_snapshots() {
    let profile = build_profile_t(params(2, 2.0), -2.0, 5.0, 600).unwrap();
    let result = run_flow(&profile, &FlowSchedule::with_defaults(0.3).unwrap()).unwrap();
    let r_sup = result
        .snapshots
        .iter()
        .map(|s| s.diagnostics.r_max * (1.0 + s.s))
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(result.summary.r_max_scaled_sup, r_sup);
    let vol_min = result
        .snapshots
        .iter()
        .map(|s| s.diagnostics.vol_ratio_at_window_edge)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(result.summary.vol_ratio_min, vol_min);
    assert!(vol_min > 0.0);
    assert!(r_sup.is_finite() && r_sup > 0.0);
}

#[test]
fn fixed_steps_converge_to_the_controlled_answer_at_first_order() {
    let profile = build_profile_t(params(2, 2.0), -2.0, 5.0, 400).unwrap();
    let controlled = run_flow(&profile, &FlowSchedule::with_defaults(0.2).unwrap()).unwrap();
    let reference = &controlled.snapshots.last().unwrap().profile;
    let fixed_run = |ds: f64| {
        let result = run_flow(
            &profile,
            &FlowSchedule {
                s_end: 0.2,
                ds_init: ds,
                ds_max: ds,
                tol: f64::INFINITY,
                record_times: vec![0.0, 0.1, 0.2],
            },
        )
        .unwrap();
        assert_eq!(result.snapshots.len(), 3);
        for (k, snap) in result.snapshots.iter().enumerate() {
            assert!((snap.s - 0.1 * k as f64).abs() < 1e-9);
        }
        let end = &result.snapshots.last().unwrap().profile;
        let mut worst = 0.0_f64;
        for i in 80..320 {
            worst = worst.max((end.phi[i] / reference.phi[i] - 1.0).abs());
        }
        worst
    };
    let err_coarse = fixed_run(1e-3);
    let err_fine = fixed_run(5e-4);
    assert!(err_coarse < 5e-4, "fixed-step deviation {err_coarse:e}");
    let order = err_coarse / err_fine;
    assert!(
        (1.5..3.0).contains(&order),
        "plain stepping should converge at first order, got factor {order}"
    );
}

#[test]
fn halving_step_and_grid_shrinks_the_density_residual() {
    let coarse = build_profile_t(params(2, 2.0), -2.0, 5.0, 700).unwrap();
    let fine = build_profile_t(params(2, 2.0), -2.0, 5.0, 1399).unwrap();
    let res_coarse = f_consistency_residual(&coarse, 0.04, 3).unwrap();
    let res_fine = f_consistency_residual(&fine, 0.02, 3).unwrap();
    assert!(res_coarse.is_finite() && res_coarse > 0.0);
    let ratio = res_coarse / res_fine;
    assert!(ratio >= 2.5, "halving ratio {ratio}");
    assert!(f_consistency_residual(&coarse, 0.0, 3).is_err());
    assert!(f_consistency_residual(&coarse, 0.01, 0).is_err());
}

#[test]
fn rejects_unusable_windows_and_schedules() {
    assert!(FlowSchedule::with_defaults(0.0).is_err());
    assert!(FlowSchedule::with_defaults(f64::NAN).is_err());
    let profile = build_profile_t(params(2, 2.0), -2.0, 5.0, 400).unwrap();
    let mut bad = FlowSchedule::with_defaults(0.1).unwrap();
    bad.record_times.push(0.5);
    assert!(run_flow(&profile, &bad).is_err());
    let mut bad = FlowSchedule::with_defaults(0.1).unwrap();
    bad.ds_init = 0.0;
    assert!(run_flow(&profile, &bad).is_err());
    let mut bad = FlowSchedule::with_defaults(0.1).unwrap();
    bad.tol = 0.0;
    assert!(run_flow(&profile, &bad).is_err());

    // The integrator needs a uniform grid; log-spaced profiles are refused.
    let log_grid = build_profile(params(2, 2.0), 1e-2, 1e2, 128, 0.0).unwrap();
    assert!(run_flow(&log_grid, &FlowSchedule::with_defaults(0.1).unwrap()).is_err());
    let tiny = flat_profile(2, 0.0, 1.0, 6);
    assert!(
        tiny.is_err()
            || run_flow(&tiny.unwrap(), &FlowSchedule::with_defaults(0.1).unwrap()).is_err()
    );
}
