use proptest::prelude::*;
use splitlab_core::integrator::{flow_time, StepPolicy};
use splitlab_core::manifold::*;
use splitlab_core::model::*;
use splitlab_core::splitting::{shoot, ShotOptions};
use splitlab_core::CoreError;
use splitlab_extprec::{ulps_apart, DoubleDouble as DD, PrecisionMode, Real};

#[test]
fn normalization_and_second_order() {
    for eps in [0.05, 0.1, 0.3] {
        let p = Params::<DD>::new(-0.1, eps).unwrap();
        let s = unstable_series(&p, 12).unwrap();
        assert_eq!(s.b[1], DD::one());
        assert_eq!(s.c[1], DD::zero());
        let e2 = p.eps * p.eps;
        let c2 = e2 * 4.0 / (e2 * 4.0 + 1.0);
        assert!(ulps_apart(s.c[2], c2) <= 4.0);
        assert!(ulps_apart(s.b[2], (c2 - 1.0) / 3.0) <= 4.0);
        assert!(!s.truncated);
    }
}

#[test]
fn planar_limit_matches_the_sech_squared_expansion() {
    // γ = 0 and ε → 0: u₀ = 6e^x/(1+e^x)² = 6 Σ (−1)^{k+1} k e^{kx}, so
    // b_k = (−1)^{k+1} k 6^{1−k} after rescaling b₁ to 1.
    let p = Params {
        gamma: DD::zero(),
        eps: DD::from_f64(1e-12),
        energy_tol: 0.0,
    };
    let s = unstable_series(&p, 12).unwrap();
    assert!((s.b[2] * 36.0 + 12.0).abs().to_f64() < 1e-20);
    for k in 1..=12usize {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let expect = DD::from_f64(sign * k as f64) * DD::from_f64(6.0).powi(1 - k as i32);
        let rel = ((s.b[k] - expect) / expect).abs().to_f64();
        assert!(rel < 1e-20, "k = {k}: {} vs {}", s.b[k], expect);
    }
}

#[test]
fn recurrence_is_exact() {
    for eps in [0.05, 0.1, 0.2] {
        let p = Params::<DD>::new(-0.1, eps).unwrap();
        let s = unstable_series(&p, DEFAULT_ORDER).unwrap();
        let r = recurrence_residual(&s);
        assert!(r <= 4.0, "eps {eps}: {r} ulp");
    }
}

#[test]
fn coefficient_growth_stabilizes() {
    let p = Params::<DD>::new(-0.1, 0.1).unwrap();
    let s = unstable_series(&p, DEFAULT_ORDER).unwrap();
    let root = |k: usize| s.b[k].abs().to_f64().powf(1.0 / k as f64);
    let r30 = root(30);
    for k in 30..=DEFAULT_ORDER {
        assert!((root(k) / r30 - 1.0).abs() <= 0.05, "k = {k}");
    }
}

#[test]
fn seed_shift_consistency() {
    let p = Params::<DD>::new(-0.1, 0.1).unwrap();
    let s = unstable_series(&p, 40).unwrap();
    let (a, bound_a) = seed_state(&s, DD::from_f64(-20.0)).unwrap();
    let (b, bound_b) = seed_state(&s, DD::from_f64(-19.0)).unwrap();
    let r = flow_time(&p.field(), &a.to_array(), DD::one(), &StepPolicy::for_model(p.eps)).unwrap();
    let tol = 10.0 * (bound_a + bound_b + r.error_estimate);
    let scale = b.norm().to_f64();
    for (x, y) in r.state.iter().zip(b.to_array()) {
        // Relative to the state size, which is about e^{−19}.
        let d = (*x - y).abs().to_f64();
        assert!(d <= tol, "{d:e} > {tol:e} (scale {scale:e})");
    }
}

#[test]
fn seed_lies_on_the_zero_level() {
    let p = Params::<DD>::new(-0.1, 0.1).unwrap();
    let s = unstable_series(&p, 40).unwrap();
    for x0 in [-20.0, -8.0, -3.0, -1.5] {
        let (st, bound) = seed_state(&s, DD::from_f64(x0)).unwrap();
        let g = first_integral(&p, &st).abs().to_f64();
        let roundoff = 16.0 * DD::EPSILON * st.norm().to_f64().powi(2);
        assert!(g <= 10.0 * bound + roundoff, "x0 {x0}: G = {g:e}, bound {bound:e}");
    }
}

#[test]
fn far_seed_tends_to_the_origin() {
    let p = Params::<DD>::new(-0.1, 0.1).unwrap();
    let s = unstable_series(&p, 40).unwrap();
    let (st, _) = seed_state(&s, DD::from_f64(-60.0)).unwrap();
    assert!(st.norm().to_f64() < 1e-25);
}

#[test]
fn seed_too_close_is_refused() {
    let p = Params::<DD>::new(-0.1, 0.1).unwrap();
    let s = unstable_series(&p, 40).unwrap();
    match seed_state(&s, DD::from_f64(2.0)) {
        Err(CoreError::SeedTooClose { x0, suggested }) => {
            assert_eq!(x0, 2.0);
            assert!(suggested < 2.0);
            assert!(seed_state(&s, DD::from_f64(suggested)).is_ok());
        }
        r => panic!("unexpected {r:?}"),
    }
}

#[test]
fn series_order_must_be_at_least_two() {
    let p = Params::<DD>::new(-0.1, 0.1).unwrap();
    assert!(unstable_series(&p, 1).is_err());
}

#[test]
fn orbit_shadows_the_soliton() {
    let r = shoot(-0.1, 0.05, PrecisionMode::Dd, &ShotOptions::default()).unwrap();
    let peak = 3.0 / (0.1f64.sqrt() + 1.0);
    assert!((r.u_at_sigma - peak).abs() <= 0.05, "{}", r.u_at_sigma);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn involution_is_an_involution(y in prop::array::uniform4(-5.0f64..5.0)) {
        let s = State::from_array(y.map(DD::from_f64));
        prop_assert_eq!(involute(&involute(&s)), s);
        let fixed = involute(&s) == s;
        prop_assert_eq!(fixed, s.up == DD::zero() && s.vp == DD::zero());
    }

    #[test]
    fn plane_points_are_fixed(u in -5.0f64..5.0, v in -5.0f64..5.0) {
        let s = State::new(DD::from_f64(u), DD::zero(), DD::from_f64(v), DD::zero());
        prop_assert_eq!(involute(&s), s);
    }
}
