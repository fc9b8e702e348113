//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 4 and 5 are known failures under the ε⁻³ normalization; the
//! run reports them as FAIL and also prints the ε⁻⁴ and phase-corrected
//! diagnostics. The process exits nonzero only on an unexpected failure.

use std::time::{Duration, Instant};

use num_rational::BigRational;

use splitlab_core::inner::{inner_series, series_diagnostics, stokes_direct};
use splitlab_core::integrator::{flow_time, StepPolicy};
use splitlab_core::manifold::involute;
use splitlab_core::model::{first_integral, geometry, soliton, Params, State};
use splitlab_core::splitting::*;
use splitlab_extprec::{ulps_apart, DoubleDouble as DD, PrecisionMode, QuadDouble as QD, Real};

const GAMMA: f64 = -0.1;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    expected_fail: bool,
    elapsed: Duration,
    limit: Duration,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn report(&self) -> bool {
        let within = self.elapsed <= self.limit;
        let ok = self.pass && within;
        let tag = match (ok, self.expected_fail) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!(
            "criterion {} [{}] {}: {} ({:.1} s, limit {} s)",
            self.id,
            self.name,
            tag,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs()
        );
        for n in &self.notes {
            println!("    {n}");
        }
        ok || self.expected_fail
    }
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let t = Instant::now();
    let r = f();
    (r, t.elapsed())
}

fn soliton_residual() -> Outcome {
    let (worst, elapsed) = timed(|| {
        let mut worst = 0.0f64;
        for j in 1..=10 {
            let g = DD::from_f64(-(j as f64) / 99.0);
            for i in -400..=400 {
                let x = DD::from_f64(i as f64 * 0.025);
                let (u, _, upp) = soliton(g, x).unwrap();
                let r = upp - u + u * u + g * u * u * u * 2.0;
                worst = worst.max(r.abs().to_f64());
            }
        }
        worst
    });
    Outcome {
        id: 1,
        name: "soliton residual",
        pass: worst <= 1e-25,
        expected_fail: false,
        elapsed,
        limit: Duration::from_secs(1),
        detail: format!("max residual {worst:.3e} over 10 gamma, x in [-10, 10]"),
        notes: vec![],
    }
}

fn inner_recurrence() -> Outcome {
    let (r, elapsed) = timed(|| -> Result<(bool, String), String> {
        let s = inner_series(300).map_err(|e| e.to_string())?;
        let first = s.a[1] == BigRational::from_integer((-4).into()) && s.a[2] == BigRational::from_integer(64.into());
        let d = series_diagnostics(&s).map_err(|e| e.to_string())?;
        let settled = d.rho_settles(0.02);
        let ok = first && settled.is_some_and(|n| n <= 200);
        Ok((
            ok,
            format!(
                "a1 = {}, a2 = {}, exact checks n <= 300 hold, rho within 2% from n = {:?}",
                s.a[1], s.a[2], settled
            ),
        ))
    });
    let (pass, detail) = r.unwrap_or_else(|e| (false, e));
    Outcome {
        id: 2,
        name: "inner recurrence",
        pass,
        expected_fail: false,
        elapsed,
        limit: Duration::from_secs(30),
        detail,
        notes: vec![],
    }
}

fn homoclinic_sequence() -> Outcome {
    let (roots, elapsed) = timed(|| find_roots(GAMMA, 6, 12, 0.1, &RootOptions::default()));
    let alpha = geometry(GAMMA).unwrap().alpha;
    let mut pass = true;
    let mut notes = Vec::new();
    let mut last = f64::INFINITY;
    for r in &roots {
        match r {
            Ok(r) => {
                let q = r.n as f64 * std::f64::consts::PI * r.eps_n / alpha;
                let ret = r.return_test.as_ref().map(|t| t.min_norm).unwrap_or(f64::INFINITY);
                let ok = r.converged && (q - 1.0).abs() <= 0.2 / r.n as f64 && r.eps_n < last && ret <= 1e-6;
                pass &= ok;
                last = r.eps_n;
                notes.push(format!(
                    "n = {:2}: eps_n = {:.12}, n pi eps_n / alpha - 1 = {:+.5}, return {:.2e}",
                    r.n, r.eps_n, q - 1.0, ret
                ));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("error: {e}"));
            }
        }
    }
    Outcome {
        id: 3,
        name: "homoclinic sequence",
        pass,
        expected_fail: false,
        elapsed,
        limit: Duration::from_secs(300),
        detail: format!("{} roots for n = 6..12", roots.iter().filter(|r| r.is_ok()).count()),
        notes,
    }
}

fn splitting_law(recs: &[ShotRecord], elapsed: Duration) -> (Outcome, Option<StokesFit>) {
    let fit = fit_stokes(recs);
    let changes = sign_changes_between_zeros(recs).unwrap_or_default();
    let one_each = !changes.is_empty() && changes.iter().all(|&(_, c)| c == 1);
    let mut notes = vec![format!("sign changes between zeros (k, count): {changes:?}")];
    if let Ok(f4) = fit_stokes_with_power(recs, 4.0) {
        notes.push(format!(
            "eps^-4 normalization: Theta = {:.4}, relative residual {:.3}",
            f4.estimate.theta, f4.relative_residual
        ));
    }
    if let Ok(ph) = fit_stokes_phase(recs, 4.0) {
        notes.push(format!(
            "eps^-4 with phase alpha/eps + c eps: Theta = {:.4}, c = {:.3}, relative residual {:.3}",
            ph.theta, ph.phase, ph.relative_residual
        ));
    }
    if let Ok(b) = best_power(recs) {
        notes.push(format!("best-fit power p = {:.3}", b.power));
    }
    let (pass, detail) = match &fit {
        Ok(f) => (
            f.relative_residual <= 0.15 && one_each,
            format!(
                "eps^-3 fit Theta = {:.4}, relative residual {:.3} (limit 0.15), one sign change per cell: {one_each}",
                f.estimate.theta, f.relative_residual
            ),
        ),
        Err(e) => (false, format!("fit failed: {e}")),
    };
    (
        Outcome {
            id: 4,
            name: "splitting law",
            pass,
            expected_fail: true,
            elapsed,
            limit: Duration::from_secs(600),
            detail,
            notes,
        },
        fit.ok(),
    )
}

fn stokes_cross_check(recs: &[ShotRecord], fit: Option<&StokesFit>) -> Outcome {
    let policy = StepPolicy::new(DD::from_f64(0.5));
    let (inner, elapsed) = timed(|| stokes_direct(20.0, 40.0, &policy));
    let inner = match inner {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                id: 5,
                name: "Stokes cross-check",
                pass: false,
                expected_fail: true,
                elapsed,
                limit: Duration::from_secs(300),
                detail: format!("stokes_direct failed: {e}"),
                notes: vec![],
            }
        }
    };
    let ti = inner.estimate;
    let mut notes = vec![format!(
        "inner channels: phi {:.4}, psi {:.4}; extrapolation residual {:.3}",
        inner.theta_phi, inner.theta_psi, inner.extrapolation_residual
    )];
    if let Ok(f4) = fit_stokes_with_power(recs, 4.0) {
        notes.push(format!(
            "eps^-4 fit Theta = {:.4}: relative difference {:.3}",
            f4.estimate.theta,
            (f4.estimate.theta - ti.theta).abs() / ti.theta.abs()
        ));
    }
    let (pass, detail) = match fit {
        Some(f) => {
            let tf = &f.estimate;
            let rel = (tf.theta - ti.theta).abs() / ti.theta.abs();
            let nonzero = ti.theta.abs() > 10.0 * ti.uncertainty && tf.theta.abs() > 10.0 * tf.uncertainty;
            (
                rel <= 0.15 && nonzero,
                format!(
                    "inner Theta = {:.4} +- {:.3}, eps^-3 fit Theta = {:.4} +- {:.3}, relative difference {:.3} (limit 0.15)",
                    ti.theta, ti.uncertainty, tf.theta, tf.uncertainty, rel
                ),
            )
        }
        None => (false, "no amplitude fit".to_string()),
    };
    Outcome {
        id: 5,
        name: "Stokes cross-check",
        pass,
        expected_fail: true,
        elapsed,
        limit: Duration::from_secs(300),
        detail,
        notes,
    }
}

fn conservation(recs: &[ShotRecord]) -> Outcome {
    let (r, elapsed) = timed(|| {
        let mut notes = Vec::new();
        let drift_ok = recs.iter().all(|r| r.g_drift <= r.energy_tol);
        let worst = recs
            .iter()
            .map(|r| r.g_drift / r.energy_tol)
            .fold(0.0, f64::max);
        notes.push(format!("energy drift / energy_tol: max {worst:.3} over {} shots", recs.len()));

        let p = Params::<DD>::new(GAMMA, 0.1).unwrap();
        let mut ident_ok = true;
        let mut worst_ulp = 0.0f64;
        for i in 0..2000 {
            let x = |k: u32| DD::from_f64((((i * 7919 + k * 104729) % 4001) as f64 - 2000.0) / 1000.0);
            let s = State::new(x(1), x(2), x(3), x(4));
            ident_ok &= involute(&involute(&s)) == s;
            let d = ulps_apart(first_integral(&p, &involute(&s)), first_integral(&p, &s));
            worst_ulp = worst_ulp.max(d);
        }
        ident_ok &= worst_ulp == 0.0;
        notes.push(format!("involution round trip exact, G o Psi vs G: {worst_ulp} ulp"));

        let mut rev_ok = true;
        for eps in [0.08, 0.1, 0.12] {
            let st = shoot_state::<DD>(GAMMA, eps, &ShotOptions::default()).unwrap();
            let p = Params::<DD>::new(GAMMA, eps).unwrap();
            let back = flow_time(
                &p.field(),
                &involute(&st.crossing).to_array(),
                st.t_cross,
                &StepPolicy::for_model(p.eps),
            )
            .unwrap();
            let target = involute(&st.seed).to_array();
            let diff = back
                .state
                .iter()
                .zip(target)
                .map(|(a, b)| (*a - b).abs().to_f64())
                .fold(0.0, f64::max);
            let tol = 100.0 * st.record.energy_tol;
            rev_ok &= diff <= tol;
            notes.push(format!("reflected flow at eps = {eps}: {diff:.2e} (tol {tol:.2e})"));
        }
        (drift_ok && ident_ok && rev_ok, notes)
    });
    let (pass, notes) = r;
    Outcome {
        id: 6,
        name: "conservation and reversibility",
        pass,
        expected_fail: false,
        elapsed,
        limit: Duration::from_secs(60),
        detail: "drift, involution, G o Psi, reflected flow".to_string(),
        notes,
    }
}

fn precision_robustness() -> Outcome {
    let (r, elapsed) = timed(|| {
        let dd = shoot(GAMMA, 0.1, PrecisionMode::Dd, &ShotOptions::default());
        let qd = shoot(GAMMA, 0.1, PrecisionMode::Qd, &ShotOptions::default());
        (dd, qd)
    });
    let (pass, detail) = match r {
        (Ok(a), Ok(b)) => {
            let sa: QD = a.s_decimal.parse().unwrap();
            let sb: QD = b.s_decimal.parse().unwrap();
            let rel = ((sa - sb) / sb).abs().to_f64();
            (
                rel <= 1e-3,
                format!("S dd = {}, S qd = {}, relative difference {rel:.2e}", a.s_decimal, b.s_decimal),
            )
        }
        (a, b) => (false, format!("shot failed: {:?} {:?}", a.err(), b.err())),
    };
    Outcome {
        id: 7,
        name: "precision robustness",
        pass,
        expected_fail: false,
        elapsed,
        limit: Duration::from_secs(120),
        detail,
        notes: vec![],
    }
}

fn main() {
    // Under `cargo test -- --list` or a name filter, behave like an empty harness.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut results = vec![soliton_residual(), inner_recurrence(), homoclinic_sequence()];

    let grid = linspace(0.07, 0.13, 60);
    let (swept, sweep_time) = timed(|| sweep(GAMMA, &grid, PrecisionMode::Dd, &ShotOptions::default()));
    let recs: Vec<ShotRecord> = swept.into_iter().filter_map(|r| r.ok()).collect();
    let (c4, fit) = splitting_law(&recs, sweep_time);
    results.push(c4);
    results.push(stokes_cross_check(&recs, fit.as_ref()));
    results.push(conservation(&recs));
    results.push(precision_robustness());

    let mut unexpected = 0;
    for r in &results {
        if !r.report() {
            unexpected += 1;
        }
    }
    let passed = results.iter().filter(|r| r.pass && r.elapsed <= r.limit).count();
    println!(
        "acceptance: {passed} of {} criteria pass, {unexpected} unexpected failure(s)",
        results.len()
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
