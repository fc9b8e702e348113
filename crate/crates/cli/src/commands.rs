use serde::Serialize;
use serde_json::{json, Value};
use splitlab_core::inner::{inner_series, series_diagnostics, stokes_direct, StokesResult};
use splitlab_core::integrator::{step, StepPolicy};
use splitlab_core::manifold::involute;
use splitlab_core::model::{first_integral, first_integral_gradient, geometry, soliton, vector_field, Params, PlanarField, State};
use splitlab_core::splitting::*;
use splitlab_extprec::{DoubleDouble as DD, PrecisionMode, QuadDouble as QD, Real};

use crate::cache::SCHEMA_VERSION;
use crate::config::{Format, RunConfig};
use crate::CliError;

pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    fn to_json(&self) -> Value {
        json!({ "columns": self.columns, "rows": self.rows })
    }
}

struct Report {
    table: Table,
    outputs: Value,
    audit: Value,
    precision: Option<PrecisionMode>,
    /// Set when the output is written but the exit status must be nonzero.
    status: Result<(), CliError>,
}

#[derive(Serialize)]
struct ResultRecord<'a> {
    schema_version: u32,
    command: &'a str,
    config: &'a RunConfig,
    precision: Option<PrecisionMode>,
    audit: &'a Value,
    outputs: &'a Value,
}

/// Computes and renders a command. The inner result carries a nonzero
/// status for runs whose output is still worth writing.
pub fn execute(cfg: &RunConfig) -> Result<(String, Result<(), CliError>), CliError> {
    let report = match cfg.command.as_str() {
        "portrait" => portrait(cfg)?,
        "soliton" => soliton_cmd(cfg)?,
        "shoot" => shoot_cmd(cfg)?,
        "sweep" => sweep_cmd(cfg)?,
        "roots" => roots_cmd(cfg)?,
        "inner-series" => inner_series_cmd(cfg)?,
        "stokes" => stokes_cmd(cfg)?,
        "verify" => verify(),
        other => return Err(CliError::Usage(format!("unknown command {other}"))),
    };
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Csv => report.table.to_csv(),
        Format::Json => {
            let mut outputs = report.outputs;
            outputs["table"] = report.table.to_json();
            let rec = ResultRecord {
                schema_version: SCHEMA_VERSION,
                command: &cfg.command,
                config: cfg,
                precision: report.precision,
                audit: &report.audit,
                outputs: &outputs,
            };
            serde_json::to_string_pretty(&rec).expect("record serializes") + "\n"
        }
    };
    Ok((text, report.status))
}

fn s<T: ToString>(x: T) -> String {
    x.to_string()
}

/// Shortest round-trip decimal, in exponent form outside `[1e−4, 1e15)`.
fn f(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// Negative-branch loop `3/(1 − β cosh x)`, present for γ > 0.
fn negative_loop(gamma: DD, x: DD) -> (DD, DD) {
    let beta = (gamma * 9.0 + 1.0).sqrt();
    let d = DD::one() - beta * x.cosh();
    let u = DD::from_f64(3.0) / d;
    (u, u * beta * x.sinh() / d)
}

fn portrait(cfg: &RunConfig) -> Result<Report, CliError> {
    let g = cfg.gamma.unwrap();
    let (k, radius, t_max, dt) = (cfg.orbits.unwrap(), cfg.radius.unwrap(), cfg.t_max.unwrap(), cfg.dt.unwrap());
    let gd = DD::from_f64(g);
    let field = PlanarField { gamma: gd };
    let steps = (t_max / dt).round() as usize;
    let h = DD::from_f64(dt);
    let mut table = Table::new(&["orbit", "kind", "t", "u", "w", "status"]);
    let mut blowups = 0;
    let mut trace = |id: usize, kind: &str, y0: [DD; 2], table: &mut Table| {
        let mut y = y0;
        for i in 0..=steps {
            let escaped = !(y[0].to_f64().abs() <= 1e3 && y[1].to_f64().abs() <= 1e3);
            let status = if escaped { "blowup" } else { "ok" };
            table.push(vec![
                s(id),
                s(kind),
                f(i as f64 * dt),
                f(y[0].to_f64()),
                f(y[1].to_f64()),
                s(status),
            ]);
            if escaped {
                blowups += 1;
                break;
            }
            y = step(&field, &y, h, 12).0;
        }
    };
    for j in 0..k {
        let th = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
        let y0 = [DD::from_f64(radius * th.cos()), DD::from_f64(radius * th.sin())];
        trace(j, "ring", y0, &mut table);
    }
    let x0 = DD::from_f64(-0.5 * t_max);
    let mut loops = 0;
    if g > -1.0 / 9.0 {
        let (u, up, _) = soliton(gd, x0)?;
        trace(k, "separatrix", [u, up], &mut table);
        loops += 1;
    }
    if g > 0.0 {
        let (u, up) = negative_loop(gd, x0);
        trace(k + 1, "separatrix", [u, up], &mut table);
        loops += 1;
    }
    // Equilibria: u = 0 and 1 − u − 2γu² = 0.
    let mut eq = vec![0.0];
    if g == 0.0 {
        eq.push(1.0);
    } else if 1.0 + 8.0 * g >= 0.0 {
        let r = (1.0 + 8.0 * g).sqrt();
        eq.extend([(-1.0 + r) / (4.0 * g), (-1.0 - r) / (4.0 * g)]);
    }
    let fixed: Vec<Value> = eq
        .iter()
        .map(|&u| {
            let slope = 1.0 - 2.0 * u - 6.0 * g * u * u;
            json!({ "u": u, "kind": if slope > 0.0 { "saddle" } else { "center" } })
        })
        .collect();
    Ok(Report {
        table,
        outputs: json!({ "fixed_points": fixed, "ring_orbits": k, "separatrices": loops }),
        audit: json!({ "blowup_orbits": blowups }),
        precision: Some(PrecisionMode::Dd),
        status: Ok(()),
    })
}

fn soliton_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let g = DD::from_f64(cfg.gamma.unwrap());
    let (lo, hi, n) = (cfg.x_min.unwrap(), cfg.x_max.unwrap(), cfg.x_steps.unwrap());
    let mut table = Table::new(&["x", "u", "up", "upp"]);
    let mut worst = 0.0f64;
    for x in linspace(lo, hi, n) {
        let (u, up, upp) = soliton(g, DD::from_f64(x))?;
        let r = upp - u + u * u + g * u * u * u * 2.0;
        worst = worst.max(r.abs().to_f64());
        table.push(vec![f(x), s(u), s(up), s(upp)]);
    }
    let outputs = match geometry(g) {
        Ok(geo) => json!({
            "alpha": s(geo.alpha),
            "beta": s(geo.beta),
            "a": s(geo.a),
            "b": s(geo.b),
            "singularities": [
                format!("{} + {}i", geo.x_plus.re, geo.x_plus.im),
                format!("{} + {}i", geo.x_minus.re, geo.x_minus.im),
                format!("{} - {}i", geo.x_plus.re, geo.x_plus.im),
                format!("{} - {}i", geo.x_minus.re, geo.x_minus.im),
            ],
        }),
        Err(_) => json!({}),
    };
    Ok(Report {
        table,
        outputs,
        audit: json!({ "max_residual": worst }),
        precision: Some(PrecisionMode::Dd),
        status: Ok(()),
    })
}

fn shot_audit(r: &ShotRecord) -> Value {
    json!({
        "energy_drift": r.g_drift,
        "energy_tol": r.energy_tol,
        "event_residual": r.event_residual,
        "event_tol": r.event_tol,
        "seed_truncation": r.seed_truncation,
        "ok": r.audit_ok(),
    })
}

const SHOT_COLUMNS: [&str; 8] = ["eps", "s", "s_decimal", "u_at_sigma", "t_cross", "g_drift", "event_residual", "n_steps"];

fn shot_row(r: &ShotRecord) -> Vec<String> {
    vec![
        f(r.eps),
        f(r.s),
        r.s_decimal.clone(),
        f(r.u_at_sigma),
        f(r.t_cross),
        f(r.g_drift),
        f(r.event_residual),
        s(r.n_steps),
    ]
}

fn shoot_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let mode = cfg.precision.unwrap();
    let opts = ShotOptions {
        return_test: cfg.return_test.unwrap_or(false),
        ..ShotOptions::default()
    };
    let r = shoot(cfg.gamma.unwrap(), cfg.eps.unwrap(), mode, &opts)?;
    let mut table = Table::new(&SHOT_COLUMNS);
    table.push(shot_row(&r));
    let status = if r.audit_ok() {
        Ok(())
    } else {
        Err(CliError::Invariant("shot audit failed".into()))
    };
    Ok(Report {
        table,
        audit: shot_audit(&r),
        outputs: json!({ "shot": r }),
        precision: Some(mode),
        status,
    })
}

fn sweep_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let mode = cfg.precision.unwrap();
    let g = cfg.gamma.unwrap();
    let grid = linspace(cfg.eps_min.unwrap(), cfg.eps_max.unwrap(), cfg.eps_steps.unwrap());
    let recs = sweep(g, &grid, mode, &ShotOptions::default())
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&SHOT_COLUMNS);
    for r in &recs {
        table.push(shot_row(r));
    }
    let fit = |p: f64| fit_stokes_with_power(&recs, p).ok();
    let outputs = json!({
        "fit_p3": fit(3.0),
        "fit_p4": fit(4.0),
        "phase_fit_p4": fit_stokes_phase(&recs, 4.0).ok().map(|f| json!({
            "theta": f.theta, "phase": f.phase, "relative_residual": f.relative_residual,
        })),
        "sign_changes_between_zeros": sign_changes_between_zeros(&recs)?,
    });
    let ok = recs.iter().all(|r| r.audit_ok());
    let worst = recs.iter().map(|r| r.g_drift / r.energy_tol).fold(0.0, f64::max);
    Ok(Report {
        table,
        outputs,
        audit: json!({ "all_ok": ok, "max_drift_over_tol": worst }),
        precision: Some(mode),
        status: if ok { Ok(()) } else { Err(CliError::Invariant("shot audit failed".into())) },
    })
}

fn roots_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let g = cfg.gamma.unwrap();
    let mode = cfg.precision.unwrap();
    let opts = RootOptions {
        mode,
        ..RootOptions::default()
    };
    let alpha = geometry(g)?.alpha;
    let results = find_roots(g, cfg.n_min.unwrap(), cfg.n_max.unwrap(), cfg.half_width.unwrap(), &opts);
    let mut table = Table::new(&["n", "eps_n", "q", "residual_s", "root_tol", "converged", "shots", "return_min_norm"]);
    let mut roots = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(r) => {
                let q = r.n as f64 * std::f64::consts::PI * r.eps_n / alpha;
                if !r.converged {
                    failures.push(format!("n = {} did not converge", r.n));
                }
                table.push(vec![
                    s(r.n),
                    f(r.eps_n),
                    f(q),
                    f(r.residual_s),
                    f(r.root_tol),
                    s(r.converged),
                    s(r.shots),
                    r.return_test.map(|t| f(t.min_norm)).unwrap_or_default(),
                ]);
                roots.push(r);
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    let status = if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::NoConvergence(failures.join("; ")))
    };
    Ok(Report {
        table,
        outputs: json!({ "roots": roots, "alpha": alpha }),
        audit: json!({ "failures": failures }),
        precision: Some(mode),
        status,
    })
}

fn inner_series_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let series = inner_series(cfg.order.unwrap())?;
    let mut table = Table::new(&["n", "a_n"]);
    for (n, a) in series.a.iter().enumerate() {
        table.push(vec![s(n), s(a)]);
    }
    let diagnostics = if series.order() >= 10 {
        Some(series_diagnostics(&series)?)
    } else {
        None
    };
    let a: Vec<String> = series.a.iter().map(s).collect();
    Ok(Report {
        table,
        outputs: json!({ "a": a, "diagnostics": diagnostics }),
        audit: json!({ "exact": true }),
        precision: None,
        status: Ok(()),
    })
}

fn stokes_with<T: Real>(cfg: &RunConfig) -> splitlab_core::Result<StokesResult> {
    let policy = StepPolicy::new(T::from_f64(cfg.h.unwrap()));
    stokes_direct::<T>(cfg.y.unwrap(), cfg.l.unwrap(), &policy)
}

fn stokes_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let mode = cfg.precision.unwrap();
    let r = match mode {
        PrecisionMode::Std => stokes_with::<f64>(cfg),
        PrecisionMode::Dd => stokes_with::<DD>(cfg),
        PrecisionMode::Qd => stokes_with::<QD>(cfg),
    }?;
    let mut table = Table::new(&["y", "l", "theta_phi", "theta_psi", "imaginary_ratio", "boundary_accuracy", "error_estimate"]);
    for smp in &r.samples {
        table.push(vec![
            f(smp.y),
            f(smp.l),
            f(smp.theta_phi),
            f(smp.theta_psi),
            f(smp.imaginary_ratio()),
            f(smp.boundary_accuracy),
            f(smp.error_estimate),
        ]);
    }
    let accuracy = r.samples.iter().map(|x| x.boundary_accuracy).fold(0.0, f64::max);
    Ok(Report {
        table,
        audit: json!({
            "boundary_accuracy": accuracy,
            "reliable": r.reliable,
            "nonzero": r.estimate.theta.abs() > 10.0 * r.estimate.uncertainty,
        }),
        outputs: json!({ "stokes": r }),
        precision: Some(mode),
        status: Ok(()),
    })
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String), String>) -> Check {
    match f() {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check {
            name,
            pass: false,
            detail: e,
        },
    }
}

/// The invariant suite of every module at reduced scale.
fn verify() -> Report {
    let err = |e: splitlab_core::CoreError| e.to_string();
    let checks = vec![
        check("extprec: dd/qd parse and round trip", || {
            let x: DD = "0.1".parse().map_err(|e: splitlab_extprec::ExtPrecError| e.to_string())?;
            let y: QD = "0.1".parse().map_err(|e: splitlab_extprec::ExtPrecError| e.to_string())?;
            let back: DD = x.to_string().parse().map_err(|e: splitlab_extprec::ExtPrecError| e.to_string())?;
            let d = (y - QD::from_components(&x.components())).abs().to_f64();
            Ok((back == x && d < 1e-32, format!("|qd(0.1) - dd(0.1)| = {d:e}")))
        }),
        check("model: soliton residual", || {
            let mut worst = 0.0f64;
            for j in 1..=10 {
                let g = DD::from_f64(-(j as f64) / 99.0);
                for i in -100..=100 {
                    let (u, _, upp) = soliton(g, DD::from_f64(i as f64 * 0.1)).map_err(err)?;
                    worst = worst.max((upp - u + u * u + g * u * u * u * 2.0).abs().to_f64());
                }
            }
            Ok((worst <= 1e-25, format!("max residual {worst:e}")))
        }),
        check("model: energy conservation and involution", || {
            let p = Params::<DD>::new(-0.1, 0.1).map_err(err)?;
            let mut worst = 0.0f64;
            let mut even = true;
            for i in 0..500u64 {
                let x = |k: u64| DD::from_f64((((i * 7919 + k * 104729) % 4001) as f64 - 2000.0) / 1000.0);
                let st = State::new(x(1), x(2), x(3), x(4));
                let grad = first_integral_gradient(&p, &st);
                let d = vector_field(&p, &st).map_err(err)?.to_array();
                let dot = (0..4).fold(DD::zero(), |a, k| a + grad[k] * d[k]);
                worst = worst.max(dot.abs().to_f64());
                even &= first_integral(&p, &involute(&st)) == first_integral(&p, &st) && involute(&involute(&st)) == st;
            }
            Ok((worst <= 1e-25 && even, format!("max |dG/dt| {worst:e}, G o Psi exact: {even}")))
        }),
        check("inner: series invariants to n = 300", || {
            let s = inner_series(300).map_err(err)?;
            let d = series_diagnostics(&s).map_err(err)?;
            let settled = d.rho_settles(0.02);
            Ok((settled.is_some_and(|n| n <= 200), format!("rho within 2% from n = {settled:?}")))
        }),
        check("splitting: shot audit and precision agreement at eps = 0.1", || {
            let a = shoot(-0.1, 0.1, PrecisionMode::Dd, &ShotOptions::default()).map_err(err)?;
            let b = shoot(-0.1, 0.1, PrecisionMode::Qd, &ShotOptions::default()).map_err(err)?;
            let rel = ((a.s - b.s) / b.s).abs();
            Ok((a.audit_ok() && b.audit_ok() && rel <= 1e-3, format!("S = {}, dd/qd relative {rel:e}", b.s_decimal)))
        }),
        check("splitting: roots n = 6..8", || {
            let alpha = geometry(-0.1).map_err(err)?.alpha;
            let roots = find_roots(-0.1, 6, 8, 0.1, &RootOptions::default());
            let mut ok = true;
            let mut qs = Vec::new();
            for r in roots {
                let r = r.map_err(err)?;
                let q = r.n as f64 * std::f64::consts::PI * r.eps_n / alpha;
                ok &= r.converged && (q - 1.0).abs() <= 0.2 / r.n as f64 && r.return_test.is_some_and(|t| t.passed);
                qs.push(format!("{q:.5}"));
            }
            Ok((ok, format!("n pi eps_n / alpha = {}", qs.join(", "))))
        }),
        check("inner: Stokes constant", || {
            let r = stokes_direct(20.0, 40.0, &StepPolicy::new(DD::from_f64(0.5))).map_err(err)?;
            let ok = r.reliable && r.estimate.theta.abs() > 10.0 * r.estimate.uncertainty;
            let imag = r.samples.iter().map(|x| x.imaginary_ratio()).fold(0.0, f64::max);
            Ok((
                ok && imag <= 1e-3,
                format!("Theta = {:.4} +- {:.3}", r.estimate.theta, r.estimate.uncertainty),
            ))
        }),
    ];
    let mut table = Table::new(&["check", "pass", "detail"]);
    for c in &checks {
        table.push(vec![s(c.name), s(c.pass), c.detail.clone()]);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    let status = if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("failed: {}", failed.join(", "))))
    };
    Report {
        table,
        outputs: json!({ "checks": checks.len(), "failed": failed }),
        audit: json!({ "passed": checks.len() - failed.len() }),
        precision: None,
        status,
    }
}
