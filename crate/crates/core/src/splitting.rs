//! Measurement of the splitting `S(ε) = v'` at the first qualified crossing
//! of the unstable orbit with the section `{u' = 0}`, the homoclinic values
//! where `S` vanishes, and the fit of `S` against its asymptotic law.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use splitlab_extprec::{DoubleDouble, PrecisionMode, QuadDouble, Real};

use crate::error::{CoreError, Result};
use crate::integrator::{flow_to_section, step, StepPolicy, VectorField};
use crate::manifold::{auto_x0, seed_state, unstable_series, DEFAULT_ORDER};
use crate::model::{first_integral, geometry, splitting_envelope, Params, State};

/// Options for a single shot. `None` fields take their documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotOptions {
    /// Extrapolation order of the integrator (default by precision mode).
    pub method_order: Option<usize>,
    /// Steps per unit of ε: the base step is `ε / steps_per_eps`.
    pub steps_per_eps: f64,
    /// Manifold series order.
    pub series_order: usize,
    /// Seed parameter; chosen from the tail bound when absent.
    pub x0: Option<f64>,
    pub event_tol: Option<f64>,
    pub energy_tol: Option<f64>,
    /// Refuse modes whose unit roundoff exceeds 1e−4 of the envelope.
    pub check_precision: bool,
    /// Continue past the section and record the closest approach to the origin.
    pub return_test: bool,
}

impl Default for ShotOptions {
    fn default() -> Self {
        ShotOptions {
            method_order: None,
            steps_per_eps: 50.0,
            series_order: DEFAULT_ORDER,
            x0: None,
            event_tol: None,
            energy_tol: None,
            check_precision: true,
            return_test: false,
        }
    }
}

/// Closest approach of the continued orbit to the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnTest {
    pub min_norm: f64,
    /// Time after the crossing at which the minimum occurred.
    pub t_after_crossing: f64,
    pub passed: bool,
}

/// Threshold of the homoclinic return test.
pub const RETURN_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub gamma: f64,
    pub eps: f64,
    pub mode: PrecisionMode,
    /// `v'` at the crossing.
    pub s: f64,
    /// `S` at the full precision of the mode.
    pub s_decimal: String,
    pub u_at_sigma: f64,
    pub v_at_sigma: f64,
    pub t_cross: f64,
    pub g_drift: f64,
    pub energy_tol: f64,
    pub event_residual: f64,
    pub event_tol: f64,
    pub seed_truncation: f64,
    pub x0: f64,
    pub n_steps: usize,
    pub refined: bool,
    pub return_test: Option<ReturnTest>,
}

impl ShotRecord {
    /// Energy and event audits both hold.
    pub fn audit_ok(&self) -> bool {
        self.g_drift <= self.energy_tol && self.event_residual <= self.event_tol
    }
}

/// Coarsest mode adequate for `eps`, if any.
pub fn required_mode(gamma: f64, eps: f64) -> Option<PrecisionMode> {
    let limit = 1e-4 * splitting_envelope(gamma, eps);
    [PrecisionMode::Std, PrecisionMode::Dd, PrecisionMode::Qd]
        .into_iter()
        .find(|m| m.epsilon() <= limit)
}

pub fn check_precision(mode: PrecisionMode, gamma: f64, eps: f64) -> Result<()> {
    let limit = 1e-4 * splitting_envelope(gamma, eps);
    if mode.epsilon() <= limit {
        return Ok(());
    }
    Err(CoreError::PrecisionInadequate {
        mode,
        unit: mode.epsilon(),
        limit,
        required: required_mode(gamma, eps).map_or("none available".into(), |m| m.name().into()),
    })
}

/// Default event tolerance: `max(min(1e−20, 1e−6 · envelope), 64 · unit)`.
/// The floor only binds in std mode.
pub fn default_event_tol(mode: PrecisionMode, gamma: f64, eps: f64) -> f64 {
    (1e-6 * splitting_envelope(gamma, eps))
        .min(1e-20)
        .max(64.0 * mode.epsilon())
}

pub fn shoot(gamma: f64, eps: f64, mode: PrecisionMode, opts: &ShotOptions) -> Result<ShotRecord> {
    match mode {
        PrecisionMode::Std => shoot_in::<f64>(gamma, eps, opts),
        PrecisionMode::Dd => shoot_in::<DoubleDouble>(gamma, eps, opts),
        PrecisionMode::Qd => shoot_in::<QuadDouble>(gamma, eps, opts),
    }
}

/// A shot with its seed, crossing state and crossing time in the working type.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotState<T> {
    pub record: ShotRecord,
    pub seed: State<T>,
    pub crossing: State<T>,
    pub t_cross: T,
}

/// Full shot in working type `T`.
pub fn shoot_state<T: Real>(gamma: f64, eps: f64, opts: &ShotOptions) -> Result<ShotState<T>> {
    let mut p = Params::<T>::new(gamma, eps)?;
    if opts.check_precision {
        check_precision(T::MODE, gamma, eps)?;
    }
    if let Some(tol) = opts.energy_tol {
        p.energy_tol = tol;
    }
    let series = unstable_series(&p, opts.series_order)?;
    let target = splitting_envelope(gamma, eps);
    let (x0, seed, trunc) = match opts.x0 {
        Some(x0) => {
            let (s, b) = seed_state(&series, T::from_f64(x0))?;
            (T::from_f64(x0), s, b)
        }
        None => auto_x0(&series, 1e-3 * target)?,
    };
    let field = p.field();
    let mut policy = StepPolicy::new(p.eps / opts.steps_per_eps);
    if let Some(o) = opts.method_order {
        policy.method_order = o;
    }
    policy.event_tol = opts
        .event_tol
        .unwrap_or_else(|| default_event_tol(T::MODE, gamma, eps));
    let u_peak = 3.0 / ((1.0 + 9.0 * gamma).sqrt() + 1.0);
    let guard = move |y: &[T; 4]| y[0].to_f64() > 0.5 * u_peak;
    let cross = flow_to_section(&field, &seed.to_array(), 1, guard, &policy)?;
    let at = State::from_array(cross.state);
    let g_drift = (first_integral(&p, &at) - first_integral(&p, &seed))
        .abs()
        .to_f64();
    let return_test = if opts.return_test {
        Some(return_test(&field, &at, &policy)?)
    } else {
        None
    };
    let rec = ShotRecord {
        gamma,
        eps,
        mode: T::MODE,
        s: at.vp.to_f64(),
        s_decimal: at.vp.to_string(),
        u_at_sigma: at.u.to_f64(),
        v_at_sigma: at.v.to_f64(),
        t_cross: cross.t_cross.to_f64(),
        g_drift,
        energy_tol: p.energy_tol,
        event_residual: cross.event_residual,
        event_tol: policy.event_tol,
        seed_truncation: trunc,
        x0: x0.to_f64(),
        n_steps: cross.n_steps,
        refined: cross.refined,
        return_test,
    };
    Ok(ShotState {
        record: rec,
        seed,
        crossing: at,
        t_cross: cross.t_cross,
    })
}

fn shoot_in<T: Real>(gamma: f64, eps: f64, opts: &ShotOptions) -> Result<ShotRecord> {
    shoot_state::<T>(gamma, eps, opts).map(|r| r.record)
}

/// Continues from the crossing for at most 40 time units and records the
/// closest approach to the origin.
fn return_test<T: Real, F: VectorField<T, 4>>(
    field: &F,
    at: &State<T>,
    policy: &StepPolicy<T>,
) -> Result<ReturnTest> {
    let h = policy.h;
    let hf = h.to_f64();
    let mut y = at.to_array();
    let mut best = (at.norm().to_f64(), 0.0);
    let n_max = (40.0 / hf).ceil() as usize;
    for n in 1..=n_max {
        y = step(field, &y, h, policy.method_order).0;
        let norm = State::from_array(y).norm().to_f64();
        if !(norm <= crate::integrator::BLOW_UP) {
            break;
        }
        if norm < best.0 {
            best = (norm, n as f64 * hf);
        }
        if norm <= RETURN_RADIUS {
            break;
        }
        // Left the neighborhood of the origin for good.
        if best.0 < 0.1 && norm > 10.0 * best.0 && norm > 0.1 {
            break;
        }
    }
    Ok(ReturnTest {
        min_norm: best.0,
        t_after_crossing: best.1,
        passed: best.0 <= RETURN_RADIUS,
    })
}

/// Leading term `α/(nπ)` of the n-th homoclinic value.
pub fn predicted_eps(gamma: f64, n: u32) -> Result<f64> {
    let alpha = geometry(gamma)?.alpha;
    Ok(alpha / (n as f64 * std::f64::consts::PI))
}

/// `−(2Θ / (√|γ| ε³)) e^{−π/ε} sin(α/ε)`.
pub fn asymptotic_s(gamma: f64, eps: f64, theta: f64) -> Result<f64> {
    asymptotic_s_with_power(gamma, eps, theta, 3.0)
}

/// The asymptotic law with prefactor `ε^{−power}`.
pub fn asymptotic_s_with_power(gamma: f64, eps: f64, theta: f64, power: f64) -> Result<f64> {
    let alpha = geometry(gamma)?.alpha;
    let amp = 2.0 * theta * (-std::f64::consts::PI / eps).exp() / ((-gamma).sqrt() * eps.powf(power));
    Ok(-amp * (alpha / eps).sin())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootOptions {
    pub shot: ShotOptions,
    pub mode: PrecisionMode,
    /// Bracket width at which iteration stops.
    pub eps_tol: f64,
    /// Relative to the local envelope; the absolute tolerance is
    /// `root_tol_rel · 2e^{−π/ε}/(√|γ|ε³)`.
    pub root_tol_rel: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            shot: ShotOptions::default(),
            mode: PrecisionMode::Dd,
            eps_tol: 1e-10,
            root_tol_rel: 1e-4,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsRoot {
    pub n: u32,
    pub eps_n: f64,
    pub residual_s: f64,
    pub root_tol: f64,
    pub bracket: (f64, f64),
    /// Both stopping tests met; false when the precision ceiling was hit.
    pub converged: bool,
    pub shots: usize,
    pub return_test: Option<ReturnTest>,
}

/// Brent's method on `ε ↦ S(ε)` over `bracket`.
pub fn find_root(gamma: f64, bracket: (f64, f64), opts: &RootOptions) -> Result<EpsRoot> {
    let alpha = geometry(gamma)?.alpha;
    let mut shots = 0usize;
    let mut eval = |e: f64| -> Result<f64> {
        shots += 1;
        Ok(shoot(gamma, e, opts.mode, &opts.shot)?.s)
    };
    let (mut a, mut b) = bracket;
    let (mut fa, mut fb) = (eval(a)?, eval(b)?);
    if fa == 0.0 || fb == 0.0 {
        let e = if fa == 0.0 { a } else { b };
        return finish_root(gamma, alpha, e, (a, b), true, shots, opts);
    }
    if (fa > 0.0) == (fb > 0.0) {
        return Err(CoreError::Bracket { lo: a, hi: b });
    }
    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (b - a, b - a);
    let mut converged = false;
    for _ in 0..opts.max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let root_tol = opts.root_tol_rel * splitting_envelope(gamma, b);
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.25 * opts.eps_tol;
        let xm = 0.5 * (c - b);
        let width = (c - b).abs();
        if width <= opts.eps_tol && fb.abs() <= root_tol {
            converged = true;
            break;
        }
        if width <= 4.0 * f64::EPSILON * b.abs() || fb == 0.0 {
            converged = fb.abs() <= root_tol;
            break;
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = eval(b)?;
    }
    let lo = b.min(c);
    let hi = b.max(c);
    finish_root(gamma, alpha, b, (lo, hi), converged, shots, opts)
}

#[allow(clippy::too_many_arguments)]
fn finish_root(
    gamma: f64,
    alpha: f64,
    eps: f64,
    bracket: (f64, f64),
    converged: bool,
    shots: usize,
    opts: &RootOptions,
) -> Result<EpsRoot> {
    let mut shot = opts.shot.clone();
    shot.return_test = true;
    let rec = shoot(gamma, eps, opts.mode, &shot)?;
    Ok(EpsRoot {
        n: (alpha / (std::f64::consts::PI * eps)).round() as u32,
        eps_n: eps,
        residual_s: rec.s,
        root_tol: opts.root_tol_rel * splitting_envelope(gamma, eps),
        bracket,
        converged,
        shots: shots + 1,
        return_test: rec.return_test,
    })
}

/// Roots for indices `n_min..=n_max`, each bracketed by ±`half_width`
/// (relative) around `α/(nπ)`, capped at `0.4/n` so that a bracket never
/// reaches a neighbouring index. Roots are computed in parallel.
pub fn find_roots(
    gamma: f64,
    n_min: u32,
    n_max: u32,
    half_width: f64,
    opts: &RootOptions,
) -> Vec<Result<EpsRoot>> {
    (n_min..=n_max)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let e = predicted_eps(gamma, n)?;
            let w = half_width.min(0.4 / n as f64);
            find_root(gamma, (e * (1.0 - w), e * (1.0 + w)), opts)
        })
        .collect()
}

/// Shots on `eps_grid`, evaluated in parallel; the output order follows the grid.
pub fn sweep(gamma: f64, eps_grid: &[f64], mode: PrecisionMode, opts: &ShotOptions) -> Vec<Result<ShotRecord>> {
    eps_grid
        .par_iter()
        .map(|&e| shoot(gamma, e, mode, opts))
        .collect()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaMethod {
    AmplitudeFit,
    InnerDirect,
    InnerSeriesGrowth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub theta: f64,
    pub method: ThetaMethod,
    pub uncertainty: f64,
}

impl ThetaEstimate {
    /// |Θ| exceeds `factor` times the uncertainty.
    pub fn nonzero(&self, factor: f64) -> bool {
        self.theta.abs() > factor * self.uncertainty
    }
}

/// Fit of the normalized amplitude against `Θ sin(α/ε)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesFit {
    pub estimate: ThetaEstimate,
    /// Exponent `p` of the normalization `A = −ε^p e^{π/ε} S √|γ| / 2`.
    pub power: f64,
    /// Uncertainty divided by |Θ|.
    pub relative_residual: f64,
    pub n_used: usize,
}

/// Minimum number of records for a fit.
pub const MIN_FIT_RECORDS: usize = 8;

/// `A(ε) = −ε³ e^{π/ε} S(ε) √|γ| / 2` fitted to `Θ sin(α/ε)` by least squares.
pub fn fit_stokes(records: &[ShotRecord]) -> Result<StokesFit> {
    fit_stokes_with_power(records, 3.0)
}

pub fn fit_stokes_with_power(records: &[ShotRecord], power: f64) -> Result<StokesFit> {
    if records.len() < MIN_FIT_RECORDS {
        return Err(CoreError::TooFewRecords {
            usable: records.len(),
            needed: MIN_FIT_RECORDS,
        });
    }
    let gamma = records[0].gamma;
    let alpha = geometry(gamma)?.alpha;
    let pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| {
            let a = -r.eps.powf(power) * (std::f64::consts::PI / r.eps).exp() * r.s * (-gamma).sqrt() / 2.0;
            ((alpha / r.eps).sin(), a)
        })
        .collect();
    let sxx: f64 = pts.iter().map(|(s, _)| s * s).sum();
    let sxy: f64 = pts.iter().map(|(s, a)| s * a).sum();
    let theta = sxy / sxx;
    let max_res = pts
        .iter()
        .map(|(s, a)| (a - theta * s).abs())
        .fold(0.0, f64::max);
    let max_sin = pts.iter().map(|(s, _)| s.abs()).fold(0.0, f64::max);
    let uncertainty = max_res / max_sin;
    Ok(StokesFit {
        estimate: ThetaEstimate {
            theta,
            method: ThetaMethod::AmplitudeFit,
            uncertainty,
        },
        power,
        relative_residual: uncertainty / theta.abs(),
        n_used: pts.len(),
    })
}

/// Exponent `p` on a 0.01 grid in [1, 6] minimizing the relative residual of
/// [`fit_stokes_with_power`].
pub fn best_power(records: &[ShotRecord]) -> Result<StokesFit> {
    let mut best: Option<StokesFit> = None;
    for i in 0..=500 {
        let p = 1.0 + 0.01 * i as f64;
        let fit = fit_stokes_with_power(records, p)?;
        if best
            .as_ref()
            .is_none_or(|b| fit.relative_residual < b.relative_residual)
        {
            best = Some(fit);
        }
    }
    Ok(best.unwrap())
}

/// Fit of `A_p(ε)` against `Θ sin(α/ε + cε)`, linearized as
/// `Θ sin(α/ε) + Θc ε cos(α/ε)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFit {
    pub theta: f64,
    /// Phase coefficient `c`.
    pub phase: f64,
    pub power: f64,
    /// Max residual over `|Θ|`.
    pub relative_residual: f64,
}

pub fn fit_stokes_phase(records: &[ShotRecord], power: f64) -> Result<PhaseFit> {
    if records.len() < MIN_FIT_RECORDS {
        return Err(CoreError::TooFewRecords {
            usable: records.len(),
            needed: MIN_FIT_RECORDS,
        });
    }
    let gamma = records[0].gamma;
    let alpha = geometry(gamma)?.alpha;
    let rows: Vec<(f64, f64, f64)> = records
        .iter()
        .map(|r| {
            let a = -r.eps.powf(power) * (std::f64::consts::PI / r.eps).exp() * r.s * (-gamma).sqrt() / 2.0;
            let (s, c) = (alpha / r.eps).sin_cos();
            (s, r.eps * c, a)
        })
        .collect();
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x1, x2, y) in &rows {
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        b1 += x1 * y;
        b2 += x2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    let theta = (b1 * s22 - b2 * s12) / det;
    let tc = (s11 * b2 - s12 * b1) / det;
    let phase = tc / theta;
    let max_res = records
        .iter()
        .zip(&rows)
        .map(|(r, &(_, _, a))| (a - theta * (alpha / r.eps + phase * r.eps).sin()).abs())
        .fold(0.0, f64::max);
    Ok(PhaseFit {
        theta,
        phase,
        power,
        relative_residual: max_res / theta.abs(),
    })
}

/// Sign changes of `S` between consecutive zeros `α/((k+1)π) < ε < α/(kπ)`
/// of `sin(α/ε)`, for every such interval lying inside the sweep. Returns
/// `(k, count)` pairs.
pub fn sign_changes_between_zeros(records: &[ShotRecord]) -> Result<Vec<(u32, usize)>> {
    if records.is_empty() {
        return Ok(vec![]);
    }
    let alpha = geometry(records[0].gamma)?.alpha;
    let mut recs: Vec<&ShotRecord> = records.iter().collect();
    recs.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let phase = |e: f64| alpha / e / std::f64::consts::PI;
    let (lo, hi) = (phase(recs[0].eps), phase(recs[recs.len() - 1].eps));
    let mut out = Vec::new();
    let mut k = lo.ceil() as u32;
    while ((k + 1) as f64) <= hi {
        let cell: Vec<f64> = recs
            .iter()
            .filter(|r| {
                let ph = phase(r.eps);
                ph > k as f64 && ph < (k + 1) as f64
            })
            .map(|r| r.s)
            .collect();
        let changes = cell.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
        out.push((k, changes));
        k += 1;
    }
    Ok(out)
}

/// Constant sign of `S · sin(α/ε)` away from the zeros: fraction of records
/// with `|Θ sin(α/ε)|` above `2 · uncertainty` whose sign agrees with Θ.
pub fn sign_coherence(records: &[ShotRecord], fit: &StokesFit) -> Result<(usize, usize)> {
    let alpha = geometry(records[0].gamma)?.alpha;
    let t = fit.estimate.theta;
    let band = 2.0 * fit.estimate.uncertainty;
    let mut total = 0;
    let mut agree = 0;
    for r in records {
        let s = (alpha / r.eps).sin();
        if (t * s).abs() <= band {
            continue;
        }
        total += 1;
        // S = −(positive) Θ sin, so −S has the sign of Θ sin.
        if (-r.s > 0.0) == (t * s > 0.0) {
            agree += 1;
        }
    }
    Ok((agree, total))
}
