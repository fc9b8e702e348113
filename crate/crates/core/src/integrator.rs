//! Fixed-step Gragg–Bulirsch–Stoer integration with event location.
//!
//! One step of size `h` runs the modified midpoint rule with `n_j = 2j`
//! substeps for `j = 1..=k` and extrapolates the results to `h → 0` in `h²`
//! (Aitken–Neville). The extrapolated value has order `2k`; the difference of
//! the last two diagonal entries is returned as the local error estimate.

use splitlab_extprec::Real;

use crate::error::{CoreError, Result};

/// Autonomous vector field on `T^N`.
pub trait VectorField<T: Real, const N: usize>: Sync {
    fn eval(&self, y: &[T; N]) -> [T; N];

    /// Name of component `i` in diagnostics.
    fn component_name(&self, i: usize) -> &'static str {
        const NAMES: [&str; 8] = ["y0", "y1", "y2", "y3", "y4", "y5", "y6", "y7"];
        NAMES.get(i).copied().unwrap_or("y")
    }
}

/// Components with magnitude above this abort the integration.
pub const BLOW_UP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy<T> {
    /// Extrapolation order `2k`; must be even and at least 8.
    pub method_order: usize,
    /// Base step, positive.
    pub h: T,
    pub max_steps: usize,
    pub event_tol: f64,
}

impl<T: Real> StepPolicy<T> {
    /// Default order for the working precision.
    pub fn default_order() -> usize {
        match T::MODE {
            splitlab_extprec::PrecisionMode::Std => 10,
            splitlab_extprec::PrecisionMode::Dd => 16,
            splitlab_extprec::PrecisionMode::Qd => 24,
        }
    }

    pub fn new(h: T) -> Self {
        StepPolicy {
            method_order: Self::default_order(),
            h,
            max_steps: 1_000_000,
            event_tol: 1e-20,
        }
    }

    /// Base step `ε/50` for the model field.
    pub fn for_model(eps: T) -> Self {
        Self::new(eps / 50.0)
    }

    fn stages(&self) -> usize {
        (self.method_order / 2).max(4)
    }
}

#[inline]
fn axpy<T: Real, const N: usize>(y: &[T; N], a: T, x: &[T; N]) -> [T; N] {
    std::array::from_fn(|i| y[i] + a * x[i])
}

/// One extrapolated step. Returns the new state and the local error estimate
/// (max-norm of the last two diagonal entries' difference).
pub fn step<T: Real, const N: usize, F: VectorField<T, N>>(
    field: &F,
    y: &[T; N],
    h: T,
    order: usize,
) -> ([T; N], f64) {
    let k = (order / 2).max(1);
    step_with_f0(field, y, &field.eval(y), h, k)
}

fn step_with_f0<T: Real, const N: usize, F: VectorField<T, N>>(
    field: &F,
    y: &[T; N],
    f0: &[T; N],
    h: T,
    k: usize,
) -> ([T; N], f64) {
    let mut prev: Vec<[T; N]> = Vec::with_capacity(k);
    let mut row: Vec<[T; N]> = Vec::with_capacity(k);
    let mut err = 0.0;
    for j in 1..=k {
        let n = 2 * j;
        let hs = h / (n as f64);
        let two_hs = hs * 2.0;
        let mut z0 = *y;
        let mut z1 = axpy(y, hs, f0);
        for _ in 1..n {
            let z2 = axpy(&z0, two_hs, &field.eval(&z1));
            z0 = z1;
            z1 = z2;
        }
        row.clear();
        row.push(z1);
        for i in 1..j {
            // (n_j/n_{j-i})² − 1 = (n_j² − m²)/m², kept exact in T.
            let m = (2 * (j - i)) as f64;
            let inv = T::from_f64(m * m) / T::from_f64((n * n) as f64 - m * m);
            let (a, b) = (row[i - 1], prev[i - 1]);
            row.push(std::array::from_fn(|c| a[c] + (a[c] - b[c]) * inv));
        }
        if j == k && k > 1 {
            let (a, b) = (row[k - 1], prev[k - 2]);
            err = (0..N)
                .map(|c| (a[c] - b[c]).abs().to_f64())
                .fold(0.0, f64::max);
        }
        std::mem::swap(&mut prev, &mut row);
    }
    (prev[k - 1], err)
}

fn check<T: Real, const N: usize, F: VectorField<T, N>>(field: &F, y: &[T; N], t: f64) -> Result<()> {
    for (i, x) in y.iter().enumerate() {
        let v = x.to_f64();
        if !(v.abs() <= BLOW_UP) {
            return Err(CoreError::BlowUp {
                component: field.component_name(i),
                value: v,
                t,
            });
        }
    }
    Ok(())
}

/// Result of [`flow_time`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowResult<T, const N: usize> {
    pub state: [T; N],
    pub n_steps: usize,
    /// Sum of local error estimates.
    pub error_estimate: f64,
}

/// Integrates for time `t_end` (either sign) with steps of size `policy.h`
/// and a final partial step landing exactly at `t_end`.
pub fn flow_time<T: Real, const N: usize, F: VectorField<T, N>>(
    field: &F,
    y0: &[T; N],
    t_end: T,
    policy: &StepPolicy<T>,
) -> Result<FlowResult<T, N>> {
    let k = policy.stages();
    let h = policy.h.abs();
    let sign = if t_end < T::zero() { -1.0 } else { 1.0 };
    let total = t_end.abs();
    let mut full = (total / h).to_f64().floor() as usize;
    // The quotient may round up to an integer in f64.
    while full > 0 && h * (full as f64) > total {
        full -= 1;
    }
    if full > policy.max_steps {
        return Err(CoreError::Invariant(format!(
            "flow_time needs {full} steps, more than max_steps = {}",
            policy.max_steps
        )));
    }
    let hs = h * sign;
    let mut y = *y0;
    let mut err = 0.0;
    check(field, &y, 0.0)?;
    for i in 0..full {
        let f0 = field.eval(&y);
        let (yn, e) = step_with_f0(field, &y, &f0, hs, k);
        y = yn;
        err += e;
        check(field, &y, sign * (i + 1) as f64 * h.to_f64())?;
    }
    let rest = total - h * (full as f64);
    let mut n_steps = full;
    if rest > T::zero() {
        let f0 = field.eval(&y);
        let (yn, e) = step_with_f0(field, &y, &f0, rest * sign, k);
        y = yn;
        err += e;
        n_steps += 1;
        check(field, &y, t_end.to_f64())?;
    }
    Ok(FlowResult {
        state: y,
        n_steps,
        error_estimate: err,
    })
}

/// Quintic Hermite interpolant on one step, from values, first and second
/// derivatives at both ends. Only used to seed event refinement.
#[derive(Debug, Clone, Copy)]
pub struct Hermite5 {
    c: [f64; 6],
    h: f64,
}

impl Hermite5 {
    pub fn new(h: f64, y0: f64, d0: f64, s0: f64, y1: f64, d1: f64, s1: f64) -> Self {
        // Coefficients in θ = t/h of p(θ) = Σ c_i θ^i.
        let (d0, d1) = (d0 * h, d1 * h);
        let (s0, s1) = (s0 * h * h, s1 * h * h);
        let c0 = y0;
        let c1 = d0;
        let c2 = s0 / 2.0;
        let r0 = y1 - c0 - c1 - c2;
        let r1 = d1 - c1 - 2.0 * c2;
        let r2 = s1 - 2.0 * c2;
        let c3 = 10.0 * r0 - 4.0 * r1 + 0.5 * r2;
        let c4 = -15.0 * r0 + 7.0 * r1 - r2;
        let c5 = 6.0 * r0 - 3.0 * r1 + 0.5 * r2;
        Hermite5 {
            c: [c0, c1, c2, c3, c4, c5],
            h,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let th = t / self.h;
        self.c.iter().rev().fold(0.0, |acc, &ci| acc * th + ci)
    }

    /// Root in `[0, h]` by bisection, assuming a sign change.
    pub fn root(&self) -> f64 {
        let (mut a, mut b) = (0.0, self.h);
        let fa = self.eval(a);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if (self.eval(m) > 0.0) == (fa > 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

/// State at the first qualified zero of a scalar event function.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingRecord<T, const N: usize> {
    pub state: [T; N],
    pub t_cross: T,
    pub n_steps: usize,
    /// Newton polishing converged; false when bisection was used.
    pub refined: bool,
    /// |event| at the returned state.
    pub event_residual: f64,
    /// |event| after each polish iteration.
    pub polish_history: Vec<f64>,
    pub error_estimate: f64,
}

/// Flows until component `idx` changes sign at a state satisfying `guard`,
/// then polishes the crossing time by Newton on actual partial steps.
pub fn flow_to_section<T: Real, const N: usize, F, G>(
    field: &F,
    y0: &[T; N],
    idx: usize,
    guard: G,
    policy: &StepPolicy<T>,
) -> Result<CrossingRecord<T, N>>
where
    F: VectorField<T, N>,
    G: Fn(&[T; N]) -> bool,
{
    let k = policy.stages();
    let h = policy.h;
    let mut y = *y0;
    check(field, &y, 0.0)?;
    if guard(&y) && y[idx].abs().to_f64() <= policy.event_tol {
        return Ok(CrossingRecord {
            state: y,
            t_cross: T::zero(),
            n_steps: 0,
            refined: true,
            event_residual: y[idx].abs().to_f64(),
            polish_history: vec![],
            error_estimate: 0.0,
        });
    }
    let mut f0 = field.eval(&y);
    let mut err = 0.0;
    for n in 0..policy.max_steps {
        let (y1, e) = step_with_f0(field, &y, &f0, h, k);
        err += e;
        let t1 = h * ((n + 1) as f64);
        check(field, &y1, t1.to_f64())?;
        let f1 = field.eval(&y1);
        let (g0, g1) = (y[idx].to_f64(), y1[idx].to_f64());
        let changes = (g0 > 0.0 && g1 <= 0.0) || (g0 < 0.0 && g1 >= 0.0);
        if changes && (guard(&y) || guard(&y1)) {
            let t0 = h * (n as f64);
            let (tau, ystar, refined, hist) = locate(field, &y, &f0, &f1, &y1, idx, h, k, policy)?;
            return Ok(CrossingRecord {
                state: ystar,
                t_cross: t0 + tau,
                n_steps: n + 1,
                refined,
                event_residual: ystar[idx].abs().to_f64(),
                polish_history: hist,
                error_estimate: err,
            });
        }
        y = y1;
        f0 = f1;
    }
    Err(CoreError::NoCrossing {
        max_steps: policy.max_steps,
    })
}

/// Second derivative `J f` along the flow by a one-sided difference in `f64`.
fn second_derivative<T: Real, const N: usize, F: VectorField<T, N>>(
    field: &F,
    y: &[T; N],
    f: &[T; N],
    idx: usize,
) -> f64 {
    let scale = f.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max).max(1e-300);
    let d = 1e-7 / scale;
    let y2 = axpy(y, T::from_f64(d), f);
    (field.eval(&y2)[idx].to_f64() - f[idx].to_f64()) / d
}

#[allow(clippy::too_many_arguments)]
fn locate<T: Real, const N: usize, F: VectorField<T, N>>(
    field: &F,
    y0: &[T; N],
    f0: &[T; N],
    f1: &[T; N],
    y1: &[T; N],
    idx: usize,
    h: T,
    k: usize,
    policy: &StepPolicy<T>,
) -> Result<(T, [T; N], bool, Vec<f64>)> {
    let hf = h.to_f64();
    let interp = Hermite5::new(
        hf,
        y0[idx].to_f64(),
        f0[idx].to_f64(),
        second_derivative(field, y0, f0, idx),
        y1[idx].to_f64(),
        f1[idx].to_f64(),
        second_derivative(field, y1, f1, idx),
    );
    let mut tau = T::from_f64(interp.root());
    let mut hist = Vec::new();
    let mut best: Option<(f64, T, [T; N])> = None;
    for _ in 0..40 {
        let (ys, _) = step_with_f0(field, y0, f0, tau, k);
        let g = ys[idx];
        let r = g.abs().to_f64();
        hist.push(r);
        if best.as_ref().is_none_or(|b| r < b.0) {
            best = Some((r, tau, ys));
        }
        if r <= policy.event_tol {
            return Ok((tau, ys, true, hist));
        }
        let gp = field.eval(&ys)[idx];
        let next = tau - g / gp;
        if !(next.to_f64() >= -0.5 * hf && next.to_f64() <= 1.5 * hf) {
            break;
        }
        // Stalled at the precision floor.
        if hist.len() >= 3 && r >= 0.5 * hist[hist.len() - 2] && r >= 0.5 * hist[hist.len() - 3] {
            break;
        }
        tau = next;
    }
    // Bisection on actual partial steps.
    let (mut a, mut b) = (T::zero(), h);
    let ga = y0[idx].to_f64();
    for _ in 0..400 {
        let m = (a + b) * 0.5;
        let (ys, _) = step_with_f0(field, y0, f0, m, k);
        let r = ys[idx].abs().to_f64();
        hist.push(r);
        if best.as_ref().is_none_or(|bst| r < bst.0) {
            best = Some((r, m, ys));
        }
        if r <= policy.event_tol || (b - a).abs().to_f64() <= T::EPSILON * hf {
            break;
        }
        if (ys[idx].to_f64() > 0.0) == (ga > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    let (_, tau, ys) = best.unwrap();
    Ok((tau, ys, false, hist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use splitlab_extprec::DoubleDouble as DD;

    struct Oscillator;
    impl VectorField<f64, 2> for Oscillator {
        fn eval(&self, y: &[f64; 2]) -> [f64; 2] {
            [y[1], -y[0]]
        }
    }

    #[test]
    fn hermite_reproduces_quintics() {
        let p = |t: f64| 1.0 - 2.0 * t + 0.5 * t.powi(3) + t.powi(5);
        let dp = |t: f64| -2.0 + 1.5 * t * t + 5.0 * t.powi(4);
        let ddp = |t: f64| 3.0 * t + 20.0 * t.powi(3);
        let h = 0.7;
        let hm = Hermite5::new(h, p(0.0), dp(0.0), ddp(0.0), p(h), dp(h), ddp(h));
        for t in [0.1, 0.33, 0.5, 0.69] {
            assert!((hm.eval(t) - p(t)).abs() < 1e-13);
        }
    }

    #[test]
    fn equilibrium_step_has_zero_error() {
        let (y, e) = step(&Oscillator, &[0.0, 0.0], 0.1, 10);
        assert_eq!(y, [0.0, 0.0]);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn oscillator_period() {
        struct Osc;
        impl VectorField<DD, 2> for Osc {
            fn eval(&self, y: &[DD; 2]) -> [DD; 2] {
                [y[1], -y[0]]
            }
        }
        let policy = StepPolicy::<DD>::new(DD::pi() / 64.0);
        let r = flow_time(&Osc, &[DD::one(), DD::zero()], DD::pi() * 2.0, &policy).unwrap();
        assert!((r.state[0] - 1.0).abs().to_f64() < 1e-28);
        assert!(r.state[1].abs().to_f64() < 1e-28);
    }
}
