//! Exponential-series parameterization of the one-dimensional unstable
//! manifold of the origin,
//!
//! ```text
//! u(x) = Σ b_k e^{kx},   v(x) = Σ c_k e^{kx},   k ≥ 1,
//! ```
//!
//! normalized by `b₁ = 1`, `c₁ = 0`.

use splitlab_extprec::Real;

use crate::error::{CoreError, Result};
use crate::model::{Params, State};

pub const DEFAULT_ORDER: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSeries<T> {
    /// Index `k` holds the coefficient of `e^{kx}`; index 0 is zero.
    pub b: Vec<T>,
    pub c: Vec<T>,
    pub gamma: T,
    pub eps: T,
    /// Set when a coefficient overflowed before the requested order.
    pub truncated: bool,
}

impl<T: Real> ManifoldSeries<T> {
    /// Highest retained order.
    pub fn order(&self) -> usize {
        self.b.len() - 1
    }

    /// `max_k |b_k|^{1/k}`.
    pub fn growth_bound(&self) -> f64 {
        (1..=self.order())
            .map(|k| self.b[k].abs().to_f64().powf(1.0 / k as f64))
            .fold(0.0, f64::max)
    }
}

/// Convolution coefficients of the nonlinear terms at order `k`, using
/// coefficients of index `< k` only.
struct Convolutions<T> {
    u2: Vec<T>,
    p2: Vec<T>,
}

impl<T: Real> Convolutions<T> {
    fn new(n: usize) -> Self {
        Convolutions {
            u2: vec![T::zero(); n + 1],
            p2: vec![T::zero(); n + 1],
        }
    }

    /// Returns `(F_k, G_k)` given `b[1..k]`; stores `[u²]_k` and `[u'²]_k`.
    fn at(&mut self, k: usize, gamma: T, b: &[T]) -> (T, T) {
        let mut u2 = T::zero();
        let mut p2 = T::zero();
        for j in 1..k {
            u2 += b[j] * b[k - j];
            p2 += b[j] * b[k - j] * ((j * (k - j)) as f64);
        }
        self.u2[k] = u2;
        self.p2[k] = p2;
        let mut u3 = T::zero();
        let mut f_w = T::zero();
        let mut u_p2 = T::zero();
        for m in 1..k {
            u3 += b[m] * self.u2[k - m];
            // f'(u) = 2u + 6γu², w = u'' has coefficients j² b_j.
            let fprime_m = b[m] * 2.0 + gamma * self.u2[m] * 6.0;
            let j = k - m;
            f_w += fprime_m * b[j] * ((j * j) as f64);
            u_p2 += b[m] * self.p2[k - m];
        }
        let big_f = u2 + gamma * u3 * 2.0;
        // f''(u) u'² = (2 + 12γu) u'²
        let big_g = f_w + p2 * 2.0 + gamma * u_p2 * 12.0;
        (big_f, big_g)
    }
}

/// Coefficients up to order `order` by the triangular recurrence
/// `(k² + 1/ε²) c_k = G_k`, `(k² − 1) b_k = c_k − F_k`.
pub fn unstable_series<T: Real>(p: &Params<T>, order: usize) -> Result<ManifoldSeries<T>> {
    if order < 2 {
        return Err(CoreError::Domain {
            what: "K",
            value: order as f64,
            range: "[2, inf)",
        });
    }
    let inv_e2 = T::one() / (p.eps * p.eps);
    let mut b = vec![T::zero(), T::one()];
    let mut c = vec![T::zero(), T::zero()];
    let mut conv = Convolutions::new(order);
    let mut truncated = false;
    for k in 2..=order {
        let (big_f, big_g) = conv.at(k, p.gamma, &b);
        let k2 = (k * k) as f64;
        let ck = big_g / (inv_e2 + k2);
        let bk = (ck - big_f) / (k2 - 1.0);
        if !bk.is_finite() || !ck.is_finite() {
            truncated = true;
            break;
        }
        b.push(bk);
        c.push(ck);
    }
    Ok(ManifoldSeries {
        b,
        c,
        gamma: p.gamma,
        eps: p.eps,
        truncated,
    })
}

/// Largest per-order mismatch when `F_k`, `G_k` are recomputed by direct
/// truncated-polynomial products of the finished series, in units of the
/// working epsilon. The unit is taken relative to the larger of the
/// coefficient and the magnitude of the terms entering it, since the
/// convolutions cancel.
pub fn recurrence_residual<T: Real>(s: &ManifoldSeries<T>) -> f64 {
    let n = s.order();
    let mul = |a: &[T], b: &[T]| -> Vec<T> {
        let mut out = vec![T::zero(); n + 1];
        for i in 1..=n {
            for j in 1..=n - i {
                out[i + j] += a[i] * b[j];
            }
        }
        out
    };
    let sources = |u: &[T], g: T| -> (Vec<T>, Vec<T>) {
        let up: Vec<T> = (0..=n).map(|k| u[k] * (k as f64)).collect();
        let w: Vec<T> = (0..=n).map(|k| u[k] * ((k * k) as f64)).collect();
        let u2 = mul(u, u);
        let u3 = mul(&u2, u);
        let fprime: Vec<T> = (0..=n).map(|k| u[k] * 2.0 + g * u2[k] * 6.0).collect();
        let p2 = mul(&up, &up);
        let up2 = mul(u, &p2);
        let fw = mul(&fprime, &w);
        let big_f = (0..=n).map(|k| u2[k] + g * u3[k] * 2.0).collect();
        let big_g = (0..=n)
            .map(|k| fw[k] + p2[k] * 2.0 + g * up2[k] * 12.0)
            .collect();
        (big_f, big_g)
    };
    let (big_f, big_g) = sources(&s.b, s.gamma);
    let abs_b: Vec<T> = s.b.iter().map(|x| x.abs()).collect();
    let (mag_f, mag_g) = sources(&abs_b, s.gamma.abs());
    let inv_e2 = T::one() / (s.eps * s.eps);
    let mut worst: f64 = 0.0;
    for k in 2..=n {
        let k2 = (k * k) as f64;
        let ck = big_g[k] / (inv_e2 + k2);
        let bk = (ck - big_f[k]) / (k2 - 1.0);
        let c_mag = mag_g[k] / (inv_e2 + k2);
        let b_mag = (c_mag + mag_f[k]) / (k2 - 1.0);
        for (x, y, m) in [(bk, s.b[k], b_mag), (ck, s.c[k], c_mag)] {
            let scale = y.abs().max(m).to_f64().max(f64::MIN_POSITIVE);
            worst = worst.max((x - y).abs().to_f64() / scale / T::EPSILON);
        }
    }
    worst
}

/// Point of the manifold at parameter `x0` and a bound on the neglected tail.
pub fn seed_state<T: Real>(s: &ManifoldSeries<T>, x0: T) -> Result<(State<T>, f64)> {
    let r = x0.exp();
    let growth = s.growth_bound();
    if !(r.to_f64() * growth < 0.5) {
        return Err(CoreError::SeedTooClose {
            x0: x0.to_f64(),
            suggested: (0.5 / growth).ln() - 0.05,
        });
    }
    let n = s.order();
    let (mut u, mut up, mut v, mut vp) = (T::zero(), T::zero(), T::zero(), T::zero());
    // Horner in r, from the top order down.
    for k in (1..=n).rev() {
        u = (u + s.b[k]) * r;
        up = (up + s.b[k] * (k as f64)) * r;
        v = (v + s.c[k]) * r;
        vp = (vp + s.c[k] * (k as f64)) * r;
    }
    let rf = r.to_f64();
    let last = (s.b[n].abs().to_f64() + s.c[n].abs().to_f64()) * rf.powi(n as i32) * n as f64;
    let ratio = if n >= 2 && s.b[n - 1] != T::zero() {
        (s.b[n] / s.b[n - 1]).abs().to_f64()
    } else {
        growth
    };
    let q = (rf * ratio).min(0.9);
    let bound = last * q / (1.0 - q) * (1.0 + 1.0 / n as f64);
    Ok((State::new(u, up, v, vp), bound))
}

/// Largest `x0` on a 0.25 grid (at most −0.75) whose tail bound is below
/// `target`.
pub fn auto_x0<T: Real>(s: &ManifoldSeries<T>, target: f64) -> Result<(T, State<T>, f64)> {
    let mut x0 = -0.75;
    while x0 > -60.0 {
        if let Ok((st, bound)) = seed_state(s, T::from_f64(x0)) {
            if bound <= target {
                return Ok((T::from_f64(x0), st, bound));
            }
        }
        x0 -= 0.25;
    }
    Err(CoreError::Invariant(format!(
        "no seed point reaches tail bound {target:e}"
    )))
}

/// The reversing involution `(u, u', v, v') ↦ (u, −u', v, −v')`.
pub fn involute<T: Real>(s: &State<T>) -> State<T> {
    State::new(s.u, -s.up, s.v, -s.vp)
}
