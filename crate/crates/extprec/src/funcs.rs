//! Elementary functions shared by the extended representations.
//!
//! Each function reduces its argument, evaluates a short Taylor series in the
//! working precision and, where the function is an inverse, refines a `f64`
//! seed by Newton steps.

use crate::eft::{two_prod, Expansion};
use crate::Real;

const HALF_PI: [f64; 6] = [
    std::f64::consts::FRAC_PI_2,
    6.123233995736766e-17,
    -1.4973849048591698e-33,
    5.562271104316826e-50,
    2.836115989820158e-66,
    8.724931080676243e-84,
];

const LN2: [f64; 6] = [
    std::f64::consts::LN_2,
    2.3190468138462996e-17,
    5.707708438416212e-34,
    -3.5824322106018114e-50,
    -1.352169675798863e-66,
    6.080638740240814e-83,
];

/// `x - k c` formed exactly as an expansion, then rounded once.
fn reduce<T: Real>(x: T, k: f64, c: &[f64; 6]) -> T {
    let mut e = Expansion::new();
    for &ci in c.iter().rev() {
        let (p, q) = two_prod(-k, ci);
        e.grow(q);
        e.grow(p);
    }
    for xi in x.components().into_iter().rev() {
        e.grow(xi);
    }
    T::from_components(&e.top::<4>())
}

pub fn ldexp(x: f64, k: i32) -> f64 {
    // Split the scaling so that neither factor over- or underflows.
    let mut x = x;
    let mut k = k;
    while k > 1000 {
        x *= 2f64.powi(1000);
        k -= 1000;
    }
    while k < -1000 {
        x *= 2f64.powi(-1000);
        k += 1000;
    }
    x * 2f64.powi(k)
}

pub fn powi<T: Real>(x: T, n: i32) -> T {
    if n == 0 {
        return T::one();
    }
    let mut base = x;
    let mut m = n.unsigned_abs();
    let mut acc = T::one();
    while m > 0 {
        if m & 1 == 1 {
            acc *= base;
        }
        m >>= 1;
        if m > 0 {
            base = base * base;
        }
    }
    if n < 0 {
        T::one() / acc
    } else {
        acc
    }
}

/// expm1 for |x| <= 2^-8 by its Taylor series.
fn expm1_small<T: Real>(x: T) -> T {
    let mut term = x;
    let mut sum = x;
    let tol = T::EPSILON * 0.25;
    let mut k = 2.0;
    loop {
        term = term * x / k;
        sum += term;
        if term.abs().to_f64() <= tol * sum.abs().to_f64() {
            break;
        }
        k += 1.0;
    }
    sum
}

/// expm1 for |x| <= ln2/2 + tiny: scale down, sum the series, square back up.
fn expm1_reduced<T: Real>(r: T) -> T {
    let mag = r.abs().to_f64();
    let mut m = 0;
    while m < 12 && ldexp(mag, -m) > 2f64.powi(-8) {
        m += 1;
    }
    let mut s = expm1_small(r.mul_pow2(-m));
    for _ in 0..m {
        // (1 + s)^2 - 1
        s = s.mul_pow2(1) + s * s;
    }
    s
}

pub fn exp<T: Real>(x: T) -> T {
    let xf = x.to_f64();
    if xf.is_nan() {
        return x;
    }
    if xf > 709.78 {
        return T::from_f64(f64::INFINITY);
    }
    if xf < -745.2 {
        return T::zero();
    }
    if x == T::zero() {
        return T::one();
    }
    let k = (xf / std::f64::consts::LN_2).round();
    let r = reduce(x, k, &LN2);
    (expm1_reduced(r) + 1.0).mul_pow2(k as i32)
}

pub fn expm1<T: Real>(x: T) -> T {
    if x.abs().to_f64() < 0.35 {
        expm1_reduced(x)
    } else {
        exp(x) - 1.0
    }
}

/// ln(1 + t) by Newton iteration on expm1.
pub fn ln1p<T: Real>(t: T) -> T {
    let tf = t.to_f64();
    if tf.is_nan() || tf < -1.0 {
        return T::from_f64(f64::NAN);
    }
    if tf == -1.0 && t == T::from_f64(-1.0) {
        return T::from_f64(f64::NEG_INFINITY);
    }
    if t.abs().to_f64() > 0.5 {
        return ln(t + 1.0);
    }
    let mut y = T::from_f64(tf.ln_1p());
    let one_plus_t = t + 1.0;
    for _ in 0..T::NEWTON_STEPS {
        // y -= (e^y - 1 - t) / e^y, with e^y ~ 1 + t
        let em = expm1_reduced(y);
        y -= (em - t) / one_plus_t;
    }
    y
}

pub fn ln<T: Real>(x: T) -> T {
    let xf = x.to_f64();
    if xf.is_nan() || xf < 0.0 {
        return T::from_f64(f64::NAN);
    }
    if xf == 0.0 {
        return T::from_f64(f64::NEG_INFINITY);
    }
    if xf.is_infinite() {
        return x;
    }
    // x = m 2^k with m in [1/sqrt2, sqrt2]
    let k = xf.log2().round();
    let m = x.mul_pow2(-(k as i32));
    let lm = ln1p(m - 1.0);
    if k == 0.0 {
        lm
    } else {
        T::ln2() * k + lm
    }
}

/// sin and cos of |r| <= pi/4 by their Taylor series.
fn sin_cos_reduced<T: Real>(r: T) -> (T, T) {
    let r2 = r * r;
    let tol = T::EPSILON * 0.25;
    let mut term = r;
    let mut sin = r;
    let mut k = 1.0;
    loop {
        term = -(term * r2) / ((k + 1.0) * (k + 2.0));
        sin += term;
        k += 2.0;
        if term.abs().to_f64() <= tol * sin.abs().to_f64() {
            break;
        }
    }
    let mut term = T::one();
    let mut cos = T::one();
    let mut k = 0.0;
    loop {
        term = -(term * r2) / ((k + 1.0) * (k + 2.0));
        cos += term;
        k += 2.0;
        if term.abs().to_f64() <= tol * cos.abs().to_f64() {
            break;
        }
    }
    (sin, cos)
}

pub fn sin_cos<T: Real>(x: T) -> (T, T) {
    let xf = x.to_f64();
    if !xf.is_finite() {
        let nan = T::from_f64(f64::NAN);
        return (nan, nan);
    }
    let q = (xf / std::f64::consts::FRAC_PI_2).round();
    let r = reduce(x, q, &HALF_PI);
    let (s, c) = sin_cos_reduced(r);
    match (q as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

pub fn sinh<T: Real>(x: T) -> T {
    let xf = x.to_f64();
    if xf.abs() > 710.0 {
        return T::from_f64(if xf > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        });
    }
    // (e^x - e^-x)/2 = (m + m/(1+m))/2 with m = expm1(|x|)
    let m = expm1(x.abs());
    let y = (m + m / (m + 1.0)).mul_pow2(-1);
    if xf < 0.0 {
        -y
    } else {
        y
    }
}

pub fn cosh<T: Real>(x: T) -> T {
    if x.abs().to_f64() > 710.0 {
        return T::from_f64(f64::INFINITY);
    }
    let e = exp(x.abs());
    (e + T::one() / e).mul_pow2(-1)
}

pub fn atan2<T: Real>(y: T, x: T) -> T {
    let (yf, xf) = (y.to_f64(), x.to_f64());
    if yf.is_nan() || xf.is_nan() {
        return T::from_f64(f64::NAN);
    }
    if yf == 0.0 && xf == 0.0 {
        return T::zero();
    }
    if yf == 0.0 {
        return if xf > 0.0 { T::zero() } else { T::pi() };
    }
    if xf == 0.0 {
        let hp = T::pi().mul_pow2(-1);
        return if yf > 0.0 { hp } else { -hp };
    }
    let r = (x * x + y * y).sqrt();
    let (xn, yn) = (x / r, y / r);
    let mut z = T::from_f64(yf.atan2(xf));
    for _ in 0..T::NEWTON_STEPS {
        let (s, c) = sin_cos(z);
        if xn.abs() > yn.abs() {
            z += (yn - s) / c;
        } else {
            z -= (xn - c) / s;
        }
    }
    z
}

pub fn acos<T: Real>(x: T) -> T {
    let one = T::one();
    if x.is_nan() || x > one || x < -one {
        return T::from_f64(f64::NAN);
    }
    let s = ((one - x) * (one + x)).sqrt();
    atan2(s, x)
}

pub fn acosh<T: Real>(x: T) -> T {
    let one = T::one();
    if x.is_nan() || x < one {
        return T::from_f64(f64::NAN);
    }
    if x.to_f64() > 1e150 {
        return ln(x) + T::ln2();
    }
    let t = x - one;
    ln1p(t + (t * (x + one)).sqrt())
}
