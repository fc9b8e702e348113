//! Exact conversions between component lists, rationals and decimal text.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::ExtPrecError;

pub fn components_to_rational(c: &[f64]) -> BigRational {
    c.iter()
        .filter(|x| **x != 0.0)
        .map(|&x| BigRational::from_float(x).expect("finite component"))
        .fold(BigRational::zero(), |a, b| a + b)
}

fn pow2(k: i64) -> BigRational {
    let p = BigInt::one() << k.unsigned_abs();
    if k >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

/// Nearest `f64` to `r`, ties to even.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let a = r.abs();
    // Pick e so that floor(a 2^-e) has exactly 53 bits, or e = -1074 for
    // subnormal results.
    let mut e = (a.numer().bits() as i64 - a.denom().bits() as i64 - 53).max(-1074);
    let (q, frac) = loop {
        let scaled = &a * pow2(-e);
        let q = scaled.floor().to_integer();
        let bits = q.bits();
        if bits > 53 {
            e += 1;
        } else if bits < 53 && e > -1074 {
            e -= 1;
        } else {
            let frac = scaled - BigRational::from_integer(q.clone());
            break (q, frac);
        }
    };
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let q = match frac.cmp(&half) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal if q.is_odd() => q + 1,
        std::cmp::Ordering::Equal => q,
    };
    let v = if e > 1100 {
        f64::INFINITY
    } else {
        crate::funcs::ldexp(q.to_f64().unwrap(), e as i32)
    };
    if r.is_negative() {
        -v
    } else {
        v
    }
}

/// Greedy nonoverlapping split of `r` into `n` doubles, largest first.
pub fn rational_to_components(r: &BigRational, n: usize) -> Vec<f64> {
    let mut rest = r.clone();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rational_to_f64(&rest);
        out.push(x);
        if x == 0.0 || !x.is_finite() {
            break;
        }
        rest -= BigRational::from_float(x).unwrap();
    }
    out.resize(n, 0.0);
    out
}

fn pow10(k: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), k as usize)
}

/// Scientific notation with `digits` significant digits, trailing zeros
/// removed, in the style of `{:e}`.
pub fn format_components(c: &[f64], digits: usize) -> String {
    let lead = c.first().copied().unwrap_or(0.0);
    if lead.is_nan() {
        return "NaN".into();
    }
    if lead.is_infinite() {
        return if lead > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = components_to_rational(c);
    if r.is_zero() {
        return "0e0".into();
    }
    let digits = digits.max(1);
    let neg = r.is_negative();
    let a = r.abs();
    let mut k = lead.abs().log10().floor() as i64;
    let n = loop {
        let shift = digits as i64 - 1 - k;
        let scaled = if shift >= 0 {
            &a * BigRational::from_integer(pow10(shift as u32))
        } else {
            &a / BigRational::from_integer(pow10((-shift) as u32))
        };
        let n = round_half_even(&scaled);
        if n >= pow10(digits as u32) {
            k += 1;
        } else if n < pow10(digits as u32 - 1) {
            k -= 1;
        } else {
            break n;
        }
    };
    let s = n.to_string();
    let (head, tail) = s.split_at(1);
    let tail = tail.trim_end_matches('0');
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push_str(head);
    if !tail.is_empty() {
        out.push('.');
        out.push_str(tail);
    }
    out.push('e');
    out.push_str(&k.to_string());
    out
}

/// Shortest rendering with at least `min_digits` digits that `round_trips`.
pub fn format_shortest(c: &[f64], min_digits: usize, round_trips: impl Fn(&str) -> bool) -> String {
    let mut d = min_digits;
    loop {
        let s = format_components(c, d);
        if d > 1200 || !c[0].is_finite() || round_trips(&s) {
            return s;
        }
        d += if d < min_digits + 16 { 1 } else { d / 4 };
    }
}

fn round_half_even(x: &BigRational) -> BigInt {
    let (q, r) = x.numer().div_rem(x.denom());
    let twice: BigInt = r * 2;
    match twice.cmp(x.denom()) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q.is_odd() {
                q + 1
            } else {
                q
            }
        }
    }
}

/// Parses `[+-]digits[.digits][(e|E)[+-]digits]`, `nan` or `inf` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, ExtPrecError> {
    let err = || ExtPrecError::Parse(s.to_string());
    let t = s.trim();
    let (neg, body) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let (mant, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().map_err(|_| err())?),
        None => (body, 0),
    };
    let (int, frac) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    if exp.abs() > 100_000 {
        return Err(err());
    }
    let digits = format!("{int}{frac}");
    let n = BigInt::parse_bytes(digits.as_bytes(), 10).ok_or_else(err)?;
    let e10 = exp - frac.len() as i64;
    let mut r = if e10 >= 0 {
        BigRational::from_integer(n * pow10(e10 as u32))
    } else {
        BigRational::new(n, pow10((-e10) as u32))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Components of the nearest multi-double value to a decimal literal.
pub fn parse(s: &str) -> Result<Vec<f64>, ExtPrecError> {
    let t = s.trim().to_ascii_lowercase();
    match t.as_str() {
        "nan" => return Ok(vec![f64::NAN]),
        "inf" | "+inf" | "infinity" => return Ok(vec![f64::INFINITY]),
        "-inf" | "-infinity" => return Ok(vec![f64::NEG_INFINITY]),
        _ => {}
    }
    let r = parse_rational(s)?;
    Ok(rational_to_components(&r, 5))
}
