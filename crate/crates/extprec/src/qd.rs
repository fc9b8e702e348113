use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use crate::dd::assign_ops;
use crate::eft::{two_prod, Expansion};
use crate::{decimal, funcs, ExtPrecError, PrecisionMode, Real};

/// Unevaluated sum of four nonoverlapping doubles, largest first.
///
/// Sums and products are formed exactly as floating-point expansions and
/// then rounded back to four components, so every basic operation is
/// accurate to a few units of `2^-209`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct QuadDouble(pub [f64; 4]);

impl QuadDouble {
    fn from_expansion(e: &Expansion) -> Self {
        QuadDouble(e.top::<4>())
    }

    fn mul_f64(self, b: f64) -> Self {
        let mut e = Expansion::new();
        for &a in self.0.iter().rev() {
            let (p, q) = two_prod(a, b);
            e.grow(q);
            e.grow(p);
        }
        Self::from_expansion(&e)
    }
}

impl Add for QuadDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let mut e = Expansion::new();
        for i in (0..4).rev() {
            e.grow(self.0[i]);
            e.grow(b.0[i]);
        }
        Self::from_expansion(&e)
    }
}

impl Sub for QuadDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Neg for QuadDouble {
    type Output = Self;
    fn neg(self) -> Self {
        QuadDouble([-self.0[0], -self.0[1], -self.0[2], -self.0[3]])
    }
}

impl Mul for QuadDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (a, b) = (self.0, b.0);
        if !a[0].is_finite() || !b[0].is_finite() {
            return QuadDouble::from_f64(a[0] * b[0]);
        }
        let mut e = Expansion::new();
        // Products a_i b_j with i + j = 4 only need their rounded value;
        // everything above is formed exactly.
        for s in (0..=4usize).rev() {
            for i in 0..=s.min(3) {
                let j = s - i;
                if j > 3 {
                    continue;
                }
                if s == 4 {
                    e.grow(a[i] * b[j]);
                } else {
                    let (p, q) = two_prod(a[i], b[j]);
                    e.grow(q);
                    e.grow(p);
                }
            }
        }
        Self::from_expansion(&e)
    }
}

impl Div for QuadDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q0 = self.0[0] / b.0[0];
        if !q0.is_finite() {
            return QuadDouble::from_f64(q0);
        }
        let mut r = self - b.mul_f64(q0);
        let mut q = [q0, 0.0, 0.0, 0.0, 0.0];
        for qk in q.iter_mut().skip(1) {
            *qk = r.0[0] / b.0[0];
            r = r - b.mul_f64(*qk);
        }
        let mut e = Expansion::new();
        for &x in q.iter().rev() {
            e.grow(x);
        }
        Self::from_expansion(&e)
    }
}

assign_ops!(QuadDouble);

impl Add<f64> for QuadDouble {
    type Output = Self;
    fn add(self, b: f64) -> Self {
        let mut e = Expansion::new();
        for &x in self.0.iter().rev() {
            e.grow(x);
        }
        e.grow(b);
        Self::from_expansion(&e)
    }
}

impl Mul<f64> for QuadDouble {
    type Output = Self;
    fn mul(self, b: f64) -> Self {
        self.mul_f64(b)
    }
}

impl Real for QuadDouble {
    const MODE: PrecisionMode = PrecisionMode::Qd;
    const EPSILON: f64 = 1.215_432_671_457_254e-63; // 2^-209
    const DIGITS: usize = 66;
    const NEWTON_STEPS: usize = 2;
    const MODE_COMPONENTS: usize = 4;

    fn from_f64(x: f64) -> Self {
        QuadDouble([x, 0.0, 0.0, 0.0])
    }
    fn to_f64(self) -> f64 {
        self.0[0]
    }
    fn components(self) -> Vec<f64> {
        self.0.to_vec()
    }
    fn from_components(c: &[f64]) -> Self {
        if c.iter().any(|x| !x.is_finite()) {
            return QuadDouble::from_f64(c.iter().sum());
        }
        let mut e = Expansion::new();
        for &x in c.iter().rev() {
            e.grow(x);
        }
        Self::from_expansion(&e)
    }
    fn mul_pow2(self, k: i32) -> Self {
        QuadDouble(self.0.map(|x| funcs::ldexp(x, k)))
    }
    fn pi() -> Self {
        QuadDouble([
            std::f64::consts::PI,
            1.2246467991473532e-16,
            -2.9947698097183397e-33,
            1.1124542208633653e-49,
        ])
    }
    fn ln2() -> Self {
        QuadDouble([
            std::f64::consts::LN_2,
            2.3190468138462996e-17,
            5.707708438416212e-34,
            -3.5824322106018114e-50,
        ])
    }
    fn abs(self) -> Self {
        if self.0[0] < 0.0 {
            -self
        } else {
            self
        }
    }
    fn sqrt(self) -> Self {
        let a = self.0[0];
        if a <= 0.0 {
            return if a == 0.0 {
                QuadDouble::zero()
            } else {
                QuadDouble::from_f64(f64::NAN)
            };
        }
        // Newton iteration for 1/sqrt, then one multiplication.
        let mut x = QuadDouble::from_f64(1.0 / a.sqrt());
        let half = self.mul_pow2(-1);
        for _ in 0..3 {
            x = x + x * (QuadDouble::from_f64(0.5) - half * x * x);
        }
        let y = self * x;
        // final correction y += x (a - y^2) / 2
        y + x * (self - y * y) * 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::{Signed, ToPrimitive, Zero};
    use rand::{Rng, SeedableRng};

    fn rel_ulps(got: QuadDouble, want: &BigRational) -> f64 {
        let diff = (got.to_rational() - want).abs();
        if want.is_zero() {
            return diff.to_f64().unwrap();
        }
        (diff / want.abs()).to_f64().unwrap() / QuadDouble::EPSILON
    }

    fn random_qd(rng: &mut impl Rng, lo: f64, hi: f64) -> QuadDouble {
        let x0: f64 = rng.gen_range(lo..hi);
        QuadDouble::from_components(&[
            x0,
            x0 * rng.gen_range(-1e-16..1e-16),
            x0 * rng.gen_range(-1e-32..1e-32),
            x0 * rng.gen_range(-1e-48..1e-48),
        ])
    }

    #[test]
    fn basic_arithmetic_within_four_ulp() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let a = random_qd(&mut rng, -10.0, 10.0);
            let b = random_qd(&mut rng, 0.1, 10.0);
            let (ea, eb) = (a.to_rational(), b.to_rational());
            assert!(rel_ulps(a + b, &(&ea + &eb)) <= 4.0);
            assert!(rel_ulps(a - b, &(&ea - &eb)) <= 4.0);
            assert!(rel_ulps(a * b, &(&ea * &eb)) <= 4.0);
            assert!(rel_ulps(a / b, &(&ea / &eb)) <= 4.0);
            let s = b.sqrt();
            assert!(rel_ulps(s * s, &eb) <= 8.0);
        }
    }

    #[test]
    fn near_cancellation_is_exact() {
        let a = QuadDouble::from_components(&[1.0, 1e-20, 1e-40, 1e-60]);
        let b = QuadDouble::from_components(&[1.0, 1e-20, 1e-40, 0.0]);
        let d = a - b;
        assert!(rel_ulps(d, &(a.to_rational() - b.to_rational())) <= 1.0);
    }
}
