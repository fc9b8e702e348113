use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use crate::eft::{fast_two_sum, two_prod, two_sum};
use crate::{decimal, funcs, ExtPrecError, PrecisionMode, Real};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const fn new(hi: f64, lo: f64) -> Self {
        DoubleDouble { hi, lo }
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Self {
        let (s, e) = fast_two_sum(hi, lo);
        DoubleDouble { hi: s, lo: e }
    }

    #[inline]
    fn add_f64(self, b: f64) -> Self {
        let (s, e) = two_sum(self.hi, b);
        Self::renorm(s, e + self.lo)
    }

    #[inline]
    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Self::renorm(p, self.lo.mul_add(b, e))
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = fast_two_sum(s, e + t);
        Self::renorm(s, e + f)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = self.hi.mul_add(b.lo, self.lo.mul_add(b.hi, e));
        Self::renorm(p, e)
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() {
            return DoubleDouble::from_f64(q1);
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = fast_two_sum(q1, q2);
        DoubleDouble { hi: q1, lo: q2 }.add_f64(q3)
    }
}

macro_rules! assign_ops {
    ($t:ty) => {
        impl AddAssign for $t {
            #[inline]
            fn add_assign(&mut self, b: Self) {
                *self = *self + b;
            }
        }
        impl SubAssign for $t {
            #[inline]
            fn sub_assign(&mut self, b: Self) {
                *self = *self - b;
            }
        }
        impl MulAssign for $t {
            #[inline]
            fn mul_assign(&mut self, b: Self) {
                *self = *self * b;
            }
        }
        impl DivAssign for $t {
            #[inline]
            fn div_assign(&mut self, b: Self) {
                *self = *self / b;
            }
        }
        impl Sub<f64> for $t {
            type Output = Self;
            #[inline]
            fn sub(self, b: f64) -> Self {
                self + (-b)
            }
        }
        impl Div<f64> for $t {
            type Output = Self;
            #[inline]
            fn div(self, b: f64) -> Self {
                self / <$t>::from_f64(b)
            }
        }
        impl PartialOrd for $t {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                let a = self.components();
                let b = other.components();
                for (x, y) in a.iter().zip(b.iter()) {
                    match x.partial_cmp(y)? {
                        Ordering::Equal => continue,
                        o => return Some(o),
                    }
                }
                Some(Ordering::Equal)
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let c = self.components();
                match f.precision() {
                    Some(d) => f.write_str(&decimal::format_components(&c, d)),
                    None => f.write_str(&decimal::format_shortest(&c, <$t as Real>::DIGITS, |s| {
                        <$t as Real>::parse_real(s).map_or(false, |y| y == *self)
                    })),
                }
            }
        }
        impl fmt::Debug for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({:?})", stringify!($t), self.components())
            }
        }
        impl FromStr for $t {
            type Err = ExtPrecError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                <$t as Real>::parse_real(s)
            }
        }
        impl serde::Serialize for $t {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_string())
            }
        }
        impl<'de> serde::Deserialize<'de> for $t {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}
pub(crate) use assign_ops;

assign_ops!(DoubleDouble);

impl Add<f64> for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, b: f64) -> Self {
        self.add_f64(b)
    }
}

impl Mul<f64> for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, b: f64) -> Self {
        self.mul_f64(b)
    }
}

impl Real for DoubleDouble {
    const MODE: PrecisionMode = PrecisionMode::Dd;
    const EPSILON: f64 = 4.930_380_657_631_324e-32; // 2^-104
    const DIGITS: usize = 34;
    const NEWTON_STEPS: usize = 1;
    const MODE_COMPONENTS: usize = 2;

    #[inline]
    fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self.hi
    }
    fn components(self) -> Vec<f64> {
        vec![self.hi, self.lo]
    }
    fn from_components(c: &[f64]) -> Self {
        let mut acc = DoubleDouble::from_f64(0.0);
        for &x in c.iter().rev() {
            acc = acc.add_f64(x);
        }
        acc
    }
    fn mul_pow2(self, k: i32) -> Self {
        DoubleDouble {
            hi: funcs::ldexp(self.hi, k),
            lo: funcs::ldexp(self.lo, k),
        }
    }
    fn pi() -> Self {
        DoubleDouble::new(std::f64::consts::PI, 1.2246467991473532e-16)
    }
    fn ln2() -> Self {
        DoubleDouble::new(std::f64::consts::LN_2, 2.3190468138462996e-17)
    }
    #[inline]
    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 {
                DoubleDouble::from_f64(0.0)
            } else {
                DoubleDouble::from_f64(f64::NAN)
            };
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let (p, e) = two_prod(ax, ax);
        let diff = (self - DoubleDouble::new(p, e)).hi;
        DoubleDouble::from_f64(ax).add_f64(diff * x * 0.5)
    }
}
