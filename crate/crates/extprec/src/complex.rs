use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::Real;

/// Complex number over a [`Real`] scalar.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Complex<T> {
    pub re: T,
    pub im: T,
}

impl<T: Real> Complex<T> {
    pub fn new(re: T, im: T) -> Self {
        Complex { re, im }
    }

    pub fn from_real(re: T) -> Self {
        Complex { re, im: T::zero() }
    }

    pub fn zero() -> Self {
        Self::from_real(T::zero())
    }

    pub fn one() -> Self {
        Self::from_real(T::one())
    }

    pub fn i() -> Self {
        Complex {
            re: T::zero(),
            im: T::one(),
        }
    }

    pub fn conj(self) -> Self {
        Complex {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn norm_sqr(self) -> T {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> T {
        let (a, b) = (self.re.abs(), self.im.abs());
        let (big, small) = if a > b { (a, b) } else { (b, a) };
        if big == T::zero() {
            return big;
        }
        let r = small / big;
        big * (r * r + 1.0).sqrt()
    }

    pub fn scale(self, s: T) -> Self {
        Complex {
            re: self.re * s,
            im: self.im * s,
        }
    }

    pub fn recip(self) -> Self {
        Complex::one() / self
    }

    pub fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut m = n.unsigned_abs();
        let mut acc = Complex::one();
        while m > 0 {
            if m & 1 == 1 {
                acc = acc * base;
            }
            m >>= 1;
            if m > 0 {
                base = base * base;
            }
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    pub fn exp(self) -> Self {
        let r = self.re.exp();
        let (s, c) = self.im.sin_cos();
        Complex {
            re: r * c,
            im: r * s,
        }
    }

    pub fn cosh(self) -> Self {
        let (s, c) = self.im.sin_cos();
        Complex {
            re: self.re.cosh() * c,
            im: self.re.sinh() * s,
        }
    }

    pub fn sinh(self) -> Self {
        let (s, c) = self.im.sin_cos();
        Complex {
            re: self.re.sinh() * c,
            im: self.re.cosh() * s,
        }
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<T: Real> Add for Complex<T> {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        Complex {
            re: self.re + b.re,
            im: self.im + b.im,
        }
    }
}

impl<T: Real> Sub for Complex<T> {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        Complex {
            re: self.re - b.re,
            im: self.im - b.im,
        }
    }
}

impl<T: Real> Neg for Complex<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Complex {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl<T: Real> Mul for Complex<T> {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        Complex {
            re: self.re * b.re - self.im * b.im,
            im: self.re * b.im + self.im * b.re,
        }
    }
}

impl<T: Real> Div for Complex<T> {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        // Smith's algorithm
        if b.re.abs() >= b.im.abs() {
            let r = b.im / b.re;
            let d = b.re + b.im * r;
            Complex {
                re: (self.re + self.im * r) / d,
                im: (self.im - self.re * r) / d,
            }
        } else {
            let r = b.re / b.im;
            let d = b.re * r + b.im;
            Complex {
                re: (self.re * r + self.im) / d,
                im: (self.im * r - self.re) / d,
            }
        }
    }
}

impl<T: Real> Mul<T> for Complex<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T: Real> Add<T> for Complex<T> {
    type Output = Self;
    fn add(self, s: T) -> Self {
        Complex {
            re: self.re + s,
            im: self.im,
        }
    }
}

impl<T: Real> AddAssign for Complex<T> {
    fn add_assign(&mut self, b: Self) {
        *self = *self + b;
    }
}

impl<T: Real> SubAssign for Complex<T> {
    fn sub_assign(&mut self, b: Self) {
        *self = *self - b;
    }
}

impl<T: Real> MulAssign for Complex<T> {
    fn mul_assign(&mut self, b: Self) {
        *self = *self * b;
    }
}
