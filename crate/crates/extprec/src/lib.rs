//! Extended-precision scalar arithmetic.
//!
//! Three representations share the [`Real`] interface: plain `f64`, the
//! double-double [`DoubleDouble`] (about 31 significant digits) and the
//! quad-double [`QuadDouble`] (about 62 digits). Numerical code is written
//! generically over `T: Real` and the precision is chosen at run time by
//! dispatching on [`PrecisionMode`].

mod complex;
mod dd;
mod decimal;
mod eft;
mod funcs;
mod qd;

use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

pub use complex::Complex;
pub use dd::DoubleDouble;
pub use qd::QuadDouble;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtPrecError {
    #[error("{func}({arg}) is outside the domain of the function")]
    Domain { func: &'static str, arg: String },
    #[error("cannot parse {0:?} as a real number")]
    Parse(String),
}

/// Working precision selected at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionMode {
    /// IEEE binary64, about 16 digits.
    Std,
    /// Double-double, about 31 digits.
    Dd,
    /// Quad-double, about 62 digits.
    Qd,
}

impl PrecisionMode {
    pub fn epsilon(self) -> f64 {
        match self {
            PrecisionMode::Std => f64::EPSILON,
            PrecisionMode::Dd => DoubleDouble::EPSILON,
            PrecisionMode::Qd => QuadDouble::EPSILON,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PrecisionMode::Std => "std",
            PrecisionMode::Dd => "dd",
            PrecisionMode::Qd => "qd",
        }
    }

    /// The next finer mode, if any.
    pub fn finer(self) -> Option<PrecisionMode> {
        match self {
            PrecisionMode::Std => Some(PrecisionMode::Dd),
            PrecisionMode::Dd => Some(PrecisionMode::Qd),
            PrecisionMode::Qd => None,
        }
    }
}

impl FromStr for PrecisionMode {
    type Err = ExtPrecError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "std" | "f64" | "standard" => Ok(PrecisionMode::Std),
            "dd" | "double-double" | "double-pair" => Ok(PrecisionMode::Dd),
            "qd" | "quad-double" | "quad-pair" => Ok(PrecisionMode::Qd),
            _ => Err(ExtPrecError::Parse(s.to_string())),
        }
    }
}

impl Display for PrecisionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Elementary functions exposed through [`elementary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementary {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
    Arccos,
    Arccosh,
}

impl Elementary {
    pub const ALL: [Elementary; 9] = [
        Elementary::Exp,
        Elementary::Log,
        Elementary::Sin,
        Elementary::Cos,
        Elementary::Sinh,
        Elementary::Cosh,
        Elementary::Sqrt,
        Elementary::Arccos,
        Elementary::Arccosh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Elementary::Exp => "exp",
            Elementary::Log => "log",
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Sinh => "sinh",
            Elementary::Cosh => "cosh",
            Elementary::Sqrt => "sqrt",
            Elementary::Arccos => "arccos",
            Elementary::Arccosh => "arccosh",
        }
    }
}

/// Evaluates `func(x)` with an explicit domain check.
pub fn elementary<T: Real>(func: Elementary, x: T) -> Result<T, ExtPrecError> {
    let bad = || ExtPrecError::Domain {
        func: func.name(),
        arg: x.to_string(),
    };
    if x.is_nan() {
        return Err(bad());
    }
    let one = T::one();
    Ok(match func {
        Elementary::Exp => x.exp(),
        Elementary::Log => {
            if x <= T::zero() {
                return Err(bad());
            }
            x.ln()
        }
        Elementary::Sin => x.sin(),
        Elementary::Cos => x.cos(),
        Elementary::Sinh => x.sinh(),
        Elementary::Cosh => x.cosh(),
        Elementary::Sqrt => {
            if x < T::zero() {
                return Err(bad());
            }
            x.sqrt()
        }
        Elementary::Arccos => {
            if x > one || x < -one {
                return Err(bad());
            }
            x.acos()
        }
        Elementary::Arccosh => {
            if x < one {
                return Err(bad());
            }
            x.acosh()
        }
    })
}

/// Real scalar with a fixed working precision.
///
/// Comparisons are total on non-NaN values. NaN is never produced silently by
/// the arithmetic on finite, in-domain inputs; callers check [`Real::is_nan`]
/// or use [`elementary`] to get explicit domain errors.
pub trait Real:
    Copy
    + Debug
    + Display
    + Default
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    const MODE: PrecisionMode;
    /// Unit of relative accuracy ("ulp") used by the error contracts.
    const EPSILON: f64;
    /// Significant decimal digits emitted when formatting.
    const DIGITS: usize;
    /// Newton refinements needed to lift a 53-bit seed to full precision.
    const NEWTON_STEPS: usize;

    fn from_f64(x: f64) -> Self;
    /// Leading component.
    fn to_f64(self) -> f64;
    /// Unevaluated-sum components, largest first.
    fn components(self) -> Vec<f64>;
    /// Builds a value from components that need not be normalized.
    fn from_components(c: &[f64]) -> Self;
    /// Exact multiplication by `2^k`.
    fn mul_pow2(self, k: i32) -> Self;
    fn pi() -> Self;
    fn ln2() -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn from_i64(n: i64) -> Self {
        let hi = n as f64;
        let lo = (n - hi as i64) as f64;
        Self::from_components(&[hi, lo])
    }
    fn is_nan(self) -> bool {
        self.to_f64().is_nan()
    }
    fn is_finite(self) -> bool {
        self.to_f64().is_finite()
    }
    fn abs(self) -> Self {
        if self.to_f64() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> f64 {
        self.to_f64().signum()
    }
    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
    fn sqr(self) -> Self {
        self * self
    }
    fn powi(self, n: i32) -> Self {
        funcs::powi(self, n)
    }
    /// Nearest integer to the leading component, as `f64`.
    fn round_f64(self) -> f64 {
        let c = self.components();
        let r = c[0].round();
        if (c[0] - r).abs() == 0.5 {
            // Ties are decided by the trailing components.
            let tail: f64 = c[1..].iter().sum();
            if tail > 0.0 && r < c[0] {
                return r + 1.0;
            }
            if tail < 0.0 && r > c[0] {
                return r - 1.0;
            }
        }
        r
    }

    fn sqrt(self) -> Self;
    fn exp(self) -> Self {
        funcs::exp(self)
    }
    fn exp_m1(self) -> Self {
        funcs::expm1(self)
    }
    fn ln(self) -> Self {
        funcs::ln(self)
    }
    fn ln_1p(self) -> Self {
        funcs::ln1p(self)
    }
    fn sin_cos(self) -> (Self, Self) {
        funcs::sin_cos(self)
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn sinh(self) -> Self {
        funcs::sinh(self)
    }
    fn cosh(self) -> Self {
        funcs::cosh(self)
    }
    fn atan2(self, x: Self) -> Self {
        funcs::atan2(self, x)
    }
    fn acos(self) -> Self {
        funcs::acos(self)
    }
    fn acosh(self) -> Self {
        funcs::acosh(self)
    }

    /// Parses a decimal literal, rounding once to the working precision.
    fn parse_real(s: &str) -> Result<Self, ExtPrecError> {
        decimal::parse(s).map(|c| Self::from_components(&c))
    }

    /// Exact rational value of a finite number.
    fn to_rational(self) -> BigRational {
        decimal::components_to_rational(&self.components())
    }
    /// Nearest representable value to an exact rational.
    fn from_rational(r: &BigRational) -> Self {
        let n = Self::MODE_COMPONENTS;
        Self::from_components(&decimal::rational_to_components(r, n))
    }
    const MODE_COMPONENTS: usize;
}

impl Real for f64 {
    const MODE: PrecisionMode = PrecisionMode::Std;
    const EPSILON: f64 = f64::EPSILON;
    const DIGITS: usize = 17;
    const NEWTON_STEPS: usize = 0;
    const MODE_COMPONENTS: usize = 1;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn components(self) -> Vec<f64> {
        vec![self]
    }
    fn from_components(c: &[f64]) -> Self {
        c.iter().rev().sum()
    }
    fn mul_pow2(self, k: i32) -> Self {
        funcs::ldexp(self, k)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn ln2() -> Self {
        std::f64::consts::LN_2
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn exp_m1(self) -> Self {
        f64::exp_m1(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn acos(self) -> Self {
        f64::acos(self)
    }
    fn acosh(self) -> Self {
        f64::acosh(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn parse_real(s: &str) -> Result<Self, ExtPrecError> {
        s.trim()
            .parse()
            .map_err(|_| ExtPrecError::Parse(s.to_string()))
    }
}

/// Relative distance between two values in units of `T::EPSILON`.
pub fn ulps_apart<T: Real>(a: T, b: T) -> f64 {
    if a == b {
        return 0.0;
    }
    let scale = a.abs().max(b.abs()).to_f64();
    ((a - b).abs().to_f64() / scale) / T::EPSILON
}
