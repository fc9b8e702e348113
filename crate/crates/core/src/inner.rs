//! The inner equation `Φ⁗ + Φ″ = 2Φ³`: its formal odd series
//! `Φ̂(z) = Σ a_n z^{−(2n+1)}` in exact rationals, optimal-truncation boundary
//! data, and a direct computation of the Stokes constant on the line
//! `Im z = −Y`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use splitlab_extprec::{Complex, Real};

use crate::error::{CoreError, Result};
use crate::integrator::{flow_time, StepPolicy, VectorField};
use crate::splitting::{ThetaEstimate, ThetaMethod};

/// Smallest `|z|` accepted by [`inner_boundary_state`].
pub const MIN_BOUNDARY_MODULUS: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSeries {
    /// `a[n]` multiplies `z^{−(2n+1)}`.
    pub a: Vec<BigRational>,
}

impl InnerSeries {
    pub fn order(&self) -> usize {
        self.a.len() - 1
    }
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// A rational `num / Π primes[i]^exp[i]`. Every denominator met in the
/// recurrence is built from the divisors `(2m+3)(2m+4) − 6`, so a fixed
/// prime list covers them and sums need no gcd.
#[derive(Debug, Clone)]
struct Scaled {
    num: BigInt,
    exp: Vec<u32>,
}

struct PrimeBasis {
    primes: Vec<u64>,
}

impl PrimeBasis {
    fn new(divisors: &[u64]) -> Self {
        let mut primes = Vec::new();
        for &d in divisors {
            let mut x = d;
            let mut p = 2;
            while p * p <= x {
                while x % p == 0 {
                    primes.push(p);
                    x /= p;
                }
                p += 1;
            }
            if x > 1 {
                primes.push(x);
            }
        }
        primes.sort_unstable();
        primes.dedup();
        PrimeBasis { primes }
    }

    fn exponents(&self, mut x: u64) -> Vec<u32> {
        let mut e = vec![0; self.primes.len()];
        for (i, &p) in self.primes.iter().enumerate() {
            while x % p == 0 {
                e[i] += 1;
                x /= p;
            }
        }
        debug_assert_eq!(x, 1);
        e
    }

    fn integer(&self, n: BigInt) -> Scaled {
        Scaled {
            num: n,
            exp: vec![0; self.primes.len()],
        }
    }

    /// `Π primes^(to − from)`, with `to ≥ from` elementwise.
    fn lift(&self, from: &[u32], to: &[u32]) -> BigInt {
        let mut acc = BigInt::one();
        let mut small: u64 = 1;
        for (i, &p) in self.primes.iter().enumerate() {
            for _ in from[i]..to[i] {
                match small.checked_mul(p) {
                    Some(v) => small = v,
                    None => {
                        acc *= small;
                        small = p;
                    }
                }
            }
        }
        acc * small
    }

    /// `Σ x_i y_i` over a common denominator, then reduced.
    fn dot<'a>(&self, pairs: impl Iterator<Item = (&'a Scaled, &'a Scaled)> + Clone) -> Scaled {
        let mut common = vec![0u32; self.primes.len()];
        for (x, y) in pairs.clone() {
            for (c, (ex, ey)) in common.iter_mut().zip(x.exp.iter().zip(&y.exp)) {
                *c = (*c).max(ex + ey);
            }
        }
        let mut num = BigInt::zero();
        let mut e = vec![0u32; self.primes.len()];
        for (x, y) in pairs {
            for (ei, (ex, ey)) in e.iter_mut().zip(x.exp.iter().zip(&y.exp)) {
                *ei = ex + ey;
            }
            num += &x.num * &y.num * self.lift(&e, &common);
        }
        self.reduce(Scaled { num, exp: common })
    }

    fn reduce(&self, mut s: Scaled) -> Scaled {
        if s.num.is_zero() {
            s.exp.iter_mut().for_each(|e| *e = 0);
            return s;
        }
        for (i, &p) in self.primes.iter().enumerate() {
            while s.exp[i] > 0 && (&s.num % p).is_zero() {
                s.num /= p;
                s.exp[i] -= 1;
            }
        }
        s
    }

    fn to_rational(&self, s: &Scaled) -> BigRational {
        let zero = vec![0; self.primes.len()];
        BigRational::new(s.num.clone(), self.lift(&zero, &s.exp))
    }
}

/// Coefficients `a_0..=a_n` from
/// `[(2m+3)(2m+4) − 6] a_{m+1} = −(2m+1)(2m+2)(2m+3)(2m+4) a_m + 6 P_{m+1} + 2 C_{m+1}`,
/// where `P` and `C` are the quadratic and cubic convolutions over positive
/// indices.
pub fn inner_series(n: usize) -> Result<InnerSeries> {
    if n < 1 {
        return Err(CoreError::Domain {
            what: "N",
            value: n as f64,
            range: "[1, inf)",
        });
    }
    let den = |m: usize| ((2 * m + 3) * (2 * m + 4) - 6) as u64;
    let basis = PrimeBasis::new(&(0..n).map(den).collect::<Vec<_>>());
    let mut a: Vec<Scaled> = vec![basis.integer(BigInt::one())];
    // quad[m] = Σ_{k1+k2=m, k_i ≥ 1} a_k1 a_k2
    let mut quad: Vec<Scaled> = vec![basis.integer(BigInt::zero())];
    let coef = |c: i64| basis.integer(BigInt::from(c));
    for m in 0..n {
        let next = m + 1;
        let q = basis.dot((1..next).map(|k| (&a[k], &a[next - k])));
        quad.push(q);
        let cubic = basis.dot((1..next).map(|k| (&a[k], &quad[next - k])));
        let mm = m as i64;
        let lin = coef(-(2 * mm + 1) * (2 * mm + 2) * (2 * mm + 3) * (2 * mm + 4));
        let (six, two) = (coef(6), coef(2));
        let terms = [(&lin, &a[m]), (&six, &quad[next]), (&two, &cubic)];
        let mut num = basis.dot(terms.into_iter());
        for (e, d) in num.exp.iter_mut().zip(basis.exponents(den(m))) {
            *e += d;
        }
        a.push(basis.reduce(num));
    }
    Ok(InnerSeries {
        a: a.iter().map(|s| basis.to_rational(s)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiagnostics {
    pub n: usize,
    /// `ρ_n = |a_{n+1}| / ((2n+1)(2n+2)|a_n|)` for `n < N`.
    pub rho: Vec<f64>,
    /// `r_n = |a_n| / (2n)!`.
    pub r: Vec<f64>,
}

impl SeriesDiagnostics {
    /// First `n` from which every later `ρ` is within `tol` of 1.
    pub fn rho_settles(&self, tol: f64) -> Option<usize> {
        let last_bad = self.rho.iter().rposition(|r| (r - 1.0).abs() > tol);
        match last_bad {
            None => Some(0),
            Some(i) if i + 1 < self.rho.len() => Some(i + 1),
            Some(_) => None,
        }
    }
}

/// Checks sign alternation, `|a_n| ≥ (2n)!` and
/// `|a_{n+1}| ≥ (2n+1)(2n+2)|a_n|` exactly, and reports growth ratios.
pub fn series_diagnostics(s: &InnerSeries) -> Result<SeriesDiagnostics> {
    let n = s.order();
    if n < 10 {
        return Err(CoreError::Domain {
            what: "N",
            value: n as f64,
            range: "[10, inf)",
        });
    }
    let mut fact = BigRational::one(); // (2k)!
    let mut r = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            fact *= rat(((2 * k - 1) * (2 * k)) as i64);
        }
        let ak = &s.a[k];
        let positive = if k % 2 == 0 {
            ak.is_positive()
        } else {
            ak.is_negative()
        };
        if !positive {
            return Err(CoreError::Invariant(format!(
                "sign alternation a_n(-1)^n > 0 fails at n = {k}"
            )));
        }
        let mag = ak.abs();
        if mag < fact {
            return Err(CoreError::Invariant(format!(
                "factorial bound |a_n| >= (2n)! fails at n = {k}"
            )));
        }
        r.push(f64::from_rational(&(mag / &fact)));
    }
    let mut rho = Vec::with_capacity(n);
    for k in 0..n {
        let lo = rat(((2 * k + 1) * (2 * k + 2)) as i64) * s.a[k].abs();
        let hi = s.a[k + 1].abs();
        if hi < lo {
            return Err(CoreError::Invariant(format!(
                "ratio bound |a_(n+1)| >= (2n+1)(2n+2)|a_n| fails at n = {k}"
            )));
        }
        rho.push(f64::from_rational(&(hi / lo)));
    }
    Ok(SeriesDiagnostics { n, rho, r })
}

/// `Φ` and its first three derivatives at `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerState<T> {
    pub z: Complex<T>,
    pub phi: Complex<T>,
    pub phi1: Complex<T>,
    pub phi2: Complex<T>,
    pub phi3: Complex<T>,
    /// Magnitude of the least term of the series at `z`, zero for states
    /// not built from the series.
    pub accuracy: f64,
}

impl<T: Real> InnerState<T> {
    pub fn is_finite(&self) -> bool {
        [self.phi, self.phi1, self.phi2, self.phi3]
            .iter()
            .all(|c| c.is_finite())
    }

    fn to_array(self) -> [T; 8] {
        [
            self.phi.re,
            self.phi.im,
            self.phi1.re,
            self.phi1.im,
            self.phi2.re,
            self.phi2.im,
            self.phi3.re,
            self.phi3.im,
        ]
    }

    fn from_array(z: Complex<T>, y: [T; 8]) -> Self {
        InnerState {
            z,
            phi: Complex::new(y[0], y[1]),
            phi1: Complex::new(y[2], y[3]),
            phi2: Complex::new(y[4], y[5]),
            phi3: Complex::new(y[6], y[7]),
            accuracy: 0.0,
        }
    }
}

/// Series value at `z`, truncated before its least term.
pub fn inner_boundary_state<T: Real>(s: &InnerSeries, z: Complex<T>) -> Result<InnerState<T>> {
    let z_abs = z.abs().to_f64();
    if !(z_abs >= MIN_BOUNDARY_MODULUS) {
        return Err(CoreError::InnerTooClose {
            z_abs,
            required: MIN_BOUNDARY_MODULUS,
        });
    }
    // Least term |a_n| |z|^{-(2n+1)}, located in logarithms.
    let ln_z = z_abs.ln();
    let ln_term = |n: usize| log_abs(&s.a[n]) - (2 * n + 1) as f64 * ln_z;
    let mut n_star = 0;
    for n in 1..=s.order() {
        if ln_term(n) < ln_term(n_star) {
            n_star = n;
        }
    }
    let accuracy = ln_term(n_star).exp();

    let w = z.recip();
    let w2 = w * w;
    let mut out = [Complex::<T>::zero(); 4];
    // Horner in w² for each derivative order; term n of derivative j is
    // a_n (−1)^j (2n+1)…(2n+j) w^{2n+1+j}.
    for (j, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex::<T>::zero();
        for n in (0..n_star).rev() {
            let mut c = T::from_rational(&s.a[n]);
            for i in 1..=j {
                c = c * ((2 * n + i) as f64);
            }
            if j % 2 == 1 {
                c = -c;
            }
            acc = acc * w2 + Complex::from_real(c);
        }
        *slot = acc * w.powi(1 + j as i32);
    }
    Ok(InnerState {
        z,
        phi: out[0],
        phi1: out[1],
        phi2: out[2],
        phi3: out[3],
        accuracy,
    })
}

fn log_abs(q: &BigRational) -> f64 {
    let bits = |x: &BigInt| x.bits() as i64;
    let (n, d) = (q.numer().abs(), q.denom().clone());
    let shift = (bits(&n) - 60).max(0) as u64;
    let dshift = (bits(&d) - 60).max(0) as u64;
    let nf = f64::from_rational(&BigRational::from_integer(&n >> shift));
    let df = f64::from_rational(&BigRational::from_integer(&d >> dshift));
    nf.ln() - df.ln() + (shift as f64 - dshift as f64) * std::f64::consts::LN_2
}

/// `Ψ = Φ″ − 2Φ³`.
pub fn derived_psi<T: Real>(st: &InnerState<T>) -> Complex<T> {
    let p = st.phi;
    st.phi2 - p * p * p * T::from_f64(2.0)
}

/// The inner equation along a horizontal line, as a real system in
/// `(Re Φ, Im Φ, …, Re Φ‴, Im Φ‴)`.
#[derive(Debug, Clone, Copy)]
pub struct InnerField;

impl<T: Real> VectorField<T, 8> for InnerField {
    fn eval(&self, y: &[T; 8]) -> [T; 8] {
        let p = Complex::new(y[0], y[1]);
        let p2 = Complex::new(y[4], y[5]);
        let p4 = p * p * p * T::from_f64(2.0) - p2;
        [y[2], y[3], y[4], y[5], y[6], y[7], p4.re, p4.im]
    }

    fn component_name(&self, i: usize) -> &'static str {
        const NAMES: [&str; 8] = [
            "Re phi", "Im phi", "Re phi'", "Im phi'", "Re phi''", "Im phi''", "Re phi'''",
            "Im phi'''",
        ];
        NAMES.get(i).copied().unwrap_or("phi")
    }
}

/// One evaluation of the stable/unstable difference at `z = −iY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesSample {
    pub y: f64,
    pub l: f64,
    /// `Φ^u − Φ^s` at `−iY`, as `(re, im)`.
    pub delta_phi: (f64, f64),
    pub delta_psi: (f64, f64),
    /// `−e^Y Re ΔΦ`.
    pub theta_phi: f64,
    /// `e^Y Re ΔΨ`.
    pub theta_psi: f64,
    /// Larger least-term magnitude of the two boundary states.
    pub boundary_accuracy: f64,
    pub error_estimate: f64,
}

impl StokesSample {
    /// Largest of `|Im Δ| / |Δ|` over both channels.
    pub fn imaginary_ratio(&self) -> f64 {
        let r = |d: (f64, f64)| d.1.abs() / d.0.hypot(d.1);
        r(self.delta_phi).max(r(self.delta_psi))
    }
}

/// Series order used for boundary data; enough for `|z|` up to about 150.
pub const BOUNDARY_SERIES_ORDER: usize = 80;

/// Integrates both branches from `∓L − iY` to `−iY` and forms the
/// differences.
pub fn stokes_sample<T: Real>(
    s: &InnerSeries,
    y: f64,
    l: f64,
    policy: &StepPolicy<T>,
) -> Result<StokesSample> {
    if !(y >= 20.0) {
        return Err(CoreError::Domain {
            what: "Y",
            value: y,
            range: "[20, inf)",
        });
    }
    if !(l >= 2.0 * y) {
        return Err(CoreError::Domain {
            what: "L",
            value: l,
            range: "[2Y, inf)",
        });
    }
    let yt = T::from_f64(y);
    let lt = T::from_f64(l);
    let limit = 1e-3 * (-y).exp();
    let run = |sign: f64| -> Result<(InnerState<T>, f64, f64)> {
        let z0 = Complex::new(lt * sign, -yt);
        let b = inner_boundary_state(s, z0)?;
        if !(b.accuracy <= limit) {
            return Err(CoreError::BoundaryAccuracy {
                accuracy: b.accuracy,
                limit,
            });
        }
        let fr = flow_time(&InnerField, &b.to_array(), lt * (-sign), policy)?;
        let end = InnerState::from_array(Complex::new(T::zero(), -yt), fr.state);
        Ok((end, b.accuracy, fr.error_estimate))
    };
    let (unstable, stable) = rayon::join(|| run(-1.0), || run(1.0));
    let (su, acc_u, err_u) = unstable?;
    let (ss, acc_s, err_s) = stable?;
    let dphi = su.phi - ss.phi;
    let dpsi = derived_psi(&su) - derived_psi(&ss);
    let ey = T::from_f64(y).exp();
    Ok(StokesSample {
        y,
        l,
        delta_phi: (dphi.re.to_f64(), dphi.im.to_f64()),
        delta_psi: (dpsi.re.to_f64(), dpsi.im.to_f64()),
        theta_phi: -(dphi.re * ey).to_f64(),
        theta_psi: (dpsi.re * ey).to_f64(),
        boundary_accuracy: acc_u.max(acc_s),
        error_estimate: err_u + err_s,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesResult {
    pub estimate: ThetaEstimate,
    /// Channel values extrapolated to `1/Y → 0`.
    pub theta_phi: f64,
    pub theta_psi: f64,
    /// Difference between the two successive Richardson values.
    pub extrapolation_residual: f64,
    /// Channels agree within 25%.
    pub reliable: bool,
    pub samples: Vec<StokesSample>,
}

/// Linear extrapolation in `1/Y` through `(y0, t0)`, `(y1, t1)`.
fn richardson(y0: f64, t0: f64, y1: f64, t1: f64) -> f64 {
    (y1 * t1 - y0 * t0) / (y1 - y0)
}

/// Samples at `Y, Y+5, Y+10` with `L` scaled in proportion to `Y`;
/// `Θ` is the Richardson value from the last two samples, averaged over
/// the `Φ` and `Ψ` channels.
pub fn stokes_direct<T: Real>(y: f64, l: f64, policy: &StepPolicy<T>) -> Result<StokesResult> {
    let series = inner_series(BOUNDARY_SERIES_ORDER)?;
    let ys = [y, y + 5.0, y + 10.0];
    let samples = ys
        .iter()
        .map(|&yk| stokes_sample(&series, yk, l * yk / y, policy))
        .collect::<Result<Vec<_>>>()?;
    let chan = |f: fn(&StokesSample) -> f64| {
        let early = richardson(ys[0], f(&samples[0]), ys[1], f(&samples[1]));
        let late = richardson(ys[1], f(&samples[1]), ys[2], f(&samples[2]));
        (late, (late - early).abs())
    };
    let (theta_phi, res_phi) = chan(|s| s.theta_phi);
    let (theta_psi, res_psi) = chan(|s| s.theta_psi);
    let theta = 0.5 * (theta_phi + theta_psi);
    let extrapolation_residual = res_phi.max(res_psi);
    let spread = (theta_phi - theta_psi).abs();
    Ok(StokesResult {
        estimate: ThetaEstimate {
            theta,
            method: ThetaMethod::InnerDirect,
            uncertainty: spread + extrapolation_residual,
        },
        theta_phi,
        theta_psi,
        extrapolation_residual,
        reliable: spread <= 0.25 * theta.abs(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_coefficients() {
        let s = inner_series(3).unwrap();
        assert_eq!(s.a[0], rat(1));
        assert_eq!(s.a[1], rat(-4));
        assert_eq!(s.a[2], rat(64));
    }

    #[test]
    fn log_abs_matches_f64() {
        let q = BigRational::new(BigInt::from(-12345), BigInt::from(7));
        assert!((log_abs(&q) - (12345.0f64 / 7.0).ln()).abs() < 1e-14);
    }
}
