//! The traveling-wave equation
//!
//! ```text
//! ε² u'''' + (1 − ε²) u'' − u + u² + 2γ u³ = 0
//! ```
//!
//! written as the first-order system in (u, u', v, v') with
//! `v = u'' − u + f(u)` and `f(u) = u² + 2γu³`, together with its planar
//! limit, first integral and the exact soliton of the limit.

use splitlab_extprec::{Complex, PrecisionMode, Real};

use crate::error::{CoreError, Result};
use crate::integrator::VectorField;

/// Physical configuration and tolerance policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params<T> {
    pub gamma: T,
    pub eps: T,
    pub energy_tol: f64,
}

impl<T: Real> Params<T> {
    /// Parameters for a splitting computation; requires γ ∈ (−1/9, 0) and ε > 0.
    pub fn new(gamma: f64, eps: f64) -> Result<Self> {
        check_gamma_splitting(gamma)?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(CoreError::Domain {
                what: "eps",
                value: eps,
                range: "(0, inf)",
            });
        }
        let mut p = Params {
            gamma: T::from_f64(gamma),
            eps: T::from_f64(eps),
            energy_tol: 0.0,
        };
        p.energy_tol = default_energy_tol(T::MODE, gamma, eps);
        Ok(p)
    }

    pub fn mode(&self) -> PrecisionMode {
        T::MODE
    }

    pub fn field(&self) -> ModelField<T> {
        ModelField::new(self.gamma, self.eps)
    }
}

pub fn check_gamma_splitting(gamma: f64) -> Result<()> {
    if gamma > -1.0 / 9.0 && gamma < 0.0 {
        Ok(())
    } else {
        Err(CoreError::Domain {
            what: "gamma",
            value: gamma,
            range: "(-1/9, 0)",
        })
    }
}

/// Leading-order size of the splitting, `2 e^{−π/ε} / (√|γ| ε³)`.
pub fn splitting_envelope(gamma: f64, eps: f64) -> f64 {
    2.0 * (-std::f64::consts::PI / eps).exp() / ((-gamma).sqrt() * eps.powi(3))
}

/// 1e−3 of the splitting envelope, capped at 1e−18 in double-double mode.
pub fn default_energy_tol(mode: PrecisionMode, gamma: f64, eps: f64) -> f64 {
    let tol = 1e-3 * splitting_envelope(gamma, eps);
    match mode {
        PrecisionMode::Dd => tol.min(1e-18),
        _ => tol,
    }
}

/// A point of the four-dimensional phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State<T> {
    pub u: T,
    pub up: T,
    pub v: T,
    pub vp: T,
}

impl<T: Real> State<T> {
    pub fn new(u: T, up: T, v: T, vp: T) -> Self {
        State { u, up, v, vp }
    }

    pub fn origin() -> Self {
        State::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn to_array(self) -> [T; 4] {
        [self.u, self.up, self.v, self.vp]
    }

    pub fn from_array(a: [T; 4]) -> Self {
        State::new(a[0], a[1], a[2], a[3])
    }

    /// Euclidean norm.
    pub fn norm(self) -> T {
        (self.u * self.u + self.up * self.up + self.v * self.v + self.vp * self.vp).sqrt()
    }

    pub fn to_f64(self) -> [f64; 4] {
        self.to_array().map(|x| x.to_f64())
    }
}

pub const COMPONENT_NAMES: [&str; 4] = ["u", "u'", "v", "v'"];

#[inline]
fn f<T: Real>(gamma: T, u: T) -> T {
    u * u * (T::one() + gamma * u * 2.0)
}

#[inline]
fn fp<T: Real>(gamma: T, u: T) -> T {
    u * 2.0 + gamma * u * u * 6.0
}

#[inline]
fn fpp<T: Real>(gamma: T, u: T) -> T {
    gamma * u * 12.0 + 2.0
}

/// The first-order system as an integrable vector field.
#[derive(Debug, Clone, Copy)]
pub struct ModelField<T> {
    pub gamma: T,
    pub eps: T,
    inv_eps2: T,
}

impl<T: Real> ModelField<T> {
    pub fn new(gamma: T, eps: T) -> Self {
        ModelField {
            gamma,
            eps,
            inv_eps2: T::one() / (eps * eps),
        }
    }
}

impl<T: Real> VectorField<T, 4> for ModelField<T> {
    #[inline]
    fn eval(&self, y: &[T; 4]) -> [T; 4] {
        let [u, up, v, vp] = *y;
        let g = self.gamma;
        let upp = u + v - f(g, u);
        let vpp = fp(g, u) * upp + fpp(g, u) * up * up - v * self.inv_eps2;
        [up, upp, vp, vpp]
    }

    fn component_name(&self, i: usize) -> &'static str {
        COMPONENT_NAMES.get(i).copied().unwrap_or("state")
    }
}

/// Derivative of the state, with overflow reported by component.
pub fn vector_field<T: Real>(p: &Params<T>, s: &State<T>) -> Result<State<T>> {
    check_finite(s, 0.0)?;
    let d = State::from_array(p.field().eval(&s.to_array()));
    check_finite(&d, 0.0)?;
    Ok(d)
}

pub(crate) fn check_finite<T: Real>(s: &State<T>, t: f64) -> Result<()> {
    for (i, x) in s.to_array().iter().enumerate() {
        if !x.is_finite() {
            return Err(CoreError::BlowUp {
                component: COMPONENT_NAMES[i],
                value: x.to_f64(),
                t,
            });
        }
    }
    Ok(())
}

/// The conserved quantity
/// `G = (1−ε²)u'²/2 − u²/2 + F(u) + ε²[u'(v' + u' − f'(u)u') − (u + v − f(u))²/2]`
/// with `F(u) = u³/3 + γu⁴/2`.
pub fn first_integral<T: Real>(p: &Params<T>, s: &State<T>) -> T {
    first_integral_raw(p.gamma, p.eps, s)
}

pub fn first_integral_raw<T: Real>(gamma: T, eps: T, s: &State<T>) -> T {
    let State { u, up, v, vp } = *s;
    let e2 = eps * eps;
    let big_f = u * u * u / 3.0 + gamma * u * u * u * u * 0.5;
    let w = u + v - f(gamma, u);
    let planar = (T::one() - e2) * up * up * 0.5 - u * u * 0.5 + big_f;
    planar + e2 * (up * (vp + up - fp(gamma, u) * up) - w * w * 0.5)
}

/// Gradient of [`first_integral`] with respect to (u, u', v, v').
pub fn first_integral_gradient<T: Real>(p: &Params<T>, s: &State<T>) -> [T; 4] {
    let State { u, up, v, vp } = *s;
    let g = p.gamma;
    let e2 = p.eps * p.eps;
    let w = u + v - f(g, u);
    let dw_du = T::one() - fp(g, u);
    let d_u = -u + u * u + g * u * u * u * 2.0
        + e2 * (-(up * up * fpp(g, u)) - w * dw_du);
    let d_up = (T::one() - e2) * up + e2 * (vp + up * 2.0 - fp(g, u) * up * 2.0);
    let d_v = -(e2 * w);
    let d_vp = e2 * up;
    [d_u, d_up, d_v, d_vp]
}

/// Value and two derivatives of the soliton `u₀(x) = 3/(β cosh x + 1)`, β = √(1+9γ).
pub fn soliton<T: Real>(gamma: T, x: T) -> Result<(T, T, T)> {
    let one_plus = gamma * 9.0 + 1.0;
    if !(one_plus > T::zero()) {
        return Err(CoreError::Domain {
            what: "gamma",
            value: gamma.to_f64(),
            range: "(-1/9, inf)",
        });
    }
    let beta = one_plus.sqrt();
    let (c, s) = (x.cosh(), x.sinh());
    let d = beta * c + 1.0;
    let u0 = T::from_f64(3.0) / d;
    let u0p = -(beta * s * 3.0) / (d * d);
    let u0pp = (beta * beta * s * s * 6.0) / (d * d * d) - (beta * c * 3.0) / (d * d);
    Ok((u0, u0p, u0pp))
}

/// Complex-singularity geometry of the soliton for γ ∈ (−1/9, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry<T> {
    pub beta: T,
    pub alpha: T,
    pub x_plus: Complex<T>,
    pub x_minus: Complex<T>,
    pub c_plus1: T,
    pub c_minus1: T,
    pub g_plus: T,
    pub g_minus: T,
    /// `cosh a = g₊`
    pub a: T,
    /// `cos b = g₋`
    pub b: T,
}

pub fn geometry<T: Real>(gamma: T) -> Result<Geometry<T>> {
    let gf = gamma.to_f64();
    check_gamma_splitting(gf)?;
    if gf < -1.0 / 9.0 + 1e-6 {
        return Err(CoreError::Domain {
            what: "gamma",
            value: gf,
            range: "(-1/9 + 1e-6, 0)",
        });
    }
    let beta = (gamma * 9.0 + 1.0).sqrt();
    let alpha = (T::one() / beta).acosh();
    let pi = T::pi();
    let root = (beta * beta * 8.0 + 1.0).sqrt();
    let g_plus = (root + 1.0) / (beta * 2.0);
    let g_minus = -(root - 1.0) / (beta * 2.0);
    let c = T::one() / (-gamma).sqrt();
    Ok(Geometry {
        beta,
        alpha,
        x_plus: Complex::new(alpha, pi),
        x_minus: Complex::new(-alpha, pi),
        c_plus1: -c,
        c_minus1: c,
        g_plus,
        g_minus,
        a: g_plus.acosh(),
        b: g_minus.acos(),
    })
}

/// Roots of `ε²λ⁴ + (1−ε²)λ² − 1`: λ² ∈ {1, −1/ε²}.
pub fn eigenvalues<T: Real>(eps: T) -> [Complex<T>; 4] {
    let w = T::one() / eps;
    [
        Complex::from_real(T::one()),
        Complex::from_real(-T::one()),
        Complex::new(T::zero(), w),
        Complex::new(T::zero(), -w),
    ]
}

pub fn characteristic_polynomial<T: Real>(eps: T, lambda: Complex<T>) -> Complex<T> {
    let e2 = eps * eps;
    let l2 = lambda * lambda;
    l2 * l2 * e2 + l2 * (T::one() - e2) - Complex::one()
}

/// The planar limit `u'' = u − u² − 2γu³` in (u, w = u').
#[derive(Debug, Clone, Copy)]
pub struct PlanarField<T> {
    pub gamma: T,
}

impl<T: Real> VectorField<T, 2> for PlanarField<T> {
    #[inline]
    fn eval(&self, y: &[T; 2]) -> [T; 2] {
        let [u, w] = *y;
        [w, u - u * u - self.gamma * u * u * u * 2.0]
    }
}

pub fn planar_field<T: Real>(gamma: T, uw: [T; 2]) -> [T; 2] {
    PlanarField { gamma }.eval(&uw)
}

/// Zero of u₀'' located by the scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroRecord<T> {
    pub x: Complex<T>,
    pub multiplicity: u32,
    pub residual: f64,
}

/// Candidate cell whose Newton polish failed to converge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unresolved {
    pub re: f64,
    pub im: f64,
    pub winding: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroScan<T> {
    pub zeros: Vec<ZeroRecord<T>>,
    pub unresolved: Vec<Unresolved>,
}

impl<T> ZeroScan<T> {
    pub fn count(&self) -> usize {
        self.zeros.iter().map(|z| z.multiplicity as usize).sum()
    }
}

/// Zeros of `β cosh²x − cosh x − 2β` in the strip |Im x| ≤ `half_height`.
///
/// A grid of square cells of side `resolution` is laid over the rectangle
/// that can contain zeros; the winding number of the polynomial around each
/// cell counts the zeros inside, and each counted cell is polished by Newton
/// from its center.
pub fn u0pp_zero_scan<T: Real>(gamma: T, half_height: f64, resolution: f64) -> Result<ZeroScan<T>> {
    let geo = geometry(gamma)?;
    let beta = geo.beta.to_f64();
    let h = |x: f64, y: f64| -> (f64, f64) {
        // cosh(x + iy)
        let (cr, ci) = (x.cosh() * y.cos(), x.sinh() * y.sin());
        let (c2r, c2i) = (cr * cr - ci * ci, 2.0 * cr * ci);
        (beta * c2r - cr - 2.0 * beta, beta * c2i - ci)
    };
    // |cosh x| >= sinh|Re x| bounds the real extent of any zero.
    let gmax = geo.g_plus.to_f64().abs().max(geo.g_minus.to_f64().abs());
    let re_max = gmax.asinh() + 1.0;
    // A small irrational offset keeps grid lines off the symmetry axes.
    let off = resolution * 0.318_309_886;
    let nx = (2.0 * re_max / resolution).ceil() as i64 + 2;
    let ny = (2.0 * (half_height + resolution) / resolution).ceil() as i64 + 2;
    let x0 = -re_max - resolution + off;
    let y0 = -half_height - 2.0 * resolution + off;
    let mut grid = vec![(0.0, 0.0); ((nx + 1) * (ny + 1)) as usize];
    let idx = |i: i64, j: i64| (j * (nx + 1) + i) as usize;
    for j in 0..=ny {
        for i in 0..=nx {
            grid[idx(i, j)] = h(x0 + i as f64 * resolution, y0 + j as f64 * resolution);
        }
    }
    let darg = |a: (f64, f64), b: (f64, f64)| -> f64 {
        // arg(b / a) in (−π, π]
        let re = b.0 * a.0 + b.1 * a.1;
        let im = b.1 * a.0 - b.0 * a.1;
        im.atan2(re)
    };
    let mut scan = ZeroScan {
        zeros: Vec::new(),
        unresolved: Vec::new(),
    };
    for j in 0..ny {
        for i in 0..nx {
            let c = [
                grid[idx(i, j)],
                grid[idx(i + 1, j)],
                grid[idx(i + 1, j + 1)],
                grid[idx(i, j + 1)],
            ];
            let total: f64 = (0..4).map(|k| darg(c[k], c[(k + 1) % 4])).sum();
            let winding = (total / (2.0 * std::f64::consts::PI)).round() as i32;
            if winding == 0 {
                continue;
            }
            let cx = x0 + (i as f64 + 0.5) * resolution;
            let cy = y0 + (j as f64 + 0.5) * resolution;
            match polish_u0pp_zero(geo.beta, Complex::new(T::from_f64(cx), T::from_f64(cy))) {
                Some((z, res)) => {
                    let inside_cell = (z.re.to_f64() - cx).abs() <= resolution
                        && (z.im.to_f64() - cy).abs() <= resolution;
                    let dup = scan.zeros.iter().any(|r| (r.x - z).abs().to_f64() < 1e-8);
                    if inside_cell && !dup && z.im.to_f64().abs() <= half_height + 1e-12 {
                        scan.zeros.push(ZeroRecord {
                            x: z,
                            multiplicity: winding.unsigned_abs(),
                            residual: res,
                        });
                    }
                }
                None => scan.unresolved.push(Unresolved {
                    re: cx,
                    im: cy,
                    winding,
                }),
            }
        }
    }
    scan.zeros.sort_by(|a, b| {
        (a.x.im.to_f64(), a.x.re.to_f64())
            .partial_cmp(&(b.x.im.to_f64(), b.x.re.to_f64()))
            .unwrap()
    });
    Ok(scan)
}

fn polish_u0pp_zero<T: Real>(beta: T, mut z: Complex<T>) -> Option<(Complex<T>, f64)> {
    let poly = |z: Complex<T>| {
        let c = z.cosh();
        (c * c * beta - c - Complex::from_real(beta * 2.0), c, z.sinh())
    };
    for _ in 0..60 {
        let (p, c, s) = poly(z);
        let dp = (c * (beta * 2.0) - Complex::one()) * s;
        if dp.abs() == T::zero() {
            return None;
        }
        let step = p / dp;
        z -= step;
        if step.abs().to_f64() <= 4.0 * T::EPSILON * (1.0 + z.abs().to_f64()) {
            let (p, _, _) = poly(z);
            return Some((z, p.abs().to_f64()));
        }
    }
    let (p, _, _) = poly(z);
    let r = p.abs().to_f64();
    (r <= 1e3 * T::EPSILON).then_some((z, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use splitlab_extprec::DoubleDouble as DD;

    #[test]
    fn origin_is_an_equilibrium() {
        let p = Params::<DD>::new(-0.1, 0.1).unwrap();
        let d = vector_field(&p, &State::origin()).unwrap();
        assert_eq!(d, State::origin());
        assert_eq!(first_integral(&p, &State::origin()), DD::zero());
    }

    #[test]
    fn fast_block_is_linear() {
        let p = Params::<f64>::new(-0.05, 0.25).unwrap();
        let d = vector_field(&p, &State::new(0.0, 0.0, 2.0, 0.0)).unwrap();
        assert_eq!(d.to_array(), [0.0, 2.0, 0.0, -32.0]);
    }

    #[test]
    fn peak_value_for_gamma_zero() {
        let field = ModelField::new(0.0f64, 0.3);
        let d = field.eval(&[1.5, 0.0, 0.0, 0.0]);
        assert_eq!(d[1], -0.75);
    }

    #[test]
    fn blow_up_names_component() {
        let p = Params::<f64>::new(-0.1, 0.1).unwrap();
        let err = vector_field(&p, &State::new(0.0, f64::INFINITY, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, CoreError::BlowUp { component: "u'", .. }));
    }

    #[test]
    fn planar_fixed_points() {
        for u in [0.0, 0.5, -1.0] {
            assert_eq!(planar_field(1.0, [u, 0.0])[1], 0.0);
        }
    }
}
