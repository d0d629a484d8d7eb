//! Closed-form Kerr geometry in Boyer–Lindquist coordinates `(t, r, θ, φ)`
//! with signature `(-,+,+,+)`.
//!
//! Every closed form is written once against [`Scalar`] so that exact
//! `r`/`θ` derivatives come from dual numbers instead of finite differences.

use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::tensor::{
    cov_deriv_fd, covariant_from_partials, Chart, FdOptions, Mat4, MetricData, Symmetry, TensorValue, Variance,
};

/// Points closer than this to the axis are rejected.
pub const THETA_GUARD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KerrParams {
    pub m: f64,
    pub a: f64,
}

impl KerrParams {
    /// Sub-extremal parameters only: `m > 0`, `|a| < m`.
    pub fn new(m: f64, a: f64) -> Result<Self> {
        if !(m.is_finite() && a.is_finite()) || m <= 0.0 {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {m}")));
        }
        if a.abs() >= m {
            return Err(Error::InvalidParameter(format!("|a| = {} is not below m = {m}", a.abs())));
        }
        Ok(KerrParams { m, a })
    }

    pub fn r_plus(&self) -> f64 {
        self.m + (self.m * self.m - self.a * self.a).sqrt()
    }

    pub fn r_minus(&self) -> f64 {
        self.m - (self.m * self.m - self.a * self.a).sqrt()
    }

    /// Angular velocity of the horizon, `a / (r₊² + a²)`.
    pub fn omega_horizon(&self) -> f64 {
        let rp = self.r_plus();
        self.a / (rp * rp + self.a * self.a)
    }

    pub fn point(&self, t: f64, r: f64, theta: f64, phi: f64) -> Result<BlPoint> {
        let p = BlPoint { t, r, theta, phi };
        self.check(&p.coords())?;
        Ok(p)
    }

    /// Domain check for a coordinate quadruple.
    pub fn check(&self, p: &[f64; 4]) -> Result<()> {
        if !p.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        if p[1] <= self.r_plus() {
            return Err(Error::Domain(format!("r = {} is not outside r+ = {}", p[1], self.r_plus())));
        }
        if p[2] < THETA_GUARD || p[2] > std::f64::consts::PI - THETA_GUARD {
            return Err(Error::Domain(format!("theta = {} is within the axis guard", p[2])));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlPoint {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl BlPoint {
    pub fn coords(&self) -> [f64; 4] {
        [self.t, self.r, self.theta, self.phi]
    }
}

/// Deterministic exterior sample points with `r ∈ [r_lo, r_hi]` and θ away
/// from the axis.
pub fn sample_exterior_points(params: &KerrParams, n: usize, seed: u64, r_lo: f64, r_hi: f64) -> Vec<[f64; 4]> {
    let mut rng = StdRng::seed_from_u64(seed);
    let lo = r_lo.max(params.r_plus() + 0.05 * params.m);
    (0..n)
        .map(|_| {
            let r = rng.random_range(lo..r_hi.max(lo + 1e-9));
            let th = rng.random_range(0.15..std::f64::consts::PI - 0.15);
            let t = rng.random_range(-5.0..5.0);
            let ph = rng.random_range(0.0..std::f64::consts::TAU);
            [t, r, th, ph]
        })
        .collect()
}

pub type Mat<S> = [[S; 4]; 4];

fn zero_mat<S: Scalar>() -> Mat<S> {
    [[S::zero(); 4]; 4]
}

pub fn metric_cov<S: Scalar>(m: f64, a: f64, r: S, th: S) -> Mat<S> {
    let (s, c) = (th.sin(), th.cos());
    let s2 = s * s;
    let sigma = r * r + c * c * (a * a);
    let delta = r * r - r * (2.0 * m) + a * a;
    let ra = r * r + a * a;
    let pi = ra * ra - delta * s2 * (a * a);
    let mut g = zero_mat::<S>();
    g[0][0] = (r * (2.0 * m) / sigma) - 1.0;
    g[0][3] = -(r * s2 * (2.0 * m * a)) / sigma;
    g[3][0] = g[0][3];
    g[1][1] = sigma / delta;
    g[2][2] = sigma;
    g[3][3] = pi * s2 / sigma;
    g
}

pub fn metric_inv<S: Scalar>(m: f64, a: f64, r: S, th: S) -> Mat<S> {
    let (s, c) = (th.sin(), th.cos());
    let s2 = s * s;
    let sigma = r * r + c * c * (a * a);
    let delta = r * r - r * (2.0 * m) + a * a;
    let ra = r * r + a * a;
    let pi = ra * ra - delta * s2 * (a * a);
    let sd = sigma * delta;
    let mut gi = zero_mat::<S>();
    gi[0][0] = -(pi / sd);
    gi[0][3] = -(r * (2.0 * m * a)) / sd;
    gi[3][0] = gi[0][3];
    gi[1][1] = delta / sigma;
    gi[2][2] = sigma.recip();
    gi[3][3] = (delta - s2 * (a * a)) / (sd * s2);
    gi
}

pub fn sqrt_det<S: Scalar>(a: f64, r: S, th: S) -> S {
    let c = th.cos();
    (r * r + c * c * (a * a)) * th.sin()
}

/// Covariant Killing–Yano two-form
/// `Y = a cosθ dr∧(dt − a sin²θ dφ) − r sinθ dθ∧(a dt − (r² + a²) dφ)`.
pub fn killing_yano_components<S: Scalar>(a: f64, r: S, th: S) -> Mat<S> {
    let (s, c) = (th.sin(), th.cos());
    let mut y = zero_mat::<S>();
    let set = |y: &mut Mat<S>, i: usize, j: usize, v: S| {
        y[i][j] = v;
        y[j][i] = -v;
    };
    set(&mut y, 1, 0, c * a);
    set(&mut y, 1, 3, -(c * s * s * (a * a)));
    set(&mut y, 2, 0, -(r * s * a));
    set(&mut y, 2, 3, r * (r * r + a * a) * s);
    y
}

/// `½ √|g| [abcd] g^ce g^df F_ef` on closed forms.
pub fn hodge_components<S: Scalar>(f: &Mat<S>, gi: &Mat<S>, sqrtg: S) -> Mat<S> {
    let mut up = zero_mat::<S>();
    for c in 0..4 {
        for d in 0..4 {
            let mut acc = S::zero();
            for e in 0..4 {
                for f2 in 0..4 {
                    if gi[c][e].re() != 0.0 && gi[d][f2].re() != 0.0 {
                        acc = acc + gi[c][e] * gi[d][f2] * f[e][f2];
                    }
                }
            }
            up[c][d] = acc;
        }
    }
    let mut out = zero_mat::<S>();
    for a in 0..4 {
        for b in 0..4 {
            if a == b {
                continue;
            }
            let mut acc = S::zero();
            for c in 0..4 {
                for d in 0..4 {
                    let e = crate::tensor::permutation_sign(&[a, b, c, d]);
                    if e != 0.0 {
                        acc = acc + up[c][d] * e;
                    }
                }
            }
            out[a][b] = acc * sqrtg * 0.5;
        }
    }
    out
}

pub fn hodge_killing_yano<S: Scalar>(m: f64, a: f64, r: S, th: S) -> Mat<S> {
    let y = killing_yano_components(a, r, th);
    hodge_components(&y, &metric_inv(m, a, r, th), sqrt_det(a, r, th))
}

/// `K_ab = Y_ac g^cd Y_db`.
pub fn carter_components<S: Scalar>(m: f64, a: f64, r: S, th: S) -> Mat<S> {
    let y = killing_yano_components(a, r, th);
    let gi = metric_inv(m, a, r, th);
    let mut k = zero_mat::<S>();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = S::zero();
            for c in 0..4 {
                for d in 0..4 {
                    if gi[c][d].re() != 0.0 {
                        acc = acc + y[i][c] * gi[c][d] * y[d][j];
                    }
                }
            }
            k[i][j] = acc;
        }
    }
    k
}

fn to_f64(m: &Mat<Dual<f64>>) -> Mat4 {
    let mut o = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            o[i][j] = m[i][j].v;
        }
    }
    o
}

fn derivs(m: &Mat<Dual<f64>>) -> Mat4 {
    let mut o = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            o[i][j] = m[i][j].d;
        }
    }
    o
}

/// Value and coordinate partials of a stationary axisymmetric rank-2 closed
/// form; `∂_t` and `∂_φ` vanish.
pub fn jet2<F>(f: F, r: f64, th: f64) -> (Mat4, [Mat4; 4])
where
    F: Fn(Dual<f64>, Dual<f64>) -> Mat<Dual<f64>>,
{
    let fr = f(Dual::var(r), Dual::constant(th));
    let ft = f(Dual::constant(r), Dual::var(th));
    let z = [[0.0; 4]; 4];
    (to_f64(&fr), [z, derivs(&fr), derivs(&ft), z])
}

/// Metric data with analytic Christoffel symbols.
pub fn metric_data(params: &KerrParams, p: &[f64; 4]) -> Result<MetricData> {
    params.check(p)?;
    Ok(metric_data_unchecked(params, p[1], p[2]))
}

pub(crate) fn metric_data_unchecked(params: &KerrParams, r: f64, th: f64) -> MetricData {
    let (m, a) = (params.m, params.a);
    let (g, dg) = jet2(|r, t| metric_cov(m, a, r, t), r, th);
    let gi = metric_inv(m, a, r, th);
    MetricData::from_parts(Chart::BoyerLindquist, g, gi, sqrt_det(a, r, th), &dg)
}

fn two_form(m: &Mat4) -> TensorValue {
    TensorValue::from_real2(Chart::BoyerLindquist, [Variance::Down, Variance::Down], m)
}

/// Killing–Yano two-form at `p`.
pub fn killing_yano(params: &KerrParams, p: &[f64; 4]) -> Result<TensorValue> {
    params.check(p)?;
    two_form(&killing_yano_components(params.a, p[1], p[2])).with_symmetry(Symmetry::Antisymmetric)
}

/// [`killing_yano`] followed by a pointwise validation of the Killing–Yano
/// equation and of the normalisation `ξ = ∂_t`.
pub fn killing_yano_checked(params: &KerrParams, p: &[f64; 4]) -> Result<TensorValue> {
    let y = killing_yano(params, p)?;
    let tol = 1e-10;
    for (name, res) in [
        ("killing-yano", ky_residual(params, p, Derivatives::Analytic)?),
        ("xi-normalisation", xi_residual(params, p, Derivatives::Analytic)?),
    ] {
        if res > tol {
            return Err(Error::Consistency { check: name.into(), residual: res, tolerance: tol });
        }
    }
    Ok(y)
}

pub fn hodge_killing_yano_tensor(params: &KerrParams, p: &[f64; 4]) -> Result<TensorValue> {
    params.check(p)?;
    two_form(&hodge_killing_yano(params.m, params.a, p[1], p[2])).with_symmetry(Symmetry::Antisymmetric)
}

pub fn carter_tensor(params: &KerrParams, p: &[f64; 4]) -> Result<TensorValue> {
    params.check(p)?;
    two_form(&carter_components(params.m, params.a, p[1], p[2])).with_symmetry(Symmetry::Symmetric)
}

/// Source of the partial derivatives used by the residual checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Derivatives {
    /// Exact derivatives of the closed forms.
    Analytic,
    /// Central finite differences of the pointwise sampler.
    FiniteDifference(FdOptions),
}

type ClosedForm = fn(f64, f64, Dual<f64>, Dual<f64>) -> Mat<Dual<f64>>;

fn ky_dual(_m: f64, a: f64, r: Dual<f64>, th: Dual<f64>) -> Mat<Dual<f64>> {
    killing_yano_components(a, r, th)
}

fn nabla_closed(params: &KerrParams, p: &[f64; 4], f: ClosedForm, sym: Symmetry, how: Derivatives) -> Result<TensorValue> {
    let met = metric_data(params, p)?;
    let (m, a) = (params.m, params.a);
    match how {
        Derivatives::Analytic => {
            let (v, d) = jet2(|r, t| f(m, a, r, t), p[1], p[2]);
            let partials: Vec<TensorValue> = d.iter().map(two_form).collect();
            covariant_from_partials(&two_form(&v), &partials, &met)
        }
        Derivatives::FiniteDifference(opts) => {
            let sampler = |q: &[f64; 4]| {
                params.check(q)?;
                let v = f(m, a, Dual::constant(q[1]), Dual::constant(q[2]));
                let t = two_form(&to_f64(&v));
                if sym == Symmetry::General {
                    Ok(t)
                } else {
                    t.with_symmetry(sym)
                }
            };
            cov_deriv_fd(&sampler, &met, p, opts)
        }
    }
}

/// `max |∇_(a Y_b)c|`.
pub fn ky_residual(params: &KerrParams, p: &[f64; 4], how: Derivatives) -> Result<f64> {
    let dy = nabla_closed(params, p, ky_dual, Symmetry::Antisymmetric, how)?;
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                worst = worst.max(0.5 * (dy.get(&[a, b, c]) + dy.get(&[b, a, c])).norm());
            }
        }
    }
    Ok(worst)
}

/// Residual of the conformal Killing–Yano equation
/// `∇_(a Y_b)c = −⅓ g_ab ∇^d Y_cd + ⅓ g_(a|c| ∇^d Y_b)d`.
pub fn cky_residual(params: &KerrParams, p: &[f64; 4], how: Derivatives) -> Result<f64> {
    let met = metric_data(params, p)?;
    let dy = nabla_closed(params, p, ky_dual, Symmetry::Antisymmetric, how)?;
    let g = &met.g;
    let gi = &met.g_inv;
    // δ_c = g^{de} ∇_e Y_cd
    let mut delta = [C64::new(0.0, 0.0); 4];
    for (c, dc) in delta.iter_mut().enumerate() {
        for d in 0..4 {
            for e in 0..4 {
                if gi[d][e] != 0.0 {
                    *dc += dy.get(&[e, c, d]) * gi[d][e];
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let sym = 0.5 * (dy.get(&[a, b, c]) + dy.get(&[b, a, c]));
                let r = sym + delta[c] * (g[a][b] / 3.0) - (delta[b] * g[a][c] + delta[a] * g[b][c]) / 6.0;
                worst = worst.max(r.norm());
            }
        }
    }
    Ok(worst)
}

fn carter_dual(m: f64, a: f64, r: Dual<f64>, th: Dual<f64>) -> Mat<Dual<f64>> {
    carter_components(m, a, r, th)
}

/// `max |∇_(a K_bc)|`.
pub fn killing_tensor_residual(params: &KerrParams, p: &[f64; 4], how: Derivatives) -> Result<f64> {
    let dk = nabla_closed(params, p, carter_dual, Symmetry::Symmetric, how)?;
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let s = dk.get(&[a, b, c]) + dk.get(&[b, c, a]) + dk.get(&[c, a, b]);
                worst = worst.max(s.norm() / 3.0);
            }
        }
    }
    Ok(worst)
}

fn hodge_dual_y(m: f64, a: f64, r: Dual<f64>, th: Dual<f64>) -> Mat<Dual<f64>> {
    hodge_killing_yano(m, a, r, th)
}

/// `ξ^a` from `ξ_a = ⅓ i ∇_b Y_a^b − ⅓ ∇_b (*Y)_a^b`.
pub fn xi_vector(params: &KerrParams, p: &[f64; 4], how: Derivatives) -> Result<[C64; 4]> {
    let met = metric_data(params, p)?;
    let dy = nabla_closed(params, p, ky_dual, Symmetry::Antisymmetric, how)?;
    let dsy = nabla_closed(params, p, hodge_dual_y, Symmetry::Antisymmetric, how)?;
    let gi = &met.g_inv;
    let mut low = [C64::new(0.0, 0.0); 4];
    for (a, la) in low.iter_mut().enumerate() {
        for b in 0..4 {
            for c in 0..4 {
                if gi[b][c] != 0.0 {
                    *la += (C64::i() * dy.get(&[b, a, c]) - dsy.get(&[b, a, c])) * (gi[b][c] / 3.0);
                }
            }
        }
    }
    Ok(met.raise(&low))
}

/// `max |ξ^a − δ^a_t|`.
pub fn xi_residual(params: &KerrParams, p: &[f64; 4], how: Derivatives) -> Result<f64> {
    let xi = xi_vector(params, p, how)?;
    Ok(xi
        .iter()
        .enumerate()
        .map(|(i, z)| (z - C64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0)).norm())
        .fold(0.0, f64::max))
}

/// `κ₁ = −⅓ (r − i a cosθ)` and `U_a = −∇_a log κ₁`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaScalars {
    pub kappa1: C64,
    pub u: [C64; 4],
}

pub fn kappa_scalars(params: &KerrParams, p: &[f64; 4]) -> Result<KappaScalars> {
    params.check(p)?;
    let (r, th, a) = (p[1], p[2], params.a);
    let w = C64::new(r, -a * th.cos());
    let zero = C64::new(0.0, 0.0);
    Ok(KappaScalars {
        kappa1: -w / 3.0,
        u: [zero, -w.inv(), C64::new(0.0, -a * th.sin()) / w, zero],
    })
}

/// Orthonormal frame of the zero angular momentum observer: `e_0` is the
/// future unit normal to `t = const`, then unit vectors along `∂_r, ∂_θ, ∂_φ`.
pub fn zamo_frame(params: &KerrParams, p: &[f64; 4]) -> Result<[[f64; 4]; 4]> {
    params.check(p)?;
    let g = metric_cov(params.m, params.a, p[1], p[2]);
    let omega = -g[0][3] / g[3][3];
    let alpha = (g[0][3] * g[0][3] / g[3][3] - g[0][0]).sqrt();
    Ok([
        [1.0 / alpha, 0.0, 0.0, omega / alpha],
        [0.0, 1.0 / g[1][1].sqrt(), 0.0, 0.0],
        [0.0, 0.0, 1.0 / g[2][2].sqrt(), 0.0],
        [0.0, 0.0, 0.0, 1.0 / g[3][3].sqrt()],
    ])
}

/// Future-directed unit timelike vector `γ (e_0 + v^i e_i)` in the ZAMO frame.
pub fn boosted_observer(params: &KerrParams, p: &[f64; 4], v: [f64; 3]) -> Result<[f64; 4]> {
    let speed2: f64 = v.iter().map(|x| x * x).sum();
    if !(speed2 < 1.0) {
        return Err(Error::InvalidParameter(format!("boost speed² {speed2} is not below 1")));
    }
    let e = zamo_frame(params, p)?;
    let gamma = 1.0 / (1.0 - speed2).sqrt();
    Ok(std::array::from_fn(|a| gamma * (e[0][a] + v[0] * e[1][a] + v[1] * e[2][a] + v[2] * e[3][a])))
}

/// Kinnersley principal null tetrad (contravariant components).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NullTetrad {
    pub l: [C64; 4],
    pub n: [C64; 4],
    pub m: [C64; 4],
    pub mbar: [C64; 4],
}

pub fn principal_tetrad(params: &KerrParams, p: &[f64; 4]) -> Result<NullTetrad> {
    params.check(p)?;
    let (m, a, r, th) = (params.m, params.a, p[1], p[2]);
    let (s, c) = (th.sin(), th.cos());
    let delta = r * r - 2.0 * m * r + a * a;
    let sigma = r * r + a * a * c * c;
    let ra = r * r + a * a;
    let re = |x: f64| C64::new(x, 0.0);
    let l = [re(ra / delta), re(1.0), re(0.0), re(a / delta)];
    let n = [re(ra / (2.0 * sigma)), re(-delta / (2.0 * sigma)), re(0.0), re(a / (2.0 * sigma))];
    let pref = (C64::new(r, a * c) * std::f64::consts::SQRT_2).inv();
    let mv = [C64::new(0.0, a * s) * pref, re(0.0), pref, C64::new(0.0, 1.0 / s) * pref];
    let mbar = mv.map(|z| z.conj());
    Ok(NullTetrad { l, n, m: mv, mbar })
}

/// `max |g_ab + 2 (l_(a n_b) − m_(a m̄_b))|` with indices lowered by `g`.
///
/// This is the usual tetrad normalisation written for signature `(+,−,−,−)`,
/// transcribed to the `(−,+,+,+)` metric used here.
pub fn tetrad_residual(params: &KerrParams, p: &[f64; 4]) -> Result<f64> {
    let met = metric_data(params, p)?;
    let t = principal_tetrad(params, p)?;
    let (l, n, m, mb) = (met.lower(&t.l), met.lower(&t.n), met.lower(&t.m), met.lower(&t.mbar));
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let ln = (l[a] * n[b] + l[b] * n[a]) * 0.5;
            let mm = (m[a] * mb[b] + m[b] * mb[a]) * 0.5;
            worst = worst.max((C64::new(met.g[a][b], 0.0) + (ln - mm) * 2.0).norm());
        }
    }
    Ok(worst)
}
