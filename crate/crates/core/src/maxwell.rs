//! Maxwell fields on Kerr and the conserved tensor built from the
//! Killing–Yano form.
//!
//! For a Maxwell field `F` the tensor
//!
//! ```text
//! V_ab = η_(a η̄_b) − ½ g_ab η^c η̄_c
//!        − ⅓ (L_{Re ξ} F)_(a^c Z_b)c + (1/12) g_ab (L_{Re ξ} F)^cd Z_cd
//!        + ⅓ (L_{Im ξ} *F)_(a^c Z_b)c − (1/12) g_ab (L_{Im ξ} *F)^cd Z_cd
//! ```
//!
//! with `Z_ab = −(4/3) (*F)_[a^c Y_b]c` and `η_a = ∇_b Z_a^b + i ∇_b (*Z)_a^b`
//! is divergence free. Every quantity is evaluated by its literal formula
//! with the `(−,+,+,+)` metric; `V` is invariant under the overall sign of
//! the metric, of the orientation and of `Y`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::kerr::{self, jet2, metric_data, KerrParams, Mat, NullTetrad};
use crate::tensor::{
    cov_deriv_fd, hodge_dual2, index_ops, partial_fd, Chart, FdOptions, FdScheme, IndexAction, MetricData, Symmetry,
    TensorValue, Variance,
};

pub type FieldSampler = Arc<dyn Fn(&[f64; 4]) -> Result<TensorValue> + Send + Sync>;

fn exterior_d<S: Scalar>(at: (Dual<S>, Dual<S>), aphi: (Dual<S>, Dual<S>)) -> Mat<S> {
    // at.0, aphi.0 carry ∂_r; at.1, aphi.1 carry ∂_θ
    let mut f = [[S::zero(); 4]; 4];
    let mut set = |i: usize, j: usize, v: S| {
        f[i][j] = v;
        f[j][i] = -v;
    };
    set(1, 0, at.0.d);
    set(1, 3, aphi.0.d);
    set(2, 0, at.1.d);
    set(2, 3, aphi.1.d);
    f
}

/// `F = dA` for the Kerr–Newman potential `A = −(q r / Σ)(dt − a sin²θ dφ)`.
pub fn coulomb_components<S: Scalar>(a: f64, q: f64, r: S, th: S) -> Mat<S> {
    let pot = |r: Dual<S>, th: Dual<S>| {
        let s = th.sin();
        let sigma = r * r + th.cos() * th.cos() * (a * a);
        (-(r * q) / sigma, r * s * s * (q * a) / sigma)
    };
    let dr = pot(Dual::var(r), Dual::constant(th));
    let dth = pot(Dual::constant(r), Dual::var(th));
    exterior_d((dr.0, dth.0), (dr.1, dth.1))
}

/// Wald's test field `A = (B/2)(∂_φ + 2a ∂_t)♭`, asymptotically a uniform
/// magnetic field along the axis with zero charge.
pub fn wald_components<S: Scalar>(m: f64, a: f64, b: f64, r: S, th: S) -> Mat<S> {
    let pot = |r: Dual<S>, th: Dual<S>| {
        let g = kerr::metric_cov(m, a, r, th);
        ((g[0][3] + g[0][0] * (2.0 * a)) * (0.5 * b), (g[3][3] + g[0][3] * (2.0 * a)) * (0.5 * b))
    };
    let dr = pot(Dual::var(r), Dual::constant(th));
    let dth = pot(Dual::constant(r), Dual::var(th));
    exterior_d((dr.0, dth.0), (dr.1, dth.1))
}

pub fn wald_field(params: &KerrParams, b: f64, p: &[f64; 4]) -> Result<TensorValue> {
    params.check(p)?;
    TensorValue::from_real2(
        Chart::BoyerLindquist,
        [Variance::Down, Variance::Down],
        &wald_components(params.m, params.a, b, p[1], p[2]),
    )
    .with_symmetry(Symmetry::Antisymmetric)
}

pub fn coulomb_field(params: &KerrParams, q: f64, p: &[f64; 4]) -> Result<TensorValue> {
    params.check(p)?;
    TensorValue::from_real2(
        Chart::BoyerLindquist,
        [Variance::Down, Variance::Down],
        &coulomb_components(params.a, q, p[1], p[2]),
    )
    .with_symmetry(Symmetry::Antisymmetric)
}

fn require_two_form(f: &TensorValue) -> Result<()> {
    if f.rank() != 2 || f.variance() != [Variance::Down, Variance::Down] {
        return Err(Error::Shape("expected a covariant two-form".into()));
    }
    let d = f.antisymmetry_defect();
    if d > 1e-12 * f.max_abs().max(1e-300) {
        return Err(Error::NotAntisymmetric { defect: d });
    }
    Ok(())
}

/// `max |∂_[a F_bc]|` from exact derivatives of the Coulomb field.
pub fn coulomb_closure_residual(params: &KerrParams, q: f64, p: &[f64; 4]) -> Result<f64> {
    params.check(p)?;
    let (_, d) = jet2(|r, t| coulomb_components(params.a, q, r, t), p[1], p[2]);
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                worst = worst.max((d[a][b][c] + d[b][c][a] + d[c][a][b]).abs());
            }
        }
    }
    Ok(worst)
}

/// `max_b |∇^a F_ab|` for a field sampler, derivatives by finite differences.
pub fn maxwell_divergence(field: &FieldSampler, metric: &MetricData, p: &[f64; 4], opts: FdOptions) -> Result<f64> {
    let df = cov_deriv_fd(&**field, metric, p, opts)?;
    let mut worst: f64 = 0.0;
    for b in 0..4 {
        let mut s = C64::new(0.0, 0.0);
        for a in 0..4 {
            for c in 0..4 {
                if metric.g_inv[a][c] != 0.0 {
                    s += df.get(&[c, a, b]) * metric.g_inv[a][c];
                }
            }
        }
        worst = worst.max(s.norm());
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NpScalars {
    pub phi0: C64,
    pub phi1: C64,
    pub phi2: C64,
    /// `(r − i a cosθ) φ₁`.
    pub upsilon: C64,
}

fn contract2(f: &TensorValue, u: &[C64; 4], v: &[C64; 4]) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for a in 0..4 {
        for b in 0..4 {
            s += f.get2(a, b) * u[a] * v[b];
        }
    }
    s
}

/// Newman–Penrose components along a null tetrad at the point `p`.
pub fn np_scalars(f: &TensorValue, tetrad: &NullTetrad, params: &KerrParams, p: &[f64; 4]) -> Result<NpScalars> {
    require_two_form(f)?;
    let phi0 = contract2(f, &tetrad.l, &tetrad.m);
    let phi1 = 0.5 * (contract2(f, &tetrad.l, &tetrad.n) + contract2(f, &tetrad.mbar, &tetrad.m));
    let phi2 = contract2(f, &tetrad.mbar, &tetrad.n);
    let upsilon = C64::new(p[1], -params.a * p[2].cos()) * phi1;
    Ok(NpScalars { phi0, phi1, phi2, upsilon })
}

/// `T_ab = F_ac F_b^c − ¼ g_ab F_cd F^cd`.
pub fn stress_tensor(f: &TensorValue, metric: &MetricData) -> Result<TensorValue> {
    require_two_form(f)?;
    let mixed = index_ops(f, metric, IndexAction::Raise, &[1])?;
    let mut f2 = C64::new(0.0, 0.0);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                if metric.g_inv[a][c] != 0.0 {
                    f2 += f.get2(a, b) * mixed.get2(c, b) * metric.g_inv[a][c];
                }
            }
        }
    }
    Ok(TensorValue::from_fn(Chart::BoyerLindquist, &[Variance::Down, Variance::Down], |i| {
        let mut s = C64::new(0.0, 0.0);
        for c in 0..4 {
            s += f.get2(i[0], c) * mixed.get2(i[1], c);
        }
        s - f2 * (0.25 * metric.g[i[0]][i[1]])
    }))
}

/// `Z_ab = −(4/3) (*F)_[a^c Y_b]c`.
pub fn z_form(f: &TensorValue, y: &TensorValue, metric: &MetricData) -> Result<TensorValue> {
    require_two_form(f)?;
    require_two_form(y)?;
    let sf = index_ops(&hodge_dual2(f, metric)?, metric, IndexAction::Raise, &[1])?;
    let z = TensorValue::from_fn(Chart::BoyerLindquist, &[Variance::Down, Variance::Down], |i| {
        let (a, b) = (i[0], i[1]);
        let mut s = C64::new(0.0, 0.0);
        for c in 0..4 {
            s += sf.get2(a, c) * y.get2(b, c) - sf.get2(b, c) * y.get2(a, c);
        }
        s * (-2.0 / 3.0)
    });
    z.with_symmetry(Symmetry::Antisymmetric)
}

/// Maxwell field on Kerr together with the Killing–Yano data used to build
/// the conserved tensor.
#[derive(Clone)]
pub struct MaxwellSetup {
    pub params: KerrParams,
    pub field: FieldSampler,
    /// Overall sign applied to the Killing–Yano form.
    pub y_sign: f64,
    /// Finite-difference options for the inner derivatives (η, Lie
    /// derivatives). The step is taken from here when set.
    pub inner: FdOptions,
}

impl MaxwellSetup {
    pub fn new(params: KerrParams, field: FieldSampler) -> Self {
        MaxwellSetup { params, field, y_sign: 1.0, inner: FdOptions { step: None, scheme: FdScheme::Central2 } }
    }

    pub fn coulomb(params: KerrParams, q: f64) -> Self {
        Self::new(params, Arc::new(move |p: &[f64; 4]| coulomb_field(&params, q, p)))
    }

    pub fn wald(params: KerrParams, b: f64) -> Self {
        Self::new(params, Arc::new(move |p: &[f64; 4]| wald_field(&params, b, p)))
    }

    fn metric(&self, p: &[f64; 4]) -> Result<MetricData> {
        metric_data(&self.params, p)
    }

    fn y(&self, p: &[f64; 4]) -> Result<TensorValue> {
        Ok(kerr::killing_yano(&self.params, p)?.scale(C64::new(self.y_sign, 0.0)))
    }

    pub fn z(&self, p: &[f64; 4]) -> Result<TensorValue> {
        let met = self.metric(p)?;
        z_form(&(self.field)(p)?, &self.y(p)?, &met)
    }

    pub fn star_z(&self, p: &[f64; 4]) -> Result<TensorValue> {
        let met = self.metric(p)?;
        hodge_dual2(&self.z(p)?, &met)
    }

    fn star_f(&self, p: &[f64; 4]) -> Result<TensorValue> {
        hodge_dual2(&(self.field)(p)?, &self.metric(p)?)
    }

    /// `η_a = ∇_b Z_a^b + i ∇_b (*Z)_a^b`.
    pub fn eta(&self, p: &[f64; 4]) -> Result<[C64; 4]> {
        let met = self.metric(p)?;
        let dz = cov_deriv_fd(&|q: &[f64; 4]| self.z(q), &met, p, self.inner)?;
        let dsz = cov_deriv_fd(&|q: &[f64; 4]| self.star_z(q), &met, p, self.inner)?;
        let mut eta = [C64::new(0.0, 0.0); 4];
        for (a, e) in eta.iter_mut().enumerate() {
            for b in 0..4 {
                for c in 0..4 {
                    let gi = met.g_inv[b][c];
                    if gi != 0.0 {
                        *e += (dz.get(&[b, a, c]) + C64::i() * dsz.get(&[b, a, c])) * gi;
                    }
                }
            }
        }
        Ok(eta)
    }

    /// `ξ^a` scaled by the Killing–Yano sign.
    pub fn xi(&self, p: &[f64; 4]) -> Result<[C64; 4]> {
        Ok(kerr::xi_vector(&self.params, p, kerr::Derivatives::Analytic)?.map(|z| z * self.y_sign))
    }

    /// `(L_X F)_ab = X^c ∂_c F_ab + F_cb ∂_a X^c + F_ac ∂_b X^c`, with all
    /// partials by finite differences.
    fn lie(&self, x: &dyn Fn(&[f64; 4]) -> Result<[f64; 4]>, f: &dyn Fn(&[f64; 4]) -> Result<TensorValue>, p: &[f64; 4]) -> Result<TensorValue> {
        let h = self.inner.step.unwrap_or_else(|| crate::tensor::default_fd_step(p));
        let xs = |q: &[f64; 4]| Ok(TensorValue::from_real1(Chart::BoyerLindquist, Variance::Up, &x(q)?));
        let dx = partial_fd(&xs, p, 4, h, self.inner.scheme)?;
        let df = partial_fd(f, p, 4, h, self.inner.scheme)?;
        let x0 = x(p)?;
        let f0 = f(p)?;
        Ok(TensorValue::from_fn(Chart::BoyerLindquist, &[Variance::Down, Variance::Down], |i| {
            let (a, b) = (i[0], i[1]);
            let mut s = C64::new(0.0, 0.0);
            for c in 0..4 {
                s += df[c].get2(a, b) * x0[c] + f0.get2(c, b) * dx[a].get(&[c]) + f0.get2(a, c) * dx[b].get(&[c]);
            }
            s
        }))
    }

    /// The conserved symmetric tensor `V_ab` at `p`.
    pub fn v_tensor(&self, p: &[f64; 4]) -> Result<TensorValue> {
        let met = self.metric(p)?;
        let eta = self.eta(p)?;
        let eta_up = met.raise(&eta);
        let eta2: C64 = (0..4).map(|c| eta_up[c] * eta[c].conj()).sum();
        let re_xi = |q: &[f64; 4]| Ok(self.xi(q)?.map(|z| z.re));
        let im_xi = |q: &[f64; 4]| Ok(self.xi(q)?.map(|z| z.im));
        let lf = self.lie(&re_xi, &|q| (self.field)(q), p)?;
        let lsf = self.lie(&im_xi, &|q| self.star_f(q), p)?;
        let z = self.z(p)?;
        let coupling = |l: &TensorValue| -> Result<(TensorValue, C64)> {
            let mixed = index_ops(l, &met, IndexAction::Raise, &[1])?;
            let up = index_ops(l, &met, IndexAction::Raise, &[0, 1])?;
            let mut full = C64::new(0.0, 0.0);
            for c in 0..4 {
                for d in 0..4 {
                    full += up.get2(c, d) * z.get2(c, d);
                }
            }
            let sym = TensorValue::from_fn(Chart::BoyerLindquist, &[Variance::Down, Variance::Down], |i| {
                let mut s = C64::new(0.0, 0.0);
                for c in 0..4 {
                    s += mixed.get2(i[0], c) * z.get2(i[1], c) + mixed.get2(i[1], c) * z.get2(i[0], c);
                }
                s * 0.5
            });
            Ok((sym, full))
        };
        let (s1, c1) = coupling(&lf)?;
        let (s2, c2) = coupling(&lsf)?;
        Ok(TensorValue::from_fn(Chart::BoyerLindquist, &[Variance::Down, Variance::Down], |i| {
            let (a, b) = (i[0], i[1]);
            let g = met.g[a][b];
            let lead = 0.5 * (eta[a] * eta[b].conj() + eta[b] * eta[a].conj()) - eta2 * (0.5 * g);
            let v = lead - s1.get2(a, b) / 3.0 + c1 * (g / 12.0) + s2.get2(a, b) / 3.0 - c2 * (g / 12.0);
            C64::new(v.re, 0.0)
        }))
    }

    /// Leading part `η_(a η̄_b) − ½ g_ab η^c η̄_c` only.
    pub fn v_leading(&self, p: &[f64; 4]) -> Result<TensorValue> {
        let met = self.metric(p)?;
        let eta = self.eta(p)?;
        let eta_up = met.raise(&eta);
        let eta2: C64 = (0..4).map(|c| eta_up[c] * eta[c].conj()).sum();
        Ok(TensorValue::from_fn(Chart::BoyerLindquist, &[Variance::Down, Variance::Down], |i| {
            let (a, b) = (i[0], i[1]);
            let v = 0.5 * (eta[a] * eta[b].conj() + eta[b] * eta[a].conj()) - eta2 * (0.5 * met.g[a][b]);
            C64::new(v.re, 0.0)
        }))
    }

    /// `max_b |∇^a V_ab|` with outer finite differences `outer`.
    pub fn div_v(&self, p: &[f64; 4], outer: FdOptions) -> Result<f64> {
        let met = self.metric(p)?;
        let dv = cov_deriv_fd(&|q: &[f64; 4]| self.v_tensor(q), &met, p, outer)?;
        let mut worst: f64 = 0.0;
        for b in 0..4 {
            let mut s = C64::new(0.0, 0.0);
            for a in 0..4 {
                for c in 0..4 {
                    if met.g_inv[a][c] != 0.0 {
                        s += dv.get(&[c, a, b]) * met.g_inv[a][c];
                    }
                }
            }
            worst = worst.max(s.norm());
        }
        Ok(worst)
    }

    /// Same setup with inner and outer steps tied to `h`.
    pub fn with_step(&self, h: f64) -> Self {
        let mut s = self.clone();
        s.inner.step = Some(h);
        s
    }
}

/// Maxwell residual above which the conservation check is refused.
pub const MAXWELL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurrentReport {
    pub point: [f64; 4],
    pub maxwell_residual: f64,
    pub z: TensorValue,
    pub eta: [C64; 4],
    pub v: TensorValue,
    pub div_v_residual: f64,
    pub fd_step: f64,
}

impl MaxwellSetup {
    /// Everything at `p` with both finite-difference layers at step `h`.
    pub fn current_report(&self, p: &[f64; 4], h: f64) -> Result<CurrentReport> {
        let met = self.metric(p)?;
        let maxwell_residual = maxwell_divergence(&self.field, &met, p, FdOptions::new(h, FdScheme::Central4))?;
        if !(maxwell_residual <= MAXWELL_TOLERANCE) {
            return Err(Error::Consistency {
                check: "input is not a Maxwell field".into(),
                residual: maxwell_residual,
                tolerance: MAXWELL_TOLERANCE,
            });
        }
        let s = self.with_step(h);
        let v = s.v_tensor(p)?;
        let div_v_residual = s.div_v(p, FdOptions::new(h, FdScheme::Central2))?;
        if !div_v_residual.is_finite() {
            return Err(Error::Domain("non-finite divergence".into()));
        }
        Ok(CurrentReport { point: *p, maxwell_residual, z: s.z(p)?, eta: s.eta(p)?, v, div_v_residual, fd_step: h })
    }

    /// `max |L_{Im ξ} *F|`, zero on Kerr where `ξ` is real.
    pub fn imaginary_lie_term(&self, p: &[f64; 4]) -> Result<f64> {
        let im_xi = |q: &[f64; 4]| Ok(self.xi(q)?.map(|z| z.im));
        Ok(self.lie(&im_xi, &|q| self.star_f(q), p)?.max_abs())
    }
}

/// `V(T, T')` for a symmetric covariant tensor.
pub fn evaluate_on(v: &TensorValue, t1: &[f64; 4], t2: &[f64; 4]) -> f64 {
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            s += v.get2(a, b).re * t1[a] * t2[b];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kerr::principal_tetrad;

    #[test]
    fn coulomb_field_reduces_to_point_charge() {
        let k = KerrParams::new(1.0, 0.0).unwrap();
        let f = coulomb_field(&k, 2.0, &[0.0, 4.0, 1.0, 0.0]).unwrap();
        assert!((f.get2(0, 1).re + 2.0 / 16.0).abs() < 1e-15);
        assert!(f.get2(2, 3).norm() < 1e-15);
    }

    #[test]
    fn coulomb_field_is_closed_and_coclosed() {
        let k = KerrParams::new(1.0, 0.7).unwrap();
        let setup = MaxwellSetup::coulomb(k, 1.0);
        for p in kerr::sample_exterior_points(&k, 5, 2, 2.5, 12.0) {
            assert!(coulomb_closure_residual(&k, 1.0, &p).unwrap() < 1e-14);
            let met = metric_data(&k, &p).unwrap();
            let d = maxwell_divergence(&setup.field, &met, &p, FdOptions::default()).unwrap();
            assert!(d < 1e-9, "{d}");
        }
    }

    #[test]
    fn stress_tensor_is_traceless_with_expected_energy() {
        let k = KerrParams::new(0.5, 0.0).unwrap();
        let p = [0.0, 2.0, 1.0, 0.0];
        let met = metric_data(&k, &p).unwrap();
        let t = stress_tensor(&coulomb_field(&k, 1.0, &p).unwrap(), &met).unwrap();
        let tr = crate::tensor::contract(&t, &met, 0, 1).unwrap();
        assert!(tr.get(&[]).norm() < 1e-14);
        let f = 1.0 - 2.0 * 0.5 / 2.0;
        assert!((t.get2(0, 0).re - f / 32.0).abs() < 1e-15);
    }

    #[test]
    fn coulomb_field_is_type_d_aligned() {
        let k = KerrParams::new(1.0, 0.6).unwrap();
        for p in kerr::sample_exterior_points(&k, 6, 9, 2.5, 15.0) {
            let f = coulomb_field(&k, 1.0, &p).unwrap();
            let np = np_scalars(&f, &principal_tetrad(&k, &p).unwrap(), &k, &p).unwrap();
            assert!(np.phi0.norm() < 1e-14 && np.phi2.norm() < 1e-14);
            // |φ₁| = q / (2 Σ)
            let sigma = p[1] * p[1] + 0.36 * p[2].cos().powi(2);
            assert!((np.phi1.norm() - 0.5 / sigma).abs() < 1e-14);
            assert!((np.upsilon.norm() - 0.5 / sigma.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn hodge_of_z_is_consistent_with_z() {
        let k = KerrParams::new(1.0, 0.5).unwrap();
        let s = MaxwellSetup::coulomb(k, 1.0);
        let p = [0.0, 4.0, 1.1, 0.0];
        let met = metric_data(&k, &p).unwrap();
        let ssz = hodge_dual2(&s.star_z(&p).unwrap(), &met).unwrap();
        assert!(ssz.add(&s.z(&p).unwrap()).unwrap().max_abs() < 1e-12);
    }
    #[test]
    fn wald_field_current_is_conserved_at_second_order() {
        let k = KerrParams::new(1.0, 0.5).unwrap();
        let p = [0.3, 4.0, 1.2, 0.5];
        for sign in [1.0, -1.0] {
            let s = MaxwellSetup { y_sign: sign, ..MaxwellSetup::wald(k, 1.0) };
            let a = s.current_report(&p, 2e-3).unwrap();
            let b = s.current_report(&p, 1e-3).unwrap();
            assert!(b.v.max_abs() > 1.0);
            assert!(b.div_v_residual < 1e-5, "{}", b.div_v_residual);
            assert!((a.div_v_residual / b.div_v_residual).log2() > 1.5);
            assert!(b.v.symmetry_defect() < 1e-12 && b.v.max_imag() == 0.0);
        }
    }

    #[test]
    fn coulomb_current_vanishes_identically() {
        // F and Y share principal planes, so Z = 0
        let k = KerrParams::new(1.0, 0.5).unwrap();
        let s = MaxwellSetup::coulomb(k, 1.0);
        let r = s.current_report(&[0.0, 5.0, 1.0, 0.0], 1e-3).unwrap();
        assert!(r.z.max_abs() < 1e-14 && r.v.max_abs() < 1e-25);
    }

    #[test]
    fn current_is_quadratic_in_the_field() {
        let k = KerrParams::new(1.0, 0.5).unwrap();
        let p = [0.0, 5.0, 1.0, 0.0];
        let v1 = MaxwellSetup::wald(k, 1.0).with_step(1e-3).v_tensor(&p).unwrap();
        let v3 = MaxwellSetup::wald(k, 3.0).with_step(1e-3).v_tensor(&p).unwrap();
        assert!(v3.sub(&v1.scale(C64::new(9.0, 0.0))).unwrap().max_abs() < 1e-9 * v3.max_abs());
    }

    #[test]
    fn leading_part_satisfies_dominant_energy() {
        let k = KerrParams::new(1.0, 0.5).unwrap();
        let s = MaxwellSetup::wald(k, 1.0).with_step(1e-3);
        for p in kerr::sample_exterior_points(&k, 4, 3, 2.5, 10.0) {
            let v = s.v_leading(&p).unwrap();
            for (u, w) in [([0.0; 3], [0.0; 3]), ([0.6, 0.1, -0.2], [-0.5, 0.3, 0.7]), ([0.0, 0.0, 0.95], [0.0, 0.9, 0.0])] {
                let t1 = kerr::boosted_observer(&k, &p, u).unwrap();
                let t2 = kerr::boosted_observer(&k, &p, w).unwrap();
                assert!(evaluate_on(&v, &t1, &t2) >= -1e-12);
            }
        }
    }

    #[test]
    fn imaginary_part_of_xi_does_not_contribute() {
        let k = KerrParams::new(1.0, 0.5).unwrap();
        let s = MaxwellSetup::wald(k, 1.0).with_step(1e-3);
        assert!(s.imaginary_lie_term(&[0.0, 4.0, 1.0, 0.0]).unwrap() <= 1e-10);
    }

    #[test]
    fn non_maxwell_input_is_refused() {
        let k = KerrParams::new(1.0, 0.5).unwrap();
        // d of a potential is closed but r dt∧dr is not co-closed
        let bad: FieldSampler = Arc::new(|p: &[f64; 4]| {
            let mut f = [[0.0; 4]; 4];
            f[0][1] = p[1];
            f[1][0] = -p[1];
            TensorValue::from_real2(Chart::BoyerLindquist, [Variance::Down, Variance::Down], &f).with_symmetry(Symmetry::Antisymmetric)
        });
        let s = MaxwellSetup::new(k, bad);
        assert!(matches!(s.current_report(&[0.0, 5.0, 1.0, 0.0], 1e-3), Err(Error::Consistency { .. })));
    }
}
