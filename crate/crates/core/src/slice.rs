//! Constraint residuals for Riemannian initial-data slices `(h, k)`.
//!
//! Curvature is computed by nested central differences: Christoffel symbols
//! from differences of `h`, then the Ricci tensor from differences of the
//! Christoffel symbols. Both layers are second order.

use nalgebra::Matrix3;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];
type Sampler = Box<dyn Fn(&[f64; 3]) -> Mat3 + Send + Sync>;

pub struct SliceData {
    h: Sampler,
    k: Sampler,
}

impl SliceData {
    pub fn new(
        h: impl Fn(&[f64; 3]) -> Mat3 + Send + Sync + 'static,
        k: impl Fn(&[f64; 3]) -> Mat3 + Send + Sync + 'static,
    ) -> Self {
        SliceData { h: Box::new(h), k: Box::new(k) }
    }

    pub fn flat() -> Self {
        Self::new(|_| diag(1.0, 1.0, 1.0), |_| [[0.0; 3]; 3])
    }

    /// `t = const` slice of Schwarzschild in `(r, θ, φ)`; time symmetric.
    pub fn schwarzschild(m: f64) -> Self {
        Self::new(
            move |x| {
                let (r, s) = (x[0], x[1].sin());
                diag(1.0 / (1.0 - 2.0 * m / r), r * r, r * r * s * s)
            },
            |_| [[0.0; 3]; 3],
        )
    }

    /// Round three-sphere of the given radius in `(χ, θ, φ)`; time symmetric.
    pub fn round_three_sphere(radius: f64) -> Self {
        let r2 = radius * radius;
        Self::new(
            move |x| {
                let (s1, s2) = (x[0].sin(), x[1].sin());
                diag(r2, r2 * s1 * s1, r2 * s1 * s1 * s2 * s2)
            },
            |_| [[0.0; 3]; 3],
        )
    }

    pub fn metric(&self, x: &[f64; 3]) -> Mat3 {
        (self.h)(x)
    }

    pub fn second_form(&self, x: &[f64; 3]) -> Mat3 {
        (self.k)(x)
    }
}

fn diag(a: f64, b: f64, c: f64) -> Mat3 {
    [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstraintSample {
    pub point: [f64; 3],
    pub hamiltonian: f64,
    pub momentum: [f64; 3],
}

/// Default bound on both residuals for a sample to count as vacuum data.
pub const VACUUM_TOLERANCE: f64 = 1e-4;

impl ConstraintSample {
    pub fn momentum_norm(&self) -> f64 {
        self.momentum.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_vacuum(&self, tol: f64) -> bool {
        self.hamiltonian.abs() <= tol && self.momentum_norm() <= tol
    }
}

fn inverse_spd(h: &Mat3) -> Result<Mat3> {
    let m = Matrix3::from_fn(|i, j| h[i][j]);
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Domain("slice metric is not positive definite".into()))?;
    let inv = chol.inverse();
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| inv[(i, j)])))
}

fn shifted(x: &[f64; 3], k: usize, s: f64) -> [f64; 3] {
    let mut y = *x;
    y[k] += s;
    y
}

/// `Γ^k_ij` at `x` from central differences of `h`.
fn christoffel(data: &SliceData, x: &[f64; 3], eps: f64) -> Result<[[[f64; 3]; 3]; 3]> {
    let hi = inverse_spd(&data.metric(x))?;
    let mut dh = [[[0.0; 3]; 3]; 3];
    for (k, dk) in dh.iter_mut().enumerate() {
        let p = data.metric(&shifted(x, k, eps));
        let m = data.metric(&shifted(x, k, -eps));
        for i in 0..3 {
            for j in 0..3 {
                dk[i][j] = (p[i][j] - m[i][j]) / (2.0 * eps);
            }
        }
    }
    let mut g = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                g[k][i][j] = 0.5
                    * (0..3)
                        .map(|l| hi[k][l] * (dh[i][l][j] + dh[j][l][i] - dh[l][i][j]))
                        .sum::<f64>();
            }
        }
    }
    Ok(g)
}

fn sample(data: &SliceData, x: &[f64; 3], eps: f64) -> Result<ConstraintSample> {
    let h = data.metric(x);
    let hi = inverse_spd(&h)?;
    let gam = christoffel(data, x, eps)?;
    // dgam[l][k][i][j] = ∂_l Γ^k_ij
    let mut dgam = [[[[0.0; 3]; 3]; 3]; 3];
    for (l, dl) in dgam.iter_mut().enumerate() {
        let p = christoffel(data, &shifted(x, l, eps), eps)?;
        let m = christoffel(data, &shifted(x, l, -eps), eps)?;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    dl[k][i][j] = (p[k][i][j] - m[k][i][j]) / (2.0 * eps);
                }
            }
        }
    }
    let mut ric = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for k in 0..3 {
                s += dgam[k][k][i][j] - dgam[j][k][i][k];
                for l in 0..3 {
                    s += gam[k][k][l] * gam[l][i][j] - gam[k][j][l] * gam[l][i][k];
                }
            }
            ric[i][j] = s;
        }
    }
    let kk = data.second_form(x);
    let mut scal = 0.0;
    let mut tr = 0.0;
    let mut kup = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            scal += hi[i][j] * ric[i][j];
            tr += hi[i][j] * kk[i][j];
            kup[i][j] = (0..3)
                .flat_map(|a| (0..3).map(move |b| (a, b)))
                .map(|(a, b)| hi[i][a] * hi[j][b] * kk[a][b])
                .sum();
        }
    }
    let mut k2 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            k2 += kup[i][j] * kk[i][j];
        }
    }
    // momentum: h^{il} ∇_l k_ij − ∂_j tr k
    let mut dk = [[[0.0; 3]; 3]; 3];
    let mut dtr = [0.0; 3];
    for l in 0..3 {
        let (xp, xm) = (shifted(x, l, eps), shifted(x, l, -eps));
        let (kp, km) = (data.second_form(&xp), data.second_form(&xm));
        let (hip, him) = (inverse_spd(&data.metric(&xp))?, inverse_spd(&data.metric(&xm))?);
        let mut trp = 0.0;
        let mut trm = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                dk[l][i][j] = (kp[i][j] - km[i][j]) / (2.0 * eps);
                trp += hip[i][j] * kp[i][j];
                trm += him[i][j] * km[i][j];
            }
        }
        dtr[l] = (trp - trm) / (2.0 * eps);
    }
    let mut mom = [0.0; 3];
    for (j, mj) in mom.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..3 {
            for l in 0..3 {
                let mut cov = dk[l][i][j];
                for n in 0..3 {
                    cov -= gam[n][l][i] * kk[n][j] + gam[n][l][j] * kk[i][n];
                }
                s += hi[i][l] * cov;
            }
        }
        *mj = s - dtr[j];
    }
    let hamiltonian = scal + tr * tr - k2;
    if !hamiltonian.is_finite() || mom.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite constraint residual".into()));
    }
    Ok(ConstraintSample { point: *x, hamiltonian, momentum: mom })
}

/// Hamiltonian `scal(h) + (tr k)² − |k|²` and momentum `div k − d tr k`
/// residuals at the given points. `step` is the finite-difference step of
/// both nested layers.
pub fn constraint_residual(data: &SliceData, points: &[[f64; 3]], step: f64) -> Result<Vec<ConstraintSample>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("step {step}")));
    }
    points.iter().map(|x| sample(data, x, step)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_slice_has_zero_residual() {
        let s = constraint_residual(&SliceData::flat(), &[[0.3, -1.0, 2.0]], 1e-3).unwrap();
        assert_eq!(s[0].hamiltonian, 0.0);
        assert_eq!(s[0].momentum_norm(), 0.0);
    }

    #[test]
    fn unit_three_sphere_has_scalar_curvature_six() {
        let s = constraint_residual(&SliceData::round_three_sphere(1.0), &[[1.1, 0.8, 0.0]], 1e-3).unwrap();
        assert!((s[0].hamiltonian - 6.0).abs() < 1e-4, "{}", s[0].hamiltonian);
        assert!(!s[0].is_vacuum(VACUUM_TOLERANCE));
        let s = constraint_residual(&SliceData::round_three_sphere(2.0), &[[1.1, 0.8, 0.0]], 1e-3).unwrap();
        assert!((s[0].hamiltonian - 1.5).abs() < 1e-4);
    }

    #[test]
    fn schwarzschild_slice_converges_at_second_order() {
        let data = SliceData::schwarzschild(1.0);
        let x = [[5.0, 1.0, 0.0]];
        let e = |h| constraint_residual(&data, &x, h).unwrap()[0].hamiltonian.abs();
        let order = (e(0.04) / e(0.02)).log2();
        assert!(order > 1.9, "{order}");
    }

    #[test]
    fn hessian_second_form_on_flat_space_solves_momentum_constraint() {
        // k = Hess(f) for f = x² y + sin z has div k = d tr k
        let data = SliceData::new(
            |_| diag(1.0, 1.0, 1.0),
            |x| [[2.0 * x[1], 2.0 * x[0], 0.0], [2.0 * x[0], 0.0, 0.0], [0.0, 0.0, -x[2].sin()]],
        );
        let s = constraint_residual(&data, &[[0.4, 0.2, 1.0]], 1e-3).unwrap();
        assert!(s[0].momentum_norm() < 1e-7);
    }

    #[test]
    fn indefinite_metric_is_rejected() {
        let data = SliceData::new(|_| diag(1.0, -1.0, 1.0), |_| [[0.0; 3]; 3]);
        assert!(constraint_residual(&data, &[[0.0; 3]], 1e-3).is_err());
    }
}
