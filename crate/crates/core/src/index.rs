//! Index of the twisted chiral Dirac operator on the finite cylinder
//! `[0, T] × S¹` with spectral boundary conditions.
//!
//! Fourier modes `e^{ikx}` decouple and obey `c' = i (k + a(t)) c`; the
//! boundary operator has eigenvalues `λ_k(t) = k + a(t)`. A mode lies in the
//! kernel with APS conditions when `λ_k(0) < 0` and `λ_k(T) > 0`, and in the
//! kernel of the adjoint problem (anti-APS) when `λ_k(0) ≥ 0` and
//! `λ_k(T) ≤ 0`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::ConnectionProfile;

/// Boundary eigenvalues with `0 < |λ| < GUARD_BAND` are refused.
pub const GUARD_BAND: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexSettings {
    /// Modes `|k| ≤ k_max` are examined.
    pub k_max: i64,
    /// Composite Gauss–Legendre panels for `∫ a'`.
    pub quad_panels: usize,
    /// RK4 steps for the mode equation.
    pub ode_steps: usize,
}

impl Default for IndexSettings {
    fn default() -> Self {
        IndexSettings { k_max: 32, quad_panels: 64, ode_steps: 2000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralCondition {
    Aps,
    AntiAps,
}

/// `η(a) = 1 − 2 frac(a)` for non-integer `a`, `0` otherwise.
pub fn eta_invariant(a: f64) -> f64 {
    let f = a - a.floor();
    if f == 0.0 {
        0.0
    } else {
        1.0 - 2.0 * f
    }
}

/// Dimension of the kernel of the boundary operator: `1` iff `a ∈ Z`.
pub fn boundary_kernel_dim(a: f64) -> u32 {
    u32::from(a == a.floor())
}

fn guard(l: f64) -> Result<()> {
    if l != 0.0 && l.abs() < GUARD_BAND {
        Err(Error::GuardBand { value: l })
    } else {
        Ok(())
    }
}

fn check_profile(profile: &ConnectionProfile, settings: &IndexSettings) -> Result<(f64, f64)> {
    if !profile.collar_ok() {
        return Err(Error::CollarViolation);
    }
    let (a0, a1) = profile.endpoints();
    let need = a0.abs().max(a1.abs()).ceil() as i64 + 2;
    if settings.k_max < need {
        return Err(Error::ModeCutoff(format!("k_max = {} but at least {need} is needed", settings.k_max)));
    }
    Ok((a0, a1))
}

/// `|c(T)|` for the mode equation integrated by RK4 from `c(0) = 1`.
fn mode_amplitude(profile: &ConnectionProfile, k: i64, steps: usize) -> f64 {
    let h = profile.t_extent / steps as f64;
    let f = |t: f64, c: C64| C64::i() * c * (k as f64 + profile.value(t));
    let mut c = C64::new(1.0, 0.0);
    for n in 0..steps {
        let t = n as f64 * h;
        let k1 = f(t, c);
        let k2 = f(t + 0.5 * h, c + k1 * (0.5 * h));
        let k3 = f(t + 0.5 * h, c + k2 * (0.5 * h));
        let k4 = f(t + h, c + k3 * h);
        c += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
    }
    c.norm()
}

/// Kernel modes of the boundary value problem.
pub fn kernel_modes(profile: &ConnectionProfile, settings: &IndexSettings, cond: SpectralCondition) -> Result<Vec<i64>> {
    let (a0, a1) = check_profile(profile, settings)?;
    let mut modes = Vec::new();
    for k in -settings.k_max..=settings.k_max {
        let (l0, l1) = (k as f64 + a0, k as f64 + a1);
        guard(l0)?;
        guard(l1)?;
        let admitted = match cond {
            SpectralCondition::Aps => l0 < 0.0 && l1 > 0.0,
            SpectralCondition::AntiAps => l0 >= 0.0 && l1 <= 0.0,
        };
        if admitted {
            let amp = mode_amplitude(profile, k, settings.ode_steps);
            if !((amp - 1.0).abs() < 1e-6) {
                return Err(Error::Consistency { check: "mode modulus".into(), residual: (amp - 1.0).abs(), tolerance: 1e-6 });
            }
            modes.push(k);
        }
    }
    Ok(modes)
}

/// `dim ker_APS − dim ker_aAPS`.
pub fn index_lhs(profile: &ConnectionProfile, settings: &IndexSettings) -> Result<i64> {
    let aps = kernel_modes(profile, settings, SpectralCondition::Aps)?;
    let aaps = kernel_modes(profile, settings, SpectralCondition::AntiAps)?;
    Ok(aps.len() as i64 - aaps.len() as i64)
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Composite Gauss–Legendre over segments split at the collar edges and at
/// tabulation knots, where `a'` is only piecewise smooth.
fn integrate_derivative(profile: &ConnectionProfile, panels: usize) -> f64 {
    let t = profile.t_extent;
    let c = profile.collar * t;
    let mut cuts = vec![0.0, c, t - c, t];
    cuts.extend(profile.breakpoints().iter().copied().filter(|&x| x > 0.0 && x < t));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut s = 0.0;
    for w in cuts.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        for p in 0..panels {
            let mid = w[0] + (p as f64 + 0.5) * h;
            for (x, wt) in GL5 {
                s += 0.5 * h * wt * profile.derivative(mid + 0.5 * h * x);
            }
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IndexRhs {
    /// `∫ a' dt`.
    pub chern: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub h0: u32,
    pub h1: u32,
    pub value: f64,
}

/// `∫ a' − (h₀ + h₁ + η₀ − η₁)/2` with subscripts for `t = 0` and `t = T`.
pub fn index_rhs(profile: &ConnectionProfile, settings: &IndexSettings) -> Result<IndexRhs> {
    let (a0, a1) = check_profile(profile, settings)?;
    if settings.quad_panels == 0 {
        return Err(Error::InvalidParameter("quadrature needs at least one panel".into()));
    }
    let coarse = integrate_derivative(profile, settings.quad_panels);
    let chern = integrate_derivative(profile, 2 * settings.quad_panels);
    if (coarse - chern).abs() > 1e-11 * chern.abs().max(1.0) {
        return Err(Error::Quadrature(format!("panel doubling changed the flux by {:e}", (coarse - chern).abs())));
    }
    let (eta0, eta1) = (eta_invariant(a0), eta_invariant(a1));
    let (h0, h1) = (boundary_kernel_dim(a0), boundary_kernel_dim(a1));
    let value = chern - 0.5 * (h0 as f64 + h1 as f64 + eta0 - eta1);
    Ok(IndexRhs { chern, eta0, eta1, h0, h1, value })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexReport {
    pub lhs: i64,
    pub rhs: IndexRhs,
    pub aps_modes: Vec<i64>,
    pub anti_aps_modes: Vec<i64>,
    /// Left- and right-handed charges and the chiral anomaly.
    pub q_left: f64,
    pub q_right: f64,
    pub q_chiral: f64,
}

impl IndexReport {
    pub fn integrality_defect(&self) -> f64 {
        (self.rhs.value - self.rhs.value.round()).abs()
    }
    pub fn consistent(&self) -> bool {
        self.integrality_defect() <= 1e-9 && self.lhs == self.rhs.value.round() as i64
    }
}

pub fn index_report(profile: &ConnectionProfile, settings: &IndexSettings) -> Result<IndexReport> {
    let rhs = index_rhs(profile, settings)?;
    let aps_modes = kernel_modes(profile, settings, SpectralCondition::Aps)?;
    let anti_aps_modes = kernel_modes(profile, settings, SpectralCondition::AntiAps)?;
    let boundary = rhs.h0 as f64 - rhs.h1 as f64 + rhs.eta0 - rhs.eta1;
    let q_left = rhs.chern - 0.5 * boundary;
    Ok(IndexReport {
        lhs: aps_modes.len() as i64 - anti_aps_modes.len() as i64,
        rhs,
        aps_modes,
        anti_aps_modes,
        q_left,
        q_right: -q_left,
        q_chiral: -2.0 * rhs.chern + boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::DEFAULT_COLLAR;

    fn ramp(a0: f64, a1: f64) -> ConnectionProfile {
        ConnectionProfile::ramp(2.0, a0, a1, DEFAULT_COLLAR).unwrap()
    }

    #[test]
    fn eta_and_kernel_of_boundary_operator() {
        assert!((eta_invariant(0.3) - 0.4).abs() < 1e-15);
        assert!((eta_invariant(-1.7) - 0.4).abs() < 1e-14);
        assert_eq!(eta_invariant(2.0), 0.0);
        assert_eq!(boundary_kernel_dim(-3.0), 1);
        assert_eq!(boundary_kernel_dim(0.5), 0);
    }

    #[test]
    fn worked_examples() {
        let s = IndexSettings::default();
        for (a0, a1, want) in [(0.3, 1.3, 1), (0.0, 1.0, 0), (0.3, -1.7, -2)] {
            let r = index_report(&ramp(a0, a1), &s).unwrap();
            assert_eq!(r.lhs, want, "{a0} -> {a1}");
            assert!(r.consistent());
        }
    }

    #[test]
    fn collar_and_cutoff_are_enforced() {
        let p = ConnectionProfile::ramp(2.0, 0.3, 1.3, 0.0).unwrap();
        assert!(matches!(index_rhs(&p, &IndexSettings::default()), Err(Error::CollarViolation)));
        let s = IndexSettings { k_max: 2, ..Default::default() };
        assert!(matches!(index_lhs(&ramp(0.3, 4.3), &s), Err(Error::ModeCutoff(_))));
    }

    #[test]
    fn guard_band_is_enforced() {
        let p = ramp(1e-12, 1.3);
        assert!(matches!(index_lhs(&p, &IndexSettings::default()), Err(Error::GuardBand { .. })));
    }
}
