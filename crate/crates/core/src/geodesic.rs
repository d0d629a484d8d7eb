//! Timelike and null geodesics of Kerr, their conserved quantities and
//! circular photon orbits.
//!
//! Conventions: `e = −g(u, ∂_t)`, `ℓ_z = g(u, ∂_φ)`, `k = K_ab u^a u^b` with
//! the Carter tensor built from the Killing–Yano form. With the `(−,+,+,+)`
//! signature `e > 0` for future-directed motion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kerr::{carter_components, metric_cov, metric_data_unchecked, KerrParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Causal {
    Timelike,
    Null,
}

impl Causal {
    fn norm(self) -> f64 {
        match self {
            Causal::Timelike => -1.0,
            Causal::Null => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub x: [f64; 4],
    pub u: [f64; 4],
    pub causal: Causal,
}

fn metric4(params: &KerrParams, x: &[f64; 4]) -> [[f64; 4]; 4] {
    metric_cov(params.m, params.a, x[1], x[2])
}

fn quad(g: &[[f64; 4]; 4], u: &[f64; 4], v: &[f64; 4]) -> f64 {
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            s += g[a][b] * u[a] * v[b];
        }
    }
    s
}

/// Normalisation tolerance for [`GeodesicState::new`].
pub const NORM_TOL: f64 = 1e-10;

impl GeodesicState {
    /// Validates the point, future direction (`u^t > 0`) and normalisation.
    pub fn new(params: &KerrParams, x: [f64; 4], u: [f64; 4], causal: Causal) -> Result<Self> {
        params.check(&x)?;
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite velocity".into()));
        }
        if u[0] <= 0.0 {
            return Err(Error::InvalidParameter("velocity is not future directed".into()));
        }
        let g = metric4(params, &x);
        let n = quad(&g, &u, &u);
        let scale: f64 = (0..4)
            .flat_map(|a| (0..4).map(move |b| (a, b)))
            .map(|(a, b)| (g[a][b] * u[a] * u[b]).abs())
            .sum::<f64>()
            .max(1.0);
        if (n - causal.norm()).abs() > NORM_TOL * scale {
            return Err(Error::InvalidParameter(format!("g(u,u) = {n} does not match {:?}", causal)));
        }
        Ok(GeodesicState { x, u, causal })
    }

    /// Complete `(u^r, u^θ, u^φ)` with the future-directed `u^t`.
    pub fn from_spatial(params: &KerrParams, x: [f64; 4], spatial: [f64; 3], causal: Causal) -> Result<Self> {
        params.check(&x)?;
        let g = metric4(params, &x);
        let [ur, uth, uph] = spatial;
        let qa = g[0][0];
        let qb = 2.0 * g[0][3] * uph;
        let qc = g[1][1] * ur * ur + g[2][2] * uth * uth + g[3][3] * uph * uph - causal.norm();
        let ut = if qa.abs() < 1e-300 {
            -qc / qb
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc < 0.0 {
                return Err(Error::InvalidParameter("no real time component for this velocity".into()));
            }
            let s = disc.sqrt();
            let r1 = (-qb + s) / (2.0 * qa);
            let r2 = (-qb - s) / (2.0 * qa);
            r1.max(r2)
        };
        Self::new(params, x, [ut, ur, uth, uph], causal)
    }

    /// Timelike circular equatorial orbit at radius `r`.
    pub fn circular_equatorial(params: &KerrParams, r: f64, prograde: bool) -> Result<Self> {
        let (m, a) = (params.m, params.a);
        let sgn = if prograde { 1.0 } else { -1.0 };
        let omega = sgn * m.sqrt() / (r.powf(1.5) + sgn * a * m.sqrt());
        let x = [0.0, r, std::f64::consts::FRAC_PI_2, 0.0];
        params.check(&x)?;
        let g = metric4(params, &x);
        let n = g[0][0] + 2.0 * g[0][3] * omega + g[3][3] * omega * omega;
        if n >= 0.0 {
            return Err(Error::Domain(format!("no timelike circular orbit at r = {r}")));
        }
        let ut = (-1.0 / n).sqrt();
        Self::new(params, x, [ut, 0.0, 0.0, omega * ut], Causal::Timelike)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedSet {
    pub e: f64,
    pub lz: f64,
    pub k: f64,
}

pub fn conserved_quantities(params: &KerrParams, x: &[f64; 4], u: &[f64; 4]) -> ConservedSet {
    let g = metric4(params, x);
    let kk = carter_components(params.m, params.a, x[1], x[2]);
    ConservedSet {
        e: -(0..4).map(|b| g[0][b] * u[b]).sum::<f64>(),
        lz: (0..4).map(|b| g[3][b] * u[b]).sum::<f64>(),
        k: quad(&kk, u, u),
    }
}

pub fn velocity_norm(params: &KerrParams, x: &[f64; 4], u: &[f64; 4]) -> f64 {
    quad(&metric4(params, x), u, u)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
    pub min_step: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { rtol: 1e-12, atol: 1e-12, initial_step: 1e-2, max_steps: 5_000_000, min_step: 1e-14 }
    }
}

impl IntegratorOptions {
    pub fn with_tolerance(tol: f64) -> Self {
        IntegratorOptions { rtol: tol, atol: tol, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub tau: f64,
    pub x: [f64; 4],
    pub u: [f64; 4],
    pub conserved: ConservedSet,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub params: KerrParams,
    pub causal: Causal,
    pub samples: Vec<TrajectorySample>,
    /// Set when the orbit reached `r ≤ r₊ + 10⁻³ m` before `t_max`.
    pub plunged: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Drift {
    pub e: f64,
    pub lz: f64,
    pub k: f64,
    pub norm: f64,
}

impl Drift {
    pub fn max(&self) -> f64 {
        self.e.max(self.lz).max(self.k).max(self.norm)
    }
}

impl Trajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    /// Largest drift of each conserved quantity relative to
    /// `max(|q₀|, scale)` with scales `1`, `m`, `m²`.
    pub fn max_drift(&self) -> Drift {
        let m = self.params.m;
        let q0 = self.samples[0].conserved;
        let n0 = self.samples[0].norm;
        let rel = |q: f64, q0: f64, s: f64| (q - q0).abs() / q0.abs().max(s);
        self.samples.iter().fold(Drift::default(), |d, s| Drift {
            e: d.e.max(rel(s.conserved.e, q0.e, 1.0)),
            lz: d.lz.max(rel(s.conserved.lz, q0.lz, m)),
            k: d.k.max(rel(s.conserved.k, q0.k, m * m)),
            norm: d.norm.max((s.norm - n0).abs()),
        })
    }
}

type State = [f64; 8];

fn rhs(params: &KerrParams, y: &State) -> Option<State> {
    if !(y[1] > params.r_plus()) || !y.iter().all(|v| v.is_finite()) {
        return None;
    }
    let met = metric_data_unchecked(params, y[1], y[2]);
    let u = [y[4], y[5], y[6], y[7]];
    let mut out = [0.0; 8];
    out[..4].copy_from_slice(&u);
    for c in 0..4 {
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let gm = met.christoffel[c][a][b];
                if gm != 0.0 {
                    s += gm * u[a] * u[b];
                }
            }
        }
        out[4 + c] = -s;
    }
    Some(out)
}

// Dormand–Prince 5(4) tableau
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step; returns the fifth-order update and the scaled
/// error norm, or `None` if a stage left the domain.
fn dp_step(params: &KerrParams, y: &State, h: f64, opts: &IntegratorOptions) -> Option<(State, f64)> {
    let mut k = [[0.0; 8]; 7];
    k[0] = rhs(params, y)?;
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..8 {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = rhs(params, &ys)?;
    }
    let mut y5 = *y;
    let mut err: f64 = 0.0;
    for i in 0..8 {
        let mut d5 = 0.0;
        let mut d4 = 0.0;
        for s in 0..7 {
            d5 += B5[s] * k[s][i];
            d4 += B4[s] * k[s][i];
        }
        y5[i] += h * d5;
        let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
        err = err.max((h * (d5 - d4)).abs() / sc);
    }
    err.is_finite().then_some((y5, err))
}

fn next_step(h: f64, err: f64) -> f64 {
    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
    h * fac
}

fn sample(params: &KerrParams, tau: f64, y: &State) -> TrajectorySample {
    let x = [y[0], y[1], y[2], y[3]];
    let u = [y[4], y[5], y[6], y[7]];
    TrajectorySample { tau, x, u, conserved: conserved_quantities(params, &x, &u), norm: velocity_norm(params, &x, &u) }
}

/// Integrate until coordinate time reaches `t_max` (the last step is
/// shortened to land on it) or the orbit approaches the horizon.
pub fn integrate_geodesic(
    params: &KerrParams,
    s0: &GeodesicState,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if !(t_max > s0.x[0]) {
        return Err(Error::InvalidParameter(format!("t_max = {t_max} is not after the initial time")));
    }
    let mut y: State = [s0.x[0], s0.x[1], s0.x[2], s0.x[3], s0.u[0], s0.u[1], s0.u[2], s0.u[3]];
    let mut tau = 0.0;
    let mut h = opts.initial_step;
    let mut samples = vec![sample(params, tau, &y)];
    let plunge_r = params.r_plus() + 1e-3 * params.m;
    let mut aimed: Option<f64> = None;
    for _ in 0..opts.max_steps {
        let remaining = t_max - y[0];
        let mut landing = false;
        if let Some(ha) = aimed.take() {
            h = ha;
            landing = true;
        } else if h * y[4] >= remaining {
            h = remaining / y[4];
            landing = true;
        }
        match dp_step(params, &y, h, opts) {
            Some((yn, err)) if err <= 1.0 => {
                if landing && (yn[0] - t_max).abs() > 1e-12 * t_max.abs().max(1.0) {
                    // dt/dτ varied over the step; aim again from the new estimate
                    aimed = Some(h * remaining / (yn[0] - y[0]));
                    continue;
                }
                tau += h;
                y = yn;
                samples.push(sample(params, tau, &y));
                if y[1] <= plunge_r {
                    return Ok(Trajectory { params: *params, causal: s0.causal, samples, plunged: true });
                }
                if landing || y[0] >= t_max {
                    return Ok(Trajectory { params: *params, causal: s0.causal, samples, plunged: false });
                }
                h = next_step(h, err);
            }
            Some((_, err)) => h = next_step(h, err),
            None => h *= 0.25,
        }
        if h.abs() < opts.min_step {
            if y[1] <= plunge_r * 1.01 {
                return Ok(Trajectory { params: *params, causal: s0.causal, samples, plunged: true });
            }
            return Err(Error::StepUnderflow { tau });
        }
    }
    Err(Error::StepUnderflow { tau })
}

/// Integrate the geodesic equations over a fixed affine span, which may be
/// negative. Returns the final `(x, u)`.
pub fn integrate_affine(
    params: &KerrParams,
    x: [f64; 4],
    u: [f64; 4],
    span: f64,
    opts: &IntegratorOptions,
) -> Result<([f64; 4], [f64; 4])> {
    let mut y: State = [x[0], x[1], x[2], x[3], u[0], u[1], u[2], u[3]];
    let dir = span.signum();
    let mut tau = 0.0;
    let mut h = dir * opts.initial_step;
    for _ in 0..opts.max_steps {
        if (tau - span).abs() <= 1e-15 * span.abs() {
            break;
        }
        if (tau + h - span) * dir > 0.0 {
            h = span - tau;
        }
        match dp_step(params, &y, h, opts) {
            Some((yn, err)) if err <= 1.0 => {
                tau += h;
                y = yn;
                h = next_step(h, err);
            }
            Some((_, err)) => h = next_step(h, err),
            None => h *= 0.25,
        }
        if h.abs() < opts.min_step {
            return Err(Error::StepUnderflow { tau });
        }
    }
    Ok(([y[0], y[1], y[2], y[3]], [y[4], y[5], y[6], y[7]]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitSense {
    Prograde,
    Retrograde,
}

/// Equatorial angular velocity with vanishing radial acceleration at `r`.
pub fn circular_angular_velocity(params: &KerrParams, r: f64, sense: OrbitSense) -> Result<f64> {
    let th = std::f64::consts::FRAC_PI_2;
    // Γ^r_ab u^a u^b ∝ ∂_r g_ab u^a u^b on the equator
    let (_, dg) = crate::kerr::jet2(|r, t| metric_cov(params.m, params.a, r, t), r, th);
    let (a, b, c) = (dg[1][3][3], dg[1][0][3], dg[1][0][0]);
    let disc = b * b - a * c;
    if disc < 0.0 || a == 0.0 {
        return Err(Error::Domain(format!("no circular equatorial motion at r = {r}")));
    }
    let w1 = (-b + disc.sqrt()) / a;
    let w2 = (-b - disc.sqrt()) / a;
    let co = if params.a >= 0.0 { w1.max(w2) } else { w1.min(w2) };
    let counter = if params.a >= 0.0 { w1.min(w2) } else { w1.max(w2) };
    Ok(match sense {
        OrbitSense::Prograde => co,
        OrbitSense::Retrograde => counter,
    })
}

fn photon_norm(params: &KerrParams, r: f64, sense: OrbitSense) -> Result<f64> {
    let w = circular_angular_velocity(params, r, sense)?;
    let g = metric_cov(params.m, params.a, r, std::f64::consts::FRAC_PI_2);
    Ok(g[0][0] + 2.0 * w * g[0][3] + w * w * g[3][3])
}

/// Radius of the circular equatorial photon orbit by bisection on the null
/// condition along the family of circular motions. The bracket must straddle
/// the orbit; `tol` is an absolute radius tolerance.
pub fn photon_orbit_radius(params: &KerrParams, bracket: (f64, f64), sense: OrbitSense, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || lo <= params.r_plus() {
        return Err(Error::InvalidParameter(format!("bad bracket [{lo}, {hi}]")));
    }
    let mut flo = photon_norm(params, lo, sense)?;
    let fhi = photon_norm(params, hi, sense)?;
    if flo.signum() == fhi.signum() {
        return Err(Error::NoRoot { what: "photon orbit condition".into(), lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = photon_norm(params, mid, sense)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Null initial state on the circular photon orbit at `r`.
pub fn photon_orbit_state(params: &KerrParams, r: f64, sense: OrbitSense) -> Result<GeodesicState> {
    let w = circular_angular_velocity(params, r, sense)?;
    let x = [0.0, r, std::f64::consts::FRAC_PI_2, 0.0];
    GeodesicState::new(params, x, [1.0, 0.0, 0.0, w], Causal::Null)
}
