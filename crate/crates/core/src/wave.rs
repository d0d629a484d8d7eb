//! Fixed azimuthal mode scalar waves on the Kerr exterior.
//!
//! The field is `ψ(t, r*, θ) e^{i m φ}`. Multiplying `Σ □ψ` by
//! `Δ / (r²+a²)²` gives
//!
//! ```text
//! A ψ_tt = B ψ_t + L ψ,
//! A = 1 − Δ a² sin²θ / ϖ²,   B = −4 i m a M r / ϖ²,   ϖ = r² + a²,
//! L ψ = ϖ⁻¹ ∂_{r*}(ϖ ∂_{r*} ψ) + (Δ/ϖ²)(Δ_θ ψ − m² ψ / sin²θ) + a² m² ψ / ϖ²,
//! ```
//!
//! discretised on a uniform `r*` lattice (nodes) times cell-centred `θ`.
//! Time stepping is leapfrog with the `B` term centred implicitly, so the
//! update is pointwise explicit.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kerr::{metric_data, KerrParams};
use crate::tensor::{Chart, TensorValue, Variance};

pub const MIN_NR: usize = 16;
pub const MIN_NTHETA: usize = 4;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Tortoise coordinate with `dr*/dr = (r²+a²)/Δ`, normalised as
/// `r* = r + c₊ ln((r−r₊)/2M) − c₋ ln((r−r₋)/2M)`, `c± = 2M r± / (r₊ − r₋)`.
pub fn tortoise(params: &KerrParams, r: f64) -> Result<f64> {
    let rp = params.r_plus();
    if !(r > rp) {
        return Err(Error::Domain(format!("r = {r} is not outside the horizon")));
    }
    Ok(tortoise_from_gap(params, r - rp))
}

fn tortoise_coeffs(params: &KerrParams) -> (f64, f64) {
    let (rp, rm, m) = (params.r_plus(), params.r_minus(), params.m);
    (2.0 * m * rp / (rp - rm), 2.0 * m * rm / (rp - rm))
}

/// `r*` as a function of `x = r − r₊`, which keeps `Δ` accurate where
/// `r − r₊` is far below the spacing of doubles near `r₊`.
fn tortoise_from_gap(params: &KerrParams, x: f64) -> f64 {
    let (rp, rm, m) = (params.r_plus(), params.r_minus(), params.m);
    let (cp, cm) = tortoise_coeffs(params);
    let mut rs = rp + x + cp * (x / (2.0 * m)).ln();
    if cm != 0.0 {
        rs -= cm * ((x + rp - rm) / (2.0 * m)).ln();
    }
    rs
}

/// Inverse of the tortoise map, returning `r − r₊`.
pub fn inverse_tortoise_gap(params: &KerrParams, rstar: f64) -> Result<f64> {
    let (rp, rm) = (params.r_plus(), params.r_minus());
    let (cp, cm) = tortoise_coeffs(params);
    // Newton on u = ln x, bracketed
    let f = |u: f64| tortoise_from_gap(params, u.exp()) - rstar;
    let df = |u: f64| {
        let x = u.exp();
        x + cp - cm * x / (x + rp - rm)
    };
    let (mut lo, mut hi) = (-745.0_f64, 1.0_f64);
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 800.0 {
            return Err(Error::Domain(format!("r* = {rstar} out of range")));
        }
    }
    if f(lo) > 0.0 {
        return Err(Error::Domain(format!("r* = {rstar} is too close to the horizon to represent")));
    }
    let mut u = if rstar > rp + 4.0 * params.m { rstar.max(1e-300).ln() } else { (rstar - rp) / cp };
    u = u.clamp(lo, hi);
    for _ in 0..200 {
        let v = f(u);
        if v > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let mut next = u - v / df(u);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 1e-15 * u.abs().max(1.0) {
            u = next;
            break;
        }
        u = next;
    }
    let x = u.exp();
    if !(x > 0.0) {
        return Err(Error::Domain(format!("r* = {rstar} maps onto the horizon in double precision")));
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nr: usize,
    pub ntheta: usize,
    pub rstar_min: f64,
    pub rstar_max: f64,
}

impl GridSpec {
    /// `nr × ntheta` nodes on the default interval `r* ∈ [−80, 200]`.
    pub fn with_size(nr: usize, ntheta: usize) -> Self {
        GridSpec { nr, ntheta, rstar_min: -80.0, rstar_max: 200.0 }
    }
}

/// Lattice and frozen coefficients for one `(M, a, m)`.
#[derive(Clone, Debug)]
pub struct WaveGrid {
    pub params: KerrParams,
    pub m_phi: i32,
    pub spec: GridSpec,
    pub drs: f64,
    pub dth: f64,
    pub rstar: Vec<f64>,
    pub r: Vec<f64>,
    pub delta: Vec<f64>,
    pub varpi: Vec<f64>,
    varpi_half: Vec<f64>,
    pub theta: Vec<f64>,
    pub sin: Vec<f64>,
    face_sin: Vec<f64>,
    vol: Vec<f64>,
    /// Discrete `m² / sin²θ`, chosen so the angular stencil is exact on
    /// `sin^{|m|}θ`.
    m2_sin2: Vec<f64>,
    /// `A` per node, row major `(i, j)`.
    a_coef: Vec<f64>,
    /// `B` per radial node.
    b_coef: Vec<C64>,
}

impl WaveGrid {
    pub fn new(params: KerrParams, m_phi: i32, spec: GridSpec) -> Result<Self> {
        if spec.nr < MIN_NR || spec.ntheta < MIN_NTHETA {
            return Err(Error::GridTooCoarse(format!(
                "{}×{} is below the minimum {MIN_NR}×{MIN_NTHETA}",
                spec.nr, spec.ntheta
            )));
        }
        if !(spec.rstar_max > spec.rstar_min) || !spec.rstar_min.is_finite() || !spec.rstar_max.is_finite() {
            return Err(Error::InvalidParameter("empty tortoise range".into()));
        }
        let (m, a) = (params.m, params.a);
        let rp = params.r_plus();
        let rm = params.r_minus();
        let drs = (spec.rstar_max - spec.rstar_min) / (spec.nr - 1) as f64;
        let geo = |rs: f64| -> Result<(f64, f64, f64)> {
            let x = inverse_tortoise_gap(&params, rs)?;
            let r = rp + x;
            let delta = x * (x + rp - rm);
            if !(delta > 0.0) {
                return Err(Error::Domain(format!("Δ ≤ 0 at r* = {rs}")));
            }
            Ok((r, delta, r * r + a * a))
        };
        let mut rstar = Vec::with_capacity(spec.nr);
        let mut r = Vec::with_capacity(spec.nr);
        let mut delta = Vec::with_capacity(spec.nr);
        let mut varpi = Vec::with_capacity(spec.nr);
        for i in 0..spec.nr {
            let rs = spec.rstar_min + i as f64 * drs;
            let (ri, di, wi) = geo(rs)?;
            rstar.push(rs);
            r.push(ri);
            delta.push(di);
            varpi.push(wi);
        }
        let mut varpi_half = Vec::with_capacity(spec.nr - 1);
        for i in 0..spec.nr - 1 {
            varpi_half.push(geo(spec.rstar_min + (i as f64 + 0.5) * drs)?.2);
        }
        let nt = spec.ntheta;
        let dth = PI / nt as f64;
        let theta: Vec<f64> = (0..nt).map(|j| (j as f64 + 0.5) * dth).collect();
        let sin: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
        let face_sin: Vec<f64> = (0..=nt)
            .map(|j| if j == 0 || j == nt { 0.0 } else { (j as f64 * dth).sin() })
            .collect();
        let vol: Vec<f64> = (0..nt)
            .map(|j| ((j as f64 * dth).cos() - ((j + 1) as f64 * dth).cos()) / dth)
            .collect();
        let mabs = m_phi.unsigned_abs() as i32;
        let m2_sin2: Vec<f64> = (0..nt)
            .map(|j| {
                if mabs == 0 {
                    return 0.0;
                }
                let y = |k: usize| sin[k].powi(mabs);
                let mut flux = 0.0;
                if j + 1 < nt {
                    flux += (y(j + 1) - y(j)) * face_sin[j + 1];
                }
                if j > 0 {
                    flux -= (y(j) - y(j - 1)) * face_sin[j];
                }
                flux / (vol[j] * dth * dth * y(j)) + (mabs * (mabs + 1)) as f64
            })
            .collect();
        let mut a_coef = Vec::with_capacity(spec.nr * nt);
        for i in 0..spec.nr {
            for s in &sin {
                a_coef.push(1.0 - delta[i] * a * a * s * s / (varpi[i] * varpi[i]));
            }
        }
        let b_coef = (0..spec.nr)
            .map(|i| C64::new(0.0, -4.0 * m * a * r[i] * m_phi as f64 / (varpi[i] * varpi[i])))
            .collect();
        Ok(WaveGrid { params, m_phi, spec, drs, dth, rstar, r, delta, varpi, varpi_half, theta, sin, face_sin, vol, m2_sin2, a_coef, b_coef })
    }

    pub fn nr(&self) -> usize {
        self.spec.nr
    }
    pub fn ntheta(&self) -> usize {
        self.spec.ntheta
    }
    pub fn len(&self) -> usize {
        self.spec.nr * self.spec.ntheta
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.spec.ntheta + j
    }

    fn mf(&self) -> f64 {
        self.m_phi as f64
    }

    /// `L ψ` at interior node `(i, j)`, `0 < i < N_r − 1`.
    fn spatial_at(&self, psi: &[C64], i: usize, j: usize) -> C64 {
        let nt = self.ntheta();
        let k = i * nt + j;
        let p = psi[k];
        let radial = (self.varpi_half[i] * (psi[k + nt] - p) - self.varpi_half[i - 1] * (p - psi[k - nt]))
            / (self.varpi[i] * self.drs * self.drs);
        self.angular_at(psi, i, j) * (self.delta[i] / (self.varpi[i] * self.varpi[i])) + radial
            + p * (self.params.a * self.params.a * self.mf() * self.mf() / (self.varpi[i] * self.varpi[i]))
    }

    /// `Δ_θ ψ − m² ψ / sin²θ` at `(i, j)`; face sines vanish on the axis.
    fn angular_at(&self, psi: &[C64], i: usize, j: usize) -> C64 {
        let nt = self.ntheta();
        let k = i * nt + j;
        let p = psi[k];
        let mut flux = ZERO;
        if j + 1 < nt {
            flux += (psi[k + 1] - p) * self.face_sin[j + 1];
        }
        if j > 0 {
            flux -= (p - psi[k - 1]) * self.face_sin[j];
        }
        flux / (self.vol[j] * self.dth * self.dth) - p * self.m2_sin2[j]
    }

    /// `Δ_θ ψ − m² cot²θ ψ`, the part of the Carter operator without `∂_t`.
    fn q_theta_at(&self, psi: &[C64], i: usize, j: usize) -> C64 {
        self.angular_at(psi, i, j) + psi[i * self.ntheta() + j] * (self.mf() * self.mf())
    }

    /// `∂_{r*}` at node `(i, j)`: central inside, one-sided second order at
    /// the ends.
    fn d_rstar(&self, f: &[C64], i: usize, j: usize) -> C64 {
        let nt = self.ntheta();
        let k = i * nt + j;
        let h = self.drs;
        if i == 0 {
            (f[k] * -3.0 + f[k + nt] * 4.0 - f[k + 2 * nt]) / (2.0 * h)
        } else if i == self.nr() - 1 {
            (f[k] * 3.0 - f[k - nt] * 4.0 + f[k - 2 * nt]) / (2.0 * h)
        } else {
            (f[k + nt] - f[k - nt]) / (2.0 * h)
        }
    }

    /// `∂_θ` at a cell centre; the ghost across a pole is `(−1)^m` times the
    /// mirrored cell.
    fn d_theta(&self, f: &[C64], i: usize, j: usize) -> C64 {
        let nt = self.ntheta();
        let k = i * nt + j;
        let parity = if self.m_phi.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let lo = if j == 0 { f[k] * parity } else { f[k - 1] };
        let hi = if j + 1 == nt { f[k] * parity } else { f[k + 1] };
        (hi - lo) / (2.0 * self.dth)
    }

    /// Gershgorin bound on the spectral radius of `A⁻¹ L` over interior rows.
    pub fn spectral_bound(&self) -> f64 {
        let nt = self.ntheta();
        let a = self.params.a;
        let m2 = self.mf() * self.mf();
        let mut rho: f64 = 0.0;
        for i in 1..self.nr() - 1 {
            let w2 = self.varpi[i] * self.varpi[i];
            let radial = 2.0 * (self.varpi_half[i] + self.varpi_half[i - 1]) / (self.varpi[i] * self.drs * self.drs);
            for j in 0..nt {
                let ang = 2.0 * (self.face_sin[j] + self.face_sin[j + 1]) / (self.vol[j] * self.dth * self.dth)
                    + self.m2_sin2[j];
                let row = radial + self.delta[i] / w2 * ang + a * a * m2 / w2;
                rho = rho.max(row / self.a_coef[i * nt + j]);
            }
        }
        rho
    }

    /// Largest stable step for the leapfrog update.
    pub fn max_dt(&self) -> f64 {
        2.0 / self.spectral_bound().sqrt()
    }
}

/// The state of the mode on one time slice.
#[derive(Clone, Debug)]
pub struct ModeField2p1 {
    pub grid: Arc<WaveGrid>,
    pub psi: Vec<C64>,
    pub psi_t: Vec<C64>,
    pub time: f64,
}

impl ModeField2p1 {
    pub fn new(grid: Arc<WaveGrid>, psi: Vec<C64>, psi_t: Vec<C64>) -> Result<Self> {
        if psi.len() != grid.len() || psi_t.len() != grid.len() {
            return Err(Error::GridMismatch(format!("expected {} values", grid.len())));
        }
        if psi.iter().chain(&psi_t).any(|z| !z.is_finite()) {
            return Err(Error::NonFinite { step: 0 });
        }
        Ok(ModeField2p1 { grid, psi, psi_t, time: 0.0 })
    }

    pub fn zeros(grid: Arc<WaveGrid>) -> Self {
        let n = grid.len();
        ModeField2p1 { grid, psi: vec![ZERO; n], psi_t: vec![ZERO; n], time: 0.0 }
    }

    pub fn from_fn(grid: Arc<WaveGrid>, f: impl Fn(f64, f64) -> (C64, C64)) -> Self {
        let mut psi = Vec::with_capacity(grid.len());
        let mut psi_t = Vec::with_capacity(grid.len());
        for i in 0..grid.nr() {
            for j in 0..grid.ntheta() {
                let (p, pt) = f(grid.rstar[i], grid.theta[j]);
                psi.push(p);
                psi_t.push(pt);
            }
        }
        ModeField2p1 { grid, psi, psi_t, time: 0.0 }
    }

    pub fn scaled(&self, s: f64) -> Self {
        ModeField2p1 {
            grid: self.grid.clone(),
            psi: self.psi.iter().map(|z| z * s).collect(),
            psi_t: self.psi_t.iter().map(|z| z * s).collect(),
            time: self.time,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.psi.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max_i |ψ(i, j)| / sin^{|m|}θ_j` on the first and last rows, relative
    /// to the largest value of `|ψ|`. Bounded for regular fields.
    pub fn axis_regularity(&self) -> f64 {
        let g = &self.grid;
        let nt = g.ntheta();
        let pw = g.sin[0].powi(g.m_phi.abs());
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..g.nr() {
            worst = worst.max(self.psi[i * nt].norm()).max(self.psi[i * nt + nt - 1].norm());
        }
        worst / (pw * scale)
    }
}

/// Associated Legendre profile `P_ℓ^{|m|}(cos θ)` up to normalisation, for
/// `ℓ ≤ 3`.
pub fn legendre_profile(ell: u32, m_phi: i32, theta: f64) -> Result<f64> {
    let (s, c) = (theta.sin(), theta.cos());
    let m = m_phi.unsigned_abs();
    Ok(match (ell, m) {
        (0, 0) => 1.0,
        (1, 0) => c,
        (1, 1) => s,
        (2, 0) => 0.5 * (3.0 * c * c - 1.0),
        (2, 1) => s * c,
        (2, 2) => s * s,
        (3, 0) => 0.5 * (5.0 * c * c * c - 3.0 * c),
        (3, 1) => s * (5.0 * c * c - 1.0),
        (3, 2) => s * s * c,
        (3, 3) => s * s * s,
        _ => return Err(Error::InvalidParameter(format!("no profile for ℓ = {ell}, m = {m_phi}"))),
    })
}

/// Initial data families, all Gaussian in `r*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Time symmetric pulse with a single angular profile.
    TimeSymmetric { center: f64, width: f64, ell: u32, amplitude: f64 },
    /// Pulse moving towards the horizon, `ψ_t = ∂_{r*} ψ`.
    Ingoing { center: f64, width: f64, ell: u32, amplitude: f64 },
    /// Superposition of two angular profiles with `ψ_t = ω ψ`.
    Mixed { center: f64, width: f64, omega: f64, amplitude: f64 },
}

impl InitialData {
    pub fn family_name(&self) -> &'static str {
        match self {
            InitialData::TimeSymmetric { .. } => "time_symmetric",
            InitialData::Ingoing { .. } => "ingoing",
            InitialData::Mixed { .. } => "mixed",
        }
    }

    pub fn standard_families(m_phi: i32) -> [InitialData; 3] {
        let ell = m_phi.unsigned_abs().max(2);
        [
            InitialData::TimeSymmetric { center: 10.0, width: 3.0, ell, amplitude: 1.0 },
            InitialData::Ingoing { center: 15.0, width: 3.0, ell, amplitude: 1.0 },
            InitialData::Mixed { center: 8.0, width: 3.0, omega: 0.3, amplitude: 1.0 },
        ]
    }

    pub fn sample(&self, grid: Arc<WaveGrid>) -> Result<ModeField2p1> {
        let m = grid.m_phi;
        let gauss = |rs: f64, c: f64, w: f64| (-(rs - c) * (rs - c) / (2.0 * w * w)).exp();
        let profile = |ell: u32| -> Result<Vec<f64>> { grid.theta.iter().map(|&t| legendre_profile(ell, m, t)).collect() };
        let field = match *self {
            InitialData::TimeSymmetric { center, width, ell, amplitude } => {
                check_width(width)?;
                let y = profile(ell)?;
                ModeField2p1::from_fn(grid.clone(), |rs, th| {
                    let j = theta_index(&grid, th);
                    (C64::new(amplitude * gauss(rs, center, width) * y[j], 0.0), ZERO)
                })
            }
            InitialData::Ingoing { center, width, ell, amplitude } => {
                check_width(width)?;
                let y = profile(ell)?;
                ModeField2p1::from_fn(grid.clone(), |rs, th| {
                    let j = theta_index(&grid, th);
                    let g = amplitude * gauss(rs, center, width) * y[j];
                    (C64::new(g, 0.0), C64::new(-g * (rs - center) / (width * width), 0.0))
                })
            }
            InitialData::Mixed { center, width, omega, amplitude } => {
                check_width(width)?;
                let l0 = m.unsigned_abs();
                let (y0, y1) = (profile(l0)?, profile(l0 + 1)?);
                ModeField2p1::from_fn(grid.clone(), |rs, th| {
                    let j = theta_index(&grid, th);
                    let g = amplitude * gauss(rs, center, width) * (y0[j] + 0.5 * y1[j]);
                    (C64::new(g, 0.0), C64::new(0.0, omega * g))
                })
            }
        };
        Ok(field)
    }
}

fn check_width(w: f64) -> Result<()> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("pulse width {w}")))
    }
}

fn theta_index(grid: &WaveGrid, th: f64) -> usize {
    ((th / grid.dth) as usize).min(grid.ntheta() - 1)
}

/// `L ψ` on all interior nodes (boundary rows are zero).
pub fn spatial_apply(grid: &WaveGrid, psi: &[C64]) -> Result<Vec<C64>> {
    if psi.len() != grid.len() {
        return Err(Error::GridMismatch("field length".into()));
    }
    let nt = grid.ntheta();
    let mut out = vec![ZERO; grid.len()];
    out.par_chunks_mut(nt).enumerate().for_each(|(i, row)| {
        if i > 0 && i + 1 < grid.nr() {
            for (j, o) in row.iter_mut().enumerate() {
                *o = grid.spatial_at(psi, i, j);
            }
        }
    });
    Ok(out)
}

/// `□ψ` on interior nodes from `ψ` and its first two time derivatives.
pub fn reduced_wave_apply(grid: &WaveGrid, psi: &[C64], psi_t: &[C64], psi_tt: &[C64]) -> Result<Vec<C64>> {
    if psi_t.len() != grid.len() || psi_tt.len() != grid.len() {
        return Err(Error::GridMismatch("time derivative length".into()));
    }
    let l = spatial_apply(grid, psi)?;
    let nt = grid.ntheta();
    let a = grid.params.a;
    Ok((0..grid.len())
        .map(|k| {
            let (i, j) = (k / nt, k % nt);
            if i == 0 || i + 1 == grid.nr() {
                return ZERO;
            }
            let w = grid.varpi[i];
            let sigma = grid.r[i] * grid.r[i] + a * a * grid.theta[j].cos().powi(2);
            let n = l[k] + grid.b_coef[i] * psi_t[k] - psi_tt[k] * grid.a_coef[k];
            n * (w * w / (grid.delta[i] * sigma))
        })
        .collect())
}

/// Carter operator `Q = Δ_θ + cot²θ ∂_φ² + a² sin²θ ∂_t²` with `∂_φ = i m`.
pub fn carter_q(grid: &WaveGrid, psi: &[C64], psi_tt: &[C64]) -> Result<Vec<C64>> {
    if psi.len() != grid.len() || psi_tt.len() != grid.len() {
        return Err(Error::GridMismatch("field length".into()));
    }
    let nt = grid.ntheta();
    let a2 = grid.params.a * grid.params.a;
    Ok((0..grid.len())
        .map(|k| {
            let (i, j) = (k / nt, k % nt);
            grid.q_theta_at(psi, i, j) + psi_tt[k] * (a2 * grid.sin[j] * grid.sin[j])
        })
        .collect())
}

/// `∂_t^{n_t} ∂_φ^{n_φ} Q^{n_Q}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    pub n_t: u32,
    pub n_phi: u32,
    pub n_q: u32,
}

impl Word {
    pub const fn new(n_t: u32, n_phi: u32, n_q: u32) -> Self {
        Word { n_t, n_phi, n_q }
    }
    pub fn order(&self) -> u32 {
        self.n_t + self.n_phi + 2 * self.n_q
    }
    /// Time derivatives of `ψ` needed to apply the word.
    pub fn time_order(&self) -> u32 {
        self.n_t + 2 * self.n_q
    }
}

pub const MAX_WORD_ORDER: u32 = 3;

/// All words of order exactly `n`.
pub fn words_of_order(n: u32) -> Result<Vec<Word>> {
    if n > MAX_WORD_ORDER {
        return Err(Error::InvalidParameter(format!("symmetry order {n} > {MAX_WORD_ORDER}")));
    }
    let mut out = Vec::new();
    for n_q in 0..=n / 2 {
        for n_t in (0..=n - 2 * n_q).rev() {
            out.push(Word::new(n_t, n - 2 * n_q - n_t, n_q));
        }
    }
    Ok(out)
}

/// Words of order at most `n`.
pub fn words_up_to(n: u32) -> Result<Vec<Word>> {
    let mut out = Vec::new();
    for k in 0..=n {
        out.extend(words_of_order(k)?);
    }
    Ok(out)
}

/// `ψ` and consecutive time derivatives on one slice.
#[derive(Clone, Debug)]
pub struct TimeDerivs {
    pub d: Vec<Vec<C64>>,
}

impl TimeDerivs {
    /// From five consecutive levels centred on the middle one.
    pub fn from_levels(levels: &[&[C64]], dt: f64) -> Result<Self> {
        if levels.len() != 5 {
            return Err(Error::TimeLevels { needed: 5, available: levels.len() });
        }
        let n = levels[2].len();
        let (l0, l1, l2, l3, l4) = (levels[0], levels[1], levels[2], levels[3], levels[4]);
        let mut d = vec![l2.to_vec(), vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
        for k in 0..n {
            d[1][k] = (l3[k] - l1[k]) / (2.0 * dt);
            d[2][k] = (l3[k] - l2[k] * 2.0 + l1[k]) / (dt * dt);
            d[3][k] = (l4[k] - l3[k] * 2.0 + l1[k] * 2.0 - l0[k]) / (2.0 * dt * dt * dt);
        }
        Ok(TimeDerivs { d })
    }

    /// Derivatives of `∂_t ψ`.
    pub fn shifted(&self) -> TimeDerivs {
        TimeDerivs { d: self.d[1..].to_vec() }
    }
}

/// `S ψ` for a word `S`.
pub fn symmetry_apply(grid: &WaveGrid, derivs: &TimeDerivs, word: Word) -> Result<Vec<C64>> {
    if word.order() > MAX_WORD_ORDER || word.n_q > 1 {
        return Err(Error::InvalidParameter(format!("unsupported word {word:?}")));
    }
    let need = word.time_order() as usize;
    if need >= derivs.d.len() {
        return Err(Error::TimeLevels { needed: need + 1, available: derivs.d.len() });
    }
    let phase = (I * grid.mf()).powu(word.n_phi);
    let base = &derivs.d[word.n_t as usize];
    let out = if word.n_q == 0 {
        base.iter().map(|z| z * phase).collect()
    } else {
        let q = carter_q(grid, base, &derivs.d[word.n_t as usize + 2])?;
        q.into_iter().map(|z| z * phase).collect()
    };
    Ok(out)
}

/// `|ψ|_n² = Σ_{j ≤ n} Σ_{S ∈ 𝕊_j} |S ψ|²` per node.
pub fn pointwise_norm(grid: &WaveGrid, derivs: &TimeDerivs, n: u32) -> Result<Vec<f64>> {
    let mut out = vec![0.0; grid.len()];
    for w in words_up_to(n)? {
        for (o, z) in out.iter_mut().zip(symmetry_apply(grid, derivs, w)?) {
            *o += z.norm_sqr();
        }
    }
    Ok(out)
}

/// Smooth cutoff equal to `0` on `[2.5M, 3.5M]` and `1` outside `[2.2M, 3.8M]`.
pub fn trapping_cutoff(r: f64, m: f64) -> f64 {
    let s = |x: f64| {
        let x = x.clamp(0.0, 1.0);
        x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    };
    let x = r / m;
    if x <= 3.0 {
        1.0 - s((x - 2.2) / 0.3)
    } else {
        s((x - 3.5) / 0.3)
    }
}

/// Word fields `S ψ` and `∂_t S ψ` for every `S ∈ 𝕊_{≤2}`, with weights.
struct WordFields {
    phi: Vec<Vec<C64>>,
    phi_t: Vec<Vec<C64>>,
    weight: Vec<f64>,
}

/// One field per word, weight one.
#[cfg(test)]
fn word_fields_literal(grid: &WaveGrid, derivs: &TimeDerivs) -> Result<WordFields> {
    let words = words_up_to(2)?;
    let sh = derivs.shifted();
    let phi = words.iter().map(|&w| symmetry_apply(grid, derivs, w)).collect::<Result<Vec<_>>>()?;
    let phi_t = words.iter().map(|&w| symmetry_apply(grid, &sh, w)).collect::<Result<Vec<_>>>()?;
    Ok(WordFields { weight: vec![1.0; phi.len()], phi, phi_t })
}

/// The same sums with `∂_φ = i m` folded into weights: the words
/// `1, ∂_φ, ∂_φ²` all act as multiples of `ψ`, and `∂_t, ∂_t∂_φ` as
/// multiples of `ψ_t`.
fn word_fields(grid: &WaveGrid, derivs: &TimeDerivs) -> Result<WordFields> {
    if derivs.d.len() < 4 {
        return Err(Error::TimeLevels { needed: 4, available: derivs.d.len() });
    }
    let m2 = grid.mf() * grid.mf();
    let d = &derivs.d;
    let q = carter_q(grid, &d[0], &d[2])?;
    let qt = carter_q(grid, &d[1], &d[3])?;
    Ok(WordFields {
        phi: vec![d[0].clone(), d[1].clone(), d[2].clone(), q],
        phi_t: vec![d[1].clone(), d[2].clone(), d[3].clone(), qt],
        weight: vec![1.0 + m2 + m2 * m2, 1.0 + m2, 1.0, 1.0],
    })
}

/// Energy and bulk densities integrated against `sinθ dr* dθ dφ`:
/// trapezoid in `r*`, midpoint in `θ`, summed row by row in a fixed order.
fn energy_and_bulk(grid: &WaveGrid, wf: &WordFields) -> (f64, f64) {
    let nr = grid.nr();
    let m2 = grid.mf() * grid.mf();
    let rows: Vec<(f64, f64)> = (0..nr)
        .into_par_iter()
        .map(|i| {
            let (w, d, r) = (grid.varpi[i], grid.delta[i], grid.r[i]);
            let chi = trapping_cutoff(r, grid.params.m);
            let (c_rad, c_zero, c_ang) = (d * w / r.powi(4), d / (w * r * r), chi / r * d / w);
            let (mut e, mut b) = (0.0, 0.0);
            for j in 0..grid.ntheta() {
                let k = grid.idx(i, j);
                let inv_s2 = 1.0 / (grid.sin[j] * grid.sin[j]);
                let (mut se, mut sb) = (0.0, 0.0);
                for ((p, pt), wgt) in wf.phi.iter().zip(&wf.phi_t).zip(&wf.weight) {
                    let dr = grid.d_rstar(p, i, j).norm_sqr();
                    let dth = grid.d_theta(p, i, j).norm_sqr();
                    let (p2, pt2) = (p[k].norm_sqr(), pt[k].norm_sqr());
                    let ang = dth + m2 * p2 * inv_s2;
                    se += wgt * (w * (pt2 + dr) + d / w * ang);
                    sb += wgt * (c_rad * dr + c_zero * p2 + c_ang * (pt2 + ang));
                }
                e += se * grid.sin[j];
                b += sb * grid.sin[j];
            }
            let wt = if i == 0 || i + 1 == nr { 0.5 } else { 1.0 };
            (e * wt, b * wt)
        })
        .collect();
    let scale = grid.drs * grid.dth * 2.0 * PI;
    let (e, b) = rows.iter().fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    (e * scale, b * scale)
}

/// Model energy of order three: the first-order energy of every `S ψ`,
/// `S ∈ 𝕊_{≤2}`, summed.
pub fn energy_model3(grid: &WaveGrid, derivs: &TimeDerivs) -> Result<f64> {
    Ok(energy_and_bulk(grid, &word_fields(grid, derivs)?).0)
}

/// Spatial integral of the Morawetz bulk density on one slice.
pub fn morawetz_bulk(grid: &WaveGrid, derivs: &TimeDerivs) -> Result<f64> {
    Ok(energy_and_bulk(grid, &word_fields(grid, derivs)?).1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub step: usize,
    pub time: f64,
    pub e_model3: f64,
    pub bulk_increment: f64,
    pub bulk_cumulative: f64,
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Fraction of the largest stable step.
    pub cfl: f64,
    /// Explicit step; overrides `cfl` but must itself be stable.
    pub dt: Option<f64>,
    /// Evaluate energies (needs two extra steps beyond the last one).
    pub diagnostics: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { cfl: 0.5, dt: None, diagnostics: true }
    }
}

/// Leapfrog evolution holding a window of consecutive time levels.
pub struct Evolver {
    grid: Arc<WaveGrid>,
    dt: f64,
    /// Oldest first; `newest` is the step index of the last entry.
    levels: VecDeque<Vec<C64>>,
    newest: i64,
    capacity: usize,
}

impl Evolver {
    /// Starts from `(ψ, ψ_t)` at step `0` with levels `−back ..= 1`,
    /// `back ≥ 1`, reached by stepping backwards.
    pub fn new(field: &ModeField2p1, opts: &EvolveOptions, back: usize, capacity: usize) -> Result<Self> {
        if back == 0 {
            return Err(Error::InvalidParameter("at least one level before the start is kept".into()));
        }
        let grid = field.grid.clone();
        let dt_max = grid.max_dt();
        let dt = match opts.dt {
            Some(dt) => dt,
            None => {
                if !(opts.cfl > 0.0 && opts.cfl < 1.0) {
                    return Err(Error::Cfl { cfl: opts.cfl, max_cfl: 1.0 });
                }
                opts.cfl * dt_max
            }
        };
        if !(dt > 0.0 && dt < dt_max) {
            return Err(Error::Cfl { cfl: dt / dt_max, max_cfl: 1.0 });
        }
        let mut ev = Evolver { grid: grid.clone(), dt, levels: VecDeque::new(), newest: 0, capacity: capacity.max(back + 2) };
        // Taylor start for ψ^{±1}
        let l0 = spatial_apply(&grid, &field.psi)?;
        let nt = grid.ntheta();
        let acc: Vec<C64> = (0..grid.len())
            .map(|k| (l0[k] + grid.b_coef[k / nt] * field.psi_t[k]) / grid.a_coef[k])
            .collect();
        let taylor = |s: f64| -> Vec<C64> {
            (0..grid.len()).map(|k| field.psi[k] + field.psi_t[k] * (s * dt) + acc[k] * (0.5 * dt * dt)).collect()
        };
        let mut plus = taylor(1.0);
        let mut minus = taylor(-1.0);
        ev.close_boundaries(&mut plus, &field.psi, 1.0);
        ev.close_boundaries(&mut minus, &field.psi, -1.0);
        ev.levels.push_back(minus);
        ev.levels.push_back(field.psi.clone());
        ev.levels.push_back(plus);
        ev.newest = 1;
        for _ in 1..back {
            let next = ev.step_from(&ev.levels[0], &ev.levels[1], -1.0)?;
            ev.levels.push_front(next);
        }
        Ok(ev)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn grid(&self) -> &Arc<WaveGrid> {
        &self.grid
    }
    pub fn newest_step(&self) -> i64 {
        self.newest
    }

    /// Level at step `n`, if still held.
    pub fn level(&self, n: i64) -> Option<&[C64]> {
        let oldest = self.newest - self.levels.len() as i64 + 1;
        if n < oldest || n > self.newest {
            return None;
        }
        Some(&self.levels[(n - oldest) as usize])
    }

    /// One leapfrog step from `cur` with `other` the level on the far side;
    /// `sigma = +1` steps forward, `−1` backward.
    fn step_from(&self, cur: &[C64], other: &[C64], sigma: f64) -> Result<Vec<C64>> {
        let g = &*self.grid;
        let nt = g.ntheta();
        let dt = self.dt;
        let mut out = vec![ZERO; g.len()];
        out.par_chunks_mut(nt).enumerate().for_each(|(i, row)| {
            if i == 0 || i + 1 == g.nr() {
                return;
            }
            let b = g.b_coef[i] * (sigma / (2.0 * dt));
            for (j, o) in row.iter_mut().enumerate() {
                let k = i * nt + j;
                let a = g.a_coef[k] / (dt * dt);
                let rhs = g.spatial_at(cur, i, j) + (cur[k] * 2.0 - other[k]) * a - b * other[k];
                *o = rhs / (a - b);
            }
        });
        self.close_boundaries(&mut out, cur, sigma);
        Ok(out)
    }

    /// Box-scheme boundary values on rows `0` and `N_r − 1` of `new`, given
    /// the adjacent level `known`.
    fn close_boundaries(&self, new: &mut [C64], known: &[C64], sigma: f64) {
        let g = &*self.grid;
        let nt = g.ntheta();
        let (dt, h) = (self.dt, g.drs);
        let mu = I * (g.mf() * g.params.omega_horizon());
        let ct = sigma / (2.0 * dt);
        let cr = 1.0 / (2.0 * h);
        for j in 0..nt {
            // (∂_t − ∂_{r*} + i m Ω_H) ψ = 0 between rows 0 and 1
            let (k0, k1) = (j, nt + j);
            let (u1, kn0, kn1) = (new[k1], known[k0], known[k1]);
            let lhs = ct + cr + mu * 0.25;
            let rhs = -(u1 - kn0 - kn1) * ct + (u1 + kn1 - kn0) * cr - mu * 0.25 * (u1 + kn0 + kn1);
            new[k0] = rhs / lhs;
        }
        let n = g.nr();
        let rm = 0.5 * (g.r[n - 1] + g.r[n - 2]);
        let dm = 0.5 * (g.delta[n - 1] + g.delta[n - 2]);
        let wm = 0.5 * (g.varpi[n - 1] + g.varpi[n - 2]);
        let kappa = dm / (wm * rm);
        for j in 0..nt {
            // (∂_t + ∂_{r*} + Δ/(ϖ r)) ψ = 0 between rows N−2 and N−1
            let (kb, kc) = ((n - 1) * nt + j, (n - 2) * nt + j);
            let (uc, knb, knc) = (new[kc], known[kb], known[kc]);
            let lhs = ct + cr + 0.25 * kappa;
            let rhs = -(uc - knb - knc) * ct - (knb - uc - knc) * cr - (uc + knb + knc) * (0.25 * kappa);
            new[kb] = rhs / lhs;
        }
    }

    /// Computes the next level.
    pub fn advance(&mut self) -> Result<()> {
        let n = self.levels.len();
        let next = self.step_from(&self.levels[n - 1], &self.levels[n - 2], 1.0)?;
        self.newest += 1;
        if next.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite { step: self.newest as usize });
        }
        self.levels.push_back(next);
        while self.levels.len() > self.capacity {
            self.levels.pop_front();
        }
        Ok(())
    }

    /// Time derivatives at step `n`, which needs levels `n−2 ..= n+2`.
    pub fn derivs_at(&self, n: i64) -> Result<TimeDerivs> {
        let lv: Option<Vec<&[C64]>> = (n - 2..=n + 2).map(|s| self.level(s)).collect();
        let lv = lv.ok_or(Error::TimeLevels { needed: 5, available: self.levels.len() })?;
        TimeDerivs::from_levels(&lv, self.dt)
    }

    /// Field and time derivative at step `n`.
    pub fn field_at(&self, n: i64) -> Result<ModeField2p1> {
        let (Some(p), Some(a), Some(b)) = (self.level(n), self.level(n - 1), self.level(n + 1)) else {
            return Err(Error::TimeLevels { needed: 3, available: self.levels.len() });
        };
        let psi_t = a.iter().zip(b).map(|(x, y)| (y - x) / (2.0 * self.dt)).collect();
        Ok(ModeField2p1 { grid: self.grid.clone(), psi: p.to_vec(), psi_t, time: n as f64 * self.dt })
    }
}

/// Number of steps and step size reaching `t_final` exactly with
/// `dt ≤ cfl · dt_max`.
pub fn steps_to(grid: &WaveGrid, t_final: f64, cfl: f64) -> Result<(usize, f64)> {
    if !(cfl > 0.0 && cfl < 1.0) {
        return Err(Error::Cfl { cfl, max_cfl: 1.0 });
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("final time {t_final}")));
    }
    let n = (t_final / (cfl * grid.max_dt())).ceil() as usize;
    Ok((n, t_final / n as f64))
}

/// Evolves `n_steps` steps. With diagnostics on, one report per step
/// `0 ..= n_steps` is returned.
pub fn evolve(field: &ModeField2p1, n_steps: usize, opts: &EvolveOptions) -> Result<(ModeField2p1, Vec<EnergyReport>)> {
    let mut ev = Evolver::new(field, opts, 2, 5)?;
    let grid = ev.grid.clone();
    let dt = ev.dt;
    let mut reports = Vec::new();
    let mut prev_bulk = 0.0;
    let mut cumulative = 0.0;
    let mut e0 = 0.0;
    let last = n_steps as i64 + if opts.diagnostics { 2 } else { 1 };
    while ev.newest < last {
        ev.advance()?;
        if opts.diagnostics && ev.newest >= 2 {
            let n = ev.newest - 2;
            let wf = word_fields(&grid, &ev.derivs_at(n)?)?;
            let (e, b) = energy_and_bulk(&grid, &wf);
            if !(e.is_finite() && b.is_finite()) {
                return Err(Error::NonFinite { step: n as usize });
            }
            let inc = if n == 0 { 0.0 } else { 0.5 * dt * (prev_bulk + b) };
            if n == 0 {
                e0 = e;
            }
            cumulative += inc;
            prev_bulk = b;
            let ratio = if e0 > 0.0 { cumulative / e0 } else { 0.0 };
            reports.push(EnergyReport {
                step: n as usize,
                time: n as f64 * dt,
                e_model3: e,
                bulk_increment: inc,
                bulk_cumulative: cumulative,
                ratio,
            });
        }
    }
    Ok((ev.field_at(n_steps as i64)?, reports))
}

/// Scalar-field stress tensor `T_ab = Re(∂_a f ∂_b f̄) − ½ g_ab g^{cd} Re(∂_c f ∂_d f̄)`
/// from covariant gradients at a point.
pub fn stress_from_gradient(g: &[[f64; 4]; 4], g_inv: &[[f64; 4]; 4], df: &[C64; 4]) -> [[f64; 4]; 4] {
    let mut norm = 0.0;
    for c in 0..4 {
        for d in 0..4 {
            norm += g_inv[c][d] * (df[c] * df[d].conj()).re;
        }
    }
    std::array::from_fn(|a| std::array::from_fn(|b| (df[a] * df[b].conj()).re - 0.5 * g[a][b] * norm))
}

/// `T[f, g] = ¼ (T[f + g] − T[f − g])`.
pub fn polarized_from_gradients(g: &[[f64; 4]; 4], g_inv: &[[f64; 4]; 4], df: &[C64; 4], dg: &[C64; 4]) -> [[f64; 4]; 4] {
    let plus: [C64; 4] = std::array::from_fn(|a| df[a] + dg[a]);
    let minus: [C64; 4] = std::array::from_fn(|a| df[a] - dg[a]);
    let tp = stress_from_gradient(g, g_inv, &plus);
    let tm = stress_from_gradient(g, g_inv, &minus);
    std::array::from_fn(|a| std::array::from_fn(|b| 0.25 * (tp[a][b] - tm[a][b])))
}

/// Time window used for currents: word fields need `∂_t` of `S ψ`, so a
/// current at step `n` needs levels `n−2 ..= n+2` and its divergence needs
/// `n−3 ..= n+3`.
pub struct CurrentTerm<'a> {
    pub left: Word,
    pub right: Word,
    /// Contravariant `X^b(r, θ)`.
    pub vector: &'a (dyn Fn(f64, f64) -> [f64; 4] + Sync),
}

fn bl_gradient(grid: &WaveGrid, phi: &[C64], phi_t: &[C64], i: usize, j: usize) -> [C64; 4] {
    let k = grid.idx(i, j);
    [
        phi_t[k],
        grid.d_rstar(phi, i, j) * (grid.varpi[i] / grid.delta[i]),
        grid.d_theta(phi, i, j),
        phi[k] * I * grid.mf(),
    ]
}

/// Polarized stress `T_ab[S_a ψ, S_b ψ]` at node `(i, j)` of step `n`.
pub fn polarized_stress(ev: &Evolver, n: i64, left: Word, right: Word, i: usize, j: usize) -> Result<TensorValue> {
    let grid = ev.grid();
    if i >= grid.nr() || j >= grid.ntheta() {
        return Err(Error::GridMismatch(format!("node ({i}, {j}) outside the grid")));
    }
    let d = ev.derivs_at(n)?;
    let sh = d.shifted();
    let (fl, flt) = (symmetry_apply(grid, &d, left)?, symmetry_apply(grid, &sh, left)?);
    let (fr, frt) = (symmetry_apply(grid, &d, right)?, symmetry_apply(grid, &sh, right)?);
    let met = metric_data(&grid.params, &[0.0, grid.r[i], grid.theta[j], 0.0])?;
    let t = polarized_from_gradients(
        &met.g,
        &met.g_inv,
        &bl_gradient(grid, &fl, &flt, i, j),
        &bl_gradient(grid, &fr, &frt, i, j),
    );
    Ok(TensorValue::from_real2(Chart::BoyerLindquist, [Variance::Down, Variance::Down], &t))
}

/// `J_a = Σ T_ab[S_a ψ, S_b ψ] X^b` at every node of step `n`.
pub fn assemble_current(ev: &Evolver, n: i64, terms: &[CurrentTerm<'_>]) -> Result<Vec<[f64; 4]>> {
    let grid = ev.grid().clone();
    let d = ev.derivs_at(n)?;
    let sh = d.shifted();
    let mut fields = Vec::with_capacity(terms.len());
    for t in terms {
        fields.push((
            symmetry_apply(&grid, &d, t.left)?,
            symmetry_apply(&grid, &sh, t.left)?,
            symmetry_apply(&grid, &d, t.right)?,
            symmetry_apply(&grid, &sh, t.right)?,
        ));
    }
    let nt = grid.ntheta();
    let mut out = vec![[0.0; 4]; grid.len()];
    out.par_chunks_mut(nt).enumerate().for_each(|(i, row)| {
        for (j, o) in row.iter_mut().enumerate() {
            let met = crate::kerr::metric_data_unchecked(&grid.params, grid.r[i], grid.theta[j]);
            for (t, (fl, flt, fr, frt)) in terms.iter().zip(&fields) {
                let tt = polarized_from_gradients(
                    &met.g,
                    &met.g_inv,
                    &bl_gradient(&grid, fl, flt, i, j),
                    &bl_gradient(&grid, fr, frt, i, j),
                );
                let x = (t.vector)(grid.r[i], grid.theta[j]);
                for a in 0..4 {
                    for b in 0..4 {
                        o[a] += tt[a][b] * x[b];
                    }
                }
            }
        }
    });
    Ok(out)
}

/// `∇^a J_a` at step `n` on nodes at least two rows and one cell from the
/// edges (zero elsewhere). Needs levels `n−3 ..= n+3`.
pub fn current_divergence(ev: &Evolver, n: i64, terms: &[CurrentTerm<'_>]) -> Result<Vec<f64>> {
    let grid = ev.grid().clone();
    let jm = assemble_current(ev, n - 1, terms)?;
    let j0 = assemble_current(ev, n, terms)?;
    let jp = assemble_current(ev, n + 1, terms)?;
    let nt = grid.ntheta();
    let a = grid.params.a;
    let sqrt_g = |i: usize, j: usize| (grid.r[i] * grid.r[i] + a * a * grid.theta[j].cos().powi(2)) * grid.sin[j];
    let up = |jv: &[f64; 4], i: usize, j: usize, c: usize| {
        let met = crate::kerr::metric_data_unchecked(&grid.params, grid.r[i], grid.theta[j]);
        (0..4).map(|d| met.g_inv[c][d] * jv[d]).sum::<f64>()
    };
    let dt = ev.dt();
    let mut out = vec![0.0; grid.len()];
    for i in 2..grid.nr() - 2 {
        for j in 1..nt - 1 {
            let k = grid.idx(i, j);
            let dtime = sqrt_g(i, j) * (up(&jp[k], i, j, 0) - up(&jm[k], i, j, 0)) / (2.0 * dt);
            let drad = (sqrt_g(i + 1, j) * up(&j0[k + nt], i + 1, j, 1) - sqrt_g(i - 1, j) * up(&j0[k - nt], i - 1, j, 1))
                / (2.0 * grid.drs)
                * (grid.varpi[i] / grid.delta[i]);
            let dth = (sqrt_g(i, j + 1) * up(&j0[k + 1], i, j + 1, 2) - sqrt_g(i, j - 1) * up(&j0[k - 1], i, j - 1, 2))
                / (2.0 * grid.dth);
            out[k] = (dtime + drad + dth) / sqrt_g(i, j);
        }
    }
    Ok(out)
}

/// Analytic test field `f(t, r, θ) e^{i m φ}` for pointwise operator checks.
pub type TestField<'a> = &'a (dyn Fn(f64, f64, f64) -> C64 + Sync);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CommutatorSample {
    /// `|[Q, Σ□] ψ|`.
    pub sigma_box: f64,
    /// `|[Q, □] ψ|`.
    pub plain_box: f64,
    pub field: f64,
}

/// Pointwise `□` with second-order central differences in `(t, r, θ)` and
/// `∂_φ = i m`, built from the metric and Christoffel symbols.
#[cfg(test)]
fn box_fd(params: &KerrParams, m_phi: i32, f: &dyn Fn(f64, f64, f64) -> C64, x: [f64; 3], h: f64) -> C64 {
    let met = crate::kerr::metric_data_unchecked(params, x[1], x[2]);
    let im = I * m_phi as f64;
    let at = |dx: [f64; 3]| f(x[0] + dx[0], x[1] + dx[1], x[2] + dx[2]);
    let e = |k: usize, s: f64| {
        let mut d = [0.0; 3];
        d[k] = s;
        d
    };
    let f0 = at([0.0; 3]);
    let mut first = [ZERO; 4];
    for k in 0..3 {
        first[k] = (at(e(k, h)) - at(e(k, -h))) / (2.0 * h);
    }
    first[3] = f0 * im;
    let mut second = [[ZERO; 4]; 4];
    for a in 0..3 {
        second[a][a] = (at(e(a, h)) - f0 * 2.0 + at(e(a, -h))) / (h * h);
        for b in a + 1..3 {
            let mut pp = [0.0; 3];
            pp[a] = h;
            pp[b] = h;
            let mut pm = pp;
            pm[b] = -h;
            let mut mp = pp;
            mp[a] = -h;
            let mm = [-pp[0], -pp[1], -pp[2]];
            let v = (at(pp) - at(pm) - at(mp) + at(mm)) / (4.0 * h * h);
            second[a][b] = v;
            second[b][a] = v;
        }
        second[a][3] = first[a] * im;
        second[3][a] = second[a][3];
    }
    second[3][3] = f0 * (im * im);
    let mut s = ZERO;
    for a in 0..4 {
        for b in 0..4 {
            let gi = met.g_inv[a][b];
            if gi == 0.0 {
                continue;
            }
            let mut term = second[a][b];
            for (c, fc) in first.iter().enumerate() {
                term -= fc * met.christoffel[c][a][b];
            }
            s += term * gi;
        }
    }
    s
}

/// Pointwise `□ = |g|^{-1/2} ∂_a (|g|^{1/2} g^{ab} ∂_b)` with staggered
/// differences in `r` and `θ` and central differences in `t`.
fn box_div_fd(params: &KerrParams, m_phi: i32, f: &dyn Fn(f64, f64, f64) -> C64, x: [f64; 3], h: f64) -> C64 {
    let (t, r, th) = (x[0], x[1], x[2]);
    let (m, a) = (params.m, params.a);
    let im = I * m_phi as f64;
    let f0 = f(t, r, th);
    let gi = crate::kerr::metric_inv(m, a, r, th);
    let s = th.sin();
    let sigma = r * r + a * a * th.cos().powi(2);
    let sqrt_g = sigma * s;
    let delta = |r: f64| r * r - 2.0 * m * r + a * a;
    let ftt = (f(t + h, r, th) - f0 * 2.0 + f(t - h, r, th)) / (h * h);
    let ft = (f(t + h, r, th) - f(t - h, r, th)) / (2.0 * h);
    // |g|^{1/2} g^{rr} = Δ sinθ and |g|^{1/2} g^{θθ} = sinθ
    let radial = ((f(t, r + h, th) - f0) * delta(r + 0.5 * h) - (f0 - f(t, r - h, th)) * delta(r - 0.5 * h)) * (s / (h * h));
    let polar = ((f(t, r, th + h) - f0) * (th + 0.5 * h).sin() - (f0 - f(t, r, th - h)) * (th - 0.5 * h).sin()) / (h * h);
    let rest = (ftt * gi[0][0] + ft * im * (2.0 * gi[0][3]) + f0 * (im * im) * gi[3][3]) * sqrt_g;
    (radial + polar + rest) / sqrt_g
}

/// Pointwise `Q` with central differences in `θ` and `t`.
fn q_fd(a: f64, m_phi: i32, f: &dyn Fn(f64, f64, f64) -> C64, x: [f64; 3], h: f64) -> C64 {
    let (t, r, th) = (x[0], x[1], x[2]);
    let f0 = f(t, r, th);
    let (fp, fm) = (f(t, r, th + h), f(t, r, th - h));
    let ang = (fp - f0 * 2.0 + fm) / (h * h) + (fp - fm) / (2.0 * h) * (th.cos() / th.sin());
    let ftt = (f(t + h, r, th) - f0 * 2.0 + f(t - h, r, th)) / (h * h);
    let cot2 = (th.cos() / th.sin()).powi(2);
    ang - f0 * (m_phi as f64 * m_phi as f64 * cot2) + ftt * (a * a * th.sin().powi(2))
}

/// `[Q, Σ□] ψ` and `[Q, □] ψ` at `x = (t, r, θ)` by nested differences with
/// step `h`. `□` is taken in divergence form and `Q` in expanded form, so the
/// discrete commutator is a genuine `O(h²)` consistency error.
pub fn commutator_residual(params: &KerrParams, m_phi: i32, field: TestField<'_>, x: [f64; 3], h: f64) -> Result<CommutatorSample> {
    params.check(&[x[0], x[1], x[2], 0.0])?;
    if !(h > 0.0) || x[1] - 2.0 * h <= params.r_plus() || x[2] - 2.0 * h <= 0.0 || x[2] + 2.0 * h >= PI {
        return Err(Error::InvalidParameter(format!("step {h} leaves the domain at {x:?}")));
    }
    let a = params.a;
    let sigma = |r: f64, th: f64| r * r + a * a * th.cos().powi(2);
    let sbox = |t: f64, r: f64, th: f64| box_div_fd(params, m_phi, field, [t, r, th], h) * sigma(r, th);
    let pbox = |t: f64, r: f64, th: f64| box_div_fd(params, m_phi, field, [t, r, th], h);
    let qf = |t: f64, r: f64, th: f64| q_fd(a, m_phi, field, [t, r, th], h);
    let q_sbox = q_fd(a, m_phi, &sbox, x, h);
    let sbox_q = box_div_fd(params, m_phi, &qf, x, h) * sigma(x[1], x[2]);
    let q_pbox = q_fd(a, m_phi, &pbox, x, h);
    let pbox_q = box_div_fd(params, m_phi, &qf, x, h);
    Ok(CommutatorSample {
        sigma_box: (q_sbox - sbox_q).norm(),
        plain_box: (q_pbox - pbox_q).norm(),
        field: field(x[0], x[1], x[2]).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, m_phi: i32, nr: usize, nth: usize) -> Arc<WaveGrid> {
        let k = KerrParams::new(1.0, a).unwrap();
        Arc::new(WaveGrid::new(k, m_phi, GridSpec { nr, ntheta: nth, rstar_min: -80.0, rstar_max: 200.0 }).unwrap())
    }

    #[test]
    fn tortoise_round_trip_and_schwarzschild_form() {
        for a in [0.0, 0.5, 0.9] {
            let k = KerrParams::new(1.0, a).unwrap();
            for rs in [-80.0, -10.0, 0.0, 3.0, 50.0, 400.0] {
                let x = inverse_tortoise_gap(&k, rs).unwrap();
                assert!((tortoise_from_gap(&k, x) - rs).abs() < 1e-10 * rs.abs().max(1.0), "{a} {rs}");
            }
        }
        let k = KerrParams::new(1.0, 0.0).unwrap();
        let r = 7.0_f64;
        assert!((tortoise(&k, r).unwrap() - (r + 2.0 * (r / 2.0 - 1.0).ln())).abs() < 1e-14);
    }

    #[test]
    fn tortoise_derivative_is_varpi_over_delta() {
        let k = KerrParams::new(1.0, 0.7).unwrap();
        let (r, h) = (4.0, 1e-5);
        let d = (tortoise(&k, r + h).unwrap() - tortoise(&k, r - h).unwrap()) / (2.0 * h);
        let want = (r * r + 0.49) / (r * r - 2.0 * r + 0.49);
        assert!((d - want).abs() < 1e-8);
    }

    #[test]
    fn words_of_second_order() {
        let w = words_of_order(2).unwrap();
        assert_eq!(w.len(), 4);
        assert!(w.contains(&Word::new(0, 0, 1)));
        assert_eq!(words_of_order(1).unwrap(), vec![Word::new(1, 0, 0), Word::new(0, 1, 0)]);
        assert!(words_of_order(4).is_err());
    }

    #[test]
    fn carter_operator_on_legendre_profiles() {
        let g = grid(0.6, 0, 32, 64);
        let psi: Vec<C64> = (0..g.len()).map(|k| C64::new(g.theta[k % g.ntheta()].cos(), 0.0)).collect();
        let q = carter_q(&g, &psi, &vec![ZERO; g.len()]).unwrap();
        let err = (0..g.len()).map(|k| (q[k] + psi[k] * 2.0).norm()).fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");
        let g1 = grid(0.6, 1, 32, 64);
        let psi: Vec<C64> = (0..g1.len()).map(|k| C64::new(g1.sin[k % g1.ntheta()], 0.0)).collect();
        let q = carter_q(&g1, &psi, &vec![ZERO; g1.len()]).unwrap();
        let err = (0..g1.len()).map(|k| (q[k] + psi[k]).norm()).fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");
    }

    #[test]
    fn static_axisymmetric_second_order_norm() {
        let g = grid(0.3, 0, 32, 128);
        let psi: Vec<C64> = (0..g.len()).map(|k| C64::new(g.theta[k % g.ntheta()].cos(), 0.0)).collect();
        let zero = vec![ZERO; g.len()];
        let d = TimeDerivs { d: vec![psi.clone(), zero.clone(), zero.clone(), zero] };
        let n2 = pointwise_norm(&g, &d, 2).unwrap();
        let n0 = pointwise_norm(&g, &d, 0).unwrap();
        for k in 0..g.len() {
            let c2 = psi[k].re * psi[k].re;
            assert!((n2[k] - 5.0 * c2).abs() < 2e-3);
            assert_eq!(n0[k], c2);
        }
    }

    #[test]
    fn constant_field_is_annihilated() {
        let g = grid(0.5, 0, 64, 16);
        let one = vec![C64::new(1.0, 0.0); g.len()];
        let zero = vec![ZERO; g.len()];
        let b = reduced_wave_apply(&g, &one, &zero, &zero).unwrap();
        assert!(b.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn schwarzschild_reduction_matches_regge_wheeler() {
        // L (u/r P_ℓ) = (u'' − V_ℓ u) P_ℓ / r with V_ℓ = f (ℓ(ℓ+1)/r² + 2M/r³)
        let err = |nr: usize| {
            let k = KerrParams::new(1.0, 0.0).unwrap();
            let g = WaveGrid::new(k, 0, GridSpec { nr, ntheta: 8, rstar_min: -20.0, rstar_max: 40.0 }).unwrap();
            let u = |rs: f64| (-(rs - 5.0) * (rs - 5.0) / 8.0).exp();
            let upp = |rs: f64| u(rs) * (((rs - 5.0) / 4.0).powi(2) - 0.25);
            let ell = 2.0;
            let psi: Vec<C64> = (0..g.len())
                .map(|kk| {
                    let (i, j) = (kk / 8, kk % 8);
                    C64::new(u(g.rstar[i]) / g.r[i] * legendre_profile(2, 0, g.theta[j]).unwrap(), 0.0)
                })
                .collect();
            let l = spatial_apply(&g, &psi).unwrap();
            // compare the radial part by projecting out the exact angular eigenvalue
            let mut worst: f64 = 0.0;
            for i in 1..nr - 1 {
                let r = g.r[i];
                let f = 1.0 - 2.0 / r;
                let v = f * (ell * (ell + 1.0) / (r * r) + 2.0 / (r * r * r));
                let want = (upp(g.rstar[i]) - v * u(g.rstar[i])) / r;
                let j = 3;
                let y = legendre_profile(2, 0, g.theta[j]).unwrap();
                let ang = g.angular_at(&psi, i, j) / psi[i * 8 + j] * -1.0;
                // replace the discrete angular eigenvalue with the exact one
                let corr = (g.delta[i] / (g.varpi[i] * g.varpi[i])) * (ang - 6.0) * psi[i * 8 + j];
                let got = (l[i * 8 + j] + corr) / y;
                worst = worst.max((got.re - want).abs());
            }
            worst
        };
        let (e1, e2) = (err(601), err(1201));
        assert!(e2 < 1e-4, "{e2}");
        assert!((e1 / e2).log2() > 1.9, "{e1} {e2}");
    }

    #[test]
    fn zero_data_stays_zero_and_cfl_is_enforced() {
        let g = grid(0.5, 1, 64, 8);
        let f = ModeField2p1::zeros(g.clone());
        let (out, rep) = evolve(&f, 10, &EvolveOptions::default()).unwrap();
        assert_eq!(out.max_abs(), 0.0);
        assert!(rep.iter().all(|r| r.e_model3 == 0.0 && r.ratio == 0.0));
        let bad = EvolveOptions { cfl: 1.2, ..Default::default() };
        assert!(matches!(evolve(&f, 1, &bad), Err(Error::Cfl { .. })));
    }

    #[test]
    fn evolution_is_linear() {
        let g = grid(0.1, 1, 128, 8);
        let f = InitialData::standard_families(1)[2].sample(g).unwrap();
        let opts = EvolveOptions { diagnostics: false, ..Default::default() };
        let (a, _) = evolve(&f, 40, &opts).unwrap();
        let (b, _) = evolve(&f.scaled(2.0), 40, &opts).unwrap();
        let err = a.psi.iter().zip(&b.psi).map(|(x, y)| (y - x * 2.0).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-13 * a.max_abs().max(1.0), "{err}");
    }

    #[test]
    fn cutoff_has_the_stated_plateaus() {
        for r in [2.5, 3.0, 3.5] {
            assert_eq!(trapping_cutoff(r, 1.0), 0.0);
        }
        for r in [1.5, 2.2, 3.8, 10.0] {
            assert_eq!(trapping_cutoff(r, 1.0), 1.0);
        }
        let c = trapping_cutoff(2.35, 1.0);
        assert!(c > 0.0 && c < 1.0);
    }

    #[test]
    fn commutator_with_sigma_box_vanishes_under_refinement() {
        let k = KerrParams::new(1.0, 0.5).unwrap();
        let f = |t: f64, r: f64, th: f64| C64::new((-(r - 6.0) * (r - 6.0) / 8.0).exp() * th.cos() * (0.4 * t).cos(), 0.0);
        let x = [0.3, 5.0, 1.1];
        let a = commutator_residual(&k, 0, &f, x, 0.1).unwrap();
        let b = commutator_residual(&k, 0, &f, x, 0.05).unwrap();
        assert!((a.sigma_box / b.sigma_box).log2() > 1.8);
        assert!(b.plain_box > 100.0 * b.sigma_box);
    }

    #[test]
    fn polarization_identity() {
        let k = KerrParams::new(1.0, 0.5).unwrap();
        let met = metric_data(&k, &[0.0, 5.0, 1.0, 0.0]).unwrap();
        let df = [C64::new(0.3, 0.1), C64::new(-0.2, 0.5), C64::new(0.7, 0.0), C64::new(0.0, 1.1)];
        let dg = [C64::new(1.0, -0.4), C64::new(0.2, 0.2), C64::new(-0.1, 0.3), C64::new(0.5, 0.0)];
        let same = polarized_from_gradients(&met.g, &met.g_inv, &df, &df);
        let t = stress_from_gradient(&met.g, &met.g_inv, &df);
        let fg = polarized_from_gradients(&met.g, &met.g_inv, &df, &dg);
        let gf = polarized_from_gradients(&met.g, &met.g_inv, &dg, &df);
        for a in 0..4 {
            for b in 0..4 {
                assert!((same[a][b] - t[a][b]).abs() < 1e-14);
                assert!((fg[a][b] - gf[a][b]).abs() < 1e-13);
                assert!((fg[a][b] - fg[b][a]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn christoffel_form_commutes_exactly_with_expanded_q() {
        // both stencils separate in (r, θ), so the discrete commutator is round-off
        let k = KerrParams::new(1.0, 0.5).unwrap();
        let f = |t: f64, r: f64, th: f64| C64::new((-(r - 6.0) * (r - 6.0) / 8.0).exp() * th.cos() * (0.4 * t).cos(), 0.0);
        let x = [0.3, 5.0, 1.1];
        let h = 0.05;
        let sigma = |r: f64, th: f64| r * r + 0.25 * th.cos().powi(2);
        let sbox = |t: f64, r: f64, th: f64| box_fd(&k, 0, &f, [t, r, th], h) * sigma(r, th);
        let qf = |t: f64, r: f64, th: f64| q_fd(0.5, 0, &f, [t, r, th], h);
        let c = q_fd(0.5, 0, &sbox, x, h) - box_fd(&k, 0, &qf, x, h) * sigma(x[1], x[2]);
        assert!(c.norm() < 1e-10);
    }

    #[test]
    fn divergence_and_christoffel_forms_agree() {
        let k = KerrParams::new(1.0, 0.5).unwrap();
        let f = |t: f64, r: f64, th: f64| C64::new(r.sin() * th.sin().powi(2), 0.2 * t) * (-0.1 * r).exp();
        let x = [0.3, 5.0, 1.1];
        let d = |h: f64| (box_div_fd(&k, 2, &f, x, h) - box_fd(&k, 2, &f, x, h)).norm();
        assert!((d(0.02) / d(0.01)).log2() > 1.9);
    }

    #[test]
    fn folded_word_sums_match_the_literal_enumeration() {
        let g = grid(0.4, 2, 64, 16);
        let n = g.len();
        let mk = |s: f64| -> Vec<C64> { (0..n).map(|k| C64::new((k as f64 * s).sin(), (k as f64 * 0.37 * s).cos()) * g.sin[k % 16].powi(2)).collect() };
        let d = TimeDerivs { d: vec![mk(0.1), mk(0.2), mk(0.3), mk(0.4)] };
        let (e1, b1) = energy_and_bulk(&g, &word_fields(&g, &d).unwrap());
        let (e2, b2) = energy_and_bulk(&g, &word_fields_literal(&g, &d).unwrap());
        assert!((e1 - e2).abs() < 1e-12 * e2 && (b1 - b2).abs() < 1e-12 * b2);
    }
}
