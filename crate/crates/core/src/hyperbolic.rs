//! Wave and Dirac equations on the cylinder `R × S¹` (circumference 2π).
//!
//! The wave operator is `P = ∂_t² − ∇_x² + V − i a'(t) s` with the twisted
//! derivative `∇_x = ∂_x + i a(t)` and a per-component sign `s`. Spatial
//! derivatives use gauge-covariant link factors `e^{±i a h}`.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_CFL: f64 = 0.9;
pub const MIN_NX: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1p1 {
    pub nx: usize,
    pub nt: usize,
    pub t_extent: f64,
    pub hx: f64,
    pub ht: f64,
}

impl Grid1p1 {
    /// `nt` is the smallest count with `ht ≤ cfl · hx`.
    pub fn new(nx: usize, t_extent: f64, cfl: f64) -> Result<Self> {
        if nx < MIN_NX {
            return Err(Error::GridTooCoarse(format!("nx = {nx} below {MIN_NX}")));
        }
        if !(cfl > 0.0 && cfl <= MAX_CFL) {
            return Err(Error::Cfl { cfl, max_cfl: MAX_CFL });
        }
        if !(t_extent > 0.0 && t_extent.is_finite()) {
            return Err(Error::InvalidParameter(format!("time extent {t_extent}")));
        }
        let hx = TAU / nx as f64;
        let nt = (t_extent / (cfl * hx)).ceil() as usize;
        Ok(Grid1p1 { nx, nt, t_extent, hx, ht: t_extent / nt as f64 })
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx
    }
    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.ht
    }
    pub fn cfl(&self) -> f64 {
        self.ht / self.hx
    }
}

/// Values on all `(nt + 1) × nx` nodes, `ncomp` components each.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    pub grid: Grid1p1,
    pub ncomp: usize,
    pub data: Vec<C64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: Grid1p1, ncomp: usize) -> Self {
        SpaceTimeField { grid, ncomp, data: vec![C64::new(0.0, 0.0); (grid.nt + 1) * grid.nx * ncomp] }
    }
    fn idx(&self, n: usize, i: usize, c: usize) -> usize {
        (n * self.grid.nx + i) * self.ncomp + c
    }
    pub fn get(&self, n: usize, i: usize, c: usize) -> C64 {
        self.data[self.idx(n, i, c)]
    }
    pub fn set(&mut self, n: usize, i: usize, c: usize, v: C64) {
        let k = self.idx(n, i, c);
        self.data[k] = v;
    }
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
    pub fn max_diff(&self, o: &Self) -> Result<f64> {
        if self.grid != o.grid || self.ncomp != o.ncomp {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(self.data.iter().zip(&o.data).fold(0.0, |m, (a, b)| m.max((a - b).norm())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ProfileShape {
    /// Smootherstep from `a0` to `a1`.
    Ramp { a0: f64, a1: f64 },
    /// Cubic spline through `(times, values)`, times covering `[0, T]`.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

/// Time-dependent connection `a(t)` on `[0, T]`, constant on collars of
/// relative width `collar` at both ends.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConnectionProfile {
    pub t_extent: f64,
    pub collar: f64,
    pub shape: ProfileShape,
    /// Optional compactly supported bump `(amplitude, harmonic)` added in the
    /// interior; used for homotopy checks.
    pub deformation: Option<(f64, u32)>,
    #[serde(skip)]
    knots: Vec<f64>,
    #[serde(skip)]
    spline: Vec<[f64; 4]>,
}

pub const DEFAULT_COLLAR: f64 = 0.05;

fn smootherstep(s: f64) -> (f64, f64) {
    let s = s.clamp(0.0, 1.0);
    (s * s * s * (10.0 - 15.0 * s + 6.0 * s * s), 30.0 * s * s * (1.0 - s) * (1.0 - s))
}

/// Cubic spline coefficients `[a, b, c, d]` per interval. With `slopes` the
/// end derivatives are clamped, otherwise the spline is natural.
fn cubic_spline(x: &[f64], y: &[f64], slopes: Option<(f64, f64)>) -> Vec<[f64; 4]> {
    let n = x.len() - 1;
    let h: Vec<f64> = (0..n).map(|i| x[i + 1] - x[i]).collect();
    let sec: Vec<f64> = (0..n).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    // tridiagonal system for c_i = S''(x_i) / 2
    let (mut lower, mut diag, mut upper, mut rhs) = (vec![0.0; n + 1], vec![1.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]);
    for i in 1..n {
        lower[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        upper[i] = h[i];
        rhs[i] = 3.0 * (sec[i] - sec[i - 1]);
    }
    if let Some((s0, s1)) = slopes {
        diag[0] = 2.0 * h[0];
        upper[0] = h[0];
        rhs[0] = 3.0 * (sec[0] - s0);
        lower[n] = h[n - 1];
        diag[n] = 2.0 * h[n - 1];
        rhs[n] = 3.0 * (s1 - sec[n - 1]);
    }
    for i in 1..=n {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut c = vec![0.0; n + 1];
    c[n] = rhs[n] / diag[n];
    for i in (0..n).rev() {
        c[i] = (rhs[i] - upper[i] * c[i + 1]) / diag[i];
    }
    (0..n)
        .map(|i| {
            let b = sec[i] - h[i] * (2.0 * c[i] + c[i + 1]) / 3.0;
            let d = (c[i + 1] - c[i]) / (3.0 * h[i]);
            [y[i], b, c[i], d]
        })
        .collect()
}

/// Knots and values of the spline for a tabulated profile. Without collars
/// the samples are used as they are. With collars every sample inside a
/// collar must carry the same value; the spline then runs over the interior
/// samples plus the two collar edges, with zero slope at both edges.
fn spline_knots(t_extent: f64, collar: f64, times: &[f64], values: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if collar == 0.0 {
        return Ok((times.to_vec(), values.to_vec()));
    }
    let c = collar * t_extent;
    let eps = 1e-12 * t_extent;
    let flat = |inside: &dyn Fn(f64) -> bool| -> Result<f64> {
        let vals: Vec<f64> = times.iter().zip(values).filter(|(t, _)| inside(**t)).map(|(_, v)| *v).collect();
        let v0 = vals[0];
        if vals.iter().any(|v| (v - v0).abs() > 1e-12 * v0.abs().max(1.0)) {
            return Err(Error::CollarViolation);
        }
        Ok(v0)
    };
    // times[0] <= 0 and times[last] >= T, so both collars hold a sample
    let v0 = flat(&|t| t <= c + eps)?;
    let v1 = flat(&|t| t >= t_extent - c - eps)?;
    let mut knots = vec![c];
    let mut vals = vec![v0];
    for (t, v) in times.iter().zip(values) {
        if *t > c + eps && *t < t_extent - c - eps {
            knots.push(*t);
            vals.push(*v);
        }
    }
    knots.push(t_extent - c);
    vals.push(v1);
    Ok((knots, vals))
}

impl ConnectionProfile {
    pub fn ramp(t_extent: f64, a0: f64, a1: f64, collar: f64) -> Result<Self> {
        Self::build(t_extent, collar, ProfileShape::Ramp { a0, a1 })
    }

    pub fn tabulated(t_extent: f64, times: Vec<f64>, values: Vec<f64>, collar: f64) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::InvalidParameter("tabulated profile needs matching samples".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || times[0] > 0.0 || *times.last().unwrap() < t_extent {
            return Err(Error::InvalidParameter("tabulated times must increase and cover [0, T]".into()));
        }
        Self::build(t_extent, collar, ProfileShape::Tabulated { times, values })
    }

    fn build(t_extent: f64, collar: f64, shape: ProfileShape) -> Result<Self> {
        if !(t_extent > 0.0 && t_extent.is_finite()) {
            return Err(Error::InvalidParameter(format!("time extent {t_extent}")));
        }
        if !(0.0..0.5).contains(&collar) {
            return Err(Error::InvalidParameter(format!("collar fraction {collar}")));
        }
        let (knots, spline) = match &shape {
            ProfileShape::Tabulated { times, values } => {
                let (x, y) = spline_knots(t_extent, collar, times, values)?;
                let slopes = (collar > 0.0).then_some((0.0, 0.0));
                let sp = cubic_spline(&x, &y, slopes);
                (x, sp)
            }
            ProfileShape::Ramp { a0, a1 } => {
                if !(a0.is_finite() && a1.is_finite()) {
                    return Err(Error::InvalidParameter("non-finite ramp endpoint".into()));
                }
                (Vec::new(), Vec::new())
            }
        };
        Ok(ConnectionProfile { t_extent, collar, shape, deformation: None, knots, spline })
    }

    /// The same profile with an interior bump added.
    pub fn deformed(&self, amplitude: f64, harmonic: u32) -> Self {
        let mut p = self.clone();
        p.deformation = Some((amplitude, harmonic.max(1)));
        p
    }

    pub fn constant(t_extent: f64, a: f64) -> Result<Self> {
        Self::ramp(t_extent, a, a, DEFAULT_COLLAR)
    }

    fn interior(&self, t: f64) -> (f64, f64) {
        let c = self.collar * self.t_extent;
        let w = self.t_extent - 2.0 * c;
        ((t - c) / w, 1.0 / w)
    }

    fn bump(&self, t: f64) -> (f64, f64) {
        let Some((amp, j)) = self.deformation else { return (0.0, 0.0) };
        let (s, ds) = self.interior(t);
        if !(0.0..=1.0).contains(&s) {
            return (0.0, 0.0);
        }
        let q = s * (1.0 - s);
        let dq = 1.0 - 2.0 * s;
        let w = std::f64::consts::PI * j as f64;
        let v = 64.0 * q.powi(3) * (w * s).sin();
        let dv = 64.0 * (3.0 * q * q * dq * (w * s).sin() + q.powi(3) * w * (w * s).cos());
        (amp * v, amp * dv * ds)
    }

    fn spline_eval(&self, t: f64) -> (f64, f64) {
        let k = &self.knots;
        // constant continuation across the collars
        let (lo, hi) = (k[0], k[k.len() - 1]);
        let (t, flat) = if t < lo {
            (lo, true)
        } else if t > hi {
            (hi, true)
        } else {
            (t, false)
        };
        let i = match k.partition_point(|&x| x <= t) {
            0 => 0,
            j => (j - 1).min(self.spline.len() - 1),
        };
        let [a, b, c, d] = self.spline[i];
        let dx = t - k[i];
        let v = a + dx * (b + dx * (c + dx * d));
        (v, if flat { 0.0 } else { b + dx * (2.0 * c + 3.0 * dx * d) })
    }

    /// Knots where a tabulated profile is only piecewise smooth (empty for
    /// ramps).
    pub fn breakpoints(&self) -> &[f64] {
        &self.knots
    }

    /// `(a(t), a'(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let (v, dv) = match &self.shape {
            ProfileShape::Ramp { a0, a1 } => {
                let (s, ds) = self.interior(t);
                if s <= 0.0 {
                    (*a0, 0.0)
                } else if s >= 1.0 {
                    (*a1, 0.0)
                } else {
                    let (f, df) = smootherstep(s);
                    (a0 + (a1 - a0) * f, (a1 - a0) * df * ds)
                }
            }
            ProfileShape::Tabulated { .. } => self.spline_eval(t.clamp(0.0, self.t_extent)),
        };
        let (b, db) = self.bump(t);
        (v + b, dv + db)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }
    pub fn derivative(&self, t: f64) -> f64 {
        self.eval(t).1
    }

    /// `(a(0), a(T))`, exact for ramps.
    pub fn endpoints(&self) -> (f64, f64) {
        match &self.shape {
            ProfileShape::Ramp { a0, a1 } => (*a0, *a1),
            ProfileShape::Tabulated { .. } => (self.value(0.0), self.value(self.t_extent)),
        }
    }

    /// Whether `a' = 0` on both collars, checked on a fine sample.
    pub fn collar_ok(&self) -> bool {
        if self.collar <= 0.0 {
            return false;
        }
        let c = self.collar * self.t_extent;
        (0..=64).all(|k| {
            let s = c * k as f64 / 64.0;
            self.derivative(s).abs() <= 1e-12 && self.derivative(self.t_extent - s).abs() <= 1e-12
        })
    }
}

pub type Potential = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `P_j = ∂_t² − ∇_x² + V − i a'(t) s_j` acting on `s.len()` components.
#[derive(Clone)]
pub struct WaveOperator1d {
    pub potential: Option<Potential>,
    pub connection: Option<ConnectionProfile>,
    pub curvature_signs: Vec<f64>,
}

impl WaveOperator1d {
    pub fn flat() -> Self {
        WaveOperator1d { potential: None, connection: None, curvature_signs: vec![0.0] }
    }

    pub fn with_potential(v: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        WaveOperator1d { potential: Some(Arc::new(v)), ..Self::flat() }
    }

    /// Square of the twisted Dirac operator, two components.
    pub fn dirac_square(connection: Option<ConnectionProfile>) -> Self {
        WaveOperator1d { potential: None, connection, curvature_signs: vec![1.0, -1.0] }
    }

    pub fn ncomp(&self) -> usize {
        self.curvature_signs.len()
    }

    fn conn(&self, t: f64) -> (f64, f64) {
        self.connection.as_ref().map_or((0.0, 0.0), |c| c.eval(t))
    }

    fn pot(&self, t: f64, x: f64) -> f64 {
        self.potential.as_ref().map_or(0.0, |v| v(t, x))
    }

    /// `∇_x² u − V u + i a' s u` on one time row.
    fn spatial(&self, grid: &Grid1p1, t: f64, row: &[C64], out: &mut [C64]) {
        let (nx, nc, h) = (grid.nx, self.ncomp(), grid.hx);
        let (a, da) = self.conn(t);
        let link = C64::from_polar(1.0, a * h);
        let inv = 1.0 / (h * h);
        for i in 0..nx {
            let ip = (i + 1) % nx;
            let im = (i + nx - 1) % nx;
            let v = self.pot(t, grid.x(i));
            for c in 0..nc {
                let u = row[i * nc + c];
                let lap = (link * row[ip * nc + c] - 2.0 * u + link.conj() * row[im * nc + c]) * inv;
                out[i * nc + c] = lap - u * v + C64::i() * u * (da * self.curvature_signs[c]);
            }
        }
    }
}

pub type Data1<'a> = dyn Fn(f64, usize) -> C64 + Sync + 'a;
pub type Source1<'a> = dyn Fn(f64, f64, usize) -> C64 + Sync + 'a;

fn zero_source(_: f64, _: f64, _: usize) -> C64 {
    C64::new(0.0, 0.0)
}

fn source_row(grid: &Grid1p1, nc: usize, f: &Source1<'_>, n: usize) -> Vec<C64> {
    let t = grid.t(n);
    (0..grid.nx * nc).map(|k| f(t, grid.x(k / nc), k % nc)).collect()
}

/// Leapfrog march starting from level `n0` (0 or `nt`) in direction `dir`.
fn march(op: &WaveOperator1d, grid: &Grid1p1, n0: usize, u0: &Data1<'_>, u1: &Data1<'_>, f: &Source1<'_>, dir: f64) -> Result<SpaceTimeField> {
    let nc = op.ncomp();
    let len = grid.nx * nc;
    let mut out = SpaceTimeField::zeros(*grid, nc);
    let level = |k: usize| if dir > 0.0 { n0 + k } else { n0 - k };
    let h = dir * grid.ht;
    let t0 = grid.t(n0);
    let first: Vec<C64> = (0..len).map(|k| u0(grid.x(k / nc), k % nc)).collect();
    let vel: Vec<C64> = (0..len).map(|k| u1(grid.x(k / nc), k % nc)).collect();
    let mut acc = vec![C64::new(0.0, 0.0); len];
    op.spatial(grid, t0, &first, &mut acc);
    let f0 = source_row(grid, nc, f, n0);
    let second: Vec<C64> =
        (0..len).map(|k| first[k] + vel[k] * h + (acc[k] + f0[k]) * (0.5 * h * h)).collect();
    out.data[level(0) * len..(level(0) + 1) * len].copy_from_slice(&first);
    out.data[level(1) * len..(level(1) + 1) * len].copy_from_slice(&second);
    let (mut prev, mut cur) = (first, second);
    for k in 1..grid.nt {
        let n = level(k);
        op.spatial(grid, grid.t(n), &cur, &mut acc);
        let fr = source_row(grid, nc, f, n);
        let next: Vec<C64> = (0..len).map(|j| 2.0 * cur[j] - prev[j] + (acc[j] + fr[j]) * (h * h)).collect();
        if next.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { step: k + 1 });
        }
        let m = level(k + 1);
        out.data[m * len..(m + 1) * len].copy_from_slice(&next);
        prev = cur;
        cur = next;
    }
    Ok(out)
}

/// Solve `P u = f` with `u(0) = u0`, `∂_t u(0) = u1` by leapfrog with a
/// second-order Taylor start.
pub fn cauchy_solve(
    op: &WaveOperator1d,
    grid: &Grid1p1,
    u0: &Data1<'_>,
    u1: &Data1<'_>,
    f: Option<&Source1<'_>>,
) -> Result<SpaceTimeField> {
    march(op, grid, 0, u0, u1, f.unwrap_or(&zero_source), 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GreenKind {
    /// `G₊`: zero data in the past, support in the causal future.
    Forward,
    /// `G₋`: zero data in the future, support in the causal past.
    Backward,
}

fn check_source_support(grid: &Grid1p1, nc: usize, f: &Source1<'_>) -> Result<()> {
    for n in [0, 1, grid.nt - 1, grid.nt] {
        if source_row(grid, nc, f, n).iter().any(|z| z.norm() > 0.0) {
            return Err(Error::SupportAtBoundary);
        }
    }
    Ok(())
}

pub fn green_apply(op: &WaveOperator1d, grid: &Grid1p1, kind: GreenKind, f: &Source1<'_>) -> Result<SpaceTimeField> {
    let nc = op.ncomp();
    check_source_support(grid, nc, f)?;
    let zero = |_: f64, _: usize| C64::new(0.0, 0.0);
    match kind {
        GreenKind::Forward => march(op, grid, 0, &zero, &zero, f, 1.0),
        GreenKind::Backward => march(op, grid, grid.nt, &zero, &zero, f, -1.0),
    }
}

/// Causal propagator `G = G₊ − G₋`.
pub fn causal_propagator(op: &WaveOperator1d, grid: &Grid1p1, f: &Source1<'_>) -> Result<SpaceTimeField> {
    let mut a = green_apply(op, grid, GreenKind::Forward, f)?;
    let b = green_apply(op, grid, GreenKind::Backward, f)?;
    for (x, y) in a.data.iter_mut().zip(&b.data) {
        *x -= y;
    }
    Ok(a)
}

/// A smooth test function with analytic `□φ = φ_tt − φ_xx`.
pub trait TestFunction: Sync {
    fn value(&self, t: f64, x: f64) -> C64;
    fn box_value(&self, t: f64, x: f64) -> C64;
}

/// Product of bump functions `b((t − t0)/wt) · b(d(x, x0)/wx)` with
/// `b(s) = exp(−1/(1 − s²))`, times a complex amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpFunction {
    pub t0: f64,
    pub wt: f64,
    pub x0: f64,
    pub wx: f64,
    pub amplitude: C64,
}

fn bump1(s: f64) -> [f64; 3] {
    if s.abs() >= 1.0 {
        return [0.0; 3];
    }
    let q = 1.0 - s * s;
    let b = (-1.0 / q).exp();
    let g1 = -2.0 * s / (q * q);
    let g2 = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
    [b, b * g1, b * (g1 * g1 + g2)]
}

fn periodic_offset(x: f64, x0: f64) -> f64 {
    (x - x0 + 0.5 * TAU).rem_euclid(TAU) - 0.5 * TAU
}

impl BumpFunction {
    pub fn new(t0: f64, wt: f64, x0: f64, wx: f64) -> Self {
        BumpFunction { t0, wt, x0, wx, amplitude: C64::new(1.0, 0.0) }
    }
    fn parts(&self, t: f64, x: f64) -> ([f64; 3], [f64; 3]) {
        (bump1((t - self.t0) / self.wt), bump1(periodic_offset(x, self.x0) / self.wx))
    }
}

impl TestFunction for BumpFunction {
    fn value(&self, t: f64, x: f64) -> C64 {
        let (bt, bx) = self.parts(t, x);
        self.amplitude * (bt[0] * bx[0])
    }
    fn box_value(&self, t: f64, x: f64) -> C64 {
        let (bt, bx) = self.parts(t, x);
        self.amplitude * (bt[2] * bx[0] / (self.wt * self.wt) - bt[0] * bx[2] / (self.wx * self.wx))
    }
}

/// Fourth-order reference discretisation of `□ + V` at interior levels
/// `2 ≤ n ≤ nt − 2`; other levels are left at zero.
pub fn reference_apply(op: &WaveOperator1d, field: &SpaceTimeField, comp: usize) -> SpaceTimeField {
    let g = field.grid;
    let mut out = SpaceTimeField::zeros(g, 1);
    let (ct, cx) = (1.0 / (12.0 * g.ht * g.ht), 1.0 / (12.0 * g.hx * g.hx));
    let st = |u: &dyn Fn(isize) -> C64| -u(-2) + 16.0 * u(-1) - 30.0 * u(0) + 16.0 * u(1) - u(2);
    for n in 2..g.nt.saturating_sub(1) {
        for i in 0..g.nx {
            let at_t = |k: isize| field.get((n as isize + k) as usize, i, comp);
            let at_x = |k: isize| field.get(n, (i as isize + k).rem_euclid(g.nx as isize) as usize, comp);
            let v = op.pot(g.t(n), g.x(i));
            out.set(n, i, 0, st(&at_t) * ct - st(&at_x) * cx + field.get(n, i, comp) * v);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenReport {
    /// `max |G(P φ) − φ| / max |φ|`.
    pub left_inverse: f64,
    /// `max |P(G φ) − φ| / max |φ|` over interior levels.
    pub right_inverse: f64,
    /// Largest `|G φ|` outside the light cone of `supp φ` widened by the
    /// collar, relative to `max |G φ|`.
    pub support_leak: f64,
    pub collar_cells: usize,
}

/// Relative amplitude below which a grid value counts as outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

impl GreenReport {
    pub fn support_ok(&self) -> bool {
        self.support_leak <= SUPPORT_THRESHOLD
    }
}

/// Light-cone reach of `supp f` sampled on the grid: for each column the
/// earliest (forward) or latest (backward) time of the cone.
fn cone_bound(grid: &Grid1p1, phi: &dyn TestFunction, kind: GreenKind, collar: f64) -> Vec<f64> {
    let nx = grid.nx;
    let mut edge = vec![f64::NAN; nx];
    for n in 0..=grid.nt {
        for (i, e) in edge.iter_mut().enumerate() {
            if phi.value(grid.t(n), grid.x(i)).norm() > 0.0 {
                let t = grid.t(n);
                *e = match kind {
                    GreenKind::Forward if e.is_nan() || t < *e => t,
                    GreenKind::Backward if e.is_nan() || t > *e => t,
                    _ => *e,
                };
            }
        }
    }
    (0..nx)
        .map(|i| {
            let mut best = match kind {
                GreenKind::Forward => f64::INFINITY,
                GreenKind::Backward => f64::NEG_INFINITY,
            };
            for (j, &e) in edge.iter().enumerate() {
                if e.is_nan() {
                    continue;
                }
                let d = (periodic_offset(grid.x(i), grid.x(j)).abs() - collar).max(0.0);
                best = match kind {
                    GreenKind::Forward => best.min(e + d),
                    GreenKind::Backward => best.max(e - d),
                };
            }
            best
        })
        .collect()
}

pub fn green_clauses(op: &WaveOperator1d, grid: &Grid1p1, kind: GreenKind, phi: &dyn TestFunction) -> Result<GreenReport> {
    if op.ncomp() != 1 {
        return Err(Error::InvalidParameter("green clauses are defined for scalar operators".into()));
    }
    let pot = |t: f64, x: f64| op.pot(t, x);
    let p_phi = |t: f64, x: f64, _: usize| phi.box_value(t, x) + phi.value(t, x) * pot(t, x);
    let phi_src = |t: f64, x: f64, _: usize| phi.value(t, x);
    let g_pphi = green_apply(op, grid, kind, &p_phi)?;
    let g_phi = green_apply(op, grid, kind, &phi_src)?;
    let pg = reference_apply(op, &g_phi, 0);
    let mut scale: f64 = 0.0;
    let mut left: f64 = 0.0;
    let mut right: f64 = 0.0;
    for n in 0..=grid.nt {
        for i in 0..grid.nx {
            let v = phi.value(grid.t(n), grid.x(i));
            scale = scale.max(v.norm());
            left = left.max((g_pphi.get(n, i, 0) - v).norm());
            if n >= 2 && n + 2 <= grid.nt {
                right = right.max((pg.get(n, i, 0) - v).norm());
            }
        }
    }
    let collar_cells = 2;
    let bound = cone_bound(grid, phi, kind, collar_cells as f64 * grid.hx);
    let umax = g_phi.max_abs().max(1e-300);
    let mut leak: f64 = 0.0;
    for n in 0..=grid.nt {
        let t = grid.t(n);
        for (i, &b) in bound.iter().enumerate() {
            let outside = match kind {
                GreenKind::Forward => t < b - 1e-12,
                GreenKind::Backward => t > b + 1e-12,
            };
            if outside {
                leak = leak.max(g_phi.get(n, i, 0).norm() / umax);
            }
        }
    }
    Ok(GreenReport { left_inverse: left / scale, right_inverse: right / scale, support_leak: leak, collar_cells })
}

/// `|⟨φ, P_h f⟩ − ⟨P φ, f⟩|` with a fourth-order discrete `P_h` applied to
/// samples of `f` and the analytic `P φ`; both compactly supported in the
/// grid interior. `P` here is the flat scalar operator plus potential.
pub fn formal_dual_residual(op: &WaveOperator1d, grid: &Grid1p1, f: &dyn TestFunction, phi: &dyn TestFunction) -> Result<f64> {
    let mut fs = SpaceTimeField::zeros(*grid, 1);
    for n in 0..=grid.nt {
        for i in 0..grid.nx {
            fs.set(n, i, 0, f.value(grid.t(n), grid.x(i)));
        }
    }
    for n in [0, 1, grid.nt - 1, grid.nt] {
        if (0..grid.nx).any(|i| fs.get(n, i, 0).norm() > 0.0) {
            return Err(Error::SupportAtBoundary);
        }
    }
    let pf = reference_apply(op, &fs, 0);
    let mut lhs = C64::new(0.0, 0.0);
    let mut rhs = C64::new(0.0, 0.0);
    for n in 0..=grid.nt {
        let (t, w) = (grid.t(n), if n == 0 || n == grid.nt { 0.5 } else { 1.0 });
        for i in 0..grid.nx {
            let x = grid.x(i);
            let p = phi.value(t, x);
            let pphi = phi.box_value(t, x) + p * op.pot(t, x);
            lhs += p.conj() * pf.get(n, i, 0) * w;
            rhs += pphi.conj() * fs.get(n, i, 0) * w;
        }
    }
    Ok(((lhs - rhs) * (grid.hx * grid.ht)).norm())
}

/// Characteristic data on the two null rays through a vertex, with null
/// coordinates `u = t − x`, `v = t + x` so that `□ = 4 ∂_u ∂_v`.
pub struct GoursatData<'a> {
    /// Values on the ray `v = 0`, as a function of `u ≥ 0`.
    pub on_u_ray: &'a (dyn Fn(f64) -> C64 + Sync),
    /// Values on the ray `u = 0`, as a function of `v ≥ 0`.
    pub on_v_ray: &'a (dyn Fn(f64) -> C64 + Sync),
    /// Source `f(u, v)` of `□ φ = f`.
    pub source: &'a (dyn Fn(f64, f64) -> C64 + Sync),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoursatField {
    pub nu: usize,
    pub nv: usize,
    pub hu: f64,
    pub hv: f64,
    /// Row-major `(i, j)` with `u = i hu`, `v = j hv`.
    pub phi: Vec<C64>,
}

impl GoursatField {
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.phi[i * (self.nv + 1) + j]
    }
}

/// Solve the characteristic initial value problem on `[0, U] × [0, V]` in
/// null coordinates. The rectangle must not wrap around the cylinder.
pub fn goursat_solve(data: &GoursatData, extent: (f64, f64), cells: (usize, usize)) -> Result<GoursatField> {
    let (ue, ve) = extent;
    let (nu, nv) = cells;
    if !(ue > 0.0 && ve > 0.0) {
        return Err(Error::InvalidParameter("empty characteristic rectangle".into()));
    }
    if 0.5 * (ue + ve) >= TAU {
        return Err(Error::InvalidParameter("characteristic rectangle wraps around the cylinder".into()));
    }
    if nu < 2 || nv < 2 {
        return Err(Error::GridTooCoarse("goursat grid needs at least 2 cells per side".into()));
    }
    let (p0, q0) = ((data.on_u_ray)(0.0), (data.on_v_ray)(0.0));
    let mismatch = (p0 - q0).norm();
    if mismatch > 1e-12 * p0.norm().max(1.0) {
        return Err(Error::VertexMismatch(mismatch));
    }
    let (hu, hv) = (ue / nu as f64, ve / nv as f64);
    let w = nv + 1;
    let mut phi = vec![C64::new(0.0, 0.0); (nu + 1) * w];
    for i in 0..=nu {
        phi[i * w] = (data.on_u_ray)(i as f64 * hu);
    }
    for j in 0..=nv {
        phi[j] = (data.on_v_ray)(j as f64 * hv);
    }
    for i in 0..nu {
        for j in 0..nv {
            let f = (data.source)((i as f64 + 0.5) * hu, (j as f64 + 0.5) * hv);
            phi[(i + 1) * w + j + 1] = phi[(i + 1) * w + j] + phi[i * w + j + 1] - phi[i * w + j] + f * (0.25 * hu * hv);
        }
    }
    Ok(GoursatField { nu, nv, hu, hv, phi })
}

/// Initial data and source for `D u = f`, `D = γ⁰ ∂_t + γ¹ ∇_x` with
/// `γ⁰ = σ_x` and `γ¹ = [[0, 1], [−1, 0]]`.
pub struct DiracData<'a> {
    pub u0: &'a (dyn Fn(f64) -> [C64; 2] + Sync),
    pub source: Option<&'a (dyn Fn(f64, f64) -> [C64; 2] + Sync)>,
    pub connection: Option<ConnectionProfile>,
}

fn dirac_source(data: &DiracData, t: f64, x: f64) -> [C64; 2] {
    data.source.map_or([C64::new(0.0, 0.0); 2], |f| f(t, x))
}

/// Solve `D u = f` through `D² v = f`, `v|_{t=0} = 0`, `∂_t v|_{t=0} = γ⁰ u0`,
/// then `u = D v` by central differences.
pub fn dirac_solve_by_squaring(data: &DiracData, grid: &Grid1p1) -> Result<SpaceTimeField> {
    let op = WaveOperator1d::dirac_square(data.connection.clone());
    let zero = |_: f64, _: usize| C64::new(0.0, 0.0);
    let vel = |x: f64, c: usize| (data.u0)(x)[1 - c];
    let src = |t: f64, x: f64, c: usize| dirac_source(data, t, x)[c];
    let v = cauchy_solve(&op, grid, &zero, &vel, Some(&src))?;
    let mut u = SpaceTimeField::zeros(*grid, 2);
    let (nx, nt) = (grid.nx, grid.nt);
    for n in 0..=nt {
        let a = op.conn(grid.t(n)).0;
        let link = C64::from_polar(1.0, a * grid.hx);
        for i in 0..nx {
            let (ip, im) = ((i + 1) % nx, (i + nx - 1) % nx);
            let mut dt = [C64::new(0.0, 0.0); 2];
            let mut dx = [C64::new(0.0, 0.0); 2];
            for c in 0..2 {
                dt[c] = if n == 0 {
                    vel(grid.x(i), c)
                } else if n == nt {
                    (3.0 * v.get(n, i, c) - 4.0 * v.get(n - 1, i, c) + v.get(n - 2, i, c)) / (2.0 * grid.ht)
                } else {
                    (v.get(n + 1, i, c) - v.get(n - 1, i, c)) / (2.0 * grid.ht)
                };
                dx[c] = (link * v.get(n, ip, c) - link.conj() * v.get(n, im, c)) / (2.0 * grid.hx);
            }
            u.set(n, i, 0, dt[1] + dx[1]);
            u.set(n, i, 1, dt[0] - dx[0]);
        }
    }
    Ok(u)
}

fn dirac_rhs(data: &DiracData, grid: &Grid1p1, t: f64, u: &[C64], out: &mut [C64]) {
    let nx = grid.nx;
    let a = data.connection.as_ref().map_or(0.0, |c| c.value(t));
    let (l1, l2) = (C64::from_polar(1.0, a * grid.hx), C64::from_polar(1.0, 2.0 * a * grid.hx));
    let inv = 1.0 / (12.0 * grid.hx);
    for i in 0..nx {
        let at = |k: isize, c: usize| u[((i as isize + k).rem_euclid(nx as isize) as usize) * 2 + c];
        let f = dirac_source(data, t, grid.x(i));
        for c in 0..2 {
            let d = (8.0 * (l1 * at(1, c) - l1.conj() * at(-1, c)) - (l2 * at(2, c) - l2.conj() * at(-2, c))) * inv;
            // ∂_t u₁ = ∇u₁ + f₂, ∂_t u₂ = −∇u₂ + f₁
            out[i * 2 + c] = if c == 0 { d + f[1] } else { -d + f[0] };
        }
    }
}

/// Solve `D u = f` directly as a first-order system: fourth-order central
/// differences in space, classical Runge–Kutta in time.
pub fn dirac_solve_direct(data: &DiracData, grid: &Grid1p1) -> Result<SpaceTimeField> {
    let len = grid.nx * 2;
    let mut out = SpaceTimeField::zeros(*grid, 2);
    let mut u: Vec<C64> = (0..len).map(|k| (data.u0)(grid.x(k / 2))[k % 2]).collect();
    out.data[..len].copy_from_slice(&u);
    let h = grid.ht;
    let mut k = [vec![C64::new(0.0, 0.0); len], vec![C64::new(0.0, 0.0); len], vec![C64::new(0.0, 0.0); len], vec![
        C64::new(0.0, 0.0);
        len
    ]];
    let mut tmp = vec![C64::new(0.0, 0.0); len];
    for n in 0..grid.nt {
        let t = grid.t(n);
        dirac_rhs(data, grid, t, &u, &mut k[0]);
        for j in 0..len {
            tmp[j] = u[j] + k[0][j] * (0.5 * h);
        }
        dirac_rhs(data, grid, t + 0.5 * h, &tmp, &mut k[1]);
        for j in 0..len {
            tmp[j] = u[j] + k[1][j] * (0.5 * h);
        }
        dirac_rhs(data, grid, t + 0.5 * h, &tmp, &mut k[2]);
        for j in 0..len {
            tmp[j] = u[j] + k[2][j] * h;
        }
        dirac_rhs(data, grid, t + h, &tmp, &mut k[3]);
        for j in 0..len {
            u[j] += (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]) * (h / 6.0);
        }
        if u.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { step: n + 1 });
        }
        out.data[(n + 1) * len..(n + 2) * len].copy_from_slice(&u);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid1p1::new(8, 1.0, 0.5).is_err());
        assert!(matches!(Grid1p1::new(64, 1.0, 0.95), Err(Error::Cfl { .. })));
        let g = Grid1p1::new(64, 2.0, 0.5).unwrap();
        assert!(g.cfl() <= 0.5 + 1e-15);
        assert!((g.t(g.nt) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn standing_wave_converges_at_second_order() {
        // u = cos(t) sin(x) solves the flat wave equation
        let err = |nx: usize| {
            let g = Grid1p1::new(nx, 3.0, 0.5).unwrap();
            let u = cauchy_solve(&WaveOperator1d::flat(), &g, &|x, _| C64::new(x.sin(), 0.0), &|_, _| C64::new(0.0, 0.0), None)
                .unwrap();
            let mut e: f64 = 0.0;
            for i in 0..nx {
                e = e.max((u.get(g.nt, i, 0).re - 3f64.cos() * g.x(i).sin()).abs());
            }
            e
        };
        let order = (err(64) / err(128)).log2();
        assert!((order - 2.0).abs() < 0.2, "{order}");
    }

    #[test]
    fn twisted_mode_picks_up_the_connection() {
        // constant a: e^{ikx} oscillates with frequency |k + a|
        let (k, a) = (2.0, 0.3);
        let op = WaveOperator1d { connection: Some(ConnectionProfile::constant(2.0, a).unwrap()), ..WaveOperator1d::flat() };
        let g = Grid1p1::new(256, 2.0, 0.5).unwrap();
        let w = k + a;
        let u = cauchy_solve(&op, &g, &|x, _| C64::from_polar(1.0, k * x), &|_, _| C64::new(0.0, 0.0), None).unwrap();
        let exact = (w * 2.0).cos();
        assert!((u.get(g.nt, 0, 0).re - exact).abs() < 1e-3);
    }

    #[test]
    fn spline_interpolates_and_is_natural() {
        let t: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|x| x * x * x).collect();
        let p = ConnectionProfile::tabulated(1.0, t.clone(), v.clone(), 0.0).unwrap();
        for (x, y) in t.iter().zip(&v) {
            assert!((p.value(*x) - y).abs() < 1e-14);
        }
        assert!((p.value(0.55) - 0.55f64.powi(3)).abs() < 2e-3);
    }

    #[test]
    fn collared_spline_is_flat_and_interpolates() {
        let t: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        let v: Vec<f64> = t.iter().map(|&x| 0.2 + (((x - 1.0) / 8.0).clamp(0.0, 1.0) * 3.0).sin()).collect();
        let p = ConnectionProfile::tabulated(10.0, t.clone(), v.clone(), DEFAULT_COLLAR).unwrap();
        assert!(p.collar_ok());
        for (x, y) in t.iter().zip(&v) {
            assert!((p.value(*x) - y).abs() < 1e-13, "{x}");
        }
        // slope and value are continuous at the collar edge
        let e = 0.5;
        assert!(p.derivative(e + 1e-9).abs() < 1e-6);
        assert!((p.value(e + 1e-9) - p.value(e - 1e-9)).abs() < 1e-12);

        let mut w = v.clone();
        w[0] = 0.25;
        assert_eq!(ConnectionProfile::tabulated(10.0, t, w, DEFAULT_COLLAR).unwrap_err(), Error::CollarViolation);
    }

    #[test]
    fn ramp_profile_is_flat_on_collars() {
        let p = ConnectionProfile::ramp(4.0, 0.3, 1.3, DEFAULT_COLLAR).unwrap();
        assert!(p.collar_ok());
        assert_eq!(p.value(0.0), 0.3);
        assert_eq!(p.value(4.0), 1.3);
        assert!(p.deformed(0.4, 3).collar_ok());
        let q = ConnectionProfile::ramp(4.0, 0.3, 1.3, 0.0).unwrap();
        assert!(!q.collar_ok());
        // derivative consistency
        let h = 1e-6;
        let d = p.deformed(0.4, 2);
        let fd = (d.value(1.7 + h) - d.value(1.7 - h)) / (2.0 * h);
        assert!((fd - d.derivative(1.7)).abs() < 1e-7);
    }

    #[test]
    fn goursat_rejects_vertex_mismatch() {
        let one = |_: f64| C64::new(1.0, 0.0);
        let zero = |_: f64| C64::new(0.0, 0.0);
        let src = |_: f64, _: f64| C64::new(0.0, 0.0);
        let d = GoursatData { on_u_ray: &one, on_v_ray: &zero, source: &src };
        assert!(matches!(goursat_solve(&d, (1.0, 1.0), (8, 8)), Err(Error::VertexMismatch(_))));
        let d = GoursatData { on_u_ray: &zero, on_v_ray: &zero, source: &src };
        assert!(goursat_solve(&d, (7.0, 7.0), (8, 8)).is_err());
    }

    #[test]
    fn goursat_reproduces_bilinear_data_exactly() {
        // φ = u + v + uv has ∂_u∂_v φ = 1, so □φ = 4
        let p = |u: f64| C64::new(u, 0.0);
        let src = |_: f64, _: f64| C64::new(4.0, 0.0);
        let d = GoursatData { on_u_ray: &p, on_v_ray: &p, source: &src };
        let g = goursat_solve(&d, (1.0, 2.0), (10, 20)).unwrap();
        let exact = |u: f64, v: f64| u + v + u * v;
        assert!((g.get(10, 20).re - exact(1.0, 2.0)).abs() < 1e-13);
    }

    #[test]
    fn source_touching_the_boundary_is_rejected() {
        let g = Grid1p1::new(32, 2.0, 0.5).unwrap();
        let f = |_: f64, _: f64, _: usize| C64::new(1.0, 0.0);
        assert!(matches!(green_apply(&WaveOperator1d::flat(), &g, GreenKind::Forward, &f), Err(Error::SupportAtBoundary)));
    }

    #[test]
    fn dirac_plane_wave_keeps_its_modulus() {
        let g = Grid1p1::new(128, 3.0, 0.5).unwrap();
        let u0 = |x: f64| [C64::from_polar(1.0, 2.0 * x), C64::new(0.0, 0.0)];
        let d = DiracData { u0: &u0, source: None, connection: None };
        let u = dirac_solve_by_squaring(&d, &g).unwrap();
        for i in 0..g.nx {
            assert!((u.get(g.nt, i, 0).norm() - 1.0).abs() < 5e-3);
        }
    }
}
