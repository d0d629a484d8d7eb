//! Pointwise tensor kernel: component storage, index gymnastics, the Hodge
//! dual on two-forms and finite-difference covariant derivatives.
//!
//! Components are stored row-major with slot 0 most significant. Real
//! geometric data (metric, inverse, Christoffel symbols) live in
//! [`MetricData`] as plain `f64` arrays; [`MetricData::metric_tensor`] lifts
//! them to [`TensorValue`] when needed.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat4 = [[f64; 4]; 4];
/// `christoffel[c][a][b] = Γ^c_ab`.
pub type Gamma = [[[f64; 4]; 4]; 4];

pub const MAX_RANK: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    /// Boyer–Lindquist `(t, r, θ, φ)` on the Kerr exterior.
    BoyerLindquist,
    /// `(t, x)` on `R × S¹`.
    Cylinder,
}

impl Chart {
    pub fn dim(self) -> usize {
        match self {
            Chart::BoyerLindquist => 4,
            Chart::Cylinder => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variance {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symmetry {
    General,
    Symmetric,
    Antisymmetric,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorValue {
    chart: Chart,
    variance: Vec<Variance>,
    symmetry: Symmetry,
    data: Vec<C64>,
}

fn flat_index(dim: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

fn unflatten(dim: usize, rank: usize, mut k: usize, out: &mut [usize]) {
    for s in (0..rank).rev() {
        out[s] = k % dim;
        k /= dim;
    }
}

/// All permutations of `0..n` with their signs.
fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out.into_iter()
        .map(|p| {
            let s = permutation_sign(&p);
            (p, s)
        })
        .collect()
}

pub fn permutation_sign(p: &[usize]) -> f64 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] == p[j] {
                return 0.0;
            }
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl TensorValue {
    pub fn zeros(chart: Chart, variance: &[Variance]) -> Self {
        assert!(variance.len() <= MAX_RANK, "rank above {MAX_RANK}");
        let n = chart.dim().pow(variance.len() as u32);
        TensorValue {
            chart,
            variance: variance.to_vec(),
            symmetry: Symmetry::General,
            data: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn from_fn(chart: Chart, variance: &[Variance], mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let mut t = Self::zeros(chart, variance);
        let (dim, rank) = (t.dim(), t.rank());
        let mut idx = [0usize; MAX_RANK];
        for k in 0..t.data.len() {
            unflatten(dim, rank, k, &mut idx[..rank]);
            t.data[k] = f(&idx[..rank]);
        }
        t
    }

    pub fn scalar(chart: Chart, v: C64) -> Self {
        let mut t = Self::zeros(chart, &[]);
        t.data[0] = v;
        t
    }

    /// Rank-2 tensor from a real matrix (top-left block for lower dimensions).
    pub fn from_real2(chart: Chart, variance: [Variance; 2], m: &Mat4) -> Self {
        Self::from_fn(chart, &variance, |i| C64::new(m[i[0]][i[1]], 0.0))
    }

    pub fn from_real1(chart: Chart, variance: Variance, v: &[f64; 4]) -> Self {
        Self::from_fn(chart, &[variance], |i| C64::new(v[i[0]], 0.0))
    }

    pub fn from_complex1(chart: Chart, variance: Variance, v: &[C64; 4]) -> Self {
        Self::from_fn(chart, &[variance], |i| v[i[0]])
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }
    pub fn rank(&self) -> usize {
        self.variance.len()
    }
    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }
    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[flat_index(self.dim(), idx)]
    }
    pub fn get2(&self, a: usize, b: usize) -> C64 {
        self.data[a * self.dim() + b]
    }
    pub fn set(&mut self, idx: &[usize], v: C64) {
        let k = flat_index(self.dim(), idx);
        self.data[k] = v;
    }

    /// Declare a symmetry of a rank-2 tensor; validated against the data.
    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Result<Self> {
        if symmetry != Symmetry::General {
            if self.rank() != 2 {
                return Err(Error::Shape("symmetry tags apply to rank 2 only".into()));
            }
            let scale = self.max_abs().max(1e-300);
            let defect = match symmetry {
                Symmetry::Antisymmetric => self.antisymmetry_defect(),
                _ => self.symmetry_defect(),
            };
            if defect > 1e-12 * scale {
                return Err(Error::NotAntisymmetric { defect });
            }
        }
        self.symmetry = symmetry;
        Ok(self)
    }

    /// `max |T_ab + T_ba|` for rank 2.
    pub fn antisymmetry_defect(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                m = m.max((self.get2(a, b) + self.get2(b, a)).norm());
            }
        }
        m
    }

    pub fn symmetry_defect(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                m = m.max((self.get2(a, b) - self.get2(b, a)).norm());
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn same_shape(&self, o: &Self) -> Result<()> {
        if self.chart != o.chart {
            return Err(Error::ChartMismatch(format!("{:?} vs {:?}", self.chart, o.chart)));
        }
        if self.variance != o.variance {
            return Err(Error::Shape("index structure differs".into()));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.same_shape(o)?;
        let mut t = self.clone();
        t.symmetry = if self.symmetry == o.symmetry { self.symmetry } else { Symmetry::General };
        for (x, y) in t.data.iter_mut().zip(&o.data) {
            *x += y;
        }
        Ok(t)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut t = self.clone();
        for x in t.data.iter_mut() {
            *x *= s;
        }
        t
    }

    pub fn conj(&self) -> Self {
        let mut t = self.clone();
        for x in t.data.iter_mut() {
            *x = x.conj();
        }
        t
    }

    /// Real parts of a rank-2 tensor.
    pub fn to_real2(&self) -> Mat4 {
        let mut m = [[0.0; 4]; 4];
        let d = self.dim();
        for a in 0..d {
            for b in 0..d {
                m[a][b] = self.get2(a, b).re;
            }
        }
        m
    }

    pub fn to_complex1(&self) -> [C64; 4] {
        let mut v = [C64::new(0.0, 0.0); 4];
        for (a, x) in v.iter_mut().enumerate().take(self.dim()) {
            *x = self.data[a];
        }
        v
    }

    /// Tensor product `self ⊗ o`.
    pub fn outer(&self, o: &Self) -> Result<Self> {
        if self.chart != o.chart {
            return Err(Error::ChartMismatch("outer product".into()));
        }
        let mut var = self.variance.clone();
        var.extend_from_slice(&o.variance);
        if var.len() > MAX_RANK {
            return Err(Error::Shape("rank above 4".into()));
        }
        let n2 = o.data.len();
        let mut t = Self::zeros(self.chart, &var);
        for (i, x) in self.data.iter().enumerate() {
            for (j, y) in o.data.iter().enumerate() {
                t.data[i * n2 + j] = x * y;
            }
        }
        Ok(t)
    }
}

/// Metric, inverse, volume factor and Christoffel symbols at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricData {
    pub chart: Chart,
    pub g: Mat4,
    pub g_inv: Mat4,
    pub sqrt_abs_det: f64,
    pub christoffel: Gamma,
}

impl MetricData {
    /// Assemble from metric components and their coordinate derivatives
    /// `dg[d][a][b] = ∂_d g_ab`. The inverse and determinant are computed
    /// numerically and the signature is checked to be Lorentzian.
    pub fn from_derivatives(chart: Chart, g: Mat4, dg: &[Mat4; 4]) -> Result<Self> {
        let n = chart.dim();
        let m = DMatrix::from_fn(n, n, |i, j| g[i][j]);
        let det = m.determinant();
        let inv = m
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain("degenerate metric".into()))?;
        let mut g_inv = [[0.0; 4]; 4];
        for i in 0..n {
            for j in 0..n {
                g_inv[i][j] = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            }
        }
        let negatives = m.symmetric_eigenvalues().iter().filter(|&&e| e < 0.0).count();
        if negatives != 1 {
            return Err(Error::Domain(format!("metric has {negatives} negative eigenvalues")));
        }
        Ok(Self::assemble(chart, g, g_inv, det.abs().sqrt(), dg))
    }

    /// Assemble when the inverse and volume factor are known in closed form.
    pub fn from_parts(chart: Chart, g: Mat4, g_inv: Mat4, sqrt_abs_det: f64, dg: &[Mat4; 4]) -> Self {
        Self::assemble(chart, g, g_inv, sqrt_abs_det, dg)
    }

    fn assemble(chart: Chart, g: Mat4, g_inv: Mat4, sqrt_abs_det: f64, dg: &[Mat4; 4]) -> Self {
        let n = chart.dim();
        let mut christoffel = [[[0.0; 4]; 4]; 4];
        for c in 0..n {
            for a in 0..n {
                for b in a..n {
                    let mut s = 0.0;
                    for d in 0..n {
                        s += g_inv[c][d] * (dg[a][d][b] + dg[b][d][a] - dg[d][a][b]);
                    }
                    christoffel[c][a][b] = 0.5 * s;
                    christoffel[c][b][a] = 0.5 * s;
                }
            }
        }
        MetricData { chart, g, g_inv, sqrt_abs_det, christoffel }
    }

    pub fn minkowski_cylinder() -> Self {
        let mut g = [[0.0; 4]; 4];
        g[0][0] = -1.0;
        g[1][1] = 1.0;
        Self::assemble(Chart::Cylinder, g, g, 1.0, &[[[0.0; 4]; 4]; 4])
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn metric_tensor(&self) -> TensorValue {
        TensorValue::from_real2(self.chart, [Variance::Down, Variance::Down], &self.g)
            .with_symmetry(Symmetry::Symmetric)
            .expect("metric is symmetric")
    }

    pub fn inverse_tensor(&self) -> TensorValue {
        TensorValue::from_real2(self.chart, [Variance::Up, Variance::Up], &self.g_inv)
            .with_symmetry(Symmetry::Symmetric)
            .expect("inverse metric is symmetric")
    }

    /// `max |g g⁻¹ - 1|`.
    pub fn inverse_residual(&self) -> f64 {
        let n = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| self.g[i][k] * self.g_inv[k][j]).sum();
                m = m.max((s - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        m
    }

    /// `g(u, v)` for complex vectors, bilinear (no conjugation).
    pub fn dot(&self, u: &[C64; 4], v: &[C64; 4]) -> C64 {
        let n = self.dim();
        let mut s = C64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                s += u[a] * v[b] * self.g[a][b];
            }
        }
        s
    }

    pub fn dot_real(&self, u: &[f64; 4], v: &[f64; 4]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += u[a] * v[b] * self.g[a][b];
            }
        }
        s
    }

    pub fn lower_real(&self, u: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for a in 0..self.dim() {
            out[a] = (0..self.dim()).map(|b| self.g[a][b] * u[b]).sum();
        }
        out
    }

    pub fn lower(&self, u: &[C64; 4]) -> [C64; 4] {
        let mut out = [C64::new(0.0, 0.0); 4];
        for a in 0..self.dim() {
            out[a] = (0..self.dim()).map(|b| u[b] * self.g[a][b]).sum();
        }
        out
    }

    pub fn raise(&self, w: &[C64; 4]) -> [C64; 4] {
        let mut out = [C64::new(0.0, 0.0); 4];
        for a in 0..self.dim() {
            out[a] = (0..self.dim()).map(|b| w[b] * self.g_inv[a][b]).sum();
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexAction {
    Raise,
    Lower,
    Symmetrize,
    Antisymmetrize,
}

fn check_slots(t: &TensorValue, slots: &[usize]) -> Result<()> {
    for (i, &s) in slots.iter().enumerate() {
        if s >= t.rank() {
            return Err(Error::SlotOutOfRange { slot: s, rank: t.rank() });
        }
        if slots[..i].contains(&s) {
            return Err(Error::Shape(format!("slot {s} listed twice")));
        }
    }
    Ok(())
}

fn move_slot(t: &TensorValue, slot: usize, m: &Mat4, to: Variance) -> TensorValue {
    let mut var = t.variance.clone();
    var[slot] = to;
    let n = t.dim();
    let mut j = [0usize; MAX_RANK];
    TensorValue::from_fn(t.chart, &var, |idx| {
        let r = idx.len();
        j[..r].copy_from_slice(idx);
        let mut s = C64::new(0.0, 0.0);
        for e in 0..n {
            j[slot] = e;
            s += t.get(&j[..r]) * m[idx[slot]][e];
        }
        s
    })
}

fn average_over(t: &TensorValue, slots: &[usize], signed: bool) -> TensorValue {
    let perms = permutations(slots.len());
    let w = 1.0 / perms.len() as f64;
    let mut j = [0usize; MAX_RANK];
    let mut out = TensorValue::from_fn(t.chart, &t.variance, |idx| {
        let r = idx.len();
        let mut s = C64::new(0.0, 0.0);
        for (p, sign) in &perms {
            j[..r].copy_from_slice(idx);
            for (k, &pk) in p.iter().enumerate() {
                j[slots[k]] = idx[slots[pk]];
            }
            let f = if signed { *sign } else { 1.0 };
            s += t.get(&j[..r]) * f;
        }
        s * w
    });
    if t.rank() == 2 && slots.len() == 2 {
        out.symmetry = if signed { Symmetry::Antisymmetric } else { Symmetry::Symmetric };
    }
    out
}

/// Raise, lower, symmetrize or antisymmetrize the listed slots.
///
/// Symmetrization averages over all permutations of the listed slots
/// (weight `1/n!`), so it is idempotent.
pub fn index_ops(
    t: &TensorValue,
    metric: &MetricData,
    action: IndexAction,
    slots: &[usize],
) -> Result<TensorValue> {
    if t.chart != metric.chart {
        return Err(Error::ChartMismatch(format!("{:?} tensor, {:?} metric", t.chart, metric.chart)));
    }
    check_slots(t, slots)?;
    match action {
        IndexAction::Raise | IndexAction::Lower => {
            let (from, to, m) = if action == IndexAction::Raise {
                (Variance::Down, Variance::Up, &metric.g_inv)
            } else {
                (Variance::Up, Variance::Down, &metric.g)
            };
            let mut out = t.clone();
            for &s in slots {
                if out.variance[s] != from {
                    return Err(Error::VarianceMismatch { slot: s });
                }
                out = move_slot(&out, s, m, to);
            }
            if t.rank() == 2 && slots.len() == 2 {
                out.symmetry = t.symmetry;
            }
            Ok(out)
        }
        IndexAction::Symmetrize | IndexAction::Antisymmetrize => {
            if let Some(&s) = slots.iter().find(|&&s| t.variance[s] != t.variance[slots[0]]) {
                return Err(Error::VarianceMismatch { slot: s });
            }
            Ok(average_over(t, slots, action == IndexAction::Antisymmetrize))
        }
    }
}

/// Contract two slots, using the metric when both have the same variance.
pub fn contract(t: &TensorValue, metric: &MetricData, s1: usize, s2: usize) -> Result<TensorValue> {
    check_slots(t, &[s1, s2])?;
    let n = t.dim();
    let (v1, v2) = (t.variance[s1], t.variance[s2]);
    let w: Mat4 = match (v1, v2) {
        (Variance::Down, Variance::Down) => metric.g_inv,
        (Variance::Up, Variance::Up) => metric.g,
        _ => {
            let mut id = [[0.0; 4]; 4];
            for (i, row) in id.iter_mut().enumerate() {
                row[i] = 1.0;
            }
            id
        }
    };
    let rest: Vec<usize> = (0..t.rank()).filter(|&s| s != s1 && s != s2).collect();
    let var: Vec<Variance> = rest.iter().map(|&s| t.variance[s]).collect();
    let mut j = [0usize; MAX_RANK];
    Ok(TensorValue::from_fn(t.chart, &var, |idx| {
        for (k, &s) in rest.iter().enumerate() {
            j[s] = idx[k];
        }
        let mut s = C64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                if w[a][b] == 0.0 {
                    continue;
                }
                j[s1] = a;
                j[s2] = b;
                s += t.get(&j[..t.rank()]) * w[a][b];
            }
        }
        s
    }))
}

/// Levi-Civita tensor `ε_abcd = √|g| [abcd]` with `ε_trθφ = +√|g|`.
pub fn levi_civita(metric: &MetricData, a: usize, b: usize, c: usize, d: usize) -> f64 {
    metric.sqrt_abs_det * permutation_sign(&[a, b, c, d])
}

/// Hodge dual of a covariant two-form: `(*F)_ab = ½ ε_abcd F^cd`.
pub fn hodge_dual2(f: &TensorValue, metric: &MetricData) -> Result<TensorValue> {
    if f.chart != metric.chart {
        return Err(Error::ChartMismatch("hodge dual".into()));
    }
    if f.chart.dim() != 4 {
        return Err(Error::Shape("hodge dual of two-forms needs four dimensions".into()));
    }
    if f.rank() != 2 || f.variance != [Variance::Down, Variance::Down] {
        return Err(Error::Shape("hodge dual expects a covariant rank 2 tensor".into()));
    }
    let defect = f.antisymmetry_defect();
    if defect > 1e-12 * f.max_abs().max(1e-300) {
        return Err(Error::NotAntisymmetric { defect });
    }
    let up = index_ops(f, metric, IndexAction::Raise, &[0, 1])?;
    let mut out = TensorValue::zeros(f.chart, &[Variance::Down, Variance::Down]);
    for a in 0..4 {
        for b in 0..4 {
            if a == b {
                continue;
            }
            let mut s = C64::new(0.0, 0.0);
            for c in 0..4 {
                for d in 0..4 {
                    let e = permutation_sign(&[a, b, c, d]);
                    if e != 0.0 {
                        s += up.get2(c, d) * e;
                    }
                }
            }
            out.set(&[a, b], s * (0.5 * metric.sqrt_abs_det));
        }
    }
    out.symmetry = Symmetry::Antisymmetric;
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FdScheme {
    Central2,
    #[default]
    Central4,
}

impl FdScheme {
    pub fn order(self) -> u32 {
        match self {
            FdScheme::Central2 => 2,
            FdScheme::Central4 => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FdOptions {
    /// `None` selects [`default_fd_step`].
    pub step: Option<f64>,
    pub scheme: FdScheme,
}

impl FdOptions {
    pub fn new(step: f64, scheme: FdScheme) -> Self {
        FdOptions { step: Some(step), scheme }
    }
}

/// `1e-3 · max(1, |r|)` with `r = p[1]`.
pub fn default_fd_step(p: &[f64; 4]) -> f64 {
    1e-3 * p[1].abs().max(1.0)
}

/// Coordinate partials `∂_d T` by central differences, one per coordinate.
pub fn partial_fd<F>(field: &F, p: &[f64; 4], dim: usize, h: f64, scheme: FdScheme) -> Result<Vec<TensorValue>>
where
    F: Fn(&[f64; 4]) -> Result<TensorValue> + ?Sized,
{
    let at = |d: usize, s: f64| {
        let mut q = *p;
        q[d] += s;
        field(&q)
    };
    let mut out = Vec::with_capacity(dim);
    for d in 0..dim {
        let t = match scheme {
            FdScheme::Central2 => at(d, h)?.sub(&at(d, -h)?)?.scale(C64::new(0.5 / h, 0.0)),
            FdScheme::Central4 => {
                let a = at(d, h)?.sub(&at(d, -h)?)?.scale(C64::new(8.0, 0.0));
                let b = at(d, 2.0 * h)?.sub(&at(d, -2.0 * h)?)?;
                a.sub(&b)?.scale(C64::new(1.0 / (12.0 * h), 0.0))
            }
        };
        out.push(t);
    }
    Ok(out)
}

/// Assemble `∇_d T` (derivative index first) from coordinate partials.
pub fn covariant_from_partials(
    value: &TensorValue,
    partials: &[TensorValue],
    metric: &MetricData,
) -> Result<TensorValue> {
    if value.chart != metric.chart {
        return Err(Error::ChartMismatch("covariant derivative".into()));
    }
    let n = value.dim();
    if partials.len() != n || value.rank() + 1 > MAX_RANK {
        return Err(Error::Shape("covariant derivative shape".into()));
    }
    let rank = value.rank();
    let mut var = vec![Variance::Down];
    var.extend_from_slice(&value.variance);
    let gam = &metric.christoffel;
    let mut j = [0usize; MAX_RANK];
    Ok(TensorValue::from_fn(value.chart, &var, |idx| {
        let d = idx[0];
        let ti = &idx[1..];
        let mut s = partials[d].get(ti);
        for slot in 0..rank {
            j[..rank].copy_from_slice(ti);
            for e in 0..n {
                j[slot] = e;
                let c = match value.variance[slot] {
                    Variance::Down => -gam[e][d][ti[slot]],
                    Variance::Up => gam[ti[slot]][d][e],
                };
                if c != 0.0 {
                    s += value.get(&j[..rank]) * c;
                }
            }
        }
        s
    }))
}

/// Covariant derivative of a tensor field sampler at `p`, with the
/// derivative index placed first. Partials are taken by central finite
/// differences; the connection terms use the analytic Christoffel symbols in
/// `metric`, which must describe the geometry at `p`.
pub fn cov_deriv_fd<F>(field: &F, metric: &MetricData, p: &[f64; 4], opts: FdOptions) -> Result<TensorValue>
where
    F: Fn(&[f64; 4]) -> Result<TensorValue> + ?Sized,
{
    let h = opts.step.unwrap_or_else(|| default_fd_step(p));
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("finite difference step {h}")));
    }
    let value = field(p)?;
    let partials = partial_fd(field, p, value.dim(), h, opts.scheme)?;
    covariant_from_partials(&value, &partials, metric)
}
