//! Quadrature on `S^{n-1}`, spherical-harmonic projection and diagonal
//! multiplier operators.
//!
//! Grids are products of Gauss–Gegenbauer rules in the polar coordinates
//! `t_j = cos(theta_j)` (weight `(1 - t^2)^{(e-3)/2}` at the level of
//! `S^{e-1}`) and an equispaced rule in the azimuth. With `m` polar nodes
//! and `2m` azimuthal nodes the grid integrates every polynomial of degree
//! `<= 2m - 1` exactly and is symmetric under `u -> -u`.
//!
//! Harmonic projection is done by a separable transform: the azimuth is
//! expanded in a real Fourier basis and every polar level is expanded in
//! normalized associated Gegenbauer functions. For a grid with `m` polar
//! nodes this is exact for band limit `lmax <= m - 1`. The zonal
//! Funk–Hecke projector [`project_degree_zonal`] is kept as an independent
//! `O(N^2)` reference.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::specfun::{self, ln_abs_gamma};

/// Default number of polar nodes per dimension.
pub fn default_resolution(n: usize) -> usize {
    match n {
        2 => 64,
        3 => 48,
        4 => 32,
        5 => 24,
        _ => 18,
    }
}

/// Smallest resolution whose grid resolves band limit `lmax` exactly.
pub fn min_resolution(lmax: usize) -> usize {
    lmax + 1
}

/// Neumaier-compensated sum in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in iter {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss rule for the weight `(1 - t^2)^{mu - 1/2}` on `[-1, 1]`.
///
/// `mu = 1/2` is Gauss–Legendre, `mu = 0` is Gauss–Chebyshev. Nodes are
/// exactly antisymmetric and weights symmetric.
pub fn gauss_gegenbauer(m: usize, mu: f64) -> GaussRule {
    assert!(m >= 1);
    assert!(mu >= 0.0);
    let (mut nodes, mut weights) = if mu == 0.0 {
        let nodes: Vec<f64> = (0..m)
            .map(|i| -((2 * i + 1) as f64 * PI / (2 * m) as f64).cos())
            .collect();
        (nodes, vec![PI / m as f64; m])
    } else {
        let mut jac = DMatrix::<f64>::zeros(m, m);
        for k in 1..m {
            let kf = k as f64;
            let beta = kf * (kf + 2.0 * mu - 1.0) / (4.0 * (kf + mu) * (kf + mu - 1.0));
            jac[(k, k - 1)] = beta.sqrt();
            jac[(k - 1, k)] = beta.sqrt();
        }
        let eig = SymmetricEigen::new(jac);
        let mass = PI.sqrt() * (ln_abs_gamma(mu + 0.5) - ln_abs_gamma(mu + 1.0)).exp();
        let mut pairs: Vec<(f64, f64)> = (0..m)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], mass * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    };
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let t = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -t;
        nodes[j] = t;
        weights[i] = w;
        weights[j] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

/// Product quadrature grid on `S^{n-1}`.
///
/// Node order is row-major over `(i_1, ..., i_{n-2}, l)`, with the first
/// coordinate `u_1 = t_1` attached to the outermost polar index and the
/// azimuth index `l` varying fastest.
pub struct SphereGrid {
    n: usize,
    resolution: usize,
    polar: Vec<GaussRule>,
    azimuth: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereGrid")
            .field("n", &self.n)
            .field("resolution", &self.resolution)
            .field("len", &self.len())
            .finish()
    }
}

impl SphereGrid {
    /// Grid on `S^{n-1}` for `2 <= n <= 6` with `resolution` polar nodes
    /// (`2 * resolution` nodes on the circle when `n = 2`).
    pub fn new(n: usize, resolution: usize) -> Result<Self> {
        if !(2..=6).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        if resolution < 4 {
            return Err(Error::OutOfRange(format!(
                "grid resolution must be >= 4, got {resolution}"
            )));
        }
        Ok(Self::build(n, resolution))
    }

    /// Two-point rule on `S^0`.
    pub(crate) fn zero_sphere() -> Self {
        Self {
            n: 1,
            resolution: 1,
            polar: Vec::new(),
            azimuth: 0,
            nodes: vec![1.0, -1.0],
            weights: vec![1.0, 1.0],
        }
    }

    pub(crate) fn build(n: usize, resolution: usize) -> Self {
        if n == 1 {
            return Self::zero_sphere();
        }
        let m = resolution;
        let polar: Vec<GaussRule> = (0..n - 2)
            .map(|depth| {
                let e = n - depth;
                gauss_gegenbauer(m, (e as f64 - 2.0) / 2.0)
            })
            .collect();
        let azimuth = 2 * m;
        let dphi = 2.0 * PI / azimuth as f64;
        let rows = m.pow((n - 2) as u32);
        let total = rows * azimuth;
        let mut nodes = vec![0.0; total * n];
        let mut weights = vec![0.0; total];
        let mut idx = vec![0usize; n - 2];
        for r in 0..rows {
            let mut rem = r;
            for d in (0..n - 2).rev() {
                idx[d] = rem % m;
                rem /= m;
            }
            let mut prefix = vec![0.0; n];
            let mut s = 1.0;
            let mut w = dphi;
            for d in 0..n - 2 {
                let t = polar[d].nodes[idx[d]];
                prefix[d] = s * t;
                s *= (1.0 - t * t).sqrt();
                w *= polar[d].weights[idx[d]];
            }
            for l in 0..azimuth {
                let phi = (l as f64 + 0.5) * dphi;
                let i = r * azimuth + l;
                let u = &mut nodes[i * n..(i + 1) * n];
                u[..n - 2].copy_from_slice(&prefix[..n - 2]);
                u[n - 2] = s * phi.cos();
                u[n - 1] = s * phi.sin();
                weights[i] = w;
            }
        }
        Self {
            n,
            resolution,
            polar,
            azimuth,
            nodes,
            weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.n..(i + 1) * self.n]
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.n)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Highest harmonic degree the grid resolves exactly.
    pub fn max_degree(&self) -> usize {
        match self.n {
            1 => 0,
            2 => (self.azimuth - 1) / 2,
            _ => self.resolution - 1,
        }
    }

    /// Index of the node `-u_i`.
    pub fn antipode(&self, i: usize) -> usize {
        if self.n == 1 {
            return 1 - i;
        }
        let m = self.resolution;
        let l = i % self.azimuth;
        let mut r = i / self.azimuth;
        let mut mirrored = 0;
        let mut place = 1;
        for _ in 0..self.n - 2 {
            let d = r % m;
            r /= m;
            mirrored += (m - 1 - d) * place;
            place *= m;
        }
        mirrored * self.azimuth + (l + self.azimuth / 2) % self.azimuth
    }
}

/// Quadrature grid on `S^{n-1}`, shared by reference count.
pub fn build_grid(n: usize, resolution: usize) -> Result<Arc<SphereGrid>> {
    SphereGrid::new(n, resolution).map(Arc::new)
}

pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Function sampled on a [`SphereGrid`], optionally carrying the exact
/// evaluator it was sampled from.
#[derive(Clone)]
pub struct SphericalFunction {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
    evaluator: Option<Evaluator>,
}

impl fmt::Debug for SphericalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphericalFunction")
            .field("grid", &self.grid)
            .field("has_evaluator", &self.evaluator.is_some())
            .finish()
    }
}

impl SphericalFunction {
    pub fn from_values(grid: Arc<SphereGrid>, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len());
        Self {
            grid,
            values,
            evaluator: None,
        }
    }

    /// Samples `f` on the grid and keeps it as the exact evaluator.
    pub fn from_fn<F>(grid: Arc<SphereGrid>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let evaluator: Evaluator = Arc::new(f);
        Self::from_evaluator(grid, evaluator)
    }

    pub fn from_evaluator(grid: Arc<SphereGrid>, evaluator: Evaluator) -> Self {
        let n = grid.dim();
        let values: Vec<f64> = grid
            .nodes
            .par_chunks_exact(n)
            .map(|u| evaluator(u))
            .collect();
        Self {
            grid,
            values,
            evaluator: Some(evaluator),
        }
    }

    /// Attaches an exact evaluator to sampled values.
    pub fn with_evaluator(mut self, evaluator: Evaluator) -> Self {
        self.evaluator = Some(evaluator);
        self
    }

    pub fn constant(grid: Arc<SphereGrid>, c: f64) -> Self {
        Self::from_fn(grid, move |_| c)
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn evaluator(&self) -> Option<&Evaluator> {
        self.evaluator.as_ref()
    }

    /// Exact value at an arbitrary unit vector, when an evaluator exists.
    pub fn eval(&self, u: &[f64]) -> Option<f64> {
        self.evaluator.as_ref().map(|f| f(u))
    }

    /// Pointwise map of grid values; the evaluator is composed as well.
    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    {
        let values = self.values.iter().map(|&v| f(v)).collect();
        let evaluator = self.evaluator.clone().map(|e| {
            let f = f.clone();
            Arc::new(move |u: &[f64]| f(e(u))) as Evaluator
        });
        Self {
            grid: self.grid.clone(),
            values,
            evaluator,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(move |v| c * v)
    }

    pub fn zip_with<F>(&self, other: &Self, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64,
    {
        assert!(Arc::ptr_eq(&self.grid, &other.grid) || self.grid.len() == other.grid.len());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_values(self.grid.clone(), values)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    /// Largest `|f(u) - f(-u)|` over the grid.
    pub fn oddness(&self) -> f64 {
        (0..self.values.len())
            .map(|i| (self.values[i] - self.values[self.grid.antipode(i)]).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_even(&self, tol: f64) -> bool {
        self.oddness() <= tol
    }
}

/// `sum_i w_i f(u_i)` with compensated summation in node order.
pub fn integrate(f: &SphericalFunction) -> f64 {
    compensated_sum(
        f.grid
            .weights
            .iter()
            .zip(&f.values)
            .map(|(&w, &v)| w * v),
    )
}

/// Integral of `f * g` over the sphere.
pub fn inner(f: &SphericalFunction, g: &SphericalFunction) -> f64 {
    compensated_sum(
        f.grid
            .weights
            .iter()
            .zip(f.values.iter().zip(&g.values))
            .map(|(&w, (&a, &b))| w * a * b),
    )
}

/// Quadrature on the great subsphere `S^{n-1} ∩ xi^⊥`.
#[derive(Debug, Clone)]
pub struct SubsphereRule {
    pub n: usize,
    /// Orthonormal basis of `xi^⊥` (`n - 1` vectors of length `n`).
    pub basis: Vec<Vec<f64>>,
    /// Embedded nodes, flat `len * n`.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SubsphereRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        compensated_sum((0..self.len()).map(|i| self.weights[i] * f(self.point(i))))
    }
}

/// Orthonormal basis of `xi^⊥` from the Householder reflection that maps
/// `e_n` to `xi`.
pub fn orthogonal_basis(xi: &[f64]) -> Vec<Vec<f64>> {
    let n = xi.len();
    let mut v: Vec<f64> = xi.iter().map(|x| -x).collect();
    v[n - 1] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    (0..n - 1)
        .map(|j| {
            let mut col = vec![0.0; n];
            col[j] = 1.0;
            if vv > 1e-28 {
                let c = 2.0 * v[j] / vv;
                for (ci, vi) in col.iter_mut().zip(&v) {
                    *ci -= c * vi;
                }
            }
            col
        })
        .collect()
}

/// Embeds an `(n-2)`-sphere grid of the given resolution into `xi^⊥`.
pub fn subsphere_quadrature(xi: &[f64], resolution: usize) -> SubsphereRule {
    let n = xi.len();
    assert!(n >= 2);
    let basis = orthogonal_basis(xi);
    let sub = SphereGrid::build(n - 1, resolution);
    let mut points = vec![0.0; sub.len() * n];
    for (i, y) in sub.nodes().enumerate() {
        let p = &mut points[i * n..(i + 1) * n];
        for (yj, b) in y.iter().zip(&basis) {
            for (pk, bk) in p.iter_mut().zip(b) {
                *pk += yj * bk;
            }
        }
    }
    SubsphereRule {
        n,
        basis,
        points,
        weights: sub.weights,
    }
}

/// Per-even-degree scalars of a diagonal operator on even functions.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSequence {
    pub n: usize,
    /// `entries[j]` multiplies degree `2j`.
    pub entries: Vec<f64>,
    pub descriptor: String,
}

impl MultiplierSequence {
    pub fn from_fn<F: Fn(usize) -> f64>(n: usize, lmax: usize, descriptor: &str, f: F) -> Self {
        Self {
            n,
            entries: (0..=lmax / 2).map(|j| f(2 * j)).collect(),
            descriptor: descriptor.to_string(),
        }
    }

    pub fn lmax(&self) -> usize {
        2 * (self.entries.len() - 1)
    }

    /// Multiplier of degree `k`; odd degrees are zero.
    pub fn get(&self, k: usize) -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            self.entries.get(k / 2).copied().unwrap_or(0.0)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|x| x.is_finite())
    }

    /// Degree-wise product of two sequences.
    pub fn compose(&self, other: &Self) -> Self {
        let len = self.entries.len().min(other.entries.len());
        Self {
            n: self.n,
            entries: (0..len)
                .map(|j| self.entries[j] * other.entries[j])
                .collect(),
            descriptor: format!("{}∘{}", self.descriptor, other.descriptor),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|x| c * x).collect(),
            descriptor: format!("{c}·{}", self.descriptor),
        }
    }
}

struct Level {
    degree: Vec<usize>,
    /// `child_start[p]..child_start[p + 1]` are the children of entry `p`
    /// of the previous level.
    child_start: Vec<usize>,
}

/// Index layout of the separable harmonic coefficients for `(n, lmax)`.
pub struct HarmonicLayout {
    n: usize,
    lmax: usize,
    levels: Vec<Level>,
}

impl fmt::Debug for HarmonicLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HarmonicLayout")
            .field("n", &self.n)
            .field("lmax", &self.lmax)
            .field("len", &self.len())
            .finish()
    }
}

impl HarmonicLayout {
    pub fn new(n: usize, lmax: usize) -> Self {
        assert!(n >= 2);
        let base = Level {
            degree: (0..=2 * lmax).map(|s| (s + 1) / 2).collect(),
            child_start: Vec::new(),
        };
        let mut levels = vec![base];
        for _ in 1..n - 1 {
            let prev = levels.last().unwrap();
            let mut degree = Vec::new();
            let mut child_start = Vec::with_capacity(prev.degree.len() + 1);
            for &d in &prev.degree {
                child_start.push(degree.len());
                degree.extend(d..=lmax);
            }
            child_start.push(degree.len());
            levels.push(Level {
                degree,
                child_start,
            });
        }
        Self { n, lmax, levels }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn len(&self) -> usize {
        self.levels.last().unwrap().degree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total degree of each coefficient.
    pub fn degrees(&self) -> &[usize] {
        &self.levels.last().unwrap().degree
    }
}

/// Normalized associated Gegenbauer function
/// `(1 - t^2)^{d/2} C_{k-d}^{(d+mu)}(t) / sqrt(h)` for all `d <= k <= lmax`.
fn associated_gegenbauer_row(lmax: usize, mu: f64, t: f64, out: &mut [f64]) {
    let s2 = (1.0 - t * t).max(0.0);
    for d in 0..=lmax {
        let lam = d as f64 + mu;
        let envelope = s2.powf(d as f64 / 2.0);
        // forward recurrence on normalized polynomials
        let mut prev = 0.0;
        let mut cur = 1.0 / gegenbauer_norm(0, lam).sqrt();
        for j in 0..=(lmax - d) {
            out[d * (lmax + 1) + j] = envelope * cur;
            let jf = j as f64;
            // C_{j+1} = (2(lam+j) t C_j - (2lam+j-1) C_{j-1}) / (j+1), rescaled
            let hj = gegenbauer_norm(j, lam);
            let hn = gegenbauer_norm(j + 1, lam);
            let a = 2.0 * (lam + jf) / (jf + 1.0) * (hj / hn).sqrt();
            let b = if j == 0 {
                0.0
            } else {
                let hp = gegenbauer_norm(j - 1, lam);
                (2.0 * lam + jf - 1.0) / (jf + 1.0) * (hp / hn).sqrt()
            };
            let next = a * t * cur - b * prev;
            prev = cur;
            cur = next;
        }
    }
}

/// `int_{-1}^{1} (1-t^2)^{lam-1/2} C_j^{(lam)}(t)^2 dt`
fn gegenbauer_norm(j: usize, lam: f64) -> f64 {
    let jf = j as f64;
    let ln = PI.ln() + (1.0 - 2.0 * lam) * 2f64.ln() + ln_abs_gamma(jf + 2.0 * lam)
        - ln_abs_gamma(jf + 1.0)
        - (jf + lam).ln()
        - 2.0 * ln_abs_gamma(lam);
    ln.exp()
}

struct PolarTable {
    m: usize,
    lmax: usize,
    /// `[i][d][k-d]` basis values at node `i`.
    synth: Vec<f64>,
    /// same, multiplied by the Gauss weight
    analysis: Vec<f64>,
}

impl PolarTable {
    fn new(rule: &GaussRule, mu: f64, lmax: usize) -> Self {
        let m = rule.nodes.len();
        let stride = (lmax + 1) * (lmax + 1);
        let mut synth = vec![0.0; m * stride];
        for (i, &t) in rule.nodes.iter().enumerate() {
            associated_gegenbauer_row(lmax, mu, t, &mut synth[i * stride..(i + 1) * stride]);
        }
        let analysis = synth
            .chunks_exact(stride)
            .zip(&rule.weights)
            .flat_map(|(row, &w)| row.iter().map(move |v| v * w))
            .collect();
        Self {
            m,
            lmax,
            synth,
            analysis,
        }
    }

    #[inline]
    fn index(&self, i: usize, d: usize, k: usize) -> usize {
        let s = self.lmax + 1;
        i * s * s + d * s + (k - d)
    }
}

/// Analysis/synthesis between grid values and separable harmonic
/// coefficients, for a fixed grid and band limit.
pub struct HarmonicTransform {
    grid: Arc<SphereGrid>,
    layout: Arc<HarmonicLayout>,
    azimuth_synth: Vec<f64>,
    azimuth_analysis: Vec<f64>,
    polar: Vec<PolarTable>,
}

impl HarmonicTransform {
    pub fn new(grid: Arc<SphereGrid>, lmax: usize) -> Result<Self> {
        let n = grid.dim();
        if n < 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        if lmax > specfun::MAX_DEGREE {
            return Err(Error::OutOfRange(format!(
                "band limit {lmax} exceeds {}",
                specfun::MAX_DEGREE
            )));
        }
        let layout = Arc::new(HarmonicLayout::new(n, lmax));
        Ok(Self::with_layout(grid, layout))
    }

    pub fn with_layout(grid: Arc<SphereGrid>, layout: Arc<HarmonicLayout>) -> Self {
        let n = grid.dim();
        let lmax = layout.lmax;
        let big_m = grid.azimuth;
        let dphi = 2.0 * PI / big_m as f64;
        let s0 = 2 * lmax + 1;
        let mut azimuth_synth = vec![0.0; s0 * big_m];
        for l in 0..big_m {
            let phi = (l as f64 + 0.5) * dphi;
            azimuth_synth[l] = 1.0 / (2.0 * PI).sqrt();
            for q in 1..=lmax {
                let qf = q as f64;
                azimuth_synth[(2 * q - 1) * big_m + l] = (qf * phi).cos() / PI.sqrt();
                azimuth_synth[(2 * q) * big_m + l] = (qf * phi).sin() / PI.sqrt();
            }
        }
        let azimuth_analysis = azimuth_synth.iter().map(|v| v * dphi).collect();
        // level L (1-based) consumes depth n-2-L and lives on S^{L+1}
        let polar = (1..n - 1)
            .map(|level| {
                let depth = n - 2 - level;
                PolarTable::new(&grid.polar[depth], level as f64 / 2.0, lmax)
            })
            .collect();
        Self {
            grid,
            layout,
            azimuth_synth,
            azimuth_analysis,
            polar,
        }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn layout(&self) -> &Arc<HarmonicLayout> {
        &self.layout
    }

    /// Grid values to coefficients. Exact for band-limited input when the
    /// grid resolves `lmax`.
    pub fn analyze(&self, values: &[f64]) -> Result<Spectrum> {
        if self.grid.max_degree() < self.layout.lmax {
            return Err(Error::OutOfRange(format!(
                "grid resolution {} cannot resolve band limit {}",
                self.grid.resolution, self.layout.lmax
            )));
        }
        assert_eq!(values.len(), self.grid.len());
        let big_m = self.grid.azimuth;
        let s0 = 2 * self.layout.lmax + 1;
        let mut cur = vec![0.0; (values.len() / big_m) * s0];
        cur.par_chunks_mut(s0).enumerate().for_each(|(r, out)| {
            let row = &values[r * big_m..(r + 1) * big_m];
            for (s, o) in out.iter_mut().enumerate() {
                let tab = &self.azimuth_analysis[s * big_m..(s + 1) * big_m];
                *o = row.iter().zip(tab).map(|(a, b)| a * b).sum();
            }
        });
        let mut width = s0;
        for (li, table) in self.polar.iter().enumerate() {
            let prev = &self.layout.levels[li];
            let level = &self.layout.levels[li + 1];
            let m = table.m;
            let new_width = level.degree.len();
            let rows = cur.len() / (m * width);
            let mut next = vec![0.0; rows * new_width];
            next.par_chunks_mut(new_width).enumerate().for_each(|(p, out)| {
                let block = &cur[p * m * width..(p + 1) * m * width];
                for (parent, &d) in prev.degree.iter().enumerate() {
                    for child in level.child_start[parent]..level.child_start[parent + 1] {
                        let k = level.degree[child];
                        let mut acc = 0.0;
                        for i in 0..m {
                            acc += table.analysis[table.index(i, d, k)] * block[i * width + parent];
                        }
                        out[child] = acc;
                    }
                }
            });
            cur = next;
            width = new_width;
        }
        Ok(Spectrum {
            layout: self.layout.clone(),
            coeffs: cur,
        })
    }

    /// Coefficients to grid values (any grid resolution).
    pub fn synthesize(&self, spectrum: &Spectrum) -> Vec<f64> {
        assert_eq!(spectrum.layout.n, self.layout.n);
        assert_eq!(spectrum.layout.lmax, self.layout.lmax);
        let mut cur = spectrum.coeffs.clone();
        for (li, table) in self.polar.iter().enumerate().rev() {
            let prev = &self.layout.levels[li];
            let level = &self.layout.levels[li + 1];
            let m = table.m;
            let width = level.degree.len();
            let prev_width = prev.degree.len();
            let rows = cur.len() / width;
            let mut next = vec![0.0; rows * m * prev_width];
            next.par_chunks_mut(m * prev_width)
                .enumerate()
                .for_each(|(p, out)| {
                    let src = &cur[p * width..(p + 1) * width];
                    for (parent, &d) in prev.degree.iter().enumerate() {
                        for child in level.child_start[parent]..level.child_start[parent + 1] {
                            let c = src[child];
                            if c == 0.0 {
                                continue;
                            }
                            let k = level.degree[child];
                            for i in 0..m {
                                out[i * prev_width + parent] += table.synth[table.index(i, d, k)] * c;
                            }
                        }
                    }
                });
            cur = next;
        }
        let big_m = self.grid.azimuth;
        let s0 = 2 * self.layout.lmax + 1;
        let mut values = vec![0.0; self.grid.len()];
        values.par_chunks_mut(big_m).enumerate().for_each(|(r, out)| {
            let src = &cur[r * s0..(r + 1) * s0];
            for (s, &c) in src.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let tab = &self.azimuth_synth[s * big_m..(s + 1) * big_m];
                for (o, b) in out.iter_mut().zip(tab) {
                    *o += c * b;
                }
            }
        });
        values
    }

    pub fn synthesize_function(&self, spectrum: &Spectrum) -> SphericalFunction {
        SphericalFunction::from_values(self.grid.clone(), self.synthesize(spectrum))
    }
}

/// Coefficients of a function in the separable orthonormal harmonic basis,
/// truncated at `lmax`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    layout: Arc<HarmonicLayout>,
    coeffs: Vec<f64>,
}

impl Spectrum {
    pub fn layout(&self) -> &Arc<HarmonicLayout> {
        &self.layout
    }

    pub fn lmax(&self) -> usize {
        self.layout.lmax
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Multiplies every coefficient of total degree `k` by `f(k)`.
    pub fn scale_by_degree<F: Fn(usize) -> f64>(&self, f: F) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.layout.degrees())
            .map(|(&c, &k)| if c == 0.0 { 0.0 } else { c * f(k) })
            .collect();
        Self {
            layout: self.layout.clone(),
            coeffs,
        }
    }

    pub fn apply(&self, m: &MultiplierSequence) -> Self {
        self.scale_by_degree(|k| m.get(k))
    }

    pub fn degree_component(&self, k: usize) -> Self {
        self.scale_by_degree(|j| if j == k { 1.0 } else { 0.0 })
    }

    /// `sum of c^2` over degree `k`, i.e. `||P_k f||_2^2`.
    pub fn degree_energy(&self, k: usize) -> f64 {
        self.coeffs
            .iter()
            .zip(self.layout.degrees())
            .filter(|(_, &d)| d == k)
            .map(|(c, _)| c * c)
            .sum()
    }

    /// `int f g` computed from coefficients.
    pub fn dot(&self, other: &Self) -> f64 {
        compensated_sum(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b))
    }

    /// Value of the truncated expansion at an arbitrary unit vector.
    pub fn evaluate(&self, u: &[f64]) -> f64 {
        let n = self.layout.n;
        let lmax = self.layout.lmax;
        assert_eq!(u.len(), n);
        // spherical coordinates of u, outermost first
        let mut ts = Vec::with_capacity(n.saturating_sub(2));
        let mut rest: Vec<f64> = u.to_vec();
        for _ in 0..n - 2 {
            let t = rest[0].clamp(-1.0, 1.0);
            let tail = &rest[1..];
            let norm = tail.iter().map(|x| x * x).sum::<f64>().sqrt();
            ts.push(t);
            rest = if norm > 1e-300 {
                tail.iter().map(|x| x / norm).collect()
            } else {
                let mut e = vec![0.0; tail.len()];
                e[0] = 1.0;
                e
            };
        }
        let phi = rest[1].atan2(rest[0]);
        let s0 = 2 * lmax + 1;
        let mut basis = vec![0.0; s0];
        basis[0] = 1.0 / (2.0 * PI).sqrt();
        for q in 1..=lmax {
            let qf = q as f64;
            basis[2 * q - 1] = (qf * phi).cos() / PI.sqrt();
            basis[2 * q] = (qf * phi).sin() / PI.sqrt();
        }
        let stride = (lmax + 1) * (lmax + 1);
        let mut row = vec![0.0; stride];
        for li in 1..n - 1 {
            let depth = n - 2 - li;
            associated_gegenbauer_row(lmax, li as f64 / 2.0, ts[depth], &mut row);
            let prev = &self.layout.levels[li - 1];
            let level = &self.layout.levels[li];
            let mut next = vec![0.0; level.degree.len()];
            for (parent, &d) in prev.degree.iter().enumerate() {
                for child in level.child_start[parent]..level.child_start[parent + 1] {
                    let k = level.degree[child];
                    next[child] = row[d * (lmax + 1) + (k - d)] * basis[parent];
                }
            }
            basis = next;
        }
        compensated_sum(self.coeffs.iter().zip(&basis).map(|(c, b)| c * b))
    }
}

/// Spectrum of `f` truncated at `lmax`.
pub fn analyze(f: &SphericalFunction, lmax: usize) -> Result<Spectrum> {
    HarmonicTransform::new(f.grid.clone(), lmax)?.analyze(&f.values)
}

/// Grid values of a spectrum on `grid`.
/// Grid values of a spectrum on `grid`; the result evaluates the
/// truncated expansion exactly off the grid.
pub fn synthesize(spectrum: &Spectrum, grid: Arc<SphereGrid>) -> SphericalFunction {
    let values = HarmonicTransform::with_layout(grid.clone(), spectrum.layout.clone())
        .synthesize(spectrum);
    let spec = spectrum.clone();
    SphericalFunction {
        grid,
        values,
        evaluator: Some(Arc::new(move |u: &[f64]| spec.evaluate(u))),
    }
}

/// Degree-`k` component `P_k f` (even `k` only).
pub fn project_degree(f: &SphericalFunction, k: usize) -> Result<SphericalFunction> {
    if k % 2 == 1 {
        return Err(Error::Domain(format!(
            "odd degree {k}: only even harmonics are represented"
        )));
    }
    let spec = analyze(f, k)?;
    Ok(synthesize(&spec.degree_component(k), f.grid.clone()))
}

/// All even components `P_0 f, P_2 f, ..., P_lmax f`.
pub fn decompose(f: &SphericalFunction, lmax: usize) -> Result<Vec<SphericalFunction>> {
    let tr = HarmonicTransform::new(f.grid.clone(), lmax)?;
    let spec = tr.analyze(&f.values)?;
    Ok((0..=lmax)
        .step_by(2)
        .map(|k| tr.synthesize_function(&spec.degree_component(k)))
        .collect())
}

/// `sum_k m_k P_k f`, truncated at the sequence's band limit.
pub fn apply_multiplier(f: &SphericalFunction, m: &MultiplierSequence) -> Result<SphericalFunction> {
    if m.n != f.grid.dim() {
        return Err(Error::DimensionMismatch(m.n, f.grid.dim()));
    }
    let spec = analyze(f, m.lmax())?;
    Ok(synthesize(&spec.apply(m), f.grid.clone()))
}

/// Funk–Hecke projection
/// `(dim H_k / |S^{n-1}|) int Z_k(<xi,u>) f(u) du` evaluated at every node.
/// Costs `O(N^2)`; used as an independent reference.
pub fn project_degree_zonal(f: &SphericalFunction, k: usize) -> Result<SphericalFunction> {
    if k % 2 == 1 {
        return Err(Error::Domain(format!(
            "odd degree {k}: only even harmonics are represented"
        )));
    }
    let grid = f.grid.clone();
    let n = grid.dim();
    let nu = specfun::sphere_index(n);
    let c = specfun::harmonic_dimension(n, k) / specfun::sphere_surface_area(n);
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|a| {
            let xi = grid.node(a);
            let acc = compensated_sum(grid.nodes().zip(&grid.weights).zip(&f.values).map(
                |((u, &w), &v)| {
                    let t: f64 = xi.iter().zip(u).map(|(x, y)| x * y).sum();
                    w * v * specfun::zonal(k, nu, t.clamp(-1.0, 1.0))
                },
            ));
            c * acc
        })
        .collect();
    Ok(SphericalFunction::from_values(grid, values))
}

/// Funk–Hecke multipliers (normalized to 1 at degree 0) of the zonal
/// kernel `D_M(t)^2`, where `D_M = sum_{j<=M} dim H_j Z_j` is the
/// reproducing kernel of degrees `<= M = order / 2`. The kernel is
/// nonnegative, so the operator maps nonnegative measures to nonnegative
/// functions, and it vanishes above degree `order`.
pub fn positive_kernel_multipliers(n: usize, order: usize) -> Vec<f64> {
    assert!(order % 2 == 0);
    let nu = specfun::sphere_index(n);
    let half = order / 2;
    let rule = gauss_gegenbauer(order + 2, nu);
    let kernel: Vec<f64> = rule
        .nodes
        .iter()
        .map(|&t| {
            let d: f64 = (0..=half)
                .map(|j| specfun::harmonic_dimension(n, j) * specfun::zonal(j, nu, t))
                .sum();
            d * d
        })
        .collect();
    let moment = |k: usize| -> f64 {
        compensated_sum(
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .zip(&kernel)
                .map(|((&t, &w), &kv)| w * kv * specfun::zonal(k, nu, t)),
        )
    };
    let base = moment(0);
    (0..=order)
        .map(|k| if k % 2 == 1 { 0.0 } else { moment(k) / base })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, r: usize) -> Arc<SphereGrid> {
        build_grid(n, r).unwrap()
    }

    #[test]
    fn gauss_rules_integrate_moments() {
        for &mu in &[0.0, 0.5, 1.0, 1.5, 2.0] {
            let rule = gauss_gegenbauer(12, mu);
            // int (1-t^2)^{mu-1/2} t^{2j} dt = B(j+1/2, mu+1/2)
            for j in 0..12 {
                let jf = j as f64;
                let exact = (ln_abs_gamma(jf + 0.5) + ln_abs_gamma(mu + 0.5)
                    - ln_abs_gamma(jf + mu + 1.0))
                .exp();
                let got: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(t, w)| w * t.powi(2 * j))
                    .sum();
                assert!((got - exact).abs() < 1e-12 * exact, "mu={mu} j={j}");
            }
        }
    }

    #[test]
    fn circle_grid() {
        let g = grid(2, 64);
        assert_eq!(g.len(), 128);
        let w0 = g.weights()[0];
        assert!(g.weights().iter().all(|&w| w == w0));
        let s: f64 = compensated_sum(g.weights().iter().copied());
        assert!((s - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn grid_invariants() {
        for n in 2..=6 {
            let g = grid(n, 8);
            for u in g.nodes() {
                let norm: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
            let s = compensated_sum(g.weights().iter().copied());
            let area = specfun::sphere_surface_area(n);
            assert!((s - area).abs() < 1e-8 * area, "n={n}");
            for i in 0..g.len() {
                let j = g.antipode(i);
                assert_eq!(g.weights()[i], g.weights()[j]);
                for (a, b) in g.node(i).iter().zip(g.node(j)) {
                    assert!((a + b).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(matches!(SphereGrid::new(7, 10), Err(Error::UnsupportedDimension(7))));
        assert!(matches!(SphereGrid::new(1, 10), Err(Error::UnsupportedDimension(1))));
        assert!(SphereGrid::new(3, 3).is_err());
    }

    #[test]
    fn integration_examples() {
        let g = grid(3, 16);
        assert!((integrate(&SphericalFunction::constant(g.clone(), 1.0)) - 4.0 * PI).abs() < 1e-10);
        let u3 = SphericalFunction::from_fn(g.clone(), |u| u[2] * u[2]);
        assert!((integrate(&u3) - 4.0 * PI / 3.0).abs() < 1e-10);
        let g4 = grid(4, 16);
        let u1 = SphericalFunction::from_fn(g4, |u| u[0] * u[0]);
        assert!((integrate(&u1) - PI * PI / 2.0).abs() < 1e-6);
    }

    #[test]
    fn subsphere_examples() {
        let r = subsphere_quadrature(&[0.0, 0.0, 1.0], 16);
        assert!((r.weights.iter().sum::<f64>() - 2.0 * PI).abs() < 1e-10);
        for i in 0..r.len() {
            assert!(r.point(i)[2].abs() < 1e-14);
        }
        let r4 = subsphere_quadrature(&[0.5, 0.5, 0.5, 0.5], 12);
        assert!((r4.weights.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-8);
        let s = 1.0 / 3f64.sqrt();
        let xi = [s, s, s];
        let b = orthogonal_basis(&xi);
        for v in &b {
            let d: f64 = v.iter().zip(&xi).map(|(a, b)| a * b).sum();
            assert!(d.abs() < 1e-12);
        }
        let d01: f64 = b[0].iter().zip(&b[1]).map(|(a, b)| a * b).sum();
        assert!(d01.abs() < 1e-12);
        let r2 = subsphere_quadrature(&[0.6, 0.8], 16);
        assert_eq!(r2.len(), 2);
        assert!((r2.point(0)[0] * 0.6 + r2.point(0)[1] * 0.8).abs() < 1e-14);
    }

    #[test]
    fn projection_examples() {
        let g = grid(3, 16);
        let one = SphericalFunction::constant(g.clone(), 1.0);
        let p0 = project_degree(&one, 0).unwrap();
        assert!(p0.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let p2 = project_degree(&one, 2).unwrap();
        assert!(p2.sup_norm() < 1e-8);
        let f = SphericalFunction::from_fn(g.clone(), |u| u[2] * u[2]);
        let p = project_degree(&f, 2).unwrap();
        for (v, u) in p.values().iter().zip(g.nodes()) {
            assert!((v - (u[2] * u[2] - 1.0 / 3.0)).abs() < 1e-12);
        }
        assert!(project_degree(&f, 3).is_err());
    }

    #[test]
    fn separable_matches_zonal_projector() {
        for (n, r) in [(2, 24), (3, 12), (4, 8)] {
            let g = grid(n, r);
            let f = SphericalFunction::from_fn(g, move |u| {
                let q: f64 = u.iter().enumerate().map(|(i, x)| (1.0 + 0.3 * i as f64) * x * x).sum();
                1.0 / q.sqrt() + u[0].powi(4) * u[n - 1].powi(2)
            });
            for k in [0, 2, 4, 6] {
                let a = project_degree(&f, k).unwrap();
                let b = project_degree_zonal(&f, k).unwrap();
                let d = a.sub(&b).sup_norm();
                assert!(d < 1e-9, "n={n} k={k} diff={d}");
            }
        }
    }

    #[test]
    fn idempotent_and_orthogonal() {
        let g = grid(4, 10);
        let f = SphericalFunction::from_fn(g.clone(), |u| (1.0 + u[0] * u[1] + 2.0 * u[3] * u[3]).exp());
        let p4 = project_degree(&f, 4).unwrap();
        let p44 = project_degree(&p4, 4).unwrap();
        assert!(p4.sub(&p44).sup_norm() < 1e-10);
        let p2 = project_degree(&f, 2).unwrap();
        assert!(inner(&p2, &p4).abs() < 1e-10);
    }

    #[test]
    fn spectrum_point_evaluation_matches_synthesis() {
        let g = grid(4, 10);
        let f = SphericalFunction::from_fn(g.clone(), |u| (u[0] + 0.5 * u[2]).powi(2) + u[3].powi(4));
        let spec = analyze(&f, 8).unwrap();
        let u = [0.3, -0.4, 0.5, (1.0f64 - 0.5).sqrt()];
        let exact = (u[0] + 0.5 * u[2]).powi(2) + u[3].powi(4);
        assert!((spec.evaluate(&u) - exact).abs() < 1e-12);
        // refined synthesis
        let fine = grid(4, 14);
        let s = synthesize(&spec, fine.clone());
        for (v, x) in s.values().iter().zip(fine.nodes()) {
            assert!((v - ((x[0] + 0.5 * x[2]).powi(2) + x[3].powi(4))).abs() < 1e-12);
        }
    }

    #[test]
    fn positive_kernel_is_band_limited_and_positive() {
        for n in 2..=5 {
            let lam = positive_kernel_multipliers(n, 16);
            assert!((lam[0] - 1.0).abs() < 1e-14);
            assert!(lam.iter().all(|&l| l.abs() <= 1.0 + 1e-12));
            // applying it to a point mass reproduces the nonnegative kernel
            let nu = specfun::sphere_index(n);
            let area = specfun::sphere_surface_area(n);
            for t in [-1.0, -0.3, 0.0, 0.2, 0.9] {
                let k: f64 = (0..=16)
                    .step_by(2)
                    .map(|j| lam[j] * specfun::harmonic_dimension(n, j) * specfun::zonal(j, nu, t))
                    .sum::<f64>()
                    / area;
                assert!(k >= -1e-12, "n={n} t={t} k={k}");
            }
        }
    }

    #[test]
    fn multiplier_identity_and_truncation() {
        let g = grid(3, 24);
        let f = SphericalFunction::from_fn(g, |u| 1.0 / (1.0 + 0.2 * u[0] * u[0]).sqrt());
        let id = MultiplierSequence::from_fn(3, 16, "id", |_| 1.0);
        let r = apply_multiplier(&f, &id).unwrap();
        assert!(r.sub(&f).sup_norm() < 1e-8);
    }
}
