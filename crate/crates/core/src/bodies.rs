//! Origin-symmetric star and convex bodies.
//!
//! A [`Body`] is an immutable value: a family with its unit-scale
//! parameters, a dilation factor and a label. Radial functions are total on
//! the unit sphere; support and curvature data exist only where the family
//! provides them in closed form (or, for polytopes, as facet atoms).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::{self, ln_abs_gamma};
use crate::sphere::{self, SphereGrid, SphericalFunction};

/// Largest `|delta|` accepted for perturbed balls.
pub const MAX_PERTURBATION: f64 = 0.3;

const MAX_VERTEX_COMBINATIONS: u64 = 3_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Ball,
    Ellipsoid {
        axes: Vec<f64>,
    },
    /// `p = f64::INFINITY` is the cube `[-1, 1]^n`.
    LpBall {
        p: f64,
    },
    /// `rho(u) = 1 + delta * P_k(<u, direction>)` with `P_k` the monic
    /// zonal harmonic of degree `k`.
    PerturbedBall {
        delta: f64,
        degree: usize,
        direction: Vec<f64>,
    },
    /// `{x : <x, normals_i> <= offsets_i}` with unit normals.
    Polytope {
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
    /// Minkowski sum of the segments `[-z_i, z_i]`.
    Zonotope {
        generators: Vec<Vec<f64>>,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Ball => "ball",
            Family::Ellipsoid { .. } => "ellipsoid",
            Family::LpBall { p } if p.is_infinite() => "cube",
            Family::LpBall { p } if *p == 1.0 => "cross_polytope",
            Family::LpBall { .. } => "lp_ball",
            Family::PerturbedBall { .. } => "perturbed_ball",
            Family::Polytope { .. } => "polytope",
            Family::Zonotope { .. } => "zonotope",
        }
    }

    fn params(&self) -> Vec<f64> {
        match self {
            Family::Ball => vec![],
            Family::Ellipsoid { axes } => axes.clone(),
            Family::LpBall { p } if p.is_infinite() || *p == 1.0 => vec![],
            Family::LpBall { p } => vec![*p],
            Family::PerturbedBall {
                delta,
                degree,
                direction,
            } => {
                let mut v = vec![*delta, *degree as f64];
                v.extend(direction);
                v
            }
            Family::Polytope { normals, offsets } => normals
                .iter()
                .zip(offsets)
                .flat_map(|(nu, b)| nu.iter().copied().chain(std::iter::once(*b)))
                .collect(),
            Family::Zonotope { generators } => generators.iter().flatten().copied().collect(),
        }
    }
}

/// Facet of a polytope: unit outer normal, distance from the origin and
/// `(n-1)`-volume.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub area: f64,
}

/// Serializable identification of a body.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BodySummary {
    pub label: String,
    pub family: String,
    pub dim: usize,
    pub scale: f64,
    pub params: Vec<f64>,
}

/// Normalized inradius and circumradius (`min rho / Vol^{1/n}`,
/// `max rho / Vol^{1/n}`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusData {
    pub r_norm: f64,
    #[serde(rename = "R_norm")]
    pub big_r_norm: f64,
}

#[derive(Debug)]
struct Derived {
    facets: Option<Vec<Facet>>,
    vertices: Option<Vec<Vec<f64>>>,
    volume: Option<f64>,
    radial_min: f64,
    radial_max: f64,
    convex: bool,
    /// monic zonal coefficients for perturbed balls, highest degree first
    pattern: Vec<f64>,
}

#[derive(Clone)]
pub struct Body {
    n: usize,
    family: Family,
    scale: f64,
    label: String,
    derived: Arc<Derived>,
}

impl fmt::Debug for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Body")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("family", &self.family)
            .field("scale", &self.scale)
            .finish()
    }
}

fn check_dim(n: usize) -> Result<()> {
    if (2..=6).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rank(rows: &[Vec<f64>], n: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    m.rank(1e-10)
}

impl Body {
    fn from_family(n: usize, family: Family, derived: Derived) -> Self {
        let label = family.name().to_string();
        Self {
            n,
            family,
            scale: 1.0,
            label,
            derived: Arc::new(derived),
        }
    }

    pub fn ball(n: usize, radius: f64) -> Result<Self> {
        check_dim(n)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidBody(format!("non-positive radius {radius}")));
        }
        let derived = Derived {
            facets: None,
            vertices: None,
            volume: Some(specfun::ball_volume(n)),
            radial_min: 1.0,
            radial_max: 1.0,
            convex: true,
            pattern: Vec::new(),
        };
        Ok(Self::from_family(n, Family::Ball, derived).scaled(radius))
    }

    pub fn ellipsoid(axes: &[f64]) -> Result<Self> {
        let n = axes.len();
        check_dim(n)?;
        if let Some(a) = axes.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidBody(format!("non-positive semi-axis {a}")));
        }
        let derived = Derived {
            facets: None,
            vertices: None,
            volume: Some(specfun::ball_volume(n) * axes.iter().product::<f64>()),
            radial_min: axes.iter().copied().fold(f64::INFINITY, f64::min),
            radial_max: axes.iter().copied().fold(0.0, f64::max),
            convex: true,
            pattern: Vec::new(),
        };
        Ok(Self::from_family(
            n,
            Family::Ellipsoid {
                axes: axes.to_vec(),
            },
            derived,
        ))
    }

    /// Unit ball of the `l_p` norm; `p = 2` returns the Euclidean ball.
    pub fn lp_ball(n: usize, p: f64) -> Result<Self> {
        check_dim(n)?;
        if !(p >= 1.0) {
            return Err(Error::InvalidBody(format!("l_p ball needs p >= 1, got {p}")));
        }
        if p == 2.0 {
            return Self::ball(n, 1.0);
        }
        let nf = n as f64;
        let (facets, vertices) = if p.is_infinite() {
            let facets = (0..2 * n)
                .map(|i| {
                    let mut normal = vec![0.0; n];
                    normal[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
                    Facet {
                        normal,
                        offset: 1.0,
                        area: 2f64.powi(n as i32 - 1),
                    }
                })
                .collect();
            (Some(facets), Some(sign_vectors(n)))
        } else if p == 1.0 {
            let s = 1.0 / nf.sqrt();
            let area = nf.sqrt() / (ln_abs_gamma(nf)).exp();
            let facets = sign_vectors(n)
                .into_iter()
                .map(|v| Facet {
                    normal: v.iter().map(|x| x * s).collect(),
                    offset: s,
                    area,
                })
                .collect();
            let vertices = (0..2 * n)
                .map(|i| {
                    let mut v = vec![0.0; n];
                    v[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
                    v
                })
                .collect();
            (Some(facets), Some(vertices))
        } else {
            (None, None)
        };
        let volume = if p.is_infinite() {
            2f64.powi(n as i32)
        } else {
            (nf * 2f64.ln() + nf * ln_abs_gamma(1.0 + 1.0 / p) - ln_abs_gamma(1.0 + nf / p)).exp()
        };
        // rho ranges between 1 (axes) and n^{1/2 - 1/p} (diagonals)
        let diag = if p.is_infinite() {
            nf.sqrt()
        } else {
            nf.powf(0.5 - 1.0 / p)
        };
        let derived = Derived {
            facets,
            vertices,
            volume: Some(volume),
            radial_min: diag.min(1.0),
            radial_max: diag.max(1.0),
            convex: true,
            pattern: Vec::new(),
        };
        Ok(Self::from_family(n, Family::LpBall { p }, derived))
    }

    pub fn cube(n: usize) -> Result<Self> {
        Self::lp_ball(n, f64::INFINITY)
    }

    pub fn cross_polytope(n: usize) -> Result<Self> {
        Self::lp_ball(n, 1.0)
    }

    /// `rho(u) = 1 + delta * P_k(<u, d>)`; `direction` defaults to `e_n`.
    pub fn perturbed_ball(
        n: usize,
        delta: f64,
        degree: usize,
        direction: Option<&[f64]>,
    ) -> Result<Self> {
        check_dim(n)?;
        if !(delta.abs() <= MAX_PERTURBATION) {
            return Err(Error::InvalidBody(format!(
                "perturbation |delta| = {} exceeds {MAX_PERTURBATION}",
                delta.abs()
            )));
        }
        if degree == 0 || degree % 2 == 1 || degree > 16 {
            return Err(Error::InvalidBody(format!(
                "perturbation degree must be even in 2..=16, got {degree}"
            )));
        }
        let d = match direction {
            Some(d) => {
                if d.len() != n {
                    return Err(Error::DimensionMismatch(d.len(), n));
                }
                let l = norm(d);
                if !(l > 0.0) {
                    return Err(Error::InvalidBody("zero perturbation direction".into()));
                }
                d.iter().map(|x| x / l).collect()
            }
            None => {
                let mut e = vec![0.0; n];
                e[n - 1] = 1.0;
                e
            }
        };
        let pattern = monic_zonal_coefficients(n, degree);
        let profile = |t: f64| 1.0 + delta * horner(&pattern, t);
        let (lo, hi) = extrema_on_interval(profile);
        if lo <= 0.0 {
            return Err(Error::InvalidBody(
                "perturbation drives the radial function to zero".into(),
            ));
        }
        let mut derived = Derived {
            facets: None,
            vertices: None,
            volume: None,
            radial_min: lo,
            radial_max: hi,
            convex: true,
            pattern,
        };
        let dir = d.clone();
        let pat = derived.pattern.clone();
        derived.convex =
            sampled_convexity(n, move |u: &[f64]| 1.0 + delta * horner(&pat, dot(u, &dir)), 0x5eed);
        let family = Family::PerturbedBall {
            delta,
            degree,
            direction: d,
        };
        Ok(Self::from_family(n, family, derived))
    }

    /// Polytope `{x : <x, a_i> <= b_i}`. The constraint set must be
    /// symmetric: every `(a, b)` needs a partner `(-a, b)`.
    pub fn polytope(normals: &[Vec<f64>], offsets: &[f64]) -> Result<Self> {
        if normals.is_empty() || normals.len() != offsets.len() {
            return Err(Error::InvalidBody(
                "polytope needs matching normals and offsets".into(),
            ));
        }
        let n = normals[0].len();
        check_dim(n)?;
        let mut units = Vec::with_capacity(normals.len());
        let mut bs = Vec::with_capacity(normals.len());
        for (a, &b) in normals.iter().zip(offsets) {
            if a.len() != n {
                return Err(Error::DimensionMismatch(a.len(), n));
            }
            let l = norm(a);
            if !(l > 0.0) || !(b > 0.0) {
                return Err(Error::InvalidBody(
                    "polytope constraints need nonzero normals and positive offsets".into(),
                ));
            }
            units.push(a.iter().map(|x| x / l).collect::<Vec<f64>>());
            bs.push(b / l);
        }
        for (a, b) in units.iter().zip(&bs) {
            let mirrored = units.iter().zip(&bs).any(|(c, d)| {
                (d - b).abs() < 1e-9 && a.iter().zip(c).all(|(x, y)| (x + y).abs() < 1e-9)
            });
            if !mirrored {
                return Err(Error::InvalidBody(
                    "polytope constraints are not origin-symmetric".into(),
                ));
            }
        }
        if rank(&units, n) < n {
            return Err(Error::InvalidBody("polytope is unbounded".into()));
        }
        let rows: Vec<(Vec<f64>, f64)> = dedup_rows(
            units
                .iter()
                .cloned()
                .zip(bs.iter().copied())
                .collect::<Vec<_>>(),
        );
        let facets: Vec<Facet> = (0..rows.len())
            .map(|i| Facet {
                normal: rows[i].0.clone(),
                offset: rows[i].1,
                area: facet_volume(&rows, i),
            })
            .filter(|f| f.area > 1e-14)
            .collect();
        let nf = n as f64;
        let volume = facets.iter().map(|f| f.offset * f.area).sum::<f64>() / nf;
        let vertices = enumerate_vertices(&rows, n);
        let radial_min = facets.iter().map(|f| f.offset).fold(f64::INFINITY, f64::min);
        let radial_max = vertices
            .as_ref()
            .map(|vs| vs.iter().map(|v| norm(v)).fold(0.0, f64::max))
            .unwrap_or(f64::NAN);
        let derived = Derived {
            facets: Some(facets.clone()),
            vertices,
            volume: Some(volume),
            radial_min,
            radial_max,
            convex: true,
            pattern: Vec::new(),
        };
        let (normals, offsets) = facets.into_iter().map(|f| (f.normal, f.offset)).unzip();
        let mut body = Self::from_family(n, Family::Polytope { normals, offsets }, derived);
        if body.derived.radial_max.is_nan() {
            let grid = sphere::build_grid(n, 12)?;
            let m = grid
                .nodes()
                .map(|u| body.radial(u))
                .fold(0.0, f64::max);
            Arc::get_mut(&mut body.derived).unwrap().radial_max = m;
        }
        Ok(body)
    }

    /// Zonotope `sum_i [-z_i, z_i]`; the generators must span `R^n`.
    pub fn zonotope(generators: &[Vec<f64>]) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidBody("zonotope needs generators".into()));
        }
        let n = generators[0].len();
        check_dim(n)?;
        for z in generators {
            if z.len() != n {
                return Err(Error::DimensionMismatch(z.len(), n));
            }
            if !(norm(z) > 0.0) {
                return Err(Error::InvalidBody("zero zonotope generator".into()));
            }
        }
        if rank(generators, n) < n {
            return Err(Error::InvalidBody(
                "zonotope generators do not span the space".into(),
            ));
        }
        let support = |x: &[f64]| -> f64 { generators.iter().map(|z| dot(x, z).abs()).sum() };
        let facets = zonotope_facets(generators, n, &support);
        let mut volume = 0.0;
        for_each_subset(generators.len(), n, |idx| {
            let m = DMatrix::from_fn(n, n, |i, j| generators[idx[j]][i]);
            volume += m.determinant().abs();
        });
        volume *= 2f64.powi(n as i32);
        let radial_min = facets.iter().map(|f| f.offset).fold(f64::INFINITY, f64::min);
        let radial_max = if generators.len() <= 20 {
            (0u64..1 << generators.len())
                .map(|mask| {
                    let mut v = vec![0.0; n];
                    for (i, z) in generators.iter().enumerate() {
                        let s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                        for (vj, zj) in v.iter_mut().zip(z) {
                            *vj += s * zj;
                        }
                    }
                    norm(&v)
                })
                .fold(0.0, f64::max)
        } else {
            let grid = sphere::build_grid(n, 16)?;
            grid.nodes().map(support).fold(0.0, f64::max)
        };
        let derived = Derived {
            facets: Some(facets),
            vertices: None,
            volume: Some(volume),
            radial_min,
            radial_max,
            convex: true,
            pattern: Vec::new(),
        };
        Ok(Self::from_family(
            n,
            Family::Zonotope {
                generators: generators.to_vec(),
            },
            derived,
        ))
    }

    /// Dilation `t K`.
    pub fn scaled(&self, t: f64) -> Self {
        assert!(t > 0.0 && t.is_finite());
        Self {
            scale: self.scale * t,
            ..self.clone()
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn summary(&self) -> BodySummary {
        BodySummary {
            label: self.label.clone(),
            family: self.family.name().to_string(),
            dim: self.n,
            scale: self.scale,
            params: self.family.params(),
        }
    }

    pub fn is_convex(&self) -> bool {
        self.derived.convex
    }

    /// Whether the boundary is `C^infinity` (analytic families).
    pub fn is_smooth(&self) -> bool {
        match &self.family {
            Family::Ball | Family::Ellipsoid { .. } | Family::PerturbedBall { .. } => true,
            Family::LpBall { p } => p.is_finite() && p.fract() == 0.0 && (*p as i64) % 2 == 0,
            Family::Polytope { .. } | Family::Zonotope { .. } => false,
        }
    }

    pub fn is_polytope(&self) -> bool {
        self.derived.facets.is_some()
    }

    pub fn has_support(&self) -> bool {
        match &self.family {
            Family::PerturbedBall { .. } => false,
            Family::Polytope { .. } => self.derived.vertices.is_some(),
            _ => true,
        }
    }

    /// Curvature data exists as a density (smooth) or as facet atoms.
    pub fn has_curvature_data(&self) -> bool {
        self.has_curvature_density() || self.is_polytope()
    }

    pub fn has_curvature_density(&self) -> bool {
        matches!(self.family, Family::Ball | Family::Ellipsoid { .. })
    }

    /// `rho_K(u)` for a unit vector `u`.
    pub fn radial(&self, u: &[f64]) -> f64 {
        self.scale * self.unit_radial(u)
    }

    fn unit_radial(&self, u: &[f64]) -> f64 {
        match &self.family {
            Family::Ball => 1.0,
            Family::Ellipsoid { axes } => {
                let q: f64 = u.iter().zip(axes).map(|(x, a)| (x / a) * (x / a)).sum();
                1.0 / q.sqrt()
            }
            Family::LpBall { p } => {
                if p.is_infinite() {
                    1.0 / u.iter().fold(0.0f64, |m, x| m.max(x.abs()))
                } else if *p == 1.0 {
                    1.0 / u.iter().map(|x| x.abs()).sum::<f64>()
                } else {
                    let m = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    let s: f64 = u.iter().map(|x| (x.abs() / m).powf(*p)).sum();
                    1.0 / (m * s.powf(1.0 / p))
                }
            }
            Family::PerturbedBall {
                delta, direction, ..
            } => 1.0 + delta * horner(&self.derived.pattern, dot(u, direction)),
            Family::Polytope { .. } | Family::Zonotope { .. } => {
                let facets = self.derived.facets.as_ref().unwrap();
                let gauge = facets
                    .iter()
                    .map(|f| dot(u, &f.normal) / f.offset)
                    .fold(0.0, f64::max);
                1.0 / gauge
            }
        }
    }

    /// Minkowski functional `||x||_K` for any nonzero `x`.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        let u: Vec<f64> = x.iter().map(|v| v / r).collect();
        r / self.radial(&u)
    }

    /// `h_K(x)`, when the family has a support function.
    pub fn support(&self, x: &[f64]) -> Option<f64> {
        let h = match &self.family {
            Family::Ball => norm(x),
            Family::Ellipsoid { axes } => x
                .iter()
                .zip(axes)
                .map(|(v, a)| (a * v) * (a * v))
                .sum::<f64>()
                .sqrt(),
            Family::LpBall { p } => {
                if p.is_infinite() {
                    x.iter().map(|v| v.abs()).sum()
                } else if *p == 1.0 {
                    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
                } else {
                    let q = p / (p - 1.0);
                    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    if m == 0.0 {
                        0.0
                    } else {
                        m * x.iter().map(|v| (v.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
                    }
                }
            }
            Family::PerturbedBall { .. } => return None,
            Family::Polytope { .. } => self
                .derived
                .vertices
                .as_ref()?
                .iter()
                .map(|v| dot(x, v).abs())
                .fold(0.0, f64::max),
            Family::Zonotope { generators } => generators.iter().map(|z| dot(x, z).abs()).sum(),
        };
        Some(self.scale * h)
    }

    /// Curvature function `f_K(u)` (density of the surface area measure),
    /// for the ball and ellipsoids.
    pub fn curvature(&self, u: &[f64]) -> Option<f64> {
        let f = match &self.family {
            Family::Ball => 1.0,
            Family::Ellipsoid { axes } => {
                let prod: f64 = axes.iter().product();
                let h: f64 = u
                    .iter()
                    .zip(axes)
                    .map(|(v, a)| (a * v) * (a * v))
                    .sum::<f64>()
                    .sqrt();
                prod * prod / h.powi(self.n as i32 + 1)
            }
            _ => return None,
        };
        Some(self.scale.powi(self.n as i32 - 1) * f)
    }

    /// Facets at the body's scale.
    pub fn facets(&self) -> Option<Vec<Facet>> {
        let t = self.scale;
        let tn = t.powi(self.n as i32 - 1);
        self.derived.facets.as_ref().map(|fs| {
            fs.iter()
                .map(|f| Facet {
                    normal: f.normal.clone(),
                    offset: f.offset * t,
                    area: f.area * tn,
                })
                .collect()
        })
    }

    /// Closed-form volume, when the family has one.
    pub fn exact_volume(&self) -> Option<f64> {
        self.derived
            .volume
            .map(|v| v * self.scale.powi(self.n as i32))
    }

    /// `min rho` and `max rho` over the sphere.
    pub fn radial_extrema(&self) -> (f64, f64) {
        (
            self.scale * self.derived.radial_min,
            self.scale * self.derived.radial_max,
        )
    }

    /// Radial function sampled on `grid`, carrying the exact evaluator.
    pub fn radial_function(&self, grid: Arc<SphereGrid>) -> SphericalFunction {
        let body = self.clone();
        SphericalFunction::from_fn(grid, move |u| body.radial(u))
    }

    /// `rho^p` on `grid`.
    pub fn radial_power(&self, grid: Arc<SphereGrid>, p: f64) -> SphericalFunction {
        let body = self.clone();
        SphericalFunction::from_fn(grid, move |u| body.radial(u).powf(p))
    }

    pub fn support_function(&self, grid: Arc<SphereGrid>) -> Result<SphericalFunction> {
        if !self.has_support() {
            return Err(Error::MissingData(format!(
                "{} has no support function",
                self.label
            )));
        }
        let body = self.clone();
        Ok(SphericalFunction::from_fn(grid, move |u| {
            body.support(u).unwrap()
        }))
    }

    pub fn curvature_function(&self, grid: Arc<SphereGrid>) -> Result<SphericalFunction> {
        if !self.has_curvature_density() {
            return Err(Error::MissingData(format!(
                "{} has no curvature density",
                self.label
            )));
        }
        let body = self.clone();
        Ok(SphericalFunction::from_fn(grid, move |u| {
            body.curvature(u).unwrap()
        }))
    }
}

/// `Vol_n(K) = (1/n) int rho^n` by quadrature on `grid`.
pub fn volume(body: &Body, grid: &Arc<SphereGrid>) -> f64 {
    if grid.dim() != body.dim() {
        panic!("grid dimension {} for body in R^{}", grid.dim(), body.dim());
    }
    let n = body.dim();
    sphere::compensated_sum(
        grid.nodes()
            .zip(grid.weights())
            .map(|(u, &w)| w * body.radial(u).powi(n as i32)),
    ) / n as f64
}

/// Closed-form volume when available, else quadrature on `grid`.
pub fn best_volume(body: &Body, grid: &Arc<SphereGrid>) -> f64 {
    body.exact_volume().unwrap_or_else(|| volume(body, grid))
}

/// Normalized inradius `r(K)` and circumradius `R(K)`.
pub fn normalized_radii(body: &Body, grid: &Arc<SphereGrid>) -> RadiusData {
    let v = best_volume(body, grid).powf(1.0 / body.dim() as f64);
    let (lo, hi) = body.radial_extrema();
    RadiusData {
        r_norm: lo / v,
        big_r_norm: hi / v,
    }
}

/// Extrema of the radial function found by searching `grid` and refining
/// the best nodes with a shrinking pattern search on the sphere. Used as
/// an independent check of the closed-form extrema.
pub fn search_radial_extrema(body: &Body, grid: &Arc<SphereGrid>) -> (f64, f64) {
    let n = body.dim();
    let refine = |start: &[f64], sign: f64| -> f64 {
        let mut u = start.to_vec();
        let mut best = sign * body.radial(&u);
        let mut step = 0.2;
        while step > 1e-9 {
            let mut improved = false;
            for j in 0..n {
                for s in [-1.0, 1.0] {
                    let mut v = u.clone();
                    v[j] += s * step;
                    let l = norm(&v);
                    v.iter_mut().for_each(|x| *x /= l);
                    let val = sign * body.radial(&v);
                    if val > best {
                        best = val;
                        u = v;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        sign * best
    };
    let values: Vec<f64> = grid.nodes().map(|u| body.radial(u)).collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let k = order.len().min(8);
    let lo = order[..k]
        .iter()
        .map(|&i| refine(grid.node(i), -1.0))
        .fold(f64::INFINITY, f64::min);
    let hi = order[order.len() - k..]
        .iter()
        .map(|&i| refine(grid.node(i), 1.0))
        .fold(0.0, f64::max);
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Quantity {
    Volume,
    Section(Vec<f64>),
    Projection(Vec<f64>),
}

/// Closed-form value of a quantity, or `None` when the family has none.
pub fn analytic_reference(body: &Body, quantity: &Quantity) -> Option<f64> {
    let n = body.dim();
    let t = body.scale();
    let tn1 = t.powi(n as i32 - 1);
    let omega = specfun::ball_volume(n - 1);
    match quantity {
        Quantity::Volume => body.exact_volume(),
        Quantity::Section(xi) => match body.family() {
            Family::Ball => Some(omega * tn1),
            Family::Ellipsoid { axes } => {
                let prod: f64 = axes.iter().product();
                let a_xi: f64 = xi.iter().zip(axes).map(|(x, a)| (a * x) * (a * x)).sum();
                Some(omega * prod / a_xi.sqrt() * tn1)
            }
            Family::LpBall { p } if p.is_infinite() => {
                let on_axis = xi.iter().filter(|x| x.abs() > 1e-14).count() == 1;
                on_axis.then(|| 2f64.powi(n as i32 - 1) * tn1)
            }
            _ => None,
        },
        Quantity::Projection(xi) => match body.family() {
            Family::Ball => Some(omega * tn1),
            Family::Ellipsoid { axes } => {
                let prod: f64 = axes.iter().product();
                let inv: f64 = xi.iter().zip(axes).map(|(x, a)| (x / a) * (x / a)).sum();
                Some(omega * prod * inv.sqrt() * tn1)
            }
            _ => body.facets().map(|fs| {
                0.5 * fs
                    .iter()
                    .map(|f| dot(xi, &f.normal).abs() * f.area)
                    .sum::<f64>()
            }),
        },
    }
}

/// Random smooth convex body: an ellipsoid with semi-axes in
/// `[0.8, 1.25]` or a degree-2 perturbed ball with `|delta| <= 0.2` and a
/// random direction.
pub fn random_smooth_body<R: Rng>(n: usize, rng: &mut R) -> Result<Body> {
    if rng.gen_bool(0.5) {
        let axes: Vec<f64> = (0..n).map(|_| rng.gen_range(0.8..1.25)).collect();
        Body::ellipsoid(&axes)
    } else {
        let delta = rng.gen_range(-0.2..0.2);
        let dir = random_unit_vector(n, rng);
        Body::perturbed_ball(n, delta, 2, Some(&dir))
    }
}

pub fn random_unit_vector<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l = norm(&v);
        if l > 0.1 && l <= 1.0 {
            return v.iter().map(|x| x / l).collect();
        }
    }
}

/// Coefficients (highest degree first) of `C_k^{(nu)} / lead`, the monic
/// zonal harmonic of degree `k` on `S^{n-1}`.
fn monic_zonal_coefficients(n: usize, k: usize) -> Vec<f64> {
    // three-term recurrence on coefficient vectors (lowest degree first)
    let nu = specfun::sphere_index(n);
    let mut prev = vec![1.0];
    if k == 0 {
        return prev;
    }
    let first_scale = if nu == 0.0 { 1.0 } else { 2.0 * nu };
    let mut cur = vec![0.0, first_scale];
    for j in 1..k {
        let jf = j as f64;
        let (a, b) = if nu == 0.0 {
            (2.0, 1.0)
        } else {
            (
                2.0 * (nu + jf) / (jf + 1.0),
                (2.0 * nu + jf - 1.0) / (jf + 1.0),
            )
        };
        let mut next = vec![0.0; j + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += a * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= b * c;
        }
        prev = cur;
        cur = next;
    }
    let lead = *cur.last().unwrap();
    cur.iter().rev().map(|c| c / lead).collect()
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, c| acc * t + c)
}

/// Min and max of a smooth function on `[-1, 1]`: dense sampling followed
/// by golden-section refinement around the best samples.
fn extrema_on_interval<F: Fn(f64) -> f64>(f: F) -> (f64, f64) {
    let samples = 2001;
    let h = 2.0 / (samples - 1) as f64;
    let ts: Vec<f64> = (0..samples).map(|i| -1.0 + i as f64 * h).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let refine = |i: usize, sign: f64| -> f64 {
        let (mut a, mut b) = ((ts[i] - h).max(-1.0), (ts[i] + h).min(1.0));
        for _ in 0..100 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if sign * f(c) > sign * f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        f(0.5 * (a + b))
    };
    let imin = (0..samples).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let imax = (0..samples).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let lo = vals[imin].min(refine(imin, -1.0));
    let hi = vals[imax].max(refine(imax, 1.0));
    (lo, hi)
}

/// Samples random central 2-D sections and checks the polar convexity
/// condition `r^2 + 2 r'^2 - r r'' >= 0` along each section curve.
fn sampled_convexity<F: Fn(&[f64]) -> f64>(n: usize, radial: F, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = 256;
    let h = 1e-4;
    for _ in 0..48 {
        let a = random_unit_vector(n, &mut rng);
        let mut b = random_unit_vector(n, &mut rng);
        let ab = dot(&a, &b);
        b.iter_mut().zip(&a).for_each(|(x, y)| *x -= ab * y);
        let l = norm(&b);
        if l < 1e-6 {
            continue;
        }
        b.iter_mut().for_each(|x| *x /= l);
        let r = |phi: f64| -> f64 {
            let u: Vec<f64> = a
                .iter()
                .zip(&b)
                .map(|(x, y)| phi.cos() * x + phi.sin() * y)
                .collect();
            radial(&u)
        };
        for s in 0..steps {
            let phi = s as f64 * PI / steps as f64;
            let r0 = r(phi);
            let rp = (r(phi + h) - r(phi - h)) / (2.0 * h);
            let rpp = (r(phi + h) - 2.0 * r0 + r(phi - h)) / (h * h);
            if r0 * r0 + 2.0 * rp * rp - r0 * rpp < -1e-6 * r0 * r0 {
                return false;
            }
        }
    }
    true
}

fn sign_vectors(n: usize) -> Vec<Vec<f64>> {
    (0u32..1 << n)
        .map(|mask| {
            (0..n)
                .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect()
        })
        .collect()
}

/// Calls `f` with every `k`-subset of `0..m` in lexicographic order.
fn for_each_subset<F: FnMut(&[usize])>(m: usize, k: usize, mut f: F) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < m - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return;
            }
        }
    }
}

fn binomial(m: usize, k: usize) -> u64 {
    if k > m {
        return 0;
    }
    let mut r: u64 = 1;
    for i in 0..k as u64 {
        r = r.saturating_mul(m as u64 - i) / (i + 1);
    }
    r
}

/// Removes duplicate constraints after normalizing each row to a unit
/// normal. Rows with a vanishing normal are dropped.
fn dedup_rows(rows: Vec<(Vec<f64>, f64)>) -> Vec<(Vec<f64>, f64)> {
    let mut out: Vec<(Vec<f64>, f64)> = Vec::with_capacity(rows.len());
    for (a, b) in rows {
        let l = norm(&a);
        if l < 1e-12 {
            continue;
        }
        let a: Vec<f64> = a.iter().map(|x| x / l).collect();
        let b = b / l;
        let dup = out.iter().any(|(c, d)| {
            (d - b).abs() < 1e-10 && a.iter().zip(c).all(|(x, y)| (x - y).abs() < 1e-10)
        });
        if !dup {
            out.push((a, b));
        }
    }
    out
}

/// Volume of `{x in R^d : a_i . x <= b_i}` by Lasserre's recursion
/// `Vol_d = (1/d) sum_i dist_i Vol_{d-1}(F_i)`.
fn polytope_volume(rows: &[(Vec<f64>, f64)]) -> f64 {
    let d = rows[0].0.len();
    if d == 1 {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (a, b) in rows {
            if a[0] > 1e-12 {
                hi = hi.min(b / a[0]);
            } else if a[0] < -1e-12 {
                lo = lo.max(b / a[0]);
            } else if *b < -1e-12 {
                return 0.0;
            }
        }
        return (hi - lo).max(0.0);
    }
    let total: f64 = (0..rows.len())
        .map(|i| {
            let dist = rows[i].1 / norm(&rows[i].0);
            if dist.abs() < 1e-14 {
                0.0
            } else {
                dist * facet_volume(rows, i)
            }
        })
        .sum();
    total / d as f64
}

/// `(d-1)`-volume of the face `{a_i . x = b_i}` of the polytope.
fn facet_volume(rows: &[(Vec<f64>, f64)], i: usize) -> f64 {
    let (ai, bi) = &rows[i];
    let d = ai.len();
    let j = (0..d)
        .max_by(|&x, &y| ai[x].abs().total_cmp(&ai[y].abs()))
        .unwrap();
    let aij = ai[j];
    let mut sub = Vec::with_capacity(rows.len() - 1);
    for (k, (ak, bk)) in rows.iter().enumerate() {
        if k == i {
            continue;
        }
        let ratio = ak[j] / aij;
        let row: Vec<f64> = (0..d)
            .filter(|&l| l != j)
            .map(|l| ak[l] - ratio * ai[l])
            .collect();
        let rhs = bk - ratio * bi;
        if norm(&row) < 1e-12 {
            if rhs < -1e-10 {
                return 0.0;
            }
            continue;
        }
        sub.push((row, rhs));
    }
    let sub = dedup_rows(sub);
    if sub.is_empty() {
        return 0.0;
    }
    polytope_volume(&sub) * norm(ai) / aij.abs()
}

/// Vertices of `{x : a_i . x <= b_i}` from all `n`-subsets of constraints;
/// `None` when the enumeration would be too large.
fn enumerate_vertices(rows: &[(Vec<f64>, f64)], n: usize) -> Option<Vec<Vec<f64>>> {
    if binomial(rows.len(), n) > MAX_VERTEX_COMBINATIONS {
        return None;
    }
    let mut verts: Vec<Vec<f64>> = Vec::new();
    for_each_subset(rows.len(), n, |idx| {
        let a = DMatrix::from_fn(n, n, |r, c| rows[idx[r]].0[c]);
        let b = DVector::from_fn(n, |r, _| rows[idx[r]].1);
        let lu = a.lu();
        if let Some(x) = lu.solve(&b) {
            if !x.iter().all(|v| v.is_finite()) {
                return;
            }
            let x: Vec<f64> = x.iter().copied().collect();
            let scale = 1.0 + norm(&x);
            let feasible = rows
                .iter()
                .all(|(ak, bk)| dot(ak, &x) <= bk + 1e-9 * scale);
            if feasible && !verts.iter().any(|v| v.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-9)) {
                verts.push(x);
            }
        }
    });
    Some(verts)
}

/// Facets of a zonotope: one normal per `(n-1)`-subset of generators
/// (generalized cross product), merged by direction, with area
/// `2^{n-1} sum |cross|` over the subsets spanning that facet.
fn zonotope_facets<F: Fn(&[f64]) -> f64>(generators: &[Vec<f64>], n: usize, support: &F) -> Vec<Facet> {
    let mut classes: Vec<(Vec<f64>, f64)> = Vec::new();
    for_each_subset(generators.len(), n - 1, |idx| {
        let cross: Vec<f64> = (0..n)
            .map(|c| {
                if n == 1 {
                    return 1.0;
                }
                let minor = DMatrix::from_fn(n - 1, n - 1, |r, k| {
                    let col = if k < c { k } else { k + 1 };
                    generators[idx[r]][col]
                });
                let s = if c % 2 == 0 { 1.0 } else { -1.0 };
                s * minor.determinant()
            })
            .collect();
        let l = norm(&cross);
        if l < 1e-12 {
            return;
        }
        let mut nu: Vec<f64> = cross.iter().map(|x| x / l).collect();
        if let Some(first) = nu.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                nu.iter_mut().for_each(|x| *x = -*x);
            }
        }
        match classes
            .iter_mut()
            .find(|(m, _)| m.iter().zip(&nu).all(|(a, b)| (a - b).abs() < 1e-9))
        {
            Some(entry) => entry.1 += l,
            None => classes.push((nu, l)),
        }
    });
    let area_scale = 2f64.powi(n as i32 - 1);
    classes
        .into_iter()
        .flat_map(|(nu, s)| {
            let offset = support(&nu);
            let neg: Vec<f64> = nu.iter().map(|x| -x).collect();
            [
                Facet {
                    normal: nu,
                    offset,
                    area: area_scale * s,
                },
                Facet {
                    normal: neg,
                    offset,
                    area: area_scale * s,
                },
            ]
        })
        .collect()
}
