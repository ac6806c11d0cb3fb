//! Projection functions, mixed volumes, projection-body certificates and
//! the projection-side volume comparisons.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::{self, Body, BodySummary};
use crate::config::{cached_grid, NumericConfig, STABILITY_STEP};
use crate::error::{Error, Result};
use crate::report::{smoothness_flag, VerifierReport};
use crate::sections::{self, filtered_probe, volume_power, FilteredProbe, Route, Verdict};
use crate::spectral::{self, ft_multipliers};
use crate::sphere::{self, SphereGrid, SphericalFunction, Spectrum};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(1/2) sum_F |<xi, nu_F>| area(F)`, or `None` without facet data.
pub fn projection_value_facets(body: &Body, xi: &[f64]) -> Option<f64> {
    body.facets().map(|fs| {
        0.5 * fs
            .iter()
            .map(|f| dot(xi, &f.normal).abs() * f.area)
            .sum::<f64>()
    })
}

/// `(1/2) int |<xi, u>| f_K(u) du` over the sphere, written as
/// `int_0^{pi/2} cos t sin^{n-2} t int_{S(xi^perp)} f_K(cos t xi + sin t v) dv dt`
/// (the integrand is even). Gauss–Legendre in `t`, subsphere rule in `v`.
pub fn projection_value_direct(body: &Body, xi: &[f64], resolution: usize) -> Result<f64> {
    if !body.has_curvature_density() {
        return Err(Error::MissingData(format!(
            "{} has no curvature density",
            body.label()
        )));
    }
    let n = body.dim();
    let gl = sphere::gauss_gegenbauer(resolution, 0.5);
    let sub = sphere::subsphere_quadrature(xi, resolution);
    let mut total = 0.0;
    for (s, w) in gl.nodes.iter().zip(&gl.weights) {
        // map [-1, 1] to [0, pi/2]
        let t = PI / 4.0 * (s + 1.0);
        let (st, ct) = t.sin_cos();
        let inner = sub.integrate(|v| {
            let u: Vec<f64> = (0..n).map(|i| ct * xi[i] + st * v[i]).collect();
            body.curvature(&u).unwrap()
        });
        total += w * PI / 4.0 * ct * st.powi(n as i32 - 2) * inner;
    }
    Ok(total)
}

/// Harmonic coefficients of `P_K` up to `lmax`: the multipliers
/// `-m_k(n+1) / pi` on `f_K` for bodies with a curvature density, the
/// analysed facet sum for polytopes.
pub fn projection_spectrum(body: &Body, cfg: &NumericConfig, lmax: usize) -> Result<Spectrum> {
    let n = body.dim();
    let grid = cfg.grid_for_degree(n, lmax)?;
    if body.has_curvature_density() {
        let f = body.curvature_function(grid)?;
        let m = ft_multipliers(n, n as f64 + 1.0, lmax)?;
        Ok(sphere::analyze(&f, lmax)?.scale_by_degree(|k| -m.get(k) / PI))
    } else if body.facets().is_some() {
        let b = body.clone();
        let p = SphericalFunction::from_fn(grid, move |u| projection_value_facets(&b, u).unwrap());
        sphere::analyze(&p, lmax)
    } else {
        Err(Error::MissingData(format!(
            "{} has no curvature data",
            body.label()
        )))
    }
}

/// Projection function on `target` by the requested route. `Auto` uses
/// facet sums for polytopes and the spectral route for smooth bodies.
pub fn projection_function_on(
    body: &Body,
    cfg: &NumericConfig,
    route: Route,
    target: Arc<SphereGrid>,
) -> Result<SphericalFunction> {
    if target.dim() != body.dim() {
        return Err(Error::DimensionMismatch(target.dim(), body.dim()));
    }
    let polytope = body.facets().is_some();
    let route = match route {
        Route::Auto if polytope => Route::Direct,
        Route::Auto => Route::Spectral,
        r => r,
    };
    match route {
        Route::Spectral => Ok(sphere::synthesize(
            &projection_spectrum(body, cfg, cfg.lmax)?,
            target,
        )),
        _ if polytope => {
            let b = body.clone();
            let f = SphericalFunction::from_fn(target, move |u| {
                projection_value_facets(&b, u).unwrap()
            });
            Ok(f)
        }
        _ => {
            let res = cfg.direct_resolution(body.dim());
            let values = target
                .nodes()
                .collect::<Vec<_>>()
                .par_iter()
                .map(|xi| projection_value_direct(body, xi, res))
                .collect::<Result<Vec<f64>>>()?;
            let b = body.clone();
            let eval: sphere::Evaluator =
                Arc::new(move |xi| projection_value_direct(&b, xi, res).unwrap());
            Ok(SphericalFunction::from_values(target, values).with_evaluator(eval))
        }
    }
}

/// Largest gap between the spectral and direct projection values over
/// [`sections::route_check_directions`].
pub fn projection_route_gap(body: &Body, cfg: &NumericConfig, count: usize) -> Result<f64> {
    let n = body.dim();
    let spec = projection_spectrum(body, cfg, cfg.lmax)?;
    let res = cfg.direct_resolution(n);
    let gaps = sections::route_check_directions(n, count)
        .par_iter()
        .map(|xi| Ok((spec.evaluate(xi) - projection_value_direct(body, xi, res)?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

/// Projection function on the configured grid (automatic route).
pub fn projection_function(body: &Body, cfg: &NumericConfig) -> Result<SphericalFunction> {
    projection_function_on(body, cfg, Route::Auto, cfg.grid(body.dim())?)
}

/// `V_1(K, L) = (1/n) int h_L dS(K, .)`.
pub fn mixed_volume_v1(k: &Body, l: &Body, cfg: &NumericConfig) -> Result<f64> {
    let n = k.dim();
    if l.dim() != n {
        return Err(Error::DimensionMismatch(n, l.dim()));
    }
    if !l.has_support() {
        return Err(Error::MissingData(format!(
            "{} has no support function",
            l.label()
        )));
    }
    if let Some(fs) = k.facets() {
        let s: f64 = fs.iter().map(|f| l.support(&f.normal).unwrap() * f.area).sum();
        return Ok(s / n as f64);
    }
    let grid = cfg.grid(n)?;
    let f = k.curvature_function(grid.clone())?;
    let h = l.support_function(grid)?;
    Ok(sphere::inner(&f, &h) / n as f64)
}

/// `V_1(K, L) - Vol(K)^{(n-1)/n} Vol(L)^{1/n}`, nonnegative by Minkowski's
/// first inequality.
pub fn minkowski_check(k: &Body, l: &Body, cfg: &NumericConfig) -> Result<f64> {
    let n = k.dim() as f64;
    let grid = cfg.grid(k.dim())?;
    let v1 = mixed_volume_v1(k, l, cfg)?;
    let vk = bodies::best_volume(k, &grid);
    let vl = bodies::best_volume(l, &grid);
    Ok(v1 - vk.powf((n - 1.0) / n) * vl.powf(1.0 / n))
}

/// Sign test of `h_L^`, the transform of the degree-1 extension of `h_L`.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectionCertificate {
    pub body: BodySummary,
    #[serde(skip)]
    pub h_hat: Option<SphericalFunction>,
    pub max_h_hat: f64,
    pub max_h_hat_raw: f64,
    pub sup_norm: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub lmax: usize,
    pub stability_lmax: Option<usize>,
}

fn h_hat_probe(body: &Body, cfg: &NumericConfig, lmax: usize) -> Result<FilteredProbe> {
    let n = body.dim();
    let grid = cfg.grid_for_degree(n, lmax)?;
    let h = body.support_function(grid)?;
    let spec = sphere::analyze(&h, lmax)?.apply(&ft_multipliers(n, -1.0, lmax)?);
    Ok(filtered_probe(&spec, cached_grid(n, cfg.resolution_for(n) + 4)?))
}

fn upper_verdict(max: f64, tol: f64) -> Verdict {
    if max <= tol {
        Verdict::Certified
    } else if max > 10.0 * tol {
        Verdict::CertifiedNot
    } else {
        Verdict::Inconclusive
    }
}

/// `L` is a projection body iff `h_L^ <= 0` off the origin. A negative
/// verdict is only emitted when it persists at `lmax + 4`.
pub fn projection_body_certificate(body: &Body, cfg: &NumericConfig) -> Result<ProjectionCertificate> {
    if !body.is_convex() {
        return Err(Error::InvalidBody(format!("{} is not convex", body.label())));
    }
    let probe = h_hat_probe(body, cfg, cfg.lmax)?;
    let tol = cfg.tol.cert_rel * probe.sup_norm;
    let mut verdict = upper_verdict(probe.max, tol);
    let mut stability_lmax = None;
    if verdict == Verdict::CertifiedNot {
        let l2 = cfg.lmax + STABILITY_STEP;
        let again = h_hat_probe(body, cfg, l2)?;
        stability_lmax = Some(l2);
        if upper_verdict(again.max, cfg.tol.cert_rel * again.sup_norm) != Verdict::CertifiedNot {
            verdict = Verdict::Inconclusive;
        }
    }
    Ok(ProjectionCertificate {
        body: body.summary(),
        max_h_hat: probe.max,
        max_h_hat_raw: probe.raw_max,
        sup_norm: probe.sup_norm,
        tolerance: tol,
        verdict,
        lmax: cfg.lmax,
        stability_lmax,
        h_hat: Some(probe.filtered),
    })
}

/// `int h_K^ f_L^ = (2 pi)^n int h_K f_L`; returns the relative defect.
pub fn projection_parseval_check(k: &Body, l: &Body, cfg: &NumericConfig) -> Result<spectral::ParsevalOutcome> {
    let n = k.dim();
    if l.dim() != n {
        return Err(Error::DimensionMismatch(n, l.dim()));
    }
    let grid = cfg.grid(n)?;
    let h = k.support_function(grid.clone())?;
    let f = l.curvature_function(grid)?;
    let a = sphere::apply_multiplier(&h, &ft_multipliers(n, -1.0, cfg.lmax)?)?;
    let b = sphere::apply_multiplier(&f, &ft_multipliers(n, n as f64 + 1.0, cfg.lmax)?)?;
    let lhs = sphere::inner(&a, &b);
    let rhs = (2.0 * PI).powi(n as i32) * sphere::inner(&h, &f);
    Ok(spectral::ParsevalOutcome {
        lhs,
        rhs,
        defect: (lhs - rhs).abs() / rhs.abs(),
    })
}

fn projection_pair(
    k: &Body,
    l: &Body,
    cfg: &NumericConfig,
) -> Result<(SphericalFunction, SphericalFunction)> {
    if k.dim() != l.dim() {
        return Err(Error::DimensionMismatch(k.dim(), l.dim()));
    }
    let grid = cfg.grid(k.dim())?;
    Ok((
        projection_function_on(k, cfg, Route::Auto, grid.clone())?,
        projection_function_on(l, cfg, Route::Auto, grid)?,
    ))
}

fn projection_hypothesis(l: &Body, cfg: &NumericConfig) -> Result<(bool, String)> {
    let cert = projection_body_certificate(l, cfg)?;
    let tag = match cert.verdict {
        Verdict::Certified => "certified",
        Verdict::CertifiedNot => "certified-not",
        Verdict::Inconclusive => "inconclusive",
    };
    Ok((
        cert.verdict == Verdict::Certified,
        format!("projection-body: {tag}"),
    ))
}

/// Constant `sqrt(2 pi / n) R(L)` of the projection stability bound.
pub fn shephard_stability_constant(n: usize, big_r_norm: f64) -> f64 {
    (2.0 * PI / n as f64).sqrt() * big_r_norm
}

/// Constant `1 / sqrt(e)` of the projection separation bound.
pub fn shephard_separation_constant() -> f64 {
    (-0.5f64).exp()
}

/// `Vol(K)^{(n-1)/n} <= Vol(L)^{(n-1)/n} + sqrt(2pi/n) R(L) eps` with
/// `eps = max(0, sup(P_K - P_L))`, for a projection body `L`.
pub fn verify_shephard_stability(k: &Body, l: &Body, cfg: &NumericConfig) -> Result<VerifierReport> {
    let (pk, pl) = projection_pair(k, l, cfg)?;
    let n = k.dim();
    let eps = pk.sub(&pl).max().max(0.0);
    let (met, tag) = projection_hypothesis(l, cfg)?;
    let c = shephard_stability_constant(n, bodies::normalized_radii(l, &cfg.grid(n)?).big_r_norm);
    let mut r = VerifierReport::new("shephard_stability", &[k, l], cfg)
        .conclude(volume_power(k, cfg)?, volume_power(l, cfg)? + c * eps, cfg)
        .flag(tag)
        .flag(smoothness_flag(&[k, l]));
    r.epsilon = eps;
    r.constant = c;
    r.hypothesis_met = met;
    Ok(r)
}

/// `Vol(K)^{(n-1)/n} <= Vol(L)^{(n-1)/n} - eps / sqrt(e)` with
/// `eps = inf(P_L - P_K) > 0`, for a projection body `L`.
pub fn verify_shephard_separation(k: &Body, l: &Body, cfg: &NumericConfig) -> Result<VerifierReport> {
    let (pk, pl) = projection_pair(k, l, cfg)?;
    let eps = pl.sub(&pk).min();
    let (met, tag) = projection_hypothesis(l, cfg)?;
    let c = shephard_separation_constant();
    let mut r = VerifierReport::new("shephard_separation", &[k, l], cfg)
        .conclude(
            volume_power(k, cfg)?,
            volume_power(l, cfg)? - c * eps.max(0.0),
            cfg,
        )
        .flag(tag)
        .flag(smoothness_flag(&[k, l]));
    if eps <= 0.0 {
        r = r.flag("separation slack not positive");
    }
    r.epsilon = eps;
    r.constant = c;
    r.hypothesis_met = met && eps > 0.0;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn projection_examples() {
        let cfg = NumericConfig::default();
        let b = Body::ball(3, 1.0).unwrap();
        let p = projection_function(&b, &cfg).unwrap();
        assert!(p.values().iter().all(|v| (v - PI).abs() < 1e-12));
        assert_relative_eq!(projection_value_direct(&b, &[0.0, 0.6, 0.8], 16).unwrap(), PI, max_relative = 1e-12);
        let e = Body::ellipsoid(&[1.0, 2.0, 3.0]).unwrap();
        assert_relative_eq!(projection_value_direct(&e, &[0.0, 0.0, 1.0], 48).unwrap(), 2.0 * PI, max_relative = 1e-6);
        let s = sphere::synthesize(&projection_spectrum(&e, &cfg, 32).unwrap(), cfg.grid(3).unwrap());
        assert_relative_eq!(s.eval(&[0.0, 0.0, 1.0]).unwrap(), 2.0 * PI, max_relative = 1e-4);
        let c = Body::cube(3).unwrap();
        let d = 1.0 / 3f64.sqrt();
        assert_relative_eq!(projection_value_facets(&c, &[d, d, d]).unwrap(), 4.0 * 3f64.sqrt(), max_relative = 1e-12);
        assert!(projection_function(&Body::lp_ball(3, 4.0).unwrap(), &cfg).is_err());
    }

    #[test]
    fn mixed_volume_examples() {
        let cfg = NumericConfig::default();
        let b = Body::ball(3, 1.0).unwrap();
        assert_relative_eq!(mixed_volume_v1(&b, &b, &cfg).unwrap(), 4.0 * PI / 3.0, max_relative = 1e-10);
        assert_relative_eq!(mixed_volume_v1(&b, &b.scaled(2.0), &cfg).unwrap(), 8.0 * PI / 3.0, max_relative = 1e-10);
        let c = Body::cube(3).unwrap();
        assert_relative_eq!(mixed_volume_v1(&c, &b, &cfg).unwrap(), 8.0, max_relative = 1e-12);
        let e = Body::ellipsoid(&[1.0, 1.5, 0.8]).unwrap();
        assert_relative_eq!(mixed_volume_v1(&e, &e, &cfg).unwrap(), e.exact_volume().unwrap(), max_relative = 1e-5);
        let m = minkowski_check(&c, &b, &cfg).unwrap();
        assert_relative_eq!(m, 8.0 - 4.0 * (4.0 * PI / 3.0f64).powf(1.0 / 3.0), max_relative = 1e-10);
        assert!(minkowski_check(&b, &Body::ellipsoid(&[1.0, 2.0, 3.0]).unwrap(), &cfg).unwrap() > 0.0);
        assert!(minkowski_check(&b, &b, &cfg).unwrap().abs() < 1e-10);
    }

    #[test]
    fn certificates() {
        let cfg = NumericConfig::default();
        let b = projection_body_certificate(&Body::ball(3, 1.0).unwrap(), &cfg).unwrap();
        assert_eq!(b.verdict, Verdict::Certified);
        let d = 1.0 / 3f64.sqrt();
        let z = Body::zonotope(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![d, d, d],
        ])
        .unwrap();
        assert_eq!(projection_body_certificate(&z, &cfg).unwrap().verdict, Verdict::Certified);
        let x = projection_body_certificate(&Body::cross_polytope(3).unwrap(), &cfg).unwrap();
        assert_eq!(x.verdict, Verdict::CertifiedNot);
        assert_eq!(x.stability_lmax, Some(cfg.lmax + STABILITY_STEP));
    }

    #[test]
    fn concentric_ball_bounds() {
        let cfg = NumericConfig::default();
        let b = Body::ball(3, 1.0).unwrap();
        let r = verify_shephard_stability(&b.scaled(1.1), &b, &cfg).unwrap();
        assert!(r.pass && r.hypothesis_met);
        assert_relative_eq!(r.epsilon, PI * 0.21, max_relative = 1e-10);
        let s = verify_shephard_separation(&b.scaled(0.8), &b, &cfg).unwrap();
        assert!(s.pass && s.hypothesis_met);
        assert!(!verify_shephard_separation(&b, &b, &cfg).unwrap().hypothesis_met);
    }
}
