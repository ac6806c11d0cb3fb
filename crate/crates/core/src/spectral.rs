//! Fourier transforms of homogeneous extensions, fractional Laplacians of
//! section and projection functions, and the inequalities built on them.
//!
//! Constants table (every `(2 pi)^n` factor in one place):
//!
//! | quantity | multiplier on degree `k` |
//! |---|---|
//! | `(Y_k(x/|x|) |x|^{-p})^` | `m_k(p) = (-1)^{k/2} 2^{n-p} pi^{n/2} Gamma((n-p+k)/2) / Gamma((p+k)/2)` |
//! | `S_K` from `rho_K^{n-1}` | `m_k(n-1) / (pi (n-1)) = c_{n,k} / (n-1)` |
//! | `(-Delta)^{alpha/2} S_K` from `rho_K^{n-1}` | `m_k(n-1-alpha) / (pi (n-1))` |
//! | `P_K` from `f_K` | `-m_k(n+1) / pi` |
//! | `(-Delta)^{alpha/2} P_K` from `P_K` | `(2 pi)^{-n} m_k(-1) m_k(n+1-alpha)` |
//! | `h_K^` from `h_K` | `m_k(-1)` |
//!
//! Reciprocity `m_k(p) m_k(n-p) = (2 pi)^n` links the rows.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::bodies::{self, Body};
use crate::config::{cached_grid, NumericConfig};
use crate::error::{Error, Result};
use crate::report::{smoothness_flag, VerifierReport};
use crate::sections::{self, filtered_probe};
use crate::shadows;
use crate::specfun::{self, gamma_sign, ln_abs_gamma};
use crate::sphere::{self, MultiplierSequence, SphereGrid, SphericalFunction, Spectrum};

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// `m_k(p)`: the Fourier transform of `Y_k(x/|x|) |x|^{-p}` is
/// `m_k(p) Y_k(xi/|xi|) |xi|^{-n+p}`. Zero when `(p+k)/2` is a pole of the
/// denominator Gamma; an error when `(n-p+k)/2` is a pole of the numerator.
pub fn ft_multiplier(n: usize, p: f64, k: usize) -> Result<f64> {
    if k % 2 == 1 {
        return Err(Error::Domain(format!("odd degree {k}")));
    }
    let nf = n as f64;
    let kf = k as f64;
    let a = (nf - p + kf) / 2.0;
    let b = (p + kf) / 2.0;
    if is_nonpositive_integer(a) {
        return Err(Error::Pole(format!(
            "Gamma({a}) in the multiplier for n={n}, p={p}, k={k}"
        )));
    }
    if is_nonpositive_integer(b) {
        return Ok(0.0);
    }
    let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 } * gamma_sign(a) * gamma_sign(b);
    let ln = (nf - p) * 2f64.ln() + 0.5 * nf * PI.ln() + ln_abs_gamma(a) - ln_abs_gamma(b);
    Ok(sign * ln.exp())
}

/// `{m_k(p)}` for even `k <= lmax`.
pub fn ft_multipliers(n: usize, p: f64, lmax: usize) -> Result<MultiplierSequence> {
    let entries = (0..=lmax)
        .step_by(2)
        .map(|k| ft_multiplier(n, p, k))
        .collect::<Result<Vec<f64>>>()?;
    Ok(MultiplierSequence {
        n,
        entries,
        descriptor: format!("fourier(p={p})"),
    })
}

/// Exponents `p` for which transforms of `|x|^{-p}`-homogeneous functions
/// are taken: `(0, n)`, the support-function case `p = -1` and the
/// curvature-function case `p = n + 1`.
pub fn in_continuation_whitelist(n: usize, p: f64) -> bool {
    let nf = n as f64;
    (p > 0.0 && p < nf) || p == -1.0 || p == nf + 1.0
}

/// `f(x) = |x|^degree base(x/|x|)`.
#[derive(Debug, Clone)]
pub struct HomogeneousExtension {
    pub base: SphericalFunction,
    pub degree: f64,
}

/// Restriction to the sphere of the Fourier transform of the extension.
pub fn ft_homogeneous(ext: &HomogeneousExtension, lmax: usize) -> Result<SphericalFunction> {
    let n = ext.base.grid().dim();
    let p = -ext.degree;
    if !in_continuation_whitelist(n, p) {
        return Err(Error::Domain(format!(
            "homogeneity degree {} is outside the supported exponents",
            ext.degree
        )));
    }
    sphere::apply_multiplier(&ext.base, &ft_multipliers(n, p, lmax)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FracMode {
    Section,
    Projection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracLapConfig {
    pub alpha: f64,
    pub mode: FracMode,
}

impl FracLapConfig {
    /// Section mode needs `n >= 4` and `alpha in [n-4, n-1)`; projection
    /// mode needs `n >= 3` and `alpha in [n, n+1)`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let nf = n as f64;
        let a = self.alpha;
        match self.mode {
            FracMode::Section => {
                if n < 4 {
                    return Err(Error::OutOfRange(format!(
                        "fractional section comparisons need n >= 4, got {n}"
                    )));
                }
                if !(a >= nf - 4.0 && a < nf - 1.0) {
                    return Err(Error::OutOfRange(format!(
                        "alpha = {a} outside [{}, {}); below n-4 the comparison is not guaranteed",
                        nf - 4.0,
                        nf - 1.0
                    )));
                }
            }
            FracMode::Projection => {
                if n < 3 {
                    return Err(Error::OutOfRange(format!(
                        "fractional projection comparisons need n >= 3, got {n}"
                    )));
                }
                if !(a >= nf && a < nf + 1.0) {
                    return Err(Error::OutOfRange(format!(
                        "alpha = {a} outside [{nf}, {}); for alpha < n the comparison fails",
                        nf + 1.0
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Harmonic coefficients of `(-Delta)^{alpha/2} S_K` (up to `lmax`).
pub fn frac_section_spectrum(body: &Body, alpha: f64, cfg: &NumericConfig, lmax: usize) -> Result<Spectrum> {
    let n = body.dim();
    FracLapConfig {
        alpha,
        mode: FracMode::Section,
    }
    .validate(n)?;
    let grid = cfg.grid_for_degree(n, lmax)?;
    let f = body.radial_power(grid, (n - 1) as f64);
    let m = ft_multipliers(n, n as f64 - 1.0 - alpha, lmax)?;
    let scale = 1.0 / (PI * (n - 1) as f64);
    Ok(sphere::analyze(&f, lmax)?.scale_by_degree(|k| scale * m.get(k)))
}

/// `(-Delta)^{alpha/2} S_K` on the configured grid.
pub fn frac_laplacian_section(body: &Body, alpha: f64, cfg: &NumericConfig) -> Result<SphericalFunction> {
    let spec = frac_section_spectrum(body, alpha, cfg, cfg.lmax)?;
    Ok(sphere::synthesize(&spec, cfg.grid(body.dim())?))
}

/// `(2 pi)^{-n} m_k(-1) m_k(n+1-alpha)`: transform `P` as a degree-1
/// homogeneous function, multiply by `|x|^alpha`, transform back.
pub fn frac_projection_multipliers(n: usize, alpha: f64, lmax: usize) -> Result<MultiplierSequence> {
    let a = ft_multipliers(n, -1.0, lmax)?;
    let b = ft_multipliers(n, n as f64 + 1.0 - alpha, lmax)?;
    Ok(a.compose(&b).scaled((2.0 * PI).powi(-(n as i32))))
}

/// Harmonic coefficients of `(-Delta)^{alpha/2} P_L`.
pub fn frac_projection_spectrum(body: &Body, alpha: f64, cfg: &NumericConfig, lmax: usize) -> Result<Spectrum> {
    let n = body.dim();
    FracLapConfig {
        alpha,
        mode: FracMode::Projection,
    }
    .validate(n)?;
    let p = shadows::projection_spectrum(body, cfg, lmax)?;
    Ok(p.apply(&frac_projection_multipliers(n, alpha, lmax)?))
}

/// `(-Delta)^{alpha/2} P_L` on the configured grid.
pub fn frac_laplacian_projection(body: &Body, alpha: f64, cfg: &NumericConfig) -> Result<SphericalFunction> {
    let spec = frac_projection_spectrum(body, alpha, cfg, cfg.lmax)?;
    Ok(sphere::synthesize(&spec, cfg.grid(body.dim())?))
}

/// Sign test of `(||x||_K^{-1} |x|^{-alpha})^`.
#[derive(Debug, Clone, Serialize)]
pub struct PosdefReport {
    pub body: bodies::BodySummary,
    pub alpha: f64,
    /// Whether `alpha` lies in `[n-4, n-1)` where convexity forces
    /// positive definiteness.
    pub in_range: bool,
    pub min: f64,
    pub raw_min: f64,
    pub scale: f64,
    pub tolerance: f64,
    /// `None` outside the range, where no sign is claimed.
    pub pass: Option<bool>,
}

pub fn posdef_check(body: &Body, alpha: f64, cfg: &NumericConfig) -> Result<PosdefReport> {
    let n = body.dim();
    let nf = n as f64;
    let p = alpha + 1.0;
    if !in_continuation_whitelist(n, p) {
        return Err(Error::Domain(format!(
            "alpha = {alpha} gives exponent {p} outside the supported range"
        )));
    }
    let grid = cfg.grid(n)?;
    let rho = body.radial_function(grid);
    let m = ft_multipliers(n, p, cfg.lmax)?;
    let spec = sphere::analyze(&rho, cfg.lmax)?.apply(&m);
    let probe = filtered_probe(&spec, cached_grid(n, cfg.resolution_for(n) + 4)?);
    let in_range = alpha >= nf - 4.0 && alpha < nf - 1.0;
    let tolerance = cfg.tol.cert_rel * probe.sup_norm;
    Ok(PosdefReport {
        body: body.summary(),
        alpha,
        in_range,
        min: probe.min,
        raw_min: probe.raw_min,
        scale: probe.sup_norm,
        tolerance,
        pass: in_range.then_some(probe.min >= -tolerance),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParsevalOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
}

/// `int (||.||_K^{-p})^ (||.||_L^{-n+p})^ = (2 pi)^n int ||.||_K^{-p} ||.||_L^{-n+p}`
/// over the sphere; returns both sides and the relative defect.
pub fn parseval_check(k: &Body, l: &Body, p: f64, cfg: &NumericConfig) -> Result<ParsevalOutcome> {
    let n = k.dim();
    if l.dim() != n {
        return Err(Error::DimensionMismatch(n, l.dim()));
    }
    let nf = n as f64;
    if !(p > 0.0 && p < nf) {
        return Err(Error::OutOfRange(format!("p = {p} outside (0, {n})")));
    }
    let grid = cfg.grid(n)?;
    let fk = k.radial_power(grid.clone(), p);
    let fl = l.radial_power(grid.clone(), nf - p);
    let a = ft_homogeneous(
        &HomogeneousExtension {
            base: fk.clone(),
            degree: -p,
        },
        cfg.lmax,
    )?;
    let b = ft_homogeneous(
        &HomogeneousExtension {
            base: fl.clone(),
            degree: -(nf - p),
        },
        cfg.lmax,
    )?;
    let lhs = sphere::inner(&a, &b);
    let rhs = (2.0 * PI).powi(n as i32) * sphere::inner(&fk, &fl);
    Ok(ParsevalOutcome {
        lhs,
        rhs,
        defect: (lhs - rhs).abs() / rhs.abs(),
    })
}

/// `c(alpha, n)` of the fractional section stability bound.
pub fn section_stability_constant(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    let e = (nf - 1.0) / nf;
    let ln = 0.5 * PI.ln() + (nf - 1.0).ln() + ln_abs_gamma((nf - alpha - 1.0) / 2.0)
        - (alpha + 1.0 / nf) * 2f64.ln()
        - e * nf.ln()
        - ln_abs_gamma((alpha + 1.0) / 2.0)
        - e * ln_abs_gamma(nf / 2.0);
    ln.exp()
}

/// `c` of the fractional section separation bound, for `r = r(K)`.
pub fn section_separation_constant(n: usize, alpha: f64, r_norm: f64) -> f64 {
    let nf = n as f64;
    let ln = PI.ln() + (nf - 1.0).ln() + ln_abs_gamma((nf - alpha - 1.0) / 2.0)
        - nf.ln()
        - alpha * 2f64.ln()
        - ln_abs_gamma((alpha + 1.0) / 2.0)
        - ln_abs_gamma(nf / 2.0);
    r_norm * ln.exp()
}

/// `c` of the fractional projection stability bound, for `R = R(L)`.
pub fn projection_stability_constant(n: usize, alpha: f64, big_r_norm: f64) -> f64 {
    let nf = n as f64;
    let ln = ln_abs_gamma((nf - alpha + 1.0) / 2.0) + specfun::sphere_surface_area(n).ln()
        - (alpha + 1.0) * 2f64.ln()
        - 0.5 * nf * PI.ln()
        - ln_abs_gamma((alpha + 1.0) / 2.0)
        - nf.ln();
    big_r_norm * ln.exp()
}

fn pair_grid(k: &Body, l: &Body, cfg: &NumericConfig) -> Result<Arc<SphereGrid>> {
    if k.dim() != l.dim() {
        return Err(Error::DimensionMismatch(k.dim(), l.dim()));
    }
    cfg.grid(k.dim())
}

/// `Vol(K)^{(n-1)/n} <= Vol(L)^{(n-1)/n} + c(alpha,n) eps` with
/// `eps = max(0, sup((-Delta)^{alpha/2} S_K - (-Delta)^{alpha/2} S_L))`.
pub fn verify_frac_section_stability(k: &Body, l: &Body, alpha: f64, cfg: &NumericConfig) -> Result<VerifierReport> {
    let grid = pair_grid(k, l, cfg)?;
    let n = k.dim();
    let dk = sphere::synthesize(&frac_section_spectrum(k, alpha, cfg, cfg.lmax)?, grid.clone());
    let dl = sphere::synthesize(&frac_section_spectrum(l, alpha, cfg, cfg.lmax)?, grid);
    let eps = dk.sub(&dl).max().max(0.0);
    let c = section_stability_constant(n, alpha);
    let mut r = VerifierReport::new("frac_section_stability", &[k, l], cfg)
        .conclude(
            sections::volume_power(k, cfg)?,
            sections::volume_power(l, cfg)? + c * eps,
            cfg,
        )
        .flag(smoothness_flag(&[k, l]));
    r.alpha = Some(alpha);
    r.epsilon = eps;
    r.constant = c;
    r.hypothesis_met = k.is_convex() && l.is_convex();
    Ok(r)
}

/// `Vol(K)^{(n-1)/n} <= Vol(L)^{(n-1)/n} - c eps` with
/// `eps = inf((-Delta)^{alpha/2} S_L - (-Delta)^{alpha/2} S_K) > 0`.
pub fn verify_frac_section_separation(k: &Body, l: &Body, alpha: f64, cfg: &NumericConfig) -> Result<VerifierReport> {
    let grid = pair_grid(k, l, cfg)?;
    let n = k.dim();
    let dk = sphere::synthesize(&frac_section_spectrum(k, alpha, cfg, cfg.lmax)?, grid.clone());
    let dl = sphere::synthesize(&frac_section_spectrum(l, alpha, cfg, cfg.lmax)?, grid.clone());
    let eps = dl.sub(&dk).min();
    let r_norm = bodies::normalized_radii(k, &grid).r_norm;
    let c = section_separation_constant(n, alpha, r_norm);
    let mut r = VerifierReport::new("frac_section_separation", &[k, l], cfg)
        .conclude(
            sections::volume_power(k, cfg)?,
            sections::volume_power(l, cfg)? - c * eps.max(0.0),
            cfg,
        )
        .flag(smoothness_flag(&[k, l]));
    if eps <= 0.0 {
        r = r.flag("separation slack not positive");
    }
    r.alpha = Some(alpha);
    r.epsilon = eps;
    r.constant = c;
    r.hypothesis_met = k.is_convex() && l.is_convex() && eps > 0.0;
    Ok(r)
}

/// `Vol(K)^{(n-1)/n} <= Vol(L)^{(n-1)/n} + c eps` with
/// `eps = max(0, sup((-Delta)^{alpha/2} P_L - (-Delta)^{alpha/2} P_K))`
/// and `c` built from `R(L)`.
pub fn verify_frac_projection_stability(k: &Body, l: &Body, alpha: f64, cfg: &NumericConfig) -> Result<VerifierReport> {
    let grid = pair_grid(k, l, cfg)?;
    let n = k.dim();
    let ek = sphere::synthesize(&frac_projection_spectrum(k, alpha, cfg, cfg.lmax)?, grid.clone());
    let el = sphere::synthesize(&frac_projection_spectrum(l, alpha, cfg, cfg.lmax)?, grid.clone());
    let eps = el.sub(&ek).max().max(0.0);
    let big_r = bodies::normalized_radii(l, &grid).big_r_norm;
    let c = projection_stability_constant(n, alpha, big_r);
    let mut r = VerifierReport::new("frac_projection_stability", &[k, l], cfg)
        .conclude(
            sections::volume_power(k, cfg)?,
            sections::volume_power(l, cfg)? + c * eps,
            cfg,
        )
        .flag(smoothness_flag(&[k, l]));
    if alpha.fract() == 0.0 {
        r = r.flag("integer alpha: reciprocal-Gamma limit");
    }
    r.alpha = Some(alpha);
    r.epsilon = eps;
    r.constant = c;
    r.hypothesis_met = k.is_convex() && l.is_convex();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sections::radon_multipliers;
    use approx::assert_relative_eq;

    #[test]
    fn reciprocity_and_bridge() {
        let m = ft_multiplier(4, 1.3, 0).unwrap() * ft_multiplier(4, 2.7, 0).unwrap();
        assert_relative_eq!(m, (2.0 * PI).powi(4), max_relative = 1e-12);
        for n in 3..=5 {
            let c = radon_multipliers(n, 16);
            for k in (0..=16).step_by(2) {
                let m = ft_multiplier(n, n as f64 - 1.0, k).unwrap();
                assert_relative_eq!(m, PI * c.get(k), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn zeroth_multiplier_matches_closed_form() {
        // 2^{a+1} pi^{n/2} Gamma((a+1)/2) / Gamma((n-a-1)/2) at p = n-a-1
        for (n, a) in [(4usize, 1.0f64), (4, 0.25), (5, 2.5)] {
            let nf = n as f64;
            let closed = 2f64.powf(a + 1.0) * PI.powf(nf / 2.0) * specfun::gamma((a + 1.0) / 2.0)
                / specfun::gamma((nf - a - 1.0) / 2.0);
            assert_relative_eq!(ft_multiplier(n, nf - a - 1.0, 0).unwrap(), closed, max_relative = 1e-12);
        }
        assert_relative_eq!(ft_multiplier(4, 2.0, 0).unwrap(), 4.0 * PI * PI, max_relative = 1e-12);
    }

    #[test]
    fn poles() {
        // denominator pole: p = 0 at k = 0
        assert_eq!(ft_multiplier(3, 0.0, 0).unwrap(), 0.0);
        // numerator pole: p = n + k
        assert!(matches!(ft_multiplier(3, 5.0, 2), Err(Error::Pole(_))));
        // support function exponent: m_0(-1) < 0
        assert!(ft_multiplier(3, -1.0, 0).unwrap() < 0.0);
        assert!(ft_multiplier(3, 1.0, 1).is_err());
    }

    #[test]
    fn homogeneous_examples() {
        let cfg = NumericConfig::default();
        let g4 = cfg.grid(4).unwrap();
        let one = SphericalFunction::constant(g4, 1.0);
        let f = ft_homogeneous(&HomogeneousExtension { base: one, degree: -2.0 }, 8).unwrap();
        assert!(f.values().iter().all(|v| (v - 4.0 * PI * PI).abs() < 1e-9));
        let g3 = cfg.grid(3).unwrap();
        let one3 = SphericalFunction::constant(g3.clone(), 1.0);
        let f3 = ft_homogeneous(&HomogeneousExtension { base: one3, degree: -2.0 }, 8).unwrap();
        assert!(f3.values().iter().all(|v| (v / (2.0 * PI) - PI).abs() < 1e-12));
        let bad = SphericalFunction::constant(g3, 1.0);
        assert!(ft_homogeneous(&HomogeneousExtension { base: bad, degree: 1.5 }, 8).is_err());
    }

    #[test]
    fn alpha_zero_reproduces_sections() {
        let cfg = NumericConfig::default();
        let e = Body::ellipsoid(&[1.0, 1.1, 0.9, 1.0]).unwrap();
        let a = frac_laplacian_section(&e, 0.0, &cfg).unwrap();
        let s = sections::section_function(&e, &cfg).unwrap();
        assert!(a.sub(&s).sup_norm() < 1e-10);
    }

    #[test]
    fn range_gates() {
        let cfg = NumericConfig::default();
        let b4 = Body::ball(4, 1.0).unwrap();
        assert!(frac_laplacian_section(&b4, -0.1, &cfg).is_err());
        assert!(frac_laplacian_section(&b4, 3.0, &cfg).is_err());
        let b3 = Body::ball(3, 1.0).unwrap();
        assert!(frac_laplacian_section(&b3, 0.5, &cfg).is_err());
        assert!(frac_laplacian_projection(&b3, 2.9, &cfg).is_err());
        assert!(frac_laplacian_projection(&b3, 3.5, &cfg).is_ok());
    }

    #[test]
    fn stability_constant_value() {
        let c = section_stability_constant(4, 0.0);
        assert_relative_eq!(c, 3.0 * PI.sqrt() / 2f64.powf(2.75), max_relative = 1e-12);
    }

    #[test]
    fn ball_projection_laplacian_is_constant() {
        let cfg = NumericConfig::default();
        for (n, a) in [(3usize, 3.25f64), (4, 4.5)] {
            let nf = n as f64;
            let m0 = 2f64.powf(a - 1.0) * PI.powf(nf / 2.0) * specfun::gamma((a - 1.0) / 2.0)
                / specfun::gamma((nf + 1.0 - a) / 2.0);
            let f = frac_laplacian_projection(&Body::ball(n, 1.0).unwrap(), a, &cfg).unwrap();
            assert!(f.values().iter().all(|v| (v + m0 / PI).abs() < 1e-10 * m0.abs()));
        }
    }

    #[test]
    fn projection_constant_is_too_small_for_reversed_balls() {
        // The literal constant loses against K = (1+delta)B over L = B.
        let cfg = NumericConfig::default();
        let b = Body::ball(3, 1.0).unwrap();
        let r = verify_frac_projection_stability(&b.scaled(1.1), &b, 3.25, &cfg).unwrap();
        assert!(r.epsilon > 0.0);
        assert!(!r.pass);
        let ok = verify_frac_projection_stability(&b, &b.scaled(1.1), 3.25, &cfg).unwrap();
        assert!(ok.pass && ok.epsilon == 0.0);
    }
}
