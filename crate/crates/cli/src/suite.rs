//! Suite configuration, default body pairs and orchestration.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use geotomo::bodies::Body;
use geotomo::config::Tolerances;
use geotomo::report::smoothness_flag;
use geotomo::sections::{self, Verdict};
use geotomo::spectral::{self, FracLapConfig, FracMode};
use geotomo::{shadows, specfun, NumericConfig, VerifierReport};

use crate::spec::BodySpec;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteId {
    BpStability,
    BpSeparation,
    CorollaryN4,
    FracSection,
    FracSectionSep,
    Shephard,
    ShephardSep,
    FracProjection,
    Identities,
}

impl SuiteId {
    pub fn name(self) -> &'static str {
        match self {
            SuiteId::BpStability => "bp-stability",
            SuiteId::BpSeparation => "bp-separation",
            SuiteId::CorollaryN4 => "corollary-n4",
            SuiteId::FracSection => "frac-section",
            SuiteId::FracSectionSep => "frac-section-sep",
            SuiteId::Shephard => "shephard",
            SuiteId::ShephardSep => "shephard-sep",
            SuiteId::FracProjection => "frac-projection",
            SuiteId::Identities => "identities",
        }
    }

    fn frac_mode(self) -> Option<FracMode> {
        match self {
            SuiteId::FracSection | SuiteId::FracSectionSep => Some(FracMode::Section),
            SuiteId::FracProjection => Some(FracMode::Projection),
            _ => None,
        }
    }

    pub fn needs_alpha(self) -> bool {
        self.frac_mode().is_some()
    }

    fn default_dim(self) -> usize {
        match self {
            SuiteId::FracSection | SuiteId::FracSectionSep | SuiteId::CorollaryN4 => 4,
            _ => 3,
        }
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteConfig {
    pub suite: SuiteId,
    pub dim: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: u64,
    /// Randomized pairs added to the default pair list.
    pub count: usize,
    pub lmax: usize,
    pub resolution: Option<usize>,
    pub tolerances: Tolerances,
}

impl SuiteConfig {
    pub fn new(suite: SuiteId) -> Self {
        let numeric = NumericConfig::default();
        Self {
            suite,
            dim: None,
            alpha: None,
            seed: 7,
            count: 4,
            lmax: numeric.lmax,
            resolution: numeric.resolution,
            tolerances: numeric.tol,
        }
    }

    pub fn numeric(&self) -> NumericConfig {
        NumericConfig {
            lmax: self.lmax,
            resolution: self.resolution,
            tol: self.tolerances,
        }
    }

    /// Checks the configuration against the dimensions it will run in.
    pub fn validate(&self, dims: &[usize]) -> Result<(), CliError> {
        self.numeric()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        match (self.suite.frac_mode(), self.alpha) {
            (Some(_), None) => {
                return Err(CliError::Config(format!(
                    "suite {} needs --alpha",
                    self.suite
                )))
            }
            (None, Some(_)) => {
                return Err(CliError::Config(format!(
                    "suite {} takes no --alpha",
                    self.suite
                )))
            }
            (Some(mode), Some(alpha)) => {
                for &n in dims {
                    FracLapConfig { alpha, mode }
                        .validate(n)
                        .map_err(|e| CliError::Config(e.to_string()))?;
                }
            }
            (None, None) => {}
        }
        if let Some(n) = self.dim {
            if !(2..=6).contains(&n) {
                return Err(CliError::Config(format!("dimension {n} outside [2, 6]")));
            }
        }
        if self.suite == SuiteId::CorollaryN4 {
            if let Some(&n) = dims.iter().find(|&&n| !(2..=4).contains(&n)) {
                return Err(CliError::Config(format!(
                    "suite corollary-n4 runs in dimensions 2 to 4, got {n}"
                )));
            }
        }
        Ok(())
    }

    fn dims(&self) -> Vec<usize> {
        match (self.dim, self.suite) {
            (Some(n), _) => vec![n],
            (None, SuiteId::CorollaryN4) => vec![3, 4],
            (None, s) => vec![s.default_dim()],
        }
    }
}

type Pair = (BodySpec, BodySpec);

/// Random directions (besides the axes) in the route-agreement checks.
const ROUTE_DIRECTIONS: usize = 64;

fn ball(n: usize) -> BodySpec {
    BodySpec::new("ball", n, vec![]).labelled("B")
}

fn random_axes(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.8..1.25)).collect()
}

fn random_smooth(rng: &mut ChaCha8Rng, n: usize, tag: &str) -> BodySpec {
    let s: u32 = rng.gen();
    BodySpec::new("random_smooth", n, vec![s as f64]).labelled(format!("{tag}#{s}"))
}

fn ellipsoid(rng: &mut ChaCha8Rng, n: usize, tag: &str) -> BodySpec {
    BodySpec::new("ellipsoid", n, random_axes(rng, n)).labelled(tag)
}

/// Built-in pairs for a suite: the closed-form ball cases followed by
/// `count` seeded random pairs per dimension.
pub fn default_pairs(cfg: &SuiteConfig) -> Vec<Pair> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for n in cfg.dims() {
        let b = ball(n);
        match cfg.suite {
            SuiteId::BpStability | SuiteId::FracSection => {
                out.push((b.clone().scaled(1.1).labelled("1.1B"), b.clone()));
                out.push((b.clone(), b.clone()));
                for _ in 0..cfg.count {
                    out.push((random_smooth(&mut rng, n, "K"), random_smooth(&mut rng, n, "L")));
                }
                if cfg.suite == SuiteId::BpStability {
                    out.push((BodySpec::new("cube", n, vec![]), b.clone().scaled(1.3).labelled("1.3B")));
                }
            }
            SuiteId::BpSeparation | SuiteId::FracSectionSep => {
                let r = if cfg.suite == SuiteId::BpSeparation { 0.8 } else { 0.9 };
                out.push((b.clone().scaled(r).labelled(format!("{r}B")), b.clone()));
                for _ in 0..cfg.count {
                    let l = random_smooth(&mut rng, n, "L");
                    let t = rng.gen_range(0.75..0.95);
                    out.push((l.clone().scaled(t).labelled(format!("{t:.3}L")), l));
                }
            }
            SuiteId::CorollaryN4 => {
                out.push((b.clone().scaled(1.1).labelled("1.1B"), b.clone()));
                out.push((BodySpec::new("cube", n, vec![]), b.clone().scaled(1.2).labelled("1.2B")));
                for _ in 0..cfg.count {
                    let t = rng.gen_range(0.8..1.2);
                    let k = random_smooth(&mut rng, n, "K").scaled(t);
                    out.push((k, random_smooth(&mut rng, n, "L")));
                }
            }
            SuiteId::Shephard => {
                out.push((b.clone().scaled(1.1).labelled("1.1B"), b.clone()));
                out.push((b.clone(), b.clone()));
                out.push((BodySpec::new("cube", n, vec![]), b.clone().scaled(1.3).labelled("1.3B")));
                for _ in 0..cfg.count {
                    out.push((ellipsoid(&mut rng, n, "K"), ellipsoid(&mut rng, n, "L")));
                }
            }
            SuiteId::ShephardSep => {
                out.push((b.clone().scaled(0.8).labelled("0.8B"), b.clone()));
                let mut axes = vec![1.0; n];
                axes[n - 1] = 1.2;
                out.push((
                    BodySpec::new("ellipsoid", n, axes).scaled(0.7).labelled("0.7E"),
                    b.clone().scaled(1.1).labelled("1.1B"),
                ));
                for _ in 0..cfg.count {
                    let l = ellipsoid(&mut rng, n, "L");
                    let t = rng.gen_range(0.7..0.95);
                    out.push((l.clone().scaled(t).labelled(format!("{t:.3}L")), l));
                }
            }
            SuiteId::FracProjection => {
                out.push((b.clone(), b.clone().scaled(1.1).labelled("1.1B")));
                out.push((b.clone(), b.clone()));
                for _ in 0..cfg.count {
                    out.push((ellipsoid(&mut rng, n, "K"), ellipsoid(&mut rng, n, "L")));
                }
            }
            SuiteId::Identities => {
                let axes: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
                out.push((b.clone(), BodySpec::new("ellipsoid", n, axes).labelled("E")));
                for _ in 0..cfg.count {
                    out.push((ellipsoid(&mut rng, n, "K"), random_smooth(&mut rng, n, "L")));
                }
            }
        }
    }
    out
}

fn body_label(spec: &BodySpec) -> String {
    if spec.label.is_empty() {
        spec.family.clone()
    } else {
        spec.label.clone()
    }
}

/// Runs every pair; failures of a pair become reports with `error` set.
/// Reports keep the input order.
pub fn run_suite(cfg: &SuiteConfig, pairs: &[Pair]) -> Result<Vec<VerifierReport>, CliError> {
    if pairs.is_empty() {
        return Err(CliError::Config("no body pairs to run".into()));
    }
    let mut dims: Vec<usize> = pairs.iter().map(|(k, _)| k.dim).collect();
    dims.dedup();
    cfg.validate(&dims)?;
    let numeric = cfg.numeric();
    let per_pair: Vec<Vec<VerifierReport>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (ks, ls))| {
            let seed = cfg.seed.wrapping_add(2 * i as u64);
            let built = ks.build(seed).and_then(|k| Ok((k, ls.build(seed + 1)?)));
            match built {
                Ok((k, l)) => run_pair(cfg, &numeric, &k, &l),
                Err(e) => vec![failed_spec(cfg, &numeric, ks, ls, e.to_string())],
            }
        })
        .collect();
    let mut reports: Vec<VerifierReport> = per_pair.into_iter().flatten().collect();
    if cfg.suite == SuiteId::Identities {
        reports.push(gamma_lemma_report(&numeric));
        for n in dims {
            reports.push(bridge_report(n, &numeric));
        }
    }
    Ok(reports)
}

fn theorem_id(suite: SuiteId) -> &'static str {
    match suite {
        SuiteId::BpStability => "bp_stability",
        SuiteId::BpSeparation => "bp_separation",
        SuiteId::CorollaryN4 => "section_volume_bound",
        SuiteId::FracSection => "frac_section_stability",
        SuiteId::FracSectionSep => "frac_section_separation",
        SuiteId::Shephard => "shephard_stability",
        SuiteId::ShephardSep => "shephard_separation",
        SuiteId::FracProjection => "frac_projection_stability",
        SuiteId::Identities => "identities",
    }
}

fn failed_spec(cfg: &SuiteConfig, numeric: &NumericConfig, k: &BodySpec, l: &BodySpec, err: String) -> VerifierReport {
    let mut r = VerifierReport::failed(theorem_id(cfg.suite), &[], numeric, err);
    r.bodies = vec![
        geotomo::bodies::BodySummary {
            label: body_label(k),
            family: k.family.clone(),
            dim: k.dim,
            scale: k.scale.unwrap_or(1.0),
            params: k.params.clone(),
        },
        geotomo::bodies::BodySummary {
            label: body_label(l),
            family: l.family.clone(),
            dim: l.dim,
            scale: l.scale.unwrap_or(1.0),
            params: l.params.clone(),
        },
    ];
    r.resolution = numeric.resolution_for(k.dim);
    r.alpha = cfg.alpha;
    r
}

fn run_pair(cfg: &SuiteConfig, numeric: &NumericConfig, k: &Body, l: &Body) -> Vec<VerifierReport> {
    let id = theorem_id(cfg.suite);
    let alpha = cfg.alpha.unwrap_or(0.0);
    let result = match cfg.suite {
        SuiteId::BpStability => sections::verify_bp_stability(k, l, numeric),
        SuiteId::BpSeparation => sections::verify_bp_separation(k, l, numeric),
        SuiteId::CorollaryN4 => sections::verify_section_volume_bound(k, l, numeric),
        SuiteId::FracSection => spectral::verify_frac_section_stability(k, l, alpha, numeric),
        SuiteId::FracSectionSep => spectral::verify_frac_section_separation(k, l, alpha, numeric),
        SuiteId::Shephard => shadows::verify_shephard_stability(k, l, numeric),
        SuiteId::ShephardSep => shadows::verify_shephard_separation(k, l, numeric),
        SuiteId::FracProjection => spectral::verify_frac_projection_stability(k, l, alpha, numeric),
        SuiteId::Identities => return identity_reports(numeric, k, l),
    };
    vec![result.unwrap_or_else(|e| {
        let mut r = VerifierReport::failed(id, &[k, l], numeric, e.to_string());
        r.alpha = cfg.alpha;
        r
    })]
}

/// Report for a quantity that must stay below a tolerance.
fn below(theorem: &str, bodies: &[&Body], numeric: &NumericConfig, value: f64, bound: f64) -> VerifierReport {
    let mut r = VerifierReport::new(theorem, bodies, numeric);
    r.lhs = value;
    r.rhs = bound;
    r.margin = bound - value;
    r.tolerance = 0.0;
    r.pass = r.margin >= 0.0;
    r.hypothesis_met = true;
    r.flags.push(smoothness_flag(bodies));
    r
}

fn attempt(theorem: &str, bodies: &[&Body], numeric: &NumericConfig, f: impl FnOnce() -> geotomo::Result<VerifierReport>) -> VerifierReport {
    f().unwrap_or_else(|e| VerifierReport::failed(theorem, bodies, numeric, e.to_string()))
}

fn identity_reports(numeric: &NumericConfig, k: &Body, l: &Body) -> Vec<VerifierReport> {
    let n = k.dim();
    let route_tol = numeric.tol.route;
    let mut out = Vec::new();
    out.push(attempt("parseval_sections", &[k, l], numeric, || {
        let o = spectral::parseval_check(k, l, n as f64 / 2.0, numeric)?;
        Ok(below("parseval_sections", &[k, l], numeric, o.defect, route_tol))
    }));
    if k.has_support() && l.has_curvature_density() {
        out.push(attempt("parseval_projections", &[k, l], numeric, || {
            let o = shadows::projection_parseval_check(k, l, numeric)?;
            Ok(below("parseval_projections", &[k, l], numeric, o.defect, route_tol))
        }));
    }
    if k.has_curvature_data() && l.has_support() {
        out.push(attempt("minkowski_first", &[k, l], numeric, || {
            let m = shadows::minkowski_check(k, l, numeric)?;
            let mut r = below("minkowski_first", &[k, l], numeric, -m, 0.0);
            r.tolerance = numeric.tol.verdict(m.abs());
            r.pass = r.margin >= -r.tolerance;
            Ok(r)
        }));
    }
    for b in [k, l] {
        if b.is_smooth() {
            out.push(attempt("radon_routes", &[b], numeric, || {
                let gap = sections::section_route_gap(b, numeric, ROUTE_DIRECTIONS)?;
                Ok(below("radon_routes", &[b], numeric, gap, route_tol))
            }));
        }
        if b.has_curvature_density() {
            out.push(attempt("projection_routes", &[b], numeric, || {
                let gap = shadows::projection_route_gap(b, numeric, ROUTE_DIRECTIONS)?;
                Ok(below("projection_routes", &[b], numeric, gap, route_tol))
            }));
        }
        if b.is_convex() && n >= 3 {
            out.push(attempt("positive_definite", &[b], numeric, || {
                let alpha = (n as f64 - 4.0).max(0.0);
                let p = spectral::posdef_check(b, alpha, numeric)?;
                let mut r = below("positive_definite", &[b], numeric, -p.min, p.tolerance);
                r.alpha = Some(alpha);
                r.hypothesis_met = p.in_range;
                Ok(r)
            }));
        }
        out.push(attempt("intersection_body_certificate", &[b], numeric, || {
            let c = sections::intersection_certificate(b, numeric)?;
            let mut r = below("intersection_body_certificate", &[b], numeric, -c.min_density, c.tolerance);
            r.flags.push(verdict_flag(c.computed_verdict));
            Ok(r)
        }));
        if b.has_support() {
            out.push(attempt("projection_body_certificate", &[b], numeric, || {
                let c = shadows::projection_body_certificate(b, numeric)?;
                let mut r = below("projection_body_certificate", &[b], numeric, c.max_h_hat, c.tolerance);
                r.flags.push(verdict_flag(c.verdict));
                Ok(r)
            }));
        }
    }
    out
}

fn verdict_flag(v: Verdict) -> String {
    match v {
        Verdict::Certified => "certified",
        Verdict::CertifiedNot => "certified-not",
        Verdict::Inconclusive => "inconclusive",
    }
    .to_string()
}

/// Dimension lemma for `n` in `1..=500`: `lhs` counts violations.
fn gamma_lemma_report(numeric: &NumericConfig) -> VerifierReport {
    let failures = (1..=500usize)
        .filter(|&n| !specfun::gamma_ratio_check(n).passed())
        .count();
    let mut r = VerifierReport::new("gamma_lemma", &[], numeric);
    r.lhs = failures as f64;
    r.margin = -r.lhs;
    r.pass = failures == 0;
    r.hypothesis_met = true;
    r
}

/// Largest relative gap between `m_k(n-1)` and `pi c_{n,k}` over even `k <= lmax`.
fn bridge_report(n: usize, numeric: &NumericConfig) -> VerifierReport {
    let c = sections::radon_multipliers(n, numeric.lmax);
    let gap = (0..=numeric.lmax)
        .step_by(2)
        .map(|k| {
            let m = spectral::ft_multiplier(n, n as f64 - 1.0, k).unwrap_or(f64::NAN);
            let target = std::f64::consts::PI * c.get(k);
            (m - target).abs() / target.abs()
        })
        .fold(0.0f64, f64::max);
    let mut r = VerifierReport::new("multiplier_bridge", &[], numeric);
    r.resolution = numeric.resolution_for(n);
    r.lhs = gap;
    r.rhs = 1e-8;
    r.margin = r.rhs - gap;
    r.pass = r.margin >= 0.0;
    r.hypothesis_met = true;
    r.flags.push(format!("n={n}"));
    r
}
