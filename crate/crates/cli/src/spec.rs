//! Body specifications read from JSON.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use geotomo::bodies::{self, Body};

use crate::CliError;

pub const FAMILIES: &[&str] = &[
    "ball",
    "ellipsoid",
    "lp_ball",
    "cube",
    "cross_polytope",
    "perturbed_ball",
    "polytope",
    "zonotope",
    "random_smooth",
];

/// One body as written in a bodies file.
///
/// `params` by family:
///
/// - `ball`: `[r]` (default `1`)
/// - `ellipsoid`: the `dim` semi-axes
/// - `lp_ball`: `[p]`; `cube`, `cross_polytope`: none
/// - `perturbed_ball`: `[delta, degree]` or `[delta, degree, d_1, ..., d_dim]`
/// - `polytope`: rows `[a_1, ..., a_dim, b]` of the constraints `<a, x> <= b`, flattened
/// - `zonotope`: generators of length `dim`, flattened
/// - `random_smooth`: `[]`, or `[seed]`; the suite seed is used otherwise
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub family: String,
    pub dim: usize,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl BodySpec {
    pub fn new(family: &str, dim: usize, params: Vec<f64>) -> Self {
        Self {
            family: family.to_string(),
            dim,
            params,
            label: String::new(),
            scale: None,
        }
    }

    pub fn scaled(mut self, t: f64) -> Self {
        self.scale = Some(self.scale.unwrap_or(1.0) * t);
        self
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn display_label(&self) -> String {
        if self.label.is_empty() {
            self.family.clone()
        } else {
            self.label.clone()
        }
    }

    /// Builds the body; `seed` resolves `random_smooth` specs without their
    /// own seed.
    pub fn build(&self, seed: u64) -> Result<Body, CliError> {
        let n = self.dim;
        let p = &self.params;
        let bad = |msg: String| CliError::Spec(format!("{}: {msg}", self.display_label()));
        let rows = |width: usize| -> Result<Vec<Vec<f64>>, CliError> {
            if p.is_empty() || p.len() % width != 0 {
                return Err(bad(format!(
                    "expected a multiple of {width} parameters, got {}",
                    p.len()
                )));
            }
            Ok(p.chunks(width).map(|c| c.to_vec()).collect())
        };
        let body = match self.family.as_str() {
            "ball" => match p.as_slice() {
                [] => Body::ball(n, 1.0),
                [r] => Body::ball(n, *r),
                _ => return Err(bad("ball takes at most one parameter".into())),
            },
            "ellipsoid" => {
                if p.len() != n {
                    return Err(bad(format!("expected {n} semi-axes, got {}", p.len())));
                }
                Body::ellipsoid(p)
            }
            "lp_ball" => match p.as_slice() {
                [q] => Body::lp_ball(n, *q),
                _ => return Err(bad("lp_ball takes one parameter p".into())),
            },
            "cube" => Body::cube(n),
            "cross_polytope" => Body::cross_polytope(n),
            "perturbed_ball" => {
                if p.len() != 2 && p.len() != 2 + n {
                    return Err(bad(format!(
                        "expected [delta, degree] or [delta, degree, direction({n})], got {} values",
                        p.len()
                    )));
                }
                if p[1].fract() != 0.0 || p[1] < 0.0 {
                    return Err(bad("degree must be a nonnegative integer".into()));
                }
                let dir = (p.len() > 2).then(|| &p[2..]);
                Body::perturbed_ball(n, p[0], p[1] as usize, dir)
            }
            "polytope" => {
                let r = rows(n + 1)?;
                let normals: Vec<Vec<f64>> = r.iter().map(|row| row[..n].to_vec()).collect();
                let offsets: Vec<f64> = r.iter().map(|row| row[n]).collect();
                Body::polytope(&normals, &offsets)
            }
            "zonotope" => Body::zonotope(&rows(n)?),
            "random_smooth" => {
                let s = match p.as_slice() {
                    [] => seed,
                    [s] if s.fract() == 0.0 && *s >= 0.0 => *s as u64,
                    _ => return Err(bad("random_smooth takes at most an integer seed".into())),
                };
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                bodies::random_smooth_body(n, &mut rng)
            }
            other => {
                return Err(CliError::Spec(format!(
                    "unknown family '{other}'; supported: {}",
                    FAMILIES.join(", ")
                )))
            }
        }
        .map_err(|e| bad(e.to_string()))?;
        let body = match self.scale {
            Some(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(bad(format!("scale must be positive, got {t}")))
            }
            Some(t) => body.scaled(t),
            None => body,
        };
        Ok(body.with_label(self.display_label()))
    }
}

/// Parses and validates one body spec.
pub fn parse_body_spec(text: &str) -> Result<BodySpec, CliError> {
    let spec: BodySpec =
        serde_json::from_str(text).map_err(|e| CliError::Spec(format!("malformed body spec: {e}")))?;
    spec.build(0)?;
    Ok(spec)
}

/// Parses a bodies file: a JSON array of `[K, L]` pairs.
pub fn parse_pairs(text: &str) -> Result<Vec<(BodySpec, BodySpec)>, CliError> {
    let pairs: Vec<(BodySpec, BodySpec)> = serde_json::from_str(text)
        .map_err(|e| CliError::Spec(format!("malformed bodies file: {e}")))?;
    if pairs.is_empty() {
        return Err(CliError::Spec("bodies file holds no pairs".into()));
    }
    for (k, l) in &pairs {
        if k.dim != l.dim {
            return Err(CliError::Spec(format!(
                "pair ({}, {}) mixes dimensions {} and {}",
                k.display_label(),
                l.display_label(),
                k.dim,
                l.dim
            )));
        }
        if !FAMILIES.contains(&k.family.as_str()) || !FAMILIES.contains(&l.family.as_str()) {
            let bad = if FAMILIES.contains(&k.family.as_str()) { &l.family } else { &k.family };
            return Err(CliError::Spec(format!(
                "unknown family '{bad}'; supported: {}",
                FAMILIES.join(", ")
            )));
        }
    }
    Ok(pairs)
}
