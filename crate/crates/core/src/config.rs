//! Numerical parameters shared by every verifier.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{self, SphereGrid};

pub const DEFAULT_LMAX: usize = 16;

/// Extra degrees a grid must resolve beyond `lmax`, so that truncation
/// stability re-runs at `lmax + 4` reuse the same grid.
pub const STABILITY_STEP: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Certificates: `tol_cert = cert_rel * ||g||_inf`.
    pub cert_rel: f64,
    /// Verdicts: `tol_verdict = verdict_rel * max(1, rhs)`.
    pub verdict_rel: f64,
    /// Sup-norm agreement between two evaluation routes.
    pub route: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cert_rel: 1e-4,
            verdict_rel: 1e-6,
            route: 1e-3,
        }
    }
}

impl Tolerances {
    pub fn verdict(&self, rhs: f64) -> f64 {
        self.verdict_rel * rhs.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericConfig {
    pub lmax: usize,
    /// Polar nodes per angle; `None` selects the per-dimension default.
    pub resolution: Option<usize>,
    pub tol: Tolerances,
}

impl Default for NumericConfig {
    fn default() -> Self {
        Self {
            lmax: DEFAULT_LMAX,
            resolution: None,
            tol: Tolerances::default(),
        }
    }
}

impl NumericConfig {
    pub fn with_lmax(lmax: usize) -> Self {
        Self {
            lmax,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lmax % 2 == 1 || self.lmax < 2 {
            return Err(Error::OutOfRange(format!(
                "lmax must be even and >= 2, got {}",
                self.lmax
            )));
        }
        if self.lmax + STABILITY_STEP > crate::specfun::MAX_DEGREE {
            return Err(Error::OutOfRange(format!("lmax {} too large", self.lmax)));
        }
        if let Some(r) = self.resolution {
            if r < sphere::min_resolution(self.lmax) {
                return Err(Error::OutOfRange(format!(
                    "resolution {r} cannot resolve lmax {}",
                    self.lmax
                )));
            }
        }
        Ok(())
    }

    /// Grid resolution used for dimension `n`.
    pub fn resolution_for(&self, n: usize) -> usize {
        self.resolution.unwrap_or_else(|| {
            sphere::default_resolution(n).max(sphere::min_resolution(self.lmax + STABILITY_STEP))
        })
    }

    pub fn grid(&self, n: usize) -> Result<Arc<SphereGrid>> {
        cached_grid(n, self.resolution_for(n))
    }

    /// Grid able to resolve `lmax` at least, at the configured resolution
    /// when that suffices.
    pub fn grid_for_degree(&self, n: usize, lmax: usize) -> Result<Arc<SphereGrid>> {
        let r = self.resolution_for(n).max(sphere::min_resolution(lmax));
        cached_grid(n, r)
    }

    /// Resolution for routes that cost `O(N * N_sub)` (direct Radon and
    /// projection integrals evaluated on a whole grid).
    pub fn direct_resolution(&self, n: usize) -> usize {
        let cap = match n {
            2 | 3 => usize::MAX,
            4 => 24,
            _ => 12,
        };
        self.resolution_for(n).min(cap)
    }
}

/// Process-wide grid cache keyed by `(n, resolution)`.
pub fn cached_grid(n: usize, resolution: usize) -> Result<Arc<SphereGrid>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<SphereGrid>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(g) = cache.lock().unwrap().get(&(n, resolution)) {
        return Ok(g.clone());
    }
    let g = sphere::build_grid(n, resolution)?;
    Ok(cache
        .lock()
        .unwrap()
        .entry((n, resolution))
        .or_insert(g)
        .clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_resolution_covers_stability_step() {
        let cfg = NumericConfig::default();
        for n in 2..=6 {
            assert!(cfg.resolution_for(n) > cfg.lmax + STABILITY_STEP);
        }
        let big = NumericConfig::with_lmax(28);
        assert!(big.resolution_for(5) >= 33);
    }

    #[test]
    fn validation() {
        assert!(NumericConfig::with_lmax(15).validate().is_err());
        let cfg = NumericConfig {
            resolution: Some(10),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(NumericConfig::default().validate().is_ok());
    }

    #[test]
    fn cache_returns_shared_grid() {
        let a = cached_grid(3, 8).unwrap();
        let b = cached_grid(3, 8).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }
}
