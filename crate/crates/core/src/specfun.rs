//! Special functions: Gamma (Lanczos), Gegenbauer polynomials and the
//! sphere/ball constants that appear in every volume formula.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Highest polynomial degree the Gegenbauer evaluators are used with.
pub const MAX_DEGREE: usize = 64;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `sin(pi x)` with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    // r in [-1, 1]
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    let s = if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    };
    s
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// `ln |Gamma(x)|` for `x >= 0.5` (Lanczos, g = 7).
fn ln_gamma_lanczos(x: f64) -> f64 {
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `log Gamma(x)` for `x > 0`.
pub fn gamma_ln(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma_ln requires x > 0, got {x}")));
    }
    Ok(ln_abs_gamma(x))
}

/// `ln |Gamma(x)|` for any real `x` that is not a pole (poles give +inf).
pub fn ln_abs_gamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::INFINITY;
    }
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x >= 0.5 {
        ln_gamma_lanczos(x)
    } else {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        PI.ln() - sin_pi(x).abs().ln() - ln_gamma_lanczos(1.0 - x)
    }
}

/// Sign of `Gamma(x)`; zero at the poles.
pub fn gamma_sign(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x > 0.0 {
        return 1.0;
    }
    // Gamma alternates sign between consecutive negative integers.
    if (x.floor() as i64).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `Gamma(x)`; infinite at the poles.
pub fn gamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::INFINITY;
    }
    gamma_sign(x) * ln_abs_gamma(x).exp()
}

/// `1 / Gamma(x)`, defined on all reals (zero at the poles).
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    gamma_sign(x) * (-ln_abs_gamma(x)).exp()
}

/// Gegenbauer polynomial `C_k^{(nu)}(t)` by the three-term recurrence.
pub fn gegenbauer(k: usize, nu: f64, t: f64) -> f64 {
    debug_assert!(k <= MAX_DEGREE);
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * nu * t;
    for j in 1..k {
        let jf = j as f64;
        let next = (2.0 * (nu + jf) * t * cur - (2.0 * nu + jf - 1.0) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Chebyshev polynomial of the first kind.
pub fn chebyshev_t(k: usize, t: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = t;
    for _ in 1..k {
        let next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Zonal profile `C_k^{(nu)}(t) / C_k^{(nu)}(1)`, with the `nu -> 0` limit
/// `T_k(t)` used on the circle.
pub fn zonal(k: usize, nu: f64, t: f64) -> f64 {
    if nu == 0.0 {
        chebyshev_t(k, t)
    } else {
        gegenbauer(k, nu, t) / gegenbauer(k, nu, 1.0)
    }
}

/// Gegenbauer index `(n - 2) / 2` attached to `S^{n-1}`.
pub fn sphere_index(n: usize) -> f64 {
    (n as f64 - 2.0) / 2.0
}

/// Surface area `|S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)`.
pub fn sphere_surface_area(n: usize) -> f64 {
    assert!(n >= 1, "sphere_surface_area needs n >= 1");
    let h = n as f64 / 2.0;
    2.0 * (h * PI.ln() - ln_abs_gamma(h)).exp()
}

/// Volume of the unit Euclidean ball in `R^n`.
pub fn ball_volume(n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let h = n as f64 / 2.0;
    (h * PI.ln() - ln_abs_gamma(h + 1.0)).exp()
}

/// Dimension of the space of degree-`k` spherical harmonics on `S^{n-1}`.
pub fn harmonic_dimension(n: usize, k: usize) -> f64 {
    match (n, k) {
        (2, 0) => 1.0,
        (2, _) => 2.0,
        _ => {
            let nf = n as f64;
            let kf = k as f64;
            // (2k+n-2) (k+n-3)! / (k! (n-2)!)
            (2.0 * kf + nf - 2.0)
                * (ln_abs_gamma(kf + nf - 2.0) - ln_abs_gamma(kf + 1.0) - ln_abs_gamma(nf - 1.0))
                    .exp()
        }
    }
}

/// The three Gamma ratios bounded by the dimension lemma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaRatios {
    pub n: usize,
    /// `Gamma(n/2+1)^{(n-1)/n} / Gamma((n+1)/2)`
    pub ratio1: f64,
    /// `Gamma((n-1)/2) / Gamma(n/2)^{(n-1)/n}`; `NaN` for `n = 1`
    pub ratio2: f64,
    /// `Gamma(n/2+1) / Gamma((n+1)/2)`
    pub ratio3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaRatioOutcome {
    pub ratios: GammaRatios,
    pub first: bool,
    /// `None` for `n = 1`, where the second bound is not defined.
    pub second: Option<bool>,
    pub third: bool,
}

impl GammaRatioOutcome {
    pub fn passed(&self) -> bool {
        self.first && self.second.unwrap_or(true) && self.third
    }
}

pub fn gamma_ratios(n: usize) -> GammaRatios {
    assert!(n >= 1);
    let nf = n as f64;
    let e = (nf - 1.0) / nf;
    let lg_half_plus1 = ln_abs_gamma(nf / 2.0 + 1.0);
    let lg_np1_half = ln_abs_gamma((nf + 1.0) / 2.0);
    let ratio1 = (e * lg_half_plus1 - lg_np1_half).exp();
    let ratio2 = if n >= 2 {
        (ln_abs_gamma((nf - 1.0) / 2.0) - e * ln_abs_gamma(nf / 2.0)).exp()
    } else {
        f64::NAN
    };
    let ratio3 = (lg_half_plus1 - lg_np1_half).exp();
    GammaRatios {
        n,
        ratio1,
        ratio2,
        ratio3,
    }
}

/// Evaluates the three Gamma ratios and checks their stated bounds.
pub fn gamma_ratio_check(n: usize) -> GammaRatioOutcome {
    let r = gamma_ratios(n);
    let nf = n as f64;
    let first = r.ratio1 >= 1.0 && r.ratio1 <= std::f64::consts::E.sqrt();
    let second = (n >= 2).then(|| {
        let bound = nf.powf((nf - 1.0) / nf) * 2f64.powf(1.0 / nf) / (nf - 1.0);
        r.ratio2 <= bound
    });
    let third = r.ratio3 >= (nf / 2.0).sqrt() && r.ratio3 <= ((nf + 1.0) / 2.0).sqrt();
    GammaRatioOutcome {
        ratios: r,
        first,
        second,
        third,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn gamma_ln_examples() {
        assert_eq!(gamma_ln(1.0).unwrap(), 0.0);
        assert!((gamma_ln(0.5).unwrap() - 0.572_364_942_924_700_1).abs() < 1e-14);
        assert!(rel(gamma_ln(5.0).unwrap(), 24f64.ln()) < 1e-13);
        assert!(gamma_ln(0.0).is_err());
        assert!(gamma_ln(-1.5).is_err());
    }

    #[test]
    fn reflection_and_poles() {
        // Gamma(-1/2) = -2 sqrt(pi)
        assert!(rel(gamma(-0.5), -2.0 * PI.sqrt()) < 1e-13);
        assert!(rel(gamma(-1.5), 4.0 * PI.sqrt() / 3.0) < 1e-13);
        for x in [0.0, -1.0, -2.0, -7.0] {
            assert_eq!(rgamma(x), 0.0);
        }
        assert!(rel(rgamma(4.0), 1.0 / 6.0) < 1e-14);
    }

    #[test]
    fn gegenbauer_examples() {
        assert_eq!(gegenbauer(0, 0.5, 0.3), 1.0);
        assert!((gegenbauer(1, 0.5, 0.3) - 0.3).abs() < 1e-15);
        assert!((gegenbauer(2, 0.5, 0.0) + 0.5).abs() < 1e-15);
        // C_k^{(1)}(cos x) = sin((k+1)x)/sin x
        let x = 0.7f64;
        assert!((gegenbauer(9, 1.0, x.cos()) - (10.0 * x).sin() / x.sin()).abs() < 1e-12);
    }

    #[test]
    fn zonal_on_circle_is_chebyshev() {
        let x = 1.1f64;
        assert!((zonal(6, 0.0, x.cos()) - (6.0 * x).cos()).abs() < 1e-13);
    }

    #[test]
    fn sphere_areas() {
        assert!(rel(sphere_surface_area(2), 2.0 * PI) < 1e-14);
        assert!(rel(sphere_surface_area(3), 4.0 * PI) < 1e-14);
        assert!(rel(sphere_surface_area(5), 8.0 * PI * PI / 3.0) < 1e-13);
        assert!(rel(sphere_surface_area(1), 2.0) < 1e-14);
        assert!(rel(ball_volume(4), PI * PI / 2.0) < 1e-13);
    }

    #[test]
    fn harmonic_dimensions() {
        assert_eq!(harmonic_dimension(3, 4).round(), 9.0);
        assert_eq!(harmonic_dimension(4, 2).round(), 9.0);
        assert_eq!(harmonic_dimension(2, 5), 2.0);
        assert_eq!(harmonic_dimension(5, 0).round(), 1.0);
    }

    #[test]
    fn gamma_ratio_small_cases() {
        let o2 = gamma_ratio_check(2);
        assert!(rel(o2.ratios.ratio3, 2.0 / PI.sqrt()) < 1e-13);
        assert!(o2.passed());
        let o3 = gamma_ratio_check(3);
        assert!(rel(o3.ratios.ratio1, (3.0 * PI.sqrt() / 4.0).powf(2.0 / 3.0)) < 1e-13);
        assert!(o3.passed());
        let o1 = gamma_ratio_check(1);
        assert!(o1.second.is_none());
        assert!(o1.passed());
        assert!(gamma_ratio_check(100).passed());
    }
}
