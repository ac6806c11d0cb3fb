use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geotomo::bodies::{self, Body};
use geotomo::sections::{self, Route};
use geotomo::shadows;
use geotomo::specfun;
use geotomo::spectral::ft_multiplier;
use geotomo::sphere::{self, SphericalFunction};
use geotomo::{NumericConfig, VerifierReport};

fn smooth_body(n: usize, seed: u64) -> Body {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    bodies::random_smooth_body(n, &mut rng).unwrap()
}

fn unit(v: &[f64]) -> Vec<f64> {
    let l = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / l).collect()
}

fn direction(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(|v| unit(&v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gamma_recurrence(x in 0.05f64..60.0) {
        let lhs = specfun::gamma_ln(x + 1.0).unwrap();
        let rhs = specfun::gamma_ln(x).unwrap() + x.ln();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn multiplier_reciprocity(n in 2usize..7, s in 0.01f64..0.99, j in 0usize..9) {
        let p = s * n as f64;
        let prod = ft_multiplier(n, p, 2 * j).unwrap() * ft_multiplier(n, n as f64 - p, 2 * j).unwrap();
        let target = (2.0 * PI).powi(n as i32);
        prop_assert!((prod - target).abs() <= 1e-10 * target);
    }

    #[test]
    fn support_function_axioms(
        axes in prop::collection::vec(0.5f64..2.0, 3),
        x in prop::collection::vec(-2.0f64..2.0, 3),
        y in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let bodies = [
            Body::ellipsoid(&axes).unwrap(),
            Body::zonotope(&[axes.clone(), vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.5]]).unwrap(),
        ];
        for b in &bodies {
            let h = |v: &[f64]| b.support(v).unwrap();
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let twice: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            let sum: Vec<f64> = x.iter().zip(&y).map(|(a, c)| a + c).collect();
            prop_assert!((h(&neg) - h(&x)).abs() < 1e-12);
            prop_assert!((h(&twice) - 2.0 * h(&x)).abs() < 1e-10);
            prop_assert!(h(&sum) <= h(&x) + h(&y) + 1e-10);
        }
    }

    #[test]
    fn radial_symmetry_and_scaling(seed in any::<u64>(), u in direction(4), t in 0.3f64..3.0) {
        let b = smooth_body(4, seed);
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        prop_assert!(b.radial(&u) > 0.0);
        prop_assert!((b.radial(&neg) - b.radial(&u)).abs() < 1e-12);
        prop_assert!((b.scaled(t).radial(&u) - t * b.radial(&u)).abs() < 1e-12 * t);
        prop_assert!((b.gauge(&u) * b.radial(&u) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn verdict_is_margin_against_tolerance(lhs in -10.0f64..10.0, rhs in -10.0f64..10.0) {
        let cfg = NumericConfig::default();
        let b = Body::ball(3, 1.0).unwrap();
        let r = VerifierReport::new("probe", &[&b], &cfg).conclude(lhs, rhs, &cfg);
        prop_assert_eq!(r.pass, r.margin >= -r.tolerance);
        prop_assert!((r.margin - (rhs - lhs)).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn radon_self_duality(a in any::<u64>(), b in any::<u64>()) {
        let cfg = NumericConfig::default();
        let g = cfg.grid(3).unwrap();
        let f = smooth_body(3, a).radial_power(g.clone(), 2.0);
        let h = smooth_body(3, b).radial_power(g, 2.0);
        let rf = sections::radon_spectral(&f, cfg.lmax).unwrap();
        let rh = sections::radon_spectral(&h, cfg.lmax).unwrap();
        let lhs = sphere::inner(&rf, &h);
        let rhs = sphere::inner(&f, &rh);
        prop_assert!((lhs - rhs).abs() <= 1e-5 * rhs.abs());
    }

    #[test]
    fn radon_routes_agree(seed in any::<u64>(), xi in direction(3)) {
        let cfg = NumericConfig::default();
        let k = smooth_body(3, seed);
        let s = sphere::synthesize(&sections::section_spectrum(&k, &cfg, cfg.lmax).unwrap(), cfg.grid(3).unwrap());
        let direct = sections::section_value_direct(&k, &xi, 48);
        prop_assert!((s.eval(&xi).unwrap() - direct).abs() < 1e-3);
    }

    #[test]
    fn sections_and_projections_scale(seed in any::<u64>(), t in 0.5f64..2.0) {
        let cfg = NumericConfig::default();
        let k = smooth_body(3, seed);
        let g = cfg.grid(3).unwrap();
        let s1 = sections::section_function_on(&k, &cfg, Route::Spectral, g.clone()).unwrap();
        let s2 = sections::section_function_on(&k.scaled(t), &cfg, Route::Spectral, g.clone()).unwrap();
        prop_assert!(s2.sub(&s1.scale(t * t)).sup_norm() < 1e-8 * t * t * s1.sup_norm());
        let e = Body::ellipsoid(&[1.0, 1.2, 0.9]).unwrap();
        let p1 = shadows::projection_function(&e, &cfg).unwrap();
        let p2 = shadows::projection_function(&e.scaled(t), &cfg).unwrap();
        prop_assert!(p2.sub(&p1.scale(t * t)).sup_norm() < 1e-8 * t * t * p1.sup_norm());
    }

    #[test]
    fn projection_is_monotone(axes in prop::collection::vec(0.6f64..1.6, 3), t in 0.5f64..1.0) {
        let cfg = NumericConfig::default();
        let l = Body::ellipsoid(&axes).unwrap();
        let pk = shadows::projection_function(&l.scaled(t), &cfg).unwrap();
        let pl = shadows::projection_function(&l, &cfg).unwrap();
        prop_assert!(pk.sub(&pl).max() <= 1e-6);
        let c = Body::cube(3).unwrap();
        let pc = shadows::projection_function(&c.scaled(t), &cfg).unwrap();
        let pcl = shadows::projection_function(&c, &cfg).unwrap();
        prop_assert!(pc.sub(&pcl).max() <= 1e-6);
    }

    #[test]
    fn filter_keeps_nonnegative_functions_nonnegative(seed in any::<u64>()) {
        let cfg = NumericConfig::default();
        let g = cfg.grid(3).unwrap();
        let k = smooth_body(3, seed);
        let u0 = k.radial_extrema().0;
        let f = SphericalFunction::from_fn(g.clone(), move |u| (k.radial(u) - u0).max(0.0));
        let spec = sphere::analyze(&f, cfg.lmax).unwrap();
        let probe = sections::filtered_probe(&spec, g);
        prop_assert!(probe.min >= -1e-10 * probe.sup_norm.max(1.0));
    }

    #[test]
    fn degree_projection_is_idempotent(c in prop::collection::vec(-1.0f64..1.0, 6)) {
        let g = sphere::build_grid(4, 12).unwrap();
        let f = SphericalFunction::from_fn(g, move |u| {
            c[0] + c[1] * u[0] * u[1] + c[2] * u[2] * u[2] + c[3] * u[3].powi(4) + c[4] * u[0] * u[1] * u[2] * u[3] + c[5] * u[1].powi(6)
        });
        for k in [0usize, 2, 4, 6] {
            let p = sphere::project_degree(&f, k).unwrap();
            let pp = sphere::project_degree(&p, k).unwrap();
            prop_assert!(pp.sub(&p).sup_norm() < 1e-10 * (1.0 + p.sup_norm()));
        }
        let sum = sphere::decompose(&f, 6).unwrap().into_iter().fold(None, |acc: Option<SphericalFunction>, p| {
            Some(match acc { None => p, Some(a) => a.zip_with(&p, |x, y| x + y) })
        }).unwrap();
        prop_assert!(sum.sub(&f).sup_norm() < 1e-10);
    }
}
