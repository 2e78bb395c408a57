use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::Vector3;
use proptest::prelude::*;

use crofton::harness::*;
use crofton::sphere::*;
use crofton::transforms::*;
use crofton::zonoid::*;

fn direction() -> impl Strategy<Value = Direction> {
    (-1.0f64..1.0, 0.0f64..TAU).prop_map(|(z, lon)| {
        let s = (1.0 - z * z).sqrt();
        Direction::from_xyz(s * lon.cos(), s * lon.sin(), z).unwrap()
    })
}

fn point() -> impl Strategy<Value = Point3> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn angle() -> impl Strategy<Value = f64> {
    0.0f64..TAU
}

fn even_coeffs(l: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, sh_count(l)).prop_map(|mut c| {
        for (i, v) in c.iter_mut().enumerate() {
            match sh_degree(i) {
                0 => *v = 3.0,
                n if n % 2 == 1 => *v = 0.0,
                _ => {}
            }
        }
        c
    })
}

/// Even function of band limit `l` on a degree-12 grid.
fn on_grid(mut c: Vec<f64>) -> SphericalFunction {
    c.resize(sh_count(12), 0.0);
    SphericalFunction::from_coeffs(Arc::new(SphericalQuadrature::new(12)), c, Parity::Even)
}

fn gap(a: f64, b: f64) -> f64 {
    angle_diff(a, b).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn directions_are_unit(x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0) {
        prop_assume!(x * x + y * y + z * z > 1e-6);
        let d = Direction::from_xyz(x, y, z).unwrap();
        prop_assert!((d.as_vector().norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn frames_are_right_handed(w in direction()) {
        let (e1, e2) = frame_of_normal(&w);
        let det = e1.as_vector().cross(e2.as_vector()).dot(w.as_vector());
        prop_assert!((det - 1.0).abs() < 1e-12);
        prop_assert!(e1.as_vector().dot(w.as_vector()).abs() < 1e-12);
    }

    #[test]
    fn flag_parametrizations_round_trip(x in point(), om in direction(), phi_cap in angle()) {
        let (x2, w, phi) = flag_convert(x, om, phi_cap);
        let (x3, om2, phi_cap2) = flag_convert_inverse(x2, w, phi);
        prop_assert_eq!(x3, x);
        prop_assert!((om2.into_inner() - om.into_inner()).norm() < 1e-12);
        prop_assert!(gap(phi_cap2, phi_cap) < 1e-10);
    }

    #[test]
    fn flag_frame_is_left_handed(x in point(), w in direction(), phi in angle()) {
        let fr = Flag::from_plane(x, w, phi).frame();
        let det = fr.x1.as_vector().cross(fr.x2.as_vector()).dot(fr.x3.as_vector());
        prop_assert!((det + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_rates_match_finite_differences(w in direction(), phi in angle()) {
        let c = SphereCoords::of(&w);
        prop_assume!(c.lat.cos() > 0.05);
        let f = Flag::from_plane(Point3::zeros(), w, phi);
        let r = phi_rotation_derivatives(c, phi).unwrap();
        let s = 1e-5;
        let (p, m) = (f.rotated_about_line(s), f.rotated_about_line(-s));
        let (cp, cm) = (SphereCoords::of(p.normal()), SphereCoords::of(m.normal()));
        let tol = 1e-6 / c.lat.cos().powi(3);
        prop_assert!((angle_diff(p.line_angle(), m.line_angle()) / (2.0 * s) - r.line_angle).abs() < tol);
        prop_assert!(((cp.lat - cm.lat) / (2.0 * s) - r.lat).abs() < tol);
        prop_assert!((angle_diff(cp.lon, cm.lon) / (2.0 * s) - r.lon).abs() < tol);
    }

    #[test]
    fn canonical_planes(p in -2.0f64..2.0, n in direction()) {
        let e = PlaneCoords::new(p, n);
        let c = e.canonical();
        prop_assert_eq!(c, c.canonical());
        prop_assert_eq!(c, PlaneCoords::new(-p, n.neg()).canonical());
        prop_assert!(c.p >= 0.0);
        prop_assert!(e.contains(&c.foot(), 1e-12));
    }

    #[test]
    fn kernel_average_is_abs_cosine(xi in direction(), om in direction()) {
        let k = xi.as_vector().dot(om.as_vector()).abs();
        prop_assume!(k >= KERNEL_AVERAGE_MIN_COS);
        prop_assert!((kernel_phi_average(&xi, &om, 512) - k).abs() <= 1e-9);
    }

    #[test]
    fn flag_kernel_is_a_squared_sine(xi in direction(), w in direction(), phi in angle()) {
        let f = Flag::from_plane(Point3::zeros(), w, phi);
        let k = flag_kernel(xi.as_vector(), f.normal().as_vector(), f.line().as_vector());
        prop_assert!((-1e-15..=1.0 + 1e-12).contains(&k));
        let flipped = flag_kernel(&-xi.into_inner(), f.normal().as_vector(), f.line().as_vector());
        prop_assert!((k - flipped).abs() < 1e-14);
    }

    #[test]
    fn synthetic_densities_are_even(
        p in -2.0f64..2.0,
        n in direction(),
        beta in -0.9f64..0.9,
        fam in prop_oneof![Just(Family::Constant), Just(Family::TranslationInvariant), Just(Family::GaussianBump)],
    ) {
        let d = make_density(&SyntheticDensitySpec::of(fam).with_beta(beta)).unwrap();
        prop_assert_eq!(d.density(p, n.as_vector()), d.density(-p, &-n.into_inner()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn zonoid_inverts_the_cosine_transform(c in even_coeffs(8)) {
        let quad = Arc::new(SphericalQuadrature::new(8));
        let h = SphericalFunction::from_coeffs(quad, c, Parity::Even);
        let metric = cosine_transform_spectral(&h);
        let back = zonoid_invert(&metric, 8, DEFAULT_ODD_TOL).unwrap();
        let err = back.values().iter().zip(h.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-7);
    }

    #[test]
    fn cosine_transform_is_even_and_linear(c in even_coeffs(6), om in direction(), a in -2.0f64..2.0) {
        let h = on_grid(c);
        let v = cosine_transform(&h, &om);
        prop_assert!((v - cosine_transform(&h, &om.neg())).abs() < 1e-10 * v.abs().max(1.0));
        prop_assert!((cosine_transform(&h.scaled(a), &om) - a * v).abs() < 1e-10 * v.abs().max(1.0));
    }

    #[test]
    fn bundle_average_of_flag_density_is_mass(c in even_coeffs(6), line in direction()) {
        let h = on_grid(c);
        let (lhs, rhs) = flag_average_identity(&h, &line, 64);
        prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1.0));
    }

    #[test]
    fn constant_densities_give_constant_metrics(c in 0.1f64..3.0, x in point(), om in direction()) {
        let d = Arc::new(make_density(&SyntheticDensitySpec::constant(c)).unwrap());
        let m = forward_metric(d);
        prop_assert!((m.metric(&x, om.as_vector()).unwrap() - TAU * c).abs() < 1e-10);
    }

    #[test]
    fn ball_measures_scale_linearly_for_constants(r in 0.2f64..3.0) {
        let h = ConstantDensity(1.0);
        let planes = plane_measure_ball(&h, &Point3::zeros(), r, &SphericalQuadrature::new(8), 16);
        prop_assert!((planes - 4.0 * PI * r).abs() < 1e-9 * r);
    }
}
