use llg_core::geometry::*;
use llg_core::Vec3;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn vec3() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b, c)| Vec3::new(a, b, c))
}

fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
    (a - b).max_abs() <= tol
}

#[test]
fn bubble_examples() {
    let p = BubbleParams::new(2.0, 0.0, [0.0, 0.0]).unwrap();
    assert!(close(bubble_field(&p, [2.0, 0.0]), Vec3::new(1.0, 0.0, 0.0), 1e-15));
    let q = BubbleParams::new(1.0, 0.0, [0.0, 0.0]).unwrap();
    assert!(close(bubble_field(&q, [0.0, 0.0]), Vec3::new(0.0, 0.0, -1.0), 1e-15));
}

#[test]
fn two_narrow_bubbles_are_nearly_unit_between_centers() {
    let (l1, l2) = (1e-3, 1e-3);
    let b = [
        BubbleParams::new(l1, 0.3, [0.0, 0.0]).unwrap(),
        BubbleParams::new(l2, -1.0, [1.0, 0.0]).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for i in 1..100 {
        let x = [i as f64 / 100.0, 0.05 * (i as f64).sin()];
        worst = worst.max((ustar_sum(&b, x, true).unwrap().norm() - 1.0).abs());
    }
    assert!(worst <= 10.0 * (l1 + l2), "{worst}");
    let far = ustar_sum(&b, [1e6, 1e6], true).unwrap();
    assert!(close(far, Vec3::E3, 1e-5));
}

#[test]
fn close_centers_are_rejected_in_strict_mode() {
    let b = [BubbleParams::new(0.1, 0.0, [0.0, 0.0]).unwrap(), BubbleParams::new(0.1, 0.0, [0.5, 0.0]).unwrap()];
    assert!(ustar_sum(&b, [0.2, 0.0], true).is_err());
    assert!(ustar_sum(&b, [0.2, 0.0], false).is_ok());
}

#[test]
fn corrector_for_short_ustar() {
    let eps = 0.1;
    let a = corrector_a(Vec3::E3 * (1.0 - eps), Vec3::ZERO).unwrap();
    assert!((a - (1.0 / (1.0 - eps) - 1.0)).abs() < 1e-14);
    assert!(corrector_a(Vec3::E3 * 0.4, Vec3::ZERO).is_err());
}

proptest! {
    #[test]
    fn frame_is_orthonormal_and_oriented(rho in 0.0f64..1e3, theta in -PI..PI) {
        let f = frame_polar(rho, theta);
        for (u, v) in [(f.w_vec, f.e1), (f.w_vec, f.e2), (f.e1, f.e2)] {
            prop_assert!(u.dot(&v).abs() <= 1e-12);
        }
        for u in [f.w_vec, f.e1, f.e2] {
            prop_assert!((u.norm() - 1.0).abs() <= 1e-14);
        }
        prop_assert!(close(f.w_vec.cross(&f.e1), f.e2, 1e-12));
        prop_assert!(close(f.w_vec.cross(&f.e2), -f.e1, 1e-12));
        prop_assert!(close(f.e1.cross(&f.e2), f.w_vec, 1e-12));
    }

    #[test]
    fn rotation_commutes_with_cross(g in -PI..PI, a in vec3(), b in vec3()) {
        let lhs = rotate_z(g, a).cross(&rotate_z(g, b));
        prop_assert!(close(lhs, rotate_z(g, a.cross(&b)), 1e-12));
        prop_assert!((rotate_z(g, a).norm() - a.norm()).abs() <= 1e-14);
    }

    #[test]
    fn gradient_density_matches_differences(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let h = 1e-5;
        let w = |p: [f64; 2]| bubble_frame(p).w_vec;
        let dx = (w([x + h, y]) - w([x - h, y])) * (0.5 / h);
        let dy = (w([x, y + h]) - w([x, y - h])) * (0.5 / h);
        let fd = dx.norm_sq() + dy.norm_sq();
        prop_assert!((fd - bubble_frame([x, y]).grad_sq).abs() <= 1e-6);
    }

    #[test]
    fn complex_form_round_trip(rho in 0.0f64..50.0, theta in -PI..PI, g in -PI..PI, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let f = frame_polar(rho, theta);
        let c = C64::new(re, im);
        let v = from_complex(c, &f, g);
        prop_assert!((to_complex(v, &f, g, 1e-10).unwrap() - c).norm() <= 1e-12);
        // U x f = (i f) in complex form
        let u = rotate_z(g, f.w_vec);
        prop_assert!(close(u.cross(&v), from_complex(c * C64::i(), &f, g), 1e-12));
        let back = complex_form(ComplexForm::Complex(c), &f, g, Direction::FromComplex, 1e-10).unwrap();
        prop_assert_eq!(back, ComplexForm::Vector(v));
        prop_assert!(to_complex(u, &f, g, 1e-10).is_err());
    }

    #[test]
    fn assembled_map_has_unit_length(
        phi in vec3(), scale in 0.0f64..0.3, x in -2.0f64..2.0, y in -2.0f64..2.0, l in 1e-3f64..0.05,
    ) {
        let b = [
            BubbleParams::new(l, 0.2, [-0.5, 0.0]).unwrap(),
            BubbleParams::new(2.0 * l, 1.1, [0.5, 0.3]).unwrap(),
        ];
        let us = ustar_sum(&b, [x, y], true).unwrap();
        let u = assemble_u(&b, phi * scale, [x, y], true).unwrap();
        prop_assert!((u.norm() - 1.0).abs() <= 1e-12);
        prop_assert!(u.dot(&us) >= DEFAULT_DELTA0);
    }

    #[test]
    fn bubble_tends_to_north_pole(lam in 1e-3f64..10.0, g in -PI..PI, phi in -PI..PI) {
        let p = BubbleParams::new(lam, g, [0.3, -0.2]).unwrap();
        let r = 1e4 * lam;
        let u = bubble_field(&p, [0.3 + r * phi.cos(), -0.2 + r * phi.sin()]);
        prop_assert!((u - Vec3::E3).norm() <= 3e-4);
        prop_assert!((u.norm() - 1.0).abs() <= 1e-14);
    }
}
