use llg_core::geometry::frame_polar;
use llg_core::grid::RadialGrid;
use llg_core::linops::*;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kernel_field(k: i32, q: usize, g: &RadialGrid) -> RadialComplexField {
    let kp = scalar_kernels(k);
    RadialComplexField::from_fn(g.clone(), |r| C64::new(if q == 1 { kp.z1(r) } else { kp.z2(r) }, 0.0))
}

fn max_residual(k: i32, q: usize, n: usize) -> f64 {
    let g = RadialGrid::geometric(1e-2, 1e2, n).unwrap();
    mode_residual_scaled(k, &kernel_field(k, q, &g)).unwrap().into_iter().fold(0.0, f64::max)
}

#[test]
fn wronskian_is_inverse_radius() {
    let g = RadialGrid::geometric(1e-3, 1e3, 400).unwrap();
    for k in -6..=6 {
        let kp = scalar_kernels(k);
        for &r in g.nodes() {
            let w = kp.wronskian(r);
            assert!((w * r - 1.0).abs() <= 1e-9, "k={k} rho={r}: {w}");
        }
    }
}

#[test]
fn kernel_derivatives_match_differences() {
    for k in -4..=4 {
        let kp = scalar_kernels(k);
        for r in [0.3, 1.0, 2.7] {
            let h = 1e-6 * r;
            let d1 = (kp.z1(r + h) - kp.z1(r - h)) / (2.0 * h);
            let d2 = (kp.z2(r + h) - kp.z2(r - h)) / (2.0 * h);
            assert!((d1 - kp.dz1(r)).abs() <= 1e-7 * (1.0 + d1.abs()), "k={k}");
            assert!((d2 - kp.dz2(r)).abs() <= 1e-7 * (1.0 + d2.abs()), "k={k}");
        }
    }
}

#[test]
fn mode_operator_annihilates_both_kernels() {
    for k in -3..=3 {
        for q in [1, 2] {
            let (coarse, fine) = (max_residual(k, q, 1000), max_residual(k, q, 2000));
            let order = (coarse / fine).ln() / (1999.0f64 / 999.0).ln();
            assert!(fine <= 1e-4, "k={k} q={q}: {fine:.3e}");
            assert!(order >= 1.9, "k={k} q={q}: order {order:.3}");
        }
    }
}

#[test]
fn potential_matches_mode_one_closed_form() {
    for r in [0.1f64, 0.5, 1.0, 3.0] {
        let d = r * r + 1.0;
        let generic = -((4.0 * r.powi(4)) + (2.0 - 6.0) * r * r) / (d * d * r * r);
        assert!((potential_v(1, r).unwrap() - generic).abs() < 1e-12);
    }
}

/// Largest `|L_W Z_{p,q}|` over a polar grid with `n` radii and `4n/5` angles.
fn vector_kernel_residual(p: i32, q: i32, n: usize) -> (f64, f64) {
    let pg = PolarGrid::new(RadialGrid::geometric(0.2, 5.0, n).unwrap(), 4 * n / 5).unwrap();
    let f = TangentField::from_fn(pg.clone(), BaseMap::W, |r, t| {
        vector_kernels(p, q, [r * t.cos(), r * t.sin()]).unwrap()
    });
    let l = apply_lw(&f).unwrap();
    let nr = pg.rho.len();
    // interior radii only: the end rows use one-sided stencils
    let res = (1..nr - 1)
        .flat_map(|i| (0..pg.n_theta).map(move |j| (i, j)))
        .map(|(i, j)| l[pg.index(i, j)].norm())
        .fold(0.0, f64::max);
    (res, pg.h())
}

#[test]
fn vector_kernels_are_annihilated_at_second_order() {
    for p in -1..=1 {
        for q in 1..=2 {
            let (r1, h1) = vector_kernel_residual(p, q, 60);
            let (r2, h2) = vector_kernel_residual(p, q, 120);
            let order = (r1 / r2).ln() / (h1 / h2).ln();
            assert!(order >= 1.8, "Z_({p},{q}): {r1:.3e} -> {r2:.3e}, order {order:.3}");
        }
    }
}

#[test]
fn single_mode_reduces_to_radial_operator() {
    for k in [-2, 0, 1, 3] {
        let g = RadialGrid::geometric(0.1, 8.0, 300).unwrap();
        let psi = |r: f64| C64::new(r * (-r * r / 4.0).exp(), 0.3 * r * r * (-r).exp());
        let radial = apply_mode(k, &RadialComplexField::from_fn(g.clone(), psi)).unwrap();
        let errs: Vec<f64> = [32usize, 64]
            .iter()
            .map(|&nt| {
                let pg = PolarGrid::new(g.clone(), nt).unwrap();
                let field = PolarComplexField::from_fn(pg.clone(), |r, t| psi(r) * C64::from_polar(1.0, k as f64 * t));
                let out = apply_lin_complex(&field).unwrap();
                let mut worst: f64 = 0.0;
                for i in 0..g.len() {
                    for j in 0..nt {
                        let expect = radial.values[i] * C64::from_polar(1.0, k as f64 * pg.theta(j));
                        worst = worst.max((out.values[pg.index(i, j)] - expect).norm());
                    }
                }
                worst
            })
            .collect();
        if k == 0 {
            assert!(errs[0] < 1e-12 && errs[1] < 1e-12, "k=0: {errs:?}");
        } else {
            let order = (errs[0] / errs[1]).log2();
            assert!((1.9..=2.1).contains(&order), "k={k}: {errs:?}");
        }
    }
}

#[test]
fn mode_zero_kernel_in_complex_form() {
    let kp = scalar_kernels(0);
    let res = |n: usize| {
        let pg = PolarGrid::new(RadialGrid::geometric(0.05, 20.0, n).unwrap(), 8).unwrap();
        let f = PolarComplexField::from_fn(pg, |r, _| C64::new(kp.z1(r), 0.0));
        let out = apply_lin_complex(&f).unwrap();
        let nt = out.grid.n_theta;
        out.values[nt..out.values.len() - nt].iter().map(|v| v.norm()).fold(0.0, f64::max)
    };
    let (a, b) = (res(200), res(400));
    assert!((a / b).log2() >= 1.9, "{a:.3e} {b:.3e}");
}

fn random_smooth_field(seed: u64, pg: PolarGrid) -> PolarComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<C64> = (0..10).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let w: f64 = rng.gen_range(0.5..2.0);
    PolarComplexField::from_fn(pg, |r, t| {
        (-2i32..=2).fold(C64::new(0.0, 0.0), |acc, m| {
            let i = (m + 2) as usize;
            acc + (c[i] + c[i + 5] * r) * r * (-(r / w).powi(2)).exp() * C64::from_polar(1.0, m as f64 * t)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn vector_and_complex_forms_agree(seed in any::<u64>(), a in 0.1f64..1.0, sign in any::<bool>()) {
        let b = (1.0 - a * a).sqrt() * if sign { 1.0 } else { -1.0 };
        let pg = PolarGrid::new(RadialGrid::geometric(0.05, 20.0, 200).unwrap(), 48).unwrap();
        let psi = random_smooth_field(seed, pg.clone());
        let v = complex_to_field(&psi, BaseMap::W);
        prop_assert!(v.tangency_defect() <= 1e-12);
        let lhs = field_to_complex(&pg, BaseMap::W, &apply_a_minus_b_wedge(&pg, BaseMap::W, a, b, &apply_l_in(&v).unwrap()));
        let rhs = apply_lin_complex(&psi).unwrap();
        let c = C64::new(a, -b);
        let d = lhs.values.iter().zip(&rhs.values).map(|(x, y)| (x - c * y).norm()).fold(0.0, f64::max);
        let h = pg.h();
        prop_assert!(d <= 10.0 * h * h * psi.c2_proxy().unwrap(), "error {d:.3e}");
    }

    #[test]
    fn fourier_round_trip_and_parseval(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pg = PolarGrid::new(RadialGrid::uniform(0.1, 3.0, 12).unwrap(), 32).unwrap();
        let coef: Vec<C64> = (0..13 * 12).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let psi = PolarComplexField::from_fn(pg.clone(), |r, t| {
            let i = ((r - 0.1) / (2.9 / 11.0)).round() as usize;
            (-6i32..=6).fold(C64::new(0.0, 0.0), |acc, k| acc + coef[i * 13 + (k + 6) as usize] * C64::from_polar(1.0, k as f64 * t))
        });
        let m = fourier_modes(&psi, 8).unwrap();
        let back = reconstruct(&m).unwrap();
        for (x, y) in psi.values.iter().zip(&back.values) {
            prop_assert!((x - y).norm() <= 1e-12);
        }
        for i in 0..pg.rho.len() {
            let lhs: f64 = (0..pg.n_theta).map(|j| psi.values[pg.index(i, j)].norm_sqr()).sum::<f64>() / pg.n_theta as f64;
            let rhs: f64 = m.modes.values().map(|f| f.values[i].norm_sqr()).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0));
        }
    }

    #[test]
    fn mode_vector_field_has_mode_modulus(k in -4i32..=4, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let g = RadialGrid::geometric(0.1, 5.0, 10).unwrap();
        let psi = RadialComplexField::from_fn(g.clone(), |r| C64::new(re, im) * (-r).exp());
        let f = mode_vector_field(k, &psi, 16).unwrap();
        for (i, &r) in g.nodes().iter().enumerate() {
            for j in 0..16 {
                let v = f.values[f.grid.index(i, j)];
                prop_assert!((v.norm() - psi.values[i].norm()).abs() <= 1e-13);
                prop_assert!(v.dot(&frame_polar(r, f.grid.theta(j)).w_vec).abs() <= 1e-13);
            }
        }
    }
}
