use proptest::prelude::*;
use snewton::functional::Functional;
use snewton::grid::{self, make_grid, project_odd, GridSpec, ScalarField};
use snewton::potential::{self, kernel_value, log_convolve_fast, KernelKind};
use snewton::symmetry;

fn field(g: GridSpec, values: Vec<f64>) -> ScalarField {
    ScalarField::from_values(g, values).unwrap()
}

fn grid16() -> GridSpec {
    make_grid(3.0, 16).unwrap()
}

/// Smooth random field: a few Gaussian bumps with random signs and centres.
fn bumps() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.5f64..1.5, -1.5f64..1.5, 0.2f64..1.0), 1..4)
}

fn from_bumps(g: GridSpec, b: Vec<(f64, f64, f64, f64)>) -> ScalarField {
    ScalarField::from_fn(g, move |x, y| {
        b.iter()
            .map(|&(a, cx, cy, s)| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / s).exp())
            .sum()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_split_off_the_singular_cell(di in -40isize..40, dj in -40isize..40, h in 0.01f64..2.0) {
        prop_assume!(di != 0 || dj != 0);
        let log = kernel_value(KernelKind::Log, di, dj, h);
        let split = kernel_value(KernelKind::Log1p, di, dj, h) - kernel_value(KernelKind::Log1pInv, di, dj, h);
        prop_assert!((log - split).abs() <= 1e-14 * (1.0 + log.abs()));
    }

    #[test]
    fn convolution_preserves_reflection_symmetry(values in prop::collection::vec(0.0f64..1.0, 256)) {
        let rho = field(grid16(), values);
        let even = rho.axpy(1.0, &rho.reflect_x2());
        let w = log_convolve_fast(&even);
        let err = w.axpy(-1.0, &w.reflect_x2()).sup_norm();
        prop_assert!(err <= 1e-13 * w.sup_norm());
        let even1 = rho.axpy(1.0, &rho.reflect_x1());
        let w1 = log_convolve_fast(&even1);
        prop_assert!(w1.axpy(-1.0, &w1.reflect_x1()).sup_norm() <= 1e-13 * w1.sup_norm());
    }

    #[test]
    fn odd_potential_splits_into_halfplane_parts(values in prop::collection::vec(-1.0f64..1.0, 256), p in 2.0f64..3.5) {
        let u = project_odd(&field(grid16(), values));
        let w = log_convolve_fast(&u.abs_pow(p));
        let up = u.upper_half();
        let (h1, h2) = (potential::halfplane_h1(&up, p), potential::halfplane_h2(&up, p));
        let m = u.spec().half();
        let scale = w.sup_norm().max(1e-300);
        for i in 0..u.spec().n() {
            for a in 0..m {
                let lhs = 2.0 * w.get(i, m + a);
                prop_assert!((lhs - h1.get(i, a) - h2.get(i, a)).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn far_and_cap_parts_are_nonnegative(values in prop::collection::vec(-1.0f64..1.0, 256), i in 0usize..16, a in 0usize..8) {
        let u = project_odd(&field(grid16(), values));
        let (f, g) = potential::halfplane_f_g(&u.upper_half(), 2.0, i, a).unwrap();
        prop_assert!(f >= 0.0 && g >= 0.0);
    }

    #[test]
    fn breakdown_identities(b in bumps(), p in 2.0f64..4.0) {
        let g = grid16();
        let u = from_bumps(g, b);
        let f = Functional::new(&g, p).unwrap();
        let e = f.energy(&u).unwrap();
        let scale = e.v1.abs().max(e.v2.abs()).max(1e-300);
        prop_assert!((e.v0 - (e.v1 - e.v2)).abs() <= 1e-12 * scale);
        prop_assert!(e.v2.is_finite() && e.v2 >= 0.0);
        prop_assert!((e.total - (0.5 * e.h1_part + e.v0 / (2.0 * p))).abs() <= 1e-14 * (e.h1_part + e.v0.abs()));
        prop_assert!((e.nehari_value - (e.h1_part + e.v0)).abs() <= 1e-14 * (e.h1_part + e.v0.abs()));
        let pair = grid::l2_inner(&f.el_residual(&u).unwrap(), &u);
        prop_assert!((pair - e.nehari_value).abs() <= 1e-8 * (e.h1_part + e.v0.abs()));
    }

    #[test]
    fn nehari_value_is_homogeneous(b in bumps(), p in 2.0f64..4.0, t in 0.1f64..5.0) {
        let g = grid16();
        let u = from_bumps(g, b);
        let f = Functional::new(&g, p).unwrap();
        let e = f.energy(&u).unwrap();
        let et = f.energy(&u.scaled(t)).unwrap();
        let want = t * t * e.h1_part + t.powf(2.0 * p) * e.v0;
        let scale = t * t * e.h1_part + t.powf(2.0 * p) * e.v0.abs();
        prop_assert!((et.nehari_value - want).abs() <= 1e-12 * scale);
    }

    #[test]
    fn reflection_about_a_plane_is_an_involution(values in prop::collection::vec(-1.0f64..1.0, 256), k in -16isize..=16) {
        let g = grid16();
        let u = field(g, values);
        let plane = symmetry::Plane::from_index(&g, k);
        let twice = symmetry::reflect(&symmetry::reflect(&u, plane), plane);
        // Nodes whose mirror image leaves the grid are lost; the rest return.
        for i in 0..16isize {
            if (0..16).contains(&plane.reflect(i)) {
                for j in 0..16 {
                    prop_assert_eq!(twice.get(i as usize, j), u.get(i as usize, j));
                }
            }
        }
    }

    #[test]
    fn representations_match_direct_differences(values in prop::collection::vec(-1.0f64..1.0, 256), k in -16isize..=16, i in 0usize..16, a in 0usize..8) {
        let g = grid16();
        let u = project_odd(&field(g, values));
        let plane = symmetry::Plane::from_index(&g, k);
        prop_assume!(plane.in_sigma(i as isize));
        let lambda = plane.lambda(&g);
        let (l, ls) = symmetry::l_lambda_scaled(&u, 2.0, lambda, i, a).unwrap();
        let (m, ms) = symmetry::m_lambda_scaled(&u, 2.0, lambda, i, a).unwrap();
        let (d1, d2) = symmetry::direct_differences(&u, 2.0, lambda, i, a).unwrap();
        prop_assert!((l - d1).abs() <= 1e-10 * ls.max(1e-300));
        prop_assert!((m - d2).abs() <= 1e-10 * ms.max(1e-300));
    }

    #[test]
    fn x1_symmetric_fields_put_the_axis_at_the_origin(b in bumps()) {
        // A field symmetric in x₁ about the origin is detected there.
        let g = make_grid(4.0, 32).unwrap();
        let u = from_bumps(g, b);
        let sym = u.axpy(1.0, &u.reflect_x1());
        prop_assume!(sym.sup_norm() > 1e-6);
        let (axis, asym) = symmetry::detect_axis(&sym).unwrap();
        prop_assert!(asym <= 1e-14);
        prop_assert!(axis.abs() < 1e-12);
    }
}
