//! Randomized invariants of the discrete operators.

use apdg_core::dg::{l_form, phase_norm, DgBasis, LVariant, Mesh1D, ParityField, ScalarDgField};
use apdg_core::harness::least_squares_slope;
use apdg_core::hermite::{CollisionKernel, VelocityGrid};
use apdg_core::scheme::{ApScheme, Epsilon, SchemeParams, TimeStep};
use proptest::prelude::*;

const N_MODES: usize = 7;

fn scheme(n: usize, degree: usize, eps: f64) -> ApScheme {
    let grid = VelocityGrid::new(N_MODES).unwrap();
    let kernel = CollisionKernel::constant(&grid, 1.0, 2.0).unwrap();
    let params = SchemeParams::new(Epsilon::Constant(eps), TimeStep::Fixed(1e-4));
    ApScheme::new(Mesh1D::unit(n).unwrap(), degree, grid, kernel, params).unwrap()
}

fn even_field(n: usize, nb: usize, nv: usize, values: &[f64]) -> ParityField {
    let mut f = ParityField::zeros(n, nb, nv);
    let mut it = values.iter().cycle();
    for i in 0..n {
        for m in 0..nb {
            for l in 0..nv / 2 {
                let a = it.next().unwrap() + if m == 0 { 2.0 } else { 0.0 };
                f.set(i, m, l, a);
                f.set(i, m, nv - 1 - l, a);
            }
        }
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn relaxation_keeps_density_and_contracts(
        values in prop::collection::vec(-1.0f64..1.0, 16),
        eps_exp in -8.0f64..0.0,
        degree in 0usize..=3,
    ) {
        let s = scheme(5, degree, 10f64.powf(eps_exp));
        let r = even_field(5, degree + 1, s.grid().len(), &values);
        let r_star = s.relaxation_step_r(&r);
        let before = r.density(s.grid());
        let after = r_star.density(s.grid());
        for (a, b) in before.coeffs().iter().zip(after.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let n0 = phase_norm(&r, s.grid(), s.kernel());
        let n1 = phase_norm(&r_star, s.grid(), s.kernel());
        prop_assert!(n1 <= n0 * (1.0 + 1e-14));
    }

    #[test]
    fn l_forms_are_skew(
        a in prop::collection::vec(-1.0f64..1.0, 24),
        b in prop::collection::vec(-1.0f64..1.0, 24),
        n in 3usize..7,
        degree in 0usize..=3,
    ) {
        let nb = degree + 1;
        let mesh = Mesh1D::new(-0.3, 1.7, n).unwrap();
        let basis = DgBasis::new(degree);
        let take = |v: &[f64]| ScalarDgField::from_coeffs(n, nb, v.iter().cycle().take(n * nb).copied().collect()).unwrap();
        let (psi, u) = (take(&a), take(&b));
        let s = l_form(&mesh, &basis, &psi, &u, LVariant::Plus) + l_form(&mesh, &basis, &u, &psi, LVariant::Minus);
        prop_assert!(s.abs() <= 1e-11);
    }

    #[test]
    fn limiter_keeps_averages_and_restores_positivity(
        averages in prop::collection::vec(0.01f64..1.0, 8),
        slopes in prop::collection::vec(-2.0f64..2.0, 24),
        eps_exp in -6.0f64..-0.3,
        degree in 1usize..=3,
    ) {
        let s = scheme(4, degree, 10f64.powf(eps_exp));
        let nv = s.grid().len();
        let m = s.grid().maxwellian().to_vec();
        let mut f = ParityField::zeros(4, degree + 1, nv);
        let mut av = averages.iter().cycle();
        let mut sl = slopes.iter().cycle();
        for i in 0..4 {
            for l in 0..nv {
                f.set(i, 0, l, m[l] * av.next().unwrap());
                for k in 1..=degree {
                    f.set(i, k, l, m[l] * sl.next().unwrap());
                }
            }
        }
        let mut state = s.even_odd_decompose(&f).unwrap();
        let before = s.reconstruct_f(&state);
        let report = s.positivity_limit(&mut state);
        let after = s.reconstruct_f(&state);
        prop_assert_eq!(report.negative_averages, 0);
        for i in 0..4 {
            for l in 0..nv {
                let (a, b) = (before.get(i, 0, l), after.get(i, 0, l));
                prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(m[l]));
            }
        }
        prop_assert!(s.min_f_sampled(&state) >= -1e-13);
    }

    #[test]
    fn slope_of_power_law_is_exponent(
        p in -3.0f64..3.0,
        c in 0.1f64..10.0,
        xs in prop::collection::btree_set(1u32..1000, 2..8),
    ) {
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x| {
            let x = f64::from(x) * 1e-4;
            (x, c * x.powf(p))
        }).collect();
        let slope = least_squares_slope(&pts).unwrap();
        prop_assert!((slope - p).abs() <= 1e-9);
    }
}
