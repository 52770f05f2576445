use approx::assert_relative_eq;
use hwlab::dynamics::{linear_propagator, ode_flow};
use hwlab::spectral::{apply_multiplier, apply_real_multiplier, mass, sobolev_norm};
use hwlab::{make_grid, Field, GridSpec, SobolevIndex};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = GridSpec> {
    (0.5f64..20.0, 0.5f64..20.0, 4u32..7, 4u32..7)
        .prop_map(|(lx, ly, ex, ey)| make_grid(lx, ly, 1 << ex, 1 << ey).unwrap())
}

fn field_strategy() -> impl Strategy<Value = Field> {
    grid_strategy().prop_flat_map(|g| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), g.len()).prop_map(move |v| {
            Field::from_values(g, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
                .unwrap()
        })
    })
}

fn pair_strategy() -> impl Strategy<Value = (Field, Field)> {
    grid_strategy().prop_flat_map(|g| {
        let one = move || {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), g.len()).prop_map(move |v| {
                Field::from_values(g, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
                    .unwrap()
            })
        };
        (one(), one())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn plancherel(f in field_strategy()) {
        assert_relative_eq!(f.l2_norm(), f.spectral_l2_norm(), max_relative = 1e-12);
        assert_relative_eq!(sobolev_norm(&f, SobolevIndex::L2).unwrap(), f.l2_norm(), max_relative = 1e-12);
    }

    #[test]
    fn multipliers_are_linear((f, g) in pair_strategy(), c in -3.0f64..3.0) {
        let sym = |xi: f64, eta: f64| Complex64::new(xi.cos(), eta.abs().sqrt());
        let lhs = apply_multiplier(&f.add(&g.scale_re(c)).unwrap(), sym).unwrap();
        let rhs = apply_multiplier(&f, sym).unwrap().add(&apply_multiplier(&g, sym).unwrap().scale_re(c)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().l2_norm() <= 1e-11 * (1.0 + rhs.l2_norm()));
    }

    #[test]
    fn multipliers_compose(f in field_strategy()) {
        let a = |xi: f64, eta: f64| 1.0 + xi * xi + eta.abs();
        let b = |xi: f64, _eta: f64| 1.0 / (2.0 + xi.sin());
        let twice = apply_real_multiplier(&apply_real_multiplier(&f, a).unwrap(), b).unwrap();
        let once = apply_real_multiplier(&f, |x, y| a(x, y) * b(x, y)).unwrap();
        prop_assert!(twice.sub(&once).unwrap().l2_norm() <= 1e-11 * once.l2_norm());
    }

    #[test]
    fn inhomogeneous_norm_is_monotone(f in field_strategy(), s in -2.0f64..2.0, ds in 0.0f64..1.0) {
        let lo = sobolev_norm(&f, SobolevIndex::inhomogeneous(s, s / 2.0)).unwrap();
        let hi = sobolev_norm(&f, SobolevIndex::inhomogeneous(s + ds, s / 2.0 + ds)).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn linear_flow_is_unitary_group(f in field_strategy(), t1 in -2.0f64..2.0, t2 in -2.0f64..2.0, nu in 0.0f64..1.0) {
        let once = linear_propagator(&f, t1 + t2, nu).unwrap();
        let twice = linear_propagator(&linear_propagator(&f, t1, nu).unwrap(), t2, nu).unwrap();
        prop_assert!(once.sub(&twice).unwrap().l2_norm() <= 1e-11 * f.l2_norm());
        assert_relative_eq!(mass(&once), mass(&f), max_relative = 1e-12);
    }

    #[test]
    fn ode_flow_preserves_modulus(f in field_strategy(), t in -5.0f64..5.0, p in 1.5f64..7.0) {
        let g = ode_flow(&f, t, p, 1.0);
        for (a, b) in f.values().iter().zip(g.values()) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-12);
        }
        // conjugation symmetry for mu -> -mu
        let h = ode_flow(&f.conj(), t, p, -1.0).conj();
        prop_assert!(h.sub(&g).unwrap().l2_norm() <= 1e-12 * (1.0 + g.l2_norm()));
    }
}
