use hjmot_core::certify::{certify, CertifyOptions, CheckKind};
use hjmot_core::diagnostics::local_control_probe;
use hjmot_core::generate::{generate, Family, GeneratorSpec};
use hjmot_core::reduction::reduced_cost_table;
use hjmot_core::{solve_hjmot, Method};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::RandomMatrix), Just(Family::Euclidean), Just(Family::Circle)]
}

fn spec() -> impl Strategy<Value = GeneratorSpec> {
    (family(), proptest::collection::vec(1usize..4, 2..5), any::<u64>(), any::<bool>()).prop_map(
        |(family, sizes, seed, allow_skips)| GeneratorSpec { family, sizes, seed, allow_skips, ..Default::default() },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn skips_never_raise_reduced_costs(spec in spec()) {
        let with = generate(&GeneratorSpec { allow_skips: true, ..spec.clone() }).unwrap();
        let without = generate(&GeneratorSpec { allow_skips: false, ..spec }).unwrap();
        let (a, b) = (reduced_cost_table(&with), reduced_cost_table(&without));
        for (x, y) in a.values.as_slice().iter().zip(b.values.as_slice()) {
            prop_assert!(x <= y);
        }
    }

    #[test]
    fn exact_solutions_pass_feasibility_splitting_and_glue(spec in spec()) {
        let inst = generate(&spec).unwrap();
        let Ok(sol) = solve_hjmot(&inst, Method::Exact) else { return Ok(()) };
        let checks = [CheckKind::Feasibility, CheckKind::Splitting, CheckKind::Glue, CheckKind::TildeBound];
        let report = certify(&inst, &sol, &checks, CertifyOptions::default());
        prop_assert!(report.all_pass(), "{:?}", report);
    }

    #[test]
    fn off_grid_h_is_a_lower_bound(seed in any::<u64>(), v in -2.0f64..2.0, sizes in proptest::collection::vec(1usize..4, 2..4)) {
        let inst = generate(&GeneratorSpec { family: Family::Euclidean, sizes, seed, ..Default::default() }).unwrap();
        let probe = local_control_probe(&inst, 0, &[v], &[1e-1, 1e-2, 1e-3]).unwrap();
        for row in &probe.rows {
            prop_assert!(row.r.iter().all(|r| *r >= 0.0));
        }
    }
}
