mod common;

use hellfit::{alpha_generator, dual_generator, f_divergence, hellinger, MultinomialPmf};
use proptest::prelude::*;

fn pmf_strategy(len: usize) -> impl Strategy<Value = MultinomialPmf<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("non-zero mass", |w| {
        let total: f64 = w.iter().sum();
        if total <= 1e-9 {
            return None;
        }
        MultinomialPmf::new(w.iter().map(|x| x / total).collect()).ok()
    })
}

fn pmf_pair() -> impl Strategy<Value = (MultinomialPmf<f64>, MultinomialPmf<f64>)> {
    (2usize..10).prop_flat_map(|n| (pmf_strategy(n), pmf_strategy(n)))
}

proptest! {
    #[test]
    fn alpha_divergences_are_non_negative((a, b) in pmf_pair(), alpha in -4.0f64..4.0) {
        let d = f_divergence(&alpha_generator(alpha), &a, &b).unwrap();
        prop_assert!(d >= -1e-15);
    }

    #[test]
    fn dual_swaps_arguments((a, b) in pmf_pair(), alpha in -0.99f64..0.99) {
        let f = alpha_generator(alpha);
        let lhs = f_divergence(&dual_generator(&f), &a, &b).unwrap();
        let rhs = f_divergence(&f, &b, &a).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn hellinger_is_bounded((a, b) in pmf_pair()) {
        let h = hellinger(&a, &b).unwrap();
        prop_assert!((0.0..=4.0).contains(&h));
    }

    #[test]
    fn hellinger_root_is_a_metric(n in 2usize..8, seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_pmf(&mut rng, n, 0.2);
        let b = common::random_pmf(&mut rng, n, 0.2);
        let c = common::random_pmf(&mut rng, n, 0.2);
        let (ab, bc, ac) = (hellinger(&a, &b).unwrap(), hellinger(&b, &c).unwrap(), hellinger(&a, &c).unwrap());
        prop_assert!(ac.sqrt() <= ab.sqrt() + bc.sqrt() + 1e-12);
    }
}

#[test]
fn divergence_axiom_suite() {
    common::divergence_axioms(11, 1000).unwrap();
}

#[test]
fn partition_property_suite() {
    common::partition_properties(12, 100, 10_000).unwrap();
}

#[test]
fn report_invariant_suite() {
    common::report_invariants(13, 2000).unwrap();
}
