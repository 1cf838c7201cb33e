use approx::assert_relative_eq;
use proptest::prelude::*;

use hypboundary::boundary::count;
use hypboundary::representation::{inner_product, p_half_l1_norm, pi, StepFunction};
use hypboundary::{ps_measure, Alphabet, Letter, Metric, MetricSpec, QuadSurd, ReducedWord, Scalar};

fn word(max: usize) -> impl Strategy<Value = ReducedWord> {
    prop::collection::vec(0usize..4, 0..max).prop_map(|codes| ReducedWord::reduce(codes.into_iter().map(Letter::from_code)))
}

fn weighted() -> impl Strategy<Value = Metric> {
    (0.5f64..3.0, 0.5f64..3.0).prop_map(|(x, y)| Metric::new(MetricSpec::weighted(vec![x, y])).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn group_laws(g in word(12), h in word(12), k in word(12)) {
        let e = ReducedWord::identity();
        prop_assert_eq!(&(&g * &h) * &k, &g * &(&h * &k));
        prop_assert_eq!(&g * &g.inverse(), e.clone());
        prop_assert_eq!(&g * &e, g.clone());
        prop_assert_eq!((&g * &h).inverse(), &h.inverse() * &g.inverse());
        prop_assert_eq!((&g * &h).len(), g.len() + h.len() - 2 * g.cancellation(&h));
    }

    #[test]
    fn tree_metric_is_zero_hyperbolic(m in weighted(), x in word(10), y in word(10), z in word(10)) {
        let d = |a: &ReducedWord, b: &ReducedWord| m.distance(a, b);
        prop_assert!((d(&x, &y) - d(&y, &x)).abs() < 1e-12);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
        let gp = |a: &ReducedWord, b: &ReducedWord| m.gromov_product(a, b);
        let e = ReducedWord::identity();
        prop_assert!((gp(&x, &y) - (d(&e, &x) + d(&e, &y) - d(&x, &y)) / 2.0).abs() < 1e-9);
        prop_assert!(gp(&x, &z) >= gp(&x, &y).min(gp(&y, &z)) - 1e-9);
    }

    #[test]
    fn word_length_is_additive_on_reduced_products(m in weighted(), g in word(10), h in word(10)) {
        let prod = &g * &h;
        let cancel = g.cancellation(&h);
        let kept = m.word_length(&g.prefix(g.len() - cancel)) + m.word_length(&h.suffix_from(cancel));
        assert_relative_eq!(m.word_length(&prod), kept, epsilon = 1e-9);
    }

    #[test]
    fn standard_mass_splits_exactly(g in word(9)) {
        let m = Metric::standard(2).unwrap();
        let mu = ps_measure::<QuadSurd>(&m).unwrap();
        let children = m.alphabet().successors(g.last()).filter_map(|l| g.extended(l));
        let total = children.fold(QuadSurd::rational(0, 1), |acc, c| acc + mu.mass(&c));
        prop_assert_eq!(total, mu.mass(&g));
    }

    #[test]
    fn weighted_and_green_masses_split(g in word(8), p in 0.05f64..0.45) {
        for spec in [MetricSpec::weighted(vec![1.0, 2.0]), MetricSpec::green(vec![p, 0.5 - p])] {
            let m = Metric::new(spec).unwrap();
            let mu = ps_measure::<f64>(&m).unwrap();
            let total: f64 = m.alphabet().successors(g.last()).filter_map(|l| g.extended(l)).map(|c| mu.mass(&c)).sum();
            assert_relative_eq!(total, mu.mass(&g), max_relative = 1e-10);
        }
    }

    #[test]
    fn pi_is_unitary_exactly(g in word(4), coeffs in prop::collection::vec(-5i64..=5, 12)) {
        let m = Metric::standard(2).unwrap();
        let a = *m.alphabet();
        let mu = ps_measure::<QuadSurd>(&m).unwrap();
        let phi = StepFunction::new(a, 2, coeffs.iter().map(|&c| QuadSurd::from_ratio(c, 1)).collect()).unwrap();
        let moved = pi(&mu, &g, &phi).unwrap();
        prop_assert_eq!(inner_product(&mu, &moved, &moved).unwrap(), inner_product(&mu, &phi, &phi).unwrap());
    }

    #[test]
    fn l1_norm_matches_cylinder_count(g in word(12)) {
        let m = Metric::standard(2).unwrap();
        let mu = ps_measure::<QuadSurd>(&m).unwrap();
        let got = p_half_l1_norm(&mu, &g).unwrap().to_f64();
        prop_assert!((got - l1_by_counting(g.len())).abs() < 1e-12);
    }
}

// Splits the boundary by the Gromov product k = (xi|g): the set where it
// equals k has measure 3/4, 3^-k/2 or 3^(1-n)/4, and sqrt of the derivative
// there is 3^(k - n/2).
fn l1_by_counting(n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let weight = |k: usize| 3f64.powf(k as f64 - n as f64 / 2.0);
    let mut total = 0.75 * weight(0);
    for k in 1..n {
        total += 0.5 * 3f64.powi(-(k as i32)) * weight(k);
    }
    total + 0.25 * 3f64.powi(1 - n as i32) * weight(n)
}

#[test]
fn counting_oracle_matches_closed_form() {
    for n in 0..=12usize {
        let closed = (1.0 + n as f64 / 2.0) * 3f64.powf(-(n as f64) / 2.0);
        assert_relative_eq!(l1_by_counting(n), closed, max_relative = 1e-12);
    }
}

#[test]
fn alphabet_counts_cylinders() {
    let a = Alphabet::new(2).unwrap();
    assert_eq!((1..=5).map(|d| count(&a, d)).collect::<Vec<_>>(), vec![4, 12, 36, 108, 324]);
}
