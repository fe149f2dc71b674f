use deflate_core::linalg::numerical_rank;
use deflate_core::text::{parse_system, print_system};
use deflate_core::verify::{format_bound, interval_eval, Interval, IntervalVector};
use deflate_core::{Matrix, Monomial, PolySystem, Polynomial, RankMode};
use proptest::prelude::*;

fn system_over(n: usize) -> PolySystem {
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    parse_system(&format!("vars: {}\n{}", names.join(", "), names.join(" + "))).unwrap().system
}

fn poly(n: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0u32..4, n), -20i32..=20, 0u32..3), 1..7).prop_filter_map(
        "zero polynomial",
        move |terms| {
            let vars = system_over(n).vars().clone();
            // dyadic coefficients print and parse exactly
            let f = Polynomial::from_terms(
                vars,
                terms.into_iter().map(|(e, c, s)| (Monomial::new(e), c as f64 / f64::from(1 << s))),
            );
            (!f.is_zero()).then_some(f)
        },
    )
}

fn interval() -> impl Strategy<Value = Interval> {
    (-1e3f64..1e3, 0f64..10.0).prop_map(|(m, r)| Interval::around(m, r))
}

fn sample(i: &Interval, t: f64) -> f64 {
    (i.lo() + t * (i.hi() - i.lo())).clamp(i.lo(), i.hi())
}

proptest! {
    #[test]
    fn print_parse_round_trip(fs in (1usize..4).prop_flat_map(|n| prop::collection::vec(poly(n), n))) {
        let s = PolySystem::new(fs).unwrap();
        let back = parse_system(&print_system(&s)).unwrap().system;
        prop_assert_eq!(back, s);
    }

    #[test]
    fn taylor_shift_is_invertible(f in poly(2), a in -3i32..=3, b in -3i32..=3) {
        let p = [a as f64, b as f64];
        let g = f.taylor_shift(&p).unwrap();
        prop_assert_eq!(g.taylor_shift(&[-p[0], -p[1]]).unwrap(), f.clone());
        prop_assert_eq!(g.constant_term(), f.evaluate(&p).unwrap());
    }

    #[test]
    fn interval_ops_contain_samples(a in interval(), b in interval(), s in 0f64..=1.0, t in 0f64..=1.0) {
        let (x, y) = (sample(&a, s), sample(&b, t));
        prop_assert!((a + b).contains(x + y));
        prop_assert!((a - b).contains(x - y));
        prop_assert!((a * b).contains(x * y));
        prop_assert!(a.powi(2).contains(x * x));
        prop_assert!(a.powi(3).contains(x * x * x));
    }

    #[test]
    fn interval_eval_contains_point_values(f in poly(2), c in prop::collection::vec(interval(), 2), s in 0f64..=1.0, t in 0f64..=1.0) {
        let b = IntervalVector(c.iter().map(|i| Interval::around(i.mid() / 500.0, i.rad() / 20.0)).collect());
        let x = [sample(&b.0[0], s), sample(&b.0[1], t)];
        prop_assert!(interval_eval(&f, &b).unwrap().contains(f.evaluate(&x).unwrap()));
    }

    #[test]
    fn format_bound_rounds_outward(x in prop::num::f64::NORMAL) {
        let down: f64 = format_bound(x, false).parse().unwrap();
        let up: f64 = format_bound(x, true).parse().unwrap();
        prop_assert!(down <= x && x <= up, "{} {} {}", down, x, up);
    }

    #[test]
    fn rank_is_monotone_in_eps(rows in prop::collection::vec(prop::collection::vec(-5f64..5.0, 4), 1..6), e in 1e-8f64..1.0) {
        let a = Matrix::from_rows(&rows);
        for mode in [RankMode::Absolute, RankMode::Relative] {
            let lo = numerical_rank(&a, e, mode).unwrap();
            let hi = numerical_rank(&a, e * 10.0, mode).unwrap();
            prop_assert!(hi <= lo);
            prop_assert!(lo <= rows.len().min(4));
        }
    }
}
