use fck_core::{Error, Rational, Scalar, TruncatedSeries};
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Rational> {
    (-20i64..=20, 1i64..=9).prop_map(|(n, d)| Rational::from_frac(n, d))
}

fn series(order: usize) -> impl Strategy<Value = TruncatedSeries<Rational>> {
    proptest::collection::vec(rational(), order + 1).prop_map(TruncatedSeries::new)
}

fn q(n: i64) -> Rational {
    Rational::from_i64(n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_laws((a, b, c) in (0usize..=12).prop_flat_map(|n| (series(n), series(n), series(n)))) {
        let l = a.mul(&b).unwrap().mul(&c).unwrap();
        let r = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
        let l = a.mul(&b.add(&c).unwrap()).unwrap();
        let r = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn division_inverts_multiplication((a, mut b) in (0usize..=10).prop_flat_map(|n| (series(n), series(n))), c0 in 1i64..7) {
        b.set_coeff(0, q(c0));
        let d = a.div(&b).unwrap();
        prop_assert_eq!(d.mul(&b).unwrap(), a);
    }

    #[test]
    fn reversion_round_trip(mut f in (1usize..=10).prop_flat_map(series), c1 in prop_oneof![-5i64..=-1, 1i64..=5]) {
        f.set_coeff(0, q(0));
        f.set_coeff(1, q(c1));
        let g = f.revert().unwrap();
        prop_assert_eq!(f.compose(&g).unwrap(), TruncatedSeries::identity(f.order()));
        prop_assert_eq!(g.compose(&f).unwrap(), TruncatedSeries::identity(f.order()));
    }

    #[test]
    fn psi_of_d_times_z_minus_one(h in (1usize..=12).prop_flat_map(series)) {
        let n = h.order();
        let h1 = h.partial_sum();
        let p = h.psi_of_d(&h1);
        let zm1 = TruncatedSeries::new(vec![q(-1), q(1)]).with_order(n);
        let back = p.mul(&zm1).unwrap();
        let target = h.add_constant(&-h1);
        prop_assert_eq!(back.truncate(n - 1), target.truncate(n - 1));
    }

    #[test]
    fn zero_derivative_shift(h in (1usize..=12).prop_flat_map(series)) {
        let n = h.order();
        let dh = h.zero_derivative(1).with_order(n);
        let lhs = dh.mul_z();
        let rhs = h.add_constant(&-h.coeff(0).clone());
        prop_assert_eq!(lhs, rhs);
    }
}

#[test]
fn small_examples() {
    let z = TruncatedSeries::<Rational>::identity(3);
    let one_minus = TruncatedSeries::new(vec![q(1), q(-1)]).with_order(3);
    assert_eq!(z.div(&one_minus).unwrap().coeffs(), &[q(0), q(1), q(1), q(1)]);
    let p = TruncatedSeries::new(vec![q(1), q(1)]).with_order(2);
    let m = TruncatedSeries::new(vec![q(1), q(-1)]).with_order(2);
    assert_eq!(p.mul(&m).unwrap().coeffs(), &[q(1), q(0), q(-1)]);
}

#[test]
fn domain_errors() {
    let f = TruncatedSeries::new(vec![q(1), q(1)]).with_order(3);
    assert!(matches!(f.revert(), Err(Error::ReversionDomain)));
    assert!(matches!(f.compose(&f), Err(Error::CompositionDomain)));
    let z = TruncatedSeries::<Rational>::identity(3);
    assert!(matches!(f.div(&z), Err(Error::Division)));
    assert!(matches!(f.add(&TruncatedSeries::identity(4)), Err(Error::Dimension(_))));
}
