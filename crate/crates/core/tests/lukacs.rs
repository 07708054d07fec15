use fck_core::lukacs::{
    algebraic_identity_checks, closed_form_s, constants_from_params, dual_lukacs_check, omega_identities,
    params_from_constants, solve_regression_system, verify_regression_forward, Mode, RegressionConstants,
};
use fck_core::distributions::{EvalMode, SpectralDistribution};
use fck_core::freeprod::LawProduct;
use fck_core::{Error, Float, Rational, Scalar};
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::from_frac(n, d)
}

#[test]
fn regression_system_closed_forms() {
    for (a, b, c) in [(q(1, 1), q(2, 1), q(1, 1)), (q(1, 2), q(3, 2), q(5, 4)), (q(3, 1), q(1, 3), q(7, 1))] {
        let r = solve_regression_system(&RegressionConstants::th1(a.clone(), b.clone(), c.clone()), Mode::Th1, 12).unwrap();
        let (su, sv) = closed_form_s(&a, &b, &c, 11).unwrap();
        assert_eq!(r.s_u, su);
        assert_eq!(r.s_v, sv);
        assert_eq!(r.s_uv, r.s_u.mul(&r.s_v).unwrap());
        let d = b.clone() * c.powi(3);
        let r2 = solve_regression_system(&RegressionConstants::th2(a, c, d), Mode::Th2, 12).unwrap();
        assert_eq!(r, r2);
    }
}

#[test]
fn cd_form_parameter_map() {
    let (a, c, d) = (q(1, 2), q(2, 1), q(9, 1));
    let p = params_from_constants(&RegressionConstants::th2(a.clone(), c.clone(), d.clone()), Mode::Th2).unwrap();
    let e = d.clone() - c.clone() * &c;
    assert_eq!(p.sigma, c.clone() * &c * &a / &e);
    assert_eq!(p.theta, d.clone() / &e);
    assert_eq!(p.alpha_v, e.clone() / c.powi(3));
    assert_eq!(p.lambda_v, (c.clone() * &c * &a + &d) / &e);
}

#[test]
fn inadmissible_constants_name_the_inequality() {
    let e = params_from_constants(&RegressionConstants::th1(q(1, 1), q(1, 2), q(1, 1)), Mode::Th1).unwrap_err();
    assert!(matches!(&e, Error::Domain(m) if m.contains("bc > 1")), "{e}");
    let e = params_from_constants(&RegressionConstants::th2(q(1, 1), q(2, 1), q(3, 1)), Mode::Th2).unwrap_err();
    assert!(matches!(&e, Error::Domain(m) if m.contains("d > c²")), "{e}");
}

#[test]
fn omega_identities_for_characterised_laws() {
    for (s, t, av) in [(q(1, 1), q(2, 1), q(1, 1)), (q(1, 2), q(3, 2), q(2, 3))] {
        let rep = omega_identities(&s, &t, &av, 8, &q(0, 1)).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
    }
    let tol = Float::parse("1e-40").unwrap();
    let (s, t, av) = (Float::from_frac(3, 4), Float::from_frac(7, 4), Float::from_frac(3, 2));
    let rep = omega_identities(&s, &t, &av, 8, &tol).unwrap();
    assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
}

#[test]
fn forward_regression() {
    let eps = Float::parse("1e-20").unwrap();
    let rep = verify_regression_forward(&q(1, 1), &q(2, 1), &q(1, 1), 6, &q(0, 1), &q(0, 1), 16).unwrap();
    assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
    let tol = Float::parse("1e-30").unwrap();
    let rep =
        verify_regression_forward(&Float::from_i64(1), &Float::from_i64(2), &Float::from_i64(1), 3, &tol, &eps, 16).unwrap();
    assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
}

#[test]
fn algebraic_identities() {
    let u = SpectralDistribution::free_binomial(q(1, 1), q(2, 1), 16).unwrap();
    let v = SpectralDistribution::free_poisson(q(1, 2), q(3, 1), 16).unwrap();
    let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
    let rep = algebraic_identity_checks(&fp, 4, 2, &q(0, 1)).unwrap();
    assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
}

#[test]
fn dual_lukacs_exact() {
    for (l, k, a) in [(q(1, 1), q(2, 1), q(1, 2)), (q(3, 2), q(3, 2), q(1, 1)), (q(2, 3), q(5, 2), q(2, 1))] {
        let rep = dual_lukacs_check(&l, &k, &a, 6, 8).unwrap();
        assert!(rep.marginals.passed(), "{:?}", rep.marginals.failures().collect::<Vec<_>>());
        assert!(rep.freeness.free, "max |κ| = {}", rep.freeness.max_abs);
        assert!(rep.freeness.max_abs.is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parameter_maps_round_trip(s in 1i64..40, t in 1i64..40, av in 1i64..40, d in 1i64..8) {
        let sigma = q(s, d);
        let theta = q(1, 1) + q(t, d);
        let alpha_v = q(av, d + 1);
        let rc = constants_from_params(&sigma, &theta, &alpha_v).unwrap();
        for mode in [Mode::Th1, Mode::Th2] {
            let p = params_from_constants(&rc, mode).unwrap();
            prop_assert_eq!(&p.sigma, &sigma);
            prop_assert_eq!(&p.theta, &theta);
            prop_assert_eq!(&p.alpha_v, &alpha_v);
            prop_assert_eq!(p.lambda_v, sigma.clone() + &theta);
        }
    }
}
