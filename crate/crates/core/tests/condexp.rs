use fck_core::condexp::{
    boolean_powers_identity, condexp_pairing, eta_anchored, eta_f_series, eta_fg_series, lukacs_ab, pairing_direct,
    Analytic, EtaPath,
};
use fck_core::distributions::{EvalMode, LawOracle, SpectralDistribution, Transform};
use fck_core::freeprod::LawProduct;
use fck_core::func::FnDesc;
use fck_core::{Float, Rational, Scalar, TruncatedSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(n: i64, d: i64) -> Rational {
    Rational::from_frac(n, d)
}

fn poly_basis() -> Vec<Analytic<Rational>> {
    vec![Analytic::constant(q(1, 1)), Analytic::identity(), Analytic::monomial(2), Analytic::monomial(3)]
}

#[test]
fn eta_paths_agree_for_random_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let fs = [Analytic::identity(), Analytic::Poly(vec![q(1, 2), q(-1, 1), q(2, 1)]), Analytic::monomial(3)];
    for _ in 0..4 {
        let law = SpectralDistribution::free_binomial(q(rng.gen_range(1..=8), 4), q(rng.gen_range(5..=12), 4), 24).unwrap();
        let u = LawOracle::new(&law, EvalMode::Exact);
        for f in &fs {
            let d = eta_f_series(f, &u, 10, EtaPath::Definition).unwrap();
            assert_eq!(d, eta_f_series(f, &u, 10, EtaPath::ClosedForm).unwrap());
            for g in &fs {
                let d = eta_fg_series(f, g, &u, 8, EtaPath::Definition).unwrap();
                assert_eq!(d, eta_fg_series(f, g, &u, 8, EtaPath::ClosedForm).unwrap());
            }
        }
    }
}

#[test]
fn closed_forms_in_terms_of_eta() {
    let law = SpectralDistribution::free_binomial(q(2, 3), q(5, 2), 24).unwrap();
    let u = LawOracle::new(&law, EvalMode::Exact);
    let eta = eta_anchored(&u, 14, 0).unwrap();
    let id = Analytic::identity();
    let d2 = eta.zero_derivative(2).unwrap().at_zero.truncate(8);
    assert_eq!(eta_fg_series(&id, &id, &u, 8, EtaPath::Definition).unwrap(), d2);
    // η^{f_r} = Σ_{j=1}^{r} φ(U^{r-j}) D^j η_U for f_r(x) = x^r.
    for r in 1..=3usize {
        let mut want = TruncatedSeries::zero(8);
        for j in 1..=r {
            let dj = eta.zero_derivative(j).unwrap().at_zero.truncate(8);
            want = want.add(&dj.scale(&law.moments()[r - j])).unwrap();
        }
        assert_eq!(eta_f_series(&Analytic::monomial(r), &u, 8, EtaPath::Definition).unwrap(), want, "r = {r}");
    }
}

#[test]
fn boolean_powers() {
    let law = SpectralDistribution::free_poisson(q(1, 2), q(3, 1), 24).unwrap();
    let u = LawOracle::new(&law, EvalMode::Exact);
    let g = FnDesc::poly(&[q(1, 1), q(0, 1), q(1, 2)]);
    for r in 1..=6 {
        for i in 1..=8 - r {
            let (l, rr) = boolean_powers_identity(&g, &u, r, i).unwrap();
            assert_eq!(l, rr, "r = {r}, i = {i}");
        }
    }
}

#[test]
fn pairing_two_paths_on_polynomial_basis() {
    let lu = SpectralDistribution::free_binomial(q(1, 1), q(2, 1), 24).unwrap();
    let lv = SpectralDistribution::free_poisson(q(1, 2), q(3, 1), 24).unwrap();
    let fp = LawProduct::from_laws(&lu, &lv, EvalMode::Exact);
    let basis = poly_basis();
    for f in &basis {
        for g in &basis {
            let p = condexp_pairing(f, g, &fp, 6, 3).unwrap();
            for m in 0..=3 {
                assert_eq!(p.evaluator(m).unwrap(), pairing_direct(f, g, &fp, 6, m).unwrap(), "{f:?} {g:?} m = {m}");
            }
        }
    }
}

#[test]
fn lukacs_ab_float_agreement() {
    let tol = Float::parse("1e-25").unwrap();
    let lu = SpectralDistribution::free_binomial(Float::from_i64(1), Float::from_i64(2), 16).unwrap();
    let lv = SpectralDistribution::free_poisson(Float::from_i64(1), Float::from_i64(3), 16).unwrap();
    let fp = LawProduct::from_laws(&lu, &lv, EvalMode::Neumann { tol: Float::parse("1e-40").unwrap() });
    let r = lukacs_ab(&fp, 5, 2).unwrap();
    let psi = Analytic::Psi;
    for m in 0..=2 {
        let a = r.pairing.evaluator(m).unwrap();
        let b = pairing_direct(&psi, &psi, &fp, 5, m).unwrap();
        assert!(a.max_abs_diff(&b) <= tol, "m = {m}: {}", a.max_abs_diff(&b));
    }
}

#[test]
fn psi_of_d_recovers_eta() {
    let law = SpectralDistribution::free_binomial(Float::from_i64(1), Float::from_i64(2), 16).unwrap();
    let u = LawOracle::new(&law, EvalMode::Neumann { tol: Float::parse("1e-40").unwrap() });
    let alpha = u.expect(&FnDesc::psi()).unwrap();
    let eta1 = alpha.clone() / (Float::one() + &alpha);
    let n = 10;
    let eta = law.transform_series(Transform::Eta, n).unwrap();
    let h = eta.psi_of_d(&eta1);
    let zm1 = TruncatedSeries::new(vec![-Float::one(), Float::one()]).with_order(n);
    let back = h.mul(&zm1).unwrap().truncate(n - 1);
    let want = eta.add_constant(&-eta1).truncate(n - 1);
    let slack = u.tail_total() + Float::parse("1e-80").unwrap();
    assert!(back.max_abs_diff(&want) <= slack);
}
