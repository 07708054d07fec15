use fck_core::distributions::{
    free_cumulants_from_moments, moments_from_free_cumulants, EvalMode, Method, SpectralDistribution, Transform,
};
use fck_core::freeprod::LawProduct;
use fck_core::func::FnDesc;
use fck_core::subordination::moment_series_uv;
use fck_core::{Float, Rational, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(n: i64, d: i64) -> Rational {
    Rational::from_frac(n, d)
}

fn zoo(order: usize) -> Vec<SpectralDistribution<Rational>> {
    let p = SpectralDistribution::free_poisson(q(1, 2), q(3, 1), order).unwrap();
    let b = SpectralDistribution::free_binomial(q(1, 1), q(2, 1), order).unwrap();
    let b2 = SpectralDistribution::free_binomial(q(1, 3), q(5, 4), order).unwrap();
    let be = SpectralDistribution::bernoulli(q(1, 3), q(2, 1), order).unwrap();
    let pt = SpectralDistribution::point(q(-3, 2), order).unwrap();
    let af = b.affine(&q(1, 1), &q(-1, 1)).unwrap();
    let cv = p.free_convolve(&SpectralDistribution::free_poisson(q(1, 2), q(1, 1), order).unwrap()).unwrap();
    vec![p, b, b2, be, pt, af, cv]
}

#[test]
fn moments_and_free_cumulants_agree() {
    for law in zoo(14) {
        assert_eq!(free_cumulants_from_moments(law.moments()), law.free_cumulants(), "{:?}", law.label);
        assert_eq!(moments_from_free_cumulants(law.free_cumulants()), law.moments());
    }
}

#[test]
fn closed_form_s_transforms() {
    // S of μ(α, λ) is 1/(αλ + αz); S of ν(σ, θ) is 1 + θ/(σ + z).
    let n = 8;
    let p = SpectralDistribution::free_poisson(q(1, 2), q(3, 1), n).unwrap();
    let s = p.transform_series(Transform::S, n).unwrap();
    let den = fck_core::TruncatedSeries::new(vec![q(3, 2), q(1, 2)]).with_order(n - 1);
    assert_eq!(s, fck_core::TruncatedSeries::one(n - 1).div(&den).unwrap());
    // κ_k = λα^k, read off the same S-transform.
    for k in 1..=n {
        assert_eq!(p.free_cumulants()[k], q(3, 1) * q(1, 2).powi(k as u32));
    }
    let b = SpectralDistribution::free_binomial(q(1, 1), q(2, 1), n).unwrap();
    let s = b.transform_series(Transform::S, n).unwrap();
    let den = fck_core::TruncatedSeries::new(vec![q(1, 1), q(1, 1)]).with_order(n - 1);
    let want = fck_core::TruncatedSeries::constant(q(2, 1), n - 1).div(&den).unwrap().add_constant(&q(1, 1));
    assert_eq!(s, want);
}

#[test]
fn s_transform_is_multiplicative() {
    let n = 9;
    for (sigma, theta, alpha, lambda) in [(q(1, 1), q(2, 1), q(1, 1), q(3, 1)), (q(1, 2), q(3, 2), q(2, 3), q(5, 2))] {
        let u = SpectralDistribution::free_binomial(sigma, theta, n).unwrap();
        let v = SpectralDistribution::free_poisson(alpha, lambda, n).unwrap();
        let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
        let muv = moment_series_uv(&fp, n).unwrap();
        let mut m = muv.coeffs().to_vec();
        m[0] = Rational::one();
        let uv = SpectralDistribution::from_moments(m, None, fck_core::distributions::LawLabel::Custom).unwrap();
        let s_uv = uv.transform_series(Transform::S, n).unwrap();
        let s_u = u.transform_series(Transform::S, n).unwrap();
        let s_v = v.transform_series(Transform::S, n).unwrap();
        assert_eq!(s_uv, s_u.mul(&s_v).unwrap());
    }
}

#[test]
fn neumann_and_quadrature_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let slack = Float::parse("1e-30").unwrap();
    let f = FnDesc::inv_one_minus().add(&FnDesc::monomial(2));
    let g = FnDesc::monomial(-1).add(&FnDesc::identity());
    for _ in 0..10 {
        let sigma = Float::from_frac(rng.gen_range(4..=12), 4);
        let theta = Float::from_frac(rng.gen_range(6..=16), 4);
        let b = SpectralDistribution::free_binomial(sigma, theta, 8).unwrap();
        let neu = b.expect_function(&f, Method::Neumann { degree: 300 }).unwrap();
        let quad = b.expect_function(&f, Method::Quadrature { budget: 1 << 16 }).unwrap();
        let gap = (neu.value.clone() - &quad.value).abs();
        assert!(gap <= neu.tail_bound.clone() + &quad.tail_bound + &slack, "binomial: gap {gap}, tail {}", neu.tail_bound);

        let alpha = Float::from_frac(rng.gen_range(1..=8), 4);
        let lambda = Float::from_frac(rng.gen_range(12..=24), 4);
        let p = SpectralDistribution::free_poisson(alpha, lambda, 8).unwrap();
        let neu = p.expect_function(&g, Method::Neumann { degree: 300 }).unwrap();
        let quad = p.expect_function(&g, Method::Quadrature { budget: 1 << 16 }).unwrap();
        let gap = (neu.value.clone() - &quad.value).abs();
        assert!(gap <= neu.tail_bound.clone() + &quad.tail_bound + &slack, "poisson: gap {gap}, tail {}", neu.tail_bound);
    }
}

#[test]
fn exact_singular_expectations() {
    // φ((1-U)^{-1}) for ν(σ, θ) is (σ+θ-1)/(θ-1); φ(V^{-1}) for μ(α, λ) is 1/(α(λ-1)).
    let b = SpectralDistribution::free_binomial(q(1, 1), q(2, 1), 6).unwrap();
    let e = b.expect_function(&FnDesc::inv_one_minus(), Method::Exact).unwrap();
    assert_eq!(e.value, q(2, 1));
    let p = SpectralDistribution::free_poisson(q(1, 2), q(3, 1), 6).unwrap();
    let e = p.expect_function(&FnDesc::monomial(-1), Method::Exact).unwrap();
    assert_eq!(e.value, q(1, 1));
}

#[test]
fn exact_backend_has_no_quadrature() {
    let p = SpectralDistribution::free_poisson(q(1, 2), q(3, 1), 6).unwrap();
    assert!(p.expect_function(&FnDesc::identity(), Method::Quadrature { budget: 100 }).is_err());
}
