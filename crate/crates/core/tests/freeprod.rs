use fck_core::distributions::{EvalMode, SpectralDistribution};
use fck_core::freeprod::{normalize_half, parse_word, HalfLetter, Letter, LawProduct, Tag, Tagged};
use fck_core::func::FnDesc;
use fck_core::cumulants::MomentOracle;
use fck_core::{Rational, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(n: i64, d: i64) -> Rational {
    Rational::from_frac(n, d)
}

fn laws() -> (SpectralDistribution<Rational>, SpectralDistribution<Rational>) {
    (
        SpectralDistribution::free_binomial(q(1, 2), q(3, 2), 16).unwrap(),
        SpectralDistribution::free_poisson(q(2, 3), q(5, 2), 16).unwrap(),
    )
}

fn random_fn(rng: &mut ChaCha8Rng) -> FnDesc<Rational> {
    match rng.gen_range(0..4) {
        0 => FnDesc::identity(),
        1 => FnDesc::monomial(2),
        2 => FnDesc::poly(&[q(rng.gen_range(-3..=3), 2), q(1, 1)]),
        _ => FnDesc::poly(&[q(0, 1), q(rng.gen_range(-2..=2), 1), q(1, 3)]),
    }
}

fn random_word(rng: &mut ChaCha8Rng, len: usize) -> Vec<Letter<Rational>> {
    (0..len)
        .map(|_| if rng.gen_bool(0.5) { Tagged::Left(random_fn(rng)) } else { Tagged::Right(random_fn(rng)) })
        .collect()
}

#[test]
fn cyclic_rotations_agree() {
    let (u, v) = laws();
    let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let len = rng.gen_range(2..=10);
        let w = random_word(&mut rng, len);
        let base = fp.moment(&w).unwrap();
        let r = rng.gen_range(1..len);
        let rot: Vec<_> = w[r..].iter().chain(&w[..r]).cloned().collect();
        assert_eq!(fp.moment(&rot).unwrap(), base);
    }
}

#[test]
fn single_tag_words_are_marginal_moments() {
    let (u, v) = laws();
    let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
    for k in 1..=8 {
        let wu: Vec<Letter<Rational>> = vec![Tagged::Left(FnDesc::identity()); k];
        let wv: Vec<Letter<Rational>> = vec![Tagged::Right(FnDesc::identity()); k];
        assert_eq!(fp.moment(&wu).unwrap(), u.moments()[k]);
        assert_eq!(fp.moment(&wv).unwrap(), v.moments()[k]);
    }
}

#[test]
fn alternating_centred_products_vanish() {
    let (u, v) = laws();
    let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for len in 1..=6 {
        for _ in 0..4 {
            let w: Vec<Letter<Rational>> = (0..len)
                .map(|i| {
                    let f = random_fn(&mut rng);
                    let (law, left) = if i % 2 == 0 { (&u, true) } else { (&v, false) };
                    let mean = law.expect_function(&f, fck_core::distributions::Method::ExactPoly).unwrap().value;
                    let c = f.add_constant(&-mean);
                    if left { Tagged::Left(c) } else { Tagged::Right(c) }
                })
                .collect();
            assert!(fp.moment(&w).unwrap().is_zero(), "length {len}");
        }
    }
}

#[test]
fn enumeration_matches_centring() {
    let (u, v) = laws();
    let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let len = rng.gen_range(1..=8);
        let w = random_word(&mut rng, len);
        assert_eq!(fp.moment_by_enumeration(&w).unwrap(), fp.moment_by_centering(&w).unwrap(), "{w:?}");
    }
}

#[test]
fn half_powers_reduce_by_traciality() {
    let (u, v) = laws();
    let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
    let a = fp.eval_half(&parse_word::<Rational>("V^1/2 U V U V^1/2").unwrap()).unwrap();
    let b = fp.eval_half(&parse_word::<Rational>("U V U V").unwrap()).unwrap();
    assert_eq!(a, b);
    // An unmatched square root cannot be removed.
    let odd: [HalfLetter<Rational>; 2] = [HalfLetter::sqrt(Tag::Left), HalfLetter::power(Tag::Right, 1)];
    assert!(normalize_half(&odd).is_err());
}
