use std::collections::BTreeMap;

use fck_core::cumulants::{
    boolean_cumulant_of_products, moments_from_cumulants, mixed_moment_boolean, odd_boolean_identity, CumulantCalculator,
    CumulantKind, CumulantTable, MixedPath, MomentOracle, ProductOracle,
};
use fck_core::distributions::{EvalMode, LawLabel, SpectralDistribution};
use fck_core::freeprod::{freeness_report, LawProduct, Tagged};
use fck_core::func::FnDesc;
use fck_core::partitions::{enumerate_partitions, Family};
use fck_core::{Rational, Result, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent random rationals on every word over `{0, 1}` up to `max_len`.
struct TableOracle(BTreeMap<Vec<u8>, Rational>);

impl TableOracle {
    fn random(rng: &mut ChaCha8Rng, max_len: usize) -> Self {
        let mut t = BTreeMap::new();
        for w in words(max_len) {
            t.insert(w, Rational::from_frac(rng.gen_range(-9..=9), rng.gen_range(1..=4)));
        }
        TableOracle(t)
    }
}

impl MomentOracle for TableOracle {
    type Arg = u8;
    type Scalar = Rational;
    fn moment(&self, word: &[u8]) -> Result<Rational> {
        if word.is_empty() {
            return Ok(Rational::one());
        }
        Ok(self.0[word].clone())
    }
}

fn words(max_len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for n in 1..=max_len {
        for bits in 0u32..(1 << n) {
            out.push((0..n).map(|i| (bits >> i & 1) as u8).collect());
        }
    }
    out
}

fn random_law(rng: &mut ChaCha8Rng, order: usize) -> SpectralDistribution<Rational> {
    let mut kappa = vec![Rational::zero()];
    for _ in 0..order {
        kappa.push(Rational::from_frac(rng.gen_range(-6..=6), rng.gen_range(1..=5)));
    }
    SpectralDistribution::from_free_cumulants(kappa, None, LawLabel::Custom)
}

#[test]
fn moment_cumulant_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let oracle = TableOracle::random(&mut rng, 8);
        let calc = CumulantCalculator::new(&oracle);
        let ws = words(8);
        for kind in [CumulantKind::Free, CumulantKind::Boolean] {
            let table = CumulantTable::from_oracle(&calc, &ws, kind).unwrap();
            for w in ws.iter().filter(|w| w.len() <= 6 || w.iter().filter(|&&a| a == 1).count() == 3) {
                assert_eq!(moments_from_cumulants(&table, w).unwrap(), oracle.0[w], "{kind:?} {w:?}");
            }
        }
    }
}

#[test]
fn free_product_has_vanishing_mixed_free_cumulants() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = random_law(&mut rng, 12);
    let v = random_law(&mut rng, 12);
    let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
    let x = FnDesc::identity();
    let rep = freeness_report(&fp, &[x.clone()], &[x.clone()], 6, None).unwrap();
    assert!(rep.free, "max |κ| = {}", rep.max_abs);
    // A second pair of functions per side.
    let x2 = FnDesc::poly(&[Rational::from_i64(1), Rational::zero(), Rational::from_frac(1, 2)]);
    let rep = freeness_report(&fp, &[x.clone(), x2.clone()], &[x2], 4, None).unwrap();
    assert!(rep.free);
}

#[test]
fn boolean_cumulants_with_products_as_entries() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let oracle = TableOracle::random(&mut rng, 8);
    let calc = CumulantCalculator::new(&oracle);
    let grouped = CumulantCalculator::new(ProductOracle(&oracle));
    for n in 1..=8usize {
        // A handful of words per length keeps the sweep short.
        for bits in [0u32, 0b1011_0110, 0b0101_0101, 0b1110_0001] {
            let w: Vec<u8> = (0..n).map(|i| (bits >> i & 1) as u8).collect();
            for sigma in enumerate_partitions(n, Family::Interval).unwrap() {
                let args: Vec<Vec<u8>> =
                    sigma.blocks().iter().map(|b| b.iter().map(|&i| w[i - 1]).collect()).collect();
                let lhs = grouped.cumulant(&args, CumulantKind::Boolean).unwrap();
                let rhs = boolean_cumulant_of_products(&calc, &w, &sigma).unwrap();
                assert_eq!(lhs, rhs, "{w:?} grouped by {sigma}");
            }
        }
    }
}

#[test]
fn mixed_moment_three_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let q = |n: i64| Rational::from_i64(n);
    for _ in 0..3 {
        let u = random_law(&mut rng, 12);
        let v = random_law(&mut rng, 12);
        let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
        let joint: &dyn MomentOracle<Arg = Tagged<FnDesc<Rational>, FnDesc<Rational>>, Scalar = Rational> = &fp;
        let fs = [FnDesc::identity(), FnDesc::poly(&[q(1), q(2)]), FnDesc::monomial(2), FnDesc::poly(&[q(0), q(1), q(-1)])];
        for n in 1..=5 {
            let xs: Vec<_> = (0..n).map(|i| fs[i % 4].clone()).collect();
            let ys: Vec<_> = (0..n).map(|i| fs[(i + 1) % 4].clone()).collect();
            let direct = mixed_moment_boolean(joint, &xs, &ys, MixedPath::Direct).unwrap();
            assert_eq!(mixed_moment_boolean(joint, &xs, &ys, MixedPath::OuterBlock).unwrap(), direct);
            assert_eq!(mixed_moment_boolean(joint, &xs, &ys, MixedPath::Reformulated).unwrap(), direct);
            let xs1: Vec<_> = (0..=n).map(|i| fs[(i + 2) % 4].clone()).collect();
            let (l, r) = odd_boolean_identity(joint, &xs1, &ys).unwrap();
            assert_eq!(l, r, "odd identity n = {n}");
        }
    }
}
