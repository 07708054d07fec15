//! Multivariate free and Boolean cumulants.
//!
//! Cumulants are computed from moments by recursive subtraction, memoised on
//! sub-words. For free cumulants the recursion splits on the block containing
//! the first letter: the remaining blocks of a non-crossing partition live
//! inside the gaps of that block, and summing over them reproduces the gap
//! moments. For Boolean cumulants the first block is a prefix.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt::Debug;

use crate::error::{Error, Result};
use crate::freeprod::Tagged;
use crate::partitions::{join_partitions, Family, Partition, PartitionIter};
use crate::scalar::Scalar;

/// Longest word accepted by the cumulant routines.
pub const MAX_WORD: usize = 24;

/// A normalised linear functional on words of abstract arguments.
pub trait MomentOracle {
    type Arg: Clone + Ord + Debug;
    type Scalar: Scalar;

    /// `φ(a_1 ⋯ a_n)`; the empty word must give 1.
    fn moment(&self, word: &[Self::Arg]) -> Result<Self::Scalar>;

    /// Whether `φ` is invariant under cyclic rotation of words.
    fn is_tracial(&self) -> bool {
        false
    }

    /// A single argument equal to the product `a·b`, when one exists.
    fn fuse(&self, _a: &Self::Arg, _b: &Self::Arg) -> Option<Self::Arg> {
        None
    }
}

impl<O: MomentOracle + ?Sized> MomentOracle for &O {
    type Arg = O::Arg;
    type Scalar = O::Scalar;
    fn moment(&self, word: &[O::Arg]) -> Result<O::Scalar> {
        (**self).moment(word)
    }
    fn is_tracial(&self) -> bool {
        (**self).is_tracial()
    }
    fn fuse(&self, a: &O::Arg, b: &O::Arg) -> Option<O::Arg> {
        (**self).fuse(a, b)
    }
}

/// Free (non-crossing) or Boolean (interval) cumulants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CumulantKind {
    Free,
    Boolean,
}

impl CumulantKind {
    pub fn family(self) -> Family {
        match self {
            CumulantKind::Free => Family::NonCrossing,
            CumulantKind::Boolean => Family::Interval,
        }
    }
}

pub(crate) fn word_name<A: Debug>(word: &[A]) -> String {
    let parts: Vec<String> = word.iter().map(|a| format!("{a:?}")).collect();
    format!("[{}]", parts.join(", "))
}

fn attach_word<A: Debug>(e: Error, word: &[A]) -> Error {
    match e {
        Error::Oracle { .. } => e,
        other => Error::Oracle { word: word_name(word), reason: other.to_string() },
    }
}

/// Smallest cyclic rotation, the memo key of a tracial moment.
pub fn min_rotation<A: Ord + Clone>(word: &[A]) -> Vec<A> {
    let n = word.len();
    let mut best = 0;
    for r in 1..n {
        let cand = word[r..].iter().chain(&word[..r]);
        let cur = word[best..].iter().chain(&word[..best]);
        if cand.cmp(cur) == core::cmp::Ordering::Less {
            best = r;
        }
    }
    word[best..].iter().chain(&word[..best]).cloned().collect()
}

/// Memoised cumulants over one oracle.
pub struct CumulantCalculator<O: MomentOracle> {
    oracle: O,
    moments: RefCell<BTreeMap<Vec<O::Arg>, O::Scalar>>,
    cumulants: RefCell<BTreeMap<(CumulantKind, Vec<O::Arg>), O::Scalar>>,
}

impl<O: MomentOracle> CumulantCalculator<O> {
    pub fn new(oracle: O) -> Self {
        CumulantCalculator { oracle, moments: RefCell::new(BTreeMap::new()), cumulants: RefCell::new(BTreeMap::new()) }
    }

    pub fn oracle(&self) -> &O {
        &self.oracle
    }

    /// Memoised `φ(word)`.
    pub fn moment(&self, word: &[O::Arg]) -> Result<O::Scalar> {
        if word.is_empty() {
            return Ok(O::Scalar::one());
        }
        let key = if self.oracle.is_tracial() { min_rotation(word) } else { word.to_vec() };
        if let Some(v) = self.moments.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = self.oracle.moment(&key).map_err(|e| attach_word(e, word))?;
        self.moments.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    /// `κ_n(word)` or `β_n(word)`.
    pub fn cumulant(&self, word: &[O::Arg], kind: CumulantKind) -> Result<O::Scalar> {
        let n = word.len();
        if n == 0 || n > MAX_WORD {
            return Err(Error::SizeLimit { what: "cumulant word length", got: n, limit: MAX_WORD });
        }
        let key = (kind, word.to_vec());
        if let Some(v) = self.cumulants.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = match kind {
            CumulantKind::Boolean => self.boolean(word)?,
            CumulantKind::Free => self.free(word)?,
        };
        self.cumulants.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    fn boolean(&self, word: &[O::Arg]) -> Result<O::Scalar> {
        let n = word.len();
        let mut acc = self.moment(word)?;
        for k in 1..n {
            let tail = self.moment(&word[k..])?;
            if tail.is_zero() {
                continue;
            }
            acc -= self.cumulant(&word[..k], CumulantKind::Boolean)? * &tail;
        }
        Ok(acc)
    }

    fn free(&self, word: &[O::Arg]) -> Result<O::Scalar> {
        let n = word.len();
        let mut acc = self.moment(word)?;
        // Subsets B ∋ 0 other than the full set, as masks over 1..n.
        let full = (1u64 << (n - 1)) - 1;
        let mut block: Vec<O::Arg> = Vec::with_capacity(n);
        for mask in 0..full {
            let mut gaps = O::Scalar::one();
            let mut prev = 0usize;
            let mut zero = false;
            block.clear();
            block.push(word[0].clone());
            for i in 1..n {
                if mask >> (i - 1) & 1 == 1 {
                    if i > prev + 1 {
                        let g = self.moment(&word[prev + 1..i])?;
                        if g.is_zero() {
                            zero = true;
                            break;
                        }
                        gaps = gaps * g;
                    }
                    block.push(word[i].clone());
                    prev = i;
                }
            }
            if zero {
                continue;
            }
            if prev + 1 < n {
                let g = self.moment(&word[prev + 1..])?;
                if g.is_zero() {
                    continue;
                }
                gaps = gaps * g;
            }
            let k = self.cumulant(&block, CumulantKind::Free)?;
            acc -= k * &gaps;
        }
        Ok(acc)
    }

    /// Multiplicative extension `κ_π(word)` / `β_π(word)`.
    pub fn cumulant_partition(&self, word: &[O::Arg], pi: &Partition, kind: CumulantKind) -> Result<O::Scalar> {
        let mut acc = O::Scalar::one();
        for b in pi.blocks() {
            let sub: Vec<O::Arg> = b.iter().map(|&i| word[i - 1].clone()).collect();
            acc = acc * self.cumulant(&sub, kind)?;
        }
        Ok(acc)
    }
}

/// One-shot `κ_n` / `β_n` of a word.
pub fn cumulants_from_moments<O: MomentOracle>(oracle: O, word: &[O::Arg], kind: CumulantKind) -> Result<O::Scalar> {
    CumulantCalculator::new(oracle).cumulant(word, kind)
}

/// Cumulants keyed by argument word.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantTable<A: Ord, F> {
    pub kind: CumulantKind,
    pub entries: BTreeMap<Vec<A>, F>,
}

impl<A: Ord + Clone + Debug, F: Scalar> CumulantTable<A, F> {
    pub fn new(kind: CumulantKind) -> Self {
        CumulantTable { kind, entries: BTreeMap::new() }
    }

    /// Tabulate every cumulant of every sub-word the lattice sums of `words` need.
    pub fn from_oracle<O>(calc: &CumulantCalculator<O>, words: &[Vec<A>], kind: CumulantKind) -> Result<Self>
    where
        O: MomentOracle<Arg = A, Scalar = F>,
    {
        let mut t = CumulantTable::new(kind);
        for w in words {
            for mask in 1u64..(1u64 << w.len()) {
                let sub: Vec<A> = (0..w.len()).filter(|i| mask >> i & 1 == 1).map(|i| w[i].clone()).collect();
                if t.entries.contains_key(&sub) {
                    continue;
                }
                let v = calc.cumulant(&sub, kind)?;
                t.entries.insert(sub, v);
            }
        }
        Ok(t)
    }

    fn get(&self, word: &[A]) -> Result<&F> {
        self.entries.get(word).ok_or_else(|| Error::IncompleteTable(word_name(word)))
    }
}

/// `φ(word) = Σ_π κ_π(word)` over `NC(n)` or `Int(n)`.
pub fn moments_from_cumulants<A: Ord + Clone + Debug, F: Scalar>(table: &CumulantTable<A, F>, word: &[A]) -> Result<F> {
    let n = word.len();
    if n == 0 {
        return Ok(F::one());
    }
    let mut total = F::zero();
    let mut sub: Vec<A> = Vec::with_capacity(n);
    for pi in PartitionIter::with_limit(n, table.kind.family(), MAX_WORD)? {
        let mut term = F::one();
        for b in pi.blocks() {
            sub.clear();
            sub.extend(b.iter().map(|&i| word[i - 1].clone()));
            term = term * table.get(&sub)?;
        }
        total += term;
    }
    Ok(total)
}

/// Treats each argument as the product of a list of underlying arguments.
pub struct ProductOracle<O>(pub O);

impl<O: MomentOracle> MomentOracle for ProductOracle<O> {
    type Arg = Vec<O::Arg>;
    type Scalar = O::Scalar;
    fn moment(&self, word: &[Vec<O::Arg>]) -> Result<O::Scalar> {
        let flat: Vec<O::Arg> = word.iter().flatten().cloned().collect();
        self.0.moment(&flat)
    }
    fn is_tracial(&self) -> bool {
        false
    }
}

/// Boolean cumulant whose entries are the products of consecutive groups of
/// `args`, expanded as `Σ_{π ∈ Int(n), π ∨ σ = 1_n} β_π(args)`.
///
/// The singleton grouping returns `β_n(args)` itself.
pub fn boolean_cumulant_of_products<O: MomentOracle>(
    calc: &CumulantCalculator<O>,
    args: &[O::Arg],
    grouping: &Partition,
) -> Result<O::Scalar> {
    let n = args.len();
    if grouping.n() != n {
        return Err(Error::Dimension(format!("grouping of {} for {} arguments", grouping.n(), n)));
    }
    if !grouping.is_interval() {
        return Err(Error::Domain(format!("grouping {grouping} is not an interval partition")));
    }
    let one = Partition::one(n);
    let mut total = O::Scalar::zero();
    for pi in PartitionIter::with_limit(n, Family::Interval, MAX_WORD)? {
        if join_partitions(&pi, grouping)? == one {
            total += calc.cumulant_partition(args, &pi, CumulantKind::Boolean)?;
        }
    }
    Ok(total)
}

/// Summation route for `φ(X_1 Y_1 ⋯ X_n Y_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixedPath {
    /// Outer block chosen by the positions `0 = j_0 < ⋯ < j_{k+1} = n`.
    OuterBlock,
    /// The same sum indexed by gap lengths counted back from `Y_n`.
    Reformulated,
    /// Direct evaluation in the free product.
    Direct,
}

type Joint<'j, A, B, F> = dyn MomentOracle<Arg = Tagged<A, B>, Scalar = F> + 'j;

fn alt_word<A: Clone, B: Clone>(xs: &[A], ys: &[B], x_first: bool) -> Vec<Tagged<A, B>> {
    let mut w = Vec::with_capacity(xs.len() + ys.len());
    let len = xs.len() + ys.len();
    let (mut i, mut j) = (0, 0);
    for p in 0..len {
        if (p % 2 == 0) == x_first {
            w.push(Tagged::Left(xs[i].clone()));
            i += 1;
        } else {
            w.push(Tagged::Right(ys[j].clone()));
            j += 1;
        }
    }
    w
}

/// `β(X_a, Y_a, …, Y_{b-1}, X_b)` with 1-based inclusive `a..=b`.
fn beta_xyx<A: Clone + Ord + Debug, B: Clone + Ord + Debug, F: Scalar>(
    calc: &CumulantCalculator<&Joint<'_, A, B, F>>,
    xs: &[A],
    ys: &[B],
    a: usize,
    b: usize,
) -> Result<F> {
    let w = alt_word(&xs[a - 1..b], &ys[a - 1..b - 1], true);
    calc.cumulant(&w, CumulantKind::Boolean)
}

/// `φ(X_1 Y_1 ⋯ X_n Y_n)` for free families `{X_i}`, `{Y_i}` (`n = xs.len()`).
pub fn mixed_moment_boolean<A, B, F>(joint: &Joint<'_, A, B, F>, xs: &[A], ys: &[B], path: MixedPath) -> Result<F>
where
    A: Clone + Ord + Debug,
    B: Clone + Ord + Debug,
    F: Scalar,
{
    let n = xs.len();
    if n == 0 || ys.len() != n {
        return Err(Error::Dimension(format!("{} X's and {} Y's", xs.len(), ys.len())));
    }
    if 2 * n > MAX_WORD {
        return Err(Error::SizeLimit { what: "mixed moment length", got: 2 * n, limit: MAX_WORD });
    }
    let calc = CumulantCalculator::new(joint);
    let ymom = |idx: &[usize]| -> Result<F> {
        let w: Vec<Tagged<A, B>> = idx.iter().map(|&i| Tagged::Right(ys[i - 1].clone())).collect();
        calc.moment(&w)
    };
    match path {
        MixedPath::Direct => calc.moment(&alt_word(xs, ys, true)),
        MixedPath::OuterBlock => {
            let mut total = F::zero();
            // Interior cut points j_1 < ⋯ < j_k taken from 1..n-1.
            for mask in 0u64..(1u64 << (n - 1)) {
                let mut js = alloc::vec![0usize];
                js.extend((1..n).filter(|j| mask >> (j - 1) & 1 == 1));
                js.push(n);
                let mut term = ymom(&js[1..])?;
                if term.is_zero() {
                    continue;
                }
                for l in 0..js.len() - 1 {
                    term = term * beta_xyx(&calc, xs, ys, js[l] + 1, js[l + 1])?;
                }
                total += term;
            }
            Ok(total)
        }
        MixedPath::Reformulated => {
            let mut total = F::zero();
            for k in 1..=n {
                for gaps in compositions(n - k, k) {
                    // Outer Y's: Y_n, then Y_{n - i_1 - 1}, … counted backwards.
                    let mut outer = Vec::with_capacity(k);
                    let mut used = 0usize;
                    for (j, _) in gaps.iter().enumerate().take(k) {
                        outer.push(n - used - j);
                        used += gaps[j];
                    }
                    outer.reverse();
                    let mut term = ymom(&outer)?;
                    if term.is_zero() {
                        continue;
                    }
                    let mut used = 0usize;
                    for (j, g) in gaps.iter().enumerate() {
                        let hi = n - used - j;
                        used += g;
                        let lo = n - used - j;
                        term = term * beta_xyx(&calc, xs, ys, lo, hi)?;
                    }
                    total += term;
                }
            }
            Ok(total)
        }
    }
}

/// All `k`-tuples of nonnegative integers summing to `total`.
pub fn compositions(total: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(total: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            cur.push(total);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for first in 0..=total {
            cur.push(first);
            rec(total - first, k - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(total, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Both sides of the odd alternating Boolean cumulant identity for free
/// families: `β_{2n+1}(X_1, Y_1, …, Y_n, X_{n+1})` computed directly, and
/// the sum over `1 = j_1 < ⋯ < j_k = n+1` of
/// `β_k(X_{j_1}, …, X_{j_k}) Π_ℓ β(Y_{j_ℓ}, X_{j_ℓ+1}, …, X_{j_{ℓ+1}-1}, Y_{j_{ℓ+1}-1})`.
pub fn odd_boolean_identity<A, B, F>(joint: &Joint<'_, A, B, F>, xs: &[A], ys: &[B]) -> Result<(F, F)>
where
    A: Clone + Ord + Debug,
    B: Clone + Ord + Debug,
    F: Scalar,
{
    let n = ys.len();
    if n == 0 || xs.len() != n + 1 {
        return Err(Error::Dimension(format!("{} X's and {} Y's", xs.len(), ys.len())));
    }
    if 2 * n + 1 > MAX_WORD {
        return Err(Error::SizeLimit { what: "odd cumulant length", got: 2 * n + 1, limit: MAX_WORD });
    }
    let calc = CumulantCalculator::new(joint);
    let left = calc.cumulant(&alt_word(xs, ys, true), CumulantKind::Boolean)?;
    let mut right = F::zero();
    // Interior indices from 2..=n, endpoints 1 and n+1 fixed.
    for mask in 0u64..(1u64 << (n - 1)) {
        let mut js = alloc::vec![1usize];
        js.extend((2..=n).filter(|j| mask >> (j - 2) & 1 == 1));
        js.push(n + 1);
        let xw: Vec<Tagged<A, B>> = js.iter().map(|&j| Tagged::Left(xs[j - 1].clone())).collect();
        let mut term = calc.cumulant(&xw, CumulantKind::Boolean)?;
        if term.is_zero() {
            continue;
        }
        for l in 0..js.len() - 1 {
            let (a, b) = (js[l], js[l + 1]);
            // Y_a, X_{a+1}, …, X_{b-1}, Y_{b-1}.
            let w = alt_word(&xs[a..b - 1], &ys[a - 1..b - 1], false);
            term = term * calc.cumulant(&w, CumulantKind::Boolean)?;
        }
        right += term;
    }
    Ok((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    /// φ(word) read from a fixed table of univariate moments (a commutative
    /// one-letter algebra).
    struct Univariate(Vec<Rational>);

    impl MomentOracle for Univariate {
        type Arg = u8;
        type Scalar = Rational;
        fn moment(&self, word: &[u8]) -> Result<Rational> {
            self.0.get(word.len()).cloned().ok_or(Error::Capability("moment order".into()))
        }
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_frac(n, d)
    }

    #[test]
    fn low_order_examples() {
        let m = Univariate(alloc::vec![q(1, 1), q(2, 1), q(7, 1), q(11, 1), q(5, 1)]);
        let c = CumulantCalculator::new(&m);
        assert_eq!(c.cumulant(&[0], CumulantKind::Free).unwrap(), q(2, 1));
        assert_eq!(c.cumulant(&[0], CumulantKind::Boolean).unwrap(), q(2, 1));
        assert_eq!(c.cumulant(&[0, 0], CumulantKind::Free).unwrap(), q(3, 1));
        assert_eq!(c.cumulant(&[0, 0], CumulantKind::Boolean).unwrap(), q(3, 1));
        // β3 = m3 - 2 β1 β2 - β1^3 from the four interval partitions of 3.
        assert_eq!(c.cumulant(&[0, 0, 0], CumulantKind::Boolean).unwrap(), q(11 - 2 * 2 * 3 - 8, 1));
        // Beyond the table: the offending word is reported.
        match c.cumulant(&[0, 0, 0, 0, 0], CumulantKind::Free) {
            Err(Error::Oracle { word, .. }) => assert!(word.contains('0')),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn table_lattice_sums() {
        let mut t = CumulantTable::new(CumulantKind::Boolean);
        t.entries.insert(alloc::vec![0u8], q(2, 1));
        t.entries.insert(alloc::vec![0u8, 0], q(3, 1));
        t.entries.insert(alloc::vec![0u8, 0, 0], q(5, 1));
        // m3 = β3 + 2 β1 β2 + β1^3.
        assert_eq!(moments_from_cumulants(&t, &[0, 0, 0]).unwrap(), q(5 + 12 + 8, 1));
        let mut f = t.clone();
        f.kind = CumulantKind::Free;
        assert_eq!(moments_from_cumulants(&f, &[0, 0]).unwrap(), q(3 + 4, 1));
        t.entries.remove(&alloc::vec![0u8, 0]);
        assert!(matches!(moments_from_cumulants(&t, &[0, 0, 0]), Err(Error::IncompleteTable(_))));
    }

    #[test]
    fn compositions_count() {
        // C(total + k - 1, k - 1).
        assert_eq!(compositions(3, 3).len(), 10);
        assert_eq!(compositions(0, 2), alloc::vec![alloc::vec![0, 0]]);
    }

    #[test]
    fn min_rotation_picks_smallest() {
        assert_eq!(min_rotation(&[2, 1, 3, 1]), alloc::vec![1, 2, 1, 3]);
    }
}
