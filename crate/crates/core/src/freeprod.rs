//! Joint moments of two free families.
//!
//! `φ(w)` for a word mixing arguments of two free algebras is the sum over
//! non-crossing partitions with tag-monochromatic blocks of products of
//! marginal free cumulants. [`FreeProduct`] evaluates it by splitting on the
//! block of the first letter; [`FreeProduct::moment_by_enumeration`] and
//! [`FreeProduct::moment_by_centering`] are independent slower routes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt::{self, Debug};

use crate::cumulants::{min_rotation, CumulantCalculator, CumulantKind, MomentOracle, MAX_WORD};
use crate::distributions::{EvalMode, LawOracle, SpectralDistribution};
use crate::error::{Error, Result};
use crate::func::FnDesc;
use crate::partitions::{Family, PartitionIter};
use crate::scalar::Scalar;

/// An argument of the left or right algebra.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tagged<A, B> {
    Left(A),
    Right(B),
}

impl<A, B> Tagged<A, B> {
    pub fn tag(&self) -> Tag {
        match self {
            Tagged::Left(_) => Tag::Left,
            Tagged::Right(_) => Tag::Right,
        }
    }
}

/// Which free generator a letter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    Left,
    Right,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::Left => "U",
            Tag::Right => "V",
        })
    }
}

/// `φ` on words in two free families with given marginals.
pub struct FreeProduct<L: MomentOracle, R: MomentOracle<Scalar = L::Scalar>> {
    left: CumulantCalculator<L>,
    right: CumulantCalculator<R>,
    memo: RefCell<BTreeMap<Vec<Tagged<L::Arg, R::Arg>>, L::Scalar>>,
}

type Word<L, R> = Vec<Tagged<<L as MomentOracle>::Arg, <R as MomentOracle>::Arg>>;

impl<L: MomentOracle, R: MomentOracle<Scalar = L::Scalar>> FreeProduct<L, R> {
    pub fn new(left: L, right: R) -> Self {
        FreeProduct {
            left: CumulantCalculator::new(left),
            right: CumulantCalculator::new(right),
            memo: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn left(&self) -> &L {
        self.left.oracle()
    }

    pub fn right(&self) -> &R {
        self.right.oracle()
    }

    fn fuse_pair(&self, a: &Tagged<L::Arg, R::Arg>, b: &Tagged<L::Arg, R::Arg>) -> Option<Tagged<L::Arg, R::Arg>> {
        match (a, b) {
            (Tagged::Left(x), Tagged::Left(y)) => self.left.oracle().fuse(x, y).map(Tagged::Left),
            (Tagged::Right(x), Tagged::Right(y)) => self.right.oracle().fuse(x, y).map(Tagged::Right),
            _ => None,
        }
    }

    /// Merges neighbours with equal tags where the marginal can multiply
    /// them; wraps around the ends too when `φ` is tracial.
    pub fn fuse_word(&self, word: &[Tagged<L::Arg, R::Arg>]) -> Word<L, R> {
        let mut out: Word<L, R> = Vec::with_capacity(word.len());
        for a in word {
            if let Some(last) = out.last() {
                if let Some(f) = self.fuse_pair(last, a) {
                    *out.last_mut().unwrap() = f;
                    continue;
                }
            }
            out.push(a.clone());
        }
        if self.is_tracial() {
            while out.len() > 1 {
                let f = self.fuse_pair(out.last().unwrap(), &out[0]);
                match f {
                    Some(f) => {
                        out.pop();
                        out[0] = f;
                    }
                    None => break,
                }
            }
        }
        out
    }

    fn single_tag(&self, word: &[Tagged<L::Arg, R::Arg>]) -> Option<Result<L::Scalar>> {
        let first = word.first()?.tag();
        if word.iter().any(|a| a.tag() != first) {
            return None;
        }
        Some(match first {
            Tag::Left => {
                let w: Vec<L::Arg> = word.iter().map(|a| left_arg(a).clone()).collect();
                self.left.moment(&w)
            }
            Tag::Right => {
                let w: Vec<R::Arg> = word.iter().map(|a| right_arg(a).clone()).collect();
                self.right.moment(&w)
            }
        })
    }

    fn marginal_cumulant(&self, block: &[&Tagged<L::Arg, R::Arg>]) -> Result<L::Scalar> {
        match block[0].tag() {
            Tag::Left => {
                let w: Vec<L::Arg> = block.iter().map(|a| left_arg(a).clone()).collect();
                self.left.cumulant(&w, CumulantKind::Free)
            }
            Tag::Right => {
                let w: Vec<R::Arg> = block.iter().map(|a| right_arg(a).clone()).collect();
                self.right.cumulant(&w, CumulantKind::Free)
            }
        }
    }

    fn eval(&self, word: &[Tagged<L::Arg, R::Arg>]) -> Result<L::Scalar> {
        let word = self.fuse_word(word);
        if word.is_empty() {
            return Ok(L::Scalar::one());
        }
        if word.len() > MAX_WORD {
            return Err(Error::SizeLimit { what: "fused word length", got: word.len(), limit: MAX_WORD });
        }
        if let Some(v) = self.single_tag(&word) {
            return v;
        }
        let key = if self.is_tracial() { min_rotation(&word) } else { word.clone() };
        if let Some(v) = self.memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        let word = key;
        let n = word.len();
        let t0 = word[0].tag();
        let same: Vec<usize> = (1..n).filter(|&i| word[i].tag() == t0).collect();
        let mut acc = L::Scalar::zero();
        for mask in 0u64..(1u64 << same.len()) {
            let mut pos = Vec::with_capacity(same.len() + 1);
            pos.push(0usize);
            pos.extend(same.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i));
            let mut term = L::Scalar::one();
            for (k, &p) in pos.iter().enumerate() {
                let end = pos.get(k + 1).copied().unwrap_or(n);
                if end > p + 1 {
                    let g = self.eval(&word[p + 1..end])?;
                    if g.is_zero() {
                        term = L::Scalar::zero();
                        break;
                    }
                    term = term * g;
                }
            }
            if term.is_zero() {
                continue;
            }
            let block: Vec<&Tagged<L::Arg, R::Arg>> = pos.iter().map(|&i| &word[i]).collect();
            acc += self.marginal_cumulant(&block)? * term;
        }
        self.memo.borrow_mut().insert(word, acc.clone());
        Ok(acc)
    }

    /// Sum over all tag-monochromatic `π ∈ NC(n)`, without fusion or memo.
    pub fn moment_by_enumeration(&self, word: &[Tagged<L::Arg, R::Arg>]) -> Result<L::Scalar> {
        let n = word.len();
        if n > 10 {
            return Err(Error::SizeLimit { what: "enumeration word length", got: n, limit: 10 });
        }
        let mut acc = L::Scalar::zero();
        for pi in PartitionIter::new(n, Family::NonCrossing)? {
            let mut term = L::Scalar::one();
            let mut mono = true;
            for b in pi.blocks() {
                let block: Vec<&Tagged<L::Arg, R::Arg>> = b.iter().map(|&i| &word[i - 1]).collect();
                if block.iter().any(|a| a.tag() != block[0].tag()) {
                    mono = false;
                    break;
                }
                term = term * self.marginal_cumulant(&block)?;
            }
            if mono {
                acc += term;
            }
        }
        Ok(acc)
    }

    /// Evaluation from marginal moments alone, by expanding
    /// `φ(å_1 ⋯ å_k) = 0` for alternating centred runs `å_i = a_i - φ(a_i)`.
    pub fn moment_by_centering(&self, word: &[Tagged<L::Arg, R::Arg>]) -> Result<L::Scalar> {
        let mut memo = BTreeMap::new();
        self.centering(word, &mut memo)
    }

    fn centering(&self, word: &[Tagged<L::Arg, R::Arg>], memo: &mut BTreeMap<Word<L, R>, L::Scalar>) -> Result<L::Scalar> {
        let mut runs: Vec<&[Tagged<L::Arg, R::Arg>]> = Vec::new();
        let mut start = 0;
        for i in 1..=word.len() {
            if i == word.len() || word[i].tag() != word[start].tag() {
                runs.push(&word[start..i]);
                start = i;
            }
        }
        if runs.len() <= 1 {
            return match self.single_tag(word) {
                Some(v) => v,
                None => Ok(L::Scalar::one()),
            };
        }
        if let Some(v) = memo.get(word) {
            return Ok(v.clone());
        }
        let k = runs.len();
        if k > 16 {
            return Err(Error::SizeLimit { what: "alternating runs", got: k, limit: 16 });
        }
        let mut means = Vec::with_capacity(k);
        for r in &runs {
            means.push(self.single_tag(r).unwrap()?);
        }
        // 0 = Σ_S Π_{i∉S} (-φ(a_i)) φ(a_S); solve for S = all.
        let full = (1u32 << k) - 1;
        let mut acc = L::Scalar::zero();
        for mask in 0..full {
            let mut coef = L::Scalar::one();
            let mut sub: Word<L, R> = Vec::new();
            for (i, r) in runs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    sub.extend_from_slice(r);
                } else {
                    coef = coef * &(-means[i].clone());
                }
            }
            if coef.is_zero() {
                continue;
            }
            acc -= coef * self.centering(&sub, memo)?;
        }
        memo.insert(word.to_vec(), acc.clone());
        Ok(acc)
    }
}

fn left_arg<A, B>(a: &Tagged<A, B>) -> &A {
    match a {
        Tagged::Left(x) => x,
        Tagged::Right(_) => unreachable!("tag checked by caller"),
    }
}

fn right_arg<A, B>(a: &Tagged<A, B>) -> &B {
    match a {
        Tagged::Right(x) => x,
        Tagged::Left(_) => unreachable!("tag checked by caller"),
    }
}

impl<L: MomentOracle, R: MomentOracle<Scalar = L::Scalar>> MomentOracle for FreeProduct<L, R> {
    type Arg = Tagged<L::Arg, R::Arg>;
    type Scalar = L::Scalar;

    fn moment(&self, word: &[Self::Arg]) -> Result<L::Scalar> {
        self.eval(word)
    }

    fn is_tracial(&self) -> bool {
        self.left.oracle().is_tracial() && self.right.oracle().is_tracial()
    }

    fn fuse(&self, a: &Self::Arg, b: &Self::Arg) -> Option<Self::Arg> {
        self.fuse_pair(a, b)
    }
}

/// A letter of a two-law word: a function of one generator.
pub type Letter<F> = Tagged<FnDesc<F>, FnDesc<F>>;

/// The free product of two laws given by their distributions.
pub type LawProduct<'a, F> = FreeProduct<LawOracle<'a, F>, LawOracle<'a, F>>;

impl<'a, F: Scalar> LawProduct<'a, F> {
    pub fn from_laws(left: &'a SpectralDistribution<F>, right: &'a SpectralDistribution<F>, mode: EvalMode<F>) -> Self {
        FreeProduct::new(LawOracle::new(left, mode.clone()), LawOracle::new(right, mode))
    }

    /// Tail bounds accumulated by both marginals.
    pub fn tail_total(&self) -> F {
        self.left().tail_total() + self.right().tail_total()
    }

    /// `φ` of a word that may contain half powers.
    pub fn eval_half(&self, word: &[HalfLetter<F>]) -> Result<F> {
        self.moment(&normalize_half(word)?)
    }
}

/// `f(T)·T^{half/2}` for a generator `T`; odd `half` is a square root.
#[derive(Clone, PartialEq)]
pub struct HalfLetter<F> {
    pub tag: Tag,
    pub f: FnDesc<F>,
    pub half: i32,
}

impl<F: Scalar> Debug for HalfLetter<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{:?}]^{}/2", self.tag, self.f, self.half)
    }
}

impl<F: Scalar> HalfLetter<F> {
    pub fn new(tag: Tag, f: FnDesc<F>) -> Self {
        HalfLetter { tag, f, half: 0 }
    }

    /// `T^{1/2}`.
    pub fn sqrt(tag: Tag) -> Self {
        HalfLetter { tag, f: FnDesc::one(), half: 1 }
    }

    /// `T^{-1/2}`.
    pub fn inv_sqrt(tag: Tag) -> Self {
        HalfLetter { tag, f: FnDesc::one(), half: -1 }
    }

    /// `T^{h/2}`.
    pub fn half_power(tag: Tag, h: i32) -> Self {
        HalfLetter { tag, f: FnDesc::one(), half: h }
    }

    pub fn power(tag: Tag, p: i32) -> Self {
        HalfLetter { tag, f: FnDesc::monomial(p), half: 0 }
    }

    fn merge(&self, other: &Self) -> Self {
        HalfLetter { tag: self.tag, f: self.f.mul(&other.f), half: self.half + other.half }
    }

    fn into_letter(self) -> Result<Letter<F>> {
        if self.half.rem_euclid(2) == 1 {
            return Err(Error::Precondition(format!(
                "half power of {} cannot be eliminated by cyclic rotation",
                self.tag
            )));
        }
        let f = self.f.mul(&FnDesc::monomial(self.half / 2));
        Ok(match self.tag {
            Tag::Left => Tagged::Left(f),
            Tag::Right => Tagged::Right(f),
        })
    }
}

/// Merges neighbouring letters of one generator, cyclically, so that
/// `φ(T^{1/2} W T^{1/2}) = φ(W T)`; fails if a half power survives.
pub fn normalize_half<F: Scalar>(word: &[HalfLetter<F>]) -> Result<Vec<Letter<F>>> {
    let mut out: Vec<HalfLetter<F>> = Vec::with_capacity(word.len());
    for a in word {
        match out.last_mut() {
            Some(last) if last.tag == a.tag => *last = last.merge(a),
            _ => out.push(a.clone()),
        }
    }
    while out.len() > 1 && out[0].tag == out[out.len() - 1].tag {
        let last = out.pop().unwrap();
        out[0] = last.merge(&out[0]);
    }
    out.into_iter().map(HalfLetter::into_letter).collect()
}

/// Parses `U^2 V U V^3`, `V^1/2`, `V^-1`, `inv1m(U)`, `psi(V)^2`.
pub fn parse_word<F: Scalar>(s: &str) -> Result<Vec<HalfLetter<F>>> {
    let mut out = Vec::new();
    for tok in s.split_whitespace() {
        out.push(parse_letter(tok)?);
    }
    if out.is_empty() {
        return Err(Error::Parse(format!("empty word: {s:?}")));
    }
    Ok(out)
}

fn parse_tag(s: &str) -> Result<Tag> {
    match s {
        "U" | "u" | "L" => Ok(Tag::Left),
        "V" | "v" | "R" => Ok(Tag::Right),
        _ => Err(Error::Parse(format!("unknown generator {s:?}"))),
    }
}

fn parse_letter<F: Scalar>(tok: &str) -> Result<HalfLetter<F>> {
    let (base, exp) = match tok.split_once('^') {
        Some((b, e)) => (b, Some(e)),
        None => (tok, None),
    };
    let (tag, f) = if let Some(inner) = base.strip_suffix(')') {
        let (name, arg) = inner
            .split_once('(')
            .ok_or_else(|| Error::Parse(format!("malformed letter {tok:?}")))?;
        let tag = parse_tag(arg)?;
        let f = match name {
            "inv1m" => FnDesc::inv_one_minus(),
            "psi" => FnDesc::psi(),
            _ => return Err(Error::Parse(format!("unknown function {name:?}"))),
        };
        (tag, Some(f))
    } else {
        (parse_tag(base)?, None)
    };
    let bad = || Error::Parse(format!("bad exponent in {tok:?}"));
    match (f, exp) {
        (Some(f), None) => Ok(HalfLetter::new(tag, f)),
        (Some(f), Some(e)) => {
            let p: u32 = e.parse().map_err(|_| bad())?;
            Ok(HalfLetter::new(tag, f.pow(p)))
        }
        (None, None) => Ok(HalfLetter::power(tag, 1)),
        (None, Some(e)) => {
            if let Some((num, den)) = e.split_once('/') {
                let num: i32 = num.parse().map_err(|_| bad())?;
                if den != "2" {
                    return Err(bad());
                }
                Ok(HalfLetter { tag, f: FnDesc::monomial(num.div_euclid(2)), half: num.rem_euclid(2) })
            } else {
                let p: i32 = e.parse().map_err(|_| bad())?;
                Ok(HalfLetter::power(tag, p))
            }
        }
    }
}

/// Renders a word of two-law letters.
pub fn render_word<F: Scalar>(word: &[Letter<F>]) -> String {
    let mut s = String::new();
    for (i, l) in word.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        match l {
            Tagged::Left(f) => s.push_str(&format!("[{}]", f.render("U"))),
            Tagged::Right(f) => s.push_str(&format!("[{}]", f.render("V"))),
        }
    }
    s
}

/// One mixed cumulant in a [`FreenessReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct MixedCumulant<A, B, F> {
    pub word: Vec<Tagged<A, B>>,
    pub value: F,
}

/// Every mixed free cumulant up to some order, with a verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct FreenessReport<A, B, F> {
    pub rows: Vec<MixedCumulant<A, B, F>>,
    pub max_abs: F,
    pub free: bool,
}

/// Mixed free cumulants of all words over `lefts ∪ rights` with both tags
/// present, lengths `2..=max_order`. `tol = None` demands exact zeros.
pub fn freeness_report<A, B, F, O>(
    oracle: O,
    lefts: &[A],
    rights: &[B],
    max_order: usize,
    tol: Option<&F>,
) -> Result<FreenessReport<A, B, F>>
where
    A: Clone + Ord + Debug,
    B: Clone + Ord + Debug,
    F: Scalar,
    O: MomentOracle<Arg = Tagged<A, B>, Scalar = F>,
{
    let mut alphabet: Vec<Tagged<A, B>> = lefts.iter().cloned().map(Tagged::Left).collect();
    alphabet.extend(rights.iter().cloned().map(Tagged::Right));
    let calc = CumulantCalculator::new(oracle);
    let mut rows = Vec::new();
    let mut max_abs = F::zero();
    let a = alphabet.len();
    for n in 2..=max_order {
        let total = a.checked_pow(n as u32).ok_or(Error::SizeLimit { what: "report words", got: usize::MAX, limit: 1 << 20 })?;
        if total > 1 << 20 {
            return Err(Error::SizeLimit { what: "report words", got: total, limit: 1 << 20 });
        }
        for idx in 0..total {
            let mut w = Vec::with_capacity(n);
            let mut r = idx;
            for _ in 0..n {
                w.push(alphabet[r % a].clone());
                r /= a;
            }
            if w.iter().all(|x| x.tag() == w[0].tag()) {
                continue;
            }
            let v = calc.cumulant(&w, CumulantKind::Free)?;
            let av = v.abs();
            if av > max_abs {
                max_abs = av;
            }
            rows.push(MixedCumulant { word: w, value: v });
        }
    }
    let free = match tol {
        None => max_abs.is_zero(),
        Some(t) => max_abs <= *t,
    };
    Ok(FreenessReport { rows, max_abs, free })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_frac(n, d)
    }

    fn laws() -> (SpectralDistribution<Rational>, SpectralDistribution<Rational>) {
        (
            SpectralDistribution::free_binomial(q(1, 1), q(2, 1), 12).unwrap(),
            SpectralDistribution::free_poisson(q(1, 1), q(3, 1), 12).unwrap(),
        )
    }

    fn u(p: i32) -> Letter<Rational> {
        Tagged::Left(FnDesc::monomial(p))
    }
    fn v(p: i32) -> Letter<Rational> {
        Tagged::Right(FnDesc::monomial(p))
    }

    #[test]
    fn uvuv_formula() {
        let (a, b) = laws();
        let fp = LawProduct::from_laws(&a, &b, EvalMode::Exact);
        let (u1, u2) = (a.moments()[1].clone(), a.moments()[2].clone());
        let (v1, v2) = (b.moments()[1].clone(), b.moments()[2].clone());
        let want = u2.clone() * &v1 * &v1 + u1.clone() * &u1 * &v2 - u1.clone() * &u1 * &v1 * &v1;
        let w = [u(1), v(1), u(1), v(1)];
        assert_eq!(fp.moment(&w).unwrap(), want);
        assert_eq!(fp.moment_by_enumeration(&w).unwrap(), want);
        assert_eq!(fp.moment_by_centering(&w).unwrap(), want);
        assert_eq!(fp.moment(&[u(1), v(1)]).unwrap(), u1 * v1);
    }

    #[test]
    fn half_powers_rotate_away() {
        let (a, b) = laws();
        let fp = LawProduct::from_laws(&a, &b, EvalMode::Exact);
        // tr((V^{1/2} U V^{1/2})^2) = tr(U V U V).
        let w = parse_word::<Rational>("V^1/2 U V U V^1/2").unwrap();
        let direct = fp.moment(&[u(1), v(1), u(1), v(1)]).unwrap();
        assert_eq!(fp.eval_half(&w).unwrap(), direct);
        let bad = parse_word::<Rational>("V^1/2 U").unwrap();
        assert!(matches!(fp.eval_half(&bad), Err(Error::Precondition(_))));
    }

    #[test]
    fn parser_forms() {
        let w = parse_word::<Rational>("U^2 V inv1m(U) psi(V)^2 V^-1 V^3/2 V^-1/2").unwrap();
        assert_eq!(w.len(), 7);
        assert_eq!(w[5].half, 1);
        assert_eq!(w[5].f, FnDesc::monomial(1));
        assert_eq!(w[6].half, 1);
        assert_eq!(w[6].f, FnDesc::monomial(-1));
        assert!(parse_word::<Rational>("W^2").is_err());
        assert!(parse_word::<Rational>("U^x").is_err());
    }

    #[test]
    fn self_report_is_free() {
        let (a, b) = laws();
        let fp = LawProduct::from_laws(&a, &b, EvalMode::Exact);
        let rep = freeness_report(&fp, &[FnDesc::identity()], &[FnDesc::identity(), FnDesc::monomial(2)], 5, None).unwrap();
        assert!(rep.free);
        assert!(!rep.rows.is_empty());
    }
}
