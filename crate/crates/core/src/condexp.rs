//! Conditional expectations onto the algebra of `V` for free `U`, `V`.
//!
//! `E_V[f(U) V (UV)^{n-1} g(U)]`, summed against `z^n`, equals
//! `ω₂ η^{f,g}(ω₂) + z η^f(ω₂) η^g(ω₂) V (1 + Ψ_V(ω₁))`. Elements of the
//! `V`-algebra are compared through their pairings `m ↦ φ(· V^m)`.
//!
//! The operator `φ_D(H, f) = Σ_k h_k φ(𝐃^k f(U)) D^k` uses the zero
//! derivative `D z^k = z^{k-1}`. For `f = ψ` it involves `ψ(D)`, which
//! needs the value at 1 of the series it acts on, so series here carry a
//! few Taylor coefficients at `z = 1` alongside their coefficients at 0.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cumulants::{CumulantCalculator, CumulantKind, MomentOracle};
use crate::distributions::{LawOracle, SpectralDistribution, Transform};
use crate::error::{Error, Result};
use crate::freeprod::{LawProduct, Letter, Tagged};
use crate::func::{FnDesc, Term};
use crate::scalar::{binomial, binomial_row, Scalar};
use crate::series::TruncatedSeries;
use crate::subordination::{omega_series_with, Route, SubordinationPair};

/// Largest polynomial degree accepted for `f`, `g`.
pub const MAX_POLY_DEGREE: usize = 16;

/// A function analytic on the unit disc: a polynomial or `ψ(x) = x/(1-x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Analytic<F> {
    /// Coefficients from degree 0 up.
    Poly(Vec<F>),
    Psi,
}

impl<F: Scalar> Analytic<F> {
    pub fn constant(c: F) -> Self {
        Analytic::Poly(vec![c])
    }

    pub fn identity() -> Self {
        Analytic::monomial(1)
    }

    pub fn monomial(r: usize) -> Self {
        let mut c = vec![F::zero(); r + 1];
        c[r] = F::one();
        Analytic::Poly(c)
    }

    pub fn to_fn(&self) -> FnDesc<F> {
        match self {
            Analytic::Poly(c) => FnDesc::poly(c),
            Analytic::Psi => FnDesc::psi(),
        }
    }

    fn at_zero(&self) -> F {
        match self {
            Analytic::Poly(c) => c.first().cloned().unwrap_or_else(F::zero),
            Analytic::Psi => F::zero(),
        }
    }

    /// Orders lost by `φ_D(ψ, f)`, which applies `D^k` up to `k = deg f`.
    fn shift(&self) -> usize {
        match self {
            Analytic::Poly(c) => c.len().saturating_sub(1),
            Analytic::Psi => 0,
        }
    }

    fn check(&self) -> Result<()> {
        if let Analytic::Poly(c) = self {
            if c.len() > MAX_POLY_DEGREE + 1 {
                return Err(Error::SizeLimit { what: "polynomial degree", got: c.len() - 1, limit: MAX_POLY_DEGREE });
            }
        }
        Ok(())
    }

    fn is_psi(&self) -> bool {
        matches!(self, Analytic::Psi)
    }
}

/// A truncated series at 0 plus its leading Taylor coefficients at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchoredSeries<F> {
    pub at_zero: TruncatedSeries<F>,
    /// `h^{(i)}(1)/i!` for `i < at_one.len()`.
    pub at_one: Vec<F>,
}

impl<F: Scalar> AnchoredSeries<F> {
    pub fn new(at_zero: TruncatedSeries<F>, at_one: Vec<F>) -> Self {
        AnchoredSeries { at_zero, at_one }
    }

    fn zero_like(&self) -> Self {
        AnchoredSeries {
            at_zero: TruncatedSeries::zero(self.at_zero.order()),
            at_one: vec![F::zero(); self.at_one.len()],
        }
    }

    /// `D^k h = (h - Σ_{j<k} h_j z^j) / z^k`.
    pub fn zero_derivative(&self, k: usize) -> Result<Self> {
        if k > self.at_zero.order() {
            return Err(Error::Dimension(format!("D^{k} of a series of order {}", self.at_zero.order())));
        }
        let l = self.at_one.len();
        let mut c = self.at_one.clone();
        // Subtract the dropped polynomial, expanded around 1.
        for j in 0..k {
            let hj = self.at_zero.coeff(j);
            for (i, b) in binomial_row::<F>(j).into_iter().enumerate().take(l) {
                c[i] -= hj.clone() * b;
            }
        }
        // Multiply by z^{-k} = (1+t)^{-k}.
        let mut out = vec![F::zero(); l];
        for (i, ci) in c.iter().enumerate() {
            for (e, slot) in out.iter_mut().enumerate().skip(i) {
                let r = e - i;
                let mut w: F = if k == 0 { if r == 0 { F::one() } else { F::zero() } } else { binomial(k + r - 1, r) };
                if r % 2 == 1 {
                    w = -w;
                }
                *slot += w * ci;
            }
        }
        Ok(AnchoredSeries { at_zero: self.at_zero.zero_derivative(k), at_one: out })
    }

    /// `ψ(D) h = (h(z) - h(1)) / (z - 1)`.
    pub fn psi_of_d(&self) -> Result<Self> {
        let h1 = self
            .at_one
            .first()
            .ok_or_else(|| Error::Precondition("ψ(D) needs the value of its argument at 1".into()))?;
        Ok(AnchoredSeries { at_zero: self.at_zero.psi_of_d(h1), at_one: self.at_one[1..].to_vec() })
    }

    fn scale(&self, c: &F) -> Self {
        AnchoredSeries { at_zero: self.at_zero.scale(c), at_one: self.at_one.iter().map(|x| x.clone() * c).collect() }
    }

    fn add(&self, other: &Self) -> Self {
        let n = self.at_zero.order().min(other.at_zero.order());
        let l = self.at_one.len().min(other.at_one.len());
        let at_zero = TruncatedSeries::new(
            (0..=n).map(|k| self.at_zero.coeff(k).clone() + other.at_zero.coeff(k)).collect(),
        );
        let at_one = (0..l).map(|i| self.at_one[i].clone() + &other.at_one[i]).collect();
        AnchoredSeries { at_zero, at_one }
    }
}

/// `φ(𝐃^k f(U))`, where `𝐃^k` drops the first `k` Taylor coefficients.
pub fn shifted_expectation<F: Scalar>(f: &Analytic<F>, k: usize, u: &LawOracle<'_, F>) -> Result<F> {
    match f {
        Analytic::Poly(c) => {
            let mut acc = F::zero();
            for j in k..c.len() {
                if !c[j].is_zero() {
                    acc += c[j].clone() * u.moment_k(j - k)?;
                }
            }
            Ok(acc)
        }
        Analytic::Psi => {
            let alpha = u.expect(&FnDesc::psi())?;
            Ok(if k == 0 { alpha } else { alpha + F::one() })
        }
    }
}

/// `φ_D(H, f)` applied to `target`; `H` is a polynomial or `ψ`.
pub fn phi_d_apply<F: Scalar>(
    h: &Analytic<F>,
    f: &Analytic<F>,
    u: &LawOracle<'_, F>,
    target: &AnchoredSeries<F>,
) -> Result<AnchoredSeries<F>> {
    f.check()?;
    h.check()?;
    if let (Analytic::Psi, Analytic::Psi) = (h, f) {
        // 𝐃^k ψ = 1 + ψ for every k ≥ 1.
        let c = shifted_expectation(f, 1, u)?;
        return Ok(target.psi_of_d()?.scale(&c));
    }
    let ks: Vec<(usize, F)> = match (h, f) {
        (Analytic::Poly(hc), _) => hc.iter().cloned().enumerate().filter(|(_, x)| !x.is_zero()).collect(),
        (Analytic::Psi, Analytic::Poly(fc)) => (1..fc.len()).map(|k| (k, F::one())).collect(),
        (Analytic::Psi, Analytic::Psi) => unreachable!(),
    };
    let mut acc = target.zero_like();
    for (k, hk) in ks {
        let c = shifted_expectation(f, k, u)? * hk;
        if c.is_zero() {
            continue;
        }
        acc = acc.add(&target.zero_derivative(k)?.scale(&c));
    }
    Ok(acc)
}

/// `η_U` through `order` with `anchors` Taylor coefficients at 1, from
/// `M_U^{(i)}(1)/i! = φ(U^i (1-U)^{-(i+1)})`.
pub fn eta_anchored<F: Scalar>(u: &LawOracle<'_, F>, order: usize, anchors: usize) -> Result<AnchoredSeries<F>> {
    let law = u.law();
    let mut m = vec![F::zero()];
    for k in 1..=order {
        m.push(u.moment_k(k)?);
    }
    let ms = TruncatedSeries::new(m);
    let eta = ms.div(&ms.add_constant(&F::one()))?;
    let mut at_one = Vec::new();
    if anchors > 0 {
        let _ = law.support_hull()?;
        let mut mt = Vec::with_capacity(anchors);
        for i in 0..anchors {
            // M has no constant term, so the i = 0 coefficient is φ(ψ(U)).
            let t = Term { coef: F::one(), power: i.max(1) as i32, pole: i as u32 + 1 };
            mt.push(u.expect(&FnDesc::from_terms([t]))?);
        }
        let mt = TruncatedSeries::new(mt);
        at_one = mt.div(&mt.add_constant(&F::one()))?.into_coeffs();
    }
    Ok(AnchoredSeries { at_zero: eta, at_one })
}

/// How the `η`-series are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaPath {
    /// Mixed Boolean cumulants of `f(U), U, …, U, g(U)`.
    Definition,
    /// `φ_D` operators applied to `η_U`.
    ClosedForm,
}

fn boolean_word<F: Scalar>(u: &LawOracle<'_, F>, word: &[FnDesc<F>]) -> Result<F> {
    let calc = CumulantCalculator::new(u);
    calc.cumulant(word, CumulantKind::Boolean)
}

/// `η^{f,g}_U(z) = Σ_ℓ β_{ℓ+2}(f(U), U, …, U, g(U)) z^ℓ` through `order`.
pub fn eta_fg_series<F: Scalar>(
    f: &Analytic<F>,
    g: &Analytic<F>,
    u: &LawOracle<'_, F>,
    order: usize,
    path: EtaPath,
) -> Result<TruncatedSeries<F>> {
    match path {
        EtaPath::Definition => {
            let calc = CumulantCalculator::new(u);
            let mut c = Vec::with_capacity(order + 1);
            for l in 0..=order {
                let mut w = vec![f.to_fn()];
                w.extend(core::iter::repeat_n(FnDesc::identity(), l));
                w.push(g.to_fn());
                c.push(calc.cumulant(&w, CumulantKind::Boolean)?);
            }
            Ok(TruncatedSeries::new(c))
        }
        EtaPath::ClosedForm => {
            let anchors = f.is_psi() as usize + g.is_psi() as usize;
            let eta = eta_anchored(u, order + f.shift() + g.shift(), anchors)?;
            let inner = phi_d_apply(&Analytic::Psi, g, u, &eta)?;
            let out = phi_d_apply(&Analytic::Psi, f, u, &inner)?;
            Ok(out.at_zero.truncate(order))
        }
    }
}

/// `η^f_U(z) = Σ_ℓ β_{ℓ+1}(f(U), U, …, U) z^ℓ` through `order`.
///
/// The closed form is `z (φ_D(ψ,f) D η_U)(z) + (φ_D(ψ,f) η_U)(0) + f(0)`;
/// the last term is `β_1` of the constant part of `f`.
pub fn eta_f_series<F: Scalar>(
    f: &Analytic<F>,
    u: &LawOracle<'_, F>,
    order: usize,
    path: EtaPath,
) -> Result<TruncatedSeries<F>> {
    match path {
        EtaPath::Definition => {
            let calc = CumulantCalculator::new(u);
            let mut c = Vec::with_capacity(order + 1);
            for l in 0..=order {
                let mut w = vec![f.to_fn()];
                w.extend(core::iter::repeat_n(FnDesc::identity(), l));
                c.push(calc.cumulant(&w, CumulantKind::Boolean)?);
            }
            Ok(TruncatedSeries::new(c))
        }
        EtaPath::ClosedForm => {
            let anchors = f.is_psi() as usize;
            let eta = eta_anchored(u, order + f.shift() + 1, anchors)?;
            let at0 = phi_d_apply(&Analytic::Psi, f, u, &eta)?.at_zero.coeff(0).clone();
            let body = phi_d_apply(&Analytic::Psi, f, u, &eta.zero_derivative(1)?)?;
            let mut out = body.at_zero.truncate(order).mul_z();
            let c0 = out.coeff(0).clone() + at0 + f.at_zero();
            out.set_coeff(0, c0);
            Ok(out)
        }
    }
}

/// Both sides of `β_{r+1}(G, U, …, U, U^i) = Σ_{m=1}^{i} β_{r+m}(G, U, …, U) φ(U^{i-m})`,
/// with `r-1` copies of `U` before `U^i` on the left.
pub fn boolean_powers_identity<F: Scalar>(g: &FnDesc<F>, u: &LawOracle<'_, F>, r: usize, i: usize) -> Result<(F, F)> {
    if r == 0 || i == 0 {
        return Err(Error::Domain("r and i must be positive".into()));
    }
    let mut w = vec![g.clone()];
    w.extend(core::iter::repeat_n(FnDesc::identity(), r - 1));
    w.push(FnDesc::monomial(i as i32));
    let lhs = boolean_word(u, &w)?;
    let mut rhs = F::zero();
    for m in 1..=i {
        let mut w = vec![g.clone()];
        w.extend(core::iter::repeat_n(FnDesc::identity(), r + m - 1));
        rhs += boolean_word(u, &w)? * u.moment_k(i - m)?;
    }
    Ok((lhs, rhs))
}

/// `E_V[·]` seen through its pairings with powers of `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingFunction<F> {
    /// Coefficient of the identity.
    pub scalar: TruncatedSeries<F>,
    /// Coefficient of `V (1 + Ψ_V(ω₁))`.
    pub v_coefficient: TruncatedSeries<F>,
    pub omega1: TruncatedSeries<F>,
    /// `φ(V^k)` for `k ≤ order + m_max + 1`.
    v_moments: Vec<F>,
}

impl<F: Scalar> PairingFunction<F> {
    pub fn order(&self) -> usize {
        self.scalar.order()
    }

    /// Largest `m` the stored moments of `V` support.
    pub fn max_m(&self) -> usize {
        self.v_moments.len() - 2 - self.order()
    }

    /// `z ↦ φ(E_V[·] V^m)`.
    pub fn evaluator(&self, m: usize) -> Result<TruncatedSeries<F>> {
        let n = self.order();
        if m > self.max_m() {
            return Err(Error::Capability(format!("pairing with V^{m} beyond stored moments")));
        }
        // Σ_k φ(V^{k+m+1}) ω₁^k by Horner.
        let mut acc = TruncatedSeries::constant(self.v_moments[n + m + 1].clone(), n);
        for k in (0..n).rev() {
            acc = acc.mul(&self.omega1)?.add_constant(&self.v_moments[k + m + 1]);
        }
        let scalar = self.scalar.scale(&self.v_moments[m]);
        scalar.add(&self.v_coefficient.mul(&acc)?)
    }
}

fn assemble<F: Scalar>(
    scalar: TruncatedSeries<F>,
    v_coefficient: TruncatedSeries<F>,
    pair: &SubordinationPair<F>,
    v: &SpectralDistribution<F>,
    m_max: usize,
) -> Result<PairingFunction<F>> {
    let n = scalar.order();
    Ok(PairingFunction {
        scalar,
        v_coefficient,
        omega1: pair.omega1.clone(),
        v_moments: v.moments_extended(n + m_max + 1)?,
    })
}

/// Closed-form pairing of `Σ_n z^n E_V[f(U) V (UV)^{n-1} g(U)]` through `order`.
pub fn condexp_pairing<F: Scalar>(
    f: &Analytic<F>,
    g: &Analytic<F>,
    fp: &LawProduct<'_, F>,
    order: usize,
    m_max: usize,
) -> Result<PairingFunction<F>> {
    let u = fp.left();
    let pair = omega_series_with(fp, order, Route::BooleanSeries)?;
    let w2 = &pair.omega2;
    let efg = eta_fg_series(f, g, u, order, EtaPath::ClosedForm)?;
    let ef = eta_f_series(f, u, order, EtaPath::ClosedForm)?;
    let eg = eta_f_series(g, u, order, EtaPath::ClosedForm)?;
    let scalar = w2.mul(&efg.compose(w2)?)?;
    let v_coefficient = ef.compose(w2)?.mul(&eg.compose(w2)?)?.mul_z();
    assemble(scalar, v_coefficient, &pair, fp.right().law(), m_max)
}

/// `Σ_{n=1}^{order} z^n φ(f(U) V (UV)^{n-1} g(U) V^m)` straight from the joint oracle.
pub fn pairing_direct<F: Scalar>(
    f: &Analytic<F>,
    g: &Analytic<F>,
    fp: &LawProduct<'_, F>,
    order: usize,
    m: usize,
) -> Result<TruncatedSeries<F>> {
    let mut c = vec![F::zero()];
    for n in 1..=order {
        let mut w: Vec<Letter<F>> = vec![Tagged::Left(f.to_fn()), Tagged::Right(FnDesc::identity())];
        for _ in 1..n {
            w.push(Tagged::Left(FnDesc::identity()));
            w.push(Tagged::Right(FnDesc::identity()));
        }
        w.push(Tagged::Left(g.to_fn()));
        if m > 0 {
            w.push(Tagged::Right(FnDesc::monomial(m as i32)));
        }
        c.push(fp.moment(&w)?);
    }
    Ok(TruncatedSeries::new(c))
}

/// The series `A`, `B` of `E_V[(1-U)^{-1} U^{1/2} Ψ(z) U^{1/2} (1-U)^{-1}] = B + z A² V(1 + Ψ_V(ω₁))`,
/// where `Ψ(z) = Σ_{n≥1} z^n (U^{1/2} V U^{1/2})^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LukacsAB<F> {
    pub a: TruncatedSeries<F>,
    pub b: TruncatedSeries<F>,
    pub pairing: PairingFunction<F>,
    /// `α = φ(U(1-U)^{-1})`.
    pub alpha: F,
    /// Accumulated tail bound of the expansions used for the constants.
    pub tail_bound: F,
}

/// `A = φ((1-U)^{-1}) (η_U(ω₂) - η_U(1))/(ω₂ - 1)` and
/// `B = ω₂ φ((1-U)^{-1})² ((ψ(D)² η_U)(ω₂))`, with `η_U(1) = α/(1+α)` and
/// `η_U'(1) = M_U'(1)/(1+α)²`.
pub fn lukacs_ab<F: Scalar>(fp: &LawProduct<'_, F>, order: usize, m_max: usize) -> Result<LukacsAB<F>> {
    let u = fp.left();
    let (_, hi) = u.law().support_hull()?;
    if hi >= F::one() {
        return Err(Error::Capability(format!("support of U reaches {hi}; needs to stay below 1")));
    }
    let before = u.tail_total();
    let alpha = u.expect(&FnDesc::psi())?;
    let inv = u.expect(&FnDesc::inv_one_minus())?;
    let dm = u.expect(&FnDesc::from_terms([Term { coef: F::one(), power: 1, pole: 2 }]))?;
    let one_a = F::one() + &alpha;
    let eta1 = alpha.clone() / &one_a;
    let deta1 = dm / (one_a.clone() * &one_a);
    let eta = u.law().transform_series(Transform::Eta, order)?;
    let h = eta.psi_of_d(&eta1);
    let h2 = h.psi_of_d(&deta1);
    let pair = omega_series_with(fp, order, Route::BooleanSeries)?;
    let w2 = &pair.omega2;
    let a = h.compose(w2)?.scale(&inv);
    let b = w2.mul(&h2.compose(w2)?)?.scale(&(inv.clone() * &inv));
    let v_coefficient = a.mul(&a)?.mul_z();
    let pairing = assemble(b.clone(), v_coefficient, &pair, fp.right().law(), m_max)?;
    let tail_bound = u.tail_total() - before;
    Ok(LukacsAB { a, b, pairing, alpha, tail_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::EvalMode;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_frac(n, d)
    }

    fn u_law() -> SpectralDistribution<Rational> {
        SpectralDistribution::free_binomial(q(1, 1), q(2, 1), 16).unwrap()
    }

    #[test]
    fn closed_forms_for_identity() {
        let law = u_law();
        let u = LawOracle::new(&law, EvalMode::Exact);
        let eta = eta_anchored(&u, 12, 0).unwrap();
        let id = Analytic::identity();
        let d2 = eta.zero_derivative(2).unwrap().at_zero.truncate(8);
        assert_eq!(eta_fg_series(&id, &id, &u, 8, EtaPath::ClosedForm).unwrap(), d2);
        assert_eq!(eta_fg_series(&id, &id, &u, 8, EtaPath::Definition).unwrap(), d2);
        let d1 = eta.zero_derivative(1).unwrap().at_zero.truncate(8);
        assert_eq!(eta_f_series(&id, &u, 8, EtaPath::Definition).unwrap(), d1);
        assert_eq!(eta_f_series(&id, &u, 8, EtaPath::ClosedForm).unwrap(), d1);
    }

    #[test]
    fn psi_paths_agree_exactly() {
        let law = u_law();
        let u = LawOracle::new(&law, EvalMode::Exact);
        let psi = Analytic::Psi;
        let def = eta_f_series(&psi, &u, 5, EtaPath::Definition).unwrap();
        let closed = eta_f_series(&psi, &u, 5, EtaPath::ClosedForm).unwrap();
        assert_eq!(def, closed);
        assert_eq!(def.coeff(0), &q(1, 1));
        let def = eta_fg_series(&psi, &Analytic::monomial(2), &u, 4, EtaPath::Definition).unwrap();
        let closed = eta_fg_series(&psi, &Analytic::monomial(2), &u, 4, EtaPath::ClosedForm).unwrap();
        assert_eq!(def, closed);
        let def = eta_fg_series(&psi, &psi, &u, 4, EtaPath::Definition).unwrap();
        let closed = eta_fg_series(&psi, &psi, &u, 4, EtaPath::ClosedForm).unwrap();
        assert_eq!(def, closed);
    }

    #[test]
    fn constant_f() {
        let law = u_law();
        let u = LawOracle::new(&law, EvalMode::Exact);
        let c = Analytic::constant(q(3, 1));
        let s = eta_f_series(&c, &u, 4, EtaPath::ClosedForm).unwrap();
        assert_eq!(s, TruncatedSeries::constant(q(3, 1), 4));
        assert_eq!(s, eta_f_series(&c, &u, 4, EtaPath::Definition).unwrap());
        let z = eta_fg_series(&c, &Analytic::identity(), &u, 4, EtaPath::ClosedForm).unwrap();
        assert_eq!(z, TruncatedSeries::zero(4));
    }

    #[test]
    fn pairing_matches_oracle() {
        let law_u = u_law();
        let law_v = SpectralDistribution::free_poisson(q(1, 1), q(3, 1), 16).unwrap();
        let fp = LawProduct::from_laws(&law_u, &law_v, EvalMode::Exact);
        let f = Analytic::Poly(vec![q(1, 2), q(0, 1), q(1, 1)]);
        let g = Analytic::identity();
        let p = condexp_pairing(&f, &g, &fp, 5, 2).unwrap();
        for m in 0..=2 {
            assert_eq!(p.evaluator(m).unwrap(), pairing_direct(&f, &g, &fp, 5, m).unwrap());
        }
    }

    #[test]
    fn lukacs_ab_exact_backend() {
        let law_u = u_law();
        let law_v = SpectralDistribution::free_poisson(q(1, 1), q(3, 1), 16).unwrap();
        let fp = LawProduct::from_laws(&law_u, &law_v, EvalMode::Exact);
        let r = lukacs_ab(&fp, 4, 1).unwrap();
        assert_eq!(r.a.coeff(0), &r.alpha);
        assert!(r.b.coeff(0).is_zero());
        let psi = Analytic::Psi;
        for m in 0..=1 {
            assert_eq!(r.pairing.evaluator(m).unwrap(), pairing_direct(&psi, &psi, &fp, 4, m).unwrap());
        }
    }
}
