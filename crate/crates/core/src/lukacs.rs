//! Regression characterisations of the free binomial / free Poisson pair
//! and the free Lukacs property.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cumulants::MomentOracle;
use crate::distributions::{sqrt_bounds, EvalMode, SpectralDistribution, Transform};
use crate::error::{Error, Result};
use crate::freeprod::{freeness_report, normalize_half, FreenessReport, HalfLetter, LawProduct, Tag, Tagged};
use crate::func::FnDesc;
use crate::scalar::{Backend, Scalar};
use crate::series::TruncatedSeries;
use crate::subordination::{omega_series_with, Route};

/// One checked identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Check<F> {
    pub name: String,
    pub lhs: F,
    pub rhs: F,
    pub delta: F,
    pub tolerance: F,
    pub pass: bool,
}

impl<F: Scalar> Check<F> {
    /// `|lhs - rhs| ≤ tolerance`; a zero tolerance demands equality.
    pub fn new(name: impl Into<String>, lhs: F, rhs: F, tolerance: F) -> Self {
        let delta = (lhs.clone() - &rhs).abs();
        let pass = if tolerance.is_zero() { lhs == rhs } else { delta <= tolerance };
        Check { name: name.into(), lhs, rhs, delta, tolerance, pass }
    }
}

/// Checks collected by one pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Report<F> {
    pub checks: Vec<Check<F>>,
}

impl<F: Scalar> Report<F> {
    pub fn new() -> Self {
        Report { checks: Vec::new() }
    }

    pub fn push(&mut self, c: Check<F>) {
        self.checks.push(c);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check<F>> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

impl<F: Scalar> Default for Report<F> {
    fn default() -> Self {
        Self::new()
    }
}

/// Which pair of regression conditions is assumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Constant regressions of `V^{1/2}(1-U)V^{1/2}` and its inverse (`b`, `c`).
    Th1,
    /// Constant regressions of the inverse and the inverse square (`c`, `d`).
    Th2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionConstants<F> {
    /// `α = φ(U(1-U)^{-1})`.
    pub alpha: F,
    pub b: Option<F>,
    pub c: Option<F>,
    pub d: Option<F>,
}

/// Free binomial `ν(σ, θ)` and free Poisson `μ(α_V, λ_V)` parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LawParams<F> {
    pub sigma: F,
    pub theta: F,
    pub alpha_v: F,
    pub lambda_v: F,
}

impl<F: Scalar> RegressionConstants<F> {
    pub fn th1(alpha: F, b: F, c: F) -> Self {
        RegressionConstants { alpha, b: Some(b), c: Some(c), d: None }
    }

    pub fn th2(alpha: F, c: F, d: F) -> Self {
        RegressionConstants { alpha, b: None, c: Some(c), d: Some(d) }
    }

    /// `(b, c)`, with `b = d/c³` in the second mode.
    pub fn effective_bc(&self, mode: Mode) -> Result<(F, F)> {
        let missing = |n: &str| Error::Domain(format!("regression constant {n} missing"));
        if self.alpha <= F::zero() {
            return Err(Error::Domain(format!("α > 0 fails: α = {}", self.alpha)));
        }
        match mode {
            Mode::Th1 => {
                let b = self.b.clone().ok_or_else(|| missing("b"))?;
                let c = self.c.clone().ok_or_else(|| missing("c"))?;
                if b <= F::zero() || c <= F::zero() {
                    return Err(Error::Domain(format!("b, c > 0 fails: b = {b}, c = {c}")));
                }
                if b.clone() * &c <= F::one() {
                    return Err(Error::Domain(format!("bc > 1 fails: bc = {}", b.clone() * &c)));
                }
                Ok((b, c))
            }
            Mode::Th2 => {
                let c = self.c.clone().ok_or_else(|| missing("c"))?;
                let d = self.d.clone().ok_or_else(|| missing("d"))?;
                if c <= F::zero() {
                    return Err(Error::Domain(format!("c > 0 fails: c = {c}")));
                }
                if d <= c.clone() * &c {
                    return Err(Error::Domain(format!("d > c² fails: d = {d}, c² = {}", c.clone() * &c)));
                }
                let b = d / c.powi(3);
                Ok((b, c))
            }
        }
    }
}

/// `ν(α/(bc-1), bc/(bc-1))` and `μ((bc-1)/c, (bc+α)/(bc-1))`.
pub fn params_from_constants<F: Scalar>(rc: &RegressionConstants<F>, mode: Mode) -> Result<LawParams<F>> {
    let (b, c) = rc.effective_bc(mode)?;
    let bc = b * &c;
    let e = bc.clone() - F::one();
    Ok(LawParams {
        sigma: rc.alpha.clone() / &e,
        theta: bc.clone() / &e,
        alpha_v: e.clone() / &c,
        lambda_v: (bc + &rc.alpha) / &e,
    })
}

/// Inverse of [`params_from_constants`]: `α = σ/(θ-1)`, `b = θα_V`,
/// `c = 1/(α_V(θ-1))`, `d = bc³`. Needs `θ > 1`, `σ, α_V > 0`.
pub fn constants_from_params<F: Scalar>(sigma: &F, theta: &F, alpha_v: &F) -> Result<RegressionConstants<F>> {
    if *theta <= F::one() || *sigma <= F::zero() || *alpha_v <= F::zero() {
        return Err(Error::Domain(format!("need θ > 1, σ > 0, α_V > 0; got θ = {theta}, σ = {sigma}, α_V = {alpha_v}")));
    }
    let t1 = theta.clone() - F::one();
    let b = theta.clone() * alpha_v;
    let c = F::one() / (alpha_v.clone() * &t1);
    let d = b.clone() * c.powi(3);
    Ok(RegressionConstants { alpha: sigma.clone() / &t1, b: Some(b), c: Some(c), d: Some(d) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizationResult<F> {
    pub s_u: TruncatedSeries<F>,
    pub s_uv: TruncatedSeries<F>,
    pub s_v: TruncatedSeries<F>,
    pub params: LawParams<F>,
}

/// Solves
/// `b(1+s) Y = (1+s) X - s`, `(s-α) Y = cs (X - 1)` for
/// `X = M_U^{<-1>}(s)`, `Y = M_UV^{<-1>}(s)` and forms S-transforms
/// `(1+s)/s · M^{<-1>}` through order `order - 1`.
pub fn solve_regression_system<F: Scalar>(rc: &RegressionConstants<F>, mode: Mode, order: usize) -> Result<CharacterizationResult<F>> {
    let (b, c) = rc.effective_bc(mode)?;
    let params = params_from_constants(rc, mode)?;
    let a = rc.alpha.clone();
    let poly = |c: Vec<F>| TruncatedSeries::new(c).with_order(order);
    let one_s = poly(vec![F::one(), F::one()]);
    let s = poly(vec![F::zero(), F::one()]);
    // Rows [[1+s, -b(1+s)], [-cs, s-α]], right-hand side [s, -cs].
    let a11 = one_s.clone();
    let a12 = one_s.scale(&(-b.clone()));
    let a21 = s.scale(&(-c.clone()));
    let a22 = poly(vec![-a, F::one()]);
    let r1 = s.clone();
    let r2 = s.scale(&(-c));
    let det = a11.mul(&a22)?.sub(&a12.mul(&a21)?)?;
    let x = r1.mul(&a22)?.sub(&a12.mul(&r2)?)?.div(&det)?;
    let y = a11.mul(&r2)?.sub(&a21.mul(&r1)?)?.div(&det)?;
    let st = |m: &TruncatedSeries<F>| -> Result<TruncatedSeries<F>> { one_s.truncate(order - 1).mul(&m.div_z()?) };
    let s_u = st(&x)?;
    let s_uv = st(&y)?;
    let s_v = s_uv.div(&s_u)?;
    Ok(CharacterizationResult { s_u, s_uv, s_v, params })
}

/// `1 + bc/(α+(bc-1)s)` and `c/(bc+α+(bc-1)s)` through `order`.
pub fn closed_form_s<F: Scalar>(alpha: &F, b: &F, c: &F, order: usize) -> Result<(TruncatedSeries<F>, TruncatedSeries<F>)> {
    let bc = b.clone() * c;
    let e = bc.clone() - F::one();
    let one = TruncatedSeries::one(order);
    let su = TruncatedSeries::new(vec![alpha.clone(), e.clone()]).with_order(order);
    let su = TruncatedSeries::constant(bc.clone(), order).div(&su)?.add(&one)?;
    let sv = TruncatedSeries::new(vec![bc + alpha, e]).with_order(order);
    let sv = TruncatedSeries::constant(c.clone(), order).div(&sv)?;
    Ok((su, sv))
}

/// `(V^{1/2} U V^{1/2})^n` as half letters.
fn sandwich_power<F: Scalar>(n: usize) -> Vec<HalfLetter<F>> {
    let mut w = Vec::new();
    for _ in 0..n {
        w.push(HalfLetter::sqrt(Tag::Right));
        w.push(HalfLetter::power(Tag::Left, 1));
        w.push(HalfLetter::sqrt(Tag::Right));
    }
    w
}

fn uv_power<F: Scalar>(fp: &LawProduct<'_, F>, n: usize) -> Result<F> {
    fp.eval_half(&sandwich_power(n))
}

/// Checks the three regression conditions for `U ~ ν(σ, θ)`,
/// `V ~ μ(α_V, σ+θ)` paired with `(V^{1/2} U V^{1/2})^n`, `n ≤ n_max`.
///
/// The first holds in exact arithmetic (within `tol` on floats); the inverse ones go through
/// `tol`-certified geometric expansions and pass within the accumulated
/// tail plus `slack`.
pub fn verify_regression_forward<F: Scalar>(
    sigma: &F,
    theta: &F,
    alpha_v: &F,
    n_max: usize,
    tol: &F,
    slack: &F,
    order: usize,
) -> Result<Report<F>> {
    let rc = constants_from_params(sigma, theta, alpha_v)?;
    let (b, c, d) = (rc.b.clone().unwrap(), rc.c.clone().unwrap(), rc.d.clone().unwrap());
    let lam = sigma.clone() + theta;
    let u = SpectralDistribution::free_binomial(sigma.clone(), theta.clone(), order)?;
    let v = SpectralDistribution::free_poisson(alpha_v.clone(), lam, order)?;
    let mut rep = Report::new();

    // Polynomial rows: equality on the exact backend, rounding only on floats.
    let poly_tol = if F::BACKEND == Backend::Exact { F::zero() } else { tol.clone() };
    let exact = LawProduct::from_laws(&u, &v, EvalMode::Exact);
    let alpha = exact.left().expect(&FnDesc::psi());
    if let Ok(alpha) = alpha {
        rep.push(Check::new("alpha = phi(psi(U))", alpha, rc.alpha.clone(), poly_tol.clone()));
    }
    for n in 0..=n_max {
        let mut w = vec![HalfLetter::sqrt(Tag::Right), HalfLetter::new(Tag::Left, FnDesc::poly(&[F::one(), -F::one()])), HalfLetter::sqrt(Tag::Right)];
        w.extend(sandwich_power(n));
        let lhs = exact.eval_half(&w)?;
        let rhs = b.clone() * uv_power(&exact, n)?;
        rep.push(Check::new(format!("regression b, n = {n}"), lhs, rhs, poly_tol.clone()));
    }

    let mode = if F::BACKEND == Backend::Exact { EvalMode::Exact } else { EvalMode::Neumann { tol: tol.clone() } };
    let fp = LawProduct::from_laws(&u, &v, mode);
    for (name, k, target) in [("regression c", 1usize, &c), ("regression d", 2, &d)] {
        for n in 0..=n_max {
            let before = fp.tail_total();
            // [V^{1/2}(1-U)V^{1/2}]^{-k} = V^{-1/2} (1-U)^{-1} (V^{-1} (1-U)^{-1})^{k-1} V^{-1/2}.
            let mut w = vec![HalfLetter::inv_sqrt(Tag::Right), HalfLetter::new(Tag::Left, FnDesc::inv_one_minus())];
            for _ in 1..k {
                w.push(HalfLetter::power(Tag::Right, -1));
                w.push(HalfLetter::new(Tag::Left, FnDesc::inv_one_minus()));
            }
            w.push(HalfLetter::inv_sqrt(Tag::Right));
            w.extend(sandwich_power(n));
            let lhs = fp.eval_half(&w)?;
            let rhs = target.clone() * uv_power(&exact, n)?;
            let bound = if F::BACKEND == Backend::Exact { F::zero() } else { fp.tail_total() - before + slack };
            rep.push(Check::new(format!("{name}, n = {n}"), lhs, rhs, bound));
        }
    }
    Ok(rep)
}

/// Series identities satisfied by `ω₂` for a free binomial / free Poisson pair:
/// `z(M_U(ω₂) - α) = c(ω₂-1)M_U(ω₂)` and
/// `ω₂ + (ω₂-1)M_U(ω₂) = bz(M_U(ω₂)+1)` (the latter also with `b = d/c³`).
pub fn omega_identities<F: Scalar>(sigma: &F, theta: &F, alpha_v: &F, order: usize, tol: &F) -> Result<Report<F>> {
    let rc = constants_from_params(sigma, theta, alpha_v)?;
    let (b, c, d) = (rc.b.clone().unwrap(), rc.c.clone().unwrap(), rc.d.clone().unwrap());
    let u = SpectralDistribution::free_binomial(sigma.clone(), theta.clone(), order)?;
    let v = SpectralDistribution::free_poisson(alpha_v.clone(), sigma.clone() + theta, order)?;
    let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
    let w2 = omega_series_with(&fp, order, Route::BooleanSeries)?.omega2;
    let mu = u.transform_series(Transform::M, order)?.compose(&w2)?;
    let z = TruncatedSeries::identity(order);
    let w2m1 = w2.add_constant(&-F::one());
    let mut rep = Report::new();
    let lhs12 = z.mul(&mu.add_constant(&-rc.alpha.clone()))?;
    let rhs12 = w2m1.mul(&mu)?.scale(&c);
    let lhs11 = w2.add(&w2m1.mul(&mu)?)?;
    let rhs11 = z.mul(&mu.add_constant(&F::one()))?;
    let b2 = d / c.powi(3);
    for k in 0..=order {
        rep.push(Check::new(format!("omega identity c, z^{k}"), lhs12.coeff(k).clone(), rhs12.coeff(k).clone(), tol.clone()));
        rep.push(Check::new(format!("omega identity b, z^{k}"), lhs11.coeff(k).clone(), b.clone() * rhs11.coeff(k), tol.clone()));
        rep.push(Check::new(format!("omega identity d/c^3, z^{k}"), lhs11.coeff(k).clone(), b2.clone() * rhs11.coeff(k), tol.clone()));
    }
    Ok(rep)
}

/// `W^{-1/2} Ψ_{W^{1/2}TW^{1/2}}(z) W^{-1/2} = z T^{1/2}(Ψ_{T^{1/2}WT^{1/2}}(z) + 1) T^{1/2}`
/// coefficientwise, paired with `V^m`, for `(W, T) = (V, U)` and `(U, V)`;
/// and the scalar identity
/// `x(1-x)^{-1}(tx/(1-tx) + 1) = (tx/(1-tx) - x/(1-x))/(t-1)` on a grid.
pub fn algebraic_identity_checks<F: Scalar>(fp: &LawProduct<'_, F>, order: usize, m_max: usize, tol: &F) -> Result<Report<F>> {
    let mut rep = Report::new();
    for (wt, tt, label) in [(Tag::Right, Tag::Left, "(W,T)=(V,U)"), (Tag::Left, Tag::Right, "(W,T)=(U,V)")] {
        for n in 1..=order {
            for m in 0..=m_max {
                let mut lhs = vec![HalfLetter::inv_sqrt(wt)];
                for _ in 0..n {
                    lhs.push(HalfLetter::sqrt(wt));
                    lhs.push(HalfLetter::power(tt, 1));
                    lhs.push(HalfLetter::sqrt(wt));
                }
                lhs.push(HalfLetter::inv_sqrt(wt));
                lhs.push(HalfLetter::power(Tag::Right, m as i32));
                let mut rhs = vec![HalfLetter::sqrt(tt)];
                for _ in 1..n {
                    rhs.push(HalfLetter::sqrt(tt));
                    rhs.push(HalfLetter::power(wt, 1));
                    rhs.push(HalfLetter::sqrt(tt));
                }
                rhs.push(HalfLetter::sqrt(tt));
                rhs.push(HalfLetter::power(Tag::Right, m as i32));
                let l = fp.eval_half(&lhs)?;
                let r = fp.eval_half(&rhs)?;
                rep.push(Check::new(format!("Psi sandwich {label}, z^{n}, V^{m}"), l, r, tol.clone()));
            }
        }
    }
    let one = F::one();
    for xn in 1..=4i64 {
        for tn in [-3i64, -1, 1, 3, 5, 7] {
            let x = F::from_frac(xn, 5);
            let t = F::from_frac(tn, 3);
            if t == one || t.clone() * &x == one {
                continue;
            }
            let tx = t.clone() * &x;
            let psi_t = tx.clone() / (one.clone() - &tx);
            let psi_1 = x.clone() / (one.clone() - &x);
            let lhs = psi_1.clone() * (psi_t.clone() + &one);
            let rhs = (psi_t - psi_1) / (t - &one);
            rep.push(Check::new(format!("scalar identity x = {xn}/5, t = {tn}/3"), lhs, rhs, tol.clone()));
        }
    }
    Ok(rep)
}

/// The pair `X₁ = V^{1/2} U V^{1/2}`, `Y₁ = V - X₁` as a joint oracle.
pub struct DualOracle<'a, F: Scalar> {
    fp: LawProduct<'a, F>,
}

/// Argument of [`DualOracle`]: `Left` is `X₁`, `Right` is `Y₁`.
pub type DualArg = Tagged<(), ()>;

impl<'a, F: Scalar> DualOracle<'a, F> {
    pub fn new(u: &'a SpectralDistribution<F>, v: &'a SpectralDistribution<F>) -> Self {
        DualOracle { fp: LawProduct::from_laws(u, v, EvalMode::Exact) }
    }
}

impl<F: Scalar> MomentOracle for DualOracle<'_, F> {
    type Arg = DualArg;
    type Scalar = F;

    fn moment(&self, word: &[DualArg]) -> Result<F> {
        // Y₁ = V - X₁: expand over which Y's take the X₁ part.
        let ys: Vec<usize> = (0..word.len()).filter(|&i| matches!(word[i], Tagged::Right(_))).collect();
        if ys.len() > 16 {
            return Err(Error::SizeLimit { what: "Y letters", got: ys.len(), limit: 16 });
        }
        let mut acc = F::zero();
        for mask in 0u32..(1 << ys.len()) {
            let mut w = Vec::new();
            let mut j = 0;
            for a in word {
                let as_x = match a {
                    Tagged::Left(()) => true,
                    Tagged::Right(()) => {
                        let x = mask >> j & 1 == 1;
                        j += 1;
                        x
                    }
                };
                if as_x {
                    w.push(HalfLetter::sqrt(Tag::Right));
                    w.push(HalfLetter::power(Tag::Left, 1));
                    w.push(HalfLetter::sqrt(Tag::Right));
                } else {
                    w.push(HalfLetter::power(Tag::Right, 1));
                }
            }
            let v = self.fp.moment(&normalize_half(&w)?)?;
            if mask.count_ones() % 2 == 1 {
                acc -= v;
            } else {
                acc += v;
            }
        }
        Ok(acc)
    }

    fn is_tracial(&self) -> bool {
        true
    }
}

/// Result of [`dual_lukacs_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct DualReport<F> {
    pub marginals: Report<F>,
    pub freeness: FreenessReport<(), (), F>,
}

impl<F: Scalar> DualReport<F> {
    pub fn passed(&self) -> bool {
        self.marginals.passed() && self.freeness.free
    }
}

/// `U ~ ν(λ, κ)`, `V ~ μ(α, λ+κ)`: checks `X₁ ~ μ(α, λ)`, `Y₁ ~ μ(α, κ)`
/// through `moment_order`, and that mixed free cumulants of `(X₁, Y₁)`
/// vanish through `max_order`.
pub fn dual_lukacs_check<F: Scalar>(lambda: &F, kappa: &F, alpha: &F, max_order: usize, moment_order: usize) -> Result<DualReport<F>> {
    const CAP: usize = 8;
    if max_order > CAP {
        return Err(Error::SizeLimit { what: "dual check order", got: max_order, limit: CAP });
    }
    let top = moment_order.max(max_order);
    let u = SpectralDistribution::free_binomial(lambda.clone(), kappa.clone(), top)?;
    let v = SpectralDistribution::free_poisson(alpha.clone(), lambda.clone() + kappa, top)?;
    let px = SpectralDistribution::free_poisson(alpha.clone(), lambda.clone(), top)?;
    let py = SpectralDistribution::free_poisson(alpha.clone(), kappa.clone(), top)?;
    let oracle = DualOracle::new(&u, &v);
    let mut marginals = Report::new();
    for n in 1..=moment_order {
        let x = oracle.moment(&vec![Tagged::Left(()); n])?;
        marginals.push(Check::new(format!("X1 moment {n}"), x, px.moments()[n].clone(), F::zero()));
        let y = oracle.moment(&vec![Tagged::Right(()); n])?;
        marginals.push(Check::new(format!("Y1 moment {n}"), y, py.moments()[n].clone(), F::zero()));
    }
    let freeness = freeness_report(&oracle, &[()], &[()], max_order, None)?;
    Ok(DualReport { marginals, freeness })
}

/// Vectors of the full Fock space over `span{a, u}` with
/// `⟨a,a⟩ = ⟨a,u⟩ = λ`, `⟨u,u⟩ = λ+κ`, keyed by `(length, letters)`
/// with the first tensor factor in the low bit (`a = 0`, `u = 1`).
type FockVec<F> = BTreeMap<(u8, u128), F>;

/// `X = α(l(a) + l(a)* + Λ(P) + λ)` and `V = α(l(u) + l(u)* + Λ(1) + λ+κ)`
/// with `P` the projection onto `a` (so `P u = a`). These are free with
/// `X ~ μ(α, λ)` and `V - X ~ μ(α, κ)`.
pub struct FockModel<F> {
    lambda: F,
    kappa: F,
    alpha: F,
    /// Chebyshev data for `V^{-1}` on `[mid - half, mid + half]`.
    mid: F,
    half: F,
    coeffs: Vec<F>,
    /// Sup-norm error of the truncated expansion on the spectrum of `V`.
    pub inverse_tail: F,
}

const FOCK_MAX_LEN: usize = 127;

fn add_to<F: Scalar>(v: &mut FockVec<F>, k: (u8, u128), c: F) {
    if c.is_zero() {
        return;
    }
    match v.get_mut(&k) {
        Some(x) => *x += c,
        None => {
            v.insert(k, c);
        }
    }
}

fn prune<F: Scalar>(v: FockVec<F>, cap: usize) -> FockVec<F> {
    v.into_iter().filter(|((l, _), c)| (*l as usize) <= cap && !c.is_zero()).collect()
}

impl<F: Scalar> FockModel<F> {
    /// Needs `λ + κ > 1` so that the spectrum of `V` avoids 0.
    pub fn new(lambda: F, kappa: F, alpha: F, degree: usize) -> Result<Self> {
        let lam = lambda.clone() + &kappa;
        if lam <= F::one() {
            return Err(Error::Domain(format!("λ + κ > 1 fails: λ + κ = {lam}")));
        }
        let (slo, shi) = sqrt_bounds(&lam);
        let lo = alpha.clone() * (slo - F::one()).powi(2);
        let hi = alpha.clone() * (shi + F::one()).powi(2);
        let two = F::from_i64(2);
        let mid = (lo.clone() + &hi) / &two;
        let half = (hi - &lo) / &two;
        let a = mid.clone() / &half;
        let root = (a.clone() * &a - F::one())
            .sqrt()
            .ok_or_else(|| Error::Capability("Chebyshev expansion of V^{-1} needs the float backend".into()))?;
        let r = a - &root;
        let base = F::one() / (half.clone() * &root);
        let mut coeffs = vec![base.clone()];
        let mut p = F::one();
        for _ in 1..=degree {
            p = p * &(-r.clone());
            coeffs.push(two.clone() * &base * &p);
        }
        let inverse_tail = two * &base * r.powi(degree as u32 + 1) / (F::one() - &r);
        Ok(FockModel { lambda, kappa, alpha, mid, half, coeffs, inverse_tail })
    }

    fn apply_x(&self, v: &FockVec<F>, cap: usize) -> FockVec<F> {
        let mut out = BTreeMap::new();
        let al = self.alpha.clone() * &self.lambda;
        for (&(len, bits), c) in v {
            let ca = c.clone() * &self.alpha;
            if (len as usize) < cap.min(FOCK_MAX_LEN) {
                add_to(&mut out, (len + 1, bits << 1), ca.clone());
            }
            if len > 0 {
                add_to(&mut out, (len - 1, bits >> 1), c.clone() * &al);
                add_to(&mut out, (len, bits & !1), ca);
            }
            add_to(&mut out, (len, bits), c.clone() * &al);
        }
        prune(out, cap)
    }

    fn apply_v(&self, v: &FockVec<F>, cap: usize) -> FockVec<F> {
        let mut out = BTreeMap::new();
        let total = self.alpha.clone() * (self.lambda.clone() + &self.kappa);
        let al = self.alpha.clone() * &self.lambda;
        for (&(len, bits), c) in v {
            let ca = c.clone() * &self.alpha;
            if (len as usize) < cap.min(FOCK_MAX_LEN) {
                add_to(&mut out, (len + 1, (bits << 1) | 1), ca.clone());
            }
            let mut diag = c.clone() * &total;
            if len > 0 {
                let lower = if bits & 1 == 1 { total.clone() } else { al.clone() };
                add_to(&mut out, (len - 1, bits >> 1), c.clone() * lower);
                diag += ca;
            }
            add_to(&mut out, (len, bits), diag);
        }
        prune(out, cap)
    }

    /// `t = (V - mid)/half`.
    fn apply_t(&self, v: &FockVec<F>, cap: usize) -> FockVec<F> {
        let mut out = self.apply_v(v, cap);
        for (k, c) in v {
            add_to(&mut out, *k, -(c.clone() * &self.mid));
        }
        let inv = F::one() / &self.half;
        out.into_iter().filter(|(_, c)| !c.is_zero()).map(|(k, c)| (k, c * &inv)).collect()
    }

    /// Clenshaw evaluation of the truncated `V^{-1}`; `after` elementary
    /// steps follow, so longer components cannot reach the vacuum.
    fn apply_inverse(&self, v: &FockVec<F>, after: usize) -> FockVec<F> {
        let k_max = self.coeffs.len() - 1;
        let mut b1: FockVec<F> = BTreeMap::new();
        let mut b2: FockVec<F> = BTreeMap::new();
        for k in (1..=k_max).rev() {
            let cap = k + after;
            let mut b = self.apply_t(&b1, cap);
            b = b.into_iter().map(|(key, c)| (key, c * &F::from_i64(2))).collect();
            for (key, c) in &b2 {
                add_to(&mut b, *key, -c.clone());
            }
            for (key, c) in v {
                add_to(&mut b, *key, c.clone() * &self.coeffs[k]);
            }
            b2 = b1;
            b1 = prune(b, cap);
        }
        let mut out = self.apply_t(&b1, after);
        for (key, c) in &b2 {
            add_to(&mut out, *key, -c.clone());
        }
        for (key, c) in v {
            add_to(&mut out, *key, c.clone() * &self.coeffs[0]);
        }
        prune(out, after)
    }

    /// `φ` of a product of `X^p` (`Left`) and `V^k` (`Right`, any integer `k`).
    pub fn trace(&self, word: &[(Tag, i32)]) -> Result<F> {
        let k_deg = self.coeffs.len() - 1;
        let cost = |&(t, p): &(Tag, i32)| -> usize {
            match t {
                Tag::Left => p as usize,
                Tag::Right if p >= 0 => p as usize,
                Tag::Right => p.unsigned_abs() as usize * k_deg,
            }
        };
        let mut remaining: usize = word.iter().map(cost).sum();
        let mut v: FockVec<F> = BTreeMap::new();
        v.insert((0, 0), F::one());
        for &(t, p) in word.iter().rev() {
            if p < 0 && t == Tag::Left {
                return Err(Error::Capability("negative powers of X are not supported".into()));
            }
            for _ in 0..p.unsigned_abs() {
                v = match (t, p >= 0) {
                    (Tag::Left, _) => {
                        remaining -= 1;
                        self.apply_x(&v, remaining)
                    }
                    (Tag::Right, true) => {
                        remaining -= 1;
                        self.apply_v(&v, remaining)
                    }
                    (Tag::Right, false) => {
                        remaining -= k_deg;
                        self.apply_inverse(&v, remaining)
                    }
                };
                if v.is_empty() {
                    return Ok(F::zero());
                }
            }
        }
        Ok(v.get(&(0, 0)).cloned().unwrap_or_else(F::zero))
    }
}

/// `(U, V) = (V^{-1/2} X V^{-1/2}, X + Y)` through the Fock model.
pub struct DirectOracle<F> {
    pub model: FockModel<F>,
}

impl<F: Scalar> MomentOracle for DirectOracle<F> {
    type Arg = DualArg;
    type Scalar = F;

    fn moment(&self, word: &[DualArg]) -> Result<F> {
        let mut w: Vec<HalfLetter<F>> = Vec::new();
        for a in word {
            match a {
                Tagged::Left(()) => {
                    w.push(HalfLetter::inv_sqrt(Tag::Right));
                    w.push(HalfLetter::power(Tag::Left, 1));
                    w.push(HalfLetter::inv_sqrt(Tag::Right));
                }
                Tagged::Right(()) => w.push(HalfLetter::power(Tag::Right, 1)),
            }
        }
        let letters = normalize_half(&w)?;
        let mut ops = Vec::with_capacity(letters.len());
        for l in letters {
            let (tag, f) = match &l {
                Tagged::Left(f) => (Tag::Left, f),
                Tagged::Right(f) => (Tag::Right, f),
            };
            let p = match f.terms() {
                [] => continue,
                [t] if t.pole == 0 && t.coef == F::one() => t.power,
                _ => return Err(Error::Capability(format!("unexpected letter {f:?}"))),
            };
            if p != 0 {
                ops.push((tag, p));
            }
        }
        self.model.trace(&ops)
    }

    fn is_tracial(&self) -> bool {
        true
    }
}

/// Result of [`direct_lukacs_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct DirectReport<F> {
    pub freeness: FreenessReport<(), (), F>,
    pub inverse_tail: F,
    pub checks: Report<F>,
}

impl<F: Scalar> DirectReport<F> {
    pub fn passed(&self) -> bool {
        self.freeness.free && self.checks.passed()
    }
}

/// For free `X ~ μ(α, λ)`, `Y ~ μ(α, κ)`: mixed free cumulants of
/// `U = (X+Y)^{-1/2} X (X+Y)^{-1/2}` and `V = X+Y` through `max_order`
/// must stay within `tol`. `V^{-1}` is a degree-`approx_degree` Chebyshev
/// polynomial in `V`.
pub fn direct_lukacs_check<F: Scalar>(
    lambda: &F,
    kappa: &F,
    alpha: &F,
    max_order: usize,
    approx_degree: usize,
    tol: &F,
) -> Result<DirectReport<F>> {
    let model = FockModel::new(lambda.clone(), kappa.clone(), alpha.clone(), approx_degree)?;
    let inverse_tail = model.inverse_tail.clone();
    if inverse_tail > *tol {
        return Err(Error::Resolution(format!(
            "V^-1 expansion error {inverse_tail} exceeds tolerance {tol}; raise approx_degree"
        )));
    }
    let oracle = DirectOracle { model };
    let mut checks = Report::new();
    // The V-marginal of the model against cumulant addition.
    let order = max_order.max(2);
    let px = SpectralDistribution::free_poisson(alpha.clone(), lambda.clone(), order)?;
    let py = SpectralDistribution::free_poisson(alpha.clone(), kappa.clone(), order)?;
    let pv = px.free_convolve(&py)?;
    for n in 1..=order {
        let m = oracle.moment(&vec![Tagged::Right(()); n])?;
        checks.push(Check::new(format!("V moment {n}"), m, pv.moments()[n].clone(), tol.clone()));
    }
    let uv = oracle.moment(&[Tagged::Left(()), Tagged::Right(())])?;
    let u1 = oracle.moment(&[Tagged::Left(())])?;
    checks.push(Check::new("phi(UV) - phi(U)phi(V)", uv, u1 * &pv.moments()[1], tol.clone()));
    let freeness = freeness_report(&oracle, &[()], &[()], max_order, Some(tol))?;
    Ok(DirectReport { freeness, inverse_tail, checks })
}
