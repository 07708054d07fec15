//! Compactly supported laws given by moments and free cumulants.
//!
//! Parametric laws also carry their *cumulant equation*: a polynomial
//! `G(w, C)` with `G(w, C(w)) = 0` for `C(w) = 1 + Σ κ_n w^n`. From it the
//! moment series, arbitrarily many moments, affine images and negative
//! moments all follow by [`BivariatePoly::solve_series`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use num_traits::FromPrimitive;

use crate::cumulants::MomentOracle;
use crate::error::{Error, Result};
use crate::func::FnDesc;
use crate::scalar::{binomial, binomial_row, cos_sin, pi, Backend, Rational, Scalar};
use crate::series::{BivariatePoly, TruncatedSeries};

/// Descriptive tag with parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum LawLabel<F> {
    FreePoisson { alpha: F, lambda: F },
    FreeBinomial { sigma: F, theta: F },
    Bernoulli { p: F, a: F },
    Point { c: F },
    Affine { shift: F, scale: F },
    Convolution,
    Custom,
}

/// Interval plus atoms `(location, mass)` enclosing the spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Support<F> {
    pub interval: Option<(F, F)>,
    pub atoms: Vec<(F, F)>,
}

impl<F: Scalar> Support<F> {
    /// Smallest interval containing the interval part and all atoms.
    pub fn hull(&self) -> Option<(F, F)> {
        let mut pts: Vec<F> = Vec::new();
        if let Some((lo, hi)) = &self.interval {
            pts.push(lo.clone());
            pts.push(hi.clone());
        }
        for (x, _) in &self.atoms {
            pts.push(x.clone());
        }
        let mut it = pts.into_iter();
        let first = it.next()?;
        let (mut lo, mut hi) = (first.clone(), first);
        for p in it {
            if p < lo {
                lo = p;
            } else if p > hi {
                hi = p;
            }
        }
        Some((lo, hi))
    }

    fn map_affine(&self, a: &F, b: &F) -> Support<F> {
        let m = |x: &F| a.clone() + b.clone() * x;
        let interval = self.interval.as_ref().map(|(lo, hi)| {
            let (u, v) = (m(lo), m(hi));
            if u <= v {
                (u, v)
            } else {
                (v, u)
            }
        });
        Support { interval, atoms: self.atoms.iter().map(|(x, w)| (m(x), w.clone())).collect() }
    }
}

/// Enclosure `lo ≤ √x ≤ hi`; exact when `x` is a perfect square.
pub fn sqrt_bounds<F: Scalar>(x: &F) -> (F, F) {
    if let Some(s) = x.sqrt() {
        if F::BACKEND == Backend::Exact {
            return (s.clone(), s);
        }
        let slack = crate::scalar::epsilon::<F>() * F::from_i64(1 << 20);
        let d = s.clone() * &slack;
        return (s.clone() - &d, s + d);
    }
    let approx = <Rational as FromPrimitive>::from_f64(x.to_f64().sqrt_approx()).unwrap_or_else(|| <Rational as num_traits::One>::one());
    let mut u = F::from_ratio(&approx);
    if u.is_zero() {
        u = F::one();
    }
    for _ in 0..3 {
        u = (u.clone() + x.clone() / &u) / F::from_i64(2);
    }
    let lo = x.clone() / &u;
    (lo, u)
}

trait SqrtApprox {
    fn sqrt_approx(self) -> f64;
}

impl SqrtApprox for f64 {
    fn sqrt_approx(self) -> f64 {
        if self <= 0.0 {
            return 0.0;
        }
        let mut g = if self > 1.0 { self } else { 1.0 };
        for _ in 0..200 {
            let next = 0.5 * (g + self / g);
            if (next - g).abs() <= 1e-15 * next {
                return next;
            }
            g = next;
        }
        g
    }
}

/// `G(w, C) = 0` satisfied by `C(w) = 1 + Σ κ_n w^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantEquation<F> {
    /// `g.terms[k][j]` multiplies `C^k w^j`.
    pub g: BivariatePoly<F>,
}

impl<F: Scalar> CumulantEquation<F> {
    /// `(C-1) - α w (λ + C - 1) = 0`.
    pub fn free_poisson(alpha: &F, lambda: &F) -> Self {
        let a = alpha.clone();
        let l = lambda.clone();
        CumulantEquation {
            g: BivariatePoly::new(vec![
                vec![-F::one(), -(a.clone() * &l) + &a],
                vec![F::one(), -a],
            ]),
        }
    }

    /// `(C-1)(σ+θ+C-1) - w(σ+C-1) = 0`.
    pub fn free_binomial(sigma: &F, theta: &F) -> Self {
        let s = sigma.clone();
        let t = theta.clone();
        let st = s.clone() + &t;
        CumulantEquation {
            g: BivariatePoly::new(vec![
                vec![-(st.clone() - F::one()), -(s.clone() - F::one())],
                vec![st - F::from_i64(2), -F::one()],
                vec![F::one()],
            ]),
        }
    }

    /// `C - 1 - c w = 0`.
    pub fn point(c: &F) -> Self {
        CumulantEquation { g: BivariatePoly::new(vec![vec![-F::one(), -c.clone()], vec![F::one()]]) }
    }

    /// `C^2 - C - a w C + p a w = 0` for `p δ_0 + (1-p) δ_a`.
    pub fn bernoulli(p: &F, a: &F) -> Self {
        CumulantEquation {
            g: BivariatePoly::new(vec![
                vec![F::zero(), p.clone() * a],
                vec![-F::one(), -a.clone()],
                vec![F::one()],
            ]),
        }
    }

    /// Equation of `shift + scale·X`: `G(scale·w, C - shift·w)`.
    pub fn affine(&self, shift: &F, scale: &F) -> Self {
        let terms = &self.g.terms;
        let maxk = terms.len();
        let maxj = terms.iter().map(|t| t.len()).max().unwrap_or(0);
        let mut out = vec![vec![F::zero(); maxj + maxk]; maxk];
        for (k, row) in terms.iter().enumerate() {
            let binom: Vec<F> = binomial_row(k);
            for (j, g) in row.iter().enumerate() {
                if g.is_zero() {
                    continue;
                }
                let base = g.clone() * scale.powi(j as u32);
                // (C - shift w)^k = Σ_i C(k,i) C^{k-i} (-shift w)^i
                let mut sp = F::one();
                for (i, bc) in binom.iter().enumerate() {
                    out[k - i][j + i] += base.clone() * bc * &sp;
                    sp = sp * &(-shift.clone());
                }
            }
        }
        CumulantEquation { g: BivariatePoly::new(out) }
    }

    /// `κ_1..κ_order` (index 0 holds 0).
    pub fn free_cumulants(&self, order: usize) -> Result<Vec<F>> {
        let c = self.g.solve_series(&F::one(), order)?;
        let mut v = c.into_coeffs();
        v[0] = F::zero();
        Ok(v)
    }

    /// The moment equation `F(z, s) = G(z s, s)` for `s = 1 + M(z)`.
    pub fn moment_poly(&self) -> BivariatePoly<F> {
        let maxk = self.g.terms.len();
        let maxj = self.g.terms.iter().map(|t| t.len()).max().unwrap_or(0);
        let mut out = vec![vec![F::zero(); maxj]; maxk + maxj];
        for (k, row) in self.g.terms.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                out[k + j][j] += g.clone();
            }
        }
        BivariatePoly::new(out)
    }

    /// `m_0..m_order` with `m_0 = 1`.
    pub fn moments(&self, order: usize) -> Result<Vec<F>> {
        Ok(self.moment_poly().solve_series(&F::one(), order)?.into_coeffs())
    }

    /// `φ(X^{-j})` for `j = 0..=order`, from the branch of `1 + M(1/w)`
    /// vanishing at `w = 0`. The caller guarantees the spectrum avoids 0.
    pub fn negative_moments(&self, order: usize) -> Result<Vec<F>> {
        let f = self.moment_poly();
        let d = f
            .terms
            .iter()
            .flat_map(|t| t.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(j, _)| j))
            .max()
            .unwrap_or(0);
        let mut hat = vec![vec![F::zero(); d + 1]; f.terms.len()];
        for (k, row) in f.terms.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    hat[k][d - j] += c.clone();
                }
            }
        }
        let t = BivariatePoly::new(hat).solve_series(&F::zero(), order)?;
        let mut out: Vec<F> = t.into_coeffs().into_iter().map(|c| -c).collect();
        out[0] = F::one();
        Ok(out)
    }
}

/// Univariate lattice sums over non-crossing partitions, grouped by the
/// block of the first element: `m_n = Σ_s κ_s [z^{n-s}] (1 + M)^s`.
fn nc_convert<F: Scalar>(known: &[F], to_moments: bool) -> Vec<F> {
    let n_max = known.len() - 1;
    let mut m: Vec<F> = vec![F::one()];
    let mut k: Vec<F> = vec![F::zero()];
    // p[s][j] = [z^j] (1+M)^s.
    let mut p: Vec<Vec<F>> = vec![vec![F::one()]];
    for s in 1..=n_max {
        p.push(Vec::with_capacity(n_max + 1 - s));
    }
    for n in 1..=n_max {
        for s in 1..=n {
            let j = n - s;
            let mut acc = F::zero();
            for i in 0..=j {
                if i < p[s - 1].len() {
                    acc += p[s - 1][i].clone() * &m[j - i];
                }
            }
            p[s].push(acc);
        }
        let mut rest = F::zero();
        for s in 1..n {
            rest += k[s].clone() * &p[s][n - s];
        }
        if to_moments {
            k.push(known[n].clone());
            m.push(rest + &known[n]);
        } else {
            m.push(known[n].clone());
            k.push(known[n].clone() - rest);
        }
    }
    if to_moments {
        m
    } else {
        k
    }
}

/// `m_0..m_N` from `κ_1..κ_N` (index 0 of the input is ignored).
pub fn moments_from_free_cumulants<F: Scalar>(kappa: &[F]) -> Vec<F> {
    nc_convert(kappa, true)
}

/// `κ_1..κ_N` (index 0 holds 0) from `m_0..m_N`.
pub fn free_cumulants_from_moments<F: Scalar>(moments: &[F]) -> Vec<F> {
    nc_convert(moments, false)
}

/// Which transform [`SpectralDistribution::transform_series`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    M,
    Eta,
    S,
}

/// How [`SpectralDistribution::expect_function`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Polynomials only, from the moment sequence.
    ExactPoly,
    /// Polynomials plus singular terms through the cumulant equation.
    Exact,
    /// Geometric expansion of the singular factor truncated at `degree`.
    Neumann { degree: usize },
    /// Density plus atoms, within an evaluation budget.
    Quadrature { budget: usize },
}

/// A value together with a bound on the neglected tail.
#[derive(Debug, Clone, PartialEq)]
pub struct Expectation<F> {
    pub value: F,
    pub tail_bound: F,
}

/// A law through order `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDistribution<F> {
    pub label: LawLabel<F>,
    /// `m_0 = 1, m_1, …, m_N`.
    moments: Vec<F>,
    /// `0, κ_1, …, κ_N`.
    free_cumulants: Vec<F>,
    pub support: Option<Support<F>>,
    pub equation: Option<CumulantEquation<F>>,
}

fn positive<F: Scalar>(x: &F, name: &str) -> Result<()> {
    if *x <= F::zero() {
        return Err(Error::Domain(format!("{name} must be positive, got {x}")));
    }
    Ok(())
}

impl<F: Scalar> SpectralDistribution<F> {
    /// From moments `m_1..m_N` (`moments[0]` must be 1).
    pub fn from_moments(moments: Vec<F>, support: Option<Support<F>>, label: LawLabel<F>) -> Result<Self> {
        if moments.first() != Some(&F::one()) {
            return Err(Error::Domain("moment sequence must start with m_0 = 1".into()));
        }
        let free_cumulants = free_cumulants_from_moments(&moments);
        Ok(SpectralDistribution { label, moments, free_cumulants, support, equation: None })
    }

    /// From free cumulants `κ_1..κ_N` (`kappa[0]` ignored).
    pub fn from_free_cumulants(kappa: Vec<F>, support: Option<Support<F>>, label: LawLabel<F>) -> Self {
        let moments = moments_from_free_cumulants(&kappa);
        let mut free_cumulants = kappa;
        free_cumulants[0] = F::zero();
        SpectralDistribution { label, moments, free_cumulants, support, equation: None }
    }

    fn from_equation(eq: CumulantEquation<F>, order: usize, support: Option<Support<F>>, label: LawLabel<F>) -> Result<Self> {
        let free_cumulants = eq.free_cumulants(order)?;
        let moments = eq.moments(order)?;
        Ok(SpectralDistribution { label, moments, free_cumulants, support, equation: Some(eq) })
    }

    /// Free Poisson law `μ(α, λ)`.
    pub fn free_poisson(alpha: F, lambda: F, order: usize) -> Result<Self> {
        positive(&alpha, "alpha")?;
        positive(&lambda, "lambda")?;
        let (slo, shi) = sqrt_bounds(&lambda);
        let one = F::one();
        let hi = alpha.clone() * (one.clone() + &shi).powi(2);
        let lo = if slo <= one && shi >= one {
            F::zero()
        } else {
            let a = (one.clone() - &slo).powi(2);
            let b = (one.clone() - &shi).powi(2);
            alpha.clone() * if a < b { a } else { b }
        };
        let mut atoms = Vec::new();
        if lambda < one {
            atoms.push((F::zero(), one - &lambda));
        }
        let support = Support { interval: Some((lo, hi)), atoms };
        let eq = CumulantEquation::free_poisson(&alpha, &lambda);
        Self::from_equation(eq, order, Some(support), LawLabel::FreePoisson { alpha, lambda })
    }

    /// Free binomial law `ν(σ, θ)`.
    pub fn free_binomial(sigma: F, theta: F, order: usize) -> Result<Self> {
        let one = F::one();
        let st = sigma.clone() + &theta;
        let den = st.clone() - &one;
        if den.is_zero() || st.clone() / &den <= F::zero() || sigma.clone() * &theta / &den <= F::zero() {
            return Err(Error::Domain(format!(
                "free binomial needs (σ+θ)/(σ+θ-1) > 0 and σθ/(σ+θ-1) > 0, got σ = {sigma}, θ = {theta}"
            )));
        }
        let a = sigma.clone() / &st * (one.clone() - one.clone() / &st);
        let b = one.clone() / &st * (one.clone() - sigma.clone() / &st);
        let mut atoms = Vec::new();
        if sigma > F::zero() && sigma < one {
            atoms.push((F::zero(), one.clone() - &sigma));
        }
        if theta > F::zero() && theta < one {
            atoms.push((one.clone(), one.clone() - &theta));
        }
        let interval = if a >= F::zero() && b >= F::zero() {
            let (alo, ahi) = sqrt_bounds(&a);
            let (blo, bhi) = sqrt_bounds(&b);
            let hi = (ahi.clone() + &bhi).powi(2);
            let d1 = alo.clone() - &bhi;
            let d2 = ahi.clone() - &blo;
            let lo = if d1 <= F::zero() && d2 >= F::zero() {
                F::zero()
            } else {
                let (x, y) = (d1.clone() * &d1, d2.clone() * &d2);
                if x < y {
                    x
                } else {
                    y
                }
            };
            Some((lo, hi))
        } else {
            None
        };
        let support = Support { interval, atoms };
        let eq = CumulantEquation::free_binomial(&sigma, &theta);
        Self::from_equation(eq, order, Some(support), LawLabel::FreeBinomial { sigma, theta })
    }

    /// Point mass `δ_c`.
    pub fn point(c: F, order: usize) -> Result<Self> {
        let support = Support { interval: None, atoms: vec![(c.clone(), F::one())] };
        Self::from_equation(CumulantEquation::point(&c), order, Some(support), LawLabel::Point { c })
    }

    /// Two-point law `p δ_0 + (1-p) δ_a`.
    pub fn bernoulli(p: F, a: F, order: usize) -> Result<Self> {
        if p < F::zero() || p > F::one() {
            return Err(Error::Domain(format!("p must lie in [0, 1], got {p}")));
        }
        let support = Support {
            interval: None,
            atoms: vec![(F::zero(), p.clone()), (a.clone(), F::one() - &p)],
        };
        Self::from_equation(CumulantEquation::bernoulli(&p, &a), order, Some(support), LawLabel::Bernoulli { p, a })
    }

    /// Law of `shift + scale·X`.
    pub fn affine(&self, shift: &F, scale: &F) -> Result<Self> {
        let support = self.support.as_ref().map(|s| s.map_affine(shift, scale));
        let label = LawLabel::Affine { shift: shift.clone(), scale: scale.clone() };
        match &self.equation {
            Some(eq) => Self::from_equation(eq.affine(shift, scale), self.order(), support, label),
            None => {
                let mut kappa: Vec<F> = Vec::with_capacity(self.free_cumulants.len());
                let mut sp = F::one();
                for (n, k) in self.free_cumulants.iter().enumerate() {
                    let mut v = k.clone() * &sp;
                    if n == 1 {
                        v += shift.clone();
                    }
                    kappa.push(v);
                    sp = sp * scale;
                }
                Ok(Self::from_free_cumulants(kappa, support, label))
            }
        }
    }

    pub fn order(&self) -> usize {
        self.moments.len() - 1
    }

    /// `m_0..m_N`.
    pub fn moments(&self) -> &[F] {
        &self.moments
    }

    /// `0, κ_1, …, κ_N`.
    pub fn free_cumulants(&self) -> &[F] {
        &self.free_cumulants
    }

    pub fn moment(&self, k: usize) -> Result<F> {
        self.moments.get(k).cloned().ok_or_else(|| {
            Error::Capability(format!("moment of order {k} beyond stored order {}", self.order()))
        })
    }

    /// Moments `m_0..m_order`, extended through the cumulant equation.
    pub fn moments_extended(&self, order: usize) -> Result<Vec<F>> {
        if order <= self.order() {
            return Ok(self.moments[..=order].to_vec());
        }
        match &self.equation {
            Some(eq) => eq.moments(order),
            None => Err(Error::Capability(format!(
                "moment of order {order} beyond stored order {} and no cumulant equation",
                self.order()
            ))),
        }
    }

    /// Same law, recomputed to a different order.
    pub fn with_order(&self, order: usize) -> Result<Self> {
        if order <= self.order() {
            let mut d = self.clone();
            d.moments.truncate(order + 1);
            d.free_cumulants.truncate(order + 1);
            return Ok(d);
        }
        match &self.equation {
            Some(eq) => Self::from_equation(eq.clone(), order, self.support.clone(), self.label.clone()),
            None => Err(Error::Capability(format!("cannot extend a law of order {} without its equation", self.order()))),
        }
    }

    /// `φ(X^{-j})`, `j = 0..=order`, through the cumulant equation.
    pub fn negative_moments(&self, order: usize) -> Result<Vec<F>> {
        let (lo, _) = self.support_hull()?;
        if lo <= F::zero() {
            return Err(Error::Capability("negative moments need a spectrum bounded away from 0".into()));
        }
        match &self.equation {
            Some(eq) => eq.negative_moments(order),
            None => Err(Error::Capability("negative moments need a cumulant equation".into())),
        }
    }

    pub fn support_hull(&self) -> Result<(F, F)> {
        self.support
            .as_ref()
            .and_then(|s| s.hull())
            .ok_or_else(|| Error::Capability("no support hint declared".into()))
    }

    /// `M`, `η = M/(1+M)` or `S = (1+z)/z · M^{<-1>}` through `order`
    /// (`S` comes out one order shorter).
    pub fn transform_series(&self, which: Transform, order: usize) -> Result<TruncatedSeries<F>> {
        let mut m = self.moments_extended(order)?;
        m[0] = F::zero();
        let mser = TruncatedSeries::new(m);
        match which {
            Transform::M => Ok(mser),
            Transform::Eta => mser.div(&mser.add_constant(&F::one())),
            Transform::S => {
                if order < 2 {
                    return Err(Error::Domain("S-transform needs order ≥ 2".into()));
                }
                let inv = mser.revert()?.div_z()?;
                let one_plus = TruncatedSeries::new(vec![F::one(), F::one()]).with_order(order - 1);
                one_plus.mul(&inv)
            }
        }
    }

    /// Free additive convolution: cumulants add.
    pub fn free_convolve(&self, other: &Self) -> Result<Self> {
        if self.order() != other.order() {
            return Err(Error::Dimension(format!("laws of order {} and {}", self.order(), other.order())));
        }
        let kappa: Vec<F> = self.free_cumulants.iter().zip(&other.free_cumulants).map(|(a, b)| a.clone() + b).collect();
        let support = match (self.support_hull(), other.support_hull()) {
            (Ok((a, b)), Ok((c, d))) => Some(Support { interval: Some((a + &c, b + &d)), atoms: Vec::new() }),
            _ => None,
        };
        let mut out = Self::from_free_cumulants(kappa, support, LawLabel::Convolution);
        if let (LawLabel::FreePoisson { alpha: a1, lambda: l1 }, LawLabel::FreePoisson { alpha: a2, lambda: l2 }) =
            (&self.label, &other.label)
        {
            if a1 == a2 {
                let lambda = l1.clone() + l2;
                out.equation = Some(CumulantEquation::free_poisson(a1, &lambda));
            }
        }
        Ok(out)
    }

    /// Density of the absolutely continuous part, where one is known.
    pub fn density(&self, x: &F) -> Option<F> {
        let (lo, hi) = self.support.as_ref()?.interval.clone()?;
        if *x <= lo || *x >= hi {
            return Some(F::zero());
        }
        let two_pi = F::from_i64(2) * pi::<F>();
        let root = ((x.clone() - &lo) * (hi.clone() - x)).sqrt()?;
        match &self.label {
            LawLabel::FreePoisson { alpha, .. } => Some(root / (two_pi * alpha * x)),
            LawLabel::FreeBinomial { sigma, theta } => {
                Some((sigma.clone() + theta) * root / (two_pi * x * (F::one() - x)))
            }
            _ => None,
        }
    }

    /// `φ(fn(X))` by the chosen method.
    pub fn expect_function(&self, f: &FnDesc<F>, method: Method) -> Result<Expectation<F>> {
        match method {
            Method::ExactPoly => {
                let c = f.poly_coeffs().ok_or_else(|| Error::Capability("not a polynomial".into()))?;
                let m = self.moments_extended(c.len() - 1)?;
                let value = c.iter().zip(&m).fold(F::zero(), |acc, (a, b)| acc + a.clone() * b);
                Ok(Expectation { value, tail_bound: F::zero() })
            }
            Method::Exact => {
                let o = LawOracle::new(self, EvalMode::Exact);
                Ok(Expectation { value: o.expect(f)?, tail_bound: F::zero() })
            }
            Method::Neumann { degree } => neumann_fixed(self, f, degree),
            Method::Quadrature { budget } => quadrature(self, f, budget),
        }
    }
}

/// Value and tail bound of `Σ_k C(k+q-1, q-1) t_{k}` with `|t_k| ≤ ρ^{k+p}`,
/// truncated after `k = degree`.
fn neumann_tail<F: Scalar>(q: u32, p: usize, rho: &F, degree: usize) -> Result<F> {
    let q = q as usize;
    let k1 = degree + 1;
    let ratio = F::from_usize(k1 + q) / F::from_usize(k1 + 1) * rho;
    if ratio >= F::one() {
        return Err(Error::Divergence(format!("geometric ratio {ratio} ≥ 1 at degree {degree}")));
    }
    let lead: F = binomial(k1 + q - 1, q - 1);
    Ok(lead * rho.powi((k1 + p) as u32) / (F::one() - ratio))
}

fn neumann_fixed<F: Scalar>(law: &SpectralDistribution<F>, f: &FnDesc<F>, degree: usize) -> Result<Expectation<F>> {
    let mut value = F::zero();
    let mut tail = F::zero();
    for t in f.terms() {
        let (v, b) = if t.pole == 0 && t.power >= 0 {
            (law.moments_extended(t.power as usize)?[t.power as usize].clone(), F::zero())
        } else if t.pole > 0 && t.power >= 0 {
            let rho = neumann_radius(law)?;
            let p = t.power as usize;
            let m = law.moments_extended(degree + p)?;
            let mut acc = F::zero();
            for k in 0..=degree {
                acc += binomial::<F>(k + t.pole as usize - 1, t.pole as usize - 1) * &m[k + p];
            }
            (acc, neumann_tail(t.pole, p, &rho, degree)?)
        } else if t.pole == 0 {
            let e = t.power.unsigned_abs();
            let (c, y, rho) = inverse_shift(law)?;
            let m = y.moments_extended(degree)?;
            let mut acc = F::zero();
            for (k, mk) in m.iter().enumerate() {
                acc += binomial::<F>(k + e as usize - 1, e as usize - 1) * mk;
            }
            let scale = F::one() / c.powi(e);
            (acc * &scale, neumann_tail(e, 0, &rho, degree)? * scale)
        } else {
            return Err(Error::Capability("mixed x^-e (1-x)^-q terms are not supported".into()));
        };
        value += t.coef.clone() * v;
        tail += t.coef.abs() * b;
    }
    Ok(Expectation { value, tail_bound: tail })
}

/// `ρ` with spectrum inside `[-ρ, ρ]`; must be below 1.
fn neumann_radius<F: Scalar>(law: &SpectralDistribution<F>) -> Result<F> {
    let (lo, hi) = law.support_hull()?;
    let rho = F::max_of(lo.abs(), hi.abs());
    if rho >= F::one() {
        return Err(Error::Divergence(format!("spectrum reaches {rho}, (1-x)^-1 expansion diverges")));
    }
    Ok(rho)
}

/// `X^{-1} = c^{-1} (1 - Y)^{-1}` with `Y = 1 - X/c`, `c` the top of the
/// spectrum; returns `(c, law of Y, ρ_Y)`.
fn inverse_shift<F: Scalar>(law: &SpectralDistribution<F>) -> Result<(F, SpectralDistribution<F>, F)> {
    let (lo, hi) = law.support_hull()?;
    if lo <= F::zero() {
        return Err(Error::Divergence("spectrum not bounded away from 0, x^-1 expansion diverges".into()));
    }
    let y = law.affine(&F::one(), &(-(F::one() / &hi)))?;
    let rho = F::one() - lo / &hi;
    Ok((hi, y, rho))
}

fn quadrature<F: Scalar>(law: &SpectralDistribution<F>, f: &FnDesc<F>, budget: usize) -> Result<Expectation<F>> {
    if F::BACKEND == Backend::Exact {
        return Err(Error::Capability("quadrature needs the float backend".into()));
    }
    let support = law.support.as_ref().ok_or_else(|| Error::Capability("no support hint declared".into()))?;
    let mut atoms = F::zero();
    for (x, w) in &support.atoms {
        let v = f.eval(x).ok_or_else(|| Error::Divergence(format!("function singular at atom {x}")))?;
        atoms += w.clone() * v;
    }
    let Some((lo, hi)) = support.interval.clone() else {
        return Ok(Expectation { value: atoms, tail_bound: F::zero() });
    };
    let mid = (lo.clone() + &hi) / F::from_i64(2);
    let half = (hi - &lo) / F::from_i64(2);
    let weight = |x: &F| -> Option<F> {
        match &law.label {
            LawLabel::FreePoisson { alpha, .. } => Some(F::one() / (F::from_i64(2) * pi::<F>() * alpha * x)),
            LawLabel::FreeBinomial { sigma, theta } => {
                Some((sigma.clone() + theta) / (F::from_i64(2) * pi::<F>() * x * (F::one() - x)))
            }
            _ => None,
        }
    };
    // x = mid + half·cos t; the edge factor √((x-lo)(hi-x)) = half·sin t
    // cancels the Jacobian singularity, leaving a smooth periodic integrand
    // for which the trapezoid rule converges geometrically.
    let mut used = 0usize;
    let mut prev: Option<F> = None;
    let mut n = 16usize;
    let h2 = half.clone() * &half;
    loop {
        if used + n > budget {
            return match prev {
                Some(v) => Ok(Expectation { value: v + &atoms, tail_bound: F::one() }),
                None => Err(Error::Resolution("quadrature budget exhausted".into())),
            };
        }
        let step = pi::<F>() / F::from_usize(n);
        let (c1, s1) = cos_sin(&step);
        let (mut c, mut s) = (c1.clone(), s1.clone());
        let mut sum = F::zero();
        for _ in 1..n {
            let x = mid.clone() + half.clone() * &c;
            let g = f.eval(&x).ok_or_else(|| Error::Divergence(format!("function singular at {x}")))?;
            let w = weight(&x).ok_or_else(|| Error::Capability("no density for this law".into()))?;
            sum += g * w * &h2 * (s.clone() * &s);
            let c2 = c.clone() * &c1 - s.clone() * &s1;
            let s2 = s.clone() * &c1 + c.clone() * &s1;
            c = c2;
            s = s2;
        }
        used += n - 1;
        let val = sum * &step;
        if let Some(p) = &prev {
            let diff = (val.clone() - p).abs();
            let tol = crate::scalar::epsilon::<F>() * F::from_i64(1 << 30) * (F::one() + val.abs());
            if diff <= tol {
                return Ok(Expectation { value: val + &atoms, tail_bound: diff });
            }
        }
        prev = Some(val);
        n *= 2;
    }
}

/// How a [`LawOracle`] evaluates singular functions.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalMode<F> {
    /// Exact closed forms through the cumulant equation.
    Exact,
    /// Geometric expansions truncated once the certified tail is below `tol`.
    Neumann { tol: F },
}

struct OracleCache<F> {
    moments: Vec<F>,
    neg: Vec<F>,
    one_minus_neg: Vec<F>,
    shifted: Vec<F>,
    tail_total: Option<F>,
}

/// `φ` on functions of a single generator with a given law.
pub struct LawOracle<'a, F> {
    law: &'a SpectralDistribution<F>,
    mode: EvalMode<F>,
    cache: RefCell<OracleCache<F>>,
}

impl<'a, F: Scalar> LawOracle<'a, F> {
    pub fn new(law: &'a SpectralDistribution<F>, mode: EvalMode<F>) -> Self {
        let cache = OracleCache {
            moments: law.moments.clone(),
            neg: Vec::new(),
            one_minus_neg: Vec::new(),
            shifted: Vec::new(),
            tail_total: None,
        };
        LawOracle { law, mode, cache: RefCell::new(cache) }
    }

    pub fn law(&self) -> &'a SpectralDistribution<F> {
        self.law
    }

    /// Sum of the tail bounds of every truncated expansion used so far.
    pub fn tail_total(&self) -> F {
        self.cache.borrow().tail_total.clone().unwrap_or_else(F::zero)
    }

    fn add_tail(&self, t: F) {
        let mut c = self.cache.borrow_mut();
        let cur = c.tail_total.take().unwrap_or_else(F::zero);
        c.tail_total = Some(cur + t);
    }

    fn grow(v: &mut Vec<F>, need: usize, fill: impl FnOnce(usize) -> Result<Vec<F>>) -> Result<()> {
        if v.len() <= need {
            let target = need.max(2 * v.len()).max(16);
            *v = fill(target)?;
        }
        Ok(())
    }

    /// `m_k`, extending through the cumulant equation as needed.
    pub fn moment_k(&self, k: usize) -> Result<F> {
        let mut c = self.cache.borrow_mut();
        Self::grow(&mut c.moments, k, |n| self.law.moments_extended(n))?;
        Ok(c.moments[k].clone())
    }

    fn negative(&self, e: usize) -> Result<F> {
        let mut c = self.cache.borrow_mut();
        Self::grow(&mut c.neg, e, |n| self.law.negative_moments(n))?;
        Ok(c.neg[e].clone())
    }

    /// `φ((1-X)^{m})` for any integer `m`.
    fn one_minus_power(&self, m: i64) -> Result<F> {
        if m >= 0 {
            let m = m as usize;
            let row: Vec<F> = binomial_row(m);
            let mut acc = F::zero();
            for (l, b) in row.iter().enumerate() {
                let t = b.clone() * self.moment_k(l)?;
                if l % 2 == 0 {
                    acc += t;
                } else {
                    acc -= t;
                }
            }
            return Ok(acc);
        }
        let e = m.unsigned_abs() as usize;
        let mut c = self.cache.borrow_mut();
        Self::grow(&mut c.one_minus_neg, e, |n| self.law.affine(&F::one(), &(-F::one()))?.negative_moments(n))?;
        Ok(c.one_minus_neg[e].clone())
    }

    fn exact_term(&self, power: i32, pole: u32) -> Result<F> {
        match (power >= 0, pole) {
            (true, 0) => self.moment_k(power as usize),
            (false, 0) => self.negative(power.unsigned_abs() as usize),
            (true, q) => {
                // x^p = (1 - y)^p with y = 1 - x.
                let p = power as usize;
                let row: Vec<F> = binomial_row(p);
                let mut acc = F::zero();
                for (i, b) in row.iter().enumerate() {
                    let t = b.clone() * self.one_minus_power(i as i64 - q as i64)?;
                    if i % 2 == 0 {
                        acc += t;
                    } else {
                        acc -= t;
                    }
                }
                Ok(acc)
            }
            (false, _) => Err(Error::Capability("mixed x^-e (1-x)^-q terms are not supported".into())),
        }
    }

    fn neumann_term(&self, power: i32, pole: u32, tol: &F) -> Result<F> {
        if pole == 0 && power >= 0 {
            return self.moment_k(power as usize);
        }
        let (q, p, rho, shifted) = if pole > 0 && power >= 0 {
            (pole, power as usize, neumann_radius(self.law)?, None)
        } else if pole == 0 {
            let (lo, hi) = self.law.support_hull()?;
            if lo <= F::zero() {
                return Err(Error::Divergence("spectrum not bounded away from 0".into()));
            }
            let rho = F::one() - lo / &hi;
            (power.unsigned_abs(), 0usize, rho, Some(hi))
        } else {
            return Err(Error::Capability("mixed x^-e (1-x)^-q terms are not supported".into()));
        };
        let mut degree = 8usize;
        let bound = loop {
            match neumann_tail(q, p, &rho, degree) {
                Ok(b) if b <= *tol => break b,
                Ok(_) | Err(Error::Divergence(_)) if degree < 1 << 16 => degree = degree * 5 / 4 + 8,
                Ok(_) => return Err(Error::Resolution(format!("no Neumann degree reaches tolerance {tol}"))),
                Err(e) => return Err(e),
            }
        };
        let mut acc = F::zero();
        match &shifted {
            None => {
                for k in 0..=degree {
                    acc += binomial::<F>(k + q as usize - 1, q as usize - 1) * self.moment_k(k + p)?;
                }
                self.add_tail(bound);
            }
            Some(c) => {
                {
                    let mut cache = self.cache.borrow_mut();
                    Self::grow(&mut cache.shifted, degree, |n| {
                        self.law.affine(&F::one(), &(-(F::one() / c)))?.moments_extended(n)
                    })?;
                }
                let cache = self.cache.borrow();
                for k in 0..=degree {
                    acc += binomial::<F>(k + q as usize - 1, q as usize - 1) * &cache.shifted[k];
                }
                let scale = F::one() / c.powi(q);
                acc = acc * &scale;
                drop(cache);
                self.add_tail(bound * scale);
            }
        }
        Ok(acc)
    }

    /// `φ(f(X))`.
    pub fn expect(&self, f: &FnDesc<F>) -> Result<F> {
        let mut acc = F::zero();
        for t in f.terms() {
            let v = match &self.mode {
                EvalMode::Exact => self.exact_term(t.power, t.pole)?,
                EvalMode::Neumann { tol } => self.neumann_term(t.power, t.pole, tol)?,
            };
            acc += t.coef.clone() * v;
        }
        Ok(acc)
    }
}

impl<F: Scalar> MomentOracle for LawOracle<'_, F> {
    type Arg = FnDesc<F>;
    type Scalar = F;

    fn moment(&self, word: &[FnDesc<F>]) -> Result<F> {
        let prod = word.iter().fold(FnDesc::one(), |acc, f| acc.mul(f));
        self.expect(&prod)
    }

    fn is_tracial(&self) -> bool {
        true
    }

    fn fuse(&self, a: &FnDesc<F>, b: &FnDesc<F>) -> Option<FnDesc<F>> {
        Some(a.mul(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Float, Rational};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_frac(n, d)
    }

    #[test]
    fn poisson_low_moments() {
        let (a, l) = (q(2, 3), q(5, 2));
        let d = SpectralDistribution::free_poisson(a.clone(), l.clone(), 6).unwrap();
        assert_eq!(d.moments()[1], l.clone() * &a);
        assert_eq!(d.moments()[2], l.clone() * a.clone() * a.clone() * (q(1, 1) + &l));
        for n in 1..=6 {
            assert_eq!(d.free_cumulants()[n], l.clone() * a.powi(n as u32));
        }
    }

    #[test]
    fn binomial_one_one() {
        let d = SpectralDistribution::free_binomial(q(1, 1), q(1, 1), 4).unwrap();
        assert_eq!(d.moments()[1], q(1, 2));
        assert_eq!(d.moments()[2], q(3, 8));
    }

    #[test]
    fn binomial_domain() {
        assert!(matches!(
            SpectralDistribution::free_binomial(q(1, 4), q(1, 4), 4),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn point_mass_transforms() {
        let c = q(3, 2);
        let d = SpectralDistribution::point(c.clone(), 6).unwrap();
        let m = d.transform_series(Transform::M, 6).unwrap();
        for k in 1..=6 {
            assert_eq!(m.coeff(k), &c.powi(k as u32));
        }
        let eta = d.transform_series(Transform::Eta, 6).unwrap();
        assert_eq!(eta, TruncatedSeries::new(vec![q(0, 1), c.clone()]).with_order(6));
    }

    #[test]
    fn delta_zero_is_neutral() {
        let d = SpectralDistribution::free_binomial(q(2, 1), q(3, 1), 8).unwrap();
        let z = SpectralDistribution::point(q(0, 1), 8).unwrap();
        assert_eq!(z.free_convolve(&d).unwrap().moments(), d.moments());
    }

    #[test]
    fn exact_singular_expectations() {
        // δ_{1/2}: (1-x)^{-1} = 2.
        let d = SpectralDistribution::point(q(1, 2), 4).unwrap();
        let v = d.expect_function(&FnDesc::inv_one_minus(), Method::Exact).unwrap();
        assert_eq!(v.value, q(2, 1));
        // ν(σ, θ), θ > 1: φ(U(1-U)^{-1}) = σ/(θ-1) and φ((1-U)^{-1}) = 1 + that.
        let (s, t) = (q(1, 1), q(2, 1));
        let u = SpectralDistribution::free_binomial(s, t, 4).unwrap();
        let psi = u.expect_function(&FnDesc::psi(), Method::Exact).unwrap().value;
        let inv = u.expect_function(&FnDesc::inv_one_minus(), Method::Exact).unwrap().value;
        assert_eq!(psi, q(1, 1));
        assert_eq!(inv, psi + q(1, 1));
    }

    #[test]
    fn negative_moment_of_poisson() {
        // φ(V^{-1}) = 1/(α(λ-1)) for λ > 1.
        let d = SpectralDistribution::free_poisson(q(1, 1), q(3, 1), 4).unwrap();
        let v = d.expect_function(&FnDesc::monomial(-1), Method::Exact).unwrap();
        assert_eq!(v.value, q(1, 2));
    }

    #[test]
    fn neumann_matches_exact() {
        let u = SpectralDistribution::<Float>::free_binomial(Float::from_i64(1), Float::from_i64(2), 8).unwrap();
        let (lo, hi) = u.support_hull().unwrap();
        assert!(lo.abs() < Float::parse("1e-90").unwrap());
        assert!((hi - Float::from_frac(8, 9)).abs() < Float::parse("1e-90").unwrap());
        let e = u.expect_function(&FnDesc::psi(), Method::Neumann { degree: 900 }).unwrap();
        assert!(e.tail_bound < Float::parse("1e-40").unwrap());
        assert!((e.value - Float::from_i64(1)).abs() <= e.tail_bound + Float::parse("1e-80").unwrap());
    }

    #[test]
    fn quadrature_first_moment() {
        let d = SpectralDistribution::<Float>::free_poisson(Float::from_frac(1, 2), Float::from_i64(3), 4).unwrap();
        let e = d.expect_function(&FnDesc::identity(), Method::Quadrature { budget: 10_000 }).unwrap();
        assert!((e.value - Float::from_frac(3, 2)).abs() < Float::parse("1e-60").unwrap());
    }
}
