//! Functions of a single generator: finite sums of `c · x^p · (1-x)^{-q}`
//! with integer `p` (negative powers allowed) and `q ≥ 0`.
//!
//! The class is closed under multiplication, which is what letter fusion in
//! a free-product word needs.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::scalar::Scalar;

/// One term `coef · x^power · (1-x)^{-pole}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term<F> {
    pub coef: F,
    pub power: i32,
    pub pole: u32,
}

/// A sum of [`Term`]s, kept sorted by `(power, pole)` with zero terms removed.
#[derive(Clone, PartialEq)]
pub struct FnDesc<F> {
    terms: Vec<Term<F>>,
}

impl<F: Scalar> FnDesc<F> {
    pub fn from_terms(terms: impl IntoIterator<Item = Term<F>>) -> Self {
        let mut v: Vec<Term<F>> = terms.into_iter().collect();
        v.sort_by(|a, b| (a.power, a.pole).cmp(&(b.power, b.pole)));
        let mut out: Vec<Term<F>> = Vec::with_capacity(v.len());
        for t in v {
            match out.last_mut() {
                Some(last) if last.power == t.power && last.pole == t.pole => last.coef += t.coef,
                _ => out.push(t),
            }
        }
        out.retain(|t| !t.coef.is_zero());
        FnDesc { terms: out }
    }

    pub fn zero() -> Self {
        FnDesc { terms: Vec::new() }
    }

    pub fn constant(c: F) -> Self {
        Self::from_terms([Term { coef: c, power: 0, pole: 0 }])
    }

    pub fn one() -> Self {
        Self::constant(F::one())
    }

    /// `x`.
    pub fn identity() -> Self {
        Self::monomial(1)
    }

    /// `x^r`, where `r` may be negative.
    pub fn monomial(r: i32) -> Self {
        Self::from_terms([Term { coef: F::one(), power: r, pole: 0 }])
    }

    /// `Σ_i c_i x^i`.
    pub fn poly(coeffs: &[F]) -> Self {
        Self::from_terms(
            coeffs.iter().enumerate().map(|(i, c)| Term { coef: c.clone(), power: i as i32, pole: 0 }),
        )
    }

    /// `(1-x)^{-1}`.
    pub fn inv_one_minus() -> Self {
        Self::from_terms([Term { coef: F::one(), power: 0, pole: 1 }])
    }

    /// `ψ(x) = x(1-x)^{-1} = Σ_{k≥1} x^k`.
    pub fn psi() -> Self {
        Self::from_terms([Term { coef: F::one(), power: 1, pole: 1 }])
    }

    pub fn terms(&self) -> &[Term<F>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant value, if the function is constant.
    pub fn as_constant(&self) -> Option<F> {
        match self.terms.as_slice() {
            [] => Some(F::zero()),
            [t] if t.power == 0 && t.pole == 0 => Some(t.coef.clone()),
            _ => None,
        }
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.iter().all(|t| t.power >= 0 && t.pole == 0)
    }

    /// Polynomial coefficients, if the function is a polynomial.
    pub fn poly_coeffs(&self) -> Option<Vec<F>> {
        if !self.is_polynomial() {
            return None;
        }
        let deg = self.terms.iter().map(|t| t.power as usize).max().unwrap_or(0);
        let mut c = alloc::vec![F::zero(); deg + 1];
        for t in &self.terms {
            c[t.power as usize] += t.coef.clone();
        }
        Some(c)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut v = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                v.push(Term { coef: a.coef.clone() * &b.coef, power: a.power + b.power, pole: a.pole + b.pole });
            }
        }
        Self::from_terms(v)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(other.terms.iter()).cloned())
    }

    pub fn scale(&self, c: &F) -> Self {
        Self::from_terms(self.terms.iter().map(|t| Term { coef: t.coef.clone() * c, ..t.clone() }))
    }

    pub fn add_constant(&self, c: &F) -> Self {
        self.add(&Self::constant(c.clone()))
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| acc.mul(self))
    }

    /// Pointwise value; `None` at a pole.
    pub fn eval(&self, x: &F) -> Option<F> {
        let one_minus = F::one() - x;
        let mut acc = F::zero();
        for t in &self.terms {
            let mut v = t.coef.clone();
            if t.power >= 0 {
                v = v * x.powi(t.power as u32);
            } else {
                if x.is_zero() {
                    return None;
                }
                v = v / x.powi(t.power.unsigned_abs());
            }
            if t.pole > 0 {
                if one_minus.is_zero() {
                    return None;
                }
                v = v / one_minus.powi(t.pole);
            }
            acc += v;
        }
        Some(acc)
    }

    /// Compact rendering used in memo keys and reports.
    pub fn render(&self, var: &str) -> String {
        if self.terms.is_empty() {
            return String::from("0");
        }
        let mut s = String::new();
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                s.push_str(" + ");
            }
            s.push_str(&alloc::format!("{}", t.coef));
            if t.power != 0 {
                s.push_str(&alloc::format!("*{var}^{}", t.power));
            }
            if t.pole != 0 {
                s.push_str(&alloc::format!("*(1-{var})^-{}", t.pole));
            }
        }
        s
    }
}

impl<F: Scalar> fmt::Debug for FnDesc<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render("x"))
    }
}

impl<F: Scalar> Eq for FnDesc<F> {}

impl<F: Scalar> PartialOrd for FnDesc<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<F: Scalar> Ord for FnDesc<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(&other.terms) {
            let o = (a.power, a.pole)
                .cmp(&(b.power, b.pole))
                .then_with(|| a.coef.partial_cmp(&b.coef).unwrap_or(Ordering::Equal));
            if o != Ordering::Equal {
                return o;
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}
