//! Truncated formal power series.
//!
//! A series of order `N` stores the coefficients of `z^0..=z^N`; the order is
//! also the *valid* order, so operations that lose tail information (such as
//! [`TruncatedSeries::zero_derivative`]) shorten the series instead of padding
//! it with made-up zeros.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Coefficients `c_0..=c_N` of a power series in `z`.
#[derive(Clone, PartialEq)]
pub struct TruncatedSeries<F> {
    coeffs: Vec<F>,
}

/// Binary operations exposed to the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl<F: fmt::Debug> fmt::Debug for TruncatedSeries<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coeffs.iter()).finish()
    }
}

fn same_order<F>(a: &TruncatedSeries<F>, b: &TruncatedSeries<F>) -> Result<()> {
    if a.coeffs.len() != b.coeffs.len() {
        return Err(Error::Dimension(alloc::format!(
            "series of order {} and {}",
            a.coeffs.len() - 1,
            b.coeffs.len() - 1
        )));
    }
    Ok(())
}

impl<F: Scalar> TruncatedSeries<F> {
    /// Series with the given coefficients; an empty list is a zero of order 0.
    pub fn new(mut coeffs: Vec<F>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(F::zero());
        }
        TruncatedSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        TruncatedSeries { coeffs: vec![F::zero(); order + 1] }
    }

    pub fn constant(c: F, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(F::one(), order)
    }

    /// The series `z`.
    pub fn identity(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = F::one();
        }
        s
    }

    /// Pad with zeros or cut to `order`. Padding is only meaningful for
    /// polynomials; callers use it for those.
    pub fn with_order(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, F::zero());
        TruncatedSeries { coeffs }
    }

    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order(), "cannot extend a truncated series");
        self.with_order(order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &F {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<F> {
        self.coeffs
    }

    pub fn set_coeff(&mut self, k: usize, v: F) {
        self.coeffs[k] = v;
    }

    pub fn scale(&self, c: &F) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|x| x.clone() * c).collect() }
    }

    pub fn neg(&self) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|x| -x.clone()).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_order(self, other)?;
        Ok(TruncatedSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.clone() + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_order(self, other)?;
        Ok(TruncatedSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.clone() - b).collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        same_order(self, other)?;
        Ok(self.mul_trunc(other))
    }

    fn mul_trunc(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let mut out = vec![F::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(n + 1 - i) {
                out[i + j] += a.clone() * b;
            }
        }
        TruncatedSeries { coeffs: out }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        same_order(self, other)?;
        let b0 = &other.coeffs[0];
        if b0.is_zero() {
            return Err(Error::Division);
        }
        let n = self.order();
        let mut q: Vec<F> = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut acc = self.coeffs[k].clone();
            for j in 1..=k {
                acc -= other.coeffs[j].clone() * &q[k - j];
            }
            q.push(acc / b0);
        }
        Ok(TruncatedSeries { coeffs: q })
    }

    pub fn apply(&self, other: &Self, op: SeriesOp) -> Result<Self> {
        match op {
            SeriesOp::Add => self.add(other),
            SeriesOp::Sub => self.sub(other),
            SeriesOp::Mul => self.mul(other),
            SeriesOp::Div => self.div(other),
        }
    }

    pub fn add_constant(&self, c: &F) -> Self {
        let mut s = self.clone();
        s.coeffs[0] += c.clone();
        s
    }

    /// `z·self`, keeping the order (the top coefficient falls off).
    pub fn mul_z(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        coeffs.push(F::zero());
        coeffs.extend(self.coeffs[..self.order()].iter().cloned());
        TruncatedSeries { coeffs }
    }

    /// `self / z`; needs a zero constant term and loses one order.
    pub fn div_z(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() || self.order() == 0 {
            return Err(Error::Division);
        }
        Ok(TruncatedSeries { coeffs: self.coeffs[1..].to_vec() })
    }

    pub fn pow(&self, e: usize) -> Self {
        let mut out = Self::one(self.order());
        for _ in 0..e {
            out = out.mul_trunc(self);
        }
        out
    }

    /// `f(g(z))` by Horner's rule; `g(0)` must vanish.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        same_order(self, g)?;
        if !g.coeffs[0].is_zero() {
            return Err(Error::CompositionDomain);
        }
        let n = self.order();
        let mut acc = Self::constant(self.coeffs[n].clone(), n);
        for k in (0..n).rev() {
            acc = acc.mul_trunc(g);
            acc.coeffs[0] += self.coeffs[k].clone();
        }
        Ok(acc)
    }

    /// Compositional inverse by Lagrange inversion:
    /// `[z^n] g = (1/n) [w^{n-1}] (w / f(w))^n`.
    pub fn revert(&self) -> Result<Self> {
        let n = self.order();
        if n == 0 || !self.coeffs[0].is_zero() || self.coeffs[1].is_zero() {
            return Err(Error::ReversionDomain);
        }
        // h = w / f(w), needed through order n-1.
        let f_over_w = TruncatedSeries { coeffs: self.coeffs[1..].to_vec() };
        let h = Self::one(n - 1).div(&f_over_w)?;
        let mut g = Self::zero(n);
        let mut hp = Self::one(n - 1);
        for k in 1..=n {
            hp = hp.mul_trunc(&h);
            g.coeffs[k] = hp.coeffs[k - 1].clone() / F::from_usize(k);
        }
        Ok(g)
    }

    /// `D^k h`: the coefficient shift `z^j ↦ z^{j-k}` (monomials of degree
    /// below `k` are annihilated). The order drops to `N - k`.
    pub fn zero_derivative(&self, k: usize) -> Self {
        assert!(k <= self.order(), "zero derivative beyond the series order");
        TruncatedSeries { coeffs: self.coeffs[k..].to_vec() }
    }

    /// `ψ(D)h = (h(z) - h(1)) / (z - 1)`, where `h(1)` is the full sum
    /// of the series supplied by the caller.
    pub fn psi_of_d(&self, h_at_1: &F) -> Self {
        let mut acc = h_at_1.clone();
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                acc -= c.clone();
                acc.clone()
            })
            .collect();
        TruncatedSeries { coeffs }
    }

    /// Sum of the stored coefficients (a polynomial evaluated at 1).
    pub fn partial_sum(&self) -> F {
        self.coeffs.iter().fold(F::zero(), |acc, c| acc + c)
    }

    /// Coefficientwise comparison up to the common order.
    pub fn agrees_with(&self, other: &Self, tol: &F) -> bool {
        self.coeffs.iter().zip(&other.coeffs).all(|(a, b)| a.approx_eq(b, tol))
    }

    /// Largest coefficient difference up to the common order.
    pub fn max_abs_diff(&self, other: &Self) -> F {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(F::zero(), |m, (a, b)| F::max_of(m, (a.clone() - b).abs()))
    }

    /// Convert coefficientwise between backends.
    pub fn map<G: Scalar>(&self, f: impl Fn(&F) -> G) -> TruncatedSeries<G> {
        TruncatedSeries { coeffs: self.coeffs.iter().map(f).collect() }
    }
}

/// A polynomial `F(z, s) = Σ_k a_k(z) s^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariatePoly<F> {
    /// `terms[k][j]` is the coefficient of `s^k z^j`.
    pub terms: Vec<Vec<F>>,
}

impl<F: Scalar> BivariatePoly<F> {
    pub fn new(terms: Vec<Vec<F>>) -> Self {
        BivariatePoly { terms }
    }

    pub fn degree_s(&self) -> usize {
        self.terms.len().saturating_sub(1)
    }

    fn coeff(&self, k: usize, j: usize) -> Option<&F> {
        self.terms.get(k).and_then(|t| t.get(j))
    }

    /// Evaluate at `z = 0`, as a polynomial in `s`, and its `s`-derivative.
    pub fn at_zero(&self, s: &F) -> (F, F) {
        let mut val = F::zero();
        let mut der = F::zero();
        let mut sp = F::one();
        let mut sp_prev = F::zero();
        for k in 0..self.terms.len() {
            if let Some(a) = self.coeff(k, 0) {
                val += a.clone() * &sp;
                der += a.clone() * &sp_prev * F::from_usize(k);
            }
            sp_prev = sp.clone();
            sp = sp * s;
        }
        (val, der)
    }

    /// The power-series root `s(z)` with `s(0) = s0`, through `z^order`.
    ///
    /// Requires `F(0, s0) = 0` and `∂F/∂s(0, s0) ≠ 0`. Coefficient `n` is
    /// read off `[z^n] F(z, s(z)) = 0`, where `s_n` enters only through the
    /// `z^0` coefficients `a_k(0)` with weight `k s0^{k-1}`.
    pub fn solve_series(&self, s0: &F, order: usize) -> Result<TruncatedSeries<F>> {
        let (v, d) = self.at_zero(s0);
        if !v.is_zero() && F::BACKEND == crate::scalar::Backend::Exact {
            return Err(Error::Domain(alloc::format!("F(0, s0) = {v}, not a root")));
        }
        if d.is_zero() {
            return Err(Error::Domain("singular root: dF/ds(0, s0) = 0".into()));
        }
        let deg = self.degree_s();
        // pw[k][m] = [z^m] s(z)^k for the coefficients known so far.
        let mut pw: Vec<Vec<F>> = vec![Vec::with_capacity(order + 1); deg + 1];
        let mut s: Vec<F> = Vec::with_capacity(order + 1);
        let mut s0_pows = vec![F::one()];
        for k in 1..=deg {
            let next = s0_pows[k - 1].clone() * s0;
            s0_pows.push(next);
        }
        s.push(s0.clone());
        for (k, p) in pw.iter_mut().enumerate() {
            p.push(s0_pows[k].clone());
        }
        for n in 1..=order {
            // Provisional [z^n] s^k with s_n = 0.
            s.push(F::zero());
            pw[0].push(F::zero());
            for k in 1..=deg {
                let mut acc = F::zero();
                for i in 1..=n {
                    if s[i].is_zero() {
                        continue;
                    }
                    acc += s[i].clone() * &pw[k - 1][n - i];
                }
                acc += s[0].clone() * pw[k - 1][n].clone();
                pw[k].push(acc);
            }
            let mut r = F::zero();
            for (k, t) in self.terms.iter().enumerate() {
                for (j, a) in t.iter().enumerate().take(n + 1) {
                    if a.is_zero() {
                        continue;
                    }
                    r += a.clone() * &pw[k][n - j];
                }
            }
            let sn = -(r / &d);
            for k in 1..=deg {
                let w = s0_pows[k - 1].clone() * F::from_usize(k) * &sn;
                pw[k][n] += w;
            }
            s[n] = sn;
        }
        Ok(TruncatedSeries::new(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_frac(n, d)
    }

    fn ser(v: &[i64]) -> TruncatedSeries<Rational> {
        TruncatedSeries::new(v.iter().map(|&x| Rational::from_i64(x)).collect())
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(ser(&[0, 1, 0]).add(&ser(&[0, 0, 1])).unwrap(), ser(&[0, 1, 1]));
        assert_eq!(ser(&[1, 1, 0]).mul(&ser(&[1, -1, 0])).unwrap(), ser(&[1, 0, -1]));
        assert_eq!(ser(&[0, 1, 0, 0]).div(&ser(&[1, -1, 0, 0])).unwrap(), ser(&[0, 1, 1, 1]));
        assert_eq!(ser(&[1, 0]).div(&ser(&[0, 1])), Err(Error::Division));
        assert!(ser(&[1, 0]).add(&ser(&[1, 0, 0])).is_err());
    }

    #[test]
    fn compose_examples() {
        assert_eq!(ser(&[0, 1, 1]).compose(&ser(&[0, 2, 0])).unwrap(), ser(&[0, 2, 4]));
        let f = ser(&[3, -1, 4, 1, 5]);
        assert_eq!(f.compose(&TruncatedSeries::identity(4)).unwrap(), f);
        assert_eq!(f.compose(&ser(&[1, 1, 0, 0, 0])), Err(Error::CompositionDomain));
    }

    #[test]
    fn geometric_of_geometric() {
        // Σ z^k ∘ z/(1-z): coefficient of z^k is 2^(k-1), computed here by
        // summing powers of the inner series one by one.
        let n = 10;
        let g = ser(&vec![1; n + 1]).mul_z();
        let mut expected = TruncatedSeries::<Rational>::zero(n);
        let mut p = TruncatedSeries::one(n);
        for _ in 1..=n {
            p = p.mul(&g).unwrap();
            expected = expected.add(&p).unwrap();
        }
        let f = ser(&{
            let mut v = vec![1; n + 1];
            v[0] = 0;
            v
        });
        let c = f.compose(&g).unwrap();
        assert_eq!(c, expected);
        for k in 1..=n {
            assert_eq!(c.coeff(k), &Rational::from_i64(1 << (k - 1)));
        }
    }

    #[test]
    fn revert_examples() {
        let n = 8;
        let id = TruncatedSeries::<Rational>::identity(n);
        assert_eq!(id.revert().unwrap(), id);
        let f = ser(&[0, 1, 1, 1, 1, 1, 1, 1, 1]);
        let g = f.revert().unwrap();
        let alt: Vec<i64> = (0..=n).map(|k| if k == 0 { 0 } else if k % 2 == 1 { 1 } else { -1 }).collect();
        assert_eq!(g, ser(&alt));
        assert_eq!(f.compose(&g).unwrap(), id);
        let f = ser(&[0, 2, 1, 0, 0, 0, 0, 0, 0]);
        let g = f.revert().unwrap();
        assert_eq!(g.coeff(1), &q(1, 2));
        assert_eq!(g.coeff(2), &q(-1, 8));
        assert_eq!(f.compose(&g).unwrap(), id);
        assert_eq!(g.compose(&f).unwrap(), id);
        assert_eq!(ser(&[1, 1]).revert(), Err(Error::ReversionDomain));
        assert_eq!(ser(&[0, 0, 1]).revert(), Err(Error::ReversionDomain));
    }

    #[test]
    fn zero_derivative_examples() {
        assert_eq!(ser(&[0, 0, 1]).zero_derivative(1), ser(&[0, 1]));
        assert_eq!(ser(&[1, 0]).zero_derivative(1), ser(&[0]));
        assert_eq!(ser(&[3, 1, 5]).zero_derivative(2), ser(&[5]));
    }

    #[test]
    fn psi_of_d_examples() {
        let one = Rational::from_i64(1);
        assert_eq!(ser(&[0, 1, 0, 0]).psi_of_d(&one), ser(&[1, 0, 0, 0]));
        assert_eq!(ser(&[0, 0, 1, 0]).psi_of_d(&one), ser(&[1, 1, 0, 0]));
        let n = 10;
        let h = TruncatedSeries::new((0..=n).map(|k| if k == 0 { q(0, 1) } else { q(1, 1 << k) }).collect());
        let g = h.psi_of_d(&one);
        for j in 0..=n {
            assert_eq!(g.coeff(j), &q(1, 1 << j));
        }
    }

    #[test]
    fn solver_catalan() {
        // C = 1 + z C^2.
        let eq = BivariatePoly::new(vec![
            vec![Rational::from_i64(1)],
            vec![Rational::from_i64(-1)],
            vec![Rational::from_i64(0), Rational::from_i64(1)],
        ]);
        let c = eq.solve_series(&Rational::from_i64(1), 10).unwrap();
        let cat = [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796];
        assert_eq!(c, ser(&cat));
    }

    #[test]
    fn solver_rejects_singular_root() {
        // s^2 - z = 0 at s0 = 0.
        let eq = BivariatePoly::new(vec![
            vec![Rational::from_i64(0), Rational::from_i64(-1)],
            vec![],
            vec![Rational::from_i64(1)],
        ]);
        assert!(eq.solve_series(&Rational::from_i64(0), 4).is_err());
    }
}
