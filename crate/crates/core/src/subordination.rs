//! Subordination series `ω₁`, `ω₂` of a free pair.
//!
//! `M_UV = M_V∘ω₁ = M_U∘ω₂`. The coefficients of `ω₁` are the alternating
//! Boolean cumulants `β_{2k-1}(U, V, …, V, U)`, those of `ω₂` the same with
//! the roles swapped.

use alloc::vec::Vec;

use crate::cumulants::{CumulantCalculator, CumulantKind, MomentOracle};
use crate::distributions::{EvalMode, SpectralDistribution, Transform};
use crate::error::{Error, Result};
use crate::freeprod::{LawProduct, Letter, Tagged};
use crate::func::FnDesc;
use crate::scalar::Scalar;
use crate::series::TruncatedSeries;

/// How the pair was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    BooleanSeries,
    Reversion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubordinationPair<F> {
    pub omega1: TruncatedSeries<F>,
    pub omega2: TruncatedSeries<F>,
    pub source: Route,
}

fn alternating<F: Scalar>(k: usize, u_outside: bool) -> Vec<Letter<F>> {
    (0..2 * k - 1)
        .map(|i| {
            if (i % 2 == 0) == u_outside {
                Tagged::Left(FnDesc::identity())
            } else {
                Tagged::Right(FnDesc::identity())
            }
        })
        .collect()
}

/// `M_UV` through `order`, from `φ((UV)^n)` in the free product.
pub fn moment_series_uv<F: Scalar>(fp: &LawProduct<'_, F>, order: usize) -> Result<TruncatedSeries<F>> {
    let mut c = Vec::with_capacity(order + 1);
    c.push(F::zero());
    for n in 1..=order {
        let mut w: Vec<Letter<F>> = Vec::with_capacity(2 * n);
        for _ in 0..n {
            w.push(Tagged::Left(FnDesc::identity()));
            w.push(Tagged::Right(FnDesc::identity()));
        }
        c.push(fp.moment(&w)?);
    }
    Ok(TruncatedSeries::new(c))
}

/// `ω₁`, `ω₂` through `order` over an existing joint oracle.
pub fn omega_series_with<F: Scalar>(
    fp: &LawProduct<'_, F>,
    order: usize,
    route: Route,
) -> Result<SubordinationPair<F>> {
    match route {
        Route::BooleanSeries => {
            let calc = CumulantCalculator::new(fp);
            let mut w1 = alloc::vec![F::zero()];
            let mut w2 = alloc::vec![F::zero()];
            for k in 1..=order {
                w1.push(calc.cumulant(&alternating(k, true), CumulantKind::Boolean)?);
                w2.push(calc.cumulant(&alternating(k, false), CumulantKind::Boolean)?);
            }
            Ok(SubordinationPair {
                omega1: TruncatedSeries::new(w1),
                omega2: TruncatedSeries::new(w2),
                source: route,
            })
        }
        Route::Reversion => {
            let muv = moment_series_uv(fp, order)?;
            let mu = fp.left().law().transform_series(Transform::M, order)?;
            let mv = fp.right().law().transform_series(Transform::M, order)?;
            for m in [&mu, &mv] {
                if m.coeff(1).is_zero() {
                    return Err(Error::ReversionDomain);
                }
            }
            Ok(SubordinationPair {
                omega1: mv.revert()?.compose(&muv)?,
                omega2: mu.revert()?.compose(&muv)?,
                source: route,
            })
        }
    }
}

/// `ω₁`, `ω₂` through `order` for `U ~ u`, `V ~ v` free.
pub fn omega_series<F: Scalar>(
    u: &SpectralDistribution<F>,
    v: &SpectralDistribution<F>,
    route: Route,
    order: usize,
) -> Result<SubordinationPair<F>> {
    let fp = LawProduct::from_laws(u, v, EvalMode::Exact);
    omega_series_with(&fp, order, route)
}

/// `(M_UV, M_V∘ω₁, M_U∘ω₂)`, which agree for a correct pair.
pub fn subordination_sides<F: Scalar>(
    u: &SpectralDistribution<F>,
    v: &SpectralDistribution<F>,
    pair: &SubordinationPair<F>,
) -> Result<[TruncatedSeries<F>; 3]> {
    let order = pair.omega1.order();
    let fp = LawProduct::from_laws(u, v, EvalMode::Exact);
    let muv = moment_series_uv(&fp, order)?;
    let mu = u.transform_series(Transform::M, order)?;
    let mv = v.transform_series(Transform::M, order)?;
    Ok([muv, mv.compose(&pair.omega1)?, mu.compose(&pair.omega2)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_frac(n, d)
    }

    #[test]
    fn routes_agree_and_subordinate() {
        let u = SpectralDistribution::free_binomial(q(1, 1), q(2, 1), 8).unwrap();
        let v = SpectralDistribution::free_poisson(q(1, 1), q(3, 1), 8).unwrap();
        let b = omega_series(&u, &v, Route::BooleanSeries, 6).unwrap();
        let r = omega_series(&u, &v, Route::Reversion, 6).unwrap();
        assert_eq!(b.omega1, r.omega1);
        assert_eq!(b.omega2, r.omega2);
        assert_eq!(b.omega1.coeff(1), &u.moments()[1]);
        assert_eq!(b.omega2.coeff(1), &v.moments()[1]);
        let [a, x, y] = subordination_sides(&u, &v, &b).unwrap();
        assert_eq!(a, x);
        assert_eq!(a, y);
    }

    #[test]
    fn unit_right_factor() {
        let u = SpectralDistribution::free_binomial(q(1, 1), q(2, 1), 6).unwrap();
        let v = SpectralDistribution::point(q(1, 1), 6).unwrap();
        let b = omega_series(&u, &v, Route::BooleanSeries, 6).unwrap();
        assert_eq!(b.omega2, TruncatedSeries::identity(6));
    }
}
