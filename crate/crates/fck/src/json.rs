//! JSON formats for series, laws and cumulant tables. Scalars travel as
//! strings: `p/q` on the exact backend, decimals on the float backend.

use std::collections::BTreeMap;

use fck_core::distributions::{LawLabel, SpectralDistribution, Support};
use fck_core::{Error, Scalar, TruncatedSeries};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

fn parse<F: Scalar>(s: &str) -> CliResult<F> {
    F::parse(s).ok_or_else(|| Error::Parse(format!("bad scalar {s:?}")).into())
}

fn parse_all<F: Scalar>(v: &[String]) -> CliResult<Vec<F>> {
    v.iter().map(|s| parse(s)).collect()
}

fn strings<F: Scalar>(v: &[F]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn check_backend<F: Scalar>(found: &str) -> CliResult<()> {
    if found != F::BACKEND.name() {
        return Err(Error::Dimension(format!("file holds {found} scalars, run uses {}", F::BACKEND.name())).into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub order: usize,
    pub backend: String,
    pub coeffs: Vec<String>,
}

impl SeriesJson {
    pub fn from_series<F: Scalar>(s: &TruncatedSeries<F>) -> Self {
        SeriesJson { order: s.order(), backend: F::BACKEND.name().into(), coeffs: strings(s.coeffs()) }
    }

    pub fn to_series<F: Scalar>(&self) -> CliResult<TruncatedSeries<F>> {
        check_backend::<F>(&self.backend)?;
        if self.coeffs.len() != self.order + 1 {
            return Err(Error::Dimension(format!("order {} with {} coefficients", self.order, self.coeffs.len())).into());
        }
        Ok(TruncatedSeries::new(parse_all(&self.coeffs)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportJson {
    pub interval: Option<[String; 2]>,
    pub atoms: Vec<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawJson {
    /// `poisson`, `binomial`, `bernoulli`, `point`, or `moments`.
    pub law: String,
    pub params: Vec<String>,
    pub order: usize,
    pub backend: String,
    pub moments: Vec<String>,
    pub free_cumulants: Vec<String>,
    pub support: Option<SupportJson>,
}

/// Builds a named law from string parameters.
pub fn make_law<F: Scalar>(law: &str, params: &[String], order: usize) -> CliResult<SpectralDistribution<F>> {
    let p: Vec<F> = parse_all(params)?;
    let want = |n: usize| -> CliResult<()> {
        if p.len() != n {
            return Err(CliError::Usage(format!("law {law} takes {n} parameters, got {}", p.len())));
        }
        Ok(())
    };
    let law = match law {
        "poisson" => {
            want(2)?;
            SpectralDistribution::free_poisson(p[0].clone(), p[1].clone(), order)?
        }
        "binomial" => {
            want(2)?;
            SpectralDistribution::free_binomial(p[0].clone(), p[1].clone(), order)?
        }
        "bernoulli" => {
            want(2)?;
            SpectralDistribution::bernoulli(p[0].clone(), p[1].clone(), order)?
        }
        "point" => {
            want(1)?;
            SpectralDistribution::point(p[0].clone(), order)?
        }
        other => return Err(CliError::Usage(format!("unknown law {other:?}"))),
    };
    Ok(law)
}

impl LawJson {
    pub fn from_law<F: Scalar>(d: &SpectralDistribution<F>) -> Self {
        let (law, params) = match &d.label {
            LawLabel::FreePoisson { alpha, lambda } => ("poisson", vec![alpha, lambda]),
            LawLabel::FreeBinomial { sigma, theta } => ("binomial", vec![sigma, theta]),
            LawLabel::Bernoulli { p, a } => ("bernoulli", vec![p, a]),
            LawLabel::Point { c } => ("point", vec![c]),
            _ => ("moments", vec![]),
        };
        LawJson {
            law: law.into(),
            params: params.into_iter().map(|x| x.to_string()).collect(),
            order: d.order(),
            backend: F::BACKEND.name().into(),
            moments: strings(d.moments()),
            free_cumulants: strings(d.free_cumulants()),
            support: d.support.as_ref().map(|s| SupportJson {
                interval: s.interval.as_ref().map(|(a, b)| [a.to_string(), b.to_string()]),
                atoms: s.atoms.iter().map(|(x, w)| [x.to_string(), w.to_string()]).collect(),
            }),
        }
    }

    /// Named laws are rebuilt from their parameters (so they keep their
    /// cumulant equation); anything else from the stored moments.
    pub fn to_law<F: Scalar>(&self) -> CliResult<SpectralDistribution<F>> {
        check_backend::<F>(&self.backend)?;
        if self.law != "moments" {
            return make_law(&self.law, &self.params, self.order);
        }
        let support = match &self.support {
            None => None,
            Some(s) => Some(Support {
                interval: match &s.interval {
                    Some([a, b]) => Some((parse(a)?, parse(b)?)),
                    None => None,
                },
                atoms: s.atoms.iter().map(|[x, w]| Ok((parse(x)?, parse(w)?))).collect::<CliResult<_>>()?,
            }),
        };
        Ok(SpectralDistribution::from_moments(parse_all(&self.moments)?, support, LawLabel::Custom)?)
    }
}

/// Values keyed by words of whitespace-separated letter names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordTable {
    /// `moments`, `free` or `boolean`.
    pub kind: String,
    pub backend: String,
    pub entries: BTreeMap<String, String>,
}

pub fn split_word(w: &str) -> Vec<String> {
    w.split_whitespace().map(String::from).collect()
}

impl WordTable {
    pub fn parse_entries<F: Scalar>(&self) -> CliResult<BTreeMap<Vec<String>, F>> {
        check_backend::<F>(&self.backend)?;
        self.entries.iter().map(|(k, v)| Ok((split_word(k), parse(v)?))).collect()
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &std::path::Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
