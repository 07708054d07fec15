//! The verification suite: one report row per checked identity, modules in
//! dependency order.

use std::collections::BTreeMap;

use clap::ValueEnum;
use fck_core::condexp::{
    boolean_powers_identity, condexp_pairing, eta_anchored, eta_f_series, eta_fg_series, lukacs_ab, pairing_direct,
    Analytic, EtaPath,
};
use fck_core::cumulants::{
    boolean_cumulant_of_products, mixed_moment_boolean, moments_from_cumulants, odd_boolean_identity,
    CumulantCalculator, CumulantKind, CumulantTable, MixedPath, MomentOracle, ProductOracle,
};
use fck_core::distributions::{
    free_cumulants_from_moments, moments_from_free_cumulants, EvalMode, LawLabel, LawOracle, Method,
    SpectralDistribution, Transform,
};
use fck_core::freeprod::{freeness_report, normalize_half, parse_word, HalfLetter, LawProduct, Letter, Tagged};
use fck_core::func::FnDesc;
use fck_core::lukacs::{
    algebraic_identity_checks, closed_form_s, constants_from_params, direct_lukacs_check, dual_lukacs_check,
    omega_identities, solve_regression_system, verify_regression_forward, Check, Mode,
    RegressionConstants,
};
use fck_core::partitions::{compare_leq, enumerate_partitions, join_partitions, Family, Partition};
use fck_core::subordination::{moment_series_uv, omega_series_with, subordination_sides, Route};
use fck_core::{Float, Rational, Scalar, TruncatedSeries};

use crate::config::{BackendArg, RunConfig};
use crate::error::CliResult;
use crate::report::{bool_row, error_row, scalar_row, series_row, Report, Row, Verdict};
use crate::seed::ParamStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Scope {
    All,
    Partitions,
    Series,
    Cumulants,
    Distributions,
    Freeprod,
    Subordination,
    Condexp,
    Lukacs,
}

const MODULES: [Scope; 8] = [
    Scope::Partitions,
    Scope::Series,
    Scope::Cumulants,
    Scope::Distributions,
    Scope::Freeprod,
    Scope::Subordination,
    Scope::Condexp,
    Scope::Lukacs,
];

impl Scope {
    fn name(self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::Partitions => "partitions",
            Scope::Series => "series",
            Scope::Cumulants => "cumulants",
            Scope::Distributions => "distributions",
            Scope::Freeprod => "freeprod",
            Scope::Subordination => "subordination",
            Scope::Condexp => "condexp",
            Scope::Lukacs => "lukacs",
        }
    }
}

/// Regression constants for the lukacs battery instead of seeded ones.
#[derive(Debug, Clone, Default)]
pub struct LukacsOverrides {
    pub alpha: Option<String>,
    pub b: Option<String>,
    pub c: Option<String>,
    pub d: Option<String>,
}

/// Runs the selected batteries; module `k` (in dependency order, from 0)
/// draws its parameters from the stream of `seed + k`.
pub fn run_verification_suite(cfg: &RunConfig, scope: Scope, overrides: &LukacsOverrides) -> Report {
    cfg.apply();
    match cfg.backend {
        BackendArg::Exact => run::<Rational>(cfg, scope, overrides),
        BackendArg::Float => run::<Float>(cfg, scope, overrides),
    }
}

struct Ctx<'a, F> {
    cfg: &'a RunConfig,
    tol: F,
    ps: ParamStream,
    module: &'static str,
    report: Report,
}

impl<F: Scalar> Ctx<'_, F> {
    fn push(&mut self, row: Row) {
        self.report.push(self.module, row);
    }

    /// Runs `f`, turning an error into an error row.
    fn attempt(&mut self, identity: &str, params: &str, f: impl FnOnce(&mut Self) -> CliResult<Vec<Row>>) {
        match f(self) {
            Ok(rows) => rows.into_iter().for_each(|r| self.push(r)),
            Err(e) => self.push(error_row(identity, params, &e)),
        }
    }

    fn order(&self, cap: usize) -> usize {
        self.cfg.order.clamp(2, cap)
    }
}

fn run<F: Scalar>(cfg: &RunConfig, scope: Scope, ov: &LukacsOverrides) -> Report {
    let mut report = Report::new();
    let tol = match cfg.tolerance::<F>() {
        Ok(t) => t,
        Err(e) => {
            report.push("config", error_row("tolerance", "", &e));
            return report;
        }
    };
    for (k, m) in MODULES.iter().enumerate() {
        if scope != Scope::All && scope != *m {
            continue;
        }
        let mut cx = Ctx {
            cfg,
            tol: tol.clone(),
            ps: ParamStream::new(cfg.seed.wrapping_add(k as u64)),
            module: m.name(),
            report: Report::new(),
        };
        match m {
            Scope::Partitions => partitions(&mut cx),
            Scope::Series => series(&mut cx),
            Scope::Cumulants => cumulants(&mut cx),
            Scope::Distributions => distributions(&mut cx),
            Scope::Freeprod => freeprod(&mut cx),
            Scope::Subordination => subordination(&mut cx),
            Scope::Condexp => condexp(&mut cx),
            Scope::Lukacs => lukacs(&mut cx, ov),
            Scope::All => unreachable!(),
        }
        report.extend(cx.report);
    }
    report
}

fn check_row<F: Scalar>(c: &Check<F>, params: &str) -> Row {
    Row {
        key: String::new(),
        module: String::new(),
        identity: c.name.clone(),
        params: params.into(),
        backend: F::BACKEND.name().into(),
        lhs: c.lhs.to_string(),
        rhs: c.rhs.to_string(),
        delta: c.delta.to_string(),
        tolerance: c.tolerance.to_string(),
        verdict: if c.pass { Verdict::Pass } else { Verdict::Fail },
    }
}

// ---------------------------------------------------------------- partitions

fn partitions<F: Scalar>(cx: &mut Ctx<'_, F>) {
    cx.attempt("partition lattice", "", |_| {
        let mut rows = Vec::new();
        for n in 1..=12usize {
            let all = if n <= 10 { Some(enumerate_partitions(n, Family::All)?) } else { None };
            let int = enumerate_partitions(n, Family::Interval)?;
            let expect = 1usize << (n - 1);
            rows.push(scalar_row("|Int(n)| = 2^(n-1)", format!("n = {n}"), &(int.len() as i64).into_rational(), &(expect as i64).into_rational(), &Rational::from_i64(0)));
            if let Some(all) = all {
                let nc = enumerate_partitions(n, Family::NonCrossing)?;
                let brute_nc: Vec<&Partition> = all.iter().filter(|p| p.is_noncrossing()).collect();
                let brute_int: Vec<&Partition> = all.iter().filter(|p| p.is_interval()).collect();
                rows.push(bool_row("NC(n) equals crossing-test filter of P(n)", format!("n = {n}"), nc.iter().eq(brute_nc.iter().copied()), format!("{} vs {}", nc.len(), brute_nc.len())));
                rows.push(bool_row("Int(n) equals interval-test filter of P(n)", format!("n = {n}"), int.iter().eq(brute_int.iter().copied()), format!("{} vs {}", int.len(), brute_int.len())));
            }
        }
        for fam in [Family::All, Family::NonCrossing, Family::Interval] {
            let mut ok = true;
            for n in 1..=6 {
                let ps = enumerate_partitions(n, fam)?;
                for p in &ps {
                    ok &= compare_leq(p, p)?;
                    for q in &ps {
                        let pq = compare_leq(p, q)?;
                        if pq && p != q {
                            ok &= !compare_leq(q, p)?;
                        }
                        if pq {
                            for r in &ps {
                                if compare_leq(q, r)? {
                                    ok &= compare_leq(p, r)?;
                                }
                            }
                        }
                    }
                }
            }
            rows.push(bool_row("refinement order is a partial order", format!("{fam:?}, n ≤ 6"), ok, ""));
        }
        let mut ok = true;
        for n in 1..=6 {
            let ps = enumerate_partitions(n, Family::All)?;
            for p in &ps {
                for q in &ps {
                    let j = join_partitions(p, q)?;
                    ok &= compare_leq(p, &j)? && compare_leq(q, &j)?;
                    for r in &ps {
                        if compare_leq(p, r)? && compare_leq(q, r)? {
                            ok &= compare_leq(&j, r)?;
                        }
                    }
                }
            }
        }
        rows.push(bool_row("join is the least upper bound", "n ≤ 6", ok, ""));
        let mut ok = true;
        for n in 1..=8 {
            let ps = enumerate_partitions(n, Family::Interval)?;
            for p in &ps {
                for q in &ps {
                    ok &= join_partitions(p, q)?.is_interval();
                }
            }
        }
        rows.push(bool_row("join of interval partitions is interval", "n ≤ 8", ok, ""));
        Ok(rows)
    });
}

trait IntoRational {
    fn into_rational(self) -> Rational;
}

impl IntoRational for i64 {
    fn into_rational(self) -> Rational {
        Rational::from_i64(self)
    }
}

// ---------------------------------------------------------------- series

fn random_series<F: Scalar>(ps: &mut ParamStream, order: usize) -> TruncatedSeries<F> {
    TruncatedSeries::new((0..=order).map(|_| ps.scalar(-20, 20, 7)).collect())
}

fn series<F: Scalar>(cx: &mut Ctx<'_, F>) {
    let n = cx.order(12);
    let params = format!("order {n}");
    cx.attempt("series ring laws", &params, |cx| {
        let tol = cx.tol.clone();
        let (a, b, c) = (random_series::<F>(&mut cx.ps, n), random_series(&mut cx.ps, n), random_series(&mut cx.ps, n));
        let mut rows = Vec::new();
        let l = a.mul(&b)?.mul(&c)?;
        let r = a.mul(&b.mul(&c)?)?;
        rows.push(series_row("(fg)h = f(gh)", &params, l.coeffs(), r.coeffs(), &tol));
        let l = a.mul(&b.add(&c)?)?;
        let r = a.mul(&b)?.add(&a.mul(&c)?)?;
        rows.push(series_row("f(g+h) = fg + fh", &params, l.coeffs(), r.coeffs(), &tol));
        let mut d = b.clone();
        d.set_coeff(0, F::from_i64(cx.ps.int(1, 5)));
        let q = a.div(&d)?;
        rows.push(series_row("(f/g)·g = f", &params, q.mul(&d)?.coeffs(), a.coeffs(), &tol));
        for _ in 0..3 {
            let mut f = random_series::<F>(&mut cx.ps, n);
            f.set_coeff(0, F::zero());
            f.set_coeff(1, F::from_i64(cx.ps.int(1, 4)));
            let g = f.revert()?;
            rows.push(series_row("f∘f⁻¹ = z", &params, f.compose(&g)?.coeffs(), TruncatedSeries::<F>::identity(n).coeffs(), &tol));
        }
        let h = random_series::<F>(&mut cx.ps, n);
        let h1 = h.partial_sum();
        let zm1 = TruncatedSeries::new(vec![-F::one(), F::one()]).with_order(n);
        let back = h.psi_of_d(&h1).mul(&zm1)?.truncate(n - 1);
        rows.push(series_row("(z-1)·ψ(D)h = h - h(1)", &params, back.coeffs(), h.add_constant(&-h1).truncate(n - 1).coeffs(), &tol));
        let dh = h.zero_derivative(1).with_order(n).mul_z();
        rows.push(series_row("z·Dh = h - h(0)", &params, dh.coeffs(), h.add_constant(&-h.coeff(0).clone()).coeffs(), &tol));
        Ok(rows)
    });
}

// ---------------------------------------------------------------- cumulants

struct TableOracle<F>(BTreeMap<Vec<u8>, F>);

impl<F: Scalar> MomentOracle for TableOracle<F> {
    type Arg = u8;
    type Scalar = F;
    fn moment(&self, word: &[u8]) -> fck_core::Result<F> {
        if word.is_empty() {
            return Ok(F::one());
        }
        self.0.get(word).cloned().ok_or_else(|| fck_core::Error::Capability(format!("no moment for {word:?}")))
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

fn random_law<F: Scalar>(ps: &mut ParamStream, order: usize) -> SpectralDistribution<F> {
    let mut kappa = vec![F::zero()];
    for _ in 0..order {
        kappa.push(ps.scalar(-6, 6, 5));
    }
    SpectralDistribution::from_free_cumulants(kappa, None, LawLabel::Custom)
}

fn cumulants<F: Scalar>(cx: &mut Ctx<'_, F>) {
    let len = cx.order(7);
    cx.attempt("moment-cumulant round trip", "", |cx| {
        let tol = cx.tol.clone();
        let ws = words(len);
        let table: BTreeMap<Vec<u8>, F> = ws.iter().map(|w| (w.clone(), cx.ps.scalar(-9, 9, 4))).collect();
        let oracle = TableOracle(table);
        let calc = CumulantCalculator::new(&oracle);
        let mut rows = Vec::new();
        for kind in [CumulantKind::Free, CumulantKind::Boolean] {
            let t = CumulantTable::from_oracle(&calc, &ws, kind)?;
            for n in 1..=len {
                let mut worst = F::zero();
                for w in ws.iter().filter(|w| w.len() == n) {
                    let back = moments_from_cumulants(&t, w)?;
                    worst = F::max_of(worst, (back - &oracle.0[w]).abs());
                }
                rows.push(scalar_row(format!("{kind:?} cumulants → moments reproduces φ"), format!("words over {{0,1}} of length {n}"), &worst, &F::zero(), &tol));
            }
        }
        Ok(rows)
    });
    cx.attempt("mixed free cumulants vanish", "", |cx| {
        let tol = cx.tol.clone();
        let u = random_law::<F>(&mut cx.ps, 12);
        let v = random_law::<F>(&mut cx.ps, 12);
        let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
        let x = FnDesc::identity();
        let top = len.min(6);
        let rep = freeness_report(&fp, &[x.clone()], &[x], top, if tol.is_zero() { None } else { Some(&tol) })?;
        Ok(vec![scalar_row("max |κ| over mixed tag words", format!("random marginals, length ≤ {top}"), &rep.max_abs, &F::zero(), &tol)])
    });
    cx.attempt("Boolean cumulants with products as entries", "", |cx| {
        let tol = cx.tol.clone();
        let top = cx.order(8);
        let ws = words(top);
        let table: BTreeMap<Vec<u8>, F> = ws.iter().map(|w| (w.clone(), cx.ps.scalar(-9, 9, 4))).collect();
        let oracle = TableOracle(table);
        let calc = CumulantCalculator::new(&oracle);
        let grouped = CumulantCalculator::new(ProductOracle(&oracle));
        let mut rows = Vec::new();
        for n in 1..=top {
            let bits = cx.ps.int(0, (1 << n) - 1) as u32;
            let w: Vec<u8> = (0..n).map(|i| (bits >> i & 1) as u8).collect();
            let mut worst = F::zero();
            for sigma in enumerate_partitions(n, Family::Interval)? {
                let args: Vec<Vec<u8>> = sigma.blocks().iter().map(|b| b.iter().map(|&i| w[i - 1]).collect()).collect();
                let l = grouped.cumulant(&args, CumulantKind::Boolean)?;
                let r = boolean_cumulant_of_products(&calc, &w, &sigma)?;
                worst = F::max_of(worst, (l - &r).abs());
            }
            rows.push(scalar_row("β(grouped) = Σ_{π∨σ=1} β_π", format!("word {w:?}, all interval groupings"), &worst, &F::zero(), &tol));
        }
        Ok(rows)
    });
    cx.attempt("mixed moments through Boolean cumulants", "", |cx| {
        let tol = cx.tol.clone();
        let u = random_law::<F>(&mut cx.ps, 12);
        let v = random_law::<F>(&mut cx.ps, 12);
        let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
        let joint: &dyn MomentOracle<Arg = Letter<F>, Scalar = F> = &fp;
        let fs = [
            FnDesc::identity(),
            FnDesc::monomial(2),
            FnDesc::poly(&[F::one(), F::from_i64(2)]),
            FnDesc::poly(&[F::zero(), F::one(), -F::one()]),
        ];
        let mut rows = Vec::new();
        for n in 1..=5 {
            let xs: Vec<_> = (0..n).map(|i| fs[i % 4].clone()).collect();
            let ys: Vec<_> = (0..n).map(|i| fs[(i + 1) % 4].clone()).collect();
            let direct = mixed_moment_boolean(joint, &xs, &ys, MixedPath::Direct)?;
            let b1 = mixed_moment_boolean(joint, &xs, &ys, MixedPath::OuterBlock)?;
            let rf = mixed_moment_boolean(joint, &xs, &ys, MixedPath::Reformulated)?;
            rows.push(scalar_row("φ(X1Y1⋯XnYn): outer-block sum vs free product", format!("n = {n}"), &b1, &direct, &tol));
            rows.push(scalar_row("φ(X1Y1⋯XnYn): gap-length sum vs free product", format!("n = {n}"), &rf, &direct, &tol));
            let xs1: Vec<_> = (0..=n).map(|i| fs[(i + 2) % 4].clone()).collect();
            let (l, r) = odd_boolean_identity(joint, &xs1, &ys)?;
            rows.push(scalar_row("odd alternating Boolean cumulant factorisation", format!("n = {n}"), &l, &r, &tol));
        }
        Ok(rows)
    });
}

// ---------------------------------------------------------------- distributions

fn distributions<F: Scalar>(cx: &mut Ctx<'_, F>) {
    let n = cx.order(14);
    cx.attempt("law zoo", "", |cx| {
        let tol = cx.tol.clone();
        let a: F = cx.ps.scalar(1, 8, 4);
        let l: F = cx.ps.scalar(5, 16, 4);
        let s: F = cx.ps.scalar(2, 8, 4);
        let t: F = cx.ps.scalar(5, 12, 4);
        let p = SpectralDistribution::free_poisson(a.clone(), l.clone(), n)?;
        let b = SpectralDistribution::free_binomial(s.clone(), t.clone(), n)?;
        let zoo = vec![
            (format!("μ({a}, {l})"), p.clone()),
            (format!("ν({s}, {t})"), b.clone()),
            ("Bernoulli(1/3, 2)".into(), SpectralDistribution::bernoulli(F::from_frac(1, 3), F::from_i64(2), n)?),
            ("δ(-3/2)".into(), SpectralDistribution::point(F::from_frac(-3, 2), n)?),
            ("1 - ν".into(), b.affine(&F::one(), &-F::one())?),
            ("μ ⊞ μ".into(), p.free_convolve(&p)?),
        ];
        let mut rows = Vec::new();
        for (name, law) in &zoo {
            let k = free_cumulants_from_moments(law.moments());
            rows.push(series_row("moments → free cumulants matches the law", name.clone(), &k, law.free_cumulants(), &tol));
            let m = moments_from_free_cumulants(law.free_cumulants());
            rows.push(series_row("free cumulants → moments matches the law", name.clone(), &m, law.moments(), &tol));
        }
        let sp = p.transform_series(Transform::S, n)?;
        let den = TruncatedSeries::new(vec![a.clone() * &l, a.clone()]).with_order(n - 1);
        let want = TruncatedSeries::one(n - 1).div(&den)?;
        rows.push(series_row("S_μ = 1/(αλ + αz)", format!("α = {a}, λ = {l}"), sp.coeffs(), want.coeffs(), &tol));
        let sb = b.transform_series(Transform::S, n)?;
        let den = TruncatedSeries::new(vec![s.clone(), F::one()]).with_order(n - 1);
        let want = TruncatedSeries::constant(t.clone(), n - 1).div(&den)?.add_constant(&F::one());
        rows.push(series_row("S_ν = 1 + θ/(σ + z)", format!("σ = {s}, θ = {t}"), sb.coeffs(), want.coeffs(), &tol));
        let m = n.min(10);
        let fp = LawProduct::from_laws(&b, &p, EvalMode::Exact);
        let muv = moment_series_uv(&fp, m)?;
        let mut mm = muv.coeffs().to_vec();
        mm[0] = F::one();
        let uv = SpectralDistribution::from_moments(mm, None, LawLabel::Custom)?;
        let s_uv = uv.transform_series(Transform::S, m)?;
        let prod = b.transform_series(Transform::S, m)?.mul(&p.transform_series(Transform::S, m)?)?;
        rows.push(series_row("S_UV = S_U S_V", format!("U ~ ν({s}, {t}), V ~ μ({a}, {l}), order {m}"), s_uv.coeffs(), prod.coeffs(), &tol));
        Ok(rows)
    });
    cx.attempt("Neumann vs quadrature", "", |cx| {
        let mut rows = Vec::new();
        let slack = Float::parse("1e-30").unwrap();
        let f = FnDesc::inv_one_minus().add(&FnDesc::monomial(2));
        for _ in 0..3 {
            let s: Float = cx.ps.scalar(4, 12, 4);
            let t: Float = cx.ps.scalar(6, 16, 4);
            let b = SpectralDistribution::free_binomial(s.clone(), t.clone(), 8)?;
            let neu = b.expect_function(&f, Method::Neumann { degree: 300 })?;
            let quad = b.expect_function(&f, Method::Quadrature { budget: 1 << 16 })?;
            let bound = neu.tail_bound + &quad.tail_bound + &slack;
            rows.push(scalar_row("φ((1-U)^-1 + U²): Neumann vs quadrature", format!("ν({s}, {t})"), &neu.value, &quad.value, &bound));
        }
        Ok(rows)
    });
}

// ---------------------------------------------------------------- freeprod

fn random_fn<F: Scalar>(ps: &mut ParamStream) -> FnDesc<F> {
    match ps.int(0, 3) {
        0 => FnDesc::identity(),
        1 => FnDesc::monomial(2),
        2 => FnDesc::poly(&[ps.scalar(-3, 3, 2), F::one()]),
        _ => FnDesc::poly(&[F::zero(), ps.scalar(-2, 2, 1), F::from_frac(1, 3)]),
    }
}

fn random_word<F: Scalar>(ps: &mut ParamStream, len: usize) -> Vec<Letter<F>> {
    (0..len)
        .map(|_| if ps.int(0, 1) == 0 { Tagged::Left(random_fn(ps)) } else { Tagged::Right(random_fn(ps)) })
        .collect()
}

fn standard_pair<F: Scalar>(ps: &mut ParamStream, order: usize) -> CliResult<(SpectralDistribution<F>, SpectralDistribution<F>, String)> {
    let (s, t, a, l): (F, F, F, F) = (ps.scalar(2, 8, 4), ps.scalar(5, 12, 4), ps.scalar(1, 8, 4), ps.scalar(5, 16, 4));
    let params = format!("U ~ ν({s}, {t}), V ~ μ({a}, {l})");
    Ok((SpectralDistribution::free_binomial(s, t, order)?, SpectralDistribution::free_poisson(a, l, order)?, params))
}

fn freeprod<F: Scalar>(cx: &mut Ctx<'_, F>) {
    cx.attempt("free product moments", "", |cx| {
        let tol = cx.tol.clone();
        let (u, v, params) = standard_pair::<F>(&mut cx.ps, 16)?;
        let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
        let mut rows = Vec::new();
        for _ in 0..5 {
            let len = cx.ps.int(2, 10) as usize;
            let w = random_word::<F>(&mut cx.ps, len);
            let r = cx.ps.int(1, len as i64 - 1) as usize;
            let rot: Vec<_> = w[r..].iter().chain(&w[..r]).cloned().collect();
            rows.push(scalar_row("φ is tracial", format!("{params}; length {len}, rotation {r}"), &fp.moment(&rot)?, &fp.moment(&w)?, &tol));
        }
        let k = cx.order(8);
        let wu: Vec<Letter<F>> = vec![Tagged::Left(FnDesc::identity()); k];
        let wv: Vec<Letter<F>> = vec![Tagged::Right(FnDesc::identity()); k];
        rows.push(scalar_row("single-tag word = marginal moment", format!("{params}; U^{k}"), &fp.moment(&wu)?, &u.moments()[k], &tol));
        rows.push(scalar_row("single-tag word = marginal moment", format!("{params}; V^{k}"), &fp.moment(&wv)?, &v.moments()[k], &tol));
        for len in 1..=6 {
            let w: Vec<Letter<F>> = (0..len)
                .map(|i| {
                    let f = random_fn::<F>(&mut cx.ps);
                    let law = if i % 2 == 0 { &u } else { &v };
                    let mean = law.expect_function(&f, Method::ExactPoly)?.value;
                    let c = f.add_constant(&-mean);
                    Ok(if i % 2 == 0 { Tagged::Left(c) } else { Tagged::Right(c) })
                })
                .collect::<CliResult<_>>()?;
            rows.push(scalar_row("alternating centred product vanishes", format!("{params}; length {len}"), &fp.moment(&w)?, &F::zero(), &tol));
        }
        let mut worst = F::zero();
        for _ in 0..20 {
            let len = cx.ps.int(1, 8) as usize;
            let w = random_word::<F>(&mut cx.ps, len);
            worst = F::max_of(worst, (fp.moment_by_enumeration(&w)? - &fp.moment_by_centering(&w)?).abs());
        }
        rows.push(scalar_row("coloured NC sum = recursive centring", format!("{params}; 20 words of length ≤ 8"), &worst, &F::zero(), &tol));
        let a = fp.eval_half(&parse_word::<F>("V^1/2 U V U V^1/2")?)?;
        let b = fp.eval_half(&parse_word::<F>("U V U V")?)?;
        rows.push(scalar_row("square roots cancel under the trace", params.clone(), &a, &b, &tol));
        Ok(rows)
    });
}

// ---------------------------------------------------------------- subordination

fn subordination<F: Scalar>(cx: &mut Ctx<'_, F>) {
    let n = cx.order(10);
    for _ in 0..2 {
        cx.attempt("subordination", "", |cx| {
            let tol = cx.tol.clone();
            let (u, v, params) = standard_pair::<F>(&mut cx.ps, n)?;
            let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
            let b = omega_series_with(&fp, n, Route::BooleanSeries)?;
            let r = omega_series_with(&fp, n, Route::Reversion)?;
            let [muv, via1, via2] = subordination_sides(&u, &v, &b)?;
            Ok(vec![
                series_row("ω₁: Boolean cumulants = reversion", params.clone(), b.omega1.coeffs(), r.omega1.coeffs(), &tol),
                series_row("ω₂: Boolean cumulants = reversion", params.clone(), b.omega2.coeffs(), r.omega2.coeffs(), &tol),
                series_row("M_UV = M_V∘ω₁", params.clone(), muv.coeffs(), via1.coeffs(), &tol),
                series_row("M_UV = M_U∘ω₂", params.clone(), muv.coeffs(), via2.coeffs(), &tol),
            ])
        });
    }
    cx.attempt("square roots on either side", "", |cx| {
        let tol = cx.tol.clone();
        let (u, v, params) = standard_pair::<F>(&mut cx.ps, n)?;
        let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut c = Vec::new();
        for k in 1..=4 {
            let rep = |s: &str| vec![s; k].join(" ");
            a.push(fp.eval_half(&parse_word(&rep("U V"))?)?);
            b.push(fp.eval_half(&parse_word(&rep("U^1/2 V U^1/2"))?)?);
            c.push(fp.eval_half(&parse_word(&rep("V^1/2 U V^1/2"))?)?);
        }
        Ok(vec![
            series_row("φ((UV)^n) = φ((U^1/2 V U^1/2)^n)", params.clone(), &a, &b, &tol),
            series_row("φ((UV)^n) = φ((V^1/2 U V^1/2)^n)", params, &a, &c, &tol),
        ])
    });
}

// ---------------------------------------------------------------- condexp

fn condexp<F: Scalar>(cx: &mut Ctx<'_, F>) {
    let n = cx.order(8);
    cx.attempt("η closed forms", "", |cx| {
        let tol = cx.tol.clone();
        let (s, t): (F, F) = (cx.ps.scalar(2, 8, 4), cx.ps.scalar(5, 12, 4));
        let params = format!("U ~ ν({s}, {t}), order {n}");
        let law = SpectralDistribution::free_binomial(s, t, 3 * n)?;
        let u = LawOracle::new(&law, EvalMode::Exact);
        let mut rows = Vec::new();
        let fs = [Analytic::identity(), Analytic::Poly(vec![F::from_frac(1, 2), -F::one(), F::from_i64(2)]), Analytic::monomial(3)];
        for f in &fs {
            let d = eta_f_series(f, &u, n, EtaPath::Definition)?;
            let c = eta_f_series(f, &u, n, EtaPath::ClosedForm)?;
            rows.push(series_row(format!("η^f: definition = closed form, f = {}", f.to_fn().render("x")), &params, d.coeffs(), c.coeffs(), &tol));
            let g = &fs[0];
            let d = eta_fg_series(f, g, &u, n, EtaPath::Definition)?;
            let c = eta_fg_series(f, g, &u, n, EtaPath::ClosedForm)?;
            rows.push(series_row(format!("η^(f,id): definition = closed form, f = {}", f.to_fn().render("x")), &params, d.coeffs(), c.coeffs(), &tol));
        }
        let eta = eta_anchored(&u, n + 4, 0)?;
        let id = Analytic::identity();
        let d2 = eta.zero_derivative(2)?.at_zero.truncate(n);
        let e = eta_fg_series(&id, &id, &u, n, EtaPath::Definition)?;
        rows.push(series_row("η^(id,id) = D²η_U", &params, e.coeffs(), d2.coeffs(), &tol));
        for r in 1..=3usize {
            let mut want = TruncatedSeries::zero(n);
            for j in 1..=r {
                want = want.add(&eta.zero_derivative(j)?.at_zero.truncate(n).scale(&law.moments()[r - j]))?;
            }
            let got = eta_f_series(&Analytic::monomial(r), &u, n, EtaPath::Definition)?;
            rows.push(series_row(format!("η^(x^{r}) = Σ_j φ(U^(r-j)) D^j η_U"), &params, got.coeffs(), want.coeffs(), &tol));
        }
        let g = FnDesc::poly(&[F::one(), F::zero(), F::from_frac(1, 2)]);
        for r in 1..=6usize {
            let mut worst = F::zero();
            for i in 1..=8 - r {
                let (l, rr) = boolean_powers_identity(&g, &u, r, i)?;
                worst = F::max_of(worst, (l - &rr).abs());
            }
            rows.push(scalar_row("β(G, U, …, U, U^i) = Σ_m β(G, U, …) φ(U^(i-m))", format!("{params}; r = {r}, i ≤ {}", 8 - r), &worst, &F::zero(), &tol));
        }
        Ok(rows)
    });
    cx.attempt("conditional expectation pairing", "", |cx| {
        let tol = cx.tol.clone();
        let (u, v, params) = standard_pair::<F>(&mut cx.ps, 3 * n + 8)?;
        let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
        let basis = [Analytic::constant(F::one()), Analytic::identity(), Analytic::monomial(2), Analytic::monomial(3)];
        let mut rows = Vec::new();
        for f in &basis {
            for g in &basis {
                let p = condexp_pairing(f, g, &fp, n, 3)?;
                let mut worst = F::zero();
                for m in 0..=3 {
                    worst = F::max_of(worst, p.evaluator(m)?.max_abs_diff(&pairing_direct(f, g, &fp, n, m)?));
                }
                let name = format!("{params}; f = {}, g = {}, m ≤ 3, order {n}", f.to_fn().render("x"), g.to_fn().render("x"));
                rows.push(scalar_row("E_V pairing: closed form = joint moments", name, &worst, &F::zero(), &tol));
            }
        }
        Ok(rows)
    });
    cx.attempt("A(z), B(z) closed forms", "", |cx| {
        let tol = Float::parse("1e-25").unwrap();
        // θ ≥ 3 keeps the top of the spectrum of U well below 1, so the
        // Neumann degrees for a 1e-45 tail stay in the hundreds.
        let (s, t, a, l): (Float, Float, Float, Float) = (cx.ps.scalar(2, 8, 4), cx.ps.scalar(12, 24, 4), cx.ps.scalar(1, 8, 4), cx.ps.scalar(5, 16, 4));
        let params = format!("U ~ ν({s}, {t}), V ~ μ({a}, {l}), order {n}");
        let lu = SpectralDistribution::free_binomial(s, t, 16)?;
        let lv = SpectralDistribution::free_poisson(a, l, 16)?;
        let fp = LawProduct::from_laws(&lu, &lv, EvalMode::Neumann { tol: Float::parse("1e-45").unwrap() });
        let r = lukacs_ab(&fp, n, 3)?;
        let psi = Analytic::Psi;
        let mut rows = Vec::new();
        for m in 0..=3 {
            let d = r.pairing.evaluator(m)?.max_abs_diff(&pairing_direct(&psi, &psi, &fp, n, m)?);
            let bound = tol.clone() + &fp.tail_total();
            rows.push(scalar_row("E_V[ψ(U)VΨψ(U)] = B + zA²V(1+Ψ_V(ω₁)) paired with V^m", format!("{params}; m = {m}"), &d, &Float::zero(), &bound));
        }
        let law = lu;
        let u = LawOracle::new(&law, EvalMode::Neumann { tol: Float::parse("1e-45").unwrap() });
        let alpha = u.expect(&FnDesc::psi())?;
        let eta1 = alpha.clone() / (Float::one() + &alpha);
        let eta = law.transform_series(Transform::Eta, n)?;
        let zm1 = TruncatedSeries::new(vec![-Float::one(), Float::one()]).with_order(n);
        let back = eta.psi_of_d(&eta1).mul(&zm1)?.truncate(n - 1);
        let want = eta.add_constant(&-eta1).truncate(n - 1);
        let bound = u.tail_total() + &tol;
        rows.push(series_row("(z-1)·ψ(D)η_U = η_U - η_U(1)", params, back.coeffs(), want.coeffs(), &bound));
        Ok(rows)
    });
}

// ---------------------------------------------------------------- lukacs

fn parse_opt<F: Scalar>(s: &Option<String>, name: &str) -> CliResult<Option<F>> {
    match s {
        None => Ok(None),
        Some(t) => F::parse(t).map(Some).ok_or_else(|| crate::error::CliError::Usage(format!("bad value for {name}: {t:?}"))),
    }
}

fn lukacs<F: Scalar>(cx: &mut Ctx<'_, F>, ov: &LukacsOverrides) {
    let n = cx.order(12);
    // Seeded admissible parameters: θ > 1 keeps U away from 1.
    let sigma: F = cx.ps.scalar(2, 8, 4);
    let theta: F = cx.ps.scalar(5, 12, 4);
    let alpha_v: F = cx.ps.scalar(2, 8, 4);
    let forward = format!("σ = {sigma}, θ = {theta}, α_V = {alpha_v}");

    let requested = match (&ov.alpha, &ov.b, &ov.c, &ov.d) {
        (None, None, None, None) => forward.clone(),
        _ => [("α", &ov.alpha), ("b", &ov.b), ("c", &ov.c), ("d", &ov.d)]
            .iter()
            .map(|(k, v)| format!("{k} = {}", v.as_deref().unwrap_or("-")))
            .collect::<Vec<_>>()
            .join(", "),
    };
    cx.attempt("regression system", &requested, |cx| {
        let tol = cx.tol.clone();
        let given = (parse_opt::<F>(&ov.alpha, "alpha")?, parse_opt::<F>(&ov.b, "b")?, parse_opt::<F>(&ov.c, "c")?, parse_opt::<F>(&ov.d, "d")?);
        let (rc, mode) = match given {
            (None, None, None, None) => (constants_from_params(&sigma, &theta, &alpha_v)?, Mode::Th1),
            (Some(a), Some(b), Some(c), None) => (RegressionConstants::th1(a, b, c), Mode::Th1),
            (Some(a), None, Some(c), Some(d)) => (RegressionConstants::th2(a, c, d), Mode::Th2),
            _ => return Err(crate::error::CliError::Usage("give alpha with b and c, or alpha with c and d".into())),
        };
        let params = format!(
            "α = {}, b = {}, c = {}, d = {}",
            rc.alpha,
            rc.b.as_ref().map_or("-".into(), |x| x.to_string()),
            rc.c.as_ref().map_or("-".into(), |x| x.to_string()),
            rc.d.as_ref().map_or("-".into(), |x| x.to_string())
        );
        let r = solve_regression_system(&rc, mode, n)?;
        let (b, c) = rc.effective_bc(mode)?;
        let (su, sv) = closed_form_s(&rc.alpha, &b, &c, n - 1)?;
        let mut rows = vec![
            series_row("S_U = 1 + bc/(α + (bc-1)s)", &params, r.s_u.coeffs(), su.coeffs(), &tol),
            series_row("S_V = c/(bc + α + (bc-1)s)", &params, r.s_v.coeffs(), sv.coeffs(), &tol),
            series_row("S_UV = S_U S_V", &params, r.s_uv.coeffs(), r.s_u.mul(&r.s_v)?.coeffs(), &tol),
            scalar_row("λ_V = σ + θ", &params, &r.params.lambda_v, &(r.params.sigma.clone() + &r.params.theta), &tol),
        ];
        let d = b.clone() * c.powi(3);
        let r2 = solve_regression_system(&RegressionConstants::th2(rc.alpha.clone(), c.clone(), d), Mode::Th2, n)?;
        rows.push(series_row("(α, c, d) input with d = bc³ gives the same S_U", &params, r2.s_u.coeffs(), r.s_u.coeffs(), &tol));
        rows.push(series_row("(α, c, d) input with d = bc³ gives the same S_V", &params, r2.s_v.coeffs(), r.s_v.coeffs(), &tol));
        let back = constants_from_params(&r.params.sigma, &r.params.theta, &r.params.alpha_v)?;
        let (b2, c2) = back.effective_bc(Mode::Th1)?;
        rows.push(series_row("parameter maps round trip", &params, &[back.alpha, b2, c2], &[rc.alpha.clone(), b, c], &tol));
        Ok(rows)
    });
    cx.attempt("ω₂ identities", &forward, |cx| {
        let rep = omega_identities(&sigma, &theta, &alpha_v, n.min(10), &cx.tol)?;
        Ok(rep.checks.iter().map(|c| check_row(c, &forward)).collect())
    });
    cx.attempt("forward regression", &forward, |cx| {
        let slack = F::from_ratio(&fck_core::scalar::parse_rational("1e-20").unwrap());
        let tol = if cx.tol.is_zero() { F::zero() } else { cx.tol.clone() };
        let rep = verify_regression_forward(&sigma, &theta, &alpha_v, n.min(6), &tol, &slack, 16)?;
        Ok(rep.checks.iter().map(|c| check_row(c, &forward)).collect())
    });
    cx.attempt("algebraic identities", &forward, |cx| {
        let u = SpectralDistribution::free_binomial(sigma.clone(), theta.clone(), 16)?;
        let v = SpectralDistribution::free_poisson(alpha_v.clone(), sigma.clone() + &theta, 16)?;
        let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
        let rep = algebraic_identity_checks(&fp, n.min(4), 2, &cx.tol)?;
        // One row per identity family keeps the report short.
        let mut rows = Vec::new();
        let mut groups: BTreeMap<String, (bool, usize)> = BTreeMap::new();
        for c in &rep.checks {
            let key = c.name.split(',').next().unwrap_or(&c.name).to_string();
            let e = groups.entry(key).or_insert((true, 0));
            e.0 &= c.pass;
            e.1 += 1;
        }
        for (k, (ok, count)) in groups {
            rows.push(bool_row(k, format!("{forward}; {count} cases"), ok, ""));
        }
        Ok(rows)
    });
    let (l, k, a): (Rational, Rational, Rational) = (cx.ps.ratio(2, 8, 4), cx.ps.ratio(2, 8, 4), cx.ps.ratio(2, 8, 4));
    let dual = format!("λ = {l}, κ = {k}, α = {a}");
    let top = cx.order(6);
    cx.attempt("dual Lukacs", &dual, |cx| {
        let rep = dual_lukacs_check(&l, &k, &a, top, cx.order(8))?;
        let mut rows: Vec<Row> = rep.marginals.checks.iter().map(|c| check_row(c, &dual)).collect();
        let worst = rep.freeness.rows.iter().find(|r| !r.value.is_zero());
        rows.push(bool_row(
            format!("mixed free cumulants of (X₁, Y₁) vanish exactly, order ≤ {top}"),
            &dual,
            rep.freeness.free,
            worst.map_or(format!("{} words", rep.freeness.rows.len()), |r| format!("{:?} = {}", r.word, r.value)),
        ));
        Ok(rows)
    });
    let direct = "λ = 1, κ = 2, α = 1/2, V^-1 degree 40";
    cx.attempt("direct Lukacs", direct, |cx| {
        let tol = Float::parse("1e-6").unwrap();
        let order = cx.order(4);
        let rep = direct_lukacs_check(&Float::from_i64(1), &Float::from_i64(2), &Float::from_frac(1, 2), order, 40, &tol)?;
        let mut rows: Vec<Row> = rep.checks.checks.iter().map(|c| check_row(c, direct)).collect();
        rows.push(scalar_row(format!("max |κ| of (U, V) mixed words, order ≤ {order}"), direct, &rep.freeness.max_abs, &Float::zero(), &tol));
        Ok(rows)
    });
}

/// Runs one half-word through a law product; used by the CLI.
pub fn eval_word<F: Scalar>(fp: &LawProduct<'_, F>, word: &[HalfLetter<F>]) -> CliResult<F> {
    let letters = normalize_half(word)?;
    Ok(fp.moment(&letters)?)
}
