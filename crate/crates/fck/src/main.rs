use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fck::config::{BackendArg, RunConfig};
use fck::error::{CliError, CliResult};
use fck::json::{make_law, read_json, LawJson, SeriesJson, WordTable};
use fck::report::{bool_row, scalar_row, series_row, Report, Row, Verdict};
use fck::suite::{run_verification_suite, LukacsOverrides, Scope};
use fck_core::condexp::{condexp_pairing, pairing_direct, Analytic};
use fck_core::cumulants::{moments_from_cumulants, CumulantCalculator, CumulantKind, CumulantTable, MomentOracle};
use fck_core::distributions::{EvalMode, SpectralDistribution, Transform};
use fck_core::freeprod::{parse_word, LawProduct, Tagged};
use fck_core::lukacs::{self, Check, Mode, RegressionConstants};
use fck_core::partitions::{Family, PartitionIter};
use fck_core::subordination::{omega_series_with, Route};
use fck_core::{Float, Rational, Scalar};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "fck", version, about = "Free cumulants, free products and Lukacs-type characterizations")]
struct Cli {
    #[command(flatten)]
    cfg: RunConfig,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Set partitions of [n].
    Partitions {
        #[command(subcommand)]
        cmd: PartitionsCmd,
    },
    /// Moment and cumulant tables.
    Cumulants {
        #[command(subcommand)]
        cmd: CumulantsCmd,
    },
    /// Spectral distributions.
    Dist {
        #[command(subcommand)]
        cmd: DistCmd,
    },
    /// Joint moments in a free product.
    Freeprod {
        #[command(subcommand)]
        cmd: FreeprodCmd,
    },
    /// Subordination series ω₁, ω₂ of a free pair.
    Subord {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long, value_enum, default_value_t = RouteArg::Boolean)]
        route: RouteArg,
    },
    /// E_V pairings: closed form against joint moments.
    Condexp {
        /// `poly:c0,c1,...` or `psi`.
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Powers of V to pair against, `lo..hi` (inclusive) or a single integer.
        #[arg(long, default_value = "0..4")]
        pair_m: String,
    },
    /// Regression characterizations and the dual and direct checks.
    Lukacs {
        #[command(subcommand)]
        cmd: LukacsCmd,
    },
    /// Runs the verification suite.
    Verify {
        #[arg(long, value_enum, default_value_t = Scope::All)]
        scope: Scope,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        d: Option<String>,
    },
}

#[derive(Subcommand)]
enum PartitionsCmd {
    Enum {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = FamilyArg::All)]
        family: FamilyArg,
        #[arg(long)]
        count_only: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Nc,
    Int,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Free,
    Boolean,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirArg {
    M2c,
    C2m,
}

#[derive(Subcommand)]
enum CumulantsCmd {
    /// Converts a table keyed by words (letters separated by spaces).
    Convert {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, value_enum)]
        dir: DirArg,
        /// Longest word to convert.
        #[arg(long)]
        n: usize,
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichArg {
    M,
    Eta,
    S,
}

#[derive(Subcommand)]
enum DistCmd {
    /// Builds a law: poisson (α, λ), binomial (σ, θ), bernoulli (p, a) or point (c).
    Make {
        #[arg(long)]
        law: String,
        /// Parameters, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        params: Vec<String>,
    },
    /// M, η or S series of a law file.
    Transform {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        which: WhichArg,
    },
}

#[derive(Subcommand)]
enum FreeprodCmd {
    Eval {
        /// e.g. "U^2 V psi(U) V^1/2".
        #[arg(long)]
        word: String,
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Boolean,
    Reversion,
}

#[derive(Subcommand)]
enum LukacsCmd {
    Th1 {
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[arg(long, allow_hyphen_values = true)]
        c: String,
    },
    Th2 {
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true)]
        c: String,
        #[arg(long, allow_hyphen_values = true)]
        d: String,
    },
    Dual {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, allow_hyphen_values = true)]
        kappa: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
    },
    /// Float only; mixed cumulants of total order at most `--order` (capped at 4).
    Direct {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, allow_hyphen_values = true)]
        kappa: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, default_value_t = 40)]
        approx_degree: usize,
    },
}

/// What a subcommand produced.
enum Output {
    Text(String),
    Json(serde_json::Value),
    Report(Report),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    cli.cfg.apply();
    let result = match cli.cfg.backend {
        BackendArg::Exact => run::<Rational>(&cli.cfg, cli.cmd),
        BackendArg::Float => run::<Float>(&cli.cfg, cli.cmd),
    };
    match result.and_then(|out| emit(&cli.cfg, out)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("fck: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Writes the output; `Ok(false)` when a report has failing rows.
fn emit(cfg: &RunConfig, out: Output) -> CliResult<bool> {
    let mut sink: Box<dyn Write> = match &cfg.out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let ok = match out {
        Output::Text(s) => {
            sink.write_all(s.as_bytes())?;
            true
        }
        Output::Json(v) => {
            serde_json::to_writer_pretty(&mut sink, &v)?;
            writeln!(sink)?;
            true
        }
        Output::Report(r) => {
            r.write(cfg.format, &mut sink)?;
            for row in r.failures() {
                match row.verdict {
                    Verdict::Error => eprintln!("ERROR {} {}: {} ({})", row.key, row.identity, row.params, row.lhs),
                    _ => eprintln!("FAIL {} {}: {} (Δ = {})", row.key, row.identity, row.params, row.delta),
                }
            }
            r.passed()
        }
    };
    sink.flush()?;
    Ok(ok)
}

fn json(v: impl Serialize) -> CliResult<Output> {
    Ok(Output::Json(serde_json::to_value(v)?))
}

fn scalar<F: Scalar>(s: &str, name: &str) -> CliResult<F> {
    F::parse(s).ok_or_else(|| CliError::Usage(format!("bad value for --{name}: {s:?}")))
}

fn read_law<F: Scalar>(p: &PathBuf, order: usize) -> CliResult<SpectralDistribution<F>> {
    let j: LawJson = read_json(p)?;
    let mut law = j.to_law::<F>()?;
    // Named laws are rebuilt at the run order.
    if j.law != "moments" {
        law = make_law(&j.law, &j.params, order.max(j.order))?;
    }
    Ok(law)
}

fn run<F: Scalar>(cfg: &RunConfig, cmd: Cmd) -> CliResult<Output> {
    let order = cfg.order;
    match cmd {
        Cmd::Partitions { cmd: PartitionsCmd::Enum { n, family, count_only } } => {
            let fam = match family {
                FamilyArg::Nc => Family::NonCrossing,
                FamilyArg::Int => Family::Interval,
                FamilyArg::All => Family::All,
            };
            let it = PartitionIter::new(n, fam)?;
            if count_only {
                return Ok(Output::Text(format!("{}\n", it.count())));
            }
            let mut s = String::new();
            for p in it {
                s.push_str(&p.to_brace_string());
                s.push('\n');
            }
            Ok(Output::Text(s))
        }
        Cmd::Cumulants { cmd: CumulantsCmd::Convert { kind, dir, n, input } } => {
            let table: WordTable = read_json(&input)?;
            let ck = match kind {
                KindArg::Free => CumulantKind::Free,
                KindArg::Boolean => CumulantKind::Boolean,
            };
            let name = match kind {
                KindArg::Free => "free",
                KindArg::Boolean => "boolean",
            };
            let (want, produce) = match dir {
                DirArg::M2c => ("moments", name),
                DirArg::C2m => (name, "moments"),
            };
            if table.kind != want {
                return Err(CliError::Usage(format!("expected a {want} table, found {}", table.kind)));
            }
            let entries = table.parse_entries::<F>()?;
            let words: Vec<Vec<String>> = entries.keys().filter(|w| !w.is_empty() && w.len() <= n).cloned().collect();
            let out: BTreeMap<Vec<String>, F> = match dir {
                DirArg::M2c => {
                    let calc = CumulantCalculator::new(Table(&entries));
                    words.iter().map(|w| Ok((w.clone(), calc.cumulant(w, ck)?))).collect::<CliResult<_>>()?
                }
                DirArg::C2m => {
                    let t = CumulantTable { kind: ck, entries: entries.clone() };
                    words.iter().map(|w| Ok((w.clone(), moments_from_cumulants(&t, w)?))).collect::<CliResult<_>>()?
                }
            };
            json(WordTable {
                kind: produce.into(),
                backend: F::BACKEND.name().into(),
                entries: out.into_iter().map(|(w, v)| (w.join(" "), v.to_string())).collect(),
            })
        }
        Cmd::Dist { cmd: DistCmd::Make { law, params } } => json(LawJson::from_law(&make_law::<F>(&law, &params, order)?)),
        Cmd::Dist { cmd: DistCmd::Transform { input, which } } => {
            let law = read_law::<F>(&input, order)?;
            let t = match which {
                WhichArg::M => Transform::M,
                WhichArg::Eta => Transform::Eta,
                WhichArg::S => Transform::S,
            };
            json(SeriesJson::from_series(&law.transform_series(t, order.min(law.order()))?))
        }
        Cmd::Freeprod { cmd: FreeprodCmd::Eval { word, left, right } } => {
            let w = parse_word::<F>(&word)?;
            let u = read_law::<F>(&left, order)?;
            let v = read_law::<F>(&right, order)?;
            let fp = LawProduct::from_laws(&u, &v, default_mode::<F>(cfg)?);
            let value = fp.eval_half(&w)?;
            json(serde_json::json!({
                "word": word,
                "backend": F::BACKEND.name(),
                "value": value.to_string(),
                "tail_bound": fp.tail_total().to_string(),
            }))
        }
        Cmd::Subord { left, right, route } => {
            let u = read_law::<F>(&left, order)?;
            let v = read_law::<F>(&right, order)?;
            let fp = LawProduct::from_laws(&u, &v, EvalMode::Exact);
            let r = match route {
                RouteArg::Boolean => Route::BooleanSeries,
                RouteArg::Reversion => Route::Reversion,
            };
            let pair = omega_series_with(&fp, order, r)?;
            json(serde_json::json!({
                "route": match route { RouteArg::Boolean => "boolean", RouteArg::Reversion => "reversion" },
                "omega1": SeriesJson::from_series(&pair.omega1),
                "omega2": SeriesJson::from_series(&pair.omega2),
            }))
        }
        Cmd::Condexp { f, g, left, right, pair_m } => {
            let (lo, hi) = parse_range(&pair_m)?;
            let fa = parse_analytic::<F>(&f)?;
            let ga = parse_analytic::<F>(&g)?;
            let u = read_law::<F>(&left, 3 * order + 8)?;
            let v = read_law::<F>(&right, 3 * order + 8)?;
            let fp = LawProduct::from_laws(&u, &v, default_mode::<F>(cfg)?);
            let tol = cfg.tolerance::<F>()? + &fp.tail_total();
            let p = condexp_pairing(&fa, &ga, &fp, order, hi)?;
            let mut report = Report::new();
            for m in lo..=hi {
                let closed = p.evaluator(m)?;
                let direct = pairing_direct(&fa, &ga, &fp, order, m)?;
                for k in 0..=order {
                    let row = scalar_row(
                        "φ(f(U) E_V[..] V^m): closed form vs joint moments",
                        format!("f = {f}, g = {g}, m = {m}, z^{k}"),
                        closed.coeff(k),
                        direct.coeff(k),
                        &tol,
                    );
                    report.push("condexp", row);
                }
            }
            Ok(Output::Report(report))
        }
        Cmd::Lukacs { cmd } => lukacs_cmd::<F>(cfg, cmd),
        Cmd::Verify { scope, alpha, b, c, d } => {
            let ov = LukacsOverrides { alpha, b, c, d };
            Ok(Output::Report(run_verification_suite(cfg, scope, &ov)))
        }
    }
}

/// Exact moments on the exact backend; Neumann with the run tolerance on float.
fn default_mode<F: Scalar>(cfg: &RunConfig) -> CliResult<EvalMode<F>> {
    Ok(match cfg.backend {
        BackendArg::Exact => EvalMode::Exact,
        BackendArg::Float => EvalMode::Neumann { tol: cfg.tolerance::<F>()? },
    })
}

struct Table<'a, F>(&'a BTreeMap<Vec<String>, F>);

impl<F: Scalar> MomentOracle for Table<'_, F> {
    type Arg = String;
    type Scalar = F;
    fn moment(&self, word: &[String]) -> fck_core::Result<F> {
        if word.is_empty() {
            return Ok(F::one());
        }
        self.0
            .get(word)
            .cloned()
            .ok_or_else(|| fck_core::Error::IncompleteTable(word.join(" ")))
    }
}

fn parse_range(s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::Usage(format!("bad --pair-m {s:?}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let m = s.trim().parse().map_err(|_| bad())?;
            (m, m)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn parse_analytic<F: Scalar>(s: &str) -> CliResult<Analytic<F>> {
    if s == "psi" {
        return Ok(Analytic::Psi);
    }
    let body = s.strip_prefix("poly:").ok_or_else(|| CliError::Usage(format!("expected poly:c0,c1,... or psi, got {s:?}")))?;
    let coeffs = body.split(',').map(|c| scalar::<F>(c.trim(), "f")).collect::<CliResult<Vec<F>>>()?;
    Ok(Analytic::Poly(coeffs))
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

fn word_name<A, B>(w: &[Tagged<A, B>]) -> String {
    w.iter()
        .map(|l| match l {
            Tagged::Left(_) => "X",
            Tagged::Right(_) => "Y",
        })
        .collect()
}

fn lukacs_cmd<F: Scalar>(cfg: &RunConfig, cmd: LukacsCmd) -> CliResult<Output> {
    let order = cfg.order;
    let tol = cfg.tolerance::<F>()?;
    let mut report = Report::new();
    match cmd {
        LukacsCmd::Th1 { alpha, b, c } => {
            let rc = RegressionConstants::th1(scalar(&alpha, "alpha")?, scalar(&b, "b")?, scalar(&c, "c")?);
            regression_rows(&mut report, &rc, Mode::Th1, order, &tol)?;
        }
        LukacsCmd::Th2 { alpha, c, d } => {
            let rc = RegressionConstants::th2(scalar(&alpha, "alpha")?, scalar(&c, "c")?, scalar(&d, "d")?);
            regression_rows(&mut report, &rc, Mode::Th2, order, &tol)?;
        }
        LukacsCmd::Dual { lambda, kappa, alpha } => {
            let (l, k, a): (F, F, F) = (scalar(&lambda, "lambda")?, scalar(&kappa, "kappa")?, scalar(&alpha, "alpha")?);
            let params = format!("λ = {l}, κ = {k}, α = {a}");
            let rep = lukacs::dual_lukacs_check(&l, &k, &a, order.min(8), order)?;
            for c in &rep.marginals.checks {
                report.push("lukacs", check_row(c, &params));
            }
            let cap = if tol.is_zero() { F::zero() } else { tol.clone() };
            for r in &rep.freeness.rows {
                let row = scalar_row(format!("mixed free cumulant {}", word_name(&r.word)), &params, &r.value, &F::zero(), &cap);
                report.push("lukacs", row);
            }
        }
        LukacsCmd::Direct { lambda, kappa, alpha, approx_degree } => {
            // The inverse of V is only approximated, so this runs on floats.
            let (l, k, a): (Float, Float, Float) = (scalar(&lambda, "lambda")?, scalar(&kappa, "kappa")?, scalar(&alpha, "alpha")?);
            let params = format!("λ = {l}, κ = {k}, α = {a}, V^-1 degree {approx_degree}");
            let tol = cfg.tolerance.as_deref().map_or(Ok(Float::parse("1e-6").unwrap()), |t| scalar::<Float>(t, "tolerance"))?;
            let rep = lukacs::direct_lukacs_check(&l, &k, &a, order.min(4), approx_degree, &tol)?;
            for c in &rep.checks.checks {
                report.push("lukacs", check_row(c, &params));
            }
            for r in &rep.freeness.rows {
                let row = scalar_row(format!("mixed free cumulant {}", word_name(&r.word).replace('X', "U").replace('Y', "V")), &params, &r.value, &Float::zero(), &tol);
                report.push("lukacs", row);
            }
            report.push("lukacs", bool_row("V^-1 expansion tail within tolerance", &params, rep.inverse_tail <= tol, rep.inverse_tail.to_string()));
        }
    }
    Ok(Output::Report(report))
}

fn regression_rows<F: Scalar>(report: &mut Report, rc: &RegressionConstants<F>, mode: Mode, order: usize, tol: &F) -> CliResult<()> {
    let r = lukacs::solve_regression_system(rc, mode, order)?;
    let (b, c) = rc.effective_bc(mode)?;
    let (su, sv) = lukacs::closed_form_s(&rc.alpha, &b, &c, order - 1)?;
    let params = format!("α = {}, b = {b}, c = {c}", rc.alpha);
    let lp = &r.params;
    report.push("lukacs", series_row("S_U = 1 + bc/(α + (bc-1)s)", &params, r.s_u.coeffs(), su.coeffs(), tol));
    report.push("lukacs", series_row("S_V = c/(bc + α + (bc-1)s)", &params, r.s_v.coeffs(), sv.coeffs(), tol));
    report.push("lukacs", series_row("S_UV = S_U S_V", &params, r.s_uv.coeffs(), r.s_u.mul(&r.s_v)?.coeffs(), tol));
    let laws = format!("{params}; U ~ ν({}, {}), V ~ μ({}, {})", lp.sigma, lp.theta, lp.alpha_v, lp.lambda_v);
    report.push("lukacs", bool_row("laws identified", laws, true, ""));
    Ok(())
}
