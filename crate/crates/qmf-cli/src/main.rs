//! qmf — the command-line workbench for the Drinfeld quasi-modular form
//! calculus: NVH checks, E-expansions, the double-slash operator, formal
//! Hecke actions, exact u-series, and the deterministic property suites.
//!
//! Exit codes: 0 on success, 1 on a failed computation or failing suite,
//! 2 on usage errors (including unknown suite names).

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use qmf_core::assoc::AssocPoly;
use qmf_core::binom::{nvh_check, Level1Dim};
use qmf_core::eexp::{from_e, to_e, EExpansion};
use qmf_core::error::Error as CoreError;
use qmf_core::fq::FqField;
use qmf_core::fqpoly::FqPoly;
use qmf_core::hecke::{self, reps_gamma0, HeckeKind};
use qmf_core::json::{self, Body, Document};
use qmf_core::matrix::{gl2a_generators, Matrix2};
use qmf_core::series::{eisenstein_u, SeriesOracle, USeries};
use qmf_core::structure::{decompose, expand_in_graded_basis};
use qmf_core::symfn::GradedElem;
use qmf_core::verify::{
    resolve_suite_name, run_suite_by_name, Mutation, RunReport, SuiteConfig, SUITE_NAMES,
};

#[derive(Parser)]
#[command(name = "qmf", version, about = "Exact calculus of Drinfeld quasi-modular forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct FieldArgs {
    /// Order of the constant field (a prime power).
    #[arg(long, default_value_t = 3)]
    q: u64,
    /// Base-p digits of a custom irreducible modulus for q = p^r, r > 1.
    #[arg(long, value_delimiter = ',')]
    modulus: Option<Vec<u64>>,
}

impl FieldArgs {
    fn resolve(&self) -> Result<&'static FqField> {
        let field = match &self.modulus {
            None => FqField::get(self.q)?,
            Some(m) => {
                let (p, r) = qmf_core::fq::factor_prime_power(self.q)
                    .ok_or_else(|| anyhow!("q = {} is not a prime power", self.q))?;
                FqField::get_with_modulus(p, r, Some(m))?
            }
        };
        Ok(field)
    }
}

#[derive(Args, Clone)]
struct IoArgs {
    /// Input document (defaults to stdin).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output path (defaults to stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

impl IoArgs {
    fn read(&self) -> Result<Document> {
        let text = match &self.input {
            Some(p) => std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))?,
            None => {
                let mut buf = String::new();
                std::io::stdin().read_to_string(&mut buf)?;
                buf
            }
        };
        Ok(Document::from_json(&text)?)
    }

    fn write(&self, doc: &Document) -> Result<()> {
        self.write_text(&doc.to_json())
    }

    fn write_text(&self, text: &str) -> Result<()> {
        match &self.output {
            Some(p) => std::fs::write(p, format!("{text}\n"))
                .with_context(|| format!("writing {}", p.display()))?,
            None => println!("{text}"),
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the non-vanishing hypothesis for (k, l, m) at level one.
    Nvh {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        k: i64,
        #[arg(long)]
        l: u64,
        #[arg(long)]
        m: i64,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Convert an associated polynomial to its E-expansion.
    EExpand {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Convert an E-expansion back to its associated polynomial.
    FromE {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Apply the double-slash operator P || gamma.
    Dslash {
        #[command(flatten)]
        field: FieldArgs,
        /// The matrix as "a,b,c,d" with polynomial entries over Fq\[T\].
        #[arg(long)]
        matrix: String,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Check weak quasi-modularity against a generator set.
    CheckWqmp {
        #[command(flatten)]
        field: FieldArgs,
        /// "default" for the standard GL2(A) generators, or a semicolon
        /// separated list of "a,b,c,d" matrices.
        #[arg(long, default_value = "default")]
        gens: String,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Hyperderivatives: on a u-series or on a (graded) quasi-modular form.
    Hyperderive {
        #[arg(long)]
        n: usize,
        /// "series" for a u-series input, "assoc" for an associated
        /// polynomial (resolved to an E-expansion through the oracle).
        #[arg(long, default_value = "series")]
        backend: String,
        #[arg(long, default_value_t = 40)]
        prec: i64,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Decompose into hyperderivatives of modular forms (level one).
    Decompose {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 26)]
        prec: i64,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Hecke operators on formal E-expansions, and the naive-sum
    /// counterexample report.
    Hecke {
        /// up | tp | delta | ker | counterexample
        #[arg(long, value_name = "OP")]
        op: Option<String>,
        /// Positional alias for --op (e.g. `qmf hecke counterexample`).
        #[arg(value_name = "OPERATION")]
        op_positional: Option<String>,
        /// The Hecke prime, e.g. "t+2".
        #[arg(long)]
        p: Option<String>,
        /// The level, e.g. "(t+2)" or "1".
        #[arg(long)]
        level: Option<String>,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Exact u-series of the standard forms: E, g, h, delta, or the
    /// Eisenstein series of weight k.
    Series {
        /// E | g | h | delta | eisenstein
        which: String,
        /// Weight for the Eisenstein series.
        #[arg(long)]
        k: Option<u64>,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 26)]
        prec: i64,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Render a (graded) object to its exact u-series.
    Render {
        #[arg(long, default_value_t = 26)]
        prec: i64,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Run the deterministic property suites.
    Verify {
        /// Suite names (repeat or comma separate); "all" for everything.
        #[arg(long, value_delimiter = ',', default_value = "all")]
        suite: Vec<String>,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 26)]
        prec: i64,
        /// Override the per-suite case counts (quick runs).
        #[arg(long)]
        cases: Option<usize>,
        /// Deliberately corrupt one route to prove the suites can fail
        /// ("binomial").
        #[arg(long)]
        mutate: Option<String>,
        /// List the available suites and exit.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        io: IoArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            // unknown suite names are usage errors
            if let Some(CoreError::Config(msg)) = e.downcast_ref::<CoreError>() {
                if msg.contains("unknown suite") {
                    eprintln!("usage error: {msg}");
                    return ExitCode::from(2);
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn parse_poly(field: &'static FqField, s: &str) -> Result<FqPoly> {
    let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
    Ok(FqPoly::parse(field, trimmed)?)
}

fn parse_matrix(field: &'static FqField, s: &str) -> Result<Matrix2> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        bail!("matrix must be \"a,b,c,d\", got {s:?}");
    }
    let e: Vec<FqPoly> = parts
        .iter()
        .map(|p| parse_poly(field, p))
        .collect::<Result<_>>()?;
    Ok(Matrix2::from_polys(e[0].clone(), e[1].clone(), e[2].clone(), e[3].clone())?)
}

fn read_assoc(doc: &Document) -> Result<AssocPoly<GradedElem>> {
    match &doc.body {
        Body::AssocPoly { field, weight, typ, coeffs } => {
            Ok(json::assoc_from_parts(field.clone(), *weight, *typ, coeffs)?)
        }
        Body::Graded { field, elem } => {
            let f = field.resolve()?;
            Ok(qmf_core::assoc::canonical_assoc(&json::graded_from_dto(f, elem)?))
        }
        _ => bail!("expected an assoc_poly document"),
    }
}

fn read_eexp(doc: &Document) -> Result<EExpansion<GradedElem>> {
    match &doc.body {
        Body::EExpansion { field, weight, typ, coeffs } => {
            Ok(json::eexp_from_parts(field.clone(), *weight, *typ, coeffs)?)
        }
        Body::AssocPoly { field, weight, typ, coeffs } => {
            let p = json::assoc_from_parts(field.clone(), *weight, *typ, coeffs)?;
            Ok(to_e(&p)?)
        }
        Body::Graded { field, elem } => {
            let f = field.resolve()?;
            Ok(qmf_core::eexp::graded_to_e(&json::graded_from_dto(f, elem)?)?)
        }
        _ => bail!("expected an e_expansion or assoc_poly document"),
    }
}

/// Serve the generator series from QMF_CACHE_DIR when possible.
fn cached_series(
    field: &'static FqField,
    prec: i64,
    name: &str,
) -> Result<USeries> {
    let compute = |field: &'static FqField| -> Result<USeries> {
        let oracle = SeriesOracle::get(field, prec)?;
        Ok(oracle.render_symbol(name)?)
    };
    let Some(dir) = std::env::var_os("QMF_CACHE_DIR") else {
        return compute(field);
    };
    let dir = PathBuf::from(dir);
    let path = dir.join(format!("series-{name}-q{}-p{prec}.json", field.q()));
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(doc) = Document::from_json(&text) {
            if let Body::Useries { field: fd, min, prec: pr, coeffs } = doc.body {
                if fd.q == field.q() {
                    return Ok(json::useries_from_parts(fd, min, pr, &coeffs)?);
                }
            }
        }
    }
    let s = compute(field)?;
    let _ = std::fs::create_dir_all(&dir);
    let _ = std::fs::write(&path, json::useries_to_doc(&s).to_json());
    Ok(s)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Nvh { field, k, l, m, io } => {
            let f = field.resolve()?;
            let report = nvh_check(k, l, m, f.q(), &Level1Dim { q: f.q() })?;
            io.write(&Document::new(Body::NvhReport(report)))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::EExpand { io } => {
            let doc = io.read()?;
            if matches!(doc.body, Body::AssocPolyRational { .. }) {
                bail!("{}", CoreError::UnsupportedBackend(
                    "rational test functions have no E-expansion".into()
                ));
            }
            let p = read_assoc(&doc)?;
            io.write(&json::eexp_to_doc(&to_e(&p)?))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::FromE { io } => {
            let doc = io.read()?;
            let e = read_eexp(&doc)?;
            io.write(&json::assoc_to_doc(&from_e(&e)?))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Dslash { field, matrix, io } => {
            let doc = io.read()?;
            match &doc.body {
                Body::AssocPolyRational { field: fd, weight, typ, coeffs } => {
                    let f = fd.resolve()?;
                    let gamma = parse_matrix(f, &matrix)?;
                    let zr: Vec<qmf_core::zrat::ZRat> = coeffs
                        .iter()
                        .map(|c| json::zrat_from_dto(f, c))
                        .collect::<Result<_, _>>()?;
                    let p = qmf_core::assoc::zrat_assoc(*weight, *typ, zr);
                    let out = p.dslash(&gamma)?;
                    let out_coeffs: Vec<json::ZRatDto> = out
                        .coeffs()
                        .iter()
                        .map(|c| {
                            c.as_zrat().map(|z| json::zrat_to_dto(&z)).ok_or_else(|| {
                                anyhow!("double-slash output left the rational backend")
                            })
                        })
                        .collect::<Result<_>>()?;
                    io.write(&Document::new(Body::AssocPolyRational {
                        field: fd.clone(),
                        weight: *weight,
                        typ: *typ,
                        coeffs: out_coeffs,
                    }))?;
                }
                _ => {
                    let p = read_assoc(&doc)?;
                    let f = p.field();
                    let gamma = parse_matrix(f, &matrix)?;
                    let _ = field;
                    let out = AssocPoly::from_graded(&p).dslash(&gamma)?;
                    let collapsed = out.to_graded().ok_or_else(|| {
                        anyhow!(
                            "the image is not a level-one object; only results \
                             expressible in g, h, E serialize"
                        )
                    })?;
                    io.write(&json::assoc_to_doc(&collapsed))?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckWqmp { field, gens, io } => {
            let doc = io.read()?;
            let p = read_assoc(&doc)?;
            let f = p.field();
            let _ = field;
            let generators = if gens == "default" {
                gl2a_generators(f)
            } else {
                gens.split(';')
                    .map(|m| parse_matrix(f, m))
                    .collect::<Result<Vec<_>>>()?
            };
            let expr = AssocPoly::from_graded(&p);
            let ok = qmf_core::assoc::is_weak_qmod(&expr, &generators)?;
            let reconstructs = qmf_core::assoc::reconstruct(&p);
            io.write_text(
                &serde_json::json!({
                    "schema_version": json::SCHEMA_VERSION,
                    "kind": "wqmp_check",
                    "weakly_quasi_modular": ok,
                    "reconstructs_from_constant_term": reconstructs,
                })
                .to_string(),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Hyperderive { n, backend, prec, io } => {
            let doc = io.read()?;
            match backend.as_str() {
                "series" => {
                    let Body::Useries { field, min, prec: pr, coeffs } = doc.body else {
                        bail!("--backend series expects a useries document");
                    };
                    let f = field.resolve()?;
                    let s = json::useries_from_parts(field, min, pr, &coeffs)?;
                    let oracle = SeriesOracle::get(f, prec.max(pr))?;
                    let out = oracle.hyper(&s, n)?;
                    io.write(&json::useries_to_doc(&out))?;
                }
                "assoc" => {
                    let p = read_assoc(&doc)?;
                    let f = p.field();
                    let oracle = SeriesOracle::get(f, prec)?;
                    // render D_n f and solve it back into the graded basis
                    let e = to_e(&p)?;
                    let fn_series = from_e(&e)?
                        .function()
                        .render(&oracle)?;
                    let dn = oracle.hyper(&fn_series, n)?.scale(
                        &qmf_core::scalar::CoeffScalar::neg_pi_pow(f, -(n as i64)),
                    );
                    let out = expand_in_graded_basis(
                        &oracle,
                        &dn,
                        p.weight() + 2 * n as i64,
                        p.typ() + n as i64,
                        p.depth() + n,
                    )?;
                    io.write(&json::eexp_to_doc(&out))?;
                }
                other => bail!("unknown backend {other:?} (use series or assoc)"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Decompose { field, prec, io } => {
            let doc = io.read()?;
            let e = read_eexp(&doc)?;
            let f = e.field();
            let _ = field;
            let oracle = SeriesOracle::get(f, prec)?;
            match decompose(&oracle, &e) {
                Ok(dec) => {
                    io.write(&json::decomposition_to_doc(&dec, f))?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(CoreError::NvhViolation(report)) => {
                    io.write(&Document::new(Body::NvhViolation(report)))?;
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Hecke { op, op_positional, p, level, field, io } => {
            let f = field.resolve()?;
            let op = op.or(op_positional).unwrap_or_else(|| "counterexample".into());
            if op == "counterexample" {
                let report = hecke::naive_counterexample()?;
                io.write_text(
                    &serde_json::json!({
                        "schema_version": json::SCHEMA_VERSION,
                        "kind": "hecke_counterexample",
                        "value": format!("{}", report.value),
                        "rational_part": format!("{}", report.rational_part),
                        "numerator_over_display_denominator": format!("{}", report.numerator),
                        "monic_factor": format!("{}", report.monic_factor),
                        "brute_force_agrees": report.brute_force_agrees,
                    })
                    .to_string(),
                )?;
                return Ok(ExitCode::SUCCESS);
            }
            let prime = parse_poly(f, p.as_deref().context("--p is required")?)?;
            let level_poly = match level.as_deref() {
                None => FqPoly::one(f),
                Some(l) => parse_poly(f, l)?,
            };
            let doc = io.read()?;
            let Body::FormalEExpansion { field: fd, weight, typ, symbols, coeffs } = doc.body
            else {
                bail!("hecke operators expect a formal_e_expansion document");
            };
            let (ctx, e) = json::formal_from_parts(fd, weight, typ, &symbols, &coeffs)?;
            let reps = reps_gamma0(&prime, &level_poly)?;
            let out = match op.as_str() {
                "up" => {
                    if reps.kind != HeckeKind::U {
                        bail!("{prime} does not divide the level {level_poly}; use --op tp");
                    }
                    hecke::up_e(&ctx, &e, &prime)?
                }
                "tp" => {
                    if reps.kind != HeckeKind::T {
                        bail!("{prime} divides the level {level_poly}; use --op up");
                    }
                    hecke::tp_e(&ctx, &e, &prime)?
                }
                "delta" => hecke::delta_p_e(&e, &prime)?,
                "ker" => hecke::ker_up_reconstruct(&e, &prime)?,
                other => bail!("unknown hecke op {other:?}"),
            };
            io.write(&json::formal_to_doc(&ctx, &out))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Series { which, k, field, prec, io } => {
            let f = field.resolve()?;
            let s = match which.as_str() {
                "E" | "g" | "h" | "delta" => cached_series(f, prec, &which)?,
                "eisenstein" => {
                    let k = k.context("--k is required for the Eisenstein series")?;
                    let d = (0..)
                        .find(|&d| (f.q().pow(d + 1) as i64) >= prec)
                        .expect("depth bound exists");
                    eisenstein_u(f, k, d, prec)?
                }
                other => bail!("unknown series {other:?} (use E, g, h, delta, eisenstein)"),
            };
            io.write(&json::useries_to_doc(&s))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Render { prec, io } => {
            let doc = io.read()?;
            let (f, series) = match &doc.body {
                Body::Graded { field, elem } => {
                    let f = field.resolve()?;
                    let oracle = SeriesOracle::get(f, prec)?;
                    (f, json::graded_from_dto(f, elem)?.render(&oracle)?)
                }
                Body::EExpansion { .. } | Body::AssocPoly { .. } => {
                    let e = read_eexp(&doc)?;
                    let f = e.field();
                    let oracle = SeriesOracle::get(f, prec)?;
                    (f, from_e(&e)?.function().render(&oracle)?)
                }
                _ => bail!("render expects a graded, assoc_poly or e_expansion document"),
            };
            let _ = f;
            io.write(&json::useries_to_doc(&series))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, field, seed, prec, cases, mutate, list, io } => {
            if list {
                io.write_text(&serde_json::json!({ "suites": SUITE_NAMES }).to_string())?;
                return Ok(ExitCode::SUCCESS);
            }
            let mutation = match mutate.as_deref() {
                None => None,
                Some("binomial") => Some(Mutation::BinomialOffByOne),
                Some(other) => bail!("unknown mutation {other:?}"),
            };
            let cfg = SuiteConfig {
                q: field.q,
                seed,
                prec,
                cases_override: cases,
                mutation,
            };
            let names: Vec<String> =
                if suite.iter().any(|s| s == "all") || suite.is_empty() {
                    SUITE_NAMES.iter().map(|s| s.to_string()).collect()
                } else {
                    suite.iter().map(|s| resolve_suite_name(s).to_string()).collect()
                };
            // validate names before spawning work so bad ones exit 2
            for n in &names {
                if !SUITE_NAMES.contains(&n.as_str()) {
                    return Err(CoreError::Config(format!("unknown suite {n:?}")).into());
                }
            }
            // suites are independent: run them in parallel, then sort for a
            // deterministic report
            let mut results = names
                .par_iter()
                .map(|n| run_suite_by_name(n, &cfg))
                .collect::<Result<Vec<_>, _>>()?;
            results.sort_by(|a, b| a.suite.cmp(&b.suite));
            let pass = results.iter().all(|r| r.pass());
            for r in &results {
                eprintln!(
                    "{:16} {:4} cases  {}",
                    r.suite,
                    r.cases,
                    if r.pass() { "pass" } else { "FAIL" }
                );
                if let Some(w) = &r.first_failure {
                    eprintln!("{:16} first counterexample: {w}", "");
                }
            }
            let report = RunReport {
                schema_version: json::SCHEMA_VERSION,
                config: cfg,
                results,
                pass,
            };
            io.write_text(&serde_json::to_string_pretty(&report)?)?;
            Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}
