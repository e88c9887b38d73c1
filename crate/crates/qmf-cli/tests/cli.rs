//! End-to-end tests of the qmf binary: document round trips, exit codes,
//! and deterministic verify reports.

use std::io::Write;
use std::process::{Command, Output, Stdio};

fn qmf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn qmf_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_qmf"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().expect("binary finishes")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn nvh_report_shape() {
    let out = qmf(&["nvh", "--q", "3", "--k", "8", "--l", "1", "--m", "1"]);
    let v = stdout_json(&out);
    assert_eq!(v["kind"], "nvh_report");
    assert_eq!(v["holds"], false);
    assert_eq!(v["witnesses"][0]["binom_mod_p"], 0);
    assert_eq!(v["witnesses"][0]["dim"], 1);
    // the holding case
    let out = qmf(&["nvh", "--q", "3", "--k", "4", "--l", "1", "--m", "1"]);
    assert_eq!(stdout_json(&out)["holds"], true);
}

#[test]
fn e_expand_round_trip() {
    // P_E as a document, through the library encoder
    let f = qmf_core::fq::FqField::get(3).unwrap();
    let pe = qmf_core::assoc::e_assoc(f);
    let doc = qmf_core::json::assoc_to_doc(&pe).to_json();
    let expanded = qmf_stdin(&["e-expand"], &doc);
    let v = stdout_json(&expanded);
    assert_eq!(v["kind"], "e_expansion");
    // back again
    let back = qmf_stdin(&["from-e"], &String::from_utf8_lossy(&expanded.stdout));
    let v2 = stdout_json(&back);
    assert_eq!(v2["kind"], "assoc_poly");
    let doc2 = qmf_core::json::Document::from_json(&String::from_utf8_lossy(&back.stdout))
        .unwrap();
    match doc2.body {
        qmf_core::json::Body::AssocPoly { field, weight, typ, coeffs } => {
            let p = qmf_core::json::assoc_from_parts(field, weight, typ, &coeffs).unwrap();
            assert_eq!(p, pe);
        }
        _ => panic!("wrong kind"),
    }
}

#[test]
fn dslash_invariance_through_cli() {
    let f = qmf_core::fq::FqField::get(3).unwrap();
    let pe = qmf_core::assoc::e_assoc(f);
    let doc = qmf_core::json::assoc_to_doc(&pe).to_json();
    // an antidiagonal unimodular matrix
    let out = qmf_stdin(&["dslash", "--matrix", "0,1,2,0"], &doc);
    let v = stdout_json(&out);
    assert_eq!(v["kind"], "assoc_poly");
    let round = qmf_core::json::Document::from_json(&String::from_utf8_lossy(&out.stdout))
        .unwrap();
    match round.body {
        qmf_core::json::Body::AssocPoly { field, weight, typ, coeffs } => {
            let p = qmf_core::json::assoc_from_parts(field, weight, typ, &coeffs).unwrap();
            assert_eq!(p, pe, "P_E || gamma should be P_E");
        }
        _ => panic!("wrong kind"),
    }
}

#[test]
fn check_wqmp_on_p_e() {
    let f = qmf_core::fq::FqField::get(3).unwrap();
    let pe = qmf_core::assoc::e_assoc(f);
    let doc = qmf_core::json::assoc_to_doc(&pe).to_json();
    let out = qmf_stdin(&["check-wqmp", "--gens", "default"], &doc);
    let v = stdout_json(&out);
    assert_eq!(v["weakly_quasi_modular"], true);
    assert_eq!(v["reconstructs_from_constant_term"], true);
}

#[test]
fn series_and_hyperderive() {
    let out = qmf(&["series", "E", "--q", "3", "--prec", "10"]);
    let v = stdout_json(&out);
    assert_eq!(v["kind"], "useries");
    assert_eq!(v["min"], 1);
    // D_1 of the series through the CLI
    let der = qmf_stdin(
        &["hyperderive", "--n", "1", "--backend", "series"],
        &String::from_utf8_lossy(&out.stdout),
    );
    let dv = stdout_json(&der);
    assert_eq!(dv["kind"], "useries");
    assert_eq!(dv["min"], 2); // D_1 E starts at u^2 (raw hyperderivative)
}

#[test]
fn decompose_reports_nvh_violation() {
    // g^3 E at q = 3: weight 8, type 1, depth 1 — the pinned failing case
    let f = qmf_core::fq::FqField::get(3).unwrap();
    let x = qmf_core::symfn::GradedElem::monomial(
        f,
        3,
        0,
        1,
        qmf_core::scalar::CoeffScalar::one(f),
    )
    .unwrap();
    let e = qmf_core::eexp::graded_to_e(&x).unwrap();
    let doc = qmf_core::json::eexp_to_doc(&e).to_json();
    let out = qmf_stdin(&["decompose"], &doc);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kind"], "nvh_violation");
    assert_eq!(v["holds"], false);
}

#[test]
fn hecke_formal_up() {
    // delta_p of a formal symbol is killed by U_p
    let f = qmf_core::fq::FqField::get(3).unwrap();
    let mut ctx = qmf_core::hecke::FormalCtx::new();
    ctx.declare("f0", 4, 0);
    let sym = qmf_core::hecke::FormalCombo::sym(&ctx, f, "f0").unwrap();
    let prime = qmf_core::fqpoly::FqPoly::parse(f, "t+2").unwrap();
    let e = qmf_core::eexp::EExpansion::new(4, 0, vec![sym]).unwrap();
    let image = qmf_core::hecke::delta_p_e(&e, &prime).unwrap();
    let doc = qmf_core::json::formal_to_doc(&ctx, &image).to_json();
    let out = qmf_stdin(
        &["hecke", "--op", "up", "--p", "t+2", "--level", "(t+2)"],
        &doc,
    );
    let v = stdout_json(&out);
    assert_eq!(v["kind"], "formal_e_expansion");
    // the output coefficients are all empty (zero)
    for c in v["coeffs"].as_array().unwrap() {
        assert!(c.as_array().unwrap().is_empty());
    }
}

#[test]
fn hecke_counterexample_pinned() {
    let out = qmf(&["hecke", "counterexample"]);
    let v = stdout_json(&out);
    assert_eq!(v["monic_factor"], "t^6+t^5+t^4+t+1");
    assert_eq!(v["brute_force_agrees"], true);
}

#[test]
fn verify_exit_codes_and_determinism() {
    // a focused passing run
    let a = qmf(&[
        "verify", "--suite", "phi-psi", "--seed", "7", "--cases", "3",
    ]);
    assert!(a.status.success());
    let b = qmf(&[
        "verify", "--suite", "phi-psi", "--seed", "7", "--cases", "3",
    ]);
    assert_eq!(a.stdout, b.stdout, "reports must be byte-identical");
    // unknown suite: usage error
    let bad = qmf(&["verify", "--suite", "no-such-suite"]);
    assert_eq!(bad.status.code(), Some(2));
    // mutated build: failure with a counterexample
    let failing = qmf(&[
        "verify", "--suite", "up-en", "--cases", "3", "--mutate", "binomial",
    ]);
    assert_eq!(failing.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&failing.stdout).unwrap();
    assert_eq!(v["pass"], false);
    assert!(v["results"][0]["first_failure"].is_string());
}

#[test]
fn render_uses_cache_dir() {
    let dir = std::env::temp_dir().join(format!("qmf-cache-test-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_qmf"))
            .args(args)
            .env("QMF_CACHE_DIR", &dir)
            .output()
            .expect("binary runs")
    };
    let a = run(&["series", "g", "--q", "3", "--prec", "12"]);
    assert!(a.status.success());
    assert!(dir.join("series-g-q3-p12.json").exists());
    let b = run(&["series", "g", "--q", "3", "--prec", "12"]);
    assert_eq!(a.stdout, b.stdout);
    let _ = std::fs::remove_dir_all(&dir);
}
