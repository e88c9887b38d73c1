//! Hyperderivatives D_n (defined by f(z+eps) = sum_n D_n f eps^n) on
//! rational functions, associated polynomials and u-series, together with
//! the composition and commutation formulas they satisfy:
//!
//! 1. D_n((cz+d)^-m) = C(-m, n) c^n (cz+d)^(-m-n);
//! 2. D_n(f o gamma) = sum_j C(n-1, j) (-c)^j (cz+d)^(j-2n) det^(n-j) (D_{n-j} f)(gamma z);
//! 3. D_n(f |_{k,m} gamma) = sum_j C(-k-j, n-j) (c/(cz+d))^(n-j) (D_j f) |_{k+2j, m+j} gamma;
//! 4. D_n(f ||_{k,m} gamma) = (D_n f) ||_{k+2n, m+n} gamma.
//!
//! The normalized operators (-pi)^(-n) D_n are obtained by scaling.

use crate::assoc::AssocPoly;
use crate::binom::binom_int;
use crate::error::Result;
use crate::fq::FqField;
use crate::matrix::Matrix2;
use crate::scalar::CoeffScalar;
use crate::series::{SeriesOracle, USeries};
use crate::symfn::FnExpr;
use crate::zrat::ZRat;

/// The hyperderivative of a rational test function.
pub fn hyper_ratfn(f: &ZRat, n: usize) -> ZRat {
    f.hyper(n)
}

/// The hyperderivative of a truncated u-series, through the shared
/// per-(q, precision) table.
pub fn hyper_series(oracle: &SeriesOracle, f: &USeries, n: usize) -> Result<USeries> {
    oracle.hyper(f, n)
}

/// The associated polynomial of D_n f from the associated polynomial of f:
/// P_{D_n f} = sum_j [ sum_h C(n+k+h-j-1, h) D_{n-h} f_{j-h} ] X^j,
/// of weight k+2n, type m+n and depth at most l+n.
pub fn hyper_assoc(p: &AssocPoly<FnExpr>, n: usize) -> Result<AssocPoly<FnExpr>> {
    let field = p.field();
    if n == 0 {
        return Ok(p.clone());
    }
    let pr = field.p();
    let k = p.weight();
    let l = p.depth() as i64;
    let n = n as i64;
    let mut coeffs = Vec::with_capacity((l + n + 1) as usize);
    for j in 0..=(l + n) {
        let mut acc = FnExpr::zero(field);
        for h in 0..=n {
            let idx = j - h;
            if idx < 0 || idx > l {
                continue;
            }
            let c = binom_int(n + k + h - j - 1, h as u64, pr);
            if c == 0 {
                continue;
            }
            let der = p.coeff(idx as usize).hyper((n - h) as usize);
            acc = acc.add(&der.scale(&CoeffScalar::from_int(field, c as i64)));
        }
        coeffs.push(acc);
    }
    AssocPoly::new(k + 2 * n, p.typ() + n, coeffs)
}

/// P_{D_n E} with the normalized operator D_n = (-pi)^(-n) * hyperderivative.
pub fn der_e_assoc(field: &'static FqField, n: usize) -> AssocPoly<FnExpr> {
    let pe = AssocPoly::from_graded(&crate::assoc::e_assoc(field));
    hyper_assoc(&pe, n)
        .expect("derivative of P_E is well-formed")
        .scale(&CoeffScalar::neg_pi_pow(field, -(n as i64)))
}

/// Which identity `compose_slash_residual` evaluates.
#[derive(Clone, Copy, Debug)]
pub enum SlashIdentity {
    /// D_n((cz+d)^-m) = C(-m, n) c^n (cz+d)^(-m-n); f is ignored.
    DenominatorPower { m: i64 },
    /// The chain rule for f(gamma z).
    Composition,
    /// The expansion of D_n(f |_{k,m} gamma).
    SlashExpansion { k: i64, m: i64 },
}

/// Evaluate both sides of the chosen identity on a rational test function
/// and return the difference (identically zero when the formulas hold).
pub fn compose_slash_residual(
    f: &ZRat,
    gamma: &Matrix2,
    n: usize,
    which: SlashIdentity,
) -> Result<ZRat> {
    if gamma.det().is_zero() {
        return Err(crate::error::Error::DegenerateMatrix);
    }
    let field = f.field();
    let p = field.p();
    let det = CoeffScalar::from_rat(gamma.det().clone());
    let j_cocycle = gamma.j_cocycle();
    let c_scalar = CoeffScalar::from_rat(gamma.c.clone());
    match which {
        SlashIdentity::DenominatorPower { m } => {
            let lhs = j_cocycle.pow(-m).hyper(n);
            let coeff = binom_int(-m, n as u64, p);
            let rhs = j_cocycle
                .pow(-m - n as i64)
                .scale(&c_scalar.pow(n as i64).mul(&CoeffScalar::from_int(field, coeff as i64)));
            Ok(lhs.sub(&rhs))
        }
        SlashIdentity::Composition => {
            let composed = crate::matrix::mat_act(gamma, f);
            let lhs = composed.hyper(n);
            let mut rhs = ZRat::zero(field);
            for jj in 0..=n {
                let b = binom_int(n as i64 - 1, jj as u64, p);
                if b == 0 {
                    continue;
                }
                let dndj = crate::matrix::mat_act(gamma, &f.hyper(n - jj));
                let factor = j_cocycle
                    .pow(jj as i64 - 2 * n as i64)
                    .scale(
                        &c_scalar
                            .neg()
                            .pow(jj as i64)
                            .mul(&det.pow((n - jj) as i64))
                            .mul(&CoeffScalar::from_int(field, b as i64)),
                    );
                rhs = rhs.add(&dndj.mul(&factor));
            }
            Ok(lhs.sub(&rhs))
        }
        SlashIdentity::SlashExpansion { k, m } => {
            // slash of a rational function: det^m j^-k f(gamma z)
            let slash = |g: &ZRat, kk: i64, mm: i64| -> ZRat {
                crate::matrix::mat_act(gamma, g)
                    .mul(&j_cocycle.pow(-kk))
                    .scale(&det.pow(mm))
            };
            let lhs = slash(f, k, m).hyper(n);
            let kappa = ZRat::constant(c_scalar.clone()).div(&j_cocycle);
            let mut rhs = ZRat::zero(field);
            for jj in 0..=n {
                let b = binom_int(-k - jj as i64, (n - jj) as u64, p);
                if b == 0 {
                    continue;
                }
                let term = slash(&f.hyper(jj), k + 2 * jj as i64, m + jj as i64)
                    .mul(&kappa.pow((n - jj) as i64))
                    .scale(&CoeffScalar::from_int(field, b as i64));
                rhs = rhs.add(&term);
            }
            Ok(lhs.sub(&rhs))
        }
    }
}

/// The residual of the commutation of hyperderivatives with the
/// double-slash: D_n(f ||_{k,m} gamma) - (D_n f) ||_{k+2n,m+n} gamma,
/// evaluated on the function side. Identically zero.
pub fn commutation_residual(
    p: &AssocPoly<FnExpr>,
    gamma: &Matrix2,
    n: usize,
) -> Result<FnExpr> {
    let lhs = p.dslash_fn(gamma)?.hyper(n);
    let rhs = hyper_assoc(p, n)?.dslash_fn(gamma)?;
    Ok(lhs.sub(&rhs))
}
