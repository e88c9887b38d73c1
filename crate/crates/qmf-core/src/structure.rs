//! Writing quasi-modular forms as sums of hyperderivatives of modular
//! forms, and back.
//!
//! For weight k, type m and depth l at level 1, whenever the non-vanishing
//! hypothesis holds,
//!
//!   f = sum_{i=0..l} D_i f_{i,D}                          (k > 2l)
//!   f = alpha_f D_{l-1} E + sum_{i=0..l-1} D_i f_{i,D}    (k = 2l)
//!
//! with f_{i,D} modular of weight k-2i and type m-i, and D_i the normalized
//! hyperderivative (-pi)^(-i) times the raw one. The decomposition peels
//! depth from the top: the E-expansion of D_j x for modular x of weight
//! k-2j has top coefficient C(k-j-1, j) x, and NVH guarantees that binomial
//! is a unit whenever it must be inverted.
//!
//! The decomposition works over E-expansions, so an NVH failure surfaces
//! structurally as `NvhViolation`; u-series rendering is used as the
//! independent round-trip oracle, and to resolve the E-expansions of D_j x
//! (solved exactly in the rendered monomial basis and cached).

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::binom::{binom_mod_p, dim_level1, nvh_check, Level1Dim};
use crate::eexp::EExpansion;
use crate::error::{Error, Result};
use crate::fq::FqField;
use crate::assoc::AssocPoly;
use crate::scalar::CoeffScalar;
use crate::series::{solve_in_span, SeriesOracle, USeries};
use crate::symfn::{FnExpr, GradedElem, Sym};
use crate::ratfunc::RatFunc;

pub use crate::binom::scan_nvh;

/// The data of a hyperderivative decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct DerDecomposition {
    field: &'static FqField,
    weight: i64,
    typ: i64,
    /// f_{i,D} at index i; length l+1 when k > 2l, length l when k = 2l.
    pub parts: Vec<GradedElem>,
    /// Present exactly when k = 2l; zero when l != m mod (q-1).
    pub alpha: Option<CoeffScalar>,
}

impl DerDecomposition {
    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn typ(&self) -> i64 {
        self.typ
    }
}

/// Monomial basis of M_{w,t} at level 1: exponents (a, b) of g^a h^b.
pub fn monomial_basis(field: &'static FqField, w: i64, t: i64) -> Vec<(u32, u32)> {
    let q = field.q() as i64;
    let mut out = vec![];
    if w < 0 {
        return out;
    }
    let mut b = 0i64;
    while (q + 1) * b <= w {
        let rest = w - (q + 1) * b;
        if rest % (q - 1) == 0 && (b - t).rem_euclid(q - 1) == 0 {
            out.push(((rest / (q - 1)) as u32, b as u32));
        }
        b += 1;
    }
    debug_assert_eq!(out.len(), dim_level1(w, t, field.q()));
    out
}

/// Express a u-series, known to be quasi-modular of the given weight, type
/// and depth bound, in the graded basis {g^a h^b E^i}: an exact linear
/// solve against the rendered monomials. The series must be pure in the
/// pi-grading (the D_n-normalized world), so the solve runs over Fq(T).
pub fn expand_in_graded_basis(
    oracle: &SeriesOracle,
    target: &USeries,
    weight: i64,
    typ: i64,
    max_depth: usize,
) -> Result<EExpansion<GradedElem>> {
    let field = oracle.field();
    let mut columns: Vec<USeries> = vec![];
    let mut labels: Vec<(u32, u32, u32)> = vec![];
    for i in 0..=max_depth {
        for (a, b) in monomial_basis(field, weight - 2 * i as i64, typ - i as i64) {
            columns.push(oracle.render_monomial(a, b, i as u32)?);
            labels.push((a, b, i as u32));
        }
    }
    if columns.is_empty() {
        if target.is_zero_to_prec() {
            return Ok(EExpansion::zero(field, weight, typ));
        }
        return Err(Error::UnsupportedBackend(
            "target is nonzero but the graded space is zero".into(),
        ));
    }
    let sol = solve_in_span(target, &columns).ok_or(Error::PrecisionLoss {
        available: oracle.precision(),
    })?;
    let mut coeffs: Vec<GradedElem> = (0..=max_depth)
        .map(|i| GradedElem::zero(field, weight - 2 * i as i64, typ - i as i64))
        .collect();
    for ((a, b, i), x) in labels.iter().zip(sol) {
        if x.is_zero() {
            continue;
        }
        let mono =
            GradedElem::monomial(field, *a, *b, 0, CoeffScalar::from_rat(x)).unwrap();
        coeffs[*i as usize] = coeffs[*i as usize].add(&mono)?;
    }
    // drop the E-power from the label into the expansion slot (the columns
    // were rendered with E^i, so coefficient i is the modular part)
    EExpansion::new(weight, typ, coeffs)
}

type ResolveKey = (usize, u32, u32, usize, i64);

fn resolve_cache() -> &'static Mutex<HashMap<ResolveKey, EExpansion<GradedElem>>> {
    static CACHE: OnceLock<Mutex<HashMap<ResolveKey, EExpansion<GradedElem>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The E-expansion of D_n x for a modular graded element x: rendered
/// through the series oracle, solved in the graded basis, and cached per
/// monomial.
pub fn resolve_dn(
    oracle: &SeriesOracle,
    x: &GradedElem,
    n: usize,
) -> Result<EExpansion<GradedElem>> {
    let field = x.field();
    if !x.is_modular() {
        return Err(Error::UnsupportedBackend(
            "resolve_dn expects a modular element".into(),
        ));
    }
    let out_w = x.weight() + 2 * n as i64;
    let out_t = x.typ() + n as i64;
    let mut acc = EExpansion::zero(field, out_w, out_t);
    for (&(a, b, _), c) in x.terms() {
        let key = (
            field as *const FqField as usize,
            a,
            b,
            n,
            oracle.precision(),
        );
        let cached = resolve_cache().lock().unwrap().get(&key).cloned();
        let expansion = match cached {
            Some(e) => e,
            None => {
                let mono = oracle.render_monomial(a, b, 0)?;
                let dn = oracle
                    .hyper(&mono, n)?
                    .scale(&CoeffScalar::neg_pi_pow(field, -(n as i64)));
                let q = field.q() as i64;
                let w = (q - 1) * a as i64 + (q + 1) * b as i64;
                let e = expand_in_graded_basis(oracle, &dn, w + 2 * n as i64, b as i64 + n as i64, n)?;
                resolve_cache().lock().unwrap().insert(key, e.clone());
                e
            }
        };
        acc = acc.add(&expansion.scale(c))?;
    }
    Ok(acc)
}

/// The E-expansion of D_n E (weight 2n+2, type n+1, depth n+1), through the
/// series oracle.
pub fn dn_e_expansion(oracle: &SeriesOracle, n: usize) -> Result<EExpansion<GradedElem>> {
    let field = oracle.field();
    let dn = oracle
        .hyper(oracle.e(), n)?
        .scale(&CoeffScalar::neg_pi_pow(field, -(n as i64)));
    expand_in_graded_basis(oracle, &dn, 2 * n as i64 + 2, n as i64 + 1, n + 1)
}

/// Decompose a quasi-modular form into hyperderivatives of modular forms.
/// Fails with `NvhViolation` when the non-vanishing hypothesis fails, and
/// with `OutOfRangeWeight` when k < 2*depth.
pub fn decompose(
    oracle: &SeriesOracle,
    f: &EExpansion<GradedElem>,
) -> Result<DerDecomposition> {
    let field = f.field();
    let q = field.q();
    let p = field.p();
    let k = f.weight();
    let m = f.typ();
    let l = f.depth();
    if k < 2 * l as i64 {
        return Err(Error::OutOfRangeWeight { weight: k, depth: l });
    }
    let report = nvh_check(k, l as u64, m, q, &Level1Dim { q })?;
    if !report.holds {
        return Err(Error::NvhViolation(report));
    }
    let exact = k == 2 * l as i64 && l >= 1;
    let mut cur = f.clone();
    let mut parts: Vec<GradedElem> = (0..=l)
        .map(|i| GradedElem::zero(field, k - 2 * i as i64, m - i as i64))
        .collect();
    let mut alpha = if exact { Some(CoeffScalar::zero(field)) } else { None };
    for j in (1..=l).rev() {
        let cj = cur.coeff(j);
        if cj.is_zero() {
            continue;
        }
        if exact && j == l {
            // the top slot is a constant: peel with D_{l-1} E, whose
            // E-expansion has top coefficient 1
            let a = cj.as_scalar().ok_or_else(|| {
                Error::BigradeMismatch("weight-0 coefficient is not scalar".into())
            })?;
            let dne = dn_e_expansion(oracle, l - 1)?;
            cur = cur.sub(&dne.scale(&a))?;
            alpha = Some(a);
        } else {
            let unit = binom_mod_p((k - j as i64 - 1) as u64, j as u64, p);
            if unit == 0 {
                // cannot happen when NVH holds and the slot is nonzero
                return Err(Error::NvhViolation(report));
            }
            let unit_inv = CoeffScalar::from_int(field, unit as i64).inv().unwrap();
            let part = cj.scale(&unit_inv);
            let dexp = resolve_dn(oracle, &part, j)?;
            cur = cur.sub(&dexp)?;
            parts[j] = part;
        }
        if cur.depth() >= j && !cur.coeff(j).is_zero() {
            return Err(Error::UnsupportedBackend(format!(
                "peeling failed to clear slot {j}"
            )));
        }
    }
    parts[0] = cur.coeff(0);
    if exact {
        parts.pop();
    }
    Ok(DerDecomposition { field, weight: k, typ: m, parts, alpha })
}

/// Reassemble the E-expansion from a decomposition (the exactness oracle
/// for `decompose`).
pub fn recombine(
    oracle: &SeriesOracle,
    dec: &DerDecomposition,
) -> Result<EExpansion<GradedElem>> {
    let field = dec.field;
    let mut acc = EExpansion::zero(field, dec.weight, dec.typ);
    for (i, part) in dec.parts.iter().enumerate() {
        if part.is_zero() {
            continue;
        }
        acc = acc.add(&resolve_dn(oracle, part, i)?)?;
    }
    if let Some(a) = &dec.alpha {
        if !a.is_zero() {
            let l = (dec.weight / 2) as usize;
            acc = acc.add(&dn_e_expansion(oracle, l - 1)?.scale(a))?;
        }
    }
    Ok(acc)
}

/// The associated polynomial of a decomposition, by the closed formulas:
/// for k > 2l:  f_j = (-pi)^(-j) sum_{h>=j} C(k-h-1, j) D_{h-j} f_{h,D};
/// for k = 2l:  f_l = alpha (-pi)^(-l) and
///   f_j = (-pi)^(-j) [alpha C(l,j) D_{l-j-1} E
///         + sum_{h=j..l-1} C(2l-h-1, j) D_{h-j} f_{h,D}].
/// The derivatives stay symbolic (expression atoms); render through the
/// series oracle to compare against other routes.
pub fn der_to_assoc(dec: &DerDecomposition) -> Result<AssocPoly<FnExpr>> {
    let field = dec.field;
    let p = field.p();
    let k = dec.weight;
    match &dec.alpha {
        None => {
            let l = dec.parts.len() - 1;
            let mut coeffs = Vec::with_capacity(l + 1);
            for j in 0..=l {
                let mut acc = FnExpr::zero(field);
                for h in j..=l {
                    let c = binom_mod_p((k - h as i64 - 1) as u64, j as u64, p);
                    if c == 0 || dec.parts[h].is_zero() {
                        continue;
                    }
                    // D_{h-j} f_{h,D} with the normalization (-pi)^(j-h)
                    let der = dec.parts[h]
                        .to_expr()
                        .hyper(h - j)
                        .scale(&CoeffScalar::neg_pi_pow(field, -((h - j) as i64)));
                    acc = acc.add(&der.scale(&CoeffScalar::from_int(field, c as i64)));
                }
                coeffs.push(acc.scale(&CoeffScalar::neg_pi_pow(field, -(j as i64))));
            }
            AssocPoly::new(k, dec.typ, coeffs)
        }
        Some(alpha) => {
            let l = (k / 2) as usize;
            let mut coeffs = Vec::with_capacity(l + 1);
            for j in 0..l {
                let mut acc = FnExpr::zero(field);
                let cl = binom_mod_p(l as u64, j as u64, p);
                if cl != 0 && !alpha.is_zero() {
                    let dle = FnExpr::sym(field, Sym::E)
                        .hyper(l - j - 1)
                        .scale(&CoeffScalar::neg_pi_pow(field, -((l - j - 1) as i64)));
                    acc = acc.add(
                        &dle.scale(alpha).scale(&CoeffScalar::from_int(field, cl as i64)),
                    );
                }
                for h in j..l {
                    let c = binom_mod_p((2 * l - h) as u64 - 1, j as u64, p);
                    if c == 0 || dec.parts[h].is_zero() {
                        continue;
                    }
                    let der = dec.parts[h]
                        .to_expr()
                        .hyper(h - j)
                        .scale(&CoeffScalar::neg_pi_pow(field, -((h - j) as i64)));
                    acc = acc.add(&der.scale(&CoeffScalar::from_int(field, c as i64)));
                }
                coeffs.push(acc.scale(&CoeffScalar::neg_pi_pow(field, -(j as i64))));
            }
            coeffs.push(FnExpr::from_scalar(
                alpha.mul(&CoeffScalar::neg_pi_pow(field, -(l as i64))),
            ));
            AssocPoly::new(k, dec.typ, coeffs)
        }
    }
}

/// The Serre-type derivative of a modular element: D_1 x - (w mod p) E x is
/// modular of weight w+2, type t+1. Returned through the exact structural
/// route (the depth-0 slot of the E-expansion of D_1 x).
pub fn serre_derivative(oracle: &SeriesOracle, x: &GradedElem) -> Result<GradedElem> {
    Ok(resolve_dn(oracle, x, 1)?.coeff(0))
}

/// A convenience for tests: the residual of the Serre-type completion as
/// series, sum of D_1 x and -(w mod p) E x minus its modular solve.
pub fn serre_series_residual(
    oracle: &SeriesOracle,
    x: &GradedElem,
) -> Result<(USeries, Vec<RatFunc>)> {
    let field = x.field();
    let w = x.weight();
    let d1 = oracle
        .hyper(&x.render(oracle)?, 1)?
        .scale(&CoeffScalar::neg_pi_pow(field, -1));
    let exg = oracle.e().mul(&x.render(oracle)?);
    let series = d1.sub(&exg.scale(&CoeffScalar::from_int(field, w.rem_euclid(field.p() as i64))));
    let basis: Vec<USeries> = monomial_basis(field, w + 2, x.typ() + 1)
        .into_iter()
        .map(|(a, b)| oracle.render_monomial(a, b, 0))
        .collect::<Result<_>>()?;
    let sol = solve_in_span(&series, &basis).ok_or(Error::PrecisionLoss {
        available: oracle.precision(),
    })?;
    // residual: series - sum sol_i basis_i (zero when the solve is exact)
    let mut residual = series;
    for (c, b) in sol.iter().zip(&basis) {
        residual = residual.sub(&b.scale(&CoeffScalar::from_rat(c.clone())));
    }
    Ok((residual, sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eexp::{from_e, graded_to_e};
    use crate::sample::Sampler;

    fn f3() -> &'static FqField {
        FqField::get(3).unwrap()
    }

    fn oracle() -> std::sync::Arc<SeriesOracle> {
        SeriesOracle::get(f3(), 26).unwrap()
    }

    #[test]
    fn e_decomposes_as_alpha() {
        // f = E: k = 2, l = 1, m = 1: alpha = 1, no modular parts
        let o = oracle();
        let f = f3();
        let ee = graded_to_e(&GradedElem::sym(f, Sym::E)).unwrap();
        let dec = decompose(&o, &ee).unwrap();
        assert_eq!(dec.alpha, Some(CoeffScalar::one(f)));
        assert_eq!(dec.parts.len(), 1);
        assert!(dec.parts[0].is_zero());
        assert_eq!(recombine(&o, &dec).unwrap(), ee);
    }

    #[test]
    fn derivative_of_g_decomposes() {
        // f = D_1 g, weight 4, type 1: parts (0, g), unit C(2,1) = 2
        let o = oracle();
        let f = f3();
        let g = GradedElem::sym(f, Sym::G);
        let d1g = resolve_dn(&o, &g, 1).unwrap();
        assert_eq!(d1g.weight(), 4);
        let dec = decompose(&o, &d1g).unwrap();
        assert!(dec.alpha.is_none());
        assert!(dec.parts[0].is_zero());
        assert_eq!(dec.parts[1], g);
    }

    #[test]
    fn nvh_violation_detected() {
        // q=3, k=8, l=1, m=1: C(6,1) = 0 mod 3 and dim M_{6,0} = 1
        let o = oracle();
        let f = f3();
        // g^3 has weight 6 type 0; g^3 E has weight 8 type 1 depth 1
        let g3e = GradedElem::sym(f, Sym::G)
            .mul(&GradedElem::sym(f, Sym::G))
            .mul(&GradedElem::sym(f, Sym::G))
            .mul(&GradedElem::sym(f, Sym::E));
        let ee = graded_to_e(&g3e).unwrap();
        match decompose(&o, &ee) {
            Err(Error::NvhViolation(report)) => {
                assert!(!report.holds);
                assert_eq!(report.witnesses[0].binom_mod_p, 0);
                assert_eq!(report.witnesses[0].dim, 1);
            }
            other => panic!("expected NvhViolation, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_weight() {
        let o = oracle();
        let f = f3();
        // E^2 has weight 4 = 2*depth... E^3: weight 6, depth 3, 6 < 2*3+...
        // use E * E * E: weight 6, depth 3 => k < 2l is false (6 = 6);
        // k=2l passes. Take depth 2 with weight 2: impossible to build...
        // instead check decompose's guard directly on a shifted tag:
        let e = GradedElem::sym(f, Sym::E);
        let e2 = e.mul(&e);
        let ee = graded_to_e(&e2).unwrap(); // weight 4, depth 2: k = 2l
        assert!(decompose(&o, &ee).is_ok());
        // the error is raised through nvh_check for k < 2l
        assert!(matches!(
            nvh_check(3, 2, 1, 3, &Level1Dim { q: 3 }),
            Err(Error::OutOfRangeWeight { .. })
        ));
    }

    #[test]
    fn random_round_trips() {
        let o = oracle();
        let f = f3();
        let mut s = Sampler::new(f, 41);
        let mut done = 0;
        'outer: for _ in 0..200 {
            if done >= 12 {
                break;
            }
            // random elements of depth <= 2 at NVH-holding bigrades
            let a = s.usize_in(0..=2) as u32;
            let b = s.usize_in(0..=1) as u32;
            let e = s.usize_in(0..=2) as u32;
            let x = GradedElem::monomial(f, a, b, e, s.nonzero_scalar(1)).unwrap();
            let extra = if x.weight() >= 2 && s.bool() {
                // add a second monomial of the same bigrade if one exists
                let cands = monomial_basis(f, x.weight() - 2, x.typ() - 1);
                match cands.first() {
                    Some(&(a2, b2)) => GradedElem::monomial(f, a2, b2, 1, s.nonzero_scalar(1))
                        .unwrap(),
                    None => GradedElem::zero(f, x.weight(), x.typ()),
                }
            } else {
                GradedElem::zero(f, x.weight(), x.typ())
            };
            let x = match x.add(&extra) {
                Ok(v) => v,
                Err(_) => continue 'outer,
            };
            let ee = graded_to_e(&x).unwrap();
            let l = ee.depth();
            if ee.weight() < 2 * l as i64 {
                continue;
            }
            let report = nvh_check(ee.weight(), l as u64, ee.typ(), 3, &Level1Dim { q: 3 });
            match report {
                Ok(r) if r.holds => {}
                _ => continue,
            }
            let dec = decompose(&o, &ee).unwrap();
            // structural recombination is exact
            assert_eq!(recombine(&o, &dec).unwrap(), ee);
            // and the closed-formula associated polynomial renders to the
            // same series coefficients as from_e
            let pa = der_to_assoc(&dec).unwrap();
            let pb = from_e(&ee).unwrap();
            assert_eq!(pa.depth(), pb.depth());
            for i in 0..=pa.depth() {
                let ra = pa.coeff(i).render(&o).unwrap();
                let rb = pb.coeff(i).render(&o.clone()).unwrap();
                assert!(ra.agrees_to(&rb, 26), "coefficient {i} differs");
            }
            done += 1;
        }
        assert!(done >= 12, "not enough NVH-holding samples exercised");
    }

    #[test]
    fn injectivity_on_pairs() {
        let o = oracle();
        let f = f3();
        let g = GradedElem::sym(f, Sym::G);
        let x1 = graded_to_e(&g.mul(&GradedElem::sym(f, Sym::E))).unwrap();
        let x2 = graded_to_e(
            &g.mul(&GradedElem::sym(f, Sym::E))
                .scale(&CoeffScalar::from_int(f, 2)),
        )
        .unwrap();
        let d1 = decompose(&o, &x1).unwrap();
        let d2 = decompose(&o, &x2).unwrap();
        assert_ne!(d1, d2);
    }

    #[test]
    fn serre_completion() {
        // D_1 g - 2 E g is modular (q = 3): the structural route and the
        // series residual agree
        let o = oracle();
        let f = f3();
        let g = GradedElem::sym(f, Sym::G);
        let sg = serre_derivative(&o, &g).unwrap();
        assert!(sg.is_modular());
        assert_eq!(sg.weight(), 4);
        let (residual, sol) = serre_series_residual(&o, &g).unwrap();
        assert!(residual.is_zero_to_prec());
        assert_eq!(sol.len(), 1); // dim M_{4,1} = 1
        // the two routes agree: sg = sol[0] * h
        let expect = GradedElem::sym(f, Sym::H)
            .scale(&CoeffScalar::from_rat(sol[0].clone()));
        assert_eq!(sg, expect);
    }

    #[test]
    fn der_to_assoc_alpha_branch() {
        // dec = {alpha = 1}, l = 1, k = 2 gives P_E
        let o = oracle();
        let f = f3();
        let ee = graded_to_e(&GradedElem::sym(f, Sym::E)).unwrap();
        let dec = decompose(&o, &ee).unwrap();
        let p = der_to_assoc(&dec).unwrap();
        let pe = AssocPoly::from_graded(&crate::assoc::e_assoc(f));
        assert_eq!(p, pe);
        // a single modular part gives depth 0
        let dec0 = DerDecomposition {
            field: f,
            weight: 2,
            typ: 0,
            parts: vec![GradedElem::sym(f, Sym::G)],
            alpha: None,
        };
        let p0 = der_to_assoc(&dec0).unwrap();
        assert_eq!(p0.depth(), 0);
        assert_eq!(p0.function(), FnExpr::sym(f, Sym::G));
    }
}
