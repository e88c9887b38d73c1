//! Associated polynomials and the slash / double-slash operators.
//!
//! A quasi-modular object of weight k, type m and depth l is stored as its
//! associated polynomial P_f = sum_{i=0..l} f_i X^i with backend function
//! coefficients; f_0 is the function itself and f_l is nonzero unless the
//! object is zero (depth 0 by convention). The double-slash operator acts
//! on polynomials by
//!
//!   (P || gamma)(z, X) = det^m (cz+d)^-k P(gamma z, (cz+d)^2/det (X - c/(cz+d)))
//!
//! whose X^h coefficient is
//!   sum_{i>=h} C(i,h) det^(m-i) (cz+d)^(2i-k) (-c/(cz+d))^(i-h) f_i(gamma z),
//!
//! a genuine right action; weak quasi-modularity for a group is invariance
//! under a generating set.

use std::fmt;

use crate::binom::binom_mod_p;
use crate::error::{Error, Result};
use crate::fq::FqField;
use crate::matrix::Matrix2;
use crate::scalar::CoeffScalar;
use crate::symfn::{FnExpr, GradedElem, Sym};
use crate::zrat::ZRat;

/// What an associated-polynomial coefficient must support.
pub trait Backend: Clone + PartialEq + fmt::Debug {
    fn field(&self) -> &'static FqField;
    fn is_zero(&self) -> bool;
    /// A zero coefficient for the slot of the given bigrade.
    fn zero_slot(field: &'static FqField, weight: i64, typ: i64) -> Self;
    fn add(&self, rhs: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
    fn scale(&self, c: &CoeffScalar) -> Self;
    /// Consistency of a coefficient sitting at the given bigrade slot.
    fn slot_ok(&self, weight: i64, typ: i64) -> bool;
}

impl Backend for FnExpr {
    fn field(&self) -> &'static FqField {
        FnExpr::field(self)
    }

    fn is_zero(&self) -> bool {
        FnExpr::is_zero(self)
    }

    fn zero_slot(field: &'static FqField, _weight: i64, _typ: i64) -> Self {
        FnExpr::zero(field)
    }

    fn add(&self, rhs: &Self) -> Result<Self> {
        Ok(FnExpr::add(self, rhs))
    }

    fn neg(&self) -> Self {
        FnExpr::neg(self)
    }

    fn scale(&self, c: &CoeffScalar) -> Self {
        FnExpr::scale(self, c)
    }

    fn slot_ok(&self, _weight: i64, _typ: i64) -> bool {
        true // rational test functions carry no bigrade
    }
}

impl Backend for GradedElem {
    fn field(&self) -> &'static FqField {
        GradedElem::field(self)
    }

    fn is_zero(&self) -> bool {
        GradedElem::is_zero(self)
    }

    fn zero_slot(field: &'static FqField, weight: i64, typ: i64) -> Self {
        GradedElem::zero(field, weight, typ)
    }

    fn add(&self, rhs: &Self) -> Result<Self> {
        GradedElem::add(self, rhs)
    }

    fn neg(&self) -> Self {
        GradedElem::neg(self)
    }

    fn scale(&self, c: &CoeffScalar) -> Self {
        GradedElem::scale(self, c)
    }

    fn slot_ok(&self, weight: i64, typ: i64) -> bool {
        if self.is_zero() {
            return true;
        }
        let o = self.field().q() as i64 - 1;
        self.weight() == weight && (self.typ() - typ).rem_euclid(o) == 0
    }
}

/// An associated polynomial with coefficients in a function backend.
#[derive(Clone, PartialEq, Debug)]
pub struct AssocPoly<B: Backend> {
    field: &'static FqField,
    weight: i64,
    typ: i64,
    coeffs: Vec<B>,
}

impl<B: Backend> AssocPoly<B> {
    pub fn new(weight: i64, typ: i64, coeffs: Vec<B>) -> Result<AssocPoly<B>> {
        assert!(!coeffs.is_empty(), "an associated polynomial needs at least f_0");
        let field = coeffs[0].field();
        for (i, c) in coeffs.iter().enumerate() {
            if !c.slot_ok(weight - 2 * i as i64, typ - i as i64) {
                return Err(Error::BigradeMismatch(format!(
                    "coefficient {i} does not live in weight {}, type {}",
                    weight - 2 * i as i64,
                    typ - i as i64
                )));
            }
        }
        let mut p = AssocPoly { field, weight, typ, coeffs };
        p.trim();
        Ok(p)
    }

    pub fn zero(field: &'static FqField, weight: i64, typ: i64) -> AssocPoly<B> {
        AssocPoly { field, weight, typ, coeffs: vec![B::zero_slot(field, weight, typ)] }
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(B::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn field(&self) -> &'static FqField {
        self.field
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn typ(&self) -> i64 {
        self.typ
    }

    /// The X-degree; 0 for the zero object by convention.
    pub fn depth(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(B::is_zero)
    }

    pub fn coeff(&self, i: usize) -> B {
        self.coeffs.get(i).cloned().unwrap_or_else(|| {
            B::zero_slot(self.field, self.weight - 2 * i as i64, self.typ - i as i64)
        })
    }

    pub fn coeffs(&self) -> &[B] {
        &self.coeffs
    }

    /// The function itself (the constant coefficient).
    pub fn function(&self) -> B {
        self.coeff(0)
    }

    pub fn add(&self, rhs: &AssocPoly<B>) -> Result<AssocPoly<B>> {
        if self.weight != rhs.weight
            || (self.typ - rhs.typ).rem_euclid(self.field.q() as i64 - 1) != 0
        {
            return Err(Error::BigradeMismatch(format!(
                "adding ({}, {}) to ({}, {})",
                self.weight, self.typ, rhs.weight, rhs.typ
            )));
        }
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            coeffs.push(self.coeff(i).add(&rhs.coeff(i))?);
        }
        let mut out = AssocPoly { field: self.field, weight: self.weight, typ: self.typ, coeffs };
        out.trim();
        Ok(out)
    }

    pub fn neg(&self) -> AssocPoly<B> {
        AssocPoly {
            field: self.field,
            weight: self.weight,
            typ: self.typ,
            coeffs: self.coeffs.iter().map(B::neg).collect(),
        }
    }

    pub fn sub(&self, rhs: &AssocPoly<B>) -> Result<AssocPoly<B>> {
        self.add(&rhs.neg())
    }

    pub fn scale(&self, c: &CoeffScalar) -> AssocPoly<B> {
        let mut out = AssocPoly {
            field: self.field,
            weight: self.weight,
            typ: self.typ,
            coeffs: self.coeffs.iter().map(|x| x.scale(c)).collect(),
        };
        out.trim();
        out
    }

    /// The i-th coefficient as a quasi-modular object of weight k-2i, type
    /// m-i and depth <= l-i: P_{f_i} = sum_{j>=i} C(j, i) f_j X^(j-i).
    pub fn coeff_assoc(&self, i: usize) -> Result<AssocPoly<B>> {
        let l = self.depth();
        if i > l {
            return Err(Error::IndexOutOfRange { index: i, depth: l });
        }
        let p = self.field.p();
        let mut coeffs = Vec::with_capacity(l - i + 1);
        for j in i..=l {
            let c = binom_mod_p(j as u64, i as u64, p);
            coeffs.push(self.coeff(j).scale(&CoeffScalar::from_int(self.field, c as i64)));
        }
        AssocPoly::new(self.weight - 2 * i as i64, self.typ - i as i64, coeffs)
    }
}

impl AssocPoly<FnExpr> {
    /// Lift graded coefficients into the expression algebra.
    pub fn from_graded(p: &AssocPoly<GradedElem>) -> AssocPoly<FnExpr> {
        AssocPoly {
            field: p.field,
            weight: p.weight,
            typ: p.typ,
            coeffs: p.coeffs.iter().map(GradedElem::to_expr).collect(),
        }
    }

    /// Collapse back to graded coefficients when every coefficient is a
    /// level-1 polynomial in g, h, E with scalar coefficients.
    pub fn to_graded(&self) -> Option<AssocPoly<GradedElem>> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c.as_graded(self.weight - 2 * i as i64, self.typ - i as i64)?);
        }
        AssocPoly::new(self.weight, self.typ, coeffs).ok()
    }

    /// The double-slash operator on polynomials (a right action).
    pub fn dslash(&self, gamma: &Matrix2) -> Result<AssocPoly<FnExpr>> {
        if gamma.det().is_zero() {
            return Err(Error::DegenerateMatrix);
        }
        let field = self.field;
        let p = field.p();
        let l = self.depth();
        let (j, kappa) = gamma.cocycles();
        let det = CoeffScalar::from_rat(gamma.det().clone());
        // alpha_i(gamma z)
        let composed: Vec<FnExpr> =
            self.coeffs.iter().map(|c| c.compose(gamma)).collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(l + 1);
        for h in 0..=l {
            let mut acc = FnExpr::zero(field);
            for i in h..=l {
                if composed[i].is_zero() {
                    continue;
                }
                let b = binom_mod_p(i as u64, h as u64, p);
                if b == 0 {
                    continue;
                }
                let factor = ZRat::constant(det.pow(self.typ - i as i64))
                    .mul(&j.pow(2 * i as i64 - self.weight))
                    .mul(&kappa.neg().pow((i - h) as i64))
                    .scale(&CoeffScalar::from_int(field, b as i64));
                acc = acc.add(&composed[i].scale_zrat(&factor));
            }
            out.push(acc);
        }
        AssocPoly::new(self.weight, self.typ, out)
    }

    /// The slash operator on the function: det^m (cz+d)^-k f(gamma z).
    pub fn slash_fn(&self, gamma: &Matrix2) -> Result<FnExpr> {
        if gamma.det().is_zero() {
            return Err(Error::DegenerateMatrix);
        }
        let det = CoeffScalar::from_rat(gamma.det().clone());
        let j = gamma.j_cocycle();
        let factor = ZRat::constant(det.pow(self.typ)).mul(&j.pow(-self.weight));
        Ok(self.function().compose(gamma)?.scale_zrat(&factor))
    }

    /// The double-slash operator on the function:
    /// sum_i (-c/(cz+d))^i (f_i |_{k-2i, m-i} gamma).
    pub fn dslash_fn(&self, gamma: &Matrix2) -> Result<FnExpr> {
        if gamma.det().is_zero() {
            return Err(Error::DegenerateMatrix);
        }
        let field = self.field;
        let det = CoeffScalar::from_rat(gamma.det().clone());
        let (j, kappa) = gamma.cocycles();
        let mut acc = FnExpr::zero(field);
        for i in 0..=self.depth() {
            let c = self.coeff(i);
            if c.is_zero() {
                continue;
            }
            let factor = kappa
                .neg()
                .pow(i as i64)
                .scale(&det.pow(self.typ - i as i64))
                .mul(&j.pow(2 * i as i64 - self.weight));
            acc = acc.add(&c.compose(gamma)?.scale_zrat(&factor));
        }
        Ok(acc)
    }

    /// The residual of the slash <-> double-slash conversion
    ///   (f | gamma) - sum_i (c/(cz+d))^i (f_i || gamma),
    /// identically zero for every quasi-modular object and every gamma.
    pub fn conversion_residual(&self, gamma: &Matrix2) -> Result<FnExpr> {
        let (_, kappa) = gamma.cocycles();
        let mut rhs = FnExpr::zero(self.field);
        for i in 0..=self.depth() {
            let fi = self.coeff_assoc(i)?;
            let term = fi.dslash_fn(gamma)?.scale_zrat(&kappa.pow(i as i64));
            rhs = rhs.add(&term);
        }
        Ok(self.slash_fn(gamma)?.sub(&rhs))
    }
}

/// True when P || gamma = P for every generator; sufficient for the whole
/// group because the double-slash is a right action.
pub fn is_weak_qmod(p: &AssocPoly<FnExpr>, gens: &[Matrix2]) -> Result<bool> {
    for g in gens {
        if p.dslash(g)? != *p {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The canonical associated polynomial of a graded element: X-expand every
/// monomial through P_{g^a h^b E^e} = g^a h^b (E - pi^-1 X)^e.
pub fn canonical_assoc(x: &GradedElem) -> AssocPoly<GradedElem> {
    let field = x.field();
    let p = field.p();
    let l = x.e_degree() as usize;
    let mut coeffs: Vec<GradedElem> = (0..=l)
        .map(|i| GradedElem::zero(field, x.weight() - 2 * i as i64, x.typ() - i as i64))
        .collect();
    for (&(a, b, e), c) in x.terms() {
        for i in 0..=e as usize {
            let bin = binom_mod_p(e as u64, i as u64, p);
            if bin == 0 {
                continue;
            }
            let scalar = CoeffScalar::neg_pi_pow(field, -(i as i64))
                .mul(&CoeffScalar::from_int(field, bin as i64))
                .mul(c);
            let mono = GradedElem::monomial(field, a, b, e - i as u32, scalar).unwrap();
            coeffs[i] = coeffs[i].add(&mono).expect("slot bigrades match");
        }
    }
    AssocPoly::new(x.weight(), x.typ(), coeffs).expect("canonical expansion is consistent")
}

/// Verify that a weakly quasi-modular polynomial is the associated
/// polynomial of its constant coefficient.
pub fn reconstruct(p: &AssocPoly<GradedElem>) -> bool {
    let expect = canonical_assoc(&p.function());
    expect.weight() == p.weight()
        && (expect.typ() - p.typ()).rem_euclid(p.field().q() as i64 - 1) == 0
        && expect.coeffs() == p.coeffs()
}

/// P_E = E - pi^-1 X, the associated polynomial of the false Eisenstein
/// series.
pub fn e_assoc(field: &'static FqField) -> AssocPoly<GradedElem> {
    AssocPoly::new(
        2,
        1,
        vec![
            GradedElem::sym(field, Sym::E),
            GradedElem::scalar(field, CoeffScalar::pi_pow(field, -1).neg()),
        ],
    )
    .unwrap()
}

/// The associated polynomial of a rational test function (depth 0..l with
/// explicit ZRat coefficients, no modularity assumed).
pub fn zrat_assoc(weight: i64, typ: i64, coeffs: Vec<ZRat>) -> AssocPoly<FnExpr> {
    AssocPoly::new(weight, typ, coeffs.into_iter().map(FnExpr::from_zrat).collect())
        .expect("rational coefficients carry no bigrade")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::gl2a_generators;
    use crate::sample::Sampler;

    fn f3() -> &'static FqField {
        FqField::get(3).unwrap()
    }

    #[test]
    fn unipotent_dslash_is_translation() {
        // gamma = (1 b; 0 1): P(z, X) -> P(z + b, X)
        let f = f3();
        let mut s = Sampler::new(f, 3);
        let p = zrat_assoc(4, 1, vec![s.zrat(2, 1), s.zrat(2, 1), s.zrat(2, 1)]);
        let b = s.poly(2);
        let gamma = Matrix2::from_polys(
            crate::fqpoly::FqPoly::one(f),
            b,
            crate::fqpoly::FqPoly::zero(f),
            crate::fqpoly::FqPoly::one(f),
        )
        .unwrap();
        let moved = p.dslash(&gamma).unwrap();
        for i in 0..=p.depth() {
            let expect = p.coeff(i).compose(&gamma).unwrap();
            assert_eq!(moved.coeff(i), expect);
        }
    }

    #[test]
    fn p_e_is_invariant() {
        let f = f3();
        let pe = AssocPoly::from_graded(&e_assoc(f));
        // an explicit antidiagonal example in GL2(F3[T])
        let gamma = Matrix2::from_ints(f, 0, 1, 2, 0).unwrap();
        assert_eq!(pe.dslash(&gamma).unwrap(), pe);
        assert!(is_weak_qmod(&pe, &gl2a_generators(f)).unwrap());
        let mut s = Sampler::new(f, 11);
        for _ in 0..20 {
            let gamma = s.gl2a_matrix(3);
            assert_eq!(pe.dslash(&gamma).unwrap(), pe);
        }
    }

    #[test]
    fn dslash_fn_of_e_is_e() {
        let f = f3();
        let pe = AssocPoly::from_graded(&e_assoc(f));
        let mut s = Sampler::new(f, 5);
        for _ in 0..10 {
            let gamma = s.gl2a_matrix(2);
            let out = pe.dslash_fn(&gamma).unwrap();
            assert_eq!(out, FnExpr::sym(f, Sym::E));
        }
    }

    #[test]
    fn dslash_is_right_action_on_zrat() {
        let f = f3();
        let mut s = Sampler::new(f, 9);
        for _ in 0..15 {
            let p = zrat_assoc(3, 1, vec![s.zrat(2, 1), s.zrat(1, 1), s.zrat(1, 1)]);
            let g1 = s.nonsingular_matrix(1);
            let g2 = s.nonsingular_matrix(1);
            let lhs = p.dslash(&g1.mul(&g2)).unwrap();
            let rhs = p.dslash(&g1).unwrap().dslash(&g2).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn depth_never_grows() {
        let f = f3();
        let mut s = Sampler::new(f, 21);
        for _ in 0..10 {
            let p = zrat_assoc(2, 1, vec![s.zrat(1, 1), s.zrat(1, 1), s.zrat(1, 1)]);
            let g = s.nonsingular_matrix(1);
            assert!(p.dslash(&g).unwrap().depth() <= p.depth());
        }
    }

    #[test]
    fn depth_zero_slash_equals_dslash() {
        let f = f3();
        let mut s = Sampler::new(f, 13);
        for _ in 0..10 {
            let p = zrat_assoc(5, 2, vec![s.zrat(2, 2)]);
            let g = s.nonsingular_matrix(1);
            assert_eq!(p.slash_fn(&g).unwrap(), p.dslash_fn(&g).unwrap());
        }
    }

    #[test]
    fn conversion_closes_on_e() {
        let f = f3();
        let pe = AssocPoly::from_graded(&e_assoc(f));
        let mut s = Sampler::new(f, 17);
        for _ in 0..10 {
            let gamma = s.gl2a_matrix(2);
            assert!(pe.conversion_residual(&gamma).unwrap().is_zero());
        }
    }

    #[test]
    fn coeff_assoc_of_e() {
        let f = f3();
        let pe = e_assoc(f);
        // (P_E)_1 = -pi^-1, depth 0, weight 0, type 0
        let f1 = pe.coeff_assoc(1).unwrap();
        assert_eq!(f1.depth(), 0);
        assert_eq!(f1.weight(), 0);
        assert_eq!(
            f1.function().as_scalar().unwrap(),
            CoeffScalar::pi_pow(f, -1).neg()
        );
        // index 0 is f itself
        assert_eq!(pe.coeff_assoc(0).unwrap(), pe);
        assert!(pe.coeff_assoc(2).is_err());
    }

    #[test]
    fn french_lemma_binomials() {
        // depth-2 object: (f_1)_1 = 2 f_2 in char 5
        let f = FqField::get(5).unwrap();
        let mut s = Sampler::new(f, 2);
        let p = zrat_assoc(4, 2, vec![s.zrat(1, 1), s.zrat(1, 1), s.nonzero_zrat(1, 1)]);
        let f1 = p.coeff_assoc(1).unwrap();
        let f11 = f1.coeff_assoc(1).unwrap();
        let expect = p.coeff(2).scale(&CoeffScalar::from_int(f, 2));
        assert_eq!(f11.function(), expect);
    }

    #[test]
    fn reconstruct_canonical_polynomials() {
        let f = f3();
        let pe = e_assoc(f);
        assert!(reconstruct(&pe));
        // P_{E^2} = (E - pi^-1 X)^2
        let e2 = GradedElem::sym(f, Sym::E).mul(&GradedElem::sym(f, Sym::E));
        let pe2 = canonical_assoc(&e2);
        assert_eq!(pe2.depth(), 2);
        assert!(reconstruct(&pe2));
        // corrupt one coefficient
        let mut coeffs = pe2.coeffs().to_vec();
        coeffs[1] = coeffs[1].scale(&CoeffScalar::from_int(f, 2));
        let bad = AssocPoly::new(pe2.weight(), pe2.typ(), coeffs).unwrap();
        assert!(!reconstruct(&bad));
    }

    #[test]
    fn multiplicativity_of_canonical_assoc() {
        // P_{fg} = P_f P_g on the graded backend, checked through FnExpr
        let f = f3();
        let x = GradedElem::sym(f, Sym::E).mul(&GradedElem::sym(f, Sym::G));
        let y = GradedElem::sym(f, Sym::H);
        let pxy = canonical_assoc(&x.mul(&y));
        let px = canonical_assoc(&x);
        let py = canonical_assoc(&y);
        // multiply the polynomials coefficientwise
        let mut prod: Vec<GradedElem> = vec![];
        for i in 0..=(px.depth() + py.depth()) {
            let mut acc =
                GradedElem::zero(f, pxy.weight() - 2 * i as i64, pxy.typ() - i as i64);
            for a in 0..=i.min(px.depth()) {
                let b = i - a;
                if b > py.depth() {
                    continue;
                }
                acc = acc.add(&px.coeff(a).mul(&py.coeff(b))).unwrap();
            }
            prod.push(acc);
        }
        let prod = AssocPoly::new(pxy.weight(), pxy.typ(), prod).unwrap();
        assert_eq!(prod, pxy);
    }

    #[test]
    fn weak_qmod_examples() {
        let f = f3();
        // P = X with constant coefficients: invariant under (1 1; 0 1) but
        // not under (0 1; 1 0)
        let p = zrat_assoc(0, 0, vec![ZRat::zero(f), ZRat::one(f)]);
        let upper = Matrix2::from_ints(f, 1, 1, 0, 1).unwrap();
        let winv = Matrix2::from_ints(f, 0, 1, 1, 0).unwrap();
        assert!(is_weak_qmod(&p, std::slice::from_ref(&upper)).unwrap());
        assert!(!is_weak_qmod(&p, &[winv]).unwrap());
    }
}
