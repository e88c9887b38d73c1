//! The coefficient ring Fq(T)[pi, pi^-1].
//!
//! `pi` is a formal transcendental standing for a fixed Carlitz period: all
//! formulas of the calculus only ever use integer powers of the period with
//! K-rational multipliers, so scalars never need a completed field. Values
//! are finite maps from pi-exponent to a nonzero element of Fq(T).

use std::collections::BTreeMap;
use std::fmt;

use crate::fq::{FqElem, FqField};
use crate::fqpoly::FqPoly;
use crate::ratfunc::RatFunc;

#[derive(Clone, PartialEq)]
pub struct CoeffScalar {
    field: &'static FqField,
    terms: BTreeMap<i64, RatFunc>,
}

impl CoeffScalar {
    pub fn zero(field: &'static FqField) -> Self {
        CoeffScalar { field, terms: BTreeMap::new() }
    }

    pub fn one(field: &'static FqField) -> Self {
        Self::from_rat(RatFunc::one(field))
    }

    pub fn from_rat(r: RatFunc) -> Self {
        Self::monomial(0, r)
    }

    pub fn from_poly(p: FqPoly) -> Self {
        Self::from_rat(RatFunc::from_poly(p))
    }

    pub fn from_elem(c: FqElem) -> Self {
        Self::from_rat(RatFunc::from_elem(c))
    }

    pub fn from_int(field: &'static FqField, n: i64) -> Self {
        Self::from_rat(RatFunc::from_int(field, n))
    }

    /// r * pi^e.
    pub fn monomial(e: i64, r: RatFunc) -> Self {
        let field = r.field();
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert(e, r);
        }
        CoeffScalar { field, terms }
    }

    /// pi^e.
    pub fn pi_pow(field: &'static FqField, e: i64) -> Self {
        Self::monomial(e, RatFunc::one(field))
    }

    /// (-pi)^e = (-1)^e pi^e.
    pub fn neg_pi_pow(field: &'static FqField, e: i64) -> Self {
        let sign = if e.rem_euclid(2) == 0 { 1 } else { -1 };
        Self::monomial(e, RatFunc::from_int(field, sign))
    }

    pub fn field(&self) -> &'static FqField {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&0).is_some_and(RatFunc::is_one)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &RatFunc)> {
        self.terms.iter().map(|(&e, r)| (e, r))
    }

    pub fn coeff(&self, e: i64) -> RatFunc {
        self.terms.get(&e).cloned().unwrap_or_else(|| RatFunc::zero(self.field))
    }

    /// The fraction at pi^0, if the scalar is concentrated there.
    pub fn as_rat(&self) -> Option<RatFunc> {
        if self.is_zero() {
            return Some(RatFunc::zero(self.field));
        }
        if self.terms.len() == 1 {
            if let Some(r) = self.terms.get(&0) {
                return Some(r.clone());
            }
        }
        None
    }

    /// Lowest and highest pi-exponents present.
    pub fn pi_span(&self) -> Option<(i64, i64)> {
        let lo = self.terms.keys().next()?;
        let hi = self.terms.keys().next_back()?;
        Some((*lo, *hi))
    }

    pub fn add(&self, rhs: &CoeffScalar) -> CoeffScalar {
        let mut terms = self.terms.clone();
        for (&e, r) in &rhs.terms {
            match terms.get_mut(&e) {
                Some(cur) => {
                    let s = cur.add(r);
                    if s.is_zero() {
                        terms.remove(&e);
                    } else {
                        *cur = s;
                    }
                }
                None => {
                    terms.insert(e, r.clone());
                }
            }
        }
        CoeffScalar { field: self.field, terms }
    }

    pub fn neg(&self) -> CoeffScalar {
        CoeffScalar {
            field: self.field,
            terms: self.terms.iter().map(|(&e, r)| (e, r.neg())).collect(),
        }
    }

    pub fn sub(&self, rhs: &CoeffScalar) -> CoeffScalar {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &CoeffScalar) -> CoeffScalar {
        let mut out = CoeffScalar::zero(self.field);
        for (&e1, r1) in &self.terms {
            for (&e2, r2) in &rhs.terms {
                let e = e1 + e2;
                let prod = r1.mul(r2);
                if prod.is_zero() {
                    continue;
                }
                match out.terms.get_mut(&e) {
                    Some(cur) => {
                        let s = cur.add(&prod);
                        if s.is_zero() {
                            out.terms.remove(&e);
                        } else {
                            *cur = s;
                        }
                    }
                    None => {
                        out.terms.insert(e, prod);
                    }
                }
            }
        }
        out
    }

    pub fn mul_rat(&self, r: &RatFunc) -> CoeffScalar {
        if r.is_zero() {
            return CoeffScalar::zero(self.field);
        }
        CoeffScalar {
            field: self.field,
            terms: self.terms.iter().map(|(&e, c)| (e, c.mul(r))).collect(),
        }
    }

    pub fn mul_pi_pow(&self, e: i64) -> CoeffScalar {
        CoeffScalar {
            field: self.field,
            terms: self.terms.iter().map(|(&k, c)| (k + e, c.clone())).collect(),
        }
    }

    /// Units are single terms r * pi^e with r nonzero.
    pub fn is_unit(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn inv(&self) -> Option<CoeffScalar> {
        if self.terms.len() != 1 {
            return None;
        }
        let (&e, r) = self.terms.iter().next().unwrap();
        Some(CoeffScalar::monomial(-e, r.inv()))
    }

    pub fn pow(&self, e: i64) -> CoeffScalar {
        if e == 0 {
            return CoeffScalar::one(self.field);
        }
        let base = if e < 0 {
            self.inv().expect("negative power of a non-unit scalar")
        } else {
            self.clone()
        };
        let mut acc = CoeffScalar::one(self.field);
        let mut n = e.unsigned_abs();
        let mut b = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&b);
            }
            b = b.mul(&b);
            n >>= 1;
        }
        acc
    }

    /// Write self = pi^v * (c0 + c1 pi + ...) and return (v, the c-vector).
    /// Zero returns (0, []).
    fn as_shifted_poly(&self) -> (i64, Vec<RatFunc>) {
        let Some((lo, hi)) = self.pi_span() else {
            return (0, vec![]);
        };
        let mut v = vec![RatFunc::zero(self.field); (hi - lo + 1) as usize];
        for (&e, r) in &self.terms {
            v[(e - lo) as usize] = r.clone();
        }
        (lo, v)
    }

    fn from_shifted_poly(field: &'static FqField, shift: i64, v: &[RatFunc]) -> CoeffScalar {
        let mut terms = BTreeMap::new();
        for (i, r) in v.iter().enumerate() {
            if !r.is_zero() {
                terms.insert(shift + i as i64, r.clone());
            }
        }
        CoeffScalar { field, terms }
    }

    /// gcd in the Laurent ring, canonicalized: a monic-in-pi polynomial with
    /// nonzero constant term (the pi-power ambiguity is a unit).
    ///
    /// Runs a primitive pseudo-remainder sequence over Fq\[T\] so coefficient
    /// fractions never appear in the Euclid loop.
    pub fn gcd(&self, rhs: &CoeffScalar) -> CoeffScalar {
        if self.is_zero() {
            return rhs.canonical_associate();
        }
        if rhs.is_zero() {
            return self.canonical_associate();
        }
        if self.is_unit() || rhs.is_unit() {
            return CoeffScalar::one(self.field);
        }
        let mut a = self.integral_coeffs();
        let mut b = rhs.integral_coeffs();
        if a.len() < b.len() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_empty() {
            if b.len() == 1 {
                return CoeffScalar::one(self.field);
            }
            let r = int_poly_prem(&a, &b);
            a = b;
            b = int_poly_primitive(r);
        }
        // divide by the leading polynomial to get the monic associate
        let lead_inv = RatFunc::from_poly(a.last().unwrap().clone()).inv();
        let v: Vec<RatFunc> =
            a.iter().map(|p| RatFunc::from_poly(p.clone()).mul(&lead_inv)).collect();
        CoeffScalar::from_shifted_poly(self.field, 0, &v)
    }

    /// The pi-coefficients with T-denominators cleared and the T-content
    /// stripped: a primitive polynomial over Fq\[T\] (pi-shift dropped).
    fn integral_coeffs(&self) -> Vec<FqPoly> {
        let (_, v) = self.as_shifted_poly();
        let field = self.field;
        let mut lcm = FqPoly::one(field);
        for r in &v {
            if r.is_zero() {
                continue;
            }
            let g = lcm.gcd(r.den());
            lcm = lcm.mul(&r.den().divrem(&g).0);
        }
        let ints: Vec<FqPoly> = v
            .iter()
            .map(|r| {
                if r.is_zero() {
                    FqPoly::zero(field)
                } else {
                    r.num().mul(&lcm.divrem(r.den()).0)
                }
            })
            .collect();
        int_poly_primitive(ints)
    }

    /// The canonical unit-multiple: monic in pi with nonzero constant term.
    pub fn canonical_associate(&self) -> CoeffScalar {
        if self.is_zero() {
            return self.clone();
        }
        let (_, v) = self.as_shifted_poly();
        CoeffScalar::from_shifted_poly(self.field, 0, &pi_poly_monic(&v))
    }

    /// Exact division; `None` if rhs does not divide self.
    pub fn div_exact(&self, rhs: &CoeffScalar) -> Option<CoeffScalar> {
        assert!(!rhs.is_zero(), "division by zero scalar");
        if self.is_zero() {
            return Some(self.clone());
        }
        if let Some(inv) = rhs.inv() {
            return Some(self.mul(&inv));
        }
        let (sa, a) = self.as_shifted_poly();
        let (sb, b) = rhs.as_shifted_poly();
        let (q, r) = pi_poly_divrem(&a, &b);
        if !r.is_empty() {
            return None;
        }
        Some(CoeffScalar::from_shifted_poly(self.field, sa - sb, &q))
    }
}

fn pi_poly_trim(mut v: Vec<RatFunc>) -> Vec<RatFunc> {
    while v.last().is_some_and(RatFunc::is_zero) {
        v.pop();
    }
    v
}

fn int_poly_trim(mut v: Vec<FqPoly>) -> Vec<FqPoly> {
    while v.last().is_some_and(FqPoly::is_zero) {
        v.pop();
    }
    v
}

/// Strip the T-content and any zero low-order entries of a pi-polynomial
/// over Fq\[T\] (the pi-shift is a unit, so dropping it is harmless for gcd
/// purposes).
fn int_poly_primitive(v: Vec<FqPoly>) -> Vec<FqPoly> {
    let mut v = int_poly_trim(v);
    if v.is_empty() {
        return v;
    }
    let start = v.iter().position(|p| !p.is_zero()).unwrap();
    v.drain(..start);
    let field = v[0].field();
    let mut content = FqPoly::zero(field);
    for p in &v {
        content = content.gcd(p);
        if content.is_one() {
            break;
        }
    }
    if !content.is_one() {
        for p in v.iter_mut() {
            *p = p.divrem(&content).0;
        }
    }
    v
}

/// Pseudo-remainder of pi-polynomials over Fq\[T\].
fn int_poly_prem(a: &[FqPoly], b: &[FqPoly]) -> Vec<FqPoly> {
    let mut rem = int_poly_trim(a.to_vec());
    let b = int_poly_trim(b.to_vec());
    let db = b.len() - 1;
    let lead = b.last().unwrap();
    while rem.len() > db {
        let da = rem.len() - 1;
        let c = rem[da].clone();
        for x in rem.iter_mut() {
            *x = x.mul(lead);
        }
        for i in 0..=db {
            rem[da - db + i] = rem[da - db + i].sub(&c.mul(&b[i]));
        }
        rem = int_poly_trim(rem);
    }
    rem
}

fn pi_poly_monic(v: &[RatFunc]) -> Vec<RatFunc> {
    let v = pi_poly_trim(v.to_vec());
    if v.is_empty() {
        return v;
    }
    // also strip the pi-power content so the constant term is nonzero
    let start = v.iter().position(|r| !r.is_zero()).unwrap();
    let inv = v.last().unwrap().inv();
    v[start..].iter().map(|r| r.mul(&inv)).collect()
}

fn pi_poly_divrem(a: &[RatFunc], b: &[RatFunc]) -> (Vec<RatFunc>, Vec<RatFunc>) {
    let field = b.iter().find(|r| !r.is_zero()).expect("division by zero").field();
    let b = pi_poly_trim(b.to_vec());
    let mut rem = pi_poly_trim(a.to_vec());
    let db = b.len() - 1;
    if rem.len() <= db {
        return (vec![], rem);
    }
    let lead_inv = b.last().unwrap().inv();
    let mut quot = vec![RatFunc::zero(field); rem.len() - db];
    while rem.len() > db {
        let da = rem.len() - 1;
        let c = rem[da].mul(&lead_inv);
        quot[da - db] = c.clone();
        for i in 0..=db {
            rem[da - db + i] = rem[da - db + i].sub(&c.mul(&b[i]));
        }
        rem = pi_poly_trim(rem);
        if rem.len() <= db {
            break;
        }
    }
    (pi_poly_trim(quot), rem)
}

impl fmt::Display for CoeffScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&e, r) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match e {
                0 => write!(f, "{r}")?,
                1 => write!(f, "({r})*pi")?,
                _ => write!(f, "({r})*pi^{e}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for CoeffScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A reduced fraction of scalars, used internally to run Euclid in z over
/// the fraction field of the Laurent ring. The canonical denominator is
/// monic in pi with nonzero constant term.
#[derive(Clone, PartialEq, Debug)]
pub struct PiRat {
    num: CoeffScalar,
    den: CoeffScalar,
}

impl PiRat {
    pub fn new(num: CoeffScalar, den: CoeffScalar) -> PiRat {
        assert!(!den.is_zero(), "zero denominator in Frac(K[pi, pi^-1])");
        if num.is_zero() {
            return PiRat { num, den: CoeffScalar::one(den.field()) };
        }
        let g = num.gcd(&den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).unwrap(), den.div_exact(&g).unwrap())
        };
        // normalize the denominator to its canonical associate
        let canon = den.canonical_associate();
        let unit = den.div_exact(&canon).unwrap(); // a unit r*pi^e
        let unit_inv = unit.inv().unwrap();
        PiRat { num: num.mul(&unit_inv), den: canon }
    }

    pub fn from_scalar(s: CoeffScalar) -> PiRat {
        let field = s.field();
        PiRat { num: s, den: CoeffScalar::one(field) }
    }

    pub fn zero(field: &'static FqField) -> PiRat {
        PiRat { num: CoeffScalar::zero(field), den: CoeffScalar::one(field) }
    }

    pub fn field(&self) -> &'static FqField {
        self.num.field()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn num(&self) -> &CoeffScalar {
        &self.num
    }

    pub fn den(&self) -> &CoeffScalar {
        &self.den
    }

    /// The scalar, if the reduced denominator is 1.
    pub fn as_scalar(&self) -> Option<CoeffScalar> {
        self.den.is_one().then(|| self.num.clone())
    }

    pub fn add(&self, rhs: &PiRat) -> PiRat {
        PiRat::new(
            self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
        )
    }

    pub fn neg(&self) -> PiRat {
        PiRat { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, rhs: &PiRat) -> PiRat {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &PiRat) -> PiRat {
        PiRat::new(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
    }

    pub fn inv(&self) -> PiRat {
        assert!(!self.is_zero(), "inverse of zero");
        PiRat::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, rhs: &PiRat) -> PiRat {
        self.mul(&rhs.inv())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fq::FqField;
    use crate::fqpoly::FqPoly;

    fn f3() -> &'static FqField {
        FqField::get(3).unwrap()
    }

    #[test]
    fn laurent_arithmetic() {
        let f = f3();
        let a = CoeffScalar::pi_pow(f, -1).mul_rat(&RatFunc::from_poly(FqPoly::t(f)));
        let b = CoeffScalar::pi_pow(f, 1);
        let prod = a.mul(&b);
        assert_eq!(prod, CoeffScalar::from_poly(FqPoly::t(f)));
        assert!(a.mul(&a.inv().unwrap()).is_one());
        assert!(a.add(&a.neg()).is_zero());
    }

    #[test]
    fn neg_pi_pow_signs() {
        let f = f3();
        let m1 = CoeffScalar::neg_pi_pow(f, 1);
        let m2 = CoeffScalar::neg_pi_pow(f, 2);
        assert_eq!(m1.mul(&m1), m2);
        assert_eq!(m1.coeff(1), RatFunc::from_int(f, -1));
        assert_eq!(m2.coeff(2), RatFunc::from_int(f, 1));
    }

    #[test]
    fn gcd_and_exact_division() {
        let f = f3();
        let one = CoeffScalar::one(f);
        let pi = CoeffScalar::pi_pow(f, 1);
        // (pi + 1)(pi - 1) and (pi + 1) pi^-3
        let a = pi.add(&one).mul(&pi.sub(&one));
        let b = pi.add(&one).mul_pi_pow(-3);
        let g = a.gcd(&b);
        assert_eq!(g, pi.add(&one));
        assert_eq!(a.div_exact(&g).unwrap(), pi.sub(&one));
        assert!(a.div_exact(&pi.sub(&one).add(&one)).is_none() || !pi.is_zero());
        // non-divisor returns None
        let c = pi.add(&CoeffScalar::from_int(f, 2));
        assert!(c.div_exact(&a).is_none());
    }

    #[test]
    fn pirat_reduces() {
        let f = f3();
        let pi = CoeffScalar::pi_pow(f, 1);
        let one = CoeffScalar::one(f);
        let x = PiRat::new(pi.add(&one).mul(&pi), pi.add(&one).mul(&pi.add(&pi)));
        // (pi+1)pi / ((pi+1)2pi) = 2 (2^-1 = 2 in F3)
        assert_eq!(x.as_scalar().unwrap(), CoeffScalar::from_int(f, 2));
    }
}
