//! Rational functions in the half-plane variable z with coefficients in the
//! scalar ring Fq(T)[pi, pi^-1].
//!
//! The representation is a fraction that is not necessarily reduced:
//! equality cross-multiplies (the coefficient ring is an integral domain,
//! so this is exact and never needs a gcd), and `canonical` produces the
//! fully reduced, unit-normalized form on demand — display, serialization
//! and evaluation go through it. Keeping arithmetic lazy makes the long
//! operator chains of the double-slash calculus tractable; the reduction
//! machinery itself is fraction-free (primitive pseudo-remainder sequences
//! over the Laurent ring).

use std::fmt;

use crate::fq::FqField;
use crate::ratfunc::RatFunc;
use crate::scalar::CoeffScalar;

/// A dense polynomial in z over the scalar ring.
#[derive(Clone, PartialEq, Debug)]
pub struct ZPoly {
    field: &'static FqField,
    coeffs: Vec<CoeffScalar>,
}

impl ZPoly {
    pub fn zero(field: &'static FqField) -> Self {
        ZPoly { field, coeffs: vec![] }
    }

    pub fn one(field: &'static FqField) -> Self {
        ZPoly { field, coeffs: vec![CoeffScalar::one(field)] }
    }

    pub fn z(field: &'static FqField) -> Self {
        ZPoly { field, coeffs: vec![CoeffScalar::zero(field), CoeffScalar::one(field)] }
    }

    pub fn constant(c: CoeffScalar) -> Self {
        Self::from_coeffs(c.field(), vec![c])
    }

    pub fn from_coeffs(field: &'static FqField, coeffs: Vec<CoeffScalar>) -> Self {
        let mut p = ZPoly { field, coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(CoeffScalar::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn field(&self) -> &'static FqField {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn coeff(&self, i: usize) -> CoeffScalar {
        self.coeffs.get(i).cloned().unwrap_or_else(|| CoeffScalar::zero(self.field))
    }

    pub fn coeffs(&self) -> &[CoeffScalar] {
        &self.coeffs
    }

    pub fn leading(&self) -> CoeffScalar {
        self.coeffs.last().cloned().unwrap_or_else(|| CoeffScalar::zero(self.field))
    }

    pub fn add(&self, rhs: &ZPoly) -> ZPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i).add(&rhs.coeff(i)));
        }
        ZPoly::from_coeffs(self.field, out)
    }

    pub fn neg(&self) -> ZPoly {
        ZPoly { field: self.field, coeffs: self.coeffs.iter().map(CoeffScalar::neg).collect() }
    }

    pub fn sub(&self, rhs: &ZPoly) -> ZPoly {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &ZPoly) -> ZPoly {
        if self.is_zero() || rhs.is_zero() {
            return ZPoly::zero(self.field);
        }
        let mut out = vec![CoeffScalar::zero(self.field); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        ZPoly::from_coeffs(self.field, out)
    }

    pub fn scale(&self, c: &CoeffScalar) -> ZPoly {
        if c.is_zero() {
            return ZPoly::zero(self.field);
        }
        ZPoly::from_coeffs(self.field, self.coeffs.iter().map(|a| a.mul(c)).collect())
    }

    pub fn pow(&self, e: u64) -> ZPoly {
        let mut acc = ZPoly::one(self.field);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Evaluate at a scalar point.
    pub fn eval(&self, x: &CoeffScalar) -> CoeffScalar {
        let mut acc = CoeffScalar::zero(self.field);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    /// n-th divided derivative of a polynomial: z^k -> C(k, n) z^(k-n),
    /// binomials reduced mod p.
    pub fn hyper(&self, n: usize) -> ZPoly {
        if n == 0 {
            return self.clone();
        }
        let p = self.field.p();
        let mut out = vec![CoeffScalar::zero(self.field); self.coeffs.len().saturating_sub(n)];
        for (k, c) in self.coeffs.iter().enumerate() {
            if k < n || c.is_zero() {
                continue;
            }
            let b = crate::binom::binom_mod_p(k as u64, n as u64, p);
            if b == 0 {
                continue;
            }
            out[k - n] = out[k - n].add(&c.mul(&CoeffScalar::from_int(self.field, b as i64)));
        }
        ZPoly::from_coeffs(self.field, out)
    }
}

fn zpoly_trim(mut v: Vec<CoeffScalar>) -> Vec<CoeffScalar> {
    while v.last().is_some_and(CoeffScalar::is_zero) {
        v.pop();
    }
    v
}

/// Pseudo-remainder: lc(b)^(da-db+1) * a mod b, computed entirely inside
/// the scalar ring.
fn zpoly_prem(a: &[CoeffScalar], b: &[CoeffScalar]) -> Vec<CoeffScalar> {
    let mut rem = zpoly_trim(a.to_vec());
    let b = zpoly_trim(b.to_vec());
    let db = b.len() - 1;
    let lead = b.last().unwrap();
    while rem.len() > db {
        let da = rem.len() - 1;
        let c = rem[da].clone();
        // rem = lead * rem - c * x^(da-db) * b
        for x in rem.iter_mut() {
            *x = x.mul(lead);
        }
        for i in 0..=db {
            rem[da - db + i] = rem[da - db + i].sub(&c.mul(&b[i]));
        }
        rem = zpoly_trim(rem);
    }
    rem
}

/// Scalar content of a nonzero coefficient vector (canonical associate).
fn zpoly_vec_content(v: &[CoeffScalar]) -> CoeffScalar {
    let field = v
        .iter()
        .find(|c| !c.is_zero())
        .map(|c| c.field())
        .expect("content of the zero polynomial");
    let mut g = CoeffScalar::zero(field);
    for c in v {
        if c.is_zero() {
            continue;
        }
        g = g.gcd(c);
        if g.is_one() {
            break;
        }
    }
    g
}

fn zpoly_vec_div_content(v: &[CoeffScalar], g: &CoeffScalar) -> Vec<CoeffScalar> {
    if g.is_one() {
        return v.to_vec();
    }
    v.iter()
        .map(|c| {
            if c.is_zero() {
                c.clone()
            } else {
                c.div_exact(g).expect("content divides")
            }
        })
        .collect()
}

/// Primitive-PRS gcd in z over the scalar ring; a trivial gcd comes back as
/// a constant (length-one) vector.
fn zpoly_gcd_primitive(a: &[CoeffScalar], b: &[CoeffScalar]) -> Vec<CoeffScalar> {
    let mut a = zpoly_trim(a.to_vec());
    let mut b = zpoly_trim(b.to_vec());
    if a.is_empty() {
        return b;
    }
    if b.is_empty() {
        return a;
    }
    a = zpoly_vec_div_content(&a, &zpoly_vec_content(&a));
    b = zpoly_vec_div_content(&b, &zpoly_vec_content(&b));
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    while !b.is_empty() {
        if b.len() == 1 {
            // a nonzero scalar divides everything
            return vec![CoeffScalar::one(b[0].field())];
        }
        let r = zpoly_prem(&a, &b);
        a = b;
        b = if r.is_empty() {
            r
        } else {
            zpoly_vec_div_content(&r, &zpoly_vec_content(&r))
        };
    }
    a
}

/// Exact long division in the scalar ring; panics when not exact.
fn zpoly_div_exact(a: &ZPoly, b: &ZPoly) -> ZPoly {
    let field = a.field();
    if a.is_zero() {
        return ZPoly::zero(field);
    }
    let bv = zpoly_trim(b.coeffs.clone());
    let db = bv.len() - 1;
    let lead = bv.last().unwrap();
    let mut rem = zpoly_trim(a.coeffs.clone());
    let mut quot = vec![CoeffScalar::zero(field); rem.len() - db];
    while rem.len() > db {
        let da = rem.len() - 1;
        let c = rem[da].div_exact(lead).expect("leading coefficient divides exactly");
        quot[da - db] = c.clone();
        for i in 0..=db {
            rem[da - db + i] = rem[da - db + i].sub(&c.mul(&bv[i]));
        }
        rem = zpoly_trim(rem);
    }
    assert!(rem.is_empty(), "inexact polynomial division");
    ZPoly::from_coeffs(field, quot)
}

/// A rational function of z.
#[derive(Clone)]
pub struct ZRat {
    num: ZPoly,
    den: ZPoly,
}

impl ZRat {
    pub fn new(num: ZPoly, den: ZPoly) -> ZRat {
        assert!(!den.is_zero(), "zero denominator in z");
        let field = num.field();
        if num.is_zero() {
            return ZRat { num, den: ZPoly::one(field) };
        }
        ZRat { num, den }
    }

    /// Fully reduced canonical form: no common polynomial factor, no common
    /// scalar content, and the lowest pi-term of the denominator's leading
    /// z-coefficient equal to 1. Equality never needs this (it
    /// cross-multiplies), but display, serialization and evaluation do.
    pub fn canonical(&self) -> ZRat {
        let field = self.field();
        if self.num.is_zero() {
            return ZRat { num: ZPoly::zero(field), den: ZPoly::one(field) };
        }
        let (mut num, mut den) = (self.num.clone(), self.den.clone());
        // strip the common scalar content first
        let cn = zpoly_vec_content(&num.coeffs);
        let cd = zpoly_vec_content(&den.coeffs);
        let g_scalar = cn.gcd(&cd);
        if !g_scalar.is_one() {
            num = ZPoly::from_coeffs(field, zpoly_vec_div_content(&num.coeffs, &g_scalar));
            den = ZPoly::from_coeffs(field, zpoly_vec_div_content(&den.coeffs, &g_scalar));
        }
        // remove the common polynomial factor when both sides involve z
        if num.degree() > 0 && den.degree() > 0 {
            let g = zpoly_gcd_primitive(&num.coeffs, &den.coeffs);
            if g.len() > 1 {
                let gz = ZPoly::from_coeffs(field, g);
                num = zpoly_div_exact(&num, &gz);
                den = zpoly_div_exact(&den, &gz);
            }
        }
        // unit normalization: lowest pi-term of the denominator's leading
        // z-coefficient becomes 1
        let lead = den.leading();
        let (lo, _) = lead.pi_span().unwrap();
        let unit = CoeffScalar::monomial(lo, lead.coeff(lo));
        let unit_inv = unit.inv().unwrap();
        ZRat { num: num.scale(&unit_inv), den: den.scale(&unit_inv) }
    }

    pub fn from_poly(p: ZPoly) -> ZRat {
        let field = p.field();
        ZRat { num: p, den: ZPoly::one(field) }
    }

    pub fn constant(c: CoeffScalar) -> ZRat {
        ZRat::from_poly(ZPoly::constant(c))
    }

    pub fn zero(field: &'static FqField) -> ZRat {
        ZRat::constant(CoeffScalar::zero(field))
    }

    pub fn one(field: &'static FqField) -> ZRat {
        ZRat::constant(CoeffScalar::one(field))
    }

    pub fn z(field: &'static FqField) -> ZRat {
        ZRat::from_poly(ZPoly::z(field))
    }

    /// The linear polynomial c*z + d with K-rational coefficients.
    pub fn linear(c: &RatFunc, d: &RatFunc) -> ZRat {
        let field = c.field();
        ZRat::from_poly(ZPoly::from_coeffs(
            field,
            vec![CoeffScalar::from_rat(d.clone()), CoeffScalar::from_rat(c.clone())],
        ))
    }

    pub fn field(&self) -> &'static FqField {
        self.num.field()
    }

    pub fn num(&self) -> &ZPoly {
        &self.num
    }

    pub fn den(&self) -> &ZPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    /// The constant scalar value, if the function does not depend on z.
    /// Falls back to canonicalization when the raw fraction still shows z.
    pub fn as_scalar(&self) -> Option<CoeffScalar> {
        if self.num.is_zero() {
            return Some(CoeffScalar::zero(self.field()));
        }
        if self.num.degree() <= 0 && self.den.degree() == 0 {
            let d = self.den.coeff(0);
            if let Some(dinv) = d.inv() {
                return Some(self.num.coeff(0).mul(&dinv));
            }
        }
        if self.num.degree() == self.den.degree() {
            let c = self.canonical();
            if c.num.degree() <= 0 && c.den.degree() == 0 {
                if let Some(dinv) = c.den.coeff(0).inv() {
                    return Some(c.num.coeff(0).mul(&dinv));
                }
            }
        }
        None
    }

    pub fn add(&self, rhs: &ZRat) -> ZRat {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            return ZRat::new(self.num.add(&rhs.num), self.den.clone());
        }
        ZRat::new(
            self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
        )
    }

    pub fn neg(&self) -> ZRat {
        ZRat { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, rhs: &ZRat) -> ZRat {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &ZRat) -> ZRat {
        if self.is_zero() || rhs.is_zero() {
            return ZRat::zero(self.field());
        }
        ZRat::new(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
    }

    pub fn scale(&self, c: &CoeffScalar) -> ZRat {
        if c.is_zero() {
            return ZRat::zero(self.field());
        }
        ZRat::new(self.num.scale(c), self.den.clone())
    }

    pub fn inv(&self) -> ZRat {
        assert!(!self.is_zero(), "inverse of the zero function");
        ZRat::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, rhs: &ZRat) -> ZRat {
        self.mul(&rhs.inv())
    }

    pub fn pow(&self, e: i64) -> ZRat {
        if e == 0 {
            return ZRat::one(self.field());
        }
        let base = if e < 0 { self.inv() } else { self.clone() };
        let mut acc = ZRat::one(self.field());
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

    /// Substitute z -> (a z + b) / (c z + d).
    pub fn subst_mobius(&self, a: &RatFunc, b: &RatFunc, c: &RatFunc, d: &RatFunc) -> ZRat {
        let field = self.field();
        let top = ZPoly::from_coeffs(
            field,
            vec![CoeffScalar::from_rat(b.clone()), CoeffScalar::from_rat(a.clone())],
        );
        let bot = ZPoly::from_coeffs(
            field,
            vec![CoeffScalar::from_rat(d.clone()), CoeffScalar::from_rat(c.clone())],
        );
        // f((az+b)/(cz+d)) = [sum n_i top^i bot^(m-i)] / [sum d_j top^j bot^(m-j)]
        // with m = max degree; all polynomial arithmetic, one construction
        let dn = self.num.degree().max(0) as usize;
        let dd = self.den.degree().max(0) as usize;
        let m = dn.max(dd);
        let mut top_pows = Vec::with_capacity(m + 1);
        let mut bot_pows = Vec::with_capacity(m + 1);
        let mut tp = ZPoly::one(field);
        let mut bp = ZPoly::one(field);
        for _ in 0..=m {
            top_pows.push(tp.clone());
            bot_pows.push(bp.clone());
            tp = tp.mul(&top);
            bp = bp.mul(&bot);
        }
        let mut new_num = ZPoly::zero(field);
        for (i, coeff) in self.num.coeffs().iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            new_num = new_num.add(&top_pows[i].mul(&bot_pows[m - i]).scale(coeff));
        }
        let mut new_den = ZPoly::zero(field);
        for (j, coeff) in self.den.coeffs().iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            new_den = new_den.add(&top_pows[j].mul(&bot_pows[m - j]).scale(coeff));
        }
        ZRat::new(new_num, new_den)
    }

    /// Evaluate at a scalar point; None when the (reduced) denominator
    /// vanishes there.
    pub fn eval(&self, x: &CoeffScalar) -> Option<CoeffScalar> {
        let c = self.canonical();
        let d = c.den.eval(x);
        let num = c.num.eval(x);
        let dinv = d.inv()?;
        Some(num.mul(&dinv))
    }

    /// The n-th hyperderivative: the coefficient of eps^n in f(z + eps),
    /// computed fraction-free over a single denominator power: with
    /// num(z+eps) = sum a_j eps^j and den(z+eps) = sum b_j eps^j, the
    /// numerators N_j of D_j f = N_j / b_0^(j+1) satisfy
    /// N_j = a_j b_0^j - sum_{r=1..j} b_r N_{j-r} b_0^(r-1).
    pub fn hyper(&self, n: usize) -> ZRat {
        if n == 0 || self.is_zero() {
            return self.clone();
        }
        let a: Vec<ZPoly> = (0..=n).map(|j| self.num.hyper(j)).collect();
        let b: Vec<ZPoly> = (0..=n).map(|j| self.den.hyper(j)).collect();
        let b0 = &b[0];
        let mut b0_pows: Vec<ZPoly> = Vec::with_capacity(n + 1);
        let mut acc = ZPoly::one(self.field());
        for _ in 0..=n {
            b0_pows.push(acc.clone());
            acc = acc.mul(b0);
        }
        let mut nums: Vec<ZPoly> = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let mut nj = a[j].mul(&b0_pows[j]);
            for r in 1..=j {
                if b[r].is_zero() {
                    continue;
                }
                nj = nj.sub(&b[r].mul(&nums[j - r]).mul(&b0_pows[r - 1]));
            }
            nums.push(nj);
        }
        ZRat::new(nums.pop().unwrap(), b0_pows.pop().unwrap().mul(b0))
    }
}

impl PartialEq for ZRat {
    fn eq(&self, other: &Self) -> bool {
        // a/b = c/d iff ad = cb, exactly, in an integral domain
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

impl fmt::Display for ZRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |p: &ZPoly, f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if p.is_zero() {
                return write!(f, "0");
            }
            let mut first = true;
            for (i, c) in p.coeffs().iter().enumerate().rev() {
                if c.is_zero() {
                    continue;
                }
                if !first {
                    write!(f, " + ")?;
                }
                first = false;
                match i {
                    0 => write!(f, "({c})")?,
                    1 => write!(f, "({c})z")?,
                    _ => write!(f, "({c})z^{i}")?,
                }
            }
            Ok(())
        };
        let c = self.canonical();
        show(&c.num, f)?;
        if c.den != ZPoly::one(self.field()) {
            write!(f, " / [")?;
            show(&c.den, f)?;
            write!(f, "]")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ZRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fq::FqField;

    fn f3() -> &'static FqField {
        FqField::get(3).unwrap()
    }

    #[test]
    fn reduction_cancels_common_factors() {
        let f = f3();
        let z = ZRat::z(f);
        let one = ZRat::one(f);
        // (z^2 - 1)/(z - 1) = z + 1
        let a = z.mul(&z).sub(&one).div(&z.sub(&one));
        assert_eq!(a, z.add(&one));
        // the canonical form is literally z + 1 over 1
        let c = a.canonical();
        assert_eq!(c.num(), z.add(&one).num());
        assert_eq!(c.den(), &ZPoly::one(f));
    }

    #[test]
    fn field_laws() {
        let f = f3();
        let z = ZRat::z(f);
        let x = z.pow(3).sub(&ZRat::one(f)).inv();
        let y = z.add(&ZRat::one(f));
        assert_eq!(x.add(&y).mul(&z), x.mul(&z).add(&y.mul(&z)));
        assert!(x.mul(&x.inv()).is_one());
        assert!(x.sub(&x).is_zero());
    }

    #[test]
    fn mobius_substitution() {
        let f = f3();
        let z = ZRat::z(f);
        let one = RatFunc::one(f);
        let zero = RatFunc::zero(f);
        // z -> 1/z applied to z^2 gives z^-2
        let s = z.pow(2).subst_mobius(&zero, &one, &one, &zero);
        assert_eq!(s, z.pow(-2));
    }

    #[test]
    fn eval_at_point() {
        let f = f3();
        let z = ZRat::z(f);
        let g = z.pow(2).add(&ZRat::one(f)).div(&z); // (z^2+1)/z
        let two = CoeffScalar::from_int(f, 2);
        // (4+1)/2 = 5/2 = 2/2 = 1 in F3
        assert!(g.eval(&two).unwrap().is_one());
        assert!(g.eval(&CoeffScalar::zero(f)).is_none());
        // a removable pole evaluates after reduction
        let h = z.mul(&z).div(&z);
        assert!(h.eval(&CoeffScalar::zero(f)).unwrap().is_zero());
    }

    #[test]
    fn pi_coefficients_reduce() {
        let f = f3();
        let z = ZRat::z(f);
        let pi_inv = CoeffScalar::pi_pow(f, -1);
        // (pi^-1 z)/(pi^-1) = z
        let a = z.scale(&pi_inv).div(&ZRat::constant(pi_inv.clone()));
        assert_eq!(a, z);
    }

    #[test]
    fn as_scalar_sees_through_unreduced_forms() {
        let f = f3();
        let z = ZRat::z(f);
        let one = ZRat::one(f);
        // (z+1)/(z+1) is 1 even though the raw fraction mentions z
        let x = z.add(&one).div(&z.add(&one));
        assert_eq!(x.as_scalar().unwrap(), CoeffScalar::one(f));
        assert!(z.as_scalar().is_none());
    }

    #[test]
    fn hyper_on_fractions() {
        let f = f3();
        let z = ZRat::z(f);
        // D_1(z^2) = 2z, D_2(1/z) = z^-3
        assert_eq!(z.pow(2).hyper(1), z.scale(&CoeffScalar::from_int(f, 2)));
        assert_eq!(z.pow(-1).hyper(2), z.pow(-3));
        // quotient-rule sanity: D_1(z/(z+1)) = 1/(z+1)^2
        let x = z.div(&z.add(&ZRat::one(f)));
        assert_eq!(x.hyper(1), z.add(&ZRat::one(f)).pow(-2));
    }
}
