//! The rational function field K = Fq(T), stored in reduced form.

use std::fmt;

use crate::fq::{FqElem, FqField};
use crate::fqpoly::FqPoly;

/// A reduced fraction of polynomials: gcd(num, den) = 1 and the denominator
/// is monic. Zero is 0/1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: FqPoly,
    den: FqPoly,
}

impl RatFunc {
    pub fn new(num: FqPoly, den: FqPoly) -> RatFunc {
        assert!(!den.is_zero(), "zero denominator in Fq(T)");
        let mut num = num;
        let mut den = den;
        if num.is_zero() {
            return RatFunc::zero(num.field());
        }
        let g = num.gcd(&den);
        if !g.is_one() {
            num = num.divrem(&g).0;
            den = den.divrem(&g).0;
        }
        let lead = den.leading();
        if !lead.is_one() {
            let inv = lead.inv();
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        RatFunc { num, den }
    }

    pub fn from_poly(p: FqPoly) -> RatFunc {
        let field = p.field();
        RatFunc { num: p, den: FqPoly::one(field) }
    }

    pub fn from_elem(c: FqElem) -> RatFunc {
        RatFunc::from_poly(FqPoly::constant(c))
    }

    pub fn from_int(field: &'static FqField, n: i64) -> RatFunc {
        RatFunc::from_elem(field.from_int(n))
    }

    pub fn zero(field: &'static FqField) -> RatFunc {
        RatFunc { num: FqPoly::zero(field), den: FqPoly::one(field) }
    }

    pub fn one(field: &'static FqField) -> RatFunc {
        RatFunc { num: FqPoly::one(field), den: FqPoly::one(field) }
    }

    pub fn field(&self) -> &'static FqField {
        self.num.field()
    }

    pub fn num(&self) -> &FqPoly {
        &self.num
    }

    pub fn den(&self) -> &FqPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    /// True for nonzero constants of Fq.
    pub fn is_unit_constant(&self) -> bool {
        self.den.is_one() && self.num.is_constant() && !self.num.is_zero()
    }

    pub fn add(&self, rhs: &RatFunc) -> RatFunc {
        RatFunc::new(
            self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
        )
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, rhs: &RatFunc) -> RatFunc {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &RatFunc) -> RatFunc {
        RatFunc::new(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
    }

    pub fn inv(&self) -> RatFunc {
        assert!(!self.is_zero(), "inverse of zero in Fq(T)");
        RatFunc::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, rhs: &RatFunc) -> RatFunc {
        self.mul(&rhs.inv())
    }

    pub fn pow(&self, e: i64) -> RatFunc {
        if e == 0 {
            return RatFunc::one(self.field());
        }
        let base = if e < 0 { self.inv() } else { self.clone() };
        let mut acc = RatFunc::one(self.field());
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

    pub fn eval(&self, x: &FqElem) -> Option<FqElem> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(x).mul(&d.inv()))
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fq::FqField;

    #[test]
    fn reduction_is_canonical() {
        let f = FqField::get(3).unwrap();
        let t = FqPoly::t(f);
        let a = RatFunc::new(t.mul(&t), t.scale(&f.elem(2))); // t^2 / 2t = 2t... check
        // t^2/(2t) reduces to t/2 with monic denominator 1: 2^-1 t = 2t
        assert_eq!(a, RatFunc::from_poly(t.scale(&f.elem(2))));
        assert!(a.den().is_monic());
    }

    #[test]
    fn field_ops() {
        let f = FqField::get(5).unwrap();
        let t = RatFunc::from_poly(FqPoly::t(f));
        let x = t.add(&RatFunc::from_int(f, 2)).inv(); // 1/(t+2)
        let y = x.mul(&t); // t/(t+2)
        assert_eq!(y.add(&x), t.add(&RatFunc::from_int(f, 1)).mul(&x));
        assert!(x.mul(&x.inv()).is_one());
    }
}
