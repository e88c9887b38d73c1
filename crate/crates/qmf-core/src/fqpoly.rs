//! Dense polynomials over Fq in the variable T.

use std::fmt;

use crate::error::{Error, Result};
use crate::fq::{FqElem, FqField};

/// A polynomial in Fq\[T\], trailing zeros trimmed. The zero polynomial has an
/// empty coefficient vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FqPoly {
    field: &'static FqField,
    coeffs: Vec<FqElem>,
}

impl FqPoly {
    pub fn zero(field: &'static FqField) -> Self {
        FqPoly { field, coeffs: vec![] }
    }

    pub fn one(field: &'static FqField) -> Self {
        FqPoly { field, coeffs: vec![field.one()] }
    }

    /// The variable T.
    pub fn t(field: &'static FqField) -> Self {
        FqPoly { field, coeffs: vec![field.zero(), field.one()] }
    }

    pub fn constant(c: FqElem) -> Self {
        Self::from_coeffs(c.field(), vec![c])
    }

    pub fn from_coeffs(field: &'static FqField, coeffs: Vec<FqElem>) -> Self {
        let mut p = FqPoly { field, coeffs };
        p.trim();
        p
    }

    /// Coefficients given as integer encodings, index = T-degree.
    pub fn from_ints(field: &'static FqField, coeffs: &[u64]) -> Self {
        Self::from_coeffs(field, coeffs.iter().map(|&c| field.elem(c)).collect())
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(FqElem::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn field(&self) -> &'static FqField {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// Degree; the zero polynomial has degree -1 by convention here.
    pub fn degree(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn coeffs(&self) -> &[FqElem] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> FqElem {
        self.coeffs.get(i).copied().unwrap_or_else(|| self.field.zero())
    }

    pub fn leading(&self) -> FqElem {
        self.coeffs.last().copied().unwrap_or_else(|| self.field.zero())
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_one()
    }

    pub fn add(&self, rhs: &FqPoly) -> FqPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i).add(&rhs.coeff(i)));
        }
        FqPoly::from_coeffs(self.field, out)
    }

    pub fn neg(&self) -> FqPoly {
        FqPoly { field: self.field, coeffs: self.coeffs.iter().map(FqElem::neg).collect() }
    }

    pub fn sub(&self, rhs: &FqPoly) -> FqPoly {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &FqPoly) -> FqPoly {
        if self.is_zero() || rhs.is_zero() {
            return FqPoly::zero(self.field);
        }
        let mut out = vec![self.field.zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        FqPoly::from_coeffs(self.field, out)
    }

    pub fn scale(&self, c: &FqElem) -> FqPoly {
        FqPoly::from_coeffs(self.field, self.coeffs.iter().map(|a| a.mul(c)).collect())
    }

    pub fn shift(&self, k: usize) -> FqPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![self.field.zero(); k];
        coeffs.extend_from_slice(&self.coeffs);
        FqPoly { field: self.field, coeffs }
    }

    pub fn pow(&self, e: u64) -> FqPoly {
        let mut acc = FqPoly::one(self.field);
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

    /// Quotient and remainder; panics on division by zero.
    pub fn divrem(&self, rhs: &FqPoly) -> (FqPoly, FqPoly) {
        assert!(!rhs.is_zero(), "polynomial division by zero");
        if self.degree() < rhs.degree() {
            return (FqPoly::zero(self.field), self.clone());
        }
        let lead_inv = rhs.leading().inv();
        let mut rem = self.coeffs.clone();
        let dr = rhs.coeffs.len() - 1;
        let mut quot = vec![self.field.zero(); rem.len() - dr];
        while rem.len() > dr {
            let da = rem.len() - 1;
            let c = rem[da].mul(&lead_inv);
            quot[da - dr] = c;
            for i in 0..=dr {
                rem[da - dr + i] = rem[da - dr + i].sub(&c.mul(&rhs.coeffs[i]));
            }
            while rem.last().is_some_and(FqElem::is_zero) {
                rem.pop();
            }
            if rem.len() <= dr {
                break;
            }
        }
        (FqPoly::from_coeffs(self.field, quot), FqPoly::from_coeffs(self.field, rem))
    }

    pub fn rem(&self, rhs: &FqPoly) -> FqPoly {
        self.divrem(rhs).1
    }

    /// Monic gcd; gcd(0, 0) = 0.
    pub fn gcd(&self, rhs: &FqPoly) -> FqPoly {
        let mut a = self.clone();
        let mut b = rhs.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.make_monic()
    }

    pub fn make_monic(&self) -> FqPoly {
        if self.is_zero() || self.is_monic() {
            return self.clone();
        }
        self.scale(&self.leading().inv())
    }

    pub fn eval(&self, x: &FqElem) -> FqElem {
        let mut acc = self.field.zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    /// Monic irreducibility over Fq, by trial division (degrees are small).
    pub fn is_irreducible(&self) -> bool {
        let d = self.degree();
        if d < 1 || !self.is_monic() {
            return false;
        }
        if d == 1 {
            return true;
        }
        let mut divisors = vec![FqPoly::t(self.field)];
        // enumerate monic polynomials of degree 1..=d/2
        for deg in 1..=(d / 2) as usize {
            for v in 0..self.field.q().pow(deg as u32) {
                let mut coeffs = Vec::with_capacity(deg + 1);
                let mut v = v;
                for _ in 0..deg {
                    coeffs.push(self.field.elem(v % self.field.q()));
                    v /= self.field.q();
                }
                coeffs.push(self.field.one());
                divisors.push(FqPoly::from_coeffs(self.field, coeffs));
            }
        }
        divisors.iter().all(|f| f.degree() > d / 2 || !self.rem(f).is_zero())
    }

    /// All monic polynomials of the given degree, in lexicographic
    /// coefficient order (constant coefficient varies fastest).
    pub fn monic_of_degree(field: &'static FqField, deg: usize) -> Vec<FqPoly> {
        let q = field.q();
        let count = q.pow(deg as u32);
        let mut out = Vec::with_capacity(count as usize);
        for v in 0..count {
            let mut coeffs = Vec::with_capacity(deg + 1);
            let mut v = v;
            for _ in 0..deg {
                coeffs.push(field.elem(v % q));
                v /= q;
            }
            coeffs.push(field.one());
            out.push(FqPoly::from_coeffs(field, coeffs));
        }
        out
    }

    /// All polynomials of degree < deg (the canonical representatives of
    /// A/(d) for d of the given degree), in lexicographic coefficient order.
    pub fn all_below_degree(field: &'static FqField, deg: usize) -> Vec<FqPoly> {
        let q = field.q();
        let count = q.pow(deg as u32);
        let mut out = Vec::with_capacity(count as usize);
        for v in 0..count {
            let mut coeffs = Vec::with_capacity(deg);
            let mut v = v;
            for _ in 0..deg {
                coeffs.push(field.elem(v % q));
                v /= q;
            }
            out.push(FqPoly::from_coeffs(field, coeffs));
        }
        out
    }

    /// Parse expressions like "t^2+2t+1", "T+2", "0", "2*t^3".
    pub fn parse(field: &'static FqField, s: &str) -> Result<FqPoly> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        let mut out = FqPoly::zero(field);
        // split into signed terms
        let mut terms: Vec<(bool, String)> = vec![];
        let mut cur = String::new();
        let mut neg = false;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '+' | '-' if i > 0 => {
                    if cur.is_empty() {
                        return Err(Error::Parse(format!("dangling sign in {s:?}")));
                    }
                    terms.push((neg, std::mem::take(&mut cur)));
                    neg = ch == '-';
                }
                '-' => neg = true,
                _ => cur.push(ch),
            }
        }
        if cur.is_empty() {
            return Err(Error::Parse(format!("dangling sign in {s:?}")));
        }
        terms.push((neg, cur));
        for (neg, term) in terms {
            let (coeff_str, var_str) = match term.find(['t', 'T']) {
                Some(idx) => (&term[..idx], &term[idx..]),
                None => (&term[..], ""),
            };
            let coeff_str = coeff_str.trim_end_matches('*');
            let coeff = if coeff_str.is_empty() {
                field.one()
            } else {
                let v: u64 = coeff_str
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coefficient {coeff_str:?}")))?;
                field.elem(v)
            };
            let deg = if var_str.is_empty() {
                0
            } else {
                let rest = &var_str[1..];
                if rest.is_empty() {
                    1
                } else if let Some(e) = rest.strip_prefix('^') {
                    e.parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad exponent in {term:?}")))?
                } else {
                    return Err(Error::Parse(format!("bad term {term:?}")));
                }
            };
            let mono = FqPoly::constant(coeff).shift(deg);
            out = if neg { out.sub(&mono) } else { out.add(&mono) };
        }
        Ok(out)
    }
}

impl PartialOrd for FqPoly {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FqPoly {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.coeffs
            .len()
            .cmp(&other.coeffs.len())
            .then_with(|| self.coeffs.cmp(&other.coeffs))
    }
}

impl fmt::Display for FqPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 if c.is_one() => write!(f, "t")?,
                1 => write!(f, "{c}t")?,
                _ if c.is_one() => write!(f, "t^{i}")?,
                _ => write!(f, "{c}t^{i}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for FqPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> &'static FqField {
        FqField::get(3).unwrap()
    }

    #[test]
    fn divrem_roundtrip() {
        let f = f3();
        let a = FqPoly::from_ints(f, &[1, 2, 0, 1, 1]);
        let b = FqPoly::from_ints(f, &[2, 1, 1]);
        let (q, r) = a.divrem(&b);
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.degree() < b.degree());
    }

    #[test]
    fn gcd_of_products() {
        let f = f3();
        let a = FqPoly::from_ints(f, &[1, 1]); // t+1
        let b = FqPoly::from_ints(f, &[2, 1]); // t+2
        let c = FqPoly::from_ints(f, &[0, 1]); // t
        let g = a.mul(&b).gcd(&a.mul(&c));
        assert_eq!(g, a);
    }

    #[test]
    fn parse_display_roundtrip() {
        let f = f3();
        for s in ["t+2", "t^2+2t+2", "2t^6+t", "1", "0", "t^2-1"] {
            let p = FqPoly::parse(f, s).unwrap();
            let q = FqPoly::parse(f, &p.to_string()).unwrap();
            assert_eq!(p, q, "{s}");
        }
        assert_eq!(
            FqPoly::parse(f, "t^2-1").unwrap(),
            FqPoly::from_ints(f, &[2, 0, 1])
        );
    }

    #[test]
    fn irreducibility() {
        let f = f3();
        assert!(FqPoly::parse(f, "t+2").unwrap().is_irreducible());
        assert!(FqPoly::parse(f, "t^2+1").unwrap().is_irreducible());
        assert!(!FqPoly::parse(f, "t^2+2").unwrap().is_irreducible()); // (t+1)(t+2)
        assert!(!FqPoly::parse(f, "t^2").unwrap().is_irreducible());
    }

    #[test]
    fn monic_enumeration_count() {
        let f = f3();
        assert_eq!(FqPoly::monic_of_degree(f, 0).len(), 1);
        assert_eq!(FqPoly::monic_of_degree(f, 2).len(), 9);
        assert_eq!(FqPoly::all_below_degree(f, 2).len(), 9);
    }
}
