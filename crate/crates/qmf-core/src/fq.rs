//! The finite field Fq, q = p^r, with table-driven arithmetic.
//!
//! Elements are stored as integers in 0..q encoding polynomials over Fp in
//! base p (digit i is the coefficient of x^i against the chosen irreducible
//! modulus of degree r). Fields are interned in a process-wide registry, so
//! elements carry a `&'static FqField` and remain `Copy`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

/// Built-in irreducible moduli (base-p digit vectors, low degree first,
/// including the leading 1) for the default prime powers.
fn default_modulus(p: u64, r: u32) -> Option<Vec<u64>> {
    match (p, r) {
        (_, 1) => Some(vec![0, 1]), // x itself; unused for prime fields
        (2, 2) => Some(vec![1, 1, 1]),
        (2, 3) => Some(vec![1, 1, 0, 1]),
        (3, 2) => Some(vec![1, 0, 1]),
        _ => None,
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct FieldKey {
    p: u64,
    r: u32,
    modulus: Vec<u64>,
}

/// Arithmetic tables for one finite field.
pub struct FqField {
    p: u64,
    r: u32,
    q: u64,
    modulus: Vec<u64>,
    add: Vec<u16>,
    mul: Vec<u16>,
    neg: Vec<u16>,
    inv: Vec<u16>,
    /// A fixed generator of the multiplicative group.
    generator: u16,
}

impl fmt::Debug for FqField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FqField(q={})", self.q)
    }
}

// Fields are interned, so identity is pointer identity.
impl PartialEq for FqField {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self, other)
    }
}

impl Eq for FqField {}

impl std::hash::Hash for FqField {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        (self as *const FqField as usize).hash(state);
    }
}

fn registry() -> &'static Mutex<HashMap<FieldKey, &'static FqField>> {
    static REGISTRY: OnceLock<Mutex<HashMap<FieldKey, &'static FqField>>> = OnceLock::new();
    REGISTRY.get_or_init(|| Mutex::new(HashMap::new()))
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Digit polynomials over Fp, used only while building field tables.
mod fp_poly {
    pub fn trim(mut v: Vec<u64>) -> Vec<u64> {
        while v.last() == Some(&0) {
            v.pop();
        }
        v
    }

    pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return vec![];
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y) % p;
            }
        }
        trim(out)
    }

    pub fn rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
        let mut a = trim(a.to_vec());
        let dm = m.len() - 1;
        let lead_inv = mod_inv(m[dm], p);
        while a.len() > dm {
            let da = a.len() - 1;
            let c = a[da] * lead_inv % p;
            for i in 0..=dm {
                let idx = da - dm + i;
                a[idx] = (a[idx] + p * p - c * m[i] % p) % p;
            }
            a = trim(a);
        }
        a
    }

    pub fn mod_inv(a: u64, p: u64) -> u64 {
        // Fermat; p is a small prime.
        let mut acc = 1u64;
        let mut base = a % p;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        acc
    }

    /// gcd of two polynomials over Fp (monic output, or empty for gcd of zeros).
    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut a = trim(a.to_vec());
        let mut b = trim(b.to_vec());
        while !b.is_empty() {
            let r = rem(&a, &make_monic(&b, p), p);
            a = b;
            b = r;
        }
        if a.is_empty() {
            a
        } else {
            make_monic(&a, p)
        }
    }

    pub fn make_monic(a: &[u64], p: u64) -> Vec<u64> {
        let mut a = a.to_vec();
        let inv = mod_inv(*a.last().unwrap(), p);
        for c in a.iter_mut() {
            *c = *c * inv % p;
        }
        a
    }

    /// x^(p^k) mod m, by repeated squaring of x^p.
    pub fn frobenius_power(m: &[u64], p: u64, k: u32) -> Vec<u64> {
        let mut x = vec![0, 1]; // x
        for _ in 0..k {
            // raise to the p-th power
            let mut acc = vec![1];
            let mut base = x.clone();
            let mut e = p;
            while e > 0 {
                if e & 1 == 1 {
                    acc = rem(&mul(&acc, &base, p), m, p);
                }
                base = rem(&mul(&base, &base, p), m, p);
                e >>= 1;
            }
            x = acc;
        }
        x
    }

    /// Rabin irreducibility test over Fp.
    pub fn is_irreducible(m: &[u64], p: u64) -> bool {
        let m = trim(m.to_vec());
        if m.len() < 2 {
            return false;
        }
        let r = (m.len() - 1) as u32;
        if r == 1 {
            return true;
        }
        // x^(p^r) == x mod m
        let xr = frobenius_power(&m, p, r);
        let x = rem(&[0, 1], &m, p);
        if trim(xr.clone()) != trim(x.clone()) {
            return false;
        }
        // gcd(x^(p^(r/l)) - x, m) == 1 for every prime l | r
        let mut rr = r;
        let mut primes = vec![];
        let mut d = 2;
        while d <= rr {
            if rr.is_multiple_of(d) {
                primes.push(d);
                while rr.is_multiple_of(d) {
                    rr /= d;
                }
            }
            d += 1;
        }
        for l in primes {
            let mut xe = frobenius_power(&m, p, r / l);
            // xe - x
            while xe.len() < 2 {
                xe.push(0);
            }
            xe[1] = (xe[1] + p - 1) % p;
            let g = gcd(&xe, &m, p);
            if g.len() != 1 {
                return false;
            }
        }
        true
    }
}

impl FqField {
    /// Fetch (building and interning on first use) the field with the given
    /// p, r and modulus. `modulus` is a base-p digit vector of length r+1;
    /// `None` selects the built-in default.
    pub fn get_with_modulus(p: u64, r: u32, modulus: Option<&[u64]>) -> Result<&'static FqField> {
        if !is_prime(p) {
            return Err(Error::Config(format!("{p} is not prime")));
        }
        if r == 0 {
            return Err(Error::Config("r must be positive".into()));
        }
        let q = p.checked_pow(r).filter(|&q| q <= 4096).ok_or_else(|| {
            Error::Config(format!("q = {p}^{r} too large for table-driven arithmetic"))
        })?;
        let modulus: Vec<u64> = match modulus {
            Some(m) => m.iter().map(|&c| c % p).collect(),
            None => default_modulus(p, r).ok_or_else(|| {
                Error::Config(format!("no built-in modulus for q = {q}; supply one"))
            })?,
        };
        if r > 1 {
            let t = fp_poly::trim(modulus.clone());
            if t.len() != r as usize + 1 {
                return Err(Error::Config(format!(
                    "modulus must have degree {r}, got degree {}",
                    t.len() as i64 - 1
                )));
            }
            if !fp_poly::is_irreducible(&modulus, p) {
                return Err(Error::Config("modulus is reducible".into()));
            }
        }
        let key = FieldKey { p, r, modulus: modulus.clone() };
        let mut reg = registry().lock().unwrap();
        if let Some(f) = reg.get(&key) {
            return Ok(f);
        }
        let field = Box::leak(Box::new(Self::build(p, r, q, modulus)));
        reg.insert(key, field);
        Ok(field)
    }

    /// Fetch the field of order q with the built-in modulus.
    pub fn get(q: u64) -> Result<&'static FqField> {
        let (p, r) = factor_prime_power(q)
            .ok_or_else(|| Error::Config(format!("q = {q} is not a prime power")))?;
        Self::get_with_modulus(p, r, None)
    }

    fn build(p: u64, r: u32, q: u64, modulus: Vec<u64>) -> FqField {
        let qu = q as usize;
        let to_digits = |mut v: u64| -> Vec<u64> {
            let mut d = Vec::with_capacity(r as usize);
            for _ in 0..r {
                d.push(v % p);
                v /= p;
            }
            d
        };
        let from_digits = |d: &[u64]| -> u64 {
            let mut v = 0u64;
            for &c in d.iter().rev() {
                v = v * p + c;
            }
            v
        };
        let mut add = vec![0u16; qu * qu];
        let mut mul = vec![0u16; qu * qu];
        let mut neg = vec![0u16; qu];
        for a in 0..q {
            let da = to_digits(a);
            let dn: Vec<u64> = da.iter().map(|&c| (p - c) % p).collect();
            neg[a as usize] = from_digits(&dn) as u16;
            for b in 0..q {
                let db = to_digits(b);
                let ds: Vec<u64> = da.iter().zip(&db).map(|(&x, &y)| (x + y) % p).collect();
                add[(a * q + b) as usize] = from_digits(&ds) as u16;
                let prod = fp_poly::rem(&fp_poly::mul(&da, &db, p), &modulus, p);
                let mut padded = prod;
                padded.resize(r as usize, 0);
                mul[(a * q + b) as usize] = from_digits(&padded) as u16;
            }
        }
        let mut inv = vec![0u16; qu];
        for a in 1..q {
            for b in 1..q {
                if mul[(a * q + b) as usize] == 1 {
                    inv[a as usize] = b as u16;
                    break;
                }
            }
        }
        // find a multiplicative generator
        let mut generator = 1u16;
        for a in 2..q {
            let mut x = a;
            let mut order = 1;
            while x != 1 {
                x = mul[(x * q + a) as usize] as u64;
                order += 1;
            }
            if order == q - 1 {
                generator = a as u16;
                break;
            }
        }
        FqField { p, r, q, modulus, add, mul, neg, inv, generator }
    }

    pub fn p(&'static self) -> u64 {
        self.p
    }

    pub fn r(&'static self) -> u32 {
        self.r
    }

    pub fn q(&'static self) -> u64 {
        self.q
    }

    pub fn modulus_digits(&'static self) -> &'static [u64] {
        &self.modulus
    }

    pub fn zero(&'static self) -> FqElem {
        FqElem { field: self, v: 0 }
    }

    pub fn one(&'static self) -> FqElem {
        FqElem { field: self, v: 1 }
    }

    /// The element encoded by `v` in 0..q (base-p digits of the residue
    /// polynomial).
    pub fn elem(&'static self, v: u64) -> FqElem {
        FqElem { field: self, v: (v % self.q) as u16 }
    }

    /// Embedding of a rational integer through the prime subfield.
    pub fn from_int(&'static self, n: i64) -> FqElem {
        let m = n.rem_euclid(self.p as i64) as u64;
        FqElem { field: self, v: m as u16 }
    }

    /// A fixed generator of Fq*.
    pub fn multiplicative_generator(&'static self) -> FqElem {
        FqElem { field: self, v: self.generator }
    }

    /// All elements, in encoding order.
    pub fn elements(&'static self) -> impl Iterator<Item = FqElem> {
        (0..self.q).map(move |v| FqElem { field: self, v: v as u16 })
    }

    /// All nonzero elements.
    pub fn units(&'static self) -> impl Iterator<Item = FqElem> {
        (1..self.q).map(move |v| FqElem { field: self, v: v as u16 })
    }
}

/// Factor q as p^r, if it is a prime power.
pub fn factor_prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= q {
        if q.is_multiple_of(p) {
            let mut v = q;
            let mut r = 0;
            while v.is_multiple_of(p) {
                v /= p;
                r += 1;
            }
            return (v == 1).then_some((p, r));
        }
        p += 1;
    }
    Some((q, 1))
}

/// An element of Fq. Cheap to copy; ties back to its interned field.
#[derive(Clone, Copy)]
pub struct FqElem {
    field: &'static FqField,
    v: u16,
}

impl FqElem {
    pub fn field(&self) -> &'static FqField {
        self.field
    }

    /// Integer encoding in 0..q.
    pub fn value(&self) -> u64 {
        self.v as u64
    }

    pub fn is_zero(&self) -> bool {
        self.v == 0
    }

    pub fn is_one(&self) -> bool {
        self.v == 1
    }

    fn check(&self, rhs: &FqElem) {
        debug_assert!(
            std::ptr::eq(self.field, rhs.field),
            "mixed elements of different fields"
        );
    }

    pub fn add(&self, rhs: &FqElem) -> FqElem {
        self.check(rhs);
        let q = self.field.q;
        FqElem { field: self.field, v: self.field.add[(self.v as u64 * q + rhs.v as u64) as usize] }
    }

    pub fn sub(&self, rhs: &FqElem) -> FqElem {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> FqElem {
        FqElem { field: self.field, v: self.field.neg[self.v as usize] }
    }

    pub fn mul(&self, rhs: &FqElem) -> FqElem {
        self.check(rhs);
        let q = self.field.q;
        FqElem { field: self.field, v: self.field.mul[(self.v as u64 * q + rhs.v as u64) as usize] }
    }

    pub fn inv(&self) -> FqElem {
        assert!(self.v != 0, "inverse of zero in Fq");
        FqElem { field: self.field, v: self.field.inv[self.v as usize] }
    }

    pub fn pow(&self, e: i64) -> FqElem {
        if self.v == 0 {
            assert!(e > 0, "0^e only defined for e > 0");
            return *self;
        }
        let order = (self.field.q - 1) as i64;
        let mut e = e.rem_euclid(order) as u64;
        let mut acc = self.field.one();
        let mut base = *self;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }
}

impl PartialEq for FqElem {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.field, other.field) && self.v == other.v
    }
}

impl Eq for FqElem {}

// Deterministic value ordering (elements of different fields never share
// a container).
impl PartialOrd for FqElem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FqElem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.v.cmp(&other.v)
    }
}

impl std::hash::Hash for FqElem {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        (self.field as *const FqField as usize).hash(state);
        self.v.hash(state);
    }
}

impl fmt::Debug for FqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

impl fmt::Display for FqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_tables() {
        let f3 = FqField::get(3).unwrap();
        assert_eq!(f3.elem(2).add(&f3.elem(2)).value(), 1);
        assert_eq!(f3.elem(2).mul(&f3.elem(2)).value(), 1);
        assert_eq!(f3.elem(2).inv().value(), 2);
        assert_eq!(f3.elem(1).neg().value(), 2);
    }

    #[test]
    fn extension_fields_exist() {
        for q in [4u64, 8, 9] {
            let f = FqField::get(q).unwrap();
            assert_eq!(f.q(), q);
            // every unit has an inverse
            for a in f.units() {
                assert!(a.mul(&a.inv()).is_one());
            }
        }
    }

    #[test]
    fn f9_is_not_z9() {
        let f9 = FqField::get(9).unwrap();
        // 3 in the encoding is x, not the integer 3; characteristic is 3
        let three = f9.from_int(3);
        assert!(three.is_zero());
        let x = f9.elem(3);
        // x^2 = -1 = 2 with modulus x^2 + 1
        assert_eq!(x.mul(&x).value(), 2);
    }

    #[test]
    fn generator_has_full_order() {
        for q in [2u64, 3, 4, 5, 8, 9] {
            let f = FqField::get(q).unwrap();
            let g = f.multiplicative_generator();
            let mut x = g;
            let mut order = 1;
            while !x.is_one() {
                x = x.mul(&g);
                order += 1;
            }
            assert_eq!(order, q - 1, "q = {q}");
        }
    }

    #[test]
    fn custom_modulus_validated() {
        // x^2 + 2 = x^2 - 1 = (x-1)(x+1) over F3 is reducible
        assert!(FqField::get_with_modulus(3, 2, Some(&[2, 0, 1])).is_err());
        // x^2 + x + 2 is irreducible over F3
        assert!(FqField::get_with_modulus(3, 2, Some(&[2, 1, 1])).is_ok());
    }

    #[test]
    fn interning_dedups() {
        let a = FqField::get(5).unwrap();
        let b = FqField::get(5).unwrap();
        assert!(std::ptr::eq(a, b));
    }
}
