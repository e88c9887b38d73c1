//! Characteristic-p binomial arithmetic.
//!
//! Everything in the calculus reduces binomial coefficients mod p, so
//! C(n, k) is computed from base-p digits (Lucas), generalized binomials
//! with negative upper index go through (-m choose n) = (-1)^n C(m+n-1, n),
//! and the non-vanishing hypothesis (NVH) consults a pluggable dimension
//! oracle for the spaces of modular forms it must not ignore.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// C(n, k) mod p via base-p digit products.
pub fn binom_mod_p(n: u64, k: u64, p: u64) -> u64 {
    if k > n {
        return 0;
    }
    let mut n = n;
    let mut k = k;
    let mut acc = 1u64;
    while k > 0 || n > 0 {
        let (nd, kd) = (n % p, k % p);
        if kd > nd {
            return 0;
        }
        acc = acc * binom_small(nd, kd, p) % p;
        n /= p;
        k /= p;
    }
    acc
}

/// C(n, k) mod p for digits n, k below p: n! (k!)^-1 ((n-k)!)^-1, all
/// units since n < p. Stays in u64 for any prime the field tower accepts.
fn binom_small(n: u64, k: u64, p: u64) -> u64 {
    let fact = |m: u64| -> u64 {
        let mut acc = 1u64;
        for i in 2..=m {
            acc = acc * i % p;
        }
        acc
    };
    let inv = |a: u64| -> u64 {
        // Fermat
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
    };
    fact(n) * inv(fact(k)) % p * inv(fact(n - k)) % p
}

/// Generalized binomial C(a, k) mod p for integer a (negative allowed).
///
/// For a < 0 this is (-1)^k C(k - a - 1, k) reduced mod p, which agrees
/// with the polynomial a(a-1)...(a-k+1)/k! evaluated in the prime field.
pub fn binom_int(a: i64, k: u64, p: u64) -> u64 {
    if a >= 0 {
        return binom_mod_p(a as u64, k, p);
    }
    let m = (-a) as u64;
    let sign = if k.is_multiple_of(2) { 1 } else { p - 1 };
    sign * binom_mod_p(m + k - 1, k, p) % p
}

/// One instance of the Vandermonde-type identity
/// sum_h C(-i, n-h) C(-k+2i-j, h-j) = C(-k+i-j, n-j),
/// with h running over the given range. Used as a self-test of `binom_int`.
pub fn vandermonde_check(
    j: i64,
    h_range: (i64, i64),
    i: i64,
    k: i64,
    n: i64,
    p: u64,
) -> bool {
    if n < j {
        return true; // both sides are empty/C(.,0) conventions
    }
    let mut lhs = 0u64;
    for h in h_range.0..=h_range.1 {
        if n - h < 0 || h - j < 0 {
            continue;
        }
        let a = binom_int(-i, (n - h) as u64, p);
        let b = binom_int(-k + 2 * i - j, (h - j) as u64, p);
        lhs = (lhs + a * b) % p;
    }
    let rhs = binom_int(-k + i - j, (n - j) as u64, p);
    lhs == rhs
}

/// Dimension oracle for spaces of modular forms M_{k,m}(Gamma).
pub trait DimOracle {
    fn dim(&self, weight: i64, typ: i64) -> usize;
}

/// The level-1 oracle: M(GL2(Fq\[T\])) is freely generated by g (weight q-1,
/// type 0) and h (weight q+1, type 1), so dimensions are monomial counts.
#[derive(Clone, Copy, Debug)]
pub struct Level1Dim {
    pub q: u64,
}

impl DimOracle for Level1Dim {
    fn dim(&self, weight: i64, typ: i64) -> usize {
        dim_level1(weight, typ, self.q)
    }
}

/// Number of monomials g^a h^b with (q-1)a + (q+1)b = k and b = m mod (q-1).
pub fn dim_level1(k: i64, m: i64, q: u64) -> usize {
    if k < 0 {
        return 0;
    }
    let q = q as i64;
    let mut count = 0;
    let mut b = 0;
    while (q + 1) * b <= k {
        let rest = k - (q + 1) * b;
        if rest % (q - 1) == 0 && (b - m).rem_euclid(q - 1) == 0 {
            count += 1;
        }
        b += 1;
    }
    count
}

/// One consulted index in an NVH evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NvhWitness {
    pub index: u64,
    pub binom_mod_p: u64,
    pub dim: usize,
}

/// Outcome of the non-vanishing hypothesis check. `holds` is false exactly
/// when some consulted index has a vanishing binomial against a nonzero
/// space of modular forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NvhReport {
    pub weight: i64,
    pub depth: u64,
    #[serde(rename = "type")]
    pub typ: i64,
    pub holds: bool,
    pub witnesses: Vec<NvhWitness>,
}

impl fmt::Display for NvhReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "NVH({}, depth {}, type {}): {}",
            self.weight,
            self.depth,
            self.typ,
            if self.holds { "holds" } else { "fails" }
        )?;
        for w in &self.witnesses {
            write!(f, " [i={}: C(k-i-1,i)={}, dim={}]", w.index, w.binom_mod_p, w.dim)?;
        }
        Ok(())
    }
}

/// Evaluate NVH for weight k, depth l, type m.
///
/// Case a (k > 2l) consults indices 1..=l; case b (k = 2l) consults
/// 1..=l-1. k < 2l is an error: the structure dichotomy does not apply, so
/// a boolean answer would overclaim. Depth 0 holds vacuously.
pub fn nvh_check(
    k: i64,
    l: u64,
    m: i64,
    q: u64,
    oracle: &dyn DimOracle,
) -> Result<NvhReport> {
    let p = crate::fq::factor_prime_power(q)
        .ok_or_else(|| Error::Config(format!("q = {q} is not a prime power")))?
        .0;
    if l == 0 {
        return Ok(NvhReport { weight: k, depth: 0, typ: m, holds: true, witnesses: vec![] });
    }
    if k < 2 * l as i64 {
        return Err(Error::OutOfRangeWeight { weight: k, depth: l as usize });
    }
    let top = if k == 2 * l as i64 { l - 1 } else { l };
    let mut witnesses = Vec::new();
    let mut holds = true;
    for i in 1..=top {
        let b = binom_mod_p((k - i as i64 - 1) as u64, i, p);
        let dim = oracle.dim(k - 2 * i as i64, m - i as i64);
        if b == 0 && dim > 0 {
            holds = false;
        }
        witnesses.push(NvhWitness { index: i, binom_mod_p: b, dim });
    }
    Ok(NvhReport { weight: k, depth: l, typ: m, holds, witnesses })
}

/// Weights k <= k_max for which NVH holds at the given depth and type
/// (there are plenty of such cases when the depth is small relative to p).
pub fn scan_nvh(q: u64, l: u64, m: i64, k_max: i64) -> Vec<i64> {
    scan_nvh_by(q, l, m, k_max, true)
}

/// The failing triples, recorded for exploration: weights k <= k_max at
/// which the hypothesis breaks for the given depth and type.
pub fn scan_nvh_failures(q: u64, l: u64, m: i64, k_max: i64) -> Vec<i64> {
    scan_nvh_by(q, l, m, k_max, false)
}

fn scan_nvh_by(q: u64, l: u64, m: i64, k_max: i64, want: bool) -> Vec<i64> {
    let oracle = Level1Dim { q };
    let mut out = vec![];
    let mut k = 2 * l as i64;
    while k <= k_max {
        if let Ok(report) = nvh_check(k, l, m, q, &oracle) {
            if report.holds == want {
                out.push(k);
            }
        }
        k += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lucas_examples() {
        assert_eq!(binom_mod_p(4, 2, 3), 0); // 6 mod 3
        assert_eq!(binom_mod_p(5, 2, 3), 1); // 10 mod 3
        assert_eq!(binom_mod_p(17, 0, 5), 1);
        assert_eq!(binom_mod_p(3, 5, 7), 0);
    }

    #[test]
    fn lucas_agrees_with_pascal() {
        for &p in &[2u64, 3, 5, 7] {
            // Pascal's triangle mod p, no factorials involved
            let n_max = 64usize;
            let mut row = vec![1u64];
            for n in 0..=n_max {
                for (k, &v) in row.iter().enumerate() {
                    assert_eq!(binom_mod_p(n as u64, k as u64, p), v, "C({n},{k}) mod {p}");
                }
                let mut next = vec![1u64];
                for k in 1..=n {
                    next.push((row[k - 1] + row[k]) % p);
                }
                next.push(1);
                row = next;
            }
        }
    }

    #[test]
    fn negative_upper_index() {
        assert_eq!(binom_int(-2, 1, 3), 1); // -2 = 1 mod 3
        assert_eq!(binom_int(-1, 2, 3), 1); // (-1)^2 C(2,2)
        assert_eq!(binom_int(7, 0, 5), 1);
        assert_eq!(binom_int(-7, 0, 5), 1);
        // agreement with binom_mod_p for nonnegative upper index
        for a in 0..20i64 {
            for k in 0..20u64 {
                assert_eq!(binom_int(a, k, 5), binom_mod_p(a as u64, k, 5));
            }
        }
    }

    #[test]
    fn binom_is_polynomial_of_degree_k() {
        // finite differences of order k+1 annihilate a -> C(a, k)
        for &p in &[2u64, 3, 5] {
            for k in 0..6u64 {
                for a0 in -8..8i64 {
                    let order = (k + 1) as i64;
                    let mut diff = 0u64;
                    for j in 0..=order {
                        let sign = if (order - j) % 2 == 0 { 1 } else { p - 1 };
                        let c = binom_mod_p(order as u64, j as u64, p);
                        diff = (diff + sign * c % p * binom_int(a0 + j, k, p)) % p;
                    }
                    assert_eq!(diff, 0, "p={p} k={k} a0={a0}");
                }
            }
        }
    }

    #[test]
    fn vandermonde_identity() {
        // n = j makes both sides C(.,0) = 1
        assert!(vandermonde_check(2, (2, 2), 1, 4, 2, 3));
        // the derived instance
        assert!(vandermonde_check(0, (0, 2), 1, 4, 2, 3));
    }

    #[test]
    fn dims_at_level_one() {
        assert_eq!(dim_level1(4, 1, 3), 1); // h
        assert_eq!(dim_level1(2, 1, 3), 0); // E is quasi-modular, not modular
        assert_eq!(dim_level1(0, 0, 3), 1); // constants
        assert_eq!(dim_level1(4, 0, 3), 1); // g^2
        assert_eq!(dim_level1(8, 0, 3), 2); // g^4, h^2
        assert_eq!(dim_level1(3, 1, 3), 0); // weight-type parity fails
        // type only matters mod q-1
        for k in 0..24 {
            for m in -6..6 {
                assert_eq!(dim_level1(k, m, 3), dim_level1(k, m.rem_euclid(2), 3));
                assert_eq!(dim_level1(k, m, 5), dim_level1(k, m.rem_euclid(4), 5));
            }
        }
    }

    #[test]
    fn nvh_cases() {
        let oracle = Level1Dim { q: 3 };
        // depth 0 vacuous
        assert!(nvh_check(10, 0, 1, 3, &oracle).unwrap().holds);
        // q=3, k=8, l=1, m=1: C(6,1) = 0 mod 3 and dim M_{6,0} = 1
        let r = nvh_check(8, 1, 1, 3, &oracle).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witnesses, vec![NvhWitness { index: 1, binom_mod_p: 0, dim: 1 }]);
        // q=3, k=4, l=1, m=1: C(2,1) = 2
        let r = nvh_check(4, 1, 1, 3, &oracle).unwrap();
        assert!(r.holds);
        // k < 2l is an error, not false
        assert!(matches!(
            nvh_check(1, 1, 1, 3, &oracle),
            Err(Error::OutOfRangeWeight { .. })
        ));
        // k = 2l consults 1..=l-1
        let r = nvh_check(4, 2, 2, 3, &oracle).unwrap();
        assert_eq!(r.witnesses.len(), 1);
    }

    #[test]
    fn scan_finds_plenty() {
        let ks = scan_nvh(3, 1, 1, 12);
        assert!(ks.contains(&4));
        assert!(!ks.contains(&8));
        let bad = scan_nvh_failures(3, 1, 1, 12);
        assert!(bad.contains(&8));
        assert!(!bad.contains(&4));
        // the two scans partition the range
        assert_eq!(ks.len() + bad.len(), 11);
    }
}
