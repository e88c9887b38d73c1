//! The analytic oracle: exact truncated u-expansions at the infinite cusp.
//!
//! Everything here is driven by the Carlitz module C_T(x) = Tx + x^q. The
//! uniformizer is u(z) = 1/e_C(pi z) where e_C is the Carlitz exponential
//! with coefficient d_i at x^(q^i), d_0 = 1, d_i = (T^(q^i) - T) d_{i-1}^q.
//! Key expansions:
//!
//! - u_a = 1/C_a(1/u) for monic a, a power series of valuation q^deg(a);
//! - Goss polynomials G_k with sum_{b in A} (z+b)^(-k) = pi^k G_k(u);
//! - lattice sums S_k with sum'_{a in A} a^(-k) = pi^k S_k, obtained by
//!   inverting the truncated Carlitz exponential (no infinite summation);
//! - E = sum_{a monic} a u_a (the false Eisenstein series, valuation 1);
//! - E_k = pi^k [S_k + sum_{a monic} sum_{c in Fq*} G_k(c^-1 u_a)];
//! - g = E_{q-1} / (pi^(q-1) S_{q-1}), normalized to constant term 1;
//! - h = the modular completion of D_1 g, normalized to u-coefficient -1;
//! - Delta = -h^(q-1).
//!
//! Every series carries its exact precision (the exponent of the first
//! unknown term); operations propagate the minimum precision and never
//! fabricate unknown coefficients.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::fq::FqField;
use crate::fqpoly::FqPoly;
use crate::ratfunc::RatFunc;
use crate::scalar::CoeffScalar;

/// A truncated Laurent series in u with scalar coefficients. Stored
/// coefficients run from `min` (inclusive) to `prec` (exclusive); the series
/// is exact on that window and unknown from `prec` on.
#[derive(Clone, PartialEq, Debug)]
pub struct USeries {
    field: &'static FqField,
    min: i64,
    prec: i64,
    coeffs: Vec<CoeffScalar>,
}

impl USeries {
    pub fn zero(field: &'static FqField, prec: i64) -> USeries {
        USeries { field, min: prec, prec, coeffs: vec![] }
    }

    pub fn from_coeffs(
        field: &'static FqField,
        min: i64,
        prec: i64,
        coeffs: Vec<CoeffScalar>,
    ) -> USeries {
        assert!(prec - min == coeffs.len() as i64, "window/coefficient mismatch");
        let mut s = USeries { field, min, prec, coeffs };
        s.normalize();
        s
    }

    /// c * u^k, known to precision `prec`.
    pub fn monomial(c: CoeffScalar, k: i64, prec: i64) -> USeries {
        let field = c.field();
        if c.is_zero() || k >= prec {
            return USeries::zero(field, prec);
        }
        let mut coeffs = vec![CoeffScalar::zero(field); (prec - k) as usize];
        coeffs[0] = c;
        USeries { field, min: k, prec, coeffs }
    }

    fn normalize(&mut self) {
        while let Some(first) = self.coeffs.first() {
            if first.is_zero() {
                self.coeffs.remove(0);
                self.min += 1;
            } else {
                break;
            }
        }
        if self.coeffs.is_empty() {
            self.min = self.prec;
        }
    }

    pub fn field(&self) -> &'static FqField {
        self.field
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    /// The valuation, or `None` when the series is zero to precision.
    pub fn valuation(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then_some(self.min)
    }

    pub fn is_zero_to_prec(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The coefficient of u^e; `None` if e is at or beyond the precision.
    pub fn coeff(&self, e: i64) -> Option<CoeffScalar> {
        if e >= self.prec {
            return None;
        }
        if e < self.min {
            return Some(CoeffScalar::zero(self.field));
        }
        Some(self.coeffs[(e - self.min) as usize].clone())
    }

    pub fn truncate(&self, prec: i64) -> USeries {
        if prec >= self.prec {
            return self.clone();
        }
        let keep = (prec - self.min).max(0) as usize;
        USeries::from_coeffs(
            self.field,
            self.min.min(prec),
            prec,
            self.coeffs[..keep].to_vec(),
        )
    }

    pub fn add(&self, rhs: &USeries) -> USeries {
        let prec = self.prec.min(rhs.prec);
        let min = self.min.min(rhs.min).min(prec);
        let mut coeffs = vec![CoeffScalar::zero(self.field); (prec - min) as usize];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let e = min + i as i64;
            let a = self.coeff(e).unwrap_or_else(|| CoeffScalar::zero(self.field));
            let b = rhs.coeff(e).unwrap_or_else(|| CoeffScalar::zero(self.field));
            *c = a.add(&b);
        }
        USeries::from_coeffs(self.field, min, prec, coeffs)
    }

    pub fn neg(&self) -> USeries {
        USeries {
            field: self.field,
            min: self.min,
            prec: self.prec,
            coeffs: self.coeffs.iter().map(CoeffScalar::neg).collect(),
        }
    }

    pub fn sub(&self, rhs: &USeries) -> USeries {
        self.add(&rhs.neg())
    }

    pub fn scale(&self, c: &CoeffScalar) -> USeries {
        if c.is_zero() {
            return USeries::zero(self.field, self.prec);
        }
        USeries::from_coeffs(
            self.field,
            self.min,
            self.prec,
            self.coeffs.iter().map(|a| a.mul(c)).collect(),
        )
    }

    pub fn mul(&self, rhs: &USeries) -> USeries {
        // unknown tails enter at prec + the other valuation
        let va = self.valuation().unwrap_or(self.prec);
        let vb = rhs.valuation().unwrap_or(rhs.prec);
        let prec = (self.prec + vb).min(rhs.prec + va);
        if self.is_zero_to_prec() || rhs.is_zero_to_prec() {
            return USeries::zero(self.field, prec);
        }
        let min = va + vb;
        let mut coeffs = vec![CoeffScalar::zero(self.field); (prec - min).max(0) as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let ea = self.min + i as i64;
            for (j, b) in rhs.coeffs.iter().enumerate() {
                let e = ea + rhs.min + j as i64;
                if e >= prec {
                    break;
                }
                if b.is_zero() {
                    continue;
                }
                let idx = (e - min) as usize;
                coeffs[idx] = coeffs[idx].add(&a.mul(b));
            }
        }
        USeries::from_coeffs(self.field, min, prec, coeffs)
    }

    /// Multiplicative inverse; requires a nonzero leading coefficient that
    /// is a unit of the scalar ring.
    pub fn inv(&self) -> Result<USeries> {
        let v = self.valuation().ok_or(Error::PrecisionLoss { available: self.prec })?;
        let lead = self.coeffs[0].clone();
        let lead_inv = lead
            .inv()
            .ok_or_else(|| Error::UnsupportedBackend("series leading coefficient is not a unit".into()))?;
        let rel = (self.prec - v) as usize;
        // write self = lead u^v (1 - r), invert the unit part by recursion
        let mut inv_coeffs = vec![CoeffScalar::zero(self.field); rel];
        inv_coeffs[0] = CoeffScalar::one(self.field);
        for n in 1..rel {
            // sum_{k=1..n} a_k * b_{n-k} = 0 with a_k = coeff of u^(v+k)/lead
            let mut acc = CoeffScalar::zero(self.field);
            for k in 1..=n {
                let a = self.coeffs[k].mul(&lead_inv);
                if a.is_zero() {
                    continue;
                }
                acc = acc.add(&a.mul(&inv_coeffs[n - k]));
            }
            inv_coeffs[n] = acc.neg();
        }
        let coeffs = inv_coeffs.iter().map(|c| c.mul(&lead_inv)).collect();
        Ok(USeries::from_coeffs(self.field, -v, self.prec - 2 * v, coeffs))
    }

    pub fn pow(&self, e: i64) -> Result<USeries> {
        if e == 0 {
            let prec = self.prec - self.valuation().unwrap_or(self.prec);
            return Ok(USeries::monomial(CoeffScalar::one(self.field), 0, prec.max(1)));
        }
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc: Option<USeries> = None;
        let mut b = base;
        let mut n = e.unsigned_abs();
        while n > 0 {
            if n & 1 == 1 {
                acc = Some(match acc {
                    None => b.clone(),
                    Some(a) => a.mul(&b),
                });
            }
            n >>= 1;
            if n > 0 {
                b = b.mul(&b);
            }
        }
        Ok(acc.unwrap())
    }

    /// True when the two series agree on all exponents below `upto` (both
    /// must know that window).
    pub fn agrees_to(&self, rhs: &USeries, upto: i64) -> bool {
        if self.prec < upto || rhs.prec < upto {
            return false;
        }
        let min = self.min.min(rhs.min);
        for e in min..upto {
            if self.coeff(e) != rhs.coeff(e) {
                return false;
            }
        }
        true
    }

    pub fn coeffs_window(&self) -> (i64, &[CoeffScalar]) {
        (self.min, &self.coeffs)
    }

    /// Exponent support is congruent to m mod (q-1); the type constraint a
    /// u-expansion of a type-m form must satisfy.
    pub fn supported_on_type(&self, m: i64) -> bool {
        let q = self.field.q() as i64;
        self.coeffs.iter().enumerate().all(|(i, c)| {
            c.is_zero() || (self.min + i as i64 - m).rem_euclid(q - 1) == 0
        })
    }
}

/// The Carlitz factorials: d_0 = 1, d_i = (T^(q^i) - T) d_{i-1}^q.
pub fn carlitz_d(field: &'static FqField, i: u32) -> FqPoly {
    let mut d = FqPoly::one(field);
    let q = field.q();
    for k in 1..=i {
        let qk = q.pow(k);
        let mut tqk = FqPoly::t(field).shift((qk - 1) as usize); // T^(q^k)
        tqk = tqk.sub(&FqPoly::t(field));
        d = tqk.mul(&frobenius_pow(&d, q));
    }
    d
}

/// f^q for f over Fq: coefficients are fixed by Frobenius, so only the
/// exponents spread.
fn frobenius_pow(f: &FqPoly, q: u64) -> FqPoly {
    if f.is_zero() {
        return f.clone();
    }
    let field = f.field();
    let mut coeffs = vec![field.zero(); (f.degree() as usize) * q as usize + 1];
    for (i, c) in f.coeffs().iter().enumerate() {
        coeffs[i * q as usize] = *c;
    }
    FqPoly::from_coeffs(field, coeffs)
}

/// An Fq-linear polynomial sum_j c_j x^(q^j), the shape of every Carlitz
/// action C_a.
#[derive(Clone, Debug, PartialEq)]
pub struct QLinear {
    field: &'static FqField,
    /// coefficient of x^(q^j) at index j
    pub coeffs: Vec<FqPoly>,
}

impl QLinear {
    fn x(field: &'static FqField) -> QLinear {
        QLinear { field, coeffs: vec![FqPoly::one(field)] }
    }

    fn add(&self, rhs: &QLinear) -> QLinear {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = FqPoly::zero(self.field);
        let coeffs = (0..n)
            .map(|j| {
                self.coeffs.get(j).unwrap_or(&zero).add(rhs.coeffs.get(j).unwrap_or(&zero))
            })
            .collect();
        QLinear { field: self.field, coeffs }
    }

    fn scale(&self, c: &FqPoly) -> QLinear {
        QLinear { field: self.field, coeffs: self.coeffs.iter().map(|p| p.mul(c)).collect() }
    }

    /// Composition (self after rhs) of Fq-linear maps:
    /// (a tau^i) o (b tau^j) = a b^(q^i) tau^(i+j).
    fn compose(&self, rhs: &QLinear) -> QLinear {
        let q = self.field.q();
        let mut coeffs =
            vec![FqPoly::zero(self.field); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let mut b_frob: Vec<FqPoly> = rhs.coeffs.clone();
            for _ in 0..i {
                b_frob = b_frob.iter().map(|p| frobenius_pow(p, q)).collect();
            }
            for (j, b) in b_frob.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        QLinear { field: self.field, coeffs }
    }

    /// Degree in x is q^(len-1).
    pub fn x_degree(&self) -> u64 {
        self.field.q().pow(self.coeffs.len() as u32 - 1)
    }
}

/// The Carlitz action C_a as an Fq-linear polynomial in x; C_T(x) = Tx + x^q
/// extended Fq-linearly and multiplicatively (C_{ab} = C_a o C_b).
pub fn carlitz_action(a: &FqPoly) -> QLinear {
    let field = a.field();
    let c_t = QLinear { field, coeffs: vec![FqPoly::t(field), FqPoly::one(field)] };
    let mut acc = QLinear { field, coeffs: vec![FqPoly::zero(field)] };
    let mut t_power = QLinear::x(field); // C_{T^0}
    for (i, c) in a.coeffs().iter().enumerate() {
        if i > 0 {
            t_power = c_t.compose(&t_power);
        }
        if !c.is_zero() {
            acc = acc.add(&t_power.scale(&FqPoly::constant(*c)));
        }
    }
    acc
}

/// u_a = 1/C_a(1/u) for monic a: a power series of valuation exactly
/// q^deg(a), exact to precision N.
pub fn u_sub(a: &FqPoly, n: i64) -> Result<USeries> {
    let field = a.field();
    if !a.is_monic() {
        return Err(Error::Config(format!("u_a needs monic a, got {a}")));
    }
    let qd = field.q().pow(a.degree() as u32) as i64;
    if n < qd {
        return Err(Error::PrecisionLoss { available: qd });
    }
    let ca = carlitz_action(a);
    // C_a(1/u) u^(q^d) = sum_j c_j u^(q^d - q^j): a polynomial with unit
    // constant term c_d = 1, exactly known everywhere
    let wprec = (n - qd + 1).max(qd + 1);
    let mut w = USeries::zero(field, wprec);
    for (j, c) in ca.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let e = qd - field.q().pow(j as u32) as i64;
        w = w.add(&USeries::monomial(CoeffScalar::from_poly(c.clone()), e, wprec));
    }
    let winv = w.inv()?;
    Ok(USeries::monomial(CoeffScalar::one(field), qd, n).mul(&winv).truncate(n))
}

/// The Goss polynomial G_k for the Carlitz lattice, as coefficients of
/// X^1..X^k (index 0 is the coefficient of X^1; the constant term is 0).
/// Recursion: G_k = X (G_{k-1} + sum_{i>=1} d_i^{-1} G_{k-q^i}), G_1 = X,
/// G_j = 0 for j <= 0.
pub fn goss(field: &'static FqField, k: u64) -> Vec<RatFunc> {
    assert!(k >= 1, "Goss polynomials start at k = 1");
    let q = field.q();
    let mut table: Vec<Vec<RatFunc>> = Vec::with_capacity(k as usize + 1);
    table.push(vec![]); // G_0 = 0
    let mut d_inv: Vec<RatFunc> = vec![];
    {
        let mut i = 1u32;
        while q.pow(i) <= k {
            d_inv.push(RatFunc::from_poly(carlitz_d(field, i)).inv());
            i += 1;
        }
    }
    for n in 1..=k {
        if n == 1 {
            table.push(vec![RatFunc::one(field)]);
            continue;
        }
        // inner = G_{n-1} + sum d_i^{-1} G_{n - q^i}
        let mut inner = table[(n - 1) as usize].clone();
        for (idx, di) in d_inv.iter().enumerate() {
            let qi = q.pow(idx as u32 + 1);
            if qi >= n {
                break;
            }
            let g = &table[(n - qi) as usize];
            if inner.len() < g.len() {
                inner.resize(g.len(), RatFunc::zero(field));
            }
            for (j, c) in g.iter().enumerate() {
                inner[j] = inner[j].add(&c.mul(di));
            }
        }
        // multiply by X: shift up one slot
        let mut next = vec![RatFunc::zero(field)];
        next.extend(inner);
        next.truncate(n as usize);
        table.push(next);
    }
    table.pop().unwrap()
}

/// Evaluate a Goss polynomial at a series of positive valuation.
fn eval_poly_at_series(coeffs: &[RatFunc], s: &USeries) -> USeries {
    // Horner from the top on X*(...)+c_j, inserting the zero constant term
    let field = s.field();
    let mut acc = USeries::zero(field, s.precision());
    for c in coeffs.iter().rev() {
        acc = acc.mul(s);
        if !c.is_zero() {
            acc = acc.add(&USeries::monomial(CoeffScalar::from_rat(c.clone()), 0, acc.precision()));
        }
    }
    // the loop above folds c_1..c_k as X(...)+c_1 then one final X remains
    acc.mul(s)
}

/// S_k: the lattice sum normalized so that sum'_{a in A} a^(-k) = pi^k S_k.
/// Obtained from 1/e_C(z) - 1/z = -sum_k S_k z^(k-1), i.e. by inverting the
/// truncated Carlitz exponential; S_k = 0 whenever (q-1) does not divide k.
pub fn lattice_sum(field: &'static FqField, k: u64) -> RatFunc {
    assert!(k >= 1);
    let q = field.q();
    // W = e_C(z)/z = sum_i z^(q^i - 1)/d_i, truncated past degree k
    let mut w = vec![RatFunc::zero(field); k as usize + 1];
    let mut i = 0u32;
    loop {
        let e = q.pow(i) - 1;
        if e > k {
            break;
        }
        w[e as usize] = RatFunc::from_poly(carlitz_d(field, i)).inv();
        i += 1;
    }
    // S_k = [z^k](1 - 1/W); invert W as a power series over Fq(T)
    let mut winv = vec![RatFunc::zero(field); k as usize + 1];
    winv[0] = RatFunc::one(field);
    for n in 1..=k as usize {
        let mut acc = RatFunc::zero(field);
        for j in 1..=n {
            if w[j].is_zero() {
                continue;
            }
            acc = acc.add(&w[j].mul(&winv[n - j]));
        }
        winv[n] = acc.neg();
    }
    winv[k as usize].neg()
}

/// E_k / pi^k as a u-series: S_k + sum over monic a of deg <= D of
/// sum_{c in Fq*} G_k(c^-1 u_a). The exactness horizon is q^(D+1).
pub fn eisenstein_rational(field: &'static FqField, k: u64, d: u32, n: i64) -> Result<USeries> {
    let q = field.q();
    if n > q.pow(d + 1) as i64 {
        return Err(Error::PrecisionLoss { available: q.pow(d + 1) as i64 });
    }
    let gk = goss(field, k);
    let mut acc = USeries::monomial(CoeffScalar::from_rat(lattice_sum(field, k)), 0, n);
    for deg in 0..=d {
        if (q.pow(deg) as i64) >= n {
            break;
        }
        for a in FqPoly::monic_of_degree(field, deg as usize) {
            let ua = u_sub(&a, n)?;
            for c in field.units() {
                let scaled = ua.scale(&CoeffScalar::from_elem(c.inv()));
                acc = acc.add(&eval_poly_at_series(&gk, &scaled));
            }
        }
    }
    Ok(acc)
}

/// The full Eisenstein series E_k = pi^k * eisenstein_rational.
pub fn eisenstein_u(field: &'static FqField, k: u64, d: u32, n: i64) -> Result<USeries> {
    Ok(eisenstein_rational(field, k, d, n)?.scale(&CoeffScalar::pi_pow(field, k as i64)))
}

/// The false Eisenstein series E = sum_{a monic, deg <= D} a u_a.
pub fn e_u(field: &'static FqField, d: u32, n: i64) -> Result<USeries> {
    let q = field.q();
    if n > q.pow(d + 1) as i64 {
        return Err(Error::PrecisionLoss { available: q.pow(d + 1) as i64 });
    }
    let mut acc = USeries::zero(field, n);
    for deg in 0..=d {
        if (q.pow(deg) as i64) >= n {
            break;
        }
        for a in FqPoly::monic_of_degree(field, deg as usize) {
            let ua = u_sub(&a, n)?;
            acc = acc.add(&ua.scale(&CoeffScalar::from_poly(a.clone())));
        }
    }
    Ok(acc)
}

fn depth_for_precision(q: u64, n: i64) -> u32 {
    let mut d = 0;
    while (q.pow(d + 1) as i64) < n {
        d += 1;
    }
    d
}

/// Shared per-(field, precision) tables: the generator series and the
/// hyperderivative table for u. Build once, read concurrently.
pub struct SeriesOracle {
    field: &'static FqField,
    prec: i64,
    e: USeries,
    g: USeries,
    h: USeries,
    delta: USeries,
    /// D_r(u) as exact polynomials in u (coefficient vectors from u^0),
    /// grown on demand.
    du: Mutex<Vec<Vec<CoeffScalar>>>,
}

type OracleKey = (usize, i64);

fn oracle_registry() -> &'static Mutex<HashMap<OracleKey, Arc<SeriesOracle>>> {
    static REG: OnceLock<Mutex<HashMap<OracleKey, Arc<SeriesOracle>>>> = OnceLock::new();
    REG.get_or_init(|| Mutex::new(HashMap::new()))
}

impl SeriesOracle {
    pub fn get(field: &'static FqField, prec: i64) -> Result<Arc<SeriesOracle>> {
        let key = (field as *const FqField as usize, prec);
        if let Some(o) = oracle_registry().lock().unwrap().get(&key) {
            return Ok(o.clone());
        }
        let oracle = Arc::new(Self::build(field, prec)?);
        oracle_registry().lock().unwrap().insert(key, oracle.clone());
        Ok(oracle)
    }

    fn build(field: &'static FqField, prec: i64) -> Result<SeriesOracle> {
        let q = field.q();
        let p = field.p();
        let d = depth_for_precision(q, prec);
        let e = e_u(field, d, prec)?;
        let sq = lattice_sum(field, q - 1);
        let g = eisenstein_rational(field, q - 1, d, prec)?
            .scale(&CoeffScalar::from_rat(sq.inv()));
        let oracle = SeriesOracle {
            field,
            prec,
            e: e.clone(),
            g: g.clone(),
            h: USeries::zero(field, prec),
            delta: USeries::zero(field, prec),
            du: Mutex::new(vec![vec![CoeffScalar::zero(field), CoeffScalar::one(field)]]),
        };
        // h: normalize D_1 g - ((q-1) mod p) E g to u-coefficient -1, with
        // D_1 the pi-normalized derivative (-pi)^-1 times the raw one
        let d1g = oracle.hyper(&g, 1)?.scale(&CoeffScalar::neg_pi_pow(field, -1));
        let serre = d1g.sub(&e.mul(&g).scale(&CoeffScalar::from_int(field, (q - 1) as i64 % p as i64)));
        let c1 = serre
            .coeff(1)
            .ok_or(Error::PrecisionLoss { available: serre.precision() })?;
        let c1_inv = c1
            .inv()
            .ok_or_else(|| Error::UnsupportedBackend("h completion has non-unit leading term".into()))?;
        let h = serre.scale(&c1_inv.neg());
        let delta = h.pow((q - 1) as i64)?.neg();
        Ok(SeriesOracle { h, delta, ..oracle })
    }

    pub fn field(&self) -> &'static FqField {
        self.field
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    pub fn e(&self) -> &USeries {
        &self.e
    }

    pub fn g(&self) -> &USeries {
        &self.g
    }

    pub fn h(&self) -> &USeries {
        &self.h
    }

    pub fn delta(&self) -> &USeries {
        &self.delta
    }

    /// D_r(u) as an exact u-polynomial, from
    /// u(z+eps) = sum_m (-1)^m u^(m+1) e_C(pi eps)^m.
    fn du_poly(&self, r: usize) -> Vec<CoeffScalar> {
        let mut tab = self.du.lock().unwrap();
        while tab.len() <= r {
            let order = tab.len();
            // [eps^order] of sum_m (-u)^m u e_C(pi eps)^m:
            // e_C(pi eps) = sum_i pi^(q^i)/d_i eps^(q^i)
            let q = self.field.q();
            let mut ec = vec![CoeffScalar::zero(self.field); order + 1];
            let mut i = 0u32;
            loop {
                let qi = q.pow(i) as usize;
                if qi > order {
                    break;
                }
                ec[qi] = CoeffScalar::monomial(
                    q.pow(i) as i64,
                    RatFunc::from_poly(carlitz_d(self.field, i)).inv(),
                );
                i += 1;
            }
            // powers of e_C(pi eps) truncated at eps^order; the eps^order
            // coefficient of P^m vanishes for m > order
            let mut out: Vec<CoeffScalar> = vec![CoeffScalar::zero(self.field); order + 2];
            let mut pm = vec![CoeffScalar::zero(self.field); order + 1];
            pm[0] = CoeffScalar::one(self.field); // P^0
            for m in 0..=order {
                if m > 0 {
                    // pm *= ec
                    let mut next = vec![CoeffScalar::zero(self.field); order + 1];
                    for (a, ca) in pm.iter().enumerate() {
                        if ca.is_zero() {
                            continue;
                        }
                        for (b, cb) in ec.iter().enumerate() {
                            if a + b > order || cb.is_zero() {
                                continue;
                            }
                            next[a + b] = next[a + b].add(&ca.mul(cb));
                        }
                    }
                    pm = next;
                }
                let c = &pm[order];
                if c.is_zero() {
                    continue;
                }
                // contributes (-1)^m c * u^(m+1)
                let signed = if m % 2 == 0 { c.clone() } else { c.neg() };
                out[m + 1] = out[m + 1].add(&signed);
            }
            while out.last().is_some_and(CoeffScalar::is_zero) {
                out.pop();
            }
            tab.push(out);
        }
        tab[r].clone()
    }

    /// D_r(1/u) = [eps^r] e_C(pi eps): pi^(q^i)/d_i at r = q^i, else 0.
    fn dinv_scalar(&self, r: usize) -> CoeffScalar {
        if r == 0 {
            return CoeffScalar::zero(self.field); // handled via u^-1 term
        }
        let q = self.field.q();
        let mut i = 0u32;
        loop {
            let qi = q.pow(i) as usize;
            if qi == r {
                return CoeffScalar::monomial(
                    q.pow(i) as i64,
                    RatFunc::from_poly(carlitz_d(self.field, i)).inv(),
                );
            }
            if qi > r {
                return CoeffScalar::zero(self.field);
            }
            i += 1;
        }
    }

    /// The hyperderivative D_n(F) of a truncated u-series, via Leibniz on
    /// the monomials u^k using the D_j(u) table.
    pub fn hyper(&self, f: &USeries, n: usize) -> Result<USeries> {
        if n == 0 {
            return Ok(f.clone());
        }
        if n > 64 {
            return Err(Error::PrecisionLoss { available: f.precision() });
        }
        let prec = f.precision();
        if f.is_zero_to_prec() {
            return Ok(USeries::zero(self.field, prec));
        }
        // Taylor vectors [D_0 x, ..., D_n x] for x = u and x = 1/u; entries
        // are exact polynomials, so their windows can exceed prec freely
        let wide = prec + n as i64 + 2;
        let u_taylor: Vec<USeries> = (0..=n)
            .map(|j| {
                let poly = self.du_poly(j);
                let mut s = USeries::zero(self.field, wide);
                for (k, c) in poly.iter().enumerate() {
                    if !c.is_zero() {
                        s = s.add(&USeries::monomial(c.clone(), k as i64, wide));
                    }
                }
                s
            })
            .collect();
        let uinv_taylor: Vec<USeries> = (0..=n)
            .map(|j| {
                if j == 0 {
                    USeries::monomial(CoeffScalar::one(self.field), -1, wide)
                } else {
                    USeries::monomial(self.dinv_scalar(j), 0, wide)
                }
            })
            .collect();
        let one_taylor: Vec<USeries> = (0..=n)
            .map(|j| {
                if j == 0 {
                    USeries::monomial(CoeffScalar::one(self.field), 0, wide)
                } else {
                    USeries::zero(self.field, wide)
                }
            })
            .collect();
        let leibniz = |a: &[USeries], b: &[USeries]| -> Vec<USeries> {
            (0..=n)
                .map(|j| {
                    let mut acc = a[0].mul(&b[j]);
                    for r in 1..=j {
                        acc = acc.add(&a[r].mul(&b[j - r]));
                    }
                    acc
                })
                .collect()
        };
        let v = f.valuation().unwrap();
        let mut acc = USeries::zero(self.field, prec);
        // negative exponents, walking down from -1
        if v < 0 {
            let mut cur = uinv_taylor.clone();
            for k in (v..0).rev() {
                let c = f.coeff(k).unwrap();
                if !c.is_zero() {
                    acc = acc.add(&cur[n].scale(&c).truncate(prec));
                }
                if k > v {
                    cur = leibniz(&cur, &uinv_taylor);
                }
            }
        }
        // nonnegative exponents, walking up from 0
        let mut cur = one_taylor;
        for k in 0..prec {
            if k >= v {
                let c = f.coeff(k).unwrap();
                if !c.is_zero() {
                    acc = acc.add(&cur[n].scale(&c).truncate(prec));
                }
            }
            if k + 1 < prec {
                cur = leibniz(&cur, &u_taylor);
            }
        }
        Ok(acc.truncate(prec))
    }

    /// Render the level-1 monomial g^a h^b E^e times D-derivatives:
    /// the plain monomial with no derivative applied.
    pub fn render_monomial(&self, a: u32, b: u32, e: u32) -> Result<USeries> {
        let mut acc = USeries::monomial(CoeffScalar::one(self.field), 0, self.prec);
        if a > 0 {
            acc = acc.mul(&self.g.pow(a as i64)?);
        }
        if b > 0 {
            acc = acc.mul(&self.h.pow(b as i64)?);
        }
        if e > 0 {
            acc = acc.mul(&self.e.pow(e as i64)?);
        }
        Ok(acc.truncate(self.prec))
    }

    pub fn render_symbol(&self, name: &str) -> Result<USeries> {
        match name {
            "g" => Ok(self.g.clone()),
            "h" => Ok(self.h.clone()),
            "E" => Ok(self.e.clone()),
            "delta" => Ok(self.delta.clone()),
            other => Err(Error::UnsupportedBackend(format!("no series for symbol {other}"))),
        }
    }
}

/// Solve target = sum_i x_i basis_i exactly over Fq(T), using every known
/// coefficient as a row. Returns the coefficients when the system has a
/// (necessarily unique, when the basis is independent) exact solution.
pub fn solve_in_span(target: &USeries, basis: &[USeries]) -> Option<Vec<RatFunc>> {
    let field = target.field();
    let prec = basis
        .iter()
        .map(USeries::precision)
        .chain(std::iter::once(target.precision()))
        .min()?;
    let min = basis
        .iter()
        .filter_map(USeries::valuation)
        .chain(target.valuation())
        .min()
        .unwrap_or(prec);
    let rows = (prec - min) as usize;
    let cols = basis.len();
    // build the augmented matrix over Fq(T); fail if any coefficient has a
    // pi-power (callers normalize with D_n = (-pi)^(-n) so this stays pure)
    let mut m: Vec<Vec<RatFunc>> = Vec::with_capacity(rows);
    for r in 0..rows {
        let e = min + r as i64;
        let mut row: Vec<RatFunc> = Vec::with_capacity(cols + 1);
        for s in basis {
            row.push(s.coeff(e)?.as_rat()?);
        }
        row.push(target.coeff(e)?.as_rat()?);
        m.push(row);
    }
    // Gaussian elimination
    let mut pivot_rows: Vec<usize> = vec![];
    let mut r0 = 0;
    for c in 0..cols {
        let Some(pr) = (r0..rows).find(|&r| !m[r][c].is_zero()) else {
            // column without pivot: underdetermined, refuse
            return None;
        };
        m.swap(r0, pr);
        let inv = m[r0][c].inv();
        for x in m[r0].clone().iter().enumerate() {
            m[r0][x.0] = x.1.mul(&inv);
        }
        for r in 0..rows {
            if r != r0 && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                for x in 0..=cols {
                    let sub = m[r0][x].mul(&f);
                    m[r][x] = m[r][x].sub(&sub);
                }
            }
        }
        pivot_rows.push(r0);
        r0 += 1;
    }
    // residual must vanish on all remaining rows
    for r in r0..rows {
        if !m[r][cols].is_zero() {
            return None;
        }
    }
    let mut xs = vec![RatFunc::zero(field); cols];
    for (c, &pr) in pivot_rows.iter().enumerate() {
        xs[c] = m[pr][cols].clone();
    }
    Some(xs)
}
