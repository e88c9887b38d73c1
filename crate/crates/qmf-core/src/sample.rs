//! Deterministic random generators for the property suites. All sampling
//! goes through a seeded ChaCha stream so that identical configurations
//! replay identical cases.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fq::{FqElem, FqField};
use crate::fqpoly::FqPoly;
use crate::matrix::Matrix2;
use crate::ratfunc::RatFunc;
use crate::scalar::CoeffScalar;
use crate::zrat::{ZPoly, ZRat};

pub struct Sampler {
    rng: ChaCha8Rng,
    field: &'static FqField,
}

impl Sampler {
    pub fn new(field: &'static FqField, seed: u64) -> Sampler {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed), field }
    }

    /// Derive an independent stream for case `id` under the same seed.
    pub fn fork(field: &'static FqField, seed: u64, id: u64) -> Sampler {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id);
        Sampler { rng, field }
    }

    pub fn field(&self) -> &'static FqField {
        self.field
    }

    pub fn elem(&mut self) -> FqElem {
        let v = self.rng.gen_range(0..self.field.q());
        self.field.elem(v)
    }

    pub fn nonzero_elem(&mut self) -> FqElem {
        let v = self.rng.gen_range(1..self.field.q());
        self.field.elem(v)
    }

    pub fn poly(&mut self, max_deg: usize) -> FqPoly {
        let deg = self.rng.gen_range(0..=max_deg);
        let coeffs = (0..=deg).map(|_| self.elem()).collect();
        FqPoly::from_coeffs(self.field, coeffs)
    }

    pub fn nonzero_poly(&mut self, max_deg: usize) -> FqPoly {
        loop {
            let p = self.poly(max_deg);
            if !p.is_zero() {
                return p;
            }
        }
    }

    pub fn ratfunc(&mut self, max_deg: usize) -> RatFunc {
        RatFunc::new(self.poly(max_deg), self.nonzero_poly(max_deg))
    }

    pub fn nonzero_ratfunc(&mut self, max_deg: usize) -> RatFunc {
        RatFunc::new(self.nonzero_poly(max_deg), self.nonzero_poly(max_deg))
    }

    /// A scalar with pi-exponents in [-1, 1], mostly concentrated at pi^0.
    pub fn scalar(&mut self, max_deg: usize) -> CoeffScalar {
        let mut s = CoeffScalar::from_rat(self.ratfunc(max_deg));
        if self.rng.gen_ratio(1, 3) {
            let e = self.rng.gen_range(-1..=1);
            s = s.add(&CoeffScalar::monomial(e, self.ratfunc(max_deg)));
        }
        s
    }

    pub fn nonzero_scalar(&mut self, max_deg: usize) -> CoeffScalar {
        loop {
            let s = self.scalar(max_deg);
            if !s.is_zero() {
                return s;
            }
        }
    }

    /// A rational test function of z with bounded numerator/denominator
    /// degree and scalar coefficients.
    pub fn zrat(&mut self, max_z_deg: usize, max_t_deg: usize) -> ZRat {
        let num_deg = self.rng.gen_range(0..=max_z_deg);
        let den_deg = self.rng.gen_range(0..=max_z_deg);
        let num = ZPoly::from_coeffs(
            self.field,
            (0..=num_deg).map(|_| self.scalar(max_t_deg)).collect(),
        );
        let den = loop {
            let d = ZPoly::from_coeffs(
                self.field,
                (0..=den_deg).map(|_| self.scalar(max_t_deg)).collect(),
            );
            if !d.is_zero() {
                break d;
            }
        };
        ZRat::new(num, den)
    }

    pub fn nonzero_zrat(&mut self, max_z_deg: usize, max_t_deg: usize) -> ZRat {
        loop {
            let f = self.zrat(max_z_deg, max_t_deg);
            if !f.is_zero() {
                return f;
            }
        }
    }

    /// A random nonsingular matrix over Fq(T) with polynomial entries of
    /// bounded degree (determinant need not be a unit).
    pub fn nonsingular_matrix(&mut self, max_deg: usize) -> Matrix2 {
        loop {
            let m = Matrix2::from_polys(
                self.poly(max_deg),
                self.poly(max_deg),
                self.poly(max_deg),
                self.poly(max_deg),
            );
            if let Ok(m) = m {
                return m;
            }
        }
    }

    /// A random element of GL2(A) with entry degree <= max_deg, produced as
    /// a short word in elementary matrices (so the determinant is a unit by
    /// construction).
    pub fn gl2a_matrix(&mut self, max_deg: usize) -> Matrix2 {
        loop {
            let mut m = Matrix2::identity(self.field);
            let factors = self.rng.gen_range(1..=4);
            for _ in 0..factors {
                let kind = self.rng.gen_range(0..4u8);
                let f = match kind {
                    0 => Matrix2::new(
                        RatFunc::one(self.field),
                        RatFunc::from_poly(self.poly(1)),
                        RatFunc::zero(self.field),
                        RatFunc::one(self.field),
                    ),
                    1 => Matrix2::new(
                        RatFunc::one(self.field),
                        RatFunc::zero(self.field),
                        RatFunc::from_poly(self.poly(1)),
                        RatFunc::one(self.field),
                    ),
                    2 => Matrix2::from_ints(self.field, 0, 1, 1, 0),
                    _ => Matrix2::new(
                        RatFunc::from_elem(self.nonzero_elem()),
                        RatFunc::zero(self.field),
                        RatFunc::zero(self.field),
                        RatFunc::one(self.field),
                    ),
                }
                .unwrap();
                m = m.mul(&f);
            }
            let deg_ok = [&m.a, &m.b, &m.c, &m.d]
                .iter()
                .all(|r| r.num().degree() <= max_deg as i64);
            if deg_ok && m.in_gl2a() {
                return m;
            }
        }
    }

    /// A random element of Gamma_0(m) with the (2,1) entry divisible by m.
    pub fn gamma0_matrix(&mut self, level: &FqPoly, max_deg: usize) -> Matrix2 {
        loop {
            let mut m = Matrix2::identity(self.field);
            let factors = self.rng.gen_range(1..=4);
            for _ in 0..factors {
                let kind = self.rng.gen_range(0..3u8);
                let f = match kind {
                    0 => Matrix2::new(
                        RatFunc::one(self.field),
                        RatFunc::from_poly(self.poly(1)),
                        RatFunc::zero(self.field),
                        RatFunc::one(self.field),
                    ),
                    1 => Matrix2::new(
                        RatFunc::one(self.field),
                        RatFunc::zero(self.field),
                        RatFunc::from_poly(self.poly(1).mul(level)),
                        RatFunc::one(self.field),
                    ),
                    _ => Matrix2::new(
                        RatFunc::from_elem(self.nonzero_elem()),
                        RatFunc::zero(self.field),
                        RatFunc::zero(self.field),
                        RatFunc::one(self.field),
                    ),
                }
                .unwrap();
                m = m.mul(&f);
            }
            let deg_ok = [&m.a, &m.b, &m.c, &m.d]
                .iter()
                .all(|r| r.num().degree() <= max_deg as i64);
            if deg_ok && m.in_gamma0(level) {
                return m;
            }
        }
    }

    pub fn usize_in(&mut self, range: std::ops::RangeInclusive<usize>) -> usize {
        self.rng.gen_range(range)
    }

    pub fn bool(&mut self) -> bool {
        self.rng.gen()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_replay() {
        let f = FqField::get(3).unwrap();
        let mut s1 = Sampler::fork(f, 42, 7);
        let mut s2 = Sampler::fork(f, 42, 7);
        for _ in 0..20 {
            assert_eq!(s1.zrat(2, 2), s2.zrat(2, 2));
            assert_eq!(s1.gl2a_matrix(3), s2.gl2a_matrix(3));
        }
    }

    #[test]
    fn gl2a_sampling_lands_in_group() {
        let f = FqField::get(5).unwrap();
        let mut s = Sampler::new(f, 1);
        for _ in 0..50 {
            assert!(s.gl2a_matrix(3).in_gl2a());
        }
    }
}
