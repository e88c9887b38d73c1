//! 2x2 matrices over K = Fq(T): fractional linear action, the cocycles
//! j(gamma, z) = cz + d and kappa(gamma, z) = c/(cz+d), congruence-group
//! membership, and Hermite reduction modulo GL2(A).

use std::fmt;

use crate::error::{Error, Result};
use crate::fq::FqField;
use crate::fqpoly::FqPoly;
use crate::ratfunc::RatFunc;
use crate::zrat::ZRat;

/// An invertible 2x2 matrix (a b; c d) with entries in Fq(T).
#[derive(Clone, PartialEq)]
pub struct Matrix2 {
    pub a: RatFunc,
    pub b: RatFunc,
    pub c: RatFunc,
    pub d: RatFunc,
    det: RatFunc,
}

impl Matrix2 {
    pub fn new(a: RatFunc, b: RatFunc, c: RatFunc, d: RatFunc) -> Result<Matrix2> {
        let det = a.mul(&d).sub(&b.mul(&c));
        if det.is_zero() {
            return Err(Error::DegenerateMatrix);
        }
        Ok(Matrix2 { a, b, c, d, det })
    }

    pub fn from_polys(a: FqPoly, b: FqPoly, c: FqPoly, d: FqPoly) -> Result<Matrix2> {
        Matrix2::new(
            RatFunc::from_poly(a),
            RatFunc::from_poly(b),
            RatFunc::from_poly(c),
            RatFunc::from_poly(d),
        )
    }

    pub fn from_ints(field: &'static FqField, a: i64, b: i64, c: i64, d: i64) -> Result<Matrix2> {
        Matrix2::new(
            RatFunc::from_int(field, a),
            RatFunc::from_int(field, b),
            RatFunc::from_int(field, c),
            RatFunc::from_int(field, d),
        )
    }

    pub fn identity(field: &'static FqField) -> Matrix2 {
        Matrix2::from_ints(field, 1, 0, 0, 1).unwrap()
    }

    /// diag(x, y).
    pub fn diagonal(x: RatFunc, y: RatFunc) -> Result<Matrix2> {
        let field = x.field();
        Matrix2::new(x, RatFunc::zero(field), RatFunc::zero(field), y)
    }

    pub fn field(&self) -> &'static FqField {
        self.a.field()
    }

    pub fn det(&self) -> &RatFunc {
        &self.det
    }

    pub fn mul(&self, rhs: &Matrix2) -> Matrix2 {
        Matrix2 {
            a: self.a.mul(&rhs.a).add(&self.b.mul(&rhs.c)),
            b: self.a.mul(&rhs.b).add(&self.b.mul(&rhs.d)),
            c: self.c.mul(&rhs.a).add(&self.d.mul(&rhs.c)),
            d: self.c.mul(&rhs.b).add(&self.d.mul(&rhs.d)),
            det: self.det.mul(&rhs.det),
        }
    }

    pub fn inv(&self) -> Matrix2 {
        let di = self.det.inv();
        Matrix2 {
            a: self.d.mul(&di),
            b: self.b.neg().mul(&di),
            c: self.c.neg().mul(&di),
            d: self.a.mul(&di),
            det: di,
        }
    }

    pub fn scale(&self, s: &RatFunc) -> Result<Matrix2> {
        Matrix2::new(self.a.mul(s), self.b.mul(s), self.c.mul(s), self.d.mul(s))
    }

    /// All entries in A = Fq\[T\].
    pub fn is_integral(&self) -> bool {
        [&self.a, &self.b, &self.c, &self.d].iter().all(|r| r.is_polynomial())
    }

    /// Member of GL2(A): integral with unit determinant.
    pub fn in_gl2a(&self) -> bool {
        self.is_integral() && self.det.is_unit_constant()
    }

    /// Member of Gamma_0(m): GL2(A) with c = 0 mod m.
    pub fn in_gamma0(&self, m: &FqPoly) -> bool {
        self.in_gl2a() && (m.is_constant() || self.c.num().rem(m).is_zero())
    }

    /// Member of the principal congruence subgroup Gamma(m):
    /// a = d = 1 and b = c = 0 mod m.
    pub fn in_gamma_principal(&self, m: &FqPoly) -> bool {
        if !self.in_gl2a() {
            return false;
        }
        if m.is_constant() {
            return true;
        }
        let one = FqPoly::one(self.field());
        self.a.num().sub(&one).rem(m).is_zero()
            && self.d.num().sub(&one).rem(m).is_zero()
            && self.b.num().rem(m).is_zero()
            && self.c.num().rem(m).is_zero()
    }

    /// The image gamma(z) = (az+b)/(cz+d) of the variable.
    pub fn apply_z(&self) -> ZRat {
        ZRat::linear(&self.a, &self.b).div(&ZRat::linear(&self.c, &self.d))
    }

    /// The cocycle pair (j, kappa) = (cz + d, c/(cz+d)).
    pub fn cocycles(&self) -> (ZRat, ZRat) {
        let j = self.j_cocycle();
        let kappa = ZRat::constant(crate::scalar::CoeffScalar::from_rat(self.c.clone())).div(&j);
        (j, kappa)
    }

    /// j(gamma, z) = cz + d.
    pub fn j_cocycle(&self) -> ZRat {
        ZRat::linear(&self.c, &self.d)
    }
}

/// f(gamma z): substitution of the fractional linear transformation into a
/// rational test function. This is a right action: mat_act(g*h, f) equals
/// mat_act(h, mat_act(g, f)).
pub fn mat_act(gamma: &Matrix2, f: &ZRat) -> ZRat {
    f.subst_mobius(&gamma.a, &gamma.b, &gamma.c, &gamma.d)
}

/// Standard generators of GL2(Fq\[T\]): translations by 1 and by T, a
/// diagonal (c 0; 0 1) for a generator c of Fq*, and the inversion
/// (0 1; 1 0).
pub fn gl2a_generators(field: &'static FqField) -> Vec<Matrix2> {
    let c = field.multiplicative_generator();
    let mut gens = vec![
        Matrix2::from_ints(field, 1, 1, 0, 1).unwrap(),
        Matrix2::new(
            RatFunc::one(field),
            RatFunc::from_poly(FqPoly::t(field)),
            RatFunc::zero(field),
            RatFunc::one(field),
        )
        .unwrap(),
        Matrix2::from_ints(field, 0, 1, 1, 0).unwrap(),
    ];
    if !c.is_one() {
        gens.push(
            Matrix2::new(
                RatFunc::from_elem(c),
                RatFunc::zero(field),
                RatFunc::zero(field),
                RatFunc::one(field),
            )
            .unwrap(),
        );
    }
    gens
}

/// Result of Hermite reduction: `hermite` is the canonical upper-triangular
/// representative of GL2(A) K^* gamma (monic diagonal, off-diagonal reduced
/// mod the lower-right entry, primitive integral entries), and `unimodular`
/// is the GL2(A) matrix with unimodular * (lambda * gamma) = hermite for the
/// scalar lambda that clears denominators and content.
pub struct HermiteForm {
    pub hermite: Matrix2,
    pub unimodular: Matrix2,
}

pub fn hermite_normal_form(gamma: &Matrix2) -> HermiteForm {
    let field = gamma.field();
    // clear denominators and content
    let lcm = [&gamma.b, &gamma.c, &gamma.d]
        .iter()
        .fold(gamma.a.den().clone(), |acc, r| {
            let g = acc.gcd(r.den());
            acc.mul(&r.den().divrem(&g).0)
        });
    let mut e: Vec<FqPoly> = [&gamma.a, &gamma.b, &gamma.c, &gamma.d]
        .iter()
        .map(|r| r.num().mul(&lcm.divrem(r.den()).0))
        .collect();
    let content = e.iter().fold(FqPoly::zero(field), |acc, p| acc.gcd(p));
    if !content.is_one() && !content.is_zero() {
        for p in e.iter_mut() {
            *p = p.divrem(&content).0;
        }
    }
    let (mut a, mut b, mut c, mut d) = (e[0].clone(), e[1].clone(), e[2].clone(), e[3].clone());
    // track V as the product of the row operations
    let mut v = [
        FqPoly::one(field),
        FqPoly::zero(field),
        FqPoly::zero(field),
        FqPoly::one(field),
    ];
    // Euclid on the first column via unimodular row operations
    while !c.is_zero() {
        if a.is_zero() || a.degree() < c.degree() {
            std::mem::swap(&mut a, &mut c);
            std::mem::swap(&mut b, &mut d);
            v.swap(0, 2);
            v.swap(1, 3);
            continue;
        }
        let q = a.divrem(&c).0;
        // row1 -= q * row2
        a = a.sub(&q.mul(&c));
        b = b.sub(&q.mul(&d));
        let v0 = v[0].sub(&q.mul(&v[2]));
        let v1 = v[1].sub(&q.mul(&v[3]));
        v[0] = v0;
        v[1] = v1;
    }
    // make the diagonal monic (multiply rows by units)
    if !a.is_monic() {
        let u = a.leading().inv();
        a = a.scale(&u);
        b = b.scale(&u);
        v[0] = v[0].scale(&u);
        v[1] = v[1].scale(&u);
    }
    if !d.is_monic() {
        let u = d.leading().inv();
        d = d.scale(&u);
        v[2] = v[2].scale(&u);
        v[3] = v[3].scale(&u);
    }
    // reduce b mod d
    if d.degree() >= 0 {
        let q = b.divrem(&d).0;
        b = b.sub(&q.mul(&d));
        v[0] = v[0].sub(&q.mul(&v[2]));
        v[1] = v[1].sub(&q.mul(&v[3]));
    }
    let hermite = Matrix2::from_polys(a, b, c, d).expect("nonsingular input stays nonsingular");
    let unimodular = Matrix2::from_polys(v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone())
        .expect("row operations are unimodular");
    debug_assert!(unimodular.in_gl2a());
    HermiteForm { hermite, unimodular }
}

/// A canonical text key identifying the hermite class, used to index
/// symbolic atoms.
pub fn hermite_key(h: &Matrix2) -> String {
    format!("[{};{};{};{}]", h.a, h.b, h.c, h.d)
}

impl fmt::Display for Matrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}; {}, {})", self.a, self.b, self.c, self.d)
    }
}

impl fmt::Debug for Matrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::CoeffScalar;

    fn f3() -> &'static FqField {
        FqField::get(3).unwrap()
    }

    #[test]
    fn singular_matrix_rejected() {
        assert!(matches!(
            Matrix2::from_ints(f3(), 1, 2, 2, 1),
            Err(Error::DegenerateMatrix)
        ));
    }

    #[test]
    fn mat_act_examples() {
        let f = f3();
        let z = ZRat::z(f);
        // identity fixes z^3
        let id = Matrix2::identity(f);
        assert_eq!(mat_act(&id, &z.pow(3)), z.pow(3));
        // inversion sends z to 1/z
        let w = Matrix2::from_ints(f, 0, 1, 1, 0).unwrap();
        assert_eq!(mat_act(&w, &z), z.pow(-1));
        // (t+2, 1; 0, 1) sends z to (t+2)z + 1
        let t = FqPoly::t(f);
        let tp2 = t.add(&FqPoly::from_ints(f, &[2]));
        let g = Matrix2::from_polys(tp2.clone(), FqPoly::one(f), FqPoly::zero(f), FqPoly::one(f))
            .unwrap();
        let expect = z.scale(&CoeffScalar::from_poly(tp2)).add(&ZRat::one(f));
        assert_eq!(mat_act(&g, &z), expect);
    }

    #[test]
    fn mat_act_is_right_action() {
        let f = f3();
        let z = ZRat::z(f);
        let fun = z.pow(2).add(&ZRat::one(f)).div(&z.pow(3).sub(&ZRat::one(f)));
        let g1 = Matrix2::from_polys(FqPoly::t(f), FqPoly::one(f), FqPoly::one(f), FqPoly::zero(f))
            .unwrap();
        let g2 = Matrix2::from_polys(
            FqPoly::one(f),
            FqPoly::t(f),
            FqPoly::from_ints(f, &[2]),
            FqPoly::one(f),
        )
        .unwrap();
        assert_eq!(
            mat_act(&g1.mul(&g2), &fun),
            mat_act(&g2, &mat_act(&g1, &fun))
        );
    }

    #[test]
    fn cocycle_shapes() {
        let f = f3();
        // upper triangular has kappa = 0
        let g = Matrix2::from_polys(FqPoly::t(f), FqPoly::one(f), FqPoly::zero(f), FqPoly::one(f))
            .unwrap();
        let (_, kappa) = g.cocycles();
        assert!(kappa.is_zero());
        // (0 1; 1 0): j = z, kappa = 1/z
        let w = Matrix2::from_ints(f, 0, 1, 1, 0).unwrap();
        let (j, kappa) = w.cocycles();
        assert_eq!(j, ZRat::z(f));
        assert_eq!(kappa, ZRat::z(f).pow(-1));
    }

    #[test]
    fn cocycle_identities() {
        // j(gg', z) = j(g, g'z) j(g', z)
        // kappa(gg', z) = det g'/j(g',z)^2 kappa(g, g'z) + kappa(g', z)
        let f = f3();
        let g1 = Matrix2::from_polys(
            FqPoly::t(f),
            FqPoly::from_ints(f, &[1, 1]),
            FqPoly::from_ints(f, &[2]),
            FqPoly::one(f),
        )
        .unwrap();
        let g2 = Matrix2::from_polys(
            FqPoly::from_ints(f, &[1, 2]),
            FqPoly::one(f),
            FqPoly::t(f),
            FqPoly::from_ints(f, &[2, 0, 1]),
        )
        .unwrap();
        let prod = g1.mul(&g2);
        let (j12, k12) = prod.cocycles();
        let (j1, k1) = g1.cocycles();
        let (j2, k2) = g2.cocycles();
        let j1_at = mat_act(&g2, &j1);
        let k1_at = mat_act(&g2, &k1);
        assert_eq!(j12, j1_at.mul(&j2));
        let det2 = CoeffScalar::from_rat(g2.det().clone());
        let rhs = k1_at.mul(&j2.pow(-2)).scale(&det2).add(&k2);
        assert_eq!(k12, rhs);
    }

    #[test]
    fn group_membership() {
        let f = f3();
        let t = FqPoly::t(f);
        let m = t.add(&FqPoly::from_ints(f, &[2])); // t+2
        let g = Matrix2::from_polys(
            FqPoly::one(f),
            FqPoly::one(f),
            m.clone(),
            FqPoly::one(f).add(&m),
        )
        .unwrap();
        assert!(g.in_gl2a());
        assert!(g.in_gamma0(&m));
        assert!(!g.in_gamma0(&t));
        assert!(!g.in_gamma_principal(&m));
    }

    #[test]
    fn hermite_reduction() {
        let f = f3();
        // gamma in GL2(A) reduces to the identity
        let s = Matrix2::from_polys(
            FqPoly::one(f),
            FqPoly::one(f),
            FqPoly::t(f),
            FqPoly::t(f).add(&FqPoly::one(f)),
        )
        .unwrap();
        assert!(s.in_gl2a());
        let hf = hermite_normal_form(&s);
        assert_eq!(hf.hermite, Matrix2::identity(f));
        // left multiplication does not change the hermite class
        let g = Matrix2::from_polys(
            FqPoly::one(f),
            FqPoly::from_ints(f, &[2]),
            FqPoly::zero(f),
            FqPoly::t(f).add(&FqPoly::from_ints(f, &[2])),
        )
        .unwrap();
        let h1 = hermite_normal_form(&g);
        let h2 = hermite_normal_form(&s.mul(&g));
        assert_eq!(h1.hermite, h2.hermite);
        // V * gamma = H
        let v_g = h2.unimodular.mul(&s.mul(&g));
        assert_eq!(hermite_key(&v_g), hermite_key(&h2.hermite));
        // scalar multiples reduce to the same class
        let half = RatFunc::from_poly(FqPoly::t(f)).inv();
        let h3 = hermite_normal_form(&g.scale(&half).unwrap());
        assert_eq!(h1.hermite, h3.hermite);
    }
}
