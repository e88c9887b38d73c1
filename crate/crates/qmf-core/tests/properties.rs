//! Randomized algebraic identities, exact over every supported field.

use proptest::prelude::*;

use qmf_core::fq::FqField;
use qmf_core::json;
use qmf_core::matrix::{mat_act, Matrix2};
use qmf_core::sample::Sampler;
use qmf_core::scalar::CoeffScalar;
use qmf_core::series::USeries;
use qmf_core::symfn::GradedElem;

const QS: [u64; 5] = [2, 3, 4, 5, 9];
const QS_SMALL: [u64; 3] = [2, 3, 5];

fn random_graded(s: &mut Sampler, max_e: u32) -> GradedElem {
    let field = s.field();
    let a = s.usize_in(0..=2) as u32;
    let b = s.usize_in(0..=2) as u32;
    let e = s.usize_in(0..=max_e as usize) as u32;
    GradedElem::monomial(field, a, b, e, s.nonzero_scalar(2)).unwrap()
}

fn field_of(idx: usize) -> &'static FqField {
    FqField::get(QS[idx % QS.len()]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    // field axioms of Fq(T), exact: (x + y) w = x w + y w, inverses, and
    // associativity, across q in {2, 3, 4, 5, 9}
    #[test]
    fn ratfunc_field_axioms(qi in 0usize..5, seed in any::<u64>()) {
        let field = field_of(qi);
        let mut s = Sampler::new(field, seed);
        let x = s.ratfunc(3);
        let y = s.ratfunc(3);
        let w = s.ratfunc(3);
        prop_assert_eq!(x.add(&y).mul(&w), x.mul(&w).add(&y.mul(&w)));
        prop_assert_eq!(x.mul(&y).mul(&w), x.mul(&y.mul(&w)));
        prop_assert_eq!(x.add(&y), y.add(&x));
        if !x.is_zero() {
            prop_assert!(x.mul(&x.inv()).is_one());
        }
        prop_assert!(x.sub(&x).is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    // j(gg', z) = j(g, g'z) j(g', z) and
    // kappa(gg', z) = det g' / j(g', z)^2 kappa(g, g'z) + kappa(g', z)
    #[test]
    fn cocycle_identities(qi in 0usize..5, seed in any::<u64>()) {
        let field = field_of(qi);
        let mut s = Sampler::new(field, seed);
        let g1 = s.nonsingular_matrix(2);
        let g2 = s.nonsingular_matrix(2);
        let prod = g1.mul(&g2);
        let (j12, k12) = prod.cocycles();
        let (j1, k1) = g1.cocycles();
        let (j2, k2) = g2.cocycles();
        prop_assert_eq!(j12, mat_act(&g2, &j1).mul(&j2));
        let det2 = CoeffScalar::from_rat(g2.det().clone());
        let rhs = mat_act(&g2, &k1).mul(&j2.pow(-2)).scale(&det2).add(&k2);
        prop_assert_eq!(k12, rhs);
    }

    // mat_act is a right action: f((g h) z) = (f o g)(h z)
    #[test]
    fn mat_act_right_action(qi in 0usize..5, seed in any::<u64>()) {
        let field = field_of(qi);
        let mut s = Sampler::new(field, seed);
        let f = s.zrat(2, 2);
        let g1 = s.nonsingular_matrix(1);
        let g2 = s.nonsingular_matrix(1);
        prop_assert_eq!(mat_act(&g1.mul(&g2), &f), mat_act(&g2, &mat_act(&g1, &f)));
    }

    // matrix inverses compose to the identity
    #[test]
    fn matrix_inverse(qi in 0usize..5, seed in any::<u64>()) {
        let field = field_of(qi);
        let mut s = Sampler::new(field, seed);
        let g = s.nonsingular_matrix(2);
        prop_assert_eq!(g.mul(&g.inv()), Matrix2::identity(field));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // parse(serialize(x)) = x for the core document types
    #[test]
    fn serialization_round_trips(qi in 0usize..5, seed in any::<u64>()) {
        let field = field_of(qi);
        let mut s = Sampler::new(field, seed);
        // rationals inside scalars
        let scal = s.scalar(3);
        let dto = json::scalar_to_dto(&scal);
        prop_assert_eq!(json::scalar_from_dto(field, &dto).unwrap(), scal);
        // rational functions
        let r = s.ratfunc(3);
        let rd = json::rat_to_dto(&r);
        prop_assert_eq!(json::rat_from_dto(field, &rd).unwrap(), r);
        // graded elements
        let a = s.usize_in(0..=2) as u32;
        let b = s.usize_in(0..=2) as u32;
        let e = s.usize_in(0..=2) as u32;
        let x = GradedElem::monomial(field, a, b, e, s.nonzero_scalar(2)).unwrap();
        let gd = json::graded_to_dto(&x);
        prop_assert_eq!(json::graded_from_dto(field, &gd).unwrap(), x);
        // truncated series documents
        let mut u = USeries::zero(field, 9);
        for _ in 0..3 {
            u = u.add(&USeries::monomial(s.scalar(2), s.usize_in(0..=8) as i64 - 2, 9));
        }
        let doc = json::useries_to_doc(&u);
        let parsed = json::Document::from_json(&doc.to_json()).unwrap();
        match parsed.body {
            json::Body::Useries { field: fd, min, prec, coeffs } => {
                prop_assert_eq!(json::useries_from_parts(fd, min, prec, &coeffs).unwrap(), u);
            }
            _ => prop_assert!(false, "wrong kind"),
        }
        // z-rational functions (canonicalized on write)
        let f = s.zrat(2, 2);
        let zd = json::zrat_to_dto(&f);
        prop_assert_eq!(json::zrat_from_dto(field, &zd).unwrap(), f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]

    // from_e(to_e(x)) = x, with every E-coefficient of depth zero,
    // 200 cases per q in {2, 3, 5}
    #[test]
    fn e_expansion_round_trip(qi in 0usize..3, seed in any::<u64>()) {
        let field = FqField::get(QS_SMALL[qi]).unwrap();
        let mut s = Sampler::new(field, seed);
        let x = random_graded(&mut s, 3);
        let p = qmf_core::assoc::canonical_assoc(&x);
        let ee = qmf_core::eexp::to_e(&p).unwrap();
        for c in ee.coeffs() {
            prop_assert!(c.is_modular());
        }
        prop_assert_eq!(qmf_core::eexp::from_e(&ee).unwrap(), p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // the series rendering is a ring morphism and respects the type
    // grading (support on exponents = type mod q-1)
    #[test]
    fn render_is_multiplicative(seed in any::<u64>()) {
        let field = FqField::get(3).unwrap();
        let oracle = qmf_core::series::SeriesOracle::get(field, 14).unwrap();
        let mut s = Sampler::new(field, seed);
        let x = random_graded(&mut s, 2);
        let y = random_graded(&mut s, 2);
        let rx = x.render(&oracle).unwrap();
        let ry = y.render(&oracle).unwrap();
        let rxy = x.mul(&y).render(&oracle).unwrap();
        prop_assert!(rxy.agrees_to(&rx.mul(&ry), 12));
        // type support, when the scalar is pi-free
        if x.terms().all(|(_, c)| c.as_rat().is_some()) {
            prop_assert!(rx.supported_on_type(x.typ()));
        }
    }
}
