//! The self-describing JSON schema for every object the CLI reads or
//! writes. Documents carry `schema_version` and a `kind` discriminator;
//! field elements are encoded as integers in 0..q (base-p digits of the
//! residue polynomial), polynomials as coefficient arrays indexed by
//! T-degree, scalars as maps from pi-exponent to a [num, den] pair.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assoc::AssocPoly;
use crate::binom::NvhReport;
use crate::eexp::EExpansion;
use crate::error::{Error, Result};
use crate::fq::FqField;
use crate::fqpoly::FqPoly;
use crate::hecke::{FAtom, FTree, FormalCombo, FormalCtx, HeckeKind, SymDecl};
use crate::ratfunc::RatFunc;
use crate::scalar::CoeffScalar;
use crate::series::USeries;
use crate::symfn::GradedElem;
use crate::zrat::{ZPoly, ZRat};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FieldDto {
    pub q: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub modulus: Option<Vec<u64>>,
}

impl FieldDto {
    pub fn of(field: &'static FqField) -> FieldDto {
        let modulus = if field.r() > 1 {
            Some(field.modulus_digits().to_vec())
        } else {
            None
        };
        FieldDto { q: field.q(), modulus }
    }

    pub fn resolve(&self) -> Result<&'static FqField> {
        match &self.modulus {
            None => FqField::get(self.q),
            Some(m) => {
                let (p, r) = crate::fq::factor_prime_power(self.q)
                    .ok_or_else(|| Error::Parse(format!("q = {} is not a prime power", self.q)))?;
                FqField::get_with_modulus(p, r, Some(m))
            }
        }
    }
}

pub type PolyDto = Vec<u64>;

pub fn poly_to_dto(p: &FqPoly) -> PolyDto {
    p.coeffs().iter().map(|c| c.value()).collect()
}

pub fn poly_from_dto(field: &'static FqField, dto: &[u64]) -> FqPoly {
    FqPoly::from_ints(field, dto)
}

pub type RatDto = (PolyDto, PolyDto);

pub fn rat_to_dto(r: &RatFunc) -> RatDto {
    (poly_to_dto(r.num()), poly_to_dto(r.den()))
}

pub fn rat_from_dto(field: &'static FqField, dto: &RatDto) -> Result<RatFunc> {
    let den = poly_from_dto(field, &dto.1);
    if den.is_zero() {
        return Err(Error::Parse("zero denominator in a rational".into()));
    }
    Ok(RatFunc::new(poly_from_dto(field, &dto.0), den))
}

/// pi-exponent (as a decimal string, JSON keys are strings) -> fraction.
pub type ScalarDto = BTreeMap<String, RatDto>;

pub fn scalar_to_dto(s: &CoeffScalar) -> ScalarDto {
    s.terms().map(|(e, r)| (e.to_string(), rat_to_dto(r))).collect()
}

pub fn scalar_from_dto(field: &'static FqField, dto: &ScalarDto) -> Result<CoeffScalar> {
    let mut out = CoeffScalar::zero(field);
    for (e, r) in dto {
        let e: i64 = e
            .parse()
            .map_err(|_| Error::Parse(format!("bad pi-exponent key {e:?}")))?;
        out = out.add(&CoeffScalar::monomial(e, rat_from_dto(field, r)?));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradedTermDto {
    pub g: u32,
    pub h: u32,
    pub e: u32,
    pub scalar: ScalarDto,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradedDto {
    pub weight: i64,
    #[serde(rename = "type")]
    pub typ: i64,
    pub terms: Vec<GradedTermDto>,
}

pub fn graded_to_dto(x: &GradedElem) -> GradedDto {
    GradedDto {
        weight: x.weight(),
        typ: x.typ(),
        terms: x
            .terms()
            .map(|(&(g, h, e), c)| GradedTermDto { g, h, e, scalar: scalar_to_dto(c) })
            .collect(),
    }
}

pub fn graded_from_dto(field: &'static FqField, dto: &GradedDto) -> Result<GradedElem> {
    let terms = dto
        .terms
        .iter()
        .map(|t| Ok(((t.g, t.h, t.e), scalar_from_dto(field, &t.scalar)?)))
        .collect::<Result<Vec<_>>>()?;
    GradedElem::new(field, dto.weight, dto.typ, terms)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZRatDto {
    pub num: Vec<ScalarDto>,
    pub den: Vec<ScalarDto>,
}

pub fn zrat_to_dto(x: &ZRat) -> ZRatDto {
    let c = x.canonical();
    ZRatDto {
        num: c.num().coeffs().iter().map(scalar_to_dto).collect(),
        den: c.den().coeffs().iter().map(scalar_to_dto).collect(),
    }
}

pub fn zrat_from_dto(field: &'static FqField, dto: &ZRatDto) -> Result<ZRat> {
    let num = dto
        .num
        .iter()
        .map(|s| scalar_from_dto(field, s))
        .collect::<Result<Vec<_>>>()?;
    let den = dto
        .den
        .iter()
        .map(|s| scalar_from_dto(field, s))
        .collect::<Result<Vec<_>>>()?;
    let den = ZPoly::from_coeffs(field, den);
    if den.is_zero() {
        return Err(Error::Parse("zero denominator in a z-rational".into()));
    }
    Ok(ZRat::new(ZPoly::from_coeffs(field, num), den))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenDto {
    pub prime: PolyDto,
    pub kind: String,
    pub value: ScalarDto,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymbolDeclDto {
    pub name: String,
    pub weight: i64,
    #[serde(rename = "type")]
    pub typ: i64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub eigen: Vec<EigenDto>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum FormalAtomDto {
    Sym { name: String },
    DeltaP { prime: PolyDto, inner: Box<FormalAtomDto> },
    Up { prime: PolyDto, inner: Box<FormalAtomDto> },
    Tp { prime: PolyDto, inner: Box<FormalAtomDto> },
    Dn { order: u32, inner: Box<FormalAtomDto> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormalTermDto {
    pub coeff: ScalarDto,
    pub atom: FormalAtomDto,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ep: Option<(PolyDto, u32)>,
}

fn atom_tree_to_dto(t: &FTree) -> FormalAtomDto {
    match t {
        FTree::Sym(name) => FormalAtomDto::Sym { name: name.clone() },
        FTree::DeltaP { prime, inner } => FormalAtomDto::DeltaP {
            prime: poly_to_dto(prime),
            inner: Box::new(atom_to_dto_tree(inner)),
        },
        FTree::UpApp { prime, inner } => FormalAtomDto::Up {
            prime: poly_to_dto(prime),
            inner: Box::new(atom_to_dto_tree(inner)),
        },
        FTree::TpApp { prime, inner } => FormalAtomDto::Tp {
            prime: poly_to_dto(prime),
            inner: Box::new(atom_to_dto_tree(inner)),
        },
        FTree::Dn { order, inner } => FormalAtomDto::Dn {
            order: *order,
            inner: Box::new(atom_to_dto_tree(inner)),
        },
    }
}

fn atom_to_dto_tree(a: &FAtom) -> FormalAtomDto {
    // nested atoms with Ep factors are flattened into the term-level ep
    // only at the top; inner Ep factors are re-expanded on read through the
    // declared weights, so keep them textual here
    atom_tree_to_dto(&a.tree)
}

/// One coefficient of a formal expansion.
pub fn formal_combo_to_dto(c: &FormalCombo) -> Vec<FormalTermDto> {
    c.terms()
        .map(|(a, v)| FormalTermDto {
            coeff: scalar_to_dto(v),
            atom: atom_tree_to_dto(&a.tree),
            ep: a.ep.as_ref().map(|(p, s)| (poly_to_dto(p), *s)),
        })
        .collect()
}

/// The documents the CLI understands.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Body {
    AssocPoly {
        field: FieldDto,
        weight: i64,
        #[serde(rename = "type")]
        typ: i64,
        coeffs: Vec<GradedDto>,
    },
    AssocPolyRational {
        field: FieldDto,
        weight: i64,
        #[serde(rename = "type")]
        typ: i64,
        coeffs: Vec<ZRatDto>,
    },
    EExpansion {
        field: FieldDto,
        weight: i64,
        #[serde(rename = "type")]
        typ: i64,
        coeffs: Vec<GradedDto>,
    },
    FormalEExpansion {
        field: FieldDto,
        weight: i64,
        #[serde(rename = "type")]
        typ: i64,
        symbols: Vec<SymbolDeclDto>,
        coeffs: Vec<Vec<FormalTermDto>>,
    },
    Useries {
        field: FieldDto,
        min: i64,
        prec: i64,
        coeffs: Vec<ScalarDto>,
    },
    NvhReport(NvhReport),
    Graded {
        field: FieldDto,
        elem: GradedDto,
    },
    DerDecomposition {
        field: FieldDto,
        weight: i64,
        #[serde(rename = "type")]
        typ: i64,
        parts: Vec<GradedDto>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        alpha: Option<ScalarDto>,
    },
    NvhViolation(NvhReport),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Document {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: Body,
}

impl Document {
    pub fn new(body: Body) -> Document {
        Document { schema_version: SCHEMA_VERSION, body }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_json(s: &str) -> Result<Document> {
        let d: Document =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("bad document: {e}")))?;
        if d.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "schema version {} unsupported (expected {SCHEMA_VERSION})",
                d.schema_version
            )));
        }
        Ok(d)
    }
}

pub fn assoc_to_doc(p: &AssocPoly<GradedElem>) -> Document {
    Document::new(Body::AssocPoly {
        field: FieldDto::of(p.field()),
        weight: p.weight(),
        typ: p.typ(),
        coeffs: p.coeffs().iter().map(graded_to_dto).collect(),
    })
}

pub fn assoc_from_parts(
    field: FieldDto,
    weight: i64,
    typ: i64,
    coeffs: &[GradedDto],
) -> Result<AssocPoly<GradedElem>> {
    let f = field.resolve()?;
    let coeffs = coeffs
        .iter()
        .map(|c| graded_from_dto(f, c))
        .collect::<Result<Vec<_>>>()?;
    AssocPoly::new(weight, typ, coeffs)
}

pub fn eexp_to_doc(e: &EExpansion<GradedElem>) -> Document {
    Document::new(Body::EExpansion {
        field: FieldDto::of(e.field()),
        weight: e.weight(),
        typ: e.typ(),
        coeffs: e.coeffs().iter().map(graded_to_dto).collect(),
    })
}

pub fn eexp_from_parts(
    field: FieldDto,
    weight: i64,
    typ: i64,
    coeffs: &[GradedDto],
) -> Result<EExpansion<GradedElem>> {
    let f = field.resolve()?;
    let coeffs = coeffs
        .iter()
        .map(|c| graded_from_dto(f, c))
        .collect::<Result<Vec<_>>>()?;
    EExpansion::new(weight, typ, coeffs)
}

pub fn useries_to_doc(s: &USeries) -> Document {
    let (min, coeffs) = s.coeffs_window();
    Document::new(Body::Useries {
        field: FieldDto::of(s.field()),
        min,
        prec: s.precision(),
        coeffs: coeffs.iter().map(scalar_to_dto).collect(),
    })
}

pub fn useries_from_parts(
    field: FieldDto,
    min: i64,
    prec: i64,
    coeffs: &[ScalarDto],
) -> Result<USeries> {
    let f = field.resolve()?;
    if prec - min != coeffs.len() as i64 {
        return Err(Error::Parse(format!(
            "series window [{min}, {prec}) does not match {} coefficients",
            coeffs.len()
        )));
    }
    let coeffs = coeffs
        .iter()
        .map(|c| scalar_from_dto(f, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(USeries::from_coeffs(f, min, prec, coeffs))
}

/// Rebuild a formal expansion (and its declaration table) from a document.
pub fn formal_from_parts(
    field: FieldDto,
    weight: i64,
    typ: i64,
    symbols: &[SymbolDeclDto],
    coeffs: &[Vec<FormalTermDto>],
) -> Result<(FormalCtx, EExpansion<FormalCombo>)> {
    let f = field.resolve()?;
    let mut ctx = FormalCtx::new();
    for s in symbols {
        ctx.declare(&s.name, s.weight, s.typ);
        for e in &s.eigen {
            let kind = match e.kind.as_str() {
                "T" => HeckeKind::T,
                "U" => HeckeKind::U,
                other => return Err(Error::Parse(format!("bad Hecke kind {other:?}"))),
            };
            ctx.declare_eigen(
                &s.name,
                &poly_from_dto(f, &e.prime),
                kind,
                scalar_from_dto(f, &e.value)?,
            );
        }
    }
    let mut out = Vec::with_capacity(coeffs.len());
    for (i, terms) in coeffs.iter().enumerate() {
        let mut combo = FormalCombo::zero(f);
        for t in terms {
            let atom = atom_from_dto(f, &ctx, &t.atom)?;
            let atom = match &t.ep {
                None => atom,
                Some((p, s)) => atom.with_ep(&poly_from_dto(f, p), *s)?,
            };
            let c = scalar_from_dto(f, &t.coeff)?;
            combo = combo.add(&FormalCombo::from_atom(f, atom, c));
        }
        let _ = i;
        out.push(combo);
    }
    Ok((ctx.clone(), EExpansion::new(weight, typ, out)?))
}

fn atom_from_dto(
    field: &'static FqField,
    ctx: &FormalCtx,
    dto: &FormalAtomDto,
) -> Result<FAtom> {
    match dto {
        FormalAtomDto::Sym { name } => FAtom::from_symbol(ctx, name),
        FormalAtomDto::DeltaP { prime, inner } => Ok(atom_from_dto(field, ctx, inner)?
            .wrap_delta(&poly_from_dto(field, prime))),
        FormalAtomDto::Up { prime, inner } => {
            Ok(atom_from_dto(field, ctx, inner)?.wrap_up(&poly_from_dto(field, prime)))
        }
        FormalAtomDto::Tp { prime, inner } => {
            Ok(atom_from_dto(field, ctx, inner)?.wrap_tp(&poly_from_dto(field, prime)))
        }
        FormalAtomDto::Dn { order, inner } => {
            Ok(atom_from_dto(field, ctx, inner)?.wrap_dn(*order))
        }
    }
}

pub fn formal_to_doc(
    ctx: &FormalCtx,
    e: &EExpansion<FormalCombo>,
) -> Document {
    Document::new(Body::FormalEExpansion {
        field: FieldDto::of(e.field()),
        weight: e.weight(),
        typ: e.typ(),
        symbols: ctx
            .declarations()
            .map(|(name, d)| SymbolDeclDto {
                name: name.clone(),
                weight: d.weight,
                typ: d.typ,
                eigen: d
                    .eigen
                    .iter()
                    .map(|(p, k, v)| EigenDto {
                        prime: poly_to_dto(p),
                        kind: match k {
                            HeckeKind::T => "T".into(),
                            HeckeKind::U => "U".into(),
                        },
                        value: scalar_to_dto(v),
                    })
                    .collect(),
            })
            .collect(),
        coeffs: e.coeffs().iter().map(formal_combo_to_dto).collect(),
    })
}

pub fn decl_of(d: &SymDecl) -> (i64, i64) {
    (d.weight, d.typ)
}

pub fn decomposition_to_doc(dec: &crate::structure::DerDecomposition, field: &'static FqField) -> Document {
    Document::new(Body::DerDecomposition {
        field: FieldDto::of(field),
        weight: dec.weight(),
        typ: dec.typ(),
        parts: dec.parts.iter().map(graded_to_dto).collect(),
        alpha: dec.alpha.as_ref().map(scalar_to_dto),
    })
}
