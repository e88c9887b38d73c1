//! Error type shared by the whole crate.

use std::fmt;

use crate::binom::NvhReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix with zero determinant was passed to an operator that needs
    /// a group element.
    DegenerateMatrix,
    /// A Hecke prime argument is not monic irreducible.
    NotPrime(String),
    /// A representative set does not match the double coset it claims to
    /// represent.
    BadRepSet(String),
    /// The weight/depth pair is outside the range where the structure
    /// theorem applies (k < 2*depth).
    OutOfRangeWeight { weight: i64, depth: usize },
    /// The non-vanishing hypothesis fails; carries the full report.
    NvhViolation(NvhReport),
    /// A series computation ran out of exact precision; carries the
    /// precision that survives.
    PrecisionLoss { available: i64 },
    /// 1/i! does not exist in characteristic p.
    CharacteristicObstruction { order: usize, p: u64 },
    /// The requested operation is not available on this function backend.
    UnsupportedBackend(String),
    /// Kernel reconstruction: a coefficient combination is not in the image
    /// of the degeneracy map.
    NotInKernelImage(String),
    /// lift_eigen was called with eigenvalue zero.
    ZeroEigenvalue,
    /// A coefficient index is outside 0..=depth.
    IndexOutOfRange { index: usize, depth: usize },
    /// Weight or type tags of two operands do not match.
    BigradeMismatch(String),
    /// Bad configuration (unknown q, reducible modulus, ...).
    Config(String),
    /// Malformed textual or JSON input.
    Parse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DegenerateMatrix => write!(f, "matrix has zero determinant"),
            Error::NotPrime(p) => write!(f, "{p} is not monic irreducible"),
            Error::BadRepSet(msg) => write!(f, "bad representative set: {msg}"),
            Error::OutOfRangeWeight { weight, depth } => write!(
                f,
                "weight {weight} < 2*depth = {}: the structure dichotomy does not apply",
                2 * *depth as i64
            ),
            Error::NvhViolation(report) => {
                write!(f, "non-vanishing hypothesis fails: {report}")
            }
            Error::PrecisionLoss { available } => {
                write!(f, "series precision exhausted (surviving precision {available})")
            }
            Error::CharacteristicObstruction { order, p } => write!(
                f,
                "{order}! vanishes mod {p}; use the divided-power form of the derivative"
            ),
            Error::UnsupportedBackend(msg) => write!(f, "unsupported backend: {msg}"),
            Error::NotInKernelImage(msg) => {
                write!(f, "not in the image of the degeneracy map: {msg}")
            }
            Error::ZeroEigenvalue => write!(f, "eigenvalue must be nonzero"),
            Error::IndexOutOfRange { index, depth } => {
                write!(f, "coefficient index {index} out of range 0..={depth}")
            }
            Error::BigradeMismatch(msg) => write!(f, "weight/type mismatch: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
