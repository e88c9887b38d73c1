//! Exact computer algebra for Drinfeld quasi-modular forms over A = Fq\[T\].
//!
//! The crate is organized as a tower:
//!
//! - [`fq`], [`fqpoly`], [`ratfunc`]: exact arithmetic for Fq (q = p^r),
//!   Fq\[T\] and the rational function field K = Fq(T);
//! - [`scalar`]: the coefficient ring K[pi, pi^-1], where `pi` is a formal
//!   transcendental standing for the Carlitz period;
//! - [`zrat`]: rational functions of the half-plane variable z with
//!   coefficients in the scalar ring;
//! - [`matrix`]: 2x2 matrices over K, congruence-group membership, cocycles
//!   and Hermite reduction;
//! - [`binom`]: characteristic-p binomial arithmetic and the non-vanishing
//!   hypothesis (NVH) predicate;
//! - [`symfn`]: the symbolic function backends — the level-1 graded ring
//!   generated by g, h, E, and the richer expression algebra used to
//!   evaluate slash/double-slash operators exactly;
//! - [`assoc`], [`eexp`]: associated polynomials, the double-slash operator,
//!   E-expansions and the Phi/Psi change-of-basis matrices;
//! - [`hyper`]: hyperderivatives on rational functions, associated
//!   polynomials and u-series;
//! - [`series`]: the independent analytic oracle — truncated u-expansions of
//!   E, Eisenstein series, g, h, Delta via the Carlitz module;
//! - [`structure`]: decomposition of quasi-modular forms into
//!   hyperderivatives of modular forms, and the reverse map;
//! - [`hecke`]: well-posed Hecke operators, explicit Gamma_0 representatives,
//!   U_p/T_p on E-expansions, degeneracy maps, p-stabilization, kernels and
//!   eigenforms;
//! - [`json`]: the self-describing JSON schema for all public objects;
//! - [`verify`]: the deterministic property-suite runner backing `qmf verify`.

pub mod assoc;
pub mod binom;
pub mod eexp;
pub mod symfn;
pub mod error;
pub mod fq;
pub mod verify;
pub mod json;
pub mod hecke;
pub mod structure;
pub mod hyper;
pub mod fqpoly;
pub mod matrix;
pub mod ratfunc;
pub mod sample;
pub mod scalar;
pub mod series;
pub mod zrat;

pub use error::{Error, Result};
pub use fq::{FqElem, FqField};
pub use fqpoly::FqPoly;
pub use ratfunc::RatFunc;
pub use scalar::CoeffScalar;
pub use zrat::ZRat;
