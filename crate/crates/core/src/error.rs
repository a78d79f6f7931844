use thiserror::Error;

use crate::weights::Weight;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("cannot mix integral and half-integral weights")]
    SpinMismatch,
    #[error("weight {0} is not dominant")]
    NotDominant(Weight),
    #[error("weight {0} is not integral")]
    NotIntegral(Weight),
    #[error("{lower} is not below {upper} in the Bruhat order")]
    NotBruhatOrdered { lower: Weight, upper: Weight },
    #[error("twistor endpoints {target} <- {from} are not at distance 1")]
    InvalidTwistor { target: Weight, from: Weight },
    #[error("{lambda} lies in the box of {mu}; no vanishing claim")]
    InsideBox { mu: Weight, lambda: Weight },
    #[error("dimension m = {0} must be odd and at least 3")]
    InvalidDimension(usize),
    #[error("variable index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("image leaves the codomain span: {0}")]
    SpanViolation(String),
    #[error("resource cap exceeded: {what} needs {needed}, cap is {cap}")]
    ResourceCap { what: String, needed: usize, cap: usize },
    #[error("Casimir eigenvalue collision between {0} and {1}")]
    EigenvalueCollision(Weight, Weight),
    #[error("vanishing denominator in explicit operator for {0}")]
    VanishingDenominator(Weight),
    #[error("unsupported shape {0}: explicit realizations exist for (k) and (k,l) only")]
    UnsupportedShape(Weight),
    #[error("linear system is inconsistent: {0}")]
    Inconsistent(String),
    #[error("x-degree {degree} too small, need at least {needed}")]
    DegreeTooSmall { degree: usize, needed: usize },
    #[error("power must exceed the first entry of mu: p = {power}, mu_1 = {first}")]
    PowerTooSmall { power: usize, first: i64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
