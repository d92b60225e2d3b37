use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid field spec: {0}")]
    InvalidSpec(String),
    #[error("modulus rejected: {0}")]
    BadModulus(String),
    #[error("field {p}^{n} does not fit the 64-bit element encoding")]
    FieldTooLarge { p: u64, n: u64 },
    #[error("factorization budget exhausted on {0}")]
    FactorBudget(String),
    #[error("inversion of zero")]
    ZeroInverse,
    #[error("zero has no multiplicative order or discrete logarithm")]
    ZeroElement,
    #[error("{d} does not divide {m}")]
    NotADivisor { d: u32, m: u32 },
    #[error("element is not in the subfield of degree {0}")]
    NotInSubfield(u32),
    #[error("discrete-log table unavailable ({size} elements, cap {cap})")]
    NoDlogTable { size: u64, cap: u64 },
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("invalid polynomial: {0}")]
    InvalidPoly(String),
    #[error("divisor count {count} exceeds cap {cap}")]
    DivisorCap { count: u128, cap: u128 },
    #[error("invalid divisor tuple: {0}")]
    InvalidTuple(String),
    #[error("trace prescription is not admissible")]
    NotAdmissible,
    #[error("requires gcd(m, p) = 1, got m = {m}, p = {p}")]
    NotCoprime { m: u32, p: u64 },
    #[error("census cap exceeded: {size} elements, cap {cap}")]
    CensusCap { size: u64, cap: u64 },
    #[error("audit failure: {0}")]
    AuditFailure(String),
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
    #[error("sieve budget exceeded: 2^{nu} > 2^{max_nu}")]
    SieveBudget { nu: u32, max_nu: u32 },
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
