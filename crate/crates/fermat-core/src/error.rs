use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("field size {ell}^{f} exceeds the supported bound 2^40")]
    FieldTooLarge { ell: u64, f: u32 },
    #[error("no irreducible polynomial of degree {f} found over F_{ell}")]
    NoIrreducibleFound { ell: u64, f: u32 },
    #[error("character order {r} does not divide q - 1 = {q_minus_1}")]
    OrderDoesNotDivide { r: u32, q_minus_1: u64 },
    #[error("character order must be at least 2, got {0}")]
    InvalidOrder(u32),
    #[error("characters live on different fields")]
    FieldMismatch,
    #[error("character orders differ: {0} vs {1}")]
    OrderMismatch(u32, u32),
    #[error("the trivial character has no Gauss sum of modulus sqrt(q)")]
    TrivialCharacter,
    #[error("Gauss sums over extension fields are not supported")]
    ExtensionFieldUnsupported,
    #[error("cyclotomic order {0} is not supported here")]
    UnsupportedOrder(u32),
    #[error("{0} is not a unit modulo the cyclotomic order")]
    NotAUnit(u32),
    #[error("element is divisible by 1 - omega")]
    NotCoprimeToLambda,
    #[error("units have no primary associate")]
    UnitInput,
    #[error("no element of norm {0} found within the search bound")]
    SearchExhausted(u64),
    #[error("arguments are not coprime")]
    NotCoprime,
    #[error("the place lies above the character order")]
    RamifiedPlace,
    #[error("ideal support meets the exceptional set")]
    NotInIS,
    #[error("ray class enumeration exceeded its bound")]
    ContextTooLarge,
    #[error("characteristic {0} divides p * delta")]
    BadReduction(u64),
    #[error("zeta mismatch at extension degree {k}: expected {expected}, counted {counted}")]
    Mismatch { k: u32, expected: i128, counted: i128 },
    #[error("{0} must be handled by the torsion bound M")]
    RoutedToTorsionBound(u64),
    #[error("no witness prime below {0}")]
    NoWitnessBelow(u64),
    #[error("truncation {got} is below the required {need}")]
    TruncationTooSmall { got: usize, need: usize },
    #[error("conductor candidates {0} and {1} fit equally well")]
    AmbiguousConductor(u64, u64),
    #[error("Gauss sums for non-principal moduli are not supported")]
    NonPrincipalModulus,
    #[error("the twist meets the conductor of psi")]
    RamifiedOverlap,
    #[error("only the trivial twist character rho = 1 is supported")]
    UnsupportedRho,
    #[error("parameter {0} exceeds the runtime budget")]
    BudgetExceeded(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
