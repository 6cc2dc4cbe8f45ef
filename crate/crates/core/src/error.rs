use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("party count must be at least 2, got {0}")]
    InvalidPartyCount(u32),
    #[error("only 2 settings per party are supported, got {0}")]
    UnsupportedSettings(usize),
    #[error("only correlators up to order 2 are supported, got {0}")]
    UnsupportedOrder(usize),
    #[error("hierarchy level must be 1 or 2 (0 for the basis only), got {0}")]
    UnsupportedLevel(u32),
    #[error("strategy counts must be finite and non-negative")]
    NegativeCounts,
    #[error("strategy counts sum to {sum}, expected {parties}")]
    CountsSum { sum: f64, parties: u32 },
    #[error("{vertices} vertices exceed the enumeration budget of {budget}")]
    BudgetExceeded { vertices: u128, budget: u128 },
    #[error("point constraints contradict each other")]
    ContradictoryConstraints,
    #[error("at least one constraint is required")]
    NoConstraints,
    #[error("direction values are all zero")]
    ZeroDirection,
    #[error("functionals are linearly dependent")]
    DegenerateFunctionals,
    #[error("between 1 and 5 functionals are required, got {0}")]
    FunctionalCount(usize),
    #[error("linear program stalled: {0}")]
    LpStalled(String),
    #[error("solver outcome carries no dual multipliers")]
    MissingDuals,
    #[error("malformed SDP problem: {0}")]
    MalformedProblem(String),
}
