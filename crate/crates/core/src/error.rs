use thiserror::Error;

/// Errors raised while building or querying taxonomies, profiles and models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid category name {0:?}")]
    InvalidCategoryName(String),

    #[error("duplicate category {0:?}")]
    DuplicateCategory(String),

    #[error("unknown category {0:?}")]
    UnknownCategory(String),

    #[error("unknown instance {0:?}")]
    UnknownInstance(String),

    #[error("taxonomy has multiple roots: {0:?}")]
    MultipleRoots(Vec<String>),

    #[error("taxonomy has no root")]
    NoRoot,

    #[error("declared root {declared:?} has a parent or is not the unique root (found {found:?})")]
    RootMismatch { declared: String, found: String },

    #[error("cycle detected through {0:?}")]
    CycleDetected(String),

    #[error("self-loop on {0:?}")]
    SelfLoop(String),

    #[error("duplicate edge {child:?} -> {parent:?}")]
    DuplicateEdge { child: String, parent: String },

    #[error("category {0:?} is not reachable from the root")]
    Unreachable(String),

    #[error("edge {child:?} -> {parent:?} has no conditional probability")]
    MissingEdgeProbability { child: String, parent: String },

    #[error("no classifier profile for {0:?}")]
    MissingGamma(String),

    #[error("the root {0:?} always uses the neutral classifier and cannot carry a profile")]
    RootProfileForbidden(String),

    #[error("{location}: value {value} out of range ({reason})")]
    OutOfRangeProbability {
        location: String,
        value: f64,
        reason: String,
    },

    #[error("{0:?} is not a rooted well-formed string of the taxonomy")]
    NotAPipeline(String),

    #[error("syntax error at {location}: {message}")]
    SyntaxError { location: String, message: String },

    #[error("pipeline length {len} exceeds the enumeration limit {limit}")]
    TooLongForEnumeration { len: usize, limit: usize },

    #[error("infeasible sweep target: {0}")]
    InfeasibleTarget(String),

    #[error("degenerate precision bound: accumulated negative leakage is zero")]
    DegenerateBound,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
