use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{line}:{column}: predicate `{predicate}` used with arity {found}, previously {expected}")]
    ArityConflict {
        predicate: String,
        expected: usize,
        found: usize,
        line: usize,
        column: usize,
    },

    #[error("{line}:{column}: functional dependency on `{predicate}` refers to attribute {index}, arity is {arity}")]
    FdIndexOutOfRange {
        predicate: String,
        index: usize,
        arity: usize,
        line: usize,
        column: usize,
    },

    #[error("unsafe query `{query}`: distinguished variable {variable} does not occur in the body")]
    UnsafeQuery { query: String, variable: String },

    #[error("expected exactly one query, found {0}")]
    QueryCount(usize),

    #[error("predicate `{0}` has no table in the schema mapping")]
    UnmappedPredicate(String),

    #[error("table for `{predicate}` declares {columns} columns, predicate arity is {arity}")]
    SchemaArity {
        predicate: String,
        columns: usize,
        arity: usize,
    },

    #[error("rewriting budget of {0} explored queries exhausted")]
    BudgetExhausted(usize),

    #[error("termination cannot be guaranteed: the rule set is neither linear, multi-linear nor sticky")]
    NoTerminationGuarantee,

    #[error("query elimination requires linear rules")]
    NotLinear,

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
