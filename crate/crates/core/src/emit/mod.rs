//! Output formats: UCQ text, folded Datalog, SQL, and metric reports.

mod datalog;
mod sql;
mod stats;

pub use datalog::to_datalog;
pub use sql::{to_sql, SchemaMapping, TableSchema};
pub use stats::{report, report_kv};

use std::str::FromStr;

use crate::model::ConjunctiveQuery;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Ucq,
    Datalog,
    Sql,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ucq" => Ok(OutputFormat::Ucq),
            "datalog" => Ok(OutputFormat::Datalog),
            "sql" => Ok(OutputFormat::Sql),
            _ => Err(format!("unknown output format `{s}` (expected ucq, datalog or sql)")),
        }
    }
}

/// One query per line.
pub fn to_ucq_text(ucq: &[ConjunctiveQuery]) -> String {
    ucq.iter().map(|q| format!("{q}\n")).collect()
}
