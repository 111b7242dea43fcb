//! Front end for `bbgky-core`: the `.bbgky` system-description language,
//! JSON output, a dense-matrix oracle that checks derived equations
//! numerically, and the command-line driver.

pub mod cli;
pub mod dense;
pub mod dsl;
pub mod error;
pub mod json;
pub mod memo;
pub mod oracle;

pub use dsl::{parse_labels, parse_spec, render_spec, SpecFile};
pub use error::{AppError, ParseError};
pub use memo::SharedMemo;
pub use oracle::{check_equation, ConcreteSystem, EvaluatedEquation, Evaluator, OracleConfig};
