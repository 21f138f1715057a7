//! Plain-text scenario files: one directive per line, `#` starts a comment.
//!
//! ```text
//! agent alice
//! collection staff
//! item memo type=TextDocument creator=alice
//! member staff memo
//! permit group:staff collection:staff "view TextDocument.body" allow
//! check alice memo "view TextDocument.body"
//! ```
//!
//! Mutations run in file order against a fresh world. Queries (`check`,
//! `filter`, `explain`, `lint`) each produce one [`Output`]. Mutations with
//! `as=AGENT` go through the same authorization checks a user would face;
//! the rest run with system authority.

mod exec;
mod syntax;

pub use exec::{execute, format_decision, run_scenario, trace_line, ExecError, Execution, Output, ScenarioError};
pub use syntax::{parse_scenario, Creation, Directive, DirectiveKind, ObjectRef, ParseError, SubjectRef};
