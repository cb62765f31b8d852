//! Line-oriented text formats.
//!
//! Model documents start with `ropas-model v1`, traces with
//! `ropas-trace v1`. Both headers may be omitted on input and are always
//! written. `#` starts a comment that runs to the end of the line.
//!
//! ```text
//! ropas-model v1
//! [variables]
//! criterion rA bool requirement
//! criterion U int[0..200] utility
//! parameter rAF1 bool default=0
//! monitored rAF1_ok bool initial=1
//! change weather enum{dry,wet} initial=dry
//! [monitoring]
//! rAF1_ok {0,1}
//! [depends]
//! fA: rA = formula rAF1 & rAF1_ok | rAF2 & rAF2_ok
//! fU: U = sum 1*Var1 1*Var2 const 0
//! fT: ok = step Var1 58
//! fX: out = table a b ; 0 0 => 1 ; 0 1 => 2
//! minA: linear 1*rA >= 1
//! oneA: card rAF1 rAF2 = 1
//! x1: nand rAF1 rBF2
//! [decision]
//! rule U
//! set rAF1 rAF2
//! [triggers]
//! T1: Var1 in [58..100]
//! [evolution]
//! forbid_transition rAF4=1 -> rAF5=1
//! max_changes 2
//! forbid_value rAF3=1 unless rAF1_ok=0
//! [goalgraph]
//! r AmbArrive
//! s Identify Locate
//! mandatory AmbArrive
//! AmbArrive <- Identify & Locate
//! Identify >< Locate
//! ```
//!
//! Decision models use `[attributes]`, `[alternatives]`, `[utility]` and
//! `[transform]` instead; see [`parse_decision_model`].

mod document;
mod report;
mod trace;

use std::fmt;

use thiserror::Error;

pub use document::{
    parse_decision_model, parse_document, parse_goal_graph, parse_model, serialize_decision_model,
    serialize_document, serialize_goal_graph, serialize_model, Document, Scenario,
};
pub use report::{write_report, ReportFormat};
pub use trace::{parse_trace, serialize_trace};

pub const MODEL_HEADER: &str = "ropas-model v1";
pub const TRACE_HEADER: &str = "ropas-trace v1";
pub const REPORT_HEADER: &str = "ropas-report v1";

/// A located problem in a document. Line 0 means "the document as a whole".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

/// Every error found in one document, in line order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseErrors(pub Vec<ParseError>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Strip a trailing comment and surrounding whitespace.
pub(crate) fn content(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}
