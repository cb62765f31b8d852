//! Requirements optimisation toolkit.
//!
//! * [`model`]: Problem/Solution Space data model, Depend evaluation, feasibility
//!   and enumeration of Specifications.
//! * [`entailment`]: Horn-style goal-graph reasoning (DRP, RP2, RP3).
//! * [`rop`]: exact Requirements Optimisation Problem solving and the RDRP encoding.
//! * [`decision`]: expected-utility evaluation and ranking of alternatives.
//! * [`runtime`]: adaptive-system run-time simulation against event traces.
//! * [`io`]: textual model, trace and report formats.

pub mod model;
pub mod entailment;
pub mod rop;
pub mod decision;
pub mod runtime;
pub mod io;
