//! Open systems of communicating finite-state machines: projection from
//! global types, interface compatibility, gateway composition and bounded
//! safety checking.

pub mod automaton;
pub mod cfsm;
pub mod compose;
pub mod dot;
pub mod fixtures;
pub mod format;
pub mod gateway;
pub mod globaltype;
pub mod gtir;
pub mod lang;
pub mod report;
pub mod safety;
pub mod syntax;
pub mod system;

pub use cfsm::{Action, Cfsm, Channel, Direction, Message, Role, StateId, StateKind, Transition};
pub use compose::{check_compatibility, compose, CompatibilityFailure, CompatibilityVerdict};
pub use gateway::gateway;
pub use globaltype::{project, GlobalType};
pub use gtir::{project_gtir, semantics, validate_gtir, GtirExpr};
pub use safety::{check_safety, Outcome, SafetyReport, Verdict};
pub use system::{explore, Bounds, CommunicatingSystem, Configuration};
