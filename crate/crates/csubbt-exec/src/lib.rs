//! Conditional behavior subtrees: compile combined plan actions into
//! self-adjusting subtrees of atomic actions, execute them tick-by-tick
//! against the simulated world, verify deferred constraints from live
//! observations, backtrack through resampling, and emit a structured
//! anomaly report once a constraint's sampling space is exhausted.

pub mod exec;
pub mod node;
pub mod report;
pub mod template;
pub mod xml;

pub use exec::{CSubBT, ExecCtx};
pub use node::{AtomicKind, BTNode, BTStatus, ConditionSpec, SamplerSpec, SlotSource};
pub use report::{emit_anomaly, AnomalyReport, ReportConstraint};
pub use template::{compile, CompileError};
pub use xml::{deserialize_tree, serialize_tree, XmlError};
