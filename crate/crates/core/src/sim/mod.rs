//! Deterministic simulation of replicated objects and the protocol
//! scenarios built on it.

pub mod condwait;
pub mod config;
pub mod machine;
pub mod nested;
pub mod program;
pub mod quorum;
pub mod scenario;
pub mod smr;

pub use condwait::{run_conditional_wait_scenario, run_conditional_wait_with};
pub use config::{
    ByzantineBehavior, ConflictRelation, FailureModel, Fault, FaultKind, Ordering, SchedulerKind,
    SimConfig,
};
pub use machine::{Machine, ReplicatedObject, SchedulerState, ThreadStatus};
pub use nested::{run_nested_scenario, JPlacement, NestedOutput};
pub use program::{compile_object, compile_program, ObjectDef, Program};
pub use quorum::{enumerate_delay_plans, run_quorum_register, DelayPlan};
pub use scenario::ScenarioFile;
pub use smr::{
    byzantine_client_duplicate_ids, run_smr, ClientRequest, DeliveredRequest, SimOutput, Workload,
};
