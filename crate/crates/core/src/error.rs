use thiserror::Error;

use crate::history::{EventId, OpId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed history at event {event_id}: {reason}")]
    MalformedHistory { event_id: EventId, reason: String },

    #[error("unknown operation {0}")]
    UnknownOp(OpId),

    #[error("timeline extension makes operations {earlier} and {later} of one client overlap")]
    ClientOverlapViolation { earlier: OpId, later: OpId },

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("search budget exhausted after {nodes} nodes")]
    BudgetExhausted { nodes: u64 },

    #[error("unsupported program `{0}`: nested calls have no effect-step decomposition")]
    UnsupportedProgram(String),

    #[error("unknown operation `{op}` for object `{object}`")]
    UndefinedOperation { object: String, op: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unbalanced locks in `{program}`: {message}")]
    UnbalancedLocks { program: String, message: String },

    #[error("`{program}` waits on `{cond}` without holding lock `{lock}`")]
    WaitWithoutLock { program: String, cond: String, lock: String },

    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),

    #[error("fault plan has {faulty} faulty replicas but f = {f}; run is outside the failure model")]
    OutOfSpecRun { faulty: usize, f: usize },

    #[error("deadlock detected on replica {replica}: blocked requests {blocked:?}")]
    DeadlockDetected { replica: usize, blocked: Vec<OpId> },

    #[error("replica {replica} responded twice to request {request}")]
    DuplicateReplicaResponse { request: OpId, replica: usize },

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
