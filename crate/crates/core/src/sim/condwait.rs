//! Producer/consumer requests synchronised by a condition variable.

use std::sync::Arc;

use crate::error::Result;

use super::config::{FailureModel, SchedulerKind, SimConfig};
use super::machine::ReplicatedObject;
use super::program::compile_object;
use super::smr::{run_smr, ClientRequest, SimOutput, Workload};

pub const CONDWAIT_OBJECT: &str = "object mailbox {
  var item = 0;
  var ready = 0;
  lock m;
  cond c;
  op consume {
    lock(m);
    wait(c, m, ready);
    read(item, t);
    unlock(m);
    return(t);
  }
  op produce {
    lock(m);
    write(item, arg);
    write(ready, 1);
    signal(c);
    unlock(m);
    return(ok);
  }
}
";

/// Value the producer hands over.
pub const PRODUCED: i64 = 42;

pub fn condwait_object() -> Result<ReplicatedObject> {
    Ok(ReplicatedObject::Program(Arc::new(compile_object(CONDWAIT_OBJECT)?)))
}

/// `consume` (request 0, client 0) and `produce` (request 1, client 1), one
/// tick apart; `producer_first` swaps the issue ticks.
pub fn condwait_workload(producer_first: bool) -> Workload {
    let (c, p) = if producer_first { (1, 0) } else { (0, 1) };
    Workload::new(vec![
        ClientRequest::new(0, 0, "consume", crate::value::Value::Nil).at(c),
        ClientRequest::new(1, 1, "produce", PRODUCED).at(p),
    ])
}

pub fn run_conditional_wait_with(
    scheduler: SchedulerKind,
    producer_first: bool,
    seed: u64,
) -> Result<SimOutput> {
    let cfg = SimConfig::new(3, 1, FailureModel::Crash).scheduler(scheduler).seed(seed);
    run_smr(&cfg, &condwait_workload(producer_first), &condwait_object()?)
}

/// Consumer first under the lock-level scheduler.
pub fn run_conditional_wait_scenario(seed: u64) -> Result<SimOutput> {
    run_conditional_wait_with(SchedulerKind::LockLevel, false, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::history::OpId;
    use crate::value::Value;

    #[test]
    fn lock_level_completes_both() {
        let out = run_conditional_wait_scenario(0).unwrap();
        let h = &out.client_history;
        assert!(h.is_complete());
        assert_eq!(h.op(OpId(0)).unwrap().ret, Some(Value::Int(PRODUCED)));
        let consume = out.inner_histories[0].op(OpId(0)).unwrap();
        let produce = out.inner_histories[0].op(OpId(1)).unwrap();
        assert!(consume.invocation_time < produce.invocation_time);
        assert!(consume.response_time >= produce.response_time);
    }

    #[test]
    fn sequential_deadlocks() {
        let r = run_conditional_wait_with(SchedulerKind::Sequential, false, 0);
        assert!(matches!(r, Err(Error::DeadlockDetected { .. })));
    }

    #[test]
    fn producer_first_never_waits() {
        for s in [SchedulerKind::Sequential, SchedulerKind::LockLevel] {
            let out = run_conditional_wait_with(s, true, 0).unwrap();
            assert_eq!(out.client_history.op(OpId(0)).unwrap().ret, Some(Value::Int(PRODUCED)));
        }
    }
}
