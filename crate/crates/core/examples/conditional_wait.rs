//! A consumer waits on a condition that a later producer signals. The
//! lock-level scheduler lets the producer in; running requests one at a
//! time cannot.

use linsmr::error::Error;
use linsmr::sim::{run_conditional_wait_with, SchedulerKind};

fn main() -> linsmr::error::Result<()> {
    let out = run_conditional_wait_with(SchedulerKind::LockLevel, false, 0)?;
    for op in out.client_history.operations() {
        println!("lock-level: {} -> {:?} at {:?}", op.op_name, op.ret, op.response_time);
    }
    match run_conditional_wait_with(SchedulerKind::Sequential, false, 0) {
        Err(Error::DeadlockDetected { replica, blocked }) => {
            println!("sequential: replica {replica} deadlocked with {blocked:?} blocked")
        }
        other => println!("sequential: unexpected {other:?}"),
    }
    Ok(())
}
