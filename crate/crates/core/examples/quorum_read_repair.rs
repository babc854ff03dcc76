//! A majority-quorum register with a write still in progress. Without read
//! repair a later read can return an older value than an earlier read.

use linsmr::checkers::{check_linearizable, SearchBudget};
use linsmr::sim::quorum::{stale_read_plan, stale_read_workload};
use linsmr::sim::{enumerate_delay_plans, run_quorum_register};
use linsmr::specs::RegisterSpec;
use linsmr::trace::to_trace_string;

fn main() -> linsmr::error::Result<()> {
    let budget = SearchBudget::default();
    let workload = stale_read_workload();
    for repair in [false, true] {
        let h = run_quorum_register(repair, &stale_read_plan(), &workload)?;
        let v = check_linearizable(&h, &RegisterSpec, &budget)?;
        println!("read repair {repair}: {v}");
        for op in h.operations() {
            println!("  {} {:?} -> {:?} [{}, {:?}]", op.op_name, op.arg, op.ret, op.invocation_time, op.response_time);
        }
        if !v.accepted {
            print!("{}", to_trace_string(&h));
        }
    }

    let plans = enumerate_delay_plans();
    let mut stale = 0;
    for plan in &plans {
        let h = run_quorum_register(false, plan, &workload)?;
        if !check_linearizable(&h, &RegisterSpec, &budget)?.accepted {
            stale += 1;
        }
    }
    println!("{stale} of {} delay plans give a stale read without repair", plans.len());
    Ok(())
}
