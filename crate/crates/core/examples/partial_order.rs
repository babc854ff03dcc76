//! Commuting operations may be delivered in different orders at different
//! replicas; conflicting ones never are, and the states still agree.

use linsmr::sim::{
    run_smr, ClientRequest, ConflictRelation, FailureModel, Ordering, ReplicatedObject, SimConfig,
    Workload,
};
use linsmr::specs::spec_bundle;
use linsmr::value::Value;

fn main() -> linsmr::error::Result<()> {
    let counter = ReplicatedObject::Atomic(spec_bundle("counter")?.sequential);
    let workload = Workload::new(vec![
        ClientRequest::new(0, 0, "inc", Value::Nil),
        ClientRequest::new(1, 1, "inc", Value::Nil),
        ClientRequest::new(2, 2, "inc", Value::Nil),
        ClientRequest::new(3, 0, "get", Value::Nil),
    ]);
    let ordering = Ordering::PartialOrder(ConflictRelation::commuting([("inc", "inc")]));
    for seed in 0..3 {
        let cfg = SimConfig::new(3, 1, FailureModel::Crash).seed(seed).ordering(ordering.clone());
        let out = run_smr(&cfg, &workload, &counter)?;
        println!("seed {seed}");
        for (r, order) in out.delivery_order.iter().enumerate() {
            let ids: Vec<u64> = order.iter().map(|d| d.id).collect();
            println!("  replica {r}: {ids:?} -> {:?}", out.replica_states[r]);
        }
    }
    Ok(())
}
