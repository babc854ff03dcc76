use linsmr::sim::{
    byzantine_client_duplicate_ids, run_smr, ByzantineBehavior, ClientRequest, FailureModel,
    FaultKind, ReplicatedObject, SimConfig, Workload,
};
use linsmr::specs::spec_bundle;
use linsmr::value::Value;

fn main() -> linsmr::error::Result<()> {
    let counter = ReplicatedObject::Atomic(spec_bundle("counter")?.sequential);
    let workload = Workload::new(vec![
        ClientRequest::new(0, 0, "inc", Value::Nil),
        ClientRequest::new(1, 1, "inc", Value::Nil),
        ClientRequest::new(2, 0, "get", Value::Nil),
    ]);
    for behavior in ByzantineBehavior::ALL {
        let cfg = SimConfig::new(4, 1, FailureModel::Byzantine)
            .seed(3)
            .fault(3, FaultKind::Byzantine(behavior));
        let out = run_smr(&cfg, &workload, &counter)?;
        println!("{behavior:?}");
        for op in out.client_history.operations() {
            let replies = &out.responses[&op.op_id.0];
            println!("  {} decided {:?}; replies {:?}", op.op_name, op.ret, replies);
        }
    }

    // the same id sent twice is executed once
    let cfg = SimConfig::new(4, 1, FailureModel::Byzantine);
    let dup = Workload::new(vec![
        ClientRequest::new(0, 0, "inc", Value::Nil),
        ClientRequest::new(0, 0, "inc", Value::Nil),
        ClientRequest::new(1, 1, "get", Value::Nil).at(6),
    ]);
    let out = byzantine_client_duplicate_ids(&cfg, &dup, &counter)?;
    println!("after a reused id: states {:?}", out.replica_states);
    Ok(())
}
