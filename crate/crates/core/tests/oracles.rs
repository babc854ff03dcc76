//! Expected values recomputed by hand-written models that share no code
//! with the checkers or the simulator.

use std::collections::BTreeSet;
use std::sync::Arc;

use linsmr::checkers::{check_level, check_linearizable, check_linearizable_naive, SearchBudget};
use linsmr::history::HistoryBuilder;
use linsmr::sim::{run_smr, ClientRequest, FailureModel, ReplicatedObject, SchedulerKind, SimConfig, Workload};
use linsmr::specs::{spec_bundle, ProductSpec, RegisterSpec, SequentialSpec, LISTING1_OBJECT};
use linsmr::suites::interval_orders;
use linsmr::value::{State, Value};
use linsmr::verdict::Level;

/// Every value `E` can return when `D`'s two critical sections and `E`'s
/// single one interleave in any order, starting from `s = 1`.
fn reachable_e_values() -> BTreeSet<i64> {
    let mut out = BTreeSet::new();
    // position of E's section among D's: before, between, after
    for slot in 0..3 {
        let mut s = 1i64;
        let mut t = 0;
        let mut e = None;
        for step in 0..3 {
            let d_step = if step < slot { step } else if step == slot { 99 } else { step - 1 };
            match d_step {
                99 => e = Some(s),
                0 => {
                    t = s + 1;
                    s = t;
                }
                _ => s = t * 2,
            }
        }
        out.insert(e.unwrap());
    }
    out
}

fn d_and_e(e: i64) -> linsmr::history::History {
    HistoryBuilder::new("lock_object")
        .op("D", Value::Nil, Value::ok(), 0, 10)
        .op("E", Value::Nil, Value::Int(e), 1, 9)
        .build()
        .unwrap()
}

#[test]
fn lock_object_values_match_hand_model() {
    assert_eq!(reachable_e_values(), BTreeSet::from([1, 2, 4]));
    let bundle = spec_bundle("lock-object").unwrap();
    for e in 0..10 {
        let v = check_level(&d_and_e(e), &bundle, Level::Mp, &SearchBudget::default()).unwrap();
        assert_eq!(v.accepted, reachable_e_values().contains(&e), "E = {e}");
        let lin = check_level(&d_and_e(e), &bundle, Level::Lin, &SearchBudget::default()).unwrap();
        assert_eq!(lin.accepted, e == 1 || e == 4, "E = {e}");
    }
}

#[test]
fn sequential_d_then_e_returns_four_everywhere() {
    let expected = (1 + 1) * 2;
    let object = ReplicatedObject::Program(Arc::new(linsmr::sim::compile_object(LISTING1_OBJECT).unwrap()));
    let w = Workload::new(vec![
        ClientRequest::new(0, 0, "D", Value::Nil),
        ClientRequest::new(1, 1, "E", Value::Nil).after(0),
    ]);
    let cfg = SimConfig::new(3, 1, FailureModel::Crash).scheduler(SchedulerKind::Sequential);
    let out = run_smr(&cfg, &w, &object).unwrap();
    assert!(out.replica_states.iter().all(|s| *s == State::single(expected)));
    assert_eq!(out.client_history.operations()[1].ret, Some(Value::Int(expected)));
}

/// Composite lin-acceptance against the naive all-orders oracle on every
/// two-object register history of up to four operations.
#[test]
fn locality_against_naive_oracle() {
    let product = ProductSpec::new(vec![
        ("x".into(), Arc::new(RegisterSpec) as Arc<dyn SequentialSpec>),
        ("y".into(), Arc::new(RegisterSpec) as Arc<dyn SequentialSpec>),
    ]);
    let labels = [("write", Value::Int(1), Value::ok()), ("read", Value::Nil, Value::Int(0)), ("read", Value::Nil, Value::Int(1))];
    let mut checked = 0;
    for n in 1..=4 {
        for ivs in interval_orders(n) {
            for mut code in 0..6usize.pow(n as u32) {
                let mut records = Vec::new();
                for (i, &(l, r)) in ivs.iter().enumerate() {
                    let c = code % 6;
                    code /= 6;
                    let (name, arg, ret) = labels[c % 3].clone();
                    records.push(linsmr::history::OpRecord {
                        op_id: linsmr::history::OpId(i as u64),
                        client: linsmr::history::ClientId(i as u64),
                        object: if c < 3 { "x".into() } else { "y".into() },
                        op_name: name.into(),
                        arg,
                        ret: Some(ret),
                        invocation_time: 2 * l as i64,
                        response_time: Some(2 * r as i64 + 1),
                    });
                }
                let h = linsmr::history::build_history(linsmr::history::events_from_records(records)).unwrap();
                let whole = check_linearizable_naive(&h.fuse_objects("xy"), &product).unwrap().accepted;
                let parts = ["x", "y"]
                    .iter()
                    .all(|o| check_linearizable_naive(&h.project_object(o), &RegisterSpec).unwrap().accepted);
                assert_eq!(whole, parts);
                let fast = check_linearizable(&h.fuse_objects("xy"), &product, &SearchBudget::default()).unwrap();
                assert_eq!(fast.accepted, whole);
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 6 + 2 * 36 + 5 * 216 + 15 * 1296);
}
