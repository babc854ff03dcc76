use std::collections::BTreeMap;

use linsmr::checkers::replay::replay_witness;
use linsmr::checkers::{check_hierarchy, check_linearizable, SearchBudget};
use linsmr::gen::{op_menu, random_history, HistoryShape};
use linsmr::history::{Extension, History, OpId};
use linsmr::specs::{spec_bundle, RegisterSpec};
use linsmr::trace::{parse_trace, to_trace_string};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn history(seed: u64, ops: usize, clients: usize, corrupt: f64) -> History {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = HistoryShape { ops, clients, corrupt };
    random_history(&mut rng, &RegisterSpec, op_menu("register").unwrap(), "x", shape).unwrap()
}

fn two_objects(seed: u64, ops: usize) -> History {
    let a = history(seed, ops, 2, 0.3);
    let b = history(seed ^ 0x5eed, ops, 2, 0.3);
    let offset = a.len() as u64;
    let mut events = a.into_events();
    let base = events.len() as u64;
    for mut e in b.into_events() {
        e.event_id.0 += base;
        e.op_id.0 += offset;
        e.client.0 += 10;
        e.object = "y".into();
        events.push(e);
    }
    linsmr::history::build_history(events).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_round_trip(seed in any::<u64>(), ops in 0usize..8, clients in 1usize..4) {
        let h = history(seed, ops, clients, 0.5);
        let text = to_trace_string(&h);
        let back = parse_trace(&text).unwrap();
        prop_assert_eq!(to_trace_string(&back), text);
        prop_assert_eq!(back, h);
    }

    #[test]
    fn extension_keeps_lin_acceptance(
        seed in any::<u64>(),
        ops in 1usize..7,
        later in proptest::collection::vec(0i64..4, 7),
    ) {
        let h = history(seed, ops, 3, 0.3);
        let budget = SearchBudget::default();
        prop_assume!(check_linearizable(&h, &RegisterSpec, &budget).unwrap().accepted);
        // stretching only responses never breaks a client's sequential order
        // when the shift is applied to the client's last operation alone
        let mut last: BTreeMap<u64, OpId> = BTreeMap::new();
        for op in h.operations() {
            last.insert(op.client.0, op.op_id);
        }
        let shifts: BTreeMap<OpId, Extension> = last
            .values()
            .enumerate()
            .map(|(i, id)| (*id, Extension { earlier: 0, later: later[i % later.len()] }))
            .collect();
        let ext = h.extend_timelines(&shifts).unwrap();
        prop_assert!(check_linearizable(&ext, &RegisterSpec, &budget).unwrap().accepted);
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>(), ops in 0usize..5) {
        let h = two_objects(seed, ops);
        for object in ["x", "y"] {
            let once = h.project_object(object);
            prop_assert_eq!(once.project_object(object), once.clone());
            prop_assert!(once.operations().iter().all(|op| op.object == object));
        }
        let total = h.project_object("x").len() + h.project_object("y").len();
        prop_assert_eq!(total, h.len());
    }

    #[test]
    fn accepted_witnesses_replay(seed in any::<u64>(), ops in 1usize..6) {
        let h = history(seed, ops, 3, 0.3);
        let bundle = spec_bundle("register").unwrap();
        let report = check_hierarchy(&h, &bundle, &SearchBudget::default()).unwrap();
        prop_assert!(report.violations.is_empty());
        for v in report.verdicts.values().filter(|v| v.accepted) {
            prop_assert!(replay_witness(&h, &bundle, v.witness.as_ref().unwrap()).unwrap());
        }
    }
}
