//! Stretching operation timelines only removes real-time constraints, so
//! an accepted history stays accepted.

use std::collections::BTreeMap;

use linsmr::checkers::{check_linearizable, SearchBudget};
use linsmr::history::{Extension, HistoryBuilder, OpId};
use linsmr::specs::RegisterSpec;
use linsmr::value::Value;

fn main() -> linsmr::error::Result<()> {
    // read 0 strictly after write 1 completes: rejected
    let h = HistoryBuilder::new("x")
        .op("write", Value::Int(1), Value::ok(), 0, 2)
        .op("read", Value::Nil, Value::Int(0), 3, 4)
        .build()?;
    let budget = SearchBudget::default();
    println!("original: {}", check_linearizable(&h, &RegisterSpec, &budget)?);

    let mut shifts = BTreeMap::new();
    shifts.insert(OpId(0), Extension { earlier: 0, later: 2 });
    let stretched = h.extend_timelines(&shifts)?;
    println!("write stretched to end at 4: {}", check_linearizable(&stretched, &RegisterSpec, &budget)?);
    Ok(())
}
