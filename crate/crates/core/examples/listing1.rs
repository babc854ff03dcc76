//! Two lock-protected operations on a replicated object. Under the
//! lock-level scheduler E can run between D's critical sections and read 2,
//! which no sequential order explains.

use linsmr::catalog::{scenario, ScenarioOptions};
use linsmr::checkers::{check_hierarchy, SearchBudget};
use linsmr::specs::spec_bundle;

fn main() -> linsmr::error::Result<()> {
    let bundle = spec_bundle("lock-object")?;
    for name in ["listing1", "listing1-sequential"] {
        for seed in [0, 1] {
            let run = (scenario(name)?.build)(&ScenarioOptions { seed, ..Default::default() })?;
            let report = check_hierarchy(&run.history, &bundle, &SearchBudget::default())?;
            println!("{name} seed {seed}:");
            for op in run.history.operations() {
                println!("  {} -> {:?}", op.op_name, op.ret);
            }
            for v in report.verdicts.values() {
                println!("  {v}");
            }
        }
    }
    Ok(())
}
