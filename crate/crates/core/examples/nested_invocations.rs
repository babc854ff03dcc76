//! A composite operation F built from two calls on an aggregated object.
//! A concurrent reader J that lands between the calls sees half of F.

use linsmr::checkers::{check_hierarchy, SearchBudget};
use linsmr::sim::run_nested_scenario;
use linsmr::specs::spec_bundle;

fn main() -> linsmr::error::Result<()> {
    let composite = spec_bundle("nested-composite")?;
    let aggregate = spec_bundle("nested-aggregate")?;
    let budget = SearchBudget::default();
    for seed in 0..3 {
        let out = run_nested_scenario(seed)?;
        println!("seed {seed}: J placed {:?}", out.placement);
        let outer = check_hierarchy(&out.composite, &composite, &budget)?;
        for v in outer.verdicts.values() {
            println!("  composite {v}");
        }
        let inner = check_hierarchy(&out.aggregate, &aggregate, &budget)?;
        println!("  aggregate lin accepted: {:?}", inner.accepted(linsmr::verdict::Level::Lin));
    }
    Ok(())
}
