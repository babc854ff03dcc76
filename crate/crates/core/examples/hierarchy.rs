//! Runs every checker on each catalog scenario and prints the acceptance
//! matrix next to the expected one.

use linsmr::catalog::{ScenarioOptions, CATALOG};
use linsmr::checkers::{check_hierarchy, SearchBudget};
use linsmr::specs::spec_bundle;
use linsmr::verdict::Level;

fn mark(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "yes",
        Some(false) => "no",
        None => "-",
    }
}

fn main() -> linsmr::error::Result<()> {
    println!("{:<20} {:>9} {:>9} {:>9} {:>9}", "scenario", "lin", "set", "mp", "interval");
    for entry in CATALOG {
        let run = (entry.build)(&ScenarioOptions::default())?;
        let Some(spec) = run.spec else { continue };
        let report = check_hierarchy(&run.history, &spec_bundle(spec)?, &SearchBudget::default())?;
        let cells: Vec<String> = Level::ALL
            .iter()
            .map(|l| format!("{}/{}", mark(report.accepted(*l)), mark(run.expected.get(l).copied())))
            .collect();
        println!("{:<20} {:>9} {:>9} {:>9} {:>9}", entry.name, cells[0], cells[1], cells[2], cells[3]);
        assert!(report.violations.is_empty());
    }
    println!("cells are found/expected");
    Ok(())
}
