//! Draws a three-operation history with its linearization points, then
//! the overlap intervals of an interval witness as SVG.

use linsmr::catalog::{scenario, ScenarioOptions};
use linsmr::checkers::{check_interval_linearizable, check_linearizable, SearchBudget};
use linsmr::history::HistoryBuilder;
use linsmr::render::{render, Show, Style};
use linsmr::specs::{spec_bundle, RegisterSpec};
use linsmr::value::Value;

fn main() -> linsmr::error::Result<()> {
    let h = HistoryBuilder::new("x")
        .op("write", Value::Int(1), Value::ok(), 0, 6)
        .op("read", Value::Nil, Value::Int(1), 2, 8)
        .op("read", Value::Nil, Value::Int(0), 1, 4)
        .build()?;
    let v = check_linearizable(&h, &RegisterSpec, &SearchBudget::default())?;
    println!("{v}");
    print!("{}", render(&h, v.witness.as_ref(), Style::Ascii, Show::Points)?);

    let run = (scenario("listing1")?.build)(&ScenarioOptions::default())?;
    let bundle = spec_bundle("lock-object")?;
    let v = check_interval_linearizable(&run.history, bundle.interval.as_ref(), &SearchBudget::default())?;
    print!("{}", render(&run.history, v.witness.as_ref(), Style::Ascii, Show::Intervals)?);
    let svg = render(&run.history, v.witness.as_ref(), Style::Svg, Show::Intervals)?;
    println!("svg: {} bytes", svg.len());
    Ok(())
}
