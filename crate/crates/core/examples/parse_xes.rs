//! Parses an XES log and prints its traces.
//!
//! cargo run --example parse_xes -- [log.xes]

use adprov::adaptation::validate_adaptation;
use adprov::xes::{parse_xes, validate_log};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/shopping.xes").into());
    let log = parse_xes(&std::fs::read_to_string(&path)?)?;

    println!("{path}: {} traces, {} events", log.traces.len(), log.event_count());
    for ext in &log.extensions {
        println!("  extension {} ({}) {}", ext.name, ext.prefix, ext.uri);
    }
    for trace in &log.traces {
        println!("trace {}", trace.instance_id().unwrap_or("?"));
        for event in &trace.events {
            let when = event.timestamp().map(|t| t.to_string()).unwrap_or_default();
            println!("  {:<24} {:<12} {when}", event.activity().unwrap_or("?"), event.resource().unwrap_or("-"));
        }
    }

    let problems: Vec<_> = validate_log(&log).into_iter().chain(validate_adaptation(&log)).collect();
    if problems.is_empty() {
        println!("valid");
    }
    for v in problems {
        println!("violation: {v}");
    }
    Ok(())
}
