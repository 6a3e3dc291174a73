//! Derives change events for an unannotated log by aligning each trace with
//! the closest run of a process model.
//!
//! cargo run --example detect -- [log.xes] [model.json]

use adprov::adaptation::extract_change_events;
use adprov::detection::{derive_annotated_log, DetectionDefaults};
use adprov::model::parse_model;
use adprov::xes::parse_xes;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let log = match args.next() {
        Some(path) => std::fs::read_to_string(path)?,
        None => include_str!("data/shopping_plain.xes").to_string(),
    };
    let model = match args.next() {
        Some(path) => std::fs::read_to_string(path)?,
        None => include_str!("data/shopping_model.json").to_string(),
    };
    let log = parse_xes(&log)?;
    let model = parse_model(&model)?;

    let derived = derive_annotated_log(&model, &log, &DetectionDefaults::new("detector"))?;
    let changes = extract_change_events(&derived)?;
    if changes.is_empty() {
        println!("every trace follows a run of {}", model.name());
    }
    for (instance, list) in changes {
        for change in list {
            println!("{instance}: {}", change.summary());
        }
    }
    Ok(())
}
