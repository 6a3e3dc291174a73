//! Writes change events into a log with the adaptation extension and reads
//! them back.

use adprov::adaptation::{annotate_log, extract_change_events, ChangeEvent, ChangePosition, ChangeType};
use adprov::xes::{parse_xes, serialize_xes};
use adprov::Timestamp;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let log = parse_xes(include_str!("data/shopping_plain.xes"))?;

    let insert = ChangeEvent {
        instance_id: "shopping-1".into(),
        change_type: ChangeType::Insert,
        target_activity: "Go to cart".into(),
        position: ChangePosition::AfterActivity("Add item to cart".into()),
        initiator: "PersonA".into(),
        change_time: Timestamp::parse("2024-05-01T10:02:00Z")?,
        note: None,
    };
    // a step the model had but this instance skipped
    let delete = ChangeEvent {
        change_type: ChangeType::Delete,
        target_activity: "Apply voucher".into(),
        position: ChangePosition::BeforeActivity("Checkout".into()),
        note: Some("voucher service down".into()),
        ..insert.clone()
    };

    let annotated = annotate_log(&log, &[insert, delete])?;
    print!("{}", serialize_xes(&annotated)?);

    for (instance, changes) in extract_change_events(&annotated)? {
        for change in changes {
            eprintln!("{instance}: {}", change.summary());
        }
    }
    Ok(())
}
