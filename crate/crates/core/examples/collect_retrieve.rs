//! Collects a log into an in-memory holder and queries it.

use adprov::holder::{MemoryProvider, ProvenanceHolder, ProvenanceQuery, RecordKind};
use adprov::xes::parse_xes;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let holder = ProvenanceHolder::new(Box::new(MemoryProvider::new("default")));
    let log = parse_xes(include_str!("data/shopping.xes"))?;

    let report = holder.collect_log(&log)?;
    println!("collected {} records, {} change(s)", report.record_ids.len(), report.change_count);

    let all = holder.retrieve(&ProvenanceQuery::all().instance("shopping-1"))?;
    println!("chain: {}", all.verdict);
    for r in &all.records {
        let what = match r.kind {
            RecordKind::Execution => r.execution().and_then(|e| e.activity).unwrap_or_default(),
            RecordKind::Change => r.change_event().map(|c| c.summary()).unwrap_or_default(),
        };
        println!("{} {:<9} {} {what}", r.record_id, r.kind.as_str(), &r.digest.to_hex()[..12]);
    }

    let changes = holder.retrieve(&ProvenanceQuery::all().kind(RecordKind::Change))?;
    println!("{} change record(s)", changes.records.len());
    for p in holder.providers() {
        println!("provider {} ({:?}): {} records", p.provider_id, p.storage_kind, p.record_count);
    }
    Ok(())
}
