//! Moves a chain from memory to an append-only file and checks both copies.

use adprov::holder::{FileProvider, MemoryProvider, ProvenanceHolder, ProvenanceQuery};
use adprov::xes::parse_xes;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("adprov-migrate-{}", std::process::id()));
    let mut holder = ProvenanceHolder::new(Box::new(MemoryProvider::new("memory")));
    holder.add_provider(Box::new(FileProvider::open("archive", dir.join("archive.jsonl"))?))?;
    holder.collect_log(&parse_xes(include_str!("data/shopping.xes"))?)?;

    let moved = holder.migrate("memory", "archive")?;
    println!("migrated {moved} records");

    let source = holder.retrieve(&ProvenanceQuery::all())?;
    let copy = holder.retrieve(&ProvenanceQuery::all().provider("archive"))?;
    println!("identical: {}", source.records == copy.records);
    println!("archive chain: {}", copy.verdict);

    // a second migration into the now non-empty archive is refused
    if let Err(e) = holder.migrate("memory", "archive") {
        println!("again: {e}");
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
