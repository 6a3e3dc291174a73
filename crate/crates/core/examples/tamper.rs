//! Edits a stored record behind the holder's back and shows the chain
//! reporting it.

use adprov::holder::{FileProvider, ProvenanceHolder};
use adprov::xes::parse_xes;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("adprov-tamper-{}", std::process::id()));
    let path = dir.join("default.jsonl");
    let holder = ProvenanceHolder::new(Box::new(FileProvider::open("default", &path)?));
    holder.collect_log(&parse_xes(include_str!("data/shopping.xes"))?)?;
    println!("before: {}", holder.validate_chain("default")?);

    let text = std::fs::read_to_string(&path)?;
    std::fs::write(&path, text.replacen("PersonA", "PersonB", 1))?;
    println!("after editing {}: {}", path.display(), holder.validate_chain("default")?);

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
