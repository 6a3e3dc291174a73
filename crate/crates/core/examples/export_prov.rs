//! Exports the provenance of the shopping instance as PROV-N, PROV-JSON or
//! Graphviz DOT.
//!
//! cargo run --example export_prov -- [prov-n|prov-json|dot]
//! cargo run --example export_prov -- dot | dot -Tsvg > shopping.svg

use adprov::holder::{MemoryProvider, ProvenanceHolder, ProvenanceQuery};
use adprov::prov::{map_to_prov, serialize_prov_json, serialize_provn, to_dot};
use adprov::xes::parse_xes;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let format = std::env::args().nth(1).unwrap_or_else(|| "prov-n".into());

    let holder = ProvenanceHolder::new(Box::new(MemoryProvider::new("default")));
    holder.collect_log(&parse_xes(include_str!("data/shopping.xes"))?)?;
    let got = holder.retrieve(&ProvenanceQuery::all().instance("shopping-1"))?;
    let doc = map_to_prov(&got.records, &got.verdict)?;

    let text = match format.as_str() {
        "prov-n" => serialize_provn(&doc)?,
        "prov-json" => serialize_prov_json(&doc)?,
        "dot" => to_dot(&doc)?,
        other => return Err(format!("unknown format `{other}`").into()),
    };
    print!("{text}");
    Ok(())
}
