//! Enumerates the runs of a process model and aligns a trace against each.

use adprov::detection::{best_run, edit_script};
use adprov::model::{enumerate_runs, ProcessModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let edges = [
        ("Register", "Check stock"),
        ("Register", "Check credit"),
        ("Check stock", "Ship"),
        ("Check credit", "Ship"),
        ("Ship", "Invoice"),
    ];
    let model = ProcessModel::new(
        "Order handling",
        ["Register", "Check stock", "Check credit", "Ship", "Invoice"],
        edges.iter().map(|(a, b)| (a.to_string(), b.to_string())),
        "Register",
        "Invoice",
    )?;
    println!("{}: {} runs", model.name(), model.run_count());

    let runs = enumerate_runs(&model, 100)?;
    let trace = ["Register", "Check credit", "Call customer", "Ship", "Invoice"];
    for run in &runs {
        let script = edit_script(&run.steps, &trace);
        let ops: Vec<String> = script.iter().map(ToString::to_string).collect();
        println!("  {:?}  ->  {}", run.steps, if ops.is_empty() { "match".into() } else { ops.join(", ") });
    }

    if let Some((run, script)) = best_run(&runs, &trace) {
        println!("closest run {:?} with {} edit(s)", run.steps, script.len());
    }
    Ok(())
}
