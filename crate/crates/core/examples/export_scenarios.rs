//! Writes scenario descriptions for the CLI `simulate` command.
//!
//! ```text
//! cargo run --example export_scenarios -- out/
//! groupact simulate out/training.json out/train-
//! groupact simulate out/fight_approach.json out/test
//! ```

use std::path::PathBuf;

use groupact::simgen::library;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&dir)?;
    let training = library::training_set(1000, 3);
    std::fs::write(dir.join("training.json"), serde_json::to_string_pretty(&training)?)?;
    std::fs::write(
        dir.join("fight_approach.json"),
        serde_json::to_string_pretty(&library::hierarchical(7))?,
    )?;
    for kind in library::Planted::ALL {
        let name = format!("{}.json", kind.label().to_lowercase());
        std::fs::write(dir.join(name), serde_json::to_string_pretty(&library::planted(kind, 7))?)?;
    }
    println!("{} training scenarios and 7 test scenarios in {}", training.len(), dir.display());
    Ok(())
}
