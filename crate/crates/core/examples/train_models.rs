//! Trains activity models on simulated scenes and saves them.
//!
//! `cargo run --release --example train_models -- model.json`

use groupact::seqmodel::{train_bank, BankConfig, CorpusConfig};
use groupact::simgen::{library, training_corpus};
use groupact::taxonomy::Taxonomy;
use groupact::trackio::save_model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "model.json".into());
    let taxonomy = Taxonomy::standard();
    let corpus = training_corpus(&library::training_set(1000, 3), &taxonomy, &CorpusConfig::default())?;
    let (bank, reports) = train_bank(&corpus, &taxonomy, &BankConfig::default())?;
    for r in &reports {
        let ll = |s: &Option<groupact::seqmodel::FitSummary>| {
            s.as_ref().map_or("-".to_string(), |s| format!("{:.1} ({} segments)", s.mean_log_likelihood, s.segments))
        };
        println!("{:<13} pair {:<24} group {}", r.label, ll(&r.pair), ll(&r.group));
    }
    std::fs::write(&out, save_model(&bank)?)?;
    println!("saved to {out}");
    Ok(())
}
