//! Detects groups and their activities frame by frame in a scene where three
//! people fight and a fourth approaches them.

use groupact::grad::{run_pipeline, PipelineConfig};
use groupact::metrics::{score, ScoreOptions};
use groupact::seqmodel::{train_bank, BankConfig, CorpusConfig};
use groupact::simgen::{generate, library, training_corpus};
use groupact::taxonomy::Taxonomy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let taxonomy = Taxonomy::standard();
    let corpus = training_corpus(&library::training_set(1000, 3), &taxonomy, &CorpusConfig::default())?;
    let (bank, _) = train_bank(&corpus, &taxonomy, &BankConfig::default())?;

    let (tracks, truth) = generate(&library::hierarchical(11))?;
    let cfg = PipelineConfig::for_bank(&bank);
    let out = run_pipeline(&bank, &tracks, &cfg, None)?;
    for d in out.detections.iter().step_by(50) {
        let groups: Vec<String> = d.groups.iter().map(|g| format!("{} {:?} {}", g.id, g.members, g.label)).collect();
        let pairs: Vec<String> = d.pairs.iter().map(|p| format!("{} -> {} {}", p.a, p.b, p.label)).collect();
        println!("frame {:>3}: {} | {}", d.frame, groups.join("; "), pairs.join("; "));
    }
    let report = score(&out.detections, &truth, &taxonomy, ScoreOptions { warmup: cfg.window as u32 })?;
    print!("{}", report.to_text());
    Ok(())
}
