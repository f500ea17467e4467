//! Asynchronous pair models against synchronous ones on a group whose
//! members start moving a few frames apart.

use groupact::grad::{run_pipeline, PipelineConfig};
use groupact::metrics::{score, ScoreOptions};
use groupact::seqmodel::{train_bank, AlignmentMode, BankConfig, CorpusConfig};
use groupact::simgen::{generate, library, training_corpus};
use groupact::taxonomy::Taxonomy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let taxonomy = Taxonomy::standard();
    let corpus = training_corpus(&library::training_set(1000, 2), &taxonomy, &CorpusConfig::default())?;
    for alignment in [AlignmentMode::Async, AlignmentMode::Sync] {
        let cfg = BankConfig { alignment, ..BankConfig::default() };
        let (bank, _) = train_bank(&corpus, &taxonomy, &cfg)?;
        for offset in [3, 6, 10] {
            let (tracks, truth) = generate(&library::asynchronous(21, offset))?;
            let pc = PipelineConfig::for_bank(&bank);
            let out = run_pipeline(&bank, &tracks, &pc, None)?;
            let r = score(&out.detections, &truth, &taxonomy, ScoreOptions { warmup: pc.window as u32 })?;
            println!("{alignment:?} offset {offset:>2}: GCER {}  EDER {}", r.gcer, r.eder);
        }
    }
    Ok(())
}
