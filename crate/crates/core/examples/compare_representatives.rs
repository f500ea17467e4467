//! Compares group representatives (P, V, SV) and the person-pair majority
//! vote on scenes where one member of the approaching group sways sideways.

use groupact::grad::{run_pipeline, InterGroup, PipelineConfig};
use groupact::grouprep::GrKind;
use groupact::metrics::{score, ScoreOptions};
use groupact::seqmodel::{train_bank, BankConfig, CorpusConfig};
use groupact::simgen::{generate, library, training_corpus};
use groupact::taxonomy::Taxonomy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let taxonomy = Taxonomy::standard();
    let corpus = training_corpus(&library::training_set(1000, 3), &taxonomy, &CorpusConfig::default())?;
    let (bank, _) = train_bank(&corpus, &taxonomy, &BankConfig::default())?;
    let base = PipelineConfig::for_bank(&bank);
    let configs = [
        ("P", PipelineConfig { gr: GrKind::P, ..base }),
        ("V", PipelineConfig { gr: GrKind::V, ..base }),
        ("SV", PipelineConfig { gr: GrKind::Sv, ..base }),
        ("MV", PipelineConfig { inter: InterGroup::MajorityVote, ..base }),
    ];
    for seed in [1, 2] {
        let (tracks, truth) = generate(&library::outlier(seed))?;
        for (name, cfg) in &configs {
            let out = run_pipeline(&bank, &tracks, cfg, None)?;
            let r = score(&out.detections, &truth, &taxonomy, ScoreOptions { warmup: cfg.window as u32 })?;
            println!("scene {seed} {name:>2}: EDER {}  GCER {}", r.eder, r.gcer);
        }
    }
    Ok(())
}
