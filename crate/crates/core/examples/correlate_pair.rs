//! Correlation profiles between people in a chase scene: how strongly each
//! activity model explains a pair, normalized over activities.

use groupact::seqmodel::{train_bank, window_kinematics, BankConfig, CorpusConfig, PreparedBank};
use groupact::simgen::{generate, library, training_corpus};
use groupact::taxonomy::Taxonomy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let taxonomy = Taxonomy::standard();
    let corpus = training_corpus(&library::training_set(1000, 2), &taxonomy, &CorpusConfig::default())?;
    let (bank, _) = train_bank(&corpus, &taxonomy, &BankConfig::default())?;
    let prepared = PreparedBank::new(&bank);

    // People 1 and 2 run, 3 and 4 run after them, 5 and 6 stand far away.
    let (tracks, _) = generate(&library::planted(library::Planted::Chase, 5))?;
    let ids = [1, 2, 3, 4, 5, 6];
    let windows = window_kinematics(&tracks, &ids, 150, bank.window).ok_or("not everyone is visible at frame 150")?;
    for (a, b) in [(0, 1), (2, 3), (2, 0), (0, 2), (4, 5), (4, 0)] {
        let p = prepared.correlate_entities(&windows[a], &windows[b])?;
        let mut top: Vec<(&str, f64)> = p.values().collect();
        top.sort_by(|x, y| y.1.total_cmp(&x.1));
        let shown: Vec<String> = top.iter().take(3).map(|(l, v)| format!("{l} {v:.3}")).collect();
        println!("person {} towards {}: {}", ids[a], ids[b], shown.join(", "));
    }
    Ok(())
}
