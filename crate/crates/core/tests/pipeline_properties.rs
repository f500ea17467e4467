//! Structural properties of clustering, representatives and detection that
//! must hold on any scene.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use groupact::clustering::FrameContext;
use groupact::features::pair_between;
use groupact::grad::{detect_frame, FrameDetection, PipelineConfig};
use groupact::grouprep::{group_representative, GrKind};
use groupact::seqmodel::PreparedBank;
use groupact::simgen::{generate, library, ScenarioSpec};
use groupact::trackio::{MbbSample, PersonId, TrackSet};

/// Six people walking side by side.
fn six_walkers() -> ScenarioSpec {
    serde_json::from_value(serde_json::json!({
        "seed": 3,
        "duration": 60,
        "noise_sigma": 0.3,
        "box_noise": 0.005,
        "agents": (1..=6).map(|i| serde_json::json!({"id": i, "position": [0.0, 30.0 * i as f64]})).collect::<Vec<_>>(),
        "groups": [{
            "id": "w", "label": "WalkTogether", "members": [1, 2, 3, 4, 5, 6], "interval": [0, 59],
            "motion": {"type": "walk", "velocity": [1.4, 0.2]}
        }]
    }))
    .expect("valid scenario")
}

#[test]
fn representatives_have_fixed_shape_for_any_group_size() {
    let bank = common::bank();
    let prepared = PreparedBank::new(bank);
    let (tracks, _) = generate(&six_walkers()).unwrap();
    let ctx = FrameContext::build(&prepared, &tracks, 50).unwrap().expect("everyone present");
    let reference = ctx.window(1).len();
    assert_eq!(reference, bank.window);
    for size in 1..=6u32 {
        let group: BTreeSet<PersonId> = (1..=size).collect();
        for kind in [GrKind::P, GrKind::V, GrKind::Sv] {
            let gr = group_representative(kind, bank, &ctx, &group, "WalkTogether", bank.thresholds.representative)
                .unwrap();
            assert_eq!(gr.sequence.len(), reference, "{kind:?} with {size} members");
            assert!(!gr.subset.is_empty() && gr.subset.is_subset(&group));
            // A representative pairs with anyone like a real person does.
            let obs = pair_between(gr.sequence.last().unwrap(), ctx.window(6).last().unwrap()).to_vec();
            assert_eq!(obs.len(), bank.pair_dim().unwrap());
            assert!(obs.iter().all(|x| x.is_finite()));
        }
    }
}

fn relabel(tracks: &TrackSet, map: &BTreeMap<PersonId, PersonId>) -> TrackSet {
    TrackSet::from_samples(tracks.samples().map(|s| MbbSample { person: map[&s.person], ..*s })).unwrap()
}

/// Groups and pair labels keyed by member sets, with ids mapped.
fn canonical(
    d: &FrameDetection,
    map: &BTreeMap<PersonId, PersonId>,
) -> (BTreeSet<(Vec<PersonId>, String)>, BTreeSet<(Vec<PersonId>, Vec<PersonId>, String)>) {
    let members = |id: &str| -> Vec<PersonId> {
        let g = d.group(id).expect("pair names a group");
        let mut v: Vec<PersonId> = g.members.iter().map(|p| map[p]).collect();
        v.sort_unstable();
        v
    };
    let groups = d.groups.iter().map(|g| (members(&g.id), g.label.clone())).collect();
    let pairs = d
        .pairs
        .iter()
        .map(|p| {
            let (a, b) = (members(&p.a), members(&p.b));
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            (a, b, p.label.clone())
        })
        .collect();
    (groups, pairs)
}

#[test]
fn detection_is_equivariant_under_relabeling() {
    let bank = common::bank();
    let prepared = PreparedBank::new(bank);
    let cfg = PipelineConfig::for_bank(bank);
    for spec in [library::hierarchical(5), library::outlier(5)] {
        let (tracks, _) = generate(&spec).unwrap();
        let ids: Vec<PersonId> = tracks.persons().collect();
        // Reverse the order and move to a different id range.
        let forward: BTreeMap<PersonId, PersonId> = ids.iter().zip(ids.iter().rev()).map(|(&a, &b)| (a, 100 + b)).collect();
        let identity: BTreeMap<PersonId, PersonId> = ids.iter().map(|&p| (p, p)).collect();
        let back: BTreeMap<PersonId, PersonId> = forward.iter().map(|(&a, &b)| (b, a)).collect();
        let permuted = relabel(&tracks, &forward);
        for t in [40, 150, 260] {
            let original = detect_frame(&prepared, &tracks, t, &cfg).unwrap();
            let moved = detect_frame(&prepared, &permuted, t, &cfg).unwrap();
            assert_eq!(canonical(&original, &identity), canonical(&moved, &back), "frame {t}");
        }
    }
}

#[test]
fn every_detection_partitions_the_people_present() {
    let bank = common::bank();
    let prepared = PreparedBank::new(bank);
    let cfg = PipelineConfig::for_bank(bank);
    let (tracks, _) = generate(&library::planted(library::Planted::Chase, 9)).unwrap();
    for t in (2..300).step_by(23) {
        let d = detect_frame(&prepared, &tracks, t, &cfg).unwrap();
        let mut seen = BTreeSet::new();
        for g in &d.groups {
            assert!(!g.members.is_empty());
            for p in &g.members {
                assert!(seen.insert(*p), "frame {t}: person {p} in two groups");
            }
            assert!(g.representatives.iter().all(|p| g.members.contains(p)));
        }
        let present: BTreeSet<PersonId> = tracks.present_at(t).into_iter().collect();
        assert_eq!(seen, present, "frame {t}");
        let n = d.groups.len();
        assert_eq!(d.pairs.len(), n * (n - 1) / 2, "one label per pair of groups");
    }
}
