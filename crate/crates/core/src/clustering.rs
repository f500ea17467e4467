//! Seed-representative-centered clustering of the people in one frame into
//! symmetric groups.
//!
//! Seeds are active people and mutually well-correlated pairs. Seeds that
//! agree on one symmetric activity are merged, each seed is summarized by the
//! per-frame mean of its members, and everyone else joins the seed whose
//! representative they correlate with best.

use std::collections::BTreeSet;

use crate::features::{body_size_change, Kinematics};
use crate::seqmodel::{window_kinematics, CorrelationProfile, PreparedBank, SeqError, Thresholds};
use crate::taxonomy::{Taxonomy, SINGLE};
use crate::trackio::{Frame, PersonId, TrackSet};

/// Everything per-frame inference needs: the common observation window of
/// every evaluable person and all ordered pairwise correlation profiles.
#[derive(Debug, Clone)]
pub struct FrameContext {
    pub frame: Frame,
    /// Sorted person ids.
    pub persons: Vec<PersonId>,
    /// Kinematics per person over the window, aligned with `persons`.
    pub windows: Vec<Vec<Kinematics>>,
    /// Body size change at the frame, aligned with `persons`.
    pub activity: Vec<f64>,
    /// `profiles[a * n + b]` is `co_a(b)`; the diagonal is unused.
    profiles: Vec<Option<CorrelationProfile>>,
}

impl FrameContext {
    /// `Ok(None)` when nobody has features at `t` or the shared window is
    /// shorter than two frames.
    pub fn build(bank: &PreparedBank, tracks: &TrackSet, t: Frame) -> Result<Option<Self>, SeqError> {
        let persons: Vec<PersonId> = tracks
            .present_at(t)
            .into_iter()
            .filter(|&p| crate::features::kinematics(tracks, p, t).is_ok())
            .collect();
        if persons.is_empty() {
            return Ok(None);
        }
        let Some(windows) = window_kinematics(tracks, &persons, t, bank.bank.window) else {
            return Ok(None);
        };
        let activity = persons
            .iter()
            .map(|&p| body_size_change(tracks, p, t).map(|c| c.0).unwrap_or(0.0))
            .collect();
        let n = persons.len();
        let mut profiles = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                profiles.push(if a == b {
                    None
                } else {
                    Some(bank.correlate_entities(&windows[a], &windows[b])?)
                });
            }
        }
        Ok(Some(Self {
            frame: t,
            persons,
            windows,
            activity,
            profiles,
        }))
    }

    /// Assembles a context from precomputed parts. `profile(a, b)` must give
    /// `co_a(b)` for every ordered pair of distinct persons.
    pub fn from_parts(
        frame: Frame,
        persons: Vec<PersonId>,
        windows: Vec<Vec<Kinematics>>,
        activity: Vec<f64>,
        profile: impl Fn(PersonId, PersonId) -> CorrelationProfile,
    ) -> Self {
        let mut profiles = Vec::with_capacity(persons.len() * persons.len());
        for &a in &persons {
            for &b in &persons {
                profiles.push((a != b).then(|| profile(a, b)));
            }
        }
        Self {
            frame,
            persons,
            windows,
            activity,
            profiles,
        }
    }

    pub fn index(&self, p: PersonId) -> Option<usize> {
        self.persons.binary_search(&p).ok()
    }

    /// `co_a(b)` for two distinct persons of this frame.
    pub fn profile(&self, a: PersonId, b: PersonId) -> &CorrelationProfile {
        let (i, j) = (self.idx(a), self.idx(b));
        self.profiles[i * self.persons.len() + j]
            .as_ref()
            .expect("profile of a person with itself")
    }

    pub fn window(&self, p: PersonId) -> &[Kinematics] {
        &self.windows[self.idx(p)]
    }

    fn idx(&self, p: PersonId) -> usize {
        self.index(p).unwrap_or_else(|| panic!("person {p} not in frame {}", self.frame))
    }

    /// `L_a(b)`.
    pub fn label(&self, a: PersonId, b: PersonId) -> &str {
        self.profile(a, b).label()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedKind {
    Active,
    Pair,
    Merged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSeed {
    pub members: BTreeSet<PersonId>,
    pub kind: SeedKind,
    /// Symmetric activity; active-person seeds start without one.
    pub label: Option<String>,
    /// Sum of the two directed correlations for pair seeds.
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRepresentative {
    pub members: BTreeSet<PersonId>,
    pub sequence: Vec<Kinematics>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterGroup {
    pub members: BTreeSet<PersonId>,
    /// Members that came from the seed; empty for unattached singletons.
    pub seed_members: BTreeSet<PersonId>,
    /// Seed label, or `single` for singletons nobody joined.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub frame: Frame,
    /// Ordered by smallest member.
    pub groups: Vec<ClusterGroup>,
}

impl Partition {
    pub fn persons(&self) -> BTreeSet<PersonId> {
        self.groups.iter().flat_map(|g| g.members.iter().copied()).collect()
    }

    /// Disjoint groups covering exactly `persons`.
    pub fn is_partition_of(&self, persons: &[PersonId]) -> bool {
        let total: usize = self.groups.iter().map(|g| g.members.len()).sum();
        let union = self.persons();
        total == union.len() && union.iter().copied().eq(persons.iter().copied())
    }
}

/// Active people and mutually correlated pairs sharing a symmetric label.
pub fn detect_seeds(ctx: &FrameContext, taxonomy: &Taxonomy, th: &Thresholds) -> Vec<ClusterSeed> {
    let mut seeds = Vec::new();
    for (k, &p) in ctx.persons.iter().enumerate() {
        if ctx.activity[k] > th.active {
            seeds.push(ClusterSeed {
                members: BTreeSet::from([p]),
                kind: SeedKind::Active,
                label: None,
                strength: 0.0,
            });
        }
    }
    for (k, &i) in ctx.persons.iter().enumerate() {
        for &j in &ctx.persons[k + 1..] {
            let (a, b) = (ctx.profile(i, j), ctx.profile(j, i));
            let label = a.label();
            if label != b.label() || !taxonomy.is_grouping(label) {
                continue;
            }
            let (va, vb) = (a.value(label), b.value(label));
            if va > th.pair_seed && vb > th.pair_seed {
                seeds.push(ClusterSeed {
                    members: BTreeSet::from([i, j]),
                    kind: SeedKind::Pair,
                    label: Some(label.to_string()),
                    strength: va + vb,
                });
            }
        }
    }
    seeds
}

/// Every ordered pair inside `members` carries `label`.
fn all_agree(ctx: &FrameContext, members: &BTreeSet<PersonId>, label: &str) -> bool {
    members
        .iter()
        .all(|&a| members.iter().all(|&b| a == b || ctx.label(a, b) == label))
}

/// The symmetric label every ordered pair of `members` agrees on, if any.
fn common_label<'c>(ctx: &'c FrameContext, members: &BTreeSet<PersonId>, taxonomy: &Taxonomy) -> Option<&'c str> {
    let mut it = members.iter();
    let (&a, &b) = (it.next()?, it.next()?);
    let label = ctx.label(a, b);
    (taxonomy.is_grouping(label) && all_agree(ctx, members, label)).then_some(label)
}

fn first_member(s: &ClusterSeed) -> PersonId {
    *s.members.first().expect("seeds are nonempty")
}

/// Makes seeds disjoint, then merges seeds whose union agrees on a single
/// symmetric activity.
///
/// Overlapping pair seeds are resolved strongest first: a pair joins the
/// seeds it touches when their labels match and is dropped otherwise, so its
/// extra member is left for assignment. Active seeds inside a pair seed are
/// absorbed. Disjoint seeds then merge only when every ordered pair in the
/// union has the same symmetric label.
pub fn merge_seeds(seeds: Vec<ClusterSeed>, ctx: &FrameContext, taxonomy: &Taxonomy) -> Vec<ClusterSeed> {
    let (mut pairs, actives): (Vec<_>, Vec<_>) = seeds.into_iter().partition(|s| s.kind != SeedKind::Active);
    pairs.sort_by(|a, b| {
        b.strength
            .total_cmp(&a.strength)
            .then_with(|| a.members.cmp(&b.members))
    });
    let mut out: Vec<ClusterSeed> = Vec::new();
    for pair in pairs {
        let touching: Vec<usize> = (0..out.len())
            .filter(|&k| !out[k].members.is_disjoint(&pair.members))
            .collect();
        if touching.is_empty() {
            out.push(pair);
            continue;
        }
        if touching.iter().any(|&k| out[k].label != pair.label) {
            continue;
        }
        let mut merged = pair;
        merged.kind = SeedKind::Merged;
        for &k in touching.iter().rev() {
            let s = out.remove(k);
            merged.members.extend(s.members);
            merged.strength = merged.strength.max(s.strength);
        }
        out.push(merged);
    }
    for a in actives {
        if out.iter().all(|s| s.members.is_disjoint(&a.members)) {
            out.push(a);
        }
    }
    out.sort_by_key(first_member);
    'outer: loop {
        for x in 0..out.len() {
            for y in x + 1..out.len() {
                let union: BTreeSet<PersonId> = out[x].members.union(&out[y].members).copied().collect();
                let Some(label) = common_label(ctx, &union, taxonomy) else {
                    continue;
                };
                let compatible = [&out[x].label, &out[y].label]
                    .iter()
                    .all(|l| l.as_deref().is_none_or(|l| l == label));
                if !compatible {
                    continue;
                }
                let label = label.to_string();
                let b = out.remove(y);
                let a = &mut out[x];
                a.members.extend(b.members);
                a.kind = SeedKind::Merged;
                a.label = Some(label);
                a.strength = a.strength.max(b.strength);
                continue 'outer;
            }
        }
        break;
    }
    out
}

/// Per-frame mean kinematics of each seed's members.
pub fn seed_representatives(seeds: &[ClusterSeed], ctx: &FrameContext) -> Vec<SeedRepresentative> {
    seeds
        .iter()
        .map(|s| SeedRepresentative {
            members: s.members.clone(),
            sequence: mean_sequence(s.members.iter().map(|&p| ctx.window(p))),
        })
        .collect()
}

/// Frame-wise mean of equally long kinematics sequences.
pub fn mean_sequence<'k>(seqs: impl IntoIterator<Item = &'k [Kinematics]>) -> Vec<Kinematics> {
    let seqs: Vec<&[Kinematics]> = seqs.into_iter().collect();
    let len = seqs.iter().map(|s| s.len()).min().unwrap_or(0);
    (0..len)
        .map(|f| Kinematics::mean(seqs.iter().map(|s| &s[f])).expect("at least one sequence"))
        .collect()
}

/// Attaches every unseeded person to the representative they correlate with
/// best, provided that correlation's label is symmetric. `correlate(x, y)`
/// computes `co_x(y)`.
pub fn assign_remaining(
    ctx: &FrameContext,
    taxonomy: &Taxonomy,
    seeds: &[ClusterSeed],
    reps: &[SeedRepresentative],
    correlate: impl Fn(&[Kinematics], &[Kinematics]) -> Result<CorrelationProfile, SeqError>,
) -> Result<Partition, SeqError> {
    let seeded: BTreeSet<PersonId> = seeds.iter().flat_map(|s| s.members.iter().copied()).collect();
    let mut joined: Vec<Vec<(PersonId, String, f64)>> = vec![Vec::new(); seeds.len()];
    let mut loners = Vec::new();
    for &p in ctx.persons.iter().filter(|p| !seeded.contains(p)) {
        let mut best: Option<(usize, String, f64)> = None;
        for (k, rep) in reps.iter().enumerate() {
            let prof = correlate(ctx.window(p), &rep.sequence)?;
            let label = prof.label();
            if !taxonomy.is_grouping(label) {
                continue;
            }
            let v = prof.value(label);
            if best.as_ref().is_none_or(|b| v > b.2) {
                best = Some((k, label.to_string(), v));
            }
        }
        match best {
            Some((k, label, v)) => joined[k].push((p, label, v)),
            None => loners.push(p),
        }
    }
    let mut groups: Vec<ClusterGroup> = seeds
        .iter()
        .zip(joined)
        .map(|(s, js)| {
            let label = s.label.clone().unwrap_or_else(|| {
                js.iter()
                    .fold(None::<&(PersonId, String, f64)>, |acc, j| match acc {
                        Some(a) if a.2 >= j.2 => Some(a),
                        _ => Some(j),
                    })
                    .map_or_else(|| SINGLE.to_string(), |j| j.1.clone())
            });
            let mut members = s.members.clone();
            members.extend(js.iter().map(|j| j.0));
            ClusterGroup {
                members,
                seed_members: s.members.clone(),
                label,
            }
        })
        .collect();
    groups.extend(loners.into_iter().map(|p| ClusterGroup {
        members: BTreeSet::from([p]),
        seed_members: BTreeSet::new(),
        label: SINGLE.to_string(),
    }));
    groups.sort_by_key(|g| *g.members.first().expect("nonempty group"));
    Ok(Partition {
        frame: ctx.frame,
        groups,
    })
}

/// All four clustering steps for one frame.
pub fn cluster_frame(ctx: &FrameContext, bank: &PreparedBank, th: &Thresholds) -> Result<Partition, SeqError> {
    let taxonomy = &bank.bank.taxonomy;
    let seeds = merge_seeds(detect_seeds(ctx, taxonomy, th), ctx, taxonomy);
    let reps = seed_representatives(&seeds, ctx);
    assign_remaining(ctx, taxonomy, &seeds, &reps, |a, b| bank.correlate_entities(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn still(x: f64) -> Vec<Kinematics> {
        vec![
            Kinematics {
                x,
                y: 0.0,
                dx: 0.0,
                dy: 0.0,
                speed: 0.0,
                change_of_width: 0.0,
                change_of_height: 0.0,
            };
            3
        ]
    }

    fn certain(label: &str) -> CorrelationProfile {
        let mut m = BTreeMap::new();
        for l in Taxonomy::standard().pairwise_labels() {
            m.insert(l.to_string(), if l == label { 0.0 } else { -50.0 });
        }
        CorrelationProfile::from_log_masses(m)
    }

    /// Context whose pairwise labels come from `label(a, b)`, all certain.
    fn ctx(persons: &[PersonId], active: &[PersonId], label: impl Fn(PersonId, PersonId) -> &'static str) -> FrameContext {
        FrameContext::from_parts(
            9,
            persons.to_vec(),
            persons.iter().map(|&p| still(p as f64)).collect(),
            persons.iter().map(|p| if active.contains(p) { 0.5 } else { 0.0 }).collect(),
            |a, b| certain(label(a, b)),
        )
    }

    fn th() -> Thresholds {
        Thresholds::default()
    }

    fn set(v: &[PersonId]) -> BTreeSet<PersonId> {
        v.iter().copied().collect()
    }

    #[test]
    fn no_seeds_when_nothing_fires() {
        let c = ctx(&[1, 2, 3], &[], |_, _| "Ignore");
        assert!(detect_seeds(&c, &Taxonomy::standard(), &th()).is_empty());
        let p = assign_remaining(&c, &Taxonomy::standard(), &[], &[], |_, _| unreachable!()).unwrap();
        assert_eq!(p.groups.len(), 3);
        assert!(p.groups.iter().all(|g| g.label == SINGLE && g.members.len() == 1));
    }

    #[test]
    fn active_person_seed() {
        let c = ctx(&[1, 2], &[2], |_, _| "Ignore");
        let s = detect_seeds(&c, &Taxonomy::standard(), &th());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].kind, SeedKind::Active);
        assert_eq!(s[0].members, set(&[2]));
    }

    #[test]
    fn pair_seed_needs_mutual_symmetric_label() {
        let c = ctx(&[1, 2], &[], |_, _| "WalkTogether");
        let s = detect_seeds(&c, &Taxonomy::standard(), &th());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].label.as_deref(), Some("WalkTogether"));
        let c = ctx(&[1, 2], &[], |a, _| if a == 1 { "WalkTogether" } else { "Fight" });
        assert!(detect_seeds(&c, &Taxonomy::standard(), &th()).is_empty());
        let c = ctx(&[1, 2], &[], |_, _| "Chase");
        assert!(detect_seeds(&c, &Taxonomy::standard(), &th()).is_empty());
    }

    #[test]
    fn agreeing_pair_seeds_merge() {
        let c = ctx(&[1, 2, 3, 4], &[], |_, _| "Fight");
        let tax = Taxonomy::standard();
        let seeds = merge_seeds(detect_seeds(&c, &tax, &th()), &c, &tax);
        assert_eq!(seeds.len(), 1);
        assert_eq!(seeds[0].members, set(&[1, 2, 3, 4]));
        assert_eq!(seeds[0].label.as_deref(), Some("Fight"));
    }

    #[test]
    fn mismatched_active_seed_stays_apart() {
        let tax = Taxonomy::standard();
        let c = ctx(&[1, 2, 3], &[3], |a, b| {
            if a == 3 || b == 3 {
                "Ignore"
            } else {
                "WalkTogether"
            }
        });
        let seeds = merge_seeds(detect_seeds(&c, &tax, &th()), &c, &tax);
        assert_eq!(seeds.len(), 2);
    }

    #[test]
    fn chain_without_closure_does_not_merge() {
        let tax = Taxonomy::standard();
        let c = ctx(&[1, 2, 3], &[], |a, b| {
            if a.min(b) == 1 && a.max(b) == 3 {
                "Ignore"
            } else {
                "InGroup"
            }
        });
        let seeds = vec![
            ClusterSeed {
                members: set(&[1, 2]),
                kind: SeedKind::Pair,
                label: Some("InGroup".into()),
                strength: 2.0,
            },
            ClusterSeed {
                members: set(&[3]),
                kind: SeedKind::Active,
                label: None,
                strength: 0.0,
            },
        ];
        let merged = merge_seeds(seeds, &c, &tax);
        assert_eq!(merged.len(), 2);
    }

    #[test]
    fn overlapping_conflict_keeps_stronger_pair() {
        let tax = Taxonomy::standard();
        let c = ctx(&[1, 2, 3], &[], |_, _| "Ignore");
        let seeds = vec![
            ClusterSeed {
                members: set(&[1, 2]),
                kind: SeedKind::Pair,
                label: Some("Fight".into()),
                strength: 1.9,
            },
            ClusterSeed {
                members: set(&[2, 3]),
                kind: SeedKind::Pair,
                label: Some("InGroup".into()),
                strength: 1.99,
            },
        ];
        let merged = merge_seeds(seeds, &c, &tax);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].members, set(&[2, 3]));
    }

    #[test]
    fn representative_is_mean() {
        let c = ctx(&[1, 2], &[], |_, _| "Ignore");
        let seed = ClusterSeed {
            members: set(&[1, 2]),
            kind: SeedKind::Pair,
            label: None,
            strength: 0.0,
        };
        let r = seed_representatives(&[seed], &c);
        assert!(r[0].sequence.iter().all(|k| k.x == 1.5));
        let single = ClusterSeed {
            members: set(&[2]),
            kind: SeedKind::Active,
            label: None,
            strength: 0.0,
        };
        assert_eq!(seed_representatives(&[single], &c)[0].sequence, c.window(2));
    }

    #[test]
    fn remaining_person_joins_symmetric_seed_only() {
        let tax = Taxonomy::standard();
        let c = ctx(&[1, 2, 3, 4], &[], |_, _| "Ignore");
        let seeds = vec![ClusterSeed {
            members: set(&[1, 2]),
            kind: SeedKind::Pair,
            label: Some("WalkTogether".into()),
            strength: 2.0,
        }];
        let reps = seed_representatives(&seeds, &c);
        let p = assign_remaining(&c, &tax, &seeds, &reps, |a, _| {
            Ok(certain(if a[0].x == 3.0 { "WalkTogether" } else { "Approach" }))
        })
        .unwrap();
        assert_eq!(p.groups.len(), 2);
        assert_eq!(p.groups[0].members, set(&[1, 2, 3]));
        assert_eq!(p.groups[0].seed_members, set(&[1, 2]));
        assert_eq!(p.groups[1].label, SINGLE);
        assert!(p.is_partition_of(&[1, 2, 3, 4]));
    }

    #[test]
    fn active_seed_takes_joiner_label() {
        let tax = Taxonomy::standard();
        let c = ctx(&[1, 2, 3], &[1], |_, _| "Ignore");
        let seeds = merge_seeds(detect_seeds(&c, &tax, &th()), &c, &tax);
        let reps = seed_representatives(&seeds, &c);
        let p = assign_remaining(&c, &tax, &seeds, &reps, |a, _| {
            Ok(certain(if a[0].x == 2.0 { "Fight" } else { "Ignore" }))
        })
        .unwrap();
        assert_eq!(p.groups[0].members, set(&[1, 2]));
        assert_eq!(p.groups[0].label, "Fight");
        let alone = assign_remaining(&c, &tax, &seeds, &reps, |_, _| Ok(certain("Ignore"))).unwrap();
        assert_eq!(alone.groups[0].label, SINGLE);
    }
}
