//! Group representatives: a single entity standing for a symmetric group.
//!
//! * `P` picks the member that best fits the group's activity.
//! * `V` averages all members.
//! * `SV` averages only the members whose normalized fit exceeds a threshold.
//!
//! A member's fit combines the marginal emission density of its pair
//! features against the rest of the group with the correlations the other
//! members have towards it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{mean_sequence, FrameContext};
use crate::features::{pair_between, Kinematics};
use crate::logspace::{log_sum_exp, softmax};
use crate::seqmodel::{ActivityModelBank, SeqError};
use crate::trackio::PersonId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrKind {
    #[default]
    P,
    V,
    Sv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRepresentative {
    pub kind: GrKind,
    /// Kinematics over the frame's window.
    pub sequence: Vec<Kinematics>,
    /// The selected member, for `P`.
    pub person: Option<PersonId>,
    /// Members the sequence is built from.
    pub subset: BTreeSet<PersonId>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrError {
    #[error("group has no members")]
    EmptyGroup,
    #[error("person {0} has no observations in this frame")]
    UnknownPerson(PersonId),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

fn check(ctx: &FrameContext, group: &BTreeSet<PersonId>) -> Result<(), GrError> {
    if group.is_empty() {
        return Err(GrError::EmptyGroup);
    }
    match group.iter().find(|&&p| ctx.index(p).is_none()) {
        Some(&p) => Err(GrError::UnknownPerson(p)),
        None => Ok(()),
    }
}

/// Log fit of every member to activity `label`, in member order.
///
/// `ln p(F_i(t) | label) + sum over other members j of co_j(i)` under
/// `label`, where the density is the entry-weighted mixture of the
/// activity's per-state marginal emissions, evaluated on the pair features
/// of `i` against the mean of the other members at the last window frame.
/// A singleton scores 0.
pub fn member_scores(
    bank: &ActivityModelBank,
    ctx: &FrameContext,
    group: &BTreeSet<PersonId>,
    label: &str,
) -> Result<Vec<(PersonId, f64)>, GrError> {
    check(ctx, group)?;
    if group.len() == 1 {
        return Ok(vec![(*group.first().expect("nonempty"), 0.0)]);
    }
    let model = bank
        .model(label)
        .and_then(|m| m.pair.as_ref())
        .ok_or_else(|| SeqError::MissingModel(label.to_string()))?;
    let ln_entry: Vec<f64> = model.topology.entry.iter().map(|&e| crate::logspace::ln(e)).collect();
    let marginals: Vec<_> = model.marginal.iter().map(|m| m.prepare()).collect();
    let last = |p: PersonId| *ctx.window(p).last().expect("windows have at least two frames");
    group
        .iter()
        .map(|&i| {
            let others: Vec<Kinematics> = group.iter().filter(|&&j| j != i).map(|&j| last(j)).collect();
            let rest = Kinematics::mean(&others).expect("group has another member");
            let x = pair_between(&last(i), &rest).to_vec();
            let terms: Vec<f64> = ln_entry
                .iter()
                .zip(&marginals)
                .map(|(e, m)| e + m.log_density(&x))
                .collect();
            let prior: f64 = group
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| ctx.profile(j, i).value(label))
                .sum();
            Ok((i, log_sum_exp(&terms) + prior))
        })
        .collect()
}

/// Highest score; ties go to the smaller person id.
pub fn select_person(scores: &[(PersonId, f64)]) -> Option<PersonId> {
    scores
        .iter()
        .fold(None::<(PersonId, f64)>, |best, &(p, s)| match best {
            Some((bp, bs)) if bs > s || (bs == s && bp < p) => Some((bp, bs)),
            _ => Some((p, s)),
        })
        .map(|(p, _)| p)
}

/// Members whose normalized score exceeds `threshold`, with the normalized
/// weights in member order.
pub fn representative_subset(scores: &[(PersonId, f64)], threshold: f64) -> (BTreeSet<PersonId>, Vec<f64>) {
    let logs: Vec<f64> = scores.iter().map(|s| s.1).collect();
    let weights = softmax(&logs);
    let subset = scores
        .iter()
        .zip(&weights)
        .filter(|(_, &w)| w > threshold)
        .map(|(s, _)| s.0)
        .collect();
    (subset, weights)
}

pub fn p_gr(
    bank: &ActivityModelBank,
    ctx: &FrameContext,
    group: &BTreeSet<PersonId>,
    label: &str,
) -> Result<GroupRepresentative, GrError> {
    let scores = member_scores(bank, ctx, group, label)?;
    let p = select_person(&scores).ok_or(GrError::EmptyGroup)?;
    Ok(GroupRepresentative {
        kind: GrKind::P,
        sequence: ctx.window(p).to_vec(),
        person: Some(p),
        subset: BTreeSet::from([p]),
    })
}

pub fn v_gr(ctx: &FrameContext, group: &BTreeSet<PersonId>) -> Result<GroupRepresentative, GrError> {
    check(ctx, group)?;
    Ok(GroupRepresentative {
        kind: GrKind::V,
        sequence: mean_sequence(group.iter().map(|&p| ctx.window(p))),
        person: None,
        subset: group.clone(),
    })
}

/// Mean over the representative subset; the plain mean when it is empty.
pub fn sv_gr(
    bank: &ActivityModelBank,
    ctx: &FrameContext,
    group: &BTreeSet<PersonId>,
    label: &str,
    threshold: f64,
) -> Result<GroupRepresentative, GrError> {
    let scores = member_scores(bank, ctx, group, label)?;
    let (subset, _) = representative_subset(&scores, threshold);
    if subset.is_empty() {
        return Ok(GroupRepresentative {
            kind: GrKind::Sv,
            ..v_gr(ctx, group)?
        });
    }
    Ok(GroupRepresentative {
        kind: GrKind::Sv,
        sequence: mean_sequence(subset.iter().map(|&p| ctx.window(p))),
        person: None,
        subset,
    })
}

pub fn group_representative(
    kind: GrKind,
    bank: &ActivityModelBank,
    ctx: &FrameContext,
    group: &BTreeSet<PersonId>,
    label: &str,
    threshold: f64,
) -> Result<GroupRepresentative, GrError> {
    match kind {
        GrKind::P => p_gr(bank, ctx, group, label),
        GrKind::V => v_gr(ctx, group),
        GrKind::Sv => sv_gr(bank, ctx, group, label, threshold),
    }
}
