//! Activity vocabulary and the symmetric/asymmetric split.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// How an activity participates in the two-level structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityClass {
    /// Role-interchangeable activity that forms a symmetric group (WalkTogether, Fight, ...).
    Symmetric,
    /// Symmetric but never forms a group: the non-interaction case (Ignore).
    NonInteraction,
    /// Label for a person that belongs to no symmetric group.
    Solitary,
    /// Order-dependent activity between two entities (Chase, Approach, Split).
    Asymmetric,
}

impl ActivityClass {
    pub fn is_symmetric(self) -> bool {
        !matches!(self, ActivityClass::Asymmetric)
    }

    /// Whether a pairwise correlation model exists for this class.
    pub fn is_pairwise(self) -> bool {
        !matches!(self, ActivityClass::Solitary)
    }

    pub fn forms_groups(self) -> bool {
        matches!(self, ActivityClass::Symmetric)
    }

    /// Valid as a label between two symmetric groups.
    pub fn is_inter_group(self) -> bool {
        matches!(self, ActivityClass::Asymmetric | ActivityClass::NonInteraction)
    }

    /// Valid as the label of a symmetric group.
    pub fn is_group_level(self) -> bool {
        matches!(self, ActivityClass::Symmetric | ActivityClass::Solitary)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    classes: BTreeMap<String, ActivityClass>,
}

pub const SINGLE: &str = "single";
pub const IGNORE: &str = "Ignore";

impl Taxonomy {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, ActivityClass)>,
        S: Into<String>,
    {
        Self {
            classes: entries.into_iter().map(|(s, c)| (s.into(), c)).collect(),
        }
    }

    /// The eight surveillance activities plus `single`.
    pub fn standard() -> Self {
        use ActivityClass::*;
        Self::new([
            ("InGroup", Symmetric),
            ("WalkTogether", Symmetric),
            ("Fight", Symmetric),
            ("RunTogether", Symmetric),
            (IGNORE, NonInteraction),
            ("Approach", Asymmetric),
            ("Split", Asymmetric),
            ("Chase", Asymmetric),
            (SINGLE, Solitary),
        ])
    }

    pub fn class(&self, label: &str) -> Option<ActivityClass> {
        self.classes.get(label).copied()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.classes.contains_key(label)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// All labels in lexicographic order.
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.classes.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, ActivityClass)> {
        self.classes.iter().map(|(k, v)| (k.as_str(), *v))
    }

    fn filtered(&self, pred: impl Fn(ActivityClass) -> bool) -> Vec<&str> {
        self.iter()
            .filter(|(_, c)| pred(*c))
            .map(|(l, _)| l)
            .collect()
    }

    pub fn pairwise_labels(&self) -> Vec<&str> {
        self.filtered(ActivityClass::is_pairwise)
    }

    pub fn grouping_labels(&self) -> Vec<&str> {
        self.filtered(ActivityClass::forms_groups)
    }

    pub fn inter_group_labels(&self) -> Vec<&str> {
        self.filtered(ActivityClass::is_inter_group)
    }

    /// Label used for pairs of groups with no recorded interaction.
    pub fn non_interaction(&self) -> Option<&str> {
        self.filtered(|c| c == ActivityClass::NonInteraction)
            .first()
            .copied()
    }

    pub fn solitary(&self) -> Option<&str> {
        self.filtered(|c| c == ActivityClass::Solitary).first().copied()
    }

    pub fn is_grouping(&self, label: &str) -> bool {
        self.class(label).is_some_and(ActivityClass::forms_groups)
    }
}

impl Default for Taxonomy {
    fn default() -> Self {
        Self::standard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_split() {
        let t = Taxonomy::standard();
        assert_eq!(t.len(), 9);
        assert_eq!(
            t.grouping_labels(),
            vec!["Fight", "InGroup", "RunTogether", "WalkTogether"]
        );
        assert_eq!(t.inter_group_labels(), vec!["Approach", "Chase", IGNORE, "Split"]);
        assert_eq!(t.pairwise_labels().len(), 8);
        assert_eq!(t.non_interaction(), Some(IGNORE));
        assert_eq!(t.solitary(), Some(SINGLE));
        assert!(t.class("Chase").is_some_and(|c| !c.is_symmetric()));
        assert!(t.class(IGNORE).is_some_and(|c| c.is_symmetric()));
    }
}
