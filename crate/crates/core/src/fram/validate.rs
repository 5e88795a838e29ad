use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ActorClass, Aspect, FramModel, Group};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueCode {
    UnknownEndpoint,
    DuplicateFunction,
    DuplicateCoupling,
    EmptyName,
    GroupMismatch,
    OrphanInput,
    UnknownSource,
    SelfLoop,
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("enum serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    /// Function id, or `from->to:aspect` for couplings.
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, code: IssueCode, subject: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Issue {
            code,
            subject: subject.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, code: IssueCode, subject: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Issue {
            code,
            subject: subject.into(),
            message: message.into(),
        });
    }
}

/// Collects every structural problem in `model`. Problems are report
/// entries, never failures.
pub fn validate(model: &FramModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut ids = HashSet::new();

    for f in &model.functions {
        if !ids.insert(f.id.as_str()) {
            report.error(IssueCode::DuplicateFunction, &f.id, "function id is not unique");
        }
        if f.name.trim().is_empty() {
            report.error(IssueCode::EmptyName, &f.id, "function name is empty");
        }
        let consistent = match f.actor_class {
            ActorClass::External => f.group == Group::External,
            ActorClass::World => f.group == Group::World,
            ActorClass::Amr | ActorClass::Worker => !matches!(f.group, Group::External | Group::World),
        };
        if !consistent {
            report.error(
                IssueCode::GroupMismatch,
                &f.id,
                format!(
                    "actor class {:?} cannot sit in group {:?}",
                    f.actor_class, f.group
                ),
            );
        }
    }

    let mut seen = BTreeSet::new();
    for c in &model.couplings {
        let subject = format!("{}->{}:{}", c.from, c.to, c.aspect);
        for end in [&c.from, &c.to] {
            if !ids.contains(end.as_str()) {
                report.error(
                    IssueCode::UnknownEndpoint,
                    &subject,
                    format!("coupling refers to unknown function {end:?}"),
                );
            }
        }
        if !seen.insert(c.key()) {
            report.error(IssueCode::DuplicateCoupling, &subject, "coupling listed twice");
        }
        if c.from == c.to {
            report.warn(IssueCode::SelfLoop, &subject, "function feeds its own aspect");
        }
    }

    for s in &model.sources {
        if !ids.contains(s.as_str()) {
            report.error(IssueCode::UnknownSource, s, "declared source is not a function");
        }
    }

    for f in &model.functions {
        if f.is_boundary() || model.sources.iter().any(|s| s == &f.id) {
            continue;
        }
        let fed = model
            .incoming(&f.id)
            .any(|c| c.aspect == Aspect::Input && ids.contains(c.from.as_str()));
        if !fed {
            report.error(
                IssueCode::OrphanInput,
                &f.id,
                "no upstream output reaches the input aspect",
            );
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fram::{shipped_improved, shipped_initial, Coupling, FramFunction};

    fn pair() -> FramModel {
        FramModel::new("pair")
            .with_function(FramFunction::new("a", "A", ActorClass::Amr, Group::Recognition))
            .with_function(FramFunction::new("b", "B", ActorClass::Amr, Group::Judgment))
            .with_coupling(Coupling::new("a", "b", Aspect::Input, "data"))
            .with_source("a")
    }

    #[test]
    fn well_formed_pair_is_valid() {
        let r = validate(&pair());
        assert!(r.is_valid(), "{r:?}");
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn coupling_to_missing_function_is_one_error() {
        let m = pair().with_coupling(Coupling::new("a", "ghost", Aspect::Control, "x"));
        let r = validate(&m);
        assert_eq!(r.errors.len(), 1, "{r:?}");
        assert_eq!(r.errors[0].code, IssueCode::UnknownEndpoint);
    }

    #[test]
    fn shipped_models_are_valid() {
        for m in [shipped_initial(), shipped_improved()] {
            let r = validate(&m);
            assert!(r.errors.is_empty(), "{}: {:?}", m.name, r.errors);
        }
    }

    #[test]
    fn duplicate_coupling_and_orphan_are_reported() {
        let mut m = pair()
            .with_coupling(Coupling::new("a", "b", Aspect::Input, "data"))
            .with_function(FramFunction::new("c", "C", ActorClass::Worker, Group::Action))
            .with_coupling(Coupling::new("b", "c", Aspect::Control, "ctl"));
        m.couplings.push(Coupling::new("c", "c", Aspect::Time, "loop"));
        let r = validate(&m);
        let codes: Vec<_> = r.errors.iter().map(|i| i.code).collect();
        assert!(codes.contains(&IssueCode::DuplicateCoupling));
        assert!(codes.contains(&IssueCode::OrphanInput));
        assert_eq!(r.warnings[0].code, IssueCode::SelfLoop);
    }

    #[test]
    fn group_mismatch_and_empty_name() {
        let m = FramModel::new("bad").with_function(FramFunction::new(
            "e",
            "",
            ActorClass::External,
            Group::Judgment,
        ));
        let codes: Vec<_> = validate(&m).errors.iter().map(|i| i.code).collect();
        assert!(codes.contains(&IssueCode::EmptyName));
        assert!(codes.contains(&IssueCode::GroupMismatch));
    }

    #[test]
    fn validate_does_not_mutate() {
        let m = shipped_improved();
        let before = m.clone();
        let _ = validate(&m);
        assert_eq!(m, before);
    }
}
