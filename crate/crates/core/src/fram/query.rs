use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Aspect, FramModel};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("unknown function {0:?}")]
    UnknownFunction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Upstream,
    Downstream,
}

/// Identity of a coupling for set comparisons.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CouplingKey {
    pub from: String,
    pub to: String,
    pub aspect: Aspect,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelDiff {
    pub added_functions: BTreeSet<String>,
    pub removed_functions: BTreeSet<String>,
    pub added_couplings: BTreeSet<CouplingKey>,
    pub removed_couplings: BTreeSet<CouplingKey>,
}

impl ModelDiff {
    pub fn is_empty(&self) -> bool {
        self.added_functions.is_empty()
            && self.removed_functions.is_empty()
            && self.added_couplings.is_empty()
            && self.removed_couplings.is_empty()
    }
}

/// Functions reachable from `start` along couplings, up to `depth` hops
/// (`None` means unbounded). `start` itself is never part of the result.
pub fn neighborhood(
    model: &FramModel,
    start: &str,
    direction: Direction,
    depth: Option<usize>,
) -> Result<BTreeSet<String>, QueryError> {
    if !model.contains(start) {
        return Err(QueryError::UnknownFunction(start.to_string()));
    }
    let mut found = BTreeSet::new();
    let mut visited = BTreeSet::from([start.to_string()]);
    let mut queue = VecDeque::from([(start.to_string(), 0usize)]);
    while let Some((id, d)) = queue.pop_front() {
        if depth.is_some_and(|max| d >= max) {
            continue;
        }
        let next: Vec<&str> = match direction {
            Direction::Downstream => model.outgoing(&id).map(|c| c.to.as_str()).collect(),
            Direction::Upstream => model.incoming(&id).map(|c| c.from.as_str()).collect(),
        };
        for n in next {
            if visited.insert(n.to_string()) {
                found.insert(n.to_string());
                queue.push_back((n.to_string(), d + 1));
            }
        }
    }
    Ok(found)
}

pub fn diff(base: &FramModel, improved: &FramModel) -> ModelDiff {
    let ids = |m: &FramModel| -> BTreeSet<String> { m.functions.iter().map(|f| f.id.clone()).collect() };
    let keys = |m: &FramModel| -> BTreeSet<CouplingKey> { m.couplings.iter().map(|c| c.key()).collect() };
    let (fa, fb) = (ids(base), ids(improved));
    let (ca, cb) = (keys(base), keys(improved));
    ModelDiff {
        added_functions: fb.difference(&fa).cloned().collect(),
        removed_functions: fa.difference(&fb).cloned().collect(),
        added_couplings: cb.difference(&ca).cloned().collect(),
        removed_couplings: ca.difference(&cb).cloned().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fram::{
        shipped_improved, shipped_initial, ActorClass, Coupling, FramFunction, Group, ADDED_FUNCTIONALITIES,
        AMR_ONLY_FUNCTIONALITIES,
    };

    fn chain() -> FramModel {
        FramModel::new("chain")
            .with_function(FramFunction::new("a", "A", ActorClass::Amr, Group::Recognition))
            .with_function(FramFunction::new("b", "B", ActorClass::Amr, Group::Judgment))
            .with_function(FramFunction::new("c", "C", ActorClass::Amr, Group::Action))
            .with_function(FramFunction::new("lone", "L", ActorClass::Amr, Group::Action))
            .with_coupling(Coupling::new("a", "b", Aspect::Input, ""))
            .with_coupling(Coupling::new("b", "c", Aspect::Input, ""))
    }

    #[test]
    fn isolated_function_has_empty_neighborhood() {
        let m = chain();
        for dir in [Direction::Upstream, Direction::Downstream] {
            assert!(neighborhood(&m, "lone", dir, None).unwrap().is_empty());
        }
    }

    #[test]
    fn chain_closure() {
        let m = chain();
        let down = neighborhood(&m, "a", Direction::Downstream, None).unwrap();
        assert_eq!(down, BTreeSet::from(["b".to_string(), "c".to_string()]));
        let one = neighborhood(&m, "a", Direction::Downstream, Some(1)).unwrap();
        assert_eq!(one, BTreeSet::from(["b".to_string()]));
        let up = neighborhood(&m, "c", Direction::Upstream, None).unwrap();
        assert_eq!(up, BTreeSet::from(["a".to_string(), "b".to_string()]));
    }

    #[test]
    fn unknown_start_is_an_error() {
        assert_eq!(
            neighborhood(&chain(), "zz", Direction::Upstream, None),
            Err(QueryError::UnknownFunction("zz".into()))
        );
    }

    #[test]
    fn diff_with_self_is_empty() {
        let m = shipped_improved();
        assert!(diff(&m, &m).is_empty());
    }

    #[test]
    fn shipped_diff_adds_one_function_per_functionality() {
        let (a, b) = (shipped_initial(), shipped_improved());
        let d = diff(&a, &b);
        assert_eq!(d.added_functions.len(), ADDED_FUNCTIONALITIES.len());
        assert!(d.removed_functions.is_empty());
        for name in ADDED_FUNCTIONALITIES {
            let hits: Vec<_> = d
                .added_functions
                .iter()
                .filter(|id| b.function(id).unwrap().name == name)
                .collect();
            assert_eq!(hits.len(), 1, "{name}");
        }
        for name in AMR_ONLY_FUNCTIONALITIES {
            assert_eq!(b.function_by_name(name).unwrap().actor_class, ActorClass::Amr);
        }
        // The prediction/learning relationship was rewired.
        assert!(!d.removed_couplings.is_empty());
    }

    #[test]
    fn diff_is_antisymmetric() {
        let (a, b) = (shipped_initial(), shipped_improved());
        let (ab, ba) = (diff(&a, &b), diff(&b, &a));
        assert_eq!(ab.added_functions, ba.removed_functions);
        assert_eq!(ab.removed_functions, ba.added_functions);
        assert_eq!(ab.added_couplings, ba.removed_couplings);
        assert_eq!(ab.removed_couplings, ba.added_couplings);
    }
}
