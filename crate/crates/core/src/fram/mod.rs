//! FRAM (Functional Resonance Analysis Method) models.
//!
//! A model is a set of functions coupled through aspects. Every coupling
//! leaves its source through the Output aspect and enters its target through
//! one of the five remaining aspects (input, time, control, precondition,
//! resource). Variability of function outputs can be propagated across the
//! couplings, where coinciding upstream variability amplifies and damping
//! functions attenuate.

mod io;
mod query;
mod validate;
mod variability;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use io::{load_model, parse_model, save_model, to_json, ModelError};
pub use query::{diff, neighborhood, CouplingKey, Direction, ModelDiff, QueryError};
pub use validate::{validate, Issue, IssueCode, ValidationReport};
pub use variability::{
    propagate_counted, propagate_variability, Variability, VariabilityError, VariabilityMap,
};

/// Which kind of actor performs a function. Mirrors the node colors of the
/// reference diagrams (AMR, worker, external input, world reflection).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorClass {
    Amr,
    Worker,
    External,
    World,
}

/// Functional grouping, left to right in the model layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Recognition,
    PredictionLearning,
    Judgment,
    Action,
    External,
    World,
}

/// Target side of a coupling. `Output` is deliberately absent: it is the
/// only source side, so a coupling can never point at it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aspect {
    Input,
    Time,
    Control,
    Precondition,
    Resource,
}

impl Aspect {
    pub const ALL: [Aspect; 5] = [
        Aspect::Input,
        Aspect::Time,
        Aspect::Control,
        Aspect::Precondition,
        Aspect::Resource,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Aspect::Input => "input",
            Aspect::Time => "time",
            Aspect::Control => "control",
            Aspect::Precondition => "precondition",
            Aspect::Resource => "resource",
        }
    }

    pub fn parse(s: &str) -> Option<Aspect> {
        Aspect::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramFunction {
    pub id: String,
    pub name: String,
    pub actor_class: ActorClass,
    pub group: Group,
    /// The function attenuates incoming variability.
    #[serde(default)]
    pub damping: bool,
}

impl FramFunction {
    pub fn new(id: &str, name: &str, actor_class: ActorClass, group: Group) -> Self {
        FramFunction {
            id: id.to_string(),
            name: name.to_string(),
            actor_class,
            group,
            damping: false,
        }
    }

    pub fn damped(mut self) -> Self {
        self.damping = true;
        self
    }

    /// External inputs and the world reflection need no upstream input.
    pub fn is_boundary(&self) -> bool {
        matches!(self.group, Group::External | Group::World)
    }
}

/// An Output → aspect link between two functions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coupling {
    pub from: String,
    pub to: String,
    pub aspect: Aspect,
    pub label: String,
}

impl Coupling {
    pub fn new(from: &str, to: &str, aspect: Aspect, label: &str) -> Self {
        Coupling {
            from: from.to_string(),
            to: to.to_string(),
            aspect,
            label: label.to_string(),
        }
    }

    pub fn key(&self) -> CouplingKey {
        CouplingKey {
            from: self.from.clone(),
            to: self.to.clone(),
            aspect: self.aspect,
            label: self.label.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FramModel {
    pub name: String,
    pub functions: Vec<FramFunction>,
    pub couplings: Vec<Coupling>,
    /// Functions allowed to have no upstream input coupling.
    pub sources: Vec<String>,
}

impl FramModel {
    pub fn new(name: &str) -> Self {
        FramModel {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn function(&self, id: &str) -> Option<&FramFunction> {
        self.functions.iter().find(|f| f.id == id)
    }

    pub fn function_by_name(&self, name: &str) -> Option<&FramFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.function(id).is_some()
    }

    pub fn incoming<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Coupling> + 'a {
        self.couplings.iter().filter(move |c| c.to == id)
    }

    pub fn outgoing<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Coupling> + 'a {
        self.couplings.iter().filter(move |c| c.from == id)
    }

    pub fn with_function(mut self, f: FramFunction) -> Self {
        self.functions.push(f);
        self
    }

    pub fn with_coupling(mut self, c: Coupling) -> Self {
        self.couplings.push(c);
        self
    }

    pub fn with_source(mut self, id: &str) -> Self {
        self.sources.push(id.to_string());
        self
    }
}

/// The model reconstructed for the workspace before the co-evolution
/// additions.
pub fn shipped_initial() -> FramModel {
    parse_model(include_str!("../../assets/models/initial.fram.json")).expect("shipped initial model parses")
}

/// The model after adding the eleven co-evolution functionalities.
pub fn shipped_improved() -> FramModel {
    parse_model(include_str!("../../assets/models/improved.fram.json"))
        .expect("shipped improved model parses")
}

/// Names of the functionalities added on top of the initial model, in the
/// order they are listed in the design notes.
pub const ADDED_FUNCTIONALITIES: [&str; 11] = [
    "Recording of predictions",
    "Recording of actual measurements",
    "Evaluation of differences between predictions and actual measurements",
    "Updating prediction functions",
    "Pre-evaluating of learned prediction function updates",
    "Generating and sending messages",
    "Receiving and interpreting messages",
    "Preference requesting",
    "Configuring learning function settings",
    "Monitoring task progress",
    "Suppressing activity",
];

/// Added functionalities that may only ever belong to AMRs.
pub const AMR_ONLY_FUNCTIONALITIES: [&str; 3] = [
    "Updating prediction functions",
    "Pre-evaluating of learned prediction function updates",
    "Configuring learning function settings",
];
