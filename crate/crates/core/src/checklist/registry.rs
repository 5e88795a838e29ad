use serde::{Deserialize, Serialize};

use super::{CheckKind, Metric, Source, Status};

/// Thresholds the trace predicates use. None of them come with the
/// guidelines themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckParams {
    /// Ticks within which a change must be followed by a notification.
    pub notify_within: u64,
    /// Interruption notices a worker may receive per 100 ticks.
    pub interruption_budget: u32,
}

impl Default for CheckParams {
    fn default() -> Self {
        CheckParams {
            notify_within: 5,
            interruption_budget: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registry {
    #[serde(default)]
    pub params: CheckParams,
    pub metrics: Vec<Metric>,
}

fn metric(
    id: &str,
    source: Source,
    name: &str,
    expected: Status,
    check: CheckKind,
    enablers: &[&str],
) -> Metric {
    Metric {
        id: id.into(),
        source,
        name: name.into(),
        expected_status: expected,
        check_kind: check,
        enablers: enablers.iter().map(|s| s.to_string()).collect(),
    }
}

const RECORD_PRED: &str = "Recording of predictions";
const RECORD_OBS: &str = "Recording of actual measurements";
const EVALUATE: &str = "Evaluation of differences between predictions and actual measurements";
const UPDATE: &str = "Updating prediction functions";
const PRE_EVAL: &str = "Pre-evaluating of learned prediction function updates";
const SEND: &str = "Generating and sending messages";
const RECEIVE: &str = "Receiving and interpreting messages";
const PREFERENCE: &str = "Preference requesting";
const CONFIGURE: &str = "Configuring learning function settings";
const MONITOR: &str = "Monitoring task progress";
const SUPPRESS: &str = "Suppressing activity";

impl Registry {
    /// The sixteen evaluation metrics with their expected statuses.
    pub fn builtin() -> Registry {
        use CheckKind::*;
        use Source::*;
        use Status::*;
        Registry {
            params: CheckParams::default(),
            metrics: vec![
                metric(
                    "remember_recent_interactions",
                    GuidelinesHai,
                    "Remember recent interactions",
                    AE,
                    TracePredicate,
                    &[RECORD_PRED, RECORD_OBS],
                ),
                metric(
                    "learn_from_user_behavior",
                    GuidelinesHai,
                    "Learn from user behavior",
                    C,
                    Statistical,
                    &[EVALUATE, UPDATE],
                ),
                metric(
                    "update_and_adapt_cautiously",
                    GuidelinesHai,
                    "Update and adapt cautiously",
                    AE,
                    TracePredicate,
                    &[PRE_EVAL, UPDATE],
                ),
                metric(
                    "encourage_granular_feedback",
                    GuidelinesHai,
                    "Encourage granular feedback",
                    AE,
                    TracePredicate,
                    &[PREFERENCE, RECEIVE],
                ),
                metric(
                    "convey_consequences_of_user_actions",
                    GuidelinesHai,
                    "Convey the consequences of user actions",
                    AE,
                    TracePredicate,
                    &[SEND],
                ),
                metric(
                    "provide_global_controls",
                    GuidelinesHai,
                    "Provide global controls",
                    AE,
                    TracePredicate,
                    &[CONFIGURE, SUPPRESS],
                ),
                metric(
                    "notify_users_about_changes",
                    SharedControl,
                    "Notify users about changes",
                    AE,
                    TracePredicate,
                    &[SEND],
                ),
                metric(
                    "novel_situations",
                    SharedControl,
                    "Novel situations",
                    AE,
                    TracePredicate,
                    &[EVALUATE, SUPPRESS],
                ),
                metric(
                    "context_aware_communication",
                    SharedControl,
                    "Context-aware communication",
                    AE,
                    TracePredicate,
                    &[SEND, RECEIVE],
                ),
                metric(
                    "performance_vs_preference",
                    SharedControl,
                    "Performance vs preference",
                    AE,
                    TracePredicate,
                    &[PREFERENCE],
                ),
                metric(
                    "interruptions_and_cognitive_burden",
                    HrcMl,
                    "Interruptions and cognitive burden",
                    AE,
                    TracePredicate,
                    &[SEND],
                ),
                metric(
                    "precision_of_movement",
                    HrcMl,
                    "Precision of movement",
                    AN,
                    Declared,
                    &[],
                ),
                metric("robustness", HrcMl, "Robustness", AE, TracePredicate, &[MONITOR]),
                metric("proof_of_concept", HrcMl, "Proof of concept", NA, Declared, &[]),
                metric(
                    "performance_improvement",
                    HrcMl,
                    "Performance improvement",
                    C,
                    Statistical,
                    &[MONITOR],
                ),
                metric(
                    "reduction_of_physical_workload",
                    HrcMl,
                    "Reduction of physical workload",
                    AN,
                    Declared,
                    &[],
                ),
            ],
        }
    }

    pub fn metric(&self, id: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.id == id)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::builtin()
    }
}
