use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::CoevoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    ChangeNotification,
    InterruptionNotice,
    PreferenceRequest,
    PreferenceReply,
    ProgressReport,
    SuppressionOrder,
    ResumeOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeTopic {
    Predictor,
    SupplyInterval,
    Route,
}

/// Structured message body. The variant must agree with the message kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MessagePayload {
    ChangeNotification {
        topic: ChangeTopic,
        before: String,
        after: String,
    },
    InterruptionNotice {
        reason: String,
    },
    PreferenceRequest,
    PreferenceReply {
        preferred_margin: u32,
        preferred_supply_interval: u32,
    },
    ProgressReport {
        shipped: u32,
        target: u32,
    },
    SuppressionOrder,
    ResumeOrder,
}

impl MessagePayload {
    pub fn kind(&self) -> MessageKind {
        match self {
            MessagePayload::ChangeNotification { .. } => MessageKind::ChangeNotification,
            MessagePayload::InterruptionNotice { .. } => MessageKind::InterruptionNotice,
            MessagePayload::PreferenceRequest => MessageKind::PreferenceRequest,
            MessagePayload::PreferenceReply { .. } => MessageKind::PreferenceReply,
            MessagePayload::ProgressReport { .. } => MessageKind::ProgressReport,
            MessagePayload::SuppressionOrder => MessageKind::SuppressionOrder,
            MessagePayload::ResumeOrder => MessageKind::ResumeOrder,
        }
    }

    /// The payload for kinds that carry no data.
    pub fn empty_for(kind: MessageKind) -> Option<MessagePayload> {
        match kind {
            MessageKind::PreferenceRequest => Some(MessagePayload::PreferenceRequest),
            MessageKind::SuppressionOrder => Some(MessagePayload::SuppressionOrder),
            MessageKind::ResumeOrder => Some(MessagePayload::ResumeOrder),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub id: u64,
    pub tick: u64,
    pub sender: String,
    pub receivers: Vec<String>,
    pub kind: MessageKind,
    pub payload: MessagePayload,
    /// Agents the content concerns, as judged by the sender.
    pub affected: Vec<String>,
}

/// Messages in flight. Delivery happens one tick after sending.
#[derive(Debug, Clone, Default)]
pub struct MessageBus {
    in_flight: Vec<Message>,
    next_id: u64,
}

impl MessageBus {
    /// Validates and enqueues a message, assigning its id.
    #[allow(clippy::too_many_arguments)]
    pub fn send(
        &mut self,
        known: &BTreeSet<String>,
        tick: u64,
        sender: &str,
        receivers: Vec<String>,
        kind: MessageKind,
        payload: MessagePayload,
        affected: Vec<String>,
    ) -> Result<Message, CoevoError> {
        if receivers.is_empty() {
            return Err(CoevoError::UnknownReceiver(String::new()));
        }
        if let Some(r) = receivers.iter().find(|r| !known.contains(*r)) {
            return Err(CoevoError::UnknownReceiver(r.clone()));
        }
        if payload.kind() != kind {
            return Err(CoevoError::MalformedPayload {
                kind,
                found: payload.kind(),
            });
        }
        let msg = Message {
            id: self.next_id,
            tick,
            sender: sender.to_string(),
            receivers,
            kind,
            payload,
            affected,
        };
        self.next_id += 1;
        self.in_flight.push(msg.clone());
        Ok(msg)
    }

    /// Removes and returns every message due for delivery at `tick`.
    pub fn take_due(&mut self, tick: u64) -> Vec<Message> {
        let (due, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.in_flight)
            .into_iter()
            .partition(|m| m.tick < tick);
        self.in_flight = rest;
        due
    }

    pub fn pending(&self) -> usize {
        self.in_flight.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn known() -> BTreeSet<String> {
        ["amr1", "w1", "control_center"]
            .into_iter()
            .map(String::from)
            .collect()
    }

    #[test]
    fn one_tick_latency() {
        let mut bus = MessageBus::default();
        let m = bus
            .send(
                &known(),
                5,
                "w1",
                vec!["amr1".into()],
                MessageKind::SuppressionOrder,
                MessagePayload::SuppressionOrder,
                vec!["amr1".into()],
            )
            .unwrap();
        assert_eq!(m.id, 0);
        assert!(bus.take_due(5).is_empty());
        assert_eq!(bus.take_due(6).len(), 1);
        assert_eq!(bus.pending(), 0);
    }

    #[test]
    fn schema_mismatch_is_rejected_without_side_effects() {
        let mut bus = MessageBus::default();
        let err = bus
            .send(
                &known(),
                1,
                "w1",
                vec!["amr1".into()],
                MessageKind::ResumeOrder,
                MessagePayload::SuppressionOrder,
                vec![],
            )
            .unwrap_err();
        assert!(matches!(err, CoevoError::MalformedPayload { .. }));
        assert_eq!(bus.pending(), 0);
        let next = bus
            .send(
                &known(),
                1,
                "w1",
                vec!["amr1".into()],
                MessageKind::ResumeOrder,
                MessagePayload::ResumeOrder,
                vec![],
            )
            .unwrap();
        assert_eq!(next.id, 0);
    }

    #[test]
    fn unknown_receiver() {
        let mut bus = MessageBus::default();
        let err = bus
            .send(
                &known(),
                1,
                "w1",
                vec!["ghost".into()],
                MessageKind::ResumeOrder,
                MessagePayload::ResumeOrder,
                vec![],
            )
            .unwrap_err();
        assert_eq!(err, CoevoError::UnknownReceiver("ghost".into()));
    }

    #[test]
    fn payload_serializes_with_type_tag() {
        let p = MessagePayload::PreferenceReply {
            preferred_margin: 2,
            preferred_supply_interval: 3,
        };
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(
            s,
            r#"{"type":"preference_reply","preferred_margin":2,"preferred_supply_interval":3}"#
        );
        assert_eq!(serde_json::from_str::<MessagePayload>(&s).unwrap(), p);
    }
}
