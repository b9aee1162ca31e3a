//! JSON documents for machines and systems.
//!
//! A machine is written as
//!
//! ```json
//! {
//!   "subject": "J",
//!   "states": ["1", "2"],
//!   "initial": "1",
//!   "transitions": [
//!     {"from": "1", "to": "2", "channel": {"sender": "J", "receiver": "M"}, "dir": "!", "msg": "text"}
//!   ]
//! }
//! ```
//!
//! with an optional `messages` list for messages no transition uses. A
//! system is `{"machines": [...]}`. Output is canonical: states, machines
//! and transitions are sorted, so serializing is the inverse of parsing.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfsm::{Action, Cfsm, Channel, Direction, Message, ModelError, Role, StateId, Transition};
use crate::system::{CommunicatingSystem, SystemError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    System(#[from] SystemError),
}

impl FormatError {
    /// Whether the document could not be read at all, as opposed to
    /// describing an invalid machine or system.
    pub fn is_syntax_error(&self) -> bool {
        matches!(self, FormatError::Json(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDoc {
    sender: Role,
    receiver: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionDoc {
    from: StateId,
    to: StateId,
    channel: ChannelDoc,
    dir: Direction,
    msg: Message,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MachineDoc {
    subject: Role,
    states: Vec<StateId>,
    initial: StateId,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    messages: Vec<Message>,
    transitions: Vec<TransitionDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    machines: Vec<MachineDoc>,
}

impl From<&Cfsm> for MachineDoc {
    fn from(m: &Cfsm) -> Self {
        let mut transitions: Vec<TransitionDoc> = m
            .transitions()
            .iter()
            .map(|t| TransitionDoc {
                from: t.from.clone(),
                to: t.to.clone(),
                channel: ChannelDoc {
                    sender: t.action.channel.sender().clone(),
                    receiver: t.action.channel.receiver().clone(),
                },
                dir: t.action.direction,
                msg: t.action.message.clone(),
            })
            .collect();
        transitions.sort();
        let used: BTreeSet<&Message> = m.transitions().iter().map(|t| &t.action.message).collect();
        MachineDoc {
            subject: m.subject().clone(),
            states: m.states().iter().cloned().collect(),
            initial: m.initial().clone(),
            messages: m.messages().iter().filter(|a| !used.contains(a)).cloned().collect(),
            transitions,
        }
    }
}

impl TryFrom<MachineDoc> for Cfsm {
    type Error = ModelError;

    fn try_from(doc: MachineDoc) -> Result<Self, ModelError> {
        let transitions = doc
            .transitions
            .into_iter()
            .map(|t| {
                let channel = Channel::new(t.channel.sender, t.channel.receiver)?;
                Ok(Transition::new(t.from, Action::new(channel, t.dir, t.msg), t.to))
            })
            .collect::<Result<BTreeSet<_>, ModelError>>()?;
        let mut messages: BTreeSet<Message> = doc.messages.into_iter().collect();
        messages.extend(transitions.iter().map(|t| t.action.message.clone()));
        Cfsm::new(
            doc.subject,
            doc.states.into_iter().collect(),
            doc.initial,
            messages,
            transitions,
        )
    }
}

pub fn machine_to_json(m: &Cfsm) -> String {
    serde_json::to_string_pretty(&MachineDoc::from(m)).expect("machine documents serialize") + "\n"
}

pub fn machine_from_json(src: &str) -> Result<Cfsm, FormatError> {
    let doc: MachineDoc = serde_json::from_str(src)?;
    Ok(Cfsm::try_from(doc)?)
}

pub fn system_to_json(s: &CommunicatingSystem) -> String {
    let doc = SystemDoc {
        machines: s.machines().values().map(MachineDoc::from).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("system documents serialize") + "\n"
}

pub fn system_from_json(src: &str) -> Result<CommunicatingSystem, FormatError> {
    let doc: SystemDoc = serde_json::from_str(src)?;
    let machines = doc
        .machines
        .into_iter()
        .map(Cfsm::try_from)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CommunicatingSystem::new(machines)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fixture_files_match_in_memory_machines() {
        let mj = machine_from_json(include_str!("../fixtures/mj.cfsm")).unwrap();
        assert_eq!(mj, fixtures::machine_j());
        let mk = machine_from_json(include_str!("../fixtures/mk.cfsm")).unwrap();
        assert_eq!(mk, fixtures::machine_k());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let text = machine_to_json(&fixtures::machine_k());
        assert_eq!(machine_to_json(&machine_from_json(&text).unwrap()), text);
        let extra = fixtures::machine_j().with_messages([Message::new("zzz")]);
        let back = machine_from_json(&machine_to_json(&extra)).unwrap();
        assert_eq!(back, extra);
    }

    #[test]
    fn systems_round_trip() {
        let s = system_from_json(include_str!("../fixtures/mutual_wait.sys")).unwrap();
        assert_eq!(s.len(), 2);
        let text = system_to_json(&s);
        assert_eq!(system_from_json(&text).unwrap(), s);
    }

    #[test]
    fn errors_are_classified() {
        assert!(machine_from_json("{").unwrap_err().is_syntax_error());
        assert!(
            machine_from_json(r#"{"subject":"p","states":[],"initial":"0","transitions":[]}"#)
                .unwrap_err()
                .to_string()
                .contains('0')
        );
        let foreign = r#"{"subject":"p","states":["0"],"initial":"0","transitions":[
            {"from":"0","to":"0","channel":{"sender":"q","receiver":"r"},"dir":"!","msg":"a"}]}"#;
        assert!(matches!(machine_from_json(foreign), Err(FormatError::Model(_))));
        assert!(
            machine_from_json(r#"{"subject":"p","states":["0"],"initial":"0","transitions":[],"x":1}"#)
                .unwrap_err()
                .is_syntax_error()
        );
    }
}
