//! Interface compatibility and composition of systems through gateways.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::cfsm::{Cfsm, Direction, Message, Role, StateId, Transition};
use crate::gateway::{gateway, GatewayError};
use crate::lang::{dualize, erase_channels, render_word, separating_word, ErasedSymbol};
use crate::system::{CommunicatingSystem, SystemError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompatibilityFailure {
    /// A word in exactly one of `L(M)^¬C` and `dual(L(M')^¬C)`.
    LanguageMismatch {
        word: Vec<ErasedSymbol>,
    },
    MixedState {
        role: Role,
        state: StateId,
    },
    NotIoDeterministic {
        role: Role,
        direction: Direction,
        witness: Box<(Transition, Transition)>,
    },
}

impl fmt::Display for CompatibilityFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompatibilityFailure::LanguageMismatch { word } => {
                write!(
                    f,
                    "language mismatch: {} separates the erased language from the dual",
                    render_word(word)
                )
            }
            CompatibilityFailure::MixedState { role, state } => {
                write!(f, "mixed state {state} in the machine of {role}")
            }
            CompatibilityFailure::NotIoDeterministic {
                role,
                direction,
                witness,
            } => write!(
                f,
                "machine of {role} is not {direction}-deterministic: {} and {}",
                witness.0, witness.1
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatibilityVerdict {
    pub failures: Vec<CompatibilityFailure>,
}

impl CompatibilityVerdict {
    pub fn compatible(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `mh ↔ mk`: the erased language of one is the dual of the
/// other's, neither has mixed states, and both are `?!`-deterministic.
/// Every failing clause is reported.
pub fn check_compatibility(mh: &Cfsm, mk: &Cfsm) -> CompatibilityVerdict {
    let mut failures = Vec::new();
    if let Some(word) = separating_word(&erase_channels(mh), &dualize(&erase_channels(mk))) {
        failures.push(CompatibilityFailure::LanguageMismatch { word });
    }
    for m in [mh, mk] {
        for state in m.mixed_states() {
            failures.push(CompatibilityFailure::MixedState {
                role: m.subject().clone(),
                state,
            });
        }
    }
    for m in [mh, mk] {
        for direction in [Direction::Receive, Direction::Send] {
            if let Some(witness) = m.nondeterminism_witness(direction) {
                failures.push(CompatibilityFailure::NotIoDeterministic {
                    role: m.subject().clone(),
                    direction,
                    witness: Box::new(witness),
                });
            }
        }
    }
    CompatibilityVerdict { failures }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("role sets are not disjoint: {}", join(.0))]
    SharedRoles(BTreeSet<Role>),
    #[error("role {0} is not part of the system")]
    UnknownRole(Role),
    #[error("machines of {h} and {k} are not compatible")]
    Incompatible {
        h: Role,
        k: Role,
        verdict: CompatibilityVerdict,
    },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    System(#[from] SystemError),
}

fn join(roles: &BTreeSet<Role>) -> String {
    roles.iter().map(Role::as_str).collect::<Vec<_>>().join(", ")
}

/// `S1 ↔HK S2`: the union of both systems with the machines of `h` and `k`
/// replaced by their gateways towards each other. Every machine of the
/// result is over the union of both message universes.
pub fn compose(
    s1: &CommunicatingSystem,
    h: &Role,
    s2: &CommunicatingSystem,
    k: &Role,
) -> Result<CommunicatingSystem, ComposeError> {
    let shared: BTreeSet<Role> = s1.roles().filter(|r| s2.machine(r).is_some()).cloned().collect();
    if !shared.is_empty() {
        return Err(ComposeError::SharedRoles(shared));
    }
    let mh = s1.machine(h).ok_or_else(|| ComposeError::UnknownRole(h.clone()))?;
    let mk = s2.machine(k).ok_or_else(|| ComposeError::UnknownRole(k.clone()))?;
    let verdict = check_compatibility(mh, mk);
    if !verdict.compatible() {
        return Err(ComposeError::Incompatible {
            h: h.clone(),
            k: k.clone(),
            verdict,
        });
    }
    let gh = gateway(mh, k)?;
    let gk = gateway(mk, h)?;
    let messages: BTreeSet<Message> = s1
        .machines()
        .values()
        .chain(s2.machines().values())
        .flat_map(|m| m.messages().iter().cloned())
        .collect();
    let machines = s1
        .machines()
        .values()
        .chain(s2.machines().values())
        .map(|m| {
            if m.subject() == h {
                gh.clone()
            } else if m.subject() == k {
                gk.clone()
            } else {
                m.clone()
            }
        })
        .map(|m| m.with_messages(messages.iter().cloned()));
    Ok(CommunicatingSystem::new(machines)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn working_example_interfaces_are_compatible() {
        let verdict = check_compatibility(&fixtures::machine_j(), &fixtures::machine_k());
        assert!(verdict.compatible(), "{:?}", verdict.failures);
    }

    #[test]
    fn machine_is_not_compatible_with_itself() {
        let verdict = check_compatibility(&fixtures::machine_j(), &fixtures::machine_j());
        assert!(!verdict.compatible());
        assert_eq!(verdict.failures.len(), 1);
        let CompatibilityFailure::LanguageMismatch { word } = &verdict.failures[0] else {
            panic!("expected a language mismatch");
        };
        assert_eq!(word.len(), 1);
    }

    #[test]
    fn mixed_state_is_reported_alongside_mismatch() {
        let mut edges = vec![
            ("1", "AK?text", "2"),
            ("2", "KA!ok", "3"),
            ("2", "KA!fail", "1"),
            ("3", "BK?text", "4"),
            ("4", "KB!ok", "1"),
            ("4", "KB!fail", "3"),
        ];
        edges.push(("1", "KA!extra", "5"));
        let mk = Cfsm::from_labels("K", "1", &edges).unwrap();
        let verdict = check_compatibility(&fixtures::machine_j(), &mk);
        assert!(verdict
            .failures
            .iter()
            .any(|f| matches!(f, CompatibilityFailure::MixedState { state, .. } if state.as_str() == "1")));
        assert!(verdict
            .failures
            .iter()
            .any(|f| matches!(f, CompatibilityFailure::LanguageMismatch { .. })));
    }

    fn single(role: &str) -> CommunicatingSystem {
        CommunicatingSystem::new(vec![Cfsm::from_transitions(role, "0", []).unwrap()]).unwrap()
    }

    #[test]
    fn compose_empty_interfaces() {
        let composed = compose(&single("A"), &Role::new("A"), &single("B"), &Role::new("B")).unwrap();
        assert_eq!(composed.len(), 2);
        assert!(composed.machines().values().all(|m| m.transitions().is_empty()));
    }

    #[test]
    fn compose_rejects_shared_roles() {
        let err = compose(&single("A"), &Role::new("A"), &single("A"), &Role::new("A")).unwrap_err();
        assert!(matches!(err, ComposeError::SharedRoles(_)));
    }

    #[test]
    fn compose_rejects_incompatible_interfaces() {
        let s1 = CommunicatingSystem::new(vec![
            Cfsm::from_labels("H", "0", &[("0", "HP!a", "1")]).unwrap(),
            Cfsm::from_labels("P", "0", &[("0", "HP?a", "1")]).unwrap(),
        ])
        .unwrap();
        let err = compose(&s1, &Role::new("H"), &single("K"), &Role::new("K")).unwrap_err();
        assert!(matches!(err, ComposeError::Incompatible { .. }));
    }

    #[test]
    fn composition_is_commutative() {
        let s1 = CommunicatingSystem::new(vec![
            Cfsm::from_labels("H", "0", &[("0", "HP!a", "1")]).unwrap(),
            Cfsm::from_labels("P", "0", &[("0", "HP?a", "1")]).unwrap(),
        ])
        .unwrap();
        let s2 = CommunicatingSystem::new(vec![
            Cfsm::from_labels("K", "0", &[("0", "QK?a", "1")]).unwrap(),
            Cfsm::from_labels("Q", "0", &[("0", "QK!a", "1")]).unwrap(),
        ])
        .unwrap();
        let (h, k) = (Role::new("H"), Role::new("K"));
        assert_eq!(compose(&s1, &h, &s2, &k).unwrap(), compose(&s2, &k, &s1, &h).unwrap());
    }
}
