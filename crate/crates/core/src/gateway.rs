//! The gateway transformation.
//!
//! `gateway(M_H, K)` splits every transition of `M_H` through a fresh state so
//! that `H` forwards traffic between its own system and the partner role `K`:
//!
//! * a send `q --Hs!a--> q'` becomes `q --KH?a--> q^ --Hs!a--> q'`;
//! * a receive `q --sH?a--> q'` becomes `q --sH?a--> q^ --HK!a--> q'`.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::cfsm::{Action, Cfsm, Channel, Direction, ModelError, Role, StateId, Transition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("partner role {partner} is the subject of the machine")]
    PartnerIsSubject { partner: Role },
    #[error("partner role {partner} already occurs in transition {transition}")]
    PartnerAlreadyUsed { partner: Role, transition: Box<Transition> },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Where a state of a gateway comes from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GatewayState {
    Original(StateId),
    /// The state inserted in the middle of this original transition.
    Inserted(Transition),
}

/// A gateway machine together with the origin of each of its states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gateway {
    pub machine: Cfsm,
    pub partner: Role,
    pub origins: BTreeMap<StateId, GatewayState>,
}

/// Name of the state inserted into `t`: `q^(q,l,q')`, primed until it
/// differs from every other state name.
fn inserted_name(t: &Transition, taken: &BTreeSet<StateId>) -> StateId {
    let mut name = format!("{}^({},{},{})", t.from, t.from, t.action, t.to);
    while taken.contains(&StateId::new(name.as_str())) {
        name.push('\'');
    }
    StateId::new(name)
}

pub fn gateway_with_origins(m: &Cfsm, partner: &Role) -> Result<Gateway, GatewayError> {
    let subject = m.subject();
    if partner == subject {
        return Err(GatewayError::PartnerIsSubject {
            partner: partner.clone(),
        });
    }
    if let Some(t) = m.transitions().iter().find(|t| t.action.channel.involves(partner)) {
        return Err(GatewayError::PartnerAlreadyUsed {
            partner: partner.clone(),
            transition: Box::new(t.clone()),
        });
    }

    let mut states = m.states().clone();
    let mut origins: BTreeMap<StateId, GatewayState> = m
        .states()
        .iter()
        .map(|q| (q.clone(), GatewayState::Original(q.clone())))
        .collect();
    let mut transitions = BTreeSet::new();
    for t in m.transitions() {
        let hat = inserted_name(t, &states);
        states.insert(hat.clone());
        origins.insert(hat.clone(), GatewayState::Inserted(t.clone()));
        let message = t.action.message.clone();
        let (first, second) = match t.action.direction {
            Direction::Send => (
                Action::new(
                    Channel::new(partner.clone(), subject.clone())?,
                    Direction::Receive,
                    message,
                ),
                t.action.clone(),
            ),
            Direction::Receive => (
                t.action.clone(),
                Action::new(
                    Channel::new(subject.clone(), partner.clone())?,
                    Direction::Send,
                    message,
                ),
            ),
        };
        transitions.insert(Transition::new(t.from.clone(), first, hat.clone()));
        transitions.insert(Transition::new(hat, second, t.to.clone()));
    }
    let machine = Cfsm::new(
        subject.clone(),
        states,
        m.initial().clone(),
        m.messages().clone(),
        transitions,
    )?;
    Ok(Gateway {
        machine,
        partner: partner.clone(),
        origins,
    })
}

pub fn gateway(m: &Cfsm, partner: &Role) -> Result<Cfsm, GatewayError> {
    gateway_with_origins(m, partner).map(|g| g.machine)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractionError {
    #[error("inserted state {0} does not have exactly one incoming and one outgoing transition")]
    Degree(StateId),
    #[error("transitions around inserted state {0} do not forward a single message through the partner")]
    Shape(StateId),
    #[error("original state {0} has a transition to another original state")]
    Unsplit(StateId),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Collapses every inserted state's incoming/outgoing pair back into one
/// transition, reading the original action off the pair itself.
pub fn contract(g: &Gateway) -> Result<Cfsm, ContractionError> {
    let m = &g.machine;
    let is_inserted = |q: &StateId| matches!(g.origins.get(q), Some(GatewayState::Inserted(_)));
    let mut transitions = BTreeSet::new();
    let mut states = BTreeSet::new();
    for q in m.states() {
        if !is_inserted(q) {
            states.insert(q.clone());
            if let Some(t) = m.outgoing(q).find(|t| !is_inserted(&t.to)) {
                return Err(ContractionError::Unsplit(t.from.clone()));
            }
            continue;
        }
        let incoming: Vec<&Transition> = m.transitions().iter().filter(|t| &t.to == q).collect();
        let outgoing: Vec<&Transition> = m.outgoing(q).collect();
        let ([inc], [out]) = (incoming.as_slice(), outgoing.as_slice()) else {
            return Err(ContractionError::Degree(q.clone()));
        };
        let (a, b) = (&inc.action, &out.action);
        let forwards = a.message == b.message && a.is_receive() && b.is_send();
        let action = if forwards && a.channel.sender() == &g.partner && !b.channel.involves(&g.partner) {
            b.clone()
        } else if forwards && b.channel.receiver() == &g.partner && !a.channel.involves(&g.partner) {
            a.clone()
        } else {
            return Err(ContractionError::Shape(q.clone()));
        };
        transitions.insert(Transition::new(inc.from.clone(), action, out.to.clone()));
    }
    Ok(Cfsm::new(
        m.subject().clone(),
        states,
        m.initial().clone(),
        m.messages().clone(),
        transitions,
    )?)
}
