//! Roles, messages, channels, actions and communicating finite-state machines.
//!
//! A [`Cfsm`] is the finite transition system of a single role. Every state is
//! accepting, so the language of a machine is prefix-closed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("empty {0} name")]
    EmptyName(&'static str),
    #[error("channel {0} has identical sender and receiver")]
    SelfChannel(Role),
    #[error("state {state} is not a state of the machine of {subject}")]
    UnknownState { subject: Role, state: StateId },
    #[error("transition {transition} of {subject} does not involve its subject")]
    ForeignAction { subject: Role, transition: Box<Transition> },
    #[error("message {message} of transition {transition} is not in the message set of {subject}")]
    UnknownMessage {
        subject: Role,
        message: Message,
        transition: Box<Transition>,
    },
    #[error("malformed action label `{0}`")]
    BadAction(String),
}

macro_rules! name_type {
    ($(#[$doc:meta])* $name:ident, $what:literal) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            /// Panics on an empty name; use `TryFrom` for untrusted input.
            pub fn new(name: impl Into<String>) -> Self {
                Self::try_from(name.into()).expect(concat!("nonempty ", $what, " name"))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = ModelError;

            fn try_from(name: String) -> Result<Self, ModelError> {
                if name.is_empty() {
                    Err(ModelError::EmptyName($what))
                } else {
                    Ok(Self(name))
                }
            }
        }

        impl From<$name> for String {
            fn from(value: $name) -> String {
                value.0
            }
        }

        impl From<&str> for $name {
            fn from(name: &str) -> Self {
                Self::new(name)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

name_type!(
    /// A participant name.
    Role,
    "role"
);
name_type!(
    /// A message label.
    Message,
    "message"
);
name_type!(
    /// An opaque state identifier.
    StateId,
    "state"
);

/// A directed point-to-point FIFO channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Channel {
    sender: Role,
    receiver: Role,
}

impl Channel {
    pub fn new(sender: Role, receiver: Role) -> Result<Self, ModelError> {
        if sender == receiver {
            return Err(ModelError::SelfChannel(sender));
        }
        Ok(Self { sender, receiver })
    }

    pub fn sender(&self) -> &Role {
        &self.sender
    }

    pub fn receiver(&self) -> &Role {
        &self.receiver
    }

    pub fn involves(&self, role: &Role) -> bool {
        &self.sender == role || &self.receiver == role
    }
}

fn compact(a: &Role, b: &Role) -> bool {
    a.as_str().chars().count() == 1 && b.as_str().chars().count() == 1
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if compact(&self.sender, &self.receiver) {
            write!(f, "{}{}", self.sender, self.receiver)
        } else {
            write!(f, "{}->{}", self.sender, self.receiver)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "!")]
    Send,
    #[serde(rename = "?")]
    Receive,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Send => Direction::Receive,
            Direction::Receive => Direction::Send,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Direction::Send => '!',
            Direction::Receive => '?',
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// `sr!a` or `sr?a`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub channel: Channel,
    pub direction: Direction,
    pub message: Message,
}

impl Action {
    pub fn new(channel: Channel, direction: Direction, message: Message) -> Self {
        Self {
            channel,
            direction,
            message,
        }
    }

    /// `sender receiver ! message`; panics if `sender == receiver`.
    pub fn send(sender: &str, receiver: &str, message: &str) -> Self {
        let channel = Channel::new(Role::new(sender), Role::new(receiver)).expect("distinct roles");
        Self::new(channel, Direction::Send, Message::new(message))
    }

    /// `sender receiver ? message`; panics if `sender == receiver`.
    pub fn receive(sender: &str, receiver: &str, message: &str) -> Self {
        let channel = Channel::new(Role::new(sender), Role::new(receiver)).expect("distinct roles");
        Self::new(channel, Direction::Receive, Message::new(message))
    }

    /// The role performing the action: the sender of a send, the receiver of a receive.
    pub fn actor(&self) -> &Role {
        match self.direction {
            Direction::Send => &self.channel.sender,
            Direction::Receive => &self.channel.receiver,
        }
    }

    /// The role on the other end of the channel.
    pub fn peer(&self) -> &Role {
        match self.direction {
            Direction::Send => &self.channel.receiver,
            Direction::Receive => &self.channel.sender,
        }
    }

    pub fn is_send(&self) -> bool {
        self.direction == Direction::Send
    }

    pub fn is_receive(&self) -> bool {
        self.direction == Direction::Receive
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.channel, self.direction, self.message)
    }
}

/// Accepts `JM!text` (two single-character roles) and `p0->p1?msg`.
impl FromStr for Action {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        let bad = || ModelError::BadAction(s.to_string());
        let pos = s.find(['!', '?']).ok_or_else(bad)?;
        let direction = if s[pos..].starts_with('!') {
            Direction::Send
        } else {
            Direction::Receive
        };
        let (head, message) = (&s[..pos], &s[pos + 1..]);
        let (sender, receiver) = match head.split_once("->") {
            Some(pair) => pair,
            None => {
                let mut chars = head.chars();
                match (chars.next(), chars.next(), chars.next()) {
                    (Some(a), Some(_), None) => head.split_at(a.len_utf8()),
                    _ => return Err(bad()),
                }
            }
        };
        let sender = Role::try_from(sender.trim().to_string()).map_err(|_| bad())?;
        let receiver = Role::try_from(receiver.trim().to_string()).map_err(|_| bad())?;
        let message = Message::try_from(message.trim().to_string()).map_err(|_| bad())?;
        Ok(Action::new(Channel::new(sender, receiver)?, direction, message))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub from: StateId,
    pub action: Action,
    pub to: StateId,
}

impl Transition {
    pub fn new(from: impl Into<StateId>, action: Action, to: impl Into<StateId>) -> Self {
        Self {
            from: from.into(),
            action,
            to: to.into(),
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.from, self.action, self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateKind {
    Final,
    Sending,
    Receiving,
    Mixed,
}

/// A communicating finite-state machine `(Q, q0, A, δ)` for one role.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cfsm {
    subject: Role,
    states: BTreeSet<StateId>,
    initial: StateId,
    messages: BTreeSet<Message>,
    transitions: BTreeSet<Transition>,
}

impl Cfsm {
    pub fn new(
        subject: Role,
        states: BTreeSet<StateId>,
        initial: StateId,
        messages: BTreeSet<Message>,
        transitions: BTreeSet<Transition>,
    ) -> Result<Self, ModelError> {
        let unknown = |state: &StateId| ModelError::UnknownState {
            subject: subject.clone(),
            state: state.clone(),
        };
        if !states.contains(&initial) {
            return Err(unknown(&initial));
        }
        for t in &transitions {
            for q in [&t.from, &t.to] {
                if !states.contains(q) {
                    return Err(unknown(q));
                }
            }
            if t.action.actor() != &subject {
                return Err(ModelError::ForeignAction {
                    subject: subject.clone(),
                    transition: Box::new(t.clone()),
                });
            }
            if !messages.contains(&t.action.message) {
                return Err(ModelError::UnknownMessage {
                    subject: subject.clone(),
                    message: t.action.message.clone(),
                    transition: Box::new(t.clone()),
                });
            }
        }
        Ok(Self {
            subject,
            states,
            initial,
            messages,
            transitions,
        })
    }

    /// Builds a machine whose state and message sets are exactly those
    /// mentioned by `initial` and `transitions`.
    pub fn from_transitions(
        subject: impl Into<Role>,
        initial: impl Into<StateId>,
        transitions: impl IntoIterator<Item = Transition>,
    ) -> Result<Self, ModelError> {
        let initial = initial.into();
        let transitions: BTreeSet<Transition> = transitions.into_iter().collect();
        let mut states = BTreeSet::from([initial.clone()]);
        let mut messages = BTreeSet::new();
        for t in &transitions {
            states.insert(t.from.clone());
            states.insert(t.to.clone());
            messages.insert(t.action.message.clone());
        }
        Self::new(subject.into(), states, initial, messages, transitions)
    }

    /// Shorthand for tests and fixtures: `("1", "JM!text", "2")` triples.
    pub fn from_labels(subject: &str, initial: &str, edges: &[(&str, &str, &str)]) -> Result<Self, ModelError> {
        let transitions = edges
            .iter()
            .map(|(from, label, to)| Ok(Transition::new(*from, label.parse()?, *to)))
            .collect::<Result<Vec<_>, ModelError>>()?;
        Self::from_transitions(subject, initial, transitions)
    }

    pub fn subject(&self) -> &Role {
        &self.subject
    }

    pub fn states(&self) -> &BTreeSet<StateId> {
        &self.states
    }

    pub fn initial(&self) -> &StateId {
        &self.initial
    }

    pub fn messages(&self) -> &BTreeSet<Message> {
        &self.messages
    }

    pub fn transitions(&self) -> &BTreeSet<Transition> {
        &self.transitions
    }

    /// Same machine over a larger message universe.
    pub fn with_messages(mut self, extra: impl IntoIterator<Item = Message>) -> Self {
        self.messages.extend(extra);
        self
    }

    pub fn outgoing<'a>(&'a self, q: &'a StateId) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions.iter().filter(move |t| &t.from == q)
    }

    /// Every role other than the subject that occurs in some channel.
    pub fn peers(&self) -> BTreeSet<Role> {
        self.transitions.iter().map(|t| t.action.peer().clone()).collect()
    }

    pub fn classify_state(&self, q: &StateId) -> Result<StateKind, ModelError> {
        if !self.states.contains(q) {
            return Err(ModelError::UnknownState {
                subject: self.subject.clone(),
                state: q.clone(),
            });
        }
        let (mut sends, mut receives) = (false, false);
        for t in self.outgoing(q) {
            match t.action.direction {
                Direction::Send => sends = true,
                Direction::Receive => receives = true,
            }
        }
        Ok(match (sends, receives) {
            (false, false) => StateKind::Final,
            (true, false) => StateKind::Sending,
            (false, true) => StateKind::Receiving,
            (true, true) => StateKind::Mixed,
        })
    }

    /// Two transitions from the same state with the same direction and
    /// message (channels ignored) but different targets.
    pub fn nondeterminism_witness(&self, direction: Direction) -> Option<(Transition, Transition)> {
        let mut seen: BTreeMap<(&StateId, &Message), &Transition> = BTreeMap::new();
        for t in self.transitions.iter().filter(|t| t.action.direction == direction) {
            match seen.get(&(&t.from, &t.action.message)) {
                Some(first) if first.to != t.to => return Some(((*first).clone(), t.clone())),
                Some(_) => {}
                None => {
                    seen.insert((&t.from, &t.action.message), t);
                }
            }
        }
        None
    }

    pub fn is_receive_deterministic(&self) -> bool {
        self.nondeterminism_witness(Direction::Receive).is_none()
    }

    pub fn is_send_deterministic(&self) -> bool {
        self.nondeterminism_witness(Direction::Send).is_none()
    }

    pub fn is_io_deterministic(&self) -> bool {
        self.is_receive_deterministic() && self.is_send_deterministic()
    }

    pub fn mixed_states(&self) -> Vec<StateId> {
        self.states
            .iter()
            .filter(|q| self.classify_state(q) == Ok(StateKind::Mixed))
            .cloned()
            .collect()
    }

    pub fn has_mixed_states(&self) -> bool {
        !self.mixed_states().is_empty()
    }

    /// Applies `rename` to every state; `rename` must be injective on `states`.
    pub fn rename_states(&self, mut rename: impl FnMut(&StateId) -> StateId) -> Self {
        let map: BTreeMap<StateId, StateId> = self.states.iter().map(|q| (q.clone(), rename(q))).collect();
        Cfsm {
            subject: self.subject.clone(),
            states: map.values().cloned().collect(),
            initial: map[&self.initial].clone(),
            messages: self.messages.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| Transition::new(map[&t.from].clone(), t.action.clone(), map[&t.to].clone()))
                .collect(),
        }
    }

    /// Whether a bijection between the state sets maps the initial state and
    /// the transition relation of `self` exactly onto those of `other`.
    pub fn is_isomorphic(&self, other: &Cfsm) -> bool {
        if self.subject != other.subject
            || self.states.len() != other.states.len()
            || self.transitions.len() != other.transitions.len()
        {
            return false;
        }
        let left = Indexed::new(self);
        let right = Indexed::new(other);
        let mut mapping = vec![None; left.states.len()];
        let mut used = vec![false; right.states.len()];
        mapping[left.initial] = Some(right.initial);
        used[right.initial] = true;
        if left.signature(left.initial) != right.signature(right.initial) {
            return false;
        }
        // Remaining states in a BFS order of `self` so that neighbours are
        // assigned early and prune the search.
        let order = left.search_order();
        extend_mapping(&left, &right, &order, 0, &mut mapping, &mut used)
    }
}

struct Indexed {
    states: Vec<StateId>,
    initial: usize,
    out: Vec<BTreeSet<(Action, usize)>>,
    inc: Vec<BTreeSet<(Action, usize)>>,
}

impl Indexed {
    fn new(m: &Cfsm) -> Self {
        let states: Vec<StateId> = m.states.iter().cloned().collect();
        let index: BTreeMap<&StateId, usize> = states.iter().enumerate().map(|(i, q)| (q, i)).collect();
        let mut out = vec![BTreeSet::new(); states.len()];
        let mut inc = vec![BTreeSet::new(); states.len()];
        for t in &m.transitions {
            let (a, b) = (index[&t.from], index[&t.to]);
            out[a].insert((t.action.clone(), b));
            inc[b].insert((t.action.clone(), a));
        }
        let initial = index[&m.initial];
        Self {
            states,
            initial,
            out,
            inc,
        }
    }

    fn signature(&self, q: usize) -> (Vec<&Action>, Vec<&Action>) {
        (
            self.out[q].iter().map(|(a, _)| a).collect(),
            self.inc[q].iter().map(|(a, _)| a).collect(),
        )
    }

    fn search_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.states.len()];
        let mut order = Vec::new();
        let mut queue = std::collections::VecDeque::from([self.initial]);
        seen[self.initial] = true;
        let mut roots = 0..self.states.len();
        loop {
            while let Some(q) = queue.pop_front() {
                if q != self.initial {
                    order.push(q);
                }
                for (_, r) in self.out[q].iter().chain(self.inc[q].iter()) {
                    if !seen[*r] {
                        seen[*r] = true;
                        queue.push_back(*r);
                    }
                }
            }
            match roots.by_ref().find(|q| !seen[*q]) {
                Some(q) => {
                    seen[q] = true;
                    queue.push_back(q);
                }
                None => return order,
            }
        }
    }
}

fn extend_mapping(
    left: &Indexed,
    right: &Indexed,
    order: &[usize],
    pos: usize,
    mapping: &mut Vec<Option<usize>>,
    used: &mut Vec<bool>,
) -> bool {
    let Some(&q) = order.get(pos) else {
        return edges_agree(left, right, mapping);
    };
    for candidate in 0..right.states.len() {
        if used[candidate] || left.signature(q) != right.signature(candidate) {
            continue;
        }
        mapping[q] = Some(candidate);
        used[candidate] = true;
        if partial_consistent(left, right, mapping, q) && extend_mapping(left, right, order, pos + 1, mapping, used) {
            return true;
        }
        mapping[q] = None;
        used[candidate] = false;
    }
    false
}

fn partial_consistent(left: &Indexed, right: &Indexed, mapping: &[Option<usize>], q: usize) -> bool {
    let image = mapping[q].expect("assigned");
    left.out[q].iter().all(|(a, r)| match mapping[*r] {
        Some(rr) => right.out[image].contains(&(a.clone(), rr)),
        None => true,
    }) && left.inc[q].iter().all(|(a, r)| match mapping[*r] {
        Some(rr) => right.inc[image].contains(&(a.clone(), rr)),
        None => true,
    })
}

fn edges_agree(left: &Indexed, right: &Indexed, mapping: &[Option<usize>]) -> bool {
    (0..left.states.len()).all(|q| {
        let image = mapping[q].expect("total mapping");
        let mapped: BTreeSet<(Action, usize)> = left.out[q]
            .iter()
            .map(|(a, r)| (a.clone(), mapping[*r].expect("total mapping")))
            .collect();
        mapped == right.out[image]
    })
}
