//! Deadlock, orphan-message and unspecified-reception detection.

use std::collections::BTreeMap;

use crate::cfsm::{Action, Channel, Message, StateKind};
use crate::system::{
    explore, initial_configuration, step, Bounds, CommunicatingSystem, Compiled, Configuration, ExplorationResult,
    SystemError,
};

/// All buffers empty and every machine in a receiving state.
pub fn is_deadlock(s: &CommunicatingSystem, c: &Configuration) -> Result<bool, SystemError> {
    s.check_configuration(c)?;
    Ok(c.all_buffers_empty() && kinds(s, c).all(|k| k == StateKind::Receiving))
}

/// Every machine final and some buffer nonempty.
pub fn is_orphan_message(s: &CommunicatingSystem, c: &Configuration) -> Result<bool, SystemError> {
    s.check_configuration(c)?;
    Ok(!c.all_buffers_empty() && kinds(s, c).all(|k| k == StateKind::Final))
}

/// Some machine is in a receiving state and, on every channel it can
/// receive from in that state, the buffer is nonempty and its head is not
/// one of the messages it accepts there.
pub fn is_unspecified_reception(s: &CommunicatingSystem, c: &Configuration) -> Result<bool, SystemError> {
    s.check_configuration(c)?;
    for (role, m) in s.machines() {
        let q = &c.control()[role];
        if m.classify_state(q)? != StateKind::Receiving {
            continue;
        }
        let mut accepted: BTreeMap<&Channel, Vec<&Message>> = BTreeMap::new();
        for t in m.outgoing(q) {
            accepted.entry(&t.action.channel).or_default().push(&t.action.message);
        }
        let stuck = accepted
            .iter()
            .all(|(channel, messages)| match c.buffer(channel).first() {
                Some(head) => !messages.contains(&head),
                None => false,
            });
        if stuck {
            return Ok(true);
        }
    }
    Ok(false)
}

fn kinds<'a>(s: &'a CommunicatingSystem, c: &'a Configuration) -> impl Iterator<Item = StateKind> + 'a {
    s.machines()
        .iter()
        .map(|(r, m)| m.classify_state(&c.control()[r]).expect("checked configuration"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    Deadlock,
    OrphanMessage,
    UnspecifiedReception,
}

impl Property {
    pub const ALL: [Property; 3] = [
        Property::Deadlock,
        Property::OrphanMessage,
        Property::UnspecifiedReception,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Deadlock => "deadlock",
            Property::OrphanMessage => "orphan-message",
            Property::UnspecifiedReception => "unspecified-reception",
        }
    }

    pub fn holds_at(self, s: &CommunicatingSystem, c: &Configuration) -> Result<bool, SystemError> {
        match self {
            Property::Deadlock => is_deadlock(s, c),
            Property::OrphanMessage => is_orphan_message(s, c),
            Property::UnspecifiedReception => is_unspecified_reception(s, c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessStep {
    pub action: Action,
    pub configuration: Configuration,
}

/// A path from the initial configuration to a violating one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub initial: Configuration,
    pub steps: Vec<WitnessStep>,
}

impl Witness {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> &Configuration {
        self.steps.last().map(|s| &s.configuration).unwrap_or(&self.initial)
    }

    /// Re-fires every action through [`step`] and checks each recorded
    /// configuration is among the successors.
    pub fn replays(&self, s: &CommunicatingSystem) -> Result<bool, SystemError> {
        if self.initial != initial_configuration(s) {
            return Ok(false);
        }
        let mut at = &self.initial;
        for WitnessStep { action, configuration } in &self.steps {
            if !step(s, at, action)?.contains(configuration) {
                return Ok(false);
            }
            at = configuration;
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Violation(Witness),
    /// No violation, and the exploration was exhaustive.
    SafeComplete,
    /// No violation among configurations reachable with bounded buffers;
    /// some send was suppressed, so the result is not exhaustive.
    SafeWithinBound,
    /// The state budget ran out before the exploration finished.
    Inconclusive,
}

impl Verdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, Verdict::Violation(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Violation(_) => "violation",
            Verdict::SafeComplete => "safe-complete",
            Verdict::SafeWithinBound => "safe-within-bound",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExplorationStats {
    pub configurations: usize,
    pub edges: usize,
    pub max_buffer_bound: usize,
    pub max_states: usize,
    pub frontier_truncated: bool,
    pub budget_exhausted: bool,
}

/// Overall classification of a report, worst first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Violation,
    Inconclusive,
    SafeWithinBound,
    SafeComplete,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyReport {
    pub deadlock: Verdict,
    pub orphan_message: Verdict,
    pub unspecified_reception: Verdict,
    pub stats: ExplorationStats,
}

impl SafetyReport {
    pub fn verdict(&self, p: Property) -> &Verdict {
        match p {
            Property::Deadlock => &self.deadlock,
            Property::OrphanMessage => &self.orphan_message,
            Property::UnspecifiedReception => &self.unspecified_reception,
        }
    }

    pub fn verdicts(&self) -> impl Iterator<Item = (Property, &Verdict)> {
        Property::ALL.into_iter().map(|p| (p, self.verdict(p)))
    }

    pub fn outcome(&self) -> Outcome {
        self.verdicts()
            .map(|(_, v)| match v {
                Verdict::Violation(_) => Outcome::Violation,
                Verdict::Inconclusive => Outcome::Inconclusive,
                Verdict::SafeWithinBound => Outcome::SafeWithinBound,
                Verdict::SafeComplete => Outcome::SafeComplete,
            })
            .min()
            .expect("three verdicts")
    }

    pub fn is_safe_complete(&self) -> bool {
        self.outcome() == Outcome::SafeComplete
    }

    pub fn has_violation(&self) -> bool {
        self.outcome() == Outcome::Violation
    }
}

impl Compiled {
    fn deadlock_at(&self, p: &[u16]) -> bool {
        self.all_buffers_empty(p) && (0..self.num_roles()).all(|i| self.kinds[i][p[i] as usize] == StateKind::Receiving)
    }

    fn orphan_at(&self, p: &[u16]) -> bool {
        !self.all_buffers_empty(p) && (0..self.num_roles()).all(|i| self.kinds[i][p[i] as usize] == StateKind::Final)
    }

    fn unspecified_reception_at(&self, p: &[u16]) -> bool {
        (0..self.num_roles()).any(|i| {
            let q = p[i] as usize;
            if self.kinds[i][q] != StateKind::Receiving {
                return false;
            }
            // Stuck unless some receive is enabled; a receive is disabled
            // exactly when its buffer is empty (not stuck) or the head differs.
            let mut channels_seen = Vec::new();
            for &(action, _) in &self.out[i][q] {
                debug_assert!(!self.is_send(action));
                let channel = self.channel_of(action);
                if channels_seen.contains(&channel) {
                    continue;
                }
                channels_seen.push(channel);
                match self.buffer_head(p, channel) {
                    None => return false,
                    Some(head) => {
                        let receivable = self.out[i][q]
                            .iter()
                            .any(|(a, _)| self.channel_of(*a) == channel && self.message_of(*a) == head);
                        if receivable {
                            return false;
                        }
                    }
                }
            }
            true
        })
    }

    fn violates(&self, property: Property, p: &[u16]) -> bool {
        match property {
            Property::Deadlock => self.deadlock_at(p),
            Property::OrphanMessage => self.orphan_at(p),
            Property::UnspecifiedReception => self.unspecified_reception_at(p),
        }
    }
}

fn witness(result: &ExplorationResult, index: usize) -> Witness {
    Witness {
        initial: result.configuration(0),
        steps: result
            .trace_to(index)
            .into_iter()
            .map(|(action, at)| WitnessStep {
                action,
                configuration: result.configuration(at),
            })
            .collect(),
    }
}

/// Verdicts for an exploration already performed.
pub fn evaluate(result: &ExplorationResult, max_states: usize) -> SafetyReport {
    let clean = if result.budget_exhausted() {
        Verdict::Inconclusive
    } else if result.frontier_truncated() {
        Verdict::SafeWithinBound
    } else {
        Verdict::SafeComplete
    };
    let verdict_for = |property: Property| {
        result
            .configs
            .iter()
            .position(|p| result.compiled.violates(property, p))
            .map(|i| Verdict::Violation(witness(result, i)))
            .unwrap_or_else(|| clean.clone())
    };
    SafetyReport {
        deadlock: verdict_for(Property::Deadlock),
        orphan_message: verdict_for(Property::OrphanMessage),
        unspecified_reception: verdict_for(Property::UnspecifiedReception),
        stats: ExplorationStats {
            configurations: result.len(),
            edges: result.num_edges(),
            max_buffer_bound: result.max_buffer_bound(),
            max_states,
            frontier_truncated: result.frontier_truncated(),
            budget_exhausted: result.budget_exhausted(),
        },
    }
}

/// Explores `s` under `bounds` and evaluates all three properties on every
/// configuration found. The first violating configuration in breadth-first
/// order supplies each witness.
pub fn check_safety(s: &CommunicatingSystem, bounds: &Bounds) -> Result<SafetyReport, SystemError> {
    let result = explore(s, bounds)?;
    Ok(evaluate(&result, bounds.max_states))
}
