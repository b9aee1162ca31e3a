//! Channel-erased languages of machines, their duals, and language equality.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::automaton::{self, Nfa};
use crate::cfsm::{Cfsm, Direction, Message, StateId};

/// `!a` or `?a`: an action with its channel forgotten.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ErasedSymbol {
    pub direction: Direction,
    pub message: Message,
}

impl ErasedSymbol {
    pub fn new(direction: Direction, message: impl Into<Message>) -> Self {
        Self {
            direction,
            message: message.into(),
        }
    }

    pub fn dual(&self) -> Self {
        Self::new(self.direction.flip(), self.message.clone())
    }
}

impl fmt::Display for ErasedSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.direction, self.message)
    }
}

pub fn render_word(word: &[ErasedSymbol]) -> String {
    if word.is_empty() {
        return "ε".to_string();
    }
    word.iter().map(ToString::to_string).collect::<Vec<_>>().join("·")
}

/// A finite automaton over erased symbols whose states all accept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErasedAutomaton {
    states: Vec<StateId>,
    initial: usize,
    transitions: BTreeSet<(usize, ErasedSymbol, usize)>,
}

impl ErasedAutomaton {
    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn initial(&self) -> &StateId {
        &self.states[self.initial]
    }

    pub fn alphabet(&self) -> BTreeSet<ErasedSymbol> {
        self.transitions.iter().map(|(_, s, _)| s.clone()).collect()
    }

    /// Transitions as `(from, symbol, to)` over the state names.
    pub fn transitions(&self) -> impl Iterator<Item = (&StateId, &ErasedSymbol, &StateId)> {
        self.transitions
            .iter()
            .map(|(a, s, b)| (&self.states[*a], s, &self.states[*b]))
    }

    /// Builds an automaton directly; states are indices `0..num_states`.
    pub fn from_parts(
        num_states: usize,
        initial: usize,
        transitions: impl IntoIterator<Item = (usize, ErasedSymbol, usize)>,
    ) -> Self {
        assert!(initial < num_states, "initial state out of range");
        let transitions: BTreeSet<_> = transitions.into_iter().collect();
        assert!(transitions.iter().all(|(a, _, b)| *a < num_states && *b < num_states));
        Self {
            states: (0..num_states).map(|i| StateId::new(i.to_string())).collect(),
            initial,
            transitions,
        }
    }

    /// Transitions between state indices.
    pub fn indexed_transitions(&self) -> &BTreeSet<(usize, ErasedSymbol, usize)> {
        &self.transitions
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial_index(&self) -> usize {
        self.initial
    }

    fn nfa(&self) -> Nfa<ErasedSymbol> {
        Nfa::new(
            self.states.len(),
            self.initial,
            self.transitions
                .iter()
                .map(|(a, s, b)| (*a, Some(s.clone()), *b))
                .collect(),
        )
    }
}

/// Relabels every `sr?a` as `?a` and every `sr!a` as `!a`; the state graph is kept.
pub fn erase_channels(m: &Cfsm) -> ErasedAutomaton {
    let states: Vec<StateId> = m.states().iter().cloned().collect();
    let index: BTreeMap<&StateId, usize> = states.iter().enumerate().map(|(i, q)| (q, i)).collect();
    let transitions = m
        .transitions()
        .iter()
        .map(|t| {
            (
                index[&t.from],
                ErasedSymbol::new(t.action.direction, t.action.message.clone()),
                index[&t.to],
            )
        })
        .collect();
    let initial = index[m.initial()];
    ErasedAutomaton {
        states,
        initial,
        transitions,
    }
}

/// Swaps `!` and `?` on every transition.
pub fn dualize(a: &ErasedAutomaton) -> ErasedAutomaton {
    ErasedAutomaton {
        states: a.states.clone(),
        initial: a.initial,
        transitions: a.transitions.iter().map(|(x, s, y)| (*x, s.dual(), *y)).collect(),
    }
}

/// A word in exactly one of the two languages, if the languages differ.
/// Not necessarily a shortest one.
pub fn separating_word(a: &ErasedAutomaton, b: &ErasedAutomaton) -> Option<Vec<ErasedSymbol>> {
    automaton::separating_word(&a.nfa(), &b.nfa())
}

pub fn languages_equal(a: &ErasedAutomaton, b: &ErasedAutomaton) -> bool {
    separating_word(a, b).is_none()
}

/// Whether `word` is in the language of `a`.
pub fn accepts(a: &ErasedAutomaton, word: &[ErasedSymbol]) -> bool {
    let mut current = BTreeSet::from([a.initial]);
    for symbol in word {
        current = a
            .transitions
            .iter()
            .filter(|(x, s, _)| current.contains(x) && s == symbol)
            .map(|(_, _, y)| *y)
            .collect();
        if current.is_empty() {
            return false;
        }
    }
    true
}
