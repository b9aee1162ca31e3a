use std::collections::BTreeSet;

use super::{GlobalType, GlobalTypeError};
use crate::automaton::{self, Nfa};
use crate::cfsm::{Action, Cfsm, Channel, Direction, Message, Role, StateId, Transition};

#[derive(Debug, Clone)]
struct Interaction {
    sender: Role,
    receiver: Role,
    message: Message,
}

#[derive(Debug)]
struct ChoicePoint {
    decider: Role,
    branch_entries: Vec<usize>,
}

/// The global type as a graph whose edges are interactions or silent moves.
#[derive(Debug)]
pub(super) struct GlobalGraph {
    num_nodes: usize,
    edges: Vec<(usize, Option<Interaction>, usize)>,
    choices: Vec<ChoicePoint>,
}

impl GlobalGraph {
    pub(super) fn build(g: &GlobalType) -> Self {
        let mut graph = GlobalGraph {
            num_nodes: 2,
            edges: Vec::new(),
            choices: Vec::new(),
        };
        graph.compile(g, 0, 1, &mut Vec::new());
        graph
    }

    fn fresh(&mut self) -> usize {
        self.num_nodes += 1;
        self.num_nodes - 1
    }

    fn silent(&mut self, from: usize, to: usize) {
        self.edges.push((from, None, to));
    }

    /// Adds `g` between `entry` and `exit`; `loops` holds the exit node of
    /// every enclosing loop.
    fn compile(&mut self, g: &GlobalType, entry: usize, exit: usize, loops: &mut Vec<usize>) {
        match g {
            GlobalType::Interaction {
                sender,
                receiver,
                message,
            } => self.edges.push((
                entry,
                Some(Interaction {
                    sender: sender.clone(),
                    receiver: receiver.clone(),
                    message: message.clone(),
                }),
                exit,
            )),
            GlobalType::Seq(items) => {
                let mut at = entry;
                for (i, item) in items.iter().enumerate() {
                    let next = if i + 1 == items.len() { exit } else { self.fresh() };
                    self.compile(item, at, next, loops);
                    at = next;
                }
                if items.is_empty() {
                    self.silent(entry, exit);
                }
            }
            GlobalType::Choice { decider, branches } => {
                let mut branch_entries = Vec::new();
                for branch in branches {
                    let start = self.fresh();
                    self.silent(entry, start);
                    branch_entries.push(start);
                    self.compile(branch, start, exit, loops);
                }
                self.choices.push(ChoicePoint {
                    decider: decider.clone(),
                    branch_entries,
                });
            }
            GlobalType::Loop(body) => {
                let head = self.fresh();
                self.silent(entry, head);
                loops.push(exit);
                self.compile(body, head, head, loops);
                loops.pop();
            }
            GlobalType::Break => {
                // Unchecked types may break outside a loop; treat that as end.
                if let Some(&after) = loops.last() {
                    self.silent(entry, after);
                }
            }
            GlobalType::End => {}
        }
    }

    /// Interactions reachable from `node` through silent moves only.
    fn first_interactions(&self, node: usize) -> Vec<&Interaction> {
        let mut seen = BTreeSet::from([node]);
        let mut stack = vec![node];
        let mut found = Vec::new();
        while let Some(n) = stack.pop() {
            for (from, label, to) in &self.edges {
                if *from != n {
                    continue;
                }
                match label {
                    Some(i) => found.push(i),
                    None => {
                        if seen.insert(*to) {
                            stack.push(*to);
                        }
                    }
                }
            }
        }
        found
    }

    pub(super) fn check_located(&self) -> Result<(), GlobalTypeError> {
        for choice in &self.choices {
            for (branch, entry) in choice.branch_entries.iter().enumerate() {
                let first = self.first_interactions(*entry);
                if first.is_empty() {
                    return Err(GlobalTypeError::EmptyBranch {
                        decider: choice.decider.clone(),
                        branch,
                    });
                }
                if let Some(i) = first.iter().find(|i| i.sender != choice.decider) {
                    return Err(GlobalTypeError::NotLocated {
                        decider: choice.decider.clone(),
                        branch,
                        sender: i.sender.clone(),
                        receiver: i.receiver.clone(),
                        message: i.message.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// The graph seen by `role`: its own interactions as actions, every
    /// other edge silent.
    fn local_view(&self, role: &Role, start: usize) -> Nfa<Action> {
        let edges = self
            .edges
            .iter()
            .map(|(from, label, to)| {
                let action = label.as_ref().and_then(|i| {
                    let direction = if &i.sender == role {
                        Direction::Send
                    } else if &i.receiver == role {
                        Direction::Receive
                    } else {
                        return None;
                    };
                    let channel = Channel::new(i.sender.clone(), i.receiver.clone()).expect("checked interaction");
                    Some(Action::new(channel, direction, i.message.clone()))
                });
                (*from, action, *to)
            })
            .collect();
        Nfa::new(self.num_nodes, start, edges)
    }

    /// Every non-deciding role must either behave identically in all
    /// branches of a choice, or begin each branch with a receive.
    fn check_projectable(&self, role: &Role) -> Result<(), GlobalTypeError> {
        for choice in &self.choices {
            if &choice.decider == role {
                continue;
            }
            let views: Vec<Nfa<Action>> = choice
                .branch_entries
                .iter()
                .map(|entry| self.local_view(role, *entry))
                .collect();
            let differing = (0..views.len())
                .flat_map(|i| (i + 1..views.len()).map(move |j| (i, j)))
                .find(|(i, j)| !automaton::equivalent(&views[*i], &views[*j]));
            let Some((i, j)) = differing else {
                continue;
            };
            let starts_with_send = |view: &Nfa<Action>| {
                let dfa = view.determinize();
                dfa.next[dfa.initial].keys().any(Action::is_send)
            };
            if let Some(sending) = views.iter().position(starts_with_send) {
                let other = if sending == i { j } else { i };
                let (first, second) = (sending.min(other), sending.max(other));
                return Err(GlobalTypeError::Unprojectable {
                    role: role.clone(),
                    decider: choice.decider.clone(),
                    first,
                    second,
                });
            }
        }
        Ok(())
    }
}

/// Projects `g` onto `role`: interactions not involving `role` are
/// dropped, the result is determinized and minimized, and its states are
/// numbered `1, 2, …` in breadth-first order from the initial state.
/// The machine is over all messages of `g`.
pub fn project(g: &GlobalType, role: &Role) -> Result<Cfsm, GlobalTypeError> {
    g.validate()?;
    if !g.roles().contains(role) {
        return Err(GlobalTypeError::UnknownRole { role: role.clone() });
    }
    let graph = GlobalGraph::build(g);
    graph.check_projectable(role)?;
    let dfa = graph.local_view(role, 0).determinize().minimize();
    let name = |i: usize| StateId::new((i + 1).to_string());
    let states: BTreeSet<StateId> = (0..dfa.num_states()).map(name).collect();
    let transitions: BTreeSet<Transition> = dfa
        .next
        .iter()
        .enumerate()
        .flat_map(|(q, moves)| {
            moves
                .iter()
                .map(move |(a, r)| Transition::new(name(q), a.clone(), name(*r)))
        })
        .collect();
    Ok(
        Cfsm::new(role.clone(), states, name(dfa.initial), g.messages(), transitions)
            .expect("projection only uses the role's own actions"),
    )
}
