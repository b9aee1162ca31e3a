//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use gtir_core::cfsm::{Action, Cfsm, Channel, Direction, Message, Role, StateId, StateKind, Transition};
use gtir_core::globaltype::{project, GlobalType};
use gtir_core::lang::{ErasedAutomaton, ErasedSymbol};
use gtir_core::system::CommunicatingSystem;
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------------------
// Random machines

/// A machine of `subject` with states `0..n`, talking to `peers`.
pub fn random_cfsm(
    rng: &mut impl Rng,
    subject: &str,
    peers: &[&str],
    messages: &[&str],
    max_states: usize,
    max_transitions: usize,
) -> Cfsm {
    let n = rng.gen_range(1..=max_states);
    let k = rng.gen_range(0..=max_transitions);
    let transitions: Vec<Transition> = (0..k)
        .map(|_| {
            let peer = *peers.choose(rng).unwrap();
            let msg = *messages.choose(rng).unwrap();
            let action = if rng.gen_bool(0.5) {
                Action::send(subject, peer, msg)
            } else {
                Action::receive(peer, subject, msg)
            };
            Transition::new(
                rng.gen_range(0..n).to_string().as_str(),
                action,
                rng.gen_range(0..n).to_string().as_str(),
            )
        })
        .collect();
    let states = (0..n).map(|i| StateId::new(i.to_string())).collect();
    let messages = messages.iter().map(|m| Message::new(*m)).collect();
    Cfsm::new(
        Role::new(subject),
        states,
        StateId::new("0"),
        messages,
        transitions.into_iter().collect(),
    )
    .unwrap()
}

/// A system of `roles.len()` random machines over the given roles.
pub fn random_system(
    rng: &mut impl Rng,
    roles: &[&str],
    messages: &[&str],
    max_states: usize,
    max_transitions: usize,
) -> CommunicatingSystem {
    let machines = roles.iter().map(|r| {
        let peers: Vec<&str> = roles.iter().copied().filter(|p| p != r).collect();
        random_cfsm(rng, r, &peers, messages, max_states, max_transitions)
    });
    CommunicatingSystem::new(machines).unwrap()
}

// ---------------------------------------------------------------------------
// Erased automata and the bounded word oracle

pub fn erased_alphabet() -> Vec<ErasedSymbol> {
    let mut symbols = Vec::new();
    for m in ["a", "b"] {
        for d in [Direction::Send, Direction::Receive] {
            symbols.push(ErasedSymbol::new(d, m));
        }
    }
    symbols
}

pub fn random_erased(rng: &mut impl Rng, max_states: usize, max_transitions: usize) -> ErasedAutomaton {
    let alphabet = erased_alphabet();
    let n = rng.gen_range(1..=max_states);
    let k = rng.gen_range(0..=max_transitions);
    let transitions: Vec<(usize, ErasedSymbol, usize)> = (0..k)
        .map(|_| {
            (
                rng.gen_range(0..n),
                alphabet.choose(rng).unwrap().clone(),
                rng.gen_range(0..n),
            )
        })
        .collect();
    ErasedAutomaton::from_parts(n, 0, transitions)
}

/// A small change to `a`: one transition added, removed or redirected.
pub fn perturb(rng: &mut impl Rng, a: &ErasedAutomaton) -> ErasedAutomaton {
    let n = a.num_states();
    let mut ts: Vec<(usize, ErasedSymbol, usize)> = a.indexed_transitions().iter().cloned().collect();
    match rng.gen_range(0..3) {
        0 if !ts.is_empty() => {
            let i = rng.gen_range(0..ts.len());
            ts.remove(i);
        }
        1 if !ts.is_empty() => {
            let i = rng.gen_range(0..ts.len());
            ts[i].2 = rng.gen_range(0..n);
        }
        _ => ts.push((
            rng.gen_range(0..n),
            erased_alphabet().choose(rng).unwrap().clone(),
            rng.gen_range(0..n),
        )),
    }
    ErasedAutomaton::from_parts(n, a.initial_index(), ts)
}

/// A language-equivalent automaton: states permuted and one state split
/// into two copies sharing its outgoing edges.
pub fn equivalent_variant(rng: &mut impl Rng, a: &ErasedAutomaton) -> ErasedAutomaton {
    let n = a.num_states();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut ts: Vec<(usize, ErasedSymbol, usize)> = a
        .indexed_transitions()
        .iter()
        .map(|(p, s, q)| (perm[*p], s.clone(), perm[*q]))
        .collect();
    let initial = perm[a.initial_index()];
    if n < 6 {
        let split = rng.gen_range(0..n);
        let copy = n;
        let outgoing: Vec<_> = ts.iter().filter(|(p, _, _)| *p == split).cloned().collect();
        ts.extend(outgoing.into_iter().map(|(_, s, q)| (copy, s, q)));
        for t in ts.iter_mut() {
            if t.2 == split && rng.gen_bool(0.5) {
                t.2 = copy;
            }
        }
        return ErasedAutomaton::from_parts(n + 1, initial, ts);
    }
    ErasedAutomaton::from_parts(n, initial, ts)
}

/// All words of length at most `max_len` accepted by `a`, by direct NFA
/// simulation.
pub fn words_up_to(a: &ErasedAutomaton, max_len: usize) -> BTreeSet<Vec<ErasedSymbol>> {
    let mut out = BTreeSet::new();
    let mut layer: BTreeMap<Vec<ErasedSymbol>, BTreeSet<usize>> = BTreeMap::new();
    layer.insert(Vec::new(), BTreeSet::from([a.initial_index()]));
    for _ in 0..=max_len {
        let mut next: BTreeMap<Vec<ErasedSymbol>, BTreeSet<usize>> = BTreeMap::new();
        for (word, states) in &layer {
            out.insert(word.clone());
            for (p, s, q) in a.indexed_transitions() {
                if states.contains(p) {
                    let mut w = word.clone();
                    w.push(s.clone());
                    next.entry(w).or_default().insert(*q);
                }
            }
        }
        layer = next;
    }
    out
}

// ---------------------------------------------------------------------------
// Naive safety oracle

/// Verdict flags found by [`naive_safety`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NaiveVerdicts {
    pub deadlock: bool,
    pub orphan: bool,
    pub unspecified: bool,
    pub truncated: bool,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct NaiveConfig {
    control: Vec<String>,
    buffers: BTreeMap<(String, String), VecDeque<String>>,
}

fn kind(m: &Cfsm, q: &str) -> StateKind {
    let outs: Vec<&Transition> = m.transitions().iter().filter(|t| t.from.as_str() == q).collect();
    let sends = outs.iter().filter(|t| t.action.direction == Direction::Send).count();
    match (outs.len(), sends) {
        (0, _) => StateKind::Final,
        (n, s) if s == n => StateKind::Sending,
        (_, 0) => StateKind::Receiving,
        _ => StateKind::Mixed,
    }
}

/// Depth-first enumeration of the configurations reachable with buffers of
/// at most `bound` messages, checking each safety predicate straight from
/// its definition.
pub fn naive_safety(s: &CommunicatingSystem, bound: usize) -> NaiveVerdicts {
    let machines: Vec<&Cfsm> = s.machines().values().collect();
    let start = NaiveConfig {
        control: machines.iter().map(|m| m.initial().to_string()).collect(),
        buffers: BTreeMap::new(),
    };
    let mut seen = HashSet::from([start.clone()]);
    let mut stack = vec![start];
    let mut v = NaiveVerdicts {
        deadlock: false,
        orphan: false,
        unspecified: false,
        truncated: false,
    };
    while let Some(c) = stack.pop() {
        let empty = c.buffers.values().all(VecDeque::is_empty);
        let kinds: Vec<StateKind> = machines.iter().zip(&c.control).map(|(m, q)| kind(m, q)).collect();
        v.deadlock |= empty && kinds.iter().all(|k| *k == StateKind::Receiving);
        v.orphan |= !empty && kinds.iter().all(|k| *k == StateKind::Final);
        for (i, m) in machines.iter().enumerate() {
            if kinds[i] != StateKind::Receiving {
                continue;
            }
            let receives: Vec<&Transition> = m
                .transitions()
                .iter()
                .filter(|t| t.from.as_str() == c.control[i])
                .collect();
            let channels: BTreeSet<(String, String)> = receives
                .iter()
                .map(|t| {
                    (
                        t.action.channel.sender().to_string(),
                        t.action.channel.receiver().to_string(),
                    )
                })
                .collect();
            let stuck = channels
                .iter()
                .all(|ch| match c.buffers.get(ch).and_then(|b| b.front()) {
                    None => false,
                    Some(head) => !receives.iter().any(|t| {
                        t.action.channel.sender().as_str() == ch.0
                            && t.action.channel.receiver().as_str() == ch.1
                            && t.action.message.as_str() == head
                    }),
                });
            v.unspecified |= stuck;
        }
        for (i, m) in machines.iter().enumerate() {
            for t in m.transitions().iter().filter(|t| t.from.as_str() == c.control[i]) {
                let ch = (
                    t.action.channel.sender().to_string(),
                    t.action.channel.receiver().to_string(),
                );
                let mut next = c.clone();
                let buffer = next.buffers.entry(ch).or_default();
                match t.action.direction {
                    Direction::Send if buffer.len() >= bound => {
                        v.truncated = true;
                        continue;
                    }
                    Direction::Send => buffer.push_back(t.action.message.to_string()),
                    Direction::Receive if buffer.front().map(String::as_str) == Some(t.action.message.as_str()) => {
                        buffer.pop_front();
                    }
                    Direction::Receive => continue,
                }
                next.buffers.retain(|_, b| !b.is_empty());
                next.control[i] = t.to.to_string();
                if seen.insert(next.clone()) {
                    stack.push(next);
                }
            }
        }
    }
    v
}

// ---------------------------------------------------------------------------
// Random global types and mirrored partners

const MESSAGES: [&str; 3] = ["a", "b", "c"];

fn pick_pair(rng: &mut impl Rng, roles: &[Role]) -> (Role, Role) {
    let s = roles.choose(rng).unwrap().clone();
    let r = roles
        .iter()
        .filter(|r| **r != s)
        .collect::<Vec<_>>()
        .choose(rng)
        .map(|r| (*r).clone())
        .unwrap();
    (s, r)
}

fn interaction(s: &Role, r: &Role, m: &str) -> GlobalType {
    GlobalType::Interaction {
        sender: s.clone(),
        receiver: r.clone(),
        message: Message::new(m),
    }
}

/// A sequence of up to `len` interactions, choices and loops.
fn random_block(rng: &mut impl Rng, roles: &[Role], depth: usize, in_loop: bool) -> Vec<GlobalType> {
    let len = rng.gen_range(1..=3);
    let mut items = Vec::new();
    for _ in 0..len {
        let roll = rng.gen_range(0..10);
        if depth > 0 && roll < 3 {
            let decider = roles.choose(rng).unwrap().clone();
            let others: Vec<Role> = roles.iter().filter(|r| **r != decider).cloned().collect();
            let target = others.choose(rng).unwrap().clone();
            let mut msgs = MESSAGES.to_vec();
            msgs.shuffle(rng);
            let branches = (0..2)
                .map(|b| {
                    let mut branch = vec![interaction(&decider, &target, msgs[b])];
                    if rng.gen_bool(0.6) {
                        branch.extend(random_block(rng, roles, depth - 1, in_loop));
                    }
                    if in_loop && b == 0 && rng.gen_bool(0.5) {
                        branch.push(GlobalType::Break);
                    }
                    GlobalType::Seq(branch)
                })
                .collect();
            items.push(GlobalType::Choice { decider, branches });
        } else if depth > 0 && roll < 4 {
            let body = random_block(rng, roles, depth - 1, true);
            items.push(GlobalType::Loop(Box::new(GlobalType::Seq(body))));
        } else {
            let (s, r) = pick_pair(rng, roles);
            items.push(interaction(&s, &r, MESSAGES.choose(rng).unwrap()));
        }
    }
    items
}

/// A random global type over `roles` in which every role takes part.
pub fn random_global_type(rng: &mut impl Rng, roles: &[&str]) -> GlobalType {
    let roles: Vec<Role> = roles.iter().map(|r| Role::new(*r)).collect();
    let mut items = random_block(rng, &roles, 2, false);
    for r in &roles {
        if !GlobalType::Seq(items.clone()).roles().contains(r) {
            let other = roles.iter().find(|o| *o != r).unwrap();
            items.push(interaction(r, other, "a"));
        }
    }
    GlobalType::Seq(items)
}

/// The partner type of `g` at interface `h`: `h` becomes `k`, every other
/// role `r` becomes `rename(r)`, and interactions with `h` are reversed, so
/// that the projection on `k` is the dual of the projection on `h`.
pub fn mirror(g: &GlobalType, h: &Role, k: &Role, rename: &dyn Fn(&Role) -> Role) -> GlobalType {
    match g {
        GlobalType::Interaction {
            sender,
            receiver,
            message,
        } => {
            let (sender, receiver) = if sender == h {
                (rename(receiver), k.clone())
            } else if receiver == h {
                (k.clone(), rename(sender))
            } else {
                (rename(sender), rename(receiver))
            };
            GlobalType::Interaction {
                sender,
                receiver,
                message: message.clone(),
            }
        }
        GlobalType::Seq(items) => GlobalType::Seq(items.iter().map(|i| mirror(i, h, k, rename)).collect()),
        GlobalType::Choice { decider, branches } => {
            let branches: Vec<GlobalType> = branches.iter().map(|b| mirror(b, h, k, rename)).collect();
            let decider = if decider == h {
                // The branch is now chosen by whoever used to receive it.
                first_sender(&branches[0]).unwrap_or_else(|| k.clone())
            } else {
                rename(decider)
            };
            GlobalType::Choice { decider, branches }
        }
        GlobalType::Loop(body) => GlobalType::Loop(Box::new(mirror(body, h, k, rename))),
        GlobalType::Break => GlobalType::Break,
        GlobalType::End => GlobalType::End,
    }
}

fn first_sender(g: &GlobalType) -> Option<Role> {
    match g {
        GlobalType::Interaction { sender, .. } => Some(sender.clone()),
        GlobalType::Seq(items) => items.first().and_then(first_sender),
        GlobalType::Choice { branches, .. } => branches.first().and_then(first_sender),
        GlobalType::Loop(body) => first_sender(body),
        GlobalType::Break | GlobalType::End => None,
    }
}

/// All projections of `g` as a system, if every role projects and the
/// machines have at most `max_states` states.
pub fn projected_system(g: &GlobalType, max_states: usize) -> Option<CommunicatingSystem> {
    let machines = g
        .roles()
        .iter()
        .map(|r| project(g, r).ok().filter(|m| m.states().len() <= max_states))
        .collect::<Option<Vec<_>>>()?;
    CommunicatingSystem::new(machines).ok()
}

pub fn suffix(tag: &'static str) -> impl Fn(&Role) -> Role {
    move |r: &Role| Role::new(format!("{r}{tag}"))
}

/// `m` with every channel end `from` replaced by `to`.
pub fn rechannel(m: &Cfsm, subject: &Role, from: &BTreeSet<Role>, to: &Role, flip: bool) -> Cfsm {
    let old = m.subject().clone();
    let role = |r: &Role| {
        if *r == old {
            subject.clone()
        } else if from.contains(r) {
            to.clone()
        } else {
            r.clone()
        }
    };
    let transitions = m.transitions().iter().map(|t| {
        let (s, r) = (role(t.action.channel.sender()), role(t.action.channel.receiver()));
        let (channel, direction) = if flip {
            (Channel::new(r, s).unwrap(), t.action.direction.flip())
        } else {
            (Channel::new(s, r).unwrap(), t.action.direction)
        };
        Transition::new(
            t.from.clone(),
            Action::new(channel, direction, t.action.message.clone()),
            t.to.clone(),
        )
    });
    Cfsm::new(
        subject.clone(),
        m.states().clone(),
        m.initial().clone(),
        m.messages().clone(),
        transitions.collect(),
    )
    .unwrap()
}
