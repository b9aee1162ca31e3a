//! Communicating systems, configurations, the asynchronous FIFO step
//! relation, and bounded breadth-first reachability.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use indexmap::IndexSet;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cfsm::{Action, Cfsm, Channel, Direction, Message, ModelError, Role, StateId, StateKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("role {0} has more than one machine")]
    DuplicateRole(Role),
    #[error("machine of {role} uses channel {channel} whose endpoint is not a role of the system")]
    DanglingChannel { role: Role, channel: Channel },
    #[error("role {0} is not part of the system")]
    UnknownRole(Role),
    #[error("state {state} is not a state of the machine of {role}")]
    UnknownState { role: Role, state: StateId },
    #[error("configuration does not assign a state to every role of the system")]
    IncompleteConfiguration,
    #[error("buffer bound must be between 1 and {}", u16::MAX)]
    BadBound,
    #[error("system too large to explore: {0}")]
    TooLarge(&'static str),
}

/// A role-indexed family of machines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunicatingSystem {
    machines: BTreeMap<Role, Cfsm>,
}

impl CommunicatingSystem {
    pub fn new(machines: impl IntoIterator<Item = Cfsm>) -> Result<Self, SystemError> {
        let mut map = BTreeMap::new();
        for m in machines {
            let role = m.subject().clone();
            if map.insert(role.clone(), m).is_some() {
                return Err(SystemError::DuplicateRole(role));
            }
        }
        for (role, m) in &map {
            for t in m.transitions() {
                if !map.contains_key(t.action.peer()) {
                    return Err(SystemError::DanglingChannel {
                        role: role.clone(),
                        channel: t.action.channel.clone(),
                    });
                }
            }
        }
        Ok(Self { machines: map })
    }

    pub fn roles(&self) -> impl Iterator<Item = &Role> {
        self.machines.keys()
    }

    pub fn machine(&self, role: &Role) -> Option<&Cfsm> {
        self.machines.get(role)
    }

    pub fn machines(&self) -> &BTreeMap<Role, Cfsm> {
        &self.machines
    }

    pub fn into_machines(self) -> BTreeMap<Role, Cfsm> {
        self.machines
    }

    pub fn len(&self) -> usize {
        self.machines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.machines.is_empty()
    }

    fn machine_or_err(&self, role: &Role) -> Result<&Cfsm, SystemError> {
        self.machines
            .get(role)
            .ok_or_else(|| SystemError::UnknownRole(role.clone()))
    }

    /// Checks that `c` is a configuration of this system.
    pub fn check_configuration(&self, c: &Configuration) -> Result<(), SystemError> {
        if c.control.len() != self.machines.len() {
            return Err(SystemError::IncompleteConfiguration);
        }
        for (role, state) in &c.control {
            let m = self.machine_or_err(role)?;
            if !m.states().contains(state) {
                return Err(SystemError::UnknownState {
                    role: role.clone(),
                    state: state.clone(),
                });
            }
        }
        for channel in c.buffers.keys() {
            self.machine_or_err(channel.sender())?;
            self.machine_or_err(channel.receiver())?;
        }
        Ok(())
    }
}

/// Control states plus FIFO buffer contents. Empty buffers are not stored,
/// so equal configurations compare and hash equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    control: BTreeMap<Role, StateId>,
    buffers: BTreeMap<Channel, Vec<Message>>,
}

impl Configuration {
    pub fn new(control: BTreeMap<Role, StateId>, buffers: impl IntoIterator<Item = (Channel, Vec<Message>)>) -> Self {
        Self {
            control,
            buffers: buffers.into_iter().filter(|(_, w)| !w.is_empty()).collect(),
        }
    }

    pub fn control(&self) -> &BTreeMap<Role, StateId> {
        &self.control
    }

    pub fn state_of(&self, role: &Role) -> Option<&StateId> {
        self.control.get(role)
    }

    /// Nonempty buffers only.
    pub fn buffers(&self) -> &BTreeMap<Channel, Vec<Message>> {
        &self.buffers
    }

    pub fn buffer(&self, channel: &Channel) -> &[Message] {
        self.buffers.get(channel).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn all_buffers_empty(&self) -> bool {
        self.buffers.is_empty()
    }

    /// First 16 hex digits of the SHA-256 of the canonical rendering.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_string().as_bytes());
        hex::encode(&hash[..8])
    }

    fn with_state(&self, role: &Role, state: StateId) -> Self {
        let mut next = self.clone();
        next.control.insert(role.clone(), state);
        next
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let control: Vec<String> = self.control.iter().map(|(r, q)| format!("{r}={q}")).collect();
        write!(f, "[{}]", control.join(" "))?;
        for (channel, word) in &self.buffers {
            let word: Vec<&str> = word.iter().map(Message::as_str).collect();
            write!(f, " {}:{}", channel, word.join("."))?;
        }
        Ok(())
    }
}

pub fn initial_configuration(s: &CommunicatingSystem) -> Configuration {
    Configuration {
        control: s
            .machines
            .iter()
            .map(|(r, m)| (r.clone(), m.initial().clone()))
            .collect(),
        buffers: BTreeMap::new(),
    }
}

/// All configurations reachable from `c` by firing `l` once. Empty when
/// `l` is not enabled. Buffers are unbounded here.
pub fn step(s: &CommunicatingSystem, c: &Configuration, l: &Action) -> Result<Vec<Configuration>, SystemError> {
    s.check_configuration(c)?;
    let actor = l.actor();
    let machine = s.machine_or_err(actor)?;
    s.machine_or_err(l.peer())?;
    let here = &c.control[actor];
    let targets: BTreeSet<&StateId> = machine
        .outgoing(here)
        .filter(|t| &t.action == l)
        .map(|t| &t.to)
        .collect();
    let mut out = Vec::with_capacity(targets.len());
    match l.direction {
        Direction::Send => {
            for q in targets {
                let mut next = c.with_state(actor, q.clone());
                next.buffers
                    .entry(l.channel.clone())
                    .or_default()
                    .push(l.message.clone());
                out.push(next);
            }
        }
        Direction::Receive => {
            if c.buffer(&l.channel).first() != Some(&l.message) {
                return Ok(out);
            }
            for q in targets {
                let mut next = c.with_state(actor, q.clone());
                let word = next.buffers.get_mut(&l.channel).expect("nonempty buffer");
                word.remove(0);
                if word.is_empty() {
                    next.buffers.remove(&l.channel);
                }
                out.push(next);
            }
        }
    }
    Ok(out)
}

pub fn enabled_actions(s: &CommunicatingSystem, c: &Configuration) -> Result<BTreeSet<Action>, SystemError> {
    s.check_configuration(c)?;
    let mut out = BTreeSet::new();
    for (role, m) in &s.machines {
        for t in m.outgoing(&c.control[role]) {
            let enabled = match t.action.direction {
                Direction::Send => true,
                Direction::Receive => c.buffer(&t.action.channel).first() == Some(&t.action.message),
            };
            if enabled {
                out.insert(t.action.clone());
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    /// A send into a buffer already holding this many messages is suppressed.
    pub max_buffer_bound: usize,
    /// Exploration stops once this many configurations have been found.
    pub max_states: usize,
    /// Worker threads used to expand each breadth-first layer.
    pub jobs: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            max_buffer_bound: 4,
            max_states: 1_000_000,
            jobs: 1,
        }
    }
}

impl Bounds {
    pub fn with_buffer_bound(max_buffer_bound: usize) -> Self {
        Self {
            max_buffer_bound,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ActionInfo {
    machine: u16,
    channel: u32,
    send: bool,
    message: u16,
}

/// Index-based form of a system used by the explorer.
#[derive(Debug)]
pub(crate) struct Compiled {
    pub(crate) roles: Vec<Role>,
    pub(crate) states: Vec<Vec<StateId>>,
    pub(crate) kinds: Vec<Vec<StateKind>>,
    initial: Vec<u16>,
    /// machine -> state -> (action, target)
    pub(crate) out: Vec<Vec<Vec<(u32, u16)>>>,
    pub(crate) actions: Vec<Action>,
    pub(crate) action_info: Vec<ActionInfo>,
    messages: Vec<Message>,
    pub(crate) channels: Vec<Channel>,
}

/// `[control states][buffer lengths][buffer contents in channel order]`.
pub(crate) type Packed = Box<[u16]>;

impl Compiled {
    fn new(s: &CommunicatingSystem) -> Result<Self, SystemError> {
        let roles: Vec<Role> = s.machines.keys().cloned().collect();
        let n = roles.len();
        if n > u16::MAX as usize {
            return Err(SystemError::TooLarge("too many roles"));
        }
        let role_index: BTreeMap<&Role, usize> = roles.iter().enumerate().map(|(i, r)| (r, i)).collect();
        let mut channels = Vec::new();
        for a in &roles {
            for b in &roles {
                if a != b {
                    channels.push(Channel::new(a.clone(), b.clone())?);
                }
            }
        }
        let channel_index = |c: &Channel| {
            let (i, j) = (role_index[c.sender()], role_index[c.receiver()]);
            (i * (n - 1) + if j > i { j - 1 } else { j }) as u32
        };
        let messages: Vec<Message> = s
            .machines
            .values()
            .flat_map(|m| m.messages().iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if messages.len() > u16::MAX as usize {
            return Err(SystemError::TooLarge("too many messages"));
        }
        let message_index: BTreeMap<&Message, u16> = messages.iter().enumerate().map(|(i, m)| (m, i as u16)).collect();

        let mut action_ids: BTreeMap<Action, u32> = BTreeMap::new();
        let mut actions = Vec::new();
        let mut action_info = Vec::new();
        let mut states = Vec::new();
        let mut kinds = Vec::new();
        let mut initial = Vec::new();
        let mut out = Vec::new();
        for (i, role) in roles.iter().enumerate() {
            let m = &s.machines[role];
            if m.states().len() > u16::MAX as usize {
                return Err(SystemError::TooLarge("too many states in one machine"));
            }
            let names: Vec<StateId> = m.states().iter().cloned().collect();
            let index: BTreeMap<&StateId, u16> = names.iter().enumerate().map(|(k, q)| (q, k as u16)).collect();
            let mut succ = vec![Vec::new(); names.len()];
            for t in m.transitions() {
                let id = *action_ids.entry(t.action.clone()).or_insert_with(|| {
                    actions.push(t.action.clone());
                    action_info.push(ActionInfo {
                        machine: i as u16,
                        channel: channel_index(&t.action.channel),
                        send: t.action.is_send(),
                        message: message_index[&t.action.message],
                    });
                    (actions.len() - 1) as u32
                });
                succ[index[&t.from] as usize].push((id, index[&t.to]));
            }
            kinds.push(names.iter().map(|q| m.classify_state(q).expect("own state")).collect());
            initial.push(index[m.initial()]);
            states.push(names);
            out.push(succ);
        }
        Ok(Self {
            roles,
            states,
            kinds,
            initial,
            out,
            actions,
            action_info,
            messages,
            channels,
        })
    }

    pub(crate) fn num_roles(&self) -> usize {
        self.roles.len()
    }

    pub(crate) fn initial(&self) -> Packed {
        let mut v = self.initial.clone();
        v.extend(std::iter::repeat_n(0, self.channels.len()));
        v.into_boxed_slice()
    }

    fn lens_start(&self) -> usize {
        self.roles.len()
    }

    fn contents_start(&self) -> usize {
        self.roles.len() + self.channels.len()
    }

    pub(crate) fn buffer_len(&self, p: &[u16], channel: usize) -> usize {
        p[self.lens_start() + channel] as usize
    }

    fn buffer_offset(&self, p: &[u16], channel: usize) -> usize {
        let lens = &p[self.lens_start()..self.contents_start()];
        self.contents_start() + lens[..channel].iter().map(|l| *l as usize).sum::<usize>()
    }

    pub(crate) fn buffer_head(&self, p: &[u16], channel: usize) -> Option<u16> {
        if self.buffer_len(p, channel) == 0 {
            None
        } else {
            Some(p[self.buffer_offset(p, channel)])
        }
    }

    pub(crate) fn all_buffers_empty(&self, p: &[u16]) -> bool {
        p.len() == self.contents_start()
    }

    pub(crate) fn message_of(&self, action: u32) -> u16 {
        self.action_info[action as usize].message
    }

    pub(crate) fn channel_of(&self, action: u32) -> usize {
        self.action_info[action as usize].channel as usize
    }

    pub(crate) fn is_send(&self, action: u32) -> bool {
        self.action_info[action as usize].send
    }

    /// Successors of `p` under the buffer bound, and whether some send was
    /// suppressed because its buffer was full.
    fn successors(&self, p: &[u16], bound: usize) -> (Vec<(u32, Packed)>, bool) {
        let mut out = Vec::new();
        let mut truncated = false;
        for machine in 0..self.roles.len() {
            for &(action, target) in &self.out[machine][p[machine] as usize] {
                let info = self.action_info[action as usize];
                debug_assert_eq!(info.machine as usize, machine);
                let channel = info.channel as usize;
                let len = self.buffer_len(p, channel);
                let offset = self.buffer_offset(p, channel);
                let mut next: Vec<u16>;
                if info.send {
                    if len >= bound {
                        truncated = true;
                        continue;
                    }
                    next = Vec::with_capacity(p.len() + 1);
                    next.extend_from_slice(&p[..offset + len]);
                    next.push(info.message);
                    next.extend_from_slice(&p[offset + len..]);
                    next[self.lens_start() + channel] += 1;
                } else {
                    if len == 0 || p[offset] != info.message {
                        continue;
                    }
                    next = Vec::with_capacity(p.len() - 1);
                    next.extend_from_slice(&p[..offset]);
                    next.extend_from_slice(&p[offset + 1..]);
                    next[self.lens_start() + channel] -= 1;
                }
                next[machine] = target;
                out.push((action, next.into_boxed_slice()));
            }
        }
        (out, truncated)
    }

    pub(crate) fn unpack(&self, p: &[u16]) -> Configuration {
        let control = self
            .roles
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), self.states[i][p[i] as usize].clone()))
            .collect();
        let mut buffers = BTreeMap::new();
        let mut at = self.contents_start();
        for (c, channel) in self.channels.iter().enumerate() {
            let len = self.buffer_len(p, c);
            if len > 0 {
                buffers.insert(
                    channel.clone(),
                    p[at..at + len]
                        .iter()
                        .map(|m| self.messages[*m as usize].clone())
                        .collect(),
                );
            }
            at += len;
        }
        Configuration { control, buffers }
    }
}

/// The outcome of a bounded breadth-first exploration. Configuration 0 is
/// the initial one; indices follow discovery order.
#[derive(Debug)]
pub struct ExplorationResult {
    pub(crate) compiled: Compiled,
    pub(crate) configs: IndexSet<Packed>,
    parent: Vec<Option<(u32, u32)>>,
    edges: Vec<(u32, u32, u32)>,
    frontier_truncated: bool,
    budget_exhausted: bool,
    max_buffer_bound: usize,
}

impl ExplorationResult {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Some send was suppressed because its buffer was at the bound.
    pub fn frontier_truncated(&self) -> bool {
        self.frontier_truncated
    }

    /// Exploration stopped at the state budget; the reachable set is partial.
    pub fn budget_exhausted(&self) -> bool {
        self.budget_exhausted
    }

    /// The reachable set is exactly the unbounded one.
    pub fn is_complete(&self) -> bool {
        !self.frontier_truncated && !self.budget_exhausted
    }

    pub fn max_buffer_bound(&self) -> usize {
        self.max_buffer_bound
    }

    pub fn configuration(&self, index: usize) -> Configuration {
        self.compiled.unpack(&self.configs[index])
    }

    pub fn configurations(&self) -> impl Iterator<Item = Configuration> + '_ {
        self.configs.iter().map(|p| self.compiled.unpack(p))
    }

    pub fn reachable(&self) -> HashSet<Configuration> {
        self.configurations().collect()
    }

    pub fn index_of(&self, c: &Configuration) -> Option<usize> {
        self.configs.iter().position(|p| &self.compiled.unpack(p) == c)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, &Action, usize)> + '_ {
        self.edges
            .iter()
            .map(|(a, l, b)| (*a as usize, &self.compiled.actions[*l as usize], *b as usize))
    }

    /// Actions along the breadth-first tree path from the initial
    /// configuration to `index`, paired with the configuration each reaches.
    pub fn trace_to(&self, index: usize) -> Vec<(Action, usize)> {
        let mut steps = Vec::new();
        let mut at = index;
        while let Some((prev, action)) = self.parent[at] {
            steps.push((self.compiled.actions[action as usize].clone(), at));
            at = prev as usize;
        }
        steps.reverse();
        steps
    }
}

/// Breadth-first closure of the initial configuration under [`step`], with
/// sends into full buffers suppressed. With `jobs > 1` each layer is
/// expanded in parallel; discovery order, and so the result, is the same
/// as the sequential run.
pub fn explore(s: &CommunicatingSystem, bounds: &Bounds) -> Result<ExplorationResult, SystemError> {
    if bounds.max_buffer_bound == 0 || bounds.max_buffer_bound > u16::MAX as usize {
        return Err(SystemError::BadBound);
    }
    let compiled = Compiled::new(s)?;
    let bound = bounds.max_buffer_bound;
    let max_states = bounds.max_states.clamp(1, u32::MAX as usize);
    let mut configs: IndexSet<Packed> = IndexSet::new();
    configs.insert(compiled.initial());
    let mut parent = vec![None];
    let mut edges = Vec::new();
    let mut frontier_truncated = false;
    let mut budget_exhausted = false;

    let pool = if bounds.jobs > 1 {
        rayon::ThreadPoolBuilder::new().num_threads(bounds.jobs).build().ok()
    } else {
        None
    };

    let mut layer = 0..1;
    'layers: while !layer.is_empty() {
        let expand = |i: usize| compiled.successors(&configs[i], bound);
        let expanded: Vec<(Vec<(u32, Packed)>, bool)> = match &pool {
            Some(pool) => pool.install(|| layer.clone().into_par_iter().map(expand).collect()),
            None => layer.clone().map(expand).collect(),
        };
        let next_start = configs.len();
        for (src, (succs, truncated)) in layer.clone().zip(expanded) {
            frontier_truncated |= truncated;
            for (action, packed) in succs {
                let target = match configs.get_index_of(&packed) {
                    Some(idx) => idx,
                    None => {
                        if configs.len() >= max_states {
                            budget_exhausted = true;
                            break 'layers;
                        }
                        configs.insert(packed);
                        parent.push(Some((src as u32, action)));
                        configs.len() - 1
                    }
                };
                edges.push((src as u32, action, target as u32));
            }
        }
        layer = next_start..configs.len();
    }

    Ok(ExplorationResult {
        compiled,
        configs,
        parent,
        edges,
        frontier_truncated,
        budget_exhausted,
        max_buffer_bound: bound,
    })
}
