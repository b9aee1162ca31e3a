//! Finite automata in which every state accepts, over an arbitrary ordered
//! alphabet. Shared by channel-erased compatibility checks and projection.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa<S> {
    pub(crate) num_states: usize,
    pub(crate) initial: usize,
    /// `None` labels are silent moves.
    pub(crate) edges: Vec<(usize, Option<S>, usize)>,
}

pub(crate) type StateSet = Vec<usize>;

impl<S: Ord + Clone> Nfa<S> {
    pub fn new(num_states: usize, initial: usize, edges: Vec<(usize, Option<S>, usize)>) -> Self {
        assert!(initial < num_states, "initial state out of range");
        assert!(
            edges.iter().all(|(a, _, b)| *a < num_states && *b < num_states),
            "edge endpoint out of range"
        );
        Self {
            num_states,
            initial,
            edges,
        }
    }

    pub fn alphabet(&self) -> BTreeSet<S> {
        self.edges.iter().filter_map(|(_, s, _)| s.clone()).collect()
    }

    fn adjacency(&self) -> Vec<Vec<(Option<&S>, usize)>> {
        let mut adj = vec![Vec::new(); self.num_states];
        for (a, s, b) in &self.edges {
            adj[*a].push((s.as_ref(), *b));
        }
        adj
    }

    pub(crate) fn determinize_from(&self, start: usize) -> Dfa<S> {
        Determinizer::new(self).run(start)
    }

    pub fn determinize(&self) -> Dfa<S> {
        self.determinize_from(self.initial)
    }
}

/// Partial deterministic automaton; a missing transition rejects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa<S> {
    pub(crate) initial: usize,
    pub(crate) next: Vec<BTreeMap<S, usize>>,
    /// The NFA states each DFA state stands for.
    pub(crate) subsets: Vec<StateSet>,
}

struct Determinizer<'a, S> {
    adj: Vec<Vec<(Option<&'a S>, usize)>>,
}

impl<'a, S: Ord + Clone> Determinizer<'a, S> {
    fn new(nfa: &'a Nfa<S>) -> Self {
        Self { adj: nfa.adjacency() }
    }

    fn closure(&self, seeds: impl IntoIterator<Item = usize>) -> StateSet {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(q) = stack.pop() {
            if seen.insert(q) {
                for (label, r) in &self.adj[q] {
                    if label.is_none() {
                        stack.push(*r);
                    }
                }
            }
        }
        seen.into_iter().collect()
    }

    fn run(&self, start: usize) -> Dfa<S> {
        let first = self.closure([start]);
        let mut index: HashMap<StateSet, usize> = HashMap::from([(first.clone(), 0)]);
        let mut subsets = vec![first];
        let mut next = vec![BTreeMap::new()];
        let mut queue = VecDeque::from([0]);
        while let Some(d) = queue.pop_front() {
            let mut moves: BTreeMap<&S, BTreeSet<usize>> = BTreeMap::new();
            for q in &subsets[d] {
                for (label, r) in &self.adj[*q] {
                    if let Some(s) = label {
                        moves.entry(*s).or_default().insert(*r);
                    }
                }
            }
            for (symbol, targets) in moves {
                let target = self.closure(targets);
                let id = match index.get(&target) {
                    Some(id) => *id,
                    None => {
                        let id = subsets.len();
                        index.insert(target.clone(), id);
                        subsets.push(target);
                        next.push(BTreeMap::new());
                        queue.push_back(id);
                        id
                    }
                };
                next[d].insert(symbol.clone(), id);
            }
        }
        Dfa {
            initial: 0,
            next,
            subsets,
        }
    }
}

impl<S: Ord + Clone> Dfa<S> {
    pub fn num_states(&self) -> usize {
        self.next.len()
    }

    /// Merges language-equivalent states by partition refinement and drops
    /// states unreachable from the initial one. The returned automaton
    /// numbers its states in breadth-first order from the initial state,
    /// visiting successors in alphabet order; `subsets` are carried over as
    /// unions of the merged classes.
    pub fn minimize(&self) -> Dfa<S> {
        let n = self.num_states();
        let mut block = vec![0usize; n];
        let mut count = 1;
        loop {
            type Signature<'a, S> = (usize, Vec<(&'a S, usize)>);
            let mut signatures: BTreeMap<Signature<S>, usize> = BTreeMap::new();
            let mut refined = vec![0usize; n];
            for q in 0..n {
                let sig: Vec<(&S, usize)> = self.next[q].iter().map(|(s, r)| (s, block[*r])).collect();
                let len = signatures.len();
                refined[q] = *signatures.entry((block[q], sig)).or_insert(len);
            }
            let new_count = signatures.len();
            block = refined;
            if new_count == count {
                break;
            }
            count = new_count;
        }

        let mut order: HashMap<usize, usize> = HashMap::new();
        let mut representatives = Vec::new();
        let mut queue = VecDeque::from([self.initial]);
        order.insert(block[self.initial], 0);
        representatives.push(self.initial);
        while let Some(q) = queue.pop_front() {
            for r in self.next[q].values() {
                if let Entry::Vacant(e) = order.entry(block[*r]) {
                    e.insert(representatives.len());
                    representatives.push(*r);
                    queue.push_back(*r);
                }
            }
        }
        let mut subsets = vec![BTreeSet::new(); representatives.len()];
        for (q, b) in block.iter().enumerate() {
            if let Some(id) = order.get(b) {
                subsets[*id].extend(self.subsets[q].iter().copied());
            }
        }
        let next = representatives
            .iter()
            .map(|q| {
                self.next[*q]
                    .iter()
                    .map(|(s, r)| (s.clone(), order[&block[*r]]))
                    .collect()
            })
            .collect();
        Dfa {
            initial: 0,
            next,
            subsets: subsets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }
}

/// A word accepted by exactly one of the two automata, if any.
///
/// Explores pairs of determinized states breadth-first; a pair in which one
/// side has a move the other lacks yields the separating word. Since every
/// state accepts, a nonempty subset is accepting and the empty subset is not.
pub fn separating_word<S: Ord + Clone>(a: &Nfa<S>, b: &Nfa<S>) -> Option<Vec<S>> {
    let da = a.determinize();
    let db = b.determinize();
    let start = (da.initial, db.initial);
    type Parents<S> = HashMap<(usize, usize), Option<((usize, usize), S)>>;
    let mut parent: Parents<S> = HashMap::from([(start, None)]);
    let mut queue = VecDeque::from([start]);
    let word_to = |parent: &Parents<S>, mut at: (usize, usize)| {
        let mut word = Vec::new();
        while let Some(Some((prev, s))) = parent.get(&at) {
            word.push(s.clone());
            at = *prev;
        }
        word.reverse();
        word
    };
    while let Some(pair @ (x, y)) = queue.pop_front() {
        let symbols: BTreeSet<&S> = da.next[x].keys().chain(db.next[y].keys()).collect();
        for s in symbols {
            match (da.next[x].get(s), db.next[y].get(s)) {
                (Some(nx), Some(ny)) => {
                    let succ = (*nx, *ny);
                    if let Entry::Vacant(e) = parent.entry(succ) {
                        e.insert(Some((pair, s.clone())));
                        queue.push_back(succ);
                    }
                }
                _ => {
                    let mut word = word_to(&parent, pair);
                    word.push(s.clone());
                    return Some(word);
                }
            }
        }
    }
    None
}

pub fn equivalent<S: Ord + Clone>(a: &Nfa<S>, b: &Nfa<S>) -> bool {
    separating_word(a, b).is_none()
}
