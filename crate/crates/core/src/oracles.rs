//! Brute-force reference procedures and seeded instance generators.
//!
//! The oracles run their own step loops over concrete configurations and
//! process sets; they share nothing with the product, template or macrostate
//! code they are used to check.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::net::{ActionId, Ocn, OcnBuilder, Process, StateId};
use crate::reductions::{Icm, IcmOp, IcmTransition};

pub const FRONTIER_CAP: usize = 1_000_000;

fn fire(net: &Ocn, p: Process, a: ActionId) -> Vec<Process> {
    net.outgoing(p.state, a)
        .filter_map(|t| p.counter.checked_add_signed(t.effect as i64).map(|c| Process::new(t.dst, c)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InclusionOracle {
    /// Shortest word after which the left process can do `action` and the right one cannot.
    Witness { word: Vec<ActionId>, action: ActionId },
    NoneUpTo(usize),
    /// More than [`FRONTIER_CAP`] configurations were met.
    BoundHit { depth: usize },
}

/// Breadth-first search over pairs of configurations. Action ids are those of
/// `a`; actions are matched by name.
pub fn inclusion_oracle(a: &Ocn, b: &Ocn, pm: Process, qn: Process, depth: usize) -> InclusionOracle {
    let to_b: Vec<Option<ActionId>> = a.alphabet().iter().map(|x| b.action_id(x)).collect();
    let mut seen: HashMap<(Process, Process), Option<((Process, Process), ActionId)>> = HashMap::new();
    seen.insert((pm, qn), None);
    let mut level = vec![(pm, qn)];
    for d in 0..=depth {
        let mut next = Vec::new();
        for &(p, q) in &level {
            for x in 0..a.num_actions() {
                let ps = fire(a, p, x);
                if ps.is_empty() {
                    continue;
                }
                let qs = to_b[x].map(|y| fire(b, q, y)).unwrap_or_default();
                if qs.is_empty() {
                    let mut word = Vec::new();
                    let mut cur = (p, q);
                    while let Some(Some((prev, act))) = seen.get(&cur) {
                        word.push(*act);
                        cur = *prev;
                    }
                    word.reverse();
                    return InclusionOracle::Witness { word, action: x };
                }
                if d == depth {
                    continue;
                }
                for &p2 in &ps {
                    for &q2 in &qs {
                        if let std::collections::hash_map::Entry::Vacant(e) = seen.entry((p2, q2)) {
                            e.insert(Some(((p, q), x)));
                            next.push((p2, q2));
                        }
                    }
                }
            }
        }
        if seen.len() > FRONTIER_CAP {
            return InclusionOracle::BoundHit { depth: d };
        }
        level = next;
    }
    InclusionOracle::NoneUpTo(depth)
}

fn step_set(net: &Ocn, s: &BTreeSet<Process>, a: ActionId) -> BTreeSet<Process> {
    s.iter().flat_map(|&p| fire(net, p, a)).collect()
}

/// Lexicographically least among the shortest words of length `≤ max_len` that
/// are not traces of `proc`.
pub fn universality_oracle(net: &Ocn, proc: Process, max_len: usize) -> Option<Vec<ActionId>> {
    let start = BTreeSet::from([proc]);
    let mut seen: HashSet<BTreeSet<Process>> = HashSet::from([start.clone()]);
    let mut level = vec![(start, Vec::new())];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (s, w) in &level {
            for a in 0..net.num_actions() {
                let t = step_set(net, s, a);
                let mut w2: Vec<ActionId> = w.clone();
                w2.push(a);
                if t.is_empty() {
                    return Some(w2);
                }
                if seen.insert(t.clone()) {
                    next.push((t, w2));
                }
            }
        }
        level = next;
    }
    None
}

/// All traces of length at most `len`, the empty word included.
pub fn traces_upto(net: &Ocn, proc: Process, len: usize) -> BTreeSet<Vec<ActionId>> {
    let mut out = BTreeSet::from([vec![]]);
    let mut level = vec![(BTreeSet::from([proc]), Vec::new())];
    for _ in 0..len {
        let mut next = Vec::new();
        for (s, w) in &level {
            for a in 0..net.num_actions() {
                let t = step_set(net, s, a);
                if !t.is_empty() {
                    let mut w2: Vec<ActionId> = w.clone();
                    w2.push(a);
                    out.insert(w2.clone());
                    next.push((t, w2));
                }
            }
        }
        level = next;
    }
    out
}

/// Concrete replay of a word from a process set; used to confirm witnesses.
pub fn kills(net: &Ocn, proc: Process, word: &[ActionId]) -> bool {
    let mut s = BTreeSet::from([proc]);
    for &a in word {
        s = step_set(net, &s, a);
    }
    s.is_empty()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub min_states: usize,
    pub max_states: usize,
    pub actions: usize,
    /// Chance that a `(state, action)` slot receives transitions.
    pub density: f64,
    /// Relative weights of effects `-1, 0, +1`.
    pub effect_weights: [u32; 3],
    pub deterministic: bool,
    pub complete: bool,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            min_states: 1,
            max_states: 3,
            actions: 2,
            density: 0.8,
            effect_weights: [1, 1, 1],
            deterministic: false,
            complete: false,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn with_seed(self, seed: u64) -> Self {
        GenParams { seed, ..self }
    }
}

fn effect(rng: &mut ChaCha8Rng, w: [u32; 3]) -> i64 {
    let total: u32 = w.iter().sum::<u32>().max(1);
    let mut r = rng.gen_range(0..total);
    for (i, &x) in w.iter().enumerate() {
        if r < x {
            return i as i64 - 1;
        }
        r -= x;
    }
    0
}

/// States `s0, s1, ...` over actions `a, b, ...`.
pub fn rand_ocn(p: &GenParams) -> Ocn {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let n = rng.gen_range(p.min_states.max(1)..=p.max_states.max(p.min_states.max(1)));
    let mut b = OcnBuilder::new(&format!("rand{}", p.seed));
    for i in 0..n {
        b.add_state(format!("s{i}")).expect("fresh state");
    }
    for x in 0..p.actions {
        b.add_action(action_name(x)).expect("fresh action");
    }
    for s in 0..n {
        for x in 0..p.actions {
            let fill = p.complete || rng.gen_bool(p.density.clamp(0.0, 1.0));
            if !fill {
                continue;
            }
            let k = if p.deterministic { 1 } else { rng.gen_range(1..=2) };
            for _ in 0..k {
                let (e, d) = (effect(&mut rng, p.effect_weights), rng.gen_range(0..n));
                b.add_transition_idempotent(s, x, e, d).expect("valid transition");
            }
        }
    }
    b.build()
}

fn action_name(i: usize) -> String {
    if i < 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("x{i}")
    }
}

/// A deterministic left net and a deterministic, complete right net over one alphabet.
pub fn rand_normal_pair(p: &GenParams) -> (Ocn, Ocn) {
    let a = rand_ocn(&GenParams { deterministic: true, complete: false, ..*p });
    let b = rand_ocn(&GenParams { deterministic: true, complete: true, seed: p.seed ^ 0x9e37_79b9_7f4a_7c15, ..*p });
    (a, b)
}

/// States `q0, q1, ...`, initial `q0`, final the last state.
pub fn rand_icm(p: &GenParams, counters: usize, transitions: usize) -> Icm {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let n = rng.gen_range(p.min_states.max(1)..=p.max_states.max(p.min_states.max(1)));
    let states: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let ts: Vec<IcmTransition> = (0..transitions)
        .map(|_| {
            let op = [IcmOp::Inc, IcmOp::Dec, IcmOp::Ifz][rng.gen_range(0..3)];
            IcmTransition { src: rng.gen_range(0..n), op, counter: rng.gen_range(0..counters.max(1)), dst: rng.gen_range(0..n) }
        })
        .collect();
    Icm::from_parts(format!("icm{}", p.seed), states, counters.max(1), ts, 0, n - 1).expect("valid machine")
}

/// The process set reached by `word`, for tests comparing with macrostates.
pub fn reach_set(net: &Ocn, proc: Process, word: &[ActionId]) -> BTreeSet<Process> {
    let mut s = BTreeSet::from([proc]);
    for &a in word {
        s = step_set(net, &s, a);
    }
    s
}

pub fn state_set(procs: &BTreeSet<Process>) -> BTreeSet<StateId> {
    procs.iter().map(|p| p.state).collect()
}
