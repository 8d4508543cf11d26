//! Trace universality via macrostates.
//!
//! A macrostate keeps, per control state, the largest counter among the
//! processes currently held; by monotonicity it has the same traces as the
//! underlying set. A pathfinder looks for a word driving the macrostate of
//! the start process to all-⊥. Along one branch, a macrostate covering an
//! earlier one can be cut: a shortest witness never passes through one.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::net::{ActionId, Ocn, Process, StateId};
use crate::reductions::fast_growing;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Macrostate(pub Vec<Option<u64>>);

impl Macrostate {
    pub fn bottom(k: usize) -> Self {
        Macrostate(vec![None; k])
    }

    pub fn singleton(net: &Ocn, p: Process) -> Self {
        let mut m = Macrostate::bottom(net.num_states());
        m.0[p.state] = Some(p.counter);
        m
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, s: StateId) -> Option<u64> {
        self.0[s]
    }

    pub fn is_bottom(&self) -> bool {
        self.0.iter().all(Option::is_none)
    }

    /// Largest entry, `None` for all-⊥.
    pub fn norm(&self) -> Option<u64> {
        self.0.iter().flatten().copied().max()
    }

    /// `self ⊑ other`.
    pub fn covered_by(&self, other: &Macrostate) -> bool {
        covers(self, other)
    }

    pub fn processes(&self) -> impl Iterator<Item = Process> + '_ {
        self.0.iter().enumerate().filter_map(|(s, c)| c.map(|c| Process::new(s, c)))
    }

    pub fn display(&self, net: &Ocn) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter_map(|(s, c)| c.map(|c| format!("{}={c}", net.state_name(s))))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

impl fmt::Display for Macrostate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.map_or("⊥".into(), |c| c.to_string())).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn macrostate_of(net: &Ocn, procs: impl IntoIterator<Item = Process>) -> Macrostate {
    let mut m = Macrostate::bottom(net.num_states());
    for p in procs {
        let e = &mut m.0[p.state];
        *e = Some(e.map_or(p.counter, |c| c.max(p.counter)));
    }
    m
}

pub fn macro_step(net: &Ocn, m: &Macrostate, action: &str) -> Result<Macrostate> {
    Ok(macro_step_id(net, m, net.require_action(action)?))
}

pub fn macro_step_id(net: &Ocn, m: &Macrostate, action: ActionId) -> Macrostate {
    let mut out = Macrostate::bottom(net.num_states());
    for p in m.processes() {
        for t in net.outgoing(p.state, action) {
            if let Some(c) = p.counter.checked_add_signed(t.effect as i64) {
                let e = &mut out.0[t.dst];
                *e = Some(e.map_or(c, |x| x.max(c)));
            }
        }
    }
    out
}

pub fn macro_run(net: &Ocn, m: &Macrostate, word: &[ActionId]) -> Vec<Macrostate> {
    let mut out = vec![m.clone()];
    for &a in word {
        let next = macro_step_id(net, out.last().unwrap(), a);
        out.push(next);
    }
    out
}

/// `m ⊑ n`: pointwise, with ⊥ below every number.
pub fn covers(m: &Macrostate, n: &Macrostate) -> bool {
    m.0.len() == n.0.len()
        && m.0.iter().zip(&n.0).all(|(x, y)| match (x, y) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => a <= b,
        })
}

/// States whose processes are universal at any counter: a non-decreasing
/// self-loop on every action.
pub fn universal_states(net: &Ocn) -> Vec<bool> {
    (0..net.num_states())
        .map(|s| (0..net.num_actions()).all(|a| net.outgoing(s, a).any(|t| t.dst == s && t.effect >= 0)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Iterative deepening; returns the lexicographically least shortest witness.
    Shortest,
    /// Depth-first; returns the first witness met.
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UniversalityOutcome {
    NonUniversal { word: Vec<ActionId> },
    Universal,
    /// The length budget cut some branch before a verdict.
    Unknown { budget: usize },
}

impl UniversalityOutcome {
    pub fn witness(&self) -> Option<&[ActionId]> {
        match self {
            UniversalityOutcome::NonUniversal { word } => Some(word),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PathfinderStats {
    pub expanded: u64,
    pub pruned_cover: u64,
    pub pruned_universal: u64,
}

pub struct Pathfinder<'n> {
    net: &'n Ocn,
    universal: Vec<bool>,
    pub stats: PathfinderStats,
}

enum Dfs {
    Found,
    Exhausted { cut: bool },
}

impl<'n> Pathfinder<'n> {
    pub fn new(net: &'n Ocn) -> Self {
        Pathfinder { net, universal: universal_states(net), stats: PathfinderStats::default() }
    }

    fn is_universal(&self, m: &Macrostate) -> bool {
        m.processes().any(|p| self.universal[p.state])
    }

    fn dfs(&mut self, path: &mut Vec<Macrostate>, word: &mut Vec<ActionId>, limit: Option<usize>) -> Dfs {
        self.stats.expanded += 1;
        let mut cut = false;
        if limit.is_some_and(|l| word.len() >= l) {
            return Dfs::Exhausted { cut: true };
        }
        let cur = path.last().unwrap().clone();
        for a in 0..self.net.num_actions() {
            let next = macro_step_id(self.net, &cur, a);
            word.push(a);
            if next.is_bottom() {
                return Dfs::Found;
            }
            if path.iter().any(|anc| covers(anc, &next)) {
                self.stats.pruned_cover += 1;
            } else if self.is_universal(&next) {
                self.stats.pruned_universal += 1;
            } else {
                path.push(next);
                match self.dfs(path, word, limit) {
                    Dfs::Found => return Dfs::Found,
                    Dfs::Exhausted { cut: c } => cut |= c,
                }
                path.pop();
            }
            word.pop();
        }
        Dfs::Exhausted { cut }
    }

    /// Searches from an arbitrary macrostate. `budget` bounds the witness length.
    pub fn search(&mut self, start: &Macrostate, mode: SearchMode, budget: Option<usize>) -> UniversalityOutcome {
        if start.is_bottom() {
            return UniversalityOutcome::NonUniversal { word: vec![] };
        }
        if self.is_universal(start) {
            return UniversalityOutcome::Universal;
        }
        match mode {
            SearchMode::Any => {
                let (mut path, mut word) = (vec![start.clone()], Vec::new());
                match self.dfs(&mut path, &mut word, budget) {
                    Dfs::Found => UniversalityOutcome::NonUniversal { word },
                    Dfs::Exhausted { cut: false } => UniversalityOutcome::Universal,
                    Dfs::Exhausted { cut: true } => UniversalityOutcome::Unknown { budget: budget.unwrap_or(0) },
                }
            }
            SearchMode::Shortest => {
                let mut depth = 1;
                loop {
                    let (mut path, mut word) = (vec![start.clone()], Vec::new());
                    match self.dfs(&mut path, &mut word, Some(depth)) {
                        Dfs::Found => return UniversalityOutcome::NonUniversal { word },
                        Dfs::Exhausted { cut: false } => return UniversalityOutcome::Universal,
                        Dfs::Exhausted { cut: true } => {}
                    }
                    if budget.is_some_and(|b| depth >= b) {
                        return UniversalityOutcome::Unknown { budget: depth };
                    }
                    depth += 1;
                }
            }
        }
    }
}

/// Looks for a word that is not a trace of `proc`.
pub fn find_nonuniversality_witness(net: &Ocn, proc: Process, mode: SearchMode, budget: Option<usize>) -> UniversalityOutcome {
    Pathfinder::new(net).search(&Macrostate::singleton(net, proc), mode, budget)
}

/// Searches a word of `T_finite(s) \ T_net(qn)`. `finite` must have only zero effects.
/// Actions of `finite` missing from `net` cannot be matched by it.
pub fn finite_vs_ocn_inclusion(
    finite: &Ocn,
    s: StateId,
    net: &Ocn,
    qn: Process,
    budget: Option<usize>,
) -> Result<UniversalityOutcome> {
    if let Some(t) = finite.transitions().iter().find(|t| t.effect != 0) {
        return Err(Error::Input(format!("finite system has effect {} on {}", t.effect, finite.format_transition(t))));
    }
    let map: Vec<Option<ActionId>> = finite.alphabet().iter().map(|a| net.action_id(a)).collect();
    let start = (BTreeSet::from([s]), Macrostate::singleton(net, qn));
    let mut stack = vec![start];
    let mut word = Vec::new();
    let mut cut = false;
    if fvo_dfs(finite, net, &map, &mut stack, &mut word, budget, &mut cut) {
        return Ok(UniversalityOutcome::NonUniversal { word });
    }
    Ok(if cut { UniversalityOutcome::Unknown { budget: budget.unwrap_or(0) } } else { UniversalityOutcome::Universal })
}

type Pair = (BTreeSet<StateId>, Macrostate);

fn fvo_dfs(
    finite: &Ocn,
    net: &Ocn,
    map: &[Option<ActionId>],
    path: &mut Vec<Pair>,
    word: &mut Vec<ActionId>,
    budget: Option<usize>,
    cut: &mut bool,
) -> bool {
    if budget.is_some_and(|b| word.len() >= b) {
        *cut = true;
        return false;
    }
    let (fs, m) = path.last().unwrap().clone();
    for a in 0..finite.num_actions() {
        let next_f: BTreeSet<StateId> = fs.iter().flat_map(|&q| finite.outgoing(q, a).map(|t| t.dst)).collect();
        if next_f.is_empty() {
            continue;
        }
        let next_m = match map[a] {
            Some(b) => macro_step_id(net, &m, b),
            None => Macrostate::bottom(net.num_states()),
        };
        word.push(a);
        if next_m.is_bottom() {
            return true;
        }
        let pruned = path.iter().any(|(f, anc)| *f == next_f && covers(anc, &next_m));
        if !pruned {
            path.push((next_f, next_m));
            if fvo_dfs(finite, net, map, path, word, budget, cut) {
                return true;
            }
            path.pop();
        }
        word.pop();
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlFn {
    Successor,
    /// `F_k` of the fast-growing hierarchy.
    FastGrowing(u32),
}

impl ControlFn {
    /// `None` when the value exceeds the evaluation cap, i.e. is effectively unbounded.
    pub fn eval(self, x: u64) -> Option<BigUint> {
        match self {
            ControlFn::Successor => Some(BigUint::from(x) + 1u8),
            ControlFn::FastGrowing(k) => fast_growing(k, x, 4096).ok(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequenceVerdict {
    /// Some `i < j` with `x_i ⊑ x_j`.
    pub good: bool,
    pub good_pair: Option<(usize, usize)>,
    /// `∥x_i∥ < f(i + t)` for all `i`; all-⊥ counts as norm 0.
    pub controlled: bool,
}

pub fn check_sequence(seq: &[Macrostate], t: u64, f: ControlFn) -> SequenceVerdict {
    let mut good_pair = None;
    'outer: for j in 0..seq.len() {
        for i in 0..j {
            if covers(&seq[i], &seq[j]) {
                good_pair = Some((i, j));
                break 'outer;
            }
        }
    }
    let controlled = seq.iter().enumerate().all(|(i, x)| {
        let norm = BigUint::from(x.norm().unwrap_or(0));
        f.eval(i as u64 + t).map_or(true, |bound| norm < bound)
    });
    SequenceVerdict { good: good_pair.is_some(), good_pair, controlled }
}
