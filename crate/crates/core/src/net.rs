//! One-counter nets: data model, step semantics and the normal-form pipeline
//! (epsilon elimination, relabelling to a deterministic left net, completion of
//! the right net with a sink).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// Reserved label for silent transitions.
pub const EPSILON: &str = "eps";
/// Fresh end marker added by [`normalize_pair`].
pub const END_MARKER: &str = "$";

pub type StateId = usize;
pub type ActionId = usize;

/// A single transition `src -(action, effect)-> dst`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub src: StateId,
    pub action: ActionId,
    pub effect: i8,
    pub dst: StateId,
}

/// A control state paired with a counter value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Process {
    pub state: StateId,
    pub counter: u64,
}

impl Process {
    pub fn new(state: StateId, counter: u64) -> Self {
        Process { state, counter }
    }
}

/// A one-counter net `(Q, Act, delta)`.
///
/// States and actions are kept in declaration order; macrostate coordinates and
/// fresh-label numbering rely on that order.
#[derive(Clone)]
pub struct Ocn {
    name: String,
    states: Vec<String>,
    alphabet: Vec<String>,
    transitions: Vec<Transition>,
    state_index: HashMap<String, StateId>,
    action_index: HashMap<String, ActionId>,
    // out[state][action] -> indices into `transitions`
    out: Vec<Vec<Vec<usize>>>,
}

impl fmt::Debug for Ocn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ocn")
            .field("name", &self.name)
            .field("states", &self.states)
            .field("alphabet", &self.alphabet)
            .field("transitions", &self.transitions.len())
            .finish()
    }
}

impl PartialEq for Ocn {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.states == other.states
            && self.alphabet == other.alphabet
            && self.transitions == other.transitions
    }
}

impl Eq for Ocn {}

fn valid_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

impl Ocn {
    /// Builds a net from named components. Transitions are `(src, action, effect, dst)`.
    pub fn new<S, A>(
        name: &str,
        states: impl IntoIterator<Item = S>,
        alphabet: impl IntoIterator<Item = A>,
        transitions: &[(&str, &str, i64, &str)],
    ) -> Result<Self>
    where
        S: Into<String>,
        A: Into<String>,
    {
        let mut b = OcnBuilder::new(name);
        for s in states {
            b.add_state(s.into())?;
        }
        for a in alphabet {
            b.add_action(a.into())?;
        }
        for &(src, act, eff, dst) in transitions {
            b.add_transition(src, act, eff, dst)?;
        }
        Ok(b.build())
    }

    /// Builds a net whose states and actions are declared in order of first
    /// appearance in `transitions`.
    pub fn from_transitions(name: &str, transitions: &[(&str, &str, i64, &str)]) -> Result<Self> {
        let mut b = OcnBuilder::new(name);
        for &(src, act, eff, dst) in transitions {
            b.ensure_state(src)?;
            b.ensure_action(act)?;
            b.ensure_state(dst)?;
            b.add_transition(src, act, eff, dst)?;
        }
        Ok(b.build())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.alphabet.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn state_name(&self, id: StateId) -> &str {
        &self.states[id]
    }

    pub fn action_name(&self, id: ActionId) -> &str {
        &self.alphabet[id]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.action_index.get(name).copied()
    }

    pub fn require_state(&self, name: &str) -> Result<StateId> {
        self.state_id(name)
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn require_action(&self, name: &str) -> Result<ActionId> {
        self.action_id(name)
            .ok_or_else(|| Error::UnknownAction(name.to_string()))
    }

    /// Transitions leaving `state` labelled `action`.
    pub fn outgoing(&self, state: StateId, action: ActionId) -> impl Iterator<Item = &Transition> {
        self.out[state][action].iter().map(move |&i| &self.transitions[i])
    }

    /// All transitions leaving `state`, in declaration order.
    pub fn transitions_from(&self, state: StateId) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.src == state)
    }

    /// Parses `state:counter`.
    pub fn process(&self, spec: &str) -> Result<Process> {
        let (s, c) = spec
            .rsplit_once(':')
            .ok_or_else(|| Error::Input(format!("process `{spec}` is not of the form state:counter")))?;
        let counter = c
            .parse::<u64>()
            .map_err(|_| Error::Input(format!("bad counter value `{c}`")))?;
        Ok(Process::new(self.require_state(s)?, counter))
    }

    pub fn format_process(&self, p: Process) -> String {
        format!("{}:{}", self.state_name(p.state), p.counter)
    }

    pub fn format_transition(&self, t: &Transition) -> String {
        format!(
            "{} -({},{})-> {}",
            self.state_name(t.src),
            self.action_name(t.action),
            t.effect,
            self.state_name(t.dst)
        )
    }

    pub fn word_to_string(&self, word: &[ActionId]) -> String {
        word.iter()
            .map(|&a| self.action_name(a))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn parse_word(&self, word: &str) -> Result<Vec<ActionId>> {
        word.split_whitespace().map(|w| self.require_action(w)).collect()
    }

    /// Returns a builder pre-populated with this net's contents.
    pub fn to_builder(&self) -> OcnBuilder {
        OcnBuilder {
            name: self.name.clone(),
            states: self.states.clone(),
            alphabet: self.alphabet.clone(),
            transitions: self.transitions.clone(),
            state_index: self.state_index.clone(),
            action_index: self.action_index.clone(),
            seen: self.transitions.iter().copied().collect(),
        }
    }

    pub fn has_transition(&self, t: &Transition) -> bool {
        self.out[t.src][t.action]
            .iter()
            .any(|&i| self.transitions[i] == *t)
    }
}

/// Incremental construction of an [`Ocn`] with validation.
#[derive(Debug, Clone)]
pub struct OcnBuilder {
    name: String,
    states: Vec<String>,
    alphabet: Vec<String>,
    transitions: Vec<Transition>,
    state_index: HashMap<String, StateId>,
    action_index: HashMap<String, ActionId>,
    seen: HashSet<Transition>,
}

impl OcnBuilder {
    pub fn new(name: &str) -> Self {
        OcnBuilder {
            name: name.to_string(),
            states: Vec::new(),
            alphabet: Vec::new(),
            transitions: Vec::new(),
            state_index: HashMap::new(),
            action_index: HashMap::new(),
            seen: HashSet::new(),
        }
    }

    pub fn add_state(&mut self, name: impl Into<String>) -> Result<StateId> {
        let name = name.into();
        if !valid_token(&name) {
            return Err(Error::Input(format!("invalid state name `{name}`")));
        }
        if self.state_index.contains_key(&name) {
            return Err(Error::DuplicateState(name));
        }
        let id = self.states.len();
        self.state_index.insert(name.clone(), id);
        self.states.push(name);
        Ok(id)
    }

    pub fn add_action(&mut self, name: impl Into<String>) -> Result<ActionId> {
        let name = name.into();
        if !valid_token(&name) {
            return Err(Error::Input(format!("invalid action name `{name}`")));
        }
        if self.action_index.contains_key(&name) {
            return Err(Error::DuplicateAction(name));
        }
        let id = self.alphabet.len();
        self.action_index.insert(name.clone(), id);
        self.alphabet.push(name);
        Ok(id)
    }

    pub fn ensure_state(&mut self, name: &str) -> Result<StateId> {
        match self.state_index.get(name) {
            Some(&id) => Ok(id),
            None => self.add_state(name),
        }
    }

    pub fn ensure_action(&mut self, name: &str) -> Result<ActionId> {
        match self.action_index.get(name) {
            Some(&id) => Ok(id),
            None => self.add_action(name),
        }
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.action_index.get(name).copied()
    }

    pub fn has_state(&self, name: &str) -> bool {
        self.state_index.contains_key(name)
    }

    pub fn add_transition(&mut self, src: &str, action: &str, effect: i64, dst: &str) -> Result<()> {
        let s = *self
            .state_index
            .get(src)
            .ok_or_else(|| Error::UnknownState(src.to_string()))?;
        let a = *self
            .action_index
            .get(action)
            .ok_or_else(|| Error::UnknownAction(action.to_string()))?;
        let d = *self
            .state_index
            .get(dst)
            .ok_or_else(|| Error::UnknownState(dst.to_string()))?;
        self.add_transition_ids(s, a, effect, d)
    }

    pub fn add_transition_ids(&mut self, src: StateId, action: ActionId, effect: i64, dst: StateId) -> Result<()> {
        if !(-1..=1).contains(&effect) {
            return Err(Error::InvalidEffect(effect));
        }
        if src >= self.states.len() || dst >= self.states.len() || action >= self.alphabet.len() {
            return Err(Error::Input("transition refers to an undeclared id".into()));
        }
        let t = Transition { src, action, effect: effect as i8, dst };
        if !self.seen.insert(t) {
            return Err(Error::DuplicateTransition(format!(
                "{} {} {} {}",
                self.states[src], self.alphabet[action], effect, self.states[dst]
            )));
        }
        self.transitions.push(t);
        Ok(())
    }

    /// Adds the transition unless it is already present.
    pub fn add_transition_idempotent(&mut self, src: StateId, action: ActionId, effect: i64, dst: StateId) -> Result<()> {
        let t = Transition { src, action, effect: effect as i8, dst };
        if self.seen.contains(&t) {
            return Ok(());
        }
        self.add_transition_ids(src, action, effect, dst)
    }

    pub fn build(self) -> Ocn {
        let mut out = vec![vec![Vec::new(); self.alphabet.len()]; self.states.len()];
        for (i, t) in self.transitions.iter().enumerate() {
            out[t.src][t.action].push(i);
        }
        Ocn {
            name: self.name,
            states: self.states,
            alphabet: self.alphabet,
            transitions: self.transitions,
            state_index: self.state_index,
            action_index: self.action_index,
            out,
        }
    }
}

/// All successors of `proc` under `action`.
pub fn step(net: &Ocn, proc: Process, action: &str) -> Result<BTreeSet<Process>> {
    let a = net.require_action(action)?;
    if proc.state >= net.num_states() {
        return Err(Error::UnknownState(format!("#{}", proc.state)));
    }
    Ok(step_id(net, proc, a))
}

pub(crate) fn step_id(net: &Ocn, proc: Process, action: ActionId) -> BTreeSet<Process> {
    net.outgoing(proc.state, action)
        .filter_map(|t| apply_effect(proc.counter, t.effect).map(|c| Process::new(t.dst, c)))
        .collect()
}

pub(crate) fn apply_effect(counter: u64, effect: i8) -> Option<u64> {
    match effect {
        -1 => counter.checked_sub(1),
        0 => Some(counter),
        _ => counter.checked_add(effect as u64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetClass {
    pub deterministic: bool,
    pub complete: bool,
}

pub fn classify_net(net: &Ocn) -> NetClass {
    let mut deterministic = true;
    let mut complete = true;
    for s in 0..net.num_states() {
        for a in 0..net.num_actions() {
            match net.outgoing(s, a).count() {
                0 => complete = false,
                1 => {}
                _ => deterministic = false,
            }
        }
    }
    NetClass { deterministic, complete }
}

/// Result of [`eliminate_epsilon`].
///
/// Composite moves (silent prefix followed by one labelled step) may have
/// effects and guards beyond one unit. The output net stores the counter
/// residue modulo `scale` in its control states: an original process `p m`
/// corresponds to `embed(p m) = (p@(m mod scale), m div scale)`.
#[derive(Debug, Clone)]
pub struct EpsilonElimination {
    pub net: Ocn,
    pub scale: u64,
    /// `(original state, residue) -> state of the output net`
    residue_states: HashMap<(StateId, u64), StateId>,
    /// States of the input that sat on a silent cycle and became deadlocks.
    pub deadlocks: Vec<StateId>,
}

impl EpsilonElimination {
    pub fn embed(&self, p: Process) -> Process {
        let r = p.counter % self.scale;
        Process::new(self.residue_states[&(p.state, r)], p.counter / self.scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Composite {
    src: StateId,
    action: ActionId,
    effect: i64,
    guard: i64,
    dst: StateId,
}

/// Removes `eps`-labelled transitions.
///
/// States on silent cycles lose all their transitions. Every remaining silent
/// prefix is folded into the following labelled step. Traces of every process
/// of a surviving state are preserved under [`EpsilonElimination::embed`].
pub fn eliminate_epsilon(net: &Ocn) -> EpsilonElimination {
    let Some(eps) = net.action_id(EPSILON) else {
        let residue_states = (0..net.num_states()).map(|s| ((s, 0), s)).collect();
        return EpsilonElimination {
            net: net.clone(),
            scale: 1,
            residue_states,
            deadlocks: Vec::new(),
        };
    };
    let n = net.num_states();
    let eps_succ: Vec<Vec<(StateId, i64)>> = (0..n)
        .map(|s| net.outgoing(s, eps).map(|t| (t.dst, t.effect as i64)).collect())
        .collect();

    // states that reach themselves through at least one silent step
    let mut on_cycle = vec![false; n];
    for s in 0..n {
        let mut seen = vec![false; n];
        let mut stack: Vec<StateId> = eps_succ[s].iter().map(|&(d, _)| d).collect();
        while let Some(q) = stack.pop() {
            if q == s {
                on_cycle[s] = true;
                break;
            }
            if !std::mem::replace(&mut seen[q], true) {
                stack.extend(eps_succ[q].iter().map(|&(d, _)| d));
            }
        }
    }

    let mut composites = BTreeSet::new();
    for p in (0..n).filter(|&p| !on_cycle[p]) {
        // silent paths from p avoid deadlock states, so they are acyclic
        let mut stack = vec![(p, 0i64, 0i64)];
        while let Some((r, eff, guard)) = stack.pop() {
            for t in net.transitions_from(r).filter(|t| t.action != eps) {
                let e = eff + t.effect as i64;
                composites.insert(Composite {
                    src: p,
                    action: t.action,
                    effect: e,
                    guard: guard.max(-e),
                    dst: t.dst,
                });
            }
            for &(d, de) in &eps_succ[r] {
                if !on_cycle[d] {
                    let e = eff + de;
                    stack.push((d, e, guard.max(-e)));
                }
            }
        }
    }

    let scale = composites
        .iter()
        .map(|c| c.effect.abs().max(c.guard))
        .max()
        .unwrap_or(1)
        .max(1);
    let k = scale as i64;

    let mut b = OcnBuilder::new(net.name());
    for a in net.alphabet().iter().filter(|a| a.as_str() != EPSILON) {
        b.add_action(a.clone()).expect("alphabet names are unique");
    }
    let action_map: Vec<Option<ActionId>> = net
        .alphabet()
        .iter()
        .map(|a| b.action_id(a))
        .collect();

    let mut residue_states: HashMap<(StateId, u64), StateId> = HashMap::new();
    let mut state_of = |b: &mut OcnBuilder, q: StateId, r: i64| -> StateId {
        *residue_states.entry((q, r as u64)).or_insert_with(|| {
            let base = if r == 0 {
                net.state_name(q).to_string()
            } else {
                format!("{}@{}", net.state_name(q), r)
            };
            let mut name = base.clone();
            while b.has_state(&name) {
                name.push('\'');
            }
            b.add_state(name).expect("fresh state name")
        })
    };

    for q in 0..n {
        for r in 0..k {
            state_of(&mut b, q, r);
        }
    }
    let by_src: BTreeMap<StateId, Vec<Composite>> =
        composites.iter().fold(BTreeMap::new(), |mut m, c| {
            m.entry(c.src).or_default().push(*c);
            m
        });

    let mut work: Vec<(StateId, i64)> = (0..n).flat_map(|q| (0..k).map(move |r| (q, r))).collect();
    let mut done: HashSet<(StateId, i64)> = HashSet::new();
    while let Some((q, r)) = work.pop() {
        if !done.insert((q, r)) {
            continue;
        }
        let from = state_of(&mut b, q, r);
        for c in by_src.get(&q).into_iter().flatten() {
            let total = r + c.effect;
            let (carry, r2) = if r < k {
                if r >= c.guard {
                    if total >= k {
                        (1, total - k)
                    } else {
                        (0, total)
                    }
                } else {
                    // residue alone cannot pay the guard: borrow one unit of the
                    // scaled counter, which is available iff the guard is met
                    (-1, total + k)
                }
            } else if total >= 3 * k {
                (1, total - k)
            } else {
                (0, total)
            };
            debug_assert!((0..3 * k).contains(&r2));
            let to = state_of(&mut b, c.dst, r2);
            let act = action_map[c.action].expect("labelled action survives");
            b.add_transition_idempotent(from, act, carry, to)
                .expect("valid composite transition");
            if !done.contains(&(c.dst, r2)) {
                work.push((c.dst, r2));
            }
        }
    }

    let mut deadlocks: Vec<StateId> = (0..n).filter(|&s| on_cycle[s]).collect();
    deadlocks.sort_unstable();
    EpsilonElimination {
        net: b.build(),
        scale: scale as u64,
        residue_states,
        deadlocks,
    }
}

/// Maps fresh labels introduced by [`normalize_pair`] back to original labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMap {
    entries: Vec<(String, String)>,
}

impl LabelMap {
    pub fn original(&self, fresh: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(f, _)| f == fresh)
            .map(|(_, o)| o.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Translates a word over the fresh alphabet, dropping end markers.
    pub fn translate<'a>(&'a self, word: impl IntoIterator<Item = &'a str>) -> Result<Vec<String>> {
        word.into_iter()
            .filter(|w| *w != END_MARKER)
            .map(|w| {
                self.original(w)
                    .map(str::to_string)
                    .ok_or_else(|| Error::UnknownAction(w.to_string()))
            })
            .collect()
    }
}

/// Output of [`normalize_pair`].
#[derive(Debug, Clone)]
pub struct NormalizedPair {
    pub a: Ocn,
    pub b: Ocn,
    pub labels: LabelMap,
    pub sink: StateId,
}

/// Rewrites an inclusion instance into a deterministic left net and a complete
/// right net over a shared fresh alphabet `t0, t1, ..., $`.
///
/// Processes keep their state ids: states of `a` and `b` map to themselves.
pub fn normalize_pair(a: &Ocn, b: &Ocn) -> Result<NormalizedPair> {
    for (side, net) in [("left", a), ("right", b)] {
        if net.action_id(EPSILON).is_some() {
            return Err(Error::Input(format!(
                "{side} net uses `{EPSILON}`; eliminate silent steps first"
            )));
        }
    }
    let fresh: Vec<String> = (0..a.transitions().len()).map(|i| format!("t{i}")).collect();
    let mut labels = LabelMap::default();
    for (i, t) in a.transitions().iter().enumerate() {
        labels
            .entries
            .push((fresh[i].clone(), a.action_name(t.action).to_string()));
    }

    let mut ab = OcnBuilder::new(a.name());
    let mut bb = OcnBuilder::new(b.name());
    for s in a.states() {
        ab.add_state(s.clone())?;
    }
    for s in b.states() {
        bb.add_state(s.clone())?;
    }
    let mut sink_name = String::from("L");
    while bb.has_state(&sink_name) {
        sink_name.push('\'');
    }
    let sink = bb.add_state(sink_name)?;
    for f in fresh.iter().map(String::as_str).chain([END_MARKER]) {
        ab.add_action(f)?;
        bb.add_action(f)?;
    }
    let dollar = ab.action_id(END_MARKER).expect("declared");

    for (i, t) in a.transitions().iter().enumerate() {
        ab.add_transition_ids(t.src, i, t.effect as i64, t.dst)?;
    }
    for s in 0..a.num_states() {
        ab.add_transition_ids(s, dollar, 0, s)?;
    }

    for (i, ta) in a.transitions().iter().enumerate() {
        let label = a.action_name(ta.action);
        let orig = b.action_id(label);
        for q in 0..b.num_states() {
            let mut any = false;
            if let Some(ob) = orig {
                for tb in b.outgoing(q, ob) {
                    bb.add_transition_ids(q, i, tb.effect as i64, tb.dst)?;
                    any = true;
                }
            }
            if !any {
                bb.add_transition_ids(q, i, 0, sink)?;
            }
        }
        bb.add_transition_ids(sink, i, -1, sink)?;
    }
    for q in 0..b.num_states() {
        bb.add_transition_ids(q, dollar, 0, q)?;
    }
    bb.add_transition_ids(sink, dollar, -1, sink)?;

    Ok(NormalizedPair {
        a: ab.build(),
        b: bb.build(),
        labels,
        sink,
    })
}
