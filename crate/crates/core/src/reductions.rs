//! Counter machines with incrementing errors and their encoding into
//! one-counter nets, plus the counting gadgets and the fast-growing hierarchy.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::net::{ActionId, Ocn, OcnBuilder, Process, StateId};
use crate::universality::Macrostate;

pub const RUN_START: &str = "#";
pub const RUN_END: &str = "$";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IcmOp {
    Inc,
    Dec,
    Ifz,
}

impl fmt::Display for IcmOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IcmOp::Inc => "inc",
            IcmOp::Dec => "dec",
            IcmOp::Ifz => "ifz",
        })
    }
}

impl std::str::FromStr for IcmOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inc" => Ok(IcmOp::Inc),
            "dec" => Ok(IcmOp::Dec),
            "ifz" => Ok(IcmOp::Ifz),
            _ => Err(Error::Input(format!("unknown counter operation `{s}`"))),
        }
    }
}

/// `counter` is 0-based; the text format and action names count from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IcmTransition {
    pub src: StateId,
    pub op: IcmOp,
    pub counter: usize,
    pub dst: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Icm {
    name: String,
    states: Vec<String>,
    counters: usize,
    transitions: Vec<IcmTransition>,
    init: StateId,
    fin: StateId,
}

impl Icm {
    /// Transitions are `(src, op, counter from 1, dst)`.
    pub fn new(
        name: &str,
        states: &[&str],
        counters: usize,
        transitions: &[(&str, IcmOp, usize, &str)],
        init: &str,
        fin: &str,
    ) -> Result<Self> {
        let states: Vec<String> = states.iter().map(|s| s.to_string()).collect();
        let id = |s: &str| {
            states.iter().position(|x| x == s).ok_or_else(|| Error::UnknownState(s.to_string()))
        };
        let mut ts = Vec::new();
        for &(src, op, i, dst) in transitions {
            ts.push(IcmTransition { src: id(src)?, op, counter: i.wrapping_sub(1), dst: id(dst)? });
        }
        let (init, fin) = (id(init)?, id(fin)?);
        Icm::from_parts(name.to_string(), states, counters, ts, init, fin)
    }

    pub fn from_parts(
        name: String,
        states: Vec<String>,
        counters: usize,
        transitions: Vec<IcmTransition>,
        init: StateId,
        fin: StateId,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for s in &states {
            if !seen.insert(s) {
                return Err(Error::DuplicateState(s.clone()));
            }
        }
        for t in &transitions {
            if t.counter >= counters {
                return Err(Error::Input(format!("counter index {} out of range 1..={counters}", t.counter.wrapping_add(1))));
            }
            if t.src >= states.len() || t.dst >= states.len() {
                return Err(Error::Input("transition state out of range".into()));
            }
        }
        if init >= states.len() || fin >= states.len() {
            return Err(Error::Input("initial or final state out of range".into()));
        }
        Ok(Icm { name, states, counters, transitions, init, fin })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn states(&self) -> &[String] {
        &self.states
    }
    pub fn counters(&self) -> usize {
        self.counters
    }
    pub fn transitions(&self) -> &[IcmTransition] {
        &self.transitions
    }
    pub fn init(&self) -> StateId {
        self.init
    }
    pub fn fin(&self) -> StateId {
        self.fin
    }
    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn initial_config(&self) -> IcmConfig {
        IcmConfig { state: self.init, counters: vec![0; self.counters] }
    }

    /// The same machine without transition `idx`.
    pub fn without_transition(&self, idx: usize) -> Icm {
        let mut m = self.clone();
        m.transitions.remove(idx);
        m
    }

    pub fn format_transition(&self, t: &IcmTransition) -> String {
        format!("{} {} {} {}", self.states[t.src], t.op, t.counter + 1, self.states[t.dst])
    }
}

/// The machine `q0 -inc 1-> q1 -dec 2-> q2 -ifz 2-> q0` with target `q2`.
pub fn example_icm() -> Icm {
    Icm::new(
        "example",
        &["q0", "q1", "q2"],
        2,
        &[("q0", IcmOp::Inc, 1, "q1"), ("q1", IcmOp::Dec, 2, "q2"), ("q2", IcmOp::Ifz, 2, "q0")],
        "q0",
        "q2",
    )
    .expect("valid machine")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IcmConfig {
    pub state: StateId,
    pub counters: Vec<u64>,
}

impl IcmConfig {
    pub fn display(&self, m: &Icm) -> String {
        let c: Vec<String> = self.counters.iter().map(u64::to_string).collect();
        format!("{}({})", m.states[self.state], c.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IcmStep {
    /// Index into the machine's transitions.
    Fire(usize),
    /// Spontaneous increment of a counter (0-based).
    Error(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IcmRun {
    pub steps: Vec<IcmStep>,
    /// `configs[0]` is initial; one more entry per step.
    pub configs: Vec<IcmConfig>,
}

impl IcmRun {
    pub fn last(&self) -> &IcmConfig {
        self.configs.last().unwrap()
    }

    pub fn display(&self, m: &Icm) -> String {
        let mut s = self.configs[0].display(m);
        for (st, c) in self.steps.iter().zip(&self.configs[1..]) {
            let label = match st {
                IcmStep::Fire(i) => format!("t{}", i + 1),
                IcmStep::Error(i) => format!("tau{}", i + 1),
            };
            s.push_str(&format!(" -{label}-> {}", c.display(m)));
        }
        s
    }
}

/// Applies one step, `None` if it is disabled.
pub fn icm_apply(m: &Icm, c: &IcmConfig, step: IcmStep) -> Option<IcmConfig> {
    match step {
        IcmStep::Error(i) => {
            let mut n = c.clone();
            n.counters[i] += 1;
            Some(n)
        }
        IcmStep::Fire(idx) => {
            let t = m.transitions[idx];
            if t.src != c.state {
                return None;
            }
            let mut n = c.clone();
            n.state = t.dst;
            let v = &mut n.counters[t.counter];
            match t.op {
                IcmOp::Inc => *v += 1,
                IcmOp::Dec if *v == 0 => return None,
                IcmOp::Dec => *v -= 1,
                IcmOp::Ifz if *v > 0 => return None,
                IcmOp::Ifz => {}
            }
            Some(n)
        }
    }
}

pub fn icm_successors(m: &Icm, c: &IcmConfig, allow_errors: bool) -> BTreeSet<IcmConfig> {
    let mut out: BTreeSet<IcmConfig> = (0..m.transitions.len()).filter_map(|i| icm_apply(m, c, IcmStep::Fire(i))).collect();
    if allow_errors {
        out.extend((0..m.counters).filter_map(|i| icm_apply(m, c, IcmStep::Error(i))));
    }
    out
}

/// Breadth-first search for a run, errors allowed, from the all-zero
/// configuration to the final state.
pub fn icm_reachable_bounded(m: &Icm, counter_cap: u64, depth_cap: usize) -> Option<IcmRun> {
    let start = m.initial_config();
    let mut parent: HashMap<IcmConfig, Option<(IcmConfig, IcmStep)>> = HashMap::new();
    parent.insert(start.clone(), None);
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((c, d)) = queue.pop_front() {
        if c.state == m.fin {
            let mut steps = Vec::new();
            let mut configs = vec![c.clone()];
            let mut cur = c;
            while let Some(Some((prev, st))) = parent.get(&cur).cloned() {
                steps.push(st);
                configs.push(prev.clone());
                cur = prev;
            }
            steps.reverse();
            configs.reverse();
            return Some(IcmRun { steps, configs });
        }
        if d >= depth_cap {
            continue;
        }
        let moves = (0..m.transitions.len()).map(IcmStep::Fire).chain((0..m.counters).map(IcmStep::Error));
        for st in moves {
            if let Some(n) = icm_apply(m, &c, st) {
                if n.counters.iter().all(|&v| v <= counter_cap) && !parent.contains_key(&n) {
                    parent.insert(n.clone(), Some((c.clone(), st)));
                    queue.push_back((n, d + 1));
                }
            }
        }
    }
    None
}

/// `q -(a,0)-> U` for every `a ∈ actions`.
pub fn make_obstacle(net: &Ocn, q: &str, universal: &str, actions: &[&str]) -> Result<Ocn> {
    let mut b = net.to_builder();
    let (q, u) = (net.require_state(q)?, net.require_state(universal)?);
    for a in actions {
        b.add_transition_idempotent(q, net.require_action(a)?, 0, u)?;
    }
    Ok(b.build())
}

/// `q -(a,0)-> q` for every `a ∈ actions`.
pub fn make_ignore(net: &Ocn, q: &str, actions: &[&str]) -> Result<Ocn> {
    let mut b = net.to_builder();
    let q = net.require_state(q)?;
    for a in actions {
        b.add_transition_idempotent(q, net.require_action(a)?, 0, q)?;
    }
    Ok(b.build())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMeaning {
    RunStart,
    RunEnd,
    Transition(usize),
    Error(usize),
}

#[derive(Debug, Clone)]
pub struct ReductionOutput {
    pub net: Ocn,
    pub init: Process,
    /// Indexed by the net's action ids.
    pub dictionary: Vec<ActionMeaning>,
    pub machine: Icm,
}

impl ReductionOutput {
    pub fn dictionary_text(&self) -> String {
        let mut s = String::new();
        for (a, m) in self.dictionary.iter().enumerate() {
            let meaning = match m {
                ActionMeaning::RunStart => "start".to_string(),
                ActionMeaning::RunEnd => "end".to_string(),
                ActionMeaning::Transition(i) => format!("transition {}", self.machine.format_transition(&self.machine.transitions[*i])),
                ActionMeaning::Error(i) => format!("error {}", i + 1),
            };
            s.push_str(&format!("{} {}\n", self.net.action_name(a), meaning));
        }
        s
    }
}

/// Explicit rules of one action, by source state.
#[derive(Default)]
struct Rules {
    to: BTreeMap<StateId, Vec<(i64, StateId)>>,
    obstacle: BTreeSet<StateId>,
    silent: BTreeSet<StateId>,
}

/// Encodes `m` so that `(Init, 0)` is non-universal iff `m` can reach its
/// final state with incrementing errors.
///
/// `#` must come first and spawns the control state, `Z` and every counter
/// state at 0. Letters `t_j` simulate transitions and `tau_i` errors; any
/// cheat leads into the universal state `U`. `$` empties the macrostate
/// exactly when the final control state is present.
pub fn icm_to_ocn(m: &Icm) -> Result<ReductionOutput> {
    let k = m.counters;
    let mut names = vec!["Init".to_string(), "U".to_string(), "Z".to_string()];
    names.extend(m.states.iter().cloned());
    names.extend((1..=k).map(|i| format!("C{i}")));
    let mut b = OcnBuilder::new(&format!("{}_net", m.name));
    for n in &names {
        b.add_state(n.clone()).map_err(|_| Error::Construction(format!("machine state name `{n}` clashes with a gadget state")))?;
    }
    let (init, u, z) = (0usize, 1usize, 2usize);
    let q = |s: StateId| 3 + s;
    let c = |i: usize| 3 + m.states.len() + i;
    let num_states = names.len();

    let mut actions = vec![(RUN_START.to_string(), ActionMeaning::RunStart), (RUN_END.to_string(), ActionMeaning::RunEnd)];
    actions.extend((0..m.transitions.len()).map(|j| (format!("t{}", j + 1), ActionMeaning::Transition(j))));
    actions.extend((0..k).map(|i| (format!("tau{}", i + 1), ActionMeaning::Error(i))));
    for (a, _) in &actions {
        b.add_action(a.clone())?;
    }

    let mut rules: Vec<Rules> = actions.iter().map(|_| Rules::default()).collect();
    let tr = |a: usize| 2 + a;
    let err = |i: usize| 2 + m.transitions.len() + i;

    // #: only Init moves; everything else is an obstacle
    rules[0].to.insert(init, std::iter::once((0, q(m.init))).chain(std::iter::once((0, z))).chain((0..k).map(|i| (0, c(i)))).collect());
    rules[0].obstacle.extend((0..num_states).filter(|&s| s != init && s != u));
    // $: non-final control states are obstacles; final, Z and counters drop out
    rules[1].obstacle.insert(init);
    rules[1].obstacle.extend((0..m.states.len()).filter(|&s| s != m.fin).map(q));
    rules[1].silent.extend([q(m.fin), z]);
    rules[1].silent.extend((0..k).map(c));

    for (j, t) in m.transitions.iter().enumerate() {
        let r = &mut rules[tr(j)];
        r.obstacle.insert(init);
        r.to.entry(q(t.src)).or_default().push((0, q(t.dst)));
        r.obstacle.extend((0..m.states.len()).filter(|&s| s != t.src).map(q));
        let ci = c(t.counter);
        match t.op {
            IcmOp::Inc => r.to.entry(ci).or_default().push((1, ci)),
            IcmOp::Dec => {
                r.to.entry(ci).or_default().push((-1, ci));
                r.to.entry(z).or_default().extend([(0, z), (0, ci)]);
            }
            IcmOp::Ifz => r.to.entry(ci).or_default().extend([(0, ci), (-1, u)]),
        }
    }
    for i in 0..k {
        let r = &mut rules[err(i)];
        r.obstacle.insert(init);
        r.to.entry(c(i)).or_default().push((1, c(i)));
    }

    for (a, r) in rules.iter().enumerate() {
        for s in 0..num_states {
            let explicit = r.to.get(&s);
            if explicit.is_some() && r.obstacle.contains(&s) {
                return Err(Error::Construction(format!(
                    "state {} has both a rule and an obstacle on {}",
                    names[s], actions[a].0
                )));
            }
            if s == u {
                b.add_transition_ids(u, a, 0, u)?;
            } else if let Some(ts) = explicit {
                for &(e, d) in ts {
                    b.add_transition_idempotent(s, a, e, d)?;
                }
            } else if r.obstacle.contains(&s) {
                b.add_transition_ids(s, a, 0, u)?;
            } else if !r.silent.contains(&s) {
                b.add_transition_ids(s, a, 0, s)?;
            }
        }
    }

    Ok(ReductionOutput {
        net: b.build(),
        init: Process::new(init, 0),
        dictionary: actions.into_iter().map(|(_, m)| m).collect(),
        machine: m.clone(),
    })
}

/// Reads `# w $` (optionally `$$`) back as a run of the machine. Decrements
/// of a zero counter are preceded by the implicit error they stand for.
/// `Ok(None)` if the letters do not form a valid run to the final state.
pub fn decode_witness(out: &ReductionOutput, word: &[ActionId]) -> Result<Option<IcmRun>> {
    let meaning = |a: ActionId| {
        out.dictionary.get(a).copied().ok_or_else(|| Error::Decode(format!("letter {a} outside the dictionary")))
    };
    let letters = word.iter().map(|&a| meaning(a)).collect::<Result<Vec<_>>>()?;
    let Some(end) = letters.iter().position(|l| *l == ActionMeaning::RunEnd) else {
        return Err(Error::Decode("witness must contain the end marker".into()));
    };
    if letters.first() != Some(&ActionMeaning::RunStart) {
        return Err(Error::Decode("witness must start with the start marker".into()));
    }
    if letters[end + 1..].iter().any(|l| *l != ActionMeaning::RunEnd) || letters.len() > end + 2 {
        return Err(Error::Decode("letters after the end marker".into()));
    }
    let m = &out.machine;
    let mut cur = m.initial_config();
    let mut run = IcmRun { steps: vec![], configs: vec![cur.clone()] };
    let push = |run: &mut IcmRun, cur: &mut IcmConfig, st: IcmStep| -> bool {
        match icm_apply(m, cur, st) {
            Some(n) => {
                run.steps.push(st);
                run.configs.push(n.clone());
                *cur = n;
                true
            }
            None => false,
        }
    };
    for l in &letters[1..end] {
        let ok = match *l {
            ActionMeaning::Error(i) => push(&mut run, &mut cur, IcmStep::Error(i)),
            ActionMeaning::Transition(j) => {
                let t = m.transitions[j];
                if t.op == IcmOp::Dec && cur.counters[t.counter] == 0 {
                    push(&mut run, &mut cur, IcmStep::Error(t.counter));
                }
                push(&mut run, &mut cur, IcmStep::Fire(j))
            }
            _ => false,
        };
        if !ok {
            return Ok(None);
        }
    }
    Ok((cur.state == m.fin).then_some(run))
}

pub fn counting_action(i: usize) -> String {
    i.to_string()
}

/// Counting gadget over `{0..k, e}`.
///
/// `F_i` counts down on `i`, ignores smaller letters and sends `e` and larger
/// letters to `U`. The accumulator `A` counts up on `0` and on `i+1` spawns
/// `F_i` at its own counter while staying put. Returns the net and the
/// macrostate `{A=m, F_k=n}`.
pub fn counting_gadget(k: usize, m: u64, n: u64) -> Result<(Ocn, Macrostate)> {
    let mut b = OcnBuilder::new(&format!("gadget_{k}"));
    let u = b.add_state("U")?;
    let acc = b.add_state("A")?;
    let f: Vec<StateId> = (0..=k).map(|i| b.add_state(format!("F{i}"))).collect::<Result<_>>()?;
    let acts: Vec<ActionId> = (0..=k).map(|i| b.add_action(counting_action(i))).collect::<Result<_>>()?;
    let e = b.add_action("e")?;
    for a in acts.iter().copied().chain([e]) {
        b.add_transition_ids(u, a, 0, u)?;
    }
    b.add_transition_ids(acc, acts[0], 1, acc)?;
    for i in 0..k {
        b.add_transition_ids(acc, acts[i + 1], 0, acc)?;
        b.add_transition_ids(acc, acts[i + 1], 0, f[i])?;
    }
    for i in 0..=k {
        for j in 0..i {
            b.add_transition_ids(f[i], acts[j], 0, f[i])?;
        }
        b.add_transition_ids(f[i], acts[i], -1, f[i])?;
        for a in acts[i + 1..].iter().copied().chain([e]) {
            b.add_transition_ids(f[i], a, 0, u)?;
        }
    }
    let net = b.build();
    let mut ms = Macrostate::bottom(net.num_states());
    ms.0[acc] = Some(m);
    ms.0[f[k]] = Some(n);
    Ok((net, ms))
}

/// `F_k(x)`; errors once an intermediate value needs more than `bit_cap` bits.
pub fn fast_growing(k: u32, x: u64, bit_cap: u64) -> Result<BigUint> {
    fg(k, BigUint::from(x), bit_cap)
}

fn fg(k: u32, x: BigUint, cap: u64) -> Result<BigUint> {
    let over = || Error::Overflow(format!("F_{k} exceeds {cap} bits"));
    match k {
        0 => Ok(x + 1u8),
        // F_1(x) = 2x + 1, F_2(x) = 2^(x+1)(x+1) - 1
        1 => Ok((x << 1u32) + 1u8),
        2 => {
            let e = (&x + 1u8).to_u64().filter(|&e| e <= cap).ok_or_else(over)?;
            let v = (BigUint::one() << e) * (x + 1u8) - 1u8;
            if v.bits() > cap {
                return Err(over());
            }
            Ok(v)
        }
        _ => {
            let reps = (&x + 1u8).to_u64().ok_or_else(over)?;
            let mut v = x;
            for _ in 0..reps {
                v = fg(k - 1, v, cap)?;
                if v.bits() > cap {
                    return Err(over());
                }
            }
            Ok(v)
        }
    }
}

/// `F_ω(x) = F_x(x)`.
pub fn fast_growing_omega(x: u64, bit_cap: u64) -> Result<BigUint> {
    let k = u32::try_from(x).map_err(|_| Error::Overflow("index too large".into()))?;
    fast_growing(k, x, bit_cap)
}

/// `f^n(x)`.
pub fn iterate_fast_growing(k: u32, n: u64, x: u64, bit_cap: u64) -> Result<BigUint> {
    let mut v = BigUint::from(x);
    for _ in 0..n {
        v = fg(k, v, bit_cap)?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::universality::{find_nonuniversality_witness, macro_run, Pathfinder, SearchMode, UniversalityOutcome};

    /// Direct unfolding of `F_{k+1}(x) = F_k^{x+1}(x)`.
    fn unfold(k: u32, x: u64) -> u64 {
        if k == 0 {
            return x + 1;
        }
        (0..=x).fold(x, |v, _| unfold(k - 1, v))
    }

    #[test]
    fn fast_growing_values() {
        let f = |k, x| fast_growing(k, x, 1 << 16).unwrap();
        assert_eq!(f(0, 3), BigUint::from(4u8));
        assert_eq!(f(1, 2), BigUint::from(5u8));
        assert_eq!(f(2, 2), BigUint::from(23u8));
        for k in 0..3 {
            for x in 0..5 {
                assert_eq!(f(k, x), BigUint::from(unfold(k, x)), "F_{k}({x})");
            }
        }
        assert_eq!(f(3, 1), BigUint::from(unfold(3, 1)));
        assert_eq!(fast_growing_omega(2, 64).unwrap(), BigUint::from(23u8));
        assert!(fast_growing(3, 3, 4096).is_err());
        assert!(matches!(fast_growing(4, 4, 1 << 12), Err(Error::Overflow(_))));
    }

    #[test]
    fn f1_iterates_closed_form() {
        for n in 0..=10u32 {
            for x in 0..=10u64 {
                let want = (BigUint::one() << n) * (x + 1) - 1u8;
                assert_eq!(iterate_fast_growing(1, n as u64, x, 64).unwrap(), want);
            }
        }
    }

    #[test]
    fn successors() {
        let m = example_icm();
        let c0 = m.initial_config();
        let s = icm_successors(&m, &c0, false);
        assert!(s.contains(&IcmConfig { state: 1, counters: vec![1, 0] }));
        let c1 = IcmConfig { state: 1, counters: vec![1, 0] };
        assert!(icm_successors(&m, &c1, false).is_empty());
        assert!(icm_successors(&m, &c1, true).contains(&IcmConfig { state: 1, counters: vec![1, 1] }));
    }

    #[test]
    fn bounded_reachability() {
        let m = example_icm();
        let run = icm_reachable_bounded(&m, 3, 12).unwrap();
        assert_eq!(run.steps, vec![IcmStep::Fire(0), IcmStep::Error(1), IcmStep::Fire(1)]);
        assert!(icm_reachable_bounded(&m.without_transition(1), 3, 12).is_none());
        let idle = Icm::new("i", &["a", "b"], 1, &[], "a", "b").unwrap();
        assert!(icm_reachable_bounded(&idle, 3, 12).is_none());
        let same = Icm::new("i", &["a"], 1, &[], "a", "a").unwrap();
        assert_eq!(icm_reachable_bounded(&same, 3, 12).unwrap().steps, vec![]);
    }

    #[test]
    fn obstacles_and_ignores() {
        let net = Ocn::from_transitions("N", &[("q", "a", 1, "q"), ("U", "a", 0, "U")]).unwrap();
        assert_eq!(make_obstacle(&net, "q", "U", &[]).unwrap(), net);
        let o = make_obstacle(&net, "q", "U", &["a"]).unwrap();
        let run = macro_run(&o, &Macrostate::singleton(&o, Process::new(0, 0)), &[0]);
        assert!(run[1].get(1).is_some());
        let single = Ocn::from_transitions("N", &[("q", "b", 1, "q"), ("q", "a", -1, "r")]).unwrap();
        let i = make_ignore(&single, "q", &["a"]).unwrap();
        let run = macro_run(&i, &Macrostate::singleton(&i, Process::new(0, 3)), &[1]);
        assert_eq!(run[1].get(0), Some(3));
    }

    #[test]
    fn reduction_shape() {
        let out = icm_to_ocn(&example_icm()).unwrap();
        let n = &out.net;
        assert_eq!(n.states(), ["Init", "U", "Z", "q0", "q1", "q2", "C1", "C2"]);
        assert_eq!(n.alphabet(), ["#", "$", "t1", "t2", "t3", "tau1", "tau2"]);
        let (c2, t3, u) = (n.state_id("C2").unwrap(), n.action_id("t3").unwrap(), n.state_id("U").unwrap());
        assert!(n.outgoing(c2, t3).any(|t| t.effect == -1 && t.dst == u));
        for a in 0..n.num_actions() {
            assert!(n.outgoing(u, a).any(|t| t.dst == u && t.effect == 0));
        }
    }

    #[test]
    fn reduction_witness_decodes() {
        let out = icm_to_ocn(&example_icm()).unwrap();
        let res = find_nonuniversality_witness(&out.net, out.init, SearchMode::Shortest, Some(14));
        let UniversalityOutcome::NonUniversal { word } = res else { panic!("{res:?}") };
        assert_eq!(out.net.word_to_string(&word), "# t1 t2 $");
        let run = decode_witness(&out, &word).unwrap().unwrap();
        assert_eq!(run.steps, vec![IcmStep::Fire(0), IcmStep::Error(1), IcmStep::Fire(1)]);
        let explicit = out.net.parse_word("# t1 tau2 t2 $").unwrap();
        assert_eq!(decode_witness(&out, &explicit).unwrap().unwrap().steps, run.steps);
        let double = out.net.parse_word("# t1 tau2 t2 $ $").unwrap();
        assert!(decode_witness(&out, &double).unwrap().is_some());
        let open = out.net.parse_word("# t1 tau2 t2").unwrap();
        assert!(matches!(decode_witness(&out, &open), Err(Error::Decode(_))));
        assert!(matches!(decode_witness(&out, &[99]), Err(Error::Decode(_))));
    }

    #[test]
    fn reduction_without_dec_is_universal_up_to_budget() {
        let out = icm_to_ocn(&example_icm().without_transition(1)).unwrap();
        let res = Pathfinder::new(&out.net).search(&Macrostate::singleton(&out.net, out.init), SearchMode::Any, Some(14));
        assert!(res.witness().is_none(), "{res:?}");
    }

    #[test]
    fn initial_is_final() {
        let m = Icm::new("i", &["a"], 1, &[], "a", "a").unwrap();
        let out = icm_to_ocn(&m).unwrap();
        let w = out.net.parse_word("# $").unwrap();
        assert_eq!(decode_witness(&out, &w).unwrap().unwrap().steps, vec![]);
        let res = find_nonuniversality_witness(&out.net, out.init, SearchMode::Shortest, Some(4));
        assert_eq!(res.witness(), Some(&w[..]));
    }

    #[test]
    fn name_clash_is_reported() {
        let m = Icm::new("i", &["U"], 1, &[], "U", "U").unwrap();
        assert!(matches!(icm_to_ocn(&m), Err(Error::Construction(_))));
    }

    #[test]
    fn gadgets_need_e() {
        for k in 0..=1 {
            for m in 0..=2 {
                for n in 0..=2 {
                    let (net, start) = counting_gadget(k, m, n).unwrap();
                    let res = Pathfinder::new(&net).search(&start, SearchMode::Shortest, Some(40));
                    let w = res.witness().unwrap_or_else(|| panic!("k={k} m={m} n={n}: {res:?}"));
                    assert_eq!(net.action_name(*w.last().unwrap()), "e");
                }
            }
        }
    }
}
