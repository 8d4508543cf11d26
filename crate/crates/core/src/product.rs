//! Synchronised product of two nets and the path algebra over it: effects,
//! guards, loops with slopes and types, unique decompositions and witnesses.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::net::{apply_effect, classify_net, step_id, ActionId, NetClass, Ocn, Process, StateId};

pub type NodeId = usize;
pub type EdgeId = usize;

/// One synchronised step of both nets on the same action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProductEdge {
    pub src: NodeId,
    /// Action id in the left net's alphabet.
    pub action: ActionId,
    pub effect_a: i8,
    pub effect_b: i8,
    pub dst: NodeId,
    /// Indices of the underlying transitions.
    pub trans_a: usize,
    pub trans_b: usize,
}

#[derive(Debug, Clone)]
pub struct ProductGraph {
    a: Ocn,
    b: Ocn,
    class_a: NetClass,
    class_b: NetClass,
    edges: Vec<ProductEdge>,
    out: Vec<Vec<EdgeId>>,
    // left action id -> right action id
    action_map: Vec<Option<ActionId>>,
}

/// Builds the product. Only actions present in both alphabets synchronise.
pub fn build_product(a: &Ocn, b: &Ocn) -> Result<ProductGraph> {
    let nb = b.num_states();
    let action_map: Vec<Option<ActionId>> = a.alphabet().iter().map(|x| b.action_id(x)).collect();
    let mut edges = Vec::new();
    let mut out = vec![Vec::new(); a.num_states() * nb];
    for (ia, ta) in a.transitions().iter().enumerate() {
        let Some(ab) = action_map[ta.action] else { continue };
        for (ib, tb) in b.transitions().iter().enumerate() {
            if tb.action != ab {
                continue;
            }
            let e = ProductEdge {
                src: ta.src * nb + tb.src,
                action: ta.action,
                effect_a: ta.effect,
                effect_b: tb.effect,
                dst: ta.dst * nb + tb.dst,
                trans_a: ia,
                trans_b: ib,
            };
            out[e.src].push(edges.len());
            edges.push(e);
        }
    }
    // adjacency sorted by action, then by right transition, for a stable edge order
    for list in &mut out {
        list.sort_by_key(|&e| (edges[e].action, edges[e].trans_a, edges[e].trans_b));
    }
    Ok(ProductGraph {
        a: a.clone(),
        b: b.clone(),
        class_a: classify_net(a),
        class_b: classify_net(b),
        edges,
        out,
        action_map,
    })
}

impl ProductGraph {
    pub fn a(&self) -> &Ocn {
        &self.a
    }

    pub fn b(&self) -> &Ocn {
        &self.b
    }

    pub fn num_nodes(&self) -> usize {
        self.a.num_states() * self.b.num_states()
    }

    pub fn node(&self, qa: StateId, qb: StateId) -> NodeId {
        qa * self.b.num_states() + qb
    }

    pub fn split(&self, n: NodeId) -> (StateId, StateId) {
        (n / self.b.num_states(), n % self.b.num_states())
    }

    pub fn edges(&self) -> &[ProductEdge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &ProductEdge {
        &self.edges[e]
    }

    pub fn out_edges(&self, n: NodeId) -> &[EdgeId] {
        &self.out[n]
    }

    pub fn node_name(&self, n: NodeId) -> String {
        let (x, y) = self.split(n);
        format!("({},{})", self.a.state_name(x), self.b.state_name(y))
    }

    pub fn action_name(&self, e: EdgeId) -> &str {
        self.a.action_name(self.edges[e].action)
    }

    /// Left-net action labels along a path.
    pub fn word(&self, p: &Path) -> Vec<String> {
        p.edges.iter().map(|&e| self.action_name(e).to_string()).collect()
    }

    /// Parses a space separated word into the unique product path from `start`.
    /// Fails if some step is missing or ambiguous.
    pub fn path_from_word(&self, start: NodeId, word: &[&str]) -> Result<Path> {
        let mut edges = Vec::with_capacity(word.len());
        let mut cur = start;
        for w in word {
            let act = self.a.require_action(w)?;
            let mut it = self.out[cur].iter().filter(|&&e| self.edges[e].action == act);
            let e = *it
                .next()
                .ok_or_else(|| Error::Input(format!("no product edge for `{w}` at {}", self.node_name(cur))))?;
            if it.next().is_some() {
                return Err(Error::Input(format!("ambiguous product edge for `{w}` at {}", self.node_name(cur))));
            }
            edges.push(e);
            cur = self.edges[e].dst;
        }
        Path::new(self, start, edges)
    }

    pub fn is_normal(&self) -> bool {
        self.class_a.deterministic && self.class_b.complete
    }

    pub(crate) fn right_action(&self, a: ActionId) -> Option<ActionId> {
        self.action_map[a]
    }
}

/// Effects and guards of a path on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Summary {
    pub effect_a: i64,
    pub effect_b: i64,
    pub guard_a: i64,
    pub guard_b: i64,
}

impl Summary {
    pub fn of_edge(e: &ProductEdge) -> Summary {
        let (ea, eb) = (e.effect_a as i64, e.effect_b as i64);
        Summary { effect_a: ea, effect_b: eb, guard_a: (-ea).max(0), guard_b: (-eb).max(0) }
    }

    pub fn then(self, next: Summary) -> Summary {
        Summary {
            effect_a: self.effect_a + next.effect_a,
            effect_b: self.effect_b + next.effect_b,
            guard_a: self.guard_a.max(next.guard_a - self.effect_a),
            guard_b: self.guard_b.max(next.guard_b - self.effect_b),
        }
    }

    /// Summary of `k` repetitions.
    pub fn power(self, k: u64) -> Summary {
        if k == 0 {
            return Summary::default();
        }
        let k = k as i64;
        let g = |guard: i64, eff: i64| guard + (k - 1) * (-eff).max(0);
        Summary {
            effect_a: self.effect_a * k,
            effect_b: self.effect_b * k,
            guard_a: g(self.guard_a, self.effect_a),
            guard_b: g(self.guard_b, self.effect_b),
        }
    }
}

/// A path in the product graph with its cached [`Summary`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    start: NodeId,
    end: NodeId,
    edges: Vec<EdgeId>,
    summary: Summary,
}

impl Path {
    pub fn empty(start: NodeId) -> Path {
        Path { start, end: start, edges: Vec::new(), summary: Summary::default() }
    }

    pub fn new(g: &ProductGraph, start: NodeId, edges: Vec<EdgeId>) -> Result<Path> {
        if start >= g.num_nodes() {
            return Err(Error::Input(format!("node {start} out of range")));
        }
        let mut p = Path::empty(start);
        for e in edges {
            p.push(g, e)?;
        }
        Ok(p)
    }

    pub fn push(&mut self, g: &ProductGraph, e: EdgeId) -> Result<()> {
        let edge = g
            .edges
            .get(e)
            .ok_or_else(|| Error::Input(format!("edge {e} out of range")))?;
        if edge.src != self.end {
            return Err(Error::Input(format!(
                "edge {e} starts at {} but the path ends at {}",
                g.node_name(edge.src),
                g.node_name(self.end)
            )));
        }
        self.summary = self.summary.then(Summary::of_edge(edge));
        self.edges.push(e);
        self.end = edge.dst;
        Ok(())
    }

    pub fn start(&self) -> NodeId {
        self.start
    }

    pub fn end(&self) -> NodeId {
        self.end
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn summary(&self) -> Summary {
        self.summary
    }

    pub fn effect_a(&self) -> i64 {
        self.summary.effect_a
    }

    pub fn effect_b(&self) -> i64 {
        self.summary.effect_b
    }

    pub fn guard_a(&self) -> i64 {
        self.summary.guard_a
    }

    pub fn guard_b(&self) -> i64 {
        self.summary.guard_b
    }

    pub fn concat(&self, other: &Path) -> Result<Path> {
        if self.end != other.start {
            return Err(Error::Input("paths do not chain".into()));
        }
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        Ok(Path {
            start: self.start,
            end: other.end,
            edges,
            summary: self.summary.then(other.summary),
        })
    }

    pub fn repeat(&self, k: u64) -> Result<Path> {
        if k > 1 && self.start != self.end {
            return Err(Error::Input("only cycles can be repeated".into()));
        }
        let mut edges = Vec::with_capacity(self.edges.len() * k as usize);
        for _ in 0..k {
            edges.extend_from_slice(&self.edges);
        }
        Ok(Path {
            start: self.start,
            end: if k == 0 { self.start } else { self.end },
            edges,
            summary: self.summary.power(k),
        })
    }

    /// The first `k` edges.
    pub fn prefix(&self, g: &ProductGraph, k: usize) -> Path {
        let mut p = Path::empty(self.start);
        for &e in &self.edges[..k] {
            p.push(g, e).expect("prefix of a valid path");
        }
        p
    }

    /// Visited nodes, `len + 1` of them.
    pub fn nodes(&self, g: &ProductGraph) -> Vec<NodeId> {
        std::iter::once(self.start)
            .chain(self.edges.iter().map(|&e| g.edges[e].dst))
            .collect()
    }

    pub fn is_acyclic(&self, g: &ProductGraph) -> bool {
        let nodes = self.nodes(g);
        let mut seen = std::collections::HashSet::new();
        nodes.iter().all(|n| seen.insert(*n))
    }

    pub fn display(&self, g: &ProductGraph) -> String {
        if self.edges.is_empty() {
            return "ε".into();
        }
        g.word(self).join(" ")
    }
}

/// Extended rational slope `effect_a / effect_b`.
///
/// `n/0` is `+inf` for `n > 0`, `-inf` for `n < 0`, and `0/0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slope {
    NegInfinity,
    Finite(Ratio<i64>),
    PosInfinity,
}

impl Slope {
    pub fn of(effect_a: i64, effect_b: i64) -> Slope {
        match (effect_a.cmp(&0), effect_b) {
            (Ordering::Equal, 0) => Slope::Finite(Ratio::from_integer(0)),
            (Ordering::Greater, 0) => Slope::PosInfinity,
            (Ordering::Less, 0) => Slope::NegInfinity,
            _ => Slope::Finite(Ratio::new(effect_a, effect_b)),
        }
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slope::NegInfinity => write!(f, "-inf"),
            Slope::PosInfinity => write!(f, "inf"),
            Slope::Finite(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Slope::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

/// Sign pattern of a loop's effects. The four types partition `Z x Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LoopType {
    /// `(>,≥)`: left grows, right does not shrink.
    Up,
    /// `(≤,≥)`: left does not grow, right does not shrink.
    Flat,
    /// `(<,<)`: both shrink.
    Down,
    /// `(≥,<)`: left does not shrink, right shrinks.
    Drain,
}

impl LoopType {
    pub fn of(effect_a: i64, effect_b: i64) -> LoopType {
        match (effect_a, effect_b) {
            (a, b) if a > 0 && b >= 0 => LoopType::Up,
            (a, b) if a <= 0 && b >= 0 => LoopType::Flat,
            (a, b) if a < 0 && b < 0 => LoopType::Down,
            _ => LoopType::Drain,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            LoopType::Up => "(>,≥)",
            LoopType::Flat => "(≤,≥)",
            LoopType::Down => "(<,<)",
            LoopType::Drain => "(≥,<)",
        }
    }
}

impl fmt::Display for LoopType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

pub fn classify_loop(l: &Loop) -> (Slope, LoopType) {
    (l.slope, l.kind)
}

/// A simple cycle anchored at its start node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Loop {
    path: Path,
    slope: Slope,
    kind: LoopType,
}

impl Loop {
    pub fn new(g: &ProductGraph, path: Path) -> Result<Loop> {
        if path.is_empty() || path.start != path.end {
            return Err(Error::Input("a loop is a non-empty cycle".into()));
        }
        let nodes = path.nodes(g);
        let mut seen = std::collections::HashSet::new();
        if !nodes[..nodes.len() - 1].iter().all(|n| seen.insert(*n)) {
            return Err(Error::Input("loop has a proper sub-cycle".into()));
        }
        let (ea, eb) = (path.effect_a(), path.effect_b());
        Ok(Loop { path, slope: Slope::of(ea, eb), kind: LoopType::of(ea, eb) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn anchor(&self) -> NodeId {
        self.path.start
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn slope(&self) -> Slope {
        self.slope
    }

    pub fn kind(&self) -> LoopType {
        self.kind
    }

    pub fn effects(&self) -> (i64, i64) {
        (self.path.effect_a(), self.path.effect_b())
    }
}

/// Runs `path` from `start`. Returns the final pair iff both guards are met.
pub fn replay(g: &ProductGraph, path: &Path, start: (Process, Process)) -> Result<Option<(Process, Process)>> {
    let node = start_node(g, start)?;
    if node != path.start {
        return Err(Error::Input(format!(
            "path starts at {} but the configuration is at {}",
            g.node_name(path.start),
            g.node_name(node)
        )));
    }
    let (mut pa, mut pb) = start;
    for &e in &path.edges {
        let edge = &g.edges[e];
        let (Some(ca), Some(cb)) = (apply_effect(pa.counter, edge.effect_a), apply_effect(pb.counter, edge.effect_b)) else {
            return Ok(None);
        };
        let (da, db) = g.split(edge.dst);
        pa = Process::new(da, ca);
        pb = Process::new(db, cb);
    }
    Ok(Some((pa, pb)))
}

fn start_node(g: &ProductGraph, (pa, pb): (Process, Process)) -> Result<NodeId> {
    if pa.state >= g.a.num_states() || pb.state >= g.b.num_states() {
        return Err(Error::Input("process state out of range".into()));
    }
    Ok(g.node(pa.state, pb.state))
}

/// Actions enabled on the left but blocked on the right.
pub fn distinguishing_actions(g: &ProductGraph, pa: Process, pb: Process) -> Vec<ActionId> {
    (0..g.a.num_actions())
        .filter(|&x| {
            !step_id(&g.a, pa, x).is_empty()
                && g.right_action(x).map_or(true, |y| step_id(&g.b, pb, y).is_empty())
        })
        .collect()
}

/// Whether `path` replays from `start` into a pair where the left process
/// enables an action the right process cannot follow.
pub fn is_witness(g: &ProductGraph, path: &Path, start: (Process, Process)) -> Result<bool> {
    if !g.is_normal() {
        return Err(Error::Input("witnesses need a deterministic left net and a complete right net".into()));
    }
    Ok(match replay(g, path, start)? {
        Some((pa, pb)) => !distinguishing_actions(g, pa, pb).is_empty(),
        None => false,
    })
}

/// All anchored simple cycles; a cycle through `k` nodes appears once per node.
pub fn enumerate_loops(g: &ProductGraph) -> Vec<Loop> {
    let mut loops = Vec::new();
    let n = g.num_nodes();
    for anchor in 0..n {
        let mut on_path = vec![false; n];
        let mut stack: Vec<EdgeId> = Vec::new();
        on_path[anchor] = true;
        cycles_from(g, anchor, anchor, &mut on_path, &mut stack, &mut loops);
    }
    loops
}

fn cycles_from(
    g: &ProductGraph,
    anchor: NodeId,
    cur: NodeId,
    on_path: &mut [bool],
    stack: &mut Vec<EdgeId>,
    out: &mut Vec<Loop>,
) {
    for &e in g.out_edges(cur) {
        let d = g.edges[e].dst;
        stack.push(e);
        if d == anchor {
            let path = Path::new(g, anchor, stack.clone()).expect("chained edges");
            out.push(Loop::new(g, path).expect("simple cycle"));
        } else if !on_path[d] {
            on_path[d] = true;
            cycles_from(g, anchor, d, on_path, stack, out);
            on_path[d] = false;
        }
        stack.pop();
    }
}

/// One `(π_i, L_i, l_i)` block of a decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub prefix: Path,
    pub lp: Loop,
    pub reps: u64,
}

/// `π_0 L_0^{l_0} π_1 ... π_k L_k^{l_k} π_{k+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub blocks: Vec<Block>,
    pub suffix: Path,
}

impl Decomposition {
    pub fn to_path(&self) -> Path {
        let start = self.blocks.first().map_or(self.suffix.start, |b| b.prefix.start);
        let mut p = Path::empty(start);
        for b in &self.blocks {
            p = p.concat(&b.prefix).expect("decomposition chains");
            p = p.concat(&b.lp.path.repeat(b.reps).expect("cycle")).expect("decomposition chains");
        }
        p.concat(&self.suffix).expect("decomposition chains")
    }

    pub fn exponents(&self) -> Vec<u64> {
        self.blocks.iter().map(|b| b.reps).collect()
    }

    pub fn with_exponents(&self, exps: &[u64]) -> Decomposition {
        let mut d = self.clone();
        for (b, &e) in d.blocks.iter_mut().zip(exps) {
            b.reps = e;
        }
        d
    }

    /// The path strictly between block `i`'s loops and block `j`'s loops,
    /// including any intermediate loop blocks.
    pub fn between(&self, i: usize, j: usize) -> Path {
        let mut p = self.blocks[i + 1].prefix.clone();
        for k in i + 1..j {
            let b = &self.blocks[k];
            p = p.concat(&b.lp.path.repeat(b.reps).expect("cycle")).expect("chains");
            p = p.concat(&self.blocks[k + 1].prefix).expect("chains");
        }
        p
    }
}

/// The unique decomposition: each loop closes the first repeated node of the
/// current acyclic segment, and its immediate repetitions are counted.
pub fn decompose(g: &ProductGraph, path: &Path) -> Decomposition {
    let edges = &path.edges;
    let mut blocks = Vec::new();
    let mut seg_start = 0;
    let mut seg_anchor = path.start;
    // node -> edge index at which the node is left (its position in the segment)
    let mut seen: HashMap<NodeId, usize> = HashMap::from([(seg_anchor, 0)]);
    let mut i = 0;
    while i < edges.len() {
        let dst = g.edges[edges[i]].dst;
        match seen.get(&dst) {
            Some(&j) => {
                let prefix = Path::new(g, seg_anchor, edges[seg_start..j].to_vec()).expect("chains");
                let cyc = edges[j..=i].to_vec();
                let lp = Loop::new(g, Path::new(g, dst, cyc.clone()).expect("chains")).expect("first cycle is simple");
                let len = cyc.len();
                let mut reps = 1;
                let mut next = i + 1;
                while next + len <= edges.len() && edges[next..next + len] == cyc[..] {
                    reps += 1;
                    next += len;
                }
                blocks.push(Block { prefix, lp, reps });
                seg_start = next;
                seg_anchor = dst;
                seen.clear();
                seen.insert(dst, next);
                i = next;
            }
            None => {
                seen.insert(dst, i + 1);
                i += 1;
            }
        }
    }
    let suffix = Path::new(g, seg_anchor, edges[seg_start..].to_vec()).expect("chains");
    Decomposition { blocks, suffix }
}

/// Number of distinct loop effect pairs, `(2|V|+1)^2`.
pub fn effect_pair_bound(v: usize) -> u128 {
    let s = 2 * v as u128 + 1;
    s * s
}

/// At most `F_0` loop blocks, acyclic connecting paths, pairwise different loop effects.
pub fn is_sane(g: &ProductGraph, path: &Path) -> bool {
    decomposition_is_sane(g, &decompose(g, path))
}

pub fn decomposition_is_sane(g: &ProductGraph, d: &Decomposition) -> bool {
    if d.blocks.len() as u128 > effect_pair_bound(g.num_nodes()) {
        return false;
    }
    if !d.blocks.iter().all(|b| b.prefix.is_acyclic(g)) || !d.suffix.is_acyclic(g) {
        return false;
    }
    let mut effects = std::collections::HashSet::new();
    d.blocks.iter().all(|b| effects.insert(b.lp.effects()))
}

/// Shortest prefix of a witness for `start` that is a witness for the pair
/// with counters `m2 ≥ m` and `n2 ≤ n`.
pub fn shrink_to_prefix_witness(
    g: &ProductGraph,
    path: &Path,
    start: (Process, Process),
    m2: u64,
    n2: u64,
) -> Result<Path> {
    if !is_witness(g, path, start)? {
        return Err(Error::Input("path is not a witness for the given pair".into()));
    }
    if m2 < start.0.counter || n2 > start.1.counter {
        return Err(Error::Input("shrinking needs m' ≥ m and n' ≤ n".into()));
    }
    let s2 = (Process::new(start.0.state, m2), Process::new(start.1.state, n2));
    let mut p = Path::empty(path.start);
    for k in 0..=path.len() {
        if is_witness(g, &p, s2)? {
            return Ok(p);
        }
        if k < path.len() {
            p.push(g, path.edges[k])?;
        }
    }
    Err(Error::Internal("no prefix is a witness; monotonicity violated".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn loopy() -> ProductGraph {
        let (a, b) = fixtures::loopy();
        build_product(&a, &b).unwrap()
    }

    fn pair(pa: StateId, m: u64, pb: StateId, n: u64) -> (Process, Process) {
        (Process::new(pa, m), Process::new(pb, n))
    }

    #[test]
    fn loopy_product_is_one_self_edge() {
        let g = loopy();
        assert_eq!(g.num_nodes(), 1);
        assert_eq!(g.edges().len(), 1);
        let e = g.edge(0);
        assert_eq!((e.effect_a, e.effect_b, e.src, e.dst), (0, -1, 0, 0));
    }

    #[test]
    fn disjoint_alphabets_give_no_edges() {
        let a = Ocn::from_transitions("A", &[("p", "a", 0, "p")]).unwrap();
        let b = Ocn::from_transitions("B", &[("q", "b", 0, "q")]).unwrap();
        let g = build_product(&a, &b).unwrap();
        assert_eq!(g.num_nodes(), 1);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn macro_self_product_counts_pairs() {
        let m = fixtures::macro_net();
        let g = build_product(&m, &m).unwrap();
        assert_eq!(g.num_nodes(), 9);
        let brute = m
            .transitions()
            .iter()
            .flat_map(|x| m.transitions().iter().map(move |y| (x, y)))
            .filter(|(x, y)| x.action == y.action)
            .count();
        assert_eq!(g.edges().len(), brute);
    }

    #[test]
    fn replay_loopy() {
        let g = loopy();
        let l2 = Path::new(&g, 0, vec![0, 0]).unwrap();
        assert_eq!(replay(&g, &l2, pair(0, 0, 0, 2)).unwrap(), Some(pair(0, 0, 0, 0)));
        assert_eq!(replay(&g, &l2, pair(0, 0, 0, 1)).unwrap(), None);
        let e = Path::empty(0);
        assert_eq!(replay(&g, &e, pair(0, 3, 0, 1)).unwrap(), Some(pair(0, 3, 0, 1)));
    }

    #[test]
    fn witness_loopy() {
        let g = loopy();
        let l1 = Path::new(&g, 0, vec![0]).unwrap();
        let l2 = Path::new(&g, 0, vec![0, 0]).unwrap();
        assert!(is_witness(&g, &l2, pair(0, 0, 0, 2)).unwrap());
        assert!(!is_witness(&g, &l1, pair(0, 0, 0, 2)).unwrap());
    }

    #[test]
    fn loops_of_loopy_and_two_cycle() {
        let g = loopy();
        let loops = enumerate_loops(&g);
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].effects(), (0, -1));
        assert_eq!(loops[0].slope(), Slope::Finite(Ratio::from_integer(0)));
        assert_eq!(loops[0].kind(), LoopType::Drain);

        let a = Ocn::from_transitions("A", &[("x", "a", 1, "y"), ("y", "b", 0, "x")]).unwrap();
        let b = Ocn::from_transitions("B", &[("u", "a", 0, "u"), ("u", "b", 0, "u")]).unwrap();
        let g = build_product(&a, &b).unwrap();
        let loops = enumerate_loops(&g);
        assert_eq!(loops.len(), 2);
        assert_ne!(loops[0].anchor(), loops[1].anchor());
    }

    #[test]
    fn acyclic_product_has_no_loops() {
        let a = Ocn::from_transitions("A", &[("x", "a", 1, "y")]).unwrap();
        let g = build_product(&a, &a).unwrap();
        assert!(enumerate_loops(&g).is_empty());
    }

    #[test]
    fn slopes_and_types() {
        let one = |n| Slope::Finite(Ratio::from_integer(n));
        assert_eq!((Slope::of(3, 1), LoopType::of(3, 1)), (one(3), LoopType::Up));
        assert_eq!((Slope::of(0, 0), LoopType::of(0, 0)), (one(0), LoopType::Flat));
        assert_eq!((Slope::of(-1, -1), LoopType::of(-1, -1)), (one(1), LoopType::Down));
        assert_eq!(Slope::of(2, 0), Slope::PosInfinity);
        assert_eq!(Slope::of(-2, 0), Slope::NegInfinity);
        assert!(Slope::NegInfinity < one(-100) && one(100) < Slope::PosInfinity);
        assert!(Slope::of(2, 1) > Slope::of(3, 2));
    }

    #[test]
    fn types_partition_the_plane() {
        for a in -3..=3 {
            for b in -3..=3 {
                let t = LoopType::of(a, b);
                let hits = [
                    a > 0 && b >= 0,
                    a <= 0 && b >= 0,
                    a < 0 && b < 0,
                    a >= 0 && b < 0,
                ];
                assert_eq!(hits.iter().filter(|x| **x).count(), 1, "({a},{b})");
                let idx = hits.iter().position(|x| *x).unwrap();
                assert_eq!(t, [LoopType::Up, LoopType::Flat, LoopType::Down, LoopType::Drain][idx]);
            }
        }
    }

    #[test]
    fn ex42_witness_and_decomposition() {
        let (g, path, start) = fixtures::ex42();
        assert_eq!(path.len(), 42);
        assert!(is_witness(&g, &path, start).unwrap());
        let d = decompose(&g, &path);
        assert_eq!(d.exponents(), vec![1, 9, 20]);
        assert_eq!(d.blocks[0].prefix.len(), 0);
        assert_eq!(d.blocks[1].prefix.len(), 0);
        assert_eq!(g.word(&d.blocks[2].prefix), vec!["t5"]);
        assert!(d.suffix.is_empty());
        let effects: Vec<_> = d.blocks.iter().map(|b| b.lp.effects()).collect();
        assert_eq!(effects, vec![(3, 1), (2, 1), (-1, -1)]);
        assert_eq!(d.to_path(), path);
        assert!(is_sane(&g, &path));
    }

    #[test]
    fn decomposition_of_simple_shapes() {
        let g = loopy();
        let l2 = Path::new(&g, 0, vec![0, 0]).unwrap();
        let d = decompose(&g, &l2);
        assert_eq!(d.blocks.len(), 1);
        assert_eq!(d.blocks[0].reps, 2);
        assert!(d.blocks[0].prefix.is_empty() && d.suffix.is_empty());
        let e = Path::empty(0);
        assert!(decompose(&g, &e).blocks.is_empty());
    }

    #[test]
    fn repeated_equal_loops_are_not_sane() {
        let a = Ocn::from_transitions("A", &[("x", "a", 1, "x"), ("x", "b", 0, "y"), ("y", "a", 1, "y")]).unwrap();
        let b = Ocn::from_transitions("B", &[("u", "a", 0, "u"), ("u", "b", 0, "u")]).unwrap();
        let g = build_product(&a, &b).unwrap();
        let p = g.path_from_word(0, &["a", "b", "a"]).unwrap();
        assert!(!is_sane(&g, &p));
        let q = g.path_from_word(0, &["b"]).unwrap();
        assert!(is_sane(&g, &q));
    }

    #[test]
    fn shrink_loopy_and_ex42() {
        let g = loopy();
        let l2 = Path::new(&g, 0, vec![0, 0]).unwrap();
        let p = shrink_to_prefix_witness(&g, &l2, pair(0, 0, 0, 2), 0, 1).unwrap();
        assert_eq!(p.len(), 1);
        let same = shrink_to_prefix_witness(&g, &l2, pair(0, 0, 0, 2), 0, 2).unwrap();
        assert_eq!(same.len(), 2);

        let (g, path, start) = fixtures::ex42();
        let p = shrink_to_prefix_witness(&g, &path, start, 0, 9).unwrap();
        assert!(p.len() < path.len());
        let s2 = (start.0, Process::new(start.1.state, 9));
        assert!(is_witness(&g, &p, s2).unwrap());
    }

    #[test]
    fn summary_power_matches_concatenation() {
        let s = Summary { effect_a: -2, effect_b: 1, guard_a: 3, guard_b: 0 };
        let mut acc = Summary::default();
        for k in 0..6u64 {
            assert_eq!(s.power(k), acc);
            acc = acc.then(s);
        }
    }

    fn summ(effects: &[(i64, i64)]) -> Summary {
        effects.iter().fold(Summary::default(), |acc, &(a, b)| {
            acc.then(Summary { effect_a: a, effect_b: b, guard_a: (-a).max(0), guard_b: (-b).max(0) })
        })
    }

    fn runs(effects: impl Iterator<Item = i64>, start: i64) -> bool {
        effects.scan(start, |c, e| { *c += e; Some(*c) }).all(|c| c >= 0)
    }

    proptest::proptest! {
        #[test]
        fn guards_are_exact(effects in proptest::collection::vec((-1i64..=1, -1i64..=1), 0..12), c in 0i64..14) {
            let s = summ(&effects);
            proptest::prop_assert_eq!(runs(effects.iter().map(|e| e.0), c), c >= s.guard_a);
            proptest::prop_assert_eq!(runs(effects.iter().map(|e| e.1), c), c >= s.guard_b);
            proptest::prop_assert_eq!(s.effect_a, effects.iter().map(|e| e.0).sum::<i64>());
        }

        #[test]
        fn then_is_associative(x in proptest::collection::vec((-1i64..=1, -1i64..=1), 0..6),
                               y in proptest::collection::vec((-1i64..=1, -1i64..=1), 0..6),
                               z in proptest::collection::vec((-1i64..=1, -1i64..=1), 0..6)) {
            let (a, b, c) = (summ(&x), summ(&y), summ(&z));
            proptest::prop_assert_eq!(a.then(b).then(c), a.then(b.then(c)));
        }
    }
}
