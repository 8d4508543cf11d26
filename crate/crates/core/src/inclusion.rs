//! Trace inclusion `T(p m) ⊆ T(q n)` for a deterministic left net and a
//! deterministic, complete right net.
//!
//! Non-inclusion always has a witness that is either short or one of three
//! shapes built from short paths and at most two pumped loops. The search
//! below enumerates the short parts up to a length budget and solves for the
//! loop exponents exactly; every reported witness is confirmed by replay.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;

use crate::error::{Error, Result};
use crate::ineq::{check_weighted_inequality, BinaryNat};
use crate::net::{classify_net, Ocn, Process};
use crate::product::{
    build_product, enumerate_loops, is_witness, Decomposition, EdgeId, Loop, LoopType, NodeId, Path, ProductGraph, Summary,
};

/// Longest witness path that will be materialised.
pub const MAX_WITNESS_LEN: u64 = 10_000_000;
pub const DEFAULT_BUDGET: usize = 8;

/// The polynomial constants bounding the short parts of canonical witnesses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundTable {
    pub v: usize,
    /// `F_0 ..= F_9`.
    pub f: [BigUint; 10],
    pub f3p: BigUint,
    pub f4p: BigUint,
    pub c: BigUint,
}

pub fn bound_table(v: usize) -> BoundTable {
    let n = BigUint::from(v);
    let two = BigUint::from(2u8);
    let f0 = (&two * &n + 1u8).pow(2);
    let f1 = &f0 * (&two * &n + &n * &n);
    let f2 = &f0 * (&n * &n + &f1);
    let f3 = &f2 + &two * &n;
    let f3p = &n * &n + &two * &f2;
    let f4 = &f0 * (&n * &f3 + &f2);
    let f4p = &f0 * (&n * &f3p + &f2);
    let f5 = &f3 + &f3p + &f4 + &f4p;
    let f6 = &f5 + &n * &f5 + &f5;
    let f7 = &two * &f5 + &n * &f6;
    let f8 = &n * &n + &two * &f7;
    let f9 = &f5 + &n * &f6 + &f5 + &n * &f8;
    let c = &f9 * &f0;
    BoundTable { v, f: [f0, f1, f2, f3, f4, f5, f6, f7, f8, f9], f3p, f4p, c }
}

impl BoundTable {
    /// Exponent cap for single-loop shapes: `n + c`.
    pub fn single_loop_cap(&self, n: u64) -> BigUint {
        BigUint::from(n) + &self.c
    }

    /// Caps `(x_1, y_1)` for the two-loop shape:
    /// `3c + |V|(n + 2c)` and `n + 5c + |V|(n + 2c)`.
    pub fn two_loop_caps(&self, n: u64) -> (BigUint, BigUint) {
        let n = BigUint::from(n);
        let v = BigUint::from(self.v);
        let c = &self.c;
        let common = &v * (&n + 2u8 * c);
        (3u8 * c + &common, &n + 5u8 * c + &common)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemplateKind {
    Short,
    Form1,
    Form2,
    Form3,
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TemplateKind::Short => "short",
            TemplateKind::Form1 => "form1",
            TemplateKind::Form2 => "form2",
            TemplateKind::Form3 => "form3",
        })
    }
}

/// Witness shapes:
/// short `π`; form 1 `π0 L0^l π1` with `L0` of type `(≥,<)`;
/// form 2 `π0 L0^x π1 L1^y π2` with `L0 (>,≥)`, `L1 (<,<)`, `S(L0) > S(L1)`;
/// form 3 `π0 L0^l π1` with `L0 (<,<)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessTemplate {
    Short { path: Path },
    Form1 { pi0: Path, l0: Loop, pi1: Path },
    Form2 { pi0: Path, l0: Loop, pi1: Path, l1: Loop, pi2: Path },
    Form3 { pi0: Path, l0: Loop, pi1: Path },
}

impl WitnessTemplate {
    pub fn kind(&self) -> TemplateKind {
        match self {
            WitnessTemplate::Short { .. } => TemplateKind::Short,
            WitnessTemplate::Form1 { .. } => TemplateKind::Form1,
            WitnessTemplate::Form2 { .. } => TemplateKind::Form2,
            WitnessTemplate::Form3 { .. } => TemplateKind::Form3,
        }
    }

    pub fn start(&self) -> NodeId {
        match self {
            WitnessTemplate::Short { path } => path.start(),
            WitnessTemplate::Form1 { pi0, .. } | WitnessTemplate::Form2 { pi0, .. } | WitnessTemplate::Form3 { pi0, .. } => {
                pi0.start()
            }
        }
    }

    /// The connecting paths, whose lengths the budget bounds.
    pub fn short_parts(&self) -> Vec<&Path> {
        match self {
            WitnessTemplate::Short { path } => vec![path],
            WitnessTemplate::Form1 { pi0, pi1, .. } | WitnessTemplate::Form3 { pi0, pi1, .. } => vec![pi0, pi1],
            WitnessTemplate::Form2 { pi0, pi1, pi2, .. } => vec![pi0, pi1, pi2],
        }
    }

    pub fn loops(&self) -> Vec<&Loop> {
        match self {
            WitnessTemplate::Short { .. } => vec![],
            WitnessTemplate::Form1 { l0, .. } | WitnessTemplate::Form3 { l0, .. } => vec![l0],
            WitnessTemplate::Form2 { l0, l1, .. } => vec![l0, l1],
        }
    }

    /// Checks chaining plus the type and slope side conditions.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Input(format!("malformed {} template: {m}", self.kind())));
        let chain = |p: &Path, l: &Loop, q: &Path| p.end() == l.anchor() && q.start() == l.anchor();
        match self {
            WitnessTemplate::Short { .. } => Ok(()),
            WitnessTemplate::Form1 { pi0, l0, pi1 } => {
                if !chain(pi0, l0, pi1) {
                    return bad("parts do not chain");
                }
                if l0.kind() != LoopType::Drain {
                    return bad("loop must have type (≥,<)");
                }
                Ok(())
            }
            WitnessTemplate::Form3 { pi0, l0, pi1 } => {
                if !chain(pi0, l0, pi1) {
                    return bad("parts do not chain");
                }
                if l0.kind() != LoopType::Down {
                    return bad("loop must have type (<,<)");
                }
                Ok(())
            }
            WitnessTemplate::Form2 { pi0, l0, pi1, l1, pi2 } => {
                if !chain(pi0, l0, pi1) || !chain(pi1, l1, pi2) {
                    return bad("parts do not chain");
                }
                if l0.kind() != LoopType::Up || l1.kind() != LoopType::Down {
                    return bad("loops must have types (>,≥) and (<,<)");
                }
                if l0.slope() <= l1.slope() {
                    return bad("first slope must exceed the second");
                }
                Ok(())
            }
        }
    }

    pub fn describe(&self, g: &ProductGraph) -> String {
        let p = |x: &Path| x.display(g);
        let l = |x: &Loop| format!("[{}]", x.path().display(g));
        match self {
            WitnessTemplate::Short { path } => format!("short {{ {} }}", p(path)),
            WitnessTemplate::Form1 { pi0, l0, pi1 } => format!("form1 {{ {} ; {}^l ; {} }}", p(pi0), l(l0), p(pi1)),
            WitnessTemplate::Form3 { pi0, l0, pi1 } => format!("form3 {{ {} ; {}^l ; {} }}", p(pi0), l(l0), p(pi1)),
            WitnessTemplate::Form2 { pi0, l0, pi1, l1, pi2 } => format!(
                "form2 {{ {} ; {}^x ; {} ; {}^y ; {} }}",
                p(pi0),
                l(l0),
                p(pi1),
                l(l1),
                p(pi2)
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    pub path: Path,
    pub exponents: Vec<u64>,
}

fn start_pair(g: &ProductGraph, node: NodeId, m: u64, n: u64) -> (Process, Process) {
    let (sa, sb) = g.split(node);
    (Process::new(sa, m), Process::new(sb, n))
}

/// Smallest left counter that lets some edge from `v` be blocked on the right
/// at counter 0, if any.
fn final_need(g: &ProductGraph, v: NodeId) -> Option<i64> {
    g.out_edges(v)
        .iter()
        .map(|&e| g.edge(e))
        .filter(|e| e.effect_b == -1)
        .map(|e| (-(e.effect_a as i64)).max(0))
        .min()
}

/// Whether the concatenation with summary `s` from `(m, n)` ends in a witness at `end`.
fn summary_witness(g: &ProductGraph, s: Summary, end: NodeId, m: u64, n: u64) -> bool {
    let (m, n) = (m as i64, n as i64);
    s.guard_a <= m
        && s.guard_b <= n
        && n + s.effect_b == 0
        && final_need(g, end).is_some_and(|need| m + s.effect_a >= need)
}

fn materialize(parts: &[(&Path, u64)]) -> Result<Path> {
    let total: u64 = parts.iter().map(|(p, k)| p.len() as u64 * k).sum();
    if total > MAX_WITNESS_LEN {
        return Err(Error::Overflow(format!("witness of length {total} exceeds {MAX_WITNESS_LEN}")));
    }
    let mut out = Path::empty(parts[0].0.start());
    for (p, k) in parts {
        out = out.concat(&p.repeat(*k)?)?;
    }
    Ok(out)
}

/// Searches exponents completing `tmpl` into a witness for `(m, n)` at the
/// template's start node. Returned paths have been replayed.
pub fn realize_template(g: &ProductGraph, tmpl: &WitnessTemplate, m: u64, n: u64) -> Result<Option<Realization>> {
    tmpl.validate()?;
    let start = start_pair(g, tmpl.start(), m, n);
    let out = match tmpl {
        WitnessTemplate::Short { path } => Some(Realization { path: path.clone(), exponents: vec![] }),
        WitnessTemplate::Form1 { pi0, l0, pi1 } | WitnessTemplate::Form3 { pi0, l0, pi1 } => {
            realize_single(g, tmpl.kind(), pi0, l0, pi1, m, n)?
        }
        WitnessTemplate::Form2 { pi0, l0, pi1, l1, pi2 } => realize_double(g, pi0, l0, pi1, l1, pi2, m, n)?,
    };
    match out {
        Some(r) if is_witness(g, &r.path, start)? => Ok(Some(r)),
        _ => Ok(None),
    }
}

/// Forms 1 and 3: the right counter must hit 0 exactly after `π1`, which fixes `l`.
fn realize_single(
    g: &ProductGraph,
    kind: TemplateKind,
    pi0: &Path,
    l0: &Loop,
    pi1: &Path,
    m: u64,
    n: u64,
) -> Result<Option<Realization>> {
    let d = -l0.effects().1;
    let num = n as i64 + pi0.effect_b() + pi1.effect_b();
    if num <= 0 || num % d != 0 {
        return Ok(None);
    }
    let l = (num / d) as u64;
    if kind == TemplateKind::Form3 && !form3_left_inequality(g, pi0, l0, pi1, m, n) {
        return Ok(None);
    }
    let s = pi0.summary().then(l0.path().summary().power(l)).then(pi1.summary());
    if !summary_witness(g, s, pi1.end(), m, n) {
        return Ok(None);
    }
    let path = materialize(&[(pi0, 1), (l0.path(), l), (pi1, 1)])?;
    Ok(Some(Realization { path, exponents: vec![l] }))
}

/// The left counter after eliminating `l`, as `m·A + B ≥ n·C + D`:
/// `d·m + d·(eA(π0) + eA(π1)) + |a|·(eB(π0) + eB(π1)) ≥ |a|·n·... `, with
/// `d = -eB(L0)` and `a = eA(L0) < 0`, compared against the cheapest final step.
fn form3_left_inequality(g: &ProductGraph, pi0: &Path, l0: &Loop, pi1: &Path, m: u64, n: u64) -> bool {
    let Some(need) = final_need(g, pi1.end()) else { return false };
    let (a, b) = l0.effects();
    let (d, abs_a) = ((-b) as i128, (-a) as i128);
    // d·(m + eA(π0) + eA(π1) - need) ≥ |a|·(n + eB(π0) + eB(π1))
    let k = d * (pi0.effect_a() + pi1.effect_a() - need) as i128 - abs_a * (pi0.effect_b() + pi1.effect_b()) as i128;
    let (plus, minus) = if k >= 0 { (k as u128, 0) } else { (0, (-k) as u128) };
    check_weighted_inequality(
        &BinaryNat::from(m),
        &BinaryNat::from(d as u128),
        &BinaryNat::from(plus),
        &BinaryNat::from(n),
        &BinaryNat::from(abs_a as u128),
        &BinaryNat::from(minus),
    )
}

/// Form 2: along the progression of `x` keeping `y` integral every condition is
/// monotone, so the least feasible `x` is found by doubling then bisection.
#[allow(clippy::too_many_arguments)]
fn realize_double(
    g: &ProductGraph,
    pi0: &Path,
    l0: &Loop,
    pi1: &Path,
    l1: &Loop,
    pi2: &Path,
    m: u64,
    n: u64,
) -> Result<Option<Realization>> {
    let (b0, d1) = (l0.effects().1, -l1.effects().1);
    let k0 = n as i64 + pi0.effect_b() + pi1.effect_b() + pi2.effect_b();
    let Some(x0) = (1..=d1).find(|x| (k0 + x * b0).rem_euclid(d1) == 0) else {
        return Ok(None);
    };
    let step = if b0 == 0 { 1 } else { d1 / b0.gcd(&d1) };
    let exps = |k: i64| {
        let x = x0 + k * step;
        (x, (k0 + x * b0) / d1)
    };
    let feasible = |k: i64| {
        let (x, y) = exps(k);
        if y < 1 {
            return false;
        }
        let s = pi0
            .summary()
            .then(l0.path().summary().power(x as u64))
            .then(pi1.summary())
            .then(l1.path().summary().power(y as u64))
            .then(pi2.summary());
        summary_witness(g, s, pi2.end(), m, n)
    };
    const LIMIT: i64 = 1 << 40;
    let mut hi = 0;
    while !feasible(hi) {
        if hi >= LIMIT {
            return Ok(None);
        }
        hi = if hi == 0 { 1 } else { hi * 2 };
    }
    let mut lo = if hi == 0 { -1 } else { hi / 2 };
    // invariant: feasible(hi), !feasible(lo) or lo = -1
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (x, y) = exps(hi);
    let path = materialize(&[(pi0, 1), (l0.path(), x as u64), (pi1, 1), (l1.path(), y as u64), (pi2, 1)])?;
    Ok(Some(Realization { path, exponents: vec![x as u64, y as u64] }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InclusionVerdict {
    Included { certified: bool },
    NotIncluded { witness: Path, template: WitnessTemplate, exponents: Vec<u64> },
    BudgetExhausted { budget: usize },
}

impl InclusionVerdict {
    pub fn is_not_included(&self) -> bool {
        matches!(self, InclusionVerdict::NotIncluded { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InclusionOptions {
    /// Length bound for every short part of a template.
    pub budget: usize,
    /// Report `BudgetExhausted` instead of an uncertified `Included`.
    pub strict: bool,
}

impl Default for InclusionOptions {
    fn default() -> Self {
        InclusionOptions { budget: DEFAULT_BUDGET, strict: false }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub prefixes: usize,
    pub loops: usize,
    pub connectors: usize,
    pub candidates: usize,
}

#[derive(Debug, Clone)]
pub struct InclusionReport {
    pub graph: ProductGraph,
    pub verdict: InclusionVerdict,
    pub stats: SearchStats,
}

/// Decides `T(pm) ⊆ T(qn)` with the default options.
pub fn decide_inclusion(a: &Ocn, b: &Ocn, pm: Process, qn: Process, budget: usize) -> Result<InclusionVerdict> {
    Ok(decide_inclusion_with(a, b, pm, qn, InclusionOptions { budget, strict: false })?.verdict)
}

pub fn decide_inclusion_with(a: &Ocn, b: &Ocn, pm: Process, qn: Process, opts: InclusionOptions) -> Result<InclusionReport> {
    check_normal_pair(a, b)?;
    if pm.state >= a.num_states() || qn.state >= b.num_states() {
        return Err(Error::Input("process state out of range".into()));
    }
    let g = build_product(a, b)?;
    let (verdict, stats) = Search::new(&g, pm, qn, opts.budget).run()?;
    let verdict = match verdict {
        Some(v) => v,
        None if BigUint::from(opts.budget) >= bound_table(g.num_nodes()).c => InclusionVerdict::Included { certified: true },
        None if opts.strict => InclusionVerdict::BudgetExhausted { budget: opts.budget },
        None => InclusionVerdict::Included { certified: false },
    };
    Ok(InclusionReport { graph: g, verdict, stats })
}

/// Left deterministic, right deterministic and complete, equal alphabets.
pub fn check_normal_pair(a: &Ocn, b: &Ocn) -> Result<()> {
    let (ca, cb) = (classify_net(a), classify_net(b));
    if !ca.deterministic {
        return Err(Error::Input("left net must be deterministic".into()));
    }
    if !cb.deterministic || !cb.complete {
        return Err(Error::Input("right net must be deterministic and complete".into()));
    }
    let mut x: Vec<_> = a.alphabet().to_vec();
    let mut y: Vec<_> = b.alphabet().to_vec();
    x.sort();
    y.sort();
    if x != y {
        return Err(Error::Input("nets must share one alphabet".into()));
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct Prefix {
    a: u64,
    edges: Vec<EdgeId>,
}

#[derive(Debug, Clone, Copy)]
enum TailStep {
    Keep,
    Stop,
    Edge(EdgeId),
}

struct Search<'g> {
    g: &'g ProductGraph,
    start: NodeId,
    m: u64,
    n: u64,
    budget: usize,
    stats: SearchStats,
}

impl<'g> Search<'g> {
    fn new(g: &'g ProductGraph, pm: Process, qn: Process, budget: usize) -> Self {
        Search { g, start: g.node(pm.state, qn.state), m: pm.counter, n: qn.counter, budget, stats: SearchStats::default() }
    }

    fn path(&self, start: NodeId, edges: &[EdgeId]) -> Path {
        Path::new(self.g, start, edges.to_vec()).expect("search paths chain")
    }

    /// Configurations reachable within the budget, keeping the largest left
    /// counter for every `(node, right counter)`.
    fn prefixes(&self) -> BTreeMap<(NodeId, u64), Prefix> {
        let g = self.g;
        let mut best: BTreeMap<(NodeId, u64), Prefix> = BTreeMap::new();
        best.insert((self.start, self.n), Prefix { a: self.m, edges: vec![] });
        let mut frontier = vec![(self.start, self.n)];
        for _ in 0..self.budget {
            let mut next = Vec::new();
            for key in frontier {
                let cur = best[&key].clone();
                for &e in g.out_edges(key.0) {
                    let edge = g.edge(e);
                    let (Some(a), Some(b)) = (
                        cur.a.checked_add_signed(edge.effect_a as i64),
                        key.1.checked_add_signed(edge.effect_b as i64),
                    ) else {
                        continue;
                    };
                    let k = (edge.dst, b);
                    if best.get(&k).map_or(true, |p| p.a < a) {
                        let mut edges = cur.edges.clone();
                        edges.push(e);
                        best.insert(k, Prefix { a, edges });
                        next.push(k);
                    }
                }
            }
            next.sort_unstable();
            next.dedup();
            frontier = next;
        }
        best
    }

    /// `need[v][b]`: least left counter at `(v, b)` from which at most
    /// `budget` edges lead to a distinguishing configuration.
    fn tails(&self) -> (Vec<Vec<Option<i64>>>, Vec<Vec<Vec<(TailStep, Option<i64>)>>>) {
        let g = self.g;
        let nb = self.budget + 1;
        let v = g.num_nodes();
        let mut layers: Vec<Vec<Vec<(TailStep, Option<i64>)>>> = Vec::with_capacity(nb);
        let zero: Vec<Vec<(TailStep, Option<i64>)>> = (0..v)
            .map(|x| (0..nb).map(|b| (TailStep::Stop, if b == 0 { final_need(g, x) } else { None })).collect())
            .collect();
        layers.push(zero);
        for k in 1..nb {
            let prev = &layers[k - 1];
            let mut cur = prev.clone();
            for (x, row) in cur.iter_mut().enumerate() {
                for (b, cell) in row.iter_mut().enumerate() {
                    *cell = (TailStep::Keep, prev[x][b].1);
                    for &e in g.out_edges(x) {
                        let edge = g.edge(e);
                        let b2 = b as i64 + edge.effect_b as i64;
                        if b2 < 0 || b2 as usize >= nb {
                            continue;
                        }
                        let Some(r) = prev[edge.dst][b2 as usize].1 else { continue };
                        let ea = edge.effect_a as i64;
                        let need = (-ea).max(0).max(r - ea);
                        if cell.1.map_or(true, |c| need < c) {
                            *cell = (TailStep::Edge(e), Some(need));
                        }
                    }
                }
            }
            layers.push(cur);
        }
        let need = layers[nb - 1].iter().map(|row| row.iter().map(|c| c.1).collect()).collect();
        (need, layers)
    }

    fn tail_path(&self, layers: &[Vec<Vec<(TailStep, Option<i64>)>>], v: NodeId, b: usize) -> Path {
        let mut edges = Vec::new();
        let (mut k, mut x, mut y) = (layers.len() - 1, v, b);
        loop {
            match layers[k][x][y].0 {
                TailStep::Stop => break,
                TailStep::Keep => k -= 1,
                TailStep::Edge(e) => {
                    let edge = self.g.edge(e);
                    edges.push(e);
                    y = (y as i64 + edge.effect_b as i64) as usize;
                    x = edge.dst;
                    k -= 1;
                }
            }
        }
        self.path(v, &edges)
    }

    /// Right-side summaries `(end, effect, guard)` of paths from `u` within the budget.
    fn connectors(&self, u: NodeId) -> Vec<((NodeId, i64, i64), Path)> {
        let g = self.g;
        let mut seen: BTreeMap<(NodeId, i64, i64), Vec<EdgeId>> = BTreeMap::new();
        seen.insert((u, 0, 0), vec![]);
        let mut frontier = vec![(u, 0i64, 0i64)];
        for _ in 0..self.budget {
            let mut next = Vec::new();
            for key in frontier {
                let edges = seen[&key].clone();
                for &e in g.out_edges(key.0) {
                    let edge = g.edge(e);
                    let eff = key.1 + edge.effect_b as i64;
                    let k = (edge.dst, eff, key.2.max(-eff));
                    if !seen.contains_key(&k) {
                        let mut p = edges.clone();
                        p.push(e);
                        seen.insert(k, p);
                        next.push(k);
                    }
                }
            }
            frontier = next;
        }
        seen.into_iter().map(|(k, e)| (k, self.path(u, &e))).collect()
    }

    fn confirm(&mut self, tmpl: WitnessTemplate) -> Result<InclusionVerdict> {
        self.stats.candidates += 1;
        match realize_template(self.g, &tmpl, self.m, self.n)? {
            Some(r) => Ok(InclusionVerdict::NotIncluded { witness: r.path, template: tmpl, exponents: r.exponents }),
            None => Err(Error::Internal(format!("{} template did not realize", tmpl.kind()))),
        }
    }

    fn run(mut self) -> Result<(Option<InclusionVerdict>, SearchStats)> {
        let g = self.g;
        let prefixes = self.prefixes();
        self.stats.prefixes = prefixes.len();

        for (&(v, b), p) in &prefixes {
            if b == 0 && final_need(g, v).is_some_and(|need| p.a as i64 >= need) {
                let path = self.path(self.start, &p.edges);
                return Ok((Some(self.confirm(WitnessTemplate::Short { path })?), self.stats));
            }
        }

        let loops = enumerate_loops(g);
        self.stats.loops = loops.len();
        let mut at: HashMap<NodeId, Vec<&Loop>> = HashMap::new();
        for l in &loops {
            at.entry(l.anchor()).or_default().push(l);
        }
        let (need, layers) = self.tails();
        let budget = self.budget as i64;

        for kind in [LoopType::Drain, LoopType::Down] {
            for (&(u, b), p) in &prefixes {
                for l in at.get(&u).into_iter().flatten().filter(|l| l.kind() == kind) {
                    let (ea, eb) = l.effects();
                    let d = -eb;
                    let b = b as i64;
                    let y_lo = ((b - budget).max(0) + d - 1) / d;
                    for y in y_lo.max(1)..=b / d {
                        let b2 = (b - y * d) as usize;
                        let s = l.path().summary().power(y as u64);
                        let Some(r) = need[u][b2] else { continue };
                        if s.guard_b <= b && s.guard_a <= p.a as i64 && p.a as i64 + y * ea >= r {
                            let pi0 = self.path(self.start, &p.edges);
                            let pi1 = self.tail_path(&layers, u, b2);
                            let tmpl = if kind == LoopType::Drain {
                                WitnessTemplate::Form1 { pi0, l0: (*l).clone(), pi1 }
                            } else {
                                WitnessTemplate::Form3 { pi0, l0: (*l).clone(), pi1 }
                            };
                            return Ok((Some(self.confirm(tmpl)?), self.stats));
                        }
                    }
                }
            }
        }

        // (L1, b2) pairs usable at the end of the two-loop shape
        let mut finishers: HashMap<NodeId, Vec<(&Loop, usize)>> = HashMap::new();
        for l in loops.iter().filter(|l| l.kind() == LoopType::Down) {
            let d1 = -l.effects().1;
            for b2 in 0..=self.budget {
                if need[l.anchor()][b2].is_some() && l.path().guard_b() <= b2 as i64 + d1 {
                    finishers.entry(l.anchor()).or_default().push((l, b2));
                }
            }
        }
        let mut connectors: HashMap<NodeId, Vec<((NodeId, i64, i64), Path)>> = HashMap::new();
        for (&(u, b), p) in &prefixes {
            for l0 in at.get(&u).into_iter().flatten().filter(|l| l.kind() == LoopType::Up) {
                if l0.path().guard_a() > p.a as i64 || l0.path().guard_b() > b as i64 {
                    continue;
                }
                let b0 = l0.effects().1;
                if !connectors.contains_key(&u) {
                    let c = self.connectors(u);
                    self.stats.connectors += c.len();
                    connectors.insert(u, c);
                }
                for ((w, e1, g1), pi1) in &connectors[&u] {
                    for &(l1, b2) in finishers.get(w).into_iter().flatten() {
                        if l1.slope() >= l0.slope() {
                            continue;
                        }
                        let d1 = -l1.effects().1;
                        let r = b as i64 + e1 - b2 as i64;
                        let ok = if b0 == 0 {
                            *g1 <= b as i64 && r >= d1 && r % d1 == 0
                        } else {
                            r.rem_euclid(b0.gcd(&d1)) == 0
                        };
                        if ok {
                            let tmpl = WitnessTemplate::Form2 {
                                pi0: self.path(self.start, &p.edges),
                                l0: (*l0).clone(),
                                pi1: pi1.clone(),
                                l1: l1.clone(),
                                pi2: self.tail_path(&layers, *w, b2),
                            };
                            return Ok((Some(self.confirm(tmpl)?), self.stats));
                        }
                    }
                }
            }
        }
        Ok((None, self.stats))
    }
}

/// Reads a decomposed witness as one of the canonical shapes; anything else is short.
pub fn match_template(d: &Decomposition) -> (WitnessTemplate, Vec<u64>) {
    let b = &d.blocks;
    match b.len() {
        1 if matches!(b[0].lp.kind(), LoopType::Drain | LoopType::Down) => {
            let (pi0, l0, pi1) = (b[0].prefix.clone(), b[0].lp.clone(), d.suffix.clone());
            let t = if l0.kind() == LoopType::Drain {
                WitnessTemplate::Form1 { pi0, l0, pi1 }
            } else {
                WitnessTemplate::Form3 { pi0, l0, pi1 }
            };
            (t, vec![b[0].reps])
        }
        2 if b[0].lp.kind() == LoopType::Up && b[1].lp.kind() == LoopType::Down && b[0].lp.slope() > b[1].lp.slope() => (
            WitnessTemplate::Form2 {
                pi0: b[0].prefix.clone(),
                l0: b[0].lp.clone(),
                pi1: b[1].prefix.clone(),
                l1: b[1].lp.clone(),
                pi2: d.suffix.clone(),
            },
            vec![b[0].reps, b[1].reps],
        ),
        _ => (WitnessTemplate::Short { path: d.to_path() }, vec![]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::product::decompose;

    fn naive_c(v: u128) -> u128 {
        let f0 = (2 * v + 1).pow(2);
        let f1 = f0 * (2 * v + v * v);
        let f2 = f0 * (v * v + f1);
        let f3 = f2 + 2 * v;
        let f3p = v * v + 2 * f2;
        let f4 = f0 * (v * f3 + f2);
        let f4p = f0 * (v * f3p + f2);
        let f5 = f3 + f3p + f4 + f4p;
        let f6 = f5 + v * f5 + f5;
        let f7 = 2 * f5 + v * f6;
        let f8 = v * v + 2 * f7;
        let f9 = f5 + v * f6 + f5 + v * f8;
        f9 * f0
    }

    #[test]
    fn bound_table_small() {
        let t = bound_table(1);
        assert_eq!(t.f[0], BigUint::from(9u8));
        assert_eq!(t.f[1], BigUint::from(27u8));
        assert_eq!(bound_table(2).f[0], BigUint::from(25u8));
        for v in 1..=10 {
            assert_eq!(bound_table(v as usize).c, BigUint::from(naive_c(v)));
        }
    }

    fn loopy_graph() -> ProductGraph {
        let (a, b) = fixtures::loopy();
        build_product(&a, &b).unwrap()
    }

    fn dd_graph() -> ProductGraph {
        let (a, b) = fixtures::dd();
        build_product(&a, &b).unwrap()
    }

    #[test]
    fn loopy_form1() {
        let g = loopy_graph();
        let l = enumerate_loops(&g).remove(0);
        let t = WitnessTemplate::Form1 { pi0: Path::empty(0), l0: l, pi1: Path::empty(0) };
        let r = realize_template(&g, &t, 0, 2).unwrap().unwrap();
        assert_eq!(r.exponents, vec![2]);
        assert_eq!(r.path.len(), 2);
    }

    #[test]
    fn dd_form3() {
        let g = dd_graph();
        let l = enumerate_loops(&g).remove(0);
        let t = WitnessTemplate::Form3 { pi0: Path::empty(0), l0: l, pi1: Path::empty(0) };
        let r = realize_template(&g, &t, 3, 2).unwrap().unwrap();
        assert_eq!(r.exponents, vec![2]);
        assert!(realize_template(&g, &t, 2, 2).unwrap().is_none());
    }

    #[test]
    fn malformed_template_rejected() {
        let g = dd_graph();
        let l = enumerate_loops(&g).remove(0);
        let t = WitnessTemplate::Form1 { pi0: Path::empty(0), l0: l, pi1: Path::empty(0) };
        assert!(matches!(realize_template(&g, &t, 3, 2), Err(Error::Input(_))));
    }

    #[test]
    fn decide_loopy() {
        let (a, b) = fixtures::loopy();
        let v = decide_inclusion(&a, &b, Process::new(0, 0), Process::new(0, 2), 4).unwrap();
        let InclusionVerdict::NotIncluded { witness, .. } = v else { panic!("{v:?}") };
        assert_eq!(witness.len(), 2);
    }

    #[test]
    fn decide_loopy_beyond_budget_uses_form1() {
        let (a, b) = fixtures::loopy();
        let v = decide_inclusion(&a, &b, Process::new(0, 0), Process::new(0, 20), 2).unwrap();
        let InclusionVerdict::NotIncluded { witness, template, .. } = v else { panic!("{v:?}") };
        assert_eq!(witness.len(), 20);
        assert_eq!(template.kind(), TemplateKind::Form1);
    }

    #[test]
    fn decide_dd() {
        let (a, b) = fixtures::dd();
        let v = decide_inclusion(&a, &b, Process::new(0, 3), Process::new(0, 2), 8).unwrap();
        assert!(v.is_not_included());
        let v = decide_inclusion(&a, &b, Process::new(0, 30), Process::new(0, 20), 2).unwrap();
        let InclusionVerdict::NotIncluded { template, .. } = v else { panic!() };
        assert_eq!(template.kind(), TemplateKind::Form3);
        let v = decide_inclusion(&a, &b, Process::new(0, 2), Process::new(0, 2), 8).unwrap();
        assert_eq!(v, InclusionVerdict::Included { certified: false });
    }

    #[test]
    fn identical_nets_are_included() {
        let (_, b) = fixtures::dd();
        let v = decide_inclusion(&b, &b, Process::new(0, 1), Process::new(0, 1), 8).unwrap();
        assert_eq!(v, InclusionVerdict::Included { certified: false });
        let strict = InclusionOptions { budget: 8, strict: true };
        let r = decide_inclusion_with(&b, &b, Process::new(0, 1), Process::new(0, 1), strict).unwrap();
        assert_eq!(r.verdict, InclusionVerdict::BudgetExhausted { budget: 8 });
    }

    #[test]
    fn ex42_found() {
        let (a, b) = fixtures::ex42_nets();
        let p = a.state_id("p").unwrap();
        let q = b.state_id("p'").unwrap();
        let v = decide_inclusion(&a, &b, Process::new(p, 0), Process::new(q, 10), 8).unwrap();
        assert!(v.is_not_included());
    }

    #[test]
    fn form2_pumps_left_before_draining() {
        // up loop (2,1) then down loop (-1,-1); the right counter is only drained by `b`
        let a = Ocn::from_transitions("A", &[("x", "a", 1, "x1"), ("x1", "a", 1, "x"), ("x", "b", 0, "y"), ("y", "b", -1, "y"), ("x1", "b", 0, "y"), ("y", "a", -1, "y")]).unwrap();
        let b0 = Ocn::from_transitions("B", &[("u", "a", 1, "u1"), ("u1", "a", 0, "u"), ("u", "b", 0, "w"), ("u1", "b", 0, "w"), ("w", "b", -1, "w"), ("w", "a", -1, "w")]).unwrap();
        let x = a.state_id("x").unwrap();
        let u = b0.state_id("u").unwrap();
        let report = decide_inclusion_with(&a, &b0, Process::new(x, 0), Process::new(u, 30), InclusionOptions { budget: 3, strict: false }).unwrap();
        let InclusionVerdict::NotIncluded { template, witness, exponents } = report.verdict else { panic!("{:?}", report.verdict) };
        assert_eq!(template.kind(), TemplateKind::Form2, "{}", template.describe(&report.graph));
        assert_eq!(exponents[0], 31);
        assert_eq!(witness.len(), 124);
        assert!(is_witness(&report.graph, &witness, (Process::new(x, 0), Process::new(u, 30))).unwrap());
    }

    #[test]
    fn match_template_shapes() {
        let (g, path, _) = fixtures::ex42();
        let (t, _) = match_template(&decompose(&g, &path));
        assert_eq!(t.kind(), TemplateKind::Short);
        let g = loopy_graph();
        let p = Path::new(&g, 0, vec![0, 0]).unwrap();
        let (t, e) = match_template(&decompose(&g, &p));
        assert_eq!((t.kind(), e), (TemplateKind::Form1, vec![2]));
    }

    #[test]
    fn rejects_non_normal_pairs() {
        let a = Ocn::from_transitions("A", &[("p", "a", 0, "p"), ("p", "a", 1, "p")]).unwrap();
        let (_, b) = fixtures::loopy();
        assert!(decide_inclusion(&a, &b, Process::new(0, 0), Process::new(0, 0), 4).is_err());
    }
}
