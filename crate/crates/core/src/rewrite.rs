//! Exponent-rewriting rules on sane paths, the loop precedence used to rank
//! them, normalisation to reduced paths and the reduced-path bounds.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::net::Process;
use crate::product::{decompose, decomposition_is_sane, is_witness, Decomposition, LoopType, Path, ProductGraph};

/// Applications allowed in [`normalize`] before giving up.
pub const NORMALIZE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleName {
    Uul,
    Uur,
    Ud,
    Ddl,
    Ddr,
}

impl RuleName {
    pub const ALL: [RuleName; 5] = [RuleName::Uul, RuleName::Uur, RuleName::Ud, RuleName::Ddl, RuleName::Ddr];

    fn types(self) -> (LoopType, LoopType) {
        match self {
            RuleName::Uul | RuleName::Uur => (LoopType::Up, LoopType::Up),
            RuleName::Ud => (LoopType::Up, LoopType::Down),
            RuleName::Ddl | RuleName::Ddr => (LoopType::Down, LoopType::Down),
        }
    }

    /// UD balances the right effects with opposite signs.
    fn opposite(self) -> bool {
        self == RuleName::Ud
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleName::Uul => "UUL",
            RuleName::Uur => "UUR",
            RuleName::Ud => "UD",
            RuleName::Ddl => "DDL",
            RuleName::Ddr => "DDR",
        })
    }
}

impl FromStr for RuleName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RuleName::ALL
            .into_iter()
            .find(|r| r.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Input(format!("unknown rule `{s}`")))
    }
}

/// A rule applied to blocks `i < j` of a decomposition with multipliers `x, y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RuleInstance {
    pub rule: RuleName,
    pub i: usize,
    pub j: usize,
    pub x: u64,
    pub y: u64,
}

impl fmt::Display for RuleInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(L{}, L{}, x={}, y={})", self.rule, self.i, self.j, self.x, self.y)
    }
}

/// Least positive `(x, y)` with `b0·x = b1·y` (or `b0·x = -b1·y` if `opposite`).
pub fn minimal_multipliers(b0: i64, b1: i64, opposite: bool) -> Option<(u64, u64)> {
    let b1 = if opposite { -b1 } else { b1 };
    match (b0, b1) {
        (0, 0) => Some((1, 1)),
        (0, _) | (_, 0) => None,
        _ if (b0 > 0) != (b1 > 0) => None,
        _ => {
            let g = b0.gcd(&b1);
            Some(((b1 / g).unsigned_abs(), (b0 / g).unsigned_abs()))
        }
    }
}

/// Checks every condition of `inst` against `d`.
pub fn check_instance(d: &Decomposition, inst: &RuleInstance) -> Result<()> {
    let fail = |why: &str| Err(Error::Logic(format!("{inst}: {why}")));
    let RuleInstance { rule, i, j, x, y } = *inst;
    if i >= j || j >= d.blocks.len() {
        return fail("needs two loop blocks i < j");
    }
    if x == 0 || y == 0 {
        return fail("multipliers must be positive");
    }
    let (b0, b1) = (&d.blocks[i], &d.blocks[j]);
    if b0.lp == b1.lp {
        return fail("the two loops must differ");
    }
    let (t0, t1) = rule.types();
    if b0.lp.kind() != t0 || b1.lp.kind() != t1 {
        return fail("loop types do not match");
    }
    let (d0, d1) = (b0.lp.effects().1 as i128, b1.lp.effects().1 as i128);
    let rhs = if rule.opposite() { -d1 * y as i128 } else { d1 * y as i128 };
    if d0 * x as i128 != rhs {
        return fail("right effects are not balanced");
    }
    let (s0, s1) = (b0.lp.slope(), b1.lp.slope());
    let (l0, l1) = (b0.reps as i128, b1.reps as i128);
    let (x, y) = (x as i128, y as i128);
    let pi1 = d.between(i, j).len() as i128;
    let ok = match rule {
        RuleName::Uul => s0 >= s1 && l1 - y > 0,
        RuleName::Uur => s0 < s1 && l0 - x > pi1 + b1.lp.len() as i128,
        RuleName::Ud => s0 <= s1 && l0 - x >= pi1 && l1 - y > 0 && l0 - x > 0,
        RuleName::Ddl => s0 < s1 && l1 > b0.lp.len() as i128 * x + 2 * pi1 && l1 - y > 0,
        RuleName::Ddr => s0 >= s1 && l0 - x > 0,
    };
    if ok {
        Ok(())
    } else {
        fail("slope or exponent conditions fail")
    }
}

/// All instances with minimal multipliers, ordered by `(i, j)` then rule priority.
pub fn instances_of(d: &Decomposition) -> Vec<RuleInstance> {
    let mut out = Vec::new();
    for i in 0..d.blocks.len() {
        for j in i + 1..d.blocks.len() {
            for rule in RuleName::ALL {
                let (e0, e1) = (d.blocks[i].lp.effects().1, d.blocks[j].lp.effects().1);
                let Some((x, y)) = minimal_multipliers(e0, e1, rule.opposite()) else { continue };
                let inst = RuleInstance { rule, i, j, x, y };
                if check_instance(d, &inst).is_ok() {
                    out.push(inst);
                }
            }
        }
    }
    out
}

fn sane_decomposition(g: &ProductGraph, path: &Path) -> Result<Decomposition> {
    let d = decompose(g, path);
    if !decomposition_is_sane(g, &d) {
        return Err(Error::Input("path is not sane".into()));
    }
    Ok(d)
}

pub fn applicable_instances(g: &ProductGraph, path: &Path) -> Result<Vec<RuleInstance>> {
    Ok(instances_of(&sane_decomposition(g, path)?))
}

/// Exponents after applying `inst` (conditions are checked).
pub fn apply_to_decomposition(d: &Decomposition, inst: &RuleInstance) -> Result<Decomposition> {
    check_instance(d, inst)?;
    let mut e = d.exponents();
    let (i, j, x, y) = (inst.i, inst.j, inst.x, inst.y);
    match inst.rule {
        RuleName::Uul | RuleName::Ddl => {
            e[i] += x;
            e[j] -= y;
        }
        RuleName::Uur | RuleName::Ddr => {
            e[i] -= x;
            e[j] += y;
        }
        RuleName::Ud => {
            e[i] -= x;
            e[j] -= y;
        }
    }
    Ok(d.with_exponents(&e))
}

pub fn apply_rule(g: &ProductGraph, path: &Path, inst: &RuleInstance) -> Result<Path> {
    let d = sane_decomposition(g, path)?;
    Ok(apply_to_decomposition(&d, inst)?.to_path())
}

/// Blocks listed from the `≺`-greatest to the `≺`-least.
///
/// `(>,≥)` loops rank by descending slope, earlier first on ties; `(<,<)`
/// loops by ascending slope, later first on ties. Other loops sit in
/// separate groups ordered by position.
pub fn precedence(d: &Decomposition) -> Vec<usize> {
    let group = |t: LoopType| match t {
        LoopType::Up => 0,
        LoopType::Down => 1,
        LoopType::Flat => 2,
        LoopType::Drain => 3,
    };
    let less = |i: usize, j: usize| -> Ordering {
        let (a, b) = (&d.blocks[i].lp, &d.blocks[j].lp);
        group(a.kind()).cmp(&group(b.kind())).then_with(|| match a.kind() {
            LoopType::Up => b.slope().cmp(&a.slope()).then(i.cmp(&j)),
            LoopType::Down => a.slope().cmp(&b.slope()).then(j.cmp(&i)),
            _ => i.cmp(&j),
        })
    };
    let mut idx: Vec<usize> = (0..d.blocks.len()).collect();
    idx.sort_by(|&i, &j| less(j, i));
    idx
}

/// Exponents ordered by [`precedence`].
pub fn weight(d: &Decomposition) -> Vec<u64> {
    precedence(d).into_iter().map(|i| d.blocks[i].reps).collect()
}

#[derive(Debug, Clone)]
pub struct NormalizeRun {
    pub path: Path,
    pub decomposition: Decomposition,
    pub steps: Vec<RuleInstance>,
    /// Weight before each step and after the last one.
    pub weights: Vec<Vec<u64>>,
}

/// Applies the leftmost applicable instance (priority UUL, UUR, UD, DDL, DDR)
/// until none is left. Every intermediate path is replayed as a witness.
pub fn normalize(g: &ProductGraph, path: &Path, start: (Process, Process)) -> Result<NormalizeRun> {
    let mut d = sane_decomposition(g, path)?;
    if !is_witness(g, path, start)? {
        return Err(Error::Input("path is not a witness for the start pair".into()));
    }
    let mut steps = Vec::new();
    let mut weights = vec![weight(&d)];
    while let Some(inst) = instances_of(&d).into_iter().next() {
        if steps.len() >= NORMALIZE_CAP {
            return Err(Error::Internal(format!("no reduced form after {NORMALIZE_CAP} rule applications")));
        }
        let next = apply_to_decomposition(&d, &inst)?;
        let w = weight(&next);
        if w >= *weights.last().expect("non-empty") {
            return Err(Error::Internal(format!("weight did not decrease under {inst}")));
        }
        if !is_witness(g, &next.to_path(), start)? {
            return Err(Error::Internal(format!("{inst} did not preserve the witness")));
        }
        steps.push(inst);
        weights.push(w);
        d = next;
    }
    Ok(NormalizeRun { path: d.to_path(), decomposition: d, steps, weights })
}

/// Turns a witness into a sane one: while two loop blocks share an effect,
/// all their copies move to the earlier block (left effect `≥ 0`) or to the
/// later one, and the shortest witnessing prefix is kept.
pub fn make_sane(g: &ProductGraph, path: &Path, start: (Process, Process)) -> Result<Path> {
    if !is_witness(g, path, start)? {
        return Err(Error::Input("path is not a witness for the start pair".into()));
    }
    let mut cur = path.clone();
    for _ in 0..NORMALIZE_CAP {
        let d = decompose(g, &cur);
        if decomposition_is_sane(g, &d) {
            return Ok(cur);
        }
        let n = d.blocks.len();
        let Some((i, j)) = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .find(|&(i, j)| d.blocks[i].lp.effects() == d.blocks[j].lp.effects())
        else {
            return Err(Error::Internal("decomposition with too many distinct loops".into()));
        };
        let mut e = d.exponents();
        if d.blocks[i].lp.effects().0 >= 0 {
            e[i] += e[j];
            e[j] = 0;
        } else {
            e[j] += e[i];
            e[i] = 0;
        }
        let moved = d.with_exponents(&e).to_path();
        let k = (0..=moved.len())
            .find(|&k| is_witness(g, &moved.prefix(g, k), start).unwrap_or(false))
            .ok_or_else(|| Error::Internal("moving equal loops lost the witness".into()))?;
        cur = moved.prefix(g, k);
    }
    Err(Error::Internal("no sane witness reached".into()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundViolation {
    pub clause: u8,
    pub i: usize,
    pub j: usize,
    pub detail: String,
}

impl fmt::Display for BoundViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "clause {} on (L{}, L{}): {}", self.clause, self.i, self.j, self.detail)
    }
}

/// Checks the five multiplicity bounds of reduced paths on every ordered pair of loop blocks.
pub fn check_reduced_bounds(g: &ProductGraph, path: &Path) -> Vec<BoundViolation> {
    check_decomposition_bounds(&decompose(g, path), g.num_nodes())
}

pub fn check_decomposition_bounds(d: &Decomposition, v: usize) -> Vec<BoundViolation> {
    let v = v as u128;
    let mut out = Vec::new();
    for i in 0..d.blocks.len() {
        for j in i + 1..d.blocks.len() {
            let (a, b) = (&d.blocks[i], &d.blocks[j]);
            let (l0, l1) = (a.reps as u128, b.reps as u128);
            if l0 == 0 || l1 == 0 {
                continue;
            }
            let pi1 = d.between(i, j).len() as u128;
            let (s0, s1) = (a.lp.slope(), b.lp.slope());
            let mut report = |clause: u8, ok: bool, detail: String| {
                if !ok {
                    out.push(BoundViolation { clause, i, j, detail });
                }
            };
            match (a.lp.kind(), b.lp.kind()) {
                (LoopType::Up, LoopType::Up) if s0 >= s1 => report(1, l1 <= v, format!("l1={l1} > |V|={v}")),
                (LoopType::Up, LoopType::Up) => {
                    report(2, l0 <= pi1 + 2 * v, format!("l0={l0} > |π1|+2|V|={}", pi1 + 2 * v))
                }
                (LoopType::Down, LoopType::Down) if s0 < s1 => {
                    report(3, l1 < v * v + 2 * pi1, format!("l1={l1} ≥ |V|²+2|π1|={}", v * v + 2 * pi1))
                }
                (LoopType::Down, LoopType::Down) => report(4, l0 < v, format!("l0={l0} ≥ |V|={v}")),
                (LoopType::Up, LoopType::Down) if s0 <= s1 => report(
                    5,
                    l0 <= pi1 + v || l1 <= v,
                    format!("l0={l0} > |π1|+|V|={} and l1={l1} > |V|={v}", pi1 + v),
                ),
                _ => {}
            }
        }
    }
    out
}
