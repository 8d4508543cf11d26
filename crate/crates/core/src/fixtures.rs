//! Small reference instances used across the test suites and the CLI.

use crate::net::{Ocn, OcnBuilder, Process};
use crate::product::{build_product, Path, ProductGraph};

/// States `q1,q2,q3` over `{a}`: `q2 -(a,+1)-> q1`, `q1 -(a,0)-> q3`,
/// `q3 -(a,-1)-> q2`, `q3 -(a,+1)-> q3`.
pub fn macro_net() -> Ocn {
    Ocn::new(
        "macro",
        ["q1", "q2", "q3"],
        ["a"],
        &[
            ("q2", "a", 1, "q1"),
            ("q1", "a", 0, "q3"),
            ("q3", "a", -1, "q2"),
            ("q3", "a", 1, "q3"),
        ],
    )
    .expect("valid fixture")
}

/// `p -(a,0)-> p` against `q -(a,-1)-> q`. The only witness for `(p m, q n)` is `a^n`.
pub fn loopy() -> (Ocn, Ocn) {
    (
        Ocn::from_transitions("A", &[("p", "a", 0, "p")]).expect("valid fixture"),
        Ocn::from_transitions("B", &[("q", "a", -1, "q")]).expect("valid fixture"),
    )
}

/// `p -(a,-1)-> p` against `q -(a,-1)-> q`: inclusion holds iff `m ≤ n`.
pub fn dd() -> (Ocn, Ocn) {
    (
        Ocn::from_transitions("A", &[("p", "a", -1, "p")]).expect("valid fixture"),
        Ocn::from_transitions("B", &[("q", "a", -1, "q")]).expect("valid fixture"),
    )
}

/// Three loops with effect pairs `(3,1)`, `(2,1)`, `(-1,-1)` at `p/p'`,
/// joined by `t5` into the draining loop `t6`. The right net is completed
/// with a sink `L`.
pub fn ex42_nets() -> (Ocn, Ocn) {
    let acts = ["t0", "t1", "t2", "t3", "t4", "t5", "t6"];
    let a = Ocn::new(
        "A",
        ["p", "pa", "pb", "pc", "r"],
        acts,
        &[
            ("p", "t0", 1, "pa"),
            ("pa", "t1", 1, "pb"),
            ("pb", "t2", 1, "p"),
            ("p", "t3", 1, "pc"),
            ("pc", "t4", 1, "p"),
            ("p", "t5", 0, "r"),
            ("r", "t6", -1, "r"),
        ],
    )
    .expect("valid fixture");
    let partial = Ocn::new(
        "B",
        ["p'", "qa", "qb", "qc", "r'", "L"],
        acts,
        &[
            ("p'", "t0", 0, "qa"),
            ("qa", "t1", 0, "qb"),
            ("qb", "t2", 1, "p'"),
            ("p'", "t3", 0, "qc"),
            ("qc", "t4", 1, "p'"),
            ("p'", "t5", 0, "r'"),
            ("r'", "t6", -1, "r'"),
        ],
    )
    .expect("valid fixture");
    (a, complete_with_sink(&partial, "L"))
}

/// Routes every missing `(state, action)` to `sink` with effect 0; the sink
/// drains the counter on every action.
pub fn complete_with_sink(net: &Ocn, sink: &str) -> Ocn {
    let mut b: OcnBuilder = net.to_builder();
    let l = b.ensure_state(sink).expect("valid sink name");
    for s in 0..net.num_states() {
        for x in 0..net.num_actions() {
            if s != l && net.outgoing(s, x).next().is_none() {
                b.add_transition_ids(s, x, 0, l).expect("fresh transition");
            }
        }
    }
    for x in 0..net.num_actions() {
        b.add_transition_idempotent(l, x, -1, l).expect("sink loop");
    }
    b.build()
}

/// `(t0 t1 t2)(t3 t4)^9 t5 t6^20`.
pub fn ex42_word() -> Vec<&'static str> {
    let mut w = vec!["t0", "t1", "t2"];
    for _ in 0..9 {
        w.extend(["t3", "t4"]);
    }
    w.push("t5");
    w.extend(std::iter::repeat("t6").take(20));
    w
}

/// Product graph, the length-42 witness and the start pair `(p 0, p' 10)`.
pub fn ex42() -> (ProductGraph, Path, (Process, Process)) {
    let (a, b) = ex42_nets();
    let g = build_product(&a, &b).expect("product");
    let p = a.state_id("p").expect("p");
    let q = b.state_id("p'").expect("p'");
    let path = g.path_from_word(g.node(p, q), &ex42_word()).expect("witness path");
    (g, path, (Process::new(p, 0), Process::new(q, 10)))
}
