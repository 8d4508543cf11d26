//! Line-oriented text formats for nets and counter machines.
//!
//! ```text
//! net A                      icm M
//! alphabet a b               counters 2
//! state p q                  state q0 q1
//! trans p a -1 q             init q0
//!                            final q1
//!                            trans q0 inc 1 q1
//! ```
//!
//! A line whose first non-blank character is `#` is a comment. Lines with a
//! fixed number of fields may carry a trailing `# ...` comment; `alphabet` and
//! `state` lines may not, since `#` is a legal action name.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::net::{Ocn, OcnBuilder};
use crate::reductions::{Icm, IcmOp, IcmTransition};

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Non-comment lines as `(line number, fields)`.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let t = l.trim();
        if t.is_empty() || t.starts_with('#') {
            return None;
        }
        Some((i + 1, t.split_whitespace().collect()))
    })
}

/// Exactly `n` fields after the keyword, optionally followed by a comment.
fn fixed<'a>(line: usize, f: &[&'a str], n: usize) -> Result<Vec<&'a str>> {
    let args = &f[1..];
    if args.len() < n || (args.len() > n && !args[n].starts_with('#')) {
        return Err(perr(line, format!("`{}` takes {n} field(s)", f[0])));
    }
    Ok(args[..n].to_vec())
}

fn list<'a>(line: usize, f: &[&'a str]) -> Result<Vec<&'a str>> {
    if f.len() < 2 {
        return Err(perr(line, format!("`{}` needs at least one name", f[0])));
    }
    Ok(f[1..].to_vec())
}

pub fn parse_ocn(text: &str) -> Result<Ocn> {
    let mut b: Option<OcnBuilder> = None;
    for (ln, f) in lines(text) {
        if f[0] == "net" {
            if b.is_some() {
                return Err(perr(ln, "second `net` header"));
            }
            b = Some(OcnBuilder::new(fixed(ln, &f, 1)?[0]));
            continue;
        }
        let b = b.as_mut().ok_or_else(|| perr(ln, "expected `net <id>` first"))?;
        let wrap = |e: Error| perr(ln, e.to_string());
        match f[0] {
            "alphabet" => {
                for a in list(ln, &f)? {
                    b.add_action(a).map_err(wrap)?;
                }
            }
            "state" => {
                for s in list(ln, &f)? {
                    b.add_state(s).map_err(wrap)?;
                }
            }
            "trans" => {
                let x = fixed(ln, &f, 4)?;
                let eff: i64 = x[2].parse().map_err(|_| perr(ln, format!("bad effect `{}`", x[2])))?;
                b.add_transition(x[0], x[1], eff, x[3]).map_err(wrap)?;
            }
            k => return Err(perr(ln, format!("unknown keyword `{k}`"))),
        }
    }
    b.map(OcnBuilder::build).ok_or_else(|| perr(0, "empty net description"))
}

pub fn serialize_ocn(net: &Ocn) -> String {
    let mut s = format!("net {}\n", net.name());
    if !net.alphabet().is_empty() {
        writeln!(s, "alphabet {}", net.alphabet().join(" ")).unwrap();
    }
    if !net.states().is_empty() {
        writeln!(s, "state {}", net.states().join(" ")).unwrap();
    }
    for t in net.transitions() {
        writeln!(s, "trans {} {} {} {}", net.state_name(t.src), net.action_name(t.action), t.effect, net.state_name(t.dst)).unwrap();
    }
    s
}

pub fn parse_icm(text: &str) -> Result<Icm> {
    let mut name = None;
    let mut counters = None;
    let mut states: Vec<String> = Vec::new();
    let (mut init, mut fin) = (None, None);
    let mut trans: Vec<(usize, &str, IcmOp, usize, &str)> = Vec::new();
    for (ln, f) in lines(text) {
        if f[0] != "icm" && name.is_none() {
            return Err(perr(ln, "expected `icm <id>` first"));
        }
        match f[0] {
            "icm" if name.is_some() => return Err(perr(ln, "second `icm` header")),
            "icm" => name = Some(fixed(ln, &f, 1)?[0].to_string()),
            "counters" => {
                let x = fixed(ln, &f, 1)?[0];
                counters = Some(x.parse::<usize>().map_err(|_| perr(ln, format!("bad counter count `{x}`")))?);
            }
            "state" => {
                for s in list(ln, &f)? {
                    if states.iter().any(|x| x == s) {
                        return Err(perr(ln, format!("duplicate state `{s}`")));
                    }
                    states.push(s.to_string());
                }
            }
            "init" => init = Some((ln, fixed(ln, &f, 1)?[0])),
            "final" => fin = Some((ln, fixed(ln, &f, 1)?[0])),
            "trans" => {
                let x = fixed(ln, &f, 4)?;
                let op: IcmOp = x[1].parse().map_err(|e: Error| perr(ln, e.to_string()))?;
                let i: usize = x[2].parse().map_err(|_| perr(ln, format!("bad counter index `{}`", x[2])))?;
                trans.push((ln, x[0], op, i, x[3]));
            }
            k => return Err(perr(ln, format!("unknown keyword `{k}`"))),
        }
    }
    let name = name.ok_or_else(|| perr(0, "empty machine description"))?;
    let k = counters.ok_or_else(|| perr(0, "missing `counters`"))?;
    let id = |ln: usize, s: &str| states.iter().position(|x| x == s).ok_or_else(|| perr(ln, format!("unknown state `{s}`")));
    let mut ts = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (ln, src, op, i, dst) in trans {
        if i == 0 || i > k {
            return Err(perr(ln, format!("counter index {i} out of range 1..={k}")));
        }
        let t = IcmTransition { src: id(ln, src)?, op, counter: i - 1, dst: id(ln, dst)? };
        if !seen.insert(t) {
            return Err(perr(ln, "duplicate transition"));
        }
        ts.push(t);
    }
    let (iln, i) = init.ok_or_else(|| perr(0, "missing `init`"))?;
    let (fln, f) = fin.ok_or_else(|| perr(0, "missing `final`"))?;
    let (i, f) = (id(iln, i)?, id(fln, f)?);
    Icm::from_parts(name, states, k, ts, i, f)
}

pub fn serialize_icm(m: &Icm) -> String {
    let mut s = format!("icm {}\ncounters {}\n", m.name(), m.counters());
    if !m.states().is_empty() {
        writeln!(s, "state {}", m.states().join(" ")).unwrap();
    }
    writeln!(s, "init {}\nfinal {}", m.states()[m.init()], m.states()[m.fin()]).unwrap();
    for t in m.transitions() {
        writeln!(s, "trans {}", m.format_transition(t)).unwrap();
    }
    s
}
