use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use num_bigint::BigUint;
use serde_json::json;

use ocn::inclusion::{bound_table, check_normal_pair, decide_inclusion_with, InclusionOptions, InclusionVerdict};
use ocn::ineq::{check_weighted_inequality_traced, BinaryNat};
use ocn::net::EPSILON;
use ocn::oracles::{inclusion_oracle, InclusionOracle};
use ocn::product::{build_product, decompose, distinguishing_actions, enumerate_loops, is_witness, replay, Path, ProductGraph};
use ocn::reductions::{counting_gadget, decode_witness, fast_growing, icm_to_ocn, iterate_fast_growing};
use ocn::rewrite::{apply_rule, check_reduced_bounds, make_sane, normalize, RuleInstance, RuleName};
use ocn::text::{parse_icm, parse_ocn, serialize_ocn};
use ocn::universality::{macro_run, Macrostate, Pathfinder, SearchMode, UniversalityOutcome};
use ocn::{eliminate_epsilon, normalize_pair, Error, LabelMap, Ocn, Process};

use crate::report::{digest, Outcome, Report};

/// Complete mode runs the search with budget `c` only when `c` is at most this.
pub const COMPLETE_LIMIT: u64 = 100_000;

/// Words longer than this are reported by template and exponents only.
pub const WORD_PRINT_LIMIT: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },
    #[error("{path}: {err}")]
    File { path: PathBuf, err: Error },
    #[error(transparent)]
    Ocn(#[from] Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn read(path: &FsPath) -> CliResult<String> {
    fs::read_to_string(path).map_err(|err| CliError::Io { path: path.into(), err })
}

pub fn write(path: &FsPath, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|err| CliError::Io { path: path.into(), err })
}

pub fn load_net(path: &FsPath) -> CliResult<(Ocn, String)> {
    let text = read(path)?;
    let net = parse_ocn(&text).map_err(|err| CliError::File { path: path.into(), err })?;
    Ok((net, text))
}

fn load_pair(a: &FsPath, b: &FsPath, extra: &[&str]) -> CliResult<(Ocn, Ocn, u64)> {
    let (na, ta) = load_net(a)?;
    let (nb, tb) = load_net(b)?;
    let d = digest([ta.as_bytes(), tb.as_bytes()].into_iter().chain(extra.iter().map(|s| s.as_bytes())));
    Ok((na, nb, d))
}

fn word_names(g: &ProductGraph, p: &Path, labels: Option<&LabelMap>) -> Vec<String> {
    let w = g.word(p);
    match labels {
        Some(l) => l.translate(w.iter().map(String::as_str)).unwrap_or(w),
        None => w,
    }
}

fn path_fields(g: &ProductGraph, p: &Path, start: (Process, Process), labels: Option<&LabelMap>) -> serde_json::Value {
    let end = replay(g, p, start).ok().flatten();
    let mut v = json!({ "length": p.len() });
    if p.len() <= WORD_PRINT_LIMIT {
        v["word"] = json!(word_names(g, p, labels).join(" "));
    }
    if let Some((pa, pb)) = end {
        v["end"] = json!(format!("{} / {}", g.a().format_process(pa), g.b().format_process(pb)));
        let names: Vec<String> = distinguishing_actions(g, pa, pb)
            .into_iter()
            .map(|x| {
                let n = g.a().action_name(x);
                labels.and_then(|l| l.original(n)).unwrap_or(n).to_string()
            })
            .collect();
        v["distinguishing"] = json!(names);
    }
    v
}

pub fn normalize_cmd(a: &FsPath, b: &FsPath, out_dir: Option<&FsPath>) -> CliResult<Report> {
    let (na, nb, d) = load_pair(a, b, &[])?;
    let np = normalize_pair(&na, &nb)?;
    let mut r = Report::new("normalize", d);
    r.verdict("normalized", Outcome::Holds);
    r.set("sink", np.b.state_name(np.sink));
    r.set("labels", np.labels.entries().iter().map(|(f, o)| format!("{f} = {o}")).collect::<Vec<_>>());
    let (ta, tb) = (serialize_ocn(&np.a), serialize_ocn(&np.b));
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|err| CliError::Io { path: dir.into(), err })?;
            let (pa, pb) = (dir.join("a.net"), dir.join("b.net"));
            write(&pa, &ta)?;
            write(&pb, &tb)?;
            r.set("files", [pa.display().to_string(), pb.display().to_string()]);
        }
        None => {
            r.set("a", ta).set("b", tb);
        }
    }
    Ok(r)
}

pub fn product_cmd(a: &FsPath, b: &FsPath) -> CliResult<Report> {
    let (na, nb, d) = load_pair(a, b, &[])?;
    let g = build_product(&na, &nb)?;
    let mut r = Report::new("product", d);
    r.verdict("built", Outcome::Holds);
    r.set("nodes", g.num_nodes()).set("normal", g.is_normal());
    let edges: Vec<String> = g
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| format!("{} -({},{},{})-> {}", g.node_name(e.src), g.action_name(i), e.effect_a, e.effect_b, g.node_name(e.dst)))
        .collect();
    r.set("edges", edges);
    Ok(r)
}

pub fn loops_cmd(a: &FsPath, b: &FsPath) -> CliResult<Report> {
    let (na, nb, d) = load_pair(a, b, &[])?;
    let g = build_product(&na, &nb)?;
    let loops = enumerate_loops(&g);
    let mut r = Report::new("loops", d);
    r.verdict("enumerated", Outcome::Holds);
    r.set("count", loops.len());
    let items: Vec<_> = loops
        .iter()
        .map(|l| {
            let (ea, eb) = l.effects();
            json!({
                "anchor": g.node_name(l.anchor()),
                "word": l.path().display(&g),
                "effects": [ea, eb],
                "slope": l.slope().to_string(),
                "type": l.kind().symbol(),
            })
        })
        .collect();
    r.set("loops", items);
    Ok(r)
}

pub struct IncludeArgs<'a> {
    pub a: &'a FsPath,
    pub p: &'a str,
    pub b: &'a FsPath,
    pub q: &'a str,
    pub budget: usize,
    pub complete: bool,
    pub strict: bool,
    pub oracle_depth: Option<usize>,
}

pub fn include_cmd(args: IncludeArgs) -> CliResult<Report> {
    let (mut a, mut b, d) = load_pair(args.a, args.b, &[args.p, args.q])?;
    let mut pm = a.process(args.p)?;
    let mut qn = b.process(args.q)?;
    let mut r = Report::new("include", d);
    if a.action_id(EPSILON).is_some() || b.action_id(EPSILON).is_some() {
        let (ea, eb) = (eliminate_epsilon(&a), eliminate_epsilon(&b));
        if ea.deadlocks.contains(&pm.state) || eb.deadlocks.contains(&qn.state) {
            return Err(Error::Input("start state lies on a silent cycle".into()).into());
        }
        pm = ea.embed(pm);
        qn = eb.embed(qn);
        r.set("silent_steps", json!({ "left_scale": ea.scale, "right_scale": eb.scale }));
        (a, b) = (ea.net, eb.net);
    }
    let mut labels = None;
    if check_normal_pair(&a, &b).is_err() {
        let np = normalize_pair(&a, &b)?;
        (a, b) = (np.a, np.b);
        labels = Some(np.labels);
        r.set("normalized", true);
    }
    let v = a.num_states() * b.num_states();
    let c = bound_table(v).c;
    let mut opts = InclusionOptions { budget: args.budget, strict: args.strict };
    r.set("c", c.to_string());
    if args.complete {
        if c > BigUint::from(COMPLETE_LIMIT) {
            r.verdict("budget-exhausted", Outcome::Unknown);
            r.set("reason", format!("complete bound c = {c} exceeds the limit {COMPLETE_LIMIT}"));
            return Ok(r);
        }
        opts = InclusionOptions { budget: u64::try_from(&c).expect("below limit") as usize, strict: true };
    }
    r.set("budget", opts.budget);
    let t0 = Instant::now();
    let rep = decide_inclusion_with(&a, &b, pm, qn, opts)?;
    let elapsed = t0.elapsed();
    let g = &rep.graph;
    match &rep.verdict {
        InclusionVerdict::Included { certified } => {
            r.verdict("included", Outcome::Holds).set("certified", certified);
        }
        InclusionVerdict::BudgetExhausted { budget } => {
            r.verdict("budget-exhausted", Outcome::Unknown).set("budget", budget);
        }
        InclusionVerdict::NotIncluded { witness, template, exponents } => {
            r.verdict("not-included", Outcome::Witness);
            r.set("witness", path_fields(g, witness, (pm, qn), labels.as_ref()));
            r.set("template", template.describe(g)).set("exponents", exponents);
        }
    }
    if let Some(depth) = args.oracle_depth {
        let o = inclusion_oracle(&a, &b, pm, qn, depth);
        let (desc, contradiction) = match &o {
            InclusionOracle::Witness { word, action } => {
                let w: Vec<&str> = word.iter().map(|&x| a.action_name(x)).collect();
                let o = json!({ "result": "witness", "length": w.len(), "word": w.join(" "), "distinguishing": a.action_name(*action) });
                (o, !rep.verdict.is_not_included())
            }
            InclusionOracle::NoneUpTo(dd) => (json!({ "result": "none", "depth": dd }), false),
            InclusionOracle::BoundHit { depth } => (json!({ "result": "bound-hit", "depth": depth }), false),
        };
        r.set("oracle", desc).set("contradiction", contradiction);
    }
    if let Some(l) = &labels {
        r.set("labels", l.entries().iter().map(|(f, o)| format!("{f} = {o}")).collect::<Vec<_>>());
    }
    r.set(
        "stats",
        json!({
            "nodes": g.num_nodes(),
            "prefixes": rep.stats.prefixes,
            "loops": rep.stats.loops,
            "connectors": rep.stats.connectors,
            "candidates": rep.stats.candidates,
            "time_ms": elapsed.as_millis() as u64,
        }),
    );
    Ok(r)
}

pub fn universal_cmd(net: &FsPath, proc: &str, shortest: bool, budget: Option<usize>) -> CliResult<Report> {
    let (n, text) = load_net(net)?;
    let p = n.process(proc)?;
    let mut r = Report::new("universal", digest([text.as_bytes(), proc.as_bytes()]));
    let start = Macrostate::singleton(&n, p);
    let mode = if shortest { SearchMode::Shortest } else { SearchMode::Any };
    let t0 = Instant::now();
    let mut pf = Pathfinder::new(&n);
    let out = pf.search(&start, mode, budget);
    let elapsed = t0.elapsed();
    match &out {
        UniversalityOutcome::Universal => {
            r.verdict("universal", Outcome::Holds);
        }
        UniversalityOutcome::Unknown { budget } => {
            r.verdict("unknown", Outcome::Unknown).set("budget", budget);
        }
        UniversalityOutcome::NonUniversal { word } => {
            r.verdict("non-universal", Outcome::Witness);
            let trail: Vec<String> = macro_run(&n, &start, word).iter().map(|m| m.display(&n)).collect();
            r.set("witness", json!({ "length": word.len(), "word": n.word_to_string(word), "macrostates": trail }));
        }
    }
    let s = pf.stats;
    r.set(
        "stats",
        json!({
            "expanded": s.expanded,
            "pruned_cover": s.pruned_cover,
            "pruned_universal": s.pruned_universal,
            "time_ms": elapsed.as_millis() as u64,
        }),
    );
    Ok(r)
}

pub struct RewriteArgs<'a> {
    pub a: &'a FsPath,
    pub p: &'a str,
    pub b: &'a FsPath,
    pub q: &'a str,
    pub word: &'a str,
    pub rule: Option<RuleInstance>,
}

pub fn parse_rule(rule: &str, i: usize, j: usize, x: u64, y: u64) -> CliResult<RuleInstance> {
    Ok(RuleInstance { rule: rule.parse::<RuleName>()?, i, j, x, y })
}

pub fn rewrite_cmd(args: RewriteArgs) -> CliResult<Report> {
    let (a, b, d) = load_pair(args.a, args.b, &[args.p, args.q, args.word])?;
    let start = (a.process(args.p)?, b.process(args.q)?);
    check_normal_pair(&a, &b)?;
    let g = build_product(&a, &b)?;
    let words: Vec<&str> = args.word.split_whitespace().collect();
    let path = g.path_from_word(g.node(start.0.state, start.1.state), &words)?;
    let mut r = Report::new("rewrite", d);
    r.set("input", json!({ "length": path.len(), "witness": is_witness(&g, &path, start)? }));
    match args.rule {
        Some(inst) => {
            let out = apply_rule(&g, &path, &inst)?;
            let ok = is_witness(&g, &out, start)?;
            r.verdict(if ok { "applied" } else { "applied-not-witness" }, Outcome::Holds);
            r.set("rule", inst.to_string()).set("output", path_fields(&g, &out, start, None)).set("witness", ok);
        }
        None => {
            let sane = make_sane(&g, &path, start)?;
            let run = normalize(&g, &sane, start)?;
            r.verdict("normalized", Outcome::Holds);
            r.set("sane_length", sane.len());
            r.set("steps", run.steps.iter().map(|s| s.to_string()).collect::<Vec<_>>());
            r.set("weights", run.weights.iter().map(|w| format!("{w:?}")).collect::<Vec<_>>());
            r.set("output", path_fields(&g, &run.path, start, None));
            let blocks: Vec<_> = decompose(&g, &run.path)
                .blocks
                .iter()
                .map(|b| json!({ "loop": b.lp.path().display(&g), "type": b.lp.kind().symbol(), "reps": b.reps }))
                .collect();
            r.set("blocks", blocks);
            r.set("bound_violations", check_reduced_bounds(&g, &run.path).iter().map(|v| v.to_string()).collect::<Vec<_>>());
        }
    }
    Ok(r)
}

pub fn icm2ocn_cmd(file: &FsPath, out: Option<&FsPath>) -> CliResult<Report> {
    let text = read(file)?;
    let m = parse_icm(&text).map_err(|err| CliError::File { path: file.into(), err })?;
    let red = icm_to_ocn(&m)?;
    let mut r = Report::new("gen icm2ocn", digest([text.as_bytes()]));
    r.verdict("generated", Outcome::Holds);
    r.set("init", red.net.format_process(red.init));
    r.set("states", red.net.num_states()).set("actions", red.net.num_actions());
    let (net, dict) = (serialize_ocn(&red.net), red.dictionary_text());
    match out {
        Some(p) => {
            let dp = dict_path(p);
            write(p, &net)?;
            write(&dp, &dict)?;
            r.set("files", [p.display().to_string(), dp.display().to_string()]);
        }
        None => {
            r.set("net", net).set("dictionary", dict);
        }
    }
    Ok(r)
}

/// Sidecar holding the action dictionary of a generated net.
pub fn dict_path(net: &FsPath) -> PathBuf {
    let mut s = net.as_os_str().to_owned();
    s.push(".dict");
    s.into()
}

pub fn gadget_cmd(k: usize, m: u64, n: u64, out: Option<&FsPath>) -> CliResult<Report> {
    let (net, start) = counting_gadget(k, m, n)?;
    let mut r = Report::new("gen gadget", digest([format!("{k} {m} {n}").as_bytes()]));
    r.verdict("generated", Outcome::Holds);
    r.set("start", start.display(&net));
    let text = serialize_ocn(&net);
    match out {
        Some(p) => {
            write(p, &text)?;
            r.set("files", [p.display().to_string()]);
        }
        None => {
            r.set("net", text);
        }
    }
    Ok(r)
}

pub fn decode_cmd(icm: &FsPath, word: &str) -> CliResult<Report> {
    let text = read(icm)?;
    let m = parse_icm(&text).map_err(|err| CliError::File { path: icm.into(), err })?;
    let red = icm_to_ocn(&m)?;
    let w = red.net.parse_word(word)?;
    let mut r = Report::new("decode", digest([text.as_bytes(), word.as_bytes()]));
    match decode_witness(&red, &w)? {
        Some(run) => {
            r.verdict("run", Outcome::Holds);
            r.set("steps", run.steps.len()).set("run", run.display(&m)).set("final", run.last().display(&m));
        }
        None => {
            r.verdict("not-a-run", Outcome::Witness);
        }
    }
    Ok(r)
}

pub fn ineq_cmd(ops: &[String; 6]) -> CliResult<Report> {
    let v: Vec<BinaryNat> = ops.iter().map(|s| s.parse()).collect::<Result<_, Error>>()?;
    let (holds, stats) = check_weighted_inequality_traced(&v[0], &v[1], &v[2], &v[3], &v[4], &v[5]);
    let mut r = Report::new("ineq", digest(ops.iter().map(|s| s.as_bytes())));
    r.verdict(if holds { "holds" } else { "fails" }, if holds { Outcome::Holds } else { Outcome::Witness });
    let (l, rr) = (
        v[0].to_biguint() * v[1].to_biguint() + v[2].to_biguint(),
        v[3].to_biguint() * v[4].to_biguint() + v[5].to_biguint(),
    );
    r.set("left", l.to_string()).set("right", rr.to_string());
    r.set("stats", json!({ "operand_bits": stats.operand_bits, "max_scratchpad": stats.max_scratchpad, "steps": stats.steps }));
    Ok(r)
}

pub fn fgh_cmd(k: u32, x: u64, iterations: Option<u64>, bit_cap: u64) -> CliResult<Report> {
    let mut r = Report::new("fgh", digest([format!("{k} {x} {iterations:?} {bit_cap}").as_bytes()]));
    let v = match iterations {
        Some(n) => iterate_fast_growing(k, n, x, bit_cap),
        None => fast_growing(k, x, bit_cap),
    };
    match v {
        Ok(v) => {
            r.verdict("computed", Outcome::Holds);
            r.set("value", v.to_string()).set("bits", v.bits());
        }
        Err(Error::Overflow(msg)) => {
            r.verdict("overflow", Outcome::Unknown).set("reason", msg);
        }
        Err(e) => return Err(e.into()),
    }
    Ok(r)
}
