//! Seeded differential runs of the decision procedures against the brute-force oracles.

use std::path::Path as FsPath;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use ocn::inclusion::{decide_inclusion, InclusionVerdict};
use ocn::oracles::{inclusion_oracle, kills, rand_normal_pair, rand_ocn, universality_oracle, GenParams, InclusionOracle};
use ocn::product::{build_product, is_witness};
use ocn::text::serialize_ocn;
use ocn::universality::{find_nonuniversality_witness, SearchMode, UniversalityOutcome};
use ocn::Process;

use crate::commands::{write, CliResult};
use crate::report::{digest, Outcome, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Kind {
    Include,
    Universal,
}

#[derive(Debug, Clone)]
pub struct DiffParams {
    pub kind: Kind,
    pub from: u64,
    pub to: u64,
    pub max_states: usize,
    pub actions: usize,
    pub max_counter: u64,
    pub budget: usize,
    pub depth: usize,
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    negative: usize,
    positive: usize,
    inconclusive: usize,
}

enum Trial {
    Negative,
    Positive,
    Inconclusive,
    Failure { msg: String, dump: String },
}

fn gen(p: &DiffParams) -> GenParams {
    GenParams { max_states: p.max_states, actions: p.actions, ..GenParams::default() }
}

fn include_trial(p: &DiffParams, seed: u64) -> Trial {
    let (a, b) = rand_normal_pair(&gen(p).with_seed(seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pm = Process::new(rng.gen_range(0..a.num_states()), rng.gen_range(0..=p.max_counter));
    let qn = Process::new(rng.gen_range(0..b.num_states()), rng.gen_range(0..=p.max_counter));
    let dump = || {
        format!(
            "# seed {seed}\n# left {}\n# right {}\n{}\n{}",
            a.format_process(pm),
            b.format_process(qn),
            serialize_ocn(&a),
            serialize_ocn(&b)
        )
    };
    let fail = |msg: String| Trial::Failure { msg, dump: dump() };
    let verdict = match decide_inclusion(&a, &b, pm, qn, p.budget) {
        Ok(v) => v,
        Err(e) => return fail(format!("decide: {e}")),
    };
    let oracle = inclusion_oracle(&a, &b, pm, qn, p.depth);
    match (&verdict, &oracle) {
        (InclusionVerdict::NotIncluded { witness, .. }, _) => {
            let replays = build_product(&a, &b).and_then(|g| is_witness(&g, witness, (pm, qn)));
            match replays {
                Ok(true) if oracle == InclusionOracle::NoneUpTo(p.depth) && witness.len() <= p.depth => {
                    fail(format!("oracle misses a witness of length {}", witness.len()))
                }
                Ok(true) => Trial::Negative,
                Ok(false) => fail("witness does not replay".into()),
                Err(e) => fail(format!("replay: {e}")),
            }
        }
        (_, InclusionOracle::Witness { word, .. }) => fail(format!("{verdict:?} but the oracle found a witness of length {}", word.len())),
        (_, InclusionOracle::BoundHit { .. }) => Trial::Inconclusive,
        (InclusionVerdict::BudgetExhausted { .. }, _) => Trial::Inconclusive,
        _ => Trial::Positive,
    }
}

fn universal_trial(p: &DiffParams, seed: u64) -> Trial {
    let net = rand_ocn(&gen(p).with_seed(seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let proc = Process::new(rng.gen_range(0..net.num_states()), rng.gen_range(0..=p.max_counter));
    let dump = || format!("# seed {seed}\n# process {}\n{}", net.format_process(proc), serialize_ocn(&net));
    let fail = |msg: String| Trial::Failure { msg, dump: dump() };
    let ours = find_nonuniversality_witness(&net, proc, SearchMode::Shortest, Some(p.budget));
    let oracle = universality_oracle(&net, proc, p.depth);
    match (&ours, &oracle) {
        (UniversalityOutcome::NonUniversal { word }, _) if !kills(&net, proc, word) => fail(format!("witness {word:?} does not replay")),
        (UniversalityOutcome::NonUniversal { word }, Some(o)) if o != word => fail(format!("witness {word:?} but oracle has {o:?}")),
        (UniversalityOutcome::NonUniversal { word }, None) if word.len() <= p.depth => {
            fail(format!("oracle misses {word:?}"))
        }
        (UniversalityOutcome::NonUniversal { .. }, _) => Trial::Negative,
        (_, Some(o)) => fail(format!("{ours:?} but oracle found {o:?}")),
        (UniversalityOutcome::Universal, None) => Trial::Positive,
        (UniversalityOutcome::Unknown { .. }, None) => Trial::Inconclusive,
    }
}

pub fn difftest_cmd(p: &DiffParams, dump_dir: Option<&FsPath>) -> CliResult<Report> {
    let label = match p.kind {
        Kind::Include => "include",
        Kind::Universal => "universal",
    };
    let key = format!("{label} {} {} {} {} {} {} {}", p.from, p.to, p.max_states, p.actions, p.max_counter, p.budget, p.depth);
    let mut r = Report::new("difftest", digest([key.as_bytes()]));
    let t0 = Instant::now();
    let trials: Vec<(u64, Trial)> = (p.from..p.to)
        .into_par_iter()
        .map(|seed| {
            let t = match p.kind {
                Kind::Include => include_trial(p, seed),
                Kind::Universal => universal_trial(p, seed),
            };
            (seed, t)
        })
        .collect();
    let mut tally = Tally::default();
    let mut failures = Vec::new();
    for (seed, t) in trials {
        match t {
            Trial::Negative => tally.negative += 1,
            Trial::Positive => tally.positive += 1,
            Trial::Inconclusive => tally.inconclusive += 1,
            Trial::Failure { msg, dump } => {
                let mut entry = json!({ "seed": seed, "message": msg });
                if let Some(dir) = dump_dir {
                    std::fs::create_dir_all(dir).map_err(|err| crate::commands::CliError::Io { path: dir.into(), err })?;
                    let f = dir.join(format!("{label}-{seed}.txt"));
                    write(&f, &dump)?;
                    entry["dump"] = json!(f.display().to_string());
                }
                failures.push(entry);
            }
        }
    }
    if failures.is_empty() {
        r.verdict("agree", Outcome::Holds);
    } else {
        r.verdict("disagree", Outcome::Witness);
    }
    r.set("kind", label).set("seeds", format!("{}..{}", p.from, p.to));
    r.set(
        "counts",
        json!({ "negative": tally.negative, "positive": tally.positive, "inconclusive": tally.inconclusive, "failures": failures.len() }),
    );
    r.set("failures", failures);
    r.set("stats", json!({ "time_ms": t0.elapsed().as_millis() as u64 }));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kind: Kind) -> DiffParams {
        DiffParams { kind, from: 0, to: 40, max_states: 3, actions: 2, max_counter: 3, budget: 8, depth: 30 }
    }

    #[test]
    fn small_runs_agree() {
        for k in [Kind::Include, Kind::Universal] {
            let r = difftest_cmd(&params(k), None).unwrap();
            assert_eq!(r.outcome, Outcome::Holds, "{}", r.to_text());
        }
    }

    #[test]
    fn results_do_not_depend_on_scheduling() {
        let a = difftest_cmd(&params(Kind::Include), None).unwrap();
        let b = difftest_cmd(&params(Kind::Include), None).unwrap();
        assert_eq!(a.get("counts"), b.get("counts"));
    }
}
