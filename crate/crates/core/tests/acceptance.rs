//! The twelve acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the report is always printed.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ocn::fixtures;
use ocn::inclusion::{bound_table, decide_inclusion, match_template, InclusionVerdict, TemplateKind};
use ocn::ineq::{check_weighted_inequality_traced, BinaryNat};
use ocn::oracles::{
    inclusion_oracle, kills, rand_icm, rand_normal_pair, rand_ocn, traces_upto, universality_oracle, GenParams,
    InclusionOracle,
};
use ocn::product::{build_product, decompose, is_witness, Path, ProductGraph};
use ocn::reductions::{
    counting_gadget, decode_witness, example_icm, fast_growing, icm_apply, icm_reachable_bounded, icm_to_ocn,
    iterate_fast_growing, Icm,
};
use ocn::rewrite::{apply_rule, check_decomposition_bounds, check_reduced_bounds, make_sane, normalize, RuleInstance, RuleName};
use ocn::universality::{
    covers, find_nonuniversality_witness, macro_run, macro_step, macro_step_id, Macrostate, Pathfinder, SearchMode,
    UniversalityOutcome,
};
use ocn::Process;

type Outcome = Result<String, String>;

/// Shortest oracle witnesses from criterion 3, handed to criterion 4.
struct Witness {
    g: ProductGraph,
    path: Path,
    start: (Process, Process),
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1() -> Outcome {
    let net = fixtures::macro_net();
    let m0 = Macrostate(vec![None, None, Some(4)]);
    let mut m = m0.clone();
    for _ in 0..3 {
        m = macro_step(&net, &m, "a").map_err(|e| e.to_string())?;
    }
    ensure(m == Macrostate(vec![Some(5), Some(5), Some(7)]), || format!("got {m}"))?;
    ensure(m.norm() == Some(7), || format!("norm {:?}", m.norm()))?;
    ensure(covers(&m0, &m), || "no covering".into())?;
    Ok(format!("{m0} -aaa-> {m}, norm 7, covered"))
}

fn c2() -> Outcome {
    let (g, path, start) = fixtures::ex42();
    ensure(path.len() == 42, || format!("length {}", path.len()))?;
    ensure(is_witness(&g, &path, start).map_err(|e| e.to_string())?, || "42-path is not a witness".into())?;
    let inst = RuleInstance { rule: RuleName::Uul, i: 0, j: 1, x: 8, y: 8 };
    let out = apply_rule(&g, &path, &inst).map_err(|e| e.to_string())?;
    ensure(out.len() == 50, || format!("rewritten length {}", out.len()))?;
    ensure(is_witness(&g, &out, start).map_err(|e| e.to_string())?, || "50-path is not a witness".into())?;
    Ok("42 -UUL(8,8)-> 50, both replay".into())
}

fn c3(witnesses: &mut Vec<Witness>) -> Outcome {
    let mut stats = (0usize, 0usize, 0usize); // not included, included, oracle witnesses
    for seed in 0..500u64 {
        let p = GenParams { max_states: 3, actions: 2, ..GenParams::default() }.with_seed(seed);
        let (a, b) = rand_normal_pair(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (sa, sb) = (rng.gen_range(0..a.num_states()), rng.gen_range(0..b.num_states()));
        let (m, n) = (rng.gen_range(0..=3u64), rng.gen_range(0..=3u64));
        let (pm, qn) = (Process::new(sa, m), Process::new(sb, n));
        let verdict = decide_inclusion(&a, &b, pm, qn, 8).map_err(|e| format!("seed {seed}: {e}"))?;
        let oracle = inclusion_oracle(&a, &b, pm, qn, 50);
        let g = build_product(&a, &b).map_err(|e| e.to_string())?;
        match (&verdict, &oracle) {
            (InclusionVerdict::NotIncluded { witness, .. }, _) => {
                stats.0 += 1;
                if !is_witness(&g, witness, (pm, qn)).map_err(|e| e.to_string())? {
                    return Err(format!("seed {seed}: witness does not replay"));
                }
                if oracle == InclusionOracle::NoneUpTo(50) && witness.len() <= 50 {
                    return Err(format!("seed {seed}: oracle misses a witness of length {}", witness.len()));
                }
            }
            (_, InclusionOracle::Witness { .. }) => {
                return Err(format!("seed {seed}: {verdict:?} but the oracle found {oracle:?}"));
            }
            (_, InclusionOracle::BoundHit { .. }) => return Err(format!("seed {seed}: oracle bound hit")),
            _ => stats.1 += 1,
        }
        if let InclusionOracle::Witness { word, .. } = oracle {
            stats.2 += 1;
            let names: Vec<&str> = word.iter().map(|&x| a.action_name(x)).collect();
            let path = g.path_from_word(g.node(sa, sb), &names).map_err(|e| e.to_string())?;
            witnesses.push(Witness { g, path, start: (pm, qn) });
        }
    }
    Ok(format!("500 pairs: {} not included (all replay), {} included, 0 contradictions", stats.0, stats.1))
}

fn c4(witnesses: &[Witness]) -> Outcome {
    let mut kinds = std::collections::BTreeMap::<TemplateKind, usize>::new();
    let mut steps = 0;
    for (k, w) in witnesses.iter().enumerate() {
        let sane = make_sane(&w.g, &w.path, w.start).map_err(|e| format!("#{k}: {e}"))?;
        let run = normalize(&w.g, &sane, w.start).map_err(|e| format!("#{k}: {e}"))?;
        steps += run.steps.len();
        ensure(run.weights.windows(2).all(|p| p[1] < p[0]), || format!("#{k}: weights not decreasing"))?;
        let v = w.g.num_nodes();
        let viol = check_decomposition_bounds(&run.decomposition, v);
        ensure(viol.is_empty(), || format!("#{k}: {}", viol[0]))?;
        let viol = check_reduced_bounds(&w.g, &run.path);
        ensure(viol.is_empty(), || format!("#{k}: {} (re-decomposed)", viol[0]))?;
        let (tmpl, _) = match_template(&decompose(&w.g, &run.path));
        tmpl.validate().map_err(|e| format!("#{k}: {e}"))?;
        let c = bound_table(v).c;
        ensure(tmpl.short_parts().iter().all(|p| BigUint::from(p.len()) <= c), || format!("#{k}: short part above c"))?;
        *kinds.entry(tmpl.kind()).or_default() += 1;
    }
    Ok(format!("{} witnesses, {steps} rule steps, forms {kinds:?}", witnesses.len()))
}

fn c5() -> Outcome {
    let (mut non, mut uni, mut unknown) = (0, 0, 0);
    for seed in 0..500u64 {
        let net = rand_ocn(&GenParams { max_states: 3, actions: 2, ..GenParams::default() }.with_seed(seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let proc = Process::new(rng.gen_range(0..net.num_states()), rng.gen_range(0..=2));
        let ours = find_nonuniversality_witness(&net, proc, SearchMode::Shortest, Some(12));
        let oracle = universality_oracle(&net, proc, 10);
        match (&ours, &oracle) {
            (UniversalityOutcome::NonUniversal { word }, _) => {
                non += 1;
                let last = macro_run(&net, &Macrostate::singleton(&net, proc), word).pop().unwrap();
                ensure(last.is_bottom() && kills(&net, proc, word), || format!("seed {seed}: witness does not replay"))?;
                match &oracle {
                    Some(o) => ensure(o == word, || format!("seed {seed}: {word:?} vs oracle {o:?}"))?,
                    None => ensure(word.len() > 10, || format!("seed {seed}: oracle misses {word:?}"))?,
                }
            }
            (UniversalityOutcome::Universal, Some(o)) => return Err(format!("seed {seed}: universal but oracle found {o:?}")),
            (UniversalityOutcome::Universal, None) => uni += 1,
            (UniversalityOutcome::Unknown { .. }, Some(o)) => return Err(format!("seed {seed}: unknown but oracle found {o:?}")),
            (UniversalityOutcome::Unknown { .. }, None) => unknown += 1,
        }
    }
    Ok(format!("500 nets: {non} non-universal (equal shortest words), {uni} universal, {unknown} unknown"))
}

fn c6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..10_000u64 {
        let net = rand_ocn(&GenParams { max_states: 4, actions: 2, ..GenParams::default() }.with_seed(i % 500));
        let m = Macrostate((0..net.num_states()).map(|_| rng.gen_bool(0.7).then(|| rng.gen_range(0..6))).collect());
        let a = rng.gen_range(0..net.num_actions());
        let n = macro_step_id(&net, &m, a);
        let ok = match (m.norm(), n.norm()) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(x), Some(y)) => y <= x + 1,
        };
        ensure(ok, || format!("step {i}: {m} -> {n}"))?;
    }
    Ok("10^4 steps, ∥N∥ ≤ ∥M∥+1".into())
}

fn c7() -> Outcome {
    for seed in 0..200u64 {
        let net = rand_ocn(&GenParams::default().with_seed(10_000 + seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, m) = (rng.gen_range(0..net.num_states()), rng.gen_range(0..=3));
        let small = traces_upto(&net, Process::new(s, m), 8);
        let big = traces_upto(&net, Process::new(s, m + 1), 8);
        ensure(small.is_subset(&big), || format!("seed {seed}: monotonicity fails"))?;
    }
    Ok("200 nets, L=8".into())
}

fn valid_run(m: &Icm, run: &ocn::reductions::IcmRun) -> bool {
    let mut cur = m.initial_config();
    for (st, want) in run.steps.iter().zip(&run.configs[1..]) {
        match icm_apply(m, &cur, *st) {
            Some(n) if n == *want => cur = n,
            _ => return false,
        }
    }
    cur.state == m.fin()
}

fn c8() -> Outcome {
    let m = example_icm();
    let out = icm_to_ocn(&m).map_err(|e| e.to_string())?;
    let res = find_nonuniversality_witness(&out.net, out.init, SearchMode::Shortest, Some(14));
    let word = res.witness().ok_or("example machine: no witness")?.to_vec();
    let run = decode_witness(&out, &word).map_err(|e| e.to_string())?.ok_or("witness does not decode")?;
    ensure(valid_run(&m, &run), || "decoded run invalid".into())?;
    let shown = format!("{} = {}", out.net.word_to_string(&word), run.display(&m));

    let cut = m.without_transition(1);
    let out = icm_to_ocn(&cut).map_err(|e| e.to_string())?;
    let res = Pathfinder::new(&out.net).search(&Macrostate::singleton(&out.net, out.init), SearchMode::Any, Some(14));
    ensure(res.witness().is_none(), || "variant without dec has a witness".into())?;
    ensure(icm_reachable_bounded(&cut, 3, 12).is_none(), || "variant without dec reaches q2".into())?;

    let mut reach = 0;
    for seed in 0..20u64 {
        let p = GenParams { min_states: 2, max_states: 3, ..GenParams::default() }.with_seed(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let icm = rand_icm(&p, rng.gen_range(1..=2), rng.gen_range(1..=4));
        let out = icm_to_ocn(&icm).map_err(|e| e.to_string())?;
        let bounded = icm_reachable_bounded(&icm, 3, 12);
        let res = Pathfinder::new(&out.net).search(&Macrostate::singleton(&out.net, out.init), SearchMode::Shortest, Some(14));
        match (bounded.is_some(), res.witness()) {
            (true, Some(w)) => {
                reach += 1;
                let run = decode_witness(&out, w).map_err(|e| e.to_string())?.ok_or(format!("icm {seed}: no decode"))?;
                ensure(valid_run(&icm, &run), || format!("icm {seed}: decoded run invalid"))?;
            }
            (false, None) => {}
            (b, w) => return Err(format!("icm {seed}: bounded run {b}, witness {w:?}")),
        }
    }
    Ok(format!("{shown}; dec-less variant has none; 20 random machines agree ({reach} reach)"))
}

fn c9() -> Outcome {
    let vals: [u128; 7] = [0, 1, 5, 64, 1023, 2731, 4095];
    let mut count = 0u64;
    let mut check = |v: [u128; 6]| -> Result<(), String> {
        let n: Vec<BinaryNat> = v.iter().map(|&x| BinaryNat::from(x)).collect();
        let (got, st) = check_weighted_inequality_traced(&n[0], &n[1], &n[2], &n[3], &n[4], &n[5]);
        let big = |x: u128| BigUint::from(x);
        let want = big(v[0]) * big(v[1]) + big(v[2]) >= big(v[3]) * big(v[4]) + big(v[5]);
        ensure(got == want, || format!("{v:?}"))?;
        ensure(st.max_scratchpad <= st.operand_bits + 2, || format!("scratchpad on {v:?}"))?;
        count += 1;
        Ok(())
    };
    for i in 0..7usize.pow(6) {
        let mut v = [0u128; 6];
        let mut r = i;
        for x in v.iter_mut() {
            *x = vals[r % 7];
            r /= 7;
        }
        check(v)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100_000 {
        check(std::array::from_fn(|_| rng.gen::<u128>()))?;
    }
    Ok(format!("{count} cases agree, scratchpad within bound"))
}

fn c10() -> Outcome {
    let f = |k, x| fast_growing(k, x, 4096).map_err(|e| e.to_string());
    ensure(f(0, 3)? == BigUint::from(4u8), || "F0(3)".into())?;
    ensure(f(1, 2)? == BigUint::from(5u8), || "F1(2)".into())?;
    ensure(f(2, 2)? == BigUint::from(23u8), || "F2(2)".into())?;
    for n in 0..=10u32 {
        for x in 0..=10u64 {
            let got = iterate_fast_growing(1, n as u64, x, 4096).map_err(|e| e.to_string())?;
            ensure(got == (BigUint::from(1u8) << n) * (x + 1) - 1u8, || format!("F1^{n}({x})"))?;
        }
    }
    Ok("F0(3)=4, F1(2)=5, F2(2)=23, F1^n closed form".into())
}

fn c11() -> Outcome {
    let mut lens = Vec::new();
    for k in 0..=1 {
        for m in 0..=2 {
            let mut prev = 0;
            for n in 0..=2 {
                let (net, start) = counting_gadget(k, m, n).map_err(|e| e.to_string())?;
                let res = Pathfinder::new(&net).search(&start, SearchMode::Shortest, Some(60));
                let w = res.witness().ok_or(format!("k={k} m={m} n={n}: {res:?}"))?;
                ensure(net.action_name(*w.last().unwrap()) == "e", || format!("k={k} m={m} n={n}: no final e"))?;
                ensure(w.len() > prev, || format!("k={k} m={m}: length not increasing at n={n}"))?;
                prev = w.len();
                lens.push(w.len());
            }
        }
    }
    Ok(format!("18 gadgets non-universal, minimal lengths {lens:?}"))
}

fn c12() -> Outcome {
    let t = bound_table(1);
    ensure(t.f[0] == BigUint::from(9u8) && t.f[1] == BigUint::from(27u8), || "F0/F1 at |V|=1".into())?;
    for v in 1..=10u128 {
        let f0 = (2 * v + 1) * (2 * v + 1);
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
        let want = [f0, f1, f2, f3, f4, f5, f6, f7, f8, f9];
        let t = bound_table(v as usize);
        for (i, w) in want.iter().enumerate() {
            ensure(t.f[i] == BigUint::from(*w), || format!("F{i} at |V|={v}"))?;
        }
        ensure(t.f3p == BigUint::from(f3p) && t.f4p == BigUint::from(f4p), || format!("primes at |V|={v}"))?;
        ensure(t.c == BigUint::from(f9 * f0), || format!("c at |V|={v}"))?;
    }
    Ok(format!("F0=9, F1=27, c(1)={}; |V| ≤ 10 agree", t.c))
}

fn main() {
    let mut witnesses = Vec::new();
    let mut failed = 0;
    let mut run = |id: usize, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let res = f();
        let dt = t0.elapsed();
        let (status, msg) = match res {
            Ok(m) if dt <= limit => ("PASS", m),
            Ok(m) => ("FAIL", format!("{m}; took {dt:.2?} > {limit:?}")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} criterion {id:>2} [{dt:.2?}]: {msg}");
    };
    let s = Duration::from_secs;
    run(1, s(1), &mut c1);
    run(2, s(1), &mut c2);
    run(3, s(300), &mut || c3(&mut witnesses));
    run(4, s(300), &mut || c4(&witnesses));
    run(5, s(300), &mut c5);
    run(6, s(30), &mut c6);
    run(7, s(60), &mut c7);
    run(8, s(180), &mut c8);
    run(9, s(60), &mut c9);
    run(10, s(1), &mut c10);
    run(11, s(120), &mut c11);
    run(12, s(1), &mut c12);
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
