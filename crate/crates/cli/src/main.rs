mod commands;
mod difftest;
mod report;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::*;
use difftest::{difftest_cmd, DiffParams, Kind};
use report::Report;

const INPUT_ERROR: u8 = 3;

/// Trace inclusion and universality for one-counter nets.
///
/// Exit status: 0 property holds, 1 witness found, 2 budget exhausted or
/// unknown, 3 input error.
#[derive(Parser)]
#[command(name = "ocn", version)]
struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Pair {
    /// Left net file.
    a: PathBuf,
    /// Left process, `state:counter`.
    p: String,
    /// Right net file.
    b: PathBuf,
    /// Right process, `state:counter`.
    q: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Relabel and complete a pair of nets into deterministic/complete normal form.
    Normalize {
        a: PathBuf,
        b: PathBuf,
        /// Write `a.net` and `b.net` here instead of printing them.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print the synchronised product of two nets.
    Product { a: PathBuf, b: PathBuf },
    /// List the simple loops of the product with their slopes and types.
    Loops { a: PathBuf, b: PathBuf },
    /// Decide whether the traces of the left process are traces of the right one.
    Include {
        #[command(flatten)]
        pair: Pair,
        /// Length bound for the short parts of witness templates.
        #[arg(long, default_value_t = ocn::inclusion::DEFAULT_BUDGET)]
        budget: usize,
        /// Search up to the full bound c; refused when c is too large.
        #[arg(long)]
        complete: bool,
        /// Report exhaustion instead of an uncertified inclusion.
        #[arg(long)]
        strict: bool,
        /// Also run the brute-force oracle to this depth.
        #[arg(long)]
        oracle_depth: Option<usize>,
    },
    /// Search a word that is not a trace of the given process.
    Universal {
        net: PathBuf,
        /// `state:counter`
        proc: String,
        /// Return the lexicographically least shortest witness.
        #[arg(long)]
        shortest: bool,
        /// Maximal witness length explored.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Normalize a witness path, or apply one rule instance to it.
    Rewrite {
        #[command(flatten)]
        pair: Pair,
        /// Space separated witness word.
        #[arg(long)]
        word: String,
        /// Rule to apply (uul, uur, ud, ddl, ddr); normalizes when absent.
        #[arg(long, requires_all = ["i", "j", "x", "y"])]
        rule: Option<String>,
        #[arg(long)]
        i: Option<usize>,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        x: Option<u64>,
        #[arg(long)]
        y: Option<u64>,
    },
    /// Generate hardness instances.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Decode a non-universality witness of a reduction net into a machine run.
    Decode {
        /// The counter machine the net was generated from.
        icm: PathBuf,
        /// Space separated word over the net's alphabet.
        word: String,
    },
    /// Check m*A + B >= n*C + D; operands decimal or `0b` binary.
    Ineq {
        m: String,
        a: String,
        b: String,
        n: String,
        c: String,
        d: String,
    },
    /// Compare a decision procedure with its oracle over a seed range.
    Difftest {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        from: u64,
        #[arg(long, default_value_t = 500)]
        to: u64,
        #[arg(long, default_value_t = 3)]
        max_states: usize,
        #[arg(long, default_value_t = 2)]
        actions: usize,
        #[arg(long, default_value_t = 3)]
        max_counter: u64,
        /// Template budget (include, default 8) or length budget (universal, default 12).
        #[arg(long)]
        budget: Option<usize>,
        /// Oracle depth (default 50 for include, 10 for universal).
        #[arg(long)]
        depth: Option<usize>,
        /// Write one file per failing seed here.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
    /// Evaluate the fast-growing function F_k(x), or its n-fold iterate.
    Fgh {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        x: u64,
        #[arg(long)]
        iterate: Option<u64>,
        /// Give up once the value needs more bits than this.
        #[arg(long, default_value_t = 1 << 16)]
        bit_cap: u64,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    /// Encode a counter machine as an OCN universality instance.
    Icm2ocn {
        file: PathBuf,
        /// Write the net here and the action dictionary to `<out>.dict`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Counting gadget over the letters 0..k and e.
    Gadget {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cmd: Cmd) -> CliResult<Report> {
    match cmd {
        Cmd::Normalize { a, b, out_dir } => normalize_cmd(&a, &b, out_dir.as_deref()),
        Cmd::Product { a, b } => product_cmd(&a, &b),
        Cmd::Loops { a, b } => loops_cmd(&a, &b),
        Cmd::Include { pair, budget, complete, strict, oracle_depth } => include_cmd(IncludeArgs {
            a: &pair.a,
            p: &pair.p,
            b: &pair.b,
            q: &pair.q,
            budget,
            complete,
            strict,
            oracle_depth,
        }),
        Cmd::Universal { net, proc, shortest, budget } => universal_cmd(&net, &proc, shortest, budget),
        Cmd::Rewrite { pair, word, rule, i, j, x, y } => {
            let rule = match rule {
                Some(r) => Some(parse_rule(&r, i.unwrap_or(0), j.unwrap_or(0), x.unwrap_or(0), y.unwrap_or(0))?),
                None => None,
            };
            rewrite_cmd(RewriteArgs { a: &pair.a, p: &pair.p, b: &pair.b, q: &pair.q, word: &word, rule })
        }
        Cmd::Gen(GenCmd::Icm2ocn { file, out }) => icm2ocn_cmd(&file, out.as_deref()),
        Cmd::Gen(GenCmd::Gadget { k, m, n, out }) => gadget_cmd(k, m, n, out.as_deref()),
        Cmd::Decode { icm, word } => decode_cmd(&icm, &word),
        Cmd::Ineq { m, a, b, n, c, d } => ineq_cmd(&[m, a, b, n, c, d]),
        Cmd::Difftest { kind, from, to, max_states, actions, max_counter, budget, depth, dump_dir } => {
            let (db, dd) = match kind {
                Kind::Include => (8, 50),
                Kind::Universal => (12, 10),
            };
            let p = DiffParams {
                kind,
                from,
                to,
                max_states,
                actions,
                max_counter,
                budget: budget.unwrap_or(db),
                depth: depth.unwrap_or(dd),
            };
            difftest_cmd(&p, dump_dir.as_deref())
        }
        Cmd::Fgh { k, x, iterate, bit_cap } => fgh_cmd(k, x, iterate, bit_cap),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { INPUT_ERROR } else { 0 });
        }
    };
    match run(cli.cmd) {
        Ok(r) => {
            let out = if cli.json { r.to_json() + "\n" } else { r.to_text() };
            let _ = std::io::stdout().write_all(out.as_bytes());
            ExitCode::from(r.outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}
