//! Command-line driver: `synth`, `expand`, `check` and `bench`.
//!
//! Exit codes: 0 success, 1 usage or input errors, 2 unsatisfiable or a
//! failing check, 3 timeout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::cegis::{synthesize, verify, Status, SynthesisConfig, SynthesisStats, Verification};
use crate::evaluator::{ControlAssignment, Layout};
use crate::expander::{expand_program, ExpandedProgram};
use crate::surface::{load_library, parse_unresolved, pretty_print_program, print_annotated, Program, PRELUDE};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_TIMEOUT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "synrec", version, about = "Synthesize recursive ADT transformations from templates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize the holes and choices of a program.
    Synth {
        input: PathBuf,
        #[command(flatten)]
        opts: Opts,
        /// Where to write the solution; standard output by default.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
        /// Where to write the statistics document.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Print the expanded program with numbered control points.
    Expand {
        input: PathBuf,
        #[command(flatten)]
        opts: Opts,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Verify a finished program up to the input bound. With a second file,
    /// the definitions of `solution` replace those of `harness`.
    Check {
        solution: PathBuf,
        harness: Option<PathBuf>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Synthesize every top-level `*.synrec` of a directory with and without
    /// decomposition and print a TSV report.
    Bench {
        #[arg(default_value = "corpus")]
        dir: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Opts {
    #[arg(long, default_value_t = 3)]
    pub input_depth: u32,
    #[arg(long, value_parser = parse_range, default_value = "0..2")]
    pub int_domain: (i64, i64),
    #[arg(long, value_parser = parse_range, default_value = "0..3")]
    pub hole_domain: (i64, i64),
    #[arg(long, default_value_t = 3)]
    pub inline_bound: usize,
    #[arg(long, default_value_t = 5)]
    pub unroll: usize,
    #[arg(long, default_value_t = 300)]
    pub timeout_secs: u64,
    /// Disable the inductive decomposition rewrite.
    #[arg(long)]
    pub no_indecomp: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Template library replacing the bundled one; falls back to `SYNREC_LIB`.
    #[arg(long)]
    pub lib: Option<PathBuf>,
}

impl Opts {
    pub fn config(&self) -> SynthesisConfig {
        SynthesisConfig {
            input_depth: self.input_depth,
            int_domain: self.int_domain,
            hole_domain: self.hole_domain,
            inline_bound: self.inline_bound,
            unroll: self.unroll,
            timeout: Some(Duration::from_secs(self.timeout_secs)),
            seed: self.seed,
            indecomp: !self.no_indecomp,
            ..SynthesisConfig::default()
        }
    }

    fn library(&self) -> Result<String, String> {
        let path = self.lib.clone().or_else(|| std::env::var_os("SYNREC_LIB").map(PathBuf::from));
        match path {
            Some(p) => read(&p),
            None => Ok(PRELUDE.to_string()),
        }
    }
}

/// Accepts `LO..HI`, both inclusive.
fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn read(p: &Path) -> Result<String, String> {
    std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))
}

fn write(p: &Path, text: &str) -> Result<(), String> {
    std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()))
}

/// Failure of one subcommand, with its exit code.
struct Failure(i32, String);

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure(EXIT_USAGE, msg.into())
    }

    fn at(path: &Path, e: Error) -> Self {
        match e.span() {
            Some(_) => Failure(EXIT_USAGE, format!("{}:{e}", path.display())),
            None => Failure(EXIT_USAGE, format!("{}: {e}", path.display())),
        }
    }
}

/// Parses `path` and merges the library into it.
fn load(path: &Path, opts: &Opts) -> Result<Program, Failure> {
    let text = read(path).map_err(Failure::usage)?;
    let lib = opts.library().map_err(Failure::usage)?;
    let user = parse_unresolved(&text).map_err(|e| Failure::at(path, e))?;
    load_library(user, &lib).map(|(p, _)| p).map_err(|e| Failure::at(path, e))
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => write(p, text).map_err(Failure::usage),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Outcome of `synth` on one file, for both the command and the bench.
pub struct SynthReport {
    pub status: Status,
    pub stats: SynthesisStats,
    pub decomposed: bool,
    pub elapsed: Duration,
}

fn synth_file(path: &Path, opts: &Opts, cfg: &SynthesisConfig) -> Result<SynthReport, Failure> {
    let prog = load(path, opts)?;
    let start = Instant::now();
    let (prep, r) = synthesize(&prog, cfg).map_err(|e| Failure::at(path, e))?;
    for d in &prep.diagnostics {
        info!("{}: {d}", path.display());
    }
    Ok(SynthReport { status: r.status, stats: r.stats, decomposed: prep.decomposed, elapsed: start.elapsed() })
}

fn cmd_synth(input: &Path, opts: &Opts, output: Option<&Path>, stats: Option<&Path>) -> Result<i32, Failure> {
    let cfg = opts.config();
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let r = synth_file(input, opts, &cfg)?;
    let (code, solution) = match &r.status {
        Status::Solved { program, .. } => {
            (EXIT_OK, Some(pretty_print_program(program).map_err(|e| Failure::at(input, e))?))
        }
        Status::Unsatisfiable(why) => {
            eprintln!("{}: unsatisfiable: {why}", input.display());
            (EXIT_FAIL, None)
        }
        Status::Timeout => {
            eprintln!("{}: timed out after {} s", input.display(), opts.timeout_secs);
            (EXIT_TIMEOUT, None)
        }
    };
    if let Some(p) = stats {
        let json = serde_json::to_string_pretty(&r.stats).expect("stats serialize");
        write(p, &format!("{json}\n")).map_err(Failure::usage)?;
    }
    if let Some(text) = solution {
        emit(output, &text)?;
    }
    Ok(code)
}

fn cmd_expand(input: &Path, opts: &Opts, output: Option<&Path>) -> Result<i32, Failure> {
    let cfg = opts.config();
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let prog = load(input, opts)?;
    let ep = expand_program(&prog, &cfg.expansion_context()).map_err(|e| Failure::at(input, e))?;
    emit(output, &print_annotated(&ep.program))?;
    eprintln!("{}", control_summary(&ep));
    Ok(EXIT_OK)
}

pub fn control_summary(ep: &ExpandedProgram) -> String {
    let (holes, choices) = ep.count_kinds();
    let mut s = format!("control points: {} ({holes} holes, {choices} choices)", ep.control.len());
    let bits: f64 = ep.control.iter().map(|c| (c.kind.size() as f64).log2()).sum();
    if bits < 64.0 {
        let _ = write!(s, ", {} assignments", ep.space_size());
    } else {
        let _ = write!(s, ", about 2^{bits:.0} assignments");
    }
    s
}

/// `solution` with every ADT and function of `base` it does not define.
fn overlay(solution: Program, base: Program) -> Program {
    let mut out = solution;
    for a in base.adts {
        if out.adt(&a.name).is_none() {
            out.adts.push(a);
        }
    }
    for f in base.functions {
        if out.function(&f.name).is_none() {
            out.functions.push(f);
        }
    }
    out
}

fn cmd_check(solution: &Path, harness: Option<&Path>, opts: &Opts) -> Result<i32, Failure> {
    let cfg = opts.config();
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let sol_text = read(solution).map_err(Failure::usage)?;
    let sol = parse_unresolved(&sol_text).map_err(|e| Failure::at(solution, e))?;
    let merged = match harness {
        Some(h) => overlay(sol, parse_unresolved(&read(h).map_err(Failure::usage)?).map_err(|e| Failure::at(h, e))?),
        None => sol,
    };
    let lib = opts.library().map_err(Failure::usage)?;
    let prog = load_library(merged, &lib).map(|(p, _)| p).map_err(|e| Failure::at(solution, e))?;
    let ep = expand_program(&prog, &cfg.expansion_context()).map_err(|e| Failure::at(solution, e))?;
    if !ep.control.is_empty() {
        return Err(Failure::usage(format!(
            "{}: the program still contains synthesis constructs ({})",
            solution.display(),
            control_summary(&ep)
        )));
    }
    match verify(&ep, &ControlAssignment(vec![]), &cfg, None).map_err(|e| Failure::at(solution, e))? {
        Verification::Pass => {
            println!("pass: every input up to depth {} satisfies the harness", cfg.input_depth);
            Ok(EXIT_OK)
        }
        Verification::Counterexample(x) => {
            let layout = Layout::new(&ep.program);
            let shown: Vec<String> = x.iter().map(|v| layout.show(v)).collect();
            println!("counterexample: {}", shown.join(", "));
            Ok(EXIT_FAIL)
        }
        Verification::Timeout => {
            eprintln!("{}: timed out", solution.display());
            Ok(EXIT_TIMEOUT)
        }
    }
}

/// Top-level `*.synrec` files of `dir` other than expected solutions, by name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, String> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))? {
        let p = entry.map_err(|e| e.to_string())?.path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if p.is_file() && name.ends_with(".synrec") && !name.ends_with(".expected.synrec") {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

pub const BENCH_HEADER: &str =
    "benchmark\tsolved\tms\tevaluations\tsolved_noindecomp\tms_noindecomp\tevaluations_noindecomp\tspeedup";

/// Solved state, wall milliseconds and evaluation count of one run.
fn bench_cell(r: &Result<SynthReport, Failure>) -> (&'static str, Option<f64>, Option<u64>) {
    match r {
        Ok(r) => {
            let solved = match r.status {
                Status::Solved { .. } => "yes",
                Status::Unsatisfiable(_) => "unsat",
                Status::Timeout => "timeout",
            };
            (solved, Some(r.elapsed.as_secs_f64() * 1e3), Some(r.stats.candidate_evaluations))
        }
        Err(Failure(_, msg)) => {
            eprintln!("{msg}");
            ("error", None, None)
        }
    }
}

fn cell<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn cmd_bench(dir: &Path, opts: &Opts) -> Result<i32, Failure> {
    let cfg = opts.config();
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let files = corpus_files(dir).map_err(Failure::usage)?;
    println!("{BENCH_HEADER}");
    for f in files {
        let name = f.file_stem().and_then(|s| s.to_str()).unwrap_or("?").to_string();
        let with = synth_file(&f, opts, &SynthesisConfig { indecomp: true, ..cfg.clone() });
        let without = synth_file(&f, opts, &SynthesisConfig { indecomp: false, ..cfg.clone() });
        let (s1, ms1, e1) = bench_cell(&with);
        let (s2, ms2, e2) = bench_cell(&without);
        let speedup = match (ms1, ms2) {
            (Some(a), Some(b)) if a > 0.0 => Some(format!("{:.2}", b / a)),
            _ => None,
        };
        let ms = |x: Option<f64>| cell(x.map(|v| format!("{v:.1}")));
        println!("{name}\t{s1}\t{}\t{}\t{s2}\t{}\t{}\t{}", ms(ms1), cell(e1), ms(ms2), cell(e2), cell(speedup));
    }
    Ok(EXIT_OK)
}

/// Runs a parsed invocation and returns its exit code.
pub fn run(cli: Cli) -> i32 {
    let r = match &cli.command {
        Command::Synth { input, opts, output, stats } => cmd_synth(input, opts, output.as_deref(), stats.as_deref()),
        Command::Expand { input, opts, output } => cmd_expand(input, opts, output.as_deref()),
        Command::Check { solution, harness, opts } => cmd_check(solution, harness.as_deref(), opts),
        Command::Bench { dir, opts } => cmd_bench(dir, opts),
    };
    match r {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

/// Parses `args` (including the program name) and runs them. Usage errors
/// exit with 1 rather than clap's default of 2, which means unsatisfiable here.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            }
        }
    }
}
