//! Counterexample-guided inductive synthesis over the control space of an
//! expanded program, with exhaustive bounded verification.

mod concretize;
mod enumerate;
mod quotient;
mod search;

use std::time::{Duration, Instant};

use log::{debug, info};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluator::{
    Compiled, ControlAssignment, ControlSource, EvalLimits, EvalStats, FuncRef, Outcome, Scratch, Tag, Value,
};
use crate::expander::{expand_program, ControlKind, ExpandedProgram, ExpansionContext};
use crate::indecomp::{
    apply_inductive_decomposition, classify_transformer, count_self_calls, detect_spec_shape, ClassificationReport,
    SpecShape, Verdict,
};
use crate::surface::{FuncDecl, Program, Type};

pub use concretize::concretize;
pub use enumerate::{Enumerator, InputSpace, RootFilter};
pub use search::LazyControl;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthesisConfig {
    /// Maximal constructor depth of verification inputs.
    pub input_depth: u32,
    /// Integer leaves of verification inputs, inclusive.
    pub int_domain: (i64, i64),
    pub hole_domain: (i64, i64),
    pub inline_bound: usize,
    pub unroll: usize,
    pub timeout: Option<Duration>,
    /// Accepted for interface stability; the search is deterministic and
    /// does not consult it.
    pub seed: u64,
    pub indecomp: bool,
    /// With decomposition, verify one input per class of inputs whose
    /// subterms have equal source semantics, when that is known to be exact.
    pub quotient: bool,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            input_depth: 3,
            int_domain: (0, 2),
            hole_domain: (0, 3),
            inline_bound: 3,
            unroll: 5,
            timeout: Some(Duration::from_secs(300)),
            seed: 0,
            indecomp: true,
            quotient: true,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.input_depth == 0 || self.inline_bound == 0 || self.unroll == 0 {
            return bad("depth, inline and unroll bounds must be positive");
        }
        if self.int_domain.0 > self.int_domain.1 || self.hole_domain.0 > self.hole_domain.1 {
            return bad("integer domains must be non-empty");
        }
        if self.timeout == Some(Duration::ZERO) {
            return bad("timeout must be positive");
        }
        Ok(())
    }

    pub fn expansion_context(&self) -> ExpansionContext {
        ExpansionContext { inline_bound: self.inline_bound, hole_domain: self.hole_domain, unroll_bound: self.unroll }
    }

    /// Recursion may go two levels past the input depth so interpreters can
    /// reach the leaves of the deepest inputs.
    pub fn eval_limits(&self) -> EvalLimits {
        EvalLimits { max_depth: (self.unroll as u32).max(self.input_depth + 2), max_steps: 1 << 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verification {
    Pass,
    /// The first failing input tuple in enumeration order.
    Counterexample(Vec<Value>),
    Timeout,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Inductive {
    Found(ControlAssignment),
    Unsatisfiable,
    Timeout,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ArmStat {
    pub variant: String,
    pub solved: bool,
    pub ms: u64,
}

/// Counters emitted as the stats document; field names are stable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SynthesisStats {
    pub iterations: u64,
    pub candidate_evaluations: u64,
    pub counterexamples: Vec<String>,
    pub wall_ms: u64,
    pub per_arm: Vec<ArmStat>,
}

#[derive(Clone, Debug)]
pub enum Status {
    Solved { phi: ControlAssignment, program: Program },
    Unsatisfiable(String),
    Timeout,
}

/// One CEGIS round: the candidate and the input that refuted it, if any.
#[derive(Clone, Debug)]
pub struct Iteration {
    pub candidate: ControlAssignment,
    pub counterexample: Option<Vec<Value>>,
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub status: Status,
    pub stats: SynthesisStats,
    pub trace: Vec<Iteration>,
    /// Evaluator counters accumulated over the run.
    pub eval_stats: EvalStats,
}

/// The harness to check: the shape's, or the program's only one.
pub fn select_harness<'p>(prog: &'p Program, shape: Option<&SpecShape>) -> Result<&'p FuncDecl> {
    if let Some(s) = shape {
        return prog.function(&s.harness).ok_or_else(|| Error::Config(format!("no harness `{}`", s.harness)));
    }
    let hs: Vec<&FuncDecl> = prog.harnesses().collect();
    match hs.as_slice() {
        [h] => Ok(h),
        [] => Err(Error::Config("the program has no harness".into())),
        _ => Err(Error::Config("the program has more than one harness".into())),
    }
}

/// Compiled program, harness and input space shared by search and verification.
pub struct Engine<'a> {
    pub code: Compiled,
    harness: FuncRef,
    space: InputSpace,
    limits: EvalLimits,
    kinds: Vec<ControlKind>,
    deadline: Option<Instant>,
    scratch: Scratch,
    quotient: Option<quotient::Quotient>,
    pub evaluations: u64,
    pub eval_stats: EvalStats,
    prog: &'a ExpandedProgram,
}

enum Run {
    Pass,
    Fail,
    Timeout,
}

impl<'a> Engine<'a> {
    pub fn new(prog: &'a ExpandedProgram, cfg: &SynthesisConfig, shape: Option<&SpecShape>) -> Result<Engine<'a>> {
        cfg.validate()?;
        let code = Compiled::new(prog, shape)?;
        let h = select_harness(&prog.program, shape)?;
        let harness = code.function(&h.name).expect("harness is compiled");
        let types: Vec<Type> = h.params.iter().map(|p| p.ty.clone()).collect();
        let space = InputSpace::new(&prog.program, code.layout(), &types, cfg.input_depth, cfg.int_domain)
            .map_err(Error::Config)?;
        let limits = cfg.eval_limits();
        let quotient = match shape {
            Some(s) if cfg.quotient && code.decomposition_active() => {
                quotient::Quotient::build(&prog.program, &code, s, cfg.input_depth, cfg.int_domain, &limits)
                    .map_err(Error::Eval)?
            }
            _ => None,
        };
        Ok(Engine {
            code,
            harness,
            space,
            limits,
            kinds: prog.control.iter().map(|c| c.kind).collect(),
            deadline: cfg.timeout.map(|t| Instant::now() + t),
            scratch: Scratch::default(),
            quotient,
            evaluations: 0,
            eval_stats: EvalStats::default(),
            prog,
        })
    }

    fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn eval<C: ControlSource + ?Sized>(&mut self, input: &[Value], ctrl: &mut C) -> Result<Outcome> {
        self.evaluations += 1;
        let o = self.scratch.run(&self.code, self.harness, input, ctrl, &self.limits, &mut self.eval_stats);
        match o {
            Outcome::InternalError(m) => Err(Error::Eval(m)),
            o => Ok(o),
        }
    }

    /// Checks every input (optionally those rooted at one variant) in order.
    pub fn verify<C: ControlSource + ?Sized>(
        &mut self,
        ctrl: &mut C,
        filter: Option<RootFilter>,
    ) -> Result<Verification> {
        if let Some(q) = self.quotient.take() {
            let r = self.verify_classes(&q, ctrl, filter);
            self.quotient = Some(q);
            if let Some(r) = r? {
                return Ok(r);
            }
        }
        self.verify_all(ctrl, filter)
    }

    /// Verification over class representatives. `None` when a run forced a
    /// placeholder, which makes subterm structure observable.
    fn verify_classes<C: ControlSource + ?Sized>(
        &mut self,
        q: &quotient::Quotient,
        ctrl: &mut C,
        filter: Option<RootFilter>,
    ) -> Result<Option<Verification>> {
        for (n, (tag, input)) in q.rows.iter().enumerate() {
            if filter.is_some_and(|f| f.tag != *tag) {
                continue;
            }
            if n.is_multiple_of(256) && self.timed_out() {
                return Ok(Some(Verification::Timeout));
            }
            let forced = self.eval_stats.forced;
            let input = std::slice::from_ref(input);
            let o = self.eval(input, ctrl)?;
            if self.eval_stats.forced != forced {
                return Ok(None);
            }
            if !o.is_pass() {
                return Ok(Some(Verification::Counterexample(input.to_vec())));
            }
        }
        Ok(Some(Verification::Pass))
    }

    fn verify_all<C: ControlSource + ?Sized>(
        &mut self,
        ctrl: &mut C,
        filter: Option<RootFilter>,
    ) -> Result<Verification> {
        let mut found = None;
        let mut err = None;
        let mut timeout = false;
        let space = std::mem::replace(&mut self.space, InputSpace::empty());
        let mut n = 0u32;
        space.for_each(filter, |input| {
            n = n.wrapping_add(1);
            if n.is_multiple_of(256) && self.timed_out() {
                timeout = true;
                return false;
            }
            match self.eval(input, ctrl) {
                Ok(Outcome::Pass) => true,
                Ok(_) => {
                    found = Some(input.to_vec());
                    false
                }
                Err(e) => {
                    err = Some(e);
                    false
                }
            }
        });
        self.space = space;
        if let Some(e) = err {
            return Err(e);
        }
        Ok(match (found, timeout) {
            (Some(x), _) => Verification::Counterexample(x),
            (None, true) => Verification::Timeout,
            (None, false) => Verification::Pass,
        })
    }

    /// Continues the search in `ctl` until every counterexample passes.
    /// `order` holds indices into `cexs`; failing ones move to the front.
    fn search(&mut self, ctl: &mut LazyControl, cexs: &[Vec<Value>], order: &mut [usize]) -> Result<Run> {
        'restart: loop {
            if self.timed_out() {
                return Ok(Run::Timeout);
            }
            for pos in 0..order.len() {
                ctl.begin_run();
                if self.eval(&cexs[order[pos]], ctl)?.is_pass() {
                    continue;
                }
                order[..=pos].rotate_right(1);
                let conflict = ctl.read_in_run().to_vec();
                if !ctl.backjump(&conflict) {
                    return Ok(Run::Fail);
                }
                continue 'restart;
            }
            return Ok(Run::Pass);
        }
    }

    /// Some assignment under which every input of `cexs` passes.
    pub fn synthesize_inductive(&mut self, cexs: &[Vec<Value>]) -> Result<Inductive> {
        let mut ctl = LazyControl::new(self.kinds.clone());
        let mut order: Vec<usize> = (0..cexs.len()).collect();
        Ok(match self.search(&mut ctl, cexs, &mut order)? {
            Run::Pass => Inductive::Found(ctl.complete()),
            Run::Fail => Inductive::Unsatisfiable,
            Run::Timeout => Inductive::Timeout,
        })
    }

    fn show_input(&self, input: &[Value]) -> String {
        let parts: Vec<String> = input.iter().map(|v| self.code.show(v)).collect();
        if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else {
            format!("({})", parts.join(", "))
        }
    }

    /// CEGIS restricted to inputs matching `filter`. The search state carries
    /// over between rounds: constraints only grow, so rejected candidates stay
    /// rejected.
    fn cegis_group(
        &mut self,
        filter: Option<RootFilter>,
        cexs: &mut Vec<Vec<Value>>,
        stats: &mut SynthesisStats,
        trace: &mut Vec<Iteration>,
    ) -> Result<(Run, LazyControl)> {
        let mut ctl = LazyControl::new(self.kinds.clone());
        // Seed with the first input so the first inductive step already
        // constrains the search; an inconsistent harness fails at once.
        if cexs.is_empty() {
            self.space.for_each(filter, |x| {
                cexs.push(x.to_vec());
                false
            });
        }
        let mut order: Vec<usize> = (0..cexs.len()).collect();
        loop {
            stats.iterations += 1;
            match self.search(&mut ctl, cexs, &mut order)? {
                Run::Pass => {}
                other => return Ok((other, ctl)),
            }
            ctl.begin_run();
            match self.verify(&mut ctl, filter)? {
                Verification::Pass => {
                    trace.push(Iteration { candidate: ctl.complete(), counterexample: None });
                    return Ok((Run::Pass, ctl));
                }
                Verification::Timeout => return Ok((Run::Timeout, ctl)),
                Verification::Counterexample(x) => {
                    debug!("counterexample {}", self.show_input(&x));
                    stats.counterexamples.push(self.show_input(&x));
                    trace.push(Iteration { candidate: ctl.complete(), counterexample: Some(x.clone()) });
                    order.insert(0, cexs.len());
                    cexs.push(x);
                }
            }
        }
    }

    /// Arms of the synthesized function to solve separately, when the
    /// decomposition removed every self-call of a morphism.
    fn arms(&self, shape: Option<&SpecShape>) -> Option<Vec<(String, RootFilter)>> {
        let s = shape?;
        let prog = &self.prog.program;
        let trans = prog.function(&s.trans)?;
        if count_self_calls(trans) > 0
            || classify_transformer(prog, trans, &s.source_adt).verdict != Verdict::RecursiveMorphism
        {
            return None;
        }
        let h = prog.function(&s.harness)?;
        let param = h.params.iter().position(|p| p.name == s.term)?;
        let layout = self.code.layout();
        Some(
            layout
                .tags_of(&s.source_adt)
                .iter()
                .map(|&tag: &Tag| (layout.info(tag).name.clone(), RootFilter { param, tag }))
                .collect(),
        )
    }
}

/// Checks `phi` on every input up to the configured depth.
pub fn verify(
    prog: &ExpandedProgram,
    phi: &ControlAssignment,
    cfg: &SynthesisConfig,
    shape: Option<&SpecShape>,
) -> Result<Verification> {
    let mut e = Engine::new(prog, cfg, shape)?;
    e.verify(&mut phi.clone(), None)
}

/// Some assignment passing every input in `cexs`, found by depth-first search
/// with lazy binding and conflict-directed backjumping.
pub fn synthesize_inductive(
    prog: &ExpandedProgram,
    cexs: &[Vec<Value>],
    cfg: &SynthesisConfig,
    shape: Option<&SpecShape>,
) -> Result<Inductive> {
    Engine::new(prog, cfg, shape)?.synthesize_inductive(cexs)
}

/// Alternates inductive synthesis and verification until a candidate passes
/// every bounded input. With a shape over a decomposed morphism, each arm of
/// the synthesized function is solved on its own inputs.
pub fn run_cegis(prog: &ExpandedProgram, cfg: &SynthesisConfig, shape: Option<&SpecShape>) -> Result<SynthesisResult> {
    let start = Instant::now();
    let mut e = Engine::new(prog, cfg, shape)?;
    let mut stats = SynthesisStats::default();
    let mut trace = Vec::new();
    let mut cexs: Vec<Vec<Value>> = Vec::new();

    let mut status = None;
    if let Some(arms) = e.arms(shape) {
        let mut merged: Vec<Option<i64>> = vec![None; prog.control.len()];
        let mut consistent = true;
        for (variant, filter) in arms {
            let t = Instant::now();
            let mut arm_cexs = Vec::new();
            let (run, ctl) = e.cegis_group(Some(filter), &mut arm_cexs, &mut stats, &mut trace)?;
            cexs.extend(arm_cexs);
            let solved = matches!(run, Run::Pass);
            stats.per_arm.push(ArmStat { variant: variant.clone(), solved, ms: t.elapsed().as_millis() as u64 });
            info!("arm {variant}: {}", if solved { "solved" } else { "unsolved" });
            match run {
                Run::Pass => {
                    for (id, v) in ctl.bindings() {
                        match merged[id] {
                            Some(w) if w != v => consistent = false,
                            _ => merged[id] = Some(v),
                        }
                    }
                }
                Run::Fail => {
                    status = Some(Status::Unsatisfiable(format!("no candidate satisfies the arm {variant}")));
                    break;
                }
                Run::Timeout => {
                    status = Some(Status::Timeout);
                    break;
                }
            }
        }
        if status.is_none() && consistent {
            let phi = ControlAssignment(
                merged.iter().zip(&prog.control).map(|(v, c)| v.unwrap_or_else(|| c.kind.first())).collect(),
            );
            status = Some(Status::Solved { program: concretize(prog, &phi), phi });
        } else if status.is_none() {
            info!("arm solutions share control points; solving jointly");
        }
    }
    let status = match status {
        Some(s) => s,
        None => {
            let (run, ctl) = e.cegis_group(None, &mut cexs, &mut stats, &mut trace)?;
            match run {
                Run::Pass => {
                    let phi = ctl.complete();
                    Status::Solved { program: concretize(prog, &phi), phi }
                }
                Run::Fail => Status::Unsatisfiable(format!(
                    "no assignment of the {} control points passes the {} counterexamples",
                    prog.control.len(),
                    cexs.len()
                )),
                Run::Timeout => Status::Timeout,
            }
        }
    };
    stats.candidate_evaluations = e.evaluations;
    stats.wall_ms = start.elapsed().as_millis() as u64;
    Ok(SynthesisResult { status, stats, trace, eval_stats: e.eval_stats })
}

/// Front half of the pipeline: expansion, shape detection and, when enabled
/// and licensed by classification, the decomposition rewrite.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub expanded: ExpandedProgram,
    /// The program searched; decomposed when `decomposed` holds.
    pub searched: ExpandedProgram,
    pub shape: Option<SpecShape>,
    pub classification: Option<ClassificationReport>,
    pub decomposed: bool,
    pub diagnostics: Vec<String>,
}

pub fn prepare(prog: &Program, cfg: &SynthesisConfig) -> Result<Prepared> {
    cfg.validate()?;
    let expanded = expand_program(prog, &cfg.expansion_context())?;
    let harness = select_harness(&expanded.program, None)?;
    let shape = detect_spec_shape(&expanded.program, harness);
    let mut diagnostics = Vec::new();
    let mut classification = None;
    let mut searched = expanded.clone();
    let mut decomposed = false;
    match &shape {
        None => diagnostics.push("no interpreter-equivalence assertion; decomposition not applicable".into()),
        Some(s) if cfg.indecomp => {
            let trans = expanded.program.function(&s.trans).expect("detected functions exist");
            let report = classify_transformer(&expanded.program, trans, &s.source_adt);
            let (out, diag) = apply_inductive_decomposition(&expanded, s, &report);
            decomposed = diag.is_none();
            diagnostics.extend(diag);
            searched = out;
            classification = Some(report);
        }
        Some(_) => diagnostics.push("decomposition disabled".into()),
    }
    Ok(Prepared { expanded, searched, shape, classification, decomposed, diagnostics })
}

/// Whole pipeline from a resolved program to a synthesis result.
pub fn synthesize(prog: &Program, cfg: &SynthesisConfig) -> Result<(Prepared, SynthesisResult)> {
    let p = prepare(prog, cfg)?;
    let shape = if p.decomposed { p.shape.as_ref() } else { None };
    let r = run_cegis(&p.searched, cfg, shape)?;
    Ok((p, r))
}

#[cfg(test)]
mod tests;
