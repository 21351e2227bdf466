//! Execution of expanded programs under a control assignment, with resource
//! limits and the placeholder rules of inductive decomposition.

mod ir;
mod value;

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::expander::ExpandedProgram;
use crate::indecomp::SpecShape;
use crate::surface::{BinOp, ControlId, Expr, Span};

use ir::{Compiler, FieldSel, FnCode, FnId, Node};

pub use value::{values_equal, Layout, Record, Tag, Value, VariantInfo};

/// Supplies the value chosen at each control point.
pub trait ControlSource {
    /// `None` means the point is unassigned.
    fn read(&mut self, id: ControlId) -> Option<i64>;
}

impl<T: ControlSource + ?Sized> ControlSource for &mut T {
    fn read(&mut self, id: ControlId) -> Option<i64> {
        (**self).read(id)
    }
}

/// Total assignment indexed by control id.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ControlAssignment(pub Vec<i64>);

impl ControlAssignment {
    /// Every point at the smallest value of its domain.
    pub fn first(prog: &ExpandedProgram) -> Self {
        ControlAssignment(prog.control.iter().map(|c| c.kind.first()).collect())
    }

    /// True when the assignment is total and in-domain for `prog`.
    pub fn fits(&self, prog: &ExpandedProgram) -> bool {
        self.0.len() == prog.control.len()
            && prog.control.iter().zip(&self.0).all(|(c, &v)| c.kind.first() <= v && v <= c.kind.last())
    }
}

impl ControlSource for ControlAssignment {
    fn read(&mut self, id: ControlId) -> Option<i64> {
        self.0.get(id).copied()
    }
}

/// Harness parameter name to input value.
pub type InputBinding = BTreeMap<String, Value>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalLimits {
    /// Simultaneous activations allowed per function.
    pub max_depth: u32,
    /// Function calls allowed per evaluation.
    pub max_steps: u64,
}

impl Default for EvalLimits {
    fn default() -> Self {
        EvalLimits { max_depth: 5, max_steps: 1 << 20 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limit {
    Depth,
    Steps,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    /// Index of the failing assertion in program order.
    AssertFailed(usize),
    /// The candidate reached a dead end of the expansion.
    CandidateInfeasible,
    ResourceExhausted(Limit),
    /// Ill-typed run-time state; an expansion bug, not a user error.
    InternalError(String),
}

impl Outcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, Outcome::Pass)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalStats {
    pub calls: u64,
    /// Calls to the synthesized function while it is already active.
    pub trans_reentries: u64,
    /// Placeholders evaluated because a non-interpreter context inspected them.
    pub forced: u64,
    /// Interpreter applications rewritten to the source interpreter.
    pub rewrites: u64,
}

enum Stop {
    Assert(u32),
    Infeasible,
    Exhausted(Limit),
    Internal(String),
}

impl From<Stop> for Outcome {
    fn from(s: Stop) -> Outcome {
        match s {
            Stop::Assert(id) => Outcome::AssertFailed(id as usize),
            Stop::Infeasible => Outcome::CandidateInfeasible,
            Stop::Exhausted(l) => Outcome::ResourceExhausted(l),
            Stop::Internal(m) => Outcome::InternalError(m),
        }
    }
}

/// Handle to a compiled function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FuncRef(FnId);

struct Decomp {
    trans: FnId,
    interp_s: FnId,
    /// Abstraction function and the position of its state argument.
    gamma: Option<(FnId, usize)>,
}

/// An expanded program prepared for repeated evaluation.
pub struct Compiled {
    layout: Layout,
    fns: Vec<FnCode>,
    fn_ids: HashMap<String, FnId>,
    control: Vec<crate::expander::ControlPoint>,
    asserts: Vec<Span>,
    decomp: Option<Decomp>,
    interp_d: Option<FnId>,
    /// Per function, when its results are memoized: the functions it can
    /// reach. Only control-free functions over harness input types qualify.
    memo: Vec<Option<Box<[FnId]>>>,
    id: u64,
}

impl Compiled {
    /// With `shape`, deferred calls inside the synthesized function produce
    /// placeholders and interpreter applications consume them.
    pub fn new(prog: &ExpandedProgram, shape: Option<&SpecShape>) -> Result<Compiled> {
        let layout = Layout::new(&prog.program);
        let fn_ids = ir::function_ids(&prog.program);
        let id = |name: &str| fn_ids.get(name).copied().ok_or_else(|| Error::Eval(format!("no function `{name}`")));
        let (decomp, interp_d) = match shape {
            None => (None, None),
            Some(s) => {
                let gamma = match &s.gamma_param {
                    Some(g) => Some((id(&g.abstraction)?, g.state_position)),
                    None => None,
                };
                let d = Decomp { trans: id(&s.trans)?, interp_s: id(&s.interp_s)?, gamma };
                (Some(d), Some(id(&s.interp_d)?))
            }
        };
        let mut asserts = Vec::new();
        let mut fns = Vec::new();
        for f in prog.program.functions.iter().filter(|f| f.kind == crate::surface::FuncKind::Standard) {
            let decompose = decomp.as_ref().is_some_and(|d| fn_ids[&f.name] == d.trans);
            let mut c = Compiler::new(&layout, &prog.control, &fn_ids, interp_d, decompose, &mut asserts);
            let params: Vec<&str> = f.params.iter().map(|p| p.name.as_str()).collect();
            let (body, frame) =
                c.function(&params, &f.body).map_err(|m| Error::Eval(format!("in `{}`: {m}", f.name)))?;
            fns.push(FnCode { name: f.name.clone(), arity: params.len() as u32, frame, body });
        }
        let trans = shape.and_then(|s| prog.program.function(&s.trans));
        let memo = memo_candidates(&prog.program, trans, &fn_ids, &fns);
        static NEXT_ID: AtomicU64 = AtomicU64::new(1);
        let id = NEXT_ID.fetch_add(1, Ordering::Relaxed);
        Ok(Compiled { layout, fns, fn_ids, control: prog.control.clone(), asserts, decomp, interp_d, memo, id })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn function(&self, name: &str) -> Option<FuncRef> {
        self.fn_ids.get(name).map(|&i| FuncRef(i))
    }

    pub fn arity(&self, f: FuncRef) -> usize {
        self.fns[f.0 as usize].arity as usize
    }

    /// Source position of an assertion reported by [`Outcome::AssertFailed`].
    pub fn assertion_span(&self, id: usize) -> Option<Span> {
        self.asserts.get(id).copied()
    }

    pub fn show(&self, v: &Value) -> String {
        self.layout.show(v)
    }

    pub fn decomposition_active(&self) -> bool {
        self.decomp.is_some()
    }

    /// Runs `f` to completion; any stop other than a normal return becomes the
    /// error outcome.
    pub fn call<C: ControlSource + ?Sized>(
        &self,
        f: FuncRef,
        args: &[Value],
        ctrl: &mut C,
        limits: &EvalLimits,
        stats: &mut EvalStats,
    ) -> std::result::Result<Value, Outcome> {
        let mut scratch = Scratch::default();
        scratch.call(self, f, args, ctrl, limits, stats)
    }

    /// Evaluates an expanded expression with `env` bound in order.
    pub fn eval_expr<C: ControlSource + ?Sized>(
        &self,
        env: &[(&str, Value)],
        e: &Expr,
        ctrl: &mut C,
        limits: &EvalLimits,
    ) -> std::result::Result<Value, Outcome> {
        let mut asserts = self.asserts.clone();
        let mut c = Compiler::new(
            &self.layout,
            &self.control,
            &self.fn_ids,
            self.interp_d,
            self.decomp.is_some(),
            &mut asserts,
        );
        let names: Vec<&str> = env.iter().map(|(n, _)| *n).collect();
        let (body, frame) = c.function(&names, e).map_err(Outcome::InternalError)?;
        let mut scratch = Scratch::default();
        scratch.depth.resize(self.fns.len(), 0);
        scratch.stack.extend(env.iter().map(|(_, v)| v.clone()));
        scratch.stack.resize(frame as usize, Value::Unit);
        let mut stats = EvalStats::default();
        let mut m = Machine {
            code: self,
            s: &mut scratch,
            ctrl,
            stats: &mut stats,
            bp: 0,
            steps: 0,
            limits: *limits,
            frames: 0,
            peak: 0,
        };
        m.eval(&body).map_err(Outcome::from)
    }
}

fn memo_candidates(
    prog: &crate::surface::Program,
    trans: Option<&crate::surface::FuncDecl>,
    ids: &HashMap<String, FnId>,
    fns: &[FnCode],
) -> Vec<Option<Box<[FnId]>>> {
    use crate::surface::FuncKind;
    let inputs: Vec<&str> = prog
        .functions
        .iter()
        .filter(|f| f.harness)
        .flat_map(|f| f.params.iter().filter_map(|p| p.ty.adt_name()))
        .collect();
    let mut out = vec![None; fns.len()];
    // Placeholders nest only in values the synthesized function builds; input
    // values holding one are not pure keys.
    if trans.is_some_and(|t| builds_any(prog, &t.body, &inputs)) {
        return out;
    }
    for f in prog.functions.iter().filter(|f| f.kind == FuncKind::Standard) {
        if f.params.iter().any(|p| p.ty.adt_name().is_some_and(|n| inputs.contains(&n))) {
            let id = ids[&f.name];
            out[id as usize] = ir::control_free_closure(fns, id).map(Vec::into_boxed_slice);
        }
    }
    out
}

fn builds_any(prog: &crate::surface::Program, e: &Expr, adts: &[&str]) -> bool {
    if let crate::surface::ExprKind::New { variant, .. } = &e.kind {
        if prog.variant(variant).is_none_or(|(a, _)| adts.contains(&a.name.as_str())) {
            return true;
        }
    }
    let mut found = false;
    e.for_each_child(|c| found = found || builds_any(prog, c, adts));
    found
}

/// Reusable evaluation buffers.
#[derive(Default)]
pub struct Scratch {
    stack: Vec<Value>,
    depth: Vec<u32>,
    memo: Memo,
}

/// Results of pure functions over input values. Keys compare shared values
/// by address; the stored arguments keep those addresses live.
#[derive(Default)]
struct Memo {
    owner: u64,
    table: FxHashMap<Box<[KeyAtom]>, MemoEntry>,
    key: Vec<KeyAtom>,
}

struct MemoEntry {
    _args: Box<[Value]>,
    result: Value,
    steps: u64,
    /// Call nesting the evaluation reached, this call included.
    height: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum KeyAtom {
    Int(i64),
    Bit(bool),
    Unit,
    Ptr(usize),
}

const MEMO_CAPACITY: usize = 1 << 18;

/// Writes the key of `f` applied to `args` into `out`; `false` when an
/// argument is a placeholder.
fn memo_key(f: FnId, args: &[Value], out: &mut Vec<KeyAtom>) -> bool {
    out.clear();
    out.push(KeyAtom::Int(f as i64));
    for v in args {
        out.push(match v {
            Value::Int(n) => KeyAtom::Int(*n),
            Value::Bit(b) => KeyAtom::Bit(*b),
            Value::Unit => KeyAtom::Unit,
            Value::Rec(r) => KeyAtom::Ptr(Rc::as_ptr(r) as usize),
            Value::Arr(a) => KeyAtom::Ptr(Rc::as_ptr(a) as *const u8 as usize),
            Value::Boxed(_) => return false,
        });
    }
    true
}

impl Scratch {
    pub fn call<C: ControlSource + ?Sized>(
        &mut self,
        code: &Compiled,
        f: FuncRef,
        args: &[Value],
        ctrl: &mut C,
        limits: &EvalLimits,
        stats: &mut EvalStats,
    ) -> std::result::Result<Value, Outcome> {
        if args.len() != code.arity(f) {
            return Err(Outcome::InternalError(format!(
                "`{}` takes {} arguments",
                code.fns[f.0 as usize].name,
                code.arity(f)
            )));
        }
        self.stack.clear();
        self.depth.clear();
        self.depth.resize(code.fns.len(), 0);
        self.stack.extend_from_slice(args);
        let mut m = Machine { code, s: self, ctrl, stats, bp: 0, steps: 0, limits: *limits, frames: 0, peak: 0 };
        m.enter(f.0, 0).map_err(Outcome::from)
    }

    /// Like [`Scratch::call`], also reporting the steps taken and the call
    /// nesting reached. Two calls with equal results and profiles affect an
    /// enclosing evaluation identically.
    pub fn profile<C: ControlSource + ?Sized>(
        &mut self,
        code: &Compiled,
        f: FuncRef,
        args: &[Value],
        ctrl: &mut C,
        limits: &EvalLimits,
    ) -> std::result::Result<(Value, u64, u32), Outcome> {
        self.stack.clear();
        self.depth.clear();
        self.depth.resize(code.fns.len(), 0);
        self.stack.extend_from_slice(args);
        let mut stats = EvalStats::default();
        let mut m =
            Machine { code, s: self, ctrl, stats: &mut stats, bp: 0, steps: 0, limits: *limits, frames: 0, peak: 0 };
        let v = m.enter(f.0, 0).map_err(Outcome::from)?;
        Ok((v, m.steps, m.peak))
    }

    /// Runs a harness: its assertions decide the outcome.
    pub fn run<C: ControlSource + ?Sized>(
        &mut self,
        code: &Compiled,
        harness: FuncRef,
        inputs: &[Value],
        ctrl: &mut C,
        limits: &EvalLimits,
        stats: &mut EvalStats,
    ) -> Outcome {
        match self.call(code, harness, inputs, ctrl, limits, stats) {
            Ok(_) => Outcome::Pass,
            Err(o) => o,
        }
    }
}

struct Machine<'a, C: ControlSource + ?Sized> {
    code: &'a Compiled,
    s: &'a mut Scratch,
    ctrl: &'a mut C,
    stats: &'a mut EvalStats,
    bp: usize,
    steps: u64,
    limits: EvalLimits,
    frames: u32,
    peak: u32,
}

type Ev<T> = std::result::Result<T, Stop>;

fn internal<T>(msg: impl Into<String>) -> Ev<T> {
    Err(Stop::Internal(msg.into()))
}

impl<C: ControlSource + ?Sized> Machine<'_, C> {
    /// Calls `f` with its arguments already pushed at `base`.
    fn enter(&mut self, f: FnId, base: usize) -> Ev<Value> {
        let code: &Compiled = self.code;
        match &code.memo[f as usize] {
            Some(closure) => self.enter_memo(f, closure, base),
            None => self.enter_raw(f, base),
        }
    }

    fn enter_raw(&mut self, f: FnId, base: usize) -> Ev<Value> {
        let code: &Compiled = self.code;
        let func = &code.fns[f as usize];
        self.stats.calls += 1;
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(Stop::Exhausted(Limit::Steps));
        }
        let d = self.s.depth[f as usize];
        if d >= self.limits.max_depth {
            return Err(Stop::Exhausted(Limit::Depth));
        }
        if d > 0 && code.decomp.as_ref().is_some_and(|x| x.trans == f) {
            self.stats.trans_reentries += 1;
        }
        self.s.depth[f as usize] = d + 1;
        self.frames += 1;
        self.peak = self.peak.max(self.frames);
        self.s.stack.resize(base + func.frame as usize, Value::Unit);
        let saved = std::mem::replace(&mut self.bp, base);
        let r = self.eval(&func.body);
        self.bp = saved;
        self.frames -= 1;
        self.s.stack.truncate(base);
        self.s.depth[f as usize] = d;
        r
    }

    fn call_values(&mut self, f: FnId, args: &[Value]) -> Ev<Value> {
        let base = self.s.stack.len();
        self.s.stack.extend_from_slice(args);
        self.enter(f, base)
    }

    fn push_args(&mut self, args: &[Node]) -> Ev<usize> {
        let base = self.s.stack.len();
        for a in args {
            let v = self.eval(a)?;
            self.s.stack.push(v);
        }
        Ok(base)
    }

    fn list(&mut self, es: &[Node]) -> Ev<Vec<Value>> {
        es.iter().map(|e| self.eval(e)).collect()
    }

    /// Evaluates the deferred call a placeholder stands for. Decomposition
    /// stays active inside it.
    fn force(&mut self, args: &[Value]) -> Ev<Value> {
        let Some(d) = &self.code.decomp else { return internal("placeholder without decomposition") };
        self.stats.forced += 1;
        self.call_values(d.trans, args)
    }

    fn deep_force(&mut self, v: Value) -> Ev<Value> {
        match v {
            Value::Boxed(a) => {
                let v = self.force(&a)?;
                self.deep_force(v)
            }
            Value::Rec(r) if r.fields.iter().any(Value::contains_boxed) => {
                let fields = r.fields.iter().map(|f| self.deep_force(f.clone())).collect::<Ev<Vec<_>>>()?;
                Ok(Value::record(r.tag, fields))
            }
            Value::Arr(a) if a.iter().any(Value::contains_boxed) => {
                let items = a.iter().map(|f| self.deep_force(f.clone())).collect::<Ev<Vec<_>>>()?;
                Ok(Value::Arr(items.into()))
            }
            v => Ok(v),
        }
    }

    fn equal(&mut self, a: Value, b: Value) -> Ev<bool> {
        if a.contains_boxed() || b.contains_boxed() {
            let a = self.deep_force(a)?;
            let b = self.deep_force(b)?;
            return Ok(values_equal(&a, &b));
        }
        Ok(values_equal(&a, &b))
    }

    fn call_interp_d(&mut self, args: &[Node]) -> Ev<Value> {
        let code: &Compiled = self.code;
        let base = self.push_args(args)?;
        let interp_d = code.interp_d.expect("compiled only with a shape");
        if let (Some(d), Some(Value::Boxed(b))) = (&code.decomp, self.s.stack.get(base)) {
            let b = b.clone();
            let rewrite = match d.gamma {
                None => true,
                Some((abs, pos)) => {
                    let Some(state) = self.s.stack.get(base + 1 + pos).cloned() else {
                        return internal("interpreter call lacks the abstracted state");
                    };
                    let Some(g) = b.get(1).cloned() else { return internal("placeholder lacks its context") };
                    let abstracted = self.call_values(abs, &[state])?;
                    self.equal(g, abstracted)?
                }
            };
            if rewrite {
                self.stats.rewrites += 1;
                self.s.stack[base] = b[0].clone();
                return self.enter(d.interp_s, base);
            }
            let v = self.force(&b)?;
            self.s.stack[base] = v;
        }
        self.enter(interp_d, base)
    }

    /// Like `enter_raw`, reusing an earlier result for the same arguments. A
    /// result is reused only where replaying the call could not hit the depth
    /// limit; the recorded step count keeps the step limit exact.
    fn enter_memo(&mut self, f: FnId, closure: &[FnId], base: usize) -> Ev<Value> {
        let code: &Compiled = self.code;
        // Arguments straight from the harness are fresh inputs and never recur.
        if self.frames < 2 {
            return self.enter_raw(f, base);
        }
        let memo = &mut self.s.memo;
        if !memo_key(f, &self.s.stack[base..], &mut memo.key) {
            return self.enter_raw(f, base);
        }
        if memo.owner != code.id {
            memo.table.clear();
            memo.owner = code.id;
        }
        if let Some(e) = memo.table.get(memo.key.as_slice()) {
            let depth = &self.s.depth;
            if closure.iter().all(|&g| depth[g as usize] + e.height <= self.limits.max_depth) {
                self.steps += e.steps;
                self.peak = self.peak.max(self.frames + e.height);
                if self.steps > self.limits.max_steps {
                    return Err(Stop::Exhausted(Limit::Steps));
                }
                let r = e.result.clone();
                self.s.stack.truncate(base);
                return Ok(r);
            }
        }
        let key: Box<[KeyAtom]> = self.s.memo.key.as_slice().into();
        let args: Box<[Value]> = self.s.stack[base..].into();
        let (steps, peak) = (self.steps, std::mem::replace(&mut self.peak, self.frames));
        let r = self.enter_raw(f, base);
        let height = self.peak - self.frames;
        self.peak = self.peak.max(peak);
        let r = r?;
        if self.s.memo.table.len() >= MEMO_CAPACITY {
            self.s.memo.table.clear();
        }
        let entry = MemoEntry { _args: args, result: r.clone(), steps: self.steps - steps, height };
        self.s.memo.table.insert(key, entry);
        Ok(r)
    }

    fn read(&mut self, id: u32) -> Ev<i64> {
        match self.ctrl.read(id as ControlId) {
            Some(v) => Ok(v),
            None => internal(format!("control point {id} unassigned")),
        }
    }

    fn bit(&mut self, n: &Node) -> Ev<bool> {
        match self.eval(n)? {
            Value::Bit(b) => Ok(b),
            v => internal(format!("expected a bit, got {}", self.code.show(&v))),
        }
    }

    fn int(&mut self, n: &Node) -> Ev<i64> {
        match self.eval(n)? {
            Value::Int(i) => Ok(i),
            v => internal(format!("expected an int, got {}", self.code.show(&v))),
        }
    }

    fn record(&mut self, n: &Node) -> Ev<Rc<Record>> {
        match self.eval(n)? {
            Value::Rec(r) => Ok(r),
            Value::Boxed(a) => match self.force(&a)? {
                Value::Rec(r) => Ok(r),
                _ => internal("placeholder forced to a non-record"),
            },
            v => internal(format!("expected a record, got {}", self.code.show(&v))),
        }
    }

    fn eval(&mut self, n: &Node) -> Ev<Value> {
        let code: &Compiled = self.code;
        match n {
            Node::Local(s) => Ok(self.s.stack[self.bp + *s as usize].clone()),
            Node::Int(i) => Ok(Value::Int(*i)),
            Node::Bit(b) => Ok(Value::Bit(*b)),
            Node::Unit => Ok(Value::Unit),
            Node::Let(s, v, body) => {
                let x = self.eval(v)?;
                self.s.stack[self.bp + *s as usize] = x;
                self.eval(body)
            }
            Node::Seq(a, b) => {
                self.eval(a)?;
                self.eval(b)
            }
            Node::Call(f, args) => {
                let base = self.push_args(args)?;
                self.enter(*f, base)
            }
            Node::CallInterpD(args) => self.call_interp_d(args),
            Node::Deferred(args) => Ok(Value::Boxed(self.list(args)?.into())),
            Node::Switch(s, arms) => {
                let slot = self.bp + *s as usize;
                let mut v = self.s.stack[slot].clone();
                if let Value::Boxed(a) = &v {
                    v = self.force(&a.clone())?;
                    self.s.stack[slot] = v.clone();
                }
                let Value::Rec(r) = &v else { return internal("switch on a non-record") };
                match arms.get(code.layout.info(r.tag).pos as usize) {
                    Some(arm) => self.eval(arm),
                    None => internal(format!("no arm for {}", code.layout.info(r.tag).name)),
                }
            }
            Node::If(c, t, f) => {
                if self.bit(c)? {
                    self.eval(t)
                } else {
                    self.eval(f)
                }
            }
            Node::Field(x, sel) => {
                let r = self.record(x)?;
                let idx = match sel {
                    FieldSel::At(i) => Some(*i),
                    FieldSel::ByTag(t) => t.iter().find(|(tag, _)| *tag == r.tag).map(|&(_, i)| i),
                };
                match idx.and_then(|i| r.fields.get(i as usize)) {
                    Some(v) => Ok(v.clone()),
                    None => internal(format!("{} has no such field", code.layout.info(r.tag).name)),
                }
            }
            Node::New(tag, fs) => Ok(Value::record(*tag, self.list(fs)?)),
            Node::Array(es) => Ok(Value::Arr(self.list(es)?.into())),
            Node::Index(a, i) => {
                let Value::Arr(items) = self.eval(a)? else { return internal("index into a non-array") };
                let i = self.int(i)?;
                match usize::try_from(i).ok().and_then(|i| items.get(i)) {
                    Some(v) => Ok(v.clone()),
                    None => Err(Stop::Infeasible),
                }
            }
            Node::Bin(op, l, r) => self.binary(*op, l, r),
            Node::Not(x) => Ok(Value::Bit(!self.bit(x)?)),
            Node::Neg(x) => Ok(Value::Int(self.int(x)?.wrapping_neg())),
            Node::Assert(id, x) => {
                if self.bit(x)? {
                    Ok(Value::Unit)
                } else {
                    Err(Stop::Assert(*id))
                }
            }
            Node::Fail => Err(Stop::Infeasible),
            Node::Hole(k) => Ok(Value::Int(self.read(*k)?)),
            Node::Flag(k) => Ok(Value::Bit(self.read(*k)? != 0)),
            Node::Choose(k, arms) => {
                let i = self.read(*k)?;
                match usize::try_from(i).ok().and_then(|i| arms.get(i)) {
                    Some(arm) => self.eval(arm),
                    None => internal(format!("choice {k} has no arm {i}")),
                }
            }
        }
    }

    fn binary(&mut self, op: BinOp, l: &Node, r: &Node) -> Ev<Value> {
        use BinOp::*;
        Ok(Value::Bit(match op {
            And => self.bit(l)? && self.bit(r)?,
            Or => self.bit(l)? || self.bit(r)?,
            Eq | Ne => {
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                self.equal(a, b)? == (op == Eq)
            }
            Add | Sub | Mul => {
                let a = self.int(l)?;
                let b = self.int(r)?;
                return Ok(Value::Int(match op {
                    Add => a.wrapping_add(b),
                    Sub => a.wrapping_sub(b),
                    _ => a.wrapping_mul(b),
                }));
            }
            Lt | Le | Gt | Ge => {
                let a = self.int(l)?;
                let b = self.int(r)?;
                match op {
                    Lt => a < b,
                    Le => a <= b,
                    Gt => a > b,
                    _ => a >= b,
                }
            }
        }))
    }
}

/// One-shot evaluation of a harness. `sigma` must bind exactly the
/// parameters of one harness of `prog`.
pub fn evaluate_harness(
    prog: &ExpandedProgram,
    phi: &ControlAssignment,
    sigma: &InputBinding,
    limits: &EvalLimits,
    decomposition: Option<&SpecShape>,
) -> Outcome {
    let code = match Compiled::new(prog, decomposition) {
        Ok(c) => c,
        Err(e) => return Outcome::InternalError(e.to_string()),
    };
    let harness = prog
        .program
        .harnesses()
        .find(|h| h.params.len() == sigma.len() && h.params.iter().all(|p| sigma.contains_key(&p.name)));
    let Some(h) = harness else {
        return Outcome::InternalError("no harness takes exactly the bound inputs".into());
    };
    let inputs: Vec<Value> = h.params.iter().map(|p| sigma[&p.name].clone()).collect();
    let f = code.function(&h.name).expect("harnesses are standard functions");
    let mut phi = phi.clone();
    Scratch::default().run(&code, f, &inputs, &mut phi, limits, &mut EvalStats::default())
}

/// One-shot evaluation of an expanded expression.
pub fn eval_expr(
    prog: &ExpandedProgram,
    env: &[(&str, Value)],
    phi: &ControlAssignment,
    e: &Expr,
    limits: &EvalLimits,
    decomposition: Option<&SpecShape>,
) -> std::result::Result<Value, Outcome> {
    let code = Compiled::new(prog, decomposition).map_err(|e| Outcome::InternalError(e.to_string()))?;
    code.eval_expr(env, e, &mut phi.clone(), limits)
}
