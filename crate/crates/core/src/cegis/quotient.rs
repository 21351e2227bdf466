//! Verification inputs for a decomposed transformer, one per class of inputs
//! whose subterms agree on their source-interpreter results and profiles.

use std::collections::HashMap;

use log::debug;

use crate::evaluator::{Compiled, ControlSource, EvalLimits, Outcome, Scratch, Tag, Value};
use crate::indecomp::{subterm_semantics_suffice, SpecShape};
use crate::surface::{Program, Type};

use super::enumerate::Enumerator;

/// Depth, variant position and field indices: concrete enumeration order.
type SortKey = (u32, usize, Vec<usize>);

pub(crate) struct Quotient {
    /// Class representatives in enumeration order: each is the first input of
    /// its class.
    pub rows: Vec<(Tag, Value)>,
}

impl Quotient {
    /// `None` when subterm semantics do not determine harness outcomes.
    pub fn build(
        prog: &Program,
        code: &Compiled,
        shape: &SpecShape,
        depth: u32,
        int_domain: (i64, i64),
        limits: &EvalLimits,
    ) -> Result<Option<Quotient>, String> {
        if let Err(why) = subterm_semantics_suffice(prog, shape) {
            debug!("verifying every input: {why}");
            return Ok(None);
        }
        let interp = code.function(&shape.interp_s).ok_or("no source interpreter")?;
        let adt = prog.adt(&shape.source_adt).ok_or("unknown source ADT")?;
        let layout = code.layout();
        let mut en = Enumerator::new(prog, layout, int_domain);
        let mut rows: Vec<(SortKey, Tag, Value)> = Vec::new();
        if depth == 0 {
            return Ok(Some(Quotient { rows: Vec::new() }));
        }
        let src = Type::adt(adt.name.clone());
        let children = en.upto(&src, depth - 1)?;
        // Index, depth and value of the first subterm of each class.
        let mut reps: Vec<(usize, u32, Value)> = Vec::new();
        let mut seen: HashMap<String, ()> = HashMap::new();
        let mut scratch = Scratch::default();
        let mut none = NoControl;
        for (i, (v, d)) in children.iter().enumerate() {
            let key = match scratch.profile(code, interp, std::slice::from_ref(v), &mut none, limits) {
                Ok((r, steps, height)) => format!("{}|{steps}|{height}", code.show(&r)),
                // Semantics that depend on the candidate are no basis for classes.
                Err(Outcome::InternalError(why)) => {
                    debug!("verifying every input: {why}");
                    return Ok(None);
                }
                Err(_) => format!("#{i}"),
            };
            if seen.insert(key, ()).is_none() {
                reps.push((i, *d, v.clone()));
            }
        }
        for (pos, variant) in adt.variants.iter().enumerate() {
            let tag = layout.tag(&variant.name).expect("layout covers every variant");
            let mut options: Vec<Vec<(usize, u32, Value)>> = Vec::new();
            for (_, ft) in &variant.fields {
                if ft.adt_name() == Some(adt.name.as_str()) {
                    options.push(reps.clone());
                } else {
                    let all = en.upto(ft, depth - 1)?;
                    options.push(all.iter().enumerate().map(|(i, (v, d))| (i, *d, v.clone())).collect());
                }
            }
            let mut idx = vec![0usize; options.len()];
            if options.iter().any(Vec::is_empty) {
                continue;
            }
            loop {
                let picked: Vec<&(usize, u32, Value)> = idx.iter().zip(&options).map(|(&k, o)| &o[k]).collect();
                let d = 1 + picked.iter().map(|p| p.1).max().unwrap_or(0);
                let fields = picked.iter().map(|p| p.2.clone()).collect();
                rows.push(((d, pos, picked.iter().map(|p| p.0).collect()), tag, Value::record(tag, fields)));
                // Odometer, last field fastest.
                let mut k = options.len();
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < options[k].len() {
                        break;
                    }
                    idx[k] = 0;
                }
                if idx.iter().all(|&i| i == 0) {
                    break;
                }
            }
        }
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        debug!("{} input classes at depth {depth}", rows.len());
        Ok(Some(Quotient { rows: rows.into_iter().map(|(_, t, v)| (t, v)).collect() }))
    }
}

/// The source interpreter reads no control points.
struct NoControl;

impl ControlSource for NoControl {
    fn read(&mut self, _: crate::surface::ControlId) -> Option<i64> {
        None
    }
}
