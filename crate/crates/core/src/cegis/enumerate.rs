//! Depth-bounded enumeration of ADT values, depth-major then in declaration
//! order.

use std::collections::HashMap;
use std::rc::Rc;

use crate::evaluator::{Layout, Tag, Value};
use crate::surface::{Program, Type};

/// Values with their constructor depth, depth-major.
type Table = Rc<Vec<(Value, u32)>>;

/// Values of an ADT with depth exactly `depth`, decoded on demand. Entries
/// whose fields are all shallower than `depth - 1` duplicate a lower layer
/// and decode to `None`.
pub(crate) struct Layer {
    depth: u32,
    variants: Vec<(Tag, Vec<Table>, Vec<usize>)>,
    len: usize,
}

impl Layer {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn get(&self, mut i: usize) -> Option<Value> {
        for (tag, tables, shallow) in &self.variants {
            let n: usize = tables.iter().map(|t| t.len()).product();
            if i >= n {
                i -= n;
                continue;
            }
            let mut idx = vec![0; tables.len()];
            for k in (0..tables.len()).rev() {
                idx[k] = i % tables[k].len();
                i /= tables[k].len();
            }
            if self.depth > 1 && !idx.iter().zip(shallow).any(|(j, s)| j >= s) {
                return None;
            }
            let fields = idx.iter().zip(tables).map(|(&j, t)| t[j].0.clone()).collect();
            return Some(Value::record(*tag, fields));
        }
        None
    }

    /// Tag of the entry at `i` without building it.
    pub fn tag_at(&self, mut i: usize) -> Option<Tag> {
        for (tag, tables, _) in &self.variants {
            let n: usize = tables.iter().map(|t| t.len()).product();
            if i < n {
                return Some(*tag);
            }
            i -= n;
        }
        None
    }
}

pub struct Enumerator<'a> {
    prog: &'a Program,
    layout: &'a Layout,
    ints: Vec<i64>,
    memo: HashMap<(Type, u32), Table>,
}

impl<'a> Enumerator<'a> {
    pub fn new(prog: &'a Program, layout: &'a Layout, int_domain: (i64, i64)) -> Self {
        Enumerator { prog, layout, ints: (int_domain.0..=int_domain.1).collect(), memo: HashMap::new() }
    }

    /// All values of `t` with depth at most `depth`.
    pub fn values(&mut self, t: &Type, depth: u32) -> Result<Vec<Value>, String> {
        Ok(self.upto(t, depth)?.iter().map(|(v, _)| v.clone()).collect())
    }

    pub(crate) fn upto(&mut self, t: &Type, depth: u32) -> Result<Table, String> {
        let t = match t {
            Type::Record(r) => Type::adt(r.adt.clone()),
            t => t.clone(),
        };
        if let Some(x) = self.memo.get(&(t.clone(), depth)) {
            return Ok(x.clone());
        }
        let table: Vec<(Value, u32)> = match &t {
            Type::Int => self.ints.iter().map(|&n| (Value::Int(n), 0)).collect(),
            Type::Bit => vec![(Value::Bit(false), 0), (Value::Bit(true), 0)],
            Type::Unit => vec![(Value::Unit, 0)],
            Type::Adt(_) if depth == 0 => Vec::new(),
            Type::Adt(_) => {
                let mut v = self.upto(&t, depth - 1)?.as_ref().clone();
                let layer = self.layer(&t, depth)?;
                v.extend((0..layer.len()).filter_map(|i| layer.get(i)).map(|x| (x, depth)));
                v
            }
            other => return Err(format!("cannot enumerate values of type {other}")),
        };
        let table = Rc::new(table);
        self.memo.insert((t, depth), table.clone());
        Ok(table)
    }

    pub(crate) fn layer(&mut self, t: &Type, depth: u32) -> Result<Layer, String> {
        let Some(name) = t.adt_name() else { return Err(format!("{t} is not an ADT")) };
        let adt = self.prog.adt(name).ok_or_else(|| format!("unknown ADT {name}"))?;
        let mut variants = Vec::new();
        let mut len = 0;
        for v in &adt.variants {
            let mut tables = Vec::new();
            let mut shallow = Vec::new();
            for (_, ft) in &v.fields {
                tables.push(self.upto(ft, depth - 1)?);
                shallow.push(if ft.adt_name().is_some() && depth >= 2 {
                    self.upto(ft, depth - 2)?.len()
                } else {
                    usize::MAX
                });
            }
            len += tables.iter().map(|t| t.len()).product::<usize>();
            let tag = self.layout.tag(&v.name).expect("layout covers every variant");
            variants.push((tag, tables, shallow));
        }
        Ok(Layer { depth, variants, len })
    }
}

/// Sequence of one parameter's values at most `k` deep: a materialized prefix
/// followed by the layer of depth exactly `k`.
struct ParamSeq {
    prefix: Table,
    layer: Option<Layer>,
}

impl ParamSeq {
    fn len(&self) -> usize {
        self.prefix.len() + self.layer.as_ref().map_or(0, Layer::len)
    }

    fn get(&self, i: usize, k: u32) -> Option<(Value, u32)> {
        if i < self.prefix.len() {
            return Some(self.prefix[i].clone());
        }
        self.layer.as_ref()?.get(i - self.prefix.len()).map(|v| (v, k))
    }

    fn tag_at(&self, i: usize) -> Option<Tag> {
        if i < self.prefix.len() {
            return match &self.prefix[i].0 {
                Value::Rec(r) => Some(r.tag),
                _ => None,
            };
        }
        self.layer.as_ref()?.tag_at(i - self.prefix.len())
    }
}

/// Harness input tuples up to a depth, ordered by the maximal depth of the
/// tuple, then lexicographically with the first parameter most significant.
pub struct InputSpace {
    /// Per depth level, one sequence per parameter.
    levels: Vec<Vec<ParamSeq>>,
}

/// Restricts enumeration to tuples whose parameter `param` has root variant `tag`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RootFilter {
    pub param: usize,
    pub tag: Tag,
}

impl InputSpace {
    pub fn new(
        prog: &Program,
        layout: &Layout,
        params: &[Type],
        depth: u32,
        int_domain: (i64, i64),
    ) -> Result<InputSpace, String> {
        let mut en = Enumerator::new(prog, layout, int_domain);
        let mut levels = Vec::new();
        for k in 0..=depth {
            let mut seqs = Vec::new();
            for t in params {
                let seq = if t.adt_name().is_some() {
                    if k == 0 {
                        ParamSeq { prefix: Rc::new(Vec::new()), layer: None }
                    } else {
                        ParamSeq { prefix: en.upto(t, k - 1)?, layer: Some(en.layer(t, k)?) }
                    }
                } else {
                    ParamSeq { prefix: en.upto(t, 0)?, layer: None }
                };
                seqs.push(seq);
            }
            levels.push(seqs);
        }
        Ok(InputSpace { levels })
    }

    pub(crate) fn empty() -> InputSpace {
        InputSpace { levels: Vec::new() }
    }

    /// Visits tuples in order until `f` returns `false`. Returns whether the
    /// visit ran to completion.
    pub fn for_each(&self, filter: Option<RootFilter>, mut f: impl FnMut(&[Value]) -> bool) -> bool {
        let mut tuple: Vec<Value> = Vec::new();
        for (k, seqs) in self.levels.iter().enumerate() {
            let k = k as u32;
            let total: usize = seqs.iter().map(ParamSeq::len).product();
            let mut idx = vec![0usize; seqs.len()];
            'tuples: for _ in 0..total {
                // Advance the odometer after use; the last parameter varies fastest.
                let cur = idx.clone();
                for p in (0..seqs.len()).rev() {
                    idx[p] += 1;
                    if idx[p] < seqs[p].len() {
                        break;
                    }
                    idx[p] = 0;
                }
                if let Some(rf) = filter {
                    if seqs[rf.param].tag_at(cur[rf.param]) != Some(rf.tag) {
                        continue;
                    }
                }
                tuple.clear();
                let mut max = 0;
                for (p, &i) in cur.iter().enumerate() {
                    match seqs[p].get(i, k) {
                        Some((v, d)) => {
                            max = max.max(d);
                            tuple.push(v);
                        }
                        None => continue 'tuples,
                    }
                }
                if max == k && !f(&tuple) {
                    return false;
                }
            }
        }
        true
    }

    pub fn count(&self) -> usize {
        let mut n = 0;
        self.for_each(None, |_| {
            n += 1;
            true
        });
        n
    }
}
