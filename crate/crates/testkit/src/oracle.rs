//! Reference implementations that read the model's raw links and operators
//! and share no code with the engine.

use std::collections::BTreeMap;

use vdmn_core::model::{Comparator, GatewayGuard, LinkKind, Operator, ResultType};
use vdmn_core::Model;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    DivisionByZero(String),
    Unsupported(String),
}

/// Link order, source and guard of one analytical child.
type Edge<'m> = (u32, &'m str, Option<GatewayGuard>);

struct Graph<'m> {
    model: &'m Model,
    kids: BTreeMap<&'m str, Vec<Edge<'m>>>,
}

impl<'m> Graph<'m> {
    fn new(model: &'m Model) -> Self {
        let mut kids: BTreeMap<&str, Vec<Edge>> = BTreeMap::new();
        for l in model.links() {
            if l.kind != LinkKind::LogicalAllocation {
                kids.entry(&l.target).or_default().push((l.order, &l.source, l.guard));
            }
        }
        for v in kids.values_mut() {
            v.sort_by_key(|k| k.0);
        }
        Graph { model, kids }
    }

    fn children(&self, id: &str) -> Vec<&'m str> {
        self.kids.get(id).map(|v| v.iter().map(|k| k.1).collect()).unwrap_or_default()
    }

    fn is_reference(&self, id: &str) -> bool {
        let d = self.model.decomposition();
        d.tree_cuts.iter().any(|c| c.node == id) || d.sub_trees.iter().any(|s| s.boundary == id)
    }
}

fn given(model: &Model, values: &BTreeMap<String, f64>, id: &str) -> Option<f64> {
    values.get(id).copied().or_else(|| {
        model
            .indicator(id)
            .and_then(|i| i.content.results.get(&ResultType::Actual).copied())
    })
}

fn compare(c: Comparator, a: f64, b: f64) -> bool {
    match c {
        Comparator::Lt => a < b,
        Comparator::Le => a <= b,
        Comparator::Eq => a == b,
        Comparator::Ge => a >= b,
        Comparator::Gt => a > b,
        Comparator::Ne => a != b,
    }
}

/// Plain recursive evaluation of the root for actual values. `None` means
/// some required input has no value.
pub fn oracle_eval(model: &Model, values: &BTreeMap<String, f64>) -> Result<Option<f64>, OracleError> {
    fn go(g: &Graph, values: &BTreeMap<String, f64>, id: &str) -> Result<Option<f64>, OracleError> {
        let kids = g.children(id);
        let op = g.model.declared_operator(id);
        if kids.is_empty() || g.is_reference(id) || matches!(op, Some(Operator::Logical)) {
            return Ok(given(g.model, values, id));
        }
        if let Some(Operator::Gateway { selector }) = op {
            let Some(sel) = go(g, values, selector)? else { return Ok(None) };
            let entries = &g.kids[id];
            let chosen = entries
                .iter()
                .find(|e| matches!(e.2, Some(GatewayGuard::When { comparator, threshold }) if compare(comparator, sel, threshold)))
                .or_else(|| entries.iter().find(|e| e.2 == Some(GatewayGuard::Default)));
            return match chosen {
                Some(e) => go(g, values, e.1),
                None => Err(OracleError::Unsupported(format!("{id}: no guard holds"))),
            };
        }
        let mut xs = Vec::with_capacity(kids.len());
        for k in kids {
            match go(g, values, k)? {
                Some(v) => xs.push(v),
                None => return Ok(None),
            }
        }
        let v = match op {
            Some(Operator::Add) => xs.iter().sum(),
            Some(Operator::Subtract) => xs[1..].iter().fold(xs[0], |a, b| a - b),
            Some(Operator::Multiply) => xs.iter().product(),
            Some(Operator::Divide) => {
                let mut a = xs[0];
                for b in &xs[1..] {
                    if *b == 0.0 {
                        return Err(OracleError::DivisionByZero(id.to_string()));
                    }
                    a /= b;
                }
                a
            }
            Some(Operator::Function { name, params }) => match name.as_str() {
                "sum" => xs.iter().sum(),
                "avg" => xs.iter().sum::<f64>() / xs.len() as f64,
                "min" => xs.iter().copied().fold(f64::INFINITY, f64::min),
                "max" => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                "weighted_sum" => xs.iter().enumerate().map(|(i, x)| params[&format!("w{}", i + 1)] * x).sum(),
                "linear" => params["a"] * xs[0] + params["b"],
                other => return Err(OracleError::Unsupported(other.to_string())),
            },
            _ => return Err(OracleError::Unsupported(format!("{id}: no operator"))),
        };
        Ok(Some(v))
    }
    go(&Graph::new(model), values, model.root())
}

/// Root value and its exact partial derivatives with respect to every leaf,
/// by forward-mode chain rule. Supports `+ - * :` only.
pub fn chain_rule_gradient(model: &Model) -> Result<(f64, BTreeMap<String, f64>), OracleError> {
    type Grad = BTreeMap<String, f64>;
    fn axpy(acc: &mut Grad, a: f64, g: &Grad) {
        for (k, v) in g {
            *acc.entry(k.clone()).or_insert(0.0) += a * v;
        }
    }
    fn go(g: &Graph, id: &str) -> Result<(f64, Grad), OracleError> {
        let kids = g.children(id);
        if kids.is_empty() {
            let v = given(g.model, &BTreeMap::new(), id)
                .ok_or_else(|| OracleError::Unsupported(format!("{id}: no value")))?;
            return Ok((v, Grad::from([(id.to_string(), 1.0)])));
        }
        let xs = kids.iter().map(|k| go(g, k)).collect::<Result<Vec<_>, _>>()?;
        let (mut v, mut d) = xs[0].clone();
        for (x, dx) in &xs[1..] {
            match g.model.declared_operator(id) {
                Some(Operator::Add) => {
                    axpy(&mut d, 1.0, dx);
                    v += x;
                }
                Some(Operator::Subtract) => {
                    axpy(&mut d, -1.0, dx);
                    v -= x;
                }
                Some(Operator::Multiply) => {
                    let mut nd = Grad::new();
                    axpy(&mut nd, *x, &d);
                    axpy(&mut nd, v, dx);
                    d = nd;
                    v *= x;
                }
                Some(Operator::Divide) => {
                    if *x == 0.0 {
                        return Err(OracleError::DivisionByZero(id.to_string()));
                    }
                    // d(v/x) = dv/x - v dx / x^2
                    let mut nd = Grad::new();
                    axpy(&mut nd, 1.0 / x, &d);
                    axpy(&mut nd, -v / (x * x), dx);
                    d = nd;
                    v /= x;
                }
                other => return Err(OracleError::Unsupported(format!("{id}: {other:?}"))),
            }
        }
        Ok((v, d))
    }
    go(&Graph::new(model), model.root())
}

/// Number of nodes on the longest downward path from the root, found by
/// enumerating every path.
pub fn depth_by_paths(model: &Model) -> usize {
    fn go(g: &Graph, id: &str) -> usize {
        1 + g.children(id).iter().map(|c| go(g, c)).max().unwrap_or(0)
    }
    go(&Graph::new(model), model.root())
}
