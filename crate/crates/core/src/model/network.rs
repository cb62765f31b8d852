//! Compiled, index-based form of a model's Depend relations.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::{
    BoolExpr, Comparator, DependForm, Domain, Exogenous, Model, ProblemInstance, Specification,
    Value, VarKind,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("no value supplied for `{0}`")]
    MissingValue(String),
    #[error("value `{value}` is outside the domain of `{var}`")]
    NotInDomain { var: String, value: String },
    /// A functional Depend produced a value its output cannot hold. Search
    /// treats this as infeasibility.
    #[error("`{depend}` computes {value} for `{var}`, outside its domain")]
    OutOfRange {
        var: String,
        value: String,
        depend: String,
    },
    #[error("functional depends form a cycle through {0}")]
    Cycle(String),
    #[error("table `{0}` has no row for the current inputs")]
    TableMiss(String),
    #[error("`{var}` used as {expected} in `{depend}`")]
    WrongType {
        var: String,
        depend: String,
        expected: &'static str,
    },
    #[error("`{0}` is the output of more than one functional depend")]
    MultipleOutputs(String),
}

#[derive(Debug, Clone)]
pub(crate) struct Slot {
    pub id: String,
    pub kind: VarKind,
    pub domain: Domain,
}

#[derive(Debug, Clone)]
pub(crate) enum Expr {
    Const(bool),
    Var(usize),
    Cmp(usize, Comparator, Value),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

#[derive(Debug, Clone)]
pub(crate) enum Op {
    Formula(Expr),
    Linear(Vec<(usize, f64)>, Comparator, f64),
    Table(Vec<usize>, BTreeMap<Vec<Value>, Value>),
    Sum(Vec<(usize, f64)>, f64),
    Step(usize, f64),
    Card(Vec<usize>, Comparator, i64),
    Nand(usize, usize),
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub id: String,
    pub output: Option<usize>,
    pub inputs: Vec<usize>,
    pub op: Op,
}

/// An evaluation network compiled from a [`Model`]. Compile once, evaluate
/// many specifications.
#[derive(Debug, Clone)]
pub struct Network {
    pub(crate) slots: Vec<Slot>,
    pub(crate) index: HashMap<String, usize>,
    /// Functional nodes in topological order.
    pub(crate) functions: Vec<Node>,
    pub(crate) constraints: Vec<Node>,
    /// Free (non-derived) parameters sorted by id.
    pub(crate) free_params: Vec<usize>,
    pub(crate) criteria: Vec<usize>,
    pub(crate) fixed: Vec<(usize, Value)>,
    pub(crate) rule: Option<usize>,
}

pub(crate) type Env = Vec<Option<Value>>;

impl Network {
    pub fn compile(model: &Model) -> Result<Self, EvalError> {
        let mut slots = Vec::new();
        for c in &model.criteria {
            slots.push(Slot {
                id: c.id.clone(),
                kind: VarKind::Criterion,
                domain: c.domain.clone(),
            });
        }
        for p in &model.parameters {
            slots.push(Slot {
                id: p.id.clone(),
                kind: VarKind::Parameter,
                domain: p.domain.clone(),
            });
        }
        for m in &model.monitored {
            slots.push(Slot {
                id: m.id.clone(),
                kind: VarKind::Monitored,
                domain: m.domain.clone(),
            });
        }
        for c in &model.change_scope {
            slots.push(Slot {
                id: c.id.clone(),
                kind: VarKind::Change,
                domain: c.domain.clone(),
            });
        }
        let index: HashMap<String, usize> = slots
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), i))
            .collect();
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| EvalError::UnknownVariable(id.to_string()))
        };

        let mut functional = Vec::new();
        let mut constraints = Vec::new();
        for d in &model.depends {
            let inputs = d
                .inputs()
                .into_iter()
                .map(lookup)
                .collect::<Result<Vec<_>, _>>()?;
            let op = compile_form(&d.form, &lookup)?;
            let output = match (&d.output, d.form.is_functional()) {
                (Some(o), true) => Some(lookup(o)?),
                _ => None,
            };
            let node = Node {
                id: d.id.clone(),
                output,
                inputs,
                op,
            };
            if node.output.is_some() {
                functional.push(node);
            } else if !d.form.is_functional() {
                constraints.push(node);
            }
        }

        let functions = topo_order(functional, &slots)?;

        let derived: Vec<usize> = functions.iter().filter_map(|n| n.output).collect();
        let mut free_params: Vec<usize> = (0..slots.len())
            .filter(|i| slots[*i].kind == VarKind::Parameter && !derived.contains(i))
            .collect();
        free_params.sort_by(|a, b| slots[*a].id.cmp(&slots[*b].id));
        let criteria = (0..slots.len())
            .filter(|i| slots[*i].kind == VarKind::Criterion)
            .collect();
        let fixed = model
            .criteria
            .iter()
            .filter_map(|c| c.fixed.clone().map(|v| (index[&c.id], v)))
            .collect();
        let rule = index.get(&model.decision_rule).copied();

        Ok(Network {
            slots,
            index,
            functions,
            constraints,
            free_params,
            criteria,
            fixed,
            rule,
        })
    }

    pub fn slot(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub(crate) fn numeric(&self, slot: usize, v: &Value) -> Option<f64> {
        self.slots[slot].domain.rank(v)
    }

    /// Environment with exogenous values and fixed criteria filled in.
    pub(crate) fn base_env(&self, exogenous: &Exogenous) -> Result<Env, EvalError> {
        let mut env: Env = vec![None; self.slots.len()];
        for (i, s) in self.slots.iter().enumerate() {
            if matches!(s.kind, VarKind::Monitored | VarKind::Change) {
                let v = exogenous
                    .get(&s.id)
                    .ok_or_else(|| EvalError::MissingValue(s.id.clone()))?;
                if !s.domain.contains(v) {
                    return Err(EvalError::NotInDomain {
                        var: s.id.clone(),
                        value: v.to_string(),
                    });
                }
                env[i] = Some(v.clone());
            }
        }
        for (i, v) in &self.fixed {
            env[*i] = Some(v.clone());
        }
        Ok(env)
    }

    /// Full evaluation: every functional Depend computed in topological
    /// order. Returns one value per slot.
    pub(crate) fn evaluate(
        &self,
        spec: &Specification,
        exogenous: &Exogenous,
    ) -> Result<Vec<Value>, EvalError> {
        let mut env = self.base_env(exogenous)?;
        for &p in &self.free_params {
            let s = &self.slots[p];
            let v = spec
                .get(&s.id)
                .ok_or_else(|| EvalError::MissingValue(s.id.clone()))?;
            if !s.domain.contains(v) {
                return Err(EvalError::NotInDomain {
                    var: s.id.clone(),
                    value: v.to_string(),
                });
            }
            env[p] = Some(v.clone());
        }
        for node in &self.functions {
            let v = self.compute(node, &env)?;
            env[node.output.expect("functional node")] = Some(v);
        }
        env.into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| EvalError::MissingValue(self.slots[i].id.clone())))
            .collect()
    }

    pub(crate) fn instance(&self, env: &[Value]) -> ProblemInstance {
        ProblemInstance(
            self.criteria
                .iter()
                .map(|&i| (self.slots[i].id.clone(), env[i].clone()))
                .collect(),
        )
    }

    /// The Specification part (all parameters, derived ones included).
    pub(crate) fn specification(&self, env: &[Value]) -> Specification {
        Specification(
            self.slots
                .iter()
                .enumerate()
                .filter(|(_, s)| s.kind == VarKind::Parameter)
                .map(|(i, s)| (s.id.clone(), env[i].clone()))
                .collect(),
        )
    }

    pub(crate) fn satisfies_constraints(&self, env: &[Value]) -> bool {
        let env: Vec<Option<Value>> = env.iter().cloned().map(Some).collect();
        self.constraints
            .iter()
            .all(|c| self.check(c, &env).unwrap_or(false))
    }

    /// Objective reading of the decision-rule criterion.
    pub(crate) fn objective(&self, env: &[Value]) -> Option<f64> {
        let r = self.rule?;
        self.numeric(r, &env[r])
    }

    fn get<'e>(&self, env: &'e [Option<Value>], slot: usize) -> Result<&'e Value, EvalError> {
        env[slot]
            .as_ref()
            .ok_or_else(|| EvalError::MissingValue(self.slots[slot].id.clone()))
    }

    fn num(&self, env: &[Option<Value>], slot: usize, depend: &str) -> Result<f64, EvalError> {
        let v = self.get(env, slot)?;
        self.numeric(slot, v).ok_or_else(|| EvalError::WrongType {
            var: self.slots[slot].id.clone(),
            depend: depend.to_string(),
            expected: "a number",
        })
    }

    fn boolean(&self, env: &[Option<Value>], slot: usize, depend: &str) -> Result<bool, EvalError> {
        self.get(env, slot)?.as_bool().ok_or_else(|| EvalError::WrongType {
            var: self.slots[slot].id.clone(),
            depend: depend.to_string(),
            expected: "a boolean",
        })
    }

    fn expr(&self, e: &Expr, env: &[Option<Value>], depend: &str) -> Result<bool, EvalError> {
        Ok(match e {
            Expr::Const(b) => *b,
            Expr::Var(s) => self.boolean(env, *s, depend)?,
            Expr::Cmp(s, op, lit) => {
                let v = self.get(env, *s)?;
                match op {
                    Comparator::Eq if v == lit => true,
                    Comparator::Ne if v == lit => false,
                    _ => match (self.numeric(*s, v), self.slots[*s].domain.rank(lit)) {
                        (Some(a), Some(b)) => op.holds(a, b),
                        _ => matches!(op, Comparator::Ne),
                    },
                }
            }
            Expr::Not(e) => !self.expr(e, env, depend)?,
            Expr::And(es) => {
                for e in es {
                    if !self.expr(e, env, depend)? {
                        return Ok(false);
                    }
                }
                true
            }
            Expr::Or(es) => {
                for e in es {
                    if self.expr(e, env, depend)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }

    /// Compute a functional node's output from a (possibly partial) env
    /// whose inputs are present.
    pub(crate) fn compute(&self, node: &Node, env: &[Option<Value>]) -> Result<Value, EvalError> {
        let out = node.output.expect("functional node");
        let domain = &self.slots[out].domain;
        let coerce = |x: f64| {
            domain.coerce(x).ok_or_else(|| EvalError::OutOfRange {
                var: self.slots[out].id.clone(),
                value: format!("{x}"),
                depend: node.id.clone(),
            })
        };
        match &node.op {
            Op::Formula(e) => {
                let b = self.expr(e, env, &node.id)?;
                coerce(if b { 1.0 } else { 0.0 })
            }
            Op::Step(input, cut) => {
                let x = self.num(env, *input, &node.id)?;
                coerce(if Comparator::Ge.holds(x, *cut) { 1.0 } else { 0.0 })
            }
            Op::Sum(terms, constant) => {
                let mut acc = *constant;
                for (s, w) in terms {
                    acc += w * self.num(env, *s, &node.id)?;
                }
                coerce(acc)
            }
            Op::Table(inputs, rows) => {
                let key = inputs
                    .iter()
                    .map(|s| self.get(env, *s).cloned())
                    .collect::<Result<Vec<_>, _>>()?;
                let v = rows
                    .get(&key)
                    .ok_or_else(|| EvalError::TableMiss(node.id.clone()))?;
                if domain.admits(v) {
                    Ok(v.clone())
                } else {
                    Err(EvalError::OutOfRange {
                        var: self.slots[out].id.clone(),
                        value: v.to_string(),
                        depend: node.id.clone(),
                    })
                }
            }
            _ => unreachable!("constraint node has no output"),
        }
    }

    /// Evaluate a constraint node on a complete set of inputs.
    pub(crate) fn check(&self, node: &Node, env: &[Option<Value>]) -> Result<bool, EvalError> {
        Ok(match &node.op {
            Op::Linear(terms, cmp, bound) => {
                let mut acc = 0.0;
                for (s, c) in terms {
                    acc += c * self.num(env, *s, &node.id)?;
                }
                cmp.holds(acc, *bound)
            }
            Op::Card(inputs, cmp, bound) => {
                let mut n = 0i64;
                for s in inputs {
                    n += i64::from(self.boolean(env, *s, &node.id)?);
                }
                cmp.holds(n as f64, *bound as f64)
            }
            Op::Nand(a, b) => {
                !(self.boolean(env, *a, &node.id)? && self.boolean(env, *b, &node.id)?)
            }
            // functional nodes are never stored as constraints
            _ => true,
        })
    }

    /// Whether a constraint can still hold once the missing inputs are
    /// filled with values from their domains (interval reasoning).
    pub(crate) fn may_hold(&self, node: &Node, env: &[Option<Value>]) -> bool {
        let range = |s: usize| -> Option<(f64, f64)> {
            match &env[s] {
                Some(v) => self.numeric(s, v).map(|x| (x, x)),
                None => Some(self.slots[s].domain.bounds()),
            }
        };
        match &node.op {
            Op::Linear(terms, cmp, bound) => {
                let (mut lo, mut hi) = (0.0, 0.0);
                for (s, c) in terms {
                    let Some((a, b)) = range(*s) else { return true };
                    if *c >= 0.0 {
                        lo += c * a;
                        hi += c * b;
                    } else {
                        lo += c * b;
                        hi += c * a;
                    }
                }
                cmp.satisfiable(lo, hi, *bound)
            }
            Op::Card(inputs, cmp, bound) => {
                let (mut lo, mut hi) = (0.0, 0.0);
                for s in inputs {
                    match env[*s].as_ref().map(Value::as_bool) {
                        Some(Some(true)) => {
                            lo += 1.0;
                            hi += 1.0
                        }
                        Some(Some(false)) => {}
                        Some(None) => return true,
                        None => hi += 1.0,
                    }
                }
                cmp.satisfiable(lo, hi, *bound as f64)
            }
            Op::Nand(a, b) => !matches!(
                (
                    env[*a].as_ref().and_then(Value::as_bool),
                    env[*b].as_ref().and_then(Value::as_bool)
                ),
                (Some(true), Some(true))
            ),
            _ => true,
        }
    }
}

fn compile_expr(
    e: &BoolExpr,
    lookup: &dyn Fn(&str) -> Result<usize, EvalError>,
) -> Result<Expr, EvalError> {
    Ok(match e {
        BoolExpr::Const(b) => Expr::Const(*b),
        BoolExpr::Var(v) => Expr::Var(lookup(v)?),
        BoolExpr::Cmp { var, op, value } => Expr::Cmp(lookup(var)?, *op, value.clone()),
        BoolExpr::Not(e) => Expr::Not(Box::new(compile_expr(e, lookup)?)),
        BoolExpr::And(es) => Expr::And(
            es.iter()
                .map(|e| compile_expr(e, lookup))
                .collect::<Result<_, _>>()?,
        ),
        BoolExpr::Or(es) => Expr::Or(
            es.iter()
                .map(|e| compile_expr(e, lookup))
                .collect::<Result<_, _>>()?,
        ),
    })
}

fn compile_form(
    form: &DependForm,
    lookup: &dyn Fn(&str) -> Result<usize, EvalError>,
) -> Result<Op, EvalError> {
    let terms = |ts: &[(String, f64)]| -> Result<Vec<(usize, f64)>, EvalError> {
        ts.iter().map(|(v, c)| Ok((lookup(v)?, *c))).collect()
    };
    Ok(match form {
        DependForm::Formula(e) => Op::Formula(compile_expr(e, lookup)?),
        DependForm::Linear { terms: ts, cmp, bound } => Op::Linear(terms(ts)?, *cmp, *bound),
        DependForm::Table { inputs, rows } => Op::Table(
            inputs.iter().map(|v| lookup(v)).collect::<Result<_, _>>()?,
            rows.clone(),
        ),
        DependForm::WeightedSum { terms: ts, constant } => Op::Sum(terms(ts)?, *constant),
        DependForm::Threshold { input, cut } => Op::Step(lookup(input)?, *cut),
        DependForm::Cardinality { inputs, cmp, bound } => Op::Card(
            inputs.iter().map(|v| lookup(v)).collect::<Result<_, _>>()?,
            *cmp,
            *bound,
        ),
        DependForm::Incompatible(a, b) => Op::Nand(lookup(a)?, lookup(b)?),
    })
}

/// Kahn's algorithm, ties broken by declaration order.
fn topo_order(nodes: Vec<Node>, slots: &[Slot]) -> Result<Vec<Node>, EvalError> {
    let mut producer: HashMap<usize, usize> = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        let out = n.output.expect("functional node");
        if producer.insert(out, i).is_some() {
            return Err(EvalError::MultipleOutputs(slots[out].id.clone()));
        }
    }
    let mut indegree = vec![0usize; nodes.len()];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (i, n) in nodes.iter().enumerate() {
        for s in &n.inputs {
            if let Some(&p) = producer.get(s) {
                indegree[i] += 1;
                users[p].push(i);
            }
        }
    }
    let mut ready: Vec<usize> = (0..nodes.len()).filter(|i| indegree[*i] == 0).collect();
    ready.reverse();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(i) = ready.pop() {
        order.push(i);
        let mut released = Vec::new();
        for &u in &users[i] {
            indegree[u] -= 1;
            if indegree[u] == 0 {
                released.push(u);
            }
        }
        // keep the stack sorted so the lowest declaration index pops first
        ready.extend(released);
        ready.sort_unstable_by(|a, b| b.cmp(a));
    }
    if order.len() != nodes.len() {
        let stuck: Vec<&str> = (0..nodes.len())
            .filter(|i| !order.contains(i))
            .map(|i| nodes[i].id.as_str())
            .collect();
        return Err(EvalError::Cycle(stuck.join(", ")));
    }
    let mut slots_of: Vec<Option<Node>> = nodes.into_iter().map(Some).collect();
    Ok(order
        .into_iter()
        .map(|i| slots_of[i].take().expect("each node once"))
        .collect())
}
