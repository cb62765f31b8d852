//! Requirements Optimisation Problems: classification, exact solving and
//! a brute-force reference solver.
//!
//! Maximisation is canonical. The solver walks the Decision Set depth-first
//! (ids ascending, values in domain order) and prunes a branch as soon as a
//! pure constraint can no longer hold. Every tie is reported.

mod rdrp;

use std::fmt;

use thiserror::Error;

use crate::model::search::{full, Plan};
use crate::model::{
    validate_model, Domain, EvalError, Exogenous, Model, Network, SearchError, Specification,
    Value, DEFAULT_CAP,
};

pub use rdrp::{decode_selection, encode_rdrp, EncodeError, RDRP_OBJECTIVE};

/// Largest search space the brute-force oracle accepts.
pub const ORACLE_CAP: u128 = 1 << 16;

/// A model together with the exogenous values it is solved under.
#[derive(Debug, Clone, PartialEq)]
pub struct Rop {
    pub model: Model,
    pub exogenous: Exogenous,
}

impl Rop {
    pub fn new(model: Model, exogenous: Exogenous) -> Self {
        Rop { model, exogenous }
    }

    /// Solve under the model's initial exogenous values.
    pub fn from_model(model: Model) -> Self {
        let exogenous = model.initial_exogenous();
        Rop { model, exogenous }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableKind {
    Binary,
    Integer,
    ContinuousGrid,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DependKind {
    Linear,
    Nonlinear,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RopClass {
    pub variable_kind: VariableKind,
    pub depend_kind: DependKind,
}

impl fmt::Display for RopClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = match self.variable_kind {
            VariableKind::Binary => "binary",
            VariableKind::Integer => "integer",
            VariableKind::ContinuousGrid => "continuous-grid",
            VariableKind::Mixed => "mixed",
        };
        let d = match self.depend_kind {
            DependKind::Linear => "linear",
            DependKind::Nonlinear => "nonlinear",
            DependKind::General => "general",
        };
        write!(f, "{v} {d}")
    }
}

pub fn classify(rop: &Rop) -> RopClass {
    let model = &rop.model;
    let domains: Vec<&Domain> = model
        .decision_set
        .iter()
        .filter_map(|id| model.parameter(id).map(|p| &p.domain))
        .collect();
    let binary = |d: &Domain| matches!(d, Domain::Boolean | Domain::IntegerRange { lo: 0, hi: 1 });
    let grid = |d: &Domain| matches!(d, Domain::RealGrid { .. });
    let variable_kind = if domains.iter().all(|d| binary(d)) {
        VariableKind::Binary
    } else if domains.iter().all(|d| grid(d)) {
        VariableKind::ContinuousGrid
    } else if domains.iter().any(|d| grid(d)) {
        VariableKind::Mixed
    } else {
        VariableKind::Integer
    };
    let linear = model.depends.iter().filter(|d| d.form.is_linear()).count();
    let depend_kind = if linear == model.depends.len() {
        DependKind::Linear
    } else if linear == 0 {
        DependKind::Nonlinear
    } else {
        DependKind::General
    };
    RopClass {
        variable_kind,
        depend_kind,
    }
}

/// Every optimal Specification (canonical order) and the optimum reached.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolutions {
    pub optima: Vec<Specification>,
    /// The Decision Rule criterion's value at the optimum.
    pub objective: Value,
    /// Numeric reading of `objective` (rank for enumerated domains).
    pub objective_value: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no specification satisfies the constraints")]
    Infeasible,
    #[error("search space has {size} combinations, above the cap of {cap}")]
    TooLarge { size: u128, cap: u128 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid model:\n{0}")]
    Invalid(String),
}

impl From<SearchError> for SolveError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::TooLarge { size, cap } => SolveError::TooLarge { size, cap },
            SearchError::Eval(e) => SolveError::Eval(e),
        }
    }
}

fn check_valid(model: &Model) -> Result<(), SolveError> {
    let report = validate_model(model);
    if report.is_valid() {
        Ok(())
    } else {
        Err(SolveError::Invalid(report.to_string()))
    }
}

/// Env with exogenous values, fixed criteria and defaults of free
/// parameters outside the Decision Set.
fn seeded_env(
    net: &Network,
    model: &Model,
    exogenous: &Exogenous,
) -> Result<(Vec<Option<Value>>, Vec<usize>), SolveError> {
    let mut env = net.base_env(exogenous)?;
    let mut branch = Vec::new();
    for &slot in &net.free_params {
        let id = &net.slots[slot].id;
        if model.decision_set.contains(id) {
            branch.push(slot);
        } else {
            let p = model.parameter(id).expect("free parameter exists");
            let v = p
                .default
                .clone()
                .ok_or_else(|| EvalError::MissingValue(id.clone()))?;
            env[slot] = Some(v);
        }
    }
    Ok((env, branch))
}

pub fn solve_rop(rop: &Rop) -> Result<OptimalSolutions, SolveError> {
    solve_rop_with_cap(rop, DEFAULT_CAP)
}

pub fn solve_rop_with_cap(rop: &Rop, cap: u128) -> Result<OptimalSolutions, SolveError> {
    solve_filtered(rop, cap, &|_| true)
}

/// Optima among the feasible specifications that also pass `accept`.
pub(crate) fn solve_filtered(
    rop: &Rop,
    cap: u128,
    accept: &dyn Fn(&Specification) -> bool,
) -> Result<OptimalSolutions, SolveError> {
    let model = &rop.model;
    check_valid(model)?;
    let net = Network::compile(model)?;
    let rule = net.rule.expect("validated decision rule");
    let (mut env, branch) = seeded_env(&net, model, &rop.exogenous)?;
    let plan = Plan::new(&net, branch, cap)?;

    let mut best: Option<(f64, Value)> = None;
    let mut optima: Vec<Specification> = Vec::new();
    plan.run(&mut env, &mut |env| {
        let values = full(env);
        let score = net.objective(&values).ok_or_else(|| EvalError::WrongType {
            var: net.slots[rule].id.clone(),
            depend: "decision rule".into(),
            expected: "a number",
        })?;
        if let Some((b, _)) = &best {
            if score < *b {
                return Ok(());
            }
        }
        let spec = net.specification(&values);
        if !accept(&spec) {
            return Ok(());
        }
        match &best {
            Some((b, _)) if score == *b => optima.push(spec),
            _ => {
                best = Some((score, values[rule].clone()));
                optima = vec![spec];
            }
        }
        Ok(())
    })?;
    match best {
        None => Err(SolveError::Infeasible),
        Some((objective_value, objective)) => Ok(OptimalSolutions {
            optima,
            objective,
            objective_value,
        }),
    }
}

/// Reference solver: evaluates every assignment of the Decision Set with
/// no pruning. Limited to [`ORACLE_CAP`] combinations.
pub fn brute_force_oracle(rop: &Rop) -> Result<OptimalSolutions, SolveError> {
    let model = &rop.model;
    check_valid(model)?;
    let net = Network::compile(model)?;
    let rule = model.criterion(&model.decision_rule).expect("validated rule");

    let mut base = Specification::new();
    let mut axes: Vec<(String, Vec<Value>)> = Vec::new();
    for p in model.free_parameters() {
        if model.decision_set.contains(&p.id) {
            axes.push((p.id.clone(), p.domain.values()));
        } else if let Some(v) = &p.default {
            base.set(p.id.clone(), v.clone());
        }
    }
    let mut size: u128 = 1;
    for (_, vals) in &axes {
        size = size.saturating_mul(vals.len() as u128);
    }
    if size > ORACLE_CAP {
        return Err(SolveError::TooLarge {
            size,
            cap: ORACLE_CAP,
        });
    }

    let mut best: Option<(f64, Value)> = None;
    let mut optima = Vec::new();
    let mut digits = vec![0usize; axes.len()];
    for _ in 0..size {
        let mut spec = base.clone();
        for ((id, vals), &d) in axes.iter().zip(&digits) {
            spec.set(id.clone(), vals[d].clone());
        }
        let values = match net.evaluate(&spec, &rop.exogenous) {
            Ok(values) => Some(values),
            Err(EvalError::OutOfRange { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        if let Some(values) = values.filter(|v| net.satisfies_constraints(v)) {
            let instance = net.instance(&values);
            let v = instance.get(&rule.id).expect("rule in instance").clone();
            let score = rule.domain.rank(&v).expect("numeric rule");
            let full_spec = net.specification(&values);
            match &best {
                Some((b, _)) if score < *b => {}
                Some((b, _)) if score == *b => optima.push(full_spec),
                _ => {
                    best = Some((score, v));
                    optima = vec![full_spec];
                }
            }
        }
        // odometer, last axis fastest
        for k in (0..digits.len()).rev() {
            digits[k] += 1;
            if digits[k] < axes[k].1.len() {
                break;
            }
            digits[k] = 0;
        }
    }
    optima.sort_by(|a, b| a.canonical_cmp(b, model));
    match best {
        None => Err(SolveError::Infeasible),
        Some((objective_value, objective)) => Ok(OptimalSolutions {
            optima,
            objective,
            objective_value,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Comparator, Criterion, CriterionKind, Depend, DependForm, Parameter,
    };

    fn int(lo: i64, hi: i64) -> Domain {
        Domain::IntegerRange { lo, hi }
    }

    /// x, y in 0..3, x + y <= 4, objective = 2x + y.
    fn small() -> Model {
        Model {
            criteria: vec![Criterion::new("obj", int(0, 20), CriterionKind::Utility)],
            parameters: vec![Parameter::new("x", int(0, 3)), Parameter::new("y", int(0, 3))],
            depends: vec![
                Depend::constraint(
                    "cap",
                    DependForm::Linear {
                        terms: vec![("x".into(), 1.0), ("y".into(), 1.0)],
                        cmp: Comparator::Le,
                        bound: 4.0,
                    },
                ),
                Depend::function(
                    "f",
                    "obj",
                    DependForm::WeightedSum {
                        terms: vec![("x".into(), 2.0), ("y".into(), 1.0)],
                        constant: 0.0,
                    },
                ),
            ],
            decision_rule: "obj".into(),
            decision_set: ["x".to_string(), "y".to_string()].into(),
            ..Default::default()
        }
    }

    #[test]
    fn solves_small_integer_program() {
        let rop = Rop::from_model(small());
        let s = solve_rop(&rop).unwrap();
        assert_eq!(s.objective, Value::Int(7));
        assert_eq!(s.optima.len(), 1);
        assert_eq!(s.optima[0].get("x"), Some(&Value::Int(3)));
        assert_eq!(s.optima[0].get("y"), Some(&Value::Int(1)));
        assert_eq!(brute_force_oracle(&rop).unwrap(), s);
    }

    #[test]
    fn classify_integer_linear() {
        let c = classify(&Rop::from_model(small()));
        assert_eq!(c.variable_kind, VariableKind::Integer);
        assert_eq!(c.depend_kind, DependKind::Linear);
    }

    #[test]
    fn classify_mixed() {
        let mut m = small();
        m.parameters[1].domain = Domain::RealGrid {
            lo: 0.0,
            hi: 1.0,
            step: 0.5,
        };
        m.parameters[0].domain = Domain::Boolean;
        assert_eq!(classify(&Rop::from_model(m)).variable_kind, VariableKind::Mixed);
    }

    #[test]
    fn ties_are_all_reported() {
        let mut m = small();
        m.depends[1] = Depend::function(
            "f",
            "obj",
            DependForm::WeightedSum {
                terms: vec![("x".into(), 1.0), ("y".into(), 1.0)],
                constant: 0.0,
            },
        );
        let s = solve_rop(&Rop::from_model(m.clone())).unwrap();
        assert_eq!(s.objective_value, 4.0);
        // (1,3), (2,2), (3,1)
        assert_eq!(s.optima.len(), 3);
        assert_eq!(s.optima[0].get("x"), Some(&Value::Int(1)));
        assert_eq!(brute_force_oracle(&Rop::from_model(m)).unwrap(), s);
    }

    #[test]
    fn single_binary_identity() {
        let m = Model {
            criteria: vec![Criterion::new("u", int(0, 1), CriterionKind::Utility)],
            parameters: vec![Parameter::new("b", Domain::Boolean)],
            depends: vec![Depend::function("id", "u", DependForm::Formula(crate::model::BoolExpr::Var("b".into())))],
            decision_rule: "u".into(),
            decision_set: ["b".to_string()].into(),
            ..Default::default()
        };
        let s = brute_force_oracle(&Rop::from_model(m)).unwrap();
        assert_eq!(s.optima, vec![Specification::new().with("b", Value::Bool(true))]);
    }

    #[test]
    fn infeasible_is_reported() {
        let mut m = small();
        m.depends[0] = Depend::constraint(
            "cap",
            DependForm::Linear {
                terms: vec![("x".into(), 1.0)],
                cmp: Comparator::Ge,
                bound: 9.0,
            },
        );
        let rop = Rop::from_model(m);
        assert_eq!(solve_rop(&rop), Err(SolveError::Infeasible));
        assert_eq!(brute_force_oracle(&rop), Err(SolveError::Infeasible));
    }

    #[test]
    fn cap_is_enforced() {
        let rop = Rop::from_model(small());
        assert!(matches!(
            solve_rop_with_cap(&rop, 15),
            Err(SolveError::TooLarge { size: 16, cap: 15 })
        ));
    }
}
