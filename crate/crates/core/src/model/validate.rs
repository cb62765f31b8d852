use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::network::{EvalError, Network};
use super::{BoolExpr, DependForm, Domain, Model, Preference, VarKind};

/// One broken model invariant, naming the offending id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, subject: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            subject: subject.to_string(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Check every model invariant. Violations are data: an empty report
/// means the model is valid.
pub fn validate_model(model: &Model) -> ValidationReport {
    let mut r = ValidationReport::default();

    let mut seen = BTreeSet::new();
    let all_ids = model
        .criteria
        .iter()
        .map(|c| (&c.id, &c.domain))
        .chain(model.parameters.iter().map(|p| (&p.id, &p.domain)))
        .chain(model.monitored.iter().map(|m| (&m.id, &m.domain)))
        .chain(model.change_scope.iter().map(|c| (&c.id, &c.domain)));
    for (id, domain) in all_ids {
        if !seen.insert(id.as_str()) {
            r.push(id, "duplicate variable id");
        }
        if let Err(e) = domain.check() {
            r.push(id, e);
        }
    }

    for c in &model.criteria {
        if c.kind == super::CriterionKind::Utility && c.preference != Preference::Higher {
            r.push(&c.id, "utility criterion must prefer higher values");
        }
        if let Some(v) = &c.fixed {
            if !c.domain.admits(v) {
                r.push(&c.id, format!("fixed value {v} outside domain {}", c.domain));
            }
        }
    }
    for p in &model.parameters {
        if let Some(v) = &p.default {
            if !p.domain.contains(v) {
                r.push(&p.id, format!("default {v} outside domain {}", p.domain));
            }
        }
    }
    for m in &model.monitored {
        if m.detectable.is_empty() || !m.detectable.meets(&m.domain) {
            r.push(&m.id, "detectable range is empty");
        } else if !m.detectable.within(&m.domain) {
            r.push(&m.id, format!("detectable range {} exceeds domain {}", m.detectable, m.domain));
        }
        if !m.domain.contains(&m.initial) {
            r.push(&m.id, format!("initial value {} outside domain", m.initial));
        }
    }
    for c in &model.change_scope {
        if !c.domain.contains(&c.initial) {
            r.push(&c.id, format!("initial value {} outside domain", c.initial));
        }
    }

    let mut depend_ids = BTreeSet::new();
    let mut outputs: BTreeMap<&str, usize> = BTreeMap::new();
    for d in &model.depends {
        if !depend_ids.insert(d.id.as_str()) {
            r.push(&d.id, "duplicate depend id");
        }
        match (&d.output, d.form.is_functional()) {
            (None, true) => r.push(&d.id, format!("functional form `{}` needs an output", d.form.keyword())),
            (Some(_), false) => r.push(
                &d.id,
                format!("constraint form `{}` cannot have an output", d.form.keyword()),
            ),
            (Some(o), true) => match model.variable(o) {
                None => r.push(&d.id, format!("unknown output variable `{o}`")),
                Some((VarKind::Monitored | VarKind::Change, _)) => {
                    r.push(&d.id, format!("output `{o}` is exogenous"))
                }
                Some(_) => *outputs.entry(o.as_str()).or_default() += 1,
            },
            (None, false) => {}
        }
        for input in d.inputs() {
            if model.variable(input).is_none() {
                r.push(&d.id, format!("unknown input variable `{input}`"));
            }
        }
        check_form_types(model, &d.id, &d.form, d.output.as_deref(), &mut r);
    }

    for (o, n) in &outputs {
        if *n > 1 {
            r.push(o, format!("output of {n} functional depends"));
        }
    }
    for c in &model.criteria {
        let computed = outputs.contains_key(c.id.as_str());
        match (computed, c.fixed.is_some()) {
            (false, false) => r.push(&c.id, "criterion is neither fixed nor computed by a depend"),
            (true, true) => r.push(&c.id, "criterion is both fixed and computed"),
            _ => {}
        }
    }

    // acyclicity is only meaningful once references resolve
    let references_ok = r.violations.iter().all(|v| !v.message.starts_with("unknown"));
    if references_ok {
        if let Err(EvalError::Cycle(ids)) = Network::compile(model) {
            r.push(&ids, "functional depends form a cycle");
        }
    }

    match model.criterion(&model.decision_rule) {
        None => r.push(&model.decision_rule, "decision rule is not a criterion"),
        Some(c) => {
            if c.preference != Preference::Higher {
                r.push(&c.id, "decision rule criterion must prefer higher values");
            }
            if !c.domain.is_numeric() && c.domain.size() == 0 {
                r.push(&c.id, "decision rule criterion has an empty domain");
            }
        }
    }
    for id in &model.decision_set {
        if model.parameter(id).is_none() {
            r.push(id, "decision set member is not a parameter");
        } else if outputs.contains_key(id.as_str()) {
            r.push(id, "decision set member is computed by a depend");
        }
    }
    for p in model.free_parameters() {
        if !model.decision_set.contains(&p.id) && p.default.is_none() {
            r.push(&p.id, "parameter outside the decision set needs a default");
        }
    }
    r
}

fn is_boolean(model: &Model, id: &str) -> bool {
    match model.variable(id) {
        Some((_, Domain::Boolean)) => true,
        Some((_, Domain::IntegerRange { lo, hi })) => *lo >= 0 && *hi <= 1,
        _ => false,
    }
}

fn check_expr(model: &Model, depend: &str, e: &BoolExpr, r: &mut ValidationReport) {
    match e {
        BoolExpr::Const(_) => {}
        BoolExpr::Var(v) => {
            if model.variable(v).is_some() && !is_boolean(model, v) {
                r.push(depend, format!("`{v}` is not boolean"));
            }
        }
        BoolExpr::Cmp { var, value, .. } => {
            if let Some((_, d)) = model.variable(var) {
                if !d.admits(value) && d.rank(value).is_none() {
                    r.push(depend, format!("literal {value} does not fit `{var}`"));
                }
            }
        }
        BoolExpr::Not(e) => check_expr(model, depend, e, r),
        BoolExpr::And(es) | BoolExpr::Or(es) => es.iter().for_each(|e| check_expr(model, depend, e, r)),
    }
}

fn check_form_types(
    model: &Model,
    id: &str,
    form: &DependForm,
    output: Option<&str>,
    r: &mut ValidationReport,
) {
    let numeric = |v: &str| model.variable(v).map(|(_, d)| d.is_numeric()).unwrap_or(true);
    match form {
        DependForm::Formula(e) => check_expr(model, id, e, r),
        DependForm::Linear { terms, .. } | DependForm::WeightedSum { terms, .. } => {
            for (v, c) in terms {
                if !c.is_finite() {
                    r.push(id, format!("coefficient of `{v}` is not finite"));
                }
            }
        }
        DependForm::Threshold { input, .. } => {
            if !numeric(input) {
                r.push(id, format!("`{input}` is not numeric"));
            }
        }
        DependForm::Cardinality { inputs, .. } => {
            for v in inputs {
                if model.variable(v).is_some() && !is_boolean(model, v) {
                    r.push(id, format!("`{v}` is not boolean"));
                }
            }
        }
        DependForm::Incompatible(a, b) => {
            for v in [a, b] {
                if model.variable(v).is_some() && !is_boolean(model, v) {
                    r.push(id, format!("`{v}` is not boolean"));
                }
            }
        }
        DependForm::Table { inputs, rows } => {
            let domains: Option<Vec<&Domain>> =
                inputs.iter().map(|v| model.variable(v).map(|(_, d)| d)).collect();
            let Some(domains) = domains else { return };
            let mut expected: u128 = 1;
            for d in &domains {
                expected = expected.saturating_mul(d.size());
            }
            for (key, out) in rows {
                if key.len() != inputs.len() {
                    r.push(id, "table row has the wrong arity");
                    return;
                }
                for (v, d) in key.iter().zip(&domains) {
                    if !d.contains(v) {
                        r.push(id, format!("table key value {v} outside input domain"));
                        return;
                    }
                }
                if let Some((_, od)) = output.and_then(|o| model.variable(o)) {
                    if !od.admits(out) {
                        r.push(id, format!("table value {out} outside output domain"));
                        return;
                    }
                }
            }
            if rows.len() as u128 != expected {
                r.push(
                    id,
                    format!("table is not total: {} of {expected} input tuples", rows.len()),
                );
            }
        }
    }
}
