//! Problem Space / Solution Space data model.
//!
//! Criteria span the Problem Space, Parameters the Solution Space. A
//! [`Model`] ties them together with Depend relations: functional ones form
//! an acyclic evaluation network (the Solve mapping from a Specification to
//! a Problem Instance), pure constraints decide feasibility.

mod depend;
mod network;
pub(crate) mod search;
mod validate;
mod value;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use depend::{BoolExpr, Comparator, Depend, DependForm};
pub use network::{EvalError, Network};
pub use search::{
    enumerate_specifications, enumerate_specifications_with_cap, SearchError, DEFAULT_CAP,
};
pub use validate::{validate_model, ValidationReport, Violation};
pub use value::{Domain, Value, ValueRange, REAL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriterionKind {
    Requirement,
    DomainKnowledge,
    Quality,
    Utility,
}

impl CriterionKind {
    pub fn keyword(self) -> &'static str {
        match self {
            CriterionKind::Requirement => "requirement",
            CriterionKind::DomainKnowledge => "domain-knowledge",
            CriterionKind::Quality => "quality",
            CriterionKind::Utility => "utility",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "requirement" => CriterionKind::Requirement,
            "domain-knowledge" => CriterionKind::DomainKnowledge,
            "quality" => CriterionKind::Quality,
            "utility" => CriterionKind::Utility,
            _ => return None,
        })
    }
}

/// Direction in which a criterion's values become more desirable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Preference {
    Higher,
    Lower,
    #[default]
    None,
}

impl Preference {
    pub fn keyword(self) -> &'static str {
        match self {
            Preference::Higher => "higher",
            Preference::Lower => "lower",
            Preference::None => "none",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "higher" => Preference::Higher,
            "lower" => Preference::Lower,
            "none" => Preference::None,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub id: String,
    pub domain: Domain,
    pub kind: CriterionKind,
    pub preference: Preference,
    /// Value for criteria that no Depend computes.
    pub fixed: Option<Value>,
}

impl Criterion {
    pub fn new(id: impl Into<String>, domain: Domain, kind: CriterionKind) -> Self {
        let preference = if kind == CriterionKind::Utility {
            Preference::Higher
        } else {
            Preference::None
        };
        Criterion {
            id: id.into(),
            domain,
            kind,
            preference,
            fixed: None,
        }
    }

    pub fn prefer(mut self, p: Preference) -> Self {
        self.preference = p;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub id: String,
    pub domain: Domain,
    pub default: Option<Value>,
}

impl Parameter {
    pub fn new(id: impl Into<String>, domain: Domain) -> Self {
        Parameter {
            id: id.into(),
            domain,
            default: None,
        }
    }

    pub fn with_default(mut self, v: Value) -> Self {
        self.default = Some(v);
        self
    }
}

/// A variable the adaptive system observes. Changes outside
/// `detectable` go unnoticed.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitoredVariable {
    pub id: String,
    pub domain: Domain,
    pub detectable: ValueRange,
    pub initial: Value,
}

/// A Change Scope variable the system does not monitor. It still feeds
/// Depends, so its changes affect the true Problem Instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeVariable {
    pub id: String,
    pub domain: Domain,
    pub initial: Value,
}

/// Which collection a variable id belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Criterion,
    Parameter,
    Monitored,
    Change,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Model {
    pub criteria: Vec<Criterion>,
    pub parameters: Vec<Parameter>,
    pub monitored: Vec<MonitoredVariable>,
    pub change_scope: Vec<ChangeVariable>,
    pub depends: Vec<Depend>,
    pub decision_rule: String,
    /// Iterated in id order, which is also the solver's branching order.
    pub decision_set: BTreeSet<String>,
}

impl Model {
    /// Look up any variable by id.
    pub fn variable(&self, id: &str) -> Option<(VarKind, &Domain)> {
        if let Some(c) = self.criteria.iter().find(|c| c.id == id) {
            return Some((VarKind::Criterion, &c.domain));
        }
        if let Some(p) = self.parameters.iter().find(|p| p.id == id) {
            return Some((VarKind::Parameter, &p.domain));
        }
        if let Some(m) = self.monitored.iter().find(|m| m.id == id) {
            return Some((VarKind::Monitored, &m.domain));
        }
        self.change_scope
            .iter()
            .find(|c| c.id == id)
            .map(|c| (VarKind::Change, &c.domain))
    }

    pub fn criterion(&self, id: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.id == id)
    }

    pub fn parameter(&self, id: &str) -> Option<&Parameter> {
        self.parameters.iter().find(|p| p.id == id)
    }

    pub fn monitored_variable(&self, id: &str) -> Option<&MonitoredVariable> {
        self.monitored.iter().find(|m| m.id == id)
    }

    /// Ids that are the output of some functional Depend.
    pub fn derived_ids(&self) -> Vec<&str> {
        self.depends
            .iter()
            .filter(|d| d.form.is_functional())
            .filter_map(|d| d.output.as_deref())
            .collect()
    }

    /// Parameters whose value is chosen rather than computed, sorted by id.
    pub fn free_parameters(&self) -> Vec<&Parameter> {
        let derived = self.derived_ids();
        let mut out: Vec<&Parameter> = self
            .parameters
            .iter()
            .filter(|p| !derived.contains(&p.id.as_str()))
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    /// Initial values of every exogenous (monitored and change-scope)
    /// variable.
    pub fn initial_exogenous(&self) -> Exogenous {
        self.monitored
            .iter()
            .map(|m| (m.id.clone(), m.initial.clone()))
            .chain(self.change_scope.iter().map(|c| (c.id.clone(), c.initial.clone())))
            .collect()
    }

    /// The Specification made of parameter defaults, if every free
    /// parameter has one.
    pub fn default_specification(&self) -> Option<Specification> {
        self.free_parameters()
            .into_iter()
            .map(|p| p.default.clone().map(|v| (p.id.clone(), v)))
            .collect::<Option<BTreeMap<_, _>>>()
            .map(Specification)
    }

    pub fn with_decision_rule(mut self, rule: impl Into<String>) -> Self {
        self.decision_rule = rule.into();
        self
    }

    /// Evaluate a Specification into the Problem Instance it realizes.
    /// Pure constraints are ignored; see [`Model::is_feasible`].
    pub fn evaluate(
        &self,
        spec: &Specification,
        exogenous: &Exogenous,
    ) -> Result<ProblemInstance, EvalError> {
        let net = Network::compile(self)?;
        let env = net.evaluate(spec, exogenous)?;
        Ok(net.instance(&env))
    }

    /// True iff every pure-constraint Depend holds on spec ∪ evaluated values
    /// and every computed value lies in its variable's domain.
    pub fn is_feasible(&self, spec: &Specification, exogenous: &Exogenous) -> Result<bool, EvalError> {
        let net = Network::compile(self)?;
        match net.evaluate(spec, exogenous) {
            Ok(env) => Ok(net.satisfies_constraints(&env)),
            Err(EvalError::OutOfRange { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    }
}

/// Values of monitored and change-scope variables.
pub type Exogenous = BTreeMap<String, Value>;

/// A point in the Solution Space: one value per parameter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Specification(pub BTreeMap<String, Value>);

impl Specification {
    pub fn new() -> Self {
        Specification(BTreeMap::new())
    }

    pub fn get(&self, id: &str) -> Option<&Value> {
        self.0.get(id)
    }

    pub fn set(&mut self, id: impl Into<String>, v: Value) {
        self.0.insert(id.into(), v);
    }

    pub fn with(mut self, id: impl Into<String>, v: Value) -> Self {
        self.set(id, v);
        self
    }

    /// Number of parameters on which the two specifications differ.
    pub fn distance(&self, other: &Specification) -> usize {
        let mut n = 0;
        for (k, v) in &self.0 {
            if other.0.get(k) != Some(v) {
                n += 1;
            }
        }
        n + other.0.keys().filter(|k| !self.0.contains_key(*k)).count()
    }

    /// Canonical comparison: parameter ids ascending, values in domain order.
    pub fn canonical_cmp(&self, other: &Specification, model: &Model) -> std::cmp::Ordering {
        for (k, v) in &self.0 {
            let Some(w) = other.0.get(k) else { continue };
            let d = model.parameter(k).map(|p| &p.domain);
            let (a, b) = match d {
                Some(d) => (d.rank(v), d.rank(w)),
                None => (None, None),
            };
            let ord = match (a, b) {
                (Some(a), Some(b)) => a.total_cmp(&b),
                _ => v.cmp(w),
            };
            if ord.is_ne() {
                return ord;
            }
        }
        std::cmp::Ordering::Equal
    }
}

impl fmt::Display for Specification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// A point in the Problem Space: one value per criterion.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProblemInstance(pub BTreeMap<String, Value>);

impl ProblemInstance {
    pub fn get(&self, id: &str) -> Option<&Value> {
        self.0.get(id)
    }
}

impl fmt::Display for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}
