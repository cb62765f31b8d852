use std::collections::BTreeMap;
use std::fmt;

use super::value::{Value, REAL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Comparator {
    Eq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
}

impl Comparator {
    /// Compare with the shared real tolerance; integers compare exactly
    /// because their difference is either 0 or at least 1.
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Eq => (lhs - rhs).abs() <= REAL_TOL,
            Comparator::Ne => (lhs - rhs).abs() > REAL_TOL,
            Comparator::Le => lhs <= rhs + REAL_TOL,
            Comparator::Ge => lhs >= rhs - REAL_TOL,
            Comparator::Lt => lhs < rhs - REAL_TOL,
            Comparator::Gt => lhs > rhs + REAL_TOL,
        }
    }

    /// Whether some value in `[min, max]` can satisfy `x cmp rhs`.
    pub fn satisfiable(self, min: f64, max: f64, rhs: f64) -> bool {
        match self {
            Comparator::Eq => min <= rhs + REAL_TOL && max >= rhs - REAL_TOL,
            Comparator::Ne => !(Comparator::Eq.holds(min, rhs) && Comparator::Eq.holds(max, rhs)),
            Comparator::Le => min <= rhs + REAL_TOL,
            Comparator::Ge => max >= rhs - REAL_TOL,
            Comparator::Lt => min < rhs - REAL_TOL,
            Comparator::Gt => max > rhs + REAL_TOL,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Lt => "<",
            Comparator::Gt => ">",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "=" | "==" => Comparator::Eq,
            "!=" => Comparator::Ne,
            "<=" => Comparator::Le,
            ">=" => Comparator::Ge,
            "<" => Comparator::Lt,
            ">" => Comparator::Gt,
            _ => return None,
        })
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Propositional formula over variables. Atoms are either boolean
/// variables or comparisons of a variable against a literal value.
#[derive(Debug, Clone, PartialEq)]
pub enum BoolExpr {
    Const(bool),
    Var(String),
    Cmp { var: String, op: Comparator, value: Value },
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
}

impl BoolExpr {
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            BoolExpr::Const(_) => {}
            BoolExpr::Var(v) | BoolExpr::Cmp { var: v, .. } => {
                if !out.contains(&v.as_str()) {
                    out.push(v)
                }
            }
            BoolExpr::Not(e) => e.collect_vars(out),
            BoolExpr::And(es) | BoolExpr::Or(es) => es.iter().for_each(|e| e.collect_vars(out)),
        }
    }

    /// Evaluate with a lookup that yields a variable's value together with
    /// its numeric rank (for comparisons over labels).
    pub fn eval<F>(&self, lookup: &F) -> Option<bool>
    where
        F: Fn(&str) -> Option<(Value, Option<f64>)>,
    {
        Some(match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Var(v) => lookup(v)?.0.as_bool()?,
            BoolExpr::Cmp { var, op, value } => {
                let (current, rank) = lookup(var)?;
                match (op, &current, value) {
                    (Comparator::Eq, _, _) if current == *value => true,
                    (Comparator::Ne, _, _) if current == *value => false,
                    _ => {
                        let lhs = rank.or_else(|| current.as_f64())?;
                        match value.as_f64() {
                            Some(rhs) => op.holds(lhs, rhs),
                            // label literal compared for (in)equality only
                            None => matches!(op, Comparator::Ne),
                        }
                    }
                }
            }
            BoolExpr::Not(e) => !e.eval(lookup)?,
            BoolExpr::And(es) => {
                let mut acc = true;
                for e in es {
                    acc &= e.eval(lookup)?;
                }
                acc
            }
            BoolExpr::Or(es) => {
                let mut acc = false;
                for e in es {
                    acc |= e.eval(lookup)?;
                }
                acc
            }
        })
    }

    /// Rename variables through `f`.
    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> BoolExpr {
        match self {
            BoolExpr::Const(b) => BoolExpr::Const(*b),
            BoolExpr::Var(v) => BoolExpr::Var(f(v)),
            BoolExpr::Cmp { var, op, value } => BoolExpr::Cmp {
                var: f(var),
                op: *op,
                value: value.clone(),
            },
            BoolExpr::Not(e) => BoolExpr::Not(Box::new(e.rename(f))),
            BoolExpr::And(es) => BoolExpr::And(es.iter().map(|e| e.rename(f)).collect()),
            BoolExpr::Or(es) => BoolExpr::Or(es.iter().map(|e| e.rename(f)).collect()),
        }
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &BoolExpr, parent_is_and: bool) -> fmt::Result {
            let wrap = match e {
                BoolExpr::Or(_) => true,
                BoolExpr::And(_) => parent_is_and,
                _ => false,
            };
            if wrap {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            BoolExpr::Const(b) => write!(f, "{}", u8::from(*b)),
            BoolExpr::Var(v) => f.write_str(v),
            BoolExpr::Cmp { var, op, value } => write!(f, "{var}{op}{value}"),
            BoolExpr::Not(e) => {
                f.write_str("!")?;
                match **e {
                    BoolExpr::And(_) | BoolExpr::Or(_) => write!(f, "({e})"),
                    _ => write!(f, "{e}"),
                }
            }
            BoolExpr::And(es) | BoolExpr::Or(es) => {
                let is_and = matches!(self, BoolExpr::And(_));
                if es.is_empty() {
                    // empty conjunction/disjunction: the neutral element
                    return write!(f, "{}", u8::from(is_and));
                }
                if es.len() == 1 {
                    return child(f, &es[0], true);
                }
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str(if is_and { " & " } else { " | " })?;
                    }
                    child(f, e, is_and)?;
                }
                Ok(())
            }
        }
    }
}

/// The shape of a Depend relation.
#[derive(Debug, Clone, PartialEq)]
pub enum DependForm {
    /// Functional: output = formula.
    Formula(BoolExpr),
    /// Constraint: sum(coef * var) cmp bound.
    Linear {
        terms: Vec<(String, f64)>,
        cmp: Comparator,
        bound: f64,
    },
    /// Functional: output = rows[input tuple]; must be total.
    Table {
        inputs: Vec<String>,
        rows: BTreeMap<Vec<Value>, Value>,
    },
    /// Functional: output = constant + sum(weight * var).
    WeightedSum {
        terms: Vec<(String, f64)>,
        constant: f64,
    },
    /// Functional: output = 1 iff input >= cut.
    Threshold { input: String, cut: f64 },
    /// Constraint: (number of true inputs) cmp bound.
    Cardinality {
        inputs: Vec<String>,
        cmp: Comparator,
        bound: i64,
    },
    /// Constraint: not both inputs true.
    Incompatible(String, String),
}

impl DependForm {
    pub fn is_functional(&self) -> bool {
        matches!(
            self,
            DependForm::Formula(_)
                | DependForm::Table { .. }
                | DependForm::WeightedSum { .. }
                | DependForm::Threshold { .. }
        )
    }

    /// Whether the relation is a linear function/inequality of its inputs.
    pub fn is_linear(&self) -> bool {
        matches!(
            self,
            DependForm::Linear { .. }
                | DependForm::WeightedSum { .. }
                | DependForm::Cardinality { .. }
                | DependForm::Incompatible(..)
        )
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            DependForm::Formula(_) => "formula",
            DependForm::Linear { .. } => "linear",
            DependForm::Table { .. } => "table",
            DependForm::WeightedSum { .. } => "sum",
            DependForm::Threshold { .. } => "step",
            DependForm::Cardinality { .. } => "card",
            DependForm::Incompatible(..) => "nand",
        }
    }

    /// Input variable ids, deduplicated, in first-mention order.
    pub fn inputs(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        let raw: Vec<&str> = match self {
            DependForm::Formula(e) => e.vars(),
            DependForm::Linear { terms, .. } | DependForm::WeightedSum { terms, .. } => {
                terms.iter().map(|(v, _)| v.as_str()).collect()
            }
            DependForm::Table { inputs, .. } | DependForm::Cardinality { inputs, .. } => {
                inputs.iter().map(String::as_str).collect()
            }
            DependForm::Threshold { input, .. } => vec![input.as_str()],
            DependForm::Incompatible(a, b) => vec![a.as_str(), b.as_str()],
        };
        for v in raw {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

/// A function or constraint over variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Depend {
    pub id: String,
    /// Present exactly for functional forms.
    pub output: Option<String>,
    pub form: DependForm,
}

impl Depend {
    pub fn function(id: impl Into<String>, output: impl Into<String>, form: DependForm) -> Self {
        Depend {
            id: id.into(),
            output: Some(output.into()),
            form,
        }
    }

    pub fn constraint(id: impl Into<String>, form: DependForm) -> Self {
        Depend {
            id: id.into(),
            output: None,
            form,
        }
    }

    pub fn inputs(&self) -> Vec<&str> {
        self.form.inputs()
    }
}
