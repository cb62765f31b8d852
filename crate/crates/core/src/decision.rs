//! Expected-utility evaluation and ranking of alternatives, with an optional
//! probability transform, and the mapping of a decision model onto an ROP.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{
    Criterion, CriterionKind, Depend, DependForm, Domain, Model, Parameter, Value,
};
use crate::rop::Rop;

/// Tolerance on the total probability of a lottery.
pub const PROBABILITY_TOL: f64 = 1e-9;

/// Parameter id holding the chosen alternative in [`daop_to_rop`].
pub const ALTERNATIVE_PARAM: &str = "alternative";
/// Decision-rule criterion id in [`daop_to_rop`].
pub const UTILITY_CRITERION: &str = "utility";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecisionError {
    #[error("lottery probabilities sum to {0}, not 1")]
    BadTotal(f64),
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("alternative `{alternative}` has no lottery for attribute `{attribute}`")]
    MissingLottery { alternative: String, attribute: String },
    #[error("alternative `{alternative}` has a lottery for unknown attribute `{attribute}`")]
    UnknownAttribute { alternative: String, attribute: String },
    #[error("outcome {value} outside the domain of `{attribute}`")]
    OutcomeOutsideDomain { attribute: String, value: Value },
    #[error("utility has no entry for {value} of `{attribute}`")]
    NoUtility { attribute: String, value: String },
    #[error("unknown alternative `{0}`")]
    UnknownAlternative(String),
    #[error("duplicate alternative `{0}`")]
    DuplicateAlternative(String),
    #[error("transform: {0}")]
    BadTransform(String),
    #[error("no alternatives")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lottery {
    pub outcomes: Vec<(Value, f64)>,
}

impl Lottery {
    pub fn certain(v: Value) -> Self {
        Lottery {
            outcomes: vec![(v, 1.0)],
        }
    }
}

pub fn validate_lottery(l: &Lottery) -> Result<(), DecisionError> {
    let mut total = 0.0;
    for (_, p) in &l.outcomes {
        if !(0.0..=1.0).contains(p) {
            return Err(DecisionError::BadProbability(*p));
        }
        total += p;
    }
    if (total - 1.0).abs() > PROBABILITY_TOL {
        return Err(DecisionError::BadTotal(total));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alternative {
    pub id: String,
    /// One lottery per attribute id.
    pub lotteries: BTreeMap<String, Lottery>,
}

/// Utility of attribute outcomes.
#[derive(Debug, Clone, PartialEq)]
pub enum Utility {
    /// Additive: one table per attribute mapping outcome to utility.
    Tables(BTreeMap<String, BTreeMap<Value, f64>>),
    /// Additive: weight times the outcome's numeric value.
    WeightedSum(BTreeMap<String, f64>),
    /// Opt-in joint table over outcome tuples (attributes in declaration
    /// order). Lotteries are taken as independent.
    Joint(BTreeMap<Vec<Value>, f64>),
}

/// Monotone probability transform with F(0) = 0 and F(1) = 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Transform {
    #[default]
    Identity,
    Power(f64),
    /// Piecewise-linear through the given (p, F(p)) points.
    Table(Vec<(f64, f64)>),
}

impl Transform {
    pub fn check(&self) -> Result<(), DecisionError> {
        match self {
            Transform::Identity => Ok(()),
            Transform::Power(g) => {
                if g.is_finite() && *g > 0.0 {
                    Ok(())
                } else {
                    Err(DecisionError::BadTransform(format!("exponent {g} must be positive")))
                }
            }
            Transform::Table(pts) => {
                let bad = |m: &str| Err(DecisionError::BadTransform(m.to_string()));
                if pts.first() != Some(&(0.0, 0.0)) || pts.last() != Some(&(1.0, 1.0)) {
                    return bad("table must run from (0,0) to (1,1)");
                }
                for w in pts.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return bad("table points must have increasing p");
                    }
                    if w[1].1 < w[0].1 {
                        return bad("table must be nondecreasing");
                    }
                }
                Ok(())
            }
        }
    }

    pub fn apply(&self, p: f64) -> f64 {
        match self {
            Transform::Identity => p,
            Transform::Power(g) => p.powf(*g),
            Transform::Table(pts) => {
                for w in pts.windows(2) {
                    let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                    if p <= x1 {
                        return y0 + (y1 - y0) * (p - x0) / (x1 - x0);
                    }
                }
                pts.last().map(|pt| pt.1).unwrap_or(p)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionModel {
    pub attributes: Vec<Criterion>,
    pub alternatives: Vec<Alternative>,
    pub utility: Utility,
    pub transform: Transform,
}

impl DecisionModel {
    fn attribute(&self, id: &str) -> Option<&Criterion> {
        self.attributes.iter().find(|a| a.id == id)
    }

    pub fn validate(&self) -> Result<(), DecisionError> {
        self.transform.check()?;
        if self.alternatives.is_empty() {
            return Err(DecisionError::Empty);
        }
        let mut seen = std::collections::BTreeSet::new();
        for alt in &self.alternatives {
            if !seen.insert(alt.id.as_str()) {
                return Err(DecisionError::DuplicateAlternative(alt.id.clone()));
            }
            for attr in &self.attributes {
                if !alt.lotteries.contains_key(&attr.id) {
                    return Err(DecisionError::MissingLottery {
                        alternative: alt.id.clone(),
                        attribute: attr.id.clone(),
                    });
                }
            }
            for (attr_id, lottery) in &alt.lotteries {
                let Some(attr) = self.attribute(attr_id) else {
                    return Err(DecisionError::UnknownAttribute {
                        alternative: alt.id.clone(),
                        attribute: attr_id.clone(),
                    });
                };
                validate_lottery(lottery)?;
                for (v, _) in &lottery.outcomes {
                    if !attr.domain.contains(v) {
                        return Err(DecisionError::OutcomeOutsideDomain {
                            attribute: attr_id.clone(),
                            value: v.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn utility_of(&self, attr: &Criterion, v: &Value) -> Result<f64, DecisionError> {
        let missing = || DecisionError::NoUtility {
            attribute: attr.id.clone(),
            value: v.to_string(),
        };
        match &self.utility {
            Utility::Tables(tables) => tables
                .get(&attr.id)
                .and_then(|t| t.get(v))
                .copied()
                .ok_or_else(missing),
            Utility::WeightedSum(weights) => {
                let w = weights.get(&attr.id).copied().unwrap_or(0.0);
                Ok(w * attr.domain.rank(v).ok_or_else(missing)?)
            }
            Utility::Joint(_) => unreachable!("joint utility has no per-attribute part"),
        }
    }

    /// Expected-utility contribution of each attribute (declaration order);
    /// a joint utility yields a single contribution.
    fn contributions(&self, alt: &Alternative) -> Result<Vec<f64>, DecisionError> {
        let f = &self.transform;
        if let Utility::Joint(table) = &self.utility {
            let lotteries: Vec<&Lottery> = self
                .attributes
                .iter()
                .map(|a| &alt.lotteries[&a.id])
                .collect();
            let mut total = 0.0;
            let mut idx = vec![0usize; lotteries.len()];
            loop {
                let mut key = Vec::with_capacity(idx.len());
                let mut p = 1.0;
                for (l, &i) in lotteries.iter().zip(&idx) {
                    key.push(l.outcomes[i].0.clone());
                    p *= l.outcomes[i].1;
                }
                let u = table.get(&key).ok_or_else(|| DecisionError::NoUtility {
                    attribute: "joint".into(),
                    value: key
                        .iter()
                        .map(Value::to_string)
                        .collect::<Vec<_>>()
                        .join(","),
                })?;
                total += f.apply(p) * u;
                let mut k = idx.len();
                loop {
                    if k == 0 {
                        return Ok(vec![total]);
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < lotteries[k].outcomes.len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
        let mut out = Vec::with_capacity(self.attributes.len());
        for attr in &self.attributes {
            let mut c = 0.0;
            for (v, p) in &alt.lotteries[&attr.id].outcomes {
                c += f.apply(*p) * self.utility_of(attr, v)?;
            }
            out.push(c);
        }
        Ok(out)
    }
}

fn sum(contributions: &[f64]) -> f64 {
    // same accumulation order as the weighted-sum depend in daop_to_rop
    let mut acc = 0.0;
    for c in contributions {
        acc += 1.0 * c;
    }
    acc
}

pub fn expected_utility(dm: &DecisionModel, alternative: &str) -> Result<f64, DecisionError> {
    dm.validate()?;
    let alt = dm
        .alternatives
        .iter()
        .find(|a| a.id == alternative)
        .ok_or_else(|| DecisionError::UnknownAlternative(alternative.to_string()))?;
    Ok(sum(&dm.contributions(alt)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TieGroup {
    pub expected_utility: f64,
    /// Declaration order within the group.
    pub alternatives: Vec<String>,
}

/// Alternatives by nonincreasing expected utility; equal values share a
/// group.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub groups: Vec<TieGroup>,
}

impl Ranking {
    pub fn entries(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.groups
            .iter()
            .flat_map(|g| g.alternatives.iter().map(move |a| (a.as_str(), g.expected_utility)))
    }

    /// The DAOP-optimal alternatives.
    pub fn best(&self) -> &[String] {
        &self.groups[0].alternatives
    }
}

pub fn rank_alternatives(dm: &DecisionModel) -> Result<Ranking, DecisionError> {
    dm.validate()?;
    let mut scored: Vec<(f64, &str)> = Vec::with_capacity(dm.alternatives.len());
    for alt in &dm.alternatives {
        scored.push((sum(&dm.contributions(alt)?), &alt.id));
    }
    // stable: declaration order within ties
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut groups: Vec<TieGroup> = Vec::new();
    for (eu, id) in scored {
        match groups.last_mut() {
            Some(g) if g.expected_utility == eu => g.alternatives.push(id.to_string()),
            _ => groups.push(TieGroup {
                expected_utility: eu,
                alternatives: vec![id.to_string()],
            }),
        }
    }
    Ok(Ranking { groups })
}

fn real_domain(values: impl Iterator<Item = f64>) -> Domain {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let step = if hi > lo { hi - lo } else { 1.0 };
    Domain::RealGrid { lo, hi, step }
}

/// Encode the decision model as an ROP whose single decision parameter
/// picks an alternative. Each attribute's expected-utility contribution is
/// a lookup table on that parameter; `utility` sums them and is the
/// Decision Rule.
pub fn daop_to_rop(dm: &DecisionModel) -> Result<Rop, DecisionError> {
    dm.validate()?;
    let labels: Vec<String> = dm.alternatives.iter().map(|a| a.id.clone()).collect();
    let per_alt: Vec<Vec<f64>> = dm
        .alternatives
        .iter()
        .map(|a| dm.contributions(a))
        .collect::<Result<_, _>>()?;
    let parts: Vec<String> = match dm.utility {
        Utility::Joint(_) => vec!["eu_joint".to_string()],
        _ => dm.attributes.iter().map(|a| format!("eu_{}", a.id)).collect(),
    };

    let mut model = Model::default();
    model
        .parameters
        .push(Parameter::new(ALTERNATIVE_PARAM, Domain::Enumerated(labels.clone())));
    model.decision_set.insert(ALTERNATIVE_PARAM.to_string());
    for (k, part) in parts.iter().enumerate() {
        let rows = labels
            .iter()
            .zip(&per_alt)
            .map(|(l, cs)| (vec![Value::Label(l.clone())], Value::Real(cs[k])))
            .collect();
        model.criteria.push(Criterion::new(
            part.clone(),
            real_domain(per_alt.iter().map(|cs| cs[k])),
            CriterionKind::Quality,
        ));
        model.depends.push(Depend::function(
            format!("table_{part}"),
            part.clone(),
            DependForm::Table {
                inputs: vec![ALTERNATIVE_PARAM.to_string()],
                rows,
            },
        ));
    }
    model.criteria.push(Criterion::new(
        UTILITY_CRITERION,
        real_domain(per_alt.iter().map(|cs| sum(cs))),
        CriterionKind::Utility,
    ));
    model.depends.push(Depend::function(
        "expected_utility",
        UTILITY_CRITERION,
        DependForm::WeightedSum {
            terms: parts.iter().map(|p| (p.clone(), 1.0)).collect(),
            constant: 0.0,
        },
    ));
    model.decision_rule = UTILITY_CRITERION.to_string();
    Ok(Rop::from_model(model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rop::solve_rop;

    fn label(s: &str) -> Value {
        Value::Label(s.into())
    }

    fn one_attr(alts: &[(&str, Vec<(&str, f64)>)], utility: &[(&str, f64)]) -> DecisionModel {
        let outcomes: Vec<String> = utility.iter().map(|(o, _)| o.to_string()).collect();
        DecisionModel {
            attributes: vec![Criterion::new("x", Domain::Enumerated(outcomes), CriterionKind::Quality)],
            alternatives: alts
                .iter()
                .map(|(id, l)| Alternative {
                    id: id.to_string(),
                    lotteries: [(
                        "x".to_string(),
                        Lottery {
                            outcomes: l.iter().map(|(o, p)| (label(o), *p)).collect(),
                        },
                    )]
                    .into(),
                })
                .collect(),
            utility: Utility::Tables(
                [("x".to_string(), utility.iter().map(|(o, u)| (label(o), *u)).collect())].into(),
            ),
            transform: Transform::Identity,
        }
    }

    #[test]
    fn lottery_tolerance() {
        let ok = Lottery {
            outcomes: vec![(label("a"), 0.3), (label("b"), 0.7 - 1e-12)],
        };
        assert_eq!(validate_lottery(&ok), Ok(()));
        let bad = Lottery {
            outcomes: vec![(label("a"), 0.6), (label("b"), 0.5)],
        };
        assert!(matches!(validate_lottery(&bad), Err(DecisionError::BadTotal(_))));
        assert_eq!(validate_lottery(&Lottery::certain(label("v"))), Ok(()));
    }

    #[test]
    fn certainty_gives_plain_utility() {
        let dm = one_attr(&[("A", vec![("hi", 1.0)])], &[("hi", 0.8), ("lo", 0.1)]);
        assert_eq!(expected_utility(&dm, "A").unwrap(), 0.8);
    }

    #[test]
    fn hand_computed_values() {
        // A: 0.6*0.9 + 0.4*0.2 = 0.62, B: 0.2*0.9 + 0.8*0.375 = 0.48
        let dm = one_attr(
            &[
                ("A", vec![("hi", 0.6), ("lo", 0.4)]),
                ("B", vec![("hi", 0.2), ("lo", 0.8)]),
            ],
            &[("hi", 0.9), ("lo", 0.2)],
        );
        assert!((expected_utility(&dm, "A").unwrap() - 0.62).abs() < 1e-12);
        let mut dm2 = dm.clone();
        if let Utility::Tables(t) = &mut dm2.utility {
            t.get_mut("x").unwrap().insert(label("lo"), 0.375);
        }
        assert!((expected_utility(&dm2, "B").unwrap() - 0.48).abs() < 1e-12);
    }

    #[test]
    fn power_transform() {
        let mut dm = one_attr(&[("A", vec![("a", 0.5), ("b", 0.5)])], &[("a", 1.0), ("b", 0.0)]);
        dm.transform = Transform::Power(2.0);
        assert_eq!(expected_utility(&dm, "A").unwrap(), 0.25);
    }

    #[test]
    fn piecewise_transform_interpolates() {
        let t = Transform::Table(vec![(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)]);
        assert_eq!(t.check(), Ok(()));
        assert_eq!(t.apply(0.25), 0.125);
        assert_eq!(t.apply(0.75), 0.625);
        assert!(Transform::Table(vec![(0.0, 0.0), (1.0, 0.9)]).check().is_err());
    }

    #[test]
    fn ties_share_a_group_and_round_trip() {
        let dm = one_attr(
            &[("A", vec![("a", 1.0)]), ("B", vec![("a", 1.0)]), ("C", vec![("b", 1.0)])],
            &[("a", 2.0), ("b", 1.0)],
        );
        let r = rank_alternatives(&dm).unwrap();
        assert_eq!(r.best(), ["A".to_string(), "B".to_string()]);
        let sol = solve_rop(&daop_to_rop(&dm).unwrap()).unwrap();
        let picked: Vec<&Value> = sol.optima.iter().map(|s| s.get(ALTERNATIVE_PARAM).unwrap()).collect();
        assert_eq!(picked, vec![&label("A"), &label("B")]);
    }

    #[test]
    fn joint_utility_with_independent_lotteries() {
        let dm = DecisionModel {
            attributes: vec![
                Criterion::new("x", Domain::Boolean, CriterionKind::Quality),
                Criterion::new("y", Domain::Boolean, CriterionKind::Quality),
            ],
            alternatives: vec![Alternative {
                id: "A".into(),
                lotteries: [
                    (
                        "x".to_string(),
                        Lottery {
                            outcomes: vec![(Value::Bool(true), 0.5), (Value::Bool(false), 0.5)],
                        },
                    ),
                    ("y".to_string(), Lottery::certain(Value::Bool(true))),
                ]
                .into(),
            }],
            // utility 1 only when both hold
            utility: Utility::Joint(
                [
                    (vec![Value::Bool(true), Value::Bool(true)], 1.0),
                    (vec![Value::Bool(false), Value::Bool(true)], 0.0),
                ]
                .into(),
            ),
            transform: Transform::Identity,
        };
        assert_eq!(expected_utility(&dm, "A").unwrap(), 0.5);
    }
}
