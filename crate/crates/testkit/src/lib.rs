//! Random instances and naive reference implementations used by the
//! property and acceptance tests. Every oracle here is written without
//! calling the code it checks.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use ropas_core::decision::{Alternative, DecisionModel, Lottery, Transform, Utility};
use ropas_core::entailment::{GoalGraph, Refinement, Selection};
use ropas_core::model::{
    BoolExpr, Comparator, Criterion, CriterionKind, Depend, DependForm, Domain, Model,
    MonitoredVariable, Parameter, Value, ValueRange,
};
use ropas_core::rop::Rop;
use ropas_core::runtime::{EventTrace, Trigger, Widening};

// ------------------------------------------------------------ goal graphs

/// A random acyclic goal graph with every atom in R, K or S.
pub fn goal_graph<R: Rng>(rng: &mut R, max_s: usize) -> GoalGraph {
    let ns = rng.gen_range(1..=max_s);
    let nk = rng.gen_range(0..=2);
    let nr = rng.gen_range(1..=3);
    let s: Vec<String> = (0..ns).map(|i| format!("s{i}")).collect();
    let k: Vec<String> = (0..nk).map(|i| format!("k{i}")).collect();
    let r: Vec<String> = (0..nr).map(|i| format!("r{i}")).collect();

    let mut g = GoalGraph::default();
    g.atoms.extend(s.iter().chain(&k).chain(&r).cloned());
    g.s_atoms.extend(s.iter().cloned());
    g.k_atoms.extend(k.iter().cloned());
    g.r_atoms.extend(r.iter().cloned());

    let premises = |rng: &mut R, pool: &[String]| -> BTreeSet<String> {
        let n = rng.gen_range(1..=3.min(pool.len()));
        pool.choose_multiple(rng, n).cloned().collect()
    };
    // S atoms may be refined by earlier S atoms and K
    for i in 1..ns {
        if rng.gen_bool(0.2) {
            let pool: Vec<String> = s[..i].iter().chain(&k).cloned().collect();
            let ps = premises(rng, &pool);
            g.refinements.push(Refinement::new(s[i].clone(), ps));
        }
    }
    for (i, ri) in r.iter().enumerate() {
        let pool: Vec<String> = s.iter().chain(&k).chain(&r[..i]).cloned().collect();
        for _ in 0..rng.gen_range(1..=3) {
            let ps = premises(rng, &pool);
            g.refinements.push(Refinement::new(ri.clone(), ps));
        }
    }
    let all: Vec<String> = g.atoms.iter().cloned().collect();
    for _ in 0..rng.gen_range(0..=2) {
        let pair: Vec<&String> = all.choose_multiple(rng, 2).collect();
        if pair.len() == 2 {
            g.add_conflict(pair[0].clone(), pair[1].clone());
        }
    }
    for a in &r {
        if rng.gen_bool(0.5) {
            g.mandatory.insert(a.clone());
        }
    }
    g
}

/// Naive closure: repeat full passes until nothing changes. Returns the
/// fixpoint and whether it contains a conflict pair.
pub fn naive_closure(g: &GoalGraph, facts: &BTreeSet<String>) -> (BTreeSet<String>, bool) {
    let mut have = facts.clone();
    loop {
        let before = have.len();
        for r in &g.refinements {
            if r.premises.iter().all(|p| have.contains(p)) {
                have.insert(r.conclusion.clone());
            }
        }
        if have.len() == before {
            break;
        }
    }
    let bottom = g
        .conflicts
        .iter()
        .any(|(a, b)| have.contains(a) && have.contains(b));
    (have, bottom)
}

/// Every subset of S as a Selection, in mask order over the sorted atoms.
pub fn all_selections(g: &GoalGraph) -> Vec<Selection> {
    let s: Vec<&String> = g.s_atoms.iter().collect();
    (0u64..1 << s.len())
        .map(|mask| {
            s.iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, a)| (*a).clone())
                .collect()
        })
        .collect()
}

fn facts(g: &GoalGraph, sel: &Selection) -> BTreeSet<String> {
    g.k_atoms.union(sel).cloned().collect()
}

/// Consistent selections deriving every atom of `required`.
pub fn naive_solutions(g: &GoalGraph, required: &BTreeSet<String>) -> Vec<Selection> {
    all_selections(g)
        .into_iter()
        .filter(|sel| {
            let (have, bottom) = naive_closure(g, &facts(g, sel));
            !bottom && required.is_subset(&have)
        })
        .collect()
}

/// Smallest DRP solutions by exhaustive subset enumeration.
pub fn naive_min_selections(g: &GoalGraph) -> BTreeSet<Selection> {
    let sols = naive_solutions(g, &g.r_atoms);
    let Some(min) = sols.iter().map(BTreeSet::len).min() else {
        return BTreeSet::new();
    };
    sols.into_iter().filter(|s| s.len() == min).collect()
}

// -------------------------------------------------------- decision models

/// At most 6 alternatives, 4 attributes, 5 outcomes per attribute.
pub fn decision_model<R: Rng>(rng: &mut R) -> DecisionModel {
    let n_attr = rng.gen_range(1..=4);
    let numeric_only = rng.gen_bool(0.3);
    let attributes: Vec<Criterion> = (0..n_attr)
        .map(|i| {
            let size = rng.gen_range(1..=5);
            let domain = if numeric_only || rng.gen_bool(0.5) {
                let lo = rng.gen_range(-3..=3);
                Domain::IntegerRange { lo, hi: lo + size - 1 }
            } else {
                Domain::Enumerated((0..size).map(|j| format!("v{j}")).collect())
            };
            Criterion::new(format!("a{i}"), domain, CriterionKind::Quality)
        })
        .collect();
    let n_alt = rng.gen_range(1..=6);
    let alternatives = (0..n_alt)
        .map(|j| {
            let lotteries = attributes
                .iter()
                .map(|a| (a.id.clone(), lottery(rng, &a.domain)))
                .collect();
            Alternative {
                id: format!("alt{j}"),
                lotteries,
            }
        })
        .collect();
    let utility = if numeric_only {
        Utility::WeightedSum(
            attributes
                .iter()
                .map(|a| (a.id.clone(), rng.gen_range(-2.0..2.0)))
                .collect(),
        )
    } else {
        Utility::Tables(
            attributes
                .iter()
                .map(|a| {
                    let t = a.domain.values().into_iter().map(|v| (v, rng.gen_range(0.0..1.0))).collect();
                    (a.id.clone(), t)
                })
                .collect(),
        )
    };
    let transform = match rng.gen_range(0..4) {
        0 => Transform::Power([0.5, 2.0, 3.0][rng.gen_range(0..3)]),
        1 => {
            let mut xs: Vec<f64> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0.05..0.95)).collect();
            let mut ys: Vec<f64> = xs.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            ys.truncate(xs.len());
            ys.sort_by(f64::total_cmp);
            let mut pts = vec![(0.0, 0.0)];
            pts.extend(xs.into_iter().zip(ys));
            pts.push((1.0, 1.0));
            Transform::Table(pts)
        }
        _ => Transform::Identity,
    };
    DecisionModel {
        attributes,
        alternatives,
        utility,
        transform,
    }
}

fn lottery<R: Rng>(rng: &mut R, domain: &Domain) -> Lottery {
    let mut values = domain.values();
    values.shuffle(rng);
    values.truncate(rng.gen_range(1..=values.len()));
    let weights: Vec<f64> = values.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut outcomes: Vec<(Value, f64)> = values.into_iter().zip(weights.iter().map(|w| w / total)).collect();
    let head: f64 = outcomes[..outcomes.len() - 1].iter().map(|o| o.1).sum();
    outcomes.last_mut().expect("nonempty").1 = 1.0 - head;
    Lottery { outcomes }
}

fn transform(t: &Transform, p: f64) -> f64 {
    match t {
        Transform::Identity => p,
        Transform::Power(g) => p.powf(*g),
        Transform::Table(pts) => {
            let i = pts.iter().rposition(|pt| pt.0 <= p).expect("starts at 0");
            if i + 1 == pts.len() {
                return pts[i].1;
            }
            let ((x0, y0), (x1, y1)) = (pts[i], pts[i + 1]);
            y0 + (y1 - y0) * (p - x0) / (x1 - x0)
        }
    }
}

/// Double loop over alternatives and outcomes, sorted by EU descending
/// (stable on ties).
pub fn naive_ranking(dm: &DecisionModel) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = dm
        .alternatives
        .iter()
        .map(|alt| {
            let mut eu = 0.0;
            for a in &dm.attributes {
                for (v, p) in &alt.lotteries[&a.id].outcomes {
                    let u = match &dm.utility {
                        Utility::Tables(t) => t[&a.id][v],
                        Utility::WeightedSum(w) => w[&a.id] * v.as_f64().expect("numeric"),
                        Utility::Joint(_) => unimplemented!("joint tables are not generated"),
                    };
                    eu += transform(&dm.transform, *p) * u;
                }
            }
            (alt.id.clone(), eu)
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    out
}

// ------------------------------------------------------------------ ROPs

fn int(lo: i64, hi: i64) -> Domain {
    Domain::IntegerRange { lo, hi }
}

fn random_param_domain<R: Rng>(rng: &mut R) -> Domain {
    match rng.gen_range(0..4) {
        0 => Domain::Boolean,
        1 => {
            let lo = rng.gen_range(-2..=2);
            int(lo, lo + rng.gen_range(1..=4))
        }
        2 => Domain::Enumerated((0..rng.gen_range(2..=4)).map(|i| format!("e{i}")).collect()),
        _ => Domain::RealGrid {
            lo: 0.0,
            hi: 1.0,
            step: [0.25, 0.5][rng.gen_range(0..2)],
        },
    }
}

/// Monitored variables that random ROPs may read.
pub struct Exo {
    pub count: usize,
}

/// A random valid ROP with at most `max_space` decision-set combinations.
/// `exo.count` boolean/integer monitored variables feed the criteria.
pub fn rop<R: Rng>(rng: &mut R, max_space: u128, exo: Exo) -> Rop {
    let mut m = Model::default();
    let mut space: u128 = 1;
    for i in 0..rng.gen_range(1..=7) {
        let d = random_param_domain(rng);
        if space * d.size() > max_space {
            continue;
        }
        let id = format!("p{i}");
        let mut p = Parameter::new(id.clone(), d.clone());
        if rng.gen_bool(0.2) {
            p.default = Some(d.values()[rng.gen_range(0..d.size() as usize)].clone());
        } else {
            space *= d.size();
            m.decision_set.insert(id);
        }
        m.parameters.push(p);
    }
    for i in 0..exo.count {
        let domain = if rng.gen_bool(0.5) { Domain::Boolean } else { int(0, 3) };
        let initial = domain.values()[0].clone();
        m.monitored.push(MonitoredVariable {
            id: format!("m{i}"),
            detectable: ValueRange::Interval {
                lo: domain.bounds().0,
                hi: domain.bounds().1,
            },
            domain,
            initial,
        });
    }

    let numeric: Vec<String> = m
        .parameters
        .iter()
        .filter(|p| matches!(p.domain, Domain::Boolean | Domain::IntegerRange { .. }))
        .map(|p| p.id.clone())
        .chain(m.monitored.iter().map(|v| v.id.clone()))
        .collect();
    let booleans: Vec<String> = m
        .parameters
        .iter()
        .filter(|p| p.domain == Domain::Boolean)
        .map(|p| p.id.clone())
        .chain(m.monitored.iter().filter(|v| v.domain == Domain::Boolean).map(|v| v.id.clone()))
        .collect();

    let mut derived: Vec<String> = Vec::new();
    let mut add = |m: &mut Model, id: String, domain: Domain, form: DependForm| {
        m.criteria.push(Criterion::new(id.clone(), domain, CriterionKind::Quality));
        m.depends.push(Depend::function(format!("f_{id}"), id.clone(), form));
        derived.push(id);
    };
    let mut n = 0;
    let mut fresh = || {
        n += 1;
        format!("c{n}")
    };
    for _ in 0..rng.gen_range(1..=3) {
        if !numeric.is_empty() && rng.gen_bool(0.6) {
            let k = rng.gen_range(1..=numeric.len().min(3));
            let terms = numeric
                .choose_multiple(rng, k)
                .map(|v| (v.clone(), rng.gen_range(-3..=3) as f64))
                .collect();
            let lo = rng.gen_range(-20..=0);
            add(&mut m, fresh(), int(lo, lo + 30), DependForm::WeightedSum {
                terms,
                constant: rng.gen_range(-2..=2) as f64,
            });
        }
    }
    for p in m.parameters.clone() {
        match &p.domain {
            Domain::RealGrid { .. } => add(&mut m, fresh(), Domain::Boolean, DependForm::Threshold {
                input: p.id.clone(),
                cut: [0.3, 0.5, 0.75][rng.gen_range(0..3)],
            }),
            Domain::Enumerated(_) => {
                let rows = p
                    .domain
                    .values()
                    .into_iter()
                    .map(|v| (vec![v], Value::Int(rng.gen_range(0..=5))))
                    .collect();
                add(&mut m, fresh(), int(0, 5), DependForm::Table {
                    inputs: vec![p.id.clone()],
                    rows,
                });
            }
            _ => {}
        }
    }
    if booleans.len() >= 2 && rng.gen_bool(0.5) {
        let pick: Vec<&String> = booleans.choose_multiple(rng, 2).collect();
        let e = BoolExpr::Or(vec![
            BoolExpr::And(vec![BoolExpr::Var(pick[0].clone()), BoolExpr::Not(Box::new(BoolExpr::Var(pick[1].clone())))]),
            BoolExpr::Cmp {
                var: pick[1].clone(),
                op: Comparator::Ge,
                value: Value::Bool(true),
            },
        ]);
        add(&mut m, fresh(), Domain::Boolean, DependForm::Formula(e));
    }

    let inputs: Vec<String> = derived.clone();
    let terms = inputs
        .iter()
        .map(|c| (c.clone(), rng.gen_range(-3..=3) as f64))
        .collect();
    m.criteria.push(Criterion::new("rule", int(-300, 300), CriterionKind::Utility));
    m.depends.push(Depend::function("f_rule", "rule", DependForm::WeightedSum { terms, constant: 0.0 }));
    m.decision_rule = "rule".into();

    let pool: Vec<String> = numeric.iter().chain(&derived).cloned().collect();
    for i in 0..rng.gen_range(0..=3) {
        let form = match rng.gen_range(0..3) {
            0 if booleans.len() >= 2 => {
                let pick: Vec<&String> = booleans.choose_multiple(rng, 2).collect();
                DependForm::Incompatible(pick[0].clone(), pick[1].clone())
            }
            1 if booleans.len() >= 2 => {
                let k = rng.gen_range(2..=booleans.len());
                DependForm::Cardinality {
                    inputs: booleans.choose_multiple(rng, k).cloned().collect(),
                    cmp: [Comparator::Le, Comparator::Ge, Comparator::Eq][rng.gen_range(0..3)],
                    bound: rng.gen_range(0..=2),
                }
            }
            _ if !pool.is_empty() => {
                let k = rng.gen_range(1..=pool.len().min(3));
                DependForm::Linear {
                    terms: pool
                        .choose_multiple(rng, k)
                        .map(|v| (v.clone(), rng.gen_range(-2..=2) as f64))
                        .collect(),
                    cmp: [Comparator::Le, Comparator::Ge, Comparator::Ne][rng.gen_range(0..3)],
                    bound: rng.gen_range(-3..=3) as f64,
                }
            }
            _ => continue,
        };
        m.depends.push(Depend::constraint(format!("k{i}"), form));
    }
    Rop::from_model(m)
}

// ---------------------------------------------------------------- runtime

/// One trigger per criterion of `model` other than the rule, with a random
/// nonempty tolerable range inside the domain.
pub fn triggers<R: Rng>(rng: &mut R, model: &Model) -> Vec<Trigger> {
    let watched: Vec<&Criterion> = model
        .criteria
        .iter()
        .filter(|c| c.id != model.decision_rule || rng.gen_bool(0.5))
        .collect();
    watched
        .into_iter()
        .map(|c| {
            let values = c.domain.values();
            let range = if rng.gen_bool(0.5) {
                let mut picked = values.clone();
                picked.shuffle(rng);
                picked.truncate(rng.gen_range(1..=values.len()));
                ValueRange::Set(picked.into_iter().collect())
            } else {
                let a = c.domain.rank(&values[rng.gen_range(0..values.len())]).expect("rank");
                let b = c.domain.rank(&values[rng.gen_range(0..values.len())]).expect("rank");
                ValueRange::Interval { lo: a.min(b), hi: a.max(b) }
            };
            Trigger {
                id: format!("t_{}", c.id),
                criterion: c.id.clone(),
                range,
            }
        })
        .collect()
}

/// Random widening bands that keep every range inside its domain.
pub fn widening<R: Rng>(rng: &mut R, model: &Model, triggers: &[Trigger]) -> BTreeMap<String, Widening> {
    let mut out = BTreeMap::new();
    for t in triggers {
        if rng.gen_bool(0.3) {
            continue;
        }
        let domain = &model.criterion(&t.criterion).expect("criterion").domain;
        let (dlo, dhi) = domain.bounds();
        let (lo, hi) = match &t.range {
            ValueRange::Interval { lo, hi } => (*lo, *hi),
            ValueRange::Set(s) => {
                let ranks: Vec<f64> = s.iter().filter_map(|v| domain.rank(v)).collect();
                (
                    ranks.iter().copied().fold(f64::INFINITY, f64::min),
                    ranks.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                )
            }
        };
        let below = if lo > dlo { rng.gen_range(0.0..=lo - dlo) } else { 0.0 };
        let above = if dhi > hi { rng.gen_range(0.0..=dhi - hi) } else { 0.0 };
        out.insert(t.criterion.clone(), Widening { below, above });
    }
    out
}

/// Nondecreasing events on the model's exogenous variables, values drawn
/// from their domains.
pub fn trace<R: Rng>(rng: &mut R, model: &Model, max_events: usize, max_tick: u64) -> EventTrace {
    let vars: Vec<(String, Domain)> = model
        .monitored
        .iter()
        .map(|v| (v.id.clone(), v.domain.clone()))
        .chain(model.change_scope.iter().map(|v| (v.id.clone(), v.domain.clone())))
        .collect();
    let mut t = EventTrace::default();
    if vars.is_empty() {
        return t;
    }
    let mut ticks: Vec<u64> = (0..rng.gen_range(0..=max_events)).map(|_| rng.gen_range(0..=max_tick)).collect();
    ticks.sort_unstable();
    for tick in ticks {
        let (id, d) = &vars[rng.gen_range(0..vars.len())];
        let values = d.values();
        t.push(tick, id.clone(), values[rng.gen_range(0..values.len())].to_string());
    }
    t
}
