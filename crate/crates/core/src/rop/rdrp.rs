//! Goal graph to binary ROP: pick the fewest specification atoms whose
//! closure with K reaches every requirement without conflict.
//!
//! Each S atom becomes a binary Parameter (named after the atom). R and K
//! atoms become binary Criteria computed from their refinements; K atoms are
//! facts and evaluate to 1. When an S atom is also the conclusion of some
//! refinement, a helper criterion `<atom>__derived` carries its closure
//! value. Conflicts become NAND constraints on closure values.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::Rop;
use crate::entailment::{EntailmentError, GoalGraph, Selection};
use crate::model::{
    BoolExpr, Comparator, Criterion, CriterionKind, Depend, DependForm, Domain, Model, Parameter,
    Specification, Value,
};

/// Id of the decision-rule criterion, `-(number of selected atoms)`.
pub const RDRP_OBJECTIVE: &str = "neg_selection_size";

const HELPER_SUFFIX: &str = "__derived";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error(transparent)]
    Graph(#[from] EntailmentError),
    #[error("atom `{0}` is in none of R, K, S")]
    Unpartitioned(String),
    #[error("refinements form a cycle through `{0}`")]
    Cyclic(String),
    #[error("atom `{0}` clashes with a generated variable id")]
    NameClash(String),
}

/// Single operands stand alone, matching what the parser builds.
fn collapse(mut items: Vec<BoolExpr>, join: fn(Vec<BoolExpr>) -> BoolExpr) -> BoolExpr {
    if items.len() == 1 {
        items.pop().expect("one")
    } else {
        join(items)
    }
}

fn topo_check(graph: &GoalGraph) -> Result<(), EncodeError> {
    let mut deps: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in &graph.refinements {
        deps.entry(r.conclusion.as_str())
            .or_default()
            .extend(r.premises.iter().map(String::as_str));
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: BTreeMap<&str, u8> = BTreeMap::new();
    fn visit<'a>(
        a: &'a str,
        deps: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        state: &mut BTreeMap<&'a str, u8>,
    ) -> Result<(), EncodeError> {
        match state.get(a) {
            Some(1) => return Err(EncodeError::Cyclic(a.to_string())),
            Some(_) => return Ok(()),
            None => {}
        }
        state.insert(a, 1);
        if let Some(ps) = deps.get(a) {
            for p in ps {
                visit(p, deps, state)?;
            }
        }
        state.insert(a, 2);
        Ok(())
    }
    for a in deps.keys() {
        visit(a, &deps, &mut state)?;
    }
    Ok(())
}

pub fn encode_rdrp(graph: &GoalGraph) -> Result<Rop, EncodeError> {
    graph.validate()?;
    for a in &graph.atoms {
        if !graph.r_atoms.contains(a) && !graph.k_atoms.contains(a) && !graph.s_atoms.contains(a) {
            return Err(EncodeError::Unpartitioned(a.clone()));
        }
    }
    for a in &graph.atoms {
        if a == RDRP_OBJECTIVE || a.ends_with(HELPER_SUFFIX) {
            return Err(EncodeError::NameClash(a.clone()));
        }
    }
    topo_check(graph)?;

    let mut by_conclusion: BTreeMap<&str, Vec<&BTreeSet<String>>> = BTreeMap::new();
    for r in &graph.refinements {
        by_conclusion.entry(&r.conclusion).or_default().push(&r.premises);
    }
    // variable holding an atom's closure value
    let closure_var = |a: &str| -> String {
        if graph.s_atoms.contains(a) && by_conclusion.contains_key(a) {
            format!("{a}{HELPER_SUFFIX}")
        } else {
            a.to_string()
        }
    };
    let derivation = |a: &str| -> BoolExpr {
        let alts: Vec<BoolExpr> = by_conclusion
            .get(a)
            .map(|rs| {
                rs.iter()
                    .map(|ps| collapse(ps.iter().map(|p| BoolExpr::Var(closure_var(p))).collect(), BoolExpr::And))
                    .collect()
            })
            .unwrap_or_default();
        if alts.is_empty() {
            BoolExpr::Const(false)
        } else {
            collapse(alts, BoolExpr::Or)
        }
    };

    let mut model = Model::default();
    for a in &graph.s_atoms {
        model.parameters.push(Parameter::new(a.clone(), Domain::Boolean));
        model.decision_set.insert(a.clone());
        if by_conclusion.contains_key(a.as_str()) {
            let helper = closure_var(a);
            model
                .criteria
                .push(Criterion::new(helper.clone(), Domain::Boolean, CriterionKind::DomainKnowledge));
            let expr = BoolExpr::Or(vec![BoolExpr::Var(a.clone()), derivation(a)]);
            model
                .depends
                .push(Depend::function(format!("ref_{helper}"), helper, DependForm::Formula(expr)));
        }
    }
    for a in &graph.r_atoms {
        model
            .criteria
            .push(Criterion::new(a.clone(), Domain::Boolean, CriterionKind::Requirement));
        model
            .depends
            .push(Depend::function(format!("ref_{a}"), a.clone(), DependForm::Formula(derivation(a))));
    }
    for a in &graph.k_atoms {
        model
            .criteria
            .push(Criterion::new(a.clone(), Domain::Boolean, CriterionKind::DomainKnowledge));
        model
            .depends
            .push(Depend::function(format!("ref_{a}"), a.clone(), DependForm::Formula(BoolExpr::Const(true))));
    }
    for (name, atoms) in [("all_r", &graph.r_atoms), ("all_k", &graph.k_atoms)] {
        if !atoms.is_empty() {
            model.depends.push(Depend::constraint(
                name,
                DependForm::Cardinality {
                    inputs: atoms.iter().cloned().collect(),
                    cmp: Comparator::Eq,
                    bound: atoms.len() as i64,
                },
            ));
        }
    }
    for (i, (a, b)) in graph.conflicts.iter().enumerate() {
        model.depends.push(Depend::constraint(
            format!("conflict_{i}"),
            DependForm::Incompatible(closure_var(a), closure_var(b)),
        ));
    }

    let n = graph.s_atoms.len() as i64;
    model.criteria.push(Criterion::new(
        RDRP_OBJECTIVE,
        Domain::IntegerRange { lo: -n, hi: 0 },
        CriterionKind::Utility,
    ));
    model.depends.push(Depend::function(
        "objective",
        RDRP_OBJECTIVE,
        DependForm::WeightedSum {
            terms: graph.s_atoms.iter().map(|a| (a.clone(), -1.0)).collect(),
            constant: 0.0,
        },
    ));
    model.decision_rule = RDRP_OBJECTIVE.to_string();
    Ok(Rop::from_model(model))
}

/// The S atoms a solution of [`encode_rdrp`] selects.
pub fn decode_selection(graph: &GoalGraph, spec: &Specification) -> Selection {
    graph
        .s_atoms
        .iter()
        .filter(|a| spec.get(a) == Some(&Value::Bool(true)))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entailment::{check_drp, Refinement};
    use crate::rop::solve_rop;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn alternative_refinements_pick_the_smaller() {
        let g = GoalGraph {
            atoms: set(&["r", "a", "b", "c", "d", "e"]),
            refinements: vec![Refinement::new("r", ["a", "b"]), Refinement::new("r", ["c", "d", "e"])],
            r_atoms: set(&["r"]),
            s_atoms: set(&["a", "b", "c", "d", "e"]),
            ..Default::default()
        };
        let sol = solve_rop(&encode_rdrp(&g).unwrap()).unwrap();
        assert_eq!(sol.objective, Value::Int(-2));
        let picks: Vec<Selection> = sol.optima.iter().map(|s| decode_selection(&g, s)).collect();
        assert_eq!(picks, vec![set(&["a", "b"])]);
        assert!(check_drp(&g, &picks[0]).unwrap().satisfaction);
    }

    #[test]
    fn empty_r_and_k_select_nothing() {
        let g = GoalGraph {
            atoms: set(&["a", "b"]),
            s_atoms: set(&["a", "b"]),
            ..Default::default()
        };
        let sol = solve_rop(&encode_rdrp(&g).unwrap()).unwrap();
        assert_eq!(sol.objective, Value::Int(0));
        assert_eq!(sol.optima.len(), 1);
        assert!(decode_selection(&g, &sol.optima[0]).is_empty());
    }

    #[test]
    fn s_atom_with_refinement_can_be_derived_or_selected() {
        // r <- s1; s1 <- s2. Selecting either s1 or s2 alone suffices.
        let g = GoalGraph {
            atoms: set(&["r", "s1", "s2"]),
            refinements: vec![Refinement::new("r", ["s1"]), Refinement::new("s1", ["s2"])],
            r_atoms: set(&["r"]),
            s_atoms: set(&["s1", "s2"]),
            ..Default::default()
        };
        let sol = solve_rop(&encode_rdrp(&g).unwrap()).unwrap();
        let picks: Vec<Selection> = sol.optima.iter().map(|s| decode_selection(&g, s)).collect();
        assert_eq!(picks, vec![set(&["s2"]), set(&["s1"])]);
    }

    #[test]
    fn unpartitioned_atom_rejected() {
        let g = GoalGraph {
            atoms: set(&["x"]),
            ..Default::default()
        };
        assert_eq!(encode_rdrp(&g), Err(EncodeError::Unpartitioned("x".into())));
    }

    #[test]
    fn cycle_rejected() {
        let g = GoalGraph {
            atoms: set(&["a", "b"]),
            refinements: vec![Refinement::new("a", ["b"]), Refinement::new("b", ["a"])],
            r_atoms: set(&["a", "b"]),
            ..Default::default()
        };
        assert!(matches!(encode_rdrp(&g), Err(EncodeError::Cyclic(_))));
    }
}
