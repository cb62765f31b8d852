//! Goal-graph reasoning for the Default Requirements Problem family.
//!
//! Entailment `K, S ⊢ R` is read as definite-Horn forward chaining over
//! AND-refinements (several refinements of one conclusion are alternatives),
//! plus conflict pairs. A closure in which both atoms of a conflict pair are
//! derived contains ⊥ and, from there, every atom.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::model::DEFAULT_CAP;

/// The distinguished contradiction atom.
pub const BOTTOM: &str = "⊥";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntailmentError {
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("`{0}` is not a specification atom")]
    NotSpecificationAtom(String),
    #[error("atom `{0}` belongs to more than one of R, K, S")]
    OverlappingPartitions(String),
    #[error("mandatory atom `{0}` is not a requirement")]
    MandatoryNotRequirement(String),
    #[error("refinement of `{0}` has no premises")]
    EmptyRefinement(String),
    #[error("{0} selections exceed the enumeration cap of {1}")]
    TooLarge(u128, u128),
}

/// `conclusion` holds when every premise holds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Refinement {
    pub conclusion: String,
    pub premises: BTreeSet<String>,
}

impl Refinement {
    pub fn new<I, S>(conclusion: impl Into<String>, premises: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Refinement {
            conclusion: conclusion.into(),
            premises: premises.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GoalGraph {
    pub atoms: BTreeSet<String>,
    pub refinements: Vec<Refinement>,
    /// Unordered pairs, stored with the smaller atom first.
    pub conflicts: BTreeSet<(String, String)>,
    pub r_atoms: BTreeSet<String>,
    pub k_atoms: BTreeSet<String>,
    pub s_atoms: BTreeSet<String>,
    pub mandatory: BTreeSet<String>,
}

pub type Selection = BTreeSet<String>;

impl GoalGraph {
    pub fn add_conflict(&mut self, a: impl Into<String>, b: impl Into<String>) {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            self.conflicts.insert((a, b));
        } else {
            self.conflicts.insert((b, a));
        }
    }

    /// R \ mandatory.
    pub fn non_mandatory(&self) -> BTreeSet<String> {
        self.r_atoms.difference(&self.mandatory).cloned().collect()
    }

    pub fn validate(&self) -> Result<(), EntailmentError> {
        let known = |a: &String| {
            if self.atoms.contains(a) {
                Ok(())
            } else {
                Err(EntailmentError::UnknownAtom(a.clone()))
            }
        };
        for a in self.r_atoms.iter().chain(&self.k_atoms).chain(&self.s_atoms) {
            known(a)?;
        }
        for a in &self.r_atoms {
            if self.k_atoms.contains(a) || self.s_atoms.contains(a) {
                return Err(EntailmentError::OverlappingPartitions(a.clone()));
            }
        }
        for a in &self.k_atoms {
            if self.s_atoms.contains(a) {
                return Err(EntailmentError::OverlappingPartitions(a.clone()));
            }
        }
        for m in &self.mandatory {
            if !self.r_atoms.contains(m) {
                return Err(EntailmentError::MandatoryNotRequirement(m.clone()));
            }
        }
        for (a, b) in &self.conflicts {
            known(a)?;
            known(b)?;
        }
        for r in &self.refinements {
            known(&r.conclusion)?;
            if r.premises.is_empty() {
                return Err(EntailmentError::EmptyRefinement(r.conclusion.clone()));
            }
            for p in &r.premises {
                known(p)?;
            }
        }
        Ok(())
    }

    /// Apply an atom renaming to every part of the graph.
    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> GoalGraph {
        let map = |s: &BTreeSet<String>| s.iter().map(|a| f(a)).collect::<BTreeSet<_>>();
        let mut g = GoalGraph {
            atoms: map(&self.atoms),
            refinements: self
                .refinements
                .iter()
                .map(|r| Refinement {
                    conclusion: f(&r.conclusion),
                    premises: map(&r.premises),
                })
                .collect(),
            conflicts: BTreeSet::new(),
            r_atoms: map(&self.r_atoms),
            k_atoms: map(&self.k_atoms),
            s_atoms: map(&self.s_atoms),
            mandatory: map(&self.mandatory),
        };
        for (a, b) in &self.conflicts {
            g.add_conflict(f(a), f(b));
        }
        g
    }
}

/// Result of forward chaining.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Closure {
    pub atoms: BTreeSet<String>,
    /// ⊥ was derived; `atoms` then holds every atom of the graph.
    pub bottom: bool,
}

impl Closure {
    pub fn contains(&self, atom: &str) -> bool {
        atom == BOTTOM && self.bottom || self.atoms.contains(atom)
    }
}

/// Least fixpoint of the refinement rules over `facts`, with ex falso on
/// conflicts.
pub fn derive_closure(facts: &BTreeSet<String>, graph: &GoalGraph) -> Result<Closure, EntailmentError> {
    for f in facts {
        if !graph.atoms.contains(f) {
            return Err(EntailmentError::UnknownAtom(f.clone()));
        }
    }
    let mut missing: Vec<usize> = graph.refinements.iter().map(|r| r.premises.len()).collect();
    let mut watchers: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in graph.refinements.iter().enumerate() {
        for p in &r.premises {
            watchers.entry(p.as_str()).or_default().push(i);
        }
    }
    let mut derived: BTreeSet<String> = BTreeSet::new();
    let mut queue: VecDeque<&str> = facts.iter().map(String::as_str).collect();
    while let Some(a) = queue.pop_front() {
        if !derived.insert(a.to_string()) {
            continue;
        }
        for &i in watchers.get(a).map(Vec::as_slice).unwrap_or(&[]) {
            missing[i] -= 1;
            if missing[i] == 0 {
                queue.push_back(&graph.refinements[i].conclusion);
            }
        }
    }
    let bottom = graph
        .conflicts
        .iter()
        .any(|(a, b)| derived.contains(a) && derived.contains(b));
    if bottom {
        derived = graph.atoms.clone();
    }
    Ok(Closure {
        atoms: derived,
        bottom,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DrpVerdict {
    pub satisfaction: bool,
    pub consistency: bool,
    pub derived: Closure,
}

/// Check a candidate Specification: both `K, S ⊢ R` and `K, S ⊬ ⊥`.
pub fn check_drp(graph: &GoalGraph, selection: &Selection) -> Result<DrpVerdict, EntailmentError> {
    for s in selection {
        if !graph.s_atoms.contains(s) {
            return Err(if graph.atoms.contains(s) {
                EntailmentError::NotSpecificationAtom(s.clone())
            } else {
                EntailmentError::UnknownAtom(s.clone())
            });
        }
    }
    let facts: BTreeSet<String> = graph.k_atoms.union(selection).cloned().collect();
    let derived = derive_closure(&facts, graph)?;
    let consistency = !derived.bottom;
    let satisfaction = consistency && graph.r_atoms.is_subset(&derived.atoms);
    Ok(DrpVerdict {
        satisfaction,
        consistency,
        derived,
    })
}

/// Every subset of S, in binary counting order over the sorted atoms.
fn selections(graph: &GoalGraph, cap: u128) -> Result<impl Iterator<Item = Selection> + '_, EntailmentError> {
    let n = graph.s_atoms.len();
    let total: u128 = if n >= 127 { u128::MAX } else { 1u128 << n };
    if total > cap {
        return Err(EntailmentError::TooLarge(total, cap));
    }
    let atoms: Vec<&String> = graph.s_atoms.iter().collect();
    Ok((0..total as u64).map(move |mask| {
        atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, a)| (*a).clone())
            .collect()
    }))
}

/// All selections that solve the DRP (satisfaction and consistency).
pub fn solve_drp(graph: &GoalGraph) -> Result<Vec<Selection>, EntailmentError> {
    graph.validate()?;
    let mut out = Vec::new();
    for sel in selections(graph, DEFAULT_CAP)? {
        if check_drp(graph, &sel)?.satisfaction {
            out.push(sel);
        }
    }
    Ok(out)
}

/// All consistent selections that derive every mandatory requirement.
pub fn solve_rp2(graph: &GoalGraph) -> Result<Vec<Selection>, EntailmentError> {
    solve_rp2_with_cap(graph, DEFAULT_CAP)
}

pub fn solve_rp2_with_cap(graph: &GoalGraph, cap: u128) -> Result<Vec<Selection>, EntailmentError> {
    graph.validate()?;
    let mut out = Vec::new();
    for sel in selections(graph, cap)? {
        let v = check_drp(graph, &sel)?;
        if v.consistency && graph.mandatory.is_subset(&v.derived.atoms) {
            out.push(sel);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rp3Solutions {
    pub selections: Vec<Selection>,
    /// Number of non-mandatory requirements every returned selection derives.
    pub satisfied_non_mandatory: usize,
}

/// The RP2 solutions that derive the most non-mandatory requirements.
pub fn solve_rp3(graph: &GoalGraph) -> Result<Rp3Solutions, EntailmentError> {
    let rp2 = solve_rp2(graph)?;
    let nm = graph.non_mandatory();
    let mut best = 0usize;
    let mut out: Vec<Selection> = Vec::new();
    for sel in rp2 {
        let facts: BTreeSet<String> = graph.k_atoms.union(&sel).cloned().collect();
        let closure = derive_closure(&facts, graph)?;
        let count = nm.iter().filter(|a| closure.atoms.contains(*a)).count();
        if out.is_empty() || count > best {
            best = count;
            out = vec![sel];
        } else if count == best {
            out.push(sel);
        }
    }
    Ok(Rp3Solutions {
        selections: out,
        satisfied_non_mandatory: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    const SUBS: [&str; 5] = ["Identify", "Locate", "Dispatch", "Route", "Confirm"];

    fn amb_arrive() -> GoalGraph {
        let mut atoms = set(&SUBS);
        atoms.insert("AmbArrive".into());
        GoalGraph {
            atoms,
            refinements: vec![Refinement::new("AmbArrive", SUBS)],
            r_atoms: set(&["AmbArrive"]),
            s_atoms: set(&SUBS),
            mandatory: set(&["AmbArrive"]),
            ..Default::default()
        }
    }

    #[test]
    fn all_five_derive_amb_arrive() {
        let g = amb_arrive();
        let c = derive_closure(&set(&SUBS), &g).unwrap();
        assert!(c.contains("AmbArrive"));
        assert!(!c.bottom);
        let four = derive_closure(&set(&SUBS[..4]), &g).unwrap();
        assert!(!four.contains("AmbArrive"));
    }

    #[test]
    fn empty_facts_empty_closure() {
        let c = derive_closure(&BTreeSet::new(), &amb_arrive()).unwrap();
        assert!(c.atoms.is_empty());
    }

    #[test]
    fn unknown_fact_is_an_error() {
        assert_eq!(
            derive_closure(&set(&["nope"]), &amb_arrive()),
            Err(EntailmentError::UnknownAtom("nope".into()))
        );
    }

    #[test]
    fn conflicting_facts_explode() {
        let mut g = amb_arrive();
        g.add_conflict("Locate", "Identify");
        let c = derive_closure(&set(&["Identify", "Locate"]), &g).unwrap();
        assert!(c.bottom);
        assert!(c.contains(BOTTOM));
        assert_eq!(c.atoms, g.atoms);
    }

    #[test]
    fn drp_verdicts() {
        let g = amb_arrive();
        let v = check_drp(&g, &set(&SUBS)).unwrap();
        assert!(v.satisfaction && v.consistency);
        let v = check_drp(&g, &BTreeSet::new()).unwrap();
        assert!(!v.satisfaction && v.consistency);

        let mut g = g;
        g.add_conflict("Route", "Confirm");
        let v = check_drp(&g, &set(&SUBS)).unwrap();
        assert!(!v.consistency);
        assert!(!v.satisfaction);
        // the closure is everything, yet the verdict fails
        assert!(v.derived.atoms.contains("AmbArrive"));
    }

    #[test]
    fn selection_must_come_from_s() {
        let g = amb_arrive();
        assert_eq!(
            check_drp(&g, &set(&["AmbArrive"])),
            Err(EntailmentError::NotSpecificationAtom("AmbArrive".into()))
        );
    }

    #[test]
    fn rp3_prefers_more_non_mandatory() {
        // m needs a; n1 needs b; n2 needs c; b and c conflict with nothing
        // but d conflicts with c, so selections deriving both n1 and n2 win.
        let mut g = GoalGraph {
            atoms: set(&["m", "n1", "n2", "a", "b", "c"]),
            refinements: vec![
                Refinement::new("m", ["a"]),
                Refinement::new("n1", ["b"]),
                Refinement::new("n2", ["c"]),
            ],
            r_atoms: set(&["m", "n1", "n2"]),
            s_atoms: set(&["a", "b", "c"]),
            mandatory: set(&["m"]),
            ..Default::default()
        };
        g.add_conflict("b", "c");
        let rp2 = solve_rp2(&g).unwrap();
        assert_eq!(rp2.len(), 3); // {a}, {a,b}, {a,c}
        let rp3 = solve_rp3(&g).unwrap();
        assert_eq!(rp3.satisfied_non_mandatory, 1);
        assert_eq!(rp3.selections, vec![set(&["a", "b"]), set(&["a", "c"])]);
    }

    #[test]
    fn empty_mandatory_accepts_every_consistent_selection() {
        let mut g = amb_arrive();
        g.mandatory.clear();
        g.add_conflict("Route", "Confirm");
        let rp2 = solve_rp2(&g).unwrap();
        // 32 subsets minus the 8 containing both Route and Confirm
        assert_eq!(rp2.len(), 24);
        let rp3 = solve_rp3(&g).unwrap();
        assert!(rp3.selections.iter().all(|s| rp2.contains(s)));
    }

    #[test]
    fn overlapping_partitions_rejected() {
        let mut g = amb_arrive();
        g.k_atoms.insert("Route".into());
        assert!(matches!(g.validate(), Err(EntailmentError::OverlappingPartitions(_))));
    }
}
