//! The two-requirement running example: rA served by one of rAF1..5, rB by
//! one of rBF1..5, with Var1/Var2 thresholds and a utility over them.

use std::path::PathBuf;

use ropas_core::io::{parse_model, parse_trace, write_report, ReportFormat, Scenario};
use ropas_core::model::{
    enumerate_specifications, validate_model, DependForm, Model, Specification, Value,
};
use ropas_core::rop::{brute_force_oracle, classify, solve_rop, DependKind, Rop, VariableKind};
use ropas_core::runtime::{
    check_triggers, run_simulation, select_adaptation, EvolutionConstraint, PeriodKind,
    SimulationConfig, SimulationStatus,
};

fn load(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    parse_model(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// S_k: rAFk with rBF1, everything else off.
fn s(k: usize) -> Specification {
    let mut spec = Specification::new();
    for g in ["A", "B"] {
        for i in 1..=5 {
            let on = (g == "A" && i == k) || (g == "B" && i == 1);
            spec.set(format!("r{g}F{i}"), Value::Bool(on));
        }
    }
    spec
}

fn failed(model: &Model, var: &str) -> Rop {
    let mut exo = model.initial_exogenous();
    exo.insert(var.to_string(), Value::Bool(false));
    Rop::new(model.clone(), exo)
}

#[test]
fn twenty_of_twenty_five_combinations_are_feasible() {
    let m = load("fig1.model").model;
    assert!(validate_model(&m).is_valid());
    let specs = enumerate_specifications(&m, &m.initial_exogenous()).unwrap();
    assert_eq!(specs.len(), 20);

    let mut open = m.clone();
    open.depends.retain(|d| !matches!(d.form, DependForm::Incompatible(..)));
    assert_eq!(enumerate_specifications(&open, &open.initial_exogenous()).unwrap().len(), 25);
}

#[test]
fn s4_satisfies_both_requirements() {
    let m = load("fig1.model").model;
    let exo = m.initial_exogenous();
    assert_eq!(m.default_specification(), Some(s(4)));
    let inst = m.evaluate(&s(4), &exo).unwrap();
    assert_eq!(inst.get("rA"), Some(&Value::Bool(true)));
    assert_eq!(inst.get("rB"), Some(&Value::Bool(true)));
    assert!(m.is_feasible(&s(4), &exo).unwrap());

    let mut zero = s(4);
    zero.set("rAF4", Value::Bool(false));
    zero.set("rBF1", Value::Bool(false));
    let inst = m.evaluate(&zero, &exo).unwrap();
    assert_eq!(inst.get("rA"), Some(&Value::Bool(false)));
    assert_eq!(inst.get("rB"), Some(&Value::Bool(false)));
}

#[test]
fn fig1_is_binary_and_general() {
    let c = classify(&Rop::from_model(load("fig1.model").model));
    assert_eq!(c.variable_kind, VariableKind::Binary);
    assert_eq!(c.depend_kind, DependKind::General);
}

#[test]
fn s2_meets_the_var1_threshold_but_not_var2() {
    let sc = load("fig3.model");
    let m = &sc.model;
    let inst = m.evaluate(&s(2), &m.initial_exogenous()).unwrap();
    assert!(inst.get("Var1").unwrap().as_f64().unwrap() >= 58.0);
    assert!(inst.get("Var2").unwrap().as_f64().unwrap() < 30.0);
    assert_eq!(check_triggers(m, &inst, &sc.triggers), vec!["T2".to_string()]);
    assert!(!m.is_feasible(&s(2), &m.initial_exogenous()).unwrap());
}

#[test]
fn fixture_tables_respect_the_stated_orderings() {
    let m = load("fig4.model").model;
    let exo = m.initial_exogenous();
    let u = |k| m.evaluate(&s(k), &exo).unwrap().get("U").unwrap().as_f64().unwrap();
    assert!(u(5) > u(3) && u(3) > u(4));
}

#[test]
fn failing_raf4_leaves_s3_and_s5() {
    let m = load("fig3.model").model;
    let before = solve_rop(&Rop::from_model(m.clone())).unwrap();
    assert_eq!(before.optima, vec![s(5), s(4), s(3)]);

    let rop = failed(&m, "rAF4_ok");
    let after = solve_rop(&rop).unwrap();
    assert_eq!(after.optima, vec![s(5), s(3)]);
    assert_eq!(after, brute_force_oracle(&rop).unwrap());

    let pick = select_adaptation(&s(4), &rop, &[], 1 << 20).unwrap();
    assert_eq!(pick, Some(s(5)));
    let blocked = [EvolutionConstraint::ForbiddenTransition { from: s(4), to: s(5) }];
    assert_eq!(select_adaptation(&s(4), &rop, &blocked, 1 << 20).unwrap(), Some(s(3)));
}

#[test]
fn utility_rule_prefers_s5() {
    let m = load("fig4.model").model;
    let sol = solve_rop(&Rop::from_model(m.clone())).unwrap();
    assert_eq!(sol.optima, vec![s(5)]);
    assert_eq!(sol.objective, Value::Int(111));
    let rop = failed(&m, "rAF4_ok");
    assert_eq!(select_adaptation(&s(4), &rop, &[], 1 << 20).unwrap(), Some(s(5)));
}

#[test]
fn fig1_solver_agrees_with_oracle() {
    let rop = Rop::from_model(load("fig1.model").model);
    let sol = solve_rop(&rop).unwrap();
    assert_eq!(sol.optima.len(), 20);
    assert_eq!(sol, brute_force_oracle(&rop).unwrap());
    let rop = failed(&rop.model, "rAF4_ok");
    assert_eq!(select_adaptation(&s(4), &rop, &[], 1 << 20).unwrap(), Some(s(5)));
}

#[test]
fn simulation_switches_at_tick_ten() {
    let sc = load("fig3.model");
    let trace = parse_trace("t=10 rAF4_ok=0\n").unwrap();
    let config = SimulationConfig {
        triggers: sc.triggers.clone(),
        ..Default::default()
    };
    let (tl, metrics) = run_simulation(&sc.model, &trace, &config).unwrap();
    assert_eq!(tl.status, SimulationStatus::Completed);
    assert_eq!(tl.horizon, 11);
    assert_eq!(tl.periods.len(), 2);
    assert_eq!((tl.periods[0].start, tl.periods[0].end), (0, 10));
    assert_eq!(tl.periods[0].spec, s(4));
    assert_eq!((tl.periods[1].start, tl.periods[1].end), (10, 11));
    assert_eq!(tl.periods[1].spec, s(5));
    assert!(tl.periods.iter().all(|p| p.kind == PeriodKind::Stability));
    assert_eq!(metrics.optimal_time_fraction, 1.0);
    // S4 loses rA at tick 10, which is the only analysis that sees a failure
    assert_eq!(metrics.trigger_count, 1);
    assert_eq!(tl.periods[1].fired[0].trigger, "TA");

    let report = write_report(&tl, &metrics, ReportFormat::Machine);
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "ropas-report v1");
    assert!(lines[2].contains("start=0 end=10") && lines[2].contains("rAF4=1"));
    assert!(lines[3].contains("start=10 end=11") && lines[3].contains("rAF5=1"));
    assert!(lines.last().unwrap().starts_with("metrics optimal_time_fraction=1.000000 "));
}

#[test]
fn adaptation_period_keeps_the_old_spec() {
    let sc = load("fig3.model");
    let trace = parse_trace("t=10 rAF4_ok=0\n").unwrap();
    let config = SimulationConfig {
        adaptation_duration: 3,
        horizon: Some(20),
        ..Default::default()
    };
    let (tl, metrics) = run_simulation(&sc.model, &trace, &config).unwrap();
    let spans: Vec<(PeriodKind, u64, u64)> = tl.periods.iter().map(|p| (p.kind, p.start, p.end)).collect();
    assert_eq!(
        spans,
        vec![
            (PeriodKind::Stability, 0, 10),
            (PeriodKind::Adaptation, 10, 13),
            (PeriodKind::Stability, 13, 20)
        ]
    );
    assert_eq!(tl.periods[1].spec, s(4));
    assert_eq!(tl.periods[2].spec, s(5));
    assert_eq!(metrics.adaptation_tick_total, 3);
    assert_eq!(metrics.optimal_time_fraction, 17.0 / 20.0);
}
