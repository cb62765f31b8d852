//! Acceptance suite. Prints one `criterion N: PASS|FAIL` line per criterion
//! and exits nonzero if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ropas_core::decision::{daop_to_rop, rank_alternatives};
use ropas_core::entailment::{check_drp, derive_closure, solve_drp, solve_rp2, solve_rp3, GoalGraph};
use ropas_core::io::{
    parse_decision_model, parse_goal_graph, parse_model, parse_trace, serialize_decision_model,
    serialize_goal_graph, serialize_model, serialize_trace, Scenario,
};
use ropas_core::model::{enumerate_specifications, Exogenous, Model, MonitoredVariable, Specification, Value, ValueRange};
use ropas_core::rop::{brute_force_oracle, decode_selection, encode_rdrp, solve_rop, Rop, SolveError};
use ropas_core::runtime::{run_simulation, select_adaptation, SimulationConfig};
use ropas_testkit as kit;

type Outcome = Result<String, String>;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn scenario(name: &str) -> Scenario {
    parse_model(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn within(start: Instant, limit: Duration, what: String) -> Outcome {
    let took = start.elapsed();
    if took < limit {
        Ok(format!("{what}, {:.2?}", took))
    } else {
        Err(format!("{what}, but took {:.2?} (limit {:?})", took, limit))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// rAFk with rBF1.
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

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let m = scenario("fig1.model").model;
    let specs = enumerate_specifications(&m, &m.initial_exogenous()).map_err(|e| e.to_string())?;
    let combos: u128 = m.parameters.iter().map(|p| p.domain.size()).product();
    ensure(specs.len() == 20, || format!("{} feasible specifications", specs.len()))?;
    // each requirement picks exactly one functionality, so 5 x 5 candidates
    let one_each = |s: &Specification| {
        ["A", "B"].iter().all(|g| {
            (1..=5)
                .filter(|i| s.get(&format!("r{g}F{i}")) == Some(&Value::Bool(true)))
                .count()
                == 1
        })
    };
    ensure(specs.iter().all(one_each), || "a specification selects zero or several functionalities".into())?;
    within(start, Duration::from_secs(1), format!("20 of 25 candidates ({combos} raw combinations)"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let fig3 = scenario("fig3.model").model;
    let mut exo = fig3.initial_exogenous();
    exo.insert("rAF4_ok".into(), Value::Bool(false));
    let rop = Rop::new(fig3.clone(), exo.clone());
    let sol = solve_rop(&rop).map_err(|e| e.to_string())?;
    let got: BTreeSet<Specification> = sol.optima.iter().cloned().collect();
    let want: BTreeSet<Specification> = [s(3), s(5)].into_iter().collect();
    ensure(got == want, || format!("adaptation set {:?}", sol.optima.iter().map(|s| s.to_string()).collect::<Vec<_>>()))?;
    ensure(sol == brute_force_oracle(&rop).map_err(|e| e.to_string())?, || "oracle disagrees".into())?;

    let inst = fig3.evaluate(&s(2), &exo).map_err(|e| e.to_string())?;
    let var = |id: &str| inst.get(id).and_then(Value::as_f64).unwrap_or(f64::NAN);
    ensure(var("Var1") >= 58.0 && var("Var2") < 30.0, || format!("S2 has Var1={} Var2={}", var("Var1"), var("Var2")))?;
    ensure(!fig3.is_feasible(&s(2), &exo).map_err(|e| e.to_string())?, || "S2 is feasible".into())?;

    let fig4 = scenario("fig4.model").model;
    let rop4 = Rop::new(fig4, exo);
    let pick = select_adaptation(&s(4), &rop4, &[], 1 << 20).map_err(|e| e.to_string())?;
    ensure(pick == Some(s(5)), || format!("utility rule picked {pick:?}"))?;
    within(start, Duration::from_secs(1), "{S3, S5}, S2 excluded by T2, utility picks S5".into())
}

fn rdrp_selections(g: &GoalGraph) -> Result<BTreeSet<BTreeSet<String>>, String> {
    let rop = encode_rdrp(g).map_err(|e| e.to_string())?;
    match solve_rop(&rop) {
        Ok(sol) => Ok(sol.optima.iter().map(|s| decode_selection(g, s)).collect()),
        Err(SolveError::Infeasible) => Ok(BTreeSet::new()),
        Err(e) => Err(e.to_string()),
    }
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let amb = parse_goal_graph(&fixture("amb_arrive.goals")).map_err(|e| e.to_string())?;
    let got = rdrp_selections(&amb)?;
    ensure(got == kit::naive_min_selections(&amb), || "AmbArrive disagrees".into())?;
    ensure(got.len() == 1 && got.iter().next().unwrap().len() == 5, || format!("AmbArrive gave {got:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut nonempty = 0;
    for i in 0..200 {
        let g = kit::goal_graph(&mut rng, 12);
        let got = rdrp_selections(&g)?;
        let want = kit::naive_min_selections(&g);
        ensure(got == want, || format!("graph {i}: rdrp {got:?} vs subsets {want:?}"))?;
        nonempty += usize::from(!want.is_empty());
    }
    within(start, Duration::from_secs(30), format!("AmbArrive + 200 graphs agree ({nonempty} satisfiable)"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut strict = 0;
    for i in 0..200 {
        let mut g = kit::goal_graph(&mut rng, 10);
        let rp2 = solve_rp2(&g).map_err(|e| e.to_string())?;
        let rp3 = solve_rp3(&g).map_err(|e| e.to_string())?.selections;
        ensure(rp3.iter().all(|s| rp2.contains(s)), || format!("graph {i}: rp3 not within rp2"))?;
        strict += usize::from(rp3.len() < rp2.len());

        g.mandatory = g.r_atoms.clone();
        let rp2: BTreeSet<_> = solve_rp2(&g).map_err(|e| e.to_string())?.into_iter().collect();
        let drp: BTreeSet<_> = solve_drp(&g).map_err(|e| e.to_string())?.into_iter().collect();
        let naive: BTreeSet<_> = kit::naive_solutions(&g, &g.r_atoms).into_iter().collect();
        ensure(rp2 == drp && drp == naive, || format!("graph {i}: all-mandatory rp2 differs from drp"))?;
    }
    Ok(format!("200 graphs, rp3 strictly smaller on {strict}"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..100 {
        let mut g = kit::goal_graph(&mut rng, 8);
        let atoms: Vec<String> = g.atoms.iter().cloned().collect();
        if g.conflicts.is_empty() {
            let a = atoms[rng.gen_range(0..atoms.len())].clone();
            let b = atoms[rng.gen_range(0..atoms.len())].clone();
            if a == b {
                continue;
            }
            g.add_conflict(a, b);
        }
        let (a, b) = g.conflicts.iter().next().cloned().unwrap();
        let mut facts: BTreeSet<String> = atoms.iter().filter(|_| rng.gen_bool(0.2)).cloned().collect();
        facts.insert(a);
        facts.insert(b);
        let c = derive_closure(&facts, &g).map_err(|e| e.to_string())?;
        ensure(c.bottom && c.atoms == g.atoms, || format!("instance {i}: conflicting facts did not derive everything"))?;
        for sel in kit::all_selections(&g) {
            let v = check_drp(&g, &sel).map_err(|e| e.to_string())?;
            ensure(v.consistency || !v.satisfaction, || format!("instance {i}: inconsistent selection satisfies"))?;
        }
    }
    Ok("100 instances".into())
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let dm = kit::decision_model(&mut rng);
        let ranking = rank_alternatives(&dm).map_err(|e| e.to_string())?;
        let naive = kit::naive_ranking(&dm);
        let got: Vec<(&str, f64)> = ranking.entries().collect();
        ensure(got.len() == naive.len(), || format!("model {i}: length differs"))?;
        for ((id, eu), (nid, neu)) in got.iter().zip(&naive) {
            let err = (eu - neu).abs();
            worst = worst.max(err);
            ensure(err <= 1e-12, || format!("model {i}: {id} EU {eu} vs {neu}"))?;
            // ties may come in either order only if the values agree
            ensure(*id == nid || (eu - neu).abs() <= 1e-12, || format!("model {i}: order differs"))?;
        }
        let sol = solve_rop(&daop_to_rop(&dm).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let picked: BTreeSet<String> = sol
            .optima
            .iter()
            .filter_map(|s| s.get("alternative").map(|v| v.to_string()))
            .collect();
        let best: BTreeSet<String> = ranking.best().iter().cloned().collect();
        ensure(picked == best, || format!("model {i}: daop optima {picked:?} vs best {best:?}"))?;
    }
    Ok(format!("500 models, max EU error {worst:e}"))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut infeasible = 0;
    for i in 0..500 {
        let count = rng.gen_range(0..=2);
        let rop = kit::rop(&mut rng, 1 << 14, kit::Exo { count });
        match (solve_rop(&rop), brute_force_oracle(&rop)) {
            (Ok(a), Ok(b)) => ensure(a == b, || format!("rop {i}: solver and oracle differ"))?,
            (Err(SolveError::Infeasible), Err(SolveError::Infeasible)) => infeasible += 1,
            (a, b) => return Err(format!("rop {i}: solver {a:?} vs oracle {b:?}")),
        }
    }
    within(start, Duration::from_secs(60), format!("500 ROPs agree ({infeasible} infeasible)"))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut strictly_fewer = 0;
    let mut pairs = 0;
    while pairs < 100 {
        let rop = kit::rop(&mut rng, 1 << 8, kit::Exo { count: 2 });
        let triggers = kit::triggers(&mut rng, &rop.model);
        if triggers.is_empty() {
            continue;
        }
        let widening = kit::widening(&mut rng, &rop.model, &triggers);
        let trace = kit::trace(&mut rng, &rop.model, 8, 30);
        let base = SimulationConfig {
            adaptation_duration: rng.gen_range(0..3),
            triggers,
            ..Default::default()
        };
        let wide = SimulationConfig {
            relaxation: widening,
            ..base.clone()
        };
        let (_, narrow) = run_simulation(&rop.model, &trace, &base).map_err(|e| format!("pair {pairs}: {e}"))?;
        let (_, relaxed) = run_simulation(&rop.model, &trace, &wide).map_err(|e| format!("pair {pairs}: {e}"))?;
        ensure(relaxed.trigger_count <= narrow.trigger_count, || {
            format!("pair {pairs}: {} triggers after relaxing, {} before", relaxed.trigger_count, narrow.trigger_count)
        })?;
        strictly_fewer += usize::from(relaxed.trigger_count < narrow.trigger_count);
        pairs += 1;
    }
    Ok(format!("100 pairs, {strictly_fewer} with strictly fewer triggers"))
}

/// Every assignment of the monitored variables leaves a feasible
/// specification within the Decision Set.
fn always_feasible(m: &Model) -> bool {
    let mut points: Vec<Exogenous> = vec![m.initial_exogenous()];
    for v in &m.monitored {
        points = points
            .into_iter()
            .flat_map(|e| {
                v.domain.values().into_iter().map(move |x| {
                    let mut e = e.clone();
                    e.insert(v.id.clone(), x);
                    e
                })
            })
            .collect();
    }
    points
        .into_iter()
        .all(|e| solve_rop(&Rop::new(m.clone(), e)).is_ok())
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut runs = 0;
    let mut events = 0;
    while runs < 100 {
        let mut m = kit::rop(&mut rng, 1 << 8, kit::Exo { count: 2 }).model;
        for v in &mut m.monitored {
            v.detectable = ValueRange::Set(v.domain.values().into_iter().collect());
        }
        if m.monitored.is_empty() || !m.change_scope.is_empty() || !always_feasible(&m) {
            continue;
        }
        let trace = kit::trace(&mut rng, &m, 10, 40);
        let config = SimulationConfig {
            triggers: kit::triggers(&mut rng, &m),
            ..Default::default()
        };
        let (_, metrics) = run_simulation(&m, &trace, &config).map_err(|e| format!("run {runs}: {e}"))?;
        ensure(metrics.optimal_time_fraction == 1.0, || {
            format!("run {runs}: fraction {}", metrics.optimal_time_fraction)
        })?;
        events += trace.events.len();
        runs += 1;
    }

    let sc = scenario("ambulance.model");
    let trace = parse_trace(&fixture("heavy_traffic.trace")).map_err(|e| e.to_string())?;
    let config = SimulationConfig {
        triggers: sc.triggers.clone(),
        ..Default::default()
    };
    let mut monitored = sc.model.clone();
    let traffic = monitored.change_scope.remove(0);
    monitored.monitored.push(MonitoredVariable {
        id: traffic.id,
        detectable: ValueRange::Set(traffic.domain.values().into_iter().collect()),
        domain: traffic.domain,
        initial: traffic.initial,
    });
    let (_, seen) = run_simulation(&monitored, &trace, &config).map_err(|e| e.to_string())?;
    ensure(seen.optimal_time_fraction == 1.0 && seen.ignored_event_count == 0, || {
        format!("monitored traffic: fraction {}", seen.optimal_time_fraction)
    })?;
    let (_, unseen) = run_simulation(&sc.model, &trace, &config).map_err(|e| e.to_string())?;
    ensure(unseen.optimal_time_fraction < 1.0 && unseen.ignored_event_count >= 1, || {
        format!(
            "unmonitored traffic: fraction {}, ignored {}",
            unseen.optimal_time_fraction, unseen.ignored_event_count
        )
    })?;
    Ok(format!(
        "100 random traces ({events} events) at 1.0; unmonitored traffic gives {:.4} with {} ignored",
        unseen.optimal_time_fraction, unseen.ignored_event_count
    ))
}

fn ropas(args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_ropas"))
        .args(args)
        .current_dir(fixture_dir())
        .output()
        .expect("run ropas");
    (out.status.code(), out.stdout)
}

fn criterion_10() -> Outcome {
    let runs: &[&[&str]] = &[
        &["validate", "fig1.model"],
        &["validate", "broken.model"],
        &["validate", "dispatch.goals"],
        &["validate", "response.decision"],
        &["enumerate", "fig1.model"],
        &["enumerate", "ambulance.model"],
        &["solve", "fig1.model", "--oracle"],
        &["solve", "fig3.model"],
        &["solve", "fig4.model", "--oracle"],
        &["encode-rdrp", "amb_arrive.goals"],
        &["encode-rdrp", "dispatch.goals"],
        &["rank", "fig4.decision"],
        &["rank", "response.decision"],
        &["simulate", "fig1.model", "fail_rAF4.trace", "--duration", "0"],
        &["simulate", "fig3.model", "fail_rAF4.trace", "--duration", "3", "--horizon", "20"],
        &["simulate", "ambulance.model", "sensor_failures.trace"],
        &["simulate", "ambulance.model", "heavy_traffic.trace", "--relax", "speed=1,0"],
    ];
    for args in runs {
        let first = ropas(args);
        for _ in 0..2 {
            ensure(ropas(args) == first, || format!("`ropas {}` differs between runs", args.join(" ")))?;
        }
        let expected = if args[1] == "broken.model" { Some(1) } else { Some(0) };
        ensure(first.0 == expected, || format!("`ropas {}` exited {:?}", args.join(" "), first.0))?;
    }

    let mut checked = 0;
    for name in ["fig1.model", "fig3.model", "fig4.model", "ambulance.model"] {
        let text = fixture(name);
        ensure(serialize_model(&scenario(name)) == text, || format!("{name} does not round-trip"))?;
        checked += 1;
    }
    for name in ["amb_arrive.goals", "dispatch.goals"] {
        let text = fixture(name);
        let g = parse_goal_graph(&text).map_err(|e| e.to_string())?;
        ensure(serialize_goal_graph(&g) == text, || format!("{name} does not round-trip"))?;
        // the encoded model is itself a round-trippable document
        let encoded = String::from_utf8(ropas(&["encode-rdrp", name]).1).map_err(|e| e.to_string())?;
        ensure(serialize_model(&parse_model(&encoded).map_err(|e| e.to_string())?) == encoded, || {
            format!("encoding of {name} does not round-trip")
        })?;
        checked += 2;
    }
    for name in ["fig4.decision", "response.decision"] {
        let text = fixture(name);
        let dm = parse_decision_model(&text).map_err(|e| e.to_string())?;
        ensure(serialize_decision_model(&dm) == text, || format!("{name} does not round-trip"))?;
        checked += 1;
    }
    for name in ["fail_rAF4.trace", "heavy_traffic.trace", "sensor_failures.trace"] {
        let text = fixture(name);
        ensure(serialize_trace(&parse_trace(&text).map_err(|e| e.to_string())?) == text, || {
            format!("{name} does not round-trip")
        })?;
        checked += 1;
    }
    Ok(format!("{} invocations x3 identical, {checked} round-trips exact", runs.len()))
}

fn main() -> ExitCode {
    let criteria: [fn() -> Outcome; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(c)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL ({detail})", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of 10 criteria failed");
        ExitCode::FAILURE
    }
}
