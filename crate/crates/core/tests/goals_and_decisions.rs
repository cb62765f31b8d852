use std::collections::BTreeSet;
use std::path::PathBuf;

use ropas_core::decision::{daop_to_rop, expected_utility, rank_alternatives};
use ropas_core::entailment::{check_drp, derive_closure, solve_rp2, solve_rp3, Selection};
use ropas_core::io::{parse_decision_model, parse_goal_graph};
use ropas_core::model::Value;
use ropas_core::rop::{brute_force_oracle, decode_selection, encode_rdrp, solve_rop};

fn text(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn sel(items: &[&str]) -> Selection {
    items.iter().map(|s| s.to_string()).collect()
}

const FIVE: [&str; 5] = ["AssignAmb", "ChooseAmb", "ConfirmMob", "IdentAmb", "MobilizeAmb"];

#[test]
fn amb_arrive_needs_all_five() {
    let g = parse_goal_graph(&text("amb_arrive.goals")).unwrap();
    let closure = derive_closure(&sel(&FIVE), &g).unwrap();
    assert!(closure.contains("AmbArrive"));
    let v = check_drp(&g, &sel(&FIVE)).unwrap();
    assert!(v.satisfaction && v.consistency);
    assert!(!check_drp(&g, &sel(&FIVE[..4])).unwrap().satisfaction);

    let rop = encode_rdrp(&g).unwrap();
    let sol = solve_rop(&rop).unwrap();
    assert_eq!(sol.objective, Value::Int(-5));
    assert_eq!(sol.optima.len(), 1);
    assert_eq!(decode_selection(&g, &sol.optima[0]), sel(&FIVE));
    assert_eq!(sol, brute_force_oracle(&rop).unwrap());
}

#[test]
fn dispatch_graph_solutions() {
    let g = parse_goal_graph(&text("dispatch.goals")).unwrap();
    let sol = solve_rop(&encode_rdrp(&g).unwrap()).unwrap();
    assert_eq!(sol.objective, Value::Int(-3));
    let picks: BTreeSet<Selection> = sol.optima.iter().map(|s| decode_selection(&g, s)).collect();
    assert_eq!(
        picks,
        BTreeSet::from([
            sel(&["AutoLoc", "CallLog", "PhoneDispatch"]),
            sel(&["AutoLoc", "CallLog", "RadioDispatch"])
        ])
    );

    let rp2 = solve_rp2(&g).unwrap();
    let rp3 = solve_rp3(&g).unwrap();
    assert_eq!(rp3.satisfied_non_mandatory, 1);
    assert!(rp3.selections.iter().all(|s| rp2.contains(s)));
    assert!(rp3.selections.len() < rp2.len());
    // ManualLoc with PhoneDispatch is inconsistent
    let v = check_drp(&g, &sel(&["ManualLoc", "PhoneDispatch"])).unwrap();
    assert!(!v.consistency && !v.satisfaction);
    assert!(!rp2.contains(&sel(&["ManualLoc", "PhoneDispatch"])));
}

#[test]
fn fig4_decision_ranks_s5_s3_s4() {
    let dm = parse_decision_model(&text("fig4.decision")).unwrap();
    let ranking = rank_alternatives(&dm).unwrap();
    let order: Vec<(&str, f64)> = ranking.entries().collect();
    assert_eq!(order, vec![("S5", 111.0), ("S3", 102.0), ("S4", 95.0)]);
    let sol = solve_rop(&daop_to_rop(&dm).unwrap()).unwrap();
    let picked: Vec<&Value> = sol.optima.iter().map(|s| s.get("alternative").unwrap()).collect();
    assert_eq!(picked, vec![&Value::Label("S5".into())]);
}

#[test]
fn response_decision_with_transform() {
    let dm = parse_decision_model(&text("response.decision")).unwrap();
    // F is piecewise linear through (0,0), (0.5,0.4), (1,1)
    let expect = [("auto", 0.812), ("onboard", 0.608), ("manual", 0.32)];
    for (id, eu) in expect {
        assert!((expected_utility(&dm, id).unwrap() - eu).abs() < 1e-12, "{id}");
    }
    let ranking = rank_alternatives(&dm).unwrap();
    let ids: Vec<&str> = ranking.entries().map(|(a, _)| a).collect();
    assert_eq!(ids, vec!["auto", "onboard", "manual"]);
    let sol = solve_rop(&daop_to_rop(&dm).unwrap()).unwrap();
    assert_eq!(sol.optima.len(), 1);
    assert_eq!(sol.optima[0].get("alternative"), Some(&Value::Label("auto".into())));
}
