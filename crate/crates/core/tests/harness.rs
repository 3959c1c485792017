use ec3lab::harness::{seed_collisions, sweep, SolverKind, SweepConfig, SweepTable};

fn config(json: &str) -> SweepConfig {
    SweepConfig::from_json(json).unwrap()
}

#[test]
fn low_density_is_almost_always_satisfiable() {
    let cfg = config(r#"{"n_list":[50],"r_list":[0.1],"trials":100,"base_seed":3}"#);
    let t = sweep(&cfg).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert!(t.rows[0].sat_fraction().unwrap() >= 0.95);

    let small = config(
        r#"{"n_list":[15],"r_list":[0.1],"trials":100,"base_seed":3,"solver":"brute-force"}"#,
    );
    assert!(sweep(&small).unwrap().rows[0].sat_fraction().unwrap() >= 0.95);
}

#[test]
fn sweeps_are_reproducible_across_worker_counts() {
    let base = r#"{"n_list":[20,40],"r_range":{"from":0.5,"to":0.7,"step":0.05},"trials":40,"base_seed":99"#;
    let one = sweep(&config(&format!(r#"{base},"workers":1}}"#))).unwrap();
    let four = sweep(&config(&format!(r#"{base},"workers":4}}"#))).unwrap();
    assert_eq!(one.to_csv(), four.to_csv());
    assert_eq!(one, four);
    assert_eq!(one.rows.len(), 10);
    let back = SweepTable::from_csv(&one.to_csv()).unwrap();
    assert_eq!(back.to_csv(), one.to_csv());
}

#[test]
fn native_and_exhaustive_solvers_tabulate_alike() {
    let base = r#"{"n_list":[8,12],"r_list":[0.4,0.6,0.8],"trials":60,"base_seed":5"#;
    let native = sweep(&config(&format!("{base}}}"))).unwrap();
    let mut cfg = config(&format!("{base}}}"));
    cfg.solver = SolverKind::BruteForce;
    let exhaustive = sweep(&cfg).unwrap();
    assert_eq!(native.to_csv(), exhaustive.to_csv());
}

#[test]
fn budget_exhaustion_is_counted_separately() {
    let cfg =
        config(r#"{"n_list":[120],"r_list":[0.64],"trials":30,"base_seed":8,"node_budget":2}"#);
    let row = &sweep(&cfg).unwrap().rows[0];
    assert!(row.budget_exceeded > 0);
    assert_eq!(row.sat + row.unsat() + row.budget_exceeded, row.trials);
}

#[test]
fn adding_grid_points_keeps_existing_rows() {
    let small = config(r#"{"n_list":[30],"r_list":[0.5,0.6],"trials":50,"base_seed":12}"#);
    let large =
        config(r#"{"n_list":[30,40],"r_list":[0.45,0.5,0.55,0.6],"trials":50,"base_seed":12}"#);
    let (a, b) = (sweep(&small).unwrap(), sweep(&large).unwrap());
    for row in &a.rows {
        assert_eq!(Some(row), b.row(row.n, row.r));
    }
    assert_eq!(seed_collisions(&large), 0);
}
