//! The sample scenarios shipped with the crate stay valid.

use std::path::Path;

use kdv_lab::Scenario;

#[test]
fn shipped_scenarios_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut kinds = Vec::new();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let sc = Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            kinds.push(sc.experiment.kind().to_string());
        }
    }
    kinds.sort();
    kinds.dedup();
    assert_eq!(kinds.len(), 9, "{kinds:?}");
}

#[test]
fn shipped_scenarios_run() {
    let out = tempfile::tempdir().unwrap();
    for name in ["evolve-hamtrunc", "intertwining-bump", "symplecticity-bkdv"] {
        let sc = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json")))
            .unwrap();
        let report = kdv_lab::run_scenario(&sc, &out.path().join(name)).unwrap();
        assert!(report.artifacts.iter().any(|a| a == "summary.json"));
    }
}
