use std::fs;

use nlz::experiments::{self, Experiment, ExperimentConfig};

fn config(root: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        outdir: root.to_path_buf(),
        level_points: 201,
        fixed_point_samples: 201,
        ..ExperimentConfig::default()
    }
}

#[test]
fn figures_write_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    for e in [Experiment::Fig1, Experiment::Fig5] {
        let manifests = experiments::run(e, &config(dir.path())).unwrap();
        assert_eq!(manifests.len(), 1);
        let m = &manifests[0];
        assert!(
            m.passed(),
            "{:?}",
            m.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>()
        );
        let sub = dir.path().join(e.name());
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(sub.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(json["experiment"], e.name());
        assert!(json["checks"].as_array().is_some_and(|c| !c.is_empty()));
        for out in &m.outputs {
            let len = fs::metadata(sub.join(out)).unwrap().len();
            assert!(len > 0, "{out} is empty");
        }
        assert!(m.outputs.iter().any(|o| o.ends_with(".svg")));
    }
}

#[test]
fn reruns_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    experiments::run(Experiment::Fig5, &config(a.path())).unwrap();
    experiments::run(Experiment::Fig5, &config(b.path())).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path().join("fig5"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    for n in names.iter().filter(|n| n.to_str().is_some_and(|s| s.ends_with(".csv"))) {
        let x = fs::read(a.path().join("fig5").join(n)).unwrap();
        let y = fs::read(b.path().join("fig5").join(n)).unwrap();
        assert_eq!(x, y, "{n:?} differs");
    }
}
