use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use topoclust::io::save_ensemble;
use topoclust::synth::generate_gaussians_ensemble;

fn topoclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topoclust"))
        .args(args)
        .env_remove("TOPOCLUST_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn validate_report(path: &Path) -> Value {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(schema_path).unwrap()).unwrap();
    let report: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:#?}");
    report
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn reversed_k_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = topoclust(&[
        "run",
        "--synth",
        "gaussians",
        "--kmin",
        "5",
        "--kmax",
        "2",
        "-o",
        path_str(dir.path()),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--kmin"));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(topoclust(&["run"]).status.code(), Some(2));
    assert_eq!(
        topoclust(&["run", "--synth", "gaussians", "--tmax", "fast"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(topoclust(&["nonsense"]).status.code(), Some(2));
    assert!(topoclust(&["--help"]).status.success());
}

#[test]
fn k_max_above_member_count_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = topoclust(&[
        "run",
        "--synth",
        "gaussians:n=6,grid=12x12",
        "--kmax",
        "7",
        "-o",
        path_str(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn diagram_and_distance_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("path.sfield");
    fs::write(&field, "SFIELD 1\ndims 5 1 1\nspacing 1 1 1\norigin 0 0 0\n2 0 4 1 5\n").unwrap();
    let o = topoclust(&["diagram", path_str(&field)]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut pairs: Vec<(f64, f64)> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("birth"))
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[0].parse().unwrap(), cols[1].parse().unwrap())
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert_eq!(pairs, vec![(0.0, 5.0), (1.0, 4.0)]);

    let d = dir.path().join("d.pdiag");
    assert!(topoclust(&["diagram", path_str(&field), "-o", path_str(&d)])
        .status
        .success());
    let o = topoclust(&["distance", path_str(&d), path_str(&d)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.0);

    let pruned = dir.path().join("p.pdiag");
    let args = [
        "diagram",
        path_str(&field),
        "--pthreshold",
        "3",
        "-o",
        path_str(&pruned),
    ];
    assert!(topoclust(&args).status.success());
    let o = topoclust(&["distance", path_str(&d), path_str(&pruned)]);
    // removing (1,4) costs its distance to the diagonal, 3/sqrt(2)
    let w: f64 = stdout(&o).trim().parse().unwrap();
    assert!((w - 4.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn run_from_directory_writes_schema_valid_report() {
    let data = tempfile::tempdir().unwrap();
    let ensemble = generate_gaussians_ensemble(9, 3, [20, 20, 1], 0.05, 3).unwrap();
    save_ensemble(&ensemble, data.path()).unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = topoclust(&[
        "run",
        "--input",
        path_str(data.path()),
        "--family",
        "both",
        "--kmin",
        "1",
        "--kmax",
        "4",
        "--tmax",
        "5s",
        "--threads",
        "2",
        "-o",
        path_str(out.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = validate_report(&out.path().join("report.json"));
    assert_eq!(report["n_members"], 9);
    let families = report["families"].as_array().unwrap();
    assert_eq!(families.len(), 2);
    for f in families {
        let name = f["family"].as_str().unwrap();
        for k in f["per_k"].as_array().unwrap() {
            for c in k["centroids"].as_array().unwrap() {
                assert!(out.path().join(c.as_str().unwrap()).is_file());
            }
        }
        let scores = fs::read_to_string(out.path().join(format!("scores_{name}_aic.dat"))).unwrap();
        assert!(scores.lines().nth(1).unwrap().starts_with("1 1"));
        assert_eq!(fs::read_dir(out.path().join("diagrams").join(name)).unwrap().count(), 9);
    }
    assert_eq!(families[1]["selected_k"]["aic"], 3);
}

#[test]
fn noise_free_ensemble_reports_degenerate_variance() {
    let out = tempfile::tempdir().unwrap();
    let o = topoclust(&[
        "run",
        "--synth",
        "gaussians:n=9,grid=16x16,noise=0",
        "--kmin",
        "2",
        "--kmax",
        "4",
        "-o",
        path_str(out.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let report = validate_report(&out.path().join("report.json"));
    let family = &report["families"][0];
    assert!(family["selected_k"].is_null());
    assert!(family["selection_error"].as_str().unwrap().contains("variance"));
}

#[test]
fn select_on_precomputed_clusterings_finds_three_patterns() {
    let out = tempfile::tempdir().unwrap();
    let o = topoclust(&[
        "run",
        "--synth",
        "gaussians:n=30,patterns=3",
        "--kmin",
        "1",
        "--kmax",
        "1",
        "--seed",
        "1",
        "-o",
        path_str(out.path()),
    ]);
    assert!(o.status.success());
    let diagrams = out.path().join("diagrams/maxima");
    let clusterings = out.path().join("clusterings");
    fs::create_dir(&clusterings).unwrap();
    for k in 1..=6 {
        let file = clusterings.join(format!("k{k}.json"));
        let k = k.to_string();
        let args = [
            "cluster",
            path_str(&diagrams),
            "--k",
            &k,
            "--seed",
            "1",
            "-o",
            path_str(&file),
        ];
        let o = topoclust(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let o = topoclust(&["select", path_str(&clusterings), "--kmin", "1", "--kmax", "6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["selected_k_aic"], 3);
    assert_eq!(report["selected_k_bic"], 3);
    assert_eq!(report["per_k"].as_array().unwrap().len(), 6);

    let o = topoclust(&["barycenter", path_str(&diagrams)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("birth,death"));
}
