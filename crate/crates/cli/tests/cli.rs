use std::fs;
use std::path::PathBuf;

use pcsom::config;
use pcsom::experiments::csv;
use pcsom_cli::{resolve_workers, run, EXIT_CONFIG, EXIT_OK, EXIT_SOLVER};

fn example(name: &str) -> String {
    format!("{}/examples/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn out_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pcsom-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn pcsom(args: &[&str]) -> i32 {
    run(std::iter::once("pcsom").chain(args.iter().copied()))
}

#[test]
fn check_rwa_passes_on_every_example() {
    for name in ["fig2a.ini", "fig2bcde.ini", "fig3.ini", "fig4.ini"] {
        let dir = out_dir("rwa");
        assert_eq!(pcsom(&["check-rwa", &example(name), "-o", dir.to_str().unwrap()]), EXIT_OK, "{name}");
        let stem = name.trim_end_matches(".ini");
        let text = fs::read_to_string(dir.join(format!("{stem}.csv"))).unwrap();
        assert!(text.starts_with("left,right,ratio\n"));
        assert!(text.lines().count() > 1);
        assert!(dir.join(format!("{stem}.log")).exists());
    }
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    assert_eq!(pcsom(&["no-such-command"]), EXIT_CONFIG);
    assert_eq!(pcsom(&["steady", "/nonexistent/scenario.ini"]), EXIT_CONFIG);
    let dir = out_dir("badset");
    let d = dir.to_str().unwrap();
    assert_eq!(pcsom(&["steady", &example("fig2a.ini"), "-o", d, "--set", "model.no_such_key=1"]), EXIT_CONFIG);
    assert_eq!(pcsom(&["steady", &example("fig2a.ini"), "-o", d, "--set", "model.gamma_a=-1"]), EXIT_CONFIG);
}

#[test]
fn long_full_horizon_needs_the_flag() {
    let dir = out_dir("long");
    let code = pcsom(&["evolve", &example("fig2a.ini"), "-o", dir.to_str().unwrap(), "--set", "solver.t_end=1e5"]);
    assert_eq!(code, EXIT_SOLVER);
}

#[test]
fn undamped_steady_state_reaches_the_pair_coherent_state() {
    let dir = out_dir("steady");
    let args = [
        "steady",
        &example("fig2a.ini"),
        "-o",
        dir.to_str().unwrap(),
        "--set",
        "model.gamma_b1=0",
        "--set",
        "model.gamma_b2=0",
        "--set",
        "cutoffs.b1=12",
        "--set",
        "cutoffs.b2=12",
    ];
    assert_eq!(pcsom(&args), EXIT_OK);
    let text = fs::read_to_string(dir.join("fig2a.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(csv::ZETA_HEADER));
    let row: Vec<f64> = lines.next().unwrap().split(',').take(8).map(|v| v.parse().unwrap()).collect();
    assert!(row[1] > 0.995, "F = {}", row[1]);

    let echo = fs::read_to_string(dir.join("fig2a.resolved.json")).unwrap();
    let reparsed = config::parse_resolved(&echo).unwrap();
    let source = fs::read_to_string(example("fig2a.ini")).unwrap();
    let overrides: Vec<String> =
        ["model.gamma_b1=0", "model.gamma_b2=0", "cutoffs.b1=12", "cutoffs.b2=12"].map(String::from).to_vec();
    assert_eq!(reparsed, config::parse_config_with(&source, &overrides).unwrap());
}

#[test]
fn worker_flag_wins_over_environment() {
    assert_eq!(resolve_workers(Some(3), Some("5")), Ok(3));
    assert_eq!(resolve_workers(None, Some("5")), Ok(5));
    assert!(resolve_workers(None, None).unwrap() >= 1);
    assert!(resolve_workers(Some(0), None).is_err());
    assert!(resolve_workers(None, Some("many")).is_err());
    assert!(resolve_workers(None, Some("0")).is_err());
}

#[test]
fn selftest_passes() {
    assert_eq!(pcsom(&["selftest"]), EXIT_OK);
}
