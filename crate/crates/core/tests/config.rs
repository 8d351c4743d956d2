use std::fs;
use std::path::PathBuf;

use pcsom::config::{self, Scenario};
use pcsom::model;
use proptest::prelude::*;

fn workspace() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn echo(s: &Scenario) -> String {
    serde_json::to_string(&config::resolved_json(s)).unwrap()
}

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = workspace().join("fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn fuzz_seeds_reparse_through_the_echo() {
    for (name, text) in seeds("parse_config") {
        if let Ok(s) = config::parse_config(&text) {
            assert_eq!(config::parse_resolved(&echo(&s)).unwrap(), s, "{name}");
        }
    }
    for (name, text) in seeds("parse_resolved") {
        if let Ok(s) = config::parse_resolved(&text) {
            assert_eq!(config::parse_resolved(&echo(&s)).unwrap(), s, "{name}");
        }
    }
}

#[test]
fn malformed_seeds_are_rejected() {
    let all = seeds("parse_config");
    for bad in ["duplicate_key.ini", "nested_list.ini"] {
        let (_, text) = all.iter().find(|(n, _)| n == bad).unwrap();
        assert!(config::parse_config(text).is_err(), "{bad}");
    }
}

#[test]
fn example_scenarios_sit_at_zeta_two() {
    for name in ["fig2a.ini", "fig2bcde.ini", "fig3.ini", "fig4.ini"] {
        let text = fs::read_to_string(workspace().join("crates/cli/examples").join(name)).unwrap();
        let s = config::parse_config(&text).unwrap();
        let zeta = model::derive(&s.model).unwrap().zeta;
        assert!((zeta.norm() - 2.0).abs() < 0.05, "{name}: |zeta| = {}", zeta.norm());
    }
}

fn base() -> Scenario {
    let text = fs::read_to_string(workspace().join("crates/cli/examples/fig3.ini")).unwrap();
    config::parse_config(&text).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn echo_is_bit_exact(g1 in 1e-4f64..1.0, gamma_a in 1e-6f64..1.0, nbar in 0.0f64..20.0, tol in 1e-12f64..1e-3) {
        let mut s = base();
        s.model.g1 = g1;
        s.model.gamma_a = gamma_a;
        s.model = s.model.with_nbar(nbar);
        s.solver.tol = tol;
        let back = config::parse_resolved(&echo(&s)).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
        let _ = config::parse_config(&text);
        let _ = config::parse_resolved(&text);
    }

    #[test]
    fn overrides_set_exactly_one_value(v in 1e-6f64..1.0) {
        let text = fs::read_to_string(workspace().join("crates/cli/examples/fig3.ini")).unwrap();
        let s = config::parse_config_with(&text, &[format!("model.gamma_b1={v:e}")]).unwrap();
        let mut want = base();
        want.model.gamma_b1 = v;
        prop_assert_eq!(s, want);
    }
}
