mod common;

use common::{column_file, protest, write, Fixtures};
use serde_json::Value;

fn run_json(sub: &str, config: &std::path::Path, out: &std::path::Path) -> Value {
    let o = protest(&[sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap()
}

fn stored_decision_is_consistent(v: &Value) {
    let p = v["posterior_probability"].as_f64().unwrap();
    let alpha = v["alpha"].as_f64().unwrap();
    let expected = if p <= alpha { "reject" } else { "not_reject" };
    assert_eq!(v["decision"], expected);
}

#[test]
fn quantile_run_is_reproducible() {
    let f = Fixtures::new();
    let a = f.path("a.json");
    let b = f.path("b.json");
    let v = run_json("quantile", &f.path("quantile.toml"), &a);
    run_json("quantile", &f.path("quantile.toml"), &b);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    stored_decision_is_consistent(&v);
    assert_eq!(v["n_draws"], 300);
    assert_eq!(v["seed"], 42);
    let s = &v["infimum_summary"];
    assert!(s["min"].as_f64().unwrap() <= s["median"].as_f64().unwrap());
    let curve = v["curve"].as_array().unwrap();
    assert_eq!(curve.len(), 4);
    assert!(v["config"].get("output").is_none());
}

#[test]
fn seed_override_changes_draws() {
    let f = Fixtures::new();
    let a = f.path("a.json");
    let b = f.path("b.json");
    run_json("quantile", &f.path("quantile.toml"), &a);
    let cfg = f.path("quantile.toml");
    let o = protest(
        &["quantile", "--config", cfg.to_str().unwrap(), "--seed", "43", "--draws", "100", "--out", b.to_str().unwrap()],
        None,
    );
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&b).unwrap()).unwrap();
    assert_eq!(v["seed"], 43);
    assert_eq!(v["n_draws"], 100);
}

#[test]
fn alpha_out_of_range_is_a_config_error() {
    let f = Fixtures::new();
    let text = std::fs::read_to_string(f.path("quantile.toml")).unwrap().replace("alpha = 0.05", "alpha = 1.5");
    let cfg = write(f.dir.path(), "bad.toml", &text);
    let o = protest(&["quantile", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`alpha`"));
}

#[test]
fn unknown_key_names_the_field() {
    let f = Fixtures::new();
    let text = format!("colour = 3\n{}", std::fs::read_to_string(f.path("quantile.toml")).unwrap());
    let cfg = write(f.dir.path(), "bad.toml", &text);
    let o = protest(&["quantile", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn subcommand_must_match_test() {
    let f = Fixtures::new();
    let cfg = f.path("quantile.toml");
    let o = protest(&["gof", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`test`"));
}

#[test]
fn identical_samples_are_never_rejected() {
    let f = Fixtures::new();
    for prior in [
        r#"{ kind = "dp", concentration = 1.0, base = { family = "normal", mean = 0.0, sd = 10.0 } }"#,
        r#"{ kind = "pt", hyper_c = 1.0, depth = 6, centering = { family = "normal", mean = 0.0, sd = 1.0 } }"#,
    ] {
        std::fs::copy(f.path("gaps.csv"), f.path("gaps_copy.csv")).unwrap();
        let cfg = write(
            f.dir.path(),
            "same.toml",
            &format!(
                r#"
test = "two_sample"
seed = 1
n_draws = 100
alpha = 0.5
epsilon = 1e-9
data = {{ path = "gaps.csv", column = "gap" }}
data_y = {{ path = "gaps_copy.csv", column = "gap" }}
prior = {prior}
"#
            ),
        );
        let v = run_json("two-sample", &cfg, &f.path("same.json"));
        assert_eq!(v["posterior_probability"], 1.0);
        assert_eq!(v["decision"], "not_reject");
    }
}

#[test]
fn different_samples_under_tree_prior() {
    let f = Fixtures::new();
    let v = run_json("two-sample", &f.path("two_sample.toml"), &f.path("out.json"));
    stored_decision_is_consistent(&v);
    assert!(v["infimum_summary"]["min"].as_f64().unwrap() > 0.0);
}

#[test]
fn gof_and_adherence_runs() {
    let f = Fixtures::new();
    let v = run_json("gof", &f.path("gof.toml"), &f.path("gof.json"));
    stored_decision_is_consistent(&v);
    let v = run_json("adherence", &f.path("adherence.toml"), &f.path("adh.json"));
    stored_decision_is_consistent(&v);
    assert!((v["epsilon_used"].as_f64().unwrap() - 0.6218 / 15f64.sqrt()).abs() < 1e-15);
    // a straight line plus small noise sits inside the pragmatic hypothesis
    assert_eq!(v["decision"], "not_reject");
}

#[test]
fn three_way_rule_when_alpha2_given() {
    let f = Fixtures::new();
    let text = std::fs::read_to_string(f.path("quantile.toml"))
        .unwrap()
        .replace("alpha = 0.05", "alpha = 0.05\nalpha2 = 0.95");
    let cfg = write(f.dir.path(), "three.toml", &text);
    let v = run_json("quantile", &cfg, &f.path("three.json"));
    let p = v["posterior_probability"].as_f64().unwrap();
    let expected = if p <= 0.05 {
        "reject"
    } else if p <= 0.95 {
        "undecided"
    } else {
        "accept"
    };
    assert_eq!(v["decision"], expected);
}

#[test]
fn external_probability_draws_with_link() {
    let f = Fixtures::new();
    let mut text = String::from("0,0.25,0.5,0.75,1\n");
    for shift in [-0.05, 0.0, 0.05] {
        let row: Vec<String> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|t: &f64| {
                let eta = -1.0 + 2.0 * t + shift * t * t;
                format!("{}", 1.0 / (1.0 + (-eta).exp()))
            })
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write(f.dir.path(), "draws.csv", &text);
    let cfg = write(
        f.dir.path(),
        "ext.toml",
        r#"
test = "adherence"
alpha = 0.05
epsilon = 0.01
prior = { kind = "external", path = "draws.csv", mode = "probabilities" }
hypothesis = { degree = 1, link = "logit" }
"#,
    );
    let v = run_json("adherence", &cfg, &f.path("ext.json"));
    assert_eq!(v["n_draws"], 3);
    assert_eq!(v["posterior_probability"], 1.0);
}

#[test]
fn singular_basis_is_a_numeric_failure() {
    let f = Fixtures::new();
    let mut text = String::from("t,y\n");
    for (t, y) in [(0.0, 1.0), (1.0, 2.0), (0.0, 1.1), (1.0, 2.2)] {
        text.push_str(&format!("{t},{y}\n"));
    }
    write(f.dir.path(), "two_points.csv", &text);
    let cfg = write(
        f.dir.path(),
        "sing.toml",
        r#"
test = "adherence"
alpha = 0.05
epsilon = 0.1
n_draws = 10
data = { path = "two_points.csv", covariates = ["t"], response = "y" }
prior = { kind = "gp", kernel = "exponential" }
hypothesis = { degree = 2 }
"#,
    );
    let o = protest(&["adherence", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn data_problems_exit_with_two() {
    let f = Fixtures::new();
    write(f.dir.path(), "blank.csv", "gap\n1.0\n\n2.0\n,\n");
    write(f.dir.path(), "holes.csv", "gap,other\n1.0,2\n,3\n");
    let text = std::fs::read_to_string(f.path("quantile.toml")).unwrap();
    let cfg = write(f.dir.path(), "holes.toml", &text.replace("gaps.csv", "holes.csv"));
    let o = protest(&["quantile", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 3") && err.contains("column gap"), "{err}");

    let cfg = write(f.dir.path(), "missing.toml", &text.replace("gaps.csv", "nope.csv"));
    let o = protest(&["quantile", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("data.path"));

    let o = protest(&["quantile", "--config", f.path("absent.toml").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn region_export() {
    let f = Fixtures::new();
    let out = f.path("region.csv");
    let cfg = f.path("quantile.toml");
    let o = protest(&["region", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert!(o.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,eps_star"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, e) = l.split_once(',').unwrap();
            (a.parse().unwrap(), e.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));

    let no_grid = std::fs::read_to_string(&cfg).unwrap().replace("region_grid = [0.01, 0.05, 0.25, 0.5]\n", "");
    let cfg = write(f.dir.path(), "nogrid.toml", &no_grid);
    let o = protest(&["region", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("region_grid"));
}

#[test]
fn calibration_strategies() {
    let f = Fixtures::new();
    let v = run_json("calibrate", &f.path("calibrate.toml"), &f.path("cal.json"));
    assert_eq!(v["strategy"], "prior");
    assert!(v["epsilon"].as_f64().unwrap() > 0.0);

    column_file(f.dir.path(), "ref.csv", "gap", &common::normal_sample(40, 0.0, 1.0, 99));
    let text = std::fs::read_to_string(f.path("calibrate.toml")).unwrap().replace(
        r#"epsilon = { strategy = "prior", delta = 0.05 }"#,
        r#"epsilon = { strategy = "reference", alpha = 0.05, studies = [{ data = { path = "ref.csv", column = "gap" } }] }"#,
    );
    let cfg = write(f.dir.path(), "ref.toml", &text);
    let v = run_json("calibrate", &cfg, &f.path("ref.json"));
    assert_eq!(v["strategy"], "reference");
    let eps = v["epsilon"].as_f64().unwrap();
    // the calibrated threshold is then used by the test itself
    let t = run_json("quantile", &cfg, &f.path("ref_test.json"));
    assert_eq!(t["epsilon_used"].as_f64().unwrap(), eps);

    let o = protest(&["calibrate", "--config", f.path("quantile.toml").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_worker_count() {
    let f = Fixtures::new();
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_protest"));
    let o = cmd
        .args(["quantile", "--config", f.path("quantile.toml").to_str().unwrap()])
        .env("PROTEST_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
