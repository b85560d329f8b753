#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn protest(args: &[&str], workers: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_protest"));
    cmd.args(args);
    match workers {
        Some(n) => cmd.env("PROTEST_WORKERS", n.to_string()),
        None => cmd.env_remove("PROTEST_WORKERS"),
    };
    cmd.output().expect("binary runs")
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub fn normal_sample(n: usize, mean: f64, sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn column_file(dir: &Path, name: &str, header: &str, values: &[f64]) -> PathBuf {
    let mut text = format!("{header}\n");
    for v in values {
        text.push_str(&format!("{v}\n"));
    }
    write(dir, name, &text)
}

/// One fixture directory with a config for every subcommand.
pub struct Fixtures {
    pub dir: tempfile::TempDir,
}

impl Fixtures {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        column_file(d, "gaps.csv", "gap", &normal_sample(28, 0.5, 2.0, 7));
        let expo: Vec<f64> = normal_sample(60, 0.0, 1.0, 8).iter().map(|z| (z * z) * 0.5).collect();
        column_file(d, "intervals.csv", "isi", &expo);
        let mut reg = String::from("t,y\n");
        for (i, e) in normal_sample(15, 0.0, 0.1, 9).iter().enumerate() {
            let t = i as f64 / 14.0;
            reg.push_str(&format!("{t},{}\n", 1.0 + 2.0 * t + e));
        }
        write(d, "regression.csv", &reg);

        write(
            d,
            "quantile.toml",
            r#"
test = "quantile"
seed = 42
n_draws = 300
alpha = 0.05
epsilon = 0.1
region_grid = [0.01, 0.05, 0.25, 0.5]
data = { path = "gaps.csv", column = "gap" }
prior = { kind = "dp", concentration = 1.0, base = { family = "normal", mean = 0.0, sd = 10.0 } }
hypothesis = { x0 = 0.0, p0 = 0.5 }
"#,
        );
        write(
            d,
            "gof.toml",
            r#"
test = "gof"
seed = 3
n_draws = 200
alpha = 0.05
epsilon = 0.1
dissimilarity = "linf"
data = { path = "intervals.csv", column = "isi" }
prior = { kind = "dp", concentration = 1.0, base = { family = "exponential", rate = 1.0 } }
hypothesis = { family = "exponential" }
"#,
        );
        write(
            d,
            "two_sample.toml",
            r#"
test = "two_sample"
seed = 5
n_draws = 200
alpha = 0.05
epsilon = 0.0657
data = { path = "gaps.csv", column = "gap" }
data_y = { path = "intervals.csv", column = "isi" }
prior = { kind = "pt", hyper_c = 1.0, depth = 8, centering = { family = "normal", mean = 0.0, sd = 1.0 } }
"#,
        );
        write(
            d,
            "adherence.toml",
            r#"
test = "adherence"
seed = 11
n_draws = 200
alpha = 0.05
epsilon = { strategy = "l2_from_linf", eps_inf = 0.6218, n = 15 }
data = { path = "regression.csv", covariates = ["t"], response = "y" }
prior = { kind = "gp", kernel = "squared_exponential", signal_sd = 1.0, length_scale = 0.3, noise_sd = 0.1 }
hypothesis = { degree = 1 }
"#,
        );
        write(
            d,
            "calibrate.toml",
            r#"
test = "quantile"
seed = 13
n_draws = 400
alpha = 0.05
epsilon = { strategy = "prior", delta = 0.05 }
data = { path = "gaps.csv", column = "gap" }
prior = { kind = "dp", concentration = 1.0, base = { family = "normal", mean = 0.0, sd = 10.0 } }
hypothesis = { x0 = 0.0, p0 = 0.5 }
"#,
        );
        Self { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// `(subcommand, config)` pairs covering every subcommand.
    pub fn per_subcommand(&self) -> Vec<(&'static str, PathBuf)> {
        vec![
            ("adherence", self.path("adherence.toml")),
            ("gof", self.path("gof.toml")),
            ("quantile", self.path("quantile.toml")),
            ("two-sample", self.path("two_sample.toml")),
            ("calibrate", self.path("calibrate.toml")),
            ("region", self.path("quantile.toml")),
        ]
    }
}
