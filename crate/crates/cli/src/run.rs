use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use protest::dist::{Grid, GridFunction, StepCdf};
use protest::epsilon::{decision_region, epsilon_from_prior, epsilon_from_references, l2_from_linf, EpsilonCurve};
use protest::hypothesis::{
    gof_family_infimum, link_transform, linear_infimum, quantile_infimum, two_sample_infimum, BasisTerm,
    DrawRef, GofHypothesis, LinearHypothesis, QuantileHypothesis, TestReport, Verdict,
};
use protest::samplers::{
    default_depth, draw_rng, ingest_external_draws, DpPosterior, DpSpec, DrawKind, ExternalDraws, GpPosterior,
    GpSpec, InfimumDrawSet, Kernel, PtPairPosterior, PtSpec, Truncation,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DataSpec, EpsilonDirective, EpsilonSpec, ExternalMode, PriorSpec, RunConfig, TestKind};
use crate::dataset::load_dataset;
use crate::error::{CliError, CliResult};

/// Observations feeding the posterior.
#[derive(Debug, Clone)]
enum Observed {
    Sample(Vec<f64>),
    Pair(Vec<f64>, Vec<f64>),
    Regression { x: Vec<Vec<f64>>, y: Vec<f64> },
    /// Draws come from a file.
    External,
}

fn load_column(spec: &DataSpec, field: &str) -> CliResult<Vec<f64>> {
    let d = load_dataset(&spec.path)?;
    let col = spec
        .column
        .as_ref()
        .ok_or_else(|| CliError::config(format!("{field}.column"), "required"))?;
    Ok(d.column(col, &format!("{field}.column"))?.to_vec())
}

fn observe(cfg: &RunConfig, data: Option<&DataSpec>, data_y: Option<&DataSpec>) -> CliResult<Observed> {
    if matches!(cfg.prior, PriorSpec::External { .. }) {
        return Ok(Observed::External);
    }
    let data = data.ok_or_else(|| CliError::config("data", "required"))?;
    match cfg.test {
        TestKind::Gof | TestKind::Quantile => Ok(Observed::Sample(load_column(data, "data")?)),
        TestKind::TwoSample => {
            let y = data_y.ok_or_else(|| CliError::config("data_y", "required"))?;
            Ok(Observed::Pair(load_column(data, "data")?, load_column(y, "data_y")?))
        }
        TestKind::Adherence => {
            let d = load_dataset(&data.path)?;
            let covs = data
                .covariates
                .as_ref()
                .ok_or_else(|| CliError::config("data.covariates", "required"))?;
            let cols = covs
                .iter()
                .map(|c| d.column(c, "data.covariates"))
                .collect::<CliResult<Vec<_>>>()?;
            let resp = data
                .response
                .as_ref()
                .ok_or_else(|| CliError::config("data.response", "required"))?;
            let y = d.column(resp, "data.response")?.to_vec();
            let x = (0..d.n_rows()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
            Ok(Observed::Regression { x, y })
        }
    }
}

fn seed_for(seed: u64, stage: u64) -> u64 {
    if stage == 0 {
        seed
    } else {
        seed ^ stage.wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

/// Distinct covariate rows with their empirical frequencies.
fn empirical_grid(x: &[Vec<f64>]) -> CliResult<Arc<Grid>> {
    let mut counts: BTreeMap<Vec<u64>, (Vec<f64>, usize)> = BTreeMap::new();
    for row in x {
        // order-preserving key for finite floats
        let key = row
            .iter()
            .map(|v| {
                let b = v.to_bits();
                if b >> 63 == 1 {
                    !b
                } else {
                    b | (1 << 63)
                }
            })
            .collect();
        counts.entry(key).or_insert_with(|| (row.clone(), 0)).1 += 1;
    }
    if counts.is_empty() {
        return Err(CliError::config("data", "no observations"));
    }
    let n = x.len() as f64;
    let (points, weights): (Vec<_>, Vec<_>) = counts.into_values().map(|(p, c)| (p, c as f64 / n)).unzip();
    Ok(Arc::new(Grid::new(points, weights)?))
}

fn dp_spec(prior: &PriorSpec) -> Option<DpSpec> {
    match *prior {
        PriorSpec::Dp {
            concentration,
            base,
            truncation,
            tail_tol,
        } => {
            let t = match (truncation, tail_tol) {
                (Some(k), _) => Truncation::Fixed(k),
                (None, Some(tol)) => Truncation::Adaptive { tail_tol: tol },
                (None, None) => Truncation::default(),
            };
            Some(DpSpec::new(concentration, base).with_truncation(t))
        }
        _ => None,
    }
}

fn collect(values: Vec<protest::Result<f64>>, seed: u64) -> CliResult<InfimumDrawSet> {
    let values = values.into_iter().collect::<protest::Result<Vec<_>>>()?;
    Ok(InfimumDrawSet::new(values, seed)?)
}

fn step_infima(
    cfg: &RunConfig,
    sample: Option<&[f64]>,
    n_draws: usize,
    seed: u64,
    f: impl Fn(&StepCdf) -> protest::Result<f64> + Sync,
) -> CliResult<InfimumDrawSet> {
    match &cfg.prior {
        PriorSpec::External { path, .. } => {
            let ExternalDraws::Distributions(draws) = ingest_external_draws(path, DrawKind::Distributions)? else {
                unreachable!("distribution mode yields distributions")
            };
            collect(draws.par_iter().map(&f).collect(), seed)
        }
        prior => {
            let spec = dp_spec(prior).expect("validated prior");
            let post = DpPosterior::new(sample.unwrap_or(&[]), &spec)?;
            let values = (0..n_draws as u64)
                .into_par_iter()
                .map(|i| f(&post.draw_indexed(seed, i)))
                .collect();
            collect(values, seed)
        }
    }
}

fn linear_hypothesis(grid: Arc<Grid>, degree: u32) -> CliResult<LinearHypothesis> {
    let mut terms = vec![BasisTerm::Constant];
    for coord in 0..grid.dim() {
        for power in 1..=degree {
            terms.push(BasisTerm::Power { coord, power });
        }
    }
    Ok(LinearHypothesis::from_terms(grid, &terms)?)
}

/// Per-draw infimum dissimilarities. With `use_data` false the observations
/// are dropped and the draws come from the prior; covariates still fix the
/// evaluation grid and the tree depth.
fn infimum_draws(cfg: &RunConfig, obs: &Observed, use_data: bool, n_draws: usize, seed: u64) -> CliResult<InfimumDrawSet> {
    let h = &cfg.hypothesis;
    match cfg.test {
        TestKind::Quantile => {
            let hyp = QuantileHypothesis::new(h.x0.unwrap(), h.p0.unwrap())?;
            let sample = match obs {
                Observed::Sample(s) if use_data => Some(s.as_slice()),
                _ => None,
            };
            step_infima(cfg, sample, n_draws, seed, |p| quantile_infimum(p, &hyp))
        }
        TestKind::Gof => {
            let family = h.family.unwrap();
            let distance = cfg.gof_distance()?;
            let hyp = match &h.bounds {
                Some(b) => GofHypothesis::new(family, b.iter().map(|p| (p[0], p[1])).collect(), distance)?,
                None => GofHypothesis::over_family(family, distance),
            };
            let sample = match obs {
                Observed::Sample(s) if use_data => Some(s.as_slice()),
                _ => None,
            };
            step_infima(cfg, sample, n_draws, seed, |p| Ok(gof_family_infimum(p, &hyp)?.distance))
        }
        TestKind::TwoSample => {
            let Observed::Pair(x, y) = obs else {
                unreachable!("two-sample observations")
            };
            let (x, y): (&[f64], &[f64]) = if use_data { (x, y) } else { (&[], &[]) };
            // two copies of one sample are one sample
            let shared = use_data && !x.is_empty() && x == y;
            let dstar = cfg.two_sample_distance()?;
            let values = match &cfg.prior {
                PriorSpec::Pt {
                    hyper_c,
                    depth,
                    centering,
                } => {
                    let Observed::Pair(ox, oy) = obs else { unreachable!() };
                    let spec = PtSpec {
                        hyper_c: *hyper_c,
                        depth: depth.unwrap_or_else(|| default_depth(ox.len().max(oy.len()))),
                        centering: *centering,
                    };
                    let post = PtPairPosterior::new(x, y, &spec)?;
                    (0..n_draws as u64)
                        .into_par_iter()
                        .map(|i| {
                            if shared {
                                let px = post.x.draw(&mut draw_rng(seed, 2 * i));
                                two_sample_infimum((&px).into(), (&px).into(), dstar)
                            } else {
                                let (px, py) = post.draw_pair(seed, i);
                                two_sample_infimum((&px).into(), (&py).into(), dstar)
                            }
                        })
                        .collect()
                }
                prior => {
                    let spec = dp_spec(prior).expect("validated prior");
                    let post_x = DpPosterior::new(x, &spec)?;
                    let post_y = DpPosterior::new(y, &spec)?;
                    (0..n_draws as u64)
                        .into_par_iter()
                        .map(|i| {
                            let px = post_x.draw(&mut draw_rng(seed, 2 * i));
                            if shared {
                                return two_sample_infimum(DrawRef::Step(&px), DrawRef::Step(&px), dstar);
                            }
                            let py = post_y.draw(&mut draw_rng(seed, 2 * i + 1));
                            two_sample_infimum(DrawRef::Step(&px), DrawRef::Step(&py), dstar)
                        })
                        .collect()
                }
            };
            collect(values, seed)
        }
        TestKind::Adherence => {
            let degree = h.degree.unwrap_or(1);
            match (&cfg.prior, obs) {
                (
                    PriorSpec::Gp {
                        kernel,
                        signal_sd,
                        length_scale,
                        noise_sd,
                        jitter,
                    },
                    Observed::Regression { x, y },
                ) => {
                    let grid = empirical_grid(x)?;
                    let hyp = linear_hypothesis(grid.clone(), degree)?;
                    let first: Vec<f64> = x.iter().map(|r| r[0]).collect();
                    let defaults = GpSpec::with_defaults(*kernel, &first, y);
                    let spec = GpSpec {
                        kernel: Kernel {
                            kind: *kernel,
                            signal_sd: signal_sd.unwrap_or(defaults.kernel.signal_sd),
                            length_scale: length_scale.unwrap_or(defaults.kernel.length_scale),
                        },
                        noise_sd: noise_sd.unwrap_or(defaults.noise_sd),
                        jitter: jitter.unwrap_or(defaults.jitter),
                    };
                    let (tx, ty): (&[Vec<f64>], &[f64]) = if use_data { (x, y) } else { (&[], &[]) };
                    let post = GpPosterior::new(tx, ty, grid, &spec)?;
                    let values = (0..n_draws as u64)
                        .into_par_iter()
                        .map(|i| Ok(linear_infimum(&post.draw(&mut draw_rng(seed, i)), &hyp)?.distance))
                        .collect();
                    collect(values, seed)
                }
                (PriorSpec::External { path, mode }, _) => {
                    let kind = DrawKind::Functions {
                        probabilities: *mode == ExternalMode::Probabilities,
                    };
                    let ExternalDraws::Functions(draws) = ingest_external_draws(path, kind)? else {
                        unreachable!("function mode yields functions")
                    };
                    let first = draws.first().ok_or(protest::Error::Empty("external draws"))?;
                    let hyp = linear_hypothesis(first.grid().clone(), degree)?;
                    let link = h.link;
                    let values = draws
                        .par_iter()
                        .map(|g| {
                            let g: GridFunction = match link {
                                Some(l) => link_transform(g, l)?,
                                None => g.clone(),
                            };
                            Ok(linear_infimum(&g, &hyp)?.distance)
                        })
                        .collect();
                    collect(values, seed)
                }
                _ => unreachable!("validated adherence prior"),
            }
        }
    }
}

/// A validated configuration with command-line overrides applied.
pub struct Run {
    pub cfg: RunConfig,
    obs: Observed,
}

#[derive(Debug, Serialize)]
struct Summary {
    min: f64,
    median: f64,
    max: f64,
}

#[derive(Debug, Serialize)]
struct CurvePoint {
    alpha: f64,
    eps_star: f64,
}

#[derive(Debug, Serialize)]
struct RunResult<'a> {
    config: &'a RunConfig,
    test: &'static str,
    seed: u64,
    n_draws: usize,
    epsilon_used: f64,
    alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha2: Option<f64>,
    posterior_probability: f64,
    decision: Verdict,
    infimum_summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    curve: Option<Vec<CurvePoint>>,
}

#[derive(Debug, Serialize)]
struct CalibrationResult<'a> {
    config: &'a RunConfig,
    test: &'static str,
    seed: u64,
    strategy: &'static str,
    epsilon: f64,
}

impl Run {
    pub fn new(cfg: RunConfig) -> CliResult<Self> {
        cfg.validate()?;
        let obs = observe(&cfg, cfg.data.as_ref(), cfg.data_y.as_ref())?;
        Ok(Self { cfg, obs })
    }

    fn draws(&self) -> CliResult<InfimumDrawSet> {
        infimum_draws(&self.cfg, &self.obs, true, self.cfg.n_draws, self.cfg.seed)
    }

    /// Threshold from the configured value or calibration directive.
    pub fn epsilon(&self) -> CliResult<(f64, &'static str)> {
        let cfg = &self.cfg;
        match &cfg.epsilon {
            EpsilonSpec::Value(e) => Ok((*e, "value")),
            EpsilonSpec::Directive(EpsilonDirective::Prior { delta }) => {
                if matches!(cfg.prior, PriorSpec::External { .. }) {
                    return Err(CliError::config("epsilon.strategy", "prior calibration needs a sampled prior"));
                }
                let prior = infimum_draws(cfg, &self.obs, false, cfg.n_draws, seed_for(cfg.seed, 1))?;
                Ok((epsilon_from_prior(&prior, *delta)?, "prior"))
            }
            EpsilonSpec::Directive(EpsilonDirective::Reference { alpha, studies }) => {
                let sets = studies
                    .iter()
                    .enumerate()
                    .map(|(k, s)| {
                        let obs = observe(cfg, Some(&s.data), s.data_y.as_ref())?;
                        infimum_draws(cfg, &obs, true, cfg.n_draws, seed_for(cfg.seed, 2 + k as u64))
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Ok((epsilon_from_references(&sets, *alpha)?, "reference"))
            }
            EpsilonSpec::Directive(EpsilonDirective::L2FromLinf { eps_inf, n }) => {
                Ok((l2_from_linf(*eps_inf, *n)?, "l2_from_linf"))
            }
        }
    }

    pub fn test(&self) -> CliResult<String> {
        let cfg = &self.cfg;
        let (epsilon, _) = self.epsilon()?;
        let draws = self.draws()?;
        let curve = match &cfg.region_grid {
            Some(grid) => Some(curve_points(&decision_region(&draws, grid)?)),
            None => None,
        };
        let (min, median, max) = draws.summary().expect("nonempty draws");
        let n_draws = draws.n_draws();
        let report = TestReport::decide(draws, epsilon, cfg.alpha, cfg.alpha2)?;
        let result = RunResult {
            config: cfg,
            test: cfg.test.name(),
            seed: cfg.seed,
            n_draws,
            epsilon_used: epsilon,
            alpha: cfg.alpha,
            alpha2: cfg.alpha2,
            posterior_probability: report.posterior_probability,
            decision: report.decision,
            infimum_summary: Summary { min, median, max },
            curve,
        };
        Ok(to_json(&result))
    }

    pub fn calibrate(&self) -> CliResult<String> {
        if matches!(self.cfg.epsilon, EpsilonSpec::Value(_)) {
            return Err(CliError::config("epsilon", "calibrate needs a calibration directive"));
        }
        let (epsilon, strategy) = self.epsilon()?;
        Ok(to_json(&CalibrationResult {
            config: &self.cfg,
            test: self.cfg.test.name(),
            seed: self.cfg.seed,
            strategy,
            epsilon,
        }))
    }

    pub fn region(&self) -> CliResult<String> {
        let grid = self
            .cfg
            .region_grid
            .as_ref()
            .ok_or_else(|| CliError::config("region_grid", "required for region export"))?;
        let curve = decision_region(&self.draws()?, grid)?;
        let mut out = Vec::new();
        curve.write_csv(&mut out).expect("writing to memory");
        Ok(String::from_utf8(out).expect("ascii output"))
    }

    pub fn output(&self) -> Option<&PathBuf> {
        self.cfg.output.as_ref()
    }
}

fn curve_points(c: &EpsilonCurve) -> Vec<CurvePoint> {
    c.points()
        .iter()
        .map(|&(alpha, eps_star)| CurvePoint { alpha, eps_star })
        .collect()
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable result");
    s.push('\n');
    s
}
