use std::path::{Path, PathBuf};

use protest::dist::ParametricCdf;
use protest::hypothesis::{Family, GofDistance, Link, TwoSampleDistance};
use protest::samplers::KernelKind;
use serde::{Deserialize, Serialize};

use crate::dataset::ColumnRef;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Adherence,
    Gof,
    Quantile,
    TwoSample,
}

impl TestKind {
    pub fn name(&self) -> &'static str {
        match self {
            TestKind::Adherence => "adherence",
            TestKind::Gof => "gof",
            TestKind::Quantile => "quantile",
            TestKind::TwoSample => "two_sample",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub path: PathBuf,
    /// Sample column (gof, quantile, two_sample).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<ColumnRef>,
    /// Covariate columns (adherence).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariates: Option<Vec<ColumnRef>>,
    /// Response column (adherence).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<ColumnRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExternalMode {
    Functions,
    Probabilities,
    Distributions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    Dp {
        #[serde(default = "one")]
        concentration: f64,
        base: ParametricCdf,
        /// Fixed number of atoms; adaptive truncation when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_tol: Option<f64>,
    },
    Pt {
        #[serde(default = "one")]
        hyper_c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth: Option<u32>,
        centering: ParametricCdf,
    },
    Gp {
        kernel: KernelKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        signal_sd: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length_scale: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise_sd: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        jitter: Option<f64>,
    },
    External {
        path: PathBuf,
        mode: ExternalMode,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    /// Per-parameter `[lo, hi]`; the whole family when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
    /// Polynomial degree in each covariate (adherence), default 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<Link>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dissimilarity {
    L2,
    Linf,
    L1,
    LinfPair,
    ClassificationCentered,
}

/// Reference dataset for back-fitting the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub data: DataSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_y: Option<DataSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsilonDirective {
    /// Lower `delta`-quantile of prior infimum draws.
    Prior { delta: f64 },
    /// Smallest threshold not rejecting any of the reference studies at `alpha`.
    Reference { alpha: f64, studies: Vec<StudySpec> },
    /// Sup-norm tolerance converted to an RMS threshold over `n` points.
    L2FromLinf { eps_inf: f64, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    Value(f64),
    Directive(EpsilonDirective),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub test: TestKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_draws")]
    pub n_draws: usize,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    pub epsilon: EpsilonSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dissimilarity: Option<Dissimilarity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_grid: Option<Vec<f64>>,
    /// Not echoed into results, so reruns to different paths match.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_y: Option<DataSpec>,
    pub prior: PriorSpec,
    #[serde(default)]
    pub hypothesis: HypothesisSpec,
}

fn default_draws() -> usize {
    1000
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(CliError::NotFound(path.to_path_buf()))
            }
            Err(e) => return Err(CliError::config("config", e.to_string())),
        };
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| {
            CliError::config(offending_key(&text, &e), e.message().to_string())
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    /// Relative paths are taken from the config file's directory.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for d in [self.data.as_mut(), self.data_y.as_mut()].into_iter().flatten() {
            fix(&mut d.path);
        }
        if let PriorSpec::External { path, .. } = &mut self.prior {
            fix(path);
        }
        if let Some(out) = self.output.as_mut() {
            fix(out);
        }
        if let EpsilonSpec::Directive(EpsilonDirective::Reference { studies, .. }) = &mut self.epsilon {
            for s in studies {
                fix(&mut s.data.path);
                if let Some(y) = s.data_y.as_mut() {
                    fix(&mut y.path);
                }
            }
        }
    }

    pub fn dissimilarity(&self) -> Dissimilarity {
        self.dissimilarity.unwrap_or(match self.test {
            TestKind::Adherence => Dissimilarity::L2,
            TestKind::Gof => Dissimilarity::Linf,
            TestKind::Quantile => Dissimilarity::L1,
            TestKind::TwoSample => match self.prior {
                PriorSpec::Pt { .. } => Dissimilarity::ClassificationCentered,
                _ => Dissimilarity::L1,
            },
        })
    }

    pub fn gof_distance(&self) -> CliResult<GofDistance> {
        match self.dissimilarity() {
            Dissimilarity::Linf => Ok(GofDistance::Linf),
            Dissimilarity::L1 => Ok(GofDistance::L1),
            other => Err(CliError::config("dissimilarity", format!("{other:?} is not available for gof"))),
        }
    }

    pub fn two_sample_distance(&self) -> CliResult<TwoSampleDistance> {
        match (self.dissimilarity(), &self.prior) {
            (Dissimilarity::ClassificationCentered, _) => Ok(TwoSampleDistance::ClassificationCentered),
            (Dissimilarity::L1, PriorSpec::Dp { .. }) => Ok(TwoSampleDistance::L1),
            (Dissimilarity::LinfPair, PriorSpec::Dp { .. }) => Ok(TwoSampleDistance::LinfPair),
            (other, _) => Err(CliError::config(
                "dissimilarity",
                format!("{other:?} is not available for two_sample with this prior"),
            )),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let unit = |field: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(CliError::config(field, format!("must lie in [0, 1], got {v}")))
            }
        };
        unit("alpha", self.alpha)?;
        if let Some(a2) = self.alpha2 {
            unit("alpha2", a2)?;
            if a2 < self.alpha {
                return Err(CliError::config("alpha2", "must be at least alpha"));
            }
        }
        if self.n_draws == 0 {
            return Err(CliError::config("n_draws", "must be at least 1"));
        }
        match &self.epsilon {
            EpsilonSpec::Value(e) if !(*e > 0.0 && e.is_finite()) => {
                return Err(CliError::config("epsilon", format!("must be positive, got {e}")))
            }
            EpsilonSpec::Directive(EpsilonDirective::Prior { delta }) if !(*delta > 0.0 && *delta <= 1.0) => {
                return Err(CliError::config("epsilon.delta", "must lie in (0, 1]"))
            }
            EpsilonSpec::Directive(EpsilonDirective::Reference { alpha, studies }) => {
                if !(0.0..1.0).contains(alpha) {
                    return Err(CliError::config("epsilon.alpha", "must lie in [0, 1)"));
                }
                if studies.is_empty() {
                    return Err(CliError::config("epsilon.studies", "at least one study is needed"));
                }
                for s in studies {
                    exists("epsilon.studies.data.path", &s.data.path)?;
                    if let Some(y) = &s.data_y {
                        exists("epsilon.studies.data_y.path", &y.path)?;
                    }
                }
            }
            EpsilonSpec::Directive(EpsilonDirective::L2FromLinf { eps_inf, n })
                if (!(*eps_inf > 0.0) || *n == 0) => {
                    return Err(CliError::config("epsilon", "eps_inf must be positive and n at least 1"));
                }
            _ => {}
        }
        if let Some(grid) = &self.region_grid {
            if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(CliError::config("region_grid", "must be a nonempty strictly increasing list"));
            }
            if grid.iter().any(|a| !(0.0..1.0).contains(a)) {
                return Err(CliError::config("region_grid", "levels must lie in [0, 1)"));
            }
        }
        self.validate_prior()?;
        for (name, d) in [("data", &self.data), ("data_y", &self.data_y)] {
            if let Some(d) = d {
                exists(&format!("{name}.path"), &d.path)?;
            }
        }
        self.validate_test()
    }

    fn validate_prior(&self) -> CliResult<()> {
        let positive = |field: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::config(field, "must be finite and > 0")),
            _ => Ok(()),
        };
        let dist = |field: &str, d: &ParametricCdf| {
            d.validated().map(|_| ()).map_err(|e| CliError::config(field, e.to_string()))
        };
        match &self.prior {
            PriorSpec::Dp {
                concentration,
                base,
                truncation,
                tail_tol,
            } => {
                positive("prior.concentration", Some(*concentration))?;
                dist("prior.base", base)?;
                if *truncation == Some(0) {
                    return Err(CliError::config("prior.truncation", "must be at least 1"));
                }
                positive("prior.tail_tol", *tail_tol)?;
            }
            PriorSpec::Pt {
                hyper_c,
                depth,
                centering,
            } => {
                positive("prior.hyper_c", Some(*hyper_c))?;
                dist("prior.centering", centering)?;
                if let Some(d) = depth {
                    if *d == 0 || *d > protest::samplers::MAX_DEPTH {
                        return Err(CliError::config(
                            "prior.depth",
                            format!("must lie in [1, {}]", protest::samplers::MAX_DEPTH),
                        ));
                    }
                }
            }
            PriorSpec::Gp {
                signal_sd,
                length_scale,
                noise_sd,
                jitter,
                ..
            } => {
                positive("prior.signal_sd", *signal_sd)?;
                positive("prior.length_scale", *length_scale)?;
                positive("prior.jitter", *jitter)?;
                if let Some(n) = noise_sd {
                    if !(*n >= 0.0 && n.is_finite()) {
                        return Err(CliError::config("prior.noise_sd", "must be finite and >= 0"));
                    }
                }
            }
            PriorSpec::External { path, .. } => exists("prior.path", path)?,
        }
        Ok(())
    }

    fn validate_test(&self) -> CliResult<()> {
        let h = &self.hypothesis;
        let need_data = |field: &str| {
            self.data
                .as_ref()
                .ok_or_else(|| CliError::config(field, "required for this test"))
        };
        let column = |d: &DataSpec, field: &str| {
            if d.column.is_none() {
                Err(CliError::config(field, "sample column required"))
            } else {
                Ok(())
            }
        };
        let step_prior = || match self.prior {
            PriorSpec::Dp { .. } => Ok(()),
            PriorSpec::External {
                mode: ExternalMode::Distributions,
                ..
            } => Ok(()),
            _ => Err(CliError::config("prior.kind", "this test needs a dp or external distributions prior")),
        };
        match self.test {
            TestKind::Quantile => {
                let x0 = h.x0.ok_or_else(|| CliError::config("hypothesis.x0", "required"))?;
                let p0 = h.p0.ok_or_else(|| CliError::config("hypothesis.p0", "required"))?;
                if !x0.is_finite() {
                    return Err(CliError::config("hypothesis.x0", "must be finite"));
                }
                if !(p0 > 0.0 && p0 < 1.0) {
                    return Err(CliError::config("hypothesis.p0", "must lie in (0, 1)"));
                }
                if self.dissimilarity() != Dissimilarity::L1 {
                    return Err(CliError::config("dissimilarity", "quantile test uses l1"));
                }
                step_prior()?;
                if matches!(self.prior, PriorSpec::Dp { .. }) {
                    column(need_data("data")?, "data.column")?;
                }
            }
            TestKind::Gof => {
                let family = h.family.ok_or_else(|| CliError::config("hypothesis.family", "required"))?;
                if let Some(b) = &h.bounds {
                    protest::hypothesis::GofHypothesis::new(
                        family,
                        b.iter().map(|p| (p[0], p[1])).collect(),
                        GofDistance::Linf,
                    )
                    .map_err(|e| CliError::config("hypothesis.bounds", e.to_string()))?;
                }
                self.gof_distance()?;
                step_prior()?;
                if matches!(self.prior, PriorSpec::Dp { .. }) {
                    column(need_data("data")?, "data.column")?;
                }
            }
            TestKind::TwoSample => {
                if !matches!(self.prior, PriorSpec::Dp { .. } | PriorSpec::Pt { .. }) {
                    return Err(CliError::config("prior.kind", "two_sample needs a dp or pt prior"));
                }
                column(need_data("data")?, "data.column")?;
                let y = self
                    .data_y
                    .as_ref()
                    .ok_or_else(|| CliError::config("data_y", "required for two_sample"))?;
                column(y, "data_y.column")?;
                self.two_sample_distance()?;
            }
            TestKind::Adherence => {
                if self.dissimilarity() != Dissimilarity::L2 {
                    return Err(CliError::config("dissimilarity", "adherence uses l2"));
                }
                match self.prior {
                    PriorSpec::Gp { .. } => {
                        let d = need_data("data")?;
                        if d.covariates.as_ref().is_none_or(Vec::is_empty) {
                            return Err(CliError::config("data.covariates", "required for a gp prior"));
                        }
                        if d.response.is_none() {
                            return Err(CliError::config("data.response", "required for a gp prior"));
                        }
                        if h.link.is_some() {
                            return Err(CliError::config("hypothesis.link", "needs probability draws"));
                        }
                    }
                    PriorSpec::External { mode, .. } => {
                        if mode == ExternalMode::Distributions {
                            return Err(CliError::config("prior.mode", "adherence needs function draws"));
                        }
                        if h.link.is_some() && mode != ExternalMode::Probabilities {
                            return Err(CliError::config("hypothesis.link", "needs probability draws"));
                        }
                    }
                    _ => return Err(CliError::config("prior.kind", "adherence needs a gp or external prior")),
                }
            }
        }
        Ok(())
    }
}

/// Best guess at the key a parse error refers to: a quoted name in the
/// message, else the key on the line the error points at.
fn offending_key(text: &str, e: &toml::de::Error) -> String {
    if let Some(name) = e.message().split('`').nth(1) {
        return name.to_string();
    }
    e.span()
        .and_then(|span| {
            let start = text[..span.start.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
            let line = text[start..].lines().next()?;
            let (key, _) = line.split_once('=')?;
            Some(key.trim().to_string())
        })
        .unwrap_or_else(|| "config".to_string())
}

fn exists(field: &str, path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::config(field, format!("{} does not exist", path.display())))
    }
}
