//! TOML scenario files and the built-in demo set.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;
use toml::Spanned;

use crate::error::{Error, Result};
use crate::expr::{parse_with, Expr};
use crate::fuzzy::{uniform_levels, FuzzyNumber, DEFAULT_LEVELS};
use crate::harness::{CertificateRequest, RunConfig, SweepGrid, VerifyOptions};
use crate::solver::{Delay, Noise, Scenario, System};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub workers: Option<usize>,
    pub scenario: ScenarioSection,
    #[serde(default = "no_certificate")]
    pub certificate: CertificateRequest,
    #[serde(default)]
    pub verify: VerifyOptions,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: BTreeMap<String, Vec<f64>>,
    #[serde(skip)]
    origin: String,
    #[serde(skip)]
    source: String,
}

fn no_certificate() -> CertificateRequest {
    CertificateRequest::None
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(default)]
    pub name: Option<String>,
    pub q: f64,
    pub horizon: f64,
    pub step: f64,
    /// Subintervals of the uniform α grid.
    #[serde(default)]
    pub levels: Option<usize>,
    #[serde(default)]
    pub rhs: Option<Spanned<String>>,
    #[serde(default)]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub initial: Vec<InitialSpec>,
    #[serde(default)]
    pub disturbance: Option<Vec<Spanned<String>>>,
    #[serde(default)]
    pub delay: Option<DelaySection>,
    #[serde(default)]
    pub noise: Option<NoiseSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum InitialSpec {
    Crisp { crisp: f64 },
    Triangular { triangular: [f64; 3] },
    Cuts { levels: Vec<f64>, lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaySection {
    pub tau: f64,
    pub history: Spanned<String>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma: f64,
    pub paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub q: Option<f64>,
    pub seed: Option<u64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub levels: Option<usize>,
    pub step: Option<f64>,
    pub horizon: Option<f64>,
    pub workers: Option<usize>,
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

impl ConfigFile {
    /// Parse TOML text; `origin` names the file in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut cfg: ConfigFile = toml::from_str(text).map_err(|e| {
            let loc = e
                .span()
                .map_or(origin.to_string(), |s| format!("{origin}:{}", line_of(text, s.start)));
            Error::Config(format!("{loc}: {}", e.message().trim_end()))
        })?;
        cfg.origin = origin.to_string();
        cfg.source = text.to_string();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    fn expr(&self, src: &Spanned<String>, key: &str, params: &BTreeMap<String, f64>) -> Result<Expr> {
        parse_with(src.get_ref(), params).map_err(|e| {
            Error::Config(format!(
                "{}:{}: in `{key}`: {e}",
                self.origin,
                line_of(&self.source, src.span().start)
            ))
        })
    }

    fn initial(&self, levels: usize, forced: bool) -> Result<Vec<FuzzyNumber>> {
        let grid = uniform_levels(levels);
        self.scenario
            .initial
            .iter()
            .map(|spec| match spec {
                InitialSpec::Crisp { crisp } => Ok(FuzzyNumber::crisp_on(*crisp, &grid)),
                InitialSpec::Triangular { triangular: [l, m, r] } => FuzzyNumber::triangular_on(*l, *m, *r, &grid),
                InitialSpec::Cuts { levels, lower, upper } => {
                    let u = FuzzyNumber::new(levels.clone(), lower.clone(), upper.clone())?;
                    if forced {
                        u.resample(&grid)
                    } else {
                        Ok(u)
                    }
                }
            })
            .collect()
    }

    pub fn build(&self, o: &Overrides) -> Result<RunConfig> {
        let sc = &self.scenario;
        let params = &sc.params;
        let system = match (&sc.rhs, &sc.matrix) {
            (Some(rhs), None) => System::Scalar(self.expr(rhs, "scenario.rhs", params)?),
            (None, Some(rows)) => {
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Config(format!("{}: scenario.matrix must be square", self.origin)));
                }
                System::Linear(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
            _ => {
                return Err(Error::Config(format!(
                    "{}: scenario needs exactly one of `rhs` and `matrix`",
                    self.origin
                )))
            }
        };
        let levels = o.levels.or(sc.levels).unwrap_or(DEFAULT_LEVELS);
        if levels == 0 {
            return Err(Error::arg("levels", "need at least one subinterval"));
        }
        let disturbance = match &sc.disturbance {
            None => None,
            Some(g) => Some(
                g.iter()
                    .map(|e| self.expr(e, "scenario.disturbance", params))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let delay = match &sc.delay {
            None => None,
            Some(d) => Some(Delay {
                tau: d.tau,
                history: self.expr(&d.history, "scenario.delay.history", params)?,
            }),
        };
        let noise = sc.noise.map(|n| Noise {
            sigma: n.sigma,
            paths: n.paths,
            seed: o.seed.unwrap_or(n.seed),
        });
        let scenario = Scenario {
            q: o.q.unwrap_or(sc.q),
            horizon: o.horizon.unwrap_or(sc.horizon),
            step: o.step.unwrap_or(sc.step),
            system,
            params: params.clone(),
            initial: self.initial(levels, o.levels.is_some() || sc.levels.is_some())?,
            disturbance,
            delay,
            noise,
        };
        let mut verify = self.verify;
        if let Some(r) = o.rtol {
            verify.rtol = r;
        }
        if let Some(a) = o.atol {
            verify.atol = a;
        }
        Ok(RunConfig {
            name: sc.name.clone().unwrap_or_else(|| self.origin.clone()),
            scenario,
            certificate: self.certificate.clone(),
            verify,
            workers: o.workers.or(self.workers).unwrap_or(1).max(1),
        })
    }

    pub fn sweep_grid(&self) -> SweepGrid {
        SweepGrid {
            axes: self.sweep.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        }
    }

    pub fn output_dir(&self) -> Option<&str> {
        self.output.dir.as_deref()
    }
}

const DEMOS: &[(&str, &str)] = &[
    ("lmi", include_str!("../configs/lmi.toml")),
    ("iss", include_str!("../configs/iss.toml")),
    ("ultimate", include_str!("../configs/ultimate.toml")),
    ("delay", include_str!("../configs/delay.toml")),
    ("small_gain", include_str!("../configs/small_gain.toml")),
    ("stochastic", include_str!("../configs/stochastic.toml")),
    ("converse", include_str!("../configs/converse.toml")),
    ("lasalle", include_str!("../configs/lasalle.toml")),
];

pub fn demo_names() -> Vec<&'static str> {
    DEMOS.iter().map(|(n, _)| *n).collect()
}

pub fn demo(name: &str) -> Result<ConfigFile> {
    let (_, text) = DEMOS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("unknown demo `{name}` (available: {})", demo_names().join(", "))))?;
    ConfigFile::parse(text, &format!("demo:{name}"))
}
