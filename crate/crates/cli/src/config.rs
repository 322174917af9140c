//! Run configuration: one JSON document, overridden field by field by
//! command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use randshear::flow::{FlowSpec, Profile};
use randshear::spectral::helmholtz::BoundaryCondition;
use randshear::spectral::GridFunction;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Ornstein–Uhlenbeck switching with damping `gamma`.
    Ou,
    White,
    /// No switching: `v = u(y)`.
    Steady,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Bc {
    NoFlux,
    Periodic,
}

impl From<Bc> for BoundaryCondition {
    fn from(b: Bc) -> Self {
        match b {
            Bc::NoFlux => BoundaryCondition::NoFlux,
            Bc::Periodic => BoundaryCondition::Periodic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PdfMode {
    /// Closed-form density for deterministic data at a given `beta`.
    Deterministic,
    /// Limiting density for random-wave data, optionally with samples.
    RandomWave,
    /// Wind-model ensemble of rescaled peak values with both overlays.
    Wind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Closed forms for multiplicative profiles.
    ClosedForm,
    /// Hermite projection with truncation diagnostics.
    Hermite,
}

/// Every field is optional; `None` falls back to the subcommand default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    /// Subcommand this document is meant for; checked when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    /// `linear`, `linear:<slope>:<intercept>`, `cosine:<n>` or `file:<path>`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pe: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bc: Option<Bc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hermite_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode_index: Option<usize>,
    /// Variance of Gaussian initial data; delta-line data when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pdf_mode: Option<PdfMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        // relative flow files resolve against the config's directory
        if let (Some(flow), Some(dir)) = (&cfg.flow, path.parent()) {
            if let Some(rel) = flow.strip_prefix("file:") {
                if Path::new(rel).is_relative() {
                    cfg.flow = Some(format!("file:{}", dir.join(rel).display()));
                }
            }
        }
        Ok(cfg)
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RunConfig) -> Self {
        overlay_fields!(self, top; command, flow, noise, method, gamma, pe, bc, grid, hermite_order, t_end, dt,
            particles, realizations, paths, record_every, n_max, mode_index, init_variance, pdf_mode, beta, bins,
            samples, seed, out_dir);
        self
    }

    pub fn check_command(&self, name: &str) -> Result<()> {
        match &self.command {
            Some(c) if c != name => bail!("config is for `{c}` but `{name}` was invoked"),
            _ => Ok(()),
        }
    }

    /// Range checks on every field that is set.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: Option<f64>) -> Result<()> {
            match v {
                Some(x) if !(x > 0.0 && x.is_finite()) => bail!("{name} must be positive and finite, got {x}"),
                _ => Ok(()),
            }
        }
        fn at_least(name: &str, v: Option<usize>, min: usize) -> Result<()> {
            match v {
                Some(x) if x < min => bail!("{name} must be at least {min}, got {x}"),
                _ => Ok(()),
            }
        }
        positive("gamma", self.gamma)?;
        positive("t-end", self.t_end)?;
        positive("dt", self.dt)?;
        positive("init-variance", self.init_variance)?;
        positive("beta", self.beta)?;
        if let Some(pe) = self.pe {
            if !(pe >= 0.0 && pe.is_finite()) {
                bail!("pe must be non-negative and finite, got {pe}");
            }
        }
        if let Some(g) = self.grid {
            if g < 8 || g % 2 == 1 {
                bail!("grid must be an even number of intervals, at least 8, got {g}");
            }
        }
        at_least("particles", self.particles, 2)?;
        at_least("realizations", self.realizations, 1)?;
        at_least("paths", self.paths, 1)?;
        at_least("record-every", self.record_every, 1)?;
        at_least("n-max", self.n_max, 1)?;
        at_least("mode-index", self.mode_index, 1)?;
        at_least("bins", self.bins, 1)?;
        if let (Some(t), Some(dt)) = (self.t_end, self.dt) {
            if dt > t {
                bail!("dt = {dt} exceeds t-end = {t}");
            }
        }
        if let Some(flow) = &self.flow {
            parse_flow(flow, self.grid.unwrap_or(512))?;
        }
        Ok(())
    }

    pub fn noise(&self) -> NoiseKind {
        self.noise.unwrap_or(NoiseKind::Ou)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(1.0)
    }

    pub fn pe(&self) -> f64 {
        self.pe.unwrap_or(1.0)
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc.unwrap_or(Bc::NoFlux).into()
    }

    pub fn grid(&self) -> usize {
        self.grid.unwrap_or(512)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn profile(&self) -> Result<Profile> {
        parse_flow(self.flow.as_deref().unwrap_or("linear"), self.grid())
    }

    pub fn flow_spec(&self) -> Result<FlowSpec> {
        let p = self.profile()?;
        let spec = match self.noise() {
            NoiseKind::Steady => FlowSpec::steady(p),
            NoiseKind::Ou | NoiseKind::White => FlowSpec::multiplicative(p),
        };
        Ok(spec.with_bc(self.bc()))
    }
}

pub fn parse_flow(s: &str, grid: usize) -> Result<Profile> {
    let mut parts = s.splitn(2, ':');
    let head = parts.next().unwrap_or_default();
    let rest = parts.next();
    match (head, rest) {
        ("linear", None) => Ok(Profile::linear()),
        ("linear", Some(r)) => {
            let nums: Vec<&str> = r.split(':').collect();
            let [slope, intercept] = nums[..] else {
                bail!("expected linear:<slope>:<intercept>, got `{s}`");
            };
            Ok(Profile::Linear {
                slope: slope.trim().parse().with_context(|| format!("bad slope in `{s}`"))?,
                intercept: intercept
                    .trim()
                    .parse()
                    .with_context(|| format!("bad intercept in `{s}`"))?,
            })
        }
        ("cosine", Some(n)) => Ok(Profile::cosine(
            n.trim().parse().with_context(|| format!("bad mode in `{s}`"))?,
        )),
        ("file", Some(path)) => {
            let values = read_profile_file(Path::new(path))?;
            let g = GridFunction::from_values(values).with_context(|| format!("profile in {path}"))?;
            if g.intervals() != grid {
                // resample so that spectral routines see the requested grid
                let p = Profile::Sampled { values: g };
                return Ok(Profile::Sampled {
                    values: p.to_grid(grid)?,
                });
            }
            Ok(Profile::Sampled { values: g })
        }
        _ => bail!("unknown flow `{s}`; use linear, linear:<slope>:<intercept>, cosine:<n> or file:<path>"),
    }
}

/// A JSON array of numbers, or one number per line (`#` comments allowed).
fn read_profile_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("flow file {} does not exist", path.display()))?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<f64>()
                .with_context(|| format!("bad value `{l}` in {}", path.display()))
        })
        .collect()
}
