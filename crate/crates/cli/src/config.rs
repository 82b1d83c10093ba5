//! Run configuration: one TOML file fully specifies an experiment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pompkit_core::{
    build_model, Error, Hypercube, McapSettings, Mif2Settings, ParamVector, PompModel,
    ProfileSettings, ResampleScheme, Result, SimMethod,
};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Model registry name: `sir` or `sirs`.
    pub model: String,
    /// Master seed; mandatory so every run is reproducible.
    pub seed: u64,
    /// Output directory.
    pub out: PathBuf,
    /// Case-count CSV consumed by pfilter/mif2/profile.
    pub data: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[serde(default)]
    pub workers: usize,
    /// Process stepper for inference runs.
    #[serde(default = "default_method")]
    pub method: String,
    /// Simulation substep, weeks.
    #[serde(default = "default_tau")]
    pub tau: f64,
    pub params: BTreeMap<String, ParamConfig>,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub pfilter: PfilterConfig,
    #[serde(default)]
    pub mif2: Mif2Config,
    #[serde(default)]
    pub profile: ProfileConfig,
}

fn default_method() -> String {
    "tauleap".into()
}

fn default_tau() -> f64 {
    0.01
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamConfig {
    pub value: f64,
    /// Overrides the model's default estimated/fixed flag.
    pub estimate: Option<bool>,
    /// Natural-scale box for multi-start draws; required when estimated.
    pub bounds: Option<[f64; 2]>,
    /// Per-parameter random-walk sd override (estimation scale).
    pub rw_sd: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// Number of weekly observations t_n = 1..=weeks.
    pub weeks: usize,
    /// Stepper used for data generation (defaults to the exact simulator).
    pub method: String,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            weeks: 50,
            method: "gillespie".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PfilterConfig {
    pub particles: usize,
    pub replicates: usize,
    pub tol: f64,
    /// `multinomial` (default) or `systematic`.
    pub resampling: String,
}

impl Default for PfilterConfig {
    fn default() -> Self {
        Self {
            particles: 1000,
            replicates: 10,
            tol: 1e-17,
            resampling: "multinomial".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Mif2Config {
    pub iterations: usize,
    pub particles: usize,
    pub starts: usize,
    pub rw_sd: f64,
    pub cooling: f64,
    pub horizon: f64,
    pub tol: f64,
    pub eval_replicates: usize,
    pub eval_particles: usize,
}

impl Default for Mif2Config {
    fn default() -> Self {
        Self {
            iterations: 100,
            particles: 500,
            starts: 10,
            rw_sd: 0.02,
            cooling: 0.05,
            horizon: 50.0,
            tol: 1e-17,
            eval_replicates: 10,
            eval_particles: 1000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    /// Parameters to profile, in order.
    pub targets: Vec<String>,
    pub level: f64,
    pub span: f64,
    /// Independent searches per grid point.
    pub starts: usize,
    /// Search settings per grid point.
    pub iterations: usize,
    pub particles: usize,
    pub eval_replicates: usize,
    pub eval_particles: usize,
    /// Explicit grid per target; targets without one get the automatic
    /// pilot-based grid with one refinement pass.
    pub grid: BTreeMap<String, GridConfig>,
    /// Bootstrap resamples for the adjusted cutoff.
    pub bootstrap: usize,
    /// Mesh size of the smoothed-curve evaluation.
    pub mesh: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            targets: Vec::new(),
            level: 0.95,
            span: 0.75,
            starts: 2,
            iterations: 30,
            particles: 300,
            eval_replicates: 5,
            eval_particles: 500,
            grid: BTreeMap::new(),
            bootstrap: 200,
            mesh: 10_001,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl GridConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 || !(self.from <= self.to) {
            return Err(Error::Config(format!(
                "invalid grid: from {} to {} with {} points",
                self.from, self.to, self.points
            )));
        }
        if self.points == 1 {
            return Ok(vec![self.from]);
        }
        Ok((0..self.points)
            .map(|i| self.from + (self.to - self.from) * i as f64 / (self.points - 1) as f64)
            .collect())
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("field `tau`: must be > 0, got {}", self.tau)));
        }
        for (name, p) in &self.params {
            if let Some([lo, hi]) = p.bounds {
                if !(lo < hi) {
                    return Err(Error::Config(format!(
                        "field `params.{name}.bounds`: need lo < hi"
                    )));
                }
            }
            if let Some(sd) = p.rw_sd {
                if !(sd >= 0.0) {
                    return Err(Error::Config(format!(
                        "field `params.{name}.rw_sd`: must be >= 0"
                    )));
                }
            }
        }
        if !(self.profile.level > 0.0 && self.profile.level < 1.0) {
            return Err(Error::Config("field `profile.level`: must be in (0,1)".into()));
        }
        Ok(())
    }

    /// Builds the inference model: registry model, configured stepper and
    /// substep, estimated flags overridden per config.
    pub fn build_model(&self) -> Result<PompModel> {
        self.build_model_with_method(&self.method)
    }

    /// Same model with the data-generation stepper.
    pub fn build_simulation_model(&self) -> Result<PompModel> {
        self.build_model_with_method(&self.simulate.method)
    }

    fn build_model_with_method(&self, method: &str) -> Result<PompModel> {
        let method = SimMethod::parse(method)?;
        let mut model = build_model(&self.model, method, self.tau)?;
        let mut space = (**model.space()).clone();
        for (name, p) in &self.params {
            space
                .index_of(name)
                .ok_or_else(|| Error::Config(format!("field `params.{name}`: unknown parameter for model `{}`", self.model)))?;
            if let Some(est) = p.estimate {
                space.set_estimated(name, est)?;
            }
        }
        let space = Arc::new(space);
        model.set_space(Arc::clone(&space))?;
        // every model parameter must be given a value
        for d in space.defs() {
            if !self.params.contains_key(&d.name) {
                return Err(Error::Config(format!(
                    "field `params.{}`: missing value for model `{}`",
                    d.name, self.model
                )));
            }
        }
        Ok(model)
    }

    /// The configured parameter point over the model's space.
    pub fn param_vector(&self, model: &PompModel) -> Result<ParamVector> {
        let space = model.space();
        let values: Vec<f64> = space
            .defs()
            .iter()
            .map(|d| self.params[&d.name].value)
            .collect();
        ParamVector::new(Arc::clone(space), values)
            .map_err(|e| Error::Config(format!("{e}")))
    }

    /// Hypercube over the estimated parameters; every estimated parameter
    /// must carry bounds.
    pub fn hypercube(&self, model: &PompModel) -> Result<Hypercube> {
        let mut bounds = Vec::new();
        for d in model.space().defs() {
            if d.estimated {
                let p = &self.params[&d.name];
                let [lo, hi] = p.bounds.ok_or_else(|| {
                    Error::Config(format!(
                        "field `params.{}.bounds`: required for estimated parameters",
                        d.name
                    ))
                })?;
                bounds.push((d.name.clone(), lo, hi));
            }
        }
        let cube = Hypercube::new(bounds);
        cube.validate(model.space())?;
        Ok(cube)
    }

    pub fn resampling_scheme(&self) -> Result<ResampleScheme> {
        match self.pfilter.resampling.as_str() {
            "multinomial" => Ok(ResampleScheme::Multinomial),
            "systematic" => Ok(ResampleScheme::Systematic),
            other => Err(Error::Config(format!(
                "field `pfilter.resampling`: unknown scheme `{other}`"
            ))),
        }
    }

    pub fn mif2_settings(&self, model: &PompModel) -> Result<Mif2Settings> {
        let mut overrides = Vec::new();
        for (name, p) in &self.params {
            if let Some(sd) = p.rw_sd {
                overrides.push((name.clone(), sd));
            }
        }
        let settings = Mif2Settings {
            iterations: self.mif2.iterations,
            particles: self.mif2.particles,
            rw_sd: self.mif2.rw_sd,
            rw_sd_overrides: overrides,
            cooling_fraction: self.mif2.cooling,
            cooling_horizon: self.mif2.horizon,
            tol: self.mif2.tol,
            scheme: self.resampling_scheme()?,
            parallel_particles: false,
        };
        settings.validate()?;
        settings.resolve_rw_sd(model.space())?;
        Ok(settings)
    }

    pub fn profile_settings(&self, model: &PompModel) -> Result<ProfileSettings> {
        let base = self.mif2_settings(model)?;
        Ok(ProfileSettings {
            starts: self.profile.starts,
            search: Mif2Settings {
                iterations: self.profile.iterations,
                particles: self.profile.particles,
                ..base
            },
            eval_replicates: self.profile.eval_replicates,
            eval_particles: self.profile.eval_particles,
        })
    }

    pub fn mcap_settings(&self) -> McapSettings {
        McapSettings {
            level: self.profile.level,
            span: self.profile.span,
            mesh: self.profile.mesh,
            bootstrap: self.profile.bootstrap,
        }
    }

    pub fn data_path(&self) -> Result<PathBuf> {
        self.data
            .clone()
            .ok_or_else(|| Error::Config("field `data`: required for this command".into()))
    }
}
