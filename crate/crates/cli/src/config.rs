use std::path::{Path, PathBuf};

use lattice_hydro::{build_nearest_neighbor, gibbs_spectral, CovarianceProfile, InteractionMatrix, LimitAnchor, TemperatureProfile};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub profile: ProfileSection,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    NearestNeighbor,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub family: Family,
    pub d: usize,
    /// One entry per component; n is their count.
    pub gammas: Vec<f64>,
    pub masses: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum TemperatureFamily {
    Constant,
    GaussianBump,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Q0Source {
    Gibbs,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub temperature: TemperatureFamily,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default = "default_q0")]
    pub q0: Q0Source,
    #[serde(default = "one")]
    pub t0: f64,
}

fn default_q0() -> Q0Source {
    Q0Source::Gibbs
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Euler,
    Ns,
    HigherK,
    HalfspaceEuler,
    HalfspaceNs,
    Wigner,
    Conservation,
    Conditions,
}

impl Kind {
    pub fn default_kappa(self, order: usize) -> f64 {
        match self {
            Kind::Ns | Kind::HalfspaceNs => 2.0,
            Kind::HigherK => order as f64,
            _ => 1.0,
        }
    }

    pub fn half_space(self) -> bool {
        matches!(self, Kind::HalfspaceEuler | Kind::HalfspaceNs)
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Anchor {
    Macro,
    LeftSite,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum BoxSetting {
    Named(String),
    Fixed(Vec<usize>),
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub id: String,
    pub kind: Kind,
    #[serde(default)]
    pub tau: f64,
    #[serde(default)]
    pub r: Vec<f64>,
    /// Extra positions for Wigner scans; defaults to `r`.
    #[serde(default)]
    pub r_values: Vec<Vec<f64>>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub eps: Vec<f64>,
    /// Inclusive range [lo, hi] of site offsets along every axis; all pairs are used.
    #[serde(default = "default_offsets")]
    pub offsets: [i64; 2],
    #[serde(default)]
    pub thetas: Vec<Vec<f64>>,
    #[serde(default)]
    pub nsamples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_box", rename = "box")]
    pub box_policy: BoxSetting,
    #[serde(default)]
    pub anchor: Option<Anchor>,
    /// Largest acceptable error at the smallest eps.
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Run even when the interaction fails a condition check.
    #[serde(default)]
    pub override_conditions: bool,
}

fn default_offsets() -> [i64; 2] {
    [-2, 2]
}

fn default_order() -> usize {
    3
}

fn default_box() -> BoxSetting {
    BoxSetting::Named("auto".into())
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: default_dir(), formats: default_formats() }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}

fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Validation { field: field.into(), reason: reason.into() }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::new(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            CliError::Validation { field, reason: e.into_inner().message().trim().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let cfg = Self::parse(&text)?;
        Ok((cfg, hash_text(&text)))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        if m.d == 0 || m.d > 3 {
            return Err(invalid("model.d", format!("{} is not in 1..=3", m.d)));
        }
        if m.gammas.is_empty() || m.gammas.len() != m.masses.len() {
            return Err(invalid("model.masses", "need one gamma and one mass per component"));
        }
        let p = &self.profile;
        match p.temperature {
            TemperatureFamily::Constant if p.value.is_none() => return Err(invalid("profile.value", "required for a constant temperature")),
            TemperatureFamily::GaussianBump if p.amplitude.is_none() || p.width.is_none() => {
                return Err(invalid("profile.amplitude", "a gaussian bump needs amplitude and width"))
            }
            _ => {}
        }
        let e = &self.experiment;
        if e.id.is_empty() || e.id.contains([',', '/', '\n']) {
            return Err(invalid("experiment.id", "must be non-empty without commas or slashes"));
        }
        if e.kind == Kind::Conditions {
            return Ok(());
        }
        if e.r.len() != m.d {
            return Err(invalid("experiment.r", format!("need {} coordinates", m.d)));
        }
        if e.r_values.iter().any(|r| r.len() != m.d) {
            return Err(invalid("experiment.r_values", format!("every point needs {} coordinates", m.d)));
        }
        if e.eps.is_empty() {
            return Err(invalid("experiment.eps", "at least one value required"));
        }
        if e.eps.iter().any(|&x| !(x > 0.0)) || e.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("experiment.eps", "values must be positive and strictly decreasing"));
        }
        if e.offsets[0] > e.offsets[1] {
            return Err(invalid("experiment.offsets", "lo must not exceed hi"));
        }
        if e.kind.half_space() && (e.r[0] < 0.0 || e.offsets[0] < 0) {
            return Err(invalid("experiment.offsets", "half-space runs need r_1 >= 0 and non-negative offsets"));
        }
        if e.kind == Kind::Wigner && e.thetas.is_empty() {
            return Err(invalid("experiment.thetas", "wigner runs need at least one angle"));
        }
        if e.thetas.iter().any(|t| t.len() != m.d) {
            return Err(invalid("experiment.thetas", format!("every angle needs {} coordinates", m.d)));
        }
        if e.kind == Kind::HigherK && !(2..=3).contains(&e.order) {
            return Err(invalid("experiment.order", "supported orders are 2 and 3"));
        }
        if let Some(k) = e.kappa {
            if k < 1.0 {
                return Err(invalid("experiment.kappa", "must be at least 1"));
            }
        }
        if e.nsamples != 0 && e.nsamples < 100 {
            return Err(invalid("experiment.nsamples", "use 0 (deterministic only) or at least 100"));
        }
        match &e.box_policy {
            BoxSetting::Named(s) if s != "auto" => return Err(invalid("experiment.box", format!("unknown policy `{s}`"))),
            BoxSetting::Fixed(ext) if ext.len() != m.d => return Err(invalid("experiment.box", format!("need {} extents", m.d))),
            _ => {}
        }
        Ok(())
    }

    pub fn interaction(&self) -> lattice_hydro::Result<InteractionMatrix> {
        match self.model.family {
            Family::NearestNeighbor => build_nearest_neighbor(self.model.d, &self.model.gammas, &self.model.masses),
        }
    }

    pub fn temperature(&self) -> TemperatureProfile {
        let p = &self.profile;
        match p.temperature {
            TemperatureFamily::Constant => TemperatureProfile::Constant { value: p.value.unwrap_or(1.0) },
            TemperatureFamily::GaussianBump => {
                TemperatureProfile::GaussianBump { amplitude: p.amplitude.unwrap_or(0.0), width: p.width.unwrap_or(1.0) }
            }
        }
    }

    pub fn covariance_profile(&self, v: &InteractionMatrix) -> lattice_hydro::Result<CovarianceProfile> {
        match self.profile.q0 {
            Q0Source::Gibbs => gibbs_spectral(v, self.profile.t0)?.with_temperature(self.temperature()),
        }
    }

    pub fn kappa(&self) -> f64 {
        self.experiment.kappa.unwrap_or(self.experiment.kind.default_kappa(self.experiment.order))
    }

    pub fn anchor(&self) -> LimitAnchor {
        let default = match self.experiment.kind {
            Kind::Euler | Kind::HalfspaceEuler => Anchor::Macro,
            _ => Anchor::LeftSite,
        };
        match self.experiment.anchor.unwrap_or(default) {
            Anchor::Macro => LimitAnchor::Macro,
            Anchor::LeftSite => LimitAnchor::LeftSite,
        }
    }
}

pub fn hash_text(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}
