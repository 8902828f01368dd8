//! Run configuration. Every struct rejects unknown keys; parse errors carry the JSON path.

use gplimit_core::gp::MinimizeOptions;
use gplimit_core::ineqlab::DysonSetup;
use gplimit_core::manybody::{Scaling, StudyOptions};
use gplimit_core::onebody::{FieldConfig, Grid};
use gplimit_core::potentials::RadialPotential;
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every solver seed is derived from it.
    #[serde(default)]
    pub seed: u64,
    pub study: Study,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    Scatter,
    GpMinimize,
    NlStudy,
    ManybodyEd,
    Converge,
    IneqCheck,
}

impl StudyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StudyKind::Scatter => "scatter",
            StudyKind::GpMinimize => "gp-minimize",
            StudyKind::NlStudy => "nl-study",
            StudyKind::ManybodyEd => "manybody-ed",
            StudyKind::Converge => "converge",
            StudyKind::IneqCheck => "ineq-check",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Study {
    Scatter(ScatterConfig),
    GpMinimize(GpConfig),
    NlStudy(NlConfig),
    ManybodyEd(EdConfig),
    Converge(ConvergeConfig),
    IneqCheck(IneqConfig),
}

impl Study {
    pub fn kind(&self) -> StudyKind {
        match self {
            Study::Scatter(_) => StudyKind::Scatter,
            Study::GpMinimize(_) => StudyKind::GpMinimize,
            Study::NlStudy(_) => StudyKind::NlStudy,
            Study::ManybodyEd(_) => StudyKind::ManybodyEd,
            Study::Converge(_) => StudyKind::Converge,
            Study::IneqCheck(_) => StudyKind::IneqCheck,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    pub potentials: Vec<RadialPotential>,
    /// Outer radius of the integration in units of the range; default 8.
    #[serde(default = "default_rmax_factor")]
    pub r_max_factor: f64,
    #[serde(default = "default_scatter_tol")]
    pub tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpConfig {
    pub grid: Grid,
    pub fields: FieldConfig,
    pub g: f64,
    #[serde(default)]
    pub options: MinimizeOptions,
    /// Half-widths (in grid points) of the square loops used for the winding number in `d = 2`.
    #[serde(default = "default_loops")]
    pub winding_loops: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlConfig {
    pub grid: Grid,
    pub fields: FieldConfig,
    /// Quartic coupling; in three dimensions `g = 4πa`.
    pub g: f64,
    pub eps: Vec<f64>,
    pub s: Vec<f64>,
    /// Append `s` = largest lattice momentum to the `s` list.
    #[serde(default)]
    pub include_lattice_max: bool,
    #[serde(default)]
    pub options: MinimizeOptions,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdConfig {
    pub grid: Grid,
    pub fields: FieldConfig,
    pub potential: RadialPotential,
    pub particles: usize,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_scaling")]
    pub scaling: Scaling,
    #[serde(default = "default_ed_tol")]
    pub tol: f64,
    /// Order of the reduced density matrix exported alongside the ground state.
    #[serde(default = "default_rdm_order")]
    pub rdm_order: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub grid: Grid,
    pub fields: FieldConfig,
    pub potential: RadialPotential,
    pub scaling: Scaling,
    #[serde(rename = "N")]
    pub n_values: Vec<usize>,
    #[serde(default)]
    pub options: StudyOptions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum IneqCase {
    W1,
    W2,
    W3,
    Dyson,
    Cs,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IneqConfig {
    /// May be overridden on the command line with `--case`.
    #[serde(default)]
    pub case: Option<IneqCase>,
    #[serde(default)]
    pub potential: Option<RadialPotential>,
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default = "FieldConfig::free")]
    pub fields: FieldConfig,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default)]
    pub dyson: Option<DysonSetup>,
    #[serde(default = "default_cs_dim")]
    pub cs_dim: usize,
    #[serde(default = "default_cs_delta")]
    pub cs_delta: f64,
    /// Also rerun on the grid with twice the points per axis and flag resolution dependence.
    #[serde(default)]
    pub refine: bool,
}

fn default_rmax_factor() -> f64 {
    8.0
}
fn default_scatter_tol() -> f64 {
    1e-10
}
fn default_loops() -> Vec<usize> {
    vec![8, 10, 6, 12, 4]
}
fn default_modes() -> usize {
    8
}
fn default_scaling() -> Scaling {
    Scaling::Beta { beta: 0.0 }
}
fn default_ed_tol() -> f64 {
    1e-10
}
fn default_rdm_order() -> usize {
    1
}
fn default_eps() -> f64 {
    0.5
}
fn default_s() -> f64 {
    2.0
}
fn default_cs_dim() -> usize {
    12
}
fn default_cs_delta() -> f64 {
    0.3
}

fn at<T: serde::de::DeserializeOwned>(v: serde_json::Value, prefix: &str) -> Result<T, RunError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { prefix.to_string() } else { format!("{prefix}.{inner}") };
        RunError::Config(format!("at `{path}`: {}", e.into_inner()))
    })
}

/// Parses a run configuration, reporting the JSON path of the first offending key.
///
/// The study body is dispatched on `kind` by hand so that errors inside it keep their full
/// path; the derived tagged representation would only report `study`.
pub fn parse_config(text: &str) -> Result<RunConfig, RunError> {
    use serde_json::Value;
    let root: Value = serde_json::from_str(text).map_err(|e| RunError::Config(format!("at `.`: {e}")))?;
    let Value::Object(mut top) = root else {
        return Err(RunError::Config("at `.`: expected a JSON object".into()));
    };
    if let Some(k) = top.keys().find(|k| !matches!(k.as_str(), "seed" | "study")) {
        return Err(RunError::Config(format!("at `{k}`: unknown field `{k}`, expected `seed` or `study`")));
    }
    let seed = match top.remove("seed") {
        Some(v) => at(v, "seed")?,
        None => 0,
    };
    let Some(Value::Object(mut body)) = top.remove("study") else {
        return Err(RunError::Config("at `study`: missing or not an object".into()));
    };
    let kind = match body.remove("kind") {
        Some(Value::String(k)) => k,
        _ => return Err(RunError::Config("at `study.kind`: missing or not a string".into())),
    };
    let body = Value::Object(body);
    let study = match kind.as_str() {
        "scatter" => Study::Scatter(at(body, "study")?),
        "gp-minimize" => Study::GpMinimize(at(body, "study")?),
        "nl-study" => Study::NlStudy(at(body, "study")?),
        "manybody-ed" => Study::ManybodyEd(at(body, "study")?),
        "converge" => Study::Converge(at(body, "study")?),
        "ineq-check" => Study::IneqCheck(at(body, "study")?),
        other => {
            return Err(RunError::Config(format!(
                "at `study.kind`: unknown study `{other}`, expected one of scatter, gp-minimize, nl-study, manybody-ed, converge, ineq-check"
            )))
        }
    };
    Ok(RunConfig { seed, study })
}
