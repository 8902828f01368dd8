use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hard-core potential has no pointwise values; use the boundary-condition pathway")]
    HardCore,

    #[error("{what} did not converge (best residual {residual:.3e})")]
    NonConvergence { what: &'static str, residual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("potential range {range:.3e} is below twice the grid spacing {spacing:.3e}; refine the grid")]
    Aliasing { range: f64, spacing: f64 },

    #[error("mass {mass:.3e} found in the outer 10% shell of the box; enlarge the box")]
    ConfinementLeak { mass: f64 },

    #[error("wave function is not normalized (norm {norm:.15})")]
    NotNormalized { norm: f64 },

    #[error("memory budget exceeded: {required} entries requested, limit {limit}")]
    MemoryBudget { required: usize, limit: usize },

    #[error("winding ill-defined: |u| = {value:.3e} on the loop is below the density floor")]
    IllDefinedWinding { value: f64 },

    #[error("scatterers closer than 2R: min separation {min_sep:.3e}, required {required:.3e}")]
    ScattererSeparation { min_sep: f64, required: f64 },

    #[error("trial function violates f(r_max) -> 1: |f(r_max) - 1| = {deviation:.3e}")]
    TrialNormalization { deviation: f64 },

    #[error("bisection bracket failure: {0}")]
    Bracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;
