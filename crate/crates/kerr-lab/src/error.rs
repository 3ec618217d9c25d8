use thiserror::Error;

/// Errors shared across the lab modules.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid black hole parameters: M = {mass}, a = {spin} (need 0 <= a < M, M > 0)")]
    BadParams { mass: f64, spin: f64 },

    #[error("chart-singular input at r = {r}, theta = {theta}: {what}")]
    ChartSingular { r: f64, theta: f64, what: &'static str },

    #[error("r = {r} is outside the valid radial range ({what})")]
    BadRadius { r: f64, what: &'static str },

    #[error("no trapped-set root in [3M - M/2, 3M + M/2] for tau = {tau}, phi_momentum = {phi_momentum}")]
    NoTrappedRoot { tau: f64, phi_momentum: f64 },

    #[error("point is outside the hyperbolic region: discriminant {disc} <= 0")]
    NotHyperbolic { disc: f64 },

    #[error("no trapped null ray through latitude theta0 = {theta0}: Theta^2 = {theta_sq} < 0")]
    NoTrappedLatitude { theta0: f64, theta_sq: f64 },

    #[error("perturbation too large: metric signature changed at (t, r) = ({t}, {r})")]
    LostHyperbolicity { t: f64, r: f64 },

    #[error("integration aborted: {0}")]
    Integration(String),

    #[error("step size underflow at lambda = {lambda}")]
    StepUnderflow { lambda: f64 },

    #[error("finite-difference step underflow near symbol singularity: {0}")]
    FdUnderflow(String),

    #[error("positivity audit failed: {0}")]
    AuditFailed(String),

    #[error("nu = {nu} is outside (0, 1): delta1 too large for the chosen b profile")]
    NuOutOfRange { nu: f64 },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("fit window error: {0}")]
    FitWindow(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
