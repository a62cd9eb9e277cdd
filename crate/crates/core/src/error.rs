use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("model outside its validity range: {0}")]
    Singularity(String),

    #[error("inconsistent state: {0}")]
    State(String),

    #[error("consistent initialization failed after {iterations} iterations; worst residual {worst} = {value:.3e}")]
    Initialization {
        iterations: usize,
        worst: String,
        value: f64,
    },

    #[error("integration failed at t = {t:.6} s (h = {h:.3e} s): {reason}")]
    Integration { t: f64, h: f64, reason: String },

    #[error("steady-state solve did not converge: ‖f‖ = {f_norm:.3e}, ‖g‖ = {g_norm:.3e}")]
    SteadyState { f_norm: f64, g_norm: f64 },

    #[error("Jacobian verification failed: max discrepancy {max:.3e} at {worst}")]
    JacobianCheck { max: f64, worst: String },

    #[error("scenario parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
