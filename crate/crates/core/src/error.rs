use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("singular Gel'fand-Levitan system at row {n} (condition estimate {cond:.3e})")]
    SingularSystem { n: usize, cond: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("phase unwrap ambiguity at grid size {grid} (jump of {jump:.4} rad); use a denser grid")]
    PhaseUnwrap { grid: usize, jump: f64 },

    #[error("verification failed: {0}")]
    Diagnostic(String),
}

pub type Result<T> = std::result::Result<T, Error>;
