use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid spike layout: {0}")]
    SpikeLayout(String),

    #[error("truncation infeasible at r_max = {r_max}: {required} terms required (limit {limit})")]
    TruncationInfeasible { r_max: f64, required: u64, limit: u64 },

    #[error("five-point stencil at |z| = {radius} with step {step} leaves the unit disk")]
    StencilOutsideDisk { radius: f64, step: f64 },

    #[error("{what} disagree at r = {r}: {left} vs {right}")]
    Inconsistent {
        what: &'static str,
        r: f64,
        left: f64,
        right: f64,
    },

    #[error("no admissible spike position for k = {k} below {limit}")]
    SearchFailed { k: usize, limit: u64 },

    #[error("adaptive quadrature on [{a}, {b}] stopped with error estimate {estimate}")]
    Quadrature { a: f64, b: f64, estimate: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
