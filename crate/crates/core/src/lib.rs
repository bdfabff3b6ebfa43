//! Numerical toolkit for magnetic geodesic flows on the 2-torus that admit a
//! first integral polynomial in the momenta.
//!
//! * [`fields`]: smooth torus fields with exact first derivatives
//! * [`flow`]: the flow on the energy level `H = 1/2` and its cotangent form
//! * [`ansatz`]: the Fourier first-integral ansatz and its residual checks
//! * [`quasilinear`]: pointwise assembly of `A(U)U_x + B(U)U_y = 0`, the
//!   geodesic matrix, pencil spectra and the Egorov certificate
//! * [`report`]: grid norms of residuals

pub mod ansatz;
pub mod fields;
pub mod flow;
pub mod quasilinear;
pub mod report;

pub use ansatz::{Ansatz, RescaledAnsatz};
pub use fields::{Field, Jet, SamplingGrid, ScalarMap, TorusGeometry};
pub use flow::{MagneticSystem, PhaseState, StepControl, Trajectory};
pub use report::ResidualReport;

/// Smallest admissible value of the conformal factor.
pub const LAMBDA_FLOOR: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_lambda(value: f64, x: f64, y: f64) -> Result<()> {
    if value > LAMBDA_FLOOR && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "conformal factor {value:e} at ({x}, {y}) is below the floor {LAMBDA_FLOOR:e}"
        )))
    }
}
