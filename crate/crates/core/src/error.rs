use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not symplectic (residual {residual:.3e})")]
    NotSymplectic { residual: f64 },
    #[error("numerical consistency check failed: {0}")]
    NumericalConsistency(String),
    #[error("unsupported normal form at eigenvalue angle {angle:.9}: {reason}")]
    UnsupportedNormalForm { angle: f64, reason: String },
    #[error("tangential crossing could not be resolved near t = {t:.9}")]
    TangencyUnresolved { t: f64 },
    #[error("index unstable: {0}")]
    IndexUnstable(String),
    #[error("iterate index mismatch for m = {m}: direct ({direct_i}, {direct_nu}) vs root sum ({sum_i}, {sum_nu})")]
    BottViolation {
        m: usize,
        direct_i: i64,
        direct_nu: usize,
        sum_i: i64,
        sum_nu: usize,
    },
    #[error("splitting numbers did not converge at angle {angle:.9}")]
    SplittingUnstable { angle: f64 },
    #[error("Hessian singular at t = {t:.9}")]
    HessianSingular { t: f64 },
    #[error("Galerkin counts did not stabilise: {0}")]
    GalerkinUnstable(String),
    #[error("resonant constant form: s/(pi rho^2) = {ratio} is an integer")]
    ResonantForm { ratio: f64 },
    #[error("gauge Newton iteration did not converge at |x| = {norm:.6e}")]
    GaugeDiverged { norm: f64 },
    #[error("step size underflow at t = {t:.9}")]
    StiffFlow { t: f64 },
    #[error("Floquet multipliers depend on alpha (deviation {deviation:.3e})")]
    AlphaInconsistency { deviation: f64 },
    #[error("second-iterate index bounds violated: {0}")]
    IterationBoundViolation(String),
    #[error("surface is not convex: {0}")]
    NonConvex(String),
}

pub type Result<T> = core::result::Result<T, Error>;
