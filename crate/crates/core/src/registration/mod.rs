//! Rigid registration: closed-form absolute orientation from corresponded
//! points, an exact nearest-neighbor index and ICP refinement.

mod horn;
mod icp;
mod kdtree;

pub use horn::{absolute_orientation, fiducial_registration_error, fit_rigid, CorrespondencePairs, COLLINEARITY_RATIO};
pub use icp::{icp, residual_mse, IcpParams, IcpResult, Termination};
pub use kdtree::{build_nn_index, Neighbor, NnIndex};

/// Errors raised by the registration routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegistrationError {
    #[error("source has {source_len} points but target has {target_len}")]
    LengthMismatch { source_len: usize, target_len: usize },
    #[error("at least {required} correspondences are required, got {got}")]
    TooFewPoints { required: usize, got: usize },
    #[error("degenerate configuration: {0}")]
    Degenerate(&'static str),
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("invalid ICP parameters: {0}")]
    InvalidParams(&'static str),
}
