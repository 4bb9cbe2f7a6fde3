//! File formats, synthetic phantom, end-to-end pipeline, interactive session,
//! HTTP service and CLI support for template-guided interstitial
//! brachytherapy planning. The geometry lives in [`brachyplan_core`].

pub mod formats;
pub mod nrrd;
pub mod phantom;
pub mod pipeline;
pub mod server;
pub mod session;
pub mod stl;

pub use brachyplan_core as core;
