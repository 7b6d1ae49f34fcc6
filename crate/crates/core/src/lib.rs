//! Depth-based ranking, outlier detection and functional boxplots for
//! trajectory ensembles sampled on a shared time grid.

pub mod depth;
pub mod detect;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod outlyingness;
pub mod pointwise;
pub mod preprocess;
pub mod simgen;
pub mod stats;

pub use depth::{assign_bands, build_boxplot, msbd, rank, sbd, BandAssignment, Boxplot, BoxplotConfig, DepthRanking, MsbdConfig};
pub use detect::{detect_all, DetectConfig, DetectionReport, MsbdRuleConfig, RmdRuleConfig, WoRuleConfig};
pub use ensemble::{RandomSeed, TimeGrid, Trajectory, TrajectoryEnsemble};
pub use error::{Error, Result};
pub use outlyingness::{profile_ensemble, OutlyingnessProfile, WoConfig};
pub use pointwise::{CrossSection, PointwiseDepthMethod};
pub use preprocess::{align_common_start, smooth_resample, RawTrack, SmoothingConfig};
