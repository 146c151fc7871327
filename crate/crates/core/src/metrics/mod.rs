//! Evaluation mathematics: FID, inception score, weighted F1, pairwise
//! distances and exact t-SNE.

mod distance;
mod fid;
mod scores;
mod tsne;

pub use distance::{distance_stats, DistanceScope, DistanceStats};
pub use fid::{fid, fid_from_moments, moments};
pub use scores::{accuracy, inception_score, weighted_f1, FourWayReport};
pub use tsne::{conditional_affinities, joint_affinities, tsne, TsneParams};
