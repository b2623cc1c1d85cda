//! Synthetic scenes, map degradation and exhaustive reference solvers.
//!
//! The simulator produces ideal maps straight from annotations; degradation
//! stands in for the error of a trained network.

mod degrade;
mod oracle;
mod scene;

pub use degrade::{attenuate_instance, box_blur, degrade, DegradeConfig};
pub use oracle::{brute_force_assign, brute_force_mrf_map, joint_score, MAX_BRUTE_FORCE_DIM, MAX_MRF_STATES};
pub use scene::{generate_scene, overlap_fraction, SceneConfig};
