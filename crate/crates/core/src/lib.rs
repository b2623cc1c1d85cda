//! Topological-line localisation for pedestrian detection, everything
//! downstream of the network: ground-truth map encoding, the training loss,
//! decoding of predicted maps into lines, MRF refinement under occlusion,
//! box synthesis and MR-FPPI evaluation. A scene simulator with exhaustive
//! reference solvers stands in for a trained model and real datasets.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decoder;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod formats;
pub mod geom;
pub mod grid;
pub mod loss;
pub mod mrf;
pub mod pipeline;
pub mod simgen;

pub use error::{Result, TllError};
pub use geom::{Annotation, BBox, Point, TopoLine};
