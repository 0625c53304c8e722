//! Wireframe sketch to depth toolkit.
//!
//! `wiredepth` turns 3D wireframe graphs into aligned training pairs for
//! sketch-conditioned depth prediction and provides the machinery around
//! them:
//!
//! * [`wireframe`] and [`shapes`]: the graph model, its JSON/OBJ interchange
//!   and a few parametric fixtures.
//! * [`camera`] and [`render`]: orthographic view sampling and a Z-buffered
//!   stroke rasterizer producing sketch masks, depth and disparity.
//! * [`depth`]: fixed-range normalized disparity and the 16-bit PNG codec.
//! * [`partial`]: BFS edge masking that simulates a partially drawn sketch.
//! * [`complexity`]: accidental pixel ratio and curve complexity scores.
//! * [`metrics`]: MAE / NMAE / AbsRel / delta and best-of-K aggregation.
//! * [`diffusion`]: a small pixel-space conditional DDPM with hand-written
//!   backpropagation, used to demonstrate mode selection on ambiguous sketches.
//! * [`reconstruct`]: lifting a depth map back to a point cloud and fitting
//!   a line wireframe to it.
//! * [`pipeline`]: dataset generation, splits, benchmarking and fitting
//!   drivers shared by the `wiredepth` binary.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod camera;
pub mod complexity;
pub mod depth;
pub mod diffusion;
pub mod grid;
pub mod metrics;
pub mod partial;
pub mod pipeline;
pub mod reconstruct;
pub mod render;
pub mod rng;
pub mod shapes;
pub mod wireframe;

pub use camera::OrthoCamera;
pub use depth::{DepthImage, DepthSpace, DisparityConfig};
pub use grid::Grid;
pub use render::{rasterize, RenderBundle};
pub use wireframe::{Edge, EdgeKind, Vertex, WireframeGraph};

/// 3-vector in model or camera units.
pub type Vec3 = nalgebra::Vector3<f64>;
