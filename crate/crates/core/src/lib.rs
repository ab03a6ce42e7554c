//! Deterministic procedural generation of natural 3D scenes.
//!
//! The crate is organized as a pipeline of independent modules:
//!
//! - [`fields`] — scalar/vector field programs (noise, SDFs, arithmetic) that
//!   every other module consumes as terrain and mask inputs.
//! - [`nodegraph`] — a JSON node-graph document format, its validator, and a
//!   transpiler that lowers documents to field programs plus readable source.
//! - [`terrain`] — terrain elements built from field programs: eroded rock
//!   heightfields, Voronoi rock shells, cave systems, tiled landscapes,
//!   floating islands, and boulder meshes.
//! - [`meshing`] — uniform marching cubes and a camera-adaptive spherical
//!   variant whose cell size tracks projected pixel size.
//! - [`growth`] — organic growth simulations: recursive paths, space
//!   colonization, skeleton skinning, differential growth, reaction-diffusion,
//!   dendritic solidification, shrinkwrap projection, and spiral shell sweeps.
//! - [`scene`] — surface scattering with hard minimum spacing, asset
//!   placement, and constraint-driven camera selection.
//! - [`groundtruth`] — a software rasterizer producing pixel-exact depth,
//!   occlusion boundaries, normals, segmentation, optical flow, and disparity.
//!
//! Everything is seeded: the same inputs produce byte-identical outputs on
//! every platform. See [`rng`] for how seeds fan out into named substreams.

pub mod fields;
pub mod groundtruth;
pub mod growth;
pub mod mesh;
pub mod meshing;
pub mod nodegraph;
pub mod rng;
pub mod scene;
pub mod terrain;

pub use mesh::Mesh;
pub use meshing::CameraModel;
