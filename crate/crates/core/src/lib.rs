//! Near-maximal variable-radius Poisson-disk sampling and conforming
//! Delaunay meshing of discrete fracture networks.
//!
//! Every algorithm is generic over the scalar type ([`Real`]); the aliases
//! below fix it to `f64` for the common case.

pub mod bench;
pub mod delaunay;
pub mod dfn_io;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod kdtree;
pub mod mesh;
pub mod network;
pub mod quality;
pub mod sampler2d;
pub mod sampler3d;
mod scalar;
pub mod seeding;
pub mod sizing;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Point2d = geometry::Point2<f64>;
pub type Point3d = geometry::Point3<f64>;
pub type Params = sizing::SizingParams<f64>;
pub type Network = dfn_io::Dfn<f64>;
pub type NetworkMesh = network::DfnMesh<f64>;
pub type SurfaceMesh = mesh::TriMesh3<f64>;
pub type TetMesh = mesh::TetMesh<f64>;
pub type Volume = sampler3d::VolumeDomain<f64>;
pub type VolumeResult = sampler3d::VolumeMesh<f64>;
