//! Construction and decomposition of hyperbolic surfaces.
//!
//! The crate builds hyperbolic surfaces of genus `g` with `n` cusps from
//! Fenchel-Nielsen data, decomposes them into pairs of pants by sweeping a
//! function over a triangulated model and cutting along regular level curves,
//! tightens the resulting curves to closed geodesics with a disc-by-disc
//! curve shortening process, and measures the ambient diameter of every
//! curve against `sqrt(g + n)`.

pub mod curves;
pub mod domain;
pub mod hyperbolic;
pub mod mesh;
pub mod pants;
pub mod shortening;
pub mod surface;

pub use hyperbolic::{GeodesicArc, HPoint, Isometry, IsometryClass};
