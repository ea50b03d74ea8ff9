//! Model spaces: charts, metrics, connections, curvature, geodesics and isometries.

pub mod cx;
pub mod geodesic;
pub mod isometry;
pub mod space;

pub use geodesic::{exp_map, geodesic};
pub use isometry::{apply_isometry, pullback_residual, IsometrySpec};
pub use space::{contract, Christoffel, GeomError, ModelGeometry, Riemann, SpaceKind, M3, V3};
