//! Numerics for geodesic and horocycle flows on `Z^d`-covers of compact
//! hyperbolic surfaces.

pub mod cells;
pub mod error;
pub mod flows;
pub mod psl2;
pub mod rigidity;
pub mod sampling;
pub mod stats;
pub mod surface;
pub mod thermo;
pub mod window;

pub use error::{HoroError, Result};
