//! Cylindrical grid, core geometry and masked density fields.

mod core_region;
mod density;
mod grid;
pub mod io;

pub use core_region::{no_trapping, CoreRegion, CoreShape};
pub use density::{disc_rect_area, uniform_ball, DensityField};
pub use grid::CylGrid;
