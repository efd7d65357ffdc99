//! Simulation and analysis of the bi-rotated hemispherical-shell piecewise
//! isometry.
//!
//! One map step rotates the lower hemisphere `y < 0` about the z-axis by
//! `alpha` and then about the x-axis by `beta`; after each rotation whatever
//! ended up above the equator is turned back by a half-turn about the same
//! axis. The crate renders the density-coloured exceptional set, builds
//! cutting-line return histograms and estimates fractional coverage.

pub mod coverage;
pub mod density;
pub mod error;
pub mod map;
pub mod oracles;
pub mod parallel;
pub mod raster;
pub mod return_plot;
pub mod sidecar;
pub mod sphere;

pub use coverage::{overlap_area, phi_density, phi_direct, CoverageEstimate, CoverageMethod};
pub use density::{accumulate, DensityGrid, Pattern};
pub use error::{Error, Result, Stage};
pub use map::{AtomId, CutLine, CutParam, Protocol, PwiMap, ReturnBins, StepTrace};
pub use oracles::{analytic_phi, analytic_rho, arc_length_l, stepwise_oracle_map, SingleAxisProtocol};
pub use raster::{PixelGrid, RasterImage};
pub use return_plot::{ReturnHistogram, ReturnPlotParams, Seeding};
pub use sphere::{DiskCoord, SpherePoint};
