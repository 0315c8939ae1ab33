//! Fractal sets and measures from iterated function systems: the classical
//! deterministic and chaos-game algorithms, the V-screen random iteration
//! algorithm driven by a family of IFSs, the code-tree calculus that indexes
//! V-variable fractals, and numerical fractal-dimension estimation.
//!
//! Modules follow the pipeline: [`geometry`] (planar maps) feeds [`ifs`]
//! (single-IFS algorithms on [`raster`] screens), [`trees`] provides the
//! code-tree algebra, [`superifs`] runs V screens at once, [`dimension`]
//! solves the dimension equations, and [`apps`] builds space-filling curves,
//! interpolation IFSs and colour-stolen renders on top.

pub mod apps;
pub mod dimension;
pub mod error;
pub mod geometry;
pub mod ifs;
pub mod presets;
pub mod raster;
pub mod rng;
pub mod superifs;
pub mod trees;

pub use error::{Error, Result};

/// A Monte Carlo point estimate with its standard error.
#[derive(Clone, Copy, Debug)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}
