//! Numerical toolkit for maximal operators associated to cube skeletons and
//! the skeleton A_p-type weight classes that govern their weighted L^p
//! bounds, together with a harness that checks every inequality at desk
//! scale.
//!
//! The numeric kernels are generic over the floating-point scalar (see
//! [`scalar::Scalar`]); concrete `f64`/`f32` aliases live at the crate root.
//! Lattice bookkeeping (the eccentricity `delta = 1/m`, plane indices, cell
//! indices) is exact integer arithmetic throughout.

pub mod delta;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod operators;
pub mod scalar;
pub mod selection;
pub mod verify;
pub mod weights;

pub use delta::Delta;
pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` instantiations, the default precision for the harness and CLI.
pub type Field64 = grid::SampledField<f64>;
pub type Prefix64 = grid::PrefixTable<f64>;
pub type Box64 = grid::AxisBox<f64>;
pub type Skeleton64 = geometry::Skeleton<f64>;

/// `f32` instantiations for storage- or throughput-bound callers.
pub type Field32 = grid::SampledField<f32>;
pub type Prefix32 = grid::PrefixTable<f32>;
pub type Box32 = grid::AxisBox<f32>;
pub type Skeleton32 = geometry::Skeleton<f32>;
