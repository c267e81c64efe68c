//! Maximal dissipative and impedance-type boundary conditions for Maxwell
//! systems, formulated through m-order trace spaces and Cayley transforms.
//!
//! The core types are generic over the real scalar (`f32` or `f64`); the
//! aliases at the crate root fix `f64`.

pub mod error;
pub mod impedance;
pub mod linalg;
pub mod linrel;
pub mod maxwell1d;
pub mod morder;
pub mod sampling;
pub mod scalar;
pub mod suite;
pub mod tracespace;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Relation = linrel::LinearRelation<f64>;
pub type Pivot = linrel::PivotSpace<f64>;
pub type Contraction = linrel::ContractionOp<f64>;
pub type Weights = morder::MOrderWeights<f64>;
pub type Surface = tracespace::SpectralSurface<f64>;
pub type Basis = tracespace::HodgeBasis<f64>;
pub type Impedance = impedance::ImpedanceSpec<f64>;
pub type Condition = impedance::BoundaryCondition<f64>;
pub type Model1D = maxwell1d::Maxwell1D<f64>;
pub type Generator = maxwell1d::DiscreteGenerator<f64>;
pub type Bc1D = maxwell1d::BoundarySpec<f64>;
