//! Exact primal/dual edge eigenfunctions and shadow hierarchies for the
//! Laplace operator near circular crack and 90° V-notch edges with Neumann
//! faces, plus numeric evaluation of the resulting edge expansion.

pub mod exactnum;
pub mod cli;
pub mod evaluator;
pub mod geometry;
pub mod goldens;
pub mod recursion;
pub mod trigpoly;

pub use exactnum::{ExtScalar, Rational};
pub use geometry::Geometry;
pub use recursion::{build_table, Kind, ShadowKey, ShadowTable, SolveError, TableExtent};
pub use trigpoly::{ElemFactor, TrigPoly};
