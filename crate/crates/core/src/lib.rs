//! Chung-Yao interpolation lattices: construction from hyperplane families,
//! Lagrange interpolation and de Boor's remainder formula, multivariate
//! divided differences, and experiments on the convergence of interpolants
//! of shrinking lattices to Taylor polynomials.

pub mod chungyao;
pub mod convergence;
pub mod divdiff;
pub mod error;
pub mod function;
pub mod geometry;
pub mod linalg;
pub mod poly;

pub use error::{Error, Result};
pub use function::{Function, SmoothFunction};
pub use geometry::{
    AffineMap, ChungYaoLattice, Hyperplane, HyperplaneFamily, LineSubset, Point,
};
pub use poly::{MultiIndex, MultiPoly, SymmetricForm};
