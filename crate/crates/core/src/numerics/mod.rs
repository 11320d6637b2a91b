//! Generic numerical kernels shared by the bound, trajectory and code modules.

mod cholesky;
mod euler;
mod quadrature;
mod roots;
mod simplex;

pub use cholesky::Cholesky;
pub use euler::{gauss_seidel_euler, FnField, VectorField};
pub use quadrature::{integrate_adaptive, QuadratureSpec};
pub use roots::{find_root_bracketed, find_root_relative};
pub use simplex::{minimize_simplex, SimplexMinimum, SimplexOptions};
