//! Shared numerical building blocks.

pub mod blocktri;
pub mod fd;
pub mod poly;
pub mod quad;
pub mod tridiag;

pub use blocktri::{BlockCholesky, BlockTridiagonal};
pub use fd::{fornberg_weights, Differentiator};
pub use poly::Polynomial;
pub use quad::{adaptive_gk15, cumulative_integral, GaussLegendre, Integral};
pub use tridiag::SymTridiagonal;
