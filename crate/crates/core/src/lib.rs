//! Sparse multivariate factor regression.
//!
//! The coefficient matrix of a multivariate linear model `Y = X D + E` is
//! factored as `D = A B`, with an elastic-net penalty on the tall factor
//! matrix `A` and an l1 penalty on the wide loading matrix `B`. The number
//! of factors is chosen as the largest `m` for which both fitted matrices
//! have full rank.

pub mod error;
pub mod linalg;
pub mod matrix;
pub mod model;
pub mod objective;
pub mod preprocess;
pub mod rng;
pub mod altmin;
pub mod subsolvers;
pub mod factor_select;
pub mod modelsel;
pub mod simbench;
pub mod fspca;

pub use error::{Result, SmfrError};
pub use matrix::DenseMatrix;
pub use model::{FactorModel, Penalties, PreprocessStats};
