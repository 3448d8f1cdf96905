//! Exact rational arithmetic, truncated multivariate power series and
//! matrices over them.

pub mod index;
pub mod json;
pub mod linalg;
pub mod matrix;
pub mod poly;
pub mod rational;
pub mod sparse;
pub mod sparse_matrix;
pub mod trunc;

pub use index::{monomials_of_degree, monomials_of_weighted_degree, MultiIndex};
pub use linalg::QMat;
pub use matrix::SeriesMatrix;
pub use poly::Poly;
pub use rational::{format_rat, int, parse_rat, rat, Rational};
pub use sparse_matrix::SparseSeriesMatrix;
pub use trunc::{invert_series_map, vars, TruncSeries, Vars};
