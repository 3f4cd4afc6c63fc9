//! Small numerical kernels shared by the model modules.

pub mod quadrature;
pub mod roots;
pub mod simplex_search;
pub mod stats;
