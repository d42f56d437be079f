// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod expr;
pub mod model_space;
pub mod ode;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod roots;
pub mod sturm_liouville;
pub mod suite;
pub mod verification;
pub mod warped_product;
