// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covariance;
pub mod fbm;
pub mod levy;
pub mod mc;
pub mod path;
pub mod pathint;
pub mod process;
pub mod quad;
pub mod specfun;
