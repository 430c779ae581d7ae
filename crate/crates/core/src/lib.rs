// Negated comparisons like `!(x >= 0.0)` are used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod tree;
pub mod var_model;
pub mod tree_io;
pub mod instance;
pub mod model;
pub mod solution;
pub mod icc;
pub mod solve;
pub mod policy;
pub mod config;
pub mod experiment;
pub mod output;
