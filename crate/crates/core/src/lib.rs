#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod experiments;
pub mod io;
pub mod lattice;
pub mod oracle;
pub mod quadrature;
pub mod schedule;
pub mod specfun;
pub mod spectral;
