//! Decision procedures for one-counter nets: trace inclusion for deterministic
//! nets via witness templates, trace universality via macrostate search, the
//! counter-machine hardness reduction, and brute-force reference oracles.

pub mod error;
pub mod fixtures;
pub mod ineq;
pub mod inclusion;
pub mod net;
pub mod oracles;
pub mod product;
pub mod reductions;
pub mod rewrite;
pub mod text;
pub mod universality;

pub use error::{Error, Result};
pub use net::{classify_net, eliminate_epsilon, normalize_pair, step, LabelMap, NetClass, Ocn, OcnBuilder, Process, Transition};
