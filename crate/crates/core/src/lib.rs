//! Online budgeted allocation (AdWords) with primal-dual certificates, an
//! offline LP oracle, and a training-based algorithm for online stochastic
//! packing LPs.

pub mod bench;
pub mod gen;
pub mod lp;
pub mod model;
pub mod online;
pub mod par;
pub mod plp;
