//! Symmetric statistics: Hoeffding decompositions, cumulants, Edgeworth
//! expansions and the Monte Carlo machinery for checking them.

pub mod charfn;
pub mod concentration;
pub mod cumulants;
pub mod edgeworth;
pub mod error;
pub mod harness;
pub mod hoeffding;
pub mod model;
pub mod quad;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use hoeffding::{decompose, HoeffdingDecomposition};
pub use model::{Distribution, Estimate, Mode, SymmetricKernel, SymmetricStatistic};
