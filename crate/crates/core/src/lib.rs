//! Error exponents, occupancy laws, outer-codebook constructions and channel
//! simulation for concatenated DNA storage codes.
//!
//! Molecules are integer identifiers in `[0, inner_size)`; an outer codeword is a
//! size-`M` multiset of them. Probabilities that can underflow are returned as
//! natural logarithms.

pub mod balls_bins;
pub mod channel;
pub mod codebook;
pub mod error;
pub mod exponents;
pub mod numerics;
pub mod rng;
pub mod scaling;

pub use error::{Error, Result};
pub use scaling::{MessageSpec, ScalingParams};
