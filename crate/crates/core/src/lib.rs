//! Weak approximation of SDEs driven by Brownian motion and Lévy processes by
//! composing coordinate flows.
//!
//! The generator of the SDE is split into a drift part, one part per Brownian
//! component and one jump part. Each coordinate semigroup is approximated on its
//! own (exact flows, Taylor or Runge–Kutta flows, truncated or corrected jump
//! simulation) and the pieces are recombined by splitting schemes whose formal
//! order is certified symbolically in [`algebra`] and measured empirically in
//! [`montecarlo`].

pub mod algebra;
pub mod error;
pub mod flows;
pub mod jumps;
pub mod levy;
pub mod montecarlo;
pub mod poly;
pub mod rng;
pub mod schemes;

pub use error::{Error, Result};

/// State vector. Inline storage covers the small dimensions used in practice.
pub type Point = smallvec::SmallVec<[f64; 4]>;
