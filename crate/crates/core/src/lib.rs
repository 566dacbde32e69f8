//! Radial half-eigenvalues of `|Du|^alpha M(D^2 u)` with `M` a Pucci
//! extremal operator, on balls and annuli.
//!
//! ```
//! use halfspec::radial_operator::{Params, Sign};
//! use halfspec::shooting::ShootConfig;
//! use halfspec::spectrum::eigenvalues_ball;
//!
//! let p = Params::new(0.0, 1.0, 2.0, 3)?;
//! let spec = eigenvalues_ball(&p, Sign::Plus, 2, &ShootConfig::default())?;
//! assert!(spec.mu(1)? < spec.mu(2)?);
//! # Ok::<(), halfspec::Error>(())
//! ```

pub mod error;
pub mod oracles;
pub mod picard;
pub mod radial_operator;
pub mod shooting;
pub mod spectrum;
pub mod validation;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/operator.md")]
    mod operator {}
    #[doc = include_str!("../../../book/src/shooting.md")]
    mod shooting {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
