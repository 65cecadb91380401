//! Average secrecy rate of short-packet ground-to-satellite links under
//! shadowed Rician fading.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: gamma, digamma, hypergeometric series, the Gaussian tail
//!   function and its inverse.
//! - [`channel`]: shadowed Rician statistics and an exact sampler.
//! - [`link`]: antenna pattern, free-space loss, arc geometry, mean SNRs.
//! - [`secrecy`]: finite-blocklength secrecy rate, its fading-averaged lower
//!   bound and Taylor approximation, and the leakage inverse problem.
//! - [`montecarlo`]: seeded, parallel estimates used to check the bounds.
//! - [`scenario`] and [`sweep`]: configuration and one-dimensional
//!   experiments.
//!
//! ```
//! use satsec::scenario::Scenario;
//! use satsec::secrecy::avg_secrecy_lower_bound;
//!
//! let scenario = Scenario::reference();
//! let links = scenario.rate_links().unwrap();
//! let bound = avg_secrecy_lower_bound(&links, &scenario.fbl).unwrap();
//! assert!(bound > 1.0 && bound < 1.2);
//! ```
//!
//! A guide with worked examples lives in the `book/` directory of the
//! repository; its code listings are compiled as doc-tests of this crate.

pub mod channel;
pub mod link;
pub mod montecarlo;
pub mod scenario;
pub mod secrecy;
pub mod specfun;
pub mod sweep;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/special-functions.md")]
    mod special_functions {}
    #[doc = include_str!("../../../book/src/fading.md")]
    mod fading {}
    #[doc = include_str!("../../../book/src/link-geometry.md")]
    mod link_geometry {}
    #[doc = include_str!("../../../book/src/finite-blocklength.md")]
    mod finite_blocklength {}
    #[doc = include_str!("../../../book/src/lower-bound.md")]
    mod lower_bound {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
}
