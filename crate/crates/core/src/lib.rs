//! Privacy amplification accounting for subsampled mechanisms.
//!
//! * [`mixtures`]: univariate mixture distributions and privacy-loss functions.
//! * [`divergence`]: hockey-stick and Rényi divergences of mixture pairs.
//! * [`amplification`]: dominating pairs and closed-form bounds for
//!   subsampling schemes, group relations and base mechanisms.
//! * [`accounting`]: privacy loss distributions, RDP curves and composition.
//! * [`oracle`]: exhaustive evaluation on small discrete instances.

pub mod accounting;
pub mod amplification;
pub mod divergence;
pub mod error;
pub mod mixtures;
pub mod oracle;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
