//! Composable guarantees built from dominating pairs.
//!
//! * [`PrivacyLossDistribution`]: grid-discretised privacy loss, composed by
//!   convolution and read out as `δ(ε)` or `ε(δ)`.
//! * [`RdpCurve`]: `(α, ρ)` points, composed linearly and converted to ADP.
//! * [`PrivacyCurve`]: `(ε, δ)` profiles produced by [`group_profile`].

mod curve;
mod pld;
mod rdp;

pub use curve::{group_profile, CurveMetadata, GroupMethod, PrivacyCurve, PrivacyPoint, ProfileSetting};
pub use pld::{
    group_plds, max_pld_delta, max_pld_epsilon, pld_compose, pld_compose_with, pld_convolve, pld_delta, pld_epsilon,
    pld_from_pair, plds_from_candidates, posthoc_pld_delta, ComposeOptions, PldOptions, PrivacyLossDistribution,
};
pub use rdp::{rdp_compose, rdp_to_adp, ConversionFormula, RdpCurve};
