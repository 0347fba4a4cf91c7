//! Upgraded approximations of discrete memoryless multiple-access channels.
//!
//! Given a channel with a large output alphabet, [`upgrade`] produces a
//! channel with at most `q^2 (2 mu)^(q-1)` letters that is *upgraded* with
//! respect to the original (the original is recovered from it through the
//! returned intermediate channel) and whose sum-rate exceeds the original's
//! by at most `(q-1)/mu * (2 + q ln q)` nats, where `q` is the number of
//! flattened inputs and `mu` the fidelity parameter.
//!
//! ```
//! use macup::{parse_mac, upgrade, verify_upgrade};
//!
//! let w = parse_mac("MAC\nusers 1\nalphabet 2\noutputs 3\nprior 0.5 0.5\n\
//!     letter a 0.5 0.0\nletter e 0.5 0.5\nletter b 0.0 0.5\n").unwrap();
//! let res = upgrade(&w, 17.2).unwrap();
//! assert!(verify_upgrade(&w, &res, 17.2).unwrap().pass);
//! ```

pub mod binner;
pub mod channel;
pub mod error;
pub mod format;
pub mod polar;
pub mod quantizer;
pub mod random;
pub mod sum;
pub mod transition;
pub mod upgrader;
pub mod verifier;

pub use binner::{bin_key, build_bins, leading_input, psi, Bin, BinKey, Binning};
pub use channel::{eta, flatten_input, unflatten_input, AppVector, Mac};
pub use error::{Error, Result};
pub use format::{mac_to_text, parse_mac};
pub use polar::{
    construct_profile, polar_profile, transform_minus, transform_plus, Mode, PolarProfile,
};
pub use quantizer::{PartitionReport, RegionPartition};
pub use random::gen_random;
pub use transition::Transition;
pub use upgrader::{
    alpha, build_intermediate, degrade, degrade_full, epsilons, gamma, upgrade, upgrade_with,
    Diagnostics, UpgradeOptions, UpgradeResult,
};
pub use verifier::{
    verify_construction, verify_degraded, verify_equivalence, verify_partial_information,
    verify_upgrade, Check, VerificationReport,
};
