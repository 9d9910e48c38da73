//! Link-level analysis of full-duplex massive-MIMO cellular networks whose
//! base stations use low-resolution ADCs and DACs.
//!
//! The crate is organised bottom-up:
//!
//! - [`netgeom`]: hexagonal and Poisson base-station layouts, user drops and
//!   strongest-gain association.
//! - [`channel`]: system parameters, large-scale gains and the small-scale,
//!   self-interference and inter-user channel samplers.
//! - [`aqnm`]: the additive quantization noise model.
//! - [`linkperf`]: closed-form SQINR breakdowns for matched-filter combining
//!   and precoding, plus the asymptotic and power-scaling limits.
//! - [`simkernel`]: a brute-force Monte Carlo oracle that synthesises the full
//!   quantized signal chain and measures each interference term.
//! - [`powermodel`]: receive-chain power consumption and energy efficiency.

pub mod aqnm;
pub mod channel;
mod error;
pub mod linkperf;
pub mod netgeom;
pub mod powermodel;
pub mod rng;
pub mod simkernel;
pub mod units;

pub use aqnm::{rho_from_bits, QuantizerModel};
pub use channel::{LargeScaleScenario, NetworkDraw, Resolution, SystemParams, UserLink};
pub use error::{Error, Result};
pub use linkperf::{CsiMode, Link, SqinrBreakdown, Term};
pub use netgeom::{AssociationMap, LayoutKind, NetworkLayout, Point2, Region, UserDrop};
pub use powermodel::{AdcScenario, DevicePowerTable};
pub use simkernel::{CdfEstimate, OracleReport, TrialResult};
