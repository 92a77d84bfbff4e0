//! Link-level simulator and optimizer for amplitude-domain reflection
//! modulation through an amplifying reconfigurable surface: cascaded Rician
//! channel generation, index-modulated transmission and detection,
//! max-min-distance amplitude codebook design, closed-form error analysis,
//! a multi-antenna extension, benchmark schemes, and a deterministic
//! Monte-Carlo BER engine.

pub mod analysis;
pub mod baselines;
pub mod channel;
pub mod codebook;
pub mod config;
pub mod engine;
pub mod error;
pub mod math;
pub mod mimo;
pub mod modem;
pub mod power;
pub mod rng;

pub use channel::{ChannelRealization, h_statistics};
pub use config::SystemConfig;
pub use engine::{run_ber_sweep, BerCurve, BerPoint, MimoOptions, Scheme, SweepSpec};
pub use error::{Error, Result};
pub use modem::{AapCodebook, Constellation, NoiseMode, TxFrame};
