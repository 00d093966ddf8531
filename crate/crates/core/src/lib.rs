//! Signal-traced ChaCha quarterround with parity-based concurrent error
//! detection, plus a fault-injection engine that measures checker coverage.
//!
//! * [`word`]: width-parametric words and the ARX primitives
//! * [`quarterround`]: the traced datapath with per-wire fault hooks
//! * [`chacha`]: block function and stream encryption
//! * [`ced`]: the single-parity code-disjoint check and group-based prediction
//! * [`fault`]: injection campaigns, coverage reports, witness search
//! * [`gate_model`]: gate counts of both checkers
//! * [`verify`]: identity suites used by the CLI and the acceptance tests

pub mod ced;
pub mod chacha;
pub mod error;
pub mod fault;
pub mod gate_model;
pub mod quarterround;
pub mod signal;
pub mod verify;
pub mod word;

pub use ced::{CheckVerdict, InputParities, Scheme};
pub use error::{Error, Result};
pub use fault::{CampaignConfig, CoverageReport, ErrorPolicy, FaultSpec, InputPolicy};
pub use quarterround::{quarterround, QrTrace, Rotations};
pub use signal::SignalId;
pub use word::{AddResult, Word};
