use thiserror::Error;

use crate::signal::SignalId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("word width {0} outside supported range 2..=64")]
    InvalidWidth(u32),
    #[error("value {value:#x} does not fit in {width} bits")]
    ValueTooWide { value: u64, width: u32 },
    #[error("operand widths differ ({left} vs {right})")]
    WidthMismatch { left: u32, right: u32 },
    #[error("signal {0} is faulted more than once")]
    DuplicateFault(SignalId),
    #[error("mask {mask:#x} is not a valid nonzero {bits}-bit error for signal {signal}")]
    InvalidMask {
        signal: SignalId,
        mask: u128,
        bits: u32,
    },
    #[error("round count {0} not in {{8, 12, 20}}")]
    InvalidRounds(u32),
    #[error("block counter overflow")]
    CounterOverflow,
    #[error("{what} must be {expected} bytes, got {got}")]
    InvalidLength {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("campaign signal set is empty")]
    EmptySignalSet,
    #[error("invalid campaign configuration: {0}")]
    InvalidPolicy(String),
    #[error("report lacks rows for expected signals: {}", join_signals(.0))]
    MissingRows(Vec<SignalId>),
    #[error("parse error: {0}")]
    Parse(String),
}

fn join_signals(signals: &[SignalId]) -> String {
    signals
        .iter()
        .map(|s| s.name())
        .collect::<Vec<_>>()
        .join(",")
}
