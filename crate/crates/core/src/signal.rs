//! Named wires of the quarterround datapath.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SignalId {
    A,
    B,
    C,
    D,
    A0,
    B0,
    B1,
    B2,
    C0,
    D0,
    D1,
    D2,
    Alpha,
    Beta,
    Gamma,
    Delta,
    AOut,
    BOut,
    COut,
    DOut,
    /// The whole `4w`-bit input `(a b c d)`, `a` in the most significant word.
    InputBlock,
}

/// How many bits an error mask on a signal spans.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalKind {
    Word,
    Tap,
    Block,
}

impl SignalId {
    pub const ALL: [SignalId; 21] = [
        SignalId::A,
        SignalId::B,
        SignalId::C,
        SignalId::D,
        SignalId::A0,
        SignalId::B0,
        SignalId::B1,
        SignalId::B2,
        SignalId::C0,
        SignalId::D0,
        SignalId::D1,
        SignalId::D2,
        SignalId::Alpha,
        SignalId::Beta,
        SignalId::Gamma,
        SignalId::Delta,
        SignalId::AOut,
        SignalId::BOut,
        SignalId::COut,
        SignalId::DOut,
        SignalId::InputBlock,
    ];

    pub const INTERMEDIATES: [SignalId; 8] = [
        SignalId::A0,
        SignalId::B0,
        SignalId::B1,
        SignalId::B2,
        SignalId::C0,
        SignalId::D0,
        SignalId::D1,
        SignalId::D2,
    ];

    pub const TAPS: [SignalId; 4] = [
        SignalId::Alpha,
        SignalId::Beta,
        SignalId::Gamma,
        SignalId::Delta,
    ];

    pub const OUTPUTS: [SignalId; 4] = [
        SignalId::AOut,
        SignalId::BOut,
        SignalId::COut,
        SignalId::DOut,
    ];

    pub const fn kind(self) -> SignalKind {
        match self {
            SignalId::Alpha | SignalId::Beta | SignalId::Gamma | SignalId::Delta => SignalKind::Tap,
            SignalId::InputBlock => SignalKind::Block,
            _ => SignalKind::Word,
        }
    }

    /// True for the wires that carry the quarterround inputs.
    pub const fn is_input(self) -> bool {
        matches!(
            self,
            SignalId::A | SignalId::B | SignalId::C | SignalId::D | SignalId::InputBlock
        )
    }

    /// Mask width for this signal in a datapath of word width `width`.
    pub const fn mask_bits(self, width: u32) -> u32 {
        match self.kind() {
            SignalKind::Word => width,
            SignalKind::Tap => 1,
            SignalKind::Block => 4 * width,
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            SignalId::A => "A",
            SignalId::B => "B",
            SignalId::C => "C",
            SignalId::D => "D",
            SignalId::A0 => "A0",
            SignalId::B0 => "B0",
            SignalId::B1 => "B1",
            SignalId::B2 => "B2",
            SignalId::C0 => "C0",
            SignalId::D0 => "D0",
            SignalId::D1 => "D1",
            SignalId::D2 => "D2",
            SignalId::Alpha => "ALPHA",
            SignalId::Beta => "BETA",
            SignalId::Gamma => "GAMMA",
            SignalId::Delta => "DELTA",
            SignalId::AOut => "A_OUT",
            SignalId::BOut => "B_OUT",
            SignalId::COut => "C_OUT",
            SignalId::DOut => "D_OUT",
            SignalId::InputBlock => "INPUT_BLOCK",
        }
    }

    /// Parses a comma-separated list, or `all`.
    pub fn parse_list(text: &str) -> Result<Vec<SignalId>> {
        if text.trim().eq_ignore_ascii_case("all") {
            return Ok(SignalId::ALL.to_vec());
        }
        let mut out: Vec<SignalId> = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let id = part.parse()?;
            if !out.contains(&id) {
                out.push(id);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for SignalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SignalId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_uppercase().replace('-', "_");
        SignalId::ALL
            .into_iter()
            .find(|id| id.name() == wanted)
            .ok_or_else(|| Error::Parse(format!("unknown signal `{s}`")))
    }
}
