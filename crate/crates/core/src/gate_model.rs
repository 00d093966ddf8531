//! Gate-count accounting for the two checkers.
//!
//! Only the detection overhead is counted, not the datapath. Parity trees over
//! `n` bits cost `n - 1` two-input XORs; the GBPP comparator merge is one
//! 4-input OR.

use std::fmt;

use serde::Serialize;

use crate::ced::Scheme;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TallyEntry {
    pub label: &'static str,
    pub xor2: u32,
    pub or4: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GateTally {
    pub scheme: Scheme,
    pub width: u32,
    pub xor2: u32,
    pub or4: u32,
    pub total: u32,
    pub breakdown: Vec<TallyEntry>,
}

impl GateTally {
    fn from_breakdown(scheme: Scheme, width: u32, breakdown: Vec<TallyEntry>) -> GateTally {
        let xor2 = breakdown.iter().map(|e| e.xor2).sum();
        let or4 = breakdown.iter().map(|e| e.or4).sum();
        GateTally {
            scheme,
            width,
            xor2,
            or4,
            total: xor2 + or4,
            breakdown,
        }
    }

    pub fn entry(&self, label: &str) -> Option<&TallyEntry> {
        self.breakdown.iter().find(|e| e.label == label)
    }
}

impl fmt::Display for GateTally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "scheme {} width {}: {} gates",
            self.scheme, self.width, self.total
        )?;
        for e in &self.breakdown {
            write!(f, "  {:<18} {:>5} xor2", e.label, e.xor2)?;
            if e.or4 > 0 {
                write!(f, " + {} or4", e.or4)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn xor(label: &'static str, xor2: u32) -> TallyEntry {
    TallyEntry {
        label,
        xor2,
        or4: 0,
    }
}

fn check_gate_width(width: u32) -> Result<()> {
    if (2..=1 << 20).contains(&width) {
        Ok(())
    } else {
        Err(Error::InvalidWidth(width))
    }
}

/// Single-parity check: `p(b)`, `p(c)`, `p(b) ^ p(c) ^ beta`, the output
/// parity tree, and one comparator.
pub fn count_classic(width: u32) -> Result<GateTally> {
    check_gate_width(width)?;
    Ok(GateTally::from_breakdown(
        Scheme::Classic,
        width,
        vec![
            xor("input_parities", 2 * (width - 1) + 2),
            xor("output_parities", 4 * width - 1),
            xor("comparators", 1),
        ],
    ))
}

/// Group-based check: four input trees, four output trees, the twelve XORs
/// of the eight predictor updates, four comparators and the OR merge.
pub fn count_gbpp(width: u32) -> Result<GateTally> {
    check_gate_width(width)?;
    Ok(GateTally::from_breakdown(
        Scheme::Gbpp,
        width,
        vec![
            xor("input_parities", 4 * (width - 1)),
            xor("output_parities", 4 * (width - 1)),
            // four 3-operand updates at 2 gates, four 2-operand updates at 1
            xor("predictor_core", 4 * 2 + 4),
            xor("comparators", 4),
            TallyEntry {
                label: "merge",
                xor2: 0,
                or4: 1,
            },
        ],
    ))
}

pub fn count(scheme: Scheme, width: u32) -> Result<GateTally> {
    match scheme {
        Scheme::Classic => count_classic(width),
        Scheme::Gbpp => count_gbpp(width),
    }
}
