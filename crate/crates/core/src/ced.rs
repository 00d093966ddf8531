//! Concurrent error detection for the quarterround.
//!
//! Two checkers observe a [`QrTrace`]:
//!
//! * **classic**: a single parity bit over the whole 4w-bit output, predicted
//!   as `p(b) ^ p(c) ^ beta`. Fed with an input parity bit supplied from
//!   outside the circuit, the check becomes code-disjoint: odd-weight errors on
//!   the input block reach the comparator.
//! * **gbpp**: group-based prediction of one parity bit per output word, run
//!   as eight single-bit updates that mirror the datapath. Four comparators
//!   are merged with a 4-input OR.
//!
//! Predictors read `b`, `c` and the carry-parity taps from the trace, so a
//! fault upstream of a tap corrupts both the datapath and the prediction the
//! way shared hardware would.

use std::fmt;

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::Result;
use crate::quarterround::{qr_output_parity, QrTrace};
use crate::word::{check_width, width_mask, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Classic,
    Gbpp,
}

impl Scheme {
    pub const fn name(self) -> &'static str {
        match self {
            Scheme::Classic => "classic",
            Scheme::Gbpp => "gbpp",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParitySource {
    ComputedLocal,
    SuppliedUpstream,
}

/// Parity bits of the quarterround inputs as delivered to a checker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputParities {
    pub pa: bool,
    pub pb: bool,
    pub pc: bool,
    pub pd: bool,
    /// Parity of the concatenated input block.
    pub p_block: bool,
    pub source: ParitySource,
}

impl InputParities {
    /// Parities of the inputs the datapath actually saw.
    pub fn local(t: &QrTrace) -> InputParities {
        let [pa, pb, pc, pd] = t.inputs().map(Word::parity);
        InputParities {
            pa,
            pb,
            pc,
            pd,
            p_block: pa ^ pb ^ pc ^ pd,
            source: ParitySource::ComputedLocal,
        }
    }

    /// Parities computed upstream of the circuit, before any fault.
    pub fn upstream(words: [Word; 4]) -> InputParities {
        let [pa, pb, pc, pd] = words.map(Word::parity);
        InputParities {
            pa,
            pb,
            pc,
            pd,
            p_block: pa ^ pb ^ pc ^ pd,
            source: ParitySource::SuppliedUpstream,
        }
    }

    #[inline]
    pub(crate) fn from_raw_upstream(inputs: [u64; 4]) -> InputParities {
        let [pa, pb, pc, pd] = inputs.map(|x| x.count_ones() & 1 == 1);
        InputParities {
            pa,
            pb,
            pc,
            pd,
            p_block: pa ^ pb ^ pc ^ pd,
            source: ParitySource::SuppliedUpstream,
        }
    }

    pub fn words(&self) -> [bool; 4] {
        [self.pa, self.pb, self.pc, self.pd]
    }
}

/// Carry-parity taps of the four adders.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taps {
    pub alpha: bool,
    pub beta: bool,
    pub gamma: bool,
    pub delta: bool,
}

impl Taps {
    pub fn of(t: &QrTrace) -> Taps {
        Taps {
            alpha: t.alpha,
            beta: t.beta,
            gamma: t.gamma,
            delta: t.delta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparator {
    Single,
    A,
    B,
    C,
    D,
}

const WORD_COMPARATORS: [Comparator; 4] =
    [Comparator::A, Comparator::B, Comparator::C, Comparator::D];

/// Set of comparators that fired, as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Fired(u8);

impl Fired {
    fn bit(c: Comparator) -> u8 {
        1 << (c as u8)
    }

    pub fn insert(&mut self, c: Comparator) {
        self.0 |= Fired::bit(c);
    }

    pub fn contains(self, c: Comparator) -> bool {
        self.0 & Fired::bit(c) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Comparator> {
        [
            Comparator::Single,
            Comparator::A,
            Comparator::B,
            Comparator::C,
            Comparator::D,
        ]
        .into_iter()
        .filter(move |c| self.contains(*c))
    }
}

impl Serialize for Fired {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

/// A short vector of parity bits (1 for classic, 4 for gbpp).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bits {
    bits: [bool; 4],
    len: u8,
}

impl Bits {
    pub fn one(bit: bool) -> Bits {
        Bits {
            bits: [bit, false, false, false],
            len: 1,
        }
    }

    pub fn four(bits: [bool; 4]) -> Bits {
        Bits { bits, len: 4 }
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits[..self.len as usize]
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.len as usize))?;
        for bit in self.as_slice() {
            seq.serialize_element(&u8::from(*bit))?;
        }
        seq.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CheckVerdict {
    pub scheme: Scheme,
    pub detected: bool,
    pub fired_comparators: Fired,
    pub predicted: Bits,
    pub observed: Bits,
}

/// Predicted parity of the full output: `p(b) ^ p(c) ^ beta`.
#[inline]
pub fn predict_qr_parity(t: &QrTrace) -> bool {
    t.b.parity() ^ t.c.parity() ^ t.beta
}

/// Closed-form per-word output parities `(a', b', c', d')`.
pub fn lemma_predictions(parities: [bool; 4], taps: Taps) -> [bool; 4] {
    let [pa, pb, pc, pd] = parities;
    let Taps {
        alpha,
        beta,
        gamma,
        delta,
    } = taps;
    [
        pb ^ pc ^ pd ^ beta ^ gamma,
        pa ^ pb ^ pc ^ alpha ^ beta ^ gamma ^ delta,
        pb ^ pd ^ gamma ^ delta,
        pa ^ pc ^ alpha ^ beta ^ gamma,
    ]
}

/// [`lemma_predictions`] evaluated on the trace's own inputs and taps.
pub fn predict_outputs_lemma(t: &QrTrace) -> [bool; 4] {
    lemma_predictions(t.inputs().map(Word::parity), Taps::of(t))
}

/// Group-based parity prediction: the quarterround replayed on parity bits.
#[inline]
pub fn gbpp(parities: [bool; 4], taps: Taps) -> [bool; 4] {
    let [mut pa, mut pb, mut pc, mut pd] = parities;
    pa ^= pb ^ taps.alpha;
    pd ^= pa;
    pc ^= pd ^ taps.beta;
    pb ^= pc;
    pa ^= pb ^ taps.gamma;
    pd ^= pa;
    pc ^= pd ^ taps.delta;
    pb ^= pc;
    [pa, pb, pc, pd]
}

/// Single-bit code-disjoint check.
///
/// The prediction is `p_block ^ p(a) ^ p(d) ^ beta`, which equals
/// `p(b) ^ p(c) ^ beta` whenever `p_block` is honest for the inputs the
/// datapath saw.
#[inline]
pub fn check_classic(t: &QrTrace, ip: &InputParities) -> CheckVerdict {
    let predicted = ip.p_block ^ t.a.parity() ^ t.d.parity() ^ t.beta;
    let observed = qr_output_parity(t);
    let mut fired = Fired::default();
    if predicted != observed {
        fired.insert(Comparator::Single);
    }
    CheckVerdict {
        scheme: Scheme::Classic,
        detected: !fired.is_empty(),
        fired_comparators: fired,
        predicted: Bits::one(predicted),
        observed: Bits::one(observed),
    }
}

#[inline]
pub fn check_gbpp(t: &QrTrace, ip: &InputParities) -> CheckVerdict {
    let predicted = gbpp(ip.words(), Taps::of(t));
    let observed = t.outputs().map(Word::parity);
    let mut fired = Fired::default();
    for ((p, o), comparator) in predicted.iter().zip(observed).zip(WORD_COMPARATORS) {
        if *p != o {
            fired.insert(comparator);
        }
    }
    CheckVerdict {
        scheme: Scheme::Gbpp,
        detected: !fired.is_empty(),
        fired_comparators: fired,
        predicted: Bits::four(predicted),
        observed: Bits::four(observed),
    }
}

#[inline]
pub fn check(scheme: Scheme, t: &QrTrace, ip: &InputParities) -> CheckVerdict {
    match scheme {
        Scheme::Classic => check_classic(t, ip),
        Scheme::Gbpp => check_gbpp(t, ip),
    }
}

/// Detection outcome only, without building a verdict.
#[inline]
pub fn detects(scheme: Scheme, t: &QrTrace, ip: &InputParities) -> bool {
    match scheme {
        Scheme::Classic => {
            let observed = (t.a_out.bits() ^ t.b_out.bits() ^ t.c_out.bits() ^ t.d_out.bits())
                .count_ones()
                & 1
                == 1;
            ip.p_block ^ ((t.a.bits() ^ t.d.bits()).count_ones() & 1 == 1) ^ t.beta != observed
        }
        Scheme::Gbpp => gbpp(ip.words(), Taps::of(t)) != t.outputs().map(Word::parity),
    }
}

/// How a carry vector reacts to an error on one adder operand.
///
/// For `a' = a ^ e` the carry vector becomes `c(a', b) = c(a, b) ^ e_c`;
/// the weight of `e_c` is unrelated to the weight of `e` and may be zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarryCensus {
    pub width: u32,
    pub cases: u64,
    pub carry_error_zero: u64,
    pub carry_error_weight_differs: u64,
    /// Cases where `p(a' + b) != p(a') ^ p(b) ^ p(c(a', b))`; always zero.
    pub parity_violations: u64,
}

/// Enumerates all operand pairs and all odd-weight errors on the first operand.
pub fn carry_error_census(width: u32) -> Result<CarryCensus> {
    check_width(width)?;
    if width > 8 {
        return Err(crate::error::Error::InvalidPolicy(format!(
            "carry census enumerates 2^(3w) cases; width {width} is too large"
        )));
    }
    let m = width_mask(width);
    let mut census = CarryCensus {
        width,
        ..CarryCensus::default()
    };
    for a in 0..=m {
        for b in 0..=m {
            let clean = Word::from_raw(a, width)
                .add_traced(Word::from_raw(b, width))?
                .carry_vector;
            for e in (1..=m).filter(|e| e.count_ones() & 1 == 1) {
                let corrupted = Word::from_raw(a ^ e, width);
                let r = corrupted.add_traced(Word::from_raw(b, width))?;
                let carry_error = r.carry_vector.bits() ^ clean.bits();
                census.cases += 1;
                if carry_error == 0 {
                    census.carry_error_zero += 1;
                }
                if carry_error.count_ones() != e.count_ones() {
                    census.carry_error_weight_differs += 1;
                }
                if r.sum.parity() != corrupted.parity() ^ (b.count_ones() & 1 == 1) ^ r.carry_parity
                {
                    census.parity_violations += 1;
                }
            }
        }
    }
    Ok(census)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault::FaultSpec;
    use crate::quarterround::{quarterround, Rotations};
    use crate::signal::SignalId;

    fn trace(width: u32, inputs: [u64; 4], faults: &[FaultSpec]) -> QrTrace {
        let [a, b, c, d] = inputs.map(|x| Word::new(x, width).unwrap());
        quarterround(a, b, c, d, Rotations::default_for(width), faults).unwrap()
    }

    fn bits8(n: u32) -> ([bool; 4], Taps) {
        let bit = |i: u32| (n >> i) & 1 == 1;
        (
            [bit(0), bit(1), bit(2), bit(3)],
            Taps {
                alpha: bit(4),
                beta: bit(5),
                gamma: bit(6),
                delta: bit(7),
            },
        )
    }

    #[test]
    fn zero_inputs_predict_zero() {
        let t = trace(32, [0; 4], &[]);
        assert!(!predict_qr_parity(&t));
        assert_eq!(predict_outputs_lemma(&t), [false; 4]);
        assert_eq!(gbpp([false; 4], Taps::default()), [false; 4]);
    }

    #[test]
    fn small_example_beta_from_trace() {
        let t = trace(4, [1, 1, 0, 0], &[]);
        // a0 = 2, d0 = 2, d1 = rotl(2, 0) = 2; c + d1 = 0 + 2 has no carries.
        assert_eq!((t.a0.bits(), t.d1.bits()), (2, 2));
        assert!(!t.beta);
        assert!(predict_qr_parity(&t));
        assert_eq!(predict_qr_parity(&t), qr_output_parity(&t));
    }

    #[test]
    fn gbpp_matches_lemmas_on_all_assignments() {
        for n in 0..256 {
            let (p, taps) = bits8(n);
            assert_eq!(
                gbpp(p, taps),
                lemma_predictions(p, taps),
                "assignment {n:08b}"
            );
        }
    }

    #[test]
    fn lemma_predictions_xor_to_theorem() {
        for n in 0..256 {
            let (p, taps) = bits8(n);
            let x = lemma_predictions(p, taps)
                .iter()
                .fold(false, |acc, b| acc ^ b);
            assert_eq!(x, p[1] ^ p[2] ^ taps.beta);
        }
    }

    #[test]
    fn clean_traces_pass_both_checks() {
        let t = trace(
            32,
            [0xdead_beef, 0xcafe_babe, 0x0bad_f00d, 0x1234_5678],
            &[],
        );
        let ip = InputParities::local(&t);
        let classic = check_classic(&t, &ip);
        let group = check_gbpp(&t, &ip);
        assert!(!classic.detected && classic.fired_comparators.is_empty());
        assert!(!group.detected && group.fired_comparators.is_empty());
        assert_eq!(predict_outputs_lemma(&t), t.outputs().map(Word::parity));
    }

    #[test]
    fn classic_detects_input_block_error_with_upstream_parity() {
        let inputs = [0x1111_1111, 0x0102_0304, 0x9b8d_6f43, 0x0123_4567];
        let honest = InputParities::from_raw_upstream(inputs);
        let fault = FaultSpec::new(SignalId::InputBlock, 1 << 70, 32).unwrap();
        let t = trace(32, inputs, &[fault]);
        let v = check_classic(&t, &honest);
        assert!(v.detected);
        assert!(v.fired_comparators.contains(Comparator::Single));
        // the same error is invisible when the parity is recomputed locally
        assert!(!check_classic(&t, &InputParities::local(&t)).detected);
    }

    #[test]
    fn classic_misses_a_out_but_gbpp_catches_it() {
        let inputs = [0x1111_1111, 0x0102_0304, 0x9b8d_6f43, 0x0123_4567];
        let fault = FaultSpec::new(SignalId::AOut, 0x7, 32).unwrap();
        let t = trace(32, inputs, &[fault]);
        let ip = InputParities::from_raw_upstream(inputs);
        assert!(!check_classic(&t, &ip).detected);
        assert!(check_gbpp(&t, &ip).detected);
    }

    #[test]
    fn gbpp_flags_a0_through_d_comparator() {
        let inputs = [0x1111_1111, 0x0102_0304, 0x9b8d_6f43, 0x0123_4567];
        let fault = FaultSpec::new(SignalId::A0, 0x1, 32).unwrap();
        let t = trace(32, inputs, &[fault]);
        let v = check_gbpp(&t, &InputParities::local(&t));
        assert!(v.detected);
        assert!(v.fired_comparators.contains(Comparator::D));
        assert!(!check_classic(&t, &InputParities::from_raw_upstream(inputs)).detected);
    }

    #[test]
    fn gbpp_flags_gamma_flip() {
        let fault = FaultSpec::new(SignalId::Gamma, 1, 32).unwrap();
        let t = trace(32, [9, 8, 7, 6], &[fault]);
        assert!(check_gbpp(&t, &InputParities::local(&t)).detected);
    }

    #[test]
    fn verdict_json_shape() {
        let fault = FaultSpec::new(SignalId::B0, 1, 8).unwrap();
        let t = trace(8, [1, 2, 3, 4], &[fault]);
        let v = check_gbpp(&t, &InputParities::local(&t));
        let json = serde_json::to_value(v).unwrap();
        assert_eq!(json["scheme"], "gbpp");
        assert_eq!(json["predicted"].as_array().unwrap().len(), 4);
        assert!(json["fired_comparators"]
            .as_array()
            .unwrap()
            .iter()
            .all(|c| c.is_string()));
    }

    #[test]
    fn carry_census_w4_has_both_witnesses() {
        let census = carry_error_census(4).unwrap();
        assert_eq!(census.cases, 16 * 16 * 8);
        assert!(census.carry_error_zero > 0);
        assert!(census.carry_error_weight_differs > 0);
        assert_eq!(census.parity_violations, 0);
        assert!(carry_error_census(9).is_err());
    }
}
