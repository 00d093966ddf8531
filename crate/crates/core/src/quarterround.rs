//! The traced quarterround datapath.
//!
//! Every named wire is recorded in a [`QrTrace`], and a [`FaultSpec`] can XOR
//! an error mask onto any of them at the moment the wire is produced, before
//! it fans out. Downstream adders, carry taps and outputs then see the
//! corrupted value. Tap faults flip only the parity bit delivered to the
//! predictors; the datapath carries are untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fault::FaultSpec;
use crate::signal::SignalId;
use crate::word::{carry_in_raw, check_width, rotl_raw, width_mask, Word};

/// Rotation amounts of the four `<<<` steps, in datapath order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rotations(pub [u32; 4]);

impl Rotations {
    pub const CHACHA: Rotations = Rotations([16, 12, 8, 7]);

    /// The ChaCha schedule reduced modulo `width`.
    pub fn default_for(width: u32) -> Rotations {
        Rotations::CHACHA.reduced(width)
    }

    pub fn reduced(self, width: u32) -> Rotations {
        Rotations(self.0.map(|r| r % width))
    }

    pub fn parse(text: &str) -> Result<Rotations> {
        let parts: Vec<u32> = text
            .split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("invalid rotation `{p}`")))
            })
            .collect::<Result<_>>()?;
        let schedule: [u32; 4] = parts
            .try_into()
            .map_err(|_| Error::Parse(format!("rotation schedule `{text}` needs 4 values")))?;
        Ok(Rotations(schedule))
    }
}

impl Default for Rotations {
    fn default() -> Self {
        Rotations::CHACHA
    }
}

/// Complete record of one quarterround execution.
///
/// `a..d` are the inputs as seen by the datapath, i.e. after any input fault.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QrTrace {
    pub width: u32,
    pub a: Word,
    pub b: Word,
    pub c: Word,
    pub d: Word,
    pub a0: Word,
    pub b0: Word,
    pub b1: Word,
    pub b2: Word,
    pub c0: Word,
    pub d0: Word,
    pub d1: Word,
    pub d2: Word,
    pub alpha: bool,
    pub beta: bool,
    pub gamma: bool,
    pub delta: bool,
    pub a_out: Word,
    pub b_out: Word,
    pub c_out: Word,
    pub d_out: Word,
    pub rotation_schedule: Rotations,
}

/// Per-signal error masks indexed by [`SignalId::index`]; zero means no fault.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct MaskTable([u128; 21]);

impl MaskTable {
    pub(crate) fn with(mut self, signal: SignalId, mask: u128) -> MaskTable {
        self.0[signal.index()] = mask;
        self
    }

    fn from_faults(faults: &[FaultSpec], width: u32) -> Result<MaskTable> {
        let mut table = MaskTable::default();
        let mut seen = [false; 21];
        for fault in faults {
            fault.validate(width)?;
            let slot = fault.signal.index();
            if seen[slot] {
                return Err(Error::DuplicateFault(fault.signal));
            }
            seen[slot] = true;
            table.0[slot] = fault.mask;
        }
        Ok(table)
    }
}

/// Source of the error mask applied to each wire.
pub(crate) trait Injector {
    fn word(&self, signal: SignalId) -> u64;
    fn tap(&self, signal: SignalId) -> bool;
    fn block(&self) -> u128;
}

impl Injector for MaskTable {
    #[inline]
    fn word(&self, signal: SignalId) -> u64 {
        self.0[signal.index()] as u64
    }

    #[inline]
    fn tap(&self, signal: SignalId) -> bool {
        self.0[signal.index()] & 1 == 1
    }

    #[inline]
    fn block(&self) -> u128 {
        self.0[SignalId::InputBlock.index()]
    }
}

impl Injector for FaultSpec {
    #[inline(always)]
    fn word(&self, signal: SignalId) -> u64 {
        (self.mask as u64) & 0u64.wrapping_sub(u64::from(self.signal == signal))
    }

    #[inline(always)]
    fn tap(&self, signal: SignalId) -> bool {
        self.signal == signal && self.mask & 1 == 1
    }

    #[inline(always)]
    fn block(&self) -> u128 {
        if self.signal == SignalId::InputBlock {
            self.mask
        } else {
            0
        }
    }
}

/// Runs the datapath on already-validated raw inputs.
#[inline(always)]
pub(crate) fn run_raw<I: Injector>(
    width: u32,
    inputs: [u64; 4],
    rot: Rotations,
    masks: &I,
) -> QrTrace {
    use SignalId::*;

    let m = width_mask(width);
    let block = masks.block();
    // block masks only exist for 4w <= 128; wider shifts yield zero
    let block_word = |slot: u32| (block.checked_shr(slot * width).unwrap_or(0) as u64) & m;
    let [r0, r1, r2, r3] = rot.0;

    let a = inputs[0] ^ masks.word(A) ^ block_word(3);
    let b = inputs[1] ^ masks.word(B) ^ block_word(2);
    let c = inputs[2] ^ masks.word(C) ^ block_word(1);
    let d = inputs[3] ^ masks.word(D) ^ block_word(0);

    let alpha = (carry_in_raw(a, b, width).count_ones() & 1 == 1) ^ masks.tap(Alpha);
    let a0 = (a.wrapping_add(b) & m) ^ masks.word(A0);
    let d0 = d ^ a0 ^ masks.word(D0);
    let d1 = rotl_raw(d0, r0, width) ^ masks.word(D1);

    let beta = (carry_in_raw(c, d1, width).count_ones() & 1 == 1) ^ masks.tap(Beta);
    let c0 = (c.wrapping_add(d1) & m) ^ masks.word(C0);
    let b0 = b ^ c0 ^ masks.word(B0);
    let b1 = rotl_raw(b0, r1, width) ^ masks.word(B1);

    let gamma = (carry_in_raw(a0, b1, width).count_ones() & 1 == 1) ^ masks.tap(Gamma);
    let a_out = (a0.wrapping_add(b1) & m) ^ masks.word(AOut);
    let d2 = d1 ^ a_out ^ masks.word(D2);
    let d_out = rotl_raw(d2, r2, width) ^ masks.word(DOut);

    let delta = (carry_in_raw(c0, d_out, width).count_ones() & 1 == 1) ^ masks.tap(Delta);
    let c_out = (c0.wrapping_add(d_out) & m) ^ masks.word(COut);
    let b2 = b1 ^ c_out ^ masks.word(B2);
    let b_out = rotl_raw(b2, r3, width) ^ masks.word(BOut);

    let w = |bits| Word::from_raw(bits, width);
    QrTrace {
        width,
        a: w(a),
        b: w(b),
        c: w(c),
        d: w(d),
        a0: w(a0),
        b0: w(b0),
        b1: w(b1),
        b2: w(b2),
        c0: w(c0),
        d0: w(d0),
        d1: w(d1),
        d2: w(d2),
        alpha,
        beta,
        gamma,
        delta,
        a_out: w(a_out),
        b_out: w(b_out),
        c_out: w(c_out),
        d_out: w(d_out),
        rotation_schedule: rot,
    }
}

/// Executes one quarterround on `(a, b, c, d)` with the given faults applied.
pub fn quarterround(
    a: Word,
    b: Word,
    c: Word,
    d: Word,
    schedule: Rotations,
    faults: &[FaultSpec],
) -> Result<QrTrace> {
    let width = a.width();
    check_width(width)?;
    for other in [b, c, d] {
        if other.width() != width {
            return Err(Error::WidthMismatch {
                left: width,
                right: other.width(),
            });
        }
    }
    let masks = MaskTable::from_faults(faults, width)?;
    Ok(run_raw(
        width,
        [a.bits(), b.bits(), c.bits(), d.bits()],
        schedule.reduced(width),
        &masks,
    ))
}

impl QrTrace {
    pub fn inputs(&self) -> [Word; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn outputs(&self) -> [Word; 4] {
        [self.a_out, self.b_out, self.c_out, self.d_out]
    }

    /// Word value on a word signal; `None` for taps and the input block.
    pub fn word(&self, signal: SignalId) -> Option<Word> {
        use SignalId::*;
        Some(match signal {
            A => self.a,
            B => self.b,
            C => self.c,
            D => self.d,
            A0 => self.a0,
            B0 => self.b0,
            B1 => self.b1,
            B2 => self.b2,
            C0 => self.c0,
            D0 => self.d0,
            D1 => self.d1,
            D2 => self.d2,
            AOut => self.a_out,
            BOut => self.b_out,
            COut => self.c_out,
            DOut => self.d_out,
            Alpha | Beta | Gamma | Delta | InputBlock => return None,
        })
    }

    /// Fault-free rerun from this trace's inputs.
    pub fn recompute(&self) -> QrTrace {
        run_raw(
            self.width,
            [self.a.bits(), self.b.bits(), self.c.bits(), self.d.bits()],
            self.rotation_schedule.reduced(self.width),
            &MaskTable::default(),
        )
    }
}

/// Parity of the concatenated output `(a' b' c' d')`.
#[inline]
pub fn qr_output_parity(t: &QrTrace) -> bool {
    t.a_out.parity() ^ t.b_out.parity() ^ t.c_out.parity() ^ t.d_out.parity()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w32(bits: u64) -> Word {
        Word::new(bits, 32).unwrap()
    }

    fn clean(width: u32, inputs: [u64; 4]) -> QrTrace {
        let [a, b, c, d] = inputs.map(|x| Word::new(x, width).unwrap());
        quarterround(a, b, c, d, Rotations::default(), &[]).unwrap()
    }

    #[test]
    fn chacha_quarterround_vector() {
        let t = clean(32, [0x1111_1111, 0x0102_0304, 0x9b8d_6f43, 0x0123_4567]);
        assert_eq!(
            t.outputs().map(Word::bits),
            [0xea2a_92f4, 0xcb1c_f8ce, 0x4581_472e, 0x5881_c4bb]
        );
    }

    #[test]
    fn taps_match_add_traced() {
        let t = clean(32, [0xdead_beef, 0x0123_4567, 0x89ab_cdef, 0xfeed_f00d]);
        assert_eq!(t.alpha, t.a.add_traced(t.b).unwrap().carry_parity);
        assert_eq!(t.beta, t.c.add_traced(t.d1).unwrap().carry_parity);
        assert_eq!(t.gamma, t.a0.add_traced(t.b1).unwrap().carry_parity);
        assert_eq!(t.delta, t.c0.add_traced(t.d_out).unwrap().carry_parity);
        assert_eq!(t.recompute(), t);
    }

    #[test]
    fn output_parity_matches_prediction_when_clean() {
        let t = clean(32, [1, 2, 3, 4]);
        assert_eq!(qr_output_parity(&t), t.b.parity() ^ t.c.parity() ^ t.beta);
        let zero = clean(32, [0; 4]);
        assert!(!qr_output_parity(&zero));
    }

    #[test]
    fn odd_fault_on_b0_breaks_output_parity() {
        let [a, b, c, d] = [5, 6, 7, 8].map(w32);
        let fault = FaultSpec::new(SignalId::B0, 0x1, 32).unwrap();
        let t = quarterround(a, b, c, d, Rotations::default(), &[fault]).unwrap();
        assert_ne!(qr_output_parity(&t), t.b.parity() ^ t.c.parity() ^ t.beta);
    }

    #[test]
    fn fault_on_a_out_propagates_downstream() {
        let [a, b, c, d] = [5, 6, 7, 8].map(w32);
        let base = quarterround(a, b, c, d, Rotations::default(), &[]).unwrap();
        let fault = FaultSpec::new(SignalId::AOut, 0x100, 32).unwrap();
        let t = quarterround(a, b, c, d, Rotations::default(), &[fault]).unwrap();
        assert_eq!(t.a_out.bits(), base.a_out.bits() ^ 0x100);
        assert_ne!(t.d2, base.d2);
        assert_eq!(t.b1, base.b1);
    }

    #[test]
    fn tap_fault_leaves_datapath_alone() {
        let [a, b, c, d] = [5, 6, 7, 8].map(w32);
        let base = quarterround(a, b, c, d, Rotations::default(), &[]).unwrap();
        let fault = FaultSpec::new(SignalId::Gamma, 1, 32).unwrap();
        let t = quarterround(a, b, c, d, Rotations::default(), &[fault]).unwrap();
        assert_eq!(t.outputs(), base.outputs());
        assert_eq!(t.gamma, !base.gamma);
    }

    #[test]
    fn input_block_mask_splits_across_words() {
        let width = 4;
        let [a, b, c, d] = [1, 2, 3, 4].map(|x| Word::new(x, width).unwrap());
        let fault = FaultSpec::new(SignalId::InputBlock, 0x8421, width).unwrap();
        let t = quarterround(a, b, c, d, Rotations::default(), &[fault]).unwrap();
        assert_eq!(t.inputs().map(Word::bits), [1 ^ 8, 2 ^ 4, 3 ^ 2, 4 ^ 1]);
    }

    #[test]
    fn rejects_bad_fault_lists() {
        let [a, b, c, d] = [1, 2, 3, 4].map(w32);
        let f = FaultSpec::new(SignalId::B0, 1, 32).unwrap();
        assert!(matches!(
            quarterround(a, b, c, d, Rotations::default(), &[f, f]),
            Err(Error::DuplicateFault(SignalId::B0))
        ));
        let small = Word::new(1, 8).unwrap();
        assert!(matches!(
            quarterround(a, b, c, small, Rotations::default(), &[]),
            Err(Error::WidthMismatch { .. })
        ));
        let too_wide = FaultSpec {
            signal: SignalId::Alpha,
            mask: 0b10,
        };
        assert!(quarterround(a, b, c, d, Rotations::default(), &[too_wide]).is_err());
    }

    #[test]
    fn rotation_parsing() {
        assert_eq!(Rotations::parse("16,12,8,7").unwrap(), Rotations::CHACHA);
        assert!(Rotations::parse("1,2,3").is_err());
        assert_eq!(Rotations::default_for(4), Rotations([0, 0, 0, 3]));
    }
}
