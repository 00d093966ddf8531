//! The ChaCha block function and stream encryption.
//!
//! Every quarterround goes through the traced datapath, so the per-round
//! checkers can observe (and a test harness can corrupt) any invocation.

use serde::Serialize;

use crate::ced::{check, CheckVerdict, InputParities, Scheme};
use crate::error::{Error, Result};
use crate::fault::FaultSpec;
use crate::quarterround::{run_raw, MaskTable, QrTrace, Rotations};
use crate::word::Word;

pub const CONSTANTS: [u32; 4] = [0x6170_7865, 0x3320_646e, 0x7962_2d32, 0x6b20_6574];
pub const BLOCK_LEN: usize = 64;

/// State positions touched by the eight quarterrounds of a double round:
/// four columns, then four diagonals.
pub const DOUBLE_ROUND: [[usize; 4]; 8] = [
    [0, 4, 8, 12],
    [1, 5, 9, 13],
    [2, 6, 10, 14],
    [3, 7, 11, 15],
    [0, 5, 10, 15],
    [1, 6, 11, 12],
    [2, 7, 8, 13],
    [3, 4, 9, 14],
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rounds {
    R8,
    R12,
    R20,
}

impl Rounds {
    pub const fn count(self) -> u32 {
        match self {
            Rounds::R8 => 8,
            Rounds::R12 => 12,
            Rounds::R20 => 20,
        }
    }

    /// Quarterround invocations per block.
    pub const fn quarterrounds(self) -> usize {
        self.count() as usize / 2 * 8
    }
}

impl TryFrom<u32> for Rounds {
    type Error = Error;

    fn try_from(n: u32) -> Result<Self> {
        match n {
            8 => Ok(Rounds::R8),
            12 => Ok(Rounds::R12),
            20 => Ok(Rounds::R20),
            other => Err(Error::InvalidRounds(other)),
        }
    }
}

/// Nonce and counter split of the last state row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NonceLayout {
    /// 64-bit counter, 64-bit nonce.
    Original64x64,
    /// 32-bit counter, 96-bit nonce.
    Ietf96x32,
}

impl NonceLayout {
    pub const fn nonce_len(self) -> usize {
        match self {
            NonceLayout::Original64x64 => 8,
            NonceLayout::Ietf96x32 => 12,
        }
    }

    pub const fn max_counter(self) -> u64 {
        match self {
            NonceLayout::Original64x64 => u64::MAX,
            NonceLayout::Ietf96x32 => u32::MAX as u64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CipherParams {
    pub rounds: Rounds,
    pub key: [u8; 32],
    pub layout: NonceLayout,
    nonce: [u8; 12],
}

impl CipherParams {
    pub fn new(rounds: Rounds, key: [u8; 32], layout: NonceLayout, nonce: &[u8]) -> Result<Self> {
        if nonce.len() != layout.nonce_len() {
            return Err(Error::InvalidLength {
                what: "nonce",
                expected: layout.nonce_len(),
                got: nonce.len(),
            });
        }
        let mut padded = [0u8; 12];
        padded[..nonce.len()].copy_from_slice(nonce);
        Ok(CipherParams {
            rounds,
            key,
            layout,
            nonce: padded,
        })
    }

    pub fn nonce(&self) -> &[u8] {
        &self.nonce[..self.layout.nonce_len()]
    }
}

fn le_words<const N: usize>(bytes: &[u8]) -> [u32; N] {
    let mut out = [0u32; N];
    for (word, chunk) in out.iter_mut().zip(bytes.chunks_exact(4)) {
        *word = u32::from_le_bytes(chunk.try_into().expect("4-byte chunk"));
    }
    out
}

/// The 4x4 state, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateMatrix(pub [u32; 16]);

impl StateMatrix {
    /// Constants, key, then counter and nonce words.
    pub fn initial(params: &CipherParams, counter: u64) -> Result<StateMatrix> {
        if counter > params.layout.max_counter() {
            return Err(Error::CounterOverflow);
        }
        let mut v = [0u32; 16];
        v[..4].copy_from_slice(&CONSTANTS);
        v[4..12].copy_from_slice(&le_words::<8>(&params.key));
        match params.layout {
            NonceLayout::Original64x64 => {
                v[12] = counter as u32;
                v[13] = (counter >> 32) as u32;
                v[14..].copy_from_slice(&le_words::<2>(params.nonce()));
            }
            NonceLayout::Ietf96x32 => {
                v[12] = counter as u32;
                v[13..].copy_from_slice(&le_words::<3>(params.nonce()));
            }
        }
        Ok(StateMatrix(v))
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.0[4 * row + col]
    }

    pub fn to_bytes(&self) -> [u8; BLOCK_LEN] {
        let mut out = [0u8; BLOCK_LEN];
        for (chunk, word) in out.chunks_exact_mut(4).zip(self.0) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        out
    }
}

/// A fault aimed at one quarterround invocation of a block computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QrFault {
    /// Position in execution order, `0..8 * rounds / 2`.
    pub qr_index: usize,
    pub fault: FaultSpec,
}

/// Applies the rounds, invoking `observe` on every quarterround trace.
fn permute(
    state: &mut StateMatrix,
    rounds: Rounds,
    faults: &[QrFault],
    mut observe: impl FnMut(usize, [u32; 4], &QrTrace),
) -> Result<()> {
    let mut masks = vec![MaskTable::default(); rounds.quarterrounds()];
    let mut seen = vec![Vec::new(); rounds.quarterrounds()];
    for f in faults {
        let slot = masks.get_mut(f.qr_index).ok_or_else(|| {
            Error::InvalidPolicy(format!("quarterround index {} out of range", f.qr_index))
        })?;
        f.fault.validate(32)?;
        if seen[f.qr_index].contains(&f.fault.signal) {
            return Err(Error::DuplicateFault(f.fault.signal));
        }
        seen[f.qr_index].push(f.fault.signal);
        *slot = slot.with(f.fault.signal, f.fault.mask);
    }

    let v = &mut state.0;
    for double_round in 0..rounds.count() as usize / 2 {
        for (k, idx) in DOUBLE_ROUND.iter().enumerate() {
            let qr_index = double_round * 8 + k;
            let inputs = idx.map(|i| v[i]);
            let trace = run_raw(
                32,
                inputs.map(u64::from),
                Rotations::CHACHA,
                &masks[qr_index],
            );
            observe(qr_index, inputs, &trace);
            for (i, out) in idx.iter().zip(trace.outputs()) {
                v[*i] = out.bits() as u32;
            }
        }
    }
    Ok(())
}

fn feed_forward(state: &mut StateMatrix, initial: &StateMatrix) {
    for (v, m) in state.0.iter_mut().zip(initial.0) {
        *v = v.wrapping_add(m);
    }
}

/// State matrix after the rounds and the feed-forward addition.
pub fn block_state(params: &CipherParams, counter: u64) -> Result<StateMatrix> {
    let initial = StateMatrix::initial(params, counter)?;
    let mut state = initial;
    permute(&mut state, params.rounds, &[], |_, _, _| {})?;
    feed_forward(&mut state, &initial);
    Ok(state)
}

/// One 64-byte keystream block.
pub fn block(params: &CipherParams, counter: u64) -> Result<[u8; BLOCK_LEN]> {
    Ok(block_state(params, counter)?.to_bytes())
}

/// Keystream block plus one checker verdict per quarterround.
pub fn block_checked(
    params: &CipherParams,
    counter: u64,
    scheme: Scheme,
) -> Result<([u8; BLOCK_LEN], Vec<CheckVerdict>)> {
    block_checked_with_faults(params, counter, scheme, &[])
}

/// Like [`block_checked`], with faults injected into chosen quarterrounds.
///
/// The classic check receives the block parity of each quarterround's inputs
/// as read from the state; the group check computes its word parities locally.
pub fn block_checked_with_faults(
    params: &CipherParams,
    counter: u64,
    scheme: Scheme,
    faults: &[QrFault],
) -> Result<([u8; BLOCK_LEN], Vec<CheckVerdict>)> {
    let initial = StateMatrix::initial(params, counter)?;
    let mut state = initial;
    let mut verdicts = Vec::with_capacity(params.rounds.quarterrounds());
    permute(&mut state, params.rounds, faults, |_, inputs, trace| {
        let upstream = InputParities::upstream(inputs.map(|x| Word::from_raw(u64::from(x), 32)));
        let ip = InputParities {
            p_block: upstream.p_block,
            ..InputParities::local(trace)
        };
        verdicts.push(check(scheme, trace, &ip));
    })?;
    feed_forward(&mut state, &initial);
    Ok((state.to_bytes(), verdicts))
}

/// XORs `data` in place with the keystream starting at block `counter`.
pub fn apply_keystream(params: &CipherParams, counter: u64, data: &mut [u8]) -> Result<()> {
    let blocks = data.len().div_ceil(BLOCK_LEN) as u64;
    if blocks > 0 {
        let last = counter
            .checked_add(blocks - 1)
            .ok_or(Error::CounterOverflow)?;
        if last > params.layout.max_counter() {
            return Err(Error::CounterOverflow);
        }
    }
    for (i, chunk) in data.chunks_mut(BLOCK_LEN).enumerate() {
        let ks = block(params, counter + i as u64)?;
        for (byte, k) in chunk.iter_mut().zip(ks) {
            *byte ^= k;
        }
    }
    Ok(())
}

pub fn encrypt(params: &CipherParams, counter: u64, message: &[u8]) -> Result<Vec<u8>> {
    let mut out = message.to_vec();
    apply_keystream(params, counter, &mut out)?;
    Ok(out)
}
