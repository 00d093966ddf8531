//! Reference models that share no code with the crate under test.
#![allow(dead_code)]

/// Carry vectors produced by a bit-serial ripple-carry simulation.
pub struct Ripple {
    pub sum: u64,
    /// c_i is the carry into bit i.
    pub carry_in: u64,
    /// c_i is the carry out of bit i, with c_0 forced to zero.
    pub carry_out_shifted_index: u64,
}

pub fn ripple(a: u64, b: u64, width: u32) -> Ripple {
    let mut sum = 0;
    let mut carry_in = 0;
    let mut carry_out_shifted_index = 0;
    let mut carry = 0u64;
    let mut prev_out = 0u64;
    for i in 0..width {
        let (ai, bi) = ((a >> i) & 1, (b >> i) & 1);
        carry_in |= carry << i;
        sum |= (ai ^ bi ^ carry) << i;
        // literal reading: c_i = a_i b_i | (a_i ^ b_i) c_{i-1}, c_0 = 0
        let literal = if i == 0 {
            0
        } else {
            (ai & bi) | ((ai ^ bi) & prev_out)
        };
        carry_out_shifted_index |= literal << i;
        prev_out = literal;
        carry = (ai & bi) | ((ai ^ bi) & carry);
    }
    Ripple {
        sum,
        carry_in,
        carry_out_shifted_index,
    }
}

pub fn parity(x: u64) -> bool {
    x.count_ones() % 2 == 1
}

pub fn qr_u32(s: &mut [u32; 16], a: usize, b: usize, c: usize, d: usize) {
    s[a] = s[a].wrapping_add(s[b]);
    s[d] = (s[d] ^ s[a]).rotate_left(16);
    s[c] = s[c].wrapping_add(s[d]);
    s[b] = (s[b] ^ s[c]).rotate_left(12);
    s[a] = s[a].wrapping_add(s[b]);
    s[d] = (s[d] ^ s[a]).rotate_left(8);
    s[c] = s[c].wrapping_add(s[d]);
    s[b] = (s[b] ^ s[c]).rotate_left(7);
}

/// Straight-line block function on a prepared initial state.
pub fn block_u32(initial: [u32; 16], rounds: u32) -> [u8; 64] {
    let mut v = initial;
    for _ in 0..rounds / 2 {
        qr_u32(&mut v, 0, 4, 8, 12);
        qr_u32(&mut v, 1, 5, 9, 13);
        qr_u32(&mut v, 2, 6, 10, 14);
        qr_u32(&mut v, 3, 7, 11, 15);
        qr_u32(&mut v, 0, 5, 10, 15);
        qr_u32(&mut v, 1, 6, 11, 12);
        qr_u32(&mut v, 2, 7, 8, 13);
        qr_u32(&mut v, 3, 4, 9, 14);
    }
    let mut out = [0u8; 64];
    for i in 0..16 {
        out[4 * i..4 * i + 4].copy_from_slice(&v[i].wrapping_add(initial[i]).to_le_bytes());
    }
    out
}

fn word(bytes: &[u8], i: usize) -> u32 {
    u32::from_le_bytes([
        bytes[4 * i],
        bytes[4 * i + 1],
        bytes[4 * i + 2],
        bytes[4 * i + 3],
    ])
}

/// Initial state with a 64-bit counter and 64-bit nonce.
pub fn initial_orig(key: &[u8; 32], counter: u64, nonce: &[u8; 8]) -> [u32; 16] {
    let mut m = [0u32; 16];
    m[0] = 0x61707865;
    m[1] = 0x3320646e;
    m[2] = 0x79622d32;
    m[3] = 0x6b206574;
    for i in 0..8 {
        m[4 + i] = word(key, i);
    }
    m[12] = counter as u32;
    m[13] = (counter >> 32) as u32;
    m[14] = word(nonce, 0);
    m[15] = word(nonce, 1);
    m
}
