//! Width-parametric words and the ARX primitives.
//!
//! A [`Word`] is a `w`-bit vector (`2 <= w <= 64`) stored in the low bits of a
//! `u64`, bit 0 being the least significant. Every operation reduces modulo
//! `2^w`, and binary operations refuse operands of different widths.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MIN_WIDTH: u32 = 2;
pub const MAX_WIDTH: u32 = 64;

/// All-ones mask of the given width.
#[inline]
pub const fn width_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

pub fn check_width(width: u32) -> Result<()> {
    if (MIN_WIDTH..=MAX_WIDTH).contains(&width) {
        Ok(())
    } else {
        Err(Error::InvalidWidth(width))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Word {
    bits: u64,
    width: u32,
}

/// Result of a traced modular addition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AddResult {
    pub sum: Word,
    /// Carry-in vector of the ripple-carry adder; bit 0 is always clear.
    pub carry_vector: Word,
    pub carry_parity: bool,
}

impl Word {
    pub fn new(bits: u64, width: u32) -> Result<Self> {
        check_width(width)?;
        if bits & !width_mask(width) != 0 {
            return Err(Error::ValueTooWide { value: bits, width });
        }
        Ok(Word { bits, width })
    }

    /// Builds a word from the low `width` bits of `bits`.
    pub fn truncating(bits: u64, width: u32) -> Result<Self> {
        check_width(width)?;
        Ok(Word {
            bits: bits & width_mask(width),
            width,
        })
    }

    /// Caller guarantees a valid width and a reduced value.
    #[inline]
    pub(crate) const fn from_raw(bits: u64, width: u32) -> Self {
        Word { bits, width }
    }

    pub fn zero(width: u32) -> Result<Self> {
        Word::new(0, width)
    }

    #[inline]
    pub const fn bits(self) -> u64 {
        self.bits
    }

    #[inline]
    pub const fn width(self) -> u32 {
        self.width
    }

    #[inline]
    pub const fn weight(self) -> u32 {
        self.bits.count_ones()
    }

    /// XOR of all bits.
    #[inline]
    pub const fn parity(self) -> bool {
        self.bits.count_ones() & 1 == 1
    }

    pub fn bit(self, index: u32) -> bool {
        index < self.width && (self.bits >> index) & 1 == 1
    }

    fn same_width(self, other: Word) -> Result<()> {
        if self.width == other.width {
            Ok(())
        } else {
            Err(Error::WidthMismatch {
                left: self.width,
                right: other.width,
            })
        }
    }

    pub fn xor(self, other: Word) -> Result<Word> {
        self.same_width(other)?;
        Ok(Word::from_raw(self.bits ^ other.bits, self.width))
    }

    /// Left rotation by `r mod w`.
    pub fn rotl(self, r: u32) -> Word {
        Word::from_raw(rotl_raw(self.bits, r % self.width, self.width), self.width)
    }

    pub fn wrapping_add(self, other: Word) -> Result<Word> {
        self.same_width(other)?;
        Ok(Word::from_raw(
            self.bits.wrapping_add(other.bits) & width_mask(self.width),
            self.width,
        ))
    }

    /// Modular addition simulated as a ripple-carry adder, returning the
    /// carry-in vector alongside the sum.
    ///
    /// `c_0 = 0` and `c_i = a_{i-1} b_{i-1} | (a_{i-1} ^ b_{i-1}) c_{i-1}`; the
    /// carry out of the top bit is dropped. With this indexing
    /// `p(a + b) = p(a) ^ p(b) ^ p(c)` holds for every pair.
    pub fn add_traced(self, other: Word) -> Result<AddResult> {
        self.same_width(other)?;
        let (a, b) = (self.bits, other.bits);
        let mut sum = 0u64;
        let mut carries = 0u64;
        let mut carry = false;
        for i in 0..self.width {
            let ai = (a >> i) & 1 == 1;
            let bi = (b >> i) & 1 == 1;
            if carry {
                carries |= 1 << i;
            }
            if ai ^ bi ^ carry {
                sum |= 1 << i;
            }
            carry = (ai && bi) || ((ai ^ bi) && carry);
        }
        let carry_vector = Word::from_raw(carries, self.width);
        Ok(AddResult {
            sum: Word::from_raw(sum, self.width),
            carry_vector,
            carry_parity: carry_vector.parity(),
        })
    }

    /// Parses `0x`-prefixed (or bare) hex into a word of the given width.
    pub fn parse_hex(text: &str, width: u32) -> Result<Word> {
        let digits = text
            .strip_prefix("0x")
            .or_else(|| text.strip_prefix("0X"))
            .unwrap_or(text);
        let bits = u64::from_str_radix(digits, 16)
            .map_err(|_| Error::Parse(format!("invalid hex word `{text}`")))?;
        Word::new(bits, width)
    }

    pub fn hex_digits(width: u32) -> usize {
        width.div_ceil(4) as usize
    }
}

/// Rotation on a raw value already reduced to `width` bits; `r < width`.
#[inline]
pub(crate) fn rotl_raw(bits: u64, r: u32, width: u32) -> u64 {
    debug_assert!(r < width);
    if r == 0 {
        bits
    } else {
        ((bits << r) | (bits >> (width - r))) & width_mask(width)
    }
}

/// Carry-in vector of `a + b` via the sum identity `s = a ^ b ^ c`.
#[inline]
pub(crate) fn carry_in_raw(a: u64, b: u64, width: u32) -> u64 {
    let sum = a.wrapping_add(b) & width_mask(width);
    sum ^ a ^ b
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "0x{:0digits$x}",
            self.bits,
            digits = Word::hex_digits(self.width)
        )
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self}, w={})", self.width)
    }
}

/// Parses hex and infers the width from the digit count (4 bits per digit).
impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("0X"))
            .unwrap_or(s);
        let width = (digits.len() as u32).saturating_mul(4);
        Word::parse_hex(s, width)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(bits: u64, width: u32) -> Word {
        Word::new(bits, width).unwrap()
    }

    #[test]
    fn parity_examples() {
        assert!(!w(0, 32).parity());
        assert!(!w(0xFFFF_FFFF, 32).parity());
        // popcount(0x61707865) = 14
        assert_eq!(0x6170_7865u32.count_ones(), 14);
        assert!(!w(0x6170_7865, 32).parity());
    }

    #[test]
    fn add_traced_examples() {
        let r = w(0, 32).add_traced(w(0, 32)).unwrap();
        assert_eq!(
            (r.sum.bits(), r.carry_vector.bits(), r.carry_parity),
            (0, 0, false)
        );

        let r = w(1, 4).add_traced(w(1, 4)).unwrap();
        assert_eq!(
            (r.sum.bits(), r.carry_vector.bits(), r.carry_parity),
            (2, 0b0010, true)
        );

        let r = w(0xF, 4).add_traced(w(0x1, 4)).unwrap();
        assert_eq!(
            (r.sum.bits(), r.carry_vector.bits(), r.carry_parity),
            (0, 0b1110, true)
        );
    }

    #[test]
    fn xor_and_rotl_examples() {
        let x = w(0xA5, 8);
        assert_eq!(x.xor(x).unwrap().bits(), 0);
        assert_eq!(x.xor(w(0, 8)).unwrap(), x);
        assert_eq!(w(0b1100, 4).xor(w(0b1010, 4)).unwrap().bits(), 0b0110);

        assert_eq!(x.rotl(0), x);
        assert_eq!(w(0x8000_0000, 32).rotl(1).bits(), 1);
        assert_eq!(w(0b0011, 4).rotl(2).bits(), 0b1100);
        assert_eq!(w(0b0011, 4).rotl(6).bits(), 0b1100);
    }

    #[test]
    fn width_errors() {
        assert!(matches!(Word::new(0, 1), Err(Error::InvalidWidth(1))));
        assert!(matches!(Word::new(0, 65), Err(Error::InvalidWidth(65))));
        assert!(matches!(
            Word::new(0x10, 4),
            Err(Error::ValueTooWide { .. })
        ));
        assert!(matches!(
            w(1, 4).xor(w(1, 8)),
            Err(Error::WidthMismatch { left: 4, right: 8 })
        ));
        assert!(w(1, 4).add_traced(w(1, 8)).is_err());
        assert_eq!(Word::truncating(0x1F, 4).unwrap().bits(), 0xF);
    }

    #[test]
    fn full_width_words() {
        let max = w(u64::MAX, 64);
        let r = max.add_traced(w(1, 64)).unwrap();
        assert_eq!(r.sum.bits(), 0);
        assert_eq!(r.carry_vector.bits(), u64::MAX - 1);
        assert_eq!(max.rotl(13), max);
    }

    #[test]
    fn hex_formatting() {
        assert_eq!(w(0x5, 4).to_string(), "0x5");
        assert_eq!(w(0x1, 32).to_string(), "0x00000001");
        assert_eq!(w(0x1, 6).to_string(), "0x01");
        assert_eq!(
            Word::parse_hex("0x61707865", 32).unwrap().bits(),
            0x6170_7865
        );
        assert_eq!("0x000f".parse::<Word>().unwrap(), w(0xF, 16));
        assert!(Word::parse_hex("0xzz", 8).is_err());
        assert!(Word::parse_hex("0x1ff", 8).is_err());
    }

    #[test]
    fn fast_carry_matches_ripple_exhaustive_w4() {
        for a in 0..16 {
            for b in 0..16 {
                let r = w(a, 4).add_traced(w(b, 4)).unwrap();
                assert_eq!(carry_in_raw(a, b, 4), r.carry_vector.bits());
            }
        }
    }
}
