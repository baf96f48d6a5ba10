use std::fmt;

use crate::error::{Error, Result};

/// Fixed-width bit string packed into little-endian 64-bit words.
///
/// Bit `i` is the coefficient of `2^i` when the string is read as a binary number, so
/// the leftmost character of the textual form is bit `width - 1`. Bits at or above
/// `width` are always zero, which keeps the derived `Eq`/`Hash` width-aware.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    width: usize,
    words: Box<[u64]>,
}

impl Bitstring {
    pub fn zeros(width: usize) -> Self {
        Self {
            width,
            words: vec![0u64; width.div_ceil(64)].into_boxed_slice(),
        }
    }

    pub fn from_u64(value: u64, width: usize) -> Result<Self> {
        let mut b = Self::zeros(width);
        if width < 64 && value >> width != 0 {
            return Err(Error::InvalidArgument(format!(
                "value {value} does not fit in {width} bits"
            )));
        }
        if width > 0 {
            b.words[0] = value;
        }
        Ok(b)
    }

    /// Parses a string of `0`/`1` characters, most significant first.
    pub fn from_binary(s: &str) -> Result<Self> {
        let mut b = Self::zeros(s.len());
        for (pos, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => b.set(s.len() - 1 - pos, true),
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "invalid binary digit {other:?}"
                    )))
                }
            }
        }
        Ok(b)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.width,
            "bit {i} out of range for width {}",
            self.width
        );
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, on: bool) {
        assert!(
            i < self.width,
            "bit {i} out of range for width {}",
            self.width
        );
        let mask = 1u64 << (i % 64);
        if on {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    /// Integer value, if the width fits in a `u64`.
    pub fn as_u64(&self) -> Option<u64> {
        if self.width > 64 {
            return None;
        }
        Some(self.words.first().copied().unwrap_or(0))
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Bits `[lo, lo + len)` as an integer (`len <= 64`).
    pub fn field(&self, lo: usize, len: usize) -> u64 {
        assert!(len <= 64 && lo + len <= self.width);
        let mut v = 0u64;
        for k in (0..len).rev() {
            v = (v << 1) | u64::from(self.get(lo + k));
        }
        v
    }

    /// Hex form, most significant nibble first, zero-padded to `ceil(width / 4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.width.div_ceil(4);
        let mut out = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let mut nibble = 0u32;
            for k in (0..4).rev() {
                let i = d * 4 + k;
                nibble = (nibble << 1) | u32::from(i < self.width && self.get(i));
            }
            out.push(char::from_digit(nibble, 16).expect("nibble < 16"));
        }
        out
    }

    pub fn from_hex(s: &str, width: usize) -> Result<Self> {
        let digits = width.div_ceil(4);
        if s.len() != digits {
            return Err(Error::InvalidArgument(format!(
                "expected {digits} hex digits for width {width}, got {}",
                s.len()
            )));
        }
        let mut b = Self::zeros(width);
        for (pos, ch) in s.chars().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| Error::InvalidArgument(format!("invalid hex digit {ch:?}")))?;
            let d = digits - 1 - pos;
            for k in 0..4 {
                if nibble >> k & 1 == 1 {
                    let i = d * 4 + k;
                    if i >= width {
                        return Err(Error::InvalidArgument(format!(
                            "hex {s} sets bits beyond width {width}"
                        )));
                    }
                    b.set(i, true);
                }
            }
        }
        Ok(b)
    }

    /// Concatenation with `self` in the high bits.
    pub fn concat(&self, low: &Bitstring) -> Bitstring {
        let mut out = Bitstring::zeros(self.width + low.width);
        for i in 0..low.width {
            if low.get(i) {
                out.set(i, true);
            }
        }
        for i in 0..self.width {
            if self.get(i) {
                out.set(low.width + i, true);
            }
        }
        out
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.width).rev() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitstring({self})")
    }
}

/// Writes bits from the most significant position downwards.
pub(crate) struct MsbWriter {
    bits: Bitstring,
    next: usize,
}

impl MsbWriter {
    pub fn new(width: usize) -> Self {
        Self {
            bits: Bitstring::zeros(width),
            next: width,
        }
    }

    pub fn push(&mut self, bit: bool) {
        self.next -= 1;
        if bit {
            self.bits.set(self.next, true);
        }
    }

    pub fn finish(self) -> Bitstring {
        debug_assert_eq!(self.next, 0, "writer not filled");
        self.bits
    }
}
