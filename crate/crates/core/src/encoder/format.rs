//! Encoded-dataset text files.
//!
//! ```text
//! bitbit v1 width=<N_x>
//! <hex bitstring> <label>
//! ...
//! ```

use std::io::{BufRead, Write};

use super::Bitstring;
use crate::error::{Error, Result};

const MAGIC: &str = "bitbit v1 width=";

pub struct EncodedWriter<W: Write> {
    inner: W,
    width: usize,
    count: u64,
}

impl<W: Write> EncodedWriter<W> {
    pub fn new(mut inner: W, width: usize) -> Result<Self> {
        writeln!(inner, "{MAGIC}{width}")?;
        Ok(Self {
            inner,
            width,
            count: 0,
        })
    }

    pub fn write(&mut self, z: &Bitstring, label: usize) -> Result<()> {
        if z.width() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: z.width(),
            });
        }
        writeln!(self.inner, "{} {}", z.to_hex(), label)?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Streaming reader; yields `(bitstring, label)` and reports malformed lines by record
/// index (0-based, header excluded).
pub struct EncodedReader<R: BufRead> {
    inner: R,
    width: usize,
    index: u64,
    line: String,
}

impl<R: BufRead> EncodedReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut header = String::new();
        inner.read_line(&mut header)?;
        let width = header
            .trim_end()
            .strip_prefix(MAGIC)
            .and_then(|w| w.parse::<usize>().ok())
            .ok_or_else(|| Error::MalformedRecord {
                index: 0,
                message: format!("bad header {:?}", header.trim_end()),
            })?;
        Ok(Self {
            inner,
            width,
            index: 0,
            line: String::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

impl<R: BufRead> Iterator for EncodedReader<R> {
    type Item = Result<(Bitstring, usize)>;

    fn next(&mut self) -> Option<Self::Item> {
        self.line.clear();
        match self.inner.read_line(&mut self.line) {
            Ok(0) => return None,
            Ok(_) => {}
            Err(e) => return Some(Err(e.into())),
        }
        let index = self.index;
        self.index += 1;
        let malformed = |message: String| Error::MalformedRecord { index, message };
        let mut parts = self.line.split_whitespace();
        let parsed = match (parts.next(), parts.next(), parts.next()) {
            (Some(hex), Some(label), None) => Bitstring::from_hex(hex, self.width)
                .map_err(|e| malformed(e.to_string()))
                .and_then(|z| {
                    label
                        .parse::<usize>()
                        .map(|l| (z, l))
                        .map_err(|_| malformed(format!("bad label {label:?}")))
                }),
            _ => Err(malformed(format!(
                "expected `<hex> <label>`, got {:?}",
                self.line.trim_end()
            ))),
        };
        Some(parsed)
    }
}
