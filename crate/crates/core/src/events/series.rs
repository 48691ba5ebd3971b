use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};

pub const EVENT_MAGIC: &[u8; 8] = b"PHSEVNT1";

/// Bit-per-slot detection record. Bit `k` is set iff a detection onset
/// occurred in slot `k`. Slots are packed 64 per word, least significant bit
/// first; bits past `len` are always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSeries {
    resolution: f64,
    origin: f64,
    len: usize,
    words: Vec<u64>,
}

pub(crate) fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

fn check_resolution(resolution: f64) -> Result<()> {
    if resolution.is_finite() && resolution > 0.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "resolution must be positive and finite, got {resolution}"
        )))
    }
}

impl EventSeries {
    /// An all-zero series of `len` slots.
    pub fn zeros(len: usize, resolution: f64) -> Result<Self> {
        check_resolution(resolution)?;
        Ok(Self {
            resolution,
            origin: 0.0,
            len,
            words: vec![0; words_for(len)],
        })
    }

    pub fn from_words(len: usize, resolution: f64, origin: f64, words: Vec<u64>) -> Result<Self> {
        check_resolution(resolution)?;
        if !origin.is_finite() {
            return Err(Error::Argument(format!("origin must be finite, got {origin}")));
        }
        if words.len() != words_for(len) {
            return Err(Error::Argument(format!(
                "{len} slots need {} words, got {}",
                words_for(len),
                words.len()
            )));
        }
        if let Some(&last) = words.last() {
            if !len.is_multiple_of(64) && last >> (len % 64) != 0 {
                return Err(Error::Argument("bits set past the last slot".into()));
            }
        }
        Ok(Self {
            resolution,
            origin,
            len,
            words,
        })
    }

    /// Builds a series with 1-bits at the given slot indices. Repeated indices
    /// collapse into a single bit.
    pub fn from_slots<I>(len: usize, resolution: f64, slots: I) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut series = Self::zeros(len, resolution)?;
        for k in slots {
            if k >= len {
                return Err(Error::Argument(format!("slot {k} out of range for {len} slots")));
            }
            series.set(k);
        }
        Ok(series)
    }

    pub fn with_origin(mut self, origin: f64) -> Self {
        self.origin = origin;
        self
    }

    /// Seconds per slot.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Start time of slot 0 in seconds.
    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, k: usize) -> bool {
        assert!(k < self.len, "slot {k} out of range for {} slots", self.len);
        self.words[k / 64] >> (k % 64) & 1 == 1
    }

    /// Sets slot `k`. Panics if `k` is out of range.
    pub fn set(&mut self, k: usize) {
        assert!(k < self.len, "slot {k} out of range for {} slots", self.len);
        self.words[k / 64] |= 1 << (k % 64);
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Number of 1-bits in `range`, which is clipped to the series length.
    pub fn count_ones_in(&self, range: Range<usize>) -> u64 {
        let end = range.end.min(self.len);
        let start = range.start.min(end);
        if start == end {
            return 0;
        }
        let (first, last) = (start / 64, (end - 1) / 64);
        let head = !0u64 << (start % 64);
        let tail = !0u64 >> (63 - (end - 1) % 64);
        if first == last {
            return u64::from((self.words[first] & head & tail).count_ones());
        }
        let mut total = u64::from((self.words[first] & head).count_ones());
        total += self.words[first + 1..last]
            .iter()
            .map(|w| u64::from(w.count_ones()))
            .sum::<u64>();
        total + u64::from((self.words[last] & tail).count_ones())
    }

    /// Whether any slot in `range` (clipped to the series) holds a 1-bit.
    pub fn any_in(&self, range: Range<usize>) -> bool {
        let end = range.end.min(self.len);
        let start = range.start.min(end);
        if start == end {
            return false;
        }
        let (first, last) = (start / 64, (end - 1) / 64);
        let head = !0u64 << (start % 64);
        let tail = !0u64 >> (63 - (end - 1) % 64);
        if first == last {
            return self.words[first] & head & tail != 0;
        }
        self.words[first] & head != 0
            || self.words[first + 1..last].iter().any(|&w| w != 0)
            || self.words[last] & tail != 0
    }

    /// Indices of the 1-bits in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + bit)
            })
        })
    }

    /// Same geometry, all slots cleared.
    pub(crate) fn cleared(&self) -> Self {
        Self {
            resolution: self.resolution,
            origin: self.origin,
            len: self.len,
            words: vec![0; self.words.len()],
        }
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    /// Serializes in the `PHSEVNT1` layout.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<stream>", e);
        out.write_all(EVENT_MAGIC).map_err(io)?;
        out.write_all(&self.resolution.to_le_bytes()).map_err(io)?;
        out.write_all(&self.origin.to_le_bytes()).map_err(io)?;
        out.write_all(&(self.len as u64).to_le_bytes()).map_err(io)?;
        let mut buf = Vec::with_capacity(8 * 4096);
        for chunk in self.words.chunks(4096) {
            buf.clear();
            for w in chunk {
                buf.extend_from_slice(&w.to_le_bytes());
            }
            out.write_all(&buf).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    /// Parses the `PHSEVNT1` layout. Trailing bytes and bits set past the
    /// declared slot count are format errors.
    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; 32];
        read_exact_at(&mut input, &mut header, 0)?;
        if &header[..8] != EVENT_MAGIC {
            return Err(Error::format_at_byte(0, "missing PHSEVNT1 magic"));
        }
        let resolution = f64::from_le_bytes(header[8..16].try_into().unwrap());
        let origin = f64::from_le_bytes(header[16..24].try_into().unwrap());
        let len = u64::from_le_bytes(header[24..32].try_into().unwrap());
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::format_at_byte(8, format!("invalid resolution {resolution}")));
        }
        if !origin.is_finite() {
            return Err(Error::format_at_byte(16, format!("invalid origin {origin}")));
        }
        let len = usize::try_from(len).map_err(|_| Error::format_at_byte(24, format!("slot count {len} too large")))?;
        let n_words = words_for(len);
        let mut words: Vec<u64> = Vec::new();
        words
            .try_reserve_exact(n_words)
            .map_err(|_| Error::format_at_byte(24, format!("slot count {len} too large")))?;
        let mut buf = vec![0u8; 8 * 4096];
        let mut offset = 32u64;
        while words.len() < n_words {
            let take = (n_words - words.len()).min(4096);
            let bytes = &mut buf[..8 * take];
            read_exact_at(&mut input, bytes, offset)?;
            words.extend(bytes.chunks_exact(8).map(|b| u64::from_le_bytes(b.try_into().unwrap())));
            offset += bytes.len() as u64;
        }
        let mut probe = [0u8; 1];
        match input.read(&mut probe) {
            Ok(0) => {}
            Ok(_) => return Err(Error::format_at_byte(offset, "trailing bytes after event words")),
            Err(e) => return Err(Error::io("<stream>", e)),
        }
        Self::from_words(len, resolution, origin, words)
            .map_err(|_| Error::format_at_byte(offset.saturating_sub(8), "bits set past the declared slot count"))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file)).map_err(|e| e.with_path(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file)).map_err(|e| e.with_path(path))
    }
}

/// Fills `buf` from `input`; on early end of input the format error names
/// the absolute byte offset where the data stopped.
pub(crate) fn read_exact_at<R: Read>(input: &mut R, buf: &mut [u8], offset: u64) -> Result<()> {
    let mut got = 0;
    while got < buf.len() {
        match input.read(&mut buf[got..]) {
            Ok(0) => {
                return Err(Error::format_at_byte(
                    offset + got as u64,
                    format!("truncated: expected {} more bytes", buf.len() - got),
                ))
            }
            Ok(n) => got += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(Error::io("<stream>", e)),
        }
    }
    Ok(())
}
