use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::events::series::read_exact_at;

pub const CSV_MAGIC: &str = "# photonstat-trace v1";
pub const RAW_MAGIC: &[u8; 8] = b"PHSTRACE";
const RAW_VERSION: u16 = 1;
const RAW_HEADER_LEN: usize = 32;

/// Uniformly sampled voltage waveform from one detector channel.
///
/// Samples are kept as `f32` so a 20.5 Mpt acquisition stays at four bytes
/// per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogTrace {
    sample_period: f64,
    samples: Vec<f32>,
    channel_label: String,
}

impl AnalogTrace {
    pub fn new(sample_period: f64, samples: Vec<f32>, channel_label: impl Into<String>) -> Result<Self> {
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return Err(Error::Argument(format!(
                "sample period must be positive and finite, got {sample_period}"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Data(format!("non-finite sample at index {i}")));
        }
        let channel_label = channel_label.into();
        if channel_label.contains(['\n', '\r']) {
            return Err(Error::Argument("channel label must be a single line".into()));
        }
        Ok(Self {
            sample_period,
            samples,
            channel_label,
        })
    }

    /// Seconds per sample.
    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn channel_label(&self) -> &str {
        &self.channel_label
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn load(path: impl AsRef<Path>, format: Option<TraceFormat>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::with_capacity(1 << 16, file);
        let format = match format {
            Some(f) => f,
            None => {
                let head = reader.fill_buf().map_err(|e| Error::io(path, e))?;
                TraceFormat::detect(head)
                    .ok_or_else(|| Error::format_at_byte(0, format!("{}: unrecognized trace format", path.display())))?
            }
        };
        parse_trace(reader, format).map_err(|e| e.with_path(path))
    }

    pub fn save(&self, path: impl AsRef<Path>, format: TraceFormat) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        write_trace(self, BufWriter::new(file), format).map_err(|e| e.with_path(path))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    /// Text: three header lines, then one voltage per line.
    Csv,
    /// Little-endian binary with `f32` samples.
    RawF32,
}

impl TraceFormat {
    /// Guesses the format from the first bytes of a file.
    pub fn detect(head: &[u8]) -> Option<Self> {
        if head.starts_with(RAW_MAGIC) {
            Some(TraceFormat::RawF32)
        } else if head.starts_with(CSV_MAGIC.as_bytes()) {
            Some(TraceFormat::Csv)
        } else {
            None
        }
    }
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TraceFormat::Csv),
            "rawf32" | "raw" => Ok(TraceFormat::RawF32),
            other => Err(Error::Argument(format!("unknown trace format '{other}'"))),
        }
    }
}

pub fn parse_trace<R: BufRead>(input: R, format: TraceFormat) -> Result<AnalogTrace> {
    match format {
        TraceFormat::Csv => parse_csv(input),
        TraceFormat::RawF32 => parse_raw(input),
    }
}

pub fn write_trace<W: Write>(trace: &AnalogTrace, out: W, format: TraceFormat) -> Result<()> {
    match format {
        TraceFormat::Csv => write_csv(trace, out),
        TraceFormat::RawF32 => write_raw(trace, out),
    }
}

fn parse_csv<R: BufRead>(input: R) -> Result<AnalogTrace> {
    let mut lines = input.lines().enumerate();
    let mut header = |expect: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(line))) => Ok((i + 1, line.trim_end_matches('\r').to_owned())),
            Some((_, Err(e))) => Err(Error::io("<stream>", e)),
            None => Err(Error::format_at_line(0, format!("missing {expect} header"))),
        }
    };

    let (n, magic) = header("magic")?;
    if magic.trim_end() != CSV_MAGIC {
        return Err(Error::format_at_line(n, format!("expected '{CSV_MAGIC}'")));
    }
    let (n, period_line) = header("sample_period_s")?;
    let sample_period = period_line
        .strip_prefix("sample_period_s=")
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|p| p.is_finite() && *p > 0.0)
        .ok_or_else(|| Error::format_at_line(n, "expected 'sample_period_s=<positive float>'"))?;
    let (n, channel_line) = header("channel")?;
    let channel_label = channel_line
        .strip_prefix("channel=")
        .ok_or_else(|| Error::format_at_line(n, "expected 'channel=<text>'"))?
        .to_owned();

    let mut samples = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io("<stream>", e))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let v: f32 = text
            .parse()
            .map_err(|_| Error::format_at_line(i + 1, format!("not a number: '{text}'")))?;
        if !v.is_finite() {
            return Err(Error::Data(format!("non-finite sample '{text}' on line {}", i + 1)));
        }
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(Error::format_at_line(4, "empty sample section"));
    }
    AnalogTrace::new(sample_period, samples, channel_label)
}

fn write_csv<W: Write>(trace: &AnalogTrace, out: W) -> Result<()> {
    let io = |e| Error::io("<stream>", e);
    let mut out = BufWriter::new(out);
    writeln!(out, "{CSV_MAGIC}").map_err(io)?;
    // `{:e}` and `{}` both print the shortest string that parses back exactly.
    writeln!(out, "sample_period_s={:e}", trace.sample_period).map_err(io)?;
    writeln!(out, "channel={}", trace.channel_label).map_err(io)?;
    for s in &trace.samples {
        writeln!(out, "{s}").map_err(io)?;
    }
    out.flush().map_err(io)
}

fn parse_raw<R: Read>(mut input: R) -> Result<AnalogTrace> {
    let mut header = [0u8; RAW_HEADER_LEN];
    read_exact_at(&mut input, &mut header, 0)?;
    if &header[..8] != RAW_MAGIC {
        return Err(Error::format_at_byte(0, "missing PHSTRACE magic"));
    }
    let version = u16::from_le_bytes([header[8], header[9]]);
    if version != RAW_VERSION {
        return Err(Error::format_at_byte(8, format!("unsupported version {version}")));
    }
    let sample_period = f64::from_le_bytes(header[16..24].try_into().unwrap());
    if !(sample_period.is_finite() && sample_period > 0.0) {
        return Err(Error::format_at_byte(
            16,
            format!("invalid sample period {sample_period}"),
        ));
    }
    let count = u64::from_le_bytes(header[24..32].try_into().unwrap());
    if count == 0 {
        return Err(Error::format_at_byte(24, "empty sample section"));
    }
    let count =
        usize::try_from(count).map_err(|_| Error::format_at_byte(24, format!("sample count {count} too large")))?;

    // Exact reservation keeps the peak at four bytes per sample; pages are
    // only touched as data arrives, so a corrupt count fails on truncation.
    let mut samples: Vec<f32> = Vec::new();
    samples
        .try_reserve_exact(count)
        .map_err(|_| Error::format_at_byte(24, format!("sample count {count} too large")))?;
    let mut buf = vec![0u8; 4 << 14];
    let mut offset = RAW_HEADER_LEN as u64;
    while samples.len() < count {
        let take = (count - samples.len()).min(buf.len() / 4);
        let bytes = &mut buf[..4 * take];
        read_exact_at(&mut input, bytes, offset)?;
        for (j, b) in bytes.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(b.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite sample at index {} (byte {})",
                    samples.len(),
                    offset + 4 * j as u64
                )));
            }
            samples.push(v);
        }
        offset += bytes.len() as u64;
    }
    let mut probe = [0u8; 1];
    match input.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => return Err(Error::format_at_byte(offset, "trailing bytes after samples")),
        Err(e) => return Err(Error::io("<stream>", e)),
    }
    // The binary layout has no channel label.
    AnalogTrace::new(sample_period, samples, "")
}

fn write_raw<W: Write>(trace: &AnalogTrace, mut out: W) -> Result<()> {
    let io = |e| Error::io("<stream>", e);
    let mut header = [0u8; RAW_HEADER_LEN];
    header[..8].copy_from_slice(RAW_MAGIC);
    header[8..10].copy_from_slice(&RAW_VERSION.to_le_bytes());
    header[16..24].copy_from_slice(&trace.sample_period.to_le_bytes());
    header[24..32].copy_from_slice(&(trace.samples.len() as u64).to_le_bytes());
    out.write_all(&header).map_err(io)?;
    let mut buf = Vec::with_capacity(4 << 14);
    for chunk in trace.samples.chunks(1 << 14) {
        buf.clear();
        for s in chunk {
            buf.extend_from_slice(&s.to_le_bytes());
        }
        out.write_all(&buf).map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(body: &str) -> Result<AnalogTrace> {
        parse_trace(body.as_bytes(), TraceFormat::Csv)
    }

    #[test]
    fn csv_three_samples() {
        let t = csv("# photonstat-trace v1\nsample_period_s=1e-9\nchannel=signal\n0.0\n0.1\n3.3\n").unwrap();
        assert_eq!(t.sample_period(), 1e-9);
        assert_eq!(t.samples(), &[0.0, 0.1, 3.3]);
        assert_eq!(t.channel_label(), "signal");
    }

    #[test]
    fn csv_header_errors_name_the_line() {
        let err = csv("# photonstat-trace v1\nperiod=1e-9\nchannel=a\n1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = csv("# photonstat-trace v1\nsample_period_s=1e-9\nchannel=a\n0.5\nvolts\n").unwrap_err();
        assert!(err.to_string().contains("line 5"), "{err}");
        let err = csv("hello\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn csv_empty_sample_section() {
        let err = csv("# photonstat-trace v1\nsample_period_s=1e-9\nchannel=a\n").unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }

    #[test]
    fn csv_nan_is_data_error() {
        let err = csv("# photonstat-trace v1\nsample_period_s=1e-9\nchannel=a\n0\nNaN\n").unwrap_err();
        assert!(matches!(err, Error::Data(_)), "{err}");
        let err = csv("# photonstat-trace v1\nsample_period_s=1e-9\nchannel=a\ninf\n").unwrap_err();
        assert!(matches!(err, Error::Data(_)), "{err}");
    }

    fn raw_bytes(period: f64, samples: &[f32]) -> Vec<u8> {
        let trace = AnalogTrace::new(period, samples.to_vec(), "").unwrap();
        let mut bytes = Vec::new();
        write_trace(&trace, &mut bytes, TraceFormat::RawF32).unwrap();
        bytes
    }

    #[test]
    fn raw_header_layout() {
        let bytes = raw_bytes(1e-9, &[1.0, -2.5]);
        assert_eq!(bytes.len(), 32 + 8);
        assert_eq!(&bytes[..8], b"PHSTRACE");
        assert_eq!(&bytes[8..10], &[1, 0]);
        assert_eq!(&bytes[10..16], &[0; 6]);
        assert_eq!(&bytes[16..24], &1e-9f64.to_le_bytes());
        assert_eq!(&bytes[24..32], &2u64.to_le_bytes());
        assert_eq!(&bytes[32..36], &1.0f32.to_le_bytes());
    }

    #[test]
    fn raw_declared_count_is_honoured() {
        // 20.5 Mpt, the length of one acquisition at 1 ns over 20.5 ms.
        let n = 20_500_000;
        let bytes = raw_bytes(1e-9, &vec![0.25; n]);
        let t = parse_trace(&bytes[..], TraceFormat::RawF32).unwrap();
        assert_eq!(t.len(), n);
        assert_eq!(t.sample_period(), 1e-9);
    }

    #[test]
    fn raw_errors() {
        let mut bytes = raw_bytes(1e-9, &[1.0, 2.0]);
        let short = parse_trace(&bytes[..bytes.len() - 2], TraceFormat::RawF32).unwrap_err();
        assert!(short.to_string().contains("byte 38"), "{short}");

        let mut empty = raw_bytes(1e-9, &[1.0]);
        empty[24..32].copy_from_slice(&0u64.to_le_bytes());
        empty.truncate(32);
        assert!(matches!(
            parse_trace(&empty[..], TraceFormat::RawF32),
            Err(Error::Format { .. })
        ));

        bytes[36..40].copy_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(matches!(
            parse_trace(&bytes[..], TraceFormat::RawF32),
            Err(Error::Data(_))
        ));

        bytes[8] = 2;
        let err = parse_trace(&bytes[..], TraceFormat::RawF32).unwrap_err();
        assert!(err.to_string().contains("byte 8"), "{err}");
    }

    #[test]
    fn detect_by_magic() {
        assert_eq!(TraceFormat::detect(b"PHSTRACE\x01\x00"), Some(TraceFormat::RawF32));
        assert_eq!(TraceFormat::detect(b"# photonstat-trace v1\n"), Some(TraceFormat::Csv));
        assert_eq!(TraceFormat::detect(b"time,volts"), None);
    }
}
