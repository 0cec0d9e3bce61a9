//! SEG-Y rev-1 reader and writer (big-endian, IBM or IEEE samples).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DomainKind, SeismicVolume};
use crate::error::{Error, Result};

const TEXT_HEADER_LEN: usize = 3200;
const BINARY_HEADER_LEN: usize = 400;
const TRACE_HEADER_LEN: usize = 240;

// Byte offsets below are 0-based; the SEG-Y standard documents them 1-based.
const BIN_SAMPLE_INTERVAL: usize = 16;
const BIN_SAMPLES_PER_TRACE: usize = 20;
const BIN_FORMAT_CODE: usize = 24;
const BIN_EXT_SAMPLES_PER_TRACE: usize = 68;
const BIN_EXT_SAMPLE_INTERVAL: usize = 72;
const BIN_REVISION: usize = 300;
const BIN_FIXED_LENGTH: usize = 302;
const BIN_EXT_TEXT_HEADERS: usize = 304;

const TR_SEQUENCE: usize = 0;
const TR_SAMPLES: usize = 114;
const TR_SAMPLE_INTERVAL: usize = 116;

const FORMAT_IBM: u16 = 1;
const FORMAT_IEEE: u16 = 5;

/// Trace-header locations of the inline and crossline numbers (1-based byte positions).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegyOptions {
    pub inline_byte: usize,
    pub crossline_byte: usize,
}

impl Default for SegyOptions {
    fn default() -> Self {
        Self {
            inline_byte: 189,
            crossline_byte: 193,
        }
    }
}

impl SegyOptions {
    fn validate(&self) -> Result<()> {
        for (name, b) in [("inline", self.inline_byte), ("crossline", self.crossline_byte)] {
            if b == 0 || b + 3 > TRACE_HEADER_LEN {
                return Err(Error::InvalidParameter(format!(
                    "{name} byte position {b} outside the 240-byte trace header"
                )));
            }
        }
        Ok(())
    }
}

/// Converts one big-endian IBM System/360 single-precision bit pattern to IEEE.
///
/// The conversion is exact for every pattern in the IEEE normal range. Patterns
/// too large for `f32` return `None`; patterns below the normal range round to
/// the nearest subnormal.
pub fn ibm_to_ieee(bits: u32) -> Option<f32> {
    let sign = bits & 0x8000_0000;
    let exponent = ((bits >> 24) & 0x7f) as i32;
    let mut fraction = bits & 0x00ff_ffff;
    if fraction == 0 {
        return Some(f32::from_bits(sign));
    }
    // value = fraction / 2^24 * 16^(exponent - 64)
    let mut shift = 0;
    while fraction & 0x0080_0000 == 0 {
        fraction <<= 1;
        shift += 1;
    }
    // fraction now has bit 23 set: value = 1.m * 2^(4(e-64) - shift - 1)
    let unbiased = 4 * (exponent - 64) - shift - 1;
    let biased = unbiased + 127;
    if biased >= 255 {
        return None;
    }
    if biased <= 0 {
        let magnitude = (fraction as f64) * 2f64.powi(unbiased - 23);
        let v = magnitude as f32;
        return Some(if sign != 0 { -v } else { v });
    }
    Some(f32::from_bits(
        sign | ((biased as u32) << 23) | (fraction & 0x007f_ffff),
    ))
}

fn be_u16(buf: &[u8], off: usize) -> u16 {
    u16::from_be_bytes([buf[off], buf[off + 1]])
}

fn be_i32(buf: &[u8], off: usize) -> i32 {
    i32::from_be_bytes([buf[off], buf[off + 1], buf[off + 2], buf[off + 3]])
}

fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Truncated(what.to_string())
        } else {
            Error::Io(e)
        }
    })
}

/// Reads a post-stack SEG-Y file into a volume, inferring the grid from the
/// inline/crossline trace-header fields.
pub fn load_segy(path: impl AsRef<Path>, options: SegyOptions) -> Result<SeismicVolume> {
    options.validate()?;
    let file = File::open(path.as_ref())?;
    let file_len = file.metadata()?.len() as usize;
    let mut reader = BufReader::with_capacity(1 << 20, file);

    let mut text = vec![0u8; TEXT_HEADER_LEN];
    read_exact_or_truncated(&mut reader, &mut text, "textual header")?;
    let mut bin = vec![0u8; BINARY_HEADER_LEN];
    read_exact_or_truncated(&mut reader, &mut bin, "binary header")?;

    let format = be_u16(&bin, BIN_FORMAT_CODE);
    if format != FORMAT_IBM && format != FORMAT_IEEE {
        return Err(Error::UnsupportedFormat(format));
    }
    let mut n_samples = be_u16(&bin, BIN_SAMPLES_PER_TRACE) as usize;
    if n_samples == 0 {
        n_samples = be_i32(&bin, BIN_EXT_SAMPLES_PER_TRACE).max(0) as usize;
    }
    if n_samples == 0 {
        return Err(Error::Format("binary header declares zero samples per trace".into()));
    }
    let mut interval = be_u16(&bin, BIN_SAMPLE_INTERVAL) as f64;
    if interval == 0.0 {
        let mut raw = [0u8; 8];
        raw.copy_from_slice(&bin[BIN_EXT_SAMPLE_INTERVAL..BIN_EXT_SAMPLE_INTERVAL + 8]);
        interval = f64::from_be_bytes(raw);
        if !interval.is_finite() || interval < 0.0 {
            interval = 0.0;
        }
    }

    let ext_headers = be_u16(&bin, BIN_EXT_TEXT_HEADERS) as usize;
    let mut data_start = TEXT_HEADER_LEN + BINARY_HEADER_LEN;
    if ext_headers > 0 && ext_headers < 0x8000 {
        let mut skip = vec![0u8; TEXT_HEADER_LEN * ext_headers];
        read_exact_or_truncated(&mut reader, &mut skip, "extended textual headers")?;
        data_start += skip.len();
    }

    let trace_len = TRACE_HEADER_LEN + 4 * n_samples;
    if file_len < data_start {
        return Err(Error::Truncated("headers".into()));
    }
    let payload = file_len - data_start;
    if payload == 0 {
        return Err(Error::Truncated("file contains no traces".into()));
    }
    if !payload.is_multiple_of(trace_len) {
        return Err(Error::Truncated(format!(
            "trace data of {payload} bytes is not a multiple of the {trace_len}-byte trace size"
        )));
    }
    let n_traces = payload / trace_len;

    let il_off = options.inline_byte - 1;
    let xl_off = options.crossline_byte - 1;
    let mut keys = Vec::with_capacity(n_traces);
    let mut samples = Vec::with_capacity(n_traces * n_samples);
    let mut header = [0u8; TRACE_HEADER_LEN];
    let mut raw = vec![0u8; 4 * n_samples];
    for t in 0..n_traces {
        read_exact_or_truncated(&mut reader, &mut header, "trace header")?;
        let declared = be_u16(&header, TR_SAMPLES) as usize;
        if declared != 0 && declared != n_samples {
            return Err(Error::InconsistentSamples {
                trace: t,
                expected: n_samples,
                found: declared,
            });
        }
        keys.push((be_i32(&header, il_off), be_i32(&header, xl_off)));
        read_exact_or_truncated(&mut reader, &mut raw, "trace samples")?;
        for (s, chunk) in raw.chunks_exact(4).enumerate() {
            let bits = u32::from_be_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            let v = if format == FORMAT_IBM {
                ibm_to_ieee(bits).ok_or(Error::IbmOverflow { bits, trace: t })?
            } else {
                f32::from_bits(bits)
            };
            if !v.is_finite() {
                return Err(Error::NonFinite(t * n_samples + s));
            }
            samples.push(v);
        }
    }

    let (n_il, n_xl, slots) = grid_slots(&keys)?;
    let mut amplitudes = vec![0f32; samples.len()];
    for (t, &slot) in slots.iter().enumerate() {
        amplitudes[slot * n_samples..(slot + 1) * n_samples]
            .copy_from_slice(&samples[t * n_samples..(t + 1) * n_samples]);
    }
    let domain = if decode_text_header(&text).contains("DOMAIN DEPTH") {
        DomainKind::Depth
    } else {
        DomainKind::Time
    };
    Ok(SeismicVolume::new(n_il, n_xl, n_samples, amplitudes)?
        .with_sampling(interval as f32, domain))
}

/// Maps each trace to its slot in an inline-major grid.
fn grid_slots(keys: &[(i32, i32)]) -> Result<(usize, usize, Vec<usize>)> {
    let mut inlines: Vec<i32> = keys.iter().map(|k| k.0).collect();
    inlines.sort_unstable();
    inlines.dedup();
    let mut crosslines: Vec<i32> = keys.iter().map(|k| k.1).collect();
    crosslines.sort_unstable();
    crosslines.dedup();
    let il_rank: HashMap<i32, usize> = inlines.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let xl_rank: HashMap<i32, usize> =
        crosslines.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n_il = inlines.len();
    let n_xl = crosslines.len();

    let mut seen = vec![false; n_il * n_xl];
    let mut slots = Vec::with_capacity(keys.len());
    for (t, (il, xl)) in keys.iter().enumerate() {
        let slot = il_rank[il] * n_xl + xl_rank[xl];
        if seen[slot] {
            return Err(Error::NonRectilinear {
                trace: t,
                reason: format!("duplicate inline {il} / crossline {xl}"),
            });
        }
        seen[slot] = true;
        slots.push(slot);
    }
    if keys.len() != n_il * n_xl {
        // The grid has holes: report the first trace of the first incomplete inline.
        let incomplete = (0..n_il)
            .find(|&i| seen[i * n_xl..(i + 1) * n_xl].iter().any(|s| !s))
            .unwrap_or(0);
        let trace = keys
            .iter()
            .position(|k| il_rank[&k.0] == incomplete)
            .unwrap_or(0);
        return Err(Error::NonRectilinear {
            trace,
            reason: format!(
                "{} traces cannot fill a {} x {} inline/crossline grid (inline {} is incomplete)",
                keys.len(),
                n_il,
                n_xl,
                inlines[incomplete]
            ),
        });
    }
    Ok((n_il, n_xl, slots))
}

/// Writes a volume as SEG-Y rev 1 with IEEE samples. Inline and crossline
/// numbers are written 1-based at the standard byte positions.
pub fn write_segy(volume: &SeismicVolume, path: impl AsRef<Path>) -> Result<()> {
    write_segy_with(volume, path, SegyOptions::default())
}

pub fn write_segy_with(
    volume: &SeismicVolume,
    path: impl AsRef<Path>,
    options: SegyOptions,
) -> Result<()> {
    options.validate()?;
    let (n_il, n_xl, ns) = volume.dims();
    if n_il > i32::MAX as usize || n_xl > i32::MAX as usize {
        return Err(Error::Dimension(
            "inline/crossline count exceeds 32-bit header fields".into(),
        ));
    }
    if ns > i32::MAX as usize || TRACE_HEADER_LEN + 4 * ns > u32::MAX as usize {
        return Err(Error::Dimension(format!(
            "{ns} samples per trace cannot be represented in SEG-Y headers"
        )));
    }

    let mut out = BufWriter::with_capacity(1 << 20, File::create(path.as_ref())?);
    out.write_all(&text_header(volume))?;

    let mut bin = [0u8; BINARY_HEADER_LEN];
    bin[0..4].copy_from_slice(&1i32.to_be_bytes()); // job id
    bin[12..14].copy_from_slice(&1u16.to_be_bytes()); // data traces per ensemble
    let interval = volume.sample_interval as f64;
    if interval >= 0.0 && interval <= u16::MAX as f64 && interval.fract() == 0.0 {
        bin[BIN_SAMPLE_INTERVAL..BIN_SAMPLE_INTERVAL + 2]
            .copy_from_slice(&(interval as u16).to_be_bytes());
    } else {
        bin[BIN_EXT_SAMPLE_INTERVAL..BIN_EXT_SAMPLE_INTERVAL + 8]
            .copy_from_slice(&interval.to_be_bytes());
    }
    let short_ns = if ns <= u16::MAX as usize { ns as u16 } else { 0 };
    bin[BIN_SAMPLES_PER_TRACE..BIN_SAMPLES_PER_TRACE + 2].copy_from_slice(&short_ns.to_be_bytes());
    if short_ns == 0 {
        bin[BIN_EXT_SAMPLES_PER_TRACE..BIN_EXT_SAMPLES_PER_TRACE + 4]
            .copy_from_slice(&(ns as i32).to_be_bytes());
    }
    bin[BIN_FORMAT_CODE..BIN_FORMAT_CODE + 2].copy_from_slice(&FORMAT_IEEE.to_be_bytes());
    bin[26..28].copy_from_slice(&1u16.to_be_bytes()); // ensemble fold
    bin[28..30].copy_from_slice(&4u16.to_be_bytes()); // sorting: horizontally stacked
    bin[BIN_REVISION..BIN_REVISION + 2].copy_from_slice(&0x0100u16.to_be_bytes());
    bin[BIN_FIXED_LENGTH..BIN_FIXED_LENGTH + 2].copy_from_slice(&1u16.to_be_bytes());
    out.write_all(&bin)?;

    let il_off = options.inline_byte - 1;
    let xl_off = options.crossline_byte - 1;
    let mut header = [0u8; TRACE_HEADER_LEN];
    let mut raw = vec![0u8; 4 * ns];
    let mut seq: u32 = 0;
    for il in 0..n_il {
        for xl in 0..n_xl {
            seq = seq.wrapping_add(1);
            header.fill(0);
            header[TR_SEQUENCE..TR_SEQUENCE + 4].copy_from_slice(&seq.to_be_bytes());
            header[28..30].copy_from_slice(&1u16.to_be_bytes()); // seismic data
            header[TR_SAMPLES..TR_SAMPLES + 2].copy_from_slice(&short_ns.to_be_bytes());
            let short_interval = if interval.fract() == 0.0 && interval <= u16::MAX as f64 {
                interval as u16
            } else {
                0
            };
            header[TR_SAMPLE_INTERVAL..TR_SAMPLE_INTERVAL + 2]
                .copy_from_slice(&short_interval.to_be_bytes());
            header[il_off..il_off + 4].copy_from_slice(&(il as i32 + 1).to_be_bytes());
            header[xl_off..xl_off + 4].copy_from_slice(&(xl as i32 + 1).to_be_bytes());
            out.write_all(&header)?;
            for (dst, v) in raw.chunks_exact_mut(4).zip(volume.trace(il, xl)) {
                dst.copy_from_slice(&v.to_bits().to_be_bytes());
            }
            out.write_all(&raw)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn text_header(volume: &SeismicVolume) -> Vec<u8> {
    let (n_il, n_xl, ns) = volume.dims();
    let domain = match volume.domain {
        DomainKind::Time => "TIME",
        DomainKind::Depth => "DEPTH",
    };
    let lines = [
        "C 1 SUBSURF POST-STACK VOLUME".to_string(),
        format!("C 2 DOMAIN {domain}"),
        format!("C 3 INLINES {n_il} CROSSLINES {n_xl} SAMPLES {ns}"),
        "C 4 INLINE BYTES 189-192 CROSSLINE BYTES 193-196".to_string(),
        "C 5 SAMPLE FORMAT 5 IEEE BIG-ENDIAN".to_string(),
        "C40 END TEXTUAL HEADER".to_string(),
    ];
    let mut text = vec![b' '; TEXT_HEADER_LEN];
    for (i, line) in lines.iter().enumerate() {
        let row = if line.starts_with("C40") { 39 } else { i };
        for (k, b) in line.bytes().take(80).enumerate() {
            text[row * 80 + k] = b;
        }
    }
    for i in 6..39 {
        let label = format!("C{:2}", i + 1);
        text[i * 80..i * 80 + label.len()].copy_from_slice(label.as_bytes());
    }
    text.iter().map(|&b| ascii_to_ebcdic(b)).collect()
}

fn decode_text_header(text: &[u8]) -> String {
    // EBCDIC headers begin with 'C' = 0xC3; ASCII ones with 0x43.
    if text.first() == Some(&0xC3) {
        text.iter().map(|&b| ebcdic_to_ascii(b) as char).collect()
    } else {
        text.iter()
            .map(|&b| if b.is_ascii() { b as char } else { ' ' })
            .collect()
    }
}

const EBCDIC_PAIRS: &[(u8, u8)] = &[
    (b' ', 0x40),
    (b'.', 0x4B),
    (b'-', 0x60),
    (b'/', 0x61),
    (b',', 0x6B),
    (b':', 0x7A),
    (b'=', 0x7E),
];

fn ascii_to_ebcdic(b: u8) -> u8 {
    match b {
        b'A'..=b'I' => 0xC1 + (b - b'A'),
        b'J'..=b'R' => 0xD1 + (b - b'J'),
        b'S'..=b'Z' => 0xE2 + (b - b'S'),
        b'0'..=b'9' => 0xF0 + (b - b'0'),
        _ => EBCDIC_PAIRS
            .iter()
            .find(|(a, _)| *a == b)
            .map(|(_, e)| *e)
            .unwrap_or(0x40),
    }
}

fn ebcdic_to_ascii(b: u8) -> u8 {
    match b {
        0xC1..=0xC9 => b'A' + (b - 0xC1),
        0xD1..=0xD9 => b'J' + (b - 0xD1),
        0xE2..=0xE9 => b'S' + (b - 0xE2),
        0xF0..=0xF9 => b'0' + (b - 0xF0),
        _ => EBCDIC_PAIRS
            .iter()
            .find(|(_, e)| *e == b)
            .map(|(a, _)| *a)
            .unwrap_or(b' '),
    }
}
