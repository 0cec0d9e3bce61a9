//! The SVOL cache format: `b"SVOL"`, a version byte, three little-endian u32
//! dimensions (inline, crossline, sample) and little-endian f32 samples.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::SeismicVolume;
use crate::error::{Error, Result};

pub const SVOL_MAGIC: &[u8; 4] = b"SVOL";
pub const SVOL_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 12;

pub fn write_svol(volume: &SeismicVolume, path: impl AsRef<Path>) -> Result<()> {
    let (ni, nx, ns) = volume.dims();
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(SVOL_MAGIC);
    header.push(SVOL_VERSION);
    for d in [ni, nx, ns] {
        let d = u32::try_from(d)
            .map_err(|_| Error::Dimension(format!("dimension {d} exceeds 32 bits")))?;
        header.extend_from_slice(&d.to_le_bytes());
    }
    let mut out = BufWriter::with_capacity(1 << 20, File::create(path.as_ref())?);
    out.write_all(&header)?;
    let mut buf = Vec::with_capacity(4 * 4096);
    for chunk in volume.amplitudes().chunks(4096) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_svol(path: impl AsRef<Path>) -> Result<SeismicVolume> {
    let mut reader = BufReader::with_capacity(1 << 20, File::open(path.as_ref())?);
    let mut header = [0u8; HEADER_LEN];
    reader.read_exact(&mut header).map_err(|_| {
        Error::Truncated("SVOL header".into())
    })?;
    if &header[0..4] != SVOL_MAGIC {
        return Err(Error::Format("missing SVOL magic".into()));
    }
    if header[4] != SVOL_VERSION {
        return Err(Error::Format(format!("unsupported SVOL version {}", header[4])));
    }
    let dim = |k: usize| {
        u32::from_le_bytes([
            header[5 + 4 * k],
            header[6 + 4 * k],
            header[7 + 4 * k],
            header[8 + 4 * k],
        ]) as usize
    };
    let (ni, nx, ns) = (dim(0), dim(1), dim(2));
    let count = ni
        .checked_mul(nx)
        .and_then(|v| v.checked_mul(ns))
        .ok_or_else(|| Error::Dimension("SVOL dimensions overflow".into()))?;
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw)?;
    if raw.len() < 4 * count {
        return Err(Error::Truncated(format!(
            "SVOL payload has {} bytes, expected {}",
            raw.len(),
            4 * count
        )));
    }
    if raw.len() > 4 * count {
        return Err(Error::Format("trailing bytes after SVOL payload".into()));
    }
    let amplitudes = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    SeismicVolume::new(ni, nx, ns, amplitudes)
}
