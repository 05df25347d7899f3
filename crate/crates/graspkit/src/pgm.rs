//! Binary PGM ("P5", maxval 255) I/O for rasters and byte grids.
//!
//! Set pixels are written as 255, unset as 0. Row-major, top-left origin,
//! x rightward, y downward — the pixel convention used everywhere.

use std::io::{self, Read, Write};

use crate::raster::BinaryRaster;

#[derive(Debug, thiserror::Error)]
pub enum PgmError {
    #[error("not a P5 PGM: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_raster<W: Write>(r: &BinaryRaster, mut w: W) -> Result<(), PgmError> {
    write!(w, "P5\n{} {}\n255\n", r.width(), r.height())?;
    let mut row = vec![0u8; r.width() as usize];
    for y in 0..r.height() {
        for (x, px) in row.iter_mut().enumerate() {
            *px = if r.get(x as u32, y) { 255 } else { 0 };
        }
        w.write_all(&row)?;
    }
    Ok(())
}

pub fn read_raster<R: Read>(r: R) -> Result<BinaryRaster, PgmError> {
    let (w, h, data) = read_gray(r)?;
    let mut out = BinaryRaster::new(w, h);
    for y in 0..h {
        for x in 0..w {
            if data[(y * w + x) as usize] >= 128 {
                out.set(x, y, true);
            }
        }
    }
    Ok(out)
}

/// Raw 8-bit grayscale read; used for depth channels carried opaquely.
pub fn read_gray<R: Read>(mut r: R) -> Result<(u32, u32, Vec<u8>), PgmError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if !buf.starts_with(b"P5") {
        return Err(PgmError::Format("missing P5 magic".into()));
    }
    let mut pos = 2;
    let mut fields = Vec::with_capacity(3);
    while fields.len() < 3 {
        while pos < buf.len() && buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < buf.len() && buf[pos] == b'#' {
            while pos < buf.len() && buf[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(PgmError::Format("truncated header".into()));
        }
        let tok = std::str::from_utf8(&buf[start..pos])
            .map_err(|_| PgmError::Format("non-ascii header".into()))?;
        fields.push(
            tok.parse::<u32>()
                .map_err(|_| PgmError::Format(format!("bad header field {tok:?}")))?,
        );
    }
    pos += 1; // single whitespace after maxval
    let (w, h, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != 255 {
        return Err(PgmError::Format(format!("unsupported maxval {maxval}")));
    }
    let need = w as usize * h as usize;
    if buf.len() < pos + need {
        return Err(PgmError::Format("truncated pixel data".into()));
    }
    Ok((w, h, buf[pos..pos + need].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut r = BinaryRaster::new(5, 3);
        r.set(0, 0, true);
        r.set(4, 2, true);
        r.set(2, 1, true);
        let mut bytes = Vec::new();
        write_raster(&r, &mut bytes).unwrap();
        let back = read_raster(&bytes[..]).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn rejects_non_p5() {
        assert!(read_raster(&b"P2\n1 1\n255\n0"[..]).is_err());
    }
}
