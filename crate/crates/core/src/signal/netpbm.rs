//! Binary PGM (P5) and PPM (P6) images.

use std::path::Path;

use super::{Normalization, Signal};
use crate::error::{Error, Result};

/// Reads P5/P6 with any maxval up to 65535 and scales samples to `[0, 1]`.
pub fn read_pgm_ppm(path: &Path) -> Result<Signal> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_netpbm(&bytes, path)
}

pub(crate) fn decode_netpbm(bytes: &[u8], path: &Path) -> Result<Signal> {
    let channels = match bytes.get(0..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        Some(magic) => {
            return Err(Error::UnsupportedFormat(format!(
                "netpbm magic '{}' (only binary P5/P6 are supported)",
                String::from_utf8_lossy(magic)
            )))
        }
        None => return Err(Error::malformed(path, "empty image file")),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // Whitespace and '#' comments may separate header fields.
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|c| c.is_ascii_digit()) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::malformed(path, "bad netpbm header field"))?;
    }
    let [width, height, maxval] = fields;
    if !(1..=65535).contains(&maxval) {
        return Err(Error::malformed(path, format!("maxval {maxval} outside 1..=65535")));
    }
    if !bytes.get(pos).is_some_and(|c| c.is_ascii_whitespace()) {
        return Err(Error::malformed(path, "missing whitespace after maxval"));
    }
    pos += 1;
    let wide = maxval > 255;
    let count = width * height * channels;
    let need = count * if wide { 2 } else { 1 };
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| Error::malformed(path, "truncated raster"))?;
    let scale = maxval as f64;
    let samples = if wide {
        raster.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / scale).collect()
    } else {
        raster.iter().map(|&b| b as f64 / scale).collect()
    };
    let mut signal = Signal::image(height, width, channels, samples)?;
    signal.normalization = Normalization { offset: 0.0, scale };
    Ok(signal)
}

/// Writes 1-channel images as P5 and 3-channel images as P6. Uses 16-bit samples when the
/// signal's normalization scale is above 255, 8-bit otherwise.
pub fn write_pgm_ppm(signal: &Signal, path: &Path) -> Result<()> {
    std::fs::write(path, encode_netpbm(signal)?).map_err(|e| Error::io(path, e))
}

pub(crate) fn encode_netpbm(signal: &Signal) -> Result<Vec<u8>> {
    if signal.dims.len() != 2 {
        return Err(Error::UnsupportedShape("netpbm output needs an image".into()));
    }
    let magic = match signal.channels {
        1 => "P5",
        3 => "P6",
        c => return Err(Error::UnsupportedFormat(format!("{c}-channel image (1 or 3 supported)"))),
    };
    let maxval: u32 = if signal.normalization.scale > 255.0 { 65535 } else { 255 };
    let (h, w) = (signal.dims[0], signal.dims[1]);
    let mut out = format!("{magic}\n{w} {h}\n{maxval}\n").into_bytes();
    for v in &signal.samples {
        let q = (v.clamp(0.0, 1.0) * maxval as f64).round() as u32;
        if maxval > 255 {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_p5_scaling() {
        let bytes = [b"P5\n2 2\n255\n".as_slice(), &[0, 255, 128, 64]].concat();
        let s = decode_netpbm(&bytes, Path::new("x.pgm")).unwrap();
        let expect = [0.0, 1.0, 0.50196, 0.25098];
        for (a, b) in s.samples.iter().zip(expect) {
            assert!((a - b).abs() < 1e-5);
        }
        assert_eq!(encode_netpbm(&s).unwrap(), bytes);
    }

    #[test]
    fn comments_and_wide_samples() {
        let bytes = [b"P5 # c\n# more\n2 1 65535\n".as_slice(), &[0xff, 0xff, 0x80, 0x00]].concat();
        let s = decode_netpbm(&bytes, Path::new("x.pgm")).unwrap();
        assert_eq!(s.samples, vec![1.0, 32768.0 / 65535.0]);
        let back = decode_netpbm(&encode_netpbm(&s).unwrap(), Path::new("y")).unwrap();
        assert_eq!(back.samples, s.samples);
    }

    #[test]
    fn ppm_round_trip_keeps_channel_order() {
        // 1x2 image: pure red then pure blue.
        let bytes = [b"P6\n2 1\n255\n".as_slice(), &[255, 0, 0, 0, 0, 255]].concat();
        let s = decode_netpbm(&bytes, Path::new("x.ppm")).unwrap();
        assert_eq!(s.channels, 3);
        assert_eq!(s.channel(0), vec![1.0, 0.0]);
        assert_eq!(s.channel(2), vec![0.0, 1.0]);
        assert_eq!(encode_netpbm(&s).unwrap(), bytes);
    }

    #[test]
    fn ascii_variants_rejected() {
        let err = decode_netpbm(b"P2\n2 2\n255\n0 0 0 0", Path::new("x.pgm")).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat(_)));
        assert!(decode_netpbm(b"P5\n2 2\n255\n\x00", Path::new("x.pgm")).is_err());
    }
}
