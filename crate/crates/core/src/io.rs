//! File formats: PGM and PFMG images, PBM and JSON masks, matrix CSV/JSON and
//! raw complex measurements with a JSON sidecar.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::models::SamplingMask;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageFormat, ImageReader};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Cursor, Write};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    fn max(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

/// Reads an 8- or 16-bit PGM and scales it to `[0, 1]`.
pub fn read_pgm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path)?;
    let img = ImageReader::with_format(Cursor::new(bytes), ImageFormat::Pnm)
        .decode()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(b) => b.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(b) => b.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect(),
        other => {
            return Err(Error::Parse(format!(
                "{}: expected a grayscale PGM, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    Image::new(h, w, data)
}

/// Writes `img` as a binary PGM, clamping to `[0, 1]` and rounding.
pub fn write_pgm(path: &Path, img: &Image, depth: BitDepth) -> Result<()> {
    let q = |v: f64| (v.clamp(0.0, 1.0) * depth.max()).round();
    let mut out = BufWriter::new(fs::File::create(path)?);
    match depth {
        BitDepth::Eight => {
            let raw: Vec<u8> = img.data.iter().map(|&v| q(v) as u8).collect();
            PnmEncoder::new(out)
                .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
                .encode(&raw[..], img.w as u32, img.h as u32, ExtendedColorType::L8)
                .map_err(|e| Error::Io(std::io::Error::other(e)))
        }
        BitDepth::Sixteen => {
            // the encoder only emits 16-bit gray as PAM, so write P5 directly
            write!(out, "P5\n{} {}\n65535\n", img.w, img.h)?;
            for &v in &img.data {
                out.write_all(&(q(v) as u16).to_be_bytes())?;
            }
            out.flush()?;
            Ok(())
        }
    }
}

const PFMG_MAGIC: &str = "PFG";

/// Lossless float image: ASCII header `PFG h w\n`, then little-endian `f64`
/// samples row-major.
pub fn write_pfmg(path: &Path, img: &Image) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{PFMG_MAGIC} {} {}", img.h, img.w)?;
    for v in &img.data {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_pfmg(path: &Path) -> Result<Image> {
    let bytes = fs::read(path)?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Parse("PFMG header has no newline".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Parse("PFMG header is not ASCII".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(PFMG_MAGIC) {
        return Err(Error::Parse(format!("bad PFMG magic in {:?}", header)));
    }
    let mut dim = || -> Result<usize> {
        parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad PFMG dimensions in {:?}", header)))
    };
    let (h, w) = (dim()?, dim()?);
    let body = &bytes[nl + 1..];
    if body.len() != 8 * h * w {
        return Err(Error::Parse(format!("PFMG body has {} bytes, expected {}", body.len(), 8 * h * w)));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Image::new(h, w, data)
}

/// Reads PGM or PFMG depending on the extension (`.pfg`/`.pfmg` for PFMG).
pub fn read_image(path: &Path) -> Result<Image> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pfg" | "pfmg") => read_pfmg(path),
        _ => read_pgm(path),
    }
}

/// Binary PBM (P4) mask on the centered grid. A set bit marks a kept sample.
pub fn write_pbm(path: &Path, mask: &SamplingMask) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "P4\n{} {}\n", mask.w, mask.h)?;
    let row_bytes = mask.w.div_ceil(8);
    for r in 0..mask.h {
        let mut row = vec![0u8; row_bytes];
        for c in 0..mask.w {
            if mask.kept[r * mask.w + c] {
                row[c / 8] |= 0x80 >> (c % 8);
            }
        }
        out.write_all(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_pbm(path: &Path) -> Result<SamplingMask> {
    let bytes = fs::read(path)?;
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse("truncated PBM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P4" {
        return Err(Error::Parse(format!("{}: not a binary PBM (P4)", path.display())));
    }
    let parse = |s: String| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad PBM dimension {s:?}")));
    let w = parse(token()?)?;
    let h = parse(token()?)?;
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    let row_bytes = w.div_ceil(8);
    if bytes.len() < start + row_bytes * h {
        return Err(Error::Parse("PBM raster is truncated".into()));
    }
    let mut kept = Vec::with_capacity(h * w);
    for r in 0..h {
        let row = &bytes[start + r * row_bytes..start + (r + 1) * row_bytes];
        kept.extend((0..w).map(|c| row[c / 8] & (0x80 >> (c % 8)) != 0));
    }
    SamplingMask::from_kept(h, w, kept)
}

pub fn write_mask_json(path: &Path, mask: &SamplingMask) -> Result<()> {
    fs::write(path, serde_json::to_string(mask)?)?;
    Ok(())
}

pub fn read_mask_json(path: &Path) -> Result<SamplingMask> {
    let m: SamplingMask = serde_json::from_slice(&fs::read(path)?)?;
    // re-validate through the checked constructor
    let checked = SamplingMask::from_kept(m.h, m.w, m.kept)?;
    Ok(SamplingMask { kind: m.kind, seed: m.seed, ..checked })
}

/// Reads a mask as PBM or JSON depending on the extension.
pub fn read_mask(path: &Path) -> Result<SamplingMask> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_mask_json(path),
        _ => read_pbm(path),
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    d: usize,
    n: usize,
    data: Vec<f64>,
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Parse("matrix contains non-finite entries".into()))
    }
}

/// Parses a `d × N` matrix from CSV text: header `d,N`, then `d` rows of `N`
/// values.
pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Parse("empty matrix CSV".into()))?
        .map_err(|e| Error::Parse(e.to_string()))?;
    let dims: Vec<usize> = header
        .iter()
        .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad header field {s:?}; expected \"d,N\""))))
        .collect::<Result<_>>()?;
    let [d, n] = dims[..] else {
        return Err(Error::Parse("matrix CSV header must be \"d,N\"".into()));
    };
    let mut data = Vec::with_capacity(d * n);
    for (i, rec) in records.enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != n {
            return Err(Error::Parse(format!("row {} has {} values, expected {n}", i + 1, rec.len())));
        }
        for s in rec.iter() {
            data.push(s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?} in row {}", i + 1)))?);
        }
    }
    if data.len() != d * n {
        return Err(Error::Parse(format!("expected {d} rows, got {}", data.len() / n.max(1))));
    }
    let m = DMatrix::from_row_slice(d, n, &data);
    check_finite(&m)?;
    Ok(m)
}

pub fn format_matrix_csv(m: &DMatrix<f64>) -> String {
    let mut s = format!("{},{}\n", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:?}", m[(r, c)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_matrix_json(text: &str) -> Result<DMatrix<f64>> {
    let j: MatrixJson = serde_json::from_str(text)?;
    if j.data.len() != j.d * j.n {
        return Err(Error::Parse(format!("matrix JSON has {} entries, expected d·n = {}", j.data.len(), j.d * j.n)));
    }
    let m = DMatrix::from_row_slice(j.d, j.n, &j.data);
    check_finite(&m)?;
    Ok(m)
}

pub fn format_matrix_json(m: &DMatrix<f64>) -> String {
    let data = (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)])).collect();
    serde_json::to_string(&MatrixJson { d: m.nrows(), n: m.ncols(), data }).expect("plain numbers serialize")
}

/// Matrix file in CSV or JSON, chosen by extension.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => parse_matrix_json(&text),
        _ => parse_matrix_csv(&text),
    }
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => format_matrix_json(m),
        _ => format_matrix_csv(m),
    };
    fs::write(path, text)?;
    Ok(())
}

/// Sidecar describing a raw measurement file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSidecar {
    pub h: usize,
    pub w: usize,
    /// Mask path relative to the sidecar.
    pub mask_file: String,
}

/// Writes interleaved `(re, im)` pairs as little-endian `f64` to `raw`, the
/// mask next to it and a sidecar `raw.json`.
pub fn write_measurements(raw: &Path, y: &[f64], mask: &SamplingMask) -> Result<PathBuf> {
    if y.len() != 2 * mask.count() {
        return Err(Error::dims(2 * mask.count(), y.len(), "measurement vector"));
    }
    let mut bytes = Vec::with_capacity(8 * y.len());
    y.iter().for_each(|v| bytes.extend_from_slice(&v.to_le_bytes()));
    fs::write(raw, bytes)?;
    let stem = raw.file_stem().and_then(|s| s.to_str()).unwrap_or("meas");
    let mask_name = format!("{stem}_mask.pbm");
    write_pbm(&raw.with_file_name(&mask_name), mask)?;
    let sidecar = sidecar_path(raw);
    let meta = MeasurementSidecar { h: mask.h, w: mask.w, mask_file: mask_name };
    fs::write(&sidecar, serde_json::to_string_pretty(&meta)?)?;
    Ok(sidecar)
}

fn sidecar_path(raw: &Path) -> PathBuf {
    let mut s = raw.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Inverse of [`write_measurements`].
pub fn read_measurements(raw: &Path) -> Result<(Vec<f64>, SamplingMask)> {
    let meta: MeasurementSidecar = serde_json::from_slice(&fs::read(sidecar_path(raw))?)?;
    let base = raw.parent().unwrap_or(Path::new("."));
    let mask = read_mask(&base.join(&meta.mask_file))?;
    if (mask.h, mask.w) != (meta.h, meta.w) {
        return Err(Error::Parse(format!(
            "sidecar says {}×{}, mask is {}×{}",
            meta.h, meta.w, mask.h, mask.w
        )));
    }
    let bytes = fs::read(raw)?;
    if bytes.len() != 16 * mask.count() {
        return Err(Error::Parse(format!(
            "measurement file has {} bytes, expected {} for {} kept samples",
            bytes.len(),
            16 * mask.count(),
            mask.count()
        )));
    }
    let y = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((y, mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_mask, MaskSpec};

    fn ramp(h: usize, w: usize) -> Image {
        Image::new(h, w, (0..h * w).map(|k| k as f64 / (h * w - 1) as f64).collect()).unwrap()
    }

    #[test]
    fn pgm_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let img = ramp(5, 7);
        for (depth, q) in [(BitDepth::Eight, 255.0), (BitDepth::Sixteen, 65535.0)] {
            let p = dir.path().join("a.pgm");
            write_pgm(&p, &img, depth).unwrap();
            let back = read_pgm(&p).unwrap();
            assert_eq!((back.h, back.w), (5, 7));
            for (a, b) in img.data.iter().zip(&back.data) {
                assert!((a - b).abs() <= 0.5 / q + 1e-12);
            }
        }
    }

    #[test]
    fn pgm_is_plain_p5() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.pgm");
        write_pgm(&p, &Image::new(1, 2, vec![0.0, 1.0]).unwrap(), BitDepth::Eight).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"P5"));
        assert_eq!(&bytes[bytes.len() - 2..], &[0, 255]);
    }

    #[test]
    fn pfmg_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.pfg");
        let img = Image::new(2, 3, vec![0.1, -2.5, 1e-300, 3.0, 0.3, 7.0]).unwrap();
        write_pfmg(&p, &img).unwrap();
        assert!(fs::read(&p).unwrap().starts_with(b"PFG 2 3\n"));
        assert_eq!(read_image(&p).unwrap(), img);
    }

    #[test]
    fn pbm_and_json_masks_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = make_mask(&MaskSpec::Random { density: 0.4 }, 9, 13, 3).unwrap();
        let p = dir.path().join("m.pbm");
        write_pbm(&p, &m).unwrap();
        assert_eq!(read_mask(&p).unwrap().kept, m.kept);
        let j = dir.path().join("m.json");
        write_mask_json(&j, &m).unwrap();
        assert_eq!(read_mask(&j).unwrap(), m);
    }

    #[test]
    fn matrix_formats() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, -0.25]);
        assert_eq!(parse_matrix_csv(&format_matrix_csv(&m)).unwrap(), m);
        assert_eq!(parse_matrix_json(&format_matrix_json(&m)).unwrap(), m);
        assert!(parse_matrix_csv("2,2\n1,2\n3\n").is_err());
        assert!(parse_matrix_csv("2,2\n1,2\n").is_err());
        assert!(parse_matrix_json(r#"{"d":2,"n":2,"data":[1,2,3]}"#).is_err());
    }

    #[test]
    fn measurements_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = make_mask(&MaskSpec::Radial { n_lines: 4 }, 8, 8, 0).unwrap();
        let y: Vec<f64> = (0..2 * m.count()).map(|k| k as f64 * 0.5 - 1.0).collect();
        let raw = dir.path().join("y.raw");
        write_measurements(&raw, &y, &m).unwrap();
        let (y2, m2) = read_measurements(&raw).unwrap();
        assert_eq!(y2, y);
        assert_eq!(m2.kept, m.kept);
    }
}
