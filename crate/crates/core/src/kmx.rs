//! Kernel matrix files.
//!
//! Binary `KMX1` layout: the 4 magic bytes `KMX1`, a little-endian `u32`
//! example count `n`, then `n·n` little-endian IEEE-754 doubles in row-major
//! order. Readers also accept headerless CSV with `n` rows of `n`
//! comma-separated decimals. The writer always emits `KMX1`.

use std::path::Path;

use crate::error::{MklError, Result};
use crate::kernel::KernelMatrix;

pub const MAGIC: &[u8; 4] = b"KMX1";

pub fn encode(k: &KernelMatrix) -> Vec<u8> {
    let n = k.n();
    let mut out = Vec::with_capacity(8 + 8 * n * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for v in k.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes either a `KMX1` buffer or headerless CSV text.
pub fn decode(bytes: &[u8], name: &str) -> Result<KernelMatrix> {
    if bytes.starts_with(MAGIC) {
        decode_binary(bytes, name)
    } else {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| MklError::Format("file is neither KMX1 nor UTF-8 CSV".into()))?;
        decode_csv(text, name)
    }
}

fn decode_binary(bytes: &[u8], name: &str) -> Result<KernelMatrix> {
    if bytes.len() < 8 {
        return Err(MklError::Format("truncated KMX1 header".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4-byte slice")) as usize;
    let expected = 8 + 8 * n * n;
    if bytes.len() != expected {
        return Err(MklError::Format(format!(
            "KMX1 with n = {n} needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let data = bytes[8..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    KernelMatrix::new(n, data, name)
}

fn decode_csv(text: &str, name: &str) -> Result<KernelMatrix> {
    let mut data = Vec::new();
    let mut rows = 0usize;
    let mut first_width = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| {
                MklError::Format(format!("line {}: cannot parse '{}'", lineno + 1, tok.trim()))
            })?;
            data.push(v);
        }
        let width = data.len() - before;
        if *first_width.get_or_insert(width) != width {
            return Err(MklError::Format(format!("line {}: ragged row", lineno + 1)));
        }
        rows += 1;
    }
    if rows == 0 || data.len() != rows * rows {
        return Err(MklError::Format(format!(
            "CSV kernel must be square, got {rows} rows and {} values",
            data.len()
        )));
    }
    KernelMatrix::new(rows, data, name)
}

pub fn write(path: impl AsRef<Path>, k: &KernelMatrix) -> Result<()> {
    std::fs::write(path, encode(k))?;
    Ok(())
}

/// Reads a kernel file; the kernel is named after the file stem.
pub fn read(path: impl AsRef<Path>) -> Result<KernelMatrix> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "kernel".into());
    decode(&std::fs::read(path)?, &name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let k = KernelMatrix::new(2, vec![1.0, 0.25, 0.25, 2.0], "k").unwrap();
        let bytes = encode(&k);
        assert_eq!(&bytes[..4], b"KMX1");
        assert_eq!(&bytes[4..8], &[2, 0, 0, 0]);
        assert_eq!(bytes.len(), 8 + 32);
        assert_eq!(&bytes[16..24], &0.25f64.to_le_bytes());
    }

    #[test]
    fn csv_input() {
        let k = decode(b"1, 0.5\n0.5, 1\n", "c").unwrap();
        assert_eq!(k.as_slice(), &[1.0, 0.5, 0.5, 1.0]);
        assert!(decode(b"1,0.5\n0.5\n", "c").is_err());
        assert!(decode(b"1,2,3\n", "c").is_err());
        assert!(decode(b"1,0.4\n0.5,1\n", "c").is_err());
    }

    #[test]
    fn rejects_truncated_binary() {
        let k = KernelMatrix::identity(3);
        let bytes = encode(&k);
        assert!(decode(&bytes[..bytes.len() - 1], "t").is_err());
        assert!(decode(&bytes[..6], "t").is_err());
    }

    proptest! {
        #[test]
        fn binary_roundtrip_is_exact(n in 1usize..6, seed in any::<u64>()) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let k = KernelMatrix::from_fn(n, "p", |_, _| rng.normal(0.0, 3.0));
            let back = decode(&encode(&k), "p").unwrap();
            prop_assert_eq!(back.as_slice(), k.as_slice());
        }
    }
}
