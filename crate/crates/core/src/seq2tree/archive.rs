//! Binary weight archive, version 1.
//!
//! Layout (little-endian): magic `NTA1`; `u32` tensor count; per tensor a
//! `u16` name length, the UTF-8 name, `u8` dtype (0 = f32), `u8` rank,
//! `u32` dims, then the row-major f32 payload; finally a CRC32 of every
//! preceding byte.

use std::path::Path;

const MAGIC: &[u8; 3] = b"NTA";
const VERSION: u8 = b'1';

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(name: &str, dims: Vec<usize>, data: Vec<f32>) -> Tensor {
        assert_eq!(dims.iter().product::<usize>(), data.len(), "tensor {name}: dims do not match data");
        Tensor { name: name.to_string(), dims, data }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("not a weight archive (bad magic)")]
    BadMagic,
    #[error("unsupported archive version {0:?}")]
    Version(char),
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("archive truncated")]
    Truncated,
    #[error("tensor {name}: unsupported dtype {dtype}")]
    Dtype { name: String, dtype: u8 },
    #[error("tensor name is not UTF-8")]
    BadName,
    #[error("duplicate tensor {0}")]
    Duplicate(String),
    #[error("missing tensor {0}")]
    MissingTensor(String),
    #[error("unexpected tensor {0}")]
    UnexpectedTensor(String),
    #[error("tensor {name}: expected shape {expected:?}, found {found:?}")]
    Shape { name: String, expected: Vec<usize>, found: Vec<usize> },
    #[error("hidden size mismatch: archive has {archive}, expected {expected}")]
    Hidden { archive: usize, expected: usize },
    #[error("tensor {0} holds a non-finite value")]
    NonFinite(String),
    #[error("vocabulary has {vocab} entries but the archive expects {archive}")]
    VocabSize { vocab: usize, archive: usize },
}

pub fn encode_archive(tensors: &[Tensor]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.push(0);
        out.push(t.dims.len() as u8);
        for d in &t.dims {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for x in &t.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ArchiveError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or(ArchiveError::Truncated)?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, ArchiveError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, ArchiveError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, ArchiveError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_archive(bytes: &[u8]) -> Result<Vec<Tensor>, ArchiveError> {
    if bytes.len() < 4 || &bytes[..3] != MAGIC {
        return Err(ArchiveError::BadMagic);
    }
    if bytes[3] != VERSION {
        return Err(ArchiveError::Version(bytes[3] as char));
    }
    if bytes.len() < 12 {
        return Err(ArchiveError::Truncated);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(ArchiveError::Checksum { stored, computed });
    }
    let mut r = Reader { bytes: body, pos: 4 };
    let count = r.u32()?;
    let mut out: Vec<Tensor> = Vec::new();
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?).map_err(|_| ArchiveError::BadName)?.to_string();
        let dtype = r.u8()?;
        if dtype != 0 {
            return Err(ArchiveError::Dtype { name, dtype });
        }
        let rank = r.u8()? as usize;
        let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let n: usize = dims.iter().product();
        let raw = r.take(n.checked_mul(4).ok_or(ArchiveError::Truncated)?)?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        if out.iter().any(|t| t.name == name) {
            return Err(ArchiveError::Duplicate(name));
        }
        out.push(Tensor { name, dims, data });
    }
    if r.pos != body.len() {
        return Err(ArchiveError::Truncated);
    }
    Ok(out)
}

pub fn write_archive(path: &Path, tensors: &[Tensor]) -> Result<(), ArchiveError> {
    std::fs::write(path, encode_archive(tensors))?;
    Ok(())
}

pub fn read_archive(path: &Path) -> Result<Vec<Tensor>, ArchiveError> {
    decode_archive(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Tensor> {
        vec![
            Tensor::new("a", vec![2, 3], vec![1.0, -2.5, 3.25, 0.0, f32::MIN_POSITIVE, 7.0]),
            Tensor::new("b.c", vec![3], vec![0.5, 0.25, -0.125]),
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let bytes = encode_archive(&sample());
        let back = decode_archive(&bytes).unwrap();
        assert_eq!(back, sample());
        assert_eq!(encode_archive(&back), bytes);
    }

    #[test]
    fn corruption_is_detected() {
        let mut bytes = encode_archive(&sample());
        bytes[20] ^= 1;
        assert!(matches!(decode_archive(&bytes), Err(ArchiveError::Checksum { .. })));
        let mut v2 = encode_archive(&sample());
        v2[3] = b'2';
        assert!(matches!(decode_archive(&v2), Err(ArchiveError::Version('2'))));
        assert!(matches!(decode_archive(b"XXXX"), Err(ArchiveError::BadMagic)));
    }

    #[test]
    fn layout_matches_format() {
        let bytes = encode_archive(&[Tensor::new("w", vec![1], vec![1.0])]);
        let expected_len = 4 + 4 + 2 + 1 + 1 + 1 + 4 + 4 + 4;
        assert_eq!(bytes.len(), expected_len);
        assert_eq!(&bytes[..4], b"NTA1");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..10], &1u16.to_le_bytes());
        assert_eq!(bytes[10], b'w');
        assert_eq!(&bytes[13..17], &1u32.to_le_bytes());
        assert_eq!(&bytes[17..21], &1.0f32.to_le_bytes());
    }
}
