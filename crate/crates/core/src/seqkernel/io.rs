//! Block file format.
//!
//! Layout: magic `"PRSEQ1"` (6 bytes), version byte `0x01`, kind byte,
//! `lo` and `hi` as little-endian u64, `ceil((hi-lo)/4)` payload bytes of
//! packed ternary (two bits per value, little-endian within each byte),
//! and a trailing little-endian CRC32 over header plus payload.

use std::fs;
use std::path::Path;

use super::{SeqBlock, SeqError, SeqKind};

pub const FORMAT_MAGIC: &[u8; 6] = b"PRSEQ1";
pub const FORMAT_VERSION: u8 = 0x01;

const HEADER_LEN: usize = 6 + 1 + 1 + 8 + 8;

pub fn block_to_bytes(block: &SeqBlock) -> Vec<u8> {
    let payload = block.payload();
    let mut bytes = Vec::with_capacity(HEADER_LEN + payload.len() + 4);
    bytes.extend_from_slice(FORMAT_MAGIC);
    bytes.push(FORMAT_VERSION);
    bytes.push(block.kind().byte());
    bytes.extend_from_slice(&block.lo().to_le_bytes());
    bytes.extend_from_slice(&block.hi().to_le_bytes());
    bytes.extend_from_slice(payload);
    let crc = crc32fast::hash(&bytes);
    bytes.extend_from_slice(&crc.to_le_bytes());
    bytes
}

pub fn block_from_bytes(bytes: &[u8]) -> Result<SeqBlock, SeqError> {
    if bytes.len() >= 6 && &bytes[..6] != FORMAT_MAGIC {
        return Err(SeqError::BadMagic);
    }
    if bytes.len() < HEADER_LEN + 4 {
        return Err(SeqError::Truncated {
            expected: (HEADER_LEN + 4) as u64,
            found: bytes.len() as u64,
        });
    }
    let version = bytes[6];
    if version != FORMAT_VERSION {
        return Err(SeqError::BadVersion(version));
    }
    let kind = SeqKind::from_byte(bytes[7]).ok_or(SeqError::BadKindByte(bytes[7]))?;
    let lo = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let hi = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    if lo >= hi {
        return Err(SeqError::EmptyRange { lo, hi });
    }
    let payload_len = ((hi - lo).div_ceil(4)) as usize;
    let expected = (HEADER_LEN + payload_len + 4) as u64;
    if bytes.len() as u64 != expected {
        return Err(SeqError::Truncated { expected, found: bytes.len() as u64 });
    }
    let body_end = HEADER_LEN + payload_len;
    let stored = u32::from_le_bytes(bytes[body_end..body_end + 4].try_into().unwrap());
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(SeqError::ChecksumMismatch { stored, computed });
    }
    SeqBlock::from_packed(lo, hi, kind, bytes[HEADER_LEN..body_end].to_vec())
}

pub fn save_block(block: &SeqBlock, path: &Path) -> Result<(), SeqError> {
    fs::write(path, block_to_bytes(block))?;
    Ok(())
}

pub fn load_block(path: &Path) -> Result<SeqBlock, SeqError> {
    block_from_bytes(&fs::read(path)?)
}
