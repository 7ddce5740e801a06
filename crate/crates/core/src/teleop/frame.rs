use crate::arm_model::{TendonVector, TENDONS};
use serde::{Deserialize, Serialize};

/// Encoded frame size in bytes.
pub const FRAME_LEN: usize = 94;
pub const MAGIC: [u8; 2] = [0x54, 0x46];
pub const VERSION: u8 = 0x01;
/// Bytes covered by the checksum.
pub const CRC_OFFSET: usize = FRAME_LEN - 4;

const SEQ_OFFSET: usize = 4;
const TIME_OFFSET: usize = 8;
const DISP_OFFSET: usize = 16;
const CURRENT_OFFSET: usize = DISP_OFFSET + 4 * TENDONS;

/// One sample of the demonstrator's tendon state on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TendonFrame {
    pub seq: u32,
    /// Microseconds since session start.
    pub t_us: u64,
    /// Tendon length displacements, m.
    pub displacements: [f32; TENDONS],
    /// Motor currents, A.
    pub currents: [f32; TENDONS],
}

impl TendonFrame {
    pub fn new(seq: u32, t_us: u64, displacements: &TendonVector, currents: &[f64; TENDONS]) -> Self {
        TendonFrame {
            seq,
            t_us,
            displacements: displacements.0.map(|d| d as f32),
            currents: currents.map(|i| i as f32),
        }
    }

    pub fn displacement_vector(&self) -> TendonVector {
        TendonVector(self.displacements.map(f64::from))
    }

    pub fn current_array(&self) -> [f64; TENDONS] {
        self.currents.map(f64::from)
    }

    /// Bitwise equality, distinguishing NaN payloads and signed zeros.
    pub fn bit_eq(&self, other: &TendonFrame) -> bool {
        let bits = |a: &[f32; TENDONS]| a.map(f32::to_bits);
        self.seq == other.seq
            && self.t_us == other.t_us
            && bits(&self.displacements) == bits(&other.displacements)
            && bits(&self.currents) == bits(&other.currents)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum FrameError {
    #[error("truncated frame: {got} of {FRAME_LEN} bytes")]
    Truncated { got: usize },
    #[error("CRC mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 2]),
    #[error("unsupported frame version {0}")]
    UnsupportedVersion(u8),
}

pub fn encode_frame(f: &TendonFrame) -> [u8; FRAME_LEN] {
    let mut b = [0u8; FRAME_LEN];
    b[0..2].copy_from_slice(&MAGIC);
    b[2] = VERSION;
    b[SEQ_OFFSET..TIME_OFFSET].copy_from_slice(&f.seq.to_le_bytes());
    b[TIME_OFFSET..DISP_OFFSET].copy_from_slice(&f.t_us.to_le_bytes());
    for k in 0..TENDONS {
        let d = DISP_OFFSET + 4 * k;
        b[d..d + 4].copy_from_slice(&f.displacements[k].to_le_bytes());
        let c = CURRENT_OFFSET + 4 * k;
        b[c..c + 4].copy_from_slice(&f.currents[k].to_le_bytes());
    }
    // bytes 88..90 are reserved and stay zero
    let crc = crc32fast::hash(&b[..CRC_OFFSET]);
    b[CRC_OFFSET..].copy_from_slice(&crc.to_le_bytes());
    b
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

/// Decodes the first [`FRAME_LEN`] bytes of `bytes`.
///
/// The checksum is verified before anything else, so any corruption covered by
/// it is reported as a CRC mismatch.
pub fn decode_frame(bytes: &[u8]) -> Result<TendonFrame, FrameError> {
    if bytes.len() < FRAME_LEN {
        return Err(FrameError::Truncated { got: bytes.len() });
    }
    let b = &bytes[..FRAME_LEN];
    let stored = le_u32(b, CRC_OFFSET);
    let computed = crc32fast::hash(&b[..CRC_OFFSET]);
    if stored != computed {
        return Err(FrameError::CrcMismatch { stored, computed });
    }
    if b[0..2] != MAGIC {
        return Err(FrameError::BadMagic([b[0], b[1]]));
    }
    if b[2] != VERSION {
        return Err(FrameError::UnsupportedVersion(b[2]));
    }
    let f32_at = |at: usize| f32::from_bits(le_u32(b, at));
    Ok(TendonFrame {
        seq: le_u32(b, SEQ_OFFSET),
        t_us: u64::from_le_bytes(b[TIME_OFFSET..DISP_OFFSET].try_into().unwrap()),
        displacements: std::array::from_fn(|k| f32_at(DISP_OFFSET + 4 * k)),
        currents: std::array::from_fn(|k| f32_at(CURRENT_OFFSET + 4 * k)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TendonFrame {
        TendonFrame {
            seq: 0x0102_0304,
            t_us: 1_000_000,
            displacements: std::array::from_fn(|k| k as f32 * 1e-3 - 4e-3),
            currents: [0.1; TENDONS],
        }
    }

    // reflected CRC-32, one bit at a time
    fn bitwise_crc32(data: &[u8]) -> u32 {
        let mut crc = !0u32;
        for byte in data {
            crc ^= u32::from(*byte);
            for _ in 0..8 {
                crc = if crc & 1 == 1 { (crc >> 1) ^ 0xEDB8_8320 } else { crc >> 1 };
            }
        }
        !crc
    }

    #[test]
    fn check_value() {
        assert_eq!(bitwise_crc32(b"123456789"), 0xCBF4_3926);
        assert_eq!(crc32fast::hash(b"123456789"), 0xCBF4_3926);
    }

    fn with_crc(mut b: [u8; FRAME_LEN]) -> [u8; FRAME_LEN] {
        let crc = crc32fast::hash(&b[..CRC_OFFSET]);
        b[CRC_OFFSET..].copy_from_slice(&crc.to_le_bytes());
        b
    }

    #[test]
    fn zero_frame_layout() {
        let zero = TendonFrame {
            seq: 0,
            t_us: 0,
            displacements: [0.0; TENDONS],
            currents: [0.0; TENDONS],
        };
        let b = encode_frame(&zero);
        assert_eq!(b[..4], [0x54, 0x46, 0x01, 0x00]);
        assert!(b[4..CRC_OFFSET].iter().all(|x| *x == 0));
        assert_eq!(le_u32(&b, CRC_OFFSET), bitwise_crc32(&b[..90]));
    }

    #[test]
    fn field_offsets() {
        let f = sample();
        let b = encode_frame(&f);
        assert_eq!(b[4..8], [0x04, 0x03, 0x02, 0x01]);
        assert_eq!(b[8..16], 1_000_000u64.to_le_bytes());
        assert_eq!(b[16..20], f.displacements[0].to_le_bytes());
        assert_eq!(b[52..56], 0.1f32.to_le_bytes());
        assert_eq!(b[88..90], [0, 0]);
    }

    #[test]
    fn round_trip() {
        let f = sample();
        assert!(decode_frame(&encode_frame(&f)).unwrap().bit_eq(&f));
    }

    #[test]
    fn distinct_errors() {
        let b = encode_frame(&sample());
        assert_eq!(decode_frame(&b[..93]), Err(FrameError::Truncated { got: 93 }));
        let mut bad = b;
        bad[CRC_OFFSET] ^= 0xff;
        assert!(matches!(decode_frame(&bad), Err(FrameError::CrcMismatch { .. })));
        let mut magic = b;
        magic[0] = b'X';
        assert_eq!(decode_frame(&with_crc(magic)), Err(FrameError::BadMagic([b'X', 0x46])));
        let mut version = b;
        version[2] = 2;
        assert_eq!(decode_frame(&with_crc(version)), Err(FrameError::UnsupportedVersion(2)));
    }

    #[test]
    fn trailing_bytes_are_ignored() {
        let mut v = encode_frame(&sample()).to_vec();
        v.extend_from_slice(&[0xaa; 10]);
        assert!(decode_frame(&v).unwrap().bit_eq(&sample()));
    }
}
