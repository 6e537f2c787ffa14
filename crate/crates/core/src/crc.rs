//! CRC-24A (generator 0x1864CFB, zero init, MSB first, no final xor) and
//! CRC-tagged payload blocks.

use rand::Rng;
use serde::{Deserialize, Serialize};

pub const CRC24A_POLY: u32 = 0x0186_4CFB;
pub const CRC_LEN: usize = 24;

/// CRC-24A over a bit sequence (one bit per byte, values 0/1).
pub fn crc24a(bits: &[u8]) -> u32 {
    let mut reg: u32 = 0;
    for &b in bits {
        let top = ((reg >> 23) & 1) as u8 ^ (b & 1);
        reg = (reg << 1) & 0x00FF_FFFF;
        if top == 1 {
            reg ^= CRC24A_POLY & 0x00FF_FFFF;
        }
    }
    reg
}

fn crc_bits(crc: u32) -> impl Iterator<Item = u8> {
    (0..CRC_LEN).map(move |i| ((crc >> (CRC_LEN - 1 - i)) & 1) as u8)
}

/// True when the trailing 24 bits are the CRC of everything before them.
pub fn crc24a_check(bits_with_crc: &[u8]) -> bool {
    if bits_with_crc.len() < CRC_LEN {
        return false;
    }
    let (payload, tail) = bits_with_crc.split_at(bits_with_crc.len() - CRC_LEN);
    crc_bits(crc24a(payload)).eq(tail.iter().copied())
}

/// Uncoded payload of one slot: random information bits followed by their CRC.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitBlock {
    /// Information bits and the appended checksum.
    pub bits: Vec<u8>,
    pub crc_ok_reference: u32,
}

impl BitBlock {
    /// Block of exactly `total_bits` bits (checksum included).
    pub fn random<R: Rng + ?Sized>(total_bits: usize, rng: &mut R) -> Option<Self> {
        if total_bits <= CRC_LEN {
            return None;
        }
        let info: Vec<u8> = (0..total_bits - CRC_LEN).map(|_| rng.random_range(0..2u8)).collect();
        Some(Self::from_info(info))
    }

    pub fn from_info(mut info: Vec<u8>) -> Self {
        let crc = crc24a(&info);
        info.extend(crc_bits(crc));
        Self {
            bits: info,
            crc_ok_reference: crc,
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn info_bits(&self) -> &[u8] {
        &self.bits[..self.bits.len() - CRC_LEN]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedLabel;

    fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
        bytes
            .iter()
            .flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1))
            .collect()
    }

    #[test]
    fn standard_check_value() {
        // CRC-24/LTE-A catalogue check value
        assert_eq!(crc24a(&bytes_to_bits(b"123456789")), 0xCD_E703);
    }

    #[test]
    fn block_passes_its_own_check() {
        let mut rng = SeedLabel(3).rng();
        let b = BitBlock::random(1000, &mut rng).unwrap();
        assert_eq!(b.len(), 1000);
        assert!(crc24a_check(&b.bits));
        assert_eq!(crc24a(b.info_bits()), b.crc_ok_reference);
    }

    #[test]
    fn single_bit_flips_always_fail() {
        let mut rng = SeedLabel(11).rng();
        let b = BitBlock::random(59_202, &mut rng).unwrap();
        for _ in 0..100 {
            let pos = rng.random_range(0..b.len());
            let mut bad = b.bits.clone();
            bad[pos] ^= 1;
            assert!(!crc24a_check(&bad), "flip at {pos} passed");
        }
    }

    #[test]
    fn too_small_block() {
        let mut rng = SeedLabel(0).rng();
        assert!(BitBlock::random(24, &mut rng).is_none());
        assert!(!crc24a_check(&[0; 10]));
    }
}
