//! Gray-mapped square QAM.
//!
//! Bits map per axis using the NR layout: for 64QAM a group `b0..b5` becomes
//!
//! ```text
//! I = (1-2 b0) (4 - (1-2 b2) (2 - (1-2 b4)))
//! Q = (1-2 b1) (4 - (1-2 b3) (2 - (1-2 b5)))
//! ```
//!
//! scaled by `1/sqrt(42)`; 256QAM nests one more level and scales by
//! `1/sqrt(170)`. Hard decisions are separable per axis. A sample exactly
//! halfway between two levels resolves to the lower level (smaller in-phase
//! index first, then smaller quadrature index).

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "QAM64")]
    Qam64,
    #[serde(rename = "QAM256")]
    Qam256,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qam64 => 6,
            Modulation::Qam256 => 8,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    /// Levels per axis.
    fn side(self) -> usize {
        1 << (self.bits_per_symbol() / 2)
    }

    fn scale(self) -> f64 {
        // mean energy of the odd-integer square lattice is 2 (L^2 - 1) / 3
        let l = self.side() as f64;
        (2.0 * (l * l - 1.0) / 3.0).sqrt()
    }

    /// Minimum Euclidean distance of the normalized constellation.
    pub fn min_distance(self) -> f64 {
        2.0 / self.scale()
    }

    fn tables(self) -> &'static AxisTables {
        static T64: OnceLock<AxisTables> = OnceLock::new();
        static T256: OnceLock<AxisTables> = OnceLock::new();
        match self {
            Modulation::Qam64 => T64.get_or_init(|| AxisTables::new(self)),
            Modulation::Qam256 => T256.get_or_init(|| AxisTables::new(self)),
        }
    }

    /// All constellation points indexed by the integer formed from their bits
    /// (first bit most significant).
    pub fn points(self) -> Vec<Complex64> {
        let bps = self.bits_per_symbol();
        (0..self.order())
            .map(|v| {
                let bits: Vec<u8> = (0..bps).map(|i| ((v >> (bps - 1 - i)) & 1) as u8).collect();
                map_group(self, &bits)
            })
            .collect()
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qam64 => "QAM64",
            Modulation::Qam256 => "QAM256",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "QAM64" | "64QAM" => Ok(Modulation::Qam64),
            "QAM256" | "256QAM" => Ok(Modulation::Qam256),
            other => Err(Error::Config(format!("unknown modulation {other:?}"))),
        }
    }
}

/// Per-axis amplitude (in lattice units) of a bit triple/quad `b[0], b[1], ...`
/// where `b[0]` is the sign bit.
fn axis_level(bits: &[u8]) -> i32 {
    // innermost term first, then nest outward
    let s = |b: u8| 1 - 2 * b as i32;
    let mut mag = 1;
    let mut scale = 2;
    for b in bits[1..].iter().rev() {
        mag = scale - s(*b) * mag;
        scale *= 2;
    }
    s(bits[0]) * mag
}

fn map_group(m: Modulation, bits: &[u8]) -> Complex64 {
    let i_bits: Vec<u8> = bits.iter().step_by(2).copied().collect();
    let q_bits: Vec<u8> = bits.iter().skip(1).step_by(2).copied().collect();
    let k = m.scale();
    Complex64::new(axis_level(&i_bits) as f64 / k, axis_level(&q_bits) as f64 / k)
}

/// Level index (0 = most negative) -> axis bits.
struct AxisTables {
    bits_by_index: Vec<Vec<u8>>,
}

impl AxisTables {
    fn new(m: Modulation) -> Self {
        let per_axis = m.bits_per_symbol() / 2;
        let side = m.side();
        let mut bits_by_index = vec![Vec::new(); side];
        for v in 0..side {
            let bits: Vec<u8> = (0..per_axis).map(|i| ((v >> (per_axis - 1 - i)) & 1) as u8).collect();
            let level = axis_level(&bits);
            let idx = ((level + side as i32 - 1) / 2) as usize;
            bits_by_index[idx] = bits;
        }
        Self { bits_by_index }
    }
}

/// Map bits (values 0/1) to unit-energy symbols.
pub fn qam_modulate(bits: &[u8], m: Modulation) -> Result<Vec<Complex64>> {
    let bps = m.bits_per_symbol();
    if !bits.len().is_multiple_of(bps) {
        return Err(Error::RaggedBlock {
            bits: bits.len(),
            per_symbol: bps,
        });
    }
    Ok(bits.chunks_exact(bps).map(|g| map_group(m, g)).collect())
}

/// Hard-decision nearest-point demapping.
pub fn qam_demodulate(symbols: &[Complex64], m: Modulation) -> Vec<u8> {
    let bps = m.bits_per_symbol();
    let mut out = Vec::with_capacity(symbols.len() * bps);
    for s in symbols {
        demap_into(*s, m, &mut out);
    }
    out
}

/// Nearest level index on one axis; halfway points go to the lower index.
fn axis_index(x: f64, m: Modulation) -> usize {
    let side = m.side();
    let t = (x * m.scale() + (side as f64 - 1.0)) / 2.0;
    let idx = (t - 0.5).ceil();
    if idx.is_nan() {
        return 0;
    }
    idx.clamp(0.0, side as f64 - 1.0) as usize
}

pub(crate) fn demap_into(s: Complex64, m: Modulation, out: &mut Vec<u8>) {
    let tables = m.tables();
    let ib = &tables.bits_by_index[axis_index(s.re, m)];
    let qb = &tables.bits_by_index[axis_index(s.im, m)];
    for (i, q) in ib.iter().zip(qb) {
        out.push(*i);
        out.push(*q);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nr_reference_points() {
        // 000000 -> (3 + 3j)/sqrt(42); 111111 -> -(4 + (2 + 1)) on both axes
        let p = qam_modulate(&[0, 0, 0, 0, 0, 0], Modulation::Qam64).unwrap()[0];
        let k = 42f64.sqrt();
        assert!((p - Complex64::new(3.0 / k, 3.0 / k)).norm() < 1e-15);
        let p = qam_modulate(&[1, 1, 1, 1, 1, 1], Modulation::Qam64).unwrap()[0];
        assert!((p - Complex64::new(-7.0 / k, -7.0 / k)).norm() < 1e-15);
        let p = qam_modulate(&[0; 8], Modulation::Qam256).unwrap()[0];
        let k = 170f64.sqrt();
        assert!((p - Complex64::new(5.0 / k, 5.0 / k)).norm() < 1e-15);
    }

    #[test]
    fn unit_energy_and_distinct() {
        for m in [Modulation::Qam64, Modulation::Qam256] {
            let pts = m.points();
            assert_eq!(pts.len(), m.order());
            let e = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((e - 1.0).abs() < 1e-12);
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    assert!((pts[i] - pts[j]).norm() > 1e-9);
                }
            }
        }
    }

    #[test]
    fn min_distance_by_enumeration() {
        for m in [Modulation::Qam64, Modulation::Qam256] {
            let pts = m.points();
            let mut d = f64::INFINITY;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    d = d.min((pts[i] - pts[j]).norm());
                }
            }
            assert!((d - m.min_distance()).abs() < 1e-12);
        }
        assert!((Modulation::Qam64.min_distance() - 2.0 / 42f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gray_neighbors_differ_in_one_bit() {
        for m in [Modulation::Qam64, Modulation::Qam256] {
            let pts = m.points();
            let d = m.min_distance();
            for i in 0..pts.len() {
                for j in 0..pts.len() {
                    if ((pts[i] - pts[j]).norm() - d).abs() < 1e-9 {
                        assert_eq!((i ^ j).count_ones(), 1, "{m}: {i:b} vs {j:b}");
                    }
                }
            }
        }
    }

    #[test]
    fn ragged_block_rejected() {
        assert!(matches!(
            qam_modulate(&[0; 7], Modulation::Qam64),
            Err(Error::RaggedBlock { bits: 7, per_symbol: 6 })
        ));
    }

    #[test]
    fn perturbed_points_decode() {
        for m in [Modulation::Qam64, Modulation::Qam256] {
            let dmin = m.min_distance();
            let dir = Complex64::from_polar(0.49 * dmin, 0.7);
            for (v, p) in m.points().into_iter().enumerate() {
                let bps = m.bits_per_symbol();
                let want: Vec<u8> = (0..bps).map(|i| ((v >> (bps - 1 - i)) & 1) as u8).collect();
                assert_eq!(qam_demodulate(&[p + dir], m), want);
                assert_eq!(qam_demodulate(&[p - dir], m), want);
            }
        }
    }

    #[test]
    fn origin_tie_breaks_toward_lower_indices() {
        // four nearest points are (+-1 +-1j)/sqrt(42); the lower I and Q level
        // is -1, giving (-1 - 1j)/sqrt(42)
        let bits = qam_demodulate(&[Complex64::new(0.0, 0.0)], Modulation::Qam64);
        let back = qam_modulate(&bits, Modulation::Qam64).unwrap()[0];
        let k = 42f64.sqrt();
        assert!((back - Complex64::new(-1.0 / k, -1.0 / k)).norm() < 1e-15);
        assert_eq!(bits, vec![1, 1, 0, 0, 1, 1]);
    }

    #[test]
    fn far_outliers_clamp_to_corners() {
        let bits = qam_demodulate(&[Complex64::new(50.0, -50.0)], Modulation::Qam256);
        let back = qam_modulate(&bits, Modulation::Qam256).unwrap()[0];
        let k = 170f64.sqrt();
        assert!((back - Complex64::new(15.0 / k, -15.0 / k)).norm() < 1e-12);
    }
}
