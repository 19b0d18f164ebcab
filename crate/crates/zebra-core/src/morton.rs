//! Morton (Z-order) codes: lossless conversion between lattice points and a
//! single interleaved integer, plus inclusive code ranges for axis-aligned
//! boxes.
//!
//! Bit convention: interleaving proceeds round-robin over dimensions, low
//! bits first, with dimension 0 in the least-significant slot of each
//! round. For two equal-width dimensions this is the classic
//! `code = sum_j (x_j * 2^(2j) + y_j * 2^(2j+1))`, e.g. on an 8x8 grid the
//! points (1,4) and (5,6) encode to 33 and 57. Dimensions with fewer bits
//! simply drop out of later rounds.

use core::fmt;

use crate::quant::{LatticePoint, PointError, QuantizationConfig};

/// A Morton code: the bit-interleaved single-word image of a lattice point.
///
/// Codes order the lattice along the Z-order curve; comparing codes
/// compares curve positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MortonCode(u64);

impl MortonCode {
    /// Wrap a raw code value. No range check; use
    /// [`morton_decode`] to validate against a config.
    pub const fn from_raw(value: u64) -> Self {
        Self(value)
    }

    pub const fn value(self) -> u64 {
        self.0
    }
}

impl fmt::Display for MortonCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<MortonCode> for u64 {
    fn from(code: MortonCode) -> u64 {
        code.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MortonError {
    /// A lattice point does not fit the config (wrong arity or coordinate
    /// beyond its bit width).
    BadPoint(PointError),
    /// A code with bits above the config's total width.
    CodeOutOfRange { code: u64, max: u64 },
    /// Box corners with `lo > hi` in the named dimension.
    InvertedBox { dim: usize },
}

impl fmt::Display for MortonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MortonError::BadPoint(e) => write!(f, "invalid lattice point: {e}"),
            MortonError::CodeOutOfRange { code, max } => {
                write!(f, "code {code} exceeds maximum {max}")
            }
            MortonError::InvertedBox { dim } => {
                write!(f, "box is inverted in dimension {dim}")
            }
        }
    }
}

impl core::error::Error for MortonError {}

impl From<PointError> for MortonError {
    fn from(e: PointError) -> Self {
        MortonError::BadPoint(e)
    }
}

/// Interleave the coordinates of `point` into a Morton code.
pub fn morton_encode(
    point: &LatticePoint,
    config: &QuantizationConfig,
) -> Result<MortonCode, MortonError> {
    config.check_point(point.coords())?;
    Ok(MortonCode(encode_coords(point.coords(), config)))
}

/// De-interleave `code` back into the lattice point it came from.
pub fn morton_decode(
    code: MortonCode,
    config: &QuantizationConfig,
) -> Result<LatticePoint, MortonError> {
    if code.0 > config.max_code() {
        return Err(MortonError::CodeOutOfRange {
            code: code.0,
            max: config.max_code(),
        });
    }
    let mut coords = alloc::vec![0u64; config.dims()];
    decode_coords(code.0, config, &mut coords);
    Ok(LatticePoint::from_coords_unchecked(coords))
}

/// Inclusive code range covering the axis-aligned box `[lo, hi]`.
///
/// Every lattice point inside the box has a code within the returned range
/// (the curve never skips an in-box point), but the range may also contain
/// codes of outside points; callers filter those with [`code_in_box`].
pub fn box_to_code_range(
    lo: &LatticePoint,
    hi: &LatticePoint,
    config: &QuantizationConfig,
) -> Result<(MortonCode, MortonCode), MortonError> {
    config.check_point(lo.coords())?;
    config.check_point(hi.coords())?;
    for d in 0..config.dims() {
        if lo.coords()[d] > hi.coords()[d] {
            return Err(MortonError::InvertedBox { dim: d });
        }
    }
    Ok((
        MortonCode(encode_coords(lo.coords(), config)),
        MortonCode(encode_coords(hi.coords(), config)),
    ))
}

/// Does `code` decode to a point inside the box `[lo, hi]`?
///
/// This is the false-positive filter paired with [`box_to_code_range`].
pub fn code_in_box(
    code: MortonCode,
    lo: &LatticePoint,
    hi: &LatticePoint,
    config: &QuantizationConfig,
) -> Result<bool, MortonError> {
    config.check_point(lo.coords())?;
    config.check_point(hi.coords())?;
    for d in 0..config.dims() {
        if lo.coords()[d] > hi.coords()[d] {
            return Err(MortonError::InvertedBox { dim: d });
        }
    }
    if code.0 > config.max_code() {
        return Err(MortonError::CodeOutOfRange {
            code: code.0,
            max: config.max_code(),
        });
    }
    let mut coords = alloc::vec![0u64; config.dims()];
    decode_coords(code.0, config, &mut coords);
    Ok(coords_in_box(&coords, lo.coords(), hi.coords()))
}

#[inline]
pub(crate) fn coords_in_box(coords: &[u64], lo: &[u64], hi: &[u64]) -> bool {
    coords
        .iter()
        .zip(lo.iter().zip(hi))
        .all(|(&c, (&l, &h))| l <= c && c <= h)
}

/// Encode without validation; callers guarantee the coordinates fit.
#[inline]
pub(crate) fn encode_coords(coords: &[u64], config: &QuantizationConfig) -> u64 {
    if equal_2d_bits(config).is_some() {
        return spread2(coords[0]) | (spread2(coords[1]) << 1);
    }
    let mut code = 0u64;
    let mut pos = 0u32;
    let mut level = 0u32;
    let mut remaining = config.dims();
    while remaining > 0 {
        remaining = 0;
        for (d, spec) in config.dim_specs().iter().enumerate() {
            if spec.bits > level {
                code |= ((coords[d] >> level) & 1) << pos;
                pos += 1;
                if spec.bits > level + 1 {
                    remaining += 1;
                }
            }
        }
        level += 1;
    }
    code
}

/// Decode without validation; `code` must fit the config's total width.
#[inline]
pub(crate) fn decode_coords(code: u64, config: &QuantizationConfig, out: &mut [u64]) {
    if equal_2d_bits(config).is_some() {
        out[0] = compact2(code);
        out[1] = compact2(code >> 1);
        return;
    }
    for c in out.iter_mut() {
        *c = 0;
    }
    let mut pos = 0u32;
    let mut level = 0u32;
    let mut remaining = config.dims();
    while remaining > 0 {
        remaining = 0;
        for (d, spec) in config.dim_specs().iter().enumerate() {
            if spec.bits > level {
                out[d] |= ((code >> pos) & 1) << level;
                pos += 1;
                if spec.bits > level + 1 {
                    remaining += 1;
                }
            }
        }
        level += 1;
    }
}

/// Fast path applies to the common case of two equal-width dimensions.
#[inline]
fn equal_2d_bits(config: &QuantizationConfig) -> Option<u32> {
    if config.dims() == 2 {
        let b0 = config.dim(0).bits;
        if b0 == config.dim(1).bits && b0 <= 32 {
            return Some(b0 * 2);
        }
    }
    None
}

/// Spread the low 32 bits of `x` so bit j lands at position 2j.
#[inline]
fn spread2(x: u64) -> u64 {
    let mut x = x & 0xFFFF_FFFF;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555;
    x
}

/// Inverse of [`spread2`]: collect every second bit starting at position 0.
#[inline]
fn compact2(x: u64) -> u64 {
    let mut x = x & 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x >> 4)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x >> 8)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x >> 16)) & 0x0000_0000_FFFF_FFFF;
    x
}
