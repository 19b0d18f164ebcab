//! Quantization of real-valued sample vectors onto an unsigned integer
//! lattice.
//!
//! Each dimension maps affinely from `[min, max]` to `[0, 2^bits - 1]` with
//! round-half-up; out-of-range values are clamped to the boundary rather
//! than rejected, so sensor spikes survive as extreme lattice points.

use alloc::vec::Vec;
use core::fmt;

/// Per-dimension quantization parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DimSpec {
    /// Lower bound of the representable value range (signal units).
    pub min: f64,
    /// Upper bound of the representable value range (signal units).
    pub max: f64,
    /// Lattice resolution: coordinates occupy `[0, 2^bits - 1]`.
    pub bits: u32,
}

impl DimSpec {
    pub fn new(min: f64, max: f64, bits: u32) -> Self {
        Self { min, max, bits }
    }

    /// Width of one quantization cell: `(max - min) / (2^bits - 1)`.
    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.max_coord() as f64
    }

    /// Largest representable coordinate, `2^bits - 1`.
    pub fn max_coord(&self) -> u64 {
        if self.bits >= 64 {
            u64::MAX
        } else {
            (1u64 << self.bits) - 1
        }
    }
}

/// Affine lattice mapping for all dimensions of a store.
///
/// Invariants are checked at construction: at least one dimension,
/// `min < max` and `1 <= bits` per dimension, finite bounds, and a total
/// bit count of at most 64 so every code fits one machine word.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationConfig {
    dims: Vec<DimSpec>,
    total_bits: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    /// A config needs at least one dimension.
    NoDims,
    /// `min`/`max` of the named dimension are not finite.
    NonFiniteBound { dim: usize },
    /// `min >= max` for the named dimension.
    EmptyRange { dim: usize },
    /// A dimension must contribute at least one bit.
    ZeroBits { dim: usize },
    /// The widths of all dimensions exceed one 64-bit word.
    TooManyBits { total: u64 },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::NoDims => write!(f, "config has zero dimensions"),
            ConfigError::NonFiniteBound { dim } => {
                write!(f, "dimension {dim}: min/max must be finite")
            }
            ConfigError::EmptyRange { dim } => {
                write!(f, "dimension {dim}: min must be less than max")
            }
            ConfigError::ZeroBits { dim } => {
                write!(f, "dimension {dim}: bit width must be at least 1")
            }
            ConfigError::TooManyBits { total } => {
                write!(f, "total bit width {total} exceeds 64")
            }
        }
    }
}

impl core::error::Error for ConfigError {}

/// Error for vectors or points that do not fit a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointError {
    DimMismatch { expected: usize, got: usize },
    CoordOutOfRange { dim: usize, coord: u64, max: u64 },
    NonFiniteValue { dim: usize },
}

impl fmt::Display for PointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointError::DimMismatch { expected, got } => {
                write!(f, "expected {expected} dimensions, got {got}")
            }
            PointError::CoordOutOfRange { dim, coord, max } => {
                write!(f, "dimension {dim}: coordinate {coord} exceeds {max}")
            }
            PointError::NonFiniteValue { dim } => {
                write!(f, "dimension {dim}: value must be finite")
            }
        }
    }
}

impl core::error::Error for PointError {}

impl QuantizationConfig {
    pub fn new(dims: Vec<DimSpec>) -> Result<Self, ConfigError> {
        if dims.is_empty() {
            return Err(ConfigError::NoDims);
        }
        let mut total: u64 = 0;
        for (i, d) in dims.iter().enumerate() {
            if !d.min.is_finite() || !d.max.is_finite() {
                return Err(ConfigError::NonFiniteBound { dim: i });
            }
            if d.min >= d.max {
                return Err(ConfigError::EmptyRange { dim: i });
            }
            if d.bits == 0 {
                return Err(ConfigError::ZeroBits { dim: i });
            }
            total += d.bits as u64;
        }
        if total > 64 {
            return Err(ConfigError::TooManyBits { total });
        }
        Ok(Self {
            dims,
            total_bits: total as u32,
        })
    }

    /// Uniform helper: `dims` dimensions sharing one range and bit width.
    pub fn uniform(dims: usize, min: f64, max: f64, bits: u32) -> Result<Self, ConfigError> {
        Self::new((0..dims).map(|_| DimSpec::new(min, max, bits)).collect())
    }

    pub fn dims(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, d: usize) -> &DimSpec {
        &self.dims[d]
    }

    pub fn dim_specs(&self) -> &[DimSpec] {
        &self.dims
    }

    /// Sum of all per-dimension bit widths (<= 64).
    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    /// Largest valid Morton code under this config.
    pub fn max_code(&self) -> u64 {
        if self.total_bits >= 64 {
            u64::MAX
        } else {
            (1u64 << self.total_bits) - 1
        }
    }

    /// Quantize one value in dimension `d`, clamping to the range bounds.
    pub fn quantize_dim(&self, d: usize, value: f64) -> u64 {
        let spec = &self.dims[d];
        let v = value.clamp(spec.min, spec.max);
        let scaled = (v - spec.min) / (spec.max - spec.min) * spec.max_coord() as f64;
        // Round half up. `scaled` is non-negative after clamping, so the
        // saturating float-to-int cast truncates toward zero like floor.
        let coord = (scaled + 0.5) as u64;
        coord.min(spec.max_coord())
    }

    /// Representative value of lattice cell `coord` in dimension `d`.
    pub fn dequantize_dim(&self, d: usize, coord: u64) -> f64 {
        let spec = &self.dims[d];
        spec.min + coord as f64 * spec.step()
    }

    /// Quantize a full sample vector into a lattice point.
    ///
    /// Values are clamped per dimension; the vector length must match the
    /// config and all values must be finite.
    pub fn quantize(&self, values: &[f64]) -> Result<LatticePoint, PointError> {
        self.check_values(values)?;
        let coords = (0..self.dims())
            .map(|d| self.quantize_dim(d, values[d]))
            .collect();
        Ok(LatticePoint { coords })
    }

    /// Quantize into a caller-provided buffer, avoiding allocation on hot
    /// paths. `out` must have the config's dimension count.
    pub fn quantize_into(&self, values: &[f64], out: &mut [u64]) -> Result<(), PointError> {
        self.check_values(values)?;
        debug_assert_eq!(out.len(), self.dims());
        for d in 0..self.dims() {
            out[d] = self.quantize_dim(d, values[d]);
        }
        Ok(())
    }

    /// Map a lattice point back to the representative sample vector.
    pub fn dequantize(&self, point: &LatticePoint) -> Result<Vec<f64>, PointError> {
        self.check_point(&point.coords)?;
        Ok((0..self.dims())
            .map(|d| self.dequantize_dim(d, point.coords[d]))
            .collect())
    }

    pub(crate) fn check_values(&self, values: &[f64]) -> Result<(), PointError> {
        if values.len() != self.dims() {
            return Err(PointError::DimMismatch {
                expected: self.dims(),
                got: values.len(),
            });
        }
        for (d, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(PointError::NonFiniteValue { dim: d });
            }
        }
        Ok(())
    }

    pub(crate) fn check_point(&self, coords: &[u64]) -> Result<(), PointError> {
        if coords.len() != self.dims() {
            return Err(PointError::DimMismatch {
                expected: self.dims(),
                got: coords.len(),
            });
        }
        for (d, &c) in coords.iter().enumerate() {
            let max = self.dims[d].max_coord();
            if c > max {
                return Err(PointError::CoordOutOfRange { dim: d, coord: c, max });
            }
        }
        Ok(())
    }
}

/// A point on the quantization lattice; `coords[d] < 2^bits(d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticePoint {
    coords: Vec<u64>,
}

impl LatticePoint {
    /// Build a point, validating length and per-dimension range against
    /// `config`.
    pub fn new(coords: Vec<u64>, config: &QuantizationConfig) -> Result<Self, PointError> {
        config.check_point(&coords)?;
        Ok(Self { coords })
    }

    pub(crate) fn from_coords_unchecked(coords: Vec<u64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn dims(&self) -> usize {
        self.coords.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_2d_8bit() -> QuantizationConfig {
        QuantizationConfig::uniform(2, -10.0, 10.0, 8).unwrap()
    }

    #[test]
    fn rejects_bad_configs() {
        assert_eq!(QuantizationConfig::new(Vec::new()), Err(ConfigError::NoDims));
        assert_eq!(
            QuantizationConfig::uniform(1, 3.0, 3.0, 8),
            Err(ConfigError::EmptyRange { dim: 0 })
        );
        assert_eq!(
            QuantizationConfig::uniform(1, 5.0, 2.0, 8),
            Err(ConfigError::EmptyRange { dim: 0 })
        );
        assert_eq!(
            QuantizationConfig::uniform(2, 0.0, 1.0, 0),
            Err(ConfigError::ZeroBits { dim: 0 })
        );
        assert_eq!(
            QuantizationConfig::uniform(2, 0.0, 1.0, 33),
            Err(ConfigError::TooManyBits { total: 66 })
        );
        assert_eq!(
            QuantizationConfig::new(vec![DimSpec::new(f64::NAN, 1.0, 8)]),
            Err(ConfigError::NonFiniteBound { dim: 0 })
        );
    }

    #[test]
    fn bounds_map_to_lattice_corners() {
        let cfg = cfg_2d_8bit();
        let lo = cfg.quantize(&[-10.0, -10.0]).unwrap();
        assert_eq!(lo.coords(), &[0, 0]);
        let hi = cfg.quantize(&[10.0, 10.0]).unwrap();
        assert_eq!(hi.coords(), &[255, 255]);
    }

    #[test]
    fn midpoint_rounds_half_up() {
        // (0 - (-10)) / 20 * 255 = 127.5, which rounds up to 128.
        let cfg = cfg_2d_8bit();
        let p = cfg.quantize(&[0.0, 0.0]).unwrap();
        assert_eq!(p.coords(), &[128, 128]);

        // Scalar brute force over the affine formula for a sweep of values.
        for i in 0..=400 {
            let v = -10.0 + i as f64 * 0.05;
            let expected = {
                let scaled = (v + 10.0) / 20.0 * 255.0;
                let mut c = 0u64;
                while (c as f64) + 0.5 <= scaled {
                    c += 1;
                }
                c.min(255)
            };
            assert_eq!(cfg.quantize_dim(0, v), expected, "v = {v}");
        }
    }

    #[test]
    fn out_of_range_values_clamp() {
        let cfg = cfg_2d_8bit();
        assert_eq!(cfg.quantize(&[-1e9, 1e9]).unwrap().coords(), &[0, 255]);
    }

    #[test]
    fn rejects_mismatched_or_non_finite_vectors() {
        let cfg = cfg_2d_8bit();
        assert_eq!(
            cfg.quantize(&[0.0]),
            Err(PointError::DimMismatch { expected: 2, got: 1 })
        );
        assert_eq!(
            cfg.quantize(&[0.0, f64::INFINITY]),
            Err(PointError::NonFiniteValue { dim: 1 })
        );
    }

    #[test]
    fn dequantize_returns_cell_representative() {
        let cfg = cfg_2d_8bit();
        let p = LatticePoint::new(vec![0, 255], &cfg).unwrap();
        let v = cfg.dequantize(&p).unwrap();
        assert_eq!(v, vec![-10.0, 10.0]);
    }

    #[test]
    fn quantization_error_within_half_step() {
        let cfg = cfg_2d_8bit();
        let step = cfg.dim(0).step();
        for i in 0..=2000 {
            let v = -10.0 + i as f64 * 0.01;
            let c = cfg.quantize_dim(0, v);
            let back = cfg.dequantize_dim(0, c);
            assert!(
                (back - v).abs() <= step * 0.5000001,
                "v = {v}, back = {back}"
            );
        }
    }

    #[test]
    fn point_validation() {
        let cfg = cfg_2d_8bit();
        assert!(LatticePoint::new(vec![255, 255], &cfg).is_ok());
        assert_eq!(
            LatticePoint::new(vec![256, 0], &cfg),
            Err(PointError::CoordOutOfRange { dim: 0, coord: 256, max: 255 })
        );
        assert_eq!(
            LatticePoint::new(vec![0], &cfg),
            Err(PointError::DimMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn single_dim_64_bits_is_accepted() {
        let cfg = QuantizationConfig::uniform(1, 0.0, 1.0, 64).unwrap();
        assert_eq!(cfg.total_bits(), 64);
        assert_eq!(cfg.max_code(), u64::MAX);
        assert_eq!(cfg.quantize_dim(0, 0.0), 0);
    }
}
