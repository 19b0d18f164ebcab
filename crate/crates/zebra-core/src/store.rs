//! Timestamp-keyed sample store with a Morton-code secondary index.
//!
//! Samples are kept in ingest (time) order; the index is the array of
//! `(code, timestamp)` pairs sorted once at build time. Code-range scans
//! cost a binary search plus the matches; time-range lookups binary search
//! the timestamp column. All queries are read-only, so a built store can
//! serve any number of concurrent readers.

use alloc::vec::Vec;
use core::fmt;

use crate::morton::{self, MortonCode};
use crate::quant::{PointError, QuantizationConfig};

/// One stored sample: timestamp key plus the measurement vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<'a> {
    pub t_ms: i64,
    pub values: &'a [f64],
}

/// One secondary-index entry. Entries sort by `(code, t_ms)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexEntry {
    pub code: MortonCode,
    pub t_ms: i64,
}

/// Store metadata: everything needed to open the persisted form.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub format_version: u32,
    pub config: QuantizationConfig,
    pub entry_count: u64,
    pub t_min_ms: i64,
    pub t_max_ms: i64,
}

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum StoreError {
    /// Sample vector does not fit the config.
    BadSample(PointError),
    /// Timestamps must be strictly increasing within one recording.
    NonMonotonicTimestamp { prev: i64, next: i64 },
    /// Query range with `lo > hi`.
    InvertedRange { lo: i64, hi: i64 },
    /// Query code range with `lo > hi`.
    InvertedCodeRange { lo: u64, hi: u64 },
    /// Spectrum bucket width must be at least 1 ms.
    BadBucket { bucket_ms: i64 },
}

impl fmt::Display for StoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoreError::BadSample(e) => write!(f, "bad sample: {e}"),
            StoreError::NonMonotonicTimestamp { prev, next } => write!(
                f,
                "timestamp {next} does not increase over its predecessor {prev}"
            ),
            StoreError::InvertedRange { lo, hi } => {
                write!(f, "inverted time range: {lo} > {hi}")
            }
            StoreError::InvertedCodeRange { lo, hi } => {
                write!(f, "inverted code range: {lo} > {hi}")
            }
            StoreError::BadBucket { bucket_ms } => {
                write!(f, "bucket width must be >= 1 ms, got {bucket_ms}")
            }
        }
    }
}

impl core::error::Error for StoreError {}

impl From<PointError> for StoreError {
    fn from(e: PointError) -> Self {
        StoreError::BadSample(e)
    }
}

/// Inconsistency found by [`Store::audit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuditError {
    CountMismatch { samples: usize, index: usize },
    UnsortedIndex { position: usize },
    EntryMismatch { position: usize },
}

impl fmt::Display for AuditError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuditError::CountMismatch { samples, index } => {
                write!(f, "{samples} samples but {index} index entries")
            }
            AuditError::UnsortedIndex { position } => {
                write!(f, "index entry {position} is out of order")
            }
            AuditError::EntryMismatch { position } => write!(
                f,
                "index entry {position} does not match any recomputed sample code"
            ),
        }
    }
}

impl core::error::Error for AuditError {}

/// Single-writer construction; sorting happens once in [`finish`].
///
/// [`finish`]: StoreBuilder::finish
pub struct StoreBuilder {
    config: QuantizationConfig,
    ts: Vec<i64>,
    values: Vec<f64>,
    entries: Vec<(u64, i64)>,
    scratch: Vec<u64>,
}

impl StoreBuilder {
    pub fn new(config: QuantizationConfig) -> Self {
        let dims = config.dims();
        Self {
            config,
            ts: Vec::new(),
            values: Vec::new(),
            entries: Vec::new(),
            scratch: alloc::vec![0; dims],
        }
    }

    pub fn with_capacity(config: QuantizationConfig, samples: usize) -> Self {
        let dims = config.dims();
        Self {
            config,
            ts: Vec::with_capacity(samples),
            values: Vec::with_capacity(samples * dims),
            entries: Vec::with_capacity(samples),
            scratch: alloc::vec![0; dims],
        }
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    /// Append one sample; timestamps must strictly increase.
    pub fn push(&mut self, t_ms: i64, values: &[f64]) -> Result<(), StoreError> {
        if let Some(&prev) = self.ts.last() {
            if t_ms <= prev {
                return Err(StoreError::NonMonotonicTimestamp { prev, next: t_ms });
            }
        }
        self.config.quantize_into(values, &mut self.scratch)?;
        let code = morton::encode_coords(&self.scratch, &self.config);
        self.ts.push(t_ms);
        self.values.extend_from_slice(values);
        self.entries.push((code, t_ms));
        Ok(())
    }

    /// Sort the index and seal the store.
    pub fn finish(mut self) -> Store {
        self.entries.sort_unstable();
        Store {
            config: self.config,
            ts: self.ts,
            values: self.values,
            index: self.entries,
        }
    }
}

/// An immutable sample store plus its sorted code index.
#[derive(Debug, Clone, PartialEq)]
pub struct Store {
    config: QuantizationConfig,
    ts: Vec<i64>,
    values: Vec<f64>,
    /// `(code, t_ms)`, sorted ascending.
    index: Vec<(u64, i64)>,
}

impl Store {
    pub fn builder(config: QuantizationConfig) -> StoreBuilder {
        StoreBuilder::new(config)
    }

    /// Reassemble a store from persisted parts. The index must already be
    /// `(code, t)`-sorted; use [`Store::audit`] to verify untrusted input.
    pub fn from_parts(
        config: QuantizationConfig,
        ts: Vec<i64>,
        values: Vec<f64>,
        index: Vec<(u64, i64)>,
    ) -> Self {
        Self {
            config,
            ts,
            values,
            index,
        }
    }

    pub fn config(&self) -> &QuantizationConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.ts
    }

    pub fn sample(&self, i: usize) -> Sample<'_> {
        let dims = self.config.dims();
        Sample {
            t_ms: self.ts[i],
            values: &self.values[i * dims..(i + 1) * dims],
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample<'_>> + '_ {
        (0..self.len()).map(move |i| self.sample(i))
    }

    pub fn index_entries(&self) -> impl Iterator<Item = IndexEntry> + '_ {
        self.index.iter().map(|&(code, t_ms)| IndexEntry {
            code: MortonCode::from_raw(code),
            t_ms,
        })
    }

    /// The sorted `(code, t)` pairs backing the index, e.g. for
    /// persistence.
    pub fn raw_index(&self) -> &[(u64, i64)] {
        &self.index
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            entry_count: self.len() as u64,
            t_min_ms: self.ts.first().copied().unwrap_or(0),
            t_max_ms: self.ts.last().copied().unwrap_or(0),
        }
    }

    /// All samples with `t0 <= t < t1`, ascending by time.
    pub fn lookup_time_range(
        &self,
        t0_ms: i64,
        t1_ms: i64,
    ) -> Result<impl Iterator<Item = Sample<'_>> + '_, StoreError> {
        if t0_ms > t1_ms {
            return Err(StoreError::InvertedRange { lo: t0_ms, hi: t1_ms });
        }
        let lo = self.ts.partition_point(|&t| t < t0_ms);
        let hi = self.ts.partition_point(|&t| t < t1_ms);
        Ok((lo..hi).map(move |i| self.sample(i)))
    }

    /// All index entries with `c_lo <= code <= c_hi`, in `(code, t)` order.
    /// Binary search plus the matches; never a full pass over the index.
    pub fn scan_code_range(
        &self,
        c_lo: MortonCode,
        c_hi: MortonCode,
    ) -> Result<impl Iterator<Item = IndexEntry> + '_, StoreError> {
        if c_lo > c_hi {
            return Err(StoreError::InvertedCodeRange {
                lo: c_lo.value(),
                hi: c_hi.value(),
            });
        }
        let slice = self.code_range_slice(c_lo, c_hi);
        Ok(slice.iter().map(|&(code, t_ms)| IndexEntry {
            code: MortonCode::from_raw(code),
            t_ms,
        }))
    }

    pub(crate) fn code_range_slice(&self, c_lo: MortonCode, c_hi: MortonCode) -> &[(u64, i64)] {
        let lo = self.index.partition_point(|&(c, _)| c < c_lo.value());
        let hi = self.index.partition_point(|&(c, _)| c <= c_hi.value());
        &self.index[lo..hi]
    }

    /// One `(bucketed time, code)` pair per sample in time order, for
    /// stripe ("zebra spectrum") plotting.
    pub fn spectrum(
        &self,
        bucket_ms: i64,
    ) -> Result<impl Iterator<Item = (i64, MortonCode)> + '_, StoreError> {
        if bucket_ms < 1 {
            return Err(StoreError::BadBucket { bucket_ms });
        }
        let mut scratch = alloc::vec![0u64; self.config.dims()];
        Ok((0..self.len()).map(move |i| {
            let s = self.sample(i);
            self.config
                .quantize_into(s.values, &mut scratch)
                .expect("stored samples fit the config");
            let code = morton::encode_coords(&scratch, &self.config);
            (s.t_ms.div_euclid(bucket_ms) * bucket_ms, MortonCode::from_raw(code))
        }))
    }

    /// Full consistency audit: index cardinality equals the sample count,
    /// the index is sorted, and the multiset of index entries equals the
    /// codes recomputed from every sample.
    pub fn audit(&self) -> Result<(), AuditError> {
        if self.index.len() != self.ts.len() {
            return Err(AuditError::CountMismatch {
                samples: self.ts.len(),
                index: self.index.len(),
            });
        }
        for (i, w) in self.index.windows(2).enumerate() {
            if w[0] > w[1] {
                return Err(AuditError::UnsortedIndex { position: i + 1 });
            }
        }
        let mut recomputed: Vec<(u64, i64)> = Vec::with_capacity(self.len());
        let mut scratch = alloc::vec![0u64; self.config.dims()];
        for s in self.samples() {
            self.config
                .quantize_into(s.values, &mut scratch)
                .expect("stored samples fit the config");
            recomputed.push((morton::encode_coords(&scratch, &self.config), s.t_ms));
        }
        recomputed.sort_unstable();
        for (i, (a, b)) in recomputed.iter().zip(self.index.iter()).enumerate() {
            if a != b {
                return Err(AuditError::EntryMismatch { position: i });
            }
        }
        Ok(())
    }
}
