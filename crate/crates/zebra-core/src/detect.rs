//! The three event detectors: two brute-force baselines and the
//! index-backed one. All three are guaranteed to return identical event
//! lists for the same store and mask.
//!
//! Stage membership is decided on the quantization lattice: a sample is in
//! a stage when its quantized coordinates lie inside the quantized stage
//! box. The brute-force detectors share this predicate with the index path
//! (which can only see lattice codes), so their outputs agree bit for bit
//! even for samples sitting on a box edge.

use alloc::vec::Vec;
use core::fmt;

use crate::mask::{Event, SearchMask, TemporalParams};
use crate::morton::{self, MortonCode};
use crate::quant::QuantizationConfig;
use crate::segment::{chain_stages, segments_from_times, Segment};
use crate::store::Store;

/// Which detector implementation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    /// Full sequential scan of the store per mask stage.
    BfPrimitive,
    /// One pass for the first stage, bounded forward matching for the rest.
    BfImproved,
    /// Code-range scans over the Morton index plus a false-positive filter.
    Sfc,
}

impl Detector {
    pub const ALL: [Detector; 3] = [Detector::BfPrimitive, Detector::BfImproved, Detector::Sfc];

    pub fn name(self) -> &'static str {
        match self {
            Detector::BfPrimitive => "bf_primitive",
            Detector::BfImproved => "bf_improved",
            Detector::Sfc => "sfc",
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DetectError {
    DimMismatch { store: usize, mask: usize },
}

impl fmt::Display for DetectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectError::DimMismatch { store, mask } => {
                write!(f, "store has {store} dimensions but mask has {mask}")
            }
        }
    }
}

impl core::error::Error for DetectError {}

/// Per-stage cost counters of one index-backed detection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageScan {
    /// Inclusive code range scanned for this stage.
    pub code_range: (u64, u64),
    /// Index entries inside the range (candidates examined).
    pub candidates: usize,
    /// Candidates that survived the box filter.
    pub matched: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SfcStats {
    pub stages: Vec<StageScan>,
}

/// Run the chosen detector. All detectors return the same events, sorted
/// by start time.
pub fn detect(
    detector: Detector,
    store: &Store,
    mask: &SearchMask,
) -> Result<Vec<Event>, DetectError> {
    match detector {
        Detector::BfPrimitive => bf_primitive(store, mask),
        Detector::BfImproved => bf_improved(store, mask),
        Detector::Sfc => sfc(store, mask),
    }
}

/// Brute force baseline: one full store traversal per stage, then segment
/// construction and stage chaining. Serves as the ground-truth oracle for
/// the other two detectors.
pub fn bf_primitive(store: &Store, mask: &SearchMask) -> Result<Vec<Event>, DetectError> {
    let lattice = LatticeMask::new(store, mask)?;
    let mut scratch = alloc::vec![0u64; store.config().dims()];
    let per_stage: Vec<Vec<Segment>> = (0..lattice.stage_count())
        .map(|s| {
            let times = lattice.stage_times_scan(s, &mut scratch);
            segments_from_times(&times, mask.params())
        })
        .collect();
    Ok(chain_stages(&per_stage, mask.params()))
}

/// Improved brute force: a single forward pass builds first-stage runs on
/// the fly; each completed run of valid duration triggers a recursive
/// forward search for the remaining stages, starting at the run end plus
/// the minimum gap (which may step backwards).
pub fn bf_improved(store: &Store, mask: &SearchMask) -> Result<Vec<Event>, DetectError> {
    let lattice = LatticeMask::new(store, mask)?;
    let params = *mask.params();
    let mut scratch = alloc::vec![0u64; store.config().dims()];
    let mut events = Vec::new();

    let ts = store.timestamps();
    let mut run: Option<(i64, i64)> = None; // (first, last) matching times
    for (i, &t) in ts.iter().enumerate() {
        if let Some((first, last)) = run {
            if t - last > params.max_outlier_gap_ms {
                close_first_stage_run(
                    first, last, &lattice, &params, &mut scratch, &mut events,
                );
                run = None;
            }
        }
        if lattice.sample_matches(0, store.sample(i).values, &mut scratch) {
            run = match run {
                None => Some((t, t)),
                Some((first, _)) => Some((first, t)),
            };
        }
    }
    if let Some((first, last)) = run {
        close_first_stage_run(first, last, &lattice, &params, &mut scratch, &mut events);
    }
    Ok(events)
}

fn close_first_stage_run(
    first: i64,
    last: i64,
    lattice: &LatticeMask<'_>,
    params: &TemporalParams,
    scratch: &mut [u64],
    events: &mut Vec<Event>,
) {
    let span = last - first;
    if span < params.min_duration_ms || span > params.max_duration_ms {
        return;
    }
    if let Some(end) = lattice.chase(last, 1, params, scratch) {
        events.push(Event {
            t_start_ms: first,
            t_end_ms: end,
        });
    }
}

/// Index-backed detector: per stage, the quantized box corners give an
/// inclusive code range; the range scan's candidates are filtered through
/// the box check, the surviving time points sorted, and the rest of the
/// pipeline is exactly the brute-force one.
pub fn sfc(store: &Store, mask: &SearchMask) -> Result<Vec<Event>, DetectError> {
    sfc_with_stats(store, mask).map(|(events, _)| events)
}

/// [`sfc`] variant reporting how much of the index each stage examined.
pub fn sfc_with_stats(
    store: &Store,
    mask: &SearchMask,
) -> Result<(Vec<Event>, SfcStats), DetectError> {
    let lattice = LatticeMask::new(store, mask)?;
    let mut scratch = alloc::vec![0u64; store.config().dims()];
    let mut stats = SfcStats::default();
    let per_stage: Vec<Vec<Segment>> = (0..lattice.stage_count())
        .map(|s| {
            let (times, scan) = lattice.stage_times_index(s, &mut scratch);
            stats.stages.push(scan);
            segments_from_times(&times, mask.params())
        })
        .collect();
    Ok((chain_stages(&per_stage, mask.params()), stats))
}

/// A mask quantized onto one store's lattice.
struct LatticeMask<'a> {
    store: &'a Store,
    config: &'a QuantizationConfig,
    /// Per stage: (lattice lo, lattice hi, code lo, code hi).
    stages: Vec<(Vec<u64>, Vec<u64>, u64, u64)>,
}

impl<'a> LatticeMask<'a> {
    fn new(store: &'a Store, mask: &SearchMask) -> Result<Self, DetectError> {
        let config = store.config();
        if mask.dims() != config.dims() {
            return Err(DetectError::DimMismatch {
                store: config.dims(),
                mask: mask.dims(),
            });
        }
        let stages = mask
            .stages()
            .iter()
            .map(|stage| {
                // Mask corners are finite and of matching arity, so
                // quantization cannot fail; out-of-range corners clamp.
                let lo: Vec<u64> = (0..config.dims())
                    .map(|d| config.quantize_dim(d, stage.lo()[d]))
                    .collect();
                let hi: Vec<u64> = (0..config.dims())
                    .map(|d| config.quantize_dim(d, stage.hi()[d]))
                    .collect();
                let c_lo = morton::encode_coords(&lo, config);
                let c_hi = morton::encode_coords(&hi, config);
                (lo, hi, c_lo, c_hi)
            })
            .collect();
        Ok(Self {
            store,
            config,
            stages,
        })
    }

    fn stage_count(&self) -> usize {
        self.stages.len()
    }

    #[inline]
    fn sample_matches(&self, stage: usize, values: &[f64], scratch: &mut [u64]) -> bool {
        self.config
            .quantize_into(values, scratch)
            .expect("stored samples fit the config");
        let (lo, hi, _, _) = &self.stages[stage];
        morton::coords_in_box(scratch, lo, hi)
    }

    /// Stage time points by full sequential scan.
    fn stage_times_scan(&self, stage: usize, scratch: &mut [u64]) -> Vec<i64> {
        let mut times = Vec::new();
        for sample in self.store.samples() {
            if self.sample_matches(stage, sample.values, scratch) {
                times.push(sample.t_ms);
            }
        }
        times
    }

    /// Stage time points via the Morton index: range scan, box filter,
    /// sort by time.
    fn stage_times_index(&self, stage: usize, scratch: &mut [u64]) -> (Vec<i64>, StageScan) {
        let (lo, hi, c_lo, c_hi) = &self.stages[stage];
        let slice = self
            .store
            .code_range_slice(MortonCode::from_raw(*c_lo), MortonCode::from_raw(*c_hi));
        let mut times = Vec::new();
        for &(code, t_ms) in slice {
            morton::decode_coords(code, self.config, scratch);
            if morton::coords_in_box(scratch, lo, hi) {
                times.push(t_ms);
            }
        }
        times.sort_unstable();
        let scan = StageScan {
            code_range: (*c_lo, *c_hi),
            candidates: slice.len(),
            matched: times.len(),
        };
        (times, scan)
    }

    /// Earliest-first recursive matching of stages `stage..` after a
    /// segment ending at `prev_end`. Returns the end of the first complete
    /// chain.
    fn chase(
        &self,
        prev_end: i64,
        stage: usize,
        params: &TemporalParams,
        scratch: &mut [u64],
    ) -> Option<i64> {
        if stage == self.stage_count() {
            return Some(prev_end);
        }
        let w_lo = prev_end + params.min_gap_ms;
        let w_hi = prev_end + params.max_gap_ms;
        let ts = self.store.timestamps();
        let mut pos = ts.partition_point(|&t| t < w_lo);
        loop {
            // Next matching sample at or after `pos`, no further than the
            // window end: a run starting inside the window must place its
            // first match inside the window.
            while pos < ts.len()
                && ts[pos] <= w_hi
                && !self.sample_matches(stage, self.store.sample(pos).values, scratch)
            {
                pos += 1;
            }
            if pos >= ts.len() || ts[pos] > w_hi {
                return None;
            }
            // The run containing this match may have started before the
            // window: extend backwards over matches within the outlier
            // tolerance and skip the whole run if so.
            let first = self.run_start(stage, pos, params, scratch);
            let last = self.run_end(stage, first, params, scratch);
            if ts[first] >= w_lo {
                let span = ts[last] - ts[first];
                if params.min_duration_ms <= span && span <= params.max_duration_ms {
                    if let Some(end) = self.chase(ts[last], stage + 1, params, scratch) {
                        return Some(end);
                    }
                }
            }
            pos = last + 1;
        }
    }

    /// Walk backwards from a matching sample to the first match of its
    /// maximal run.
    fn run_start(
        &self,
        stage: usize,
        match_pos: usize,
        params: &TemporalParams,
        scratch: &mut [u64],
    ) -> usize {
        let ts = self.store.timestamps();
        let mut first = match_pos;
        let mut pos = match_pos;
        while pos > 0 {
            pos -= 1;
            if ts[pos] < ts[first] - params.max_outlier_gap_ms {
                break;
            }
            if self.sample_matches(stage, self.store.sample(pos).values, scratch) {
                first = pos;
            }
        }
        first
    }

    /// Walk forwards from the first match of a run to its last match.
    fn run_end(
        &self,
        stage: usize,
        first: usize,
        params: &TemporalParams,
        scratch: &mut [u64],
    ) -> usize {
        let ts = self.store.timestamps();
        let mut last = first;
        let mut pos = first + 1;
        while pos < ts.len() && ts[pos] - ts[last] <= params.max_outlier_gap_ms {
            if self.sample_matches(stage, self.store.sample(pos).values, scratch) {
                last = pos;
            }
            pos += 1;
        }
        last
    }
}
