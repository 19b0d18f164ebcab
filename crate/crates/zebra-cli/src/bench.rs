//! Query benchmark harness: detector x mask x store-size matrix with
//! equivalence checking, median-of-repetitions timing and grouped
//! summaries.
//!
//! The transform (generate, quantize, index, persist) runs once per store
//! and its cost is reported separately from query time: queries reuse the
//! built index unchanged.

use std::time::Instant;

use rand_core::{RngCore, SeedableRng};

use zebra_core::detect::{self, Detector};
use zebra_core::mask::{self, Event, SearchMask};
use zebra_core::store::Store;

use crate::synth::{Maneuver, ManeuverKind, ScenarioSpec, MANEUVER_WIDTH_MS};

/// Value bounds the random mask generator samples within; matches the
/// benchmark stores' quantization range.
pub const BENCH_BOUNDS: [(f64, f64); 2] = [(-12.0, 12.0), (-12.0, 12.0)];

/// Quantization used by all benchmark stores: two 16-bit acceleration
/// channels over +-12 m/s^2.
pub fn bench_quant_config() -> zebra_core::quant::QuantizationConfig {
    zebra_core::quant::QuantizationConfig::uniform(2, -12.0, 12.0, 16).unwrap()
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("detectors disagree on store `{store}`, mask `{mask}`:\n{diff}")]
    Disagreement {
        store: String,
        mask: String,
        diff: String,
    },
    #[error(
        "no {wanted} masks with {stage_count} stage(s) found after examining {examined} candidates"
    )]
    MaskSearchExhausted {
        stage_count: usize,
        wanted: usize,
        examined: usize,
    },
    #[error(transparent)]
    Detect(#[from] zebra_core::detect::DetectError),
    #[error(transparent)]
    Mask(#[from] zebra_core::mask::MaskError),
}

/// One timed cell of the benchmark matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchResult {
    pub store_label: String,
    pub store_entries: usize,
    pub mask_name: String,
    pub stage_count: usize,
    pub detector: Detector,
    pub median_us: u64,
    pub events: usize,
}

/// Mean/min/max of the per-mask medians in one
/// (stage count, store size, detector) group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub stage_count: usize,
    pub store_entries: usize,
    pub detector: Detector,
    pub masks: usize,
    pub mean_us: f64,
    pub min_us: u64,
    pub max_us: u64,
}

/// Plan the benchmark recording: a maneuver-rich first 1000 s (the
/// smallest ladder prefix) followed by a long quiet cruise with sparse
/// events. Keeping later maneuvers rare makes the index query cost grow
/// with the matches rather than the store, which is the effect under
/// measurement; keeping clusters clear of the ladder cut points keeps
/// every event entirely inside each prefix that contains it.
///
/// Clusters hold one to four maneuvers whose inter-start spacing keeps
/// consecutive pulses within the default stage-gap window, so multi-stage
/// masks can chain across them.
pub fn bench_scenario(seed: u64, total_samples: usize, cut_sample_counts: &[usize]) -> ScenarioSpec {
    const PERIOD_MS: i64 = 10;
    const CUT_MARGIN_MS: i64 = 15_000;
    const INTRO_END_MS: i64 = 985_000;

    let duration_ms = total_samples as i64 * PERIOD_MS;
    let mut spec = ScenarioSpec::new(duration_ms as f64 / 1000.0, seed);
    spec.noise_amplitude = 0.25;
    spec.noise_center = [0.5, 0.5];

    let margins: Vec<(i64, i64)> = cut_sample_counts
        .iter()
        .map(|&c| {
            let t = c as i64 * PERIOD_MS;
            (t - CUT_MARGIN_MS, t + CUT_MARGIN_MS)
        })
        .collect();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xC0FF_EE00_5EED);
    let mut t = 10_000i64;
    'clusters: while t + MANEUVER_WIDTH_MS + 1_000 < duration_ms {
        let size = 1 + (rng.next_u64() % 4) as usize;
        let mut cluster = Vec::with_capacity(size);
        let mut insert = t;
        for _ in 0..size {
            let kind = if unit(&mut rng) < 0.15 {
                ManeuverKind::LaneChange
            } else {
                ManeuverKind::Braking
            };
            let magnitude = match kind {
                ManeuverKind::Braking => 2.2 + unit(&mut rng) * 8.2,
                ManeuverKind::LaneChange => 2.2 + unit(&mut rng) * 3.8,
            };
            cluster.push(Maneuver {
                kind,
                t_insert_ms: insert,
                magnitude,
            });
            insert += grid(2_600.0 + unit(&mut rng) * 1_700.0);
        }
        let cluster_end = cluster.last().unwrap().t_insert_ms + MANEUVER_WIDTH_MS;
        if cluster_end + 1_000 > duration_ms {
            break;
        }
        for &(m_lo, m_hi) in &margins {
            if t <= m_hi && cluster_end >= m_lo {
                t = grid_i(m_hi + 1_000);
                continue 'clusters;
            }
        }
        spec.maneuvers.extend_from_slice(&cluster);
        let gap_ms = if cluster_end < INTRO_END_MS {
            grid(3_500.0 + unit(&mut rng) * 4_500.0)
        } else {
            grid(2_800_000.0 + unit(&mut rng) * 1_000_000.0)
        };
        t = cluster_end + gap_ms;
    }
    spec
}

fn grid(ms: f64) -> i64 {
    (ms as i64 / 10) * 10
}

fn grid_i(ms: i64) -> i64 {
    (ms / 10) * 10
}

fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Generate random masks and keep those that detect at least one event on
/// `filter_store` (checked with the index-backed detector), until `count`
/// qualify. Deterministic for a fixed seed.
pub fn qualified_masks(
    seed: u64,
    stage_count: usize,
    count: usize,
    bounds: &[(f64, f64)],
    filter_store: &Store,
    max_candidates: usize,
) -> Result<Vec<SearchMask>, BenchError> {
    const BATCH: usize = 32;
    let mut kept = Vec::with_capacity(count);
    let mut examined = 0usize;
    let mut batch_no = 0u64;
    while kept.len() < count && examined < max_candidates {
        let batch_seed = seed.wrapping_add(batch_no.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let candidates = mask::random_masks(batch_seed, stage_count, BATCH, bounds)?;
        for candidate in candidates {
            examined += 1;
            let events = detect::sfc(filter_store, &candidate)?;
            if !events.is_empty() {
                let name = format!("s{stage_count}-m{}", kept.len());
                kept.push(candidate.with_name(name));
                if kept.len() == count {
                    break;
                }
            }
            if examined >= max_candidates {
                break;
            }
        }
        batch_no += 1;
    }
    if kept.len() < count {
        return Err(BenchError::MaskSearchExhausted {
            stage_count,
            wanted: count,
            examined,
        });
    }
    Ok(kept)
}

/// Run every mask against one store: a first untimed pass checks that all
/// three detectors return identical events (and doubles as warm-up), then
/// each requested detector is timed `repetitions` times and the median
/// kept.
pub fn run_store_matrix(
    store_label: &str,
    store: &Store,
    masks: &[SearchMask],
    detectors: &[Detector],
    repetitions: usize,
) -> Result<Vec<BenchResult>, BenchError> {
    let repetitions = repetitions.max(1);
    let mut results = Vec::with_capacity(masks.len() * detectors.len());
    for mask in masks {
        let reference = verify_cell(store_label, store, mask)?;
        for &detector in detectors {
            let mut times: Vec<u64> = Vec::with_capacity(repetitions);
            let mut events = 0usize;
            for _ in 0..repetitions {
                let started = Instant::now();
                let found = detect::detect(detector, store, mask)?;
                times.push(started.elapsed().as_micros() as u64);
                events = found.len();
            }
            debug_assert_eq!(events, reference.len());
            results.push(BenchResult {
                store_label: store_label.to_string(),
                store_entries: store.len(),
                mask_name: mask.name().to_string(),
                stage_count: mask.stage_count(),
                detector,
                median_us: median(&mut times),
                events,
            });
        }
    }
    Ok(results)
}

/// Equivalence check for every (mask, store) cell without timing.
/// With `parallel` set, cells run on scoped threads; results and errors
/// are identical to the sequential run.
pub fn verify_store_matrix(
    store_label: &str,
    store: &Store,
    masks: &[SearchMask],
    parallel: bool,
) -> Result<usize, BenchError> {
    if !parallel {
        let mut events = 0;
        for mask in masks {
            events += verify_cell(store_label, store, mask)?.len();
        }
        return Ok(events);
    }
    let mut outcomes: Vec<Result<Vec<Event>, BenchError>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = masks
            .iter()
            .map(|mask| scope.spawn(move || verify_cell(store_label, store, mask)))
            .collect();
        for h in handles {
            outcomes.push(h.join().expect("verification thread panicked"));
        }
    });
    let mut events = 0;
    for outcome in outcomes {
        events += outcome?.len();
    }
    Ok(events)
}

fn verify_cell(
    store_label: &str,
    store: &Store,
    mask: &SearchMask,
) -> Result<Vec<Event>, BenchError> {
    let reference = detect::bf_primitive(store, mask)?;
    for detector in [Detector::BfImproved, Detector::Sfc] {
        let events = detect::detect(detector, store, mask)?;
        if events != reference {
            return Err(BenchError::Disagreement {
                store: store_label.to_string(),
                mask: mask.name().to_string(),
                diff: diff_events(&reference, &events, detector),
            });
        }
    }
    Ok(reference)
}

fn diff_events(reference: &[Event], got: &[Event], detector: Detector) -> String {
    use std::collections::BTreeSet;
    let a: BTreeSet<_> = reference.iter().copied().collect();
    let b: BTreeSet<_> = got.iter().copied().collect();
    let mut out = String::new();
    out.push_str(&format!(
        "bf_primitive found {} event(s), {} found {}\n",
        reference.len(),
        detector.name(),
        got.len()
    ));
    for (label, set) in [
        ("missing from", a.difference(&b).collect::<Vec<_>>()),
        ("extra in", b.difference(&a).collect::<Vec<_>>()),
    ] {
        for e in set.iter().take(8) {
            out.push_str(&format!(
                "  {} {}: [{}, {}]\n",
                label,
                detector.name(),
                e.t_start_ms,
                e.t_end_ms
            ));
        }
    }
    out
}

fn median(samples: &mut [u64]) -> u64 {
    samples.sort_unstable();
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2
    }
}

/// Collapse per-mask results into the dot-and-whisker data: one row per
/// (stage count, store size, detector) with mean/min/max over masks.
pub fn summarize(results: &[BenchResult]) -> Vec<SummaryRow> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(usize, usize, &'static str), Vec<&BenchResult>> = BTreeMap::new();
    for r in results {
        groups
            .entry((r.stage_count, r.store_entries, r.detector.name()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((stage_count, store_entries, _), rows)| {
            let medians: Vec<u64> = rows.iter().map(|r| r.median_us).collect();
            SummaryRow {
                stage_count,
                store_entries,
                detector: rows[0].detector,
                masks: rows.len(),
                mean_us: medians.iter().sum::<u64>() as f64 / medians.len() as f64,
                min_us: *medians.iter().min().unwrap(),
                max_us: *medians.iter().max().unwrap(),
            }
        })
        .collect()
}

pub fn results_csv(results: &[BenchResult]) -> String {
    let mut out = String::from("store,entries,mask,stages,detector,median_us,events\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.store_label,
            r.store_entries,
            r.mask_name,
            r.stage_count,
            r.detector.name(),
            r.median_us,
            r.events
        ));
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("stages,entries,detector,masks,mean_us,min_us,max_us\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.1},{},{}\n",
            r.stage_count, r.store_entries, r.detector.name(), r.masks, r.mean_us, r.min_us, r.max_us
        ));
    }
    out
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>6}  {:>12}  {:<12}  {:>5}  {:>14}  {:>12}  {:>12}\n",
        "stages", "entries", "detector", "masks", "mean_us", "min_us", "max_us"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:>6}  {:>12}  {:<12}  {:>5}  {:>14.1}  {:>12}  {:>12}\n",
            r.stage_count,
            r.store_entries,
            r.detector.name(),
            r.masks,
            r.mean_us,
            r.min_us,
            r.max_us
        ));
    }
    out
}
