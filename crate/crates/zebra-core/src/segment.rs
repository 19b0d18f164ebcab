//! Temporal assembly: matching time points become segments, segments chain
//! across stages into events.

use alloc::vec::Vec;

use crate::mask::{Event, TemporalParams};

/// A candidate stretch of one stage: first and last matching timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub t_start_ms: i64,
    pub t_end_ms: i64,
}

/// Split ascending `times` into maximal runs whose internal gaps stay
/// within the outlier tolerance, then keep each run whose first-to-last
/// span lies inside the duration window.
///
/// A run longer than the window is dropped entirely, not trimmed: trimming
/// would fabricate sub-events that never matched as a whole.
pub fn segments_from_times(times: &[i64], params: &TemporalParams) -> Vec<Segment> {
    debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
    let mut segments = Vec::new();
    let mut i = 0;
    while i < times.len() {
        let start = times[i];
        let mut end = times[i];
        let mut j = i + 1;
        while j < times.len() && times[j] - end <= params.max_outlier_gap_ms {
            end = times[j];
            j += 1;
        }
        let span = end - start;
        if params.min_duration_ms <= span && span <= params.max_duration_ms {
            segments.push(Segment {
                t_start_ms: start,
                t_end_ms: end,
            });
        }
        i = j;
    }
    segments
}

/// Chain per-stage segments into events.
///
/// For each stage-1 segment, in ascending order, the earliest-first search
/// picks the first stage-2 segment whose start lies within
/// `[end + min_gap, end + max_gap]`, recurses for the remaining stages and
/// backtracks on failure; the first completed chain wins, so one stage-1
/// segment yields at most one event spanning from its own start to the end
/// of the final stage's segment. Later stage segments may serve several
/// chains.
pub fn chain_stages(per_stage: &[Vec<Segment>], params: &TemporalParams) -> Vec<Event> {
    let mut events = Vec::new();
    if per_stage.is_empty() {
        return events;
    }
    for first in &per_stage[0] {
        if let Some(end) = complete_chain(first, 1, per_stage, params) {
            events.push(Event {
                t_start_ms: first.t_start_ms,
                t_end_ms: end,
            });
        }
    }
    events
}

fn complete_chain(
    prev: &Segment,
    stage: usize,
    per_stage: &[Vec<Segment>],
    params: &TemporalParams,
) -> Option<i64> {
    if stage == per_stage.len() {
        return Some(prev.t_end_ms);
    }
    let lo = prev.t_end_ms + params.min_gap_ms;
    let hi = prev.t_end_ms + params.max_gap_ms;
    let segments = &per_stage[stage];
    let from = segments.partition_point(|s| s.t_start_ms < lo);
    for seg in &segments[from..] {
        if seg.t_start_ms > hi {
            break;
        }
        if let Some(end) = complete_chain(seg, stage + 1, per_stage, params) {
            return Some(end);
        }
    }
    None
}
