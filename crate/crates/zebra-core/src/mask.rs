//! Search masks: ordered stacks of axis-aligned value-space boxes plus the
//! temporal parameters that turn matching time points into events.
//!
//! Masks live in signal units and are quantized against a store's lattice
//! at query time, so one mask file works across stores with different
//! quantization configs.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use rand_core::{RngCore, SeedableRng};

/// One stage of a mask: the value-space area of interest, given as the
/// bottom-left and top-right corners.
#[derive(Debug, Clone, PartialEq)]
pub struct StageBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl StageBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, MaskError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(MaskError::BadBoxArity {
                lo: lo.len(),
                hi: hi.len(),
            });
        }
        for d in 0..lo.len() {
            if !lo[d].is_finite() || !hi[d].is_finite() {
                return Err(MaskError::NonFiniteCorner { dim: d });
            }
            if lo[d] > hi[d] {
                return Err(MaskError::InvertedBox { dim: d });
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }
}

/// Temporal constraints shared by all stages of a mask, in milliseconds.
///
/// A run of matching time points becomes a segment when its span lies in
/// `[min_duration, max_duration]` and no internal gap exceeds
/// `max_outlier_gap`. Consecutive stage segments chain when the pause
/// between them lies in `[min_gap, max_gap]`; `min_gap` may be negative,
/// letting the next stage begin before the previous segment ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TemporalParams {
    pub min_duration_ms: i64,
    pub max_duration_ms: i64,
    pub min_gap_ms: i64,
    pub max_gap_ms: i64,
    pub max_outlier_gap_ms: i64,
}

impl Default for TemporalParams {
    fn default() -> Self {
        Self {
            min_duration_ms: 2_000,
            max_duration_ms: 3_000,
            min_gap_ms: -200,
            max_gap_ms: 2_000,
            max_outlier_gap_ms: 50,
        }
    }
}

impl TemporalParams {
    pub fn validate(&self) -> Result<(), MaskError> {
        if self.min_duration_ms < 1 {
            return Err(MaskError::NonPositiveMinDuration {
                value: self.min_duration_ms,
            });
        }
        if self.min_duration_ms > self.max_duration_ms {
            return Err(MaskError::DurationOrder {
                min: self.min_duration_ms,
                max: self.max_duration_ms,
            });
        }
        if self.min_gap_ms > self.max_gap_ms {
            return Err(MaskError::GapOrder {
                min: self.min_gap_ms,
                max: self.max_gap_ms,
            });
        }
        if self.max_outlier_gap_ms < 0 {
            return Err(MaskError::NegativeOutlier {
                value: self.max_outlier_gap_ms,
            });
        }
        Ok(())
    }
}

/// A named, validated search mask: one or more stages plus temporal
/// parameters. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchMask {
    name: String,
    stages: Vec<StageBox>,
    params: TemporalParams,
}

impl SearchMask {
    pub fn new(
        name: impl Into<String>,
        stages: Vec<StageBox>,
        params: TemporalParams,
    ) -> Result<Self, MaskError> {
        if stages.is_empty() {
            return Err(MaskError::NoStages);
        }
        let dims = stages[0].dims();
        for (i, s) in stages.iter().enumerate() {
            if s.dims() != dims {
                return Err(MaskError::StageDimMismatch {
                    stage: i,
                    expected: dims,
                    got: s.dims(),
                });
            }
        }
        params.validate()?;
        Ok(Self {
            name: name.into(),
            stages,
            params,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> &[StageBox] {
        &self.stages
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn params(&self) -> &TemporalParams {
        &self.params
    }

    pub fn dims(&self) -> usize {
        self.stages[0].dims()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// A detected event: the closed time interval of one maneuver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub t_start_ms: i64,
    pub t_end_ms: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskError {
    NoStages,
    BadBoxArity { lo: usize, hi: usize },
    NonFiniteCorner { dim: usize },
    InvertedBox { dim: usize },
    StageDimMismatch { stage: usize, expected: usize, got: usize },
    NonPositiveMinDuration { value: i64 },
    DurationOrder { min: i64, max: i64 },
    GapOrder { min: i64, max: i64 },
    NegativeOutlier { value: i64 },
    Parse { line: usize, what: String },
}

impl fmt::Display for MaskError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskError::NoStages => write!(f, "mask has zero stages"),
            MaskError::BadBoxArity { lo, hi } => {
                write!(f, "box corners have {lo} and {hi} dimensions")
            }
            MaskError::NonFiniteCorner { dim } => {
                write!(f, "box corner in dimension {dim} is not finite")
            }
            MaskError::InvertedBox { dim } => {
                write!(f, "box is inverted in dimension {dim} (lo > hi)")
            }
            MaskError::StageDimMismatch { stage, expected, got } => {
                write!(f, "stage {stage} has {got} dimensions, expected {expected}")
            }
            MaskError::NonPositiveMinDuration { value } => {
                write!(f, "min duration must be positive, got {value}")
            }
            MaskError::DurationOrder { min, max } => {
                write!(f, "min duration {min} exceeds max duration {max}")
            }
            MaskError::GapOrder { min, max } => {
                write!(f, "min gap {min} exceeds max gap {max}")
            }
            MaskError::NegativeOutlier { value } => {
                write!(f, "outlier gap must be non-negative, got {value}")
            }
            MaskError::Parse { line, what } => write!(f, "line {line}: {what}"),
        }
    }
}

impl core::error::Error for MaskError {}

/// Parse the mask text format.
///
/// One `stage lo0 hi0 lo1 hi1 ...` line per stage, optional `dur MIN MAX`,
/// `gap MIN MAX` and `outlier MAX` lines (defaults apply when omitted),
/// an optional `name LABEL` line, `#` comments and blank lines.
pub fn parse_mask(text: &str) -> Result<SearchMask, MaskError> {
    let mut name = String::new();
    let mut stages: Vec<StageBox> = Vec::new();
    let mut params = TemporalParams::default();
    let mut seen = [false; 3]; // dur, gap, outlier

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap();
        let rest: Vec<&str> = tokens.collect();
        let perr = |what: String| MaskError::Parse { line: line_no, what };

        match keyword {
            "name" => {
                if rest.is_empty() {
                    return Err(perr("name needs a label".to_string()));
                }
                name = rest.join(" ");
            }
            "stage" => {
                if rest.is_empty() || !rest.len().is_multiple_of(2) {
                    return Err(perr(format!(
                        "stage needs an even number of corner values, got {}",
                        rest.len()
                    )));
                }
                let mut lo = Vec::with_capacity(rest.len() / 2);
                let mut hi = Vec::with_capacity(rest.len() / 2);
                for pair in rest.chunks(2) {
                    lo.push(parse_f64(pair[0], line_no)?);
                    hi.push(parse_f64(pair[1], line_no)?);
                }
                stages.push(StageBox::new(lo, hi).map_err(|e| MaskError::Parse {
                    line: line_no,
                    what: e.to_string(),
                })?);
            }
            "dur" => {
                if seen[0] {
                    return Err(perr("duplicate dur line".to_string()));
                }
                seen[0] = true;
                let (a, b) = two_i64(&rest, "dur", line_no)?;
                params.min_duration_ms = a;
                params.max_duration_ms = b;
            }
            "gap" => {
                if seen[1] {
                    return Err(perr("duplicate gap line".to_string()));
                }
                seen[1] = true;
                let (a, b) = two_i64(&rest, "gap", line_no)?;
                params.min_gap_ms = a;
                params.max_gap_ms = b;
            }
            "outlier" => {
                if seen[2] {
                    return Err(perr("duplicate outlier line".to_string()));
                }
                seen[2] = true;
                if rest.len() != 1 {
                    return Err(perr(format!("outlier needs one value, got {}", rest.len())));
                }
                params.max_outlier_gap_ms = parse_i64(rest[0], line_no)?;
            }
            other => {
                return Err(perr(format!("unknown directive `{other}`")));
            }
        }
    }

    SearchMask::new(name, stages, params)
}

/// Render a mask in the format accepted by [`parse_mask`].
pub fn render_mask(mask: &SearchMask) -> String {
    let mut out = String::new();
    if !mask.name().is_empty() {
        let _ = writeln!(out, "name {}", mask.name());
    }
    for stage in mask.stages() {
        let _ = write!(out, "stage");
        for d in 0..stage.dims() {
            let _ = write!(out, " {} {}", stage.lo()[d], stage.hi()[d]);
        }
        out.push('\n');
    }
    let p = mask.params();
    let _ = writeln!(out, "dur {} {}", p.min_duration_ms, p.max_duration_ms);
    let _ = writeln!(out, "gap {} {}", p.min_gap_ms, p.max_gap_ms);
    let _ = writeln!(out, "outlier {}", p.max_outlier_gap_ms);
    out
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, MaskError> {
    let v: f64 = tok.parse().map_err(|_| MaskError::Parse {
        line,
        what: format!("`{tok}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(MaskError::Parse {
            line,
            what: format!("`{tok}` is not finite"),
        });
    }
    Ok(v)
}

fn parse_i64(tok: &str, line: usize) -> Result<i64, MaskError> {
    tok.parse().map_err(|_| MaskError::Parse {
        line,
        what: format!("`{tok}` is not an integer"),
    })
}

fn two_i64(rest: &[&str], what: &str, line: usize) -> Result<(i64, i64), MaskError> {
    if rest.len() != 2 {
        return Err(MaskError::Parse {
            line,
            what: format!("{what} needs two values, got {}", rest.len()),
        });
    }
    Ok((parse_i64(rest[0], line)?, parse_i64(rest[1], line)?))
}

/// Generate `count` random masks with `stage_count` stages each,
/// deterministic for a fixed seed.
///
/// Every stage is a threshold-style box: one randomly chosen anchor
/// dimension reaches from near the lower value bound up to a random
/// threshold in the lower third-to-half of the range, while the remaining
/// dimensions span a wide interval around the middle. Such boxes select
/// pronounced excursions in one signal dimension, the shape maneuver
/// queries take in practice; unconstrained corner pairs almost never
/// isolate runs that satisfy the duration window. Temporal parameters are
/// the defaults. Hitting at least one event is not guaranteed here;
/// benchmark callers filter against a store.
pub fn random_masks(
    rng_seed: u64,
    stage_count: usize,
    count: usize,
    value_bounds: &[(f64, f64)],
) -> Result<Vec<SearchMask>, MaskError> {
    assert!(stage_count >= 1, "stage_count must be at least 1");
    assert!(!value_bounds.is_empty(), "value_bounds must not be empty");
    for (d, &(lo, hi)) in value_bounds.iter().enumerate() {
        assert!(
            lo.is_finite() && hi.is_finite() && lo < hi,
            "value_bounds[{d}] must be a finite non-empty interval"
        );
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed ^ ((stage_count as u64) << 56));
    let dims = value_bounds.len();
    let mut masks = Vec::with_capacity(count);
    for m in 0..count {
        let mut stages = Vec::with_capacity(stage_count);
        for _ in 0..stage_count {
            let anchor = (rng.next_u64() % dims as u64) as usize;
            let mut lo = Vec::with_capacity(dims);
            let mut hi = Vec::with_capacity(dims);
            for (d, &(b_lo, b_hi)) in value_bounds.iter().enumerate() {
                let span = b_hi - b_lo;
                if d == anchor {
                    lo.push(b_lo + unit(&mut rng) * 0.06 * span);
                    hi.push(b_lo + (0.30 + unit(&mut rng) * 0.15) * span);
                } else {
                    lo.push(b_lo + unit(&mut rng) * 0.25 * span);
                    hi.push(b_hi - unit(&mut rng) * 0.35 * span);
                }
            }
            stages.push(StageBox::new(lo, hi).expect("sampled box is valid"));
        }
        let name = format!("rand-s{stage_count}-{m}-seed{rng_seed}");
        masks.push(SearchMask::new(name, stages, TemporalParams::default())?);
    }
    Ok(masks)
}

/// Uniform sample in [0, 1) from the top 53 bits of one RNG draw.
fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_fixed_temporal_values() {
        let p = TemporalParams::default();
        assert_eq!(p.min_duration_ms, 2_000);
        assert_eq!(p.max_duration_ms, 3_000);
        assert_eq!(p.min_gap_ms, -200);
        assert_eq!(p.max_gap_ms, 2_000);
        assert_eq!(p.max_outlier_gap_ms, 50);
    }

    #[test]
    fn parses_single_stage_braking_mask() {
        let text = "# hard braking\nname braking\nstage -12 -5 -3 3\n";
        let mask = parse_mask(text).unwrap();
        assert_eq!(mask.name(), "braking");
        assert_eq!(mask.stage_count(), 1);
        assert_eq!(mask.dims(), 2);
        assert_eq!(mask.stages()[0].lo(), &[-12.0, -3.0]);
        assert_eq!(mask.stages()[0].hi(), &[-5.0, 3.0]);
        assert_eq!(*mask.params(), TemporalParams::default());
    }

    #[test]
    fn parses_two_stage_lane_change_mask() {
        let text = "\
name lane-change
# falling V in lateral acceleration, then the flipped V
stage -2 2 -5 -1
stage -2 2 1 5
dur 1000 1500
";
        let mask = parse_mask(text).unwrap();
        assert_eq!(mask.stage_count(), 2);
        assert_eq!(mask.params().min_duration_ms, 1000);
        assert_eq!(mask.params().max_duration_ms, 1500);
        assert_eq!(mask.params().min_gap_ms, -200); // default kept
    }

    #[test]
    fn rejects_empty_and_malformed_masks() {
        assert_eq!(parse_mask("# nothing\n"), Err(MaskError::NoStages));
        assert!(matches!(
            parse_mask("stage 5 1\n"),
            Err(MaskError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_mask("stage -1 1\ndur 3000 2000\n"),
            Err(MaskError::DurationOrder { min: 3000, max: 2000 })
        ));
        assert!(matches!(
            parse_mask("stage -1 1 2\n"),
            Err(MaskError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_mask("stage -1 one\n"),
            Err(MaskError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_mask("bogus 1 2\n"),
            Err(MaskError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_mask("stage -1 1\noutlier -5\n"),
            Err(MaskError::NegativeOutlier { value: -5 })
        ));
    }

    #[test]
    fn render_parse_round_trip() {
        let mask = SearchMask::new(
            "demo",
            alloc::vec![
                StageBox::new(alloc::vec![-12.0, -3.25], alloc::vec![-5.5, 3.0]).unwrap(),
                StageBox::new(alloc::vec![-2.0, 1.0], alloc::vec![2.0, 5.0]).unwrap(),
            ],
            TemporalParams {
                min_duration_ms: 800,
                max_duration_ms: 1500,
                min_gap_ms: -100,
                max_gap_ms: 900,
                max_outlier_gap_ms: 20,
            },
        )
        .unwrap();
        assert_eq!(parse_mask(&render_mask(&mask)).unwrap(), mask);
    }

    #[test]
    fn stage_dims_must_agree() {
        let a = StageBox::new(alloc::vec![0.0], alloc::vec![1.0]).unwrap();
        let b = StageBox::new(alloc::vec![0.0, 0.0], alloc::vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            SearchMask::new("x", alloc::vec![a, b], TemporalParams::default()),
            Err(MaskError::StageDimMismatch { stage: 1, .. })
        ));
    }

    #[test]
    fn random_masks_are_deterministic_and_counted() {
        let bounds = [(-12.0, 12.0), (-12.0, 12.0)];
        let a = random_masks(7, 2, 5, &bounds).unwrap();
        let b = random_masks(7, 2, 5, &bounds).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(a.iter().all(|m| m.stage_count() == 2));

        let c = random_masks(8, 2, 5, &bounds).unwrap();
        assert_ne!(a, c);

        // 5 masks per stage count, three stage counts: 15 total.
        let total: usize = (1..=3)
            .map(|s| random_masks(7, s, 5, &bounds).unwrap().len())
            .sum();
        assert_eq!(total, 15);
    }

    #[test]
    fn random_mask_boxes_stay_within_bounds() {
        let bounds = [(-12.0, 12.0), (-6.0, 18.0)];
        for seed in 0..1000 {
            for mask in random_masks(seed, 3, 1, &bounds).unwrap() {
                for stage in mask.stages() {
                    for (d, &(b_lo, b_hi)) in bounds.iter().enumerate() {
                        assert!(stage.lo()[d] >= b_lo);
                        assert!(stage.hi()[d] <= b_hi);
                        assert!(stage.lo()[d] <= stage.hi()[d]);
                    }
                }
            }
        }
    }
}
