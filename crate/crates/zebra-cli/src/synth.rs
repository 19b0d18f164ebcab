//! Synthetic two-channel kinematic recordings (longitudinal and lateral
//! acceleration) with annotated maneuvers, standing in for proprietary
//! vehicle data at desk scale.
//!
//! The background is band-limited noise: uniform control points every
//! 640 ms, smoothstep-interpolated, bounded by the configured amplitude
//! around a configurable center. A braking maneuver is a negative
//! plateau pulse on the longitudinal channel with short raised-cosine
//! tapers; a lane change is the classic S-profile on the lateral channel,
//! a negative lobe followed by a positive one. The short tapers make the
//! first and last in-box samples land within one sample period of the
//! maneuver support, so threshold queries recover annotation boundaries
//! exactly.
//!
//! Generation is deterministic for a fixed seed, including the emitted
//! CSV bytes.

use std::io::Write;
use std::path::Path;

use rand_core::{RngCore, SeedableRng};

use zebra_core::quant::QuantizationConfig;
use zebra_core::store::{Store, StoreBuilder};

use crate::format::{FormatError, StoreDir};

/// Total maneuver support in milliseconds (both kinds).
pub const MANEUVER_WIDTH_MS: i64 = 2_500;
/// One lane-change lobe.
pub const LOBE_WIDTH_MS: i64 = 1_250;
/// Raised-cosine taper at each pulse edge.
pub const PULSE_TAPER_MS: f64 = 10.0;

const CONTROL_SPACING_MS: i64 = 640;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManeuverKind {
    Braking,
    LaneChange,
}

impl ManeuverKind {
    pub fn name(self) -> &'static str {
        match self {
            ManeuverKind::Braking => "braking",
            ManeuverKind::LaneChange => "lane_change",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "braking" => Some(ManeuverKind::Braking),
            "lane_change" => Some(ManeuverKind::LaneChange),
            _ => None,
        }
    }
}

/// One maneuver to embed: kind, insertion time, peak magnitude in m/s^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maneuver {
    pub kind: ManeuverKind,
    pub t_insert_ms: i64,
    pub magnitude: f64,
}

/// Ground-truth window of an embedded maneuver: its full support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annotation {
    pub kind: ManeuverKind,
    pub t_start_ms: i64,
    pub t_end_ms: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    pub rng_seed: u64,
    pub maneuvers: Vec<Maneuver>,
    /// Background noise bound in m/s^2 (the signal never leaves
    /// `center +- amplitude` outside maneuvers).
    pub noise_amplitude: f64,
    /// Resting point of the background per channel.
    pub noise_center: [f64; 2],
}

impl ScenarioSpec {
    pub fn new(duration_s: f64, rng_seed: u64) -> Self {
        Self {
            duration_s,
            sample_rate_hz: 100,
            rng_seed,
            maneuvers: Vec::new(),
            noise_amplitude: 0.25,
            noise_center: [0.0, 0.0],
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("duration must be positive and finite, got {0}")]
    BadDuration(f64),
    #[error("sample rate must divide 1000 ms evenly, got {0} Hz")]
    BadRate(u32),
    #[error("noise amplitude must be finite and non-negative, got {0}")]
    BadAmplitude(f64),
    #[error("maneuver at {t_insert_ms} ms: magnitude must be positive and finite")]
    BadMagnitude { t_insert_ms: i64 },
    #[error("maneuver at {t_insert_ms} ms does not fit the recording")]
    OutOfRange { t_insert_ms: i64 },
    #[error("maneuvers at {first_ms} ms and {second_ms} ms overlap")]
    Overlap { first_ms: i64, second_ms: i64 },
}

/// Closed-form sample generator for one scenario.
pub struct Generator {
    period_ms: i64,
    total_samples: usize,
    maneuvers: Vec<Maneuver>,
    annotations: Vec<Annotation>,
    /// Smoothstep control points, one pair per 640 ms knot.
    control: Vec<[f64; 2]>,
}

impl Generator {
    pub fn new(spec: &ScenarioSpec) -> Result<Self, SynthError> {
        if !spec.duration_s.is_finite() || spec.duration_s <= 0.0 {
            return Err(SynthError::BadDuration(spec.duration_s));
        }
        if spec.sample_rate_hz == 0 || 1000 % spec.sample_rate_hz != 0 {
            return Err(SynthError::BadRate(spec.sample_rate_hz));
        }
        if !spec.noise_amplitude.is_finite() || spec.noise_amplitude < 0.0 {
            return Err(SynthError::BadAmplitude(spec.noise_amplitude));
        }
        let period_ms = (1000 / spec.sample_rate_hz) as i64;
        let duration_ms = (spec.duration_s * 1000.0) as i64;
        let total_samples = (duration_ms / period_ms) as usize;

        let mut maneuvers = spec.maneuvers.clone();
        maneuvers.sort_by_key(|m| m.t_insert_ms);
        for m in &maneuvers {
            if !m.magnitude.is_finite() || m.magnitude <= 0.0 {
                return Err(SynthError::BadMagnitude {
                    t_insert_ms: m.t_insert_ms,
                });
            }
            if m.t_insert_ms < 0 || m.t_insert_ms + MANEUVER_WIDTH_MS > duration_ms {
                return Err(SynthError::OutOfRange {
                    t_insert_ms: m.t_insert_ms,
                });
            }
        }
        for pair in maneuvers.windows(2) {
            if pair[1].t_insert_ms < pair[0].t_insert_ms + MANEUVER_WIDTH_MS {
                return Err(SynthError::Overlap {
                    first_ms: pair[0].t_insert_ms,
                    second_ms: pair[1].t_insert_ms,
                });
            }
        }
        let annotations = maneuvers
            .iter()
            .map(|m| Annotation {
                kind: m.kind,
                t_start_ms: m.t_insert_ms,
                t_end_ms: m.t_insert_ms + MANEUVER_WIDTH_MS,
            })
            .collect();

        let knots = (duration_ms / CONTROL_SPACING_MS + 2) as usize;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.rng_seed);
        let amp = spec.noise_amplitude;
        let center = spec.noise_center;
        let mut control = Vec::with_capacity(knots);
        for _ in 0..knots {
            let a = center[0] + amp * (2.0 * unit(&mut rng) - 1.0);
            let b = center[1] + amp * (2.0 * unit(&mut rng) - 1.0);
            control.push([a, b]);
        }

        Ok(Self {
            period_ms,
            total_samples,
            maneuvers,
            annotations,
            control,
        })
    }

    pub fn len(&self) -> usize {
        self.total_samples
    }

    pub fn is_empty(&self) -> bool {
        self.total_samples == 0
    }

    pub fn period_ms(&self) -> i64 {
        self.period_ms
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    /// The sample at index `i` (random access).
    pub fn sample(&self, i: usize) -> (i64, [f64; 2]) {
        let t = i as i64 * self.period_ms;
        let mut v = self.background(t);
        let idx = self.maneuvers.partition_point(|m| m.t_insert_ms <= t);
        if idx > 0 {
            let m = &self.maneuvers[idx - 1];
            let offset = t - m.t_insert_ms;
            if offset < MANEUVER_WIDTH_MS {
                apply_maneuver(m, offset, &mut v);
            }
        }
        (t, v)
    }

    /// All samples in time order.
    pub fn samples(&self) -> impl Iterator<Item = (i64, [f64; 2])> + '_ {
        let mut cursor = 0usize;
        (0..self.total_samples).map(move |i| {
            let t = i as i64 * self.period_ms;
            let mut v = self.background(t);
            while cursor < self.maneuvers.len()
                && self.maneuvers[cursor].t_insert_ms + MANEUVER_WIDTH_MS <= t
            {
                cursor += 1;
            }
            if cursor < self.maneuvers.len() {
                let m = &self.maneuvers[cursor];
                let offset = t - m.t_insert_ms;
                if (0..MANEUVER_WIDTH_MS).contains(&offset) {
                    apply_maneuver(m, offset, &mut v);
                }
            }
            (t, v)
        })
    }

    fn background(&self, t: i64) -> [f64; 2] {
        let k = (t / CONTROL_SPACING_MS) as usize;
        let u = (t - k as i64 * CONTROL_SPACING_MS) as f64 / CONTROL_SPACING_MS as f64;
        let s = u * u * (3.0 - 2.0 * u);
        let a = self.control[k];
        let b = self.control[k + 1];
        [a[0] + (b[0] - a[0]) * s, a[1] + (b[1] - a[1]) * s]
    }
}

fn apply_maneuver(m: &Maneuver, offset_ms: i64, v: &mut [f64; 2]) {
    let s = offset_ms as f64;
    match m.kind {
        ManeuverKind::Braking => {
            v[0] -= m.magnitude * tukey(s, MANEUVER_WIDTH_MS as f64);
        }
        ManeuverKind::LaneChange => {
            let lobe = LOBE_WIDTH_MS as f64;
            if s < lobe {
                v[1] -= m.magnitude * tukey(s, lobe);
            } else {
                v[1] += m.magnitude * tukey(s - lobe, lobe);
            }
        }
    }
}

/// Plateau pulse with raised-cosine tapers of [`PULSE_TAPER_MS`] at both
/// edges; 0 at the support boundary, 1 on the plateau.
fn tukey(s: f64, width: f64) -> f64 {
    let taper = PULSE_TAPER_MS;
    if s <= 0.0 || s >= width {
        0.0
    } else if s < taper {
        let u = core::f64::consts::FRAC_PI_2 * s / taper;
        u.sin().powi(2)
    } else if s > width - taper {
        let u = core::f64::consts::FRAC_PI_2 * (width - s) / taper;
        u.sin().powi(2)
    } else {
        1.0
    }
}

fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Emit the recording as ingest CSV (`t_ms,v0,v1` with header).
pub fn write_csv<W: Write>(generator: &Generator, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t_ms,v0,v1")?;
    for (t, v) in generator.samples() {
        writeln!(out, "{},{},{}", t, v[0], v[1])?;
    }
    Ok(())
}

/// Emit the ground-truth windows as CSV (`kind,t_start_ms,t_end_ms`).
pub fn write_annotations_csv<W: Write>(
    generator: &Generator,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "kind,t_start_ms,t_end_ms")?;
    for a in generator.annotations() {
        writeln!(out, "{},{},{}", a.kind.name(), a.t_start_ms, a.t_end_ms)?;
    }
    Ok(())
}

/// Build an in-memory store from the first `samples` generated samples.
pub fn build_store(
    generator: &Generator,
    config: &QuantizationConfig,
    samples: usize,
) -> Store {
    let n = samples.min(generator.len());
    let mut builder = StoreBuilder::with_capacity(config.clone(), n);
    for (t, v) in generator.samples().take(n) {
        builder.push(t, &v).expect("generated samples are valid");
    }
    builder.finish()
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("target entry counts must be ascending")]
    NotAscending,
    #[error("scenario yields {available} samples but {requested} were requested")]
    TooShort { available: usize, requested: usize },
}

/// Materialize nested prefixes of one recording as separate stores, one
/// per requested entry count, under `out_root/store_<count>`.
pub fn scale_corpus(
    spec: &ScenarioSpec,
    config: &QuantizationConfig,
    target_entry_counts: &[usize],
    out_root: &Path,
) -> Result<Vec<StoreDir>, CorpusError> {
    if target_entry_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CorpusError::NotAscending);
    }
    let generator = Generator::new(spec)?;
    if let Some(&max) = target_entry_counts.last() {
        if max > generator.len() {
            return Err(CorpusError::TooShort {
                available: generator.len(),
                requested: max,
            });
        }
    }
    let mut dirs = Vec::with_capacity(target_entry_counts.len());
    for &count in target_entry_counts {
        let store = build_store(&generator, config, count);
        let dir = StoreDir::write(out_root.join(format!("store_{count}")), &store)?;
        dirs.push(dir);
    }
    Ok(dirs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use zebra_core::detect::{self, Detector};
    use zebra_core::mask::{SearchMask, StageBox, TemporalParams};

    fn cfg() -> QuantizationConfig {
        QuantizationConfig::uniform(2, -12.0, 12.0, 16).unwrap()
    }

    #[test]
    fn silent_scenario_is_flat_and_single_striped() {
        let mut spec = ScenarioSpec::new(10.0, 1);
        spec.noise_amplitude = 0.0;
        let generator = Generator::new(&spec).unwrap();
        assert_eq!(generator.len(), 1000);
        for (_, v) in generator.samples() {
            assert_eq!(v, [0.0, 0.0]);
        }
        let store = build_store(&generator, &cfg(), usize::MAX);
        let codes: std::collections::BTreeSet<u64> = store
            .spectrum(1000)
            .unwrap()
            .map(|(_, c)| c.value())
            .collect();
        assert_eq!(codes.len(), 1);
    }

    #[test]
    fn braking_pulse_has_pinned_annotation_and_depth() {
        let mut spec = ScenarioSpec::new(60.0, 7);
        spec.noise_amplitude = 0.0;
        spec.maneuvers.push(Maneuver {
            kind: ManeuverKind::Braking,
            t_insert_ms: 30_000,
            magnitude: 8.0,
        });
        let generator = Generator::new(&spec).unwrap();
        assert_eq!(
            generator.annotations(),
            &[Annotation {
                kind: ManeuverKind::Braking,
                t_start_ms: 30_000,
                t_end_ms: 32_500,
            }]
        );
        let config = cfg();
        let step = config.dim(0).step();
        let min_ax = generator
            .samples()
            .filter(|&(t, _)| (30_000..=32_500).contains(&t))
            .map(|(_, v)| v[0])
            .fold(f64::INFINITY, f64::min);
        assert!((min_ax + 8.0).abs() <= step, "min ax {min_ax}");
        // Outside the window the channel rests at zero.
        let outside_max = generator
            .samples()
            .filter(|&(t, _)| !(30_000..32_500).contains(&t))
            .map(|(_, v)| v[0].abs())
            .fold(0.0, f64::max);
        assert_eq!(outside_max, 0.0);
    }

    #[test]
    fn lane_change_is_negative_then_positive_lobe() {
        let mut spec = ScenarioSpec::new(30.0, 3);
        spec.noise_amplitude = 0.0;
        spec.maneuvers.push(Maneuver {
            kind: ManeuverKind::LaneChange,
            t_insert_ms: 10_000,
            magnitude: 3.0,
        });
        let generator = Generator::new(&spec).unwrap();
        let v_at = |t: i64| generator.sample((t / 10) as usize).1;
        assert_eq!(v_at(10_000)[1], 0.0);
        assert!((v_at(10_600)[1] + 3.0).abs() < 1e-12); // first lobe plateau
        assert!((v_at(11_900)[1] - 3.0).abs() < 1e-12); // second lobe plateau
        assert_eq!(v_at(12_500)[1], 0.0);
        assert_eq!(v_at(11_000)[0], 0.0); // longitudinal untouched
    }

    #[test]
    fn braking_window_occupies_its_own_stripe_band() {
        // The pulse moves the longitudinal coordinate far from the
        // background band, so the spectrum codes inside the annotated
        // window never occur outside it.
        let mut spec = ScenarioSpec::new(120.0, 13);
        spec.noise_amplitude = 0.25;
        spec.maneuvers.push(Maneuver {
            kind: ManeuverKind::Braking,
            t_insert_ms: 50_000,
            magnitude: 8.0,
        });
        let generator = Generator::new(&spec).unwrap();
        let store = build_store(&generator, &cfg(), usize::MAX);
        let mut inside = std::collections::BTreeSet::new();
        let mut outside = std::collections::BTreeSet::new();
        for (t, code) in store.spectrum(10).unwrap() {
            if (50_010..=52_490).contains(&t) {
                inside.insert(code.value());
            } else {
                outside.insert(code.value());
            }
        }
        assert!(!inside.is_empty());
        assert!(inside.is_disjoint(&outside), "stripe band leaked");
    }

    #[test]
    fn background_stays_within_amplitude_bound() {
        let mut spec = ScenarioSpec::new(120.0, 99);
        spec.noise_amplitude = 0.3;
        spec.noise_center = [0.5, -0.25];
        let generator = Generator::new(&spec).unwrap();
        for (_, v) in generator.samples() {
            assert!((v[0] - 0.5).abs() <= 0.3 + 1e-12);
            assert!((v[1] + 0.25).abs() <= 0.3 + 1e-12);
        }
    }

    #[test]
    fn fixed_seed_reproduces_csv_bytes() {
        let mut spec = ScenarioSpec::new(20.0, 42);
        spec.maneuvers.push(Maneuver {
            kind: ManeuverKind::Braking,
            t_insert_ms: 5_000,
            magnitude: 7.5,
        });
        let mut a = Vec::new();
        write_csv(&Generator::new(&spec).unwrap(), &mut a).unwrap();
        let mut b = Vec::new();
        write_csv(&Generator::new(&spec).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());

        let mut other = spec.clone();
        other.rng_seed = 43;
        let mut c = Vec::new();
        write_csv(&Generator::new(&other).unwrap(), &mut c).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn overlapping_maneuvers_are_rejected() {
        let mut spec = ScenarioSpec::new(60.0, 1);
        spec.maneuvers.push(Maneuver {
            kind: ManeuverKind::Braking,
            t_insert_ms: 10_000,
            magnitude: 8.0,
        });
        spec.maneuvers.push(Maneuver {
            kind: ManeuverKind::LaneChange,
            t_insert_ms: 11_000,
            magnitude: 3.0,
        });
        assert!(matches!(
            Generator::new(&spec),
            Err(SynthError::Overlap { first_ms: 10_000, second_ms: 11_000 })
        ));
    }

    #[test]
    fn maneuver_must_fit_recording() {
        let mut spec = ScenarioSpec::new(10.0, 1);
        spec.maneuvers.push(Maneuver {
            kind: ManeuverKind::Braking,
            t_insert_ms: 9_000,
            magnitude: 8.0,
        });
        assert!(matches!(
            Generator::new(&spec),
            Err(SynthError::OutOfRange { t_insert_ms: 9_000 })
        ));
    }

    #[test]
    fn oversized_magnitude_exercises_clamping() {
        let mut spec = ScenarioSpec::new(30.0, 5);
        spec.noise_amplitude = 0.0;
        spec.maneuvers.push(Maneuver {
            kind: ManeuverKind::Braking,
            t_insert_ms: 10_000,
            magnitude: 15.0, // beyond the [-12, 12] store range
        });
        let generator = Generator::new(&spec).unwrap();
        let store = build_store(&generator, &cfg(), usize::MAX);
        store.audit().unwrap();
        // Plateau samples clamp to lattice coordinate 0 in dimension 0.
        let mid = store.sample((11_000 / 10) as usize);
        assert_eq!(store.config().quantize_dim(0, mid.values[0]), 0);
    }

    #[test]
    fn prefix_stores_share_events_within_their_range() {
        let tmp = tempfile::tempdir().unwrap();
        let mut spec = ScenarioSpec::new(400.0, 11);
        spec.noise_amplitude = 0.25;
        // Maneuvers well clear of the 10_000- and 30_000-sample cuts
        // (100 s and 300 s).
        for (i, t) in [20_000i64, 60_000, 140_000, 220_000, 350_000].iter().enumerate() {
            spec.maneuvers.push(Maneuver {
                kind: ManeuverKind::Braking,
                t_insert_ms: *t,
                magnitude: 6.0 + i as f64,
            });
        }
        let dirs = scale_corpus(&spec, &cfg(), &[10_000, 30_000, 40_000], tmp.path()).unwrap();
        assert_eq!(dirs.len(), 3);

        let mask = SearchMask::new(
            "braking",
            vec![StageBox::new(vec![-12.0, -3.0], vec![-2.0, 3.0]).unwrap()],
            TemporalParams::default(),
        )
        .unwrap();

        let stores: Vec<Store> = dirs.iter().map(|d| d.open().unwrap()).collect();
        let events: Vec<Vec<zebra_core::mask::Event>> = stores
            .iter()
            .map(|s| detect::detect(Detector::BfPrimitive, s, &mask).unwrap())
            .collect();
        assert_eq!(events[0].len(), 2); // the 20 s and 60 s brakes
        assert_eq!(events[1].len(), 4); // everything before 300 s
        assert_eq!(events[2].len(), 5);
        for small in 0..2 {
            let t_max = stores[small].manifest().t_max_ms;
            let restricted: Vec<_> = events[small + 1]
                .iter()
                .filter(|e| e.t_end_ms <= t_max)
                .copied()
                .collect();
            assert_eq!(events[small], restricted, "prefix property violated");
        }
    }

    #[test]
    fn empty_ladder_builds_nothing() {
        let tmp = tempfile::tempdir().unwrap();
        let spec = ScenarioSpec::new(1.0, 1);
        let dirs = scale_corpus(&spec, &cfg(), &[], tmp.path()).unwrap();
        assert!(dirs.is_empty());
    }

    #[test]
    fn ladder_must_be_ascending_and_fit() {
        let tmp = tempfile::tempdir().unwrap();
        let spec = ScenarioSpec::new(10.0, 1);
        assert!(matches!(
            scale_corpus(&spec, &cfg(), &[100, 100], tmp.path()),
            Err(CorpusError::NotAscending)
        ));
        assert!(matches!(
            scale_corpus(&spec, &cfg(), &[100, 5_000], tmp.path()),
            Err(CorpusError::TooShort { available: 1_000, requested: 5_000 })
        ));
    }
}
