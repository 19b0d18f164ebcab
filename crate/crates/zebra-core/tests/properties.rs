//! Randomized invariants: codec round-trips, box containment, store scans
//! against full-scan filters, and the three detectors against an
//! independently written detection oracle.

use proptest::prelude::*;

use zebra_core::detect::{self, Detector};
use zebra_core::mask::{self, Event, SearchMask, StageBox, TemporalParams};
use zebra_core::morton::{box_to_code_range, morton_decode, morton_encode, MortonCode};
use zebra_core::quant::{DimSpec, LatticePoint, QuantizationConfig};
use zebra_core::store::Store;

/// Random bit-width vector whose sum stays within one 64-bit word.
fn bits_strategy() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(1u32..=16, 1..=4).prop_filter("total bits <= 64", |bits| {
        bits.iter().sum::<u32>() <= 64
    })
}

fn config_for(bits: &[u32]) -> QuantizationConfig {
    QuantizationConfig::new(
        bits.iter()
            .map(|&b| DimSpec::new(-100.0, 100.0, b))
            .collect(),
    )
    .unwrap()
}

fn point_in(
    config: &QuantizationConfig,
    fractions: &[f64],
    lo: Option<&[u64]>,
    hi: Option<&[u64]>,
) -> LatticePoint {
    let coords: Vec<u64> = (0..config.dims())
        .map(|d| {
            let min = lo.map_or(0, |l| l[d]);
            let max = hi.map_or(config.dim(d).max_coord(), |h| h[d]);
            min + ((max - min) as f64 * fractions[d]) as u64
        })
        .collect();
    LatticePoint::new(coords, config).unwrap()
}

proptest! {
    #[test]
    fn encode_decode_round_trip(
        bits in bits_strategy(),
        fractions in prop::collection::vec(0.0f64..1.0, 4),
    ) {
        let config = config_for(&bits);
        let p = point_in(&config, &fractions[..config.dims()], None, None);
        let code = morton_encode(&p, &config).unwrap();
        prop_assert!(code.value() <= config.max_code());
        let back = morton_decode(code, &config).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn boxes_never_lose_points(
        bits in bits_strategy(),
        corner_a in prop::collection::vec(0.0f64..1.0, 4),
        corner_b in prop::collection::vec(0.0f64..1.0, 4),
        inner in prop::collection::vec(0.0f64..=1.0, 4),
    ) {
        let config = config_for(&bits);
        let a = point_in(&config, &corner_a[..config.dims()], None, None);
        let b = point_in(&config, &corner_b[..config.dims()], None, None);
        let lo: Vec<u64> = a.coords().iter().zip(b.coords()).map(|(&x, &y)| x.min(y)).collect();
        let hi: Vec<u64> = a.coords().iter().zip(b.coords()).map(|(&x, &y)| x.max(y)).collect();
        let lo = LatticePoint::new(lo, &config).unwrap();
        let hi = LatticePoint::new(hi, &config).unwrap();
        let p = point_in(&config, &inner[..config.dims()], Some(lo.coords()), Some(hi.coords()));

        let (c_lo, c_hi) = box_to_code_range(&lo, &hi, &config).unwrap();
        let c = morton_encode(&p, &config).unwrap();
        prop_assert!(c_lo <= c && c <= c_hi, "point escaped its box range");
    }

    #[test]
    fn quantization_error_is_within_half_step(
        min in -1000.0f64..1000.0,
        width in 0.001f64..2000.0,
        bits in 1u32..=16,
        frac in 0.0f64..=1.0,
    ) {
        let config = QuantizationConfig::new(vec![DimSpec::new(min, min + width, bits)]).unwrap();
        let v = min + width * frac;
        let q = config.quantize_dim(0, v);
        let back = config.dequantize_dim(0, q);
        let step = config.dim(0).step();
        prop_assert!((back - v).abs() <= step * 0.5000001, "v={v} back={back} step={step}");
    }

    #[test]
    fn mask_text_round_trips(
        stages in prop::collection::vec(
            prop::collection::vec((-50.0f64..50.0, 0.0f64..20.0), 1..=3),
            1..=3,
        ),
        min_dur in 1i64..5_000,
        dur_extra in 0i64..5_000,
        min_gap in -1_000i64..1_000,
        gap_extra in 0i64..3_000,
        outlier in 0i64..200,
    ) {
        let dims = stages[0].len();
        prop_assume!(stages.iter().all(|s| s.len() == dims));
        let boxes: Vec<StageBox> = stages
            .iter()
            .map(|s| {
                let lo: Vec<f64> = s.iter().map(|&(a, _)| a).collect();
                let hi: Vec<f64> = s.iter().map(|&(a, w)| a + w).collect();
                StageBox::new(lo, hi).unwrap()
            })
            .collect();
        let params = TemporalParams {
            min_duration_ms: min_dur,
            max_duration_ms: min_dur + dur_extra,
            min_gap_ms: min_gap,
            max_gap_ms: min_gap + gap_extra,
            max_outlier_gap_ms: outlier,
        };
        let mask = SearchMask::new("round trip", boxes, params).unwrap();
        let back = mask::parse_mask(&mask::render_mask(&mask)).unwrap();
        prop_assert_eq!(back, mask);
    }
}

/// Straight-line reimplementation of the whole detection pipeline, written
/// without the segment/chain helpers so a shared bug cannot hide.
fn oracle_detect(store: &Store, mask: &SearchMask) -> Vec<Event> {
    let config = store.config();
    let p = mask.params();

    let stage_segments: Vec<Vec<(i64, i64)>> = mask
        .stages()
        .iter()
        .map(|stage| {
            let q_lo: Vec<u64> = (0..config.dims())
                .map(|d| config.quantize_dim(d, stage.lo()[d]))
                .collect();
            let q_hi: Vec<u64> = (0..config.dims())
                .map(|d| config.quantize_dim(d, stage.hi()[d]))
                .collect();
            let times: Vec<i64> = store
                .samples()
                .filter(|s| {
                    (0..config.dims()).all(|d| {
                        let q = config.quantize_dim(d, s.values[d]);
                        q_lo[d] <= q && q <= q_hi[d]
                    })
                })
                .map(|s| s.t_ms)
                .collect();

            let mut segments = Vec::new();
            let mut run: Vec<i64> = Vec::new();
            for &t in &times {
                if let Some(&last) = run.last() {
                    if t - last > p.max_outlier_gap_ms {
                        push_run(&run, p, &mut segments);
                        run.clear();
                    }
                }
                run.push(t);
            }
            push_run(&run, p, &mut segments);
            segments
        })
        .collect();

    fn push_run(run: &[i64], p: &TemporalParams, out: &mut Vec<(i64, i64)>) {
        if let (Some(&first), Some(&last)) = (run.first(), run.last()) {
            let span = last - first;
            if p.min_duration_ms <= span && span <= p.max_duration_ms {
                out.push((first, last));
            }
        }
    }

    fn extend(
        prev_end: i64,
        stage: usize,
        segments: &[Vec<(i64, i64)>],
        p: &TemporalParams,
    ) -> Option<i64> {
        if stage == segments.len() {
            return Some(prev_end);
        }
        for &(start, end) in &segments[stage] {
            let gap = start - prev_end;
            if gap >= p.min_gap_ms && gap <= p.max_gap_ms {
                if let Some(chain_end) = extend(end, stage + 1, segments, p) {
                    return Some(chain_end);
                }
            }
        }
        None
    }

    let mut events = Vec::new();
    for &(start, end) in &stage_segments[0] {
        if let Some(chain_end) = extend(end, 1, &stage_segments, p) {
            events.push(Event {
                t_start_ms: start,
                t_end_ms: chain_end,
            });
        }
    }
    events
}

/// Random-walk store on a deliberately coarse lattice so samples land on
/// box edges often.
fn walk_store(
    seed: u64,
    n: usize,
    jump_every: usize,
) -> Store {
    let config = QuantizationConfig::uniform(2, -10.0, 10.0, 6).unwrap();
    let mut b = Store::builder(config);
    let mut x: u64 = seed | 1;
    let mut next = move || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        x
    };
    let mut t = 0i64;
    let mut v = [0.0f64, 0.0];
    for i in 0..n {
        t += 10;
        if jump_every > 0 && i % jump_every == jump_every - 1 {
            t += 10 + (next() % 120) as i64;
        }
        for val in v.iter_mut() {
            *val += (next() % 2001) as f64 / 1000.0 - 1.0;
            *val = val.clamp(-10.5, 10.5); // occasionally beyond the range
        }
        b.push(t, &v).unwrap();
    }
    b.finish()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scan_code_range_equals_filtered_full_scan(
        seed in 1u64..u64::MAX,
        lo in 0u64..4096,
        width in 0u64..4096,
    ) {
        let store = walk_store(seed, 300, 13);
        let hi = lo + width;
        let got: Vec<(u64, i64)> = store
            .scan_code_range(MortonCode::from_raw(lo), MortonCode::from_raw(hi))
            .unwrap()
            .map(|e| (e.code.value(), e.t_ms))
            .collect();
        let want: Vec<(u64, i64)> = store
            .index_entries()
            .map(|e| (e.code.value(), e.t_ms))
            .filter(|&(c, _)| lo <= c && c <= hi)
            .collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn detectors_agree_with_each_other_and_the_oracle(
        seed in 1u64..u64::MAX,
        n in 200usize..900,
        jump_every in 5usize..40,
        stage_corners in prop::collection::vec(
            prop::collection::vec((-10.0f64..10.0, 0.5f64..12.0), 2),
            1..=3,
        ),
        min_dur in 20i64..200,
        dur_extra in 0i64..400,
        min_gap in -150i64..150,
        gap_extra in 0i64..500,
        outlier in 0i64..80,
    ) {
        let store = walk_store(seed, n, jump_every);
        let stages: Vec<StageBox> = stage_corners
            .iter()
            .map(|dims| {
                let lo: Vec<f64> = dims.iter().map(|&(a, _)| a).collect();
                let hi: Vec<f64> = dims.iter().map(|&(a, w)| (a + w).min(10.0)).collect();
                StageBox::new(lo, hi).unwrap()
            })
            .collect();
        let params = TemporalParams {
            min_duration_ms: min_dur,
            max_duration_ms: min_dur + dur_extra,
            min_gap_ms: min_gap,
            max_gap_ms: min_gap + gap_extra,
            max_outlier_gap_ms: outlier,
        };
        let mask = SearchMask::new("prop", stages, params).unwrap();

        let primitive = detect::detect(Detector::BfPrimitive, &store, &mask).unwrap();
        let improved = detect::detect(Detector::BfImproved, &store, &mask).unwrap();
        let indexed = detect::detect(Detector::Sfc, &store, &mask).unwrap();
        let oracle = oracle_detect(&store, &mask);

        prop_assert_eq!(&primitive, &oracle, "bf_primitive diverged from oracle");
        prop_assert_eq!(&improved, &oracle, "bf_improved diverged from oracle");
        prop_assert_eq!(&indexed, &oracle, "sfc diverged from oracle");
    }
}
