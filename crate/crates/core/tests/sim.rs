mod common;

use commlearn::codes::{build_tanner, builtin_matrix, Encoder};
use commlearn::sim::*;
use commlearn::train::DataSource;
use commlearn::wbp::{RrdConfig, WeightSet};
use proptest::prelude::*;

use common::textbook_sum_product;

#[test]
fn noiseless_row_runs_to_the_frame_cap() {
    let h = builtin_matrix("bch-63-36").unwrap();
    let g = build_tanner(&h).unwrap();
    let encoder = Encoder::new(&h);
    let cfg = BerConfig {
        stopping: StoppingRule {
            min_bit_errors: 1,
            max_frames: 200,
        },
        data_source: DataSource::RandomCodewords,
        zero_noise: true,
    };
    let decoder = Decoder::Wbp(WeightSet::plain(5, &g, 1.0));
    let p = ber_point(&g, &encoder, &decoder, 0.0, &cfg, 1).unwrap();
    assert_eq!((p.bit_errors, p.frame_errors, p.frames), (0, 0, 200));
    assert_eq!(p.ber, 0.0);
    assert_eq!(p.ci95_low, 0.0);
}

#[test]
fn plain_decoder_error_counts_match_the_oracle() {
    let h = builtin_matrix("bch-63-36").unwrap();
    let g = build_tanner(&h).unwrap();
    let dense = h.to_dense();
    let encoder = Encoder::new(&h);
    let cfg = BerConfig {
        stopping: StoppingRule {
            min_bit_errors: 200,
            max_frames: 2000,
        },
        data_source: DataSource::RandomCodewords,
        zero_noise: false,
    };
    let seed = 2;
    let p = ber_point(
        &g,
        &encoder,
        &Decoder::Wbp(WeightSet::plain(5, &g, 1.0)),
        2.0,
        &cfg,
        seed,
    )
    .unwrap();
    let (mut bit_errors, mut frame_errors) = (0, 0);
    for i in 0..p.frames {
        let (bits, llr) = frame_llrs(&encoder, 2.0, &cfg, seed, i).unwrap();
        let out = textbook_sum_product(&dense, &llr, 5);
        let e = bits
            .iter()
            .zip(&out[4])
            .filter(|(&b, &s)| u8::from(s < 0.0) != b)
            .count() as u64;
        bit_errors += e;
        frame_errors += u64::from(e > 0);
    }
    assert_eq!((p.bit_errors, p.frame_errors), (bit_errors, frame_errors));
    assert!(p.bit_errors >= 200);
}

#[test]
fn rows_are_reproduced_from_their_seed() {
    let h = builtin_matrix("bch-63-36-cr").unwrap();
    let g = build_tanner(&h).unwrap();
    let encoder = Encoder::new(&h);
    let cfg = BerConfig {
        stopping: StoppingRule {
            min_bit_errors: 50,
            max_frames: 500,
        },
        ..BerConfig::default()
    };
    let decoder = Decoder::Rrd {
        weights: WeightSet::plain(2, &g, 0.9),
        config: RrdConfig::new(3, 0.1, 0.9, 0),
    };
    let rows = ber_sweep(&g, &encoder, &decoder, &[2.0, 3.0], &cfg, 9).unwrap();
    for (i, row) in rows.iter().enumerate() {
        let again = ber_point(&g, &encoder, &decoder, row.ebn0_db, &cfg, row.seed).unwrap();
        assert_eq!(&again, row, "row {i}");
    }
    assert!(ber_sweep(&g, &encoder, &decoder, &[], &cfg, 9).is_err());
    assert!(ber_sweep(&g, &encoder, &decoder, &[3.0, 2.0], &cfg, 9).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stopping_rule_is_respected(min_errors in 1u64..60, max_frames in 1u64..80, ebn0 in 0.0f64..4.0, seed: u64) {
        let h = builtin_matrix("bch-15-7").unwrap();
        let g = build_tanner(&h).unwrap();
        let encoder = Encoder::new(&h);
        let cfg = BerConfig {
            stopping: StoppingRule { min_bit_errors: min_errors, max_frames },
            ..BerConfig::default()
        };
        let p = ber_point(&g, &encoder, &Decoder::Wbp(WeightSet::plain(3, &g, 1.0)), ebn0, &cfg, seed).unwrap();
        prop_assert!(p.frames <= max_frames);
        prop_assert!(p.frames == max_frames || p.bit_errors >= min_errors);
        // the rule fired at the first opportunity
        if p.frames > 1 {
            let shorter = BerConfig {
                stopping: StoppingRule { min_bit_errors: min_errors, max_frames: p.frames - 1 },
                ..cfg
            };
            let q = ber_point(&g, &encoder, &Decoder::Wbp(WeightSet::plain(3, &g, 1.0)), ebn0, &shorter, seed).unwrap();
            prop_assert!(q.bit_errors < min_errors);
        }
        prop_assert_eq!(p.bits, 15 * p.frames);
        prop_assert!(p.frame_errors <= p.frames && p.bit_errors <= p.bits);
        prop_assert!(p.ci95_low <= p.ber && p.ber <= p.ci95_high);
    }

    #[test]
    fn wilson_interval_contains_the_estimate(trials in 1u64..100_000, frac in 0.0f64..=1.0) {
        let k = (frac * trials as f64).round() as u64;
        let (lo, hi) = wilson_interval(k, trials, Z95);
        let p = k as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        let (lo2, hi2) = wilson_interval(trials - k, trials, Z95);
        prop_assert!((lo - (1.0 - hi2)).abs() <= 1e-12 && (hi - (1.0 - lo2)).abs() <= 1e-12);
    }
}
