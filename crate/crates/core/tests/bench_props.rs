use corola::bench::{
    confusion, f_measure, generate, precision_recall, run_baseline, sweep, ConfusionCounts, SweepAxis, SweepConfig,
    SyntheticSpec, ThresholdBaseline,
};
use corola::{ForegroundMask, Params};
use proptest::prelude::*;

fn naive_counts(pred: &[bool], gt: &[bool]) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for i in 0..pred.len() {
        if pred[i] && gt[i] {
            c.tp += 1;
        } else if pred[i] {
            c.fp += 1;
        } else if gt[i] {
            c.fn_ += 1;
        } else {
            c.tn += 1;
        }
    }
    c
}

proptest! {
    #[test]
    fn confusion_matches_loop_oracle(bits in prop::collection::vec((any::<bool>(), any::<bool>()), 1..200)) {
        let (p, g): (Vec<bool>, Vec<bool>) = bits.into_iter().unzip();
        let c = confusion(&ForegroundMask::from_bits(p.clone()), &ForegroundMask::from_bits(g.clone())).unwrap();
        prop_assert_eq!(c, naive_counts(&p, &g));
        prop_assert_eq!(c.total(), p.len());
    }

    #[test]
    fn f_measure_bounds(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
        let f = f_measure(Some(p), Some(r)).unwrap();
        prop_assert_eq!(f, f_measure(Some(r), Some(p)).unwrap());
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(f <= 2.0 * p.min(r) + 1e-15);
    }
}

#[test]
fn generator_properties() {
    let spec = SyntheticSpec {
        frames: 200,
        ..SyntheticSpec::default()
    };
    let a = generate(&spec).unwrap();
    let b = generate(&spec).unwrap();
    assert_eq!(a.frames, b.frames);
    assert!(a.masks.iter().all(|m| m.count_foreground() == 100));
    // bounce: 0..=90 then back
    let xs: Vec<usize> = (0..200).map(|k| spec.object_x(k)).collect();
    assert_eq!(&xs[..3], &[0, 1, 2]);
    assert_eq!(xs[90], 90);
    assert_eq!(xs[91], 89);
    assert_eq!(xs[180], 0);
    assert_eq!(xs[181], 1);

    // noise level: compare against the noiseless sequence outside the object
    let clean = generate(&SyntheticSpec { snr: f64::INFINITY, ..spec }).unwrap();
    let mut bg = Vec::new();
    for row in &clean.background {
        bg.extend(row.iter().map(|v| clean.map.to_raw(*v)));
    }
    let mean = bg.iter().sum::<f64>() / bg.len() as f64;
    let var_b = bg.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / bg.len() as f64;
    let mut diffs = Vec::new();
    for k in 0..spec.frames {
        for i in 0..spec.pixels() {
            let (x, y) = (a.frames[k][i], clean.frames[k][i]);
            // skip object pixels and pixels touched by clamping
            if !a.masks[k].is_foreground(i) && x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0 {
                diffs.push(a.map.to_raw(x) - clean.map.to_raw(y));
            }
        }
    }
    let dm = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let var_e = diffs.iter().map(|v| (v - dm).powi(2)).sum::<f64>() / diffs.len() as f64;
    let snr = (var_b / var_e).sqrt();
    assert!((snr / spec.snr - 1.0).abs() < 0.05, "empirical SNR {snr}");
}

#[test]
fn hand_metric_cases() {
    let c = ConfusionCounts { tp: 50, fp: 50, tn: 0, fn_: 0 };
    let (p, r) = precision_recall(&c);
    assert_eq!((p, r), (Some(0.5), Some(1.0)));
    assert_eq!(f_measure(p, r), Some(2.0 * 0.5 / 1.5));
}

#[test]
fn small_sweep_runs() {
    let spec = SyntheticSpec {
        width: 30,
        height: 12,
        frames: 40,
        rank: 2,
        object_width: 4,
        object_height: 4,
        snr: 10.0,
        seed: 0,
    };
    let mut cfg = SweepConfig::new(SweepAxis::Snr, vec![10.0, 2.0], spec, Params::new(3));
    cfg.burn_in = 15;
    let rows = sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert!(row.corola.frames.iter().all(|(k, _)| *k >= 15));
        assert_eq!(row.corola.traces.len(), 40 - 10);
    }
    let seq = generate(&spec).unwrap();
    let base = run_baseline(&seq, &ThresholdBaseline::default(), 15).unwrap();
    assert_eq!(base.frames.len(), 25);
}
