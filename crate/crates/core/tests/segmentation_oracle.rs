use corola::segmentation::{brute_force_segment, energy, segment, segment_with_flow, threshold_mask, Connectivity, MrfProblem};
use corola::ForegroundMask;
use proptest::prelude::*;

/// Costs on a 1/64 lattice are exact in binary and in the 1e-6 capacity grid.
fn cost() -> impl Strategy<Value = f64> {
    (0u32..192).prop_map(|k| f64::from(k) / 64.0)
}

fn problem() -> impl Strategy<Value = MrfProblem> {
    (1usize..=4, 1usize..=4)
        .prop_flat_map(|(w, h)| {
            let m = w * h;
            (
                Just((w, h)),
                prop::collection::vec(cost(), m),
                prop::collection::vec(cost(), m),
                prop::sample::select(vec![0.0, 0.3, 1.0]),
                any::<bool>(),
            )
        })
        .prop_map(|((w, h), bg, fg, gamma, eight)| MrfProblem {
            unary_bg: bg,
            unary_fg: fg,
            gamma,
            width: w,
            height: h,
            connectivity: if eight { Connectivity::Eight } else { Connectivity::Four },
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn graph_cut_is_exact(p in problem()) {
        let cut = segment(&p).unwrap();
        let brute = brute_force_segment(&p).unwrap();
        prop_assert_eq!(energy(&cut, &p).unwrap(), energy(&brute, &p).unwrap());
    }
}

proptest! {
    #[test]
    fn never_worse_than_simple_labellings(p in problem()) {
        let e = energy(&segment(&p).unwrap(), &p).unwrap();
        let m = p.len();
        for s in [ForegroundMask::background(m), ForegroundMask::foreground(m), threshold_mask(&p)] {
            prop_assert!(e <= energy(&s, &p).unwrap());
        }
    }

    #[test]
    fn raising_beta2_shrinks_the_mask(p in problem(), extra in 0u32..64) {
        let beta2 = 0.5;
        let with = |b: f64| MrfProblem { unary_fg: vec![b; p.len()], ..p.clone() };
        let low = segment(&with(beta2)).unwrap();
        let high = segment(&with(beta2 + f64::from(extra) / 64.0)).unwrap();
        // minimal minimizers are nested
        for i in 0..p.len() {
            prop_assert!(!high.is_foreground(i) || low.is_foreground(i));
        }
    }

    #[test]
    fn flow_accounts_for_energy(p in problem()) {
        let s = segment_with_flow(&p).unwrap();
        prop_assert!((s.cut_energy() - energy(&s.mask, &p).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn hand_examples() {
    let flat = |bg: f64, fg: f64, gamma: f64, w: usize, h: usize| MrfProblem {
        unary_bg: vec![bg; w * h],
        unary_fg: vec![fg; w * h],
        gamma,
        width: w,
        height: h,
        connectivity: Connectivity::Four,
    };
    assert!((energy(&ForegroundMask::background(10), &flat(0.1, 0.2, 0.7, 10, 1)).unwrap() - 1.0).abs() < 1e-12);
    assert!((energy(&ForegroundMask::foreground(10), &flat(0.0, 0.2, 0.7, 10, 1)).unwrap() - 2.0).abs() < 1e-12);
    let checker = ForegroundMask::from_bits(vec![true, false, false, true]);
    assert_eq!(energy(&checker, &flat(0.0, 0.0, 1.0, 2, 2)).unwrap(), 4.0);
    // zero background cost: nothing is foreground
    assert_eq!(segment(&flat(0.0, 0.3, 1.0, 5, 5)).unwrap().count_foreground(), 0);
    // 1x2: split unaries, strong coupling picks the cheaper uniform labelling
    let p = MrfProblem {
        unary_bg: vec![1.0, 0.0],
        unary_fg: vec![0.0, 0.4],
        gamma: 5.0,
        ..flat(0.0, 0.0, 0.0, 2, 1)
    };
    assert_eq!(segment(&p).unwrap().bits(), &[true, true]);
}

#[test]
fn brute_force_refuses_large_grids() {
    let p = MrfProblem {
        unary_bg: vec![0.0; 21],
        unary_fg: vec![0.0; 21],
        gamma: 0.0,
        width: 21,
        height: 1,
        connectivity: Connectivity::Four,
    };
    assert!(brute_force_segment(&p).is_err());
}
