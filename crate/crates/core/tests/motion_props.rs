use corola::bench::{generate, SyntheticSpec};
use corola::motion::{align_frames, fill_missing, parse_transforms, track_frame, warp_model, warp_plane, AffineTransform};
use corola::{ModelState, Params};
use proptest::prelude::*;

fn plane(w: usize, h: usize) -> Vec<f64> {
    (0..w * h).map(|i| ((i * 7919) % 101) as f64 / 100.0).collect()
}

proptest! {
    #[test]
    fn integer_shift_round_trip(dx in -3i32..=3, dy in -2i32..=2) {
        let (w, h) = (12, 8);
        let v = plane(w, h);
        let t = AffineTransform::translation(f64::from(dx), f64::from(dy));
        let (fwd, miss_f) = warp_plane(&v, w, h, &t).unwrap();
        let (back, miss_b) = warp_plane(&fwd, w, h, &t.inverse()).unwrap();
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                // pixels whose round trip never left the image come back exactly
                let (fx, fy) = (x as i32 + dx, y as i32 + dy);
                let stays = fx >= 0 && fy >= 0 && fx < w as i32 && fy < h as i32;
                if stays {
                    prop_assert!(!miss_b[i]);
                    prop_assert!((back[i] - v[i]).abs() < 1e-12);
                }
                let src = (x as i32 - dx, y as i32 - dy);
                let has_src = src.0 >= 0 && src.1 >= 0 && src.0 < w as i32 && src.1 < h as i32;
                prop_assert_eq!(miss_f[i], !has_src);
            }
        }
    }

    #[test]
    fn composition_matches_sequential_application(
        a in prop::array::uniform6(-0.3f64..0.3),
        b in prop::array::uniform6(-0.3f64..0.3),
        x in -10.0f64..10.0,
        y in -10.0f64..10.0,
    ) {
        let mk = |p: [f64; 6]| AffineTransform::new(1.0 + p[0], p[1], 10.0 * p[2], p[3], 1.0 + p[4], 10.0 * p[5]).unwrap();
        let (s, t) = (mk(a), mk(b));
        let (sx, sy) = s.apply(x, y);
        let (want_x, want_y) = t.apply(sx, sy);
        let (got_x, got_y) = s.then(&t).apply(x, y);
        prop_assert!((got_x - want_x).abs() < 1e-9 && (got_y - want_y).abs() < 1e-9);
        let (ix, iy) = s.inverse().apply(sx, sy);
        prop_assert!((ix - x).abs() < 1e-9 && (iy - y).abs() < 1e-9);
    }
}

fn small_state() -> (ModelState, Vec<corola::Frame>) {
    let spec = SyntheticSpec {
        width: 20,
        height: 12,
        frames: 30,
        rank: 2,
        object_width: 3,
        object_height: 3,
        snr: 20.0,
        seed: 4,
    };
    let seq = generate(&spec).unwrap();
    let params = Params::new(3);
    let n0 = params.init_frames();
    (ModelState::initialize(&seq.frames[..n0], params).unwrap(), seq.frames)
}

#[test]
fn identity_warp_changes_nothing() {
    let (state, _) = small_state();
    let (warped, report) = warp_model(&state, &AffineTransform::identity()).unwrap();
    assert_eq!(warped, state);
    assert_eq!(report.missing_count(), 0);
}

#[test]
fn shift_flags_and_fills_entering_columns() {
    let (state, frames) = small_state();
    let (warped, report) = warp_model(&state, &AffineTransform::translation(-2.0, 0.0)).unwrap();
    assert_eq!(report.missing_count(), 2 * 12);
    for y in 0..12 {
        for x in 0..20 {
            assert_eq!(report.missing[y * 20 + x], x >= 18);
        }
    }
    let filled = fill_missing(&warped, &frames[10], &report).unwrap();
    let u = filled.basis().matrix();
    assert!(u.iter().all(|v| v.is_finite()));
    // filled rows are no longer zero
    assert!((0..u.ncols()).any(|j| u[(19, j)] != 0.0));
}

#[test]
fn identity_tracking_equals_static_processing() {
    let (state, frames) = small_state();
    let mut a = state.clone();
    let mut b = state;
    for x in &frames[10..] {
        let oa = a.process_frame(x).unwrap();
        let (ob, _) = track_frame(&mut b, x, &AffineTransform::identity()).unwrap();
        assert_eq!(oa.mask, ob.mask);
        assert_eq!(oa.background, ob.background);
        assert_eq!(oa.trace, ob.trace);
    }
    assert_eq!(a, b);
}

#[test]
fn alignment_undoes_known_shifts() {
    let w = 16;
    let world: Vec<f64> = (0..40 * 4).map(|i| ((i % 40) as f64 * 0.37).sin() * 0.4 + 0.5).collect();
    let frame = |k: usize| {
        let px = (0..4 * w).map(|i| world[(i / w) * 40 + i % w + k]).collect();
        corola::Frame::new(w, 4, px).unwrap()
    };
    let frames: Vec<_> = (0..4).map(frame).collect();
    let t = vec![AffineTransform::translation(-1.0, 0.0); 4];
    let aligned = align_frames(&frames, &t).unwrap();
    for a in &aligned {
        for y in 0..4 {
            for x in 0..w - 3 {
                assert!((a.get(x, y) - frames[3].get(x, y)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn sidecar_parsing() {
    let t = parse_transforms("# header\n1 0 0 0 1 0\n\n1 0 -1 0 1 0.5 # pan\n").unwrap();
    assert_eq!(t.len(), 2);
    assert_eq!(t[1].to_row(), [1.0, 0.0, -1.0, 0.0, 1.0, 0.5]);
    assert!(parse_transforms("1 0 0").is_err());
    assert!(parse_transforms("1 0 0 0 x 0").is_err());
    assert!(parse_transforms("0 0 0 0 0 0").is_err());
}
