use proptest::prelude::*;
use reanchor::maskmedia::{erode, BinaryMask};
use reanchor::metrics::{boundary_f, evaluate_video, region_j};

/// Boundary by definition: a set pixel on the frame edge or with an unset
/// 4-neighbour.
fn boundary_points(m: &BinaryMask) -> Vec<(i64, i64)> {
    let (w, h) = (m.width() as i64, m.height() as i64);
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if !m.get(r as u32, c as u32) {
                continue;
            }
            let edge = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
                .iter()
                .any(|&(rr, cc)| rr < 0 || cc < 0 || rr >= h || cc >= w || !m.get(rr as u32, cc as u32));
            if edge {
                out.push((r, c));
            }
        }
    }
    out
}

fn matched_fraction(from: &[(i64, i64)], to: &[(i64, i64)], tol: i64) -> f64 {
    let hits = from
        .iter()
        .filter(|(r, c)| to.iter().any(|(r2, c2)| (r - r2).pow(2) + (c - c2).pow(2) <= tol * tol))
        .count();
    hits as f64 / from.len() as f64
}

fn brute_f(pred: &BinaryMask, gt: &BinaryMask, tol: i64) -> f64 {
    let (bp, bg) = (boundary_points(pred), boundary_points(gt));
    match (bp.is_empty(), bg.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => {
            let p = matched_fraction(&bp, &bg, tol);
            let r = matched_fraction(&bg, &bp, tol);
            if p + r == 0.0 {
                0.0
            } else {
                2.0 * p * r / (p + r)
            }
        }
    }
}

/// Random blobs: a union of up to three rectangles plus salt noise.
fn mask_pair() -> impl Strategy<Value = (BinaryMask, BinaryMask, u32)> {
    (1u32..=48, 1u32..=48).prop_flat_map(|(w, h)| {
        let rect = (0..w, 0..h, 1..=w, 1..=h);
        let blob = (prop::collection::vec(rect, 0..=3), prop::collection::vec((0..w, 0..h), 0..6));
        (blob.clone(), blob, 0u32..=5).prop_map(move |(a, b, tol)| (paint(w, h, &a), paint(w, h, &b), tol))
    })
}

type Blob = (Vec<(u32, u32, u32, u32)>, Vec<(u32, u32)>);

fn paint(w: u32, h: u32, blob: &Blob) -> BinaryMask {
    let mut m = BinaryMask::new(w, h).unwrap();
    for &(x, y, rw, rh) in &blob.0 {
        for r in y..(y + rh).min(h) {
            for c in x..(x + rw).min(w) {
                m.set(r, c, true);
            }
        }
    }
    for &(x, y) in &blob.1 {
        m.set(y, x, true);
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn boundary_f_matches_brute_force((pred, gt, tol) in mask_pair()) {
        let fast = boundary_f::<f64>(&pred, &gt, tol).unwrap().f;
        let slow = brute_f(&pred, &gt, tol as i64);
        prop_assert!((fast - slow).abs() <= 1e-9, "{} vs {}", fast, slow);
        prop_assert_eq!(boundary_f::<f64>(&gt, &gt, tol).unwrap().f, 1.0);
        prop_assert!((0.0..=1.0).contains(&fast));
    }

    #[test]
    fn erosion_never_raises_j((_, gt, r) in mask_pair()) {
        let frames = vec![gt.clone(), gt.clone(), gt.clone()];
        let worse = vec![gt.clone(), erode(&gt, r), erode(&gt, r + 1)];
        let perfect = evaluate_video::<f64>(&frames, &frames, 2).unwrap();
        let eroded = evaluate_video::<f64>(&worse, &frames, 2).unwrap();
        prop_assert_eq!(perfect.j_mean, 1.0);
        prop_assert!(eroded.j_mean <= perfect.j_mean);
        prop_assert!((0.0..=1.0).contains(&eroded.jf));
        prop_assert_eq!(eroded.jf, (eroded.j_mean + eroded.f_mean) / 2.0);
    }
}

#[test]
fn squares_offset_beyond_tolerance() {
    let sq = |c0: u32| BinaryMask::from_fn(64, 64, |r, c| (20..36).contains(&r) && (c0..c0 + 16).contains(&c)).unwrap();
    let (p, g) = (sq(10), sq(15));
    let s = boundary_f::<f64>(&p, &g, 2).unwrap();
    let slow = brute_f(&p, &g, 2);
    assert!((s.f - slow).abs() <= 1e-9);
    assert!(s.f < 1.0 && s.f > 0.0);
}

#[test]
fn region_hand_checks() {
    let p = BinaryMask::from_fn(4, 4, |r, c| r < 2 && c < 2).unwrap();
    let g = BinaryMask::from_fn(4, 4, |r, c| r < 2 && (1..3).contains(&c)).unwrap();
    assert!((region_j::<f64>(&p, &g).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    let j32 = region_j::<f32>(&p, &g).unwrap();
    assert!((j32 - 1.0 / 3.0).abs() < 1e-6);
}
