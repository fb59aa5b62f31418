use chromatwin::vision::{
    add_gaussian_noise, detect_markers, estimate_homography, extract_roi_mean, generate_template,
    perspective_view, process_submission, render_sample, warp_to_canonical, Image, MarkerDetection,
    TemplateGeometry, VisionError,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn by_id(mut d: Vec<MarkerDetection>) -> Vec<MarkerDetection> {
    d.sort_by_key(|m| m.id);
    d
}

fn max_corner_error(d: &[MarkerDetection], expected: impl Fn(usize) -> [[f64; 2]; 4]) -> f64 {
    let mut worst: f64 = 0.0;
    for m in d {
        for (got, want) in m.corners.iter().zip(expected(m.id)) {
            worst = worst.max((got[0] - want[0]).hypot(got[1] - want[1]));
        }
    }
    worst
}

fn assert_close(got: [f64; 3], want: [f64; 3], tol: f64) {
    for c in 0..3 {
        assert!((got[c] - want[c]).abs() <= tol, "{got:?} vs {want:?} (tol {tol})");
    }
}

#[test]
fn default_template_round_trip() {
    let g = TemplateGeometry::default();
    let d = by_id(detect_markers(&generate_template(&g).unwrap()));
    assert_eq!(d.iter().map(|m| m.id).collect::<Vec<_>>(), [0, 1, 2, 3]);
    assert!(d.iter().all(|m| m.rotation == 0 && m.bit_errors == 0));
    assert!(max_corner_error(&d, |id| g.marker_corners(id)) < 0.5);
}

#[test]
fn warped_template_round_trip() {
    let g = TemplateGeometry::default();
    let page = generate_template(&g).unwrap();
    for (yaw, pitch) in [(30.0, 0.0), (0.0, 30.0), (-30.0, 0.0), (0.0, -25.0), (20.0, 20.0), (-15.0, 25.0)] {
        let view = perspective_view(g.width, g.height, yaw, pitch, 12).unwrap();
        let photo = view.render(&page, [40, 40, 40]).unwrap();
        let d = by_id(detect_markers(&photo));
        assert_eq!(d.iter().map(|m| m.id).collect::<Vec<_>>(), [0, 1, 2, 3], "yaw {yaw} pitch {pitch}");
        let err = max_corner_error(&d, |id| g.marker_corners(id).map(|p| view.homography.apply(p).unwrap()));
        assert!(err < 1.5, "yaw {yaw} pitch {pitch}: corner error {err}");
    }
}

#[test]
fn rotated_photo_keeps_marker_corner_order() {
    let g = TemplateGeometry::default();
    let page = generate_template(&g).unwrap().rotate90();
    let d = by_id(detect_markers(&page));
    assert_eq!(d.len(), 4);
    let h = g.height as f64;
    let err = max_corner_error(&d, |id| g.marker_corners(id).map(|p| [h - p[1], p[0]]));
    assert!(err < 0.5);
    assert!(d.iter().all(|m| m.rotation == 90));
}

#[test]
fn unwarped_submission_recovers_fill() {
    let g = TemplateGeometry::default();
    for fill in [[182, 95, 23], [4, 90, 152], [250, 250, 250], [0, 0, 0]] {
        let s = process_submission(&render_sample(&g, fill).unwrap(), &g).unwrap();
        assert_close(s.color.channels(), fill.map(f64::from), 1.0);
        assert_eq!(s.diagnostics.marker_count, 4);
        assert_eq!(s.diagnostics.marker_ids, [0, 1, 2, 3]);
        assert!(s.diagnostics.reprojection_rms < 0.5);
        assert!(s.diagnostics.color_correction.is_none());
    }
}

#[test]
fn warped_submission_recovers_fill() {
    let g = TemplateGeometry::default();
    for fill in [[182, 95, 23], [4, 90, 152]] {
        let page = render_sample(&g, fill).unwrap();
        for (yaw, pitch) in [(30.0, 0.0), (0.0, 30.0), (20.0, -20.0)] {
            let view = perspective_view(g.width, g.height, yaw, pitch, 10).unwrap();
            let photo = view.render(&page, [30, 30, 30]).unwrap();
            let s = process_submission(&photo, &g).unwrap();
            assert_close(s.color.channels(), fill.map(f64::from), 2.0);
            assert!(s.diagnostics.reprojection_rms < 1.5);
        }
    }
}

#[test]
fn noisy_warped_submission_within_five() {
    let g = TemplateGeometry::default();
    let fill = [120, 60, 200];
    let page = render_sample(&g, fill).unwrap();
    let view = perspective_view(g.width, g.height, 25.0, 10.0, 10).unwrap();
    for seed in 0..3 {
        let photo = add_gaussian_noise(&view.render(&page, [30, 30, 30]).unwrap(), 2.0, seed);
        let s = process_submission(&photo, &g).unwrap();
        assert_close(s.color.channels(), fill.map(f64::from), 5.0);
    }
}

#[test]
fn three_markers_rejected_with_count() {
    let g = TemplateGeometry::default();
    let mut img = render_sample(&g, [4, 90, 152]).unwrap();
    let r = g.marker_rect(3);
    img.fill_rect(r.x0, r.y0, r.x1, r.y1, [255; 3]);
    assert_eq!(process_submission(&img, &g), Err(VisionError::TooFewMarkers { found: 3 }));
    let blank = Image::new(200, 200, [255; 3]).unwrap();
    assert_eq!(process_submission(&blank, &g), Err(VisionError::TooFewMarkers { found: 0 }));
}

#[test]
fn known_warp_round_trip_recovers_interior() {
    let g = TemplateGeometry::default();
    let page = render_sample(&g, [182, 95, 23]).unwrap();
    let view = perspective_view(g.width, g.height, 15.0, -10.0, 8).unwrap();
    let photo = view.render(&page, [0, 0, 0]).unwrap();
    let back = warp_to_canonical(&photo, &view.homography.inverse().unwrap(), &g).unwrap();
    let c = g.container;
    for y in (c.y0 + 4..c.y1 - 4).step_by(7) {
        for x in (c.x0 + 4..c.x1 - 4).step_by(7) {
            let (a, b) = (back.image.get(x, y), page.get(x, y));
            for ch in 0..3 {
                assert!((a[ch] as i32 - b[ch] as i32).abs() <= 2);
            }
        }
    }
}

#[test]
fn roi_mean_matches_naive_loop() {
    let g = TemplateGeometry::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data: Vec<u8> = (0..g.width * g.height * 3).map(|_| rng.random()).collect();
    let img = Image::from_raw(g.width, g.height, data).unwrap();
    let roi = g.roi();
    let mut sum = [0.0f64; 3];
    let mut n = 0.0;
    for y in 0..g.height {
        for x in 0..g.width {
            let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
            if cx >= roi.x0 && cx < roi.x1 && cy >= roi.y0 && cy < roi.y1 {
                let p = img.get(x, y);
                for c in 0..3 {
                    sum[c] += p[c] as f64;
                }
                n += 1.0;
            }
        }
    }
    let got = extract_roi_mean(&img, &g).unwrap().channels();
    for c in 0..3 {
        assert!((got[c] - sum[c] / n).abs() < 1e-9);
    }
}

#[test]
fn roi_mean_invariant_under_quarter_turns() {
    let g = TemplateGeometry::layout(600, 600, 60, 20, 0.3).unwrap();
    let mut img = render_sample(&g, [10, 200, 90]).unwrap();
    // Four-fold symmetric pattern: a centered square of another color.
    img.fill_rect(280, 280, 320, 320, [250, 5, 60]);
    let base = extract_roi_mean(&img, &g).unwrap();
    let mut r = img;
    for _ in 0..3 {
        r = r.rotate90();
        assert_eq!(extract_roi_mean(&r, &g).unwrap(), base);
    }
}

#[test]
fn homography_is_exact_on_defining_points() {
    let g = TemplateGeometry::default();
    let view = perspective_view(g.width, g.height, 28.0, 12.0, 5).unwrap();
    let src = g.marker_centers().map(|p| view.homography.apply(p).unwrap());
    let h = estimate_homography(&src, &g.marker_centers()).unwrap();
    for (s, d) in src.iter().zip(g.marker_centers()) {
        let p = h.apply(*s).unwrap();
        assert!((p[0] - d[0]).abs() < 1e-6 && (p[1] - d[1]).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn any_valid_geometry_yields_its_four_markers(
        width in 220usize..520,
        height in 220usize..620,
        marker in 24usize..80,
        margin in 6usize..40,
        roi in 0.05f64..1.0,
    ) {
        let Ok(g) = TemplateGeometry::layout(width, height, marker, margin, roi) else {
            return Err(TestCaseError::reject("invalid layout"));
        };
        let d = by_id(detect_markers(&generate_template(&g).unwrap()));
        prop_assert_eq!(d.iter().map(|m| m.id).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        prop_assert!(max_corner_error(&d, |id| g.marker_corners(id)) < 0.5);
    }
}
