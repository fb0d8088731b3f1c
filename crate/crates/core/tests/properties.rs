use drsynth_core::annotator::Annotation;
use drsynth_core::assets::ImageAsset;
use drsynth_core::augmentor::{augment, crop, flip_horizontal, jitter_boxes, resize, Sample};
use drsynth_core::config::AugmentationParams;
use drsynth_core::evaluator::{average_precision, iou, Interpolation, MatchLabel};
use drsynth_core::RngStream;
use proptest::prelude::*;

fn arb_box(w: u32, h: u32) -> impl Strategy<Value = [f64; 4]> {
    (0..w - 1, 0..h - 1).prop_flat_map(move |(l, t)| (Just(l), Just(t), l + 1..=w, t + 1..=h)).prop_map(|(l, t, r, b)| {
        [f64::from(l), f64::from(t), f64::from(r), f64::from(b)]
    })
}

fn arb_sample() -> impl Strategy<Value = Sample> {
    (8u32..40, 8u32..30).prop_flat_map(|(w, h)| {
        (
            proptest::collection::vec(any::<u8>(), (w * h * 3) as usize),
            proptest::collection::vec(arb_box(w, h), 0..5),
        )
            .prop_map(move |(px, boxes)| Sample {
                image: ImageAsset::new(w, h, px).unwrap(),
                boxes: boxes.into_iter().map(|b| Annotation::from_box("Car", b)).collect(),
            })
    })
}

fn valid(s: &Sample) -> bool {
    let (w, h) = (f64::from(s.image.width), f64::from(s.image.height));
    s.boxes.iter().all(|a| {
        let [l, t, r, b] = a.bbox;
        l < r && t < b && l >= 0.0 && t >= 0.0 && r <= w && b <= h
    })
}

fn arb_labels() -> impl Strategy<Value = Vec<(f64, MatchLabel)>> {
    proptest::collection::vec(
        (0.0f64..1.0, prop_oneof![Just(MatchLabel::TruePositive), Just(MatchLabel::FalsePositive), Just(MatchLabel::Ignored)]),
        0..20,
    )
}

proptest! {
    #[test]
    fn iou_symmetric_and_bounded(a in arb_box(50, 50), b in arb_box(50, 50)) {
        let x = iou(&a, &b);
        prop_assert_eq!(x, iou(&b, &a));
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn flip_is_involution(s in arb_sample()) {
        let back = flip_horizontal(&flip_horizontal(&s));
        prop_assert_eq!(&back.image, &s.image);
        for (a, b) in back.boxes.iter().zip(&s.boxes) {
            prop_assert_eq!(a.bbox, b.bbox);
        }
    }

    #[test]
    fn op_chains_keep_boxes_valid(s in arb_sample(), seed in any::<u64>(), scale in 0.5f64..1.5, retain in 0.3f64..1.0) {
        let mut rng = RngStream::from_seed(seed);
        let mut cur = flip_horizontal(&s);
        prop_assert!(valid(&cur));
        cur = resize(&cur, scale);
        prop_assert!(valid(&cur));
        let (w, h) = (cur.image.width, cur.image.height);
        let cw = ((f64::from(w) * retain).round() as u32).clamp(1, w);
        let ch = ((f64::from(h) * retain).round() as u32).clamp(1, h);
        cur = crop(&cur, [w - cw, 0, cw, ch], 0.25).unwrap();
        prop_assert!(valid(&cur));
        cur = jitter_boxes(&cur, 0.2, &mut rng);
        prop_assert!(valid(&cur));
        let out = augment(&s, &AugmentationParams::default(), &mut rng);
        prop_assert!(valid(&out.into_sample()));
    }

    #[test]
    fn photometric_ops_keep_boxes(s in arb_sample(), seed in any::<u64>()) {
        let params = AugmentationParams::default().gated(true, false);
        let out = augment(&s, &params, &mut RngStream::from_seed(seed));
        prop_assert_eq!(out.boxes, s.boxes);
        prop_assert_eq!((out.image.width, out.image.height), (s.image.width, s.image.height));
    }

    #[test]
    fn ap_invariant_under_monotone_rescoring(labels in arb_labels(), n_gt in 0usize..10) {
        prop_assume!(labels.iter().filter(|l| l.1 == MatchLabel::TruePositive).count() <= n_gt);
        let base = average_precision(&labels, n_gt, Interpolation::AllPoint);
        let squashed: Vec<_> = labels.iter().map(|&(c, l)| ((3.0 * c).exp() - 5.0, l)).collect();
        let other = average_precision(&squashed, n_gt, Interpolation::AllPoint);
        prop_assert_eq!(base.average_precision, other.average_precision);
        prop_assert!((0.0..=1.0).contains(&base.average_precision));
        for w in base.curve.windows(2) {
            prop_assert!(w[0].0 <= w[1].0);
        }
    }

    #[test]
    fn low_false_positive_never_helps(labels in arb_labels(), n_gt in 1usize..10) {
        let tp = labels.iter().filter(|l| l.1 == MatchLabel::TruePositive).count();
        prop_assume!(tp <= n_gt);
        let base = average_precision(&labels, n_gt, Interpolation::AllPoint).average_precision;
        let mut more = labels.clone();
        more.push((-1.0, MatchLabel::FalsePositive));
        prop_assert!(average_precision(&more, n_gt, Interpolation::AllPoint).average_precision <= base + 1e-12);
    }

    #[test]
    fn top_true_positive_never_hurts(labels in arb_labels(), n_gt in 1usize..10) {
        let tp = labels.iter().filter(|l| l.1 == MatchLabel::TruePositive).count();
        prop_assume!(tp < n_gt);
        let base = average_precision(&labels, n_gt, Interpolation::AllPoint).average_precision;
        let mut more = labels.clone();
        more.push((2.0, MatchLabel::TruePositive));
        prop_assert!(average_precision(&more, n_gt, Interpolation::AllPoint).average_precision >= base - 1e-12);
    }

    #[test]
    fn rng_ranges(seed in any::<u64>(), lo in -100.0f64..100.0, span in 0.0f64..50.0, n in 1u64..1000) {
        let mut r = RngStream::from_seed(seed);
        for _ in 0..50 {
            let u = r.uniform(lo, lo + span);
            prop_assert!(u >= lo && (u < lo + span || span == 0.0));
            let c = r.uniform_closed(lo, lo + span);
            prop_assert!(c >= lo && c <= lo + span);
            prop_assert!(r.below(n) < n);
        }
    }
}
