//! Shared data model: boxes, score distributions, detections, sample sets
//! and observations, plus the canonical ordering and validation rules that
//! every order-sensitive algorithm in this crate relies on.

use crate::error::{Error, Result};
use std::cmp::Ordering;

/// Slack allowed on score sums: softmax mass lost to the (unstored)
/// background class means sums are <= 1, never meaningfully above it.
pub const SCORE_SUM_SLACK: f64 = 1e-6;

/// Axis-aligned box in pixel coordinates, `x1 < x2`, `y1 < y2`.
/// Serializes as the 4-element array `[x1, y1, x2, y2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl serde::Serialize for BoundingBox {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x1, self.y1, self.x2, self.y2].serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for BoundingBox {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [x1, y1, x2, y2] = <[f64; 4]>::deserialize(deserializer)?;
        BoundingBox::new(x1, y1, x2, y2).map_err(serde::de::Error::custom)
    }
}

impl BoundingBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let b = BoundingBox { x1, y1, x2, y2 };
        if !b.is_valid() {
            return Err(Error::MalformedInput(format!(
                "invalid bounding box ({x1}, {y1}, {x2}, {y2})"
            )));
        }
        Ok(b)
    }

    pub fn is_valid(&self) -> bool {
        self.x1.is_finite()
            && self.y1.is_finite()
            && self.x2.is_finite()
            && self.y2.is_finite()
            && self.x1 < self.x2
            && self.y1 < self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    /// Clamp all coordinates into `[0, width] x [0, height]`. The result may
    /// be degenerate (zero width or height); callers drop those.
    pub fn clamped(&self, image_width: f64, image_height: f64) -> BoundingBox {
        BoundingBox {
            x1: self.x1.clamp(0.0, image_width),
            y1: self.y1.clamp(0.0, image_height),
            x2: self.x2.clamp(0.0, image_width),
            y2: self.y2.clamp(0.0, image_height),
        }
    }
}

/// Softmax scores over the `m` known foreground classes. Background mass is
/// implicit as `1 - sum`, so entries sum to at most one (plus float slack).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDistribution {
    scores: Vec<f64>,
}

impl ScoreDistribution {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::MalformedInput("empty score vector".into()));
        }
        let mut sum = 0.0;
        for &s in &scores {
            if !s.is_finite() || !(0.0..=1.0).contains(&s) {
                return Err(Error::MalformedInput(format!("score entry {s} out of [0, 1]")));
            }
            sum += s;
        }
        if sum > 1.0 + SCORE_SUM_SLACK {
            return Err(Error::MalformedInput(format!("score sum {sum} exceeds 1")));
        }
        if sum <= 0.0 {
            return Err(Error::DegenerateDistribution);
        }
        Ok(ScoreDistribution { scores })
    }

    pub fn num_classes(&self) -> usize {
        self.scores.len()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn sum(&self) -> f64 {
        self.scores.iter().sum()
    }

    /// Winning class and score; ties break to the lowest class index.
    pub fn winning(&self) -> (usize, f64) {
        let mut best = 0;
        for (i, &s) in self.scores.iter().enumerate() {
            if s > self.scores[best] {
                best = i;
            }
        }
        (best, self.scores[best])
    }

    /// Renormalize over the foreground classes with every entry floored at
    /// `eps` before the final normalization, so the result is a strictly
    /// positive distribution summing to one.
    pub fn renormalized(&self, eps: f64) -> Result<Vec<f64>> {
        let sum = self.sum();
        if sum <= 0.0 {
            return Err(Error::DegenerateDistribution);
        }
        let mut p: Vec<f64> = self.scores.iter().map(|&s| (s / sum).max(eps)).collect();
        let total: f64 = p.iter().sum();
        for v in &mut p {
            *v /= total;
        }
        Ok(p)
    }
}

/// One detection from one stochastic forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub scores: ScoreDistribution,
    /// Index of the forward pass that produced this detection.
    pub sample_index: usize,
}

impl Detection {
    pub fn new(bbox: BoundingBox, scores: ScoreDistribution, sample_index: usize) -> Self {
        Detection {
            bbox,
            scores,
            sample_index,
        }
    }

    pub fn winning_label(&self) -> usize {
        self.scores.winning().0
    }

    pub fn winning_score(&self) -> f64 {
        self.scores.winning().1
    }
}

/// Dataset condition an image was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    ClosedSet,
    NearOpenSet,
    DistantOpenSet,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::ClosedSet => "closed-set",
            Regime::NearOpenSet => "near-open-set",
            Regime::DistantOpenSet => "distant-open-set",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "closed-set" => Ok(Regime::ClosedSet),
            "near-open-set" => Ok(Regime::NearOpenSet),
            "distant-open-set" => Ok(Regime::DistantOpenSet),
            other => Err(Error::UnknownRegime(other.to_string())),
        }
    }

    pub fn is_open_set(&self) -> bool {
        !matches!(self, Regime::ClosedSet)
    }
}

/// All detection samples for one image: `samples[j]` holds the detections of
/// forward pass `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub image_id: String,
    pub image_width: f64,
    pub image_height: f64,
    /// Number of known foreground classes, identical for every detection.
    pub num_classes: usize,
    pub samples: Vec<Vec<Detection>>,
    pub regime: Regime,
}

impl SampleSet {
    pub fn num_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn num_detections(&self) -> usize {
        self.samples.iter().map(Vec::len).sum()
    }

    /// All detections flattened and canonically ordered.
    pub fn ordered_detections(&self) -> Vec<Detection> {
        let mut all: Vec<Detection> = self.samples.iter().flatten().cloned().collect();
        canonical_order(&mut all);
        all
    }
}

/// A merged cluster of detections: the unit everything downstream consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Coordinate-wise mean of the member boxes.
    pub bbox: BoundingBox,
    /// Element-wise mean of the member score distributions.
    pub scores: ScoreDistribution,
    pub member_count: usize,
    /// Classification uncertainty in nats.
    pub entropy: f64,
    /// Total variance of box coordinates; absent for single-detection
    /// pass-through observations where no spread exists.
    pub spatial_variance: Option<f64>,
    pub winning_label: usize,
    pub winning_score: f64,
    pub image_id: String,
}

/// Sort detections into the canonical order used before every
/// order-sensitive algorithm: ascending sample index, then descending
/// winning score, then lexicographic box coordinates. The sort is stable, so
/// fully identical detections keep their input order.
pub fn canonical_order(detections: &mut [Detection]) {
    detections.sort_by(compare_canonical);
}

fn compare_canonical(a: &Detection, b: &Detection) -> Ordering {
    a.sample_index
        .cmp(&b.sample_index)
        .then_with(|| b.winning_score().total_cmp(&a.winning_score()))
        .then_with(|| a.bbox.x1.total_cmp(&b.bbox.x1))
        .then_with(|| a.bbox.y1.total_cmp(&b.bbox.y1))
        .then_with(|| a.bbox.x2.total_cmp(&b.bbox.x2))
        .then_with(|| a.bbox.y2.total_cmp(&b.bbox.y2))
}

/// Sanitize a raw sample set: clamp boxes to the image, drop detections that
/// become degenerate or carry unusable score vectors, and rewrite sample
/// indices to match each detection's enclosing sample. Errors only on
/// structural problems (bad image dimensions, inconsistent class counts).
pub fn validate_sample_set(raw: SampleSet) -> Result<SampleSet> {
    if !(raw.image_width.is_finite() && raw.image_width > 0.0)
        || !(raw.image_height.is_finite() && raw.image_height > 0.0)
    {
        return Err(Error::MalformedInput(format!(
            "image {:?} has non-positive dimensions {}x{}",
            raw.image_id, raw.image_width, raw.image_height
        )));
    }
    if raw.samples.is_empty() {
        return Err(Error::MalformedInput(format!(
            "image {:?} has no samples",
            raw.image_id
        )));
    }
    if raw.num_classes == 0 {
        return Err(Error::MalformedInput("class count must be at least 1".into()));
    }

    let mut samples = Vec::with_capacity(raw.samples.len());
    for (j, sample) in raw.samples.into_iter().enumerate() {
        let mut kept = Vec::with_capacity(sample.len());
        for mut det in sample {
            if det.scores.num_classes() != raw.num_classes {
                return Err(Error::MalformedInput(format!(
                    "image {:?}: detection has {} classes, manifest says {}",
                    raw.image_id,
                    det.scores.num_classes(),
                    raw.num_classes
                )));
            }
            let clamped = det.bbox.clamped(raw.image_width, raw.image_height);
            if !clamped.is_valid() {
                continue; // degenerate after clamping
            }
            // ScoreDistribution construction already rejects negative entries
            // and oversized sums, so any surviving distribution is usable.
            if det.scores.sum() <= 0.0 || det.winning_score() <= 0.0 {
                continue;
            }
            det.bbox = clamped;
            det.sample_index = j;
            kept.push(det);
        }
        samples.push(kept);
    }

    Ok(SampleSet { samples, ..raw })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn det(x1: f64, y1: f64, x2: f64, y2: f64, scores: &[f64], sample: usize) -> Detection {
        Detection::new(
            BoundingBox::new(x1, y1, x2, y2).unwrap(),
            ScoreDistribution::new(scores.to_vec()).unwrap(),
            sample,
        )
    }

    #[test]
    fn canonical_order_sorts_by_sample_index_first() {
        let mut dets = vec![
            det(0.0, 0.0, 1.0, 1.0, &[0.9], 1),
            det(0.0, 0.0, 1.0, 1.0, &[0.9], 0),
        ];
        canonical_order(&mut dets);
        assert_eq!(dets[0].sample_index, 0);
        assert_eq!(dets[1].sample_index, 1);
    }

    #[test]
    fn canonical_order_breaks_ties_by_descending_score() {
        let mut dets = vec![
            det(0.0, 0.0, 1.0, 1.0, &[0.3], 0),
            det(0.0, 0.0, 1.0, 1.0, &[0.9], 0),
        ];
        canonical_order(&mut dets);
        assert_eq!(dets[0].winning_score(), 0.9);
        assert_eq!(dets[1].winning_score(), 0.3);
    }

    #[test]
    fn canonical_order_is_stable_for_identical_detections() {
        let a = det(0.0, 0.0, 1.0, 1.0, &[0.5, 0.2], 0);
        let mut dets = vec![a.clone(), a.clone(), a];
        let before = dets.clone();
        canonical_order(&mut dets);
        assert_eq!(dets, before);
    }

    #[test]
    fn winning_ties_break_to_lowest_index() {
        let s = ScoreDistribution::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(s.winning().0, 0);
    }

    #[test]
    fn validate_clamps_boxes_to_image() {
        let raw = SampleSet {
            image_id: "img".into(),
            image_width: 100.0,
            image_height: 100.0,
            num_classes: 1,
            samples: vec![vec![det(-5.0, 0.0, 10.0, 10.0, &[0.9], 0)]],
            regime: Regime::ClosedSet,
        };
        let out = validate_sample_set(raw).unwrap();
        assert_eq!(out.samples[0][0].bbox, BoundingBox::new(0.0, 0.0, 10.0, 10.0).unwrap());
    }

    #[test]
    fn validate_drops_degenerate_boxes() {
        // Zero width once x1 == x2.
        let raw = SampleSet {
            image_id: "img".into(),
            image_width: 100.0,
            image_height: 100.0,
            num_classes: 1,
            samples: vec![vec![det(10.0, 10.0, 10.5, 20.0, &[0.9], 0)]],
            regime: Regime::ClosedSet,
        };
        // Shrink the box so clamping to a 10-wide image degenerates it.
        let mut raw = raw;
        raw.image_width = 10.0;
        let out = validate_sample_set(raw).unwrap();
        assert!(out.samples[0].is_empty());
    }

    #[test]
    fn validate_rejects_inconsistent_class_counts() {
        let raw = SampleSet {
            image_id: "img".into(),
            image_width: 100.0,
            image_height: 100.0,
            num_classes: 2,
            samples: vec![vec![
                det(0.0, 0.0, 10.0, 10.0, &[0.5, 0.3], 0),
                det(0.0, 0.0, 10.0, 10.0, &[0.5], 0),
            ]],
            regime: Regime::ClosedSet,
        };
        assert!(matches!(validate_sample_set(raw), Err(Error::MalformedInput(_))));
    }

    #[test]
    fn validate_rejects_bad_image_dimensions() {
        let raw = SampleSet {
            image_id: "img".into(),
            image_width: 0.0,
            image_height: 100.0,
            num_classes: 1,
            samples: vec![vec![]],
            regime: Regime::ClosedSet,
        };
        assert!(matches!(validate_sample_set(raw), Err(Error::MalformedInput(_))));
    }

    #[test]
    fn validate_rewrites_sample_indices() {
        let raw = SampleSet {
            image_id: "img".into(),
            image_width: 100.0,
            image_height: 100.0,
            num_classes: 1,
            samples: vec![vec![det(0.0, 0.0, 10.0, 10.0, &[0.9], 7)]],
            regime: Regime::ClosedSet,
        };
        let out = validate_sample_set(raw).unwrap();
        assert_eq!(out.samples[0][0].sample_index, 0);
    }

    #[test]
    fn score_distribution_rejects_negative_and_oversized() {
        assert!(ScoreDistribution::new(vec![-0.1, 0.5]).is_err());
        assert!(ScoreDistribution::new(vec![0.8, 0.8]).is_err());
        assert!(ScoreDistribution::new(vec![]).is_err());
        assert!(matches!(
            ScoreDistribution::new(vec![0.0, 0.0]),
            Err(Error::DegenerateDistribution)
        ));
    }

    #[test]
    fn regime_round_trips_through_strings() {
        for r in [Regime::ClosedSet, Regime::NearOpenSet, Regime::DistantOpenSet] {
            assert_eq!(Regime::parse(r.as_str()).unwrap(), r);
        }
        assert!(matches!(Regime::parse("bogus"), Err(Error::UnknownRegime(_))));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_detection() -> impl Strategy<Value = Detection> {
            (
                0.0..90.0f64,
                0.0..90.0f64,
                1.0..10.0f64,
                1.0..10.0f64,
                0.01..1.0f64,
                0usize..5,
            )
                .prop_map(|(x1, y1, w, h, s, idx)| det(x1, y1, x1 + w, y1 + h, &[s], idx))
        }

        proptest! {
            #[test]
            fn canonical_order_is_idempotent(mut dets in prop::collection::vec(arb_detection(), 0..30)) {
                canonical_order(&mut dets);
                let once = dets.clone();
                canonical_order(&mut dets);
                prop_assert_eq!(once, dets);
            }

            #[test]
            fn canonical_order_is_a_permutation(dets in prop::collection::vec(arb_detection(), 0..30)) {
                let mut sorted = dets.clone();
                canonical_order(&mut sorted);
                prop_assert_eq!(sorted.len(), dets.len());
                for d in &dets {
                    let n_in = dets.iter().filter(|x| *x == d).count();
                    let n_out = sorted.iter().filter(|x| *x == d).count();
                    prop_assert_eq!(n_in, n_out);
                }
            }

            #[test]
            fn validated_sets_satisfy_invariants(
                coords in prop::collection::vec((-50.0..150.0f64, -50.0..150.0f64, -50.0..150.0f64, -50.0..150.0f64, 0.0..0.9f64), 0..40),
                n_samples in 1usize..5,
            ) {
                // Assemble a deliberately messy sample set; invalid raw values
                // that can't even construct a Detection are skipped.
                let mut samples = vec![Vec::new(); n_samples];
                for (i, (x1, y1, x2, y2, s)) in coords.into_iter().enumerate() {
                    let (x1, x2) = if x1 < x2 { (x1, x2) } else { (x2, x1 + 1.0) };
                    let (y1, y2) = if y1 < y2 { (y1, y2) } else { (y2, y1 + 1.0) };
                    if x1 >= x2 || y1 >= y2 {
                        continue;
                    }
                    let det = Detection::new(
                        BoundingBox { x1, y1, x2, y2 },
                        ScoreDistribution::new(vec![s.max(1e-3), 0.05]).unwrap(),
                        i * 31 % 7, // wrong on purpose
                    );
                    samples[i % n_samples].push(det);
                }
                let raw = SampleSet {
                    image_id: "fuzz".into(),
                    image_width: 100.0,
                    image_height: 100.0,
                    num_classes: 2,
                    samples,
                    regime: Regime::ClosedSet,
                };
                let out = validate_sample_set(raw).unwrap();
                for (j, sample) in out.samples.iter().enumerate() {
                    for d in sample {
                        prop_assert_eq!(d.sample_index, j);
                        prop_assert!(d.bbox.is_valid());
                        prop_assert!(d.bbox.x1 >= 0.0 && d.bbox.x2 <= out.image_width);
                        prop_assert!(d.bbox.y1 >= 0.0 && d.bbox.y2 <= out.image_height);
                        prop_assert!(d.winning_score() > 0.0);
                        prop_assert_eq!(d.scores.num_classes(), out.num_classes);
                    }
                }
            }
        }
    }
}
