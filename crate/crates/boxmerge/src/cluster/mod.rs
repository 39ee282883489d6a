//! Clustering of detection samples into per-object groups: sequential
//! threshold clustering (BSAS), its intra-sample exclusive variant, and
//! sample-by-sample Hungarian assignment.

pub mod hdbscan;
pub mod hungarian;

use crate::affinity::{composite_affinity, kl_semantic, AffinityKind, SemanticModifier};
use crate::error::{Error, Result};
use crate::model::{canonical_order, BoundingBox, Detection, SampleSet, ScoreDistribution};
use std::collections::BTreeSet;

/// A group of detections hypothesized to belong to one object.
///
/// The representative box and scores are the exact coordinate-wise and
/// element-wise means of the members; they are recomputed from running sums
/// so incremental updates agree bit-for-bit with a fresh fold over the
/// members.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    members: Vec<Detection>,
    sum_box: [f64; 4],
    sum_scores: Vec<f64>,
    sample_mask: BTreeSet<usize>,
}

impl Cluster {
    pub fn new(first: Detection) -> Self {
        let mut c = Cluster {
            members: Vec::new(),
            sum_box: [0.0; 4],
            sum_scores: vec![0.0; first.scores.num_classes()],
            sample_mask: BTreeSet::new(),
        };
        c.push(first);
        c
    }

    pub fn push(&mut self, det: Detection) {
        self.sum_box[0] += det.bbox.x1;
        self.sum_box[1] += det.bbox.y1;
        self.sum_box[2] += det.bbox.x2;
        self.sum_box[3] += det.bbox.y2;
        for (acc, &s) in self.sum_scores.iter_mut().zip(det.scores.scores()) {
            *acc += s;
        }
        self.sample_mask.insert(det.sample_index);
        self.members.push(det);
    }

    pub fn members(&self) -> &[Detection] {
        &self.members
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn sample_mask(&self) -> &BTreeSet<usize> {
        &self.sample_mask
    }

    pub fn contains_sample(&self, sample_index: usize) -> bool {
        self.sample_mask.contains(&sample_index)
    }

    /// Coordinate-wise mean of the member boxes. Means of valid boxes are
    /// valid (strict inequalities are preserved by averaging).
    pub fn representative_box(&self) -> BoundingBox {
        let n = self.members.len() as f64;
        BoundingBox {
            x1: self.sum_box[0] / n,
            y1: self.sum_box[1] / n,
            x2: self.sum_box[2] / n,
            y2: self.sum_box[3] / n,
        }
    }

    /// Element-wise mean of the member score distributions.
    pub fn representative_scores(&self) -> ScoreDistribution {
        let n = self.members.len() as f64;
        ScoreDistribution::new(self.sum_scores.iter().map(|s| s / n).collect())
            .expect("means of valid score distributions are valid")
    }

    /// The cluster expressed as a pseudo-detection, so affinity measures can
    /// compare detections against clusters.
    pub fn representative(&self) -> Detection {
        Detection::new(self.representative_box(), self.representative_scores(), 0)
    }
}

/// Which sequential clustering method to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMethod {
    Bsas,
    BsasExclusive,
    Hungarian,
}

/// Configuration shared by the sequential clustering methods.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClusterConfig {
    pub method: ClusterMethod,
    pub affinity: AffinityKind,
    /// Affinity threshold in `(0, 1]`. For the KL-modified affinity the
    /// effective BSAS threshold is `theta - 0.1` (the affinity becomes
    /// spatial minus KL, which shifts the usable range down).
    pub theta: f64,
    /// Minimum spatial affinity for a Hungarian match to stand; defaults to
    /// `theta` when absent. Matched pairs below the gate are unmatched and
    /// open new clusters.
    #[serde(default)]
    pub hungarian_gate: Option<f64>,
}

impl ClusterConfig {
    pub fn new(method: ClusterMethod, affinity: AffinityKind, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::MalformedInput(format!(
                "theta must be in (0, 1], got {theta}"
            )));
        }
        Ok(ClusterConfig {
            method,
            affinity,
            theta,
            hungarian_gate: None,
        })
    }

    fn effective_threshold(&self) -> f64 {
        match self.affinity.semantic {
            SemanticModifier::Kl => self.theta - 0.1,
            _ => self.theta,
        }
    }
}

/// Run the configured sequential method over one sample set.
pub fn cluster_sample_set(sample_set: &SampleSet, config: &ClusterConfig) -> Vec<Cluster> {
    match config.method {
        ClusterMethod::Bsas => bsas(sample_set, config),
        ClusterMethod::BsasExclusive => bsas_exclusive(sample_set, config),
        ClusterMethod::Hungarian => hungarian_cluster(sample_set, config),
    }
}

/// Basic sequential scheme: walk detections in canonical order; each joins
/// the existing cluster of maximum composite affinity when that maximum
/// meets the effective threshold, otherwise opens a new cluster. Ties go to
/// the lowest cluster index.
pub fn bsas(sample_set: &SampleSet, config: &ClusterConfig) -> Vec<Cluster> {
    debug_assert_eq!(config.method, ClusterMethod::Bsas);
    let threshold = config.effective_threshold();
    let mut clusters: Vec<Cluster> = Vec::new();
    // representatives cached per cluster; rebuilding one per pair is the
    // dominant cost otherwise
    let mut reps: Vec<Detection> = Vec::new();
    for det in sample_set.ordered_detections() {
        let mut best: Option<(usize, f64)> = None;
        for (idx, rep) in reps.iter().enumerate() {
            let aff = composite_affinity(&config.affinity, &det, rep);
            if best.map_or(true, |(_, v)| aff > v) {
                best = Some((idx, aff));
            }
        }
        match best {
            Some((idx, aff)) if aff >= threshold => {
                clusters[idx].push(det);
                reps[idx] = clusters[idx].representative();
            }
            _ => {
                clusters.push(Cluster::new(det));
                reps.push(clusters.last().unwrap().representative());
            }
        }
    }
    clusters
}

/// BSAS restricted to intra-sample exclusive clusters: a detection may only
/// join clusters that hold no detection from its own sample. With the KL
/// modifier the assignment rule changes: among exclusive clusters whose
/// spatial affinity meets the plain `theta` gate, the detection joins the
/// one with minimum KL divergence.
pub fn bsas_exclusive(sample_set: &SampleSet, config: &ClusterConfig) -> Vec<Cluster> {
    debug_assert_eq!(config.method, ClusterMethod::BsasExclusive);
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut reps: Vec<Detection> = Vec::new();
    for det in sample_set.ordered_detections() {
        let chosen = if config.affinity.semantic == SemanticModifier::Kl {
            let mut best: Option<(usize, f64)> = None;
            for (idx, rep) in reps.iter().enumerate() {
                if clusters[idx].contains_sample(det.sample_index) {
                    continue;
                }
                if config.affinity.spatial_value(&det.bbox, &rep.bbox) < config.theta {
                    continue;
                }
                let kl = kl_semantic(&det.scores, &rep.scores).unwrap_or(f64::INFINITY);
                if best.map_or(true, |(_, v)| kl < v) {
                    best = Some((idx, kl));
                }
            }
            best.map(|(idx, _)| idx)
        } else {
            let threshold = config.effective_threshold();
            let mut best: Option<(usize, f64)> = None;
            for (idx, rep) in reps.iter().enumerate() {
                if clusters[idx].contains_sample(det.sample_index) {
                    continue;
                }
                let aff = composite_affinity(&config.affinity, &det, rep);
                if best.map_or(true, |(_, v)| aff > v) {
                    best = Some((idx, aff));
                }
            }
            best.and_then(|(idx, aff)| (aff >= threshold).then_some(idx))
        };
        match chosen {
            Some(idx) => {
                clusters[idx].push(det);
                reps[idx] = clusters[idx].representative();
            }
            None => {
                clusters.push(Cluster::new(det));
                reps.push(clusters.last().unwrap().representative());
            }
        }
    }
    clusters
}

/// Intra-sample exclusive clustering via sequential optimal assignment:
/// clusters start from the first sample; each later sample is matched to the
/// current clusters by solving a min-cost assignment where the cost is the
/// negated spatial affinity, label mismatches cost `+inf` under the
/// same-label modifier, and the KL modifier adds the divergence matrix.
/// Matched pairs below the spatial gate are rejected; every unmatched
/// detection opens a new cluster.
pub fn hungarian_cluster(sample_set: &SampleSet, config: &ClusterConfig) -> Vec<Cluster> {
    debug_assert_eq!(config.method, ClusterMethod::Hungarian);
    let gate = config.hungarian_gate.unwrap_or(config.theta);
    let mut clusters: Vec<Cluster> = Vec::new();

    for (j, sample) in sample_set.samples.iter().enumerate() {
        let mut dets = sample.clone();
        canonical_order(&mut dets);
        if dets.is_empty() {
            continue;
        }
        if j == 0 || clusters.is_empty() {
            for det in dets {
                clusters.push(Cluster::new(det));
            }
            continue;
        }

        let reps: Vec<Detection> = clusters.iter().map(Cluster::representative).collect();
        let mut spatial = vec![vec![0.0f64; reps.len()]; dets.len()];
        let mut cost = vec![vec![0.0f64; reps.len()]; dets.len()];
        for (r, det) in dets.iter().enumerate() {
            for (c, rep) in reps.iter().enumerate() {
                let s = config.affinity.spatial_value(&det.bbox, &rep.bbox);
                spatial[r][c] = s;
                cost[r][c] = match config.affinity.semantic {
                    SemanticModifier::None => -s,
                    SemanticModifier::SameLabel => {
                        if det.winning_label() == rep.winning_label() {
                            -s
                        } else {
                            f64::INFINITY
                        }
                    }
                    SemanticModifier::Kl => {
                        -s + kl_semantic(&det.scores, &rep.scores).unwrap_or(f64::INFINITY)
                    }
                };
            }
        }

        let pairs = hungarian::hungarian_solve(&cost);
        let mut assigned_row = vec![false; dets.len()];
        for &(r, c) in &pairs {
            if spatial[r][c] >= gate {
                assigned_row[r] = true;
                clusters[c].push(dets[r].clone());
            }
        }
        for (r, det) in dets.into_iter().enumerate() {
            if !assigned_row[r] {
                clusters.push(Cluster::new(det));
            }
        }
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affinity::{SemanticModifier, SpatialAffinity};
    use crate::model::Regime;
    use approx::assert_relative_eq;

    fn det(x1: f64, y1: f64, x2: f64, y2: f64, scores: &[f64], sample: usize) -> Detection {
        Detection::new(
            BoundingBox::new(x1, y1, x2, y2).unwrap(),
            ScoreDistribution::new(scores.to_vec()).unwrap(),
            sample,
        )
    }

    fn sample_set(samples: Vec<Vec<Detection>>, num_classes: usize) -> SampleSet {
        SampleSet {
            image_id: "test".into(),
            image_width: 1000.0,
            image_height: 1000.0,
            num_classes,
            samples,
            regime: Regime::ClosedSet,
        }
    }

    fn config(method: ClusterMethod, spatial: SpatialAffinity, semantic: SemanticModifier, theta: f64) -> ClusterConfig {
        ClusterConfig::new(method, AffinityKind::new(spatial, semantic), theta).unwrap()
    }

    #[test]
    fn bsas_groups_near_identical_boxes() {
        // Hand trace: d0 opens C0; d1 has IoU ~0.96 with C0's rep -> joins;
        // d2 vs the updated mean is still far above 0.7 -> joins.
        let ss = sample_set(
            vec![
                vec![det(10.0, 10.0, 50.0, 50.0, &[0.9], 0)],
                vec![det(10.5, 10.0, 50.5, 50.0, &[0.9], 1)],
                vec![det(10.0, 10.5, 50.0, 50.5, &[0.9], 2)],
            ],
            1,
        );
        let cfg = config(ClusterMethod::Bsas, SpatialAffinity::Iou, SemanticModifier::None, 0.7);
        let clusters = bsas(&ss, &cfg);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].member_count(), 3);
    }

    #[test]
    fn bsas_keeps_disjoint_objects_apart() {
        let ss = sample_set(
            vec![vec![
                det(0.0, 0.0, 10.0, 10.0, &[0.9], 0),
                det(500.0, 500.0, 510.0, 510.0, &[0.9], 0),
            ]],
            1,
        );
        for theta in [0.1, 0.5, 0.95] {
            let cfg = config(ClusterMethod::Bsas, SpatialAffinity::Iou, SemanticModifier::None, theta);
            assert_eq!(bsas(&ss, &cfg).len(), 2);
        }
    }

    #[test]
    fn bsas_same_label_splits_overlapping_distinct_classes() {
        // Same position, different winning labels: spatial-only merges them,
        // the same-label modifier keeps them apart.
        let ss = sample_set(
            vec![vec![
                det(10.0, 10.0, 50.0, 50.0, &[0.9, 0.05], 0),
                det(10.0, 10.0, 50.0, 50.0, &[0.05, 0.9], 0),
            ]],
            2,
        );
        let spatial_only = config(ClusterMethod::Bsas, SpatialAffinity::Iou, SemanticModifier::None, 0.7);
        assert_eq!(bsas(&ss, &spatial_only).len(), 1);
        let with_sl = config(ClusterMethod::Bsas, SpatialAffinity::Iou, SemanticModifier::SameLabel, 0.7);
        assert_eq!(bsas(&ss, &with_sl).len(), 2);
    }

    #[test]
    fn bsas_kl_uses_shifted_threshold() {
        // Two overlapping same-class detections whose IoU is 0.65: below the
        // 0.7 gate for plain IoU, but IoU - KL with KL ~ 0 passes the
        // shifted 0.6 gate.
        let a = det(0.0, 0.0, 100.0, 10.0, &[0.9, 0.05], 0);
        let b = det(21.2, 0.0, 121.2, 10.0, &[0.9, 0.05], 1);
        let iou_ab = crate::affinity::iou(&a.bbox, &b.bbox);
        assert!(iou_ab > 0.6 && iou_ab < 0.7, "iou {iou_ab}");
        let ss = sample_set(vec![vec![a], vec![b]], 2);

        let plain = config(ClusterMethod::Bsas, SpatialAffinity::Iou, SemanticModifier::None, 0.7);
        assert_eq!(bsas(&ss, &plain).len(), 2);
        let kl = config(ClusterMethod::Bsas, SpatialAffinity::Iou, SemanticModifier::Kl, 0.7);
        assert_eq!(bsas(&ss, &kl).len(), 1);
    }

    #[test]
    fn exclusive_forces_same_sample_apart() {
        let ss = sample_set(
            vec![vec![
                det(10.0, 10.0, 50.0, 50.0, &[0.9], 0),
                det(10.1, 10.0, 50.1, 50.0, &[0.8], 0),
            ]],
            1,
        );
        let cfg = config(
            ClusterMethod::BsasExclusive,
            SpatialAffinity::Iou,
            SemanticModifier::None,
            0.7,
        );
        let clusters = bsas_exclusive(&ss, &cfg);
        assert_eq!(clusters.len(), 2);
    }

    #[test]
    fn exclusive_groups_across_samples() {
        let ss = sample_set(
            vec![
                vec![det(10.0, 10.0, 50.0, 50.0, &[0.9], 0)],
                vec![det(10.2, 10.0, 50.2, 50.0, &[0.9], 1)],
                vec![det(10.0, 10.1, 50.0, 50.1, &[0.9], 2)],
            ],
            1,
        );
        let cfg = config(
            ClusterMethod::BsasExclusive,
            SpatialAffinity::Iou,
            SemanticModifier::None,
            0.7,
        );
        let clusters = bsas_exclusive(&ss, &cfg);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].member_count(), 3);
    }

    #[test]
    fn exclusive_kl_joins_minimum_divergence_cluster() {
        // Clusters A and B both meet the IoU gate; the detection's scores
        // equal A's exactly (KL 0) and differ from B's, so it joins A even
        // though B overlaps slightly more.
        let a_scores = [0.85, 0.05];
        let b_scores = [0.05, 0.85];
        let ss = sample_set(
            vec![
                vec![
                    det(10.0, 10.0, 50.0, 50.0, &a_scores, 0),
                    det(11.0, 10.0, 51.0, 50.0, &b_scores, 0),
                ],
                vec![det(10.8, 10.0, 50.8, 50.0, &a_scores, 1)],
            ],
            2,
        );
        let cfg = config(
            ClusterMethod::BsasExclusive,
            SpatialAffinity::Iou,
            SemanticModifier::Kl,
            0.7,
        );
        let clusters = bsas_exclusive(&ss, &cfg);
        assert_eq!(clusters.len(), 2);
        let with_two = clusters.iter().find(|c| c.member_count() == 2).unwrap();
        assert_eq!(with_two.representative_scores().winning().0, 0);
    }

    #[test]
    fn hungarian_identical_detections_form_one_cluster() {
        let n = 6;
        let samples: Vec<Vec<Detection>> = (0..n)
            .map(|j| vec![det(10.0, 10.0, 50.0, 50.0, &[0.9], j)])
            .collect();
        let ss = sample_set(samples, 1);
        let cfg = config(ClusterMethod::Hungarian, SpatialAffinity::Iou, SemanticModifier::None, 0.5);
        let clusters = hungarian_cluster(&ss, &cfg);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].member_count(), n);
    }

    #[test]
    fn hungarian_two_stable_objects_stay_separate() {
        let n = 5;
        let samples: Vec<Vec<Detection>> = (0..n)
            .map(|j| {
                vec![
                    det(10.0, 10.0, 50.0, 50.0, &[0.9], j),
                    det(200.0, 200.0, 260.0, 260.0, &[0.8], j),
                ]
            })
            .collect();
        let ss = sample_set(samples, 1);
        let cfg = config(ClusterMethod::Hungarian, SpatialAffinity::Iou, SemanticModifier::None, 0.5);
        let clusters = hungarian_cluster(&ss, &cfg);
        assert_eq!(clusters.len(), 2);
        for c in &clusters {
            assert_eq!(c.member_count(), n);
            assert_eq!(c.sample_mask().len(), n);
        }
    }

    #[test]
    fn hungarian_gate_rejects_weak_matches() {
        // Object A appears in samples 0..5, object B (overlapping A at IoU
        // below the gate) in samples 5..10: the assignment would pair B with
        // A's cluster, the gate must split them.
        let mut samples = Vec::new();
        for j in 0..5 {
            samples.push(vec![det(0.0, 0.0, 40.0, 40.0, &[0.9], j)]);
        }
        for j in 5..10 {
            samples.push(vec![det(25.0, 25.0, 65.0, 65.0, &[0.9], j)]);
        }
        let iou_ab = crate::affinity::iou(
            &BoundingBox::new(0.0, 0.0, 40.0, 40.0).unwrap(),
            &BoundingBox::new(25.0, 25.0, 65.0, 65.0).unwrap(),
        );
        assert!(iou_ab < 0.5);
        let ss = sample_set(samples, 1);
        let cfg = config(ClusterMethod::Hungarian, SpatialAffinity::Iou, SemanticModifier::None, 0.5);
        let clusters = hungarian_cluster(&ss, &cfg);
        assert_eq!(clusters.len(), 2);
        assert!(clusters.iter().all(|c| c.member_count() == 5));
    }

    #[test]
    fn representative_matches_fresh_fold() {
        let dets = vec![
            det(0.0, 0.0, 10.0, 10.0, &[0.5, 0.25], 0),
            det(2.0, 0.0, 12.0, 10.0, &[0.3, 0.55], 1),
            det(1.0, 3.0, 11.0, 13.0, &[0.2, 0.7], 2),
        ];
        let mut cluster = Cluster::new(dets[0].clone());
        cluster.push(dets[1].clone());
        cluster.push(dets[2].clone());

        let n = dets.len() as f64;
        let mut sums = [0.0f64; 4];
        let mut score_sums = vec![0.0f64; 2];
        for d in &dets {
            sums[0] += d.bbox.x1;
            sums[1] += d.bbox.y1;
            sums[2] += d.bbox.x2;
            sums[3] += d.bbox.y2;
            for (acc, &s) in score_sums.iter_mut().zip(d.scores.scores()) {
                *acc += s;
            }
        }
        let rep = cluster.representative_box();
        assert_eq!(rep.x1, sums[0] / n);
        assert_eq!(rep.y1, sums[1] / n);
        assert_eq!(rep.x2, sums[2] / n);
        assert_eq!(rep.y2, sums[3] / n);
        let rep_scores = cluster.representative_scores();
        for (got, want) in rep_scores.scores().iter().zip(&score_sums) {
            assert_eq!(*got, want / n);
        }
        assert_relative_eq!(rep.x1, 1.0, epsilon = 1e-12);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        prop_compose! {
            fn arb_sample_set()(
                raw in prop::collection::vec(
                    (0.0..200.0f64, 0.0..200.0f64, 5.0..40.0f64, 5.0..40.0f64, 0usize..3, 0usize..4),
                    1..25,
                ),
                n_samples in 1usize..4,
            ) -> SampleSet {
                let mut samples = vec![Vec::new(); n_samples];
                for (x1, y1, w, h, label, pseudo_sample) in raw {
                    let mut scores = vec![0.05, 0.05, 0.05];
                    scores[label] = 0.8;
                    let j = pseudo_sample % n_samples;
                    samples[j].push(det(x1, y1, x1 + w, y1 + h, &scores, j));
                }
                sample_set(samples, 3)
            }
        }

        fn detection_key(d: &Detection) -> (u64, u64, u64, u64, usize, u64) {
            (
                d.bbox.x1.to_bits(),
                d.bbox.y1.to_bits(),
                d.bbox.x2.to_bits(),
                d.bbox.y2.to_bits(),
                d.sample_index,
                d.scores.scores()[0].to_bits(),
            )
        }

        fn assert_partition(ss: &SampleSet, clusters: &[Cluster]) {
            let mut input: Vec<_> = ss.samples.iter().flatten().map(detection_key).collect();
            let mut output: Vec<_> = clusters
                .iter()
                .flat_map(|c| c.members().iter().map(detection_key))
                .collect();
            input.sort_unstable();
            output.sort_unstable();
            assert_eq!(input, output);
        }

        proptest! {
            #[test]
            fn clustering_partitions_the_input(ss in arb_sample_set(), theta in 0.3..0.95f64) {
                for method in [ClusterMethod::Bsas, ClusterMethod::BsasExclusive, ClusterMethod::Hungarian] {
                    let cfg = config(method, SpatialAffinity::Iou, SemanticModifier::None, theta);
                    let clusters = cluster_sample_set(&ss, &cfg);
                    assert_partition(&ss, &clusters);
                }
            }

            #[test]
            fn exclusive_methods_never_repeat_a_sample(ss in arb_sample_set(), theta in 0.3..0.95f64) {
                for method in [ClusterMethod::BsasExclusive, ClusterMethod::Hungarian] {
                    let cfg = config(method, SpatialAffinity::Iou, SemanticModifier::None, theta);
                    for cluster in cluster_sample_set(&ss, &cfg) {
                        prop_assert_eq!(cluster.sample_mask().len(), cluster.member_count());
                    }
                }
            }

            #[test]
            fn bsas_cluster_count_is_monotone_in_theta(ss in arb_sample_set(), lo in 0.2..0.5f64, hi in 0.5..0.95f64) {
                let cfg_lo = config(ClusterMethod::Bsas, SpatialAffinity::Iou, SemanticModifier::None, lo);
                let cfg_hi = config(ClusterMethod::Bsas, SpatialAffinity::Iou, SemanticModifier::None, hi);
                prop_assert!(bsas(&ss, &cfg_lo).len() <= bsas(&ss, &cfg_hi).len());
            }

            #[test]
            fn clustering_is_deterministic(ss in arb_sample_set(), theta in 0.3..0.95f64) {
                for method in [ClusterMethod::Bsas, ClusterMethod::BsasExclusive, ClusterMethod::Hungarian] {
                    let cfg = config(method, SpatialAffinity::Iou, SemanticModifier::SameLabel, theta);
                    let a = cluster_sample_set(&ss, &cfg);
                    let b = cluster_sample_set(&ss, &cfg);
                    prop_assert_eq!(a, b);
                }
            }

            #[test]
            fn representatives_equal_fresh_means(ss in arb_sample_set(), theta in 0.3..0.95f64) {
                let cfg = config(ClusterMethod::Bsas, SpatialAffinity::Iou, SemanticModifier::None, theta);
                for cluster in bsas(&ss, &cfg) {
                    let n = cluster.member_count() as f64;
                    let fresh_x1: f64 = cluster.members().iter().map(|d| d.bbox.x1).sum::<f64>() / n;
                    prop_assert_eq!(cluster.representative_box().x1, fresh_x1);
                }
            }
        }
    }
}
