//! Ground-truth matching, correctness labeling, and the evaluation metrics:
//! uncertainty error, AUROC, the two precision-recall areas, and mean
//! average precision.

use crate::affinity::iou;
use crate::error::{Error, Result};
use crate::model::{BoundingBox, Observation, Regime};
use crate::observation::UncertaintyKind;

/// An annotated object in an image.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthObject {
    pub bbox: BoundingBox,
    pub class_label: usize,
    pub image_id: String,
}

/// How an observation relates to the ground truth of its image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Correctness {
    /// Localized a same-class object at IoU >= 0.5.
    Correct,
    /// Missed or misclassified on an image of known classes.
    ClosedSetError,
    /// Any detection on an image containing only unknown classes.
    OpenSetError,
}

/// One observation joined with ground truth, carrying everything the
/// metrics need.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub image_id: String,
    pub correctness: Correctness,
    pub entropy: f64,
    pub spatial_variance: Option<f64>,
    pub gt_iou: f64,
    pub regime: Regime,
    pub winning_label: usize,
    pub winning_score: f64,
    pub bbox: BoundingBox,
}

impl EvalRecord {
    pub fn is_correct(&self) -> bool {
        self.correctness == Correctness::Correct
    }

    pub fn uncertainty(&self, kind: UncertaintyKind) -> Option<f64> {
        match kind {
            UncertaintyKind::Entropy => Some(self.entropy),
            UncertaintyKind::SpatialVariance => self.spatial_variance,
        }
    }
}

/// Maximum IoU between an observation and any same-class ground-truth
/// object; zero when none exists.
pub fn gt_iou(obs: &Observation, gts: &[GroundTruthObject]) -> f64 {
    gts.iter()
        .filter(|g| g.class_label == obs.winning_label)
        .map(|g| iou(&obs.bbox, &g.bbox))
        .fold(0.0, f64::max)
}

/// Join observations of one image with that image's ground truth. An
/// observation is correct when it reaches IoU >= 0.5 with a same-class
/// object; otherwise it is a closed-set error on closed-set images and an
/// open-set error on open-set images (which carry no known-class objects).
pub fn label_correctness(
    observations: &[Observation],
    gts: &[GroundTruthObject],
    regime: Regime,
) -> Vec<EvalRecord> {
    observations
        .iter()
        .map(|obs| {
            let best_iou = gt_iou(obs, gts);
            let correctness = if regime.is_open_set() {
                Correctness::OpenSetError
            } else if best_iou >= 0.5 {
                Correctness::Correct
            } else {
                Correctness::ClosedSetError
            };
            EvalRecord {
                image_id: obs.image_id.clone(),
                correctness,
                entropy: obs.entropy,
                spatial_variance: obs.spatial_variance,
                gt_iou: best_iou,
                regime,
                winning_label: obs.winning_label,
                winning_score: obs.winning_score,
                bbox: obs.bbox,
            }
        })
        .collect()
}

fn split_uncertainties(records: &[EvalRecord], kind: UncertaintyKind) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut correct = Vec::new();
    let mut incorrect = Vec::new();
    for r in records {
        if let Some(u) = r.uncertainty(kind) {
            if r.is_correct() {
                correct.push(u);
            } else {
                incorrect.push(u);
            }
        }
    }
    if correct.is_empty() {
        return Err(Error::EmptyClass("no correct records"));
    }
    if incorrect.is_empty() {
        return Err(Error::EmptyClass("no incorrect records"));
    }
    Ok((correct, incorrect))
}

fn ue_from_counts(rejected_correct: usize, n_correct: usize, accepted_incorrect: usize, n_incorrect: usize) -> f64 {
    0.5 * rejected_correct as f64 / n_correct as f64
        + 0.5 * accepted_incorrect as f64 / n_incorrect as f64
}

/// Uncertainty error at threshold `delta`: half the fraction of correct
/// records rejected plus half the fraction of incorrect records accepted.
pub fn uncertainty_error(records: &[EvalRecord], kind: UncertaintyKind, delta: f64) -> Result<f64> {
    let (correct, incorrect) = split_uncertainties(records, kind)?;
    let rejected_correct = correct.iter().filter(|&&u| u > delta).count();
    let accepted_incorrect = incorrect.iter().filter(|&&u| u <= delta).count();
    Ok(ue_from_counts(rejected_correct, correct.len(), accepted_incorrect, incorrect.len()))
}

/// Minimum uncertainty error over all candidate thresholds (every distinct
/// uncertainty value plus one value below the minimum) and the smallest
/// threshold achieving it.
pub fn min_uncertainty_error(records: &[EvalRecord], kind: UncertaintyKind) -> Result<(f64, f64)> {
    let (correct, incorrect) = split_uncertainties(records, kind)?;
    let mut values: Vec<f64> = correct.iter().chain(&incorrect).copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let below = values[0] - 1.0;

    let mut candidates = Vec::with_capacity(values.len() + 1);
    candidates.push(below);
    candidates.extend_from_slice(&values);

    let mut best: Option<(f64, f64)> = None;
    for &delta in &candidates {
        let rejected_correct = correct.iter().filter(|&&u| u > delta).count();
        let accepted_incorrect = incorrect.iter().filter(|&&u| u <= delta).count();
        let ue = ue_from_counts(rejected_correct, correct.len(), accepted_incorrect, incorrect.len());
        if best.map_or(true, |(b, _)| ue < b) {
            best = Some((ue, delta));
        }
    }
    Ok(best.expect("candidate set is non-empty"))
}

/// Probability that a correct record has lower uncertainty than an
/// incorrect one, ties counted half: the Mann-Whitney statistic computed
/// from average ranks.
pub fn auroc(records: &[EvalRecord], kind: UncertaintyKind) -> Result<f64> {
    let (correct, incorrect) = split_uncertainties(records, kind)?;
    let n_c = correct.len();
    let n_i = incorrect.len();
    let mut all: Vec<(f64, bool)> = correct
        .iter()
        .map(|&u| (u, true))
        .chain(incorrect.iter().map(|&u| (u, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Sum of average ranks (1-based) over the incorrect class.
    let mut rank_sum_incorrect = 0.0f64;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
        let ties_incorrect = all[i..j].iter().filter(|(_, c)| !c).count();
        rank_sum_incorrect += avg_rank * ties_incorrect as f64;
        i = j;
    }
    let u_stat = rank_sum_incorrect - (n_i * (n_i + 1)) as f64 / 2.0;
    Ok(u_stat / (n_c as f64 * n_i as f64))
}

/// Which class counts as positive when tracing the precision-recall curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrPositive {
    /// Positives are correct records, ranked by ascending uncertainty
    /// (accepted detections).
    In,
    /// Positives are incorrect records, ranked by descending uncertainty
    /// (rejected detections).
    Out,
}

/// Area under the precision-recall curve traced by sweeping the threshold
/// over every distinct uncertainty value (plus one value below the minimum,
/// so the rejected-positive curve reaches full recall). Step-wise area with
/// right-continuous precision.
pub fn aupr(records: &[EvalRecord], kind: UncertaintyKind, positive: PrPositive) -> Result<f64> {
    let (correct, incorrect) = split_uncertainties(records, kind)?;
    let n = correct.len() + incorrect.len();
    let mut all: Vec<(f64, bool)> = correct
        .iter()
        .map(|&u| (u, true))
        .chain(incorrect.iter().map(|&u| (u, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Cumulative counts at each distinct value v: records with u <= v.
    let mut distinct: Vec<(f64, usize, usize)> = Vec::new(); // (value, n_le, correct_le)
    let mut n_le = 0usize;
    let mut c_le = 0usize;
    let mut i = 0;
    while i < all.len() {
        let v = all[i].0;
        while i < all.len() && all[i].0 == v {
            n_le += 1;
            if all[i].1 {
                c_le += 1;
            }
            i += 1;
        }
        distinct.push((v, n_le, c_le));
    }

    let mut points: Vec<(f64, f64)> = Vec::new(); // (recall, precision), recall non-decreasing
    match positive {
        PrPositive::In => {
            for &(_, n_le, c_le) in &distinct {
                // predicted positive = accepted = {u <= delta}
                let tp = c_le;
                points.push((tp as f64 / correct.len() as f64, tp as f64 / n_le as f64));
            }
        }
        PrPositive::Out => {
            // predicted positive = rejected = {u > delta}; sweep from the
            // largest value down, then one threshold below the minimum.
            for &(_, n_le, c_le) in distinct.iter().rev() {
                let pred = n - n_le;
                if pred == 0 {
                    continue;
                }
                let tp = incorrect.len() - (n_le - c_le);
                points.push((tp as f64 / incorrect.len() as f64, tp as f64 / pred as f64));
            }
            points.push((1.0, incorrect.len() as f64 / n as f64));
        }
    }

    Ok(step_area(&points))
}

/// Step-wise area under a PR point sequence with non-decreasing recall:
/// each recall increment contributes at the precision of its right point.
fn step_area(points: &[(f64, f64)]) -> f64 {
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for &(recall, precision) in points {
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    area
}

/// Average precision for one class: detections ranked by descending
/// confidence, greedily matched to the highest-IoU unmatched same-class
/// object of the same image at IoU >= 0.5, with the all-points precision
/// envelope integrated over recall.
pub fn average_precision<'a, I>(detections: I, gts: &[GroundTruthObject], class_id: usize) -> f64
where
    I: IntoIterator<Item = &'a EvalRecord>,
{
    let gt_count = gts.iter().filter(|g| g.class_label == class_id).count();
    if gt_count == 0 {
        return 0.0;
    }
    let mut dets: Vec<&EvalRecord> = detections
        .into_iter()
        .filter(|r| r.winning_label == class_id)
        .collect();
    dets.sort_by(|a, b| {
        b.winning_score
            .total_cmp(&a.winning_score)
            .then_with(|| a.image_id.cmp(&b.image_id))
            .then_with(|| a.bbox.x1.total_cmp(&b.bbox.x1))
            .then_with(|| a.bbox.y1.total_cmp(&b.bbox.y1))
    });
    if dets.is_empty() {
        return 0.0;
    }

    let class_gts: Vec<&GroundTruthObject> =
        gts.iter().filter(|g| g.class_label == class_id).collect();
    let mut matched = vec![false; class_gts.len()];
    let mut tps: Vec<bool> = Vec::with_capacity(dets.len());
    for det in &dets {
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in class_gts.iter().enumerate() {
            if matched[gi] || gt.image_id != det.image_id {
                continue;
            }
            let v = iou(&det.bbox, &gt.bbox);
            if best.map_or(true, |(_, b)| v > b) {
                best = Some((gi, v));
            }
        }
        match best {
            Some((gi, v)) if v >= 0.5 => {
                matched[gi] = true;
                tps.push(true);
            }
            _ => tps.push(false),
        }
    }

    // Precision-recall points in rank order, then the envelope from the
    // right, integrated over recall increments.
    let mut tp_acc = 0usize;
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(tps.len());
    for (rank, &is_tp) in tps.iter().enumerate() {
        if is_tp {
            tp_acc += 1;
        }
        points.push((
            tp_acc as f64 / gt_count as f64,
            tp_acc as f64 / (rank + 1) as f64,
        ));
    }
    let mut envelope = points.clone();
    let mut running_max = 0.0f64;
    for p in envelope.iter_mut().rev() {
        running_max = running_max.max(p.1);
        p.1 = running_max;
    }
    step_area(&envelope)
}

/// Mean of per-class average precision over classes with at least one
/// ground-truth instance.
pub fn mean_average_precision(records: &[EvalRecord], gts: &[GroundTruthObject]) -> f64 {
    let mut classes: Vec<usize> = gts.iter().map(|g| g.class_label).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.is_empty() {
        return 0.0;
    }
    let sum: f64 = classes
        .iter()
        .map(|&c| average_precision(records.iter(), gts, c))
        .sum();
    sum / classes.len() as f64
}
