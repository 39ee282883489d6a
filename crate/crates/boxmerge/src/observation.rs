//! Turning clusters into observations and extracting their uncertainty:
//! score entropy, spatial variance, and the accept/reject rule.

use crate::affinity::KL_EPS;
use crate::cluster::Cluster;
use crate::error::{Error, Result};
use crate::model::{Observation, SampleSet, ScoreDistribution};

/// Which uncertainty value drives accept/reject decisions and metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UncertaintyKind {
    Entropy,
    SpatialVariance,
}

impl UncertaintyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            UncertaintyKind::Entropy => "entropy",
            UncertaintyKind::SpatialVariance => "spatial",
        }
    }
}

/// Shannon entropy (nats) of the renormalized foreground distribution,
/// entries floored at the usual epsilon before the logarithms.
pub fn entropy(scores: &ScoreDistribution) -> Result<f64> {
    let p = scores.renormalized(KL_EPS)?;
    Ok(-p.iter().map(|&x| x * x.ln()).sum::<f64>())
}

/// Population variance of the member box coordinates, grouped into x and y
/// components: `(var_x1 + var_x2, var_y1 + var_y2, total)`.
pub fn spatial_variance(cluster: &Cluster) -> Result<(f64, f64, f64)> {
    let n = cluster.member_count();
    if n < 2 {
        return Err(Error::InsufficientMembers(n));
    }
    let var = |extract: fn(&crate::model::Detection) -> f64| -> f64 {
        let vals: Vec<f64> = cluster.members().iter().map(extract).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64
    };
    let var_x = var(|d| d.bbox.x1) + var(|d| d.bbox.x2);
    let var_y = var(|d| d.bbox.y1) + var(|d| d.bbox.y2);
    Ok((var_x, var_y, var_x + var_y))
}

/// Convert clusters into observations: groups of two or more detections are
/// merged by averaging boxes and score distributions; smaller clusters are
/// discarded.
pub fn form_observations(clusters: &[Cluster], image_id: &str) -> Vec<Observation> {
    clusters
        .iter()
        .filter(|c| c.member_count() >= 2)
        .map(|c| {
            let bbox = c.representative_box();
            let scores = c.representative_scores();
            let (label, score) = scores.winning();
            let h = entropy(&scores).expect("mean of valid distributions is valid");
            let (_, _, total) = spatial_variance(c).expect("member count checked");
            Observation {
                bbox,
                scores,
                member_count: c.member_count(),
                entropy: h,
                spatial_variance: Some(total),
                winning_label: label,
                winning_score: score,
                image_id: image_id.to_string(),
            }
        })
        .collect()
}

/// Baseline path for a single-pass detector: every detection becomes its own
/// observation, exempt from the two-member rule. Spatial variance does not
/// exist for a single detection and is recorded as absent.
pub fn passthrough_observations(sample_set: &SampleSet) -> Result<Vec<Observation>> {
    if sample_set.num_samples() != 1 {
        return Err(Error::NotSingleSample(sample_set.num_samples()));
    }
    sample_set.samples[0]
        .iter()
        .map(|d| {
            let (label, score) = d.scores.winning();
            Ok(Observation {
                bbox: d.bbox,
                scores: d.scores.clone(),
                member_count: 1,
                entropy: entropy(&d.scores)?,
                spatial_variance: None,
                winning_label: label,
                winning_score: score,
                image_id: sample_set.image_id.clone(),
            })
        })
        .collect()
}

/// Uncertainty value of an observation under the chosen kind. Spatial
/// variance is absent for pass-through observations.
pub fn uncertainty_value(obs: &Observation, kind: UncertaintyKind) -> Option<f64> {
    match kind {
        UncertaintyKind::Entropy => Some(obs.entropy),
        UncertaintyKind::SpatialVariance => obs.spatial_variance,
    }
}

/// Partition observations into `(accepted, rejected)` at threshold `delta`:
/// accepted means uncertainty at most `delta`. Observations without the
/// requested uncertainty value count as maximally uncertain and are
/// rejected, keeping the partition exhaustive.
pub fn accept_reject(
    observations: &[Observation],
    kind: UncertaintyKind,
    delta: f64,
) -> (Vec<&Observation>, Vec<&Observation>) {
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for obs in observations {
        match uncertainty_value(obs, kind) {
            Some(u) if u <= delta => accepted.push(obs),
            _ => rejected.push(obs),
        }
    }
    (accepted, rejected)
}
