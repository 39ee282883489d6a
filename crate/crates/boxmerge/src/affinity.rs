//! Pairwise affinities between detections: spatial measures (IoU, PAC, EAC)
//! and semantic modifiers (same winning label, symmetrized KL divergence).
//!
//! All spatial measures share one contract: symmetric, in `[0, 1]`, and
//! exactly 1 when the boxes are identical, so clustering methods can treat
//! them interchangeably.

use crate::error::Result;
use crate::model::{BoundingBox, Detection, ScoreDistribution};

/// Floor applied to renormalized score entries before logarithms.
pub const KL_EPS: f64 = 1e-10;

/// Default weight on the normalized center-offset term of PAC/EAC.
pub const DEFAULT_LAMBDA_MOTION: f64 = 0.5;
/// Default weight on the extent-difference term of PAC/EAC.
pub const DEFAULT_LAMBDA_SHAPE: f64 = 1.5;

/// Spatial affinity measure between two boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpatialAffinity {
    Iou,
    Pac,
    Eac,
}

impl SpatialAffinity {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpatialAffinity::Iou => "iou",
            SpatialAffinity::Pac => "pac",
            SpatialAffinity::Eac => "eac",
        }
    }
}

/// Optional semantic term layered on top of a spatial measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemanticModifier {
    None,
    SameLabel,
    Kl,
}

impl SemanticModifier {
    pub fn suffix(&self) -> &'static str {
        match self {
            SemanticModifier::None => "",
            SemanticModifier::SameLabel => "+sl",
            SemanticModifier::Kl => "+kl",
        }
    }
}

/// A fully specified affinity: spatial measure, semantic modifier and the
/// PAC/EAC weights.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AffinityKind {
    pub spatial: SpatialAffinity,
    pub semantic: SemanticModifier,
    #[serde(default = "default_lambda_motion")]
    pub lambda_motion: f64,
    #[serde(default = "default_lambda_shape")]
    pub lambda_shape: f64,
}

fn default_lambda_motion() -> f64 {
    DEFAULT_LAMBDA_MOTION
}

fn default_lambda_shape() -> f64 {
    DEFAULT_LAMBDA_SHAPE
}

impl AffinityKind {
    pub fn new(spatial: SpatialAffinity, semantic: SemanticModifier) -> Self {
        AffinityKind {
            spatial,
            semantic,
            lambda_motion: DEFAULT_LAMBDA_MOTION,
            lambda_shape: DEFAULT_LAMBDA_SHAPE,
        }
    }

    /// Short name used in report rows, e.g. `iou+sl`.
    pub fn name(&self) -> String {
        format!("{}{}", self.spatial.as_str(), self.semantic.suffix())
    }

    pub fn spatial_value(&self, a: &BoundingBox, b: &BoundingBox) -> f64 {
        match self.spatial {
            SpatialAffinity::Iou => iou(a, b),
            SpatialAffinity::Pac => pac(a, b, self.lambda_shape),
            SpatialAffinity::Eac => eac(a, b, self.lambda_motion, self.lambda_shape),
        }
    }
}

/// Intersection over union of two boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let iy = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = ix * iy;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter / union
}

/// Normalized squared center offset: `((cx_a-cx_b)/w̄)² + ((cy_a-cy_b)/h̄)²`
/// with the mean extents as normalizers.
fn motion_term(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (cxa, cya) = a.center();
    let (cxb, cyb) = b.center();
    let mean_w = (a.width() + b.width()) / 2.0;
    let mean_h = (a.height() + b.height()) / 2.0;
    ((cxa - cxb) / mean_w).powi(2) + ((cya - cyb) / mean_h).powi(2)
}

/// Symmetric extent-difference ratio, one term per axis.
fn shape_term(a: &BoundingBox, b: &BoundingBox) -> f64 {
    (a.width() - b.width()).abs() / (a.width() + b.width())
        + (a.height() - b.height()).abs() / (a.height() + b.height())
}

/// Exponential association cost mapped to an affinity:
/// `exp(-(λ_m·M + λ_s·S))`.
pub fn eac(a: &BoundingBox, b: &BoundingBox, lambda_motion: f64, lambda_shape: f64) -> f64 {
    (-(lambda_motion * motion_term(a, b) + lambda_shape * shape_term(a, b))).exp()
}

/// Product association cost mapped to an affinity:
/// `1/(1+M) · exp(-λ_s·S)`.
pub fn pac(a: &BoundingBox, b: &BoundingBox, lambda_shape: f64) -> f64 {
    (1.0 / (1.0 + motion_term(a, b))) * (-lambda_shape * shape_term(a, b)).exp()
}

/// Whether two detections share the same winning class label.
pub fn same_label(a: &Detection, b: &Detection) -> bool {
    a.winning_label() == b.winning_label()
}

/// Symmetrized KL divergence between two score distributions, computed on
/// the renormalized foreground distributions with entries floored at
/// [`KL_EPS`]. Zero exactly when the inputs are proportional.
pub fn kl_semantic(a: &ScoreDistribution, b: &ScoreDistribution) -> Result<f64> {
    let p = a.renormalized(KL_EPS)?;
    let q = b.renormalized(KL_EPS)?;
    let mut forward = 0.0;
    let mut reverse = 0.0;
    for (&pi, &qi) in p.iter().zip(&q) {
        forward += pi * (pi / qi).ln();
        reverse += qi * (qi / pi).ln();
    }
    Ok(0.5 * (forward + reverse).max(0.0))
}

/// Composite affinity between a detection and another detection (or a
/// cluster representative expressed as one). `SameLabel` maps a label
/// mismatch to negative infinity; `Kl` subtracts the semantic divergence
/// from the spatial value.
pub fn composite_affinity(kind: &AffinityKind, a: &Detection, b: &Detection) -> f64 {
    let spatial = kind.spatial_value(&a.bbox, &b.bbox);
    match kind.semantic {
        SemanticModifier::None => spatial,
        SemanticModifier::SameLabel => {
            if same_label(a, b) {
                spatial
            } else {
                f64::NEG_INFINITY
            }
        }
        SemanticModifier::Kl => {
            // Both inputs passed validation, so renormalization cannot fail.
            spatial - kl_semantic(&a.scores, &b.scores).unwrap_or(f64::INFINITY)
        }
    }
}
