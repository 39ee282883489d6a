//! Experiment runner: sweeps a grid of affinity-clustering combinations
//! over a corpus, evaluates every dataset-regime union with both
//! uncertainty kinds, and produces report rows.

use crate::affinity::{AffinityKind, SemanticModifier, SpatialAffinity};
use crate::cluster::hdbscan::{hdbscan_cluster, EmbeddingKind, HdbscanConfig};
use crate::cluster::{cluster_sample_set, ClusterConfig, ClusterMethod};
use crate::error::{Error, Result};
use crate::io::ReportRow;
use crate::metrics::{
    label_correctness, mean_average_precision, min_uncertainty_error, aupr, auroc, Correctness,
    EvalRecord, GroundTruthObject, PrPositive,
};
use crate::model::{Observation, Regime, SampleSet};
use crate::observation::{form_observations, passthrough_observations, UncertaintyKind};
use rayon::prelude::*;
use std::collections::HashMap;

/// Default spatial gate for the Hungarian grid cells. The assignment itself
/// has no threshold, but matches below this spatial affinity are rejected
/// so unrelated detections are not forced together.
pub const DEFAULT_HUNGARIAN_GATE: f64 = 0.5;

/// One configuration in the comparison grid.
#[derive(Debug, Clone, PartialEq)]
pub enum GridCell {
    /// Single-pass detector baseline: the first sample passed through
    /// without clustering. Spatial uncertainty does not exist here.
    Standard,
    /// The fixed sequential-clustering baseline: BSAS, IoU, theta 0.95.
    BsasBaseline,
    Bsas { affinity: AffinityKind, theta: f64 },
    BsasExclusive { affinity: AffinityKind, theta: f64 },
    Hungarian { affinity: AffinityKind, gate: f64 },
    Hdbscan { embedding: EmbeddingKind },
}

impl GridCell {
    pub fn method_name(&self) -> &'static str {
        match self {
            GridCell::Standard => "standard",
            GridCell::BsasBaseline => "bsas-baseline",
            GridCell::Bsas { .. } => "bsas",
            GridCell::BsasExclusive { .. } => "bsas-excl",
            GridCell::Hungarian { .. } => "hungarian",
            GridCell::Hdbscan { .. } => "hdbscan",
        }
    }

    pub fn affinity_name(&self) -> String {
        match self {
            GridCell::Standard => "none".into(),
            GridCell::BsasBaseline => "iou".into(),
            GridCell::Bsas { affinity, .. } | GridCell::BsasExclusive { affinity, .. } => affinity.name(),
            GridCell::Hungarian { affinity, .. } => affinity.name(),
            GridCell::Hdbscan { embedding } => embedding.as_str().into(),
        }
    }

    pub fn theta_value(&self) -> Option<f64> {
        match self {
            GridCell::Standard | GridCell::Hdbscan { .. } => None,
            GridCell::BsasBaseline => Some(0.95),
            GridCell::Bsas { theta, .. } | GridCell::BsasExclusive { theta, .. } => Some(*theta),
            GridCell::Hungarian { gate, .. } => Some(*gate),
        }
    }

    pub fn label(&self) -> String {
        match self.theta_value() {
            Some(t) => format!("{} {} {t:.2}", self.method_name(), self.affinity_name()),
            None => format!("{} {}", self.method_name(), self.affinity_name()),
        }
    }

    /// Whether observations from this cell carry the requested uncertainty.
    pub fn supports(&self, kind: UncertaintyKind) -> bool {
        !(matches!(self, GridCell::Standard) && kind == UncertaintyKind::SpatialVariance)
    }

    /// Cluster one sample set and form its observations.
    pub fn observations(&self, set: &SampleSet) -> Vec<Observation> {
        match self {
            GridCell::Standard => {
                let single = SampleSet {
                    samples: vec![set.samples[0].clone()],
                    ..set.clone()
                };
                passthrough_observations(&single).expect("restricted to one sample")
            }
            GridCell::BsasBaseline => {
                let affinity = AffinityKind::new(SpatialAffinity::Iou, SemanticModifier::None);
                let cfg = ClusterConfig::new(ClusterMethod::Bsas, affinity, 0.95).unwrap();
                form_observations(&cluster_sample_set(set, &cfg), &set.image_id)
            }
            GridCell::Bsas { affinity, theta } => {
                let cfg = ClusterConfig::new(ClusterMethod::Bsas, *affinity, *theta).unwrap();
                form_observations(&cluster_sample_set(set, &cfg), &set.image_id)
            }
            GridCell::BsasExclusive { affinity, theta } => {
                let cfg = ClusterConfig::new(ClusterMethod::BsasExclusive, *affinity, *theta).unwrap();
                form_observations(&cluster_sample_set(set, &cfg), &set.image_id)
            }
            GridCell::Hungarian { affinity, gate } => {
                let mut cfg = ClusterConfig::new(ClusterMethod::Hungarian, *affinity, *gate).unwrap();
                cfg.hungarian_gate = Some(*gate);
                form_observations(&cluster_sample_set(set, &cfg), &set.image_id)
            }
            GridCell::Hdbscan { embedding } => {
                let cfg = HdbscanConfig::for_sample_count(set.num_samples());
                form_observations(&hdbscan_cluster(set, *embedding, &cfg), &set.image_id)
            }
        }
    }
}

/// The comparison grid: BSAS and exclusive BSAS over four thresholds and
/// three IoU-based affinities, Hungarian over all nine affinity
/// combinations, HDBSCAN over its three input embeddings, plus the two
/// baselines. 38 cells.
pub fn paper_default_grid() -> Vec<GridCell> {
    let mut cells = vec![GridCell::Standard, GridCell::BsasBaseline];
    let thetas = [0.7, 0.8, 0.9, 0.95];
    let iou_affs = [
        AffinityKind::new(SpatialAffinity::Iou, SemanticModifier::None),
        AffinityKind::new(SpatialAffinity::Iou, SemanticModifier::SameLabel),
        AffinityKind::new(SpatialAffinity::Iou, SemanticModifier::Kl),
    ];
    for &affinity in &iou_affs {
        for &theta in &thetas {
            cells.push(GridCell::Bsas { affinity, theta });
        }
    }
    for &affinity in &iou_affs {
        for &theta in &thetas {
            cells.push(GridCell::BsasExclusive { affinity, theta });
        }
    }
    for spatial in [SpatialAffinity::Iou, SpatialAffinity::Pac, SpatialAffinity::Eac] {
        for semantic in [SemanticModifier::None, SemanticModifier::SameLabel, SemanticModifier::Kl] {
            cells.push(GridCell::Hungarian {
                affinity: AffinityKind::new(spatial, semantic),
                gate: DEFAULT_HUNGARIAN_GATE,
            });
        }
    }
    for embedding in [EmbeddingKind::Centroid, EmbeddingKind::Corner, EmbeddingKind::Euclidean] {
        cells.push(GridCell::Hdbscan { embedding });
    }
    cells
}

/// The dataset unions of the evaluation protocol. Every metric for a union
/// is computed over all observations on the union's images, so mixing in
/// open-set data adds its open-set errors on top of the closed-set record
/// set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeUnion {
    Closed,
    ClosedDistant,
    ClosedNear,
    All,
}

impl RegimeUnion {
    pub fn all() -> [RegimeUnion; 4] {
        [
            RegimeUnion::Closed,
            RegimeUnion::ClosedDistant,
            RegimeUnion::ClosedNear,
            RegimeUnion::All,
        ]
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeUnion::Closed => "closed",
            RegimeUnion::ClosedDistant => "closed+distant",
            RegimeUnion::ClosedNear => "closed+near",
            RegimeUnion::All => "all",
        }
    }

    /// Does the union include images of this regime?
    pub fn includes(&self, regime: Regime) -> bool {
        match self {
            RegimeUnion::Closed => regime == Regime::ClosedSet,
            RegimeUnion::ClosedDistant => matches!(regime, Regime::ClosedSet | Regime::DistantOpenSet),
            RegimeUnion::ClosedNear => matches!(regime, Regime::ClosedSet | Regime::NearOpenSet),
            RegimeUnion::All => true,
        }
    }

    /// The union's record set: every observation on its images.
    pub fn records<'a>(&self, records: &'a [EvalRecord]) -> Vec<&'a EvalRecord> {
        records.iter().filter(|r| self.includes(r.regime)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub rows: Vec<ReportRow>,
    /// Cells x unions x kinds that could not be evaluated, with reasons.
    pub skipped: Vec<String>,
}

/// Evaluate every grid cell on the corpus. Images are processed in
/// parallel; all reductions fold in image order, so the output is
/// byte-identical regardless of thread count.
pub fn run_grid(
    sets: &[SampleSet],
    gts: &[GroundTruthObject],
    cells: &[GridCell],
    kinds: &[UncertaintyKind],
    jobs: usize,
) -> Result<GridOutcome> {
    if sets.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if jobs > 0 {
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::MalformedInput(format!("thread pool: {e}")))?;

    let mut gts_by_image: HashMap<&str, Vec<GroundTruthObject>> = HashMap::new();
    for gt in gts {
        gts_by_image.entry(gt.image_id.as_str()).or_default().push(gt.clone());
    }

    let mut rows = Vec::new();
    let mut skipped = Vec::new();

    for cell in cells {
        let per_image: Vec<Vec<EvalRecord>> = pool.install(|| {
            sets.par_iter()
                .map(|set| {
                    let observations = cell.observations(set);
                    let empty = Vec::new();
                    let image_gts = gts_by_image.get(set.image_id.as_str()).unwrap_or(&empty);
                    label_correctness(&observations, image_gts, set.regime)
                })
                .collect()
        });
        let records: Vec<EvalRecord> = per_image.into_iter().flatten().collect();

        for union in RegimeUnion::all() {
            let ue_records: Vec<EvalRecord> =
                union.records(&records).into_iter().cloned().collect();
            let map = mean_average_precision(&ue_records, gts);
            let n_correct = ue_records.iter().filter(|r| r.correctness == Correctness::Correct).count();
            let n_closed_err = ue_records
                .iter()
                .filter(|r| r.correctness == Correctness::ClosedSetError)
                .count();
            let n_open_err = ue_records
                .iter()
                .filter(|r| r.correctness == Correctness::OpenSetError)
                .count();

            for &kind in kinds {
                if !cell.supports(kind) {
                    continue;
                }
                let cell_id = format!("{} / {} / {}", cell.label(), union.as_str(), kind.as_str());
                let metrics = (|| -> Result<ReportRow> {
                    let (ue_min, delta_star) = min_uncertainty_error(&ue_records, kind)?;
                    Ok(ReportRow {
                        method: cell.method_name().into(),
                        affinity: cell.affinity_name(),
                        theta: cell.theta_value(),
                        dataset_regimes: union.as_str().into(),
                        uncertainty_kind: kind.as_str().into(),
                        map,
                        ue_min,
                        delta_star,
                        auroc: auroc(&ue_records, kind)?,
                        aupr_in: aupr(&ue_records, kind, PrPositive::In)?,
                        aupr_out: aupr(&ue_records, kind, PrPositive::Out)?,
                        n_correct,
                        n_closed_err,
                        n_open_err,
                    })
                })();
                match metrics {
                    Ok(row) => rows.push(row),
                    Err(e) => skipped.push(format!("{cell_id}: {e}")),
                }
            }
        }
    }

    rows.sort_by(|a, b| {
        (&a.method, &a.affinity, a.theta.map(f64::to_bits), &a.dataset_regimes, &a.uncertainty_kind).cmp(&(
            &b.method,
            &b.affinity,
            b.theta.map(f64::to_bits),
            &b.dataset_regimes,
            &b.uncertainty_kind,
        ))
    });
    Ok(GridOutcome { rows, skipped })
}

/// Parse an affinity name like `iou`, `pac+sl` or `eac+kl`.
pub fn parse_affinity(name: &str) -> Result<AffinityKind> {
    let (spatial_str, semantic_str) = match name.split_once('+') {
        Some((s, m)) => (s, Some(m)),
        None => (name, None),
    };
    let spatial = match spatial_str {
        "iou" => SpatialAffinity::Iou,
        "pac" => SpatialAffinity::Pac,
        "eac" => SpatialAffinity::Eac,
        other => return Err(Error::MalformedInput(format!("unknown spatial affinity {other:?}"))),
    };
    let semantic = match semantic_str {
        None => SemanticModifier::None,
        Some("sl") => SemanticModifier::SameLabel,
        Some("kl") => SemanticModifier::Kl,
        Some(other) => return Err(Error::MalformedInput(format!("unknown semantic modifier {other:?}"))),
    };
    Ok(AffinityKind::new(spatial, semantic))
}

/// Serde shape of one grid cell in a TOML grid file.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct GridCellSpec {
    pub method: String,
    #[serde(default)]
    pub affinity: Option<String>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub gate: Option<f64>,
    #[serde(default)]
    pub embedding: Option<String>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct GridFile {
    pub cells: Vec<GridCellSpec>,
}

/// Parse a custom grid from TOML.
pub fn parse_grid_file(text: &str) -> Result<Vec<GridCell>> {
    let file: GridFile =
        toml::from_str(text).map_err(|e| Error::MalformedInput(format!("grid file: {e}")))?;
    file.cells.iter().map(cell_from_spec).collect()
}

fn cell_from_spec(spec: &GridCellSpec) -> Result<GridCell> {
    let affinity = || -> Result<AffinityKind> {
        parse_affinity(spec.affinity.as_deref().ok_or_else(|| {
            Error::MalformedInput(format!("method {:?} needs an affinity", spec.method))
        })?)
    };
    let theta = || -> Result<f64> {
        spec.theta
            .ok_or_else(|| Error::MalformedInput(format!("method {:?} needs theta", spec.method)))
    };
    match spec.method.as_str() {
        "standard" => Ok(GridCell::Standard),
        "bsas-baseline" => Ok(GridCell::BsasBaseline),
        "bsas" => Ok(GridCell::Bsas { affinity: affinity()?, theta: theta()? }),
        "bsas-excl" => Ok(GridCell::BsasExclusive { affinity: affinity()?, theta: theta()? }),
        "hungarian" => Ok(GridCell::Hungarian {
            affinity: affinity()?,
            gate: spec.gate.or(spec.theta).unwrap_or(DEFAULT_HUNGARIAN_GATE),
        }),
        "hdbscan" => {
            let embedding = match spec.embedding.as_deref() {
                Some("centroid") => EmbeddingKind::Centroid,
                Some("corner") => EmbeddingKind::Corner,
                Some("euclidean") => EmbeddingKind::Euclidean,
                other => {
                    return Err(Error::MalformedInput(format!(
                        "hdbscan cell needs embedding centroid|corner|euclidean, got {other:?}"
                    )))
                }
            };
            Ok(GridCell::Hdbscan { embedding })
        }
        other => Err(Error::MalformedInput(format!("unknown method {other:?}"))),
    }
}
