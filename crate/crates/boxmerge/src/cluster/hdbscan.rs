//! Density-based clustering of detections via 2-D point embeddings:
//! core distances, a mutual-reachability minimum spanning tree, a condensed
//! cluster hierarchy, and excess-of-mass cluster selection.

use crate::cluster::Cluster;
use crate::error::{Error, Result};
use crate::model::SampleSet;

/// How a detection box maps to a 2-D point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingKind {
    /// Box center `((x1+x2)/2, (y1+y2)/2)`.
    Centroid,
    /// Top-left corner `(x1, y1)`.
    Corner,
    /// Distances from the top-left corner to the image origin and from the
    /// bottom-right corner to the far image corner.
    Euclidean,
}

impl EmbeddingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EmbeddingKind::Centroid => "centroid",
            EmbeddingKind::Corner => "corner",
            EmbeddingKind::Euclidean => "euclidean",
        }
    }
}

/// 2-D embedding of every detection in a sample set, in canonical detection
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEmbedding {
    pub kind: EmbeddingKind,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct HdbscanConfig {
    /// Smallest group that can survive as a cluster; at least 2.
    pub min_cluster_size: usize,
    /// Which nearest neighbor (excluding the point itself) defines the core
    /// distance; at least 1.
    pub min_samples: usize,
}

impl HdbscanConfig {
    pub fn new(min_cluster_size: usize, min_samples: usize) -> Result<Self> {
        if min_cluster_size < 2 {
            return Err(Error::MalformedInput("min_cluster_size must be >= 2".into()));
        }
        if min_samples < 1 {
            return Err(Error::MalformedInput("min_samples must be >= 1".into()));
        }
        Ok(HdbscanConfig {
            min_cluster_size,
            min_samples,
        })
    }

    /// Default used by the experiment grid: an object consistently detected
    /// should appear in a sizeable fraction of the `n` forward passes.
    pub fn for_sample_count(n_samples: usize) -> Self {
        HdbscanConfig {
            min_cluster_size: (n_samples / 4).max(2),
            min_samples: 1,
        }
    }
}

/// Map every detection of the sample set to a 2-D point, in canonical order.
pub fn embed(sample_set: &SampleSet, kind: EmbeddingKind) -> PointEmbedding {
    let points = sample_set
        .ordered_detections()
        .iter()
        .map(|d| match kind {
            EmbeddingKind::Centroid => d.bbox.center(),
            EmbeddingKind::Corner => (d.bbox.x1, d.bbox.y1),
            EmbeddingKind::Euclidean => {
                let near = (d.bbox.x1.powi(2) + d.bbox.y1.powi(2)).sqrt();
                let far = ((sample_set.image_width - d.bbox.x2).powi(2)
                    + (sample_set.image_height - d.bbox.y2).powi(2))
                .sqrt();
                (near, far)
            }
        })
        .collect();
    PointEmbedding { kind, points }
}

fn euclidean(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Distance of each point to its `min_samples`-th nearest neighbor, the
/// point itself excluded.
pub fn core_distances(points: &[(f64, f64)], min_samples: usize) -> Result<Vec<f64>> {
    if points.len() < min_samples + 1 {
        return Err(Error::InsufficientPoints {
            have: points.len(),
            need: min_samples + 1,
        });
    }
    let mut out = Vec::with_capacity(points.len());
    for (i, &p) in points.iter().enumerate() {
        let mut dists: Vec<f64> = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &q)| euclidean(p, q))
            .collect();
        dists.sort_by(f64::total_cmp);
        out.push(dists[min_samples - 1]);
    }
    Ok(out)
}

/// One edge of the mutual-reachability minimum spanning tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

fn mutual_reachability(points: &[(f64, f64)], core: &[f64], a: usize, b: usize) -> f64 {
    core[a].max(core[b]).max(euclidean(points[a], points[b]))
}

/// Prim's minimum spanning tree under the mutual-reachability distance.
/// Ties pick the lowest point index, so the tree is deterministic.
pub fn mutual_reachability_mst(points: &[(f64, f64)], core: &[f64]) -> Vec<MstEdge> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut key = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);

    in_tree[0] = true;
    let mut last = 0usize;
    for _ in 1..n {
        for j in 0..n {
            if !in_tree[j] {
                let w = mutual_reachability(points, core, last, j);
                if w < key[j] {
                    key[j] = w;
                    parent[j] = last;
                }
            }
        }
        let mut next = usize::MAX;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || key[j] < key[next]) {
                next = j;
            }
        }
        edges.push(MstEdge {
            a: parent[next],
            b: next,
            weight: key[next],
        });
        in_tree[next] = true;
        last = next;
    }
    edges
}

#[derive(Debug, Clone, Copy)]
struct SltNode {
    left: usize,
    right: usize,
    distance: f64,
    size: usize,
}

#[derive(Debug, Clone, Copy)]
enum CondChild {
    Point(usize),
    Cluster,
}

#[derive(Debug, Clone, Copy)]
struct CondEntry {
    parent: usize,
    child: CondChild,
    lambda: f64,
    size: usize,
}

/// Cut the single-linkage hierarchy down to clusters of at least
/// `min_cluster_size`, select final clusters by excess-of-mass stability,
/// and label every point: dense labels from 0, noise is -1.
pub fn extract_clusters(n_points: usize, mst: &[MstEdge], config: &HdbscanConfig) -> Vec<i32> {
    let n = n_points;
    if n == 0 {
        return Vec::new();
    }
    if n == 1 || mst.len() != n - 1 {
        return vec![-1; n];
    }
    let mcs = config.min_cluster_size;

    // Single-linkage hierarchy: merge MST edges in ascending weight order
    // (equivalently, remove them in descending order).
    let mut sorted: Vec<&MstEdge> = mst.iter().collect();
    sorted.sort_by(|x, y| {
        x.weight
            .total_cmp(&y.weight)
            .then(x.a.cmp(&y.a))
            .then(x.b.cmp(&y.b))
    });
    let mut uf: Vec<usize> = (0..2 * n - 1).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    let mut slt: Vec<SltNode> = Vec::with_capacity(n - 1);
    for e in sorted {
        let ra = find(&mut uf, e.a);
        let rb = find(&mut uf, e.b);
        let size_of = |id: usize, slt: &[SltNode]| if id < n { 1 } else { slt[id - n].size };
        let node = SltNode {
            left: ra,
            right: rb,
            distance: e.weight,
            size: size_of(ra, &slt) + size_of(rb, &slt),
        };
        let new_id = n + slt.len();
        uf[ra] = new_id;
        uf[rb] = new_id;
        slt.push(node);
    }

    // Condense: walk top-down; a side smaller than min_cluster_size sheds
    // its points at the split's lambda, a side at least that big either
    // continues the current cluster or (when both qualify) founds two new
    // child clusters.
    let leaves_under = |root: usize| -> Vec<usize> {
        let mut stack = vec![root];
        let mut out = Vec::new();
        while let Some(id) = stack.pop() {
            if id < n {
                out.push(id);
            } else {
                let nd = slt[id - n];
                stack.push(nd.left);
                stack.push(nd.right);
            }
        }
        out
    };
    let lambda_of = |dist: f64| if dist > 0.0 { 1.0 / dist } else { f64::INFINITY };

    let mut entries: Vec<CondEntry> = Vec::new();
    let mut birth: Vec<f64> = vec![0.0]; // cluster 0 is the root
    let mut cluster_parent: Vec<Option<usize>> = vec![None];
    let root_slt = 2 * n - 2;
    let mut stack: Vec<(usize, usize)> = vec![(root_slt, 0)];
    while let Some((slt_id, cid)) = stack.pop() {
        let nd = slt[slt_id - n];
        let lambda = lambda_of(nd.distance);
        let size_of = |id: usize| if id < n { 1 } else { slt[id - n].size };
        let (lsz, rsz) = (size_of(nd.left), size_of(nd.right));
        let shed = |side: usize, entries: &mut Vec<CondEntry>| {
            for p in leaves_under(side) {
                entries.push(CondEntry {
                    parent: cid,
                    child: CondChild::Point(p),
                    lambda,
                    size: 1,
                });
            }
        };
        match (lsz >= mcs, rsz >= mcs) {
            (true, true) => {
                for side in [nd.left, nd.right] {
                    let new_cid = birth.len();
                    birth.push(lambda);
                    cluster_parent.push(Some(cid));
                    entries.push(CondEntry {
                        parent: cid,
                        child: CondChild::Cluster,
                        lambda,
                        size: size_of(side),
                    });
                    stack.push((side, new_cid));
                }
            }
            (true, false) => {
                shed(nd.right, &mut entries);
                stack.push((nd.left, cid));
            }
            (false, true) => {
                shed(nd.left, &mut entries);
                stack.push((nd.right, cid));
            }
            (false, false) => {
                shed(nd.left, &mut entries);
                shed(nd.right, &mut entries);
            }
        }
    }

    // Excess-of-mass: a cluster's stability is the lambda-mass its children
    // accumulate past its birth; a parent wins over its children only with
    // strictly greater stability.
    let k = birth.len();
    let mut stability = vec![0.0f64; k];
    for e in &entries {
        stability[e.parent] += (e.lambda - birth[e.parent]) * e.size as f64;
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (cid, parent) in cluster_parent.iter().enumerate() {
        if let Some(p) = *parent {
            children[p].push(cid);
        }
    }
    let mut selected = vec![false; k];
    let mut effective = vec![0.0f64; k];
    for cid in (1..k).rev() {
        let child_sum: f64 = children[cid].iter().map(|&c| effective[c]).sum();
        if children[cid].is_empty() {
            selected[cid] = true;
            effective[cid] = stability[cid];
        } else if stability[cid] > child_sum {
            selected[cid] = true;
            effective[cid] = stability[cid];
            let mut sub = children[cid].clone();
            while let Some(c) = sub.pop() {
                selected[c] = false;
                sub.extend_from_slice(&children[c]);
            }
        } else {
            effective[cid] = child_sum;
        }
    }

    let mut labels = vec![-1i32; n];
    if selected.iter().any(|&s| s) {
        let mut dense = vec![-1i32; k];
        let mut next = 0;
        for (cid, &sel) in selected.iter().enumerate() {
            if sel {
                dense[cid] = next;
                next += 1;
            }
        }
        for e in &entries {
            if let CondChild::Point(p) = e.child {
                let mut cur = Some(e.parent);
                while let Some(c) = cur {
                    if selected[c] {
                        labels[p] = dense[c];
                        break;
                    }
                    cur = cluster_parent[c];
                }
            }
        }
    } else {
        // The hierarchy never split into two viable clusters, so the root is
        // the only candidate. Keep the points that persisted to the densest
        // level; if even those are too few, everything is noise.
        let max_lambda = entries
            .iter()
            .map(|e| e.lambda)
            .fold(f64::NEG_INFINITY, f64::max);
        let member_count = entries.iter().filter(|e| e.lambda >= max_lambda).count();
        if member_count >= mcs {
            for e in &entries {
                if let CondChild::Point(p) = e.child {
                    if e.lambda >= max_lambda {
                        labels[p] = 0;
                    }
                }
            }
        }
    }
    labels
}

/// Full pipeline for one sample set: embed, compute core distances, build
/// the mutual-reachability MST and extract cluster labels, then group the
/// detections. Noise detections become singleton clusters so the usual
/// two-member observation rule is the single place they get discarded.
pub fn hdbscan_cluster(
    sample_set: &SampleSet,
    kind: EmbeddingKind,
    config: &HdbscanConfig,
) -> Vec<Cluster> {
    let dets = sample_set.ordered_detections();
    let embedding = embed(sample_set, kind);

    let labels = if dets.len() < config.min_samples + 1 || dets.len() < 2 {
        vec![-1; dets.len()]
    } else {
        let core = core_distances(&embedding.points, config.min_samples)
            .expect("length checked above");
        let mst = mutual_reachability_mst(&embedding.points, &core);
        extract_clusters(dets.len(), &mst, config)
    };

    let n_clusters = labels.iter().copied().max().map_or(0, |m| (m + 1).max(0)) as usize;
    let mut grouped: Vec<Option<Cluster>> = vec![None; n_clusters];
    let mut noise: Vec<Cluster> = Vec::new();
    for (det, &label) in dets.into_iter().zip(&labels) {
        if label < 0 {
            noise.push(Cluster::new(det));
        } else {
            match &mut grouped[label as usize] {
                Some(c) => c.push(det),
                slot @ None => *slot = Some(Cluster::new(det)),
            }
        }
    }
    grouped.into_iter().flatten().chain(noise).collect()
}
