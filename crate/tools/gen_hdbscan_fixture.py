#!/usr/bin/env python3
"""Generate the HDBSCAN reference fixture used by the clustering agreement
tests.

Draws 50 seeded 2-D blob datasets (2-5 clusters, 40-200 points), labels them
with scikit-learn's HDBSCAN, and writes points plus reference labels to
crates/boxmerge/tests/fixtures/hdbscan_reference.txt.

Note on parameters: scikit-learn's `min_samples=k` takes the distance to the
k-th nearest neighbor *including* the point itself, while the Rust
implementation counts neighbors excluding self, so sklearn's k corresponds
to min_samples = k - 1 on the Rust side. The fixture header records the
Rust-side values.
"""

import pathlib

import numpy as np
from sklearn.cluster import HDBSCAN

OUT = pathlib.Path(__file__).resolve().parent.parent / "crates/boxmerge/tests/fixtures/hdbscan_reference.txt"

MIN_CLUSTER_SIZE = 5
SKLEARN_MIN_SAMPLES = 2  # rust side: 1


def make_dataset(rng, idx):
    n_clusters = int(rng.integers(2, 6))
    total = int(rng.integers(40, 201))
    # well-separated centers on a coarse grid
    cells = [(i, j) for i in range(4) for j in range(4)]
    rng.shuffle(cells)
    centers = [(40.0 * i + rng.uniform(-4, 4), 40.0 * j + rng.uniform(-4, 4)) for i, j in cells[:n_clusters]]
    sizes = np.full(n_clusters, total // n_clusters)
    sizes[: total % n_clusters] += 1
    points = []
    for (cx, cy), size in zip(centers, sizes):
        spread = rng.uniform(0.6, 1.6)
        pts = rng.normal([cx, cy], spread, size=(int(size), 2))
        points.append(pts)
    return np.vstack(points)


def main():
    out_lines = [f"# datasets 50 min_cluster_size {MIN_CLUSTER_SIZE} min_samples {SKLEARN_MIN_SAMPLES - 1}"]
    for idx in range(50):
        rng = np.random.default_rng(1000 + idx)
        pts = make_dataset(rng, idx)
        pts = np.round(pts, 4)
        labels = HDBSCAN(min_cluster_size=MIN_CLUSTER_SIZE, min_samples=SKLEARN_MIN_SAMPLES).fit_predict(pts)
        out_lines.append(f"dataset {idx} {len(pts)}")
        for (x, y), l in zip(pts, labels):
            out_lines.append(f"{x:.4f} {y:.4f} {l}")
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(out_lines) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
