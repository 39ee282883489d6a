use boxmerge::grid::GridCell;
use boxmerge::synth::*;
use boxmerge::model::*;
use boxmerge::cluster::hdbscan::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn recovery_scene(rng: &mut ChaCha8Rng, idx: usize) -> SceneSpec {
    let cells = [(60.0, 50.0), (380.0, 50.0), (60.0, 290.0), (380.0, 290.0)];
    let n_objects = rng.gen_range(2..=4);
    let known = cells.iter().take(n_objects).map(|&(cx, cy)| {
        let w = rng.gen_range(55.0..80.0);
        let h = rng.gen_range(55.0..80.0);
        let x1 = cx + rng.gen_range(0.0..30.0);
        let y1 = cy + rng.gen_range(0.0..30.0);
        KnownObjectSpec {
            bbox: BoundingBox::new(x1, y1, x1 + w, y1 + h).unwrap(),
            class: rng.gen_range(0..6),
            detectability: rng.gen_range(0.9..1.0),
            jitter_sigma: rng.gen_range(0.5..1.5),
            score_concentration: 60.0,
            bias: (0.0, 0.0),
        }
    }).collect();
    SceneSpec {
        image_id: format!("rec-{idx:04}"), width: 640.0, height: 480.0,
        regime: Regime::ClosedSet, known, unknown: Vec::new(), clutter_rate: 0.0,
    }
}

fn main() {
    let config = GenConfig { seed: 505, num_samples: 20 };
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let scenes: Vec<SceneSpec> = (0..200).map(|i| recovery_scene(&mut rng, i)).collect();
    let suite = SceneSuite { classes: (0..6).map(|c| format!("c{c}")).collect(), scenes };
    let oracle: Vec<usize> = suite.scenes.iter().map(|s| expected_cluster_count(s, &config).unwrap()).collect();
    let (sets, _, _) = generate_corpus(&suite, &config).unwrap();
    for (mcs, ms) in [(5usize, 1usize), (5, 3), (5, 4), (10, 1), (10, 4), (8, 3)] {
        let cfg = HdbscanConfig::new(mcs, ms).unwrap();
        let mut bad = 0;
        for (set, &want) in sets.iter().zip(&oracle) {
            let clusters = hdbscan_cluster(set, EmbeddingKind::Centroid, &cfg);
            let got = clusters.iter().filter(|c| c.member_count() >= 2).count();
            if got != want { bad += 1; }
        }
        println!("mcs {mcs} ms {ms}: mismatches {bad}/200");
    }
}
