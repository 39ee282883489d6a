//! Seeded generator of synthetic detection-sample corpora: known objects
//! with controllable detectability, box jitter and score peakedness;
//! unknown objects that masquerade as known classes; Poisson clutter.
//!
//! All randomness flows through ChaCha8, a portable counter-based generator,
//! with one stream per scene, so corpora are bit-reproducible for a given
//! seed regardless of scene count or evaluation order.

use crate::error::{Error, Result};
use crate::io::{CorpusManifest, ImageEntry};
use crate::metrics::GroundTruthObject;
use crate::model::{validate_sample_set, BoundingBox, Detection, Regime, SampleSet, ScoreDistribution};
use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, Normal, Poisson};

/// A known-class object in a scene.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KnownObjectSpec {
    pub bbox: BoundingBox,
    pub class: usize,
    /// Probability that a forward pass detects the object.
    pub detectability: f64,
    /// Standard deviation of the Gaussian jitter added to each coordinate.
    pub jitter_sigma: f64,
    /// Dirichlet concentration on the true class; higher means peakier
    /// scores and lower entropy.
    pub score_concentration: f64,
    /// Systematic localization offset of the emitted boxes relative to the
    /// ground-truth box, for modeling a detector that sees the object but
    /// localizes it wrong.
    #[serde(default)]
    pub bias: (f64, f64),
}

/// An unknown-class object: its detections masquerade as known classes
/// drawn from the confusion profile.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UnknownObjectSpec {
    pub bbox: BoundingBox,
    /// Weighted known classes the object gets mistaken for.
    pub confusion: Vec<(usize, f64)>,
    pub detectability: f64,
    pub jitter_sigma: f64,
    /// Lower concentrations than known objects: flatter, higher-entropy
    /// scores.
    pub score_concentration: f64,
}

/// One synthetic image.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SceneSpec {
    pub image_id: String,
    pub width: f64,
    pub height: f64,
    pub regime: Regime,
    #[serde(default)]
    pub known: Vec<KnownObjectSpec>,
    #[serde(default)]
    pub unknown: Vec<UnknownObjectSpec>,
    /// Expected spurious detections per sample (Poisson rate).
    #[serde(default)]
    pub clutter_rate: f64,
}

impl SceneSpec {
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if self.regime == Regime::ClosedSet && !self.unknown.is_empty() {
            return Err(Error::MalformedInput(format!(
                "closed-set scene {:?} lists unknown objects",
                self.image_id
            )));
        }
        if self.regime.is_open_set() && !self.known.is_empty() {
            return Err(Error::MalformedInput(format!(
                "open-set scene {:?} lists known objects",
                self.image_id
            )));
        }
        for k in &self.known {
            if k.class >= num_classes {
                return Err(Error::MalformedInput(format!(
                    "scene {:?}: class {} out of range",
                    self.image_id, k.class
                )));
            }
        }
        for u in &self.unknown {
            if u.confusion.is_empty() {
                return Err(Error::MalformedInput(format!(
                    "scene {:?}: unknown object with empty confusion profile",
                    self.image_id
                )));
            }
            for &(c, w) in &u.confusion {
                if c >= num_classes || w <= 0.0 {
                    return Err(Error::MalformedInput(format!(
                        "scene {:?}: bad confusion entry ({c}, {w})",
                        self.image_id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Scene file layout: a flat list of scenes plus the class table.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SceneSuite {
    pub classes: Vec<String>,
    pub scenes: Vec<SceneSpec>,
}

impl SceneSuite {
    pub fn from_toml(text: &str) -> Result<Self> {
        let suite: SceneSuite = toml::from_str(text)
            .map_err(|e| Error::MalformedInput(format!("scene file: {e}")))?;
        for scene in &suite.scenes {
            scene.validate(suite.classes.len())?;
        }
        Ok(suite)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scene suites serialize cleanly")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    /// Forward passes per image.
    pub num_samples: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            num_samples: 20,
        }
    }
}

fn quantize4(x: f64) -> f64 {
    format!("{x:.4}").parse().unwrap()
}

fn quantize6_down(x: f64) -> f64 {
    (x * 1e6).floor().max(0.0) / 1e6
}

/// Dirichlet draw over the known classes plus an implicit background
/// component (which is dropped), concentrated on `class`.
fn draw_scores(
    rng: &mut ChaCha8Rng,
    num_classes: usize,
    class: usize,
    concentration: f64,
) -> ScoreDistribution {
    let mut gammas = Vec::with_capacity(num_classes + 1);
    for i in 0..=num_classes {
        let alpha = if i == class { concentration.max(1e-3) } else { 1.0 };
        let g = Gamma::new(alpha, 1.0).expect("positive shape");
        gammas.push(g.sample(rng).max(1e-12));
    }
    let total: f64 = gammas.iter().sum();
    let scores: Vec<f64> = gammas[..num_classes]
        .iter()
        .map(|g| quantize6_down(g / total))
        .collect();
    ScoreDistribution::new(scores).expect("dirichlet foreground slice is valid")
}

fn jittered_box(
    rng: &mut ChaCha8Rng,
    bbox: &BoundingBox,
    bias: (f64, f64),
    sigma: f64,
    width: f64,
    height: f64,
) -> Option<BoundingBox> {
    let noise = |rng: &mut ChaCha8Rng| {
        if sigma > 0.0 {
            Normal::new(0.0, sigma).unwrap().sample(rng)
        } else {
            0.0
        }
    };
    let raw = BoundingBox {
        x1: bbox.x1 + bias.0 + noise(rng),
        y1: bbox.y1 + bias.1 + noise(rng),
        x2: bbox.x2 + bias.0 + noise(rng),
        y2: bbox.y2 + bias.1 + noise(rng),
    };
    let clamped = BoundingBox {
        x1: quantize4(raw.x1.clamp(0.0, width)),
        y1: quantize4(raw.y1.clamp(0.0, height)),
        x2: quantize4(raw.x2.clamp(0.0, width)),
        y2: quantize4(raw.y2.clamp(0.0, height)),
    };
    clamped.is_valid().then_some(clamped)
}

fn weighted_choice(rng: &mut ChaCha8Rng, weights: &[(usize, f64)]) -> usize {
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    let mut x = rng.gen_range(0.0..total);
    for &(c, w) in weights {
        if x < w {
            return c;
        }
        x -= w;
    }
    weights.last().unwrap().0
}

/// Generate the corpus and ground truth for a scene list. Deterministic for
/// a given seed: scene `i` draws from stream `i + 1` of the seeded ChaCha8
/// generator.
pub fn generate_corpus(
    suite: &SceneSuite,
    config: &GenConfig,
) -> Result<(Vec<SampleSet>, Vec<GroundTruthObject>, CorpusManifest)> {
    if config.num_samples == 0 {
        return Err(Error::MalformedInput("num_samples must be >= 1".into()));
    }
    if suite.classes.is_empty() {
        return Err(Error::MalformedInput("class table must not be empty".into()));
    }
    let m = suite.classes.len();
    let mut sets = Vec::with_capacity(suite.scenes.len());
    let mut gts = Vec::new();
    let mut manifest = CorpusManifest {
        name: format!("synth-{}", config.seed),
        class_names: suite.classes.clone(),
        images: Vec::new(),
    };

    for (i, scene) in suite.scenes.iter().enumerate() {
        scene.validate(m)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(i as u64 + 1);

        let mut samples = Vec::with_capacity(config.num_samples);
        for j in 0..config.num_samples {
            let mut dets = Vec::new();
            for obj in &scene.known {
                if rng.gen_range(0.0..1.0) >= obj.detectability {
                    continue;
                }
                let Some(bbox) = jittered_box(&mut rng, &obj.bbox, obj.bias, obj.jitter_sigma, scene.width, scene.height) else {
                    continue;
                };
                let scores = draw_scores(&mut rng, m, obj.class, obj.score_concentration);
                dets.push(Detection::new(bbox, scores, j));
            }
            for obj in &scene.unknown {
                if rng.gen_range(0.0..1.0) >= obj.detectability {
                    continue;
                }
                let Some(bbox) = jittered_box(&mut rng, &obj.bbox, (0.0, 0.0), obj.jitter_sigma, scene.width, scene.height) else {
                    continue;
                };
                let class = weighted_choice(&mut rng, &obj.confusion);
                let scores = draw_scores(&mut rng, m, class, obj.score_concentration);
                dets.push(Detection::new(bbox, scores, j));
            }
            if scene.clutter_rate > 0.0 {
                let count = Poisson::new(scene.clutter_rate).unwrap().sample(&mut rng) as usize;
                for _ in 0..count {
                    let w = rng.gen_range(8.0..scene.width / 4.0);
                    let h = rng.gen_range(8.0..scene.height / 4.0);
                    let x1 = rng.gen_range(0.0..(scene.width - w));
                    let y1 = rng.gen_range(0.0..(scene.height - h));
                    let bbox = BoundingBox {
                        x1: quantize4(x1),
                        y1: quantize4(y1),
                        x2: quantize4(x1 + w),
                        y2: quantize4(y1 + h),
                    };
                    if !bbox.is_valid() {
                        continue;
                    }
                    let class = rng.gen_range(0..m);
                    let scores = draw_scores(&mut rng, m, class, 2.0);
                    dets.push(Detection::new(bbox, scores, j));
                }
            }
            samples.push(dets);
        }

        let set = validate_sample_set(SampleSet {
            image_id: scene.image_id.clone(),
            image_width: scene.width,
            image_height: scene.height,
            num_classes: m,
            samples,
            regime: scene.regime,
        })?;
        manifest.images.push(ImageEntry {
            image_id: scene.image_id.clone(),
            width: scene.width,
            height: scene.height,
            regime: scene.regime,
            num_samples: config.num_samples,
        });
        for obj in &scene.known {
            gts.push(GroundTruthObject {
                bbox: obj.bbox,
                class_label: obj.class,
                image_id: scene.image_id.clone(),
            });
        }
        sets.push(set);
    }
    Ok((sets, gts, manifest))
}

/// Ground-truth cluster count for well-separated scenes: the number of
/// objects whose expected member count `detectability * num_samples`
/// reaches the two-detection observation rule. Errors when any object pair
/// sits close enough for jitter to blur the assignment.
pub fn expected_cluster_count(spec: &SceneSpec, config: &GenConfig) -> Result<usize> {
    struct Obj {
        center: (f64, f64),
        diag: f64,
        sigma: f64,
        detectability: f64,
    }
    let mut objs: Vec<Obj> = Vec::new();
    for k in &spec.known {
        let c = k.bbox.center();
        objs.push(Obj {
            center: (c.0 + k.bias.0, c.1 + k.bias.1),
            diag: (k.bbox.width().powi(2) + k.bbox.height().powi(2)).sqrt(),
            sigma: k.jitter_sigma,
            detectability: k.detectability,
        });
    }
    for u in &spec.unknown {
        let c = u.bbox.center();
        objs.push(Obj {
            center: c,
            diag: (u.bbox.width().powi(2) + u.bbox.height().powi(2)).sqrt(),
            sigma: u.jitter_sigma,
            detectability: u.detectability,
        });
    }
    for a in 0..objs.len() {
        for b in (a + 1)..objs.len() {
            let (oa, ob) = (&objs[a], &objs[b]);
            let dist = ((oa.center.0 - ob.center.0).powi(2) + (oa.center.1 - ob.center.1).powi(2)).sqrt();
            let required = 4.0 * (oa.sigma + ob.sigma) + 0.5 * (oa.diag + ob.diag);
            if dist <= required {
                return Err(Error::OverlapAmbiguity(format!(
                    "scene {:?}: objects {a} and {b} separated by {dist:.1} px, need > {required:.1}",
                    spec.image_id
                )));
            }
        }
    }
    Ok(objs
        .iter()
        .filter(|o| o.detectability * config.num_samples as f64 >= 2.0)
        .count())
}

/// Knobs for the built-in scene suite.
#[derive(Debug, Clone, Copy)]
pub struct SuiteParams {
    pub scenes_per_regime: usize,
    pub num_classes: usize,
    pub image_width: f64,
    pub image_height: f64,
    /// Fraction of closed-set scenes that include one sloppy object (large
    /// jitter plus localization bias) to populate the closed-set error
    /// class.
    pub sloppy_fraction: f64,
    pub clutter_rate: f64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            scenes_per_regime: 10,
            num_classes: 8,
            image_width: 640.0,
            image_height: 480.0,
            sloppy_fraction: 0.3,
            clutter_rate: 0.2,
        }
    }
}

/// Default concentration profiles: known objects are confident, near
/// open-set objects masquerade with moderately peaked scores, distant
/// open-set objects look nearly uniform.
pub const KNOWN_CONCENTRATION: f64 = 60.0;
pub const NEAR_UNKNOWN_CONCENTRATION: f64 = 8.0;
pub const DISTANT_UNKNOWN_CONCENTRATION: f64 = 1.5;

/// Build a randomized, well-formed scene suite covering all three regimes.
/// Object positions are laid out on a jittered grid so most objects are
/// well-separated; the layout is deterministic in the seed.
pub fn default_scene_suite(seed: u64, params: &SuiteParams) -> SceneSuite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let classes = (0..params.num_classes).map(|c| format!("class{c:02}")).collect();

    let mut scenes = Vec::new();
    let cells = [
        (80.0, 60.0),
        (400.0, 60.0),
        (80.0, 300.0),
        (400.0, 300.0),
    ];

    for s in 0..params.scenes_per_regime {
        let mut known = Vec::new();
        let n_objects = rng.gen_range(2..=4);
        let sloppy = rng.gen_range(0.0..1.0) < params.sloppy_fraction;
        for &(cx, cy) in cells.iter().take(n_objects) {
            let w = rng.gen_range(50.0..90.0);
            let h = rng.gen_range(50.0..90.0);
            let x1 = cx + rng.gen_range(0.0..40.0);
            let y1 = cy + rng.gen_range(0.0..30.0);
            known.push(KnownObjectSpec {
                bbox: BoundingBox::new(x1, y1, x1 + w, y1 + h).unwrap(),
                class: rng.gen_range(0..params.num_classes),
                detectability: rng.gen_range(0.85..1.0),
                jitter_sigma: rng.gen_range(0.5..1.0),
                score_concentration: KNOWN_CONCENTRATION,
                bias: (0.0, 0.0),
            });
        }
        if sloppy {
            // One large, jittery, mislocalized object per flagged scene; it
            // is big enough to stay clusterable at tight thresholds and its
            // offset keeps the merged box below the correctness IoU.
            known.push(KnownObjectSpec {
                bbox: BoundingBox::new(180.0, 120.0, 460.0, 400.0).unwrap(),
                class: rng.gen_range(0..params.num_classes),
                detectability: rng.gen_range(0.9..1.0),
                jitter_sigma: 2.5,
                score_concentration: KNOWN_CONCENTRATION,
                bias: (140.0, 56.0),
            });
        }
        scenes.push(SceneSpec {
            image_id: format!("closed-{s:04}"),
            width: params.image_width,
            height: params.image_height,
            regime: Regime::ClosedSet,
            known,
            unknown: Vec::new(),
            clutter_rate: params.clutter_rate,
        });
    }

    // Near and distant open-set scenes mirror each other: identical layouts
    // and detectabilities, differing only in the confusion profile, so the
    // two open-set conditions are directly comparable.
    let mut near_scenes = Vec::new();
    let mut distant_scenes = Vec::new();
    for s in 0..params.scenes_per_regime {
        let mut near_unknown = Vec::new();
        let mut distant_unknown = Vec::new();
        let n_objects = rng.gen_range(1..=3);
        for &(cx, cy) in cells.iter().take(n_objects) {
            let w = rng.gen_range(60.0..90.0);
            let h = rng.gen_range(60.0..90.0);
            let x1 = cx + rng.gen_range(0.0..40.0);
            let y1 = cy + rng.gen_range(0.0..30.0);
            let bbox = BoundingBox::new(x1, y1, x1 + w, y1 + h).unwrap();
            let detectability = rng.gen_range(0.85..1.0);
            let jitter_sigma = rng.gen_range(0.5..0.9);
            // near: concentrated on two plausible known classes
            let a = rng.gen_range(0..params.num_classes);
            let b = (a + 1 + rng.gen_range(0..params.num_classes.saturating_sub(1)))
                % params.num_classes;
            near_unknown.push(UnknownObjectSpec {
                bbox,
                confusion: vec![(a, 0.7), (b, 0.3)],
                detectability,
                jitter_sigma,
                score_concentration: NEAR_UNKNOWN_CONCENTRATION,
            });
            distant_unknown.push(UnknownObjectSpec {
                bbox,
                confusion: (0..params.num_classes).map(|c| (c, 1.0)).collect(),
                detectability,
                jitter_sigma,
                score_concentration: DISTANT_UNKNOWN_CONCENTRATION,
            });
        }
        near_scenes.push(SceneSpec {
            image_id: format!("near-{s:04}"),
            width: params.image_width,
            height: params.image_height,
            regime: Regime::NearOpenSet,
            known: Vec::new(),
            unknown: near_unknown,
            clutter_rate: params.clutter_rate,
        });
        distant_scenes.push(SceneSpec {
            image_id: format!("distant-{s:04}"),
            width: params.image_width,
            height: params.image_height,
            regime: Regime::DistantOpenSet,
            known: Vec::new(),
            unknown: distant_unknown,
            clutter_rate: params.clutter_rate,
        });
    }
    scenes.extend(near_scenes);
    scenes.extend(distant_scenes);

    SceneSuite { classes, scenes }
}
