//! Line-oriented serialization of detection corpora, ground truth and
//! report CSVs.
//!
//! Corpus file layout (UTF-8, whitespace-separated fields, one record per
//! line):
//!
//! ```text
//! boxcorpus 1 <name> <m> <class_1> ... <class_m>
//! image <image_id> <width> <height> <regime> <n_samples>
//! det <image_id> <sample_index> <x1> <y1> <x2> <y2> <s_1> ... <s_m>
//! ```
//!
//! The header line plus the `image` records form the corpus manifest; every
//! `det` record references a declared image. Coordinates carry four
//! fractional digits, scores six. Ground-truth files hold one record per
//! object:
//!
//! ```text
//! gt <image_id> <class_index> <x1> <y1> <x2> <y2>
//! ```

use crate::error::{Error, Result};
use crate::metrics::GroundTruthObject;
use crate::model::{validate_sample_set, BoundingBox, Detection, Regime, SampleSet, ScoreDistribution};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

pub const CORPUS_FORMAT_VERSION: u32 = 1;

/// Header information of a corpus file.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub name: String,
    pub class_names: Vec<String>,
    pub images: Vec<ImageEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageEntry {
    pub image_id: String,
    pub width: f64,
    pub height: f64,
    pub regime: Regime,
    pub num_samples: usize,
}

impl CorpusManifest {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn image(&self, image_id: &str) -> Option<&ImageEntry> {
        self.images.iter().find(|e| e.image_id == image_id)
    }
}

fn read_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes)
        .map_err(|_| Error::MalformedInput(format!("{}: not valid UTF-8", path.display())))
}

fn parse_field<T: std::str::FromStr>(token: &str, line_no: usize, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| Error::MalformedInput(format!("line {line_no}: bad {what} {token:?}")))
}

/// Load a detection corpus. Every sample set is validated (boxes clamped,
/// degenerate detections dropped) before it is returned.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<(Vec<SampleSet>, CorpusManifest)> {
    let text = read_file(path.as_ref())?;
    parse_corpus(&text)
}

/// Parse a corpus from text; see the module docs for the format.
pub fn parse_corpus(text: &str) -> Result<(Vec<SampleSet>, CorpusManifest)> {
    let mut lines = text.lines().enumerate();

    let (first_no, first) = loop {
        match lines.next() {
            Some((no, l)) if !l.trim().is_empty() => break (no + 1, l),
            Some(_) => continue,
            None => return Err(Error::MalformedInput("empty corpus file".into())),
        }
    };
    let head: Vec<&str> = first.split_whitespace().collect();
    if head.len() < 4 || head[0] != "boxcorpus" {
        return Err(Error::MalformedInput(format!(
            "line {first_no}: expected `boxcorpus <version> <name> <m> <classes...>` header"
        )));
    }
    let version: u32 = parse_field(head[1], first_no, "version")?;
    if version != CORPUS_FORMAT_VERSION {
        return Err(Error::MalformedInput(format!(
            "unsupported corpus version {version}"
        )));
    }
    let name = head[2].to_string();
    let m: usize = parse_field(head[3], first_no, "class count")?;
    if m == 0 || head.len() != 4 + m {
        return Err(Error::MalformedInput(format!(
            "line {first_no}: header declares {m} classes but lists {}",
            head.len().saturating_sub(4)
        )));
    }
    let class_names: Vec<String> = head[4..].iter().map(|s| s.to_string()).collect();

    let mut manifest = CorpusManifest {
        name,
        class_names,
        images: Vec::new(),
    };
    let mut sets: Vec<SampleSet> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    for (no, line) in lines {
        let line_no = no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "image" => {
                if fields.len() != 6 {
                    return Err(Error::MalformedInput(format!(
                        "line {line_no}: image record needs 6 fields, got {}",
                        fields.len()
                    )));
                }
                let image_id = fields[1].to_string();
                if index.contains_key(&image_id) {
                    return Err(Error::MalformedInput(format!(
                        "line {line_no}: duplicate image id {image_id:?}"
                    )));
                }
                let width: f64 = parse_field(fields[2], line_no, "width")?;
                let height: f64 = parse_field(fields[3], line_no, "height")?;
                let regime = Regime::parse(fields[4])?;
                let num_samples: usize = parse_field(fields[5], line_no, "sample count")?;
                if num_samples == 0 {
                    return Err(Error::MalformedInput(format!(
                        "line {line_no}: image {image_id:?} declares zero samples"
                    )));
                }
                manifest.images.push(ImageEntry {
                    image_id: image_id.clone(),
                    width,
                    height,
                    regime,
                    num_samples,
                });
                index.insert(image_id.clone(), sets.len());
                sets.push(SampleSet {
                    image_id,
                    image_width: width,
                    image_height: height,
                    num_classes: m,
                    samples: vec![Vec::new(); num_samples],
                    regime,
                });
            }
            "det" => {
                if fields.len() != 7 + m {
                    return Err(Error::MalformedInput(format!(
                        "line {line_no}: det record needs {} fields for m={m}, got {}",
                        7 + m,
                        fields.len()
                    )));
                }
                let set_idx = *index.get(fields[1]).ok_or_else(|| {
                    Error::MalformedInput(format!(
                        "line {line_no}: detection references undeclared image {:?}",
                        fields[1]
                    ))
                })?;
                let sample_index: usize = parse_field(fields[2], line_no, "sample index")?;
                let x1: f64 = parse_field(fields[3], line_no, "x1")?;
                let y1: f64 = parse_field(fields[4], line_no, "y1")?;
                let x2: f64 = parse_field(fields[5], line_no, "x2")?;
                let y2: f64 = parse_field(fields[6], line_no, "y2")?;
                let mut scores = Vec::with_capacity(m);
                for (k, token) in fields[7..].iter().enumerate() {
                    scores.push(parse_field::<f64>(token, line_no, &format!("score {k}"))?);
                }
                let set = &mut sets[set_idx];
                if sample_index >= set.samples.len() {
                    return Err(Error::MalformedInput(format!(
                        "line {line_no}: sample index {sample_index} out of range for image {:?}",
                        set.image_id
                    )));
                }
                let bbox = BoundingBox::new(x1, y1, x2, y2)
                    .map_err(|e| Error::MalformedInput(format!("line {line_no}: {e}")))?;
                let scores = ScoreDistribution::new(scores)
                    .map_err(|e| Error::MalformedInput(format!("line {line_no}: {e}")))?;
                set.samples[sample_index].push(Detection::new(bbox, scores, sample_index));
            }
            other => {
                return Err(Error::MalformedInput(format!(
                    "line {line_no}: unknown record type {other:?}"
                )));
            }
        }
    }

    let sets = sets
        .into_iter()
        .map(validate_sample_set)
        .collect::<Result<Vec<_>>>()?;
    Ok((sets, manifest))
}

/// Serialize a corpus; the inverse of [`parse_corpus`] on valid data.
pub fn corpus_to_string(sets: &[SampleSet], manifest: &CorpusManifest) -> String {
    let mut out = String::new();
    write!(
        out,
        "boxcorpus {CORPUS_FORMAT_VERSION} {} {}",
        manifest.name,
        manifest.num_classes()
    )
    .unwrap();
    for c in &manifest.class_names {
        write!(out, " {c}").unwrap();
    }
    out.push('\n');
    for e in &manifest.images {
        writeln!(
            out,
            "image {} {:.4} {:.4} {} {}",
            e.image_id,
            e.width,
            e.height,
            e.regime.as_str(),
            e.num_samples
        )
        .unwrap();
    }
    for set in sets {
        for sample in &set.samples {
            for d in sample {
                write!(
                    out,
                    "det {} {} {:.4} {:.4} {:.4} {:.4}",
                    set.image_id, d.sample_index, d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2
                )
                .unwrap();
                for s in d.scores.scores() {
                    write!(out, " {s:.6}").unwrap();
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn write_corpus(
    sets: &[SampleSet],
    manifest: &CorpusManifest,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, corpus_to_string(sets, manifest)).map_err(|e| Error::io(path, e))
}

/// Load ground truth against a corpus manifest. Open-set images must list
/// no objects; class indices must be below the manifest's class count.
pub fn load_ground_truth(
    path: impl AsRef<Path>,
    manifest: &CorpusManifest,
) -> Result<Vec<GroundTruthObject>> {
    let text = read_file(path.as_ref())?;
    parse_ground_truth(&text, manifest)
}

pub fn parse_ground_truth(text: &str, manifest: &CorpusManifest) -> Result<Vec<GroundTruthObject>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] != "gt" || fields.len() != 7 {
            return Err(Error::MalformedInput(format!(
                "line {line_no}: expected `gt <image_id> <class> <x1> <y1> <x2> <y2>`"
            )));
        }
        let image_id = fields[1].to_string();
        let entry = manifest.image(&image_id).ok_or_else(|| {
            Error::MalformedInput(format!(
                "line {line_no}: ground truth references unknown image {image_id:?}"
            ))
        })?;
        if entry.regime.is_open_set() {
            return Err(Error::MalformedInput(format!(
                "line {line_no}: open-set image {image_id:?} must list no known-class objects"
            )));
        }
        let class_label: usize = parse_field(fields[2], line_no, "class index")?;
        if class_label >= manifest.num_classes() {
            return Err(Error::MalformedInput(format!(
                "line {line_no}: class index {class_label} out of range (m = {})",
                manifest.num_classes()
            )));
        }
        let x1: f64 = parse_field(fields[3], line_no, "x1")?;
        let y1: f64 = parse_field(fields[4], line_no, "y1")?;
        let x2: f64 = parse_field(fields[5], line_no, "x2")?;
        let y2: f64 = parse_field(fields[6], line_no, "y2")?;
        let bbox = BoundingBox::new(x1, y1, x2, y2)
            .map_err(|e| Error::MalformedInput(format!("line {line_no}: {e}")))?;
        out.push(GroundTruthObject {
            bbox,
            class_label,
            image_id,
        });
    }
    Ok(out)
}

pub fn ground_truth_to_string(gts: &[GroundTruthObject]) -> String {
    let mut out = String::new();
    for g in gts {
        writeln!(
            out,
            "gt {} {} {:.4} {:.4} {:.4} {:.4}",
            g.image_id, g.class_label, g.bbox.x1, g.bbox.y1, g.bbox.x2, g.bbox.y2
        )
        .unwrap();
    }
    out
}

pub fn write_ground_truth(gts: &[GroundTruthObject], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, ground_truth_to_string(gts)).map_err(|e| Error::io(path, e))
}

/// One row of the evaluation report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub affinity: String,
    pub theta: Option<f64>,
    pub dataset_regimes: String,
    pub uncertainty_kind: String,
    pub map: f64,
    pub ue_min: f64,
    pub delta_star: f64,
    pub auroc: f64,
    pub aupr_in: f64,
    pub aupr_out: f64,
    pub n_correct: usize,
    pub n_closed_err: usize,
    pub n_open_err: usize,
}

pub const REPORT_HEADER: &str = "method,affinity,theta,dataset_regimes,uncertainty_kind,map,ue_min,delta_star,auroc,aupr_in,aupr_out,n_correct,n_closed_err,n_open_err";

impl ReportRow {
    fn sort_key(&self) -> (String, String, String, String, String) {
        (
            self.method.clone(),
            self.affinity.clone(),
            self.theta.map_or(String::new(), |t| format!("{t:.2}")),
            self.dataset_regimes.clone(),
            self.uncertainty_kind.clone(),
        )
    }

    fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{}",
            self.method,
            self.affinity,
            self.theta.map_or(String::new(), |t| format!("{t:.2}")),
            self.dataset_regimes,
            self.uncertainty_kind,
            self.map,
            self.ue_min,
            self.delta_star,
            self.auroc,
            self.aupr_in,
            self.aupr_out,
            self.n_correct,
            self.n_closed_err,
            self.n_open_err
        )
    }
}

/// Render report rows as CSV, sorted lexicographically by configuration so
/// identical inputs yield byte-identical output.
pub fn report_to_csv(rows: &[ReportRow]) -> String {
    let mut sorted: Vec<&ReportRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.sort_key());
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in sorted {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn write_report(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report_to_csv(rows)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_corpus_text() -> String {
        [
            "boxcorpus 1 tiny 2 cat dog",
            "image img-a 100.0000 80.0000 closed-set 2",
            "image img-b 100.0000 80.0000 distant-open-set 2",
            "det img-a 0 10.0000 10.0000 40.0000 40.0000 0.800000 0.100000",
            "det img-a 1 10.5000 10.0000 40.5000 40.0000 0.750000 0.120000",
            "det img-b 0 50.0000 50.0000 70.0000 70.0000 0.300000 0.300000",
        ]
        .join("\n")
            + "\n"
    }

    #[test]
    fn parses_a_small_corpus() {
        let (sets, manifest) = parse_corpus(&tiny_corpus_text()).unwrap();
        assert_eq!(manifest.name, "tiny");
        assert_eq!(manifest.class_names, vec!["cat", "dog"]);
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].num_detections(), 2);
        assert_eq!(sets[1].regime, Regime::DistantOpenSet);
    }

    #[test]
    fn empty_image_keeps_empty_samples() {
        let text = "boxcorpus 1 t 1 x\nimage only 10.0000 10.0000 closed-set 3\n";
        let (sets, _) = parse_corpus(text).unwrap();
        assert_eq!(sets[0].samples.len(), 3);
        assert!(sets[0].samples.iter().all(Vec::is_empty));
    }

    #[test]
    fn round_trip_is_identity() {
        let (sets, manifest) = parse_corpus(&tiny_corpus_text()).unwrap();
        let text = corpus_to_string(&sets, &manifest);
        let (sets2, manifest2) = parse_corpus(&text).unwrap();
        assert_eq!(sets, sets2);
        assert_eq!(manifest, manifest2);
        assert_eq!(text, corpus_to_string(&sets2, &manifest2));
    }

    #[test]
    fn wrong_score_count_is_malformed() {
        let text = "boxcorpus 1 t 2 a b\nimage i 10.0000 10.0000 closed-set 1\ndet i 0 1.0 1.0 5.0 5.0 0.9\n";
        assert!(matches!(parse_corpus(text), Err(Error::MalformedInput(_))));
    }

    #[test]
    fn bad_regime_is_detected() {
        let text = "boxcorpus 1 t 1 a\nimage i 10.0 10.0 sideways 1\n";
        assert!(matches!(parse_corpus(text), Err(Error::UnknownRegime(_))));
    }

    #[test]
    fn ground_truth_parses_and_validates() {
        let (_, manifest) = parse_corpus(&tiny_corpus_text()).unwrap();
        let gts = parse_ground_truth("gt img-a 0 10.0000 10.0000 40.0000 40.0000\n", &manifest).unwrap();
        assert_eq!(gts.len(), 1);
        assert_eq!(gts[0].class_label, 0);

        // label out of range
        let err = parse_ground_truth("gt img-a 5 0.0 0.0 1.0 1.0\n", &manifest);
        assert!(matches!(err, Err(Error::MalformedInput(_))));
        // open-set image with objects
        let err = parse_ground_truth("gt img-b 0 0.0 0.0 1.0 1.0\n", &manifest);
        assert!(matches!(err, Err(Error::MalformedInput(_))));
        // distant open-set with zero records is fine
        assert!(parse_ground_truth("", &manifest).unwrap().is_empty());
    }

    #[test]
    fn report_csv_is_deterministic_and_ordered() {
        let row = |method: &str, theta: Option<f64>| ReportRow {
            method: method.into(),
            affinity: "iou".into(),
            theta,
            dataset_regimes: "all".into(),
            uncertainty_kind: "entropy".into(),
            map: 0.5,
            ue_min: 0.25,
            delta_star: 0.1,
            auroc: 0.9,
            aupr_in: 0.8,
            aupr_out: 0.7,
            n_correct: 10,
            n_closed_err: 2,
            n_open_err: 3,
        };
        let a = vec![row("hungarian", None), row("bsas", Some(0.7))];
        let b = vec![row("bsas", Some(0.7)), row("hungarian", None)];
        assert_eq!(report_to_csv(&a), report_to_csv(&b));
        assert!(report_to_csv(&a).starts_with(REPORT_HEADER));
    }

    #[test]
    fn zero_rows_yield_header_only() {
        assert_eq!(report_to_csv(&[]), format!("{REPORT_HEADER}\n"));
    }

    #[test]
    fn report_round_trips_to_six_decimals() {
        let row = ReportRow {
            method: "bsas".into(),
            affinity: "iou+kl".into(),
            theta: Some(0.95),
            dataset_regimes: "closed".into(),
            uncertainty_kind: "spatial".into(),
            map: 0.123456789,
            ue_min: 0.987654321,
            delta_star: -0.5,
            auroc: 0.333333333,
            aupr_in: 0.666666666,
            aupr_out: 0.1,
            n_correct: 1,
            n_closed_err: 2,
            n_open_err: 3,
        };
        let csv = report_to_csv(&[row.clone()]);
        let line = csv.lines().nth(1).unwrap();
        let fields: Vec<&str> = line.split(',').collect();
        assert!((fields[5].parse::<f64>().unwrap() - row.map).abs() < 5e-7);
        assert!((fields[6].parse::<f64>().unwrap() - row.ue_min).abs() < 5e-7);
        assert_eq!(fields[11], "1");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn quantize4(x: f64) -> f64 {
            format!("{x:.4}").parse().unwrap()
        }

        fn quantize6(x: f64) -> f64 {
            format!("{x:.6}").parse().unwrap()
        }

        prop_compose! {
            fn arb_corpus()(
                n_images in 1usize..4,
                detections in prop::collection::vec(
                    (0usize..4, 0usize..3, 0.0..80.0f64, 0.0..60.0f64, 1.0..20.0f64, 1.0..20.0f64, 0.01..0.9f64),
                    0..30,
                ),
            ) -> (Vec<SampleSet>, CorpusManifest) {
                let regimes = [Regime::ClosedSet, Regime::NearOpenSet, Regime::DistantOpenSet];
                let mut sets = Vec::new();
                let mut manifest = CorpusManifest {
                    name: "prop".into(),
                    class_names: vec!["a".into(), "b".into()],
                    images: Vec::new(),
                };
                for i in 0..n_images {
                    let id = format!("img-{i}");
                    manifest.images.push(ImageEntry {
                        image_id: id.clone(),
                        width: 100.0,
                        height: 80.0,
                        regime: regimes[i % 3],
                        num_samples: 3,
                    });
                    sets.push(SampleSet {
                        image_id: id,
                        image_width: 100.0,
                        image_height: 80.0,
                        num_classes: 2,
                        samples: vec![Vec::new(); 3],
                        regime: regimes[i % 3],
                    });
                }
                for (img, sample, x1, y1, w, h, s) in detections {
                    let img = img % n_images;
                    let bbox = BoundingBox::new(
                        quantize4(x1),
                        quantize4(y1),
                        quantize4((x1 + w).min(100.0)),
                        quantize4((y1 + h).min(80.0)),
                    );
                    let Ok(bbox) = bbox else { continue };
                    let scores = ScoreDistribution::new(vec![quantize6(s), quantize6(0.05)]).unwrap();
                    sets[img].samples[sample].push(Detection::new(bbox, scores, sample));
                }
                (sets, manifest)
            }
        }

        proptest! {
            #[test]
            fn load_after_write_is_identity((sets, manifest) in arb_corpus()) {
                let text = corpus_to_string(&sets, &manifest);
                let (sets2, manifest2) = parse_corpus(&text).unwrap();
                prop_assert_eq!(&sets, &sets2);
                prop_assert_eq!(&manifest, &manifest2);
                prop_assert_eq!(text, corpus_to_string(&sets2, &manifest2));
            }

            #[test]
            fn arbitrary_text_never_panics(text in ".{0,400}") {
                let _ = parse_corpus(&text);
            }

            #[test]
            fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
                if let Ok(text) = String::from_utf8(bytes) {
                    let _ = parse_corpus(&text);
                }
            }
        }
    }
}
