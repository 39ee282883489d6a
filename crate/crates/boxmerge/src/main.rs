//! Command-line front end: generate synthetic corpora, run the comparison
//! grid, render plots, and inspect per-image clustering.

use boxmerge::cluster::hdbscan::EmbeddingKind;
use boxmerge::grid::{paper_default_grid, parse_grid_file, run_grid, GridCell};
use boxmerge::io;
use boxmerge::observation::UncertaintyKind;
use boxmerge::plot;
use boxmerge::synth::{default_scene_suite, generate_corpus, GenConfig, SceneSuite, SuiteParams};
use boxmerge::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "boxmerge", version, about = "Merge detection samples into observations with calibrated uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic detection corpus and its ground truth.
    Generate(GenerateArgs),
    /// Run an affinity-clustering grid over a corpus and write a report CSV.
    Run(RunArgs),
    /// Render SVG figures from a report CSV and its corpus.
    Plot(PlotArgs),
    /// Dump the clusters and observations of one image for debugging.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Output directory for corpus.txt, groundtruth.txt and scenes.toml.
    #[arg(long, default_value = "corpus-out")]
    out: PathBuf,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scenes per regime (closed, near open, distant open).
    #[arg(long, default_value_t = 10)]
    scenes: usize,
    /// Forward passes per image.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Scene specification file; omit to use the built-in randomized suite.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Corpus file.
    #[arg(long)]
    corpus: PathBuf,
    /// Ground-truth file.
    #[arg(long)]
    gt: PathBuf,
    /// Grid: `paper-default` or a TOML grid file.
    #[arg(long, default_value = "paper-default")]
    grid: String,
    /// Which uncertainty kinds to evaluate.
    #[arg(long, value_enum, default_value_t = UncertaintyArg::Both)]
    uncertainty: UncertaintyArg,
    /// Report CSV path.
    #[arg(long, default_value = "report.csv")]
    out: PathBuf,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct PlotArgs {
    /// Corpus file (for the spatial-accuracy figure).
    #[arg(long)]
    corpus: PathBuf,
    /// Ground-truth file.
    #[arg(long)]
    gt: PathBuf,
    /// Report CSV produced by `run`.
    #[arg(long)]
    report: PathBuf,
    /// Output directory for the SVG files.
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    /// Corpus file.
    #[arg(long)]
    corpus: PathBuf,
    /// Image to inspect.
    #[arg(long)]
    image: String,
    /// Method: standard | bsas-baseline | bsas | bsas-excl | hungarian | hdbscan.
    #[arg(long, default_value = "bsas")]
    method: String,
    /// Affinity, e.g. iou, iou+sl, eac+kl.
    #[arg(long, default_value = "iou+sl")]
    affinity: String,
    /// Threshold (BSAS family) or gate (Hungarian).
    #[arg(long, default_value_t = 0.95)]
    theta: f64,
    /// HDBSCAN embedding: centroid | corner | euclidean.
    #[arg(long, default_value = "centroid")]
    embedding: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum UncertaintyArg {
    Entropy,
    Spatial,
    Both,
}

impl UncertaintyArg {
    fn kinds(self) -> Vec<UncertaintyKind> {
        match self {
            UncertaintyArg::Entropy => vec![UncertaintyKind::Entropy],
            UncertaintyArg::Spatial => vec![UncertaintyKind::SpatialVariance],
            UncertaintyArg::Both => vec![UncertaintyKind::Entropy, UncertaintyKind::SpatialVariance],
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Run(args) => run(args),
        Command::Plot(args) => render(args),
        Command::Inspect(args) => inspect(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::MalformedInput(_)
                | Error::UnknownRegime(_)
                | Error::EmptyCorpus
                | Error::DegenerateDistribution => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn generate(args: GenerateArgs) -> boxmerge::Result<ExitCode> {
    let suite = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            SceneSuite::from_toml(&text)?
        }
        None => default_scene_suite(
            args.seed,
            &SuiteParams {
                scenes_per_regime: args.scenes,
                ..Default::default()
            },
        ),
    };
    let config = GenConfig {
        seed: args.seed,
        num_samples: args.samples,
    };
    let (sets, gts, manifest) = generate_corpus(&suite, &config)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    io::write_corpus(&sets, &manifest, args.out.join("corpus.txt"))?;
    io::write_ground_truth(&gts, args.out.join("groundtruth.txt"))?;
    let scenes_path = args.out.join("scenes.toml");
    std::fs::write(&scenes_path, suite.to_toml()).map_err(|e| Error::io(&scenes_path, e))?;
    println!(
        "wrote {} images ({} detections, {} ground-truth objects) to {}",
        sets.len(),
        sets.iter().map(|s| s.num_detections()).sum::<usize>(),
        gts.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_inputs(
    corpus: &PathBuf,
    gt: &PathBuf,
) -> boxmerge::Result<(Vec<boxmerge::SampleSet>, Vec<boxmerge::GroundTruthObject>)> {
    let (sets, manifest) = io::load_corpus(corpus)?;
    let gts = io::load_ground_truth(gt, &manifest)?;
    Ok((sets, gts))
}

fn resolve_grid(grid: &str) -> boxmerge::Result<Vec<GridCell>> {
    if grid == "paper-default" {
        Ok(paper_default_grid())
    } else {
        let text = std::fs::read_to_string(grid).map_err(|e| Error::io(grid, e))?;
        parse_grid_file(&text)
    }
}

fn run(args: RunArgs) -> boxmerge::Result<ExitCode> {
    let (sets, gts) = load_inputs(&args.corpus, &args.gt)?;
    let cells = resolve_grid(&args.grid)?;
    let outcome = run_grid(&sets, &gts, &cells, &args.uncertainty.kinds(), args.jobs)?;
    io::write_report(&outcome.rows, &args.out)?;
    println!("wrote {} rows to {}", outcome.rows.len(), args.out.display());
    if outcome.skipped.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for s in &outcome.skipped {
            eprintln!("skipped: {s}");
        }
        eprintln!("{} grid cells skipped; results are partial", outcome.skipped.len());
        Ok(ExitCode::from(3))
    }
}

fn render(args: PlotArgs) -> boxmerge::Result<ExitCode> {
    let (sets, gts) = load_inputs(&args.corpus, &args.gt)?;
    let text = std::fs::read_to_string(&args.report).map_err(|e| Error::io(&args.report, e))?;
    let rows = parse_report_csv(&text)?;
    // The spread figure compares the sequential-threshold family.
    let spread_cells = vec![
        GridCell::Bsas {
            affinity: boxmerge::grid::parse_affinity("iou+sl")?,
            theta: 0.95,
        },
        GridCell::BsasExclusive {
            affinity: boxmerge::grid::parse_affinity("iou+sl")?,
            theta: 0.9,
        },
        GridCell::BsasBaseline,
    ];
    let spreads = plot::collect_spatial_spread(&sets, &gts, &spread_cells);
    let entropy_rows: Vec<io::ReportRow> = rows
        .into_iter()
        .filter(|r| r.uncertainty_kind == "entropy" && r.dataset_regimes == "all")
        .collect();
    let written = plot::emit_plots(&entropy_rows, &spreads, &args.out)?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_report_csv(text: &str) -> boxmerge::Result<Vec<io::ReportRow>> {
    let mut rows = Vec::new();
    for (no, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 14 {
            return Err(Error::MalformedInput(format!(
                "report line {}: expected 14 columns, got {}",
                no + 1,
                f.len()
            )));
        }
        let num = |s: &str, what: &str| -> boxmerge::Result<f64> {
            s.parse()
                .map_err(|_| Error::MalformedInput(format!("report line {}: bad {what}", no + 1)))
        };
        rows.push(io::ReportRow {
            method: f[0].into(),
            affinity: f[1].into(),
            theta: if f[2].is_empty() { None } else { Some(num(f[2], "theta")?) },
            dataset_regimes: f[3].into(),
            uncertainty_kind: f[4].into(),
            map: num(f[5], "map")?,
            ue_min: num(f[6], "ue_min")?,
            delta_star: num(f[7], "delta_star")?,
            auroc: num(f[8], "auroc")?,
            aupr_in: num(f[9], "aupr_in")?,
            aupr_out: num(f[10], "aupr_out")?,
            n_correct: num(f[11], "n_correct")? as usize,
            n_closed_err: num(f[12], "n_closed_err")? as usize,
            n_open_err: num(f[13], "n_open_err")? as usize,
        });
    }
    Ok(rows)
}

fn inspect(args: InspectArgs) -> boxmerge::Result<ExitCode> {
    let (sets, _) = io::load_corpus(&args.corpus)?;
    let set = sets
        .iter()
        .find(|s| s.image_id == args.image)
        .ok_or_else(|| Error::MalformedInput(format!("no image {:?} in corpus", args.image)))?;

    let cell = match args.method.as_str() {
        "standard" => GridCell::Standard,
        "bsas-baseline" => GridCell::BsasBaseline,
        "bsas" => GridCell::Bsas {
            affinity: boxmerge::grid::parse_affinity(&args.affinity)?,
            theta: args.theta,
        },
        "bsas-excl" => GridCell::BsasExclusive {
            affinity: boxmerge::grid::parse_affinity(&args.affinity)?,
            theta: args.theta,
        },
        "hungarian" => GridCell::Hungarian {
            affinity: boxmerge::grid::parse_affinity(&args.affinity)?,
            gate: args.theta,
        },
        "hdbscan" => GridCell::Hdbscan {
            embedding: match args.embedding.as_str() {
                "centroid" => EmbeddingKind::Centroid,
                "corner" => EmbeddingKind::Corner,
                "euclidean" => EmbeddingKind::Euclidean,
                other => {
                    return Err(Error::MalformedInput(format!("unknown embedding {other:?}")))
                }
            },
        },
        other => return Err(Error::MalformedInput(format!("unknown method {other:?}"))),
    };

    println!(
        "image {} ({}x{}, {}, {} samples, {} detections)",
        set.image_id,
        set.image_width,
        set.image_height,
        set.regime.as_str(),
        set.num_samples(),
        set.num_detections()
    );
    let observations = cell.observations(set);
    println!("{} -> {} observations", cell.label(), observations.len());
    for (i, obs) in observations.iter().enumerate() {
        println!(
            "  obs {i}: box ({:.1}, {:.1}, {:.1}, {:.1}) members {} label {} score {:.3} entropy {:.4} spatial {}",
            obs.bbox.x1,
            obs.bbox.y1,
            obs.bbox.x2,
            obs.bbox.y2,
            obs.member_count,
            obs.winning_label,
            obs.winning_score,
            obs.entropy,
            obs.spatial_variance.map_or("n/a".into(), |v| format!("{v:.2}")),
        );
    }
    Ok(ExitCode::SUCCESS)
}
