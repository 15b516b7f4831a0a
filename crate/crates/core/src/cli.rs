//! Command-line surface: `sicle segment` and `sicle eval`.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Error;
use crate::ift::ArcCost;
use crate::imgio::{self, Image, LabelMap, SaliencyMap};
use crate::metrics::{self, GroundTruth, DEFAULT_TOLERANCE};
use crate::pipeline::{default_config, segment, SegmentationResult, SicleConfig};
use crate::removal::{Criterion, Decay};
use crate::seeding::Strategy;

const OVERLAY_COLOR: [u8; 3] = [0, 255, 255];

#[derive(Debug, Parser)]
#[command(name = "sicle", version, about = "Object-based superpixel segmentation by iterative seed removal")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment images and write one label map per emitted scale.
    Segment(SegmentArgs),
    /// Score label maps (given or freshly computed) against ground truths.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplingArg {
    Grid,
    Rnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostArg {
    Root,
    Dyn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Size,
    Minc,
    Maxc,
    Minsc,
    Maxsc,
    Rnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    /// N0^(1 - i/(omega-1)), at most `--omega` forests.
    Curve,
    /// N0 * e^-i.
    Disf,
    /// Use `--scales` as the exact per-iteration seed counts.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Jsonl,
}

/// Pipeline parameters shared by both subcommands.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Number of oversampled seeds.
    #[arg(long, default_value_t = 3000)]
    pub n0: usize,
    /// Desired number of superpixels.
    #[arg(long, default_value_t = crate::pipeline::DEFAULT_NF)]
    pub nf: usize,
    /// Additional superpixel counts to emit, strictly decreasing (e.g. 500,100,25).
    #[arg(long, value_delimiter = ',')]
    pub scales: Vec<usize>,
    /// Maximum number of forests for the curve schedule.
    #[arg(long, default_value_t = 5)]
    pub omega: usize,
    #[arg(long, value_enum, default_value = "curve")]
    pub schedule: ScheduleArg,
    #[arg(long, value_enum, default_value = "rnd")]
    pub sampling: SamplingArg,
    #[arg(long, value_enum, default_value = "root")]
    pub cost: CostArg,
    #[arg(long, value_enum, default_value = "minsc")]
    pub criterion: CriterionArg,
    /// Disable saliency modulation of the relevance criterion.
    #[arg(long)]
    pub no_object: bool,
    /// Saliency PGM (one input) or directory of <stem>.pgm maps.
    #[arg(long)]
    pub saliency: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    /// Worker threads for multi-image runs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    /// PGM/PPM images.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also write <stem>_<k>_ov.ppm with superpixel borders drawn in cyan.
    #[arg(long)]
    pub overlay: bool,
    /// Ground-truth PGM (one input) or directory; prints BR/UE of each scale.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: usize,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Directory of ground-truth PGMs named <stem>.pgm.
    #[arg(long)]
    pub gt: PathBuf,
    /// Directory of label maps named <stem>.pgm or <stem>_<k>.pgm to score as-is.
    #[arg(long, conflicts_with = "inputs")]
    pub maps: Option<PathBuf>,
    /// Images to segment once per `--nf-sweep` value (or `--nf`).
    pub inputs: Vec<PathBuf>,
    /// Superpixel counts to sweep, e.g. 25,50,100,250,500,750.
    #[arg(long, value_delimiter = ',')]
    pub nf_sweep: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: ReportFormat,
    /// Report destination (stdout when absent).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Leave the seconds column empty so reports are byte-stable.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// Failure classes, each reported with its own one-line prefix.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("I/O error: {0}")]
    Io(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Io { .. } => CliError::Io(msg),
            Error::DimensionMismatch { .. } => CliError::Dimension(msg),
            Error::MalformedHeader(_)
            | Error::MalformedData(_)
            | Error::UnsupportedMaxval(_)
            | Error::WrongKind { .. }
            | Error::InvalidImage(_)
            | Error::InvalidLabels(_) => CliError::Input(msg),
            _ => CliError::Config(msg),
        }
    }
}

impl ConfigArgs {
    pub fn to_config(&self) -> Result<SicleConfig, CliError> {
        if self.scales.windows(2).any(|w| w[0] <= w[1]) {
            return Err(CliError::Config(format!(
                "--scales must be strictly decreasing, got {:?}",
                self.scales
            )));
        }
        if self.jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        let mut config = default_config().with_n0(self.n0).with_nf(self.nf);
        config.sampling.strategy = match self.sampling {
            SamplingArg::Grid => Strategy::Grid,
            SamplingArg::Rnd => Strategy::Random,
        };
        config.sampling.rng_seed = self.rng_seed;
        config.mode = match self.cost {
            CostArg::Root => ArcCost::Root,
            CostArg::Dyn => ArcCost::Dyn,
        };
        config.criterion.base = match self.criterion {
            CriterionArg::Size => Criterion::Size,
            CriterionArg::Minc => Criterion::MinContrast,
            CriterionArg::Maxc => Criterion::MaxContrast,
            CriterionArg::Minsc => Criterion::MinSizeContrast,
            CriterionArg::Maxsc => Criterion::MaxSizeContrast,
            CriterionArg::Rnd => Criterion::Random,
        };
        config.criterion.object_modulated = !self.no_object;
        config.schedule.decay = match self.schedule {
            ScheduleArg::Curve => Decay::Curve {
                omega_cap: self.omega,
            },
            ScheduleArg::Disf => Decay::Disf,
            ScheduleArg::Explicit => {
                let mut list: Vec<usize> =
                    self.scales.iter().copied().filter(|&k| k < self.n0).collect();
                if list.last() != Some(&self.nf) {
                    list.push(self.nf);
                }
                Decay::Explicit(list)
            }
        };
        config.emit_scales = self.scales.iter().copied().collect::<BTreeSet<_>>();
        config.validate()?;
        Ok(config)
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

/// Resolves a per-image companion file: `flag` is either the file itself
/// (single input only) or a directory holding `<stem>.pgm`.
fn companion(flag: &Option<PathBuf>, image: &Path, inputs: usize, what: &str) -> Result<Option<PathBuf>, CliError> {
    match flag {
        None => Ok(None),
        Some(p) if p.is_dir() => Ok(Some(p.join(format!("{}.pgm", stem(image))))),
        Some(_) if inputs > 1 => Err(CliError::Config(format!(
            "--{what} must be a directory when segmenting several images"
        ))),
        Some(p) => Ok(Some(p.clone())),
    }
}

fn load_saliency_for(flag: &Option<PathBuf>, image_path: &Path, image: &Image, inputs: usize) -> Result<Option<SaliencyMap>, CliError> {
    companion(flag, image_path, inputs, "saliency")?
        .map(|p| imgio::load_saliency(p, image.dims()).map_err(CliError::from))
        .transpose()
}

/// Runs the pipeline on one image and times only the segmentation itself.
fn timed_segment(image: &Image, saliency: Option<&SaliencyMap>, config: &SicleConfig) -> Result<(SegmentationResult, f64), CliError> {
    let start = Instant::now();
    let result = segment(image, saliency, config)?;
    Ok((result, start.elapsed().as_secs_f64()))
}

fn segment_one(args: &SegmentArgs, config: &SicleConfig, input: &Path) -> Result<String, CliError> {
    let inputs = args.inputs.len();
    let image = imgio::load_image(input)?;
    let saliency = load_saliency_for(&args.config.saliency, input, &image, inputs)?;
    let gt = companion(&args.gt, input, inputs, "gt")?
        .map(metrics::load_ground_truth)
        .transpose()?;
    let (result, seconds) = timed_segment(&image, saliency.as_ref(), config)?;

    let name = stem(input);
    let counts: Vec<String> = result.seed_counts.iter().map(|c| c.to_string()).collect();
    let mut line = format!(
        "{name}: seeds {} ({} iterations) in {seconds:.3} s",
        counts.join(" -> "),
        result.iterations_run
    );
    for (&k, map) in result.scales.iter().rev() {
        imgio::save_label_map(map, args.out.join(format!("{name}_{k}.pgm")))?;
        if args.overlay {
            let ov = imgio::render_overlay(&image, map, OVERLAY_COLOR)?;
            imgio::save_image(&ov, args.out.join(format!("{name}_{k}_ov.ppm")))?;
        }
        if let Some(gt) = &gt {
            let m = metrics::evaluate(map, gt, args.tolerance)?;
            line.push_str(&format!("; k={k} br={:.4} ue={:.4}", m.br, m.ue));
        }
    }
    Ok(line)
}

/// Segments every input, printing one line per image. Returns the number of failed inputs.
pub fn cmd_segment(args: &SegmentArgs, out: &mut impl Write, err: &mut impl Write) -> Result<usize, CliError> {
    let config = args.config.to_config()?;
    if !args.out.is_dir() {
        std::fs::create_dir_all(&args.out)
            .map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    }
    let pool = args.config.pool()?;
    let results: Vec<Result<String, CliError>> = pool.install(|| {
        args.inputs
            .par_iter()
            .map(|input| segment_one(args, &config, input))
            .collect()
    });
    let mut failures = 0;
    for (input, result) in args.inputs.iter().zip(results) {
        match result {
            Ok(line) => writeln!(out, "{line}"),
            Err(e) => {
                failures += 1;
                writeln!(err, "sicle: {}: {e}", input.display())
            }
        }
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(failures)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub image: String,
    pub nf: Option<usize>,
    pub br: f64,
    pub ue: f64,
    pub seconds: Option<f64>,
}

/// Ground truth for a map stem `<stem>` or `<stem>_<k>`.
fn gt_for_map(gt_dir: &Path, map_stem: &str) -> Option<(String, PathBuf)> {
    let direct = gt_dir.join(format!("{map_stem}.pgm"));
    if direct.is_file() {
        return Some((map_stem.to_string(), direct));
    }
    let (base, suffix) = map_stem.rsplit_once('_')?;
    if suffix.is_empty() || !suffix.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let path = gt_dir.join(format!("{base}.pgm"));
    path.is_file().then(|| (base.to_string(), path))
}

fn sorted_pgms(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "pgm"))
        .collect();
    files.sort();
    Ok(files)
}

fn eval_maps(args: &EvalArgs, maps_dir: &Path, err: &mut impl Write) -> Result<(Vec<ReportRow>, usize), CliError> {
    let mut rows = Vec::new();
    let mut unpaired = 0;
    for path in sorted_pgms(maps_dir)? {
        let map_stem = stem(&path);
        let Some((image, gt_path)) = gt_for_map(&args.gt, &map_stem) else {
            unpaired += 1;
            writeln!(err, "sicle: unpaired: no ground truth for {}", path.display())
                .map_err(|e| CliError::Io(e.to_string()))?;
            continue;
        };
        let (w, h, ids) = imgio::load_region_ids(&path)?;
        let map = LabelMap::relabeled(w, h, &ids)?;
        let gt = metrics::load_ground_truth(&gt_path)?;
        let m = metrics::evaluate(&map, &gt, args.tolerance)?;
        rows.push(ReportRow {
            image,
            nf: Some(m.superpixel_count),
            br: m.br,
            ue: m.ue,
            seconds: None,
        });
    }
    Ok((rows, unpaired))
}

fn eval_images(args: &EvalArgs, err: &mut impl Write) -> Result<(Vec<ReportRow>, usize), CliError> {
    let base = args.config.to_config()?;
    let sweep: Vec<usize> = if args.nf_sweep.is_empty() {
        vec![args.config.nf]
    } else {
        args.nf_sweep.clone()
    };
    let mut configs = Vec::new();
    for &nf in &sweep {
        let mut c = base.clone().with_nf(nf);
        c.emit_scales.retain(|&k| k >= nf);
        if let Decay::Explicit(_) = c.schedule.decay {
            return Err(CliError::Config("--schedule explicit cannot be combined with an nf sweep".into()));
        }
        c.validate()?;
        configs.push(c);
    }

    let mut jobs = Vec::new();
    let mut unpaired = 0;
    for input in &args.inputs {
        let gt_path = args.gt.join(format!("{}.pgm", stem(input)));
        if gt_path.is_file() {
            jobs.push((input.clone(), gt_path));
        } else {
            unpaired += 1;
            writeln!(err, "sicle: unpaired: no ground truth for {}", input.display())
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
    }

    let inputs = args.inputs.len();
    let pool = args.config.pool()?;
    let per_image: Vec<Result<Vec<ReportRow>, CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|(input, gt_path)| {
                let image = imgio::load_image(input)?;
                let saliency = load_saliency_for(&args.config.saliency, input, &image, inputs)?;
                let gt: GroundTruth = metrics::load_ground_truth(gt_path)?;
                configs
                    .iter()
                    .map(|config| {
                        let (result, seconds) = timed_segment(&image, saliency.as_ref(), config)?;
                        let m = metrics::evaluate(&result.final_map, &gt, args.tolerance)?;
                        Ok(ReportRow {
                            image: stem(input),
                            nf: Some(config.nf()),
                            br: m.br,
                            ue: m.ue,
                            seconds: (!args.no_timing).then_some(seconds),
                        })
                    })
                    .collect()
            })
            .collect()
    });
    let mut rows = Vec::new();
    for result in per_image {
        rows.extend(result?);
    }
    Ok((rows, unpaired))
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

pub fn write_report(rows: &[ReportRow], format: ReportFormat, out: &mut impl Write) -> Result<(), CliError> {
    let io = |e: &dyn std::fmt::Display| CliError::Io(e.to_string());
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row).map_err(|e| io(&e))?;
            }
            w.flush().map_err(|e| io(&e))?;
        }
        ReportFormat::Jsonl => {
            for row in rows {
                let line = serde_json::to_string(row).map_err(|e| io(&e))?;
                writeln!(out, "{line}").map_err(|e| io(&e))?;
            }
        }
    }
    Ok(())
}

/// Writes the report (with a trailing `mean` row) and returns the number of
/// skipped inputs.
pub fn cmd_eval(args: &EvalArgs, out: &mut impl Write, err: &mut impl Write) -> Result<usize, CliError> {
    let (mut rows, unpaired) = match &args.maps {
        Some(dir) => eval_maps(args, dir, err)?,
        None if args.inputs.is_empty() => {
            return Err(CliError::Config("either --maps or input images are required".into()))
        }
        None => eval_images(args, err)?,
    };
    if rows.is_empty() {
        return Err(CliError::Input("empty corpus: nothing was evaluated".into()));
    }
    rows.sort_by(|a, b| (&a.image, a.nf).cmp(&(&b.image, b.nf)));
    let timed = rows.iter().all(|r| r.seconds.is_some());
    let aggregate = ReportRow {
        image: "mean".into(),
        nf: None,
        br: mean(rows.iter().map(|r| r.br)),
        ue: mean(rows.iter().map(|r| r.ue)),
        seconds: timed.then(|| mean(rows.iter().filter_map(|r| r.seconds))),
    };
    rows.push(aggregate);

    match &args.report {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            write_report(&rows, args.format, &mut file)?;
        }
        None => write_report(&rows, args.format, out)?,
    }
    Ok(unpaired)
}

/// Parses nothing; dispatches an already-parsed command and maps the outcome to an exit status.
pub fn run(cli: Cli) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let (mut out, mut err) = (stdout.lock(), stderr.lock());
    let outcome = match &cli.command {
        Command::Segment(args) => cmd_segment(args, &mut out, &mut err),
        Command::Eval(args) => cmd_eval(args, &mut out, &mut err),
    };
    match outcome {
        Ok(0) => 0,
        Ok(_) => 1,
        Err(e) => {
            let _ = writeln!(err, "sicle: {e}");
            match e {
                CliError::Config(_) => 2,
                _ => 1,
            }
        }
    }
}
