//! Command-line front end: benchmark runs over labeled CSV datasets, live
//! scoring of point streams, and synthetic stream generation.
//!
//! Exit codes: 0 on success, 1 for usage and configuration problems, 2 for
//! data problems (unreadable files, malformed records, streams too short to
//! bootstrap).

use std::cell::RefCell;
use std::collections::VecDeque;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::rc::Rc;

use clap::{Args, Parser, Subcommand};
use cubeforest::eval::{auc_roc, MetricsReport};
use cubeforest::ingest::{
    dataset_path, dataset_spec, load_csv, CsvOptions, DatasetSpec, LinePolicy, StreamSource,
};
use cubeforest::sampling::Reducer;
use cubeforest::stream::{drive, run_prequential, DetectorConfig, ThresholdPolicy};
use cubeforest::synth::{generate, SineStreamSpec};
use cubeforest::{Error, FeatureVector, Result};

const SCORE_HEADER: &str = "# cubeforest scores v1";

#[derive(Parser)]
#[command(
    name = "cubeforest",
    version,
    about = "Streaming anomaly detection with balanced-sample isolation forests"
)]
struct RunConfig {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a labeled dataset as a stream and report prequential AUC
    Bench(BenchArgs),
    /// Score a point stream, emitting one line per point after bootstrap
    Score(ScoreArgs),
    /// Generate a labeled synthetic sine stream from a TOML description
    Synth(SynthArgs),
}

#[derive(Args)]
struct DetectorFlags {
    /// Sliding window size: points per bootstrap and per model update
    #[arg(long, default_value_t = 256)]
    window: usize,

    /// Trees in the forest
    #[arg(long, default_value_t = 50)]
    ntrees: usize,

    /// Worst-ranked trees replaced per update
    #[arg(long, default_value_t = 10)]
    ktrees: usize,

    /// Balanced sample size per tree rebuild
    #[arg(long, default_value_t = 256)]
    sample_size: usize,

    /// Fraction of each chunk flagged anomalous (bench defaults to the
    /// dataset's measured label fraction, score to 0.1)
    #[arg(long, conflicts_with = "cutoff")]
    contamination: Option<f64>,

    /// Fixed score cutoff instead of a contamination fraction
    #[arg(long)]
    cutoff: Option<f64>,

    /// How multivariate points are collapsed to sampling scores
    /// (centroid-distance or principal-component)
    #[arg(long, default_value = "centroid-distance")]
    reducer: Reducer,

    /// Master seed; every random choice derives from it
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl DetectorFlags {
    fn to_config(&self, default_threshold: ThresholdPolicy) -> DetectorConfig {
        let threshold = if let Some(q) = self.contamination {
            ThresholdPolicy::Contamination(q)
        } else if let Some(c) = self.cutoff {
            ThresholdPolicy::FixedCutoff(c)
        } else {
            default_threshold
        };
        DetectorConfig {
            window_size: self.window,
            ntrees: self.ntrees,
            ktrees: self.ktrees,
            sample_size: self.sample_size,
            threshold,
            reducer: self.reducer,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Registry dataset name (see scripts/fetch_datasets.sh) or a path to a
    /// labeled CSV with a trailing 0/1 column
    dataset: String,

    #[command(flatten)]
    detector: DetectorFlags,

    /// Independent repetitions, seeded seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    reps: usize,

    /// Directory holding <name>.csv benchmark files
    #[arg(long, env = "CUBEFOREST_DATA_DIR", default_value = "data")]
    data_dir: PathBuf,

    /// Use only the first N rows
    #[arg(long)]
    limit: Option<usize>,

    /// Write the first repetition's per-point scores here
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Stream file of comma-separated features, one point per line; stdin
    /// when omitted
    #[arg(long)]
    input: Option<PathBuf>,

    #[command(flatten)]
    detector: DetectorFlags,

    /// Treat the last field of each line as a 0/1 label and echo it
    #[arg(long)]
    trailing_label: bool,

    /// Skip malformed lines with a warning instead of aborting
    #[arg(long)]
    skip_malformed: bool,

    /// Turn a scalar stream into overlapping windows of this width
    #[arg(long)]
    shingle: Option<usize>,

    /// Write scores here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// TOML stream description (see configs/sine_replica.toml)
    #[arg(long)]
    spec: PathBuf,

    /// Override the seed in the spec file
    #[arg(long)]
    seed: Option<u64>,

    /// Values file to write, one scalar per line; ground truth lands next to
    /// it with a .labels suffix
    #[arg(long)]
    output: PathBuf,
}

fn main() {
    let config = match RunConfig::try_parse() {
        Ok(config) => config,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match config.command {
        Command::Bench(args) => cmd_bench(args),
        Command::Score(args) => cmd_score(args),
        Command::Synth(args) => cmd_synth(args),
    };
    if let Err(e) = result {
        if let Error::Io(io) = &e {
            if io.kind() == io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
        }
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

/// 1 for problems the caller fixes by changing flags or specs, 2 for
/// problems in the data itself.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidSpec(_)
        | Error::InvalidContamination(_)
        | Error::InvalidSampleSize { .. }
        | Error::UnknownReducer(_)
        | Error::UnknownDataset(_)
        | Error::OverlappingInjections(_) => 1,
        _ => 2,
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_score_line(
    out: &mut dyn Write,
    index: usize,
    score: f64,
    label: Option<bool>,
) -> io::Result<()> {
    match label {
        Some(l) => writeln!(out, "{index},{score},{}", l as u8),
        None => writeln!(out, "{index},{score}"),
    }
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    if args.reps == 0 {
        return Err(Error::InvalidConfig("--reps must be at least 1".into()));
    }
    let (name, path, spec) = resolve_dataset(&args.dataset, &args.data_dir)?;
    let mut data = load_csv(&path, &CsvOptions::default(), spec)?;
    if let Some(limit) = args.limit {
        data.features.truncate(limit);
        data.labels.truncate(limit);
    }
    if data.rows() <= args.detector.window {
        return Err(Error::InvalidConfig(format!(
            "dataset {name} has {} rows but bootstrap consumes {}; pass a smaller --window",
            data.rows(),
            args.detector.window
        )));
    }

    let base = args
        .detector
        .to_config(ThresholdPolicy::Contamination(data.contamination()));
    base.validate()?;

    let mut aucs = Vec::with_capacity(args.reps);
    let mut scored_points = 0;
    for rep in 0..args.reps {
        let mut config = base.clone();
        config.seed = base.seed + rep as u64;
        let run = run_prequential(config, &data.features)?;
        let truth = &data.labels[run.first_scored..];
        aucs.push(auc_roc(&run.scores, truth)?);
        scored_points = run.scores.len();
        if rep == 0 {
            if let Some(out_path) = &args.output {
                let mut out = open_output(Some(out_path))?;
                writeln!(out, "{SCORE_HEADER}")?;
                for (i, &score) in run.scores.iter().enumerate() {
                    let index = run.first_scored + i;
                    write_score_line(&mut *out, index, score, Some(data.labels[index]))?;
                }
                out.flush()?;
            }
        }
    }

    let report = MetricsReport {
        dataset: name,
        config: base.describe(),
        seed: base.seed,
        aucs,
        per_type: None,
        scored_points,
    };
    print!("{report}");
    Ok(())
}

/// A registry name maps to `<data_dir>/<name>.csv`; anything with a path
/// separator or a .csv suffix is taken as a direct file path, still matched
/// against the registry by file stem for shape validation.
fn resolve_dataset(
    arg: &str,
    data_dir: &Path,
) -> Result<(String, PathBuf, Option<&'static DatasetSpec>)> {
    if arg.contains(std::path::MAIN_SEPARATOR) || arg.ends_with(".csv") {
        let path = PathBuf::from(arg);
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| arg.to_string());
        let spec = dataset_spec(&name).ok();
        Ok((name, path, spec))
    } else {
        let spec = dataset_spec(arg)?;
        let path = dataset_path(data_dir, spec.name);
        if !path.exists() {
            return Err(Error::Io(io::Error::new(
                io::ErrorKind::NotFound,
                format!(
                    "{} not found; run scripts/fetch_datasets.sh or set CUBEFOREST_DATA_DIR",
                    path.display()
                ),
            )));
        }
        Ok((spec.name.to_string(), path, Some(spec)))
    }
}

/// Collapses a scalar stream into overlapping width-w points; a shingle is
/// labeled anomalous when any covered sample is.
struct Shingled<I> {
    inner: I,
    width: usize,
    values: VecDeque<f64>,
    labels: VecDeque<bool>,
    has_labels: bool,
}

impl<I> Shingled<I> {
    fn new(inner: I, width: usize, has_labels: bool) -> Self {
        Self {
            inner,
            width,
            values: VecDeque::with_capacity(width),
            labels: VecDeque::with_capacity(width),
            has_labels,
        }
    }
}

impl<I: Iterator<Item = Result<(FeatureVector, Option<bool>)>>> Iterator for Shingled<I> {
    type Item = Result<(FeatureVector, Option<bool>)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (features, label) = match self.inner.next()? {
                Ok(record) => record,
                Err(e) => return Some(Err(e)),
            };
            if features.len() != 1 {
                return Some(Err(Error::InvalidConfig(format!(
                    "shingling needs a scalar stream (one value per line), got {} fields",
                    features.len()
                ))));
            }
            if self.values.len() == self.width {
                self.values.pop_front();
                self.labels.pop_front();
            }
            self.values.push_back(features[0]);
            self.labels.push_back(label.unwrap_or(false));
            if self.values.len() == self.width {
                let point: FeatureVector = self.values.iter().copied().collect();
                let label = if self.has_labels {
                    Some(self.labels.iter().any(|&l| l))
                } else {
                    None
                };
                return Some(Ok((point, label)));
            }
        }
    }
}

/// Passes features through to the detector while parking each point's label
/// in a side buffer indexed by stream position.
struct LabelTap<I> {
    inner: I,
    labels: Rc<RefCell<Vec<Option<bool>>>>,
}

impl<I: Iterator<Item = Result<(FeatureVector, Option<bool>)>>> Iterator for LabelTap<I> {
    type Item = Result<FeatureVector>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.inner.next()? {
            Ok((features, label)) => {
                self.labels.borrow_mut().push(label);
                Some(Ok(features))
            }
            Err(e) => Some(Err(e)),
        }
    }
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let config = args
        .detector
        .to_config(ThresholdPolicy::Contamination(0.1));
    let policy = if args.skip_malformed {
        LinePolicy::SkipWithWarning
    } else {
        LinePolicy::Abort
    };
    let source = StreamSource::open(args.input.as_deref(), args.trailing_label, policy)?;
    let records = source.map(|r| r.map(|rec| (rec.features, rec.label)));
    let stream: Box<dyn Iterator<Item = Result<(FeatureVector, Option<bool>)>>> =
        match args.shingle {
            Some(0) => {
                return Err(Error::InvalidConfig(
                    "--shingle width must be at least 1".into(),
                ))
            }
            Some(width) => Box::new(Shingled::new(records, width, args.trailing_label)),
            None => Box::new(records),
        };

    let labels = Rc::new(RefCell::new(Vec::new()));
    let points = LabelTap {
        inner: stream,
        labels: labels.clone(),
    };
    let mut out = open_output(args.output.as_deref())?;
    writeln!(out, "{SCORE_HEADER}")?;
    let (_, summary) = drive(config, points, |offset, _, report| {
        let labels = labels.borrow();
        for (i, &score) in report.scores.iter().enumerate() {
            let index = offset + i;
            write_score_line(&mut *out, index, score, labels[index])?;
        }
        out.flush()?;
        Ok(())
    })?;
    eprintln!(
        "scored {} points in {} chunks ({} bootstrap points unscored)",
        summary.total_points - summary.bootstrap_points,
        summary.chunks,
        summary.bootstrap_points
    );
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let text = fs::read_to_string(&args.spec)?;
    let mut spec: SineStreamSpec = toml::from_str(&text)
        .map_err(|e| Error::InvalidSpec(format!("{}: {e}", args.spec.display())))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let stream = generate(&spec)?;

    let mut values = BufWriter::new(File::create(&args.output)?);
    for v in &stream.values {
        writeln!(values, "{v}")?;
    }
    values.flush()?;

    let labels_path = PathBuf::from(format!("{}.labels", args.output.display()));
    let mut labels = BufWriter::new(File::create(&labels_path)?);
    for (l, t) in stream.labels.iter().zip(&stream.types) {
        writeln!(labels, "{},{t}", *l as u8)?;
    }
    labels.flush()?;

    println!(
        "wrote {} samples ({} anomalous) to {}; ground truth in {}",
        stream.values.len(),
        stream.labels.iter().filter(|&&l| l).count(),
        args.output.display(),
        labels_path.display()
    );
    Ok(())
}
