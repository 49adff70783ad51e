mod cmd;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

const PREP_FORMATS: &str = "\
Input: a directory of PNG photos; the file stem becomes the image id. Other files are ignored.

Output layout, one directory per image:
  <out>/<image_id>/gt.png       cropped and resized ground truth
  <out>/<image_id>/mask.png     8-bit gray, 255 = hole, 0 = known
  <out>/<image_id>/masked.png   ground truth with the hole filled black
  <out>/<image_id>/variants/    put inpainting results here as <variant>.png
  <out>/manifest.json           dataset manifest

Exit codes: 0 success, 1 usage error, 2 one or more inputs failed (all are listed).";

const METRIC_FORMATS: &str = "\
Dataset: either --manifest <manifest.json> or --dataset <dir> laid out as written by `prep`.

Model sidecar (JSON), required by every metric except ssim:
  {\"model_path\": \"vgg16.onnx\", \"output_name\": \"block3_conv3\", \"input_side\": 224,
   \"preprocessing\": {\"scale\": 1.0, \"mean\": [123.68, 116.78, 103.94], \"std\": [1, 1, 1],
                     \"channel_order\": \"BGR\", \"layout\": \"NCHW\"}}
  model_path is relative to the sidecar. mean/std are in RGB order. layout defaults to NCHW.

Output: CSV with header image_id,variant,metric,raw_value,quality_value, or the JSON
score table when --out ends in .json. quality_value is higher-is-better: similarities
are kept, distances negated. The ground truth is scored against itself.

Exit codes: 0 success, 1 usage error, 2 some entries failed (the rest are still written).";

const FIT_FORMATS: &str = "\
Judgements CSV header: session_id,image_id,left_variant,right_variant,chosen,is_verification,timestamp
  chosen is left|right, is_verification is true|false, timestamp is RFC 3339 UTC.
Verification key CSV header: image_id,variant_a,variant_b,correct_variant

Sessions that answer any verification pair wrongly are dropped whole; verification
judgements are never fitted. One Bradley-Terry model is fitted per image.

Output JSON: {passing_sessions, excluded_sessions, retained_judgements,
  tables: {image_id: {image_id, strengths: {variant: pi}, iterations, converged}},
  failures: {image_id: reason}}  (strengths sum to 1 per image)

Exit codes: 0 success, 1 usage error or no judgements, 2 an image could not be fitted.";

const EVAL_FORMATS: &str = "\
--metric-scores: score CSV or JSON as written by `metric`; a CSV may hold several metrics.
--subjective: the JSON written by `fit` (or just its `tables` map).

Output JSON: array of reports, one per metric:
  {metric_name, include_ground_truth, per_image: {image_id: {pearson, spearman}},
   mean_pearson, std_pearson, mean_spearman, std_spearman}
Standard deviations are population deviations over images.

Exit codes: 0 success, 1 usage error, 2 variant sets differ (listed per image) or a
correlation is undefined.";

const CHECKPOINT_FORMATS: &str = "\
Each --checkpoint is a single-metric score file (CSV or JSON) as written by `metric`,
given in training order. The checkpoint with the highest mean Pearson correlation wins;
ties go to the earliest.

Output JSON: {selected_index, selected_path, checkpoints: [{path, mean_pearson,
mean_spearman}], report}";

const SERVE_FORMATS: &str = "\
Config JSON:
  {\"manifest\": \"data/manifest.json\", \"variants_under_test\": [\"ground_truth\", \"a\", \"b\"],
   \"pairs_per_session\": 22, \"verification_pairs_per_session\": 2,
   \"verification_weak_variant\": \"exemplar\", \"log_path\": \"study.jsonl\",
   \"bind\": \"127.0.0.1:8080\", \"operator_token\": \"...\", \"static_dir\": \"ui/dist\", \"seed\": null}
  Relative paths resolve against the config file. INPAINT_EVAL_BIND and
  INPAINT_EVAL_OPERATOR_TOKEN override the file; --bind and --seed override both.

API:
  POST /api/session                 -> {session_id, total_pairs}
  GET  /api/session/{id}/pair       -> {pair_id, image_id, left_url, right_url, index, total} | {done: true}
  POST /api/session/{id}/choice     <- {pair_id, chosen: left|right}
  GET  /api/export                  judgements CSV (Authorization: Bearer <token>)
  GET  /api/export/verification-key verification key CSV (same token)

Judgements are appended to log_path (one JSON event per line) and replayed on restart.";

const EXPORT_FORMATS: &str = "\
Reads the study log written by `serve` (no server needed) and writes the judgements CSV
and the verification key CSV in the formats `fit` reads.";

const REPORT_FORMATS: &str = "\
Reads the JSON written by `eval` and writes a ranked CSV:
  metric,include_ground_truth,images,mean_pearson,std_pearson,mean_spearman,std_spearman
sorted by mean_pearson, best first. With --fit, also prints the subjective ranking
(geometric-mean strength over images) to standard output.";

/// Inpainting quality evaluation: dataset prep, metrics, subjective study,
/// Bradley-Terry fitting and metric-to-human correlation.
#[derive(Parser, Debug)]
#[command(name = "inpaint-eval", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Crop, resize and mask photos into a dataset directory with a manifest.
    #[command(after_long_help = PREP_FORMATS)]
    Prep(PrepArgs),
    /// Score every variant of a dataset with one metric.
    #[command(after_long_help = METRIC_FORMATS)]
    Metric(MetricArgs),
    /// Screen study sessions and fit per-image Bradley-Terry strengths.
    #[command(after_long_help = FIT_FORMATS)]
    Fit(FitArgs),
    /// Correlate metric scores with fitted subjective strengths.
    #[command(after_long_help = EVAL_FORMATS)]
    Eval(EvalArgs),
    /// Pick the training checkpoint whose scores best match the study.
    #[command(name = "select-checkpoint", after_long_help = CHECKPOINT_FORMATS)]
    SelectCheckpoint(CheckpointArgs),
    /// Run the pairwise study web service.
    #[command(after_long_help = SERVE_FORMATS)]
    Serve(ServeArgs),
    /// Export judgements and the verification key from a study log.
    #[command(after_long_help = EXPORT_FORMATS)]
    Export(ExportArgs),
    /// Rank metrics from `eval` output.
    #[command(after_long_help = REPORT_FORMATS)]
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct PrepArgs {
    /// Directory of input PNG photos.
    #[arg(long)]
    pub input: PathBuf,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Side of the square output images.
    #[arg(long, default_value_t = 512)]
    pub side: usize,
    /// Side of the centered square hole.
    #[arg(long, default_value_t = 180)]
    pub hole: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    /// Structural similarity on luma (no model).
    Ssim,
    /// Mean squared difference of deep features against the ground truth.
    FeatureMse,
    /// No-reference realism from a single regression output.
    NorefSingle,
    /// No-reference realism: softmax probability of the "clean" class.
    NorefTwoClass,
}

#[derive(Args, Debug)]
pub struct MetricArgs {
    /// Dataset manifest JSON.
    #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
    pub manifest: Option<PathBuf>,
    /// Dataset directory (rescanned, so newly added variants are picked up).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub metric: MetricKind,
    /// Model sidecar JSON (all metrics except ssim).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Metric name written to the output; defaults to the --metric value.
    #[arg(long)]
    pub name: Option<String>,
    /// Output path (.csv or .json).
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub judgements: PathBuf,
    #[arg(long)]
    pub verification_key: PathBuf,
    /// Output JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Pseudo-count added to every ordered pair's wins.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Stop when no log-strength moves more than this.
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: usize,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub metric_scores: PathBuf,
    #[arg(long)]
    pub subjective: PathBuf,
    /// Keep ground-truth rows when correlating.
    #[arg(long, action = clap::ArgAction::Set, value_name = "BOOL")]
    pub include_gt: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CheckpointArgs {
    /// Score file of one checkpoint; repeat in training order.
    #[arg(long = "checkpoint", required = true)]
    pub checkpoints: Vec<PathBuf>,
    #[arg(long)]
    pub subjective: PathBuf,
    #[arg(long, action = clap::ArgAction::Set, value_name = "BOOL")]
    pub include_gt: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Seed for pair scheduling; random when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Listen address, e.g. 127.0.0.1:8080 (port 0 picks a free port).
    #[arg(long)]
    pub bind: Option<String>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    /// Study log written by `serve`.
    #[arg(long)]
    pub log: PathBuf,
    /// Judgements CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Verification key CSV.
    #[arg(long)]
    pub verification_key_out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// JSON written by `eval`.
    #[arg(long)]
    pub eval: Vec<PathBuf>,
    /// JSON written by `fit`.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Ranked CSV.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let default_level = if matches!(cli.command, Command::Serve(_)) {
        "info"
    } else {
        "warn"
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level)),
        )
        .init();

    let result: Result<(), CliError> = match cli.command {
        Command::Prep(a) => cmd::prep::run(a),
        Command::Metric(a) => cmd::metric::run(a),
        Command::Fit(a) => cmd::fit::run(a),
        Command::Eval(a) => cmd::eval::run(a),
        Command::SelectCheckpoint(a) => cmd::checkpoint::run(a),
        Command::Serve(a) => cmd::serve::run(a),
        Command::Export(a) => cmd::export::run(a),
        Command::Report(a) => cmd::report::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
