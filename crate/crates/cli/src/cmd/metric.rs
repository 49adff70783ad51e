use std::collections::BTreeMap;

use inpaint_eval_core::fullref::{run_fullref_metric, run_noref_metric, FullRefMetric, SsimParams};
use inpaint_eval_core::imaging::{build_manifest, DatasetManifest, PrepParams};
use inpaint_eval_core::metric::MetricScoreTable;
use inpaint_eval_runtime::{load_model, ModelHandle, ModelSpec, RealismModel, ScoreHead};

use crate::{files, CliError, MetricArgs, MetricKind};

fn load_dataset(a: &MetricArgs) -> Result<DatasetManifest, CliError> {
    if let Some(path) = &a.manifest {
        let manifest = DatasetManifest::load(path).map_err(CliError::user)?;
        manifest
            .validate()
            .map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
        return Ok(manifest);
    }
    let dir = a.dataset.as_ref().expect("clap requires --manifest or --dataset");
    let existing = dir.join("manifest.json");
    let params = if existing.is_file() {
        DatasetManifest::load(&existing).map_err(CliError::user)?.prep_params
    } else {
        PrepParams::default()
    };
    build_manifest(dir, params).map_err(|e| CliError::user(format!("{}: {e}", dir.display())))
}

fn load(a: &MetricArgs) -> Result<ModelHandle, CliError> {
    let path = a
        .model
        .as_ref()
        .ok_or_else(|| CliError::user("this metric needs --model <sidecar.json>"))?;
    let spec = ModelSpec::from_sidecar(path).map_err(CliError::user)?;
    load_model(&spec).map_err(CliError::user)
}

fn default_name(kind: MetricKind) -> &'static str {
    match kind {
        MetricKind::Ssim => "ssim",
        MetricKind::FeatureMse => "feature_mse",
        MetricKind::NorefSingle => "noref_single",
        MetricKind::NorefTwoClass => "noref_two_class",
    }
}

pub fn run(a: MetricArgs) -> Result<(), CliError> {
    let manifest = load_dataset(&a)?;
    if manifest.entries.is_empty() {
        return Err(CliError::user("dataset has no images"));
    }
    let name = a.name.clone().unwrap_or_else(|| default_name(a.metric).to_owned());
    if a.metric == MetricKind::Ssim && a.model.is_some() {
        return Err(CliError::user("ssim takes no --model"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(CliError::user)?;

    let mut table: MetricScoreTable = match a.metric {
        MetricKind::Ssim => pool.install(|| run_fullref_metric(&manifest, FullRefMetric::Ssim(SsimParams::default()))),
        MetricKind::FeatureMse => {
            let model = load(&a)?;
            pool.install(|| {
                run_fullref_metric(
                    &manifest,
                    FullRefMetric::FeatureMse {
                        name: &name,
                        model: &model,
                    },
                )
            })
        }
        MetricKind::NorefSingle | MetricKind::NorefTwoClass => {
            let head = if a.metric == MetricKind::NorefSingle {
                ScoreHead::Single
            } else {
                ScoreHead::TwoClass
            };
            let scorer = RealismModel {
                handle: load(&a)?,
                head,
            };
            pool.install(|| run_noref_metric(&manifest, &name, &scorer))
        }
    };
    table.metric = name;

    let bytes = if files::is_json(&a.out) {
        let mut s = table.to_json().map_err(CliError::data)?;
        s.push('\n');
        s.into_bytes()
    } else {
        let mut out = Vec::new();
        table.write_csv(&mut out).map_err(CliError::data)?;
        out
    };
    files::write(&a.out, &bytes)?;

    let mut per_variant: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for s in &table.scores {
        let e = per_variant.entry(&s.variant).or_default();
        e.0 += s.quality_value;
        e.1 += 1;
    }
    let mut means: Vec<(&str, f64)> = per_variant
        .into_iter()
        .map(|(v, (sum, n))| (v, sum / n as f64))
        .collect();
    means.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(y.0)));
    println!(
        "{}: {} scores over {} images -> {}",
        table.metric,
        table.scores.len(),
        manifest.entries.len(),
        a.out.display()
    );
    println!("  {:<24} mean quality", "variant");
    for (v, m) in means {
        println!("  {v:<24} {m:.6}");
    }
    if table.failures.is_empty() {
        return Ok(());
    }
    for f in &table.failures {
        eprintln!("  {} / {}: {}", f.image_id, f.variant, f.error);
    }
    Err(CliError::data(format!(
        "{} entries could not be scored",
        table.failures.len()
    )))
}
