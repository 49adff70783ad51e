use std::collections::BTreeMap;

use inpaint_eval_core::correlation::CorrelationReport;
use inpaint_eval_core::judgements::FitReport;
use serde::Deserialize;

use crate::cmd::eval::print_ranking;
use crate::{files, CliError, ReportArgs};

#[derive(Deserialize)]
#[serde(untagged)]
enum Reports {
    Many(Vec<CorrelationReport>),
    One(CorrelationReport),
}

pub fn run(a: ReportArgs) -> Result<(), CliError> {
    if a.eval.is_empty() {
        return Err(CliError::user("give at least one --eval file"));
    }
    let mut reports = Vec::new();
    for path in &a.eval {
        match files::read_json(path)? {
            Reports::Many(v) => reports.extend(v),
            Reports::One(r) => reports.push(r),
        }
    }
    reports.sort_by(|a, b| {
        b.mean_pearson
            .total_cmp(&a.mean_pearson)
            .then(a.metric_name.cmp(&b.metric_name))
    });

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::data(e);
    w.write_record([
        "metric",
        "include_ground_truth",
        "images",
        "mean_pearson",
        "std_pearson",
        "mean_spearman",
        "std_spearman",
    ])
    .map_err(csv_err)?;
    for r in &reports {
        w.write_record([
            r.metric_name.clone(),
            r.include_ground_truth.to_string(),
            r.per_image.len().to_string(),
            r.mean_pearson.to_string(),
            r.std_pearson.to_string(),
            r.mean_spearman.to_string(),
            r.std_spearman.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::data(e.to_string()))?;
    files::write(&a.out, &bytes)?;
    println!("{} report(s) -> {}", reports.len(), a.out.display());
    print_ranking(&reports);

    if let Some(path) = &a.fit {
        let fit: FitReport = files::read_json(path)?;
        // Geometric mean keeps images with different variant counts comparable.
        let mut logs: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        for t in fit.tables.values() {
            for (v, p) in &t.strengths {
                let e = logs.entry(v).or_default();
                e.0 += p.ln();
                e.1 += 1;
            }
        }
        let mut ranked: Vec<(&str, f64, usize)> = logs
            .into_iter()
            .map(|(v, (s, n))| (v, (s / n as f64).exp(), n))
            .collect();
        ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(y.0)));
        println!("subjective ranking over {} images:", fit.tables.len());
        for (i, (v, g, n)) in ranked.iter().enumerate() {
            println!("  {:<4} {v:<24} {g:.4} ({n} images)", i + 1);
        }
    }
    Ok(())
}
