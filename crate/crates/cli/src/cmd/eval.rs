use inpaint_eval_core::correlation::{evaluate_metric, CorrelationReport};

use crate::{files, CliError, EvalArgs};

pub fn print_ranking(reports: &[CorrelationReport]) {
    let mut ranked: Vec<&CorrelationReport> = reports.iter().collect();
    ranked.sort_by(|a, b| {
        b.mean_pearson
            .total_cmp(&a.mean_pearson)
            .then(a.metric_name.cmp(&b.metric_name))
    });
    println!(
        "  {:<4} {:<24} {:>17} {:>17} {:>6}",
        "rank", "metric", "pearson", "spearman", "images"
    );
    for (i, r) in ranked.iter().enumerate() {
        println!(
            "  {:<4} {:<24} {:>8.4} ± {:<6.4} {:>8.4} ± {:<6.4} {:>6}",
            i + 1,
            r.metric_name,
            r.mean_pearson,
            r.std_pearson,
            r.mean_spearman,
            r.std_spearman,
            r.per_image.len()
        );
    }
}

pub fn run(a: EvalArgs) -> Result<(), CliError> {
    let tables = files::read_metric_tables(&a.metric_scores)?;
    let subjective = files::read_subjective(&a.subjective)?;
    let mut reports = Vec::with_capacity(tables.len());
    for t in &tables {
        let r = evaluate_metric(t, &subjective, a.include_gt)
            .map_err(|e| CliError::data(format!("metric '{}': {e}", t.metric)))?;
        reports.push(r);
    }
    files::write_json(&a.out, &reports)?;
    println!(
        "{} metric(s), ground truth {} -> {}",
        reports.len(),
        if a.include_gt { "included" } else { "excluded" },
        a.out.display()
    );
    print_ranking(&reports);
    Ok(())
}
