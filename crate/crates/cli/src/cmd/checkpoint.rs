use std::path::PathBuf;

use inpaint_eval_core::correlation::{evaluate_metric, select_peak_checkpoint, CorrelationReport};
use serde::Serialize;

use crate::{files, CheckpointArgs, CliError};

#[derive(Serialize)]
struct CheckpointSummary {
    path: PathBuf,
    mean_pearson: f64,
    mean_spearman: f64,
}

#[derive(Serialize)]
struct Selection {
    selected_index: usize,
    selected_path: PathBuf,
    checkpoints: Vec<CheckpointSummary>,
    report: CorrelationReport,
}

pub fn run(a: CheckpointArgs) -> Result<(), CliError> {
    let subjective = files::read_subjective(&a.subjective)?;
    let mut tables = Vec::with_capacity(a.checkpoints.len());
    for path in &a.checkpoints {
        let mut t = files::read_metric_tables(path)?;
        if t.len() != 1 {
            return Err(CliError::user(format!(
                "{}: expected one metric, found {}",
                path.display(),
                t.len()
            )));
        }
        tables.push(t.remove(0));
    }
    let mut summaries = Vec::with_capacity(tables.len());
    for (path, t) in a.checkpoints.iter().zip(&tables) {
        let r = evaluate_metric(t, &subjective, a.include_gt)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        summaries.push(CheckpointSummary {
            path: path.clone(),
            mean_pearson: r.mean_pearson,
            mean_spearman: r.mean_spearman,
        });
    }
    let (index, report) = select_peak_checkpoint(&tables, &subjective, a.include_gt).map_err(CliError::data)?;
    let selection = Selection {
        selected_index: index,
        selected_path: a.checkpoints[index].clone(),
        checkpoints: summaries,
        report,
    };
    files::write_json(&a.out, &selection)?;

    for (i, s) in selection.checkpoints.iter().enumerate() {
        let mark = if i == index { "*" } else { " " };
        println!(
            "{mark} {i:>3}  r {:>8.4}  rho {:>8.4}  {}",
            s.mean_pearson,
            s.mean_spearman,
            s.path.display()
        );
    }
    println!(
        "selected checkpoint {index}: {} -> {}",
        selection.selected_path.display(),
        a.out.display()
    );
    Ok(())
}
