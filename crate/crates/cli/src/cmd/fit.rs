use std::fs::File;

use inpaint_eval_core::judgements::{fit_study, read_judgements, read_verification_key, BtConfig};

use crate::{files, CliError, FitArgs};

pub fn run(a: FitArgs) -> Result<(), CliError> {
    let open =
        |p: &std::path::Path| File::open(p).map_err(|e| CliError::user(format!("cannot read {}: {e}", p.display())));
    let judgements = read_judgements(open(&a.judgements)?)
        .map_err(|e| CliError::user(format!("{}: {e}", a.judgements.display())))?;
    if judgements.is_empty() {
        return Err(CliError::user(format!("{}: no judgements", a.judgements.display())));
    }
    let key = read_verification_key(open(&a.verification_key)?)
        .map_err(|e| CliError::user(format!("{}: {e}", a.verification_key.display())))?;
    let config = BtConfig {
        pseudo_count: a.epsilon,
        tolerance: a.tolerance,
        max_iterations: a.max_iterations,
        trace_likelihood: false,
    };
    config.validate().map_err(CliError::user)?;

    let report = fit_study(&judgements, &key, &config).map_err(CliError::data)?;
    files::write_json(&a.out, &report)?;

    println!(
        "sessions: {} passing, {} excluded; {} judgements retained -> {}",
        report.passing_sessions,
        report.excluded_sessions.len(),
        report.retained_judgements,
        a.out.display()
    );
    for (image_id, t) in &report.tables {
        let mut ranked: Vec<(&String, &f64)> = t.strengths.iter().collect();
        ranked.sort_by(|x, y| y.1.total_cmp(x.1).then(x.0.cmp(y.0)));
        let line: Vec<String> = ranked.iter().map(|(v, p)| format!("{v} {p:.4}")).collect();
        println!("  {image_id}: {}", line.join(", "));
    }
    for image_id in report.unconverged() {
        eprintln!(
            "warning: {image_id} did not converge within {} iterations",
            a.max_iterations
        );
    }
    if report.failures.is_empty() {
        return Ok(());
    }
    for (image_id, reason) in &report.failures {
        eprintln!("  {image_id}: {reason}");
    }
    Err(CliError::data(format!(
        "{} image(s) could not be fitted",
        report.failures.len()
    )))
}
