use inpaint_eval_study::{read_events, StudyState};

use crate::{files, CliError, ExportArgs};

pub fn run(a: ExportArgs) -> Result<(), CliError> {
    if !a.log.is_file() {
        return Err(CliError::user(format!("no study log at {}", a.log.display())));
    }
    let events = read_events(&a.log).map_err(CliError::data)?;
    let state = StudyState::from_events(events).map_err(|e| CliError::data(format!("{}: {e}", a.log.display())))?;
    files::write(&a.out, &state.judgements_csv().map_err(CliError::data)?)?;
    files::write(
        &a.verification_key_out,
        &state.verification_key_csv().map_err(CliError::data)?,
    )?;
    let complete = state.sessions().iter().filter(|s| s.completed).count();
    println!(
        "{} sessions ({complete} complete), {} judgements -> {}; key -> {}",
        state.sessions().len(),
        state.judgements().len(),
        a.out.display(),
        a.verification_key_out.display()
    );
    Ok(())
}
