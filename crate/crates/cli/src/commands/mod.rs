mod bracket;
mod convergence;
mod flow;
mod identity;
mod qm;
mod scan;

pub use bracket::bracket_check;
pub use convergence::convergence;
pub use flow::flow;
pub use identity::identity_check;
pub use qm::qm_check;
pub use scan::bs_scan;

use crate::CliError;

/// Ids end up in file names.
fn check_id(id: &str) -> Result<(), CliError> {
    if !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
        Ok(())
    } else {
        Err(CliError::Config(format!("id `{id}` must be non-empty and use only [A-Za-z0-9._-]")))
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
