pub mod certify;
pub mod curves;
pub mod dashboard;
pub mod generate;
pub mod sensitivity;
pub mod simulate;
pub mod train;
pub mod validate;

use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Command output directory under the workspace root.
pub fn command_dir(root: &Path, command: &str) -> PathBuf {
    root.join(command)
}

pub fn require_file(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingInput(path.to_path_buf()))
    }
}
