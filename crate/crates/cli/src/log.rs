use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Line-oriented `key=value` log, echoed to stderr as it is written.
#[derive(Debug)]
pub struct RunLog {
    command: &'static str,
    text: String,
}

fn quote(value: &str) -> String {
    if value.is_empty() || value.contains([' ', '"', '=', '\t']) {
        format!("\"{}\"", value.replace('\\', "\\\\").replace('"', "\\\""))
    } else {
        value.to_owned()
    }
}

impl RunLog {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            text: String::new(),
        }
    }

    pub fn record(&mut self, fields: &[(&str, String)]) {
        let mut line = format!("command={}", self.command);
        for (k, v) in fields {
            let _ = write!(line, " {k}={}", quote(v));
        }
        eprintln!("{line}");
        self.text.push_str(&line);
        self.text.push('\n');
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn save(&self, path: &Path, written: &mut Vec<PathBuf>) -> CliResult<()> {
        std::fs::write(path, &self.text).map_err(|e| CliError::io(path, e))?;
        written.push(path.to_path_buf());
        Ok(())
    }
}
