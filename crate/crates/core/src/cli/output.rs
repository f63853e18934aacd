use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::error::Result;

/// 17 significant digits, fixed layout.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Metadata written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    pub emit_plots: bool,
    pub config: RunConfig,
    pub outputs: Vec<String>,
}

pub(crate) struct Outputs {
    dir: PathBuf,
    pub files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, &s)
    }

    pub fn sidecar(&mut self, config: &RunConfig, emit_plots: bool) -> Result<()> {
        let side = Sidecar {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            emit_plots,
            config: config.clone(),
            outputs: self.files.clone(),
        };
        let name = format!("{}.meta.json", config.name());
        self.json(&name, &side)
    }
}

/// Rows of comma- or space-separated cells.
pub(crate) struct Table {
    sep: char,
    text: String,
}

impl Table {
    pub fn csv(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Table { sep: ',', text }
    }

    pub fn dat(header: &[&str]) -> Self {
        let mut text = format!("# {}\n", header.join(" "));
        text.reserve(64);
        Table { sep: ' ', text }
    }

    pub fn row(&mut self, cells: &[String]) {
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(self.sep);
            }
            self.text.push_str(c);
        }
        self.text.push('\n');
    }

    pub fn blank(&mut self) {
        let _ = writeln!(self.text);
    }

    pub fn finish(self) -> String {
        self.text
    }
}
