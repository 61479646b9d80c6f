//! Versioned CSV, JSON summaries, plotting scripts and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// One named check of a command.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Suite {
    pub name: String,
    pub passed: bool,
    /// Informational suites are reported but do not set the exit code.
    pub required: bool,
    pub detail: String,
}

impl Suite {
    pub fn required(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, required: true, detail }
    }

    pub fn informational(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, required: false, detail }
    }
}

/// Files and checks produced by one command.
#[derive(Default)]
pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub suites: Vec<Suite>,
}

impl Outcome {
    pub fn file(&mut self, name: String, bytes: impl Into<Vec<u8>>) {
        self.files.push((name, bytes.into()));
    }

    pub fn json(&mut self, name: String, value: &serde_json::Value) {
        let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
        s.push('\n');
        self.file(name, s);
    }

    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed || !s.required)
    }
}

/// CSV text whose first line records the schema version.
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(command: &str, header: &[String]) -> Self {
        let mut text = format!("# schema_version={SCHEMA_VERSION} command={command}\n");
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text, width: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.width);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn nums(&mut self, cells: &[f64]) {
        self.row(&cells.iter().map(|v| v.to_string()).collect::<Vec<_>>());
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// A matplotlib script plotting `y` columns against `x` from `csv`. The script
/// is emitted as text; nothing is rendered here.
pub fn plot_script(csv: &str, x: &str, ys: &[&str], logy: bool, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Plots {csv}; run with python3 next to the CSV file.");
    let _ = writeln!(s, "import csv");
    let _ = writeln!(s, "import matplotlib.pyplot as plt\n");
    let _ = writeln!(s, "with open({csv:?}) as fh:");
    let _ = writeln!(s, "    rows = list(csv.DictReader(line for line in fh if not line.startswith('#')))\n");
    let _ = writeln!(s, "def col(name):");
    let _ = writeln!(s, "    return [float(r[name]) for r in rows]\n");
    let _ = writeln!(s, "fig, ax = plt.subplots()");
    for y in ys {
        let expr = if logy { format!("[abs(v) for v in col({y:?})]") } else { format!("col({y:?})") };
        let _ = writeln!(s, "ax.plot(col({x:?}), {expr}, marker='.', label={y:?})");
    }
    if logy {
        let _ = writeln!(s, "ax.set_yscale('log')");
    }
    let _ = writeln!(s, "ax.set_xlabel({x:?})");
    let _ = writeln!(s, "ax.set_title({title:?})");
    let _ = writeln!(s, "ax.legend()");
    let stem = csv.trim_end_matches(".csv");
    let _ = writeln!(s, "fig.savefig({:?})", format!("{stem}.png"));
    s
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Self-describing record of a run: the canonical config reproduces it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub artifact_version: String,
    pub command: String,
    pub config_hash: String,
    pub config: String,
    pub wall_time_s: f64,
    pub passed: bool,
    pub suites: Vec<Suite>,
    pub files: Vec<FileEntry>,
}

pub fn manifest_name(command: &str) -> String {
    format!("{command}.manifest.json")
}

/// Writes the command's files, its resolved config and the manifest into `dir`.
pub fn write_run(dir: &Path, command: &str, cfg: &RunConfig, mut outcome: Outcome, wall_time_s: f64) -> Result<Manifest, CliError> {
    fs::create_dir_all(dir)?;
    outcome.file(format!("{command}.config.txt"), cfg.canonical());
    let mut files = Vec::new();
    for (name, bytes) in &outcome.files {
        fs::write(dir.join(name), bytes)?;
        files.push(FileEntry { path: name.clone(), sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() });
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config_hash: cfg.hash(),
        config: cfg.canonical(),
        wall_time_s,
        passed: outcome.passed(),
        suites: outcome.suites,
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(dir.join(manifest_name(command)), text)?;
    Ok(manifest)
}
