//! Run identifiers and output files.
//!
//! Data files and the manifest depend only on the effective configuration;
//! the wall-clock time is written to the summary file alone.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::CliError;

/// First 12 hex digits of the SHA-256 of the configuration, ignoring the
/// output directory.
pub fn run_id(cfg: &ScenarioConfig) -> String {
    let mut c = cfg.clone();
    c.output_dir = PathBuf::new();
    let bytes = serde_json::to_vec(&c).expect("config serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

pub struct RunOutput {
    dir: PathBuf,
    sub: &'static str,
    id: String,
    files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    run_id: &'a str,
    files: Vec<String>,
    config: &'a ScenarioConfig,
}

impl RunOutput {
    pub fn new(cfg: &ScenarioConfig, sub: &'static str) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.output_dir)?;
        Ok(RunOutput {
            dir: cfg.output_dir.clone(),
            sub,
            id: run_id(cfg),
            files: Vec::new(),
        })
    }

    pub fn path(&self, ext: &str) -> PathBuf {
        self.dir.join(format!("{}_{}.{ext}", self.sub, self.id))
    }

    /// Creates `<sub>_<runid>.<ext>` and hands a buffered writer to `body`.
    pub fn write<F>(&mut self, ext: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> quadmimo::Result<()>,
    {
        let path = self.path(ext);
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    /// Writes the manifest and summary, prints the summary line.
    pub fn finish(mut self, cfg: &ScenarioConfig, summary: &str) -> Result<(), CliError> {
        let id = self.id.clone();
        let names: Vec<String> = self
            .files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        let manifest = Manifest {
            tool: "quadmimo",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.sub,
            run_id: &id,
            files: names,
            config: cfg,
        };
        self.write("manifest.json", |w| quadmimo::io::write_json(w, &manifest))?;
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut s = File::create(self.path("summary.txt"))?;
        writeln!(s, "run_id: {id}")?;
        writeln!(s, "unix_time: {stamp}")?;
        writeln!(s, "{summary}")?;
        println!("{} [{id}] {summary}", self.sub);
        Ok(())
    }
}
