//! Output sinks and run manifests.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to re-run the command that produced an output file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, replayable as-is.
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_ms: u128,
}

impl RunManifest {
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        output.with_file_name(name)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

/// Where a command writes: a file (with manifest) or stdout.
pub struct Sink {
    target: Option<PathBuf>,
    command: String,
    argv: Vec<String>,
    started: Instant,
    inputs: Vec<PathBuf>,
    config: serde_json::Value,
    seed: Option<u64>,
    extra: Vec<(PathBuf, String)>,
}

impl Sink {
    /// `out` wins; otherwise `out_dir/default_name`; otherwise stdout.
    pub fn new(command: &str, argv: Vec<String>, out: Option<PathBuf>, out_dir: Option<PathBuf>, default_name: &str) -> Self {
        let target = out.or_else(|| out_dir.map(|d| d.join(default_name)));
        Self {
            target,
            command: command.to_string(),
            argv,
            started: Instant::now(),
            inputs: Vec::new(),
            config: serde_json::Value::Null,
            seed: None,
            extra: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn config(&mut self, config: impl Serialize, seed: Option<u64>) {
        self.config = serde_json::to_value(config).expect("config serializes");
        self.seed = seed;
    }

    pub fn target(&self) -> Option<&Path> {
        self.target.as_deref()
    }

    /// A side file at an explicit path, listed in the same manifest.
    pub fn extra(&mut self, path: &Path, body: String) {
        self.extra.push((path.to_path_buf(), body));
    }

    pub fn write(self, body: &str) -> Result<()> {
        self.write_many(&[(None, body.to_string())])
    }

    /// Writes several named files into the target directory, or concatenates
    /// them to stdout. `None` names the target itself.
    pub fn write_many(self, files: &[(Option<String>, String)]) -> Result<()> {
        let mut outputs = Vec::new();
        for (path, body) in &self.extra {
            write_file(path, body)?;
            outputs.push(path.clone());
        }
        let Some(target) = self.target.clone() else {
            print_stdout(files)?;
            if !outputs.is_empty() {
                self.write_manifest(&RunManifest::path_for(&outputs[0]), outputs)?;
            }
            return Ok(());
        };
        for (name, body) in files {
            let path = match name {
                None => target.clone(),
                Some(n) => target.join(n),
            };
            write_file(&path, body)?;
            outputs.push(path);
        }
        let manifest_path = if files.iter().all(|(n, _)| n.is_some()) {
            target.join("manifest.json")
        } else {
            RunManifest::path_for(&target)
        };
        self.write_manifest(&manifest_path, outputs)
    }

    fn write_manifest(self, path: &Path, outputs: Vec<PathBuf>) -> Result<()> {
        let manifest = RunManifest {
            command: self.command,
            argv: self.argv,
            config: self.config,
            tool_version: TOOL_VERSION.to_string(),
            seed: self.seed,
            inputs: self.inputs,
            outputs,
            wall_clock_ms: self.started.elapsed().as_millis(),
        };
        write_file(path, &serde_json::to_string_pretty(&manifest)?)?;
        for p in &manifest.outputs {
            eprintln!("wrote {}", p.display());
        }
        Ok(())
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

/// A closed pipe (`slimnoc ... | head`) ends output quietly.
fn print_stdout(files: &[(Option<String>, String)]) -> Result<()> {
    let mut out = io::stdout().lock();
    let res = files.iter().try_for_each(|(name, body)| {
        if let Some(n) = name {
            writeln!(out, "# {n}")?;
        }
        out.write_all(body.as_bytes())?;
        if !body.ends_with('\n') {
            writeln!(out)?;
        }
        Ok(())
    });
    match res.and_then(|()| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e).context("writing to stdout"),
        _ => Ok(()),
    }
}
