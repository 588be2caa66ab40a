use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Record of one command run, written next to its outputs.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: String,
    pub inputs: Vec<(PathBuf, String)>,
    pub outputs: Vec<String>,
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `SOURCE_DATE_EPOCH` when set, so reruns can be byte-identical.
fn timestamp() -> String {
    let at = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|s| DateTime::<Utc>::from_timestamp(s, 0))
        .unwrap_or_else(Utc::now);
    at.to_rfc3339_opts(SecondsFormat::Secs, true)
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        Self { command: command.into(), args, config: String::new(), inputs: Vec::new(), outputs: Vec::new() }
    }

    pub fn add_input(&mut self, path: &Path) -> io::Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.push((path.to_path_buf(), digest));
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command\t{}", self.command);
        let _ = writeln!(out, "args\t{}", self.args.join(" "));
        let _ = writeln!(out, "version\t{}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "timestamp\t{}", timestamp());
        for (path, digest) in &self.inputs {
            let _ = writeln!(out, "input\t{}\tsha256:{digest}", path.display());
        }
        for name in &self.outputs {
            let _ = writeln!(out, "output\t{name}");
        }
        out.push_str("[config]\n");
        out.push_str(&self.config);
        out
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::write(dir.join(MANIFEST_FILE), self.render())
    }
}
