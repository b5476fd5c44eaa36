//! Staged output directories and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::fail::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.toml";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads an input file, remembering its hash for the manifest.
#[derive(Debug, Default)]
pub struct Inputs {
    files: Vec<(String, String, String)>,
}

impl Inputs {
    pub fn read(&mut self, role: &str, path: &Path) -> CliResult<String> {
        let bytes = fs::read(path).map_err(|e| CliError::missing(path, e))?;
        self.files.push((role.into(), path.display().to_string(), sha256_hex(&bytes)));
        String::from_utf8(bytes).map_err(|_| CliError::parse(format!("{} is not UTF-8", path.display())))
    }
}

/// Files written into a private directory next to the destination and moved
/// in only after the command has succeeded.
pub struct Staging {
    dir: tempfile::TempDir,
    out: PathBuf,
    written: Vec<(String, String)>,
    params: Vec<(String, String)>,
}

impl Staging {
    pub fn new(out: &Path) -> CliResult<Self> {
        let parent = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| CliError::io(&parent, e))?;
        let dir = tempfile::Builder::new()
            .prefix(".vsmfarm-staging-")
            .tempdir_in(&parent)
            .map_err(|e| CliError::io(&parent, e))?;
        Ok(Self { dir, out: out.to_path_buf(), written: Vec::new(), params: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.path().join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push((name.into(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params.push((key.into(), value.to_string()));
    }

    /// Writes the manifest and moves everything into the output directory.
    pub fn commit(self, command: &str, stage: &str, config: &Path, inputs: &Inputs) -> CliResult<PathBuf> {
        let manifest = self.manifest(command, stage, config, inputs);
        let path = self.dir.path().join(MANIFEST);
        fs::write(&path, manifest).map_err(|e| CliError::io(&path, e))?;
        fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        let mut names: Vec<String> = self.written.iter().map(|(n, _)| n.clone()).collect();
        names.push(MANIFEST.into());
        for n in names {
            let dst = self.out.join(&n);
            fs::rename(self.dir.path().join(&n), &dst).map_err(|e| CliError::io(&dst, e))?;
        }
        Ok(self.out.clone())
    }

    fn manifest(&self, command: &str, stage: &str, config: &Path, inputs: &Inputs) -> String {
        let q = |s: &str| format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""));
        let mut s = String::new();
        s.push_str("format_version = 1\n");
        s.push_str(&format!("command = {}\n", q(command)));
        s.push_str(&format!("stage = {}\n", q(stage)));
        s.push_str(&format!("config = {}\n", q(&config.display().to_string())));
        s.push_str(&format!("output_dir = {}\n", q(&self.out.display().to_string())));
        s.push_str(&format!("tool_version = {}\n", q(env!("CARGO_PKG_VERSION"))));
        s.push_str(&format!("timestamp = {}\n", q(&timestamp())));
        s.push_str("\n[parameters]\n");
        for (k, v) in &self.params {
            s.push_str(&format!("{k} = {}\n", q(v)));
        }
        for (role, path, hash) in &inputs.files {
            s.push_str(&format!("\n[[input]]\nrole = {}\npath = {}\nsha256 = {}\n", q(role), q(path), q(hash)));
        }
        for (name, hash) in &self.written {
            s.push_str(&format!("\n[[output]]\nfile = {}\nsha256 = {}\n", q(name), q(hash)));
        }
        s
    }
}

/// Seconds since the epoch, taken from `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> String {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) if !v.is_empty() => v,
        _ => std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs().to_string())
            .unwrap_or_else(|_| "0".into()),
    }
}
