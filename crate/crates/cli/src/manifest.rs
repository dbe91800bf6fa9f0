//! Run manifests: a digest line embedded in every CSV plus an optional
//! sidecar file with timestamps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use fockboot::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything that determines an output file's content.
#[derive(Clone, Debug)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config_digest: Option<String>,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn digested_args(command: &[String]) -> Vec<&str> {
    let mut out = Vec::with_capacity(command.len());
    let mut args = command.iter();
    while let Some(arg) = args.next() {
        match arg.as_str() {
            "--output" | "--out-dir" => {
                args.next();
            }
            a if a.starts_with("--output=") || a.starts_with("--out-dir=") => {}
            a => out.push(a),
        }
    }
    out
}

impl RunManifest {
    pub fn new(command: Vec<String>, config_text: Option<&str>, seed: Option<u64>) -> Self {
        Self {
            command,
            config_digest: config_text.map(|t| sha256_hex(t.as_bytes())),
            seed,
            outputs: Vec::new(),
        }
    }

    /// Digest over command, config, seed and version. Timestamps and output
    /// destinations are left out.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for arg in digested_args(&self.command) {
            h.update(arg.as_bytes());
            h.update([0]);
        }
        h.update(self.config_digest.as_deref().unwrap_or("-").as_bytes());
        h.update([0]);
        h.update(self.seed.map_or("-".to_string(), |s| s.to_string()).as_bytes());
        h.update([0]);
        h.update(VERSION.as_bytes());
        hex::encode(h.finalize())
    }

    /// The `#` line that opens every CSV.
    pub fn comment_line(&self) -> String {
        let seed = self.seed.map_or("-".to_string(), |s| s.to_string());
        format!("# fockboot {VERSION} manifest={} seed={seed}", self.digest())
    }

    /// Writes `<csv>.manifest` next to an output file.
    pub fn write_sidecar(&self, csv_path: &Path, started: &str) -> Result<PathBuf> {
        let mut path = csv_path.as_os_str().to_owned();
        path.push(".manifest");
        let path = PathBuf::from(path);
        let mut f = fs::File::create(&path)?;
        writeln!(f, "digest={}", self.digest())?;
        writeln!(f, "command={}", self.command.join(" "))?;
        writeln!(f, "config_digest={}", self.config_digest.as_deref().unwrap_or("-"))?;
        writeln!(f, "seed={}", self.seed.map_or("-".to_string(), |s| s.to_string()))?;
        writeln!(f, "version={VERSION}")?;
        writeln!(f, "started={started}")?;
        writeln!(f, "finished={}", now())?;
        for out in &self.outputs {
            writeln!(f, "output={}", out.display())?;
        }
        Ok(path)
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_depends_on_inputs_only() {
        let a = RunManifest::new(vec!["simulate".into(), "--d".into(), "2".into()], None, Some(7));
        let b = RunManifest::new(vec!["simulate".into(), "--d".into(), "2".into()], None, Some(7));
        assert_eq!(a.digest(), b.digest());
        let c = RunManifest::new(vec!["simulate".into(), "--d".into(), "2".into()], Some("x=1"), Some(7));
        assert_ne!(a.digest(), c.digest());
        assert!(a.comment_line().starts_with("# fockboot "));
        let to = |path: &str| {
            RunManifest::new(
                ["simulate", "--d", "2", "--output", path].map(String::from).to_vec(),
                None,
                Some(7),
            )
        };
        assert_eq!(to("x.csv").digest(), to("y.csv").digest());
        assert_eq!(to("x.csv").digest(), a.digest());
    }
}
