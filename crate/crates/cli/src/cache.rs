//! Append-only JSON-lines store of solved game values.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const ENV_VAR: &str = "STRETCH_CACHE";
pub const DEFAULT_PATH: &str = "./stretch-cache.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    /// `lower`, `upper`, or `upper-strict`.
    pub game: String,
    pub m: u32,
    pub g: u32,
    pub value_num: u64,
    pub millis: u128,
    #[serde(default)]
    pub proof_path: Option<String>,
}

pub struct ResultsCache {
    path: PathBuf,
    records: Vec<Record>,
}

impl ResultsCache {
    pub fn default_path() -> PathBuf {
        std::env::var_os(ENV_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_PATH))
    }

    /// Loads every well-formed line; a missing file is an empty cache.
    pub fn open(path: &Path) -> Result<Self> {
        let mut records = Vec::new();
        match File::open(path) {
            Ok(f) => {
                for (i, line) in BufReader::new(f).lines().enumerate() {
                    let line = line.with_context(|| format!("reading {}", path.display()))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    match serde_json::from_str(&line) {
                        Ok(r) => records.push(r),
                        Err(e) => eprintln!("warning: {}:{}: skipping bad cache line: {e}", path.display(), i + 1),
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e).with_context(|| format!("opening {}", path.display())),
        }
        Ok(Self { path: path.to_path_buf(), records })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn lookup(&self, game: &str, m: u32, g: u32) -> Option<&Record> {
        self.records.iter().find(|r| r.game == game && r.m == m && r.g == g)
    }

    pub fn append(&mut self, record: Record) -> Result<()> {
        let mut line = serde_json::to_string(&record)?;
        line.push('\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .with_context(|| format!("opening {}", self.path.display()))?;
        f.write_all(line.as_bytes())
            .with_context(|| format!("writing {}", self.path.display()))?;
        self.records.push(record);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(game: &str, g: u32, value_num: u64) -> Record {
        Record { game: game.into(), m: 2, g, value_num, millis: 1, proof_path: None }
    }

    #[test]
    fn records_survive_reopening() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let mut cache = ResultsCache::open(&path).unwrap();
        assert!(cache.lookup("lower", 2, 3).is_none());
        cache.append(rec("lower", 3, 4)).unwrap();
        cache.append(rec("upper", 3, 4)).unwrap();
        let again = ResultsCache::open(&path).unwrap();
        assert_eq!(again.lookup("lower", 2, 3), Some(&rec("lower", 3, 4)));
        assert!(again.lookup("upper-strict", 2, 3).is_none());
    }

    #[test]
    fn bad_lines_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(&path, "not json\n\n{\"game\":\"lower\",\"m\":2,\"g\":2,\"value_num\":2,\"millis\":0}\n").unwrap();
        let cache = ResultsCache::open(&path).unwrap();
        assert_eq!(cache.lookup("lower", 2, 2).unwrap().value_num, 2);
    }
}
