use std::fs::{File, OpenOptions};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use lfg_core::log::{read_log, LogContents, LogRecord};

/// Append-only event log on disk. `append` returns only after the records
/// have been synced, so anything acknowledged to a client is durable.
pub struct EventStore {
    path: PathBuf,
    file: File,
}

impl EventStore {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, records: &[LogRecord]) -> io::Result<()> {
        if records.is_empty() {
            return Ok(());
        }
        let mut buf = String::new();
        for rec in records {
            buf.push_str(&rec.to_line());
            buf.push('\n');
        }
        self.file.write_all(buf.as_bytes())?;
        self.file.sync_data()
    }

    pub fn read_all(&self) -> io::Result<LogContents> {
        read_log(BufReader::new(File::open(&self.path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lfg_core::log::MatchRecord;

    #[test]
    fn appends_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/events.jsonl");
        let rec = LogRecord::Match(MatchRecord {
            game_id: "g0".into(),
            round_id: 0,
            factor_id: 1,
            term: "war".into(),
            timestamp: 9,
        });
        {
            let mut store = EventStore::open(&path).unwrap();
            store.append(&[rec.clone()]).unwrap();
        }
        let mut store = EventStore::open(&path).unwrap();
        store.append(&[rec.clone()]).unwrap();
        let contents = store.read_all().unwrap();
        assert_eq!(contents.records, vec![rec.clone(), rec]);
    }
}
