//! On-disk cache of enumeration results.
//!
//! Entries are keyed by the system's content hash, the operations carried,
//! the size and the isomorphism flag. `<key>.count` holds the model count and
//! `<key>.jsonl` the emitted records, written only for complete runs.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::axioms::AxiomSystem;
use crate::terms::OpSet;

/// Largest enumeration whose records are stored.
pub const MAX_CACHED_MODELS: usize = 200_000;

pub struct Cache {
    dir: PathBuf,
}

pub struct Entry {
    base: PathBuf,
}

impl Cache {
    pub fn open(dir: &Path) -> io::Result<Cache> {
        fs::create_dir_all(dir)?;
        Ok(Cache { dir: dir.to_path_buf() })
    }

    pub fn entry(&self, sys: &AxiomSystem, ops: OpSet, n: usize, up_to_iso: bool) -> Entry {
        let ops: Vec<&str> = ops.iter().map(|o| o.name()).collect();
        let mut h = Sha256::new();
        h.update(format!("{}|{}|{n}|{up_to_iso}", sys.content_hash(), ops.join(",")));
        Entry { base: self.dir.join(hex::encode(h.finalize())) }
    }
}

fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

impl Entry {
    fn count_path(&self) -> PathBuf {
        self.base.with_extension("count")
    }

    fn records_path(&self) -> PathBuf {
        self.base.with_extension("jsonl")
    }

    /// A cached count; unreadable entries count as missing.
    pub fn count(&self) -> Option<u64> {
        fs::read_to_string(self.count_path()).ok()?.trim().parse().ok()
    }

    pub fn records(&self) -> Option<String> {
        fs::read_to_string(self.records_path()).ok()
    }

    pub fn store_count(&self, count: u64) -> io::Result<()> {
        write_atomic(&self.count_path(), format!("{count}\n").as_bytes())
    }

    pub fn store_records(&self, records: &str) -> io::Result<()> {
        write_atomic(&self.records_path(), records.as_bytes())
    }
}
