//! On-disk cache of exact Frobenius series.
//!
//! One record per `(n, K)`: `pfseries-n<n>-K<K>.txt` in the series cache
//! format, next to a `.sha256` sidecar holding the digest of the record.
//! A record whose digest or content does not check out is deleted and
//! recomputed.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use pfperiods_core::frobenius::{read_series, write_series, CacheFormatError};
use pfperiods_core::transport::{ensure_terms, TransportError};
use pfperiods_core::{frobenius_series, ExactPoint, FrobeniusSolution, FuchsianOperator, PrecisionContext};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Order used when nothing is cached yet.
pub const INITIAL_TERMS: usize = 50;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache i/o error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("digest mismatch for {0}")]
    Digest(PathBuf),
    #[error("missing digest sidecar for {0}")]
    MissingDigest(PathBuf),
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: CacheFormatError },
    #[error("{path} holds n={found_n} K={found_k}, expected n={n} K={k}")]
    Mismatch { path: PathBuf, n: u32, k: usize, found_n: u32, found_k: usize },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Series(#[from] pfperiods_core::frobenius::SeriesError),
}

/// What the cache did; reported under the run metadata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CacheEvent {
    Hit { k: usize },
    Truncated { from: usize, to: usize },
    Extended { from: usize, to: usize },
    Built { k: usize },
    Discarded { file: String, reason: String },
}

impl std::fmt::Display for CacheEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CacheEvent::Hit { k } => write!(f, "hit K={k}"),
            CacheEvent::Truncated { from, to } => write!(f, "truncated K={from} to K={to}"),
            CacheEvent::Extended { from, to } => write!(f, "extended K={from} to K={to}"),
            CacheEvent::Built { k } => write!(f, "built K={k}"),
            CacheEvent::Discarded { file, reason } => write!(f, "discarded {file}: {reason}"),
        }
    }
}

pub struct SeriesCache {
    dir: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CacheError + '_ {
    move |source| CacheError::Io { path: path.to_path_buf(), source }
}

pub fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn truncate(sol: &FrobeniusSolution, k: usize) -> FrobeniusSolution {
    let rows = sol.rows().iter().map(|r| r[..=k].to_vec()).collect();
    FrobeniusSolution::from_table(sol.n(), rows)
}

impl SeriesCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn record_name(n: u32, k: usize) -> String {
        format!("pfseries-n{n}-K{k}.txt")
    }

    pub fn record_path(&self, n: u32, k: usize) -> PathBuf {
        self.dir.join(Self::record_name(n, k))
    }

    fn sidecar(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".sha256");
        PathBuf::from(s)
    }

    /// Orders `K` of the records present for `n`, ascending.
    pub fn records(&self, n: u32) -> Vec<usize> {
        let prefix = format!("pfseries-n{n}-K");
        let mut ks: Vec<usize> = fs::read_dir(&self.dir)
            .into_iter()
            .flatten()
            .flatten()
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_prefix(&prefix)?.strip_suffix(".txt")?.parse().ok()
            })
            .collect();
        ks.sort_unstable();
        ks
    }

    pub fn load(&self, n: u32, k: usize) -> Result<FrobeniusSolution, CacheError> {
        let path = self.record_path(n, k);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let side = Self::sidecar(&path);
        let recorded = match fs::read_to_string(&side) {
            Ok(s) => s,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(CacheError::MissingDigest(path)),
            Err(e) => return Err(CacheError::Io { path: side, source: e }),
        };
        if recorded.split_whitespace().next() != Some(digest_hex(&bytes).as_str()) {
            return Err(CacheError::Digest(path));
        }
        let sol = read_series(BufReader::new(bytes.as_slice())).map_err(|source| CacheError::Format { path: path.clone(), source })?;
        if sol.n() != n || sol.order() != k {
            return Err(CacheError::Mismatch { path, n, k, found_n: sol.n(), found_k: sol.order() });
        }
        Ok(sol)
    }

    /// Writes the record and its sidecar; returns the record path.
    pub fn store(&self, sol: &FrobeniusSolution) -> Result<PathBuf, CacheError> {
        fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))?;
        let path = self.record_path(sol.n(), sol.order());
        let mut bytes = Vec::new();
        write_series(sol, &mut bytes).map_err(io_err(&path))?;
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
            f.write_all(&bytes).map_err(io_err(&tmp))?;
        }
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
        let name = Self::record_name(sol.n(), sol.order());
        let side = Self::sidecar(&path);
        fs::write(&side, format!("{}  {name}\n", digest_hex(&bytes))).map_err(io_err(&side))?;
        Ok(path)
    }

    fn discard(&self, n: u32, k: usize, reason: &CacheError, events: &mut Vec<CacheEvent>) {
        let path = self.record_path(n, k);
        let _ = fs::remove_file(Self::sidecar(&path));
        let _ = fs::remove_file(&path);
        events.push(CacheEvent::Discarded { file: Self::record_name(n, k), reason: reason.to_string() });
    }

    /// Largest sound record for `n`, discarding unsound ones on the way.
    fn largest(&self, n: u32, events: &mut Vec<CacheEvent>) -> Option<FrobeniusSolution> {
        for k in self.records(n).into_iter().rev() {
            match self.load(n, k) {
                Ok(sol) => return Some(sol),
                Err(e) => self.discard(n, k, &e, events),
            }
        }
        None
    }

    /// The series truncated at exactly `k`, stored as its own record.
    pub fn series_exact(&self, op: &FuchsianOperator, k: usize) -> Result<(FrobeniusSolution, Vec<CacheEvent>), CacheError> {
        let n = op.n();
        let mut events = Vec::new();
        if self.records(n).contains(&k) {
            match self.load(n, k) {
                Ok(sol) => {
                    events.push(CacheEvent::Hit { k });
                    return Ok((sol, events));
                }
                Err(e) => self.discard(n, k, &e, &mut events),
            }
        }
        let sol = match self.largest(n, &mut events) {
            Some(big) if big.order() >= k => {
                events.push(CacheEvent::Truncated { from: big.order(), to: k });
                truncate(&big, k)
            }
            Some(mut small) => {
                let from = small.order();
                small.extend(op, k)?;
                events.push(CacheEvent::Extended { from, to: k });
                small
            }
            None => {
                events.push(CacheEvent::Built { k });
                frobenius_series(op, k)?
            }
        };
        self.store(&sol)?;
        Ok((sol, events))
    }

    /// A series long enough for direct summation at `base` to `ctx`'s refined precision.
    pub fn series_for(
        &self,
        op: &FuchsianOperator,
        base: &ExactPoint,
        ctx: &PrecisionContext,
    ) -> Result<(FrobeniusSolution, Vec<CacheEvent>), CacheError> {
        let n = op.n();
        let mut events = Vec::new();
        let mut sol = match self.largest(n, &mut events) {
            Some(s) => s,
            None => {
                events.push(CacheEvent::Built { k: INITIAL_TERMS });
                frobenius_series(op, INITIAL_TERMS)?
            }
        };
        let from = sol.order();
        ensure_terms(op, &mut sol, base, ctx)?;
        if sol.order() != from {
            events.push(CacheEvent::Extended { from, to: sol.order() });
        } else if !events.iter().any(|e| matches!(e, CacheEvent::Built { .. })) {
            events.push(CacheEvent::Hit { k: from });
        }
        if !self.records(n).contains(&sol.order()) {
            self.store(&sol)?;
        }
        Ok((sol, events))
    }
}
