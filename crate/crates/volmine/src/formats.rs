//! On-disk formats: block CSV, mempool snapshot JSON and fee-band model JSON.
//!
//! Block CSV (version 1) starts with the line `# volmine-blocks v1`, then a
//! header row `height,timestamp,gen_time,fee,parent_gen_time`. `gen_time`
//! and `parent_gen_time` are minutes, `fee` is the block's total fee in BTC
//! and `parent_gen_time` may be empty. Files without the version line are
//! read as version 1.
//!
//! Snapshot JSON (version 1) is `{"version": 1, "snapshots": [{"t": minutes,
//! "bands": [{"band": sat_per_vbyte, "weight": vbytes}, ...]}, ...]}`. A bare
//! array of snapshots is accepted as well.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use volmine_core::mempool::{BlockRecord, FeeBandModel, Snapshot};

pub const BLOCKS_VERSION: u32 = 1;
pub const BLOCKS_MAGIC: &str = "# volmine-blocks v";
pub const BLOCKS_HEADER: [&str; 5] = ["height", "timestamp", "gen_time", "fee", "parent_gen_time"];
pub const SNAPSHOTS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported {what} version {found} (expected {expected})")]
    Version {
        what: &'static str,
        found: String,
        expected: u32,
    },
    #[error("block CSV header must be {expected:?}, got {found:?}")]
    Header { expected: Vec<String>, found: Vec<String> },
    #[error("block CSV row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn open(path: &Path) -> Result<File, FormatError> {
    File::open(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads block records from a version-1 block CSV.
pub fn read_blocks<R: Read>(reader: R) -> Result<Vec<BlockRecord>, FormatError> {
    let mut buf = BufReader::new(reader);
    let mut first = String::new();
    buf.read_line(&mut first).map_err(|source| FormatError::Io {
        path: "<blocks>".into(),
        source,
    })?;
    let rest: Box<dyn Read> = if let Some(v) = first.trim().strip_prefix(BLOCKS_MAGIC) {
        if v != BLOCKS_VERSION.to_string() {
            return Err(FormatError::Version {
                what: "block CSV",
                found: v.to_string(),
                expected: BLOCKS_VERSION,
            });
        }
        Box::new(buf)
    } else {
        Box::new(std::io::Cursor::new(first.into_bytes()).chain(buf))
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(rest);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != BLOCKS_HEADER {
        return Err(FormatError::Header {
            expected: BLOCKS_HEADER.iter().map(|s| s.to_string()).collect(),
            found: header,
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<BlockRecord>().enumerate() {
        let b = rec?;
        if !(b.generation_time >= 0.0) || !(b.total_fee >= 0.0) {
            return Err(FormatError::Row {
                row: i + 1,
                msg: format!(
                    "gen_time and fee must be non-negative, got {} and {}",
                    b.generation_time, b.total_fee
                ),
            });
        }
        out.push(b);
    }
    Ok(out)
}

pub fn write_blocks<W: Write>(mut writer: W, blocks: &[BlockRecord]) -> Result<(), FormatError> {
    writeln!(writer, "{BLOCKS_MAGIC}{BLOCKS_VERSION}").map_err(|source| FormatError::Io {
        path: "<blocks>".into(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(writer);
    for b in blocks {
        w.serialize(b)?;
    }
    w.flush().map_err(|source| FormatError::Io {
        path: "<blocks>".into(),
        source,
    })?;
    Ok(())
}

pub fn load_blocks(path: &Path) -> Result<Vec<BlockRecord>, FormatError> {
    read_blocks(open(path)?)
}

#[derive(Serialize, Deserialize)]
struct SnapshotFile {
    version: u32,
    snapshots: Vec<Snapshot>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnySnapshots {
    Versioned(SnapshotFile),
    Bare(Vec<Snapshot>),
}

pub fn read_snapshots<R: Read>(reader: R) -> Result<Vec<Snapshot>, FormatError> {
    match serde_json::from_reader(reader)? {
        AnySnapshots::Bare(s) => Ok(s),
        AnySnapshots::Versioned(f) if f.version == SNAPSHOTS_VERSION => Ok(f.snapshots),
        AnySnapshots::Versioned(f) => Err(FormatError::Version {
            what: "snapshot JSON",
            found: f.version.to_string(),
            expected: SNAPSHOTS_VERSION,
        }),
    }
}

pub fn write_snapshots<W: Write>(writer: W, snapshots: &[Snapshot]) -> Result<(), FormatError> {
    let file = SnapshotFile {
        version: SNAPSHOTS_VERSION,
        snapshots: snapshots.to_vec(),
    };
    serde_json::to_writer_pretty(writer, &file)?;
    Ok(())
}

pub fn load_snapshots(path: &Path) -> Result<Vec<Snapshot>, FormatError> {
    read_snapshots(BufReader::new(open(path)?))
}

/// Per-band `(t, weight)` series from snapshots, one series per distinct
/// band level in ascending order.
pub fn band_series(snapshots: &[Snapshot]) -> (Vec<f64>, Vec<Vec<(f64, f64)>>) {
    let mut bands: Vec<f64> = snapshots.iter().flat_map(|s| s.bands.iter().map(|b| b.band)).collect();
    bands.sort_by(f64::total_cmp);
    bands.dedup();
    let series = bands
        .iter()
        .map(|&band| {
            snapshots
                .iter()
                .filter_map(|s| s.bands.iter().find(|b| b.band == band).map(|b| (s.t, b.weight)))
                .collect()
        })
        .collect();
    (bands, series)
}

pub fn load_model(path: &Path) -> Result<FeeBandModel, FormatError> {
    Ok(serde_json::from_reader(BufReader::new(open(path)?))?)
}
