use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use super::{EnergyRecord, EnergyScale, ProtocolError};

pub const RECORD_HEADER: &str = "dataset_id,sample_size,boot_index,fold_index,seed_index,nll_sum,heldout_count";

/// Contents of a record file: the records plus metadata carried in the
/// `# key=value` comment lines before the header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecordFile {
    pub records: Vec<EnergyRecord>,
    pub scale: EnergyScale,
    /// Other `key=value` comments in file order (manifest path, timestamp, ...).
    pub metadata: Vec<(String, String)>,
}

impl RecordFile {
    pub fn new(records: Vec<EnergyRecord>, scale: EnergyScale) -> Self {
        Self { records, scale, metadata: Vec::new() }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for RecordFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# scale={}", self.scale)?;
        for (k, v) in &self.metadata {
            writeln!(f, "# {k}={v}")?;
        }
        writeln!(f, "{RECORD_HEADER}")?;
        for r in &self.records {
            writeln!(
                f,
                "{},{},{},{},{},{:e},{}",
                r.dataset_id, r.sample_size, r.boot_index, r.fold_index, r.seed_index, r.nll_sum, r.heldout_count
            )?;
        }
        Ok(())
    }
}

pub fn write_records(path: impl AsRef<Path>, file: &RecordFile) -> Result<(), ProtocolError> {
    let path = path.as_ref();
    if let Some(bad) = file.records.iter().find(|r| r.dataset_id.contains([',', '\n', '"'])) {
        return Err(ProtocolError::Config(format!("dataset_id `{}` contains a separator", bad.dataset_id)));
    }
    std::fs::write(path, file.to_string())
        .map_err(|e| ProtocolError::Io { path: path.display().to_string(), message: e.to_string() })
}

pub fn ingest_records(path: impl AsRef<Path>) -> Result<RecordFile, ProtocolError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ProtocolError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_records(&text)
}

/// Parses and validates a record file. Errors carry 1-based line numbers.
pub fn parse_records(text: &str) -> Result<RecordFile, ProtocolError> {
    let mut file = RecordFile::default();
    let mut offset = 0;
    let mut rest = text;
    // comment preamble
    loop {
        let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                let (k, v) = (k.trim(), v.trim());
                if k == "scale" {
                    file.scale =
                        v.parse().map_err(|reason| ProtocolError::Parse { line: offset + 1, column: 1, reason })?;
                } else {
                    file.metadata.push((k.to_string(), v.to_string()));
                }
            }
        } else if !trimmed.is_empty() {
            break;
        }
        offset += 1;
        if tail.is_empty() && !rest.contains('\n') {
            return Err(ProtocolError::Parse { line: offset, column: 0, reason: "missing record header".into() });
        }
        rest = tail;
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(rest.as_bytes());
    let header =
        reader.headers().map_err(|e| ProtocolError::Parse { line: offset + 1, column: 1, reason: e.to_string() })?;
    if header.iter().collect::<Vec<_>>().join(",") != RECORD_HEADER {
        return Err(ProtocolError::Parse {
            line: offset + 1,
            column: 1,
            reason: format!("expected header `{RECORD_HEADER}`"),
        });
    }

    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| ProtocolError::Parse {
            line: offset + e.position().map_or(0, |p| p.line() as usize),
            column: 0,
            reason: e.to_string(),
        })?;
        let line = offset + row.position().map_or(0, |p| p.line() as usize);
        let int = |col: usize| -> Result<usize, ProtocolError> {
            row[col].parse().map_err(|_| ProtocolError::Parse {
                line,
                column: col + 1,
                reason: format!("expected a non-negative integer, found `{}`", &row[col]),
            })
        };
        let record = EnergyRecord {
            dataset_id: row[0].to_string(),
            sample_size: int(1)?,
            boot_index: int(2)?,
            fold_index: int(3)?,
            seed_index: int(4)?,
            nll_sum: row[5].parse().map_err(|_| ProtocolError::Parse {
                line,
                column: 6,
                reason: format!("expected a real number, found `{}`", &row[5]),
            })?,
            heldout_count: int(6)?,
        };
        if record.dataset_id.is_empty() {
            return Err(ProtocolError::InvariantViolation { line, reason: "empty dataset_id".into() });
        }
        if record.heldout_count == 0 {
            return Err(ProtocolError::InvariantViolation { line, reason: "heldout_count must be >= 1".into() });
        }
        if record.sample_size < 2 {
            return Err(ProtocolError::InvariantViolation { line, reason: "sample_size must be >= 2".into() });
        }
        if !record.nll_sum.is_finite() {
            return Err(ProtocolError::InvariantViolation { line, reason: "nll_sum is not finite".into() });
        }
        let (id, n, boot, fold, seed) = record.key();
        if !seen.insert((id.to_string(), n, boot, fold, seed)) {
            return Err(ProtocolError::DuplicateKey { line, dataset_id: id.to_string(), n, boot, fold, seed });
        }
        file.records.push(record);
    }
    Ok(file)
}
