use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

/// One prompt/response exchange, stored as a JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<usize>,
    pub step: usize,
    pub prompt: String,
    /// Raw model output, unmodified.
    pub response: String,
    pub latency_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_tokens: Option<u64>,
}

pub trait RecordSink {
    fn append(&mut self, record: &GenerationRecord) -> std::io::Result<()>;
}

impl RecordSink for Vec<GenerationRecord> {
    fn append(&mut self, record: &GenerationRecord) -> std::io::Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Append-only JSONL run log, flushed after every record.
#[derive(Debug)]
pub struct JsonlLog {
    out: BufWriter<File>,
}

impl JsonlLog {
    pub fn append_to(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            out: BufWriter::new(file),
        })
    }

    pub fn create(path: &Path) -> std::io::Result<Self> {
        Ok(Self {
            out: BufWriter::new(File::create(path)?),
        })
    }
}

impl RecordSink for JsonlLog {
    fn append(&mut self, record: &GenerationRecord) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }
}

pub fn log_record(record: &GenerationRecord, sink: &mut dyn RecordSink) -> std::io::Result<()> {
    sink.append(record)
}

pub fn read_records(path: &Path) -> std::io::Result<Vec<GenerationRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("{}:{}: {e}", path.display(), n + 1),
            )
        })?;
        records.push(rec);
    }
    Ok(records)
}
