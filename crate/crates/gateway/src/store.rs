//! Append-only JSON Lines log, one file per session. Each record is one
//! handled command; a record is either fully on disk or ignored at
//! recovery.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use earpiece_core::curation::{CandidateSet, Decision};
use earpiece_core::show::{LoggedEvent, ShowConfig};
use earpiece_core::textgen::TopicSet;
use serde::{Deserialize, Serialize};

use crate::auth::ClientRole;
use crate::GatewayError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Entry {
    SessionCreated {
        session_id: String,
        created_unix_ms: u64,
        show: ShowConfig,
        host_token: String,
        seed: u64,
    },
    ClientRegistered {
        token: String,
        role: ClientRole,
    },
    Show {
        event: LoggedEvent,
    },
    CandidatesProposed {
        set: CandidateSet,
    },
    CandidatesResolved {
        set_id: u64,
        decision: Decision,
    },
    TopicPrimed {
        topic: TopicSet,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    /// Position of the record in the log.
    pub n: u64,
    /// Session clock when the command was handled.
    pub at: u64,
    /// Sender token and its message seq, for at-most-once application.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_seq: Option<u64>,
    /// Highest outbound message seq used by the time the command finished.
    pub out_seq: u64,
    pub entries: Vec<Entry>,
}

/// Writable session log.
#[derive(Debug)]
pub struct LogFile {
    path: PathBuf,
    file: File,
    fsync: bool,
}

impl LogFile {
    pub fn create(path: &Path, fsync: bool) -> Result<Self, GatewayError> {
        let file = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(path)
            .map_err(|e| GatewayError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
            fsync,
        })
    }

    /// Reads every complete record and reopens the file for appending. A torn
    /// last line is cut off first.
    pub fn recover(path: &Path, fsync: bool) -> Result<(Self, Vec<LogRecord>), GatewayError> {
        let io = |e: std::io::Error| GatewayError::Io(format!("{}: {e}", path.display()));
        let mut file = OpenOptions::new().read(true).write(true).open(path).map_err(io)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io)?;
        let (records, good_len) = parse_records(&bytes).map_err(|e| GatewayError::Data(format!("{}: {e}", path.display())))?;
        if good_len < bytes.len() {
            file.set_len(good_len as u64).map_err(io)?;
            file.sync_all().map_err(io)?;
        }
        file.seek(SeekFrom::End(0)).map_err(io)?;
        Ok((
            Self {
                path: path.to_path_buf(),
                file,
                fsync,
            },
            records,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &LogRecord) -> Result<(), GatewayError> {
        let mut line = serde_json::to_vec(record).expect("records serialize");
        line.push(b'\n');
        let io = |e: std::io::Error| GatewayError::Io(format!("{}: {e}", self.path.display()));
        self.file.write_all(&line).map_err(io)?;
        if self.fsync {
            self.file.sync_data().map_err(io)?;
        }
        Ok(())
    }
}

/// Parses newline-terminated records. Returns them with the byte length of
/// the intact prefix. Only the final line may be damaged; damage anywhere
/// else is an error.
pub fn parse_records(bytes: &[u8]) -> Result<(Vec<LogRecord>, usize), String> {
    let mut records = Vec::new();
    let mut offset = 0;
    let mut line_no = 0;
    while offset < bytes.len() {
        line_no += 1;
        let Some(rel) = bytes[offset..].iter().position(|&b| b == b'\n') else {
            // no newline: the write was cut short
            return Ok((records, offset));
        };
        let line = &bytes[offset..offset + rel];
        let end = offset + rel + 1;
        match serde_json::from_slice::<LogRecord>(line) {
            Ok(record) => {
                if record.n != records.len() as u64 {
                    return Err(format!("line {line_no}: record {} out of order", record.n));
                }
                records.push(record);
            }
            Err(e) if end == bytes.len() => {
                let _ = e;
                return Ok((records, offset));
            }
            Err(e) => return Err(format!("line {line_no}: {e}")),
        }
        offset = end;
    }
    Ok((records, offset))
}
