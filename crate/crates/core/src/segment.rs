//! Append-only block storage.
//!
//! Each committed block is written with its receipts as one canonical
//! record into numbered segment files. The index file holds one 16-byte
//! entry per height: segment number and byte offset, both big-endian.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::codec::{Decoder, Encoder, EncodingError};
use crate::engine::Receipt;
use crate::ledger::{Block, Ledger};

const INDEX: &str = "index";
const ENTRY: u64 = 16;
const DEFAULT_SEGMENT_LIMIT: u64 = 64 << 20;

#[derive(Debug, thiserror::Error)]
pub enum SegmentError {
    #[error("segment io: {0}")]
    Io(#[from] io::Error),
    #[error("stored record at height {height} is malformed: {source}")]
    Corrupt { height: u64, source: EncodingError },
}

/// A stored block with its receipts.
pub type Record = (Block, Vec<Receipt>);

pub struct SegmentStore {
    dir: PathBuf,
    segment_limit: u64,
    index: File,
    segment: File,
    segment_no: u64,
    segment_len: u64,
    entries: u64,
}

fn segment_path(dir: &Path, n: u64) -> PathBuf {
    dir.join(format!("segment-{n:06}.dat"))
}

fn encode_record(block: &Block, receipts: &[Receipt]) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.put_nested(block).put_list(receipts);
    enc.finish()
}

fn decode_record(bytes: &[u8]) -> Result<Record, EncodingError> {
    let mut dec = Decoder::new(bytes);
    let block = dec.get_nested()?;
    let receipts = dec.get_list()?;
    dec.finish()?;
    Ok((block, receipts))
}

impl SegmentStore {
    /// Opens or creates the store in `dir` and loads every stored record.
    /// A torn trailing write is dropped.
    pub fn open(dir: impl Into<PathBuf>) -> Result<(SegmentStore, Vec<Record>), SegmentError> {
        Self::open_with_limit(dir, DEFAULT_SEGMENT_LIMIT)
    }

    pub fn open_with_limit(
        dir: impl Into<PathBuf>,
        segment_limit: u64,
    ) -> Result<(SegmentStore, Vec<Record>), SegmentError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut index = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(dir.join(INDEX))?;
        let mut raw = Vec::new();
        index.read_to_end(&mut raw)?;
        let mut records = Vec::new();
        let mut last = (0u64, 0u64);
        for (height, entry) in raw.chunks_exact(ENTRY as usize).enumerate() {
            let seg = u64::from_be_bytes(entry[..8].try_into().expect("8 bytes"));
            let offset = u64::from_be_bytes(entry[8..].try_into().expect("8 bytes"));
            let Some(bytes) = read_frame(&segment_path(&dir, seg), offset)? else {
                break;
            };
            let record = decode_record(&bytes).map_err(|source| SegmentError::Corrupt {
                height: height as u64,
                source,
            })?;
            records.push(record);
            last = (seg, offset + 4 + bytes.len() as u64);
        }
        let entries = records.len() as u64;
        index.set_len(entries * ENTRY)?;
        let (segment_no, segment_len) = last;
        let segment = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(false)
            .open(segment_path(&dir, segment_no))?;
        segment.set_len(segment_len)?;
        let mut store = SegmentStore {
            dir,
            segment_limit,
            index,
            segment,
            segment_no,
            segment_len,
            entries,
        };
        store.segment.seek(SeekFrom::Start(segment_len))?;
        Ok((store, records))
    }

    pub fn len(&self) -> u64 {
        self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries == 0
    }

    /// Appends the record for the next height and syncs it to disk.
    pub fn append(&mut self, block: &Block, receipts: &[Receipt]) -> Result<(), SegmentError> {
        let bytes = encode_record(block, receipts);
        if self.segment_len > 0 && self.segment_len + 4 + bytes.len() as u64 > self.segment_limit {
            self.segment_no += 1;
            self.segment_len = 0;
            self.segment = OpenOptions::new()
                .create(true)
                .write(true)
                .truncate(true)
                .open(segment_path(&self.dir, self.segment_no))?;
        }
        let offset = self.segment_len;
        self.segment
            .write_all(&(bytes.len() as u32).to_be_bytes())?;
        self.segment.write_all(&bytes)?;
        self.segment.sync_data()?;
        self.segment_len += 4 + bytes.len() as u64;
        let mut entry = [0u8; ENTRY as usize];
        entry[..8].copy_from_slice(&self.segment_no.to_be_bytes());
        entry[8..].copy_from_slice(&offset.to_be_bytes());
        self.index.write_all(&entry)?;
        self.index.sync_data()?;
        self.entries += 1;
        Ok(())
    }

    /// Appends every block of `ledger` not yet stored.
    pub fn sync_from(&mut self, ledger: &Ledger) -> Result<(), SegmentError> {
        for h in self.entries..=ledger.height() {
            let block = ledger.block(h).expect("in range");
            let receipts = ledger.receipts(h).expect("in range");
            self.append(block, receipts)?;
        }
        Ok(())
    }
}

fn read_frame(path: &Path, offset: u64) -> io::Result<Option<Vec<u8>>> {
    let mut file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e),
    };
    let len = file.metadata()?.len();
    if offset + 4 > len {
        return Ok(None);
    }
    file.seek(SeekFrom::Start(offset))?;
    let mut prefix = [0u8; 4];
    file.read_exact(&mut prefix)?;
    let n = u32::from_be_bytes(prefix) as u64;
    if offset + 4 + n > len {
        return Ok(None);
    }
    let mut buf = vec![0u8; n as usize];
    file.read_exact(&mut buf)?;
    Ok(Some(buf))
}
