//! Block-oriented temporary files with exact spill accounting.
//!
//! Every temp file is a sequence of [`BLOCK_SIZE`]-byte blocks. A block holds
//! a 2-byte little-endian used length, then whole canonical rows packed back
//! to back, then zero padding. Rows never straddle blocks. Streams are
//! fixed-width: a stream is created for one row width and all its rows have
//! exactly that many bytes.

use std::fs::{self, File};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use tempfile::TempDir;

use crate::error::{Error, Result};

pub const BLOCK_SIZE: usize = 8192;
pub const BLOCK_HEADER: usize = 2;
/// Row bytes that fit behind the header of one block.
pub const BLOCK_CAPACITY: usize = BLOCK_SIZE - BLOCK_HEADER;

/// Spill counters for one operation. Writes and reads are counted
/// separately; `temp_bytes_written` is always `temp_blocks_written * 8192`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpillStats {
    pub temp_bytes_written: u64,
    pub temp_blocks_written: u64,
    pub temp_bytes_read: u64,
    pub partition_passes: u64,
    pub sort_runs: u64,
}

impl SpillStats {
    pub fn is_zero(&self) -> bool {
        *self == SpillStats::default()
    }

    /// Written volume in MiB.
    pub fn temp_mb(&self) -> f64 {
        self.temp_bytes_written as f64 / (1u64 << 20) as f64
    }

    /// Counter growth since `before`.
    pub fn since(&self, before: &SpillStats) -> SpillStats {
        SpillStats {
            temp_bytes_written: self.temp_bytes_written - before.temp_bytes_written,
            temp_blocks_written: self.temp_blocks_written - before.temp_blocks_written,
            temp_bytes_read: self.temp_bytes_read - before.temp_bytes_read,
            partition_passes: self.partition_passes - before.partition_passes,
            sort_runs: self.sort_runs - before.sort_runs,
        }
    }
}

/// Number of blocks needed for `rows` rows of `row_width` bytes.
pub fn blocks_for(rows: u64, row_width: usize) -> u64 {
    if rows == 0 {
        return 0;
    }
    let per_block = (BLOCK_CAPACITY / row_width) as u64;
    rows.div_ceil(per_block)
}

#[derive(Debug, Default)]
struct Counters {
    bytes_written: AtomicU64,
    blocks_written: AtomicU64,
    bytes_read: AtomicU64,
    partition_passes: AtomicU64,
    sort_runs: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StreamId(u32);

#[derive(Debug)]
struct Stream {
    path: PathBuf,
    row_width: usize,
    file: Option<File>,
    /// Block under construction; allocated on first row, freed at seal.
    block: Vec<u8>,
    used: usize,
    rows: u64,
    sealed: bool,
}

/// Temp-file manager owning one private directory. Dropping or closing the
/// arena deletes the directory and every file in it.
#[derive(Debug)]
pub struct TempArena {
    dir: TempDir,
    streams: Vec<Stream>,
    counters: Arc<Counters>,
}

impl TempArena {
    /// Creates a fresh, uniquely named arena directory inside `dir`.
    pub fn create(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = tempfile::Builder::new()
            .prefix("tensorlab-arena-")
            .tempdir_in(dir.as_ref())?;
        Ok(Self {
            dir,
            streams: Vec::new(),
            counters: Arc::default(),
        })
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn stats(&self) -> SpillStats {
        let c = &self.counters;
        SpillStats {
            temp_bytes_written: c.bytes_written.load(Ordering::Relaxed),
            temp_blocks_written: c.blocks_written.load(Ordering::Relaxed),
            temp_bytes_read: c.bytes_read.load(Ordering::Relaxed),
            partition_passes: c.partition_passes.load(Ordering::Relaxed),
            sort_runs: c.sort_runs.load(Ordering::Relaxed),
        }
    }

    pub fn record_partition_pass(&self) {
        self.counters.partition_passes.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_sort_runs(&self, runs: u64) {
        self.counters.sort_runs.fetch_add(runs, Ordering::Relaxed);
    }

    /// Registers a new stream of `row_width`-byte rows.
    pub fn create_stream(&mut self, row_width: usize) -> Result<StreamId> {
        if row_width == 0 {
            return Err(Error::ZeroWidthRow);
        }
        if row_width > BLOCK_CAPACITY {
            return Err(Error::OversizeRow(row_width));
        }
        let id = StreamId(self.streams.len() as u32);
        self.streams.push(Stream {
            path: self.dir.path().join(format!("stream-{:06}.tmp", id.0)),
            row_width,
            file: None,
            block: Vec::new(),
            used: 0,
            rows: 0,
            sealed: false,
        });
        Ok(id)
    }

    pub fn stream_rows(&self, id: StreamId) -> u64 {
        self.streams[id.0 as usize].rows
    }

    pub fn stream_row_width(&self, id: StreamId) -> usize {
        self.streams[id.0 as usize].row_width
    }

    /// Appends one row to `id`, emitting a block whenever the current one is full.
    #[inline]
    pub fn spill_row(&mut self, id: StreamId, row: &[u8]) -> Result<()> {
        let s = &mut self.streams[id.0 as usize];
        if row.len() != s.row_width {
            if row.len() > BLOCK_CAPACITY {
                return Err(Error::OversizeRow(row.len()));
            }
            return Err(Error::ShapeMismatch(format!(
                "row of {} bytes on a stream of {}-byte rows",
                row.len(),
                s.row_width
            )));
        }
        debug_assert!(!s.sealed, "write to sealed stream");
        if s.block.is_empty() {
            s.block = vec![0u8; BLOCK_SIZE];
        }
        if s.used + row.len() > BLOCK_CAPACITY {
            flush_block(s, &self.counters)?;
        }
        let at = BLOCK_HEADER + s.used;
        s.block[at..at + row.len()].copy_from_slice(row);
        s.used += row.len();
        s.rows += 1;
        Ok(())
    }

    pub fn spill_rows<'r, I>(&mut self, id: StreamId, rows: I) -> Result<()>
    where
        I: IntoIterator<Item = &'r [u8]>,
    {
        for r in rows {
            self.spill_row(id, r)?;
        }
        Ok(())
    }

    /// Writes out the partial block (if any) and closes the write handle.
    pub fn seal(&mut self, id: StreamId) -> Result<()> {
        let s = &mut self.streams[id.0 as usize];
        if s.sealed {
            return Ok(());
        }
        if s.used > 0 {
            flush_block(s, &self.counters)?;
        }
        if let Some(mut f) = s.file.take() {
            f.flush()?;
        }
        s.block = Vec::new();
        s.sealed = true;
        Ok(())
    }

    /// Reader over the rows of `id` in write order. Seals the stream first.
    /// A stream that never received a row reads as empty.
    pub fn read_stream(&mut self, id: StreamId) -> Result<StreamReader> {
        self.seal(id)?;
        let s = &self.streams[id.0 as usize];
        let file = if s.path.exists() {
            Some(File::open(&s.path)?)
        } else {
            None
        };
        let block = if file.is_some() { vec![0u8; BLOCK_SIZE] } else { Vec::new() };
        Ok(StreamReader {
            file,
            row_width: s.row_width,
            block,
            used: 0,
            pos: 0,
            current: None,
            counters: Arc::clone(&self.counters),
        })
    }

    /// Every row of `id`, materialized.
    pub fn read_all(&mut self, id: StreamId) -> Result<Vec<Vec<u8>>> {
        let mut reader = self.read_stream(id)?;
        let mut out = Vec::new();
        while let Some(row) = reader.next_row()? {
            out.push(row.to_vec());
        }
        Ok(out)
    }

    /// Bytes held in memory by unsealed block buffers.
    pub fn buffered_bytes(&self) -> u64 {
        self.streams.iter().map(|s| s.block.capacity() as u64).sum()
    }

    /// Sum of the sizes of all files currently in the arena directory.
    pub fn disk_usage(&self) -> Result<u64> {
        let mut total = 0;
        for entry in fs::read_dir(self.dir.path())? {
            total += entry?.metadata()?.len();
        }
        Ok(total)
    }

    /// Deletes the arena directory, reporting any removal error.
    pub fn close(self) -> Result<()> {
        let TempArena { dir, streams, .. } = self;
        drop(streams);
        dir.close()?;
        Ok(())
    }
}

fn flush_block(s: &mut Stream, counters: &Counters) -> Result<()> {
    let used = s.used;
    s.block[..BLOCK_HEADER].copy_from_slice(&(used as u16).to_le_bytes());
    s.block[BLOCK_HEADER + used..].fill(0);
    if s.file.is_none() {
        s.file = Some(
            fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&s.path)?,
        );
    }
    s.file.as_mut().expect("opened above").write_all(&s.block)?;
    s.used = 0;
    counters.blocks_written.fetch_add(1, Ordering::Relaxed);
    counters
        .bytes_written
        .fetch_add(BLOCK_SIZE as u64, Ordering::Relaxed);
    Ok(())
}

/// Cursor over the rows of a sealed stream, one block resident at a time.
#[derive(Debug)]
pub struct StreamReader {
    file: Option<File>,
    row_width: usize,
    block: Vec<u8>,
    used: usize,
    pos: usize,
    current: Option<usize>,
    counters: Arc<Counters>,
}

impl StreamReader {
    pub fn row_width(&self) -> usize {
        self.row_width
    }

    /// Moves to the next row; `false` once the stream is exhausted.
    pub fn advance(&mut self) -> Result<bool> {
        if self.pos >= self.used && !self.load_block()? {
            self.current = None;
            return Ok(false);
        }
        self.current = Some(BLOCK_HEADER + self.pos);
        self.pos += self.row_width;
        Ok(true)
    }

    /// The row the cursor is on, if any.
    #[inline]
    pub fn current(&self) -> Option<&[u8]> {
        self.current.map(|at| &self.block[at..at + self.row_width])
    }

    pub fn next_row(&mut self) -> Result<Option<&[u8]>> {
        if self.advance()? {
            Ok(self.current())
        } else {
            Ok(None)
        }
    }

    fn load_block(&mut self) -> Result<bool> {
        loop {
            let Some(file) = self.file.as_mut() else {
                return Ok(false);
            };
            let mut filled = 0;
            while filled < BLOCK_SIZE {
                match file.read(&mut self.block[filled..]) {
                    Ok(0) => break,
                    Ok(n) => filled += n,
                    Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                    Err(e) => return Err(e.into()),
                }
            }
            if filled == 0 {
                self.file = None;
                return Ok(false);
            }
            if filled < BLOCK_SIZE {
                return Err(Error::Io(io::Error::new(
                    io::ErrorKind::UnexpectedEof,
                    "truncated temp block",
                )));
            }
            self.counters
                .bytes_read
                .fetch_add(BLOCK_SIZE as u64, Ordering::Relaxed);
            let used = u16::from_le_bytes([self.block[0], self.block[1]]) as usize;
            if used > BLOCK_CAPACITY || used % self.row_width != 0 {
                return Err(Error::CorruptBlock {
                    used,
                    capacity: BLOCK_CAPACITY,
                });
            }
            self.used = used;
            self.pos = 0;
            if used > 0 {
                return Ok(true);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arena() -> (TempDir, TempArena) {
        let root = tempfile::tempdir().unwrap();
        let a = TempArena::create(root.path()).unwrap();
        (root, a)
    }

    #[test]
    fn fresh_arena_zero_stats() {
        let (_root, a) = arena();
        assert!(a.stats().is_zero());
        assert_eq!(a.disk_usage().unwrap(), 0);
    }

    #[test]
    fn unwritable_dir_is_io_error() {
        let root = tempfile::tempdir().unwrap();
        let file = root.path().join("plain-file");
        fs::write(&file, b"x").unwrap();
        assert!(matches!(TempArena::create(file.join("sub")), Err(Error::Io(_))));
        assert!(matches!(TempArena::create("/nonexistent/tensorlab"), Err(Error::Io(_))));
    }

    #[test]
    fn arenas_never_collide() {
        let root = tempfile::tempdir().unwrap();
        let handles: Vec<_> = (0..100)
            .map(|_| {
                let p = root.path().to_path_buf();
                std::thread::spawn(move || TempArena::create(p).unwrap())
            })
            .collect();
        let arenas: Vec<TempArena> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        let mut paths: Vec<_> = arenas.iter().map(|a| a.path().to_path_buf()).collect();
        paths.sort();
        paths.dedup();
        assert_eq!(paths.len(), 100);
    }

    #[test]
    fn zero_rows_zero_blocks() {
        let (_root, mut a) = arena();
        let id = a.create_stream(10).unwrap();
        a.spill_rows(id, std::iter::empty()).unwrap();
        a.seal(id).unwrap();
        assert_eq!(a.stats().temp_blocks_written, 0);
        assert!(a.read_all(id).unwrap().is_empty());
    }

    #[test]
    fn exact_capacity_is_one_block() {
        let (_root, mut a) = arena();
        // 8190 = 5 * 1638
        let id = a.create_stream(1638).unwrap();
        let row = vec![7u8; 1638];
        for _ in 0..5 {
            a.spill_row(id, &row).unwrap();
        }
        a.seal(id).unwrap();
        assert_eq!(a.stats().temp_blocks_written, 1);
        assert_eq!(a.disk_usage().unwrap(), 8192);
        // one more row opens a second block
        let id2 = a.create_stream(1638).unwrap();
        for _ in 0..6 {
            a.spill_row(id2, &row).unwrap();
        }
        a.seal(id2).unwrap();
        assert_eq!(a.stats().temp_blocks_written, 3);
    }

    #[test]
    fn oversize_and_zero_width_rejected() {
        let (_root, mut a) = arena();
        assert!(matches!(a.create_stream(8191), Err(Error::OversizeRow(8191))));
        assert!(matches!(a.create_stream(0), Err(Error::ZeroWidthRow)));
        let id = a.create_stream(8).unwrap();
        assert!(a.spill_row(id, &[0u8; 9000]).is_err());
        assert!(a.spill_row(id, &[0u8; 4]).is_err());
    }

    #[test]
    fn never_written_stream_reads_empty() {
        let (_root, mut a) = arena();
        let id = a.create_stream(8).unwrap();
        assert!(a.read_all(id).unwrap().is_empty());
        assert_eq!(a.stats().temp_bytes_read, 0);
    }

    #[test]
    fn corrupt_header_detected() {
        let (_root, mut a) = arena();
        let id = a.create_stream(8).unwrap();
        a.spill_row(id, &[1u8; 8]).unwrap();
        a.seal(id).unwrap();
        let path = a.path().join("stream-000000.tmp");
        let mut bytes = fs::read(&path).unwrap();
        bytes[0..2].copy_from_slice(&9000u16.to_le_bytes());
        fs::write(&path, bytes).unwrap();
        let mut r = a.read_stream(id).unwrap();
        assert!(matches!(r.next_row(), Err(Error::CorruptBlock { used: 9000, .. })));
    }

    #[test]
    fn close_removes_directory() {
        let (_root, mut a) = arena();
        let id = a.create_stream(8).unwrap();
        a.spill_row(id, &[1u8; 8]).unwrap();
        a.seal(id).unwrap();
        let p = a.path().to_path_buf();
        assert!(p.exists());
        a.close().unwrap();
        assert!(!p.exists());
    }

    #[test]
    fn read_counts_bytes() {
        let (_root, mut a) = arena();
        let id = a.create_stream(100).unwrap();
        for i in 0..200u8 {
            a.spill_row(id, &[i; 100]).unwrap();
        }
        let rows = a.read_all(id).unwrap();
        assert_eq!(rows.len(), 200);
        let st = a.stats();
        assert_eq!(st.temp_blocks_written, blocks_for(200, 100));
        assert_eq!(st.temp_bytes_read, st.temp_bytes_written);
    }

    proptest! {
        #[test]
        fn round_trip_identity(width in 1usize..300, rows in proptest::collection::vec(any::<u8>(), 0..200)) {
            let (_root, mut a) = arena();
            let id = a.create_stream(width).unwrap();
            let data: Vec<Vec<u8>> = rows.iter().map(|&b| (0..width).map(|i| b.wrapping_add(i as u8)).collect()).collect();
            a.spill_rows(id, data.iter().map(|r| r.as_slice())).unwrap();
            let back = a.read_all(id).unwrap();
            prop_assert_eq!(&back, &data);
            let st = a.stats();
            prop_assert_eq!(st.temp_bytes_written % BLOCK_SIZE as u64, 0);
            prop_assert_eq!(st.temp_bytes_written, st.temp_blocks_written * BLOCK_SIZE as u64);
            prop_assert_eq!(st.temp_bytes_written, a.disk_usage().unwrap());
            prop_assert_eq!(st.temp_blocks_written, blocks_for(data.len() as u64, width));
        }
    }
}
