//! File-backed sequences that are only ever appended to or read front to back.
//!
//! Every array of the pipeline lives in its own file `<workdir>/<array>_<index>.bin`.
//! Element encodings are fixed width: symbols take one byte, indexes and LCP
//! values four little-endian bytes, and bits are packed LSB-first. A sequence
//! is written through a [`SeqWriter`], which turns into a read-only
//! [`ExtSequence`] handle on [`SeqWriter::finish`]; handles hand out forward-only
//! [`SeqReader`]s. Byte and file counters are kept per [`Phase`] in [`IoStats`].

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Code;

pub const DEFAULT_BUFFER_SIZE: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Symbol,
    Index,
    LcpVal,
    Bit,
}

impl ElementKind {
    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Symbol => "symbol",
            ElementKind::Index => "index",
            ElementKind::LcpVal => "lcpval",
            ElementKind::Bit => "bit",
        }
    }

    /// Width in bytes; 0 for packed bits.
    pub fn width(self) -> u64 {
        match self {
            ElementKind::Symbol => 1,
            ElementKind::Index | ElementKind::LcpVal => 4,
            ElementKind::Bit => 0,
        }
    }

    /// Size on disk of `len` elements.
    pub fn byte_len(self, len: u64) -> u64 {
        match self {
            ElementKind::Bit => len.div_ceil(8),
            k => len * k.width(),
        }
    }
}

/// Element type of a sequence, fixed at compile time.
pub trait Kind: 'static {
    type Value: Copy + fmt::Debug + PartialEq;
    const KIND: ElementKind;
    fn encode(value: Self::Value) -> Result<u32>;
    fn decode(word: u32) -> Self::Value;
}

/// One-byte symbol codes.
#[derive(Debug)]
pub enum Symbol {}
/// Four-byte unsigned indexes and labels.
#[derive(Debug)]
pub enum Index {}
/// Four-byte unsigned LCP values.
#[derive(Debug)]
pub enum LcpVal {}
/// Single bits.
#[derive(Debug)]
pub enum Bit {}

impl Kind for Symbol {
    type Value = Code;
    const KIND: ElementKind = ElementKind::Symbol;
    fn encode(value: Code) -> Result<u32> {
        Ok(value as u32)
    }
    fn decode(word: u32) -> Code {
        word as Code
    }
}

fn encode_word(value: usize, kind: ElementKind) -> Result<u32> {
    u32::try_from(value).map_err(|_| Error::ValueOutOfRange {
        value: value as u64,
        kind: kind.name(),
    })
}

impl Kind for Index {
    type Value = usize;
    const KIND: ElementKind = ElementKind::Index;
    fn encode(value: usize) -> Result<u32> {
        encode_word(value, Self::KIND)
    }
    fn decode(word: u32) -> usize {
        word as usize
    }
}

impl Kind for LcpVal {
    type Value = usize;
    const KIND: ElementKind = ElementKind::LcpVal;
    fn encode(value: usize) -> Result<u32> {
        encode_word(value, Self::KIND)
    }
    fn decode(word: u32) -> usize {
        word as usize
    }
}

impl Kind for Bit {
    type Value = bool;
    const KIND: ElementKind = ElementKind::Bit;
    fn encode(value: bool) -> Result<u32> {
        Ok(value as u32)
    }
    fn decode(word: u32) -> bool {
        word != 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Partition,
    Merge,
    Emit,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Partition, Phase::Merge, Phase::Emit];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Partition => "partition",
            Phase::Merge => "merge",
            Phase::Emit => "emit",
        }
    }
}

#[derive(Debug, Default)]
struct PhaseCounters {
    bytes_read: AtomicU64,
    bytes_written: AtomicU64,
    files_opened: AtomicU64,
}

/// Byte and file counters for each phase. Counters only grow.
#[derive(Debug, Default)]
pub struct IoStats {
    phases: [PhaseCounters; 3],
}

impl IoStats {
    fn counters(&self, phase: Phase) -> &PhaseCounters {
        &self.phases[phase as usize]
    }

    fn add_read(&self, phase: Phase, bytes: u64) {
        self.counters(phase)
            .bytes_read
            .fetch_add(bytes, Ordering::Relaxed);
    }

    fn add_written(&self, phase: Phase, bytes: u64) {
        self.counters(phase)
            .bytes_written
            .fetch_add(bytes, Ordering::Relaxed);
    }

    fn add_open(&self, phase: Phase) {
        self.counters(phase)
            .files_opened
            .fetch_add(1, Ordering::Relaxed);
    }

    pub fn phase(&self, phase: Phase) -> PhaseIo {
        let c = self.counters(phase);
        PhaseIo {
            bytes_read: c.bytes_read.load(Ordering::Relaxed),
            bytes_written: c.bytes_written.load(Ordering::Relaxed),
            files_opened: c.files_opened.load(Ordering::Relaxed),
        }
    }

    pub fn snapshot(&self) -> IoSnapshot {
        IoSnapshot {
            partition: self.phase(Phase::Partition),
            merge: self.phase(Phase::Merge),
            emit: self.phase(Phase::Emit),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PhaseIo {
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub files_opened: u64,
}

impl PhaseIo {
    pub fn bytes_moved(&self) -> u64 {
        self.bytes_read + self.bytes_written
    }

    /// Counter growth since `earlier`.
    pub fn since(&self, earlier: &PhaseIo) -> PhaseIo {
        PhaseIo {
            bytes_read: self.bytes_read - earlier.bytes_read,
            bytes_written: self.bytes_written - earlier.bytes_written,
            files_opened: self.files_opened - earlier.files_opened,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IoSnapshot {
    pub partition: PhaseIo,
    pub merge: PhaseIo,
    pub emit: PhaseIo,
}

impl IoSnapshot {
    pub fn get(&self, phase: Phase) -> PhaseIo {
        match phase {
            Phase::Partition => self.partition,
            Phase::Merge => self.merge,
            Phase::Emit => self.emit,
        }
    }
}

/// A working directory plus the buffering and accounting used for every file in it.
///
/// Cloning is cheap; clones share the same counters. [`Store::with_phase`]
/// selects which phase subsequent opens are charged to.
#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
    buffer_size: usize,
    stats: Arc<IoStats>,
    phase: Phase,
}

impl Store {
    /// Opens `root`, creating it if needed.
    pub fn new(root: impl Into<PathBuf>, buffer_size: usize) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Store {
            root,
            buffer_size: buffer_size.max(1),
            stats: Arc::new(IoStats::default()),
            phase: Phase::Partition,
        })
    }

    pub fn with_phase(&self, phase: Phase) -> Store {
        Store {
            phase,
            ..self.clone()
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn buffer_size(&self) -> usize {
        self.buffer_size
    }

    pub fn stats(&self) -> &Arc<IoStats> {
        &self.stats
    }

    /// Path of the file `<array>_<index>.bin`.
    pub fn path(&self, array: &str, index: impl fmt::Display) -> PathBuf {
        self.root.join(format!("{array}_{index}.bin"))
    }

    pub fn create<K: Kind>(&self, array: &str, index: impl fmt::Display) -> Result<SeqWriter<K>> {
        self.create_at(self.path(array, index))
    }

    pub fn create_at<K: Kind>(&self, path: PathBuf) -> Result<SeqWriter<K>> {
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.stats.add_open(self.phase);
        Ok(SeqWriter {
            out: BufWriter::with_capacity(self.buffer_size, file),
            path,
            len: 0,
            bits: 0,
            stats: Arc::clone(&self.stats),
            phase: self.phase,
            _kind: PhantomData,
        })
    }

    pub fn open<K: Kind>(&self, seq: &ExtSequence<K>) -> Result<SeqReader<K>> {
        let file = File::open(&seq.path).map_err(|e| Error::io(&seq.path, e))?;
        let size = file
            .metadata()
            .map_err(|e| Error::io(&seq.path, e))?
            .len();
        let expected = K::KIND.byte_len(seq.len);
        if size != expected {
            return Err(Error::CorruptFile {
                path: seq.path.clone(),
                reason: format!("{size} bytes on disk, {expected} expected"),
            });
        }
        self.stats.add_open(self.phase);
        Ok(SeqReader {
            inp: BufReader::with_capacity(self.buffer_size, file),
            path: seq.path.clone(),
            remaining: seq.len,
            byte: 0,
            bit: 8,
            stats: Arc::clone(&self.stats),
            phase: self.phase,
            _kind: PhantomData,
        })
    }

    /// Reads a whole sequence into memory.
    pub fn read_all<K: Kind>(&self, seq: &ExtSequence<K>) -> Result<Vec<K::Value>> {
        let mut reader = self.open(seq)?;
        let mut out = Vec::with_capacity(seq.len as usize);
        while let Some(v) = reader.next_value()? {
            out.push(v);
        }
        Ok(out)
    }

    /// Writes `values` as a new sequence.
    pub fn write_all<K: Kind>(
        &self,
        array: &str,
        index: impl fmt::Display,
        values: impl IntoIterator<Item = K::Value>,
    ) -> Result<ExtSequence<K>> {
        let mut w = self.create(array, index)?;
        for v in values {
            w.append(v)?;
        }
        w.finish()
    }
}

/// A finalized sequence on disk.
pub struct ExtSequence<K: Kind> {
    path: PathBuf,
    len: u64,
    _kind: PhantomData<K>,
}

impl<K: Kind> Clone for ExtSequence<K> {
    fn clone(&self) -> Self {
        ExtSequence {
            path: self.path.clone(),
            len: self.len,
            _kind: PhantomData,
        }
    }
}

impl<K: Kind> fmt::Debug for ExtSequence<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExtSequence")
            .field("kind", &K::KIND)
            .field("path", &self.path)
            .field("len", &self.len)
            .finish()
    }
}

impl<K: Kind> ExtSequence<K> {
    /// Handle to an existing file of byte-aligned elements; the length is
    /// derived from the file size.
    pub fn from_file(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let size = fs::metadata(&path).map_err(|e| Error::io(&path, e))?.len();
        let width = K::KIND.width();
        if width == 0 {
            return Err(Error::CorruptFile {
                path,
                reason: "bit sequences need an explicit length".into(),
            });
        }
        if size % width != 0 {
            return Err(Error::CorruptFile {
                path,
                reason: format!("{size} bytes is not a multiple of the element width {width}"),
            });
        }
        Ok(Self::with_len(path, size / width))
    }

    /// Handle to an existing file with a known element count. The size is
    /// checked when a reader is opened.
    pub fn with_len(path: impl Into<PathBuf>, len: u64) -> Self {
        ExtSequence {
            path: path.into(),
            len,
            _kind: PhantomData,
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn byte_size(&self) -> u64 {
        K::KIND.byte_len(self.len)
    }

    pub fn remove(self) -> Result<()> {
        fs::remove_file(&self.path).map_err(|e| Error::io(&self.path, e))
    }
}

/// Append-only writer. Consumed by [`SeqWriter::finish`].
pub struct SeqWriter<K: Kind> {
    out: BufWriter<File>,
    path: PathBuf,
    len: u64,
    bits: u8,
    stats: Arc<IoStats>,
    phase: Phase,
    _kind: PhantomData<K>,
}

impl<K: Kind> SeqWriter<K> {
    pub fn append(&mut self, value: K::Value) -> Result<()> {
        let word = K::encode(value)?;
        let res = match K::KIND {
            ElementKind::Symbol => {
                self.stats.add_written(self.phase, 1);
                self.out.write_all(&[word as u8])
            }
            ElementKind::Index | ElementKind::LcpVal => {
                self.stats.add_written(self.phase, 4);
                self.out.write_all(&word.to_le_bytes())
            }
            ElementKind::Bit => {
                let slot = (self.len % 8) as u8;
                self.bits |= (word as u8 & 1) << slot;
                if slot == 7 {
                    let byte = std::mem::take(&mut self.bits);
                    self.stats.add_written(self.phase, 1);
                    self.out.write_all(&[byte])
                } else {
                    Ok(())
                }
            }
        };
        res.map_err(|e| Error::io(&self.path, e))?;
        self.len += 1;
        Ok(())
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Flushes the file and returns its read-only handle.
    pub fn finish(mut self) -> Result<ExtSequence<K>> {
        if K::KIND == ElementKind::Bit && !self.len.is_multiple_of(8) {
            self.stats.add_written(self.phase, 1);
            self.out
                .write_all(&[self.bits])
                .map_err(|e| Error::io(&self.path, e))?;
        }
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(ExtSequence {
            path: self.path,
            len: self.len,
            _kind: PhantomData,
        })
    }
}

/// Forward-only reader.
pub struct SeqReader<K: Kind> {
    inp: BufReader<File>,
    path: PathBuf,
    remaining: u64,
    byte: u8,
    bit: u8,
    stats: Arc<IoStats>,
    phase: Phase,
    _kind: PhantomData<K>,
}

impl<K: Kind> SeqReader<K> {
    /// Next element, or `None` once every element has been read.
    pub fn next_value(&mut self) -> Result<Option<K::Value>> {
        if self.remaining == 0 {
            return Ok(None);
        }
        let word = match K::KIND {
            ElementKind::Symbol => {
                let mut b = [0u8; 1];
                self.fill(&mut b)?;
                b[0] as u32
            }
            ElementKind::Index | ElementKind::LcpVal => {
                let mut b = [0u8; 4];
                self.fill(&mut b)?;
                u32::from_le_bytes(b)
            }
            ElementKind::Bit => {
                if self.bit == 8 {
                    let mut b = [0u8; 1];
                    self.fill(&mut b)?;
                    self.byte = b[0];
                    self.bit = 0;
                }
                let v = (self.byte >> self.bit) & 1;
                self.bit += 1;
                v as u32
            }
        };
        self.remaining -= 1;
        Ok(Some(K::decode(word)))
    }

    /// Like [`SeqReader::next_value`] but treats the end as an error.
    pub fn expect_value(&mut self) -> Result<K::Value> {
        self.next_value()?.ok_or_else(|| Error::CorruptFile {
            path: self.path.clone(),
            reason: "sequence ended early".into(),
        })
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    fn fill(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inp.read_exact(buf).map_err(|e| {
            if e.kind() == io::ErrorKind::UnexpectedEof {
                Error::CorruptFile {
                    path: self.path.clone(),
                    reason: "truncated".into(),
                }
            } else {
                Error::io(&self.path, e)
            }
        })?;
        self.stats.add_read(self.phase, buf.len() as u64);
        Ok(())
    }
}

impl<K: Kind> Iterator for SeqReader<K> {
    type Item = Result<K::Value>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_value().transpose()
    }
}

/// Writers for one list per symbol code `0..=sigma`.
pub struct BucketWriters<K: Kind> {
    writers: Vec<SeqWriter<K>>,
}

impl<K: Kind> BucketWriters<K> {
    /// Creates files `<array>_<index>_<code>.bin` for every code.
    pub fn create(
        store: &Store,
        array: &str,
        index: impl fmt::Display,
        sigma: usize,
    ) -> Result<Self> {
        let writers = (0..=sigma)
            .map(|c| store.create(array, format!("{index}_{c}")))
            .collect::<Result<_>>()?;
        Ok(BucketWriters { writers })
    }

    pub fn push(&mut self, bucket: Code, value: K::Value) -> Result<()> {
        self.writers
            .get_mut(bucket as usize)
            .ok_or(Error::ValueOutOfRange {
                value: bucket as u64,
                kind: "bucket code",
            })?
            .append(value)
    }

    pub fn finish(self) -> Result<BucketSet<K>> {
        let buckets = self
            .writers
            .into_iter()
            .map(SeqWriter::finish)
            .collect::<Result<_>>()?;
        Ok(BucketSet { buckets })
    }
}

/// Finalized per-symbol lists.
#[derive(Debug, Clone)]
pub struct BucketSet<K: Kind> {
    buckets: Vec<ExtSequence<K>>,
}

impl<K: Kind> BucketSet<K> {
    pub fn buckets(&self) -> &[ExtSequence<K>] {
        &self.buckets
    }

    pub fn total_len(&self) -> u64 {
        self.buckets.iter().map(ExtSequence::len).sum()
    }

    pub fn remove(self) -> Result<()> {
        self.buckets.into_iter().try_for_each(ExtSequence::remove)
    }
}

/// Writes bucket 0, then bucket 1, and so on, each in its own order.
pub fn concat_buckets<K: Kind>(
    buckets: &BucketSet<K>,
    mut out: SeqWriter<K>,
    store: &Store,
) -> Result<ExtSequence<K>> {
    for bucket in &buckets.buckets {
        let mut r = store.open(bucket)?;
        while let Some(v) = r.next_value()? {
            out.append(v)?;
        }
    }
    out.finish()
}
