//! Rebuilding an interleave from its encoding, and emitting the final outputs.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::{ExtSequence, Index, IoSnapshot, Kind, LcpVal, Phase, Store, Symbol};
use crate::merge::MergeResult;
use crate::model::{Alphabet, Code};
use crate::partition::PartialBwtColumns;

/// Merges `parts` into one sequence: position `q` takes the next unread element
/// of part `encoding[q]`. One reader per part stays open for the whole pass.
pub fn reconstruct_interleave<K: Kind>(
    parts: &[ExtSequence<K>],
    encoding: &ExtSequence<Index>,
    array: &str,
    index: impl std::fmt::Display,
    store: &Store,
) -> Result<ExtSequence<K>> {
    let mut readers = parts
        .iter()
        .map(|p| store.open(p))
        .collect::<Result<Vec<_>>>()?;
    let mut out = store.create::<K>(array, index)?;
    let path = out.path().to_path_buf();
    let res = (|| {
        let mut er = store.open(encoding)?;
        while let Some(label) = er.next_value()? {
            let part = readers.get_mut(label).ok_or(Error::LabelOutOfRange {
                label,
                parts: parts.len(),
            })?;
            let v = part
                .next_value()?
                .ok_or(Error::LabelCountMismatch { label })?;
            out.append(v)?;
        }
        if let Some(label) = readers.iter().position(|r| r.remaining() != 0) {
            return Err(Error::LabelCountMismatch { label });
        }
        out.finish()
    })();
    if res.is_err() {
        let _ = std::fs::remove_file(path);
    }
    res
}

/// Final BWT and LCP files of a run.
///
/// The LCP file stores position 1 as 0; readers and writers below report it
/// as -1.
#[derive(Debug, Clone)]
pub struct OutputBundle {
    pub bwt: ExtSequence<Symbol>,
    pub lcp: ExtSequence<LcpVal>,
    pub m: usize,
    pub k: usize,
    pub iterations: usize,
    pub io: IoSnapshot,
}

impl OutputBundle {
    pub fn len(&self) -> u64 {
        self.bwt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bwt.is_empty()
    }

    pub fn bwt_codes(&self, store: &Store) -> Result<Vec<Code>> {
        store.read_all(&self.bwt)
    }

    pub fn lcp_values(&self, store: &Store) -> Result<Vec<i64>> {
        Ok(store
            .read_all(&self.lcp)?
            .into_iter()
            .enumerate()
            .map(|(i, v)| if i == 0 { -1 } else { v as i64 })
            .collect())
    }

    /// The BWT as one line of text, `$` for sentinels.
    pub fn write_bwt_text(&self, store: &Store, alphabet: &Alphabet, mut out: impl Write) -> Result<()> {
        let mut r = store.open(&self.bwt)?;
        let mut utf8 = [0u8; 4];
        while let Some(c) = r.next_value()? {
            let ch = alphabet.symbol(c).ok_or_else(|| {
                Error::InvariantViolation(format!("BWT holds unknown code {c}"))
            })?;
            out.write_all(ch.encode_utf8(&mut utf8).as_bytes())
                .map_err(|e| Error::io("<bwt output>", e))?;
        }
        out.write_all(b"\n")
            .map_err(|e| Error::io("<bwt output>", e))
    }

    /// Raw symbol codes, one byte each.
    pub fn write_bwt_binary(&self, store: &Store, mut out: impl Write) -> Result<()> {
        let mut r = store.open(&self.bwt)?;
        while let Some(c) = r.next_value()? {
            out.write_all(&[c])
                .map_err(|e| Error::io("<bwt output>", e))?;
        }
        Ok(())
    }

    /// One decimal per line, the first being `-1`.
    pub fn write_lcp_text(&self, store: &Store, mut out: impl Write) -> Result<()> {
        let mut r = store.open(&self.lcp)?;
        let mut first = true;
        while let Some(v) = r.next_value()? {
            let res = if std::mem::take(&mut first) {
                writeln!(out, "-1")
            } else {
                writeln!(out, "{v}")
            };
            res.map_err(|e| Error::io("<lcp output>", e))?;
        }
        Ok(())
    }

    /// Signed 4-byte little-endian values, the first being `-1`.
    pub fn write_lcp_binary(&self, store: &Store, mut out: impl Write) -> Result<()> {
        let mut r = store.open(&self.lcp)?;
        let mut first = true;
        while let Some(v) = r.next_value()? {
            let v = if std::mem::take(&mut first) { -1 } else { v as i32 };
            out.write_all(&v.to_le_bytes())
                .map_err(|e| Error::io("<lcp output>", e))?;
        }
        Ok(())
    }

    pub fn summary(&self, sigma: usize) -> RunSummary {
        RunSummary {
            m: self.m,
            k: self.k,
            sigma,
            positions: self.len(),
            iterations: self.iterations,
            io: self.io,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub m: usize,
    pub k: usize,
    pub sigma: usize,
    pub positions: u64,
    pub iterations: usize,
    pub io: IoSnapshot,
}

/// Builds the BWT as the interleave of `B_0..B_k` and copies the final LCP
/// column to `LCP_final.bin`.
pub fn emit_outputs(merged: &MergeResult, b: &PartialBwtColumns, store: &Store) -> Result<OutputBundle> {
    let store = store.with_phase(Phase::Emit);
    let bwt = reconstruct_interleave(b.columns(), &merged.encoding, "BWT", "final", &store)?;
    let mut w = store.create::<LcpVal>("LCP", "final")?;
    let mut r = store.open(&merged.lcp)?;
    while let Some(v) = r.next_value()? {
        w.append(v)?;
    }
    let lcp = w.finish()?;
    Ok(OutputBundle {
        bwt,
        lcp,
        m: b.m(),
        k: b.k(),
        iterations: merged.iterations,
        io: store.stats().snapshot(),
    })
}
