//! Phase 2: merging the partial columns into the full suffix order.
//!
//! The merged order is kept as an interleave encoding `I`: position `i` holds
//! the length of the `i`-th smallest suffix. Iteration `p` turns the order by
//! (p-1)-prefix into the order by p-prefix. Positions are grouped in segments
//! (maximal runs sharing their prefix, ends marked in the bit array `E`); each
//! segment is re-bucketed by the p-th symbol of its suffixes, which is fetched
//! from the column `Q_l^p` of the suffix length `l` through a per-length rank
//! counter. The LCP array is refined alongside: positions that stay inside a
//! segment get LCP `p`, every other position keeps its value.
//!
//! Files written per iteration: `I_<p>.bin`, `E_<p>.bin`, `LCP_<p>.bin` and
//! `Q_<p>_<l>.bin` for `l` in `p..=k`.

use log::debug;

use crate::error::{Error, Result};
use crate::ext::{
    concat_buckets, Bit, BucketWriters, ExtSequence, Index, LcpVal, SeqReader, SeqWriter, Store,
    Symbol,
};
use crate::model::{Code, SENTINEL};
use crate::partition::PartialBwtColumns;

pub const DEFAULT_SPILL_THRESHOLD: usize = 1 << 20;

#[derive(Debug, Clone, Copy)]
pub struct MergeOptions {
    /// Delete the arrays of iteration `p - 1` once iteration `p` is written.
    pub rolling: bool,
    /// Bytes of segment buckets held in memory before they spill to disk.
    pub spill_threshold: usize,
}

impl Default for MergeOptions {
    fn default() -> Self {
        MergeOptions {
            rolling: true,
            spill_threshold: DEFAULT_SPILL_THRESHOLD,
        }
    }
}

/// `Q_l^p` for `l` in `p..=k`: the p-th symbol of each sorted `l`-suffix.
/// Shorter suffixes are exhausted and read as sentinels.
#[derive(Debug, Clone)]
pub struct QColumns {
    p: usize,
    columns: Vec<Option<ExtSequence<Symbol>>>,
}

impl QColumns {
    pub fn p(&self) -> usize {
        self.p
    }

    /// `None` when the column is implicitly all sentinels.
    pub fn column(&self, l: usize) -> Option<&ExtSequence<Symbol>> {
        self.columns.get(l).and_then(Option::as_ref)
    }

    pub fn remove(self) -> Result<()> {
        self.columns
            .into_iter()
            .flatten()
            .try_for_each(ExtSequence::remove)
    }
}

#[derive(Debug, Clone)]
pub struct MergeState {
    p: usize,
    interleave: ExtSequence<Index>,
    segments: ExtSequence<Bit>,
    lcp: ExtSequence<LcpVal>,
    q: QColumns,
    converged: bool,
    m: usize,
    k: usize,
    sigma: usize,
}

impl MergeState {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn interleave(&self) -> &ExtSequence<Index> {
        &self.interleave
    }

    pub fn segments(&self) -> &ExtSequence<Bit> {
        &self.segments
    }

    pub fn lcp(&self) -> &ExtSequence<LcpVal> {
        &self.lcp
    }

    pub fn q(&self) -> &QColumns {
        &self.q
    }

    /// Every segment has width one.
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn positions(&self) -> usize {
        (self.k + 1) * self.m
    }
}

#[derive(Debug, Clone)]
pub struct MergeResult {
    pub encoding: ExtSequence<Index>,
    pub lcp: ExtSequence<LcpVal>,
    pub segments: ExtSequence<Bit>,
    pub iterations: usize,
}

/// State before the first iteration: suffixes grouped by length, one segment,
/// LCP all zero, and `Q^1` from counting-sorting each `B_{l-1}`.
pub fn init_merge_state(
    b: &PartialBwtColumns,
    store: &Store,
    _opts: MergeOptions,
) -> Result<MergeState> {
    let (m, k, sigma) = (b.m(), b.k(), b.sigma());
    let n = (k + 1) * m;
    let interleave =
        store.write_all::<Index>("I", 0, (0..=k).flat_map(|l| std::iter::repeat_n(l, m)))?;
    let lcp = store.write_all::<LcpVal>("LCP", 0, std::iter::repeat_n(0, n))?;
    let segments = store.write_all::<Bit>("E", 0, (1..=n).map(|i| i == n))?;

    let mut columns = vec![None; k + 1];
    for (l, slot) in columns.iter_mut().enumerate().skip(1) {
        let mut counts = vec![0usize; sigma + 1];
        let mut r = store.open(b.column(l - 1))?;
        while let Some(c) = r.next_value()? {
            *counts
                .get_mut(c as usize)
                .ok_or_else(|| bad_symbol(c, sigma))? += 1;
        }
        let mut w = store.create::<Symbol>("Q", format!("1_{l}"))?;
        for (c, &count) in counts.iter().enumerate() {
            for _ in 0..count {
                w.append(c as Code)?;
            }
        }
        *slot = Some(w.finish()?);
    }
    Ok(MergeState {
        p: 0,
        interleave,
        segments,
        lcp,
        q: QColumns { p: 1, columns },
        converged: n <= 1,
        m,
        k,
        sigma,
    })
}

fn bad_symbol(c: Code, sigma: usize) -> Error {
    Error::InvariantViolation(format!("symbol code {c} outside alphabet of size {sigma}"))
}

/// `Q^p` from `Q^{p-1}`: the p-th symbol of an `l`-suffix is the (p-1)-th
/// symbol of the `(l-1)`-suffix it extends, so `Q_l^p` is `Q_{l-1}^{p-1}`
/// stably bucketed by `B_{l-1}`.
pub fn compute_q_columns(
    b: &PartialBwtColumns,
    q_prev: &QColumns,
    store: &Store,
    opts: MergeOptions,
) -> Result<QColumns> {
    let p = q_prev.p + 1;
    if p < 2 {
        return Err(Error::InvariantViolation(
            "Q^1 comes from the initial state".into(),
        ));
    }
    let (k, sigma) = (b.k(), b.sigma());
    let mut columns = vec![None; k + 1];
    for (l, slot) in columns.iter_mut().enumerate().skip(p) {
        let prev = q_prev
            .column(l - 1)
            .ok_or_else(|| Error::MissingColumn(format!("Q_{}_{}", p - 1, l - 1)))?;
        let mut buckets = BucketWriters::<Symbol>::create(store, "QB", format!("{p}_{l}"), sigma)?;
        let mut qr = store.open(prev)?;
        let mut br = store.open(b.column(l - 1))?;
        while let Some(sym) = qr.next_value()? {
            buckets.push(br.expect_value()?, sym)?;
        }
        if br.remaining() != 0 {
            return Err(Error::LengthMismatch {
                what: "Q column against B column",
                expected: b.column(l - 1).len(),
                found: prev.len(),
            });
        }
        let buckets = buckets.finish()?;
        *slot = Some(concat_buckets(
            &buckets,
            store.create("Q", format!("{p}_{l}"))?,
            store,
        )?);
        if opts.rolling {
            buckets.remove()?;
        }
    }
    Ok(QColumns { p, columns })
}

/// Per-symbol lists of one segment, spilling to `L_<p>_<code>.bin` past a
/// memory threshold. Drained in code order with spilled entries first.
struct SegmentBuckets<'a> {
    store: &'a Store,
    p: usize,
    mem: Vec<Vec<usize>>,
    spilled: Vec<Option<SeqWriter<Index>>>,
    in_mem: usize,
    limit: usize,
}

impl<'a> SegmentBuckets<'a> {
    fn new(store: &'a Store, p: usize, sigma: usize, threshold_bytes: usize) -> Self {
        SegmentBuckets {
            store,
            p,
            mem: vec![Vec::new(); sigma + 1],
            spilled: (0..=sigma).map(|_| None).collect(),
            in_mem: 0,
            limit: threshold_bytes / std::mem::size_of::<u32>(),
        }
    }

    fn push(&mut self, c: Code, label: usize) -> Result<()> {
        self.mem[c as usize].push(label);
        self.in_mem += 1;
        if self.in_mem > self.limit {
            self.spill()?;
        }
        Ok(())
    }

    fn spill(&mut self) -> Result<()> {
        for (c, (mem, file)) in self.mem.iter_mut().zip(&mut self.spilled).enumerate() {
            if mem.is_empty() {
                continue;
            }
            if file.is_none() {
                *file = Some(self.store.create("L", format!("{}_{c}", self.p))?);
            }
            let w = file.as_mut().expect("created above");
            for &x in mem.iter() {
                w.append(x)?;
            }
            mem.clear();
        }
        self.in_mem = 0;
        Ok(())
    }

    /// Calls `emit(code, rank_in_bucket, bucket_len, label)` for every entry.
    fn drain(
        &mut self,
        mut emit: impl FnMut(usize, usize, usize, usize) -> Result<()>,
    ) -> Result<()> {
        for (c, (mem, file)) in self.mem.iter_mut().zip(&mut self.spilled).enumerate() {
            let on_disk = file.take().map(SeqWriter::finish).transpose()?;
            let len = mem.len() + on_disk.as_ref().map_or(0, |s| s.len() as usize);
            let mut r = 0;
            if let Some(seq) = on_disk {
                let mut reader = self.store.open(&seq)?;
                while let Some(x) = reader.next_value()? {
                    emit(c, r, len, x)?;
                    r += 1;
                }
                seq.remove()?;
            }
            for &x in mem.iter() {
                emit(c, r, len, x)?;
                r += 1;
            }
            mem.clear();
        }
        self.in_mem = 0;
        Ok(())
    }
}

/// Source of the p-th symbol for each suffix length, read in rank order.
struct SymbolFeed {
    p: usize,
    readers: Vec<Option<SeqReader<Symbol>>>,
    rank: Vec<usize>,
    m: usize,
}

impl SymbolFeed {
    fn open(q: &QColumns, k: usize, m: usize, store: &Store) -> Result<Self> {
        let readers = (0..=k)
            .map(|l| q.column(l).map(|c| store.open(c)).transpose())
            .collect::<Result<_>>()?;
        Ok(SymbolFeed {
            p: q.p,
            readers,
            rank: vec![0; k + 1],
            m,
        })
    }

    fn next(&mut self, label: usize) -> Result<Code> {
        let rank = self
            .rank
            .get_mut(label)
            .ok_or_else(|| Error::InvariantViolation(format!("label {label} exceeds k")))?;
        *rank += 1;
        if *rank > self.m {
            return Err(Error::RankOverflow { label });
        }
        match &mut self.readers[label] {
            Some(r) => r.next_value()?.ok_or(Error::RankOverflow { label }),
            None if label < self.p => Ok(SENTINEL),
            None => Err(Error::MissingColumn(format!("Q_{}_{label}", self.p))),
        }
    }

    fn check_complete(&self) -> Result<()> {
        match self.rank.iter().position(|&r| r != self.m) {
            Some(label) => Err(Error::InvariantViolation(format!(
                "label {label} occurs {} times, expected {}",
                self.rank[label], self.m
            ))),
            None => Ok(()),
        }
    }
}

/// One refinement pass: from the order by (p-1)-prefix to the order by p-prefix.
///
/// Runs on a converged state too, where it reproduces its input.
pub fn merge_iteration(
    state: MergeState,
    b: &PartialBwtColumns,
    store: &Store,
    opts: MergeOptions,
) -> Result<MergeState> {
    let p = state.p + 1;
    let (m, k, sigma) = (state.m, state.k, state.sigma);
    let n = state.positions() as u64;
    for (what, len) in [
        ("interleave encoding", state.interleave.len()),
        ("segment bitmap", state.segments.len()),
        ("LCP column", state.lcp.len()),
    ] {
        if len != n {
            return Err(Error::LengthMismatch {
                what,
                expected: n,
                found: len,
            });
        }
    }

    let q = if state.q.p == p {
        state.q.clone()
    } else if state.q.p + 1 == p {
        let q = compute_q_columns(b, &state.q, store, opts)?;
        if opts.rolling {
            state.q.clone().remove()?;
        }
        q
    } else {
        return Err(Error::InvariantViolation(format!(
            "iteration {p} cannot use Q^{}",
            state.q.p
        )));
    };

    let mut feed = SymbolFeed::open(&q, k, m, store)?;
    let mut ir = store.open(&state.interleave)?;
    let mut er = store.open(&state.segments)?;
    let mut lr = store.open(&state.lcp)?;
    let mut iw = store.create::<Index>("I", p)?;
    let mut ew = store.create::<Bit>("E", p)?;
    let mut lw = store.create::<LcpVal>("LCP", p)?;
    let mut buckets = SegmentBuckets::new(store, p, sigma, opts.spill_threshold);

    let mut width = 0usize;
    let mut first_lcp = 0usize;
    let mut converged = true;
    let mut segments = 0usize;
    while let Some(label) = ir.next_value()? {
        let end = er.expect_value()?;
        let lcp = lr.expect_value()?;
        if width == 0 {
            first_lcp = lcp;
        } else if lcp != p - 1 {
            return Err(Error::InvariantViolation(format!(
                "LCP inside a {}-segment is {lcp}",
                p - 1
            )));
        }
        let c = feed.next(label)?;
        if c as usize > sigma {
            return Err(bad_symbol(c, sigma));
        }
        buckets.push(c, label)?;
        width += 1;
        if !end {
            continue;
        }

        let mut offset = 0usize;
        buckets.drain(|code, r, len, label| {
            iw.append(label)?;
            let value = if r > 0 && code > 0 {
                p
            } else if offset == 0 {
                first_lcp
            } else {
                p - 1
            };
            lw.append(value)?;
            let closes = code == 0 || r + 1 == len;
            ew.append(closes)?;
            if closes {
                segments += 1;
            }
            if code > 0 && len > 1 {
                converged = false;
            }
            offset += 1;
            Ok(())
        })?;
        debug_assert_eq!(offset, width);
        width = 0;
    }
    if width != 0 {
        return Err(Error::InvariantViolation(
            "last position does not end a segment".into(),
        ));
    }
    feed.check_complete()?;

    let next = MergeState {
        p,
        interleave: iw.finish()?,
        segments: ew.finish()?,
        lcp: lw.finish()?,
        q,
        converged,
        m,
        k,
        sigma,
    };
    debug!(
        "merge iteration {p}: {segments} segments{}",
        if converged { ", converged" } else { "" }
    );
    if opts.rolling {
        state.interleave.remove()?;
        state.segments.remove()?;
        state.lcp.remove()?;
    }
    Ok(next)
}

/// Iterates until every segment has width one. Stops at `p = k + 1` at the
/// latest, where every suffix is exhausted.
pub fn merge_suffixes(
    b: &PartialBwtColumns,
    store: &Store,
    opts: MergeOptions,
) -> Result<MergeResult> {
    let mut state = init_merge_state(b, store, opts)?;
    let mut iterations = 0;
    while !state.converged {
        if state.p > state.k {
            return Err(Error::InvariantViolation(format!(
                "segments remain wider than one after {} iterations",
                state.p
            )));
        }
        state = merge_iteration(state, b, store, opts)?;
        iterations += 1;
    }
    if opts.rolling {
        state.q.remove()?;
    }
    Ok(MergeResult {
        encoding: state.interleave,
        lcp: state.lcp,
        segments: state.segments,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_collection, Alphabet};
    use crate::partition::{build_columns, partition_suffixes, PartitionOptions};

    const A: Code = 1;
    const C: Code = 2;

    fn phase1(strings: &[&str], letters: &str) -> (tempfile::TempDir, Store, PartialBwtColumns) {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path(), 256).unwrap();
        let coll = validate_collection(strings, &Alphabet::new(letters).unwrap()).unwrap();
        let cm = build_columns(&coll, &store).unwrap();
        let b = partition_suffixes(&cm, &store, PartitionOptions::default()).unwrap();
        (dir, store, b)
    }

    fn keep() -> MergeOptions {
        MergeOptions {
            rolling: false,
            ..MergeOptions::default()
        }
    }

    fn ends(store: &Store, state: &MergeState) -> Vec<usize> {
        store
            .read_all(state.segments())
            .unwrap()
            .iter()
            .enumerate()
            .filter(|(_, &e)| e)
            .map(|(i, _)| i + 1)
            .collect()
    }

    #[test]
    fn initial_state() {
        let (_d, store, b) = phase1(&["AC", "CA"], "AC");
        let s = init_merge_state(&b, &store, keep()).unwrap();
        assert_eq!(store.read_all(s.interleave()).unwrap(), vec![0, 0, 1, 1, 2, 2]);
        assert_eq!(store.read_all(s.lcp()).unwrap(), vec![0; 6]);
        assert_eq!(ends(&store, &s), vec![6]);
        assert!(s.q().column(0).is_none());
        assert_eq!(store.read_all(s.q().column(1).unwrap()).unwrap(), vec![A, C]);
        assert_eq!(store.read_all(s.q().column(2).unwrap()).unwrap(), vec![A, C]);
        assert!(!s.converged());

        let (_d, store, b) = phase1(&["A"], "A");
        let s = init_merge_state(&b, &store, keep()).unwrap();
        assert_eq!(store.read_all(s.interleave()).unwrap(), vec![0, 1]);
        assert_eq!(ends(&store, &s), vec![2]);
    }

    #[test]
    fn iterations_on_two_strings() {
        let (_d, store, b) = phase1(&["AC", "CA"], "AC");
        let s0 = init_merge_state(&b, &store, keep()).unwrap();
        let s1 = merge_iteration(s0, &b, &store, keep()).unwrap();
        assert_eq!(store.read_all(s1.interleave()).unwrap(), vec![0, 0, 1, 2, 1, 2]);
        assert_eq!(store.read_all(s1.lcp()).unwrap(), vec![0, 0, 0, 1, 0, 1]);
        assert_eq!(ends(&store, &s1), vec![1, 2, 4, 6]);
        assert!(!s1.converged());

        let s2 = merge_iteration(s1, &b, &store, keep()).unwrap();
        assert_eq!(store.read_all(s2.interleave()).unwrap(), vec![0, 0, 1, 2, 1, 2]);
        assert_eq!(store.read_all(s2.lcp()).unwrap(), vec![0, 0, 0, 1, 0, 1]);
        assert_eq!(ends(&store, &s2), vec![1, 2, 3, 4, 5, 6]);
        assert!(s2.converged());

        let s3 = merge_iteration(s2.clone(), &b, &store, keep()).unwrap();
        assert_eq!(
            std::fs::read(s3.interleave().path()).unwrap(),
            std::fs::read(s2.interleave().path()).unwrap()
        );
        assert_eq!(
            std::fs::read(s3.lcp().path()).unwrap(),
            std::fs::read(s2.lcp().path()).unwrap()
        );
    }

    #[test]
    fn q_columns_shift() {
        let (_d, store, b) = phase1(&["AC", "CA"], "AC");
        let s0 = init_merge_state(&b, &store, keep()).unwrap();
        let q2 = compute_q_columns(&b, s0.q(), &store, keep()).unwrap();
        assert_eq!(q2.p(), 2);
        assert!(q2.column(1).is_none());
        // Second symbols of the sorted 2-suffixes AC$ and CA$.
        assert_eq!(store.read_all(q2.column(2).unwrap()).unwrap(), vec![C, A]);
        let q3 = compute_q_columns(&b, &q2, &store, keep()).unwrap();
        assert!((0..=2).all(|l| q3.column(l).is_none()));
    }

    #[test]
    fn q_columns_single_string() {
        // One string: Q_l^p is the p-th symbol of its l-suffix.
        let (_d, store, b) = phase1(&["GATC"], "ACGT");
        let s0 = init_merge_state(&b, &store, keep()).unwrap();
        let mut q = s0.q().clone();
        let text = [3u8, 1, 4, 2];
        for p in 2..=4 {
            q = compute_q_columns(&b, &q, &store, keep()).unwrap();
            for l in p..=4 {
                let col = store.read_all(q.column(l).unwrap()).unwrap();
                assert_eq!(col, vec![text[4 - l + p - 1]], "p={p} l={l}");
            }
        }
    }

    #[test]
    fn merge_examples() {
        let (_d, store, b) = phase1(&["AC", "CA"], "AC");
        let r = merge_suffixes(&b, &store, MergeOptions::default()).unwrap();
        assert_eq!(store.read_all(&r.encoding).unwrap(), vec![0, 0, 1, 2, 1, 2]);
        assert_eq!(store.read_all(&r.lcp).unwrap(), vec![0, 0, 0, 1, 0, 1]);
        assert_eq!(r.iterations, 2);

        let (_d, store, b) = phase1(&["A"], "A");
        let r = merge_suffixes(&b, &store, MergeOptions::default()).unwrap();
        assert_eq!(store.read_all(&r.encoding).unwrap(), vec![0, 1]);
        assert_eq!(store.read_all(&r.lcp).unwrap(), vec![0, 0]);
        assert_eq!(r.iterations, 1);

        let (_d, store, b) = phase1(&["AC", "AC"], "AC");
        let r = merge_suffixes(&b, &store, MergeOptions::default()).unwrap();
        assert!(r.iterations <= 3);
        assert_eq!(store.read_all(&r.encoding).unwrap(), vec![0, 0, 2, 2, 1, 1]);
        assert_eq!(store.read_all(&r.lcp).unwrap(), vec![0, 0, 0, 2, 0, 1]);
    }

    #[test]
    fn spilling_does_not_change_output() {
        let strings = ["ACGTAC", "CGTACG", "ACGTAC", "TTTTTT", "GATTAC"];
        let (_d1, s1, b1) = phase1(&strings, "ACGT");
        let (_d2, s2, b2) = phase1(&strings, "ACGT");
        let roomy = merge_suffixes(&b1, &s1, MergeOptions::default()).unwrap();
        let tight = merge_suffixes(
            &b2,
            &s2,
            MergeOptions {
                rolling: true,
                spill_threshold: 0,
            },
        )
        .unwrap();
        assert_eq!(roomy.iterations, tight.iterations);
        assert_eq!(
            std::fs::read(roomy.encoding.path()).unwrap(),
            std::fs::read(tight.encoding.path()).unwrap()
        );
        assert_eq!(
            std::fs::read(roomy.lcp.path()).unwrap(),
            std::fs::read(tight.lcp.path()).unwrap()
        );
        assert!(s2.stats().snapshot().partition.files_opened > s1.stats().snapshot().partition.files_opened);
    }

    #[test]
    fn corrupt_encoding_is_reported() {
        let (_d, store, b) = phase1(&["AC", "CA"], "AC");
        let s0 = init_merge_state(&b, &store, keep()).unwrap();
        // Label 2 three times, label 0 once.
        store.write_all::<Index>("I", 0, [0, 2, 1, 1, 2, 2]).unwrap();
        assert!(merge_iteration(s0, &b, &store, keep()).is_err());
    }
}
